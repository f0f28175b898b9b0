//! Experiment execution: single approximation runs, the (method, rank, seed)
//! comparison grid, and bound-report emission, all producing deterministic
//! CSV for fixed inputs and seeds.

use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use mln_core::baselines::{hosvd, rhosvd, rsthosvd};
use mln_core::diagnostics::{error_decomposition, evaluate_bound};
use mln_core::mln::{mln_approximate, mln_single_sketch, MlnParams, Oversample, TuckerTensor};
use mln_core::nystrom::EpsRule;
use mln_core::Tensor64;
use rayon::prelude::*;

pub const CSV_HEADER: [&str; 7] = [
    "method",
    "rank_spec",
    "oversample_spec",
    "seed",
    "rel_error",
    "time_s",
    "warnings",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    /// Multilinear Nystrom with plain triangular solves.
    Mln,
    /// Stabilized multilinear Nystrom (truncated pseudoinverse).
    Smln,
    /// Single-sketch multilinear Nystrom.
    Mln1,
    /// Deterministic truncated HOSVD.
    Hosvd,
    /// Randomized HOSVD.
    Rhosvd,
    /// Randomized sequentially truncated HOSVD.
    Rsthosvd,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Mln => "mln",
            Method::Smln => "smln",
            Method::Mln1 => "mln1",
            Method::Hosvd => "hosvd",
            Method::Rhosvd => "rhosvd",
            Method::Rsthosvd => "rsthosvd",
        }
    }

    /// True for the methods that draw sketches with an oversampling margin.
    pub fn uses_oversampling(&self) -> bool {
        matches!(self, Method::Mln | Method::Smln)
    }
}

impl FromStr for Method {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mln" => Ok(Method::Mln),
            "smln" => Ok(Method::Smln),
            "mln1" => Ok(Method::Mln1),
            "hosvd" => Ok(Method::Hosvd),
            "rhosvd" => Ok(Method::Rhosvd),
            "rsthosvd" => Ok(Method::Rsthosvd),
            other => bail!("unknown method {other:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OversampleSpec {
    HalfRank,
    Fixed(usize),
}

impl OversampleSpec {
    pub fn label(&self) -> String {
        match self {
            OversampleSpec::HalfRank => "r/2".to_string(),
            OversampleSpec::Fixed(ell) => ell.to_string(),
        }
    }

    fn resolve(&self, d: usize) -> Oversample {
        match *self {
            OversampleSpec::HalfRank => Oversample::HalfRank,
            OversampleSpec::Fixed(ell) => Oversample::Fixed(vec![ell; d]),
        }
    }
}

pub fn parse_oversample(s: &str) -> Result<OversampleSpec> {
    if s == "r/2" {
        return Ok(OversampleSpec::HalfRank);
    }
    let ell = s
        .parse::<usize>()
        .with_context(|| format!("oversample must be an integer or \"r/2\", got {s:?}"))?;
    Ok(OversampleSpec::Fixed(ell))
}

pub fn parse_eps(s: &str) -> Result<EpsRule> {
    match s {
        "u" => Ok(EpsRule::UnitRoundoffMultiple(1.0)),
        "10u" => Ok(EpsRule::UnitRoundoffMultiple(10.0)),
        other => {
            let value = other.parse::<f64>().with_context(|| {
                format!("eps must be \"u\", \"10u\" or a number, got {other:?}")
            })?;
            ensure!(value >= 0.0, "eps must be nonnegative, got {value}");
            Ok(EpsRule::Absolute(value))
        }
    }
}

/// Parses `"5"` (broadcast over all modes) or `"5,4,3"` (one rank per mode).
pub fn parse_rank_list(s: &str, order: usize) -> Result<Vec<usize>> {
    let parts = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .with_context(|| format!("bad rank component {p:?}"))
        })
        .collect::<Result<Vec<_>>>()?;
    ensure!(!parts.is_empty(), "empty rank list");
    ensure!(parts.iter().all(|&r| r >= 1), "ranks must be positive");
    if parts.len() == 1 {
        return Ok(vec![parts[0]; order]);
    }
    ensure!(
        parts.len() == order,
        "got {} ranks for an order-{order} tensor",
        parts.len()
    );
    Ok(parts)
}

/// Parses an inclusive `LO:HI:STEP` grid.
pub fn parse_rank_grid(s: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = s.split(':').collect();
    ensure!(parts.len() == 3, "rank grids look like LO:HI:STEP, got {s:?}");
    let lo = parts[0].parse::<usize>().context("bad grid start")?;
    let hi = parts[1].parse::<usize>().context("bad grid end")?;
    let step = parts[2].parse::<usize>().context("bad grid step")?;
    ensure!(lo >= 1, "grid start must be positive");
    ensure!(step >= 1, "grid step must be positive");
    ensure!(hi >= lo, "grid end must not precede the start");
    Ok((lo..=hi).step_by(step).collect())
}

/// One row of the comparison CSV.
#[derive(Debug, Clone)]
pub struct ApproxReport {
    pub method: Method,
    pub ranks: Vec<usize>,
    pub oversample: OversampleSpec,
    pub seed: u64,
    pub rel_error: f64,
    pub time_s: f64,
    pub warnings: Vec<String>,
}

impl ApproxReport {
    pub fn record(&self) -> [String; 7] {
        let rank_spec = self
            .ranks
            .iter()
            .map(|r| r.to_string())
            .collect::<Vec<_>>()
            .join("x");
        let oversample_spec = if self.method.uses_oversampling() {
            self.oversample.label()
        } else {
            "-".to_string()
        };
        [
            self.method.name().to_string(),
            rank_spec,
            oversample_spec,
            self.seed.to_string(),
            format!("{:e}", self.rel_error),
            format!("{}", self.time_s),
            self.warnings.join(";"),
        ]
    }
}

fn tucker_rel_error(a: &Tensor64, t: &TuckerTensor<f64>) -> Result<f64> {
    let dense = t.densify()?;
    Ok(a.sub(&dense)?.frobenius_norm() / a.frobenius_norm())
}

/// Runs one method once, returning the report and the Tucker approximant.
/// The timer brackets only the approximation call (sketch drawing happens
/// inside it); reading the input and measuring the error are excluded.
/// Without `timed` the clock is skipped entirely so reports stay bitwise
/// reproducible.
pub fn run_method(
    a: &Tensor64,
    method: Method,
    ranks: &[usize],
    oversample: OversampleSpec,
    eps: EpsRule,
    seed: u64,
    timed: bool,
) -> Result<(ApproxReport, TuckerTensor<f64>)> {
    let d = a.order();
    let params = MlnParams::new(ranks.to_vec(), seed).with_oversample(oversample.resolve(d));
    let started = Instant::now();
    enum Output {
        Run(mln_core::mln::MlnRun<f64>),
        Single(mln_core::mln::SingleSketchRun<f64>),
        Tucker(TuckerTensor<f64>),
    }
    let output = match method {
        Method::Mln => Output::Run(mln_approximate(a, &params)?),
        Method::Smln => Output::Run(mln_approximate(
            a,
            &params.with_stabilized(true).with_eps(eps),
        )?),
        Method::Mln1 => Output::Single(mln_single_sketch(a, ranks, seed)?),
        Method::Hosvd => Output::Tucker(hosvd(a, ranks)?),
        Method::Rhosvd => Output::Tucker(rhosvd(a, ranks, seed)?),
        Method::Rsthosvd => Output::Tucker(rsthosvd(a, ranks, seed)?),
    };
    let time_s = if timed {
        started.elapsed().as_secs_f64()
    } else {
        0.0
    };

    let (rel_error, warnings, tucker) = match output {
        Output::Run(run) => {
            let warnings = run
                .fallback_modes
                .iter()
                .map(|k| format!("fallback_mode_{k}"))
                .collect();
            (run.relative_error(a)?, warnings, run.tucker)
        }
        Output::Single(run) => (run.relative_error(a)?, Vec::new(), run.tucker),
        Output::Tucker(t) => (tucker_rel_error(a, &t)?, Vec::new(), t),
    };

    let report = ApproxReport {
        method,
        ranks: ranks.to_vec(),
        oversample,
        seed,
        rel_error,
        time_s,
        warnings,
    };
    Ok((report, tucker))
}

/// Runs the full (method, rank, seed) grid in parallel. Cells are indexed up
/// front and collected in that order, so rows land sorted by method, then
/// rank, then seed no matter which cell finishes first.
pub fn compare(
    a: &Tensor64,
    methods: &[Method],
    rank_grid: &[usize],
    seeds: u64,
    oversample: OversampleSpec,
    eps: EpsRule,
    timing: bool,
) -> Result<Vec<ApproxReport>> {
    ensure!(!methods.is_empty(), "no methods requested");
    ensure!(!rank_grid.is_empty(), "empty rank grid");
    ensure!(seeds >= 1, "need at least one seed");
    let d = a.order();
    let mut cells = Vec::new();
    for &method in methods {
        for &rank in rank_grid {
            for seed in 0..seeds {
                cells.push((method, rank, seed));
            }
        }
    }
    cells
        .into_par_iter()
        .map(|(method, rank, seed)| {
            run_method(a, method, &vec![rank; d], oversample, eps, seed, timing)
                .map(|(report, _)| report)
                .with_context(|| format!("{} at rank {rank}, seed {seed}", method.name()))
        })
        .collect()
}

/// Renders reports as CSV text (header row included, `\n` terminators,
/// no quoting needed by construction).
pub fn reports_to_csv(reports: &[ApproxReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in reports {
        w.write_record(r.record())?;
    }
    let bytes = w.into_inner().context("flushing csv buffer")?;
    Ok(String::from_utf8(bytes).expect("csv output is ascii"))
}

pub fn write_csv(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Evaluates the accuracy bound and the per-mode error decomposition for one
/// seeded run and renders them as `quantity,mode,value` rows.
pub fn bounds_to_csv(
    a: &Tensor64,
    ranks: &[usize],
    oversample: OversampleSpec,
    seed: u64,
) -> Result<String> {
    let params = MlnParams::new(ranks.to_vec(), seed).with_oversample(oversample.resolve(a.order()));
    let run = mln_approximate(a, &params)?;
    let rep = evaluate_bound(a, &run, None)?;
    let dec = error_decomposition(a, &run)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["quantity", "mode", "value"])?;
    let mut row = |quantity: &str, mode: Option<usize>, value: String| {
        let mode = mode.map(|k| k.to_string()).unwrap_or_default();
        w.write_record([quantity, &mode, &value])
    };
    for k in 0..a.order() {
        row("tau", Some(k), format!("{:e}", rep.tau_ks[k]))?;
        row("rho", Some(k), format!("{:e}", rep.rho_ks[k]))?;
        row("eps", Some(k), format!("{:e}", rep.eps_ks[k]))?;
    }
    row("tau_max", None, format!("{:e}", rep.tau))?;
    row("rho_max", None, format!("{:e}", rep.rho))?;
    row("eps_max", None, format!("{:e}", rep.eps))?;
    row("bound", None, format!("{:e}", rep.bound_value))?;
    row("measured_error", None, format!("{:e}", rep.measured_error))?;
    row("satisfied", None, u8::from(rep.satisfied).to_string())?;
    row(
        "precondition_ok",
        None,
        u8::from(rep.precondition_ok).to_string(),
    )?;
    for &k in &rep.flagged_modes {
        row("flagged_mode", Some(k), "1".to_string())?;
    }
    for k in 0..a.order() {
        row("increment", Some(k), format!("{:e}", dec.increments[k]))?;
        row("cumulative", Some(k), format!("{:e}", dec.cumulative[k]))?;
    }
    for (k, r) in dec.ratios.iter().enumerate() {
        row("ratio", Some(k), format!("{:e}", r))?;
    }
    row("total", None, format!("{:e}", dec.total))?;

    let bytes = w.into_inner().context("flushing csv buffer")?;
    Ok(String::from_utf8(bytes).expect("csv output is ascii"))
}
