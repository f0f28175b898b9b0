use std::path::PathBuf;

use anyhow::{ensure, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use mln_cli::formats::{read_tensor, read_tucker, write_tensor, write_tucker};
use mln_cli::generators::{
    gen_adversarial, gen_cp_superdiag, gen_hilbert, gen_random_lowrank, validate_adversarial,
    validate_cp_superdiag, validate_hilbert, validate_lowrank, Decay,
};
use mln_cli::runner::{
    bounds_to_csv, compare, parse_eps, parse_oversample, parse_rank_grid, parse_rank_list,
    reports_to_csv, run_method, write_csv, Method,
};
use mln_core::mln::{tucker_recompress, MlnParams};

#[derive(Parser)]
#[command(name = "mln-cli", about = "Randomized multilinear Nystrom experiment runner")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenKind {
    /// Rotated superdiagonal tensor, sigma_i = rate^i.
    CpExp,
    /// Rotated superdiagonal tensor, sigma_i = 1/i^power.
    CpPoly,
    /// Hilbert tensor 1/(i_1 + ... + i_d - d + 1), one-based.
    Hilbert,
    /// Shared-sketch worst-case construction (32^4, sigma_i = rate^i).
    Adversarial,
    /// Random tensor of bounded multilinear rank.
    Lowrank,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a tensor, self-check its structure, and write it out.
    Generate {
        #[arg(long, value_enum)]
        kind: GenKind,
        /// Comma-separated mode sizes, e.g. 40,40,40.
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        /// Decay rate (cp-exp, adversarial) or power (cp-poly).
        #[arg(long)]
        decay: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Per-mode ranks for --kind lowrank.
        #[arg(long, value_delimiter = ',')]
        rank: Option<Vec<usize>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Approximate a stored tensor once and report the relative error.
    Approx {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        /// Single rank broadcast over modes, or one rank per mode.
        #[arg(long)]
        rank: String,
        /// Oversampling: an integer or "r/2".
        #[arg(long, default_value = "r/2")]
        oversample: String,
        /// Pseudoinverse truncation: "u", "10u" or an absolute value.
        #[arg(long, default_value = "10u")]
        eps: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Measure wall time (off by default so reports are reproducible).
        #[arg(long)]
        timing: bool,
        /// Also write the one-row CSV report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Also write the Tucker approximant here (input for recompress).
        #[arg(long)]
        save_tucker: Option<PathBuf>,
    },
    /// Run a (method, rank, seed) grid and write a CSV of the results.
    Compare {
        #[arg(long = "in")]
        input: PathBuf,
        /// Comma-separated subset of mln,smln,mln1,hosvd,rhosvd,rsthosvd.
        #[arg(long)]
        methods: String,
        /// Inclusive rank grid LO:HI:STEP.
        #[arg(long)]
        ranks: String,
        /// Seeds 0..K for every randomized cell.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value = "r/2")]
        oversample: String,
        #[arg(long, default_value = "10u")]
        eps: String,
        /// Measure wall time (off by default so the CSV is bitwise stable).
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the accuracy bound and error decomposition for one run.
    Bounds {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        rank: String,
        #[arg(long, default_value = "r/2")]
        oversample: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompress a stored Tucker tensor to smaller ranks.
    Recompress {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        rank: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn generate(
    kind: GenKind,
    dims: &[usize],
    decay: Option<f64>,
    seed: Option<u64>,
    rank: Option<&[usize]>,
    out: &PathBuf,
) -> Result<()> {
    let cubic = |dims: &[usize]| -> Result<(usize, usize)> {
        ensure!(
            dims.len() >= 2 && dims.iter().all(|&n| n == dims[0]),
            "this kind needs cubic dims like 40,40,40, got {dims:?}"
        );
        Ok((dims[0], dims.len()))
    };
    let tensor = match kind {
        GenKind::CpExp => {
            let (n, d) = cubic(dims)?;
            let rate = decay.context("--decay is required for cp-exp")?;
            let decay = Decay::Exp(rate);
            let t = gen_cp_superdiag(n, d, decay, seed.unwrap_or(0))?;
            validate_cp_superdiag(&t, &decay.sigmas(n)?)
                .context("generator self-check failed")?;
            t
        }
        GenKind::CpPoly => {
            let (n, d) = cubic(dims)?;
            let power = decay.context("--decay is required for cp-poly")?;
            let decay = Decay::Poly(power);
            let t = gen_cp_superdiag(n, d, decay, seed.unwrap_or(0))?;
            validate_cp_superdiag(&t, &decay.sigmas(n)?)
                .context("generator self-check failed")?;
            t
        }
        GenKind::Hilbert => {
            ensure!(seed.is_none(), "hilbert tensors take no --seed");
            let (n, d) = cubic(dims)?;
            let t = gen_hilbert(d, n)?;
            validate_hilbert(&t).context("generator self-check failed")?;
            t
        }
        GenKind::Adversarial => {
            if !dims.is_empty() {
                ensure!(
                    dims == [32, 32, 32, 32],
                    "the adversarial construction is fixed at 32,32,32,32"
                );
            }
            let decay = Decay::Exp(decay.unwrap_or(0.3));
            let (t, x_spec, y_spec) = gen_adversarial(decay, seed.unwrap_or(0))?;
            validate_adversarial(&t, &decay.sigmas(32)?)
                .context("generator self-check failed")?;
            println!(
                "shared sketches: X srht {}x{} seed {}, Y srht {}x{} seed {}",
                x_spec.rows, x_spec.cols, x_spec.seed, y_spec.rows, y_spec.cols, y_spec.seed
            );
            t
        }
        GenKind::Lowrank => {
            let given = rank.context("--rank is required for lowrank")?;
            let ranks = if given.len() == 1 {
                vec![given[0]; dims.len()]
            } else {
                given.to_vec()
            };
            let t = gen_random_lowrank(dims, &ranks, seed.unwrap_or(0))?;
            validate_lowrank(&t, &ranks).context("generator self-check failed")?;
            t
        }
    };
    write_tensor(out, &tensor)?;
    println!(
        "wrote {} tensor {:?} to {}",
        tensor.values().len(),
        tensor.dims(),
        out.display()
    );
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Generate {
            kind,
            dims,
            decay,
            seed,
            rank,
            out,
        } => generate(kind, &dims, decay, seed, rank.as_deref(), &out),
        Cmd::Approx {
            input,
            method,
            rank,
            oversample,
            eps,
            seed,
            timing,
            report,
            save_tucker,
        } => {
            let a = read_tensor(&input)?;
            let ranks = parse_rank_list(&rank, a.order())?;
            let oversample = parse_oversample(&oversample)?;
            let eps = parse_eps(&eps)?;
            let (rep, tucker) = run_method(&a, method, &ranks, oversample, eps, seed, timing)?;
            let text = reports_to_csv(std::slice::from_ref(&rep))?;
            print!("{text}");
            if let Some(path) = report {
                write_csv(&path, &text)?;
            }
            if let Some(path) = save_tucker {
                write_tucker(&path, &tucker)?;
            }
            Ok(())
        }
        Cmd::Compare {
            input,
            methods,
            ranks,
            seeds,
            oversample,
            eps,
            timing,
            out,
        } => {
            let a = read_tensor(&input)?;
            let methods = methods
                .split(',')
                .map(|m| m.trim().parse())
                .collect::<Result<Vec<Method>>>()?;
            let grid = parse_rank_grid(&ranks)?;
            let oversample = parse_oversample(&oversample)?;
            let eps = parse_eps(&eps)?;
            let reports = compare(&a, &methods, &grid, seeds, oversample, eps, timing)?;
            write_csv(&out, &reports_to_csv(&reports)?)?;
            println!("wrote {} rows to {}", reports.len(), out.display());
            Ok(())
        }
        Cmd::Bounds {
            input,
            rank,
            oversample,
            seed,
            out,
        } => {
            let a = read_tensor(&input)?;
            let ranks = parse_rank_list(&rank, a.order())?;
            let oversample = parse_oversample(&oversample)?;
            let text = bounds_to_csv(&a, &ranks, oversample, seed)?;
            write_csv(&out, &text)?;
            println!("wrote bound report to {}", out.display());
            Ok(())
        }
        Cmd::Recompress {
            input,
            rank,
            seed,
            out,
        } => {
            let t = read_tucker(&input)?;
            let ranks = parse_rank_list(&rank, t.order())?;
            let run = tucker_recompress(&t, &MlnParams::new(ranks, seed))?;
            if !run.fallback_modes.is_empty() {
                eprintln!(
                    "warning: singular mixing cores on modes {:?}, used pseudoinverse fallback",
                    run.fallback_modes
                );
            }
            write_tucker(&out, &run.tucker)?;
            println!(
                "recompressed to ranks {:?}, wrote {}",
                run.tucker.ranks(),
                out.display()
            );
            Ok(())
        }
    }
}
