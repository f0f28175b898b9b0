//! Experiment plumbing around `mln-core`: synthetic tensor generators, binary
//! tensor/Tucker persistence, and a deterministic CSV-emitting runner.

pub mod formats;
pub mod generators;
pub mod runner;
