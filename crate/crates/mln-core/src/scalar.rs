//! Scalar abstraction over the supported floating point types.

use rand_distr::{Distribution, StandardNormal};

/// Floating point scalar usable throughout the crate.
///
/// The trait bundles `num_traits::Float` with the few extras the algorithms
/// need: conversion from `f64` literals, IEEE unit roundoff, and standard
/// normal sampling. Implemented for `f32` and `f64`.
pub trait Real:
    num_traits::Float
    + num_traits::NumAssign
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant, panicking if it is not representable.
    fn of(value: f64) -> Self {
        num_traits::NumCast::from(value).expect("constant not representable in scalar type")
    }

    /// Converts a `usize` count (exact for the sizes handled here).
    fn of_usize(value: usize) -> Self {
        Self::of(value as f64)
    }

    /// Widens to `f64` for reporting.
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("scalar does not widen to f64")
    }

    /// Unit roundoff `u`, i.e. half the machine epsilon.
    fn unit_roundoff() -> Self {
        Self::epsilon() / Self::of(2.0)
    }

    /// Draws one standard normal sample.
    fn standard_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Real for f64 {
    fn standard_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Real for f32 {
    fn standard_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}
