//! Numerical laboratory for dispersive estimates of Schrödinger operators
//! `H = -Δ + V` in dimensions one and three.
//!
//! The one-dimensional side builds Jost solutions, Wronskians and the
//! spectral representation of `e^{itH} P_ac`, and checks it against a dense
//! finite-difference oracle. The three-dimensional side evaluates the weighted
//! Hilbert–Schmidt norms, Born-series bounds and oscillatory-integral decay
//! rates that control `e^{itH} P_ac` in `ℝ³`.
//!
//! The low-level kernels ([`quad`], [`potentials`], [`jost`]) are generic
//! over the scalar type; the aliases below fix `f64` for the rest of the
//! pipeline.

// Parameter guards are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cutoff;
pub mod error;
pub mod jost;
pub mod oracle;
pub mod potentials;
pub mod propagator1d;
pub mod quad;
pub mod resolvent3d;
pub mod scalar;
pub mod scattering;
pub mod wiener;

pub mod cli;
pub mod io;

pub use error::{Error, Result};
pub use scalar::Real;

/// `f64` potential.
pub type Potential = potentials::Potential<f64>;
/// `f64` Jost table.
pub type JostTable = jost::JostTable<f64>;
/// `f64` decay majorant.
pub type DecayMajorant = jost::DecayMajorant<f64>;
/// `f64` Gauss–Legendre rule.
pub type GaussLegendre = quad::GaussLegendre<f64>;
/// `f64` chirp rule.
pub type ChirpRule = quad::ChirpRule<f64>;
/// Complex `f64`.
pub type C64 = num_complex::Complex<f64>;
