//! Smooth even cut-off `χ` with `χ = 1` on `[-1, 1]` and support in `[-2, 2]`.
//!
//! On the transition `1 < |x| < 2`, with `s = |x| - 1`,
//! `χ(x) = g(1 - s) / (g(1 - s) + g(s))` where `g(u) = exp(-1/u)` for `u > 0`.

use serde::{Deserialize, Serialize};

use crate::scalar::{lit, Real};

/// Mollifier formula recorded in reports.
pub const BUMP_FORMULA: &str = "chi(x)=1 |x|<=1; 0 |x|>=2; else g(2-|x|)/(g(2-|x|)+g(|x|-1)), g(u)=exp(-1/u)";

fn g<T: Real>(u: T) -> T {
    if u <= T::zero() {
        T::zero()
    } else {
        (-T::one() / u).exp()
    }
}

/// The standard bump `χ`.
pub fn bump<T: Real>(x: T) -> T {
    let a = x.abs();
    if a <= T::one() {
        T::one()
    } else if a >= lit(2.0) {
        T::zero()
    } else {
        let s = a - T::one();
        let up = g(T::one() - s);
        up / (up + g(s))
    }
}

/// Derivative of [`bump`].
pub fn bump_derivative<T: Real>(x: T) -> T {
    let a = x.abs();
    if a <= T::one() || a >= lit(2.0) {
        return T::zero();
    }
    let s = a - T::one();
    let (p, q) = (g(T::one() - s), g(s));
    // d/ds g(u) = g(u)/u², with u = 1 - s for p.
    let dp = -p / ((T::one() - s) * (T::one() - s));
    let dq = q / (s * s);
    let d = (dp * q - p * dq) / ((p + q) * (p + q));
    if x < T::zero() {
        -d
    } else {
        d
    }
}

/// Cut-off pair used to split the spectral integral: low part `χ(k/k₀)`,
/// high part `(1 - χ(k/k₀))`, both truncated by `χ(k/Λ)`.
///
/// Here `k` is the momentum (energy `k²`); `k₀ = sqrt(λ₀)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    /// Energy threshold `λ₀`.
    pub lambda0: f64,
    /// Momentum truncation scale `Λ`.
    pub truncation: f64,
}

impl CutoffSpec {
    /// Threshold `λ₀ = ‖V‖₁²` with a floor of 0.25.
    pub fn for_potential(l1_norm: f64, truncation: f64) -> Self {
        Self { lambda0: (l1_norm * l1_norm).max(0.25), truncation }
    }

    pub fn k0(&self) -> f64 {
        self.lambda0.sqrt()
    }

    pub fn low(&self, k: f64) -> f64 {
        bump(k / self.k0())
    }

    pub fn high(&self, k: f64) -> f64 {
        1.0 - bump(k / self.k0())
    }

    pub fn window(&self, k: f64) -> f64 {
        bump(k / self.truncation)
    }

    /// Momentum support of the low part.
    pub fn low_support(&self) -> f64 {
        2.0 * self.k0()
    }

    pub fn high_support(&self) -> f64 {
        2.0 * self.truncation
    }
}
