//! Oscillatory integrals behind the 3D dispersive estimate: the cut-off
//! integral `I_L(a, t)` and the phase integrals `I^±(t, x, y)`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::cutoff::bump;
use crate::error::{invalid, Result};
use crate::quad::{ChirpRule, GaussLegendre};

use super::fit::slope;

type C64 = Complex<f64>;

const FILON_NODES: usize = 16;

fn chirp(a: f64, b: f64, t: f64, r: f64, amp: impl Fn(f64) -> C64) -> C64 {
    if !(b > a) {
        return C64::new(0.0, 0.0);
    }
    let hw = ChirpRule::half_width_for(t, 0.5).min((b - a) / 2.0);
    let rule = ChirpRule::new(a, b, hw, FILON_NODES);
    let samples: Vec<C64> = rule.points().into_iter().map(amp).collect();
    rule.integrate(t, r, &samples)
}

/// Settings for `I_L(a,t) = ∫₀^∞ e^{itλ} sin(a√λ) ψ(√λ/L) (1 - χ(√λ/λ₀)) dλ`
/// with `ψ = χ` the standard bump.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySpec {
    pub a: f64,
    pub lambda0: f64,
    pub l: f64,
    pub ts: Vec<f64>,
}

impl Default for DecaySpec {
    fn default() -> Self {
        Self { a: 4.0, lambda0: 0.01, l: 1.0, ts: vec![4.0, 8.0, 16.0, 32.0, 64.0] }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayTable {
    pub spec: DecaySpec,
    pub values: Vec<f64>,
    /// Log-log slope of `|I_L|` in `t`; `None` when every value vanishes.
    pub slope: Option<f64>,
    /// `(t, |I_L(2a, t)| / |I_L(a, t)|)` for `t ≥ 16`.
    pub linearity: Vec<(f64, f64)>,
}

/// `I_L(a, t)` with `λ = k²`: `∫ e^{itk²} sin(ak) ψ(k/L)(1 - χ(k/λ₀)) 2k dk`,
/// `sin` split into two chirps.
pub fn cut_integral(a: f64, t: f64, lambda0: f64, l: f64) -> C64 {
    if a == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let amp = |k: f64| C64::new(bump(k / l) * (1.0 - bump(k / lambda0)) * 2.0 * k, 0.0);
    let (lo, mid, hi) = (lambda0, 2.0 * lambda0, 2.0 * l);
    let part = |r: f64| {
        // The χ transition is resolved on its own scale.
        let fine = {
            let rule = ChirpRule::new(lo, mid.min(hi), lambda0 / 16.0, FILON_NODES);
            let s: Vec<C64> = rule.points().into_iter().map(amp).collect();
            rule.integrate(t, r, &s)
        };
        fine + chirp(mid, hi, t, r, amp)
    };
    (part(a) - part(-a)) / C64::new(0.0, 2.0)
}

pub fn statphase_decay(spec: &DecaySpec) -> Result<DecayTable> {
    if spec.ts.iter().any(|t| !(*t >= 1.0)) {
        return invalid("t values must lie in [1, ∞)");
    }
    if !(spec.lambda0 > 0.0) || !(spec.l > spec.lambda0) {
        return invalid("need 0 < λ₀ < L");
    }
    let values: Vec<f64> = spec.ts.iter().map(|t| cut_integral(spec.a, *t, spec.lambda0, spec.l).norm()).collect();
    let slope_fit = if values.iter().all(|v| *v > 0.0) && values.len() >= 2 {
        let lx: Vec<f64> = spec.ts.iter().map(|t| t.ln()).collect();
        let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        Some(slope(&lx, &ly).0)
    } else {
        None
    };
    let linearity = spec
        .ts
        .iter()
        .zip(&values)
        .filter(|(t, v)| **t >= 16.0 && **v > 0.0)
        .map(|(t, v)| (*t, cut_integral(2.0 * spec.a, *t, spec.lambda0, spec.l).norm() / v))
        .collect();
    Ok(DecayTable { spec: spec.clone(), values, slope: slope_fit, linearity })
}

/// Synthetic amplitude `a(λ) = λ³ / ((1 + λ^{5+ε}) ⟨x⟩⟨y⟩)`: vanishing to
/// third order at 0, with the `(1+λ)^{-2-}` envelope and the `⟨x⟩⟨y⟩` gain.
/// No other scale enters near 0, so the `t⁻²` endpoint law sets in early.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeModel {
    pub epsilon: f64,
    /// Upper integration limit; the truncation error is below `a(Λ)/(2tΛ)`.
    pub lambda_max: f64,
}

impl Default for AmplitudeModel {
    fn default() -> Self {
        Self { epsilon: 0.1, lambda_max: 400.0 }
    }
}

impl AmplitudeModel {
    pub fn value(&self, lambda: f64, x_norm: f64, y_norm: f64) -> f64 {
        let jx = (1.0 + x_norm * x_norm).sqrt();
        let jy = (1.0 + y_norm * y_norm).sqrt();
        lambda.powi(3) / (1.0 + lambda.powf(5.0 + self.epsilon)) / (jx * jy)
    }

    /// `∫₀^Λ |a|`, the bound for `t < 1`.
    pub fn l1_norm(&self, x_norm: f64, y_norm: f64) -> f64 {
        let gl = GaussLegendre::<f64>::new(16);
        let breaks: Vec<f64> = std::iter::once(0.0)
            .chain((0..).map(|k| 2f64.powi(k)).take_while(|b| *b < self.lambda_max))
            .chain(std::iter::once(self.lambda_max))
            .collect();
        gl.over_breaks(&breaks, |l| self.value(l, x_norm, y_norm))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseSign {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PhaseRegime {
    /// Short times: only `|I| ≤ ∫|a|`.
    ShortTime,
    /// No critical point (`+` sign): `t^{-2}`.
    NoCriticalPoint,
    /// Critical point `λ₁ ≪ λ₀`: `t^{-2}`.
    CriticalBelowThreshold,
    /// Critical point `λ₁ ≳ λ₀`: `t^{-3/2}`.
    CriticalAboveThreshold,
}

impl PhaseRegime {
    pub fn expected_exponent(self) -> Option<f64> {
        match self {
            Self::ShortTime => None,
            Self::NoCriticalPoint | Self::CriticalBelowThreshold => Some(-2.0),
            Self::CriticalAboveThreshold => Some(-1.5),
        }
    }
}

/// Ratio `λ₁/λ₀` below which a critical point counts as `≪ λ₀`.
pub const BELOW_THRESHOLD: f64 = 0.25;

#[derive(Debug, Clone, Serialize)]
pub struct PhaseIntegral {
    pub t: f64,
    pub value: C64,
    pub critical_point: Option<f64>,
    pub regime: PhaseRegime,
}

/// `I^±(t,x,y) = ∫₀^∞ e^{itλ² ± iλ(|x|+|y|)} a(λ) dλ`.
pub fn stationary_phase_i(t: f64, x_norm: f64, y_norm: f64, sign: PhaseSign, lambda0: f64, model: AmplitudeModel) -> Result<PhaseIntegral> {
    if !(t > 0.0) || !(lambda0 > 0.0) || x_norm < 0.0 || y_norm < 0.0 {
        return invalid("need t > 0, λ₀ > 0 and nonnegative |x|, |y|");
    }
    let s = x_norm + y_norm;
    let r = match sign {
        PhaseSign::Plus => s,
        PhaseSign::Minus => -s,
    };
    let value = chirp(0.0, model.lambda_max, t, r, |l| C64::new(model.value(l, x_norm, y_norm), 0.0));
    let critical_point = (sign == PhaseSign::Minus && s > 0.0).then(|| s / (2.0 * t));
    let regime = if t < 1.0 {
        PhaseRegime::ShortTime
    } else {
        match critical_point {
            None => PhaseRegime::NoCriticalPoint,
            Some(l1) if l1 < BELOW_THRESHOLD * lambda0 => PhaseRegime::CriticalBelowThreshold,
            Some(_) => PhaseRegime::CriticalAboveThreshold,
        }
    };
    Ok(PhaseIntegral { t, value, critical_point, regime })
}

/// Placement of `x`, `y` along a time sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PhaseGeometry {
    Fixed { x_norm: f64, y_norm: f64 },
    /// `|x| = |y| = λ₀ t`, pinning the critical point of `I⁻` at `λ₀`.
    Pinned,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseSweep {
    pub sign: PhaseSign,
    pub geometry: PhaseGeometry,
    pub points: Vec<PhaseIntegral>,
    pub slope: f64,
    /// `max_t t^{3/2} |I|`.
    pub scaled_max: f64,
}

pub fn stationary_phase_sweep(ts: &[f64], sign: PhaseSign, geometry: PhaseGeometry, lambda0: f64, model: AmplitudeModel) -> Result<PhaseSweep> {
    if ts.len() < 2 {
        return invalid("need at least two times");
    }
    let points = ts
        .iter()
        .map(|t| {
            let (x, y) = match geometry {
                PhaseGeometry::Fixed { x_norm, y_norm } => (x_norm, y_norm),
                PhaseGeometry::Pinned => (lambda0 * t, lambda0 * t),
            };
            stationary_phase_i(*t, x, y, sign, lambda0, model)
        })
        .collect::<Result<Vec<_>>>()?;
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.value.norm().ln()).collect();
    let scaled_max = points.iter().map(|p| p.t.powf(1.5) * p.value.norm()).fold(0.0, f64::max);
    Ok(PhaseSweep { sign, geometry, slope: slope(&lx, &ly).0, points, scaled_max })
}

/// Log-spaced times `t_lo·(t_hi/t_lo)^{i/(n-1)}`.
pub fn log_times(t_lo: f64, t_hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| t_lo * (t_hi / t_lo).powf(i as f64 / (n - 1).max(1) as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cut_integral_decays_at_three_halves_linearly_in_a() {
        for l in [1.0, 4.0, 16.0] {
            let table = statphase_decay(&DecaySpec { l, ..DecaySpec::default() }).unwrap();
            let s = table.slope.unwrap();
            assert!((s + 1.5).abs() < 0.2, "L = {l}: slope {s}");
            for (t, r) in &table.linearity {
                assert!((r / 2.0 - 1.0).abs() < 0.15, "L = {l}, t = {t}: ratio {r}");
            }
        }
        let zero = statphase_decay(&DecaySpec { a: 0.0, ..DecaySpec::default() }).unwrap();
        assert!(zero.values.iter().all(|v| *v == 0.0) && zero.slope.is_none());
        assert!(statphase_decay(&DecaySpec { ts: vec![0.5], ..DecaySpec::default() }).is_err());
    }

    #[test]
    fn plus_integral_decays_like_inverse_square() {
        let m = AmplitudeModel::default();
        let sweep = stationary_phase_sweep(&log_times(4.0, 256.0, 7), PhaseSign::Plus, PhaseGeometry::Fixed { x_norm: 1.0, y_norm: 1.0 }, 1.0, m).unwrap();
        assert!((sweep.slope + 2.0).abs() < 0.25, "slope {}", sweep.slope);
        assert!(sweep.points.iter().all(|p| p.regime == PhaseRegime::NoCriticalPoint));
    }

    #[test]
    fn pinned_minus_integral_is_bounded_by_three_halves() {
        let m = AmplitudeModel::default();
        let ts = log_times(4.0, 256.0, 7);
        let sweep = stationary_phase_sweep(&ts, PhaseSign::Minus, PhaseGeometry::Pinned, 1.0, m).unwrap();
        assert!(sweep.points.iter().all(|p| p.regime == PhaseRegime::CriticalAboveThreshold));
        let first = ts[0].powf(1.5) * sweep.points[0].value.norm();
        assert!(sweep.scaled_max <= 1.5 * first, "{} vs {first}", sweep.scaled_max);
    }

    #[test]
    fn short_times_obey_the_amplitude_bound() {
        let m = AmplitudeModel::default();
        for t in [0.1, 0.5, 0.9] {
            for sign in [PhaseSign::Plus, PhaseSign::Minus] {
                let p = stationary_phase_i(t, 1.0, 2.0, sign, 1.0, m).unwrap();
                assert_eq!(p.regime, PhaseRegime::ShortTime);
                assert!(p.value.norm() <= m.l1_norm(1.0, 2.0));
            }
        }
    }
}
