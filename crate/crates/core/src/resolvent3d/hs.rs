//! Weighted Hilbert–Schmidt norms of kernels that depend only on `|x - y|`.
//!
//! With `r = |x - y|` and `y` on the sphere of radius `s`,
//!
//! `‖K‖²_{HS(σ,-α)} = ∫ r² |k(r)|² m(r) dr`,
//! `m(r) = ∫ 4π s² ⟨s⟩^{-2α} A_σ(s, r) ds`,
//!
//! where `A_σ(s, r) = ∫_{S²} ⟨y + rω⟩^{-2σ} dω` is available in closed form.
//! Monte Carlo over `ℝ³ × ℝ³` is the independent check.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::quad::GaussLegendre;

type C64 = Complex<f64>;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;
/// Nodes per panel of the radial rules.
const PANEL_NODES: usize = 12;
/// Last break of the graded radial layouts.
const RADIAL_END: f64 = 1.0e7;

/// Weight exponents of `HS(σ, -α)`: `⟨x⟩^{-2σ}` on the output variable and
/// `⟨y⟩^{-2α}` on the input variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Weights {
    pub sigma: f64,
    pub alpha: f64,
}

impl Weights {
    pub fn new(sigma: f64, alpha: f64) -> Self {
        Self { sigma, alpha }
    }

    pub fn swapped(self) -> Self {
        Self { sigma: self.alpha, alpha: self.sigma }
    }
}

fn bracket(v: f64) -> f64 {
    (1.0 + v * v).sqrt()
}

/// `∫_{S²} ⟨y + rω⟩^{-2σ} dω` for `|y| = s`.
pub fn shell_average(s: f64, r: f64, sigma: f64) -> f64 {
    let sr = s * r;
    let lower = 1.0 + (s - r) * (s - r);
    if sr == 0.0 {
        return FOUR_PI * (1.0 + s * s + r * r).powf(-sigma);
    }
    // ∫_{-1}^{1} (A + Bμ)^{-σ} dμ = [U^{1-σ} - L^{1-σ}] / ((1-σ) B), U - L = 2B.
    let e = 1.0 - sigma;
    let log_ratio = (4.0 * sr / lower).ln_1p();
    let x = e * log_ratio;
    let diff_over_e = if x.abs() < 1e-8 { log_ratio * (1.0 + 0.5 * x) } else { x.exp_m1() / e };
    2.0 * std::f64::consts::PI * lower.powf(e) * diff_over_e / (2.0 * sr)
}

/// Breaks `0, ¼, ½, 1, 2, 4, …` up to `end`, refined geometrically around each centre.
pub(crate) fn graded_breaks(centres: &[f64], end: f64, extra: &[f64]) -> Vec<f64> {
    let mut b = vec![0.0, 0.25, 0.5];
    let mut x = 1.0;
    while x < end {
        b.push(x);
        x *= 2.0;
    }
    b.push(end);
    for &c in centres {
        if !(c > 0.0) {
            continue;
        }
        let mut d = 0.25;
        while d < 2.0 * c && c + d < end {
            if c - d > 0.0 {
                b.push(c - d);
            }
            b.push(c + d);
            d *= 2.0;
        }
        b.push(c);
    }
    b.extend(extra.iter().copied().filter(|v| *v > 0.0 && *v < end));
    b.sort_by(|a, c| a.partial_cmp(c).unwrap());
    b.dedup_by(|a, c| (*a - *c).abs() <= 1e-12 * c.abs().max(1.0));
    b
}

/// Power-law continuation `∫_b^∞ f` from `f(b/2)` and `f(b)`.
fn power_tail(f_half: f64, f_end: f64, b: f64) -> Result<f64> {
    if f_end == 0.0 {
        return Ok(0.0);
    }
    let p = (f_end / f_half).ln() / std::f64::consts::LN_2;
    if !(p < -1.0) {
        return Err(Error::NoConvergence { iterations: 0, residual: p });
    }
    Ok(f_end * b / (-p - 1.0))
}

/// `m(r)` for the given weights.
pub fn shell_envelope(r: f64, w: Weights) -> f64 {
    let gl = GaussLegendre::<f64>::new(PANEL_NODES);
    let end = RADIAL_END * r.max(1.0);
    let breaks = graded_breaks(&[r], end, &[]);
    let f = |s: f64| FOUR_PI * s * s * bracket(s).powf(-2.0 * w.alpha) * shell_average(s, r, w.sigma);
    let body = gl.over_breaks(&breaks, f);
    // Large s: integrand ~ s^{2-2α-2σ}.
    let tail = f(end) * end / (2.0 * (w.sigma + w.alpha) - 3.0);
    body + tail
}

/// Decay exponents of `m(r)` at large `r`: `r^{-2σ}`, `r^{-2α}` and
/// `r^{3-2σ-2α}`, with coincident ones merged.
fn envelope_exponents(w: Weights) -> Vec<f64> {
    let mut e = vec![2.0 * w.sigma, 2.0 * w.alpha, 2.0 * (w.sigma + w.alpha) - 3.0];
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    e.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    e
}

/// Sample radii (fractions of the last break) for the large-`r` fit of `m`.
const TAIL_FIT_POINTS: [f64; 3] = [1.0 / 64.0, 1.0 / 8.0, 1.0];

/// Radial quadrature nodes carrying `m(r)`; reusable across kernels that
/// share the same break layout.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub weights_exp: Weights,
    nodes: Vec<f64>,
    /// `w_q · m(r_q)`.
    mass: Vec<f64>,
    end: f64,
    /// `m(r) ≈ Σ A_e r^{-e}` past `end`.
    tail_terms: Vec<(f64, f64)>,
}

impl Envelope {
    pub fn new(w: Weights, extra_breaks: &[f64]) -> Self {
        let gl = GaussLegendre::<f64>::new(PANEL_NODES);
        let breaks = graded_breaks(&[], RADIAL_END, extra_breaks);
        let (nodes, qw) = gl.composite_points(&breaks);
        let mass = nodes.par_iter().zip(&qw).map(|(r, q)| q * shell_envelope(*r, w)).collect();
        let exps = envelope_exponents(w);
        let pts: Vec<f64> = TAIL_FIT_POINTS[TAIL_FIT_POINTS.len() - exps.len()..].iter().map(|f| f * RADIAL_END).collect();
        let a = nalgebra::DMatrix::from_fn(exps.len(), exps.len(), |i, j| (pts[i] / RADIAL_END).powf(-exps[j]));
        let rhs = nalgebra::DVector::from_iterator(pts.len(), pts.iter().map(|r| shell_envelope(*r, w)));
        let coef = a.lu().solve(&rhs).unwrap_or_else(|| nalgebra::DVector::zeros(exps.len()));
        // Coefficients are relative to r/end.
        let tail_terms = exps.iter().zip(coef.iter()).map(|(e, c)| (*e, *c)).collect();
        Self { weights_exp: w, nodes, mass, end: RADIAL_END, tail_terms }
    }

    /// `∫ r² g(r) m(r) dr` with `g = |k|²`; `tail_g` must behave like a pure
    /// power of `r` past the last break.
    pub fn integrate<G: Fn(f64) -> f64, T: Fn(f64) -> f64>(&self, g: G, tail_g: T) -> Result<f64> {
        let body: f64 = self.nodes.iter().zip(&self.mass).map(|(r, m)| r * r * g(*r) * m).sum();
        let b = self.end;
        let gb = tail_g(b);
        if gb == 0.0 {
            return Ok(body);
        }
        // g ~ r^{q-2}.
        let q = 2.0 + (gb / tail_g(b / 2.0)).ln() / std::f64::consts::LN_2;
        // Past b: r² g m = b² g(b) Σ c_e (r/b)^{q-e}.
        let mut tail = 0.0;
        for (e, c) in &self.tail_terms {
            let p = q - e;
            if !(p < -1.0) {
                return Err(Error::NoConvergence { iterations: 0, residual: p });
            }
            tail += c / (-p - 1.0);
        }
        let tail = b * b * b * gb * tail;
        Ok(body + tail)
    }
}

/// A kernel `k(|x - y|)` on `ℝ³ × ℝ³`.
pub trait RadialKernel: Sync {
    fn value(&self, r: f64) -> C64;

    fn modulus_sq(&self, r: f64) -> f64 {
        self.value(r).norm_sqr()
    }

    /// `|k|²` as used past the last radial break (non-oscillating envelope).
    fn tail_modulus_sq(&self, r: f64) -> f64 {
        self.modulus_sq(r)
    }

    /// Extra radial breaks resolving oscillation.
    fn breaks(&self) -> Vec<f64> {
        Vec::new()
    }

    /// `g` with `|k(r)|² ≲ ⟨r⟩^{2g}` away from 0; `None` for kernels with the
    /// `r⁻²` diagonal singularity.
    fn growth(&self) -> Option<f64>;
}

/// `d^j/dλ^j` of the free resolvent kernel `e^{iλr}/(4πr)`: `(ir)^j e^{iλr}/(4πr)`.
#[derive(Debug, Clone, Copy)]
pub struct FreeResolventKernel {
    pub lambda: f64,
    pub order: u32,
}

impl RadialKernel for FreeResolventKernel {
    fn value(&self, r: f64) -> C64 {
        Complex::new(0.0, r).powu(self.order) * Complex::from_polar(1.0, self.lambda * r) / (FOUR_PI * r)
    }

    fn growth(&self) -> Option<f64> {
        if self.order == 0 {
            None
        } else {
            Some(self.order as f64 - 1.0)
        }
    }
}

/// `B(λ)`: `(e^{iλr} - 1)/(4πr)`; negative λ gives `B⁻(|λ|)`.
#[derive(Debug, Clone, Copy)]
pub struct PerturbationKernel {
    pub lambda: f64,
}

impl PerturbationKernel {
    /// Radius up to which the oscillation of `|e^{iλr} - 1|²` is resolved.
    fn oscillation_extent(&self) -> f64 {
        1.0e3 / self.lambda.abs().max(1e-300)
    }
}

impl RadialKernel for PerturbationKernel {
    fn value(&self, r: f64) -> C64 {
        (Complex::from_polar(1.0, self.lambda * r) - 1.0) / (FOUR_PI * r)
    }

    fn modulus_sq(&self, r: f64) -> f64 {
        if r > self.oscillation_extent() {
            self.tail_modulus_sq(r)
        } else {
            let h = (0.5 * self.lambda * r).sin();
            4.0 * h * h / (FOUR_PI * FOUR_PI * r * r)
        }
    }

    fn tail_modulus_sq(&self, r: f64) -> f64 {
        if self.lambda == 0.0 {
            0.0
        } else {
            2.0 / (FOUR_PI * FOUR_PI * r * r)
        }
    }

    fn breaks(&self) -> Vec<f64> {
        if self.lambda == 0.0 {
            return Vec::new();
        }
        let width = std::f64::consts::PI / self.lambda.abs();
        let n = (self.oscillation_extent() / width).ceil() as usize;
        (1..=n).map(|i| i as f64 * width).collect()
    }

    fn growth(&self) -> Option<f64> {
        None
    }
}

/// Monte Carlo settings.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct McSpec {
    pub samples: usize,
    pub seed: u64,
}

impl Default for McSpec {
    fn default() -> Self {
        Self { samples: 1_000_000, seed: 1 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Samples per independent stream; streams are seeded by index so results
/// do not depend on the worker count.
const STREAM_CHUNK: usize = 1 << 14;

/// Mean and standard error of `f(rng)` over `spec.samples` draws.
pub(crate) fn monte_carlo<F>(spec: McSpec, f: F) -> McEstimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let chunks = spec.samples.div_ceil(STREAM_CHUNK).max(1);
    let parts: Vec<(f64, f64, usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(c as u64);
            let n = STREAM_CHUNK.min(spec.samples - c * STREAM_CHUNK);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let v = f(&mut rng);
                s += v;
                s2 += v * v;
            }
            (s, s2, n)
        })
        .collect();
    let (s, s2, n) = parts.iter().fold((0.0, 0.0, 0usize), |a, p| (a.0 + p.0, a.1 + p.1, a.2 + p.2));
    let nf = n as f64;
    let mean = s / nf;
    let var = ((s2 / nf - mean * mean) * nf / (nf - 1.0).max(1.0)).max(0.0);
    McEstimate { mean, stderr: (var / nf).sqrt(), samples: n, seed: spec.seed }
}

/// Density `⟨x⟩^{-2c}/Z_c` on `ℝ³`, `c > 3/2`, sampled through
/// `|x|² = u/(1-u)`, `u ~ Beta(3/2, c - 3/2)`.
#[derive(Debug, Clone)]
pub(crate) struct PowerLawSampler {
    c: f64,
    log_norm: f64,
    beta: Beta<f64>,
}

impl PowerLawSampler {
    pub fn new(c: f64) -> Self {
        let b = c - 1.5;
        let ln_beta = libm::lgamma(1.5) + libm::lgamma(b) - libm::lgamma(c);
        Self { c, log_norm: (2.0 * std::f64::consts::PI).ln() + ln_beta, beta: Beta::new(b, 1.5).expect("c > 3/2") }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> [f64; 3] {
        // Draw v = 1 - u ~ Beta(c - 3/2, 3/2) so large radii keep full precision.
        let v: f64 = loop {
            let v = self.beta.sample(rng);
            if v > 0.0 {
                break v;
            }
        };
        let s = ((1.0 - v) / v).sqrt();
        scale(unit_vector(rng), s)
    }

    pub fn density(&self, x: &[f64; 3]) -> f64 {
        (-self.c * (1.0 + dot(x, x)).ln() - self.log_norm).exp()
    }
}

pub(crate) fn unit_vector<R: Rng>(rng: &mut R) -> [f64; 3] {
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi: f64 = rng.random_range(0.0..2.0 * std::f64::consts::PI);
    let rho = (1.0 - z * z).sqrt();
    [rho * phi.cos(), rho * phi.sin(), z]
}

pub(crate) fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub(crate) fn add(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Excess of the mixture sampler's decay exponent over `3/2`.
const MIXTURE_EXCESS: f64 = 0.25;

/// Why a Monte Carlo check has no finite variance, if so.
pub fn mc_obstruction<K: RadialKernel>(k: &K, w: Weights) -> Option<String> {
    match k.growth() {
        None => {
            let need = 2.25 + MIXTURE_EXCESS / 2.0;
            if w.sigma <= 0.75 || w.alpha <= 0.75 || w.sigma + w.alpha <= need {
                Some(format!("estimator variance is infinite unless σ, α > 3/4 and σ + α > {need}"))
            } else {
                None
            }
        }
        Some(g) => {
            if w.sigma.min(w.alpha) <= g + 1.5 {
                Some(format!("estimator variance is infinite unless σ, α > {}", g + 1.5))
            } else {
                None
            }
        }
    }
}

/// Monte Carlo estimate of `‖K‖²_{HS(σ,-α)}` over `ℝ³ × ℝ³`.
pub fn hs_squared_monte_carlo<K: RadialKernel>(k: &K, w: Weights, spec: McSpec) -> Result<McEstimate> {
    if let Some(why) = mc_obstruction(k, w) {
        return Err(Error::Precondition(why));
    }
    let f = |x: &[f64; 3], y: &[f64; 3]| {
        let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
        let r = dot(&d, &d).sqrt();
        (1.0 + dot(x, x)).powf(-w.sigma) * (1.0 + dot(y, y)).powf(-w.alpha) * k.modulus_sq(r)
    };
    Ok(match k.growth() {
        None => {
            // Mixture: one endpoint from ⟨·⟩^{-2c}, separation half-Cauchy in |z|.
            let p = PowerLawSampler::new(1.5 + MIXTURE_EXCESS);
            monte_carlo(spec, |rng| {
                let anchor = p.sample(rng);
                let r = (0.5 * std::f64::consts::PI * rng.random::<f64>()).tan();
                let z = scale(unit_vector(rng), r);
                let other = add(&anchor, &z);
                let (x, y) = if rng.random::<bool>() { (other, anchor) } else { (anchor, other) };
                let pz = 2.0 / (std::f64::consts::PI * (1.0 + r * r)) / (FOUR_PI * r * r);
                let q = 0.5 * pz * (p.density(&x) + p.density(&y));
                f(&x, &y) / q
            })
        }
        Some(g) => {
            let pick = |s: f64| 1.5 + (2.0 * s - 2.0 * g - 3.0) / 3.0;
            let (px, py) = (PowerLawSampler::new(pick(w.sigma)), PowerLawSampler::new(pick(w.alpha)));
            monte_carlo(spec, |rng| {
                let x = px.sample(rng);
                let y = py.sample(rng);
                f(&x, &y) / (px.density(&x) * py.density(&y))
            })
        }
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct McCheck {
    pub estimate: McEstimate,
    /// `|quadrature - MC|` in units of the standard error.
    pub z_score: f64,
    pub agrees: bool,
}

/// Weighted HS norm with its quadrature and Monte Carlo evidence.
#[derive(Debug, Clone, Serialize)]
pub struct HsNorm {
    pub value: f64,
    pub squared: f64,
    pub weights: Weights,
    pub mc: Option<McCheck>,
    pub mc_skipped: Option<String>,
}

/// Tolerance in standard errors for the Monte Carlo agreement.
pub const MC_AGREEMENT_SIGMAS: f64 = 3.0;

/// `‖K‖²` by radial reduction.
pub fn hs_squared<K: RadialKernel>(k: &K, w: Weights) -> Result<f64> {
    Envelope::new(w, &k.breaks()).integrate(|r| k.modulus_sq(r), |r| k.tail_modulus_sq(r))
}

pub fn evaluate<K: RadialKernel>(k: &K, w: Weights, mc: Option<McSpec>) -> Result<HsNorm> {
    let squared = hs_squared(k, w)?;
    finish(k, w, squared, mc)
}

fn finish<K: RadialKernel>(k: &K, w: Weights, squared: f64, mc: Option<McSpec>) -> Result<HsNorm> {
    let (mc, mc_skipped) = match mc {
        None => (None, None),
        Some(spec) => match mc_obstruction(k, w) {
            Some(why) => (None, Some(why)),
            None => {
                let estimate = hs_squared_monte_carlo(k, w, spec)?;
                let z_score = (estimate.mean - squared).abs() / estimate.stderr.max(f64::MIN_POSITIVE);
                let agrees = z_score <= MC_AGREEMENT_SIGMAS || (estimate.mean == squared);
                (Some(McCheck { estimate, z_score, agrees }), None)
            }
        },
    };
    Ok(HsNorm { value: squared.sqrt(), squared, weights: w, mc, mc_skipped })
}

pub(crate) fn check_resolvent_weights(w: Weights, order: u32) -> Result<()> {
    if order > 2 {
        return invalid(format!("derivative order {order} exceeds 2"));
    }
    if order == 0 {
        if !(w.sigma > 0.5) || !(w.alpha > 0.5) {
            return Err(Error::Precondition(format!("need σ, α > 1/2 (got σ = {}, α = {})", w.sigma, w.alpha)));
        }
        if !(w.sigma + w.alpha > 2.0) {
            return Err(Error::Precondition(format!("need σ + α > 2 (got {})", w.sigma + w.alpha)));
        }
    } else {
        let need = order as f64 + 0.5;
        if !(w.sigma > need) || !(w.alpha > need) {
            return Err(Error::Precondition(format!(
                "need σ, α > j + 1/2 = {need} (got σ = {}, α = {})",
                w.sigma, w.alpha
            )));
        }
    }
    Ok(())
}

/// `‖d^j/dλ^j R₀(λ² + i0)‖_{HS(σ,-α)}`; independent of λ.
pub fn hs_norm_r0(w: Weights, lambda: f64, order: u32, mc: Option<McSpec>) -> Result<HsNorm> {
    check_resolvent_weights(w, order)?;
    evaluate(&FreeResolventKernel { lambda, order }, w, mc)
}

/// `‖B(λ)‖_{HS(σ,-α)}`, `B = R₀(λ² + i0) - R₀(0)`; `B⁻(λ) = B⁺(-λ)`.
pub fn b_kernel_norm(lambda: f64, w: Weights, mc: Option<McSpec>) -> Result<HsNorm> {
    check_resolvent_weights(w, 0)?;
    if lambda == 0.0 {
        return Ok(HsNorm { value: 0.0, squared: 0.0, weights: w, mc: None, mc_skipped: None });
    }
    evaluate(&PerturbationKernel { lambda }, w, mc)
}

/// Predicted vanishing rate `γ = min(σ+α-2, σ-1/2, α-1/2, 1)`.
pub fn predicted_rate(w: Weights) -> f64 {
    (w.sigma + w.alpha - 2.0).min(w.sigma - 0.5).min(w.alpha - 0.5).min(1.0)
}

/// Power-law fit of `‖B(λ)‖` over a λ list.
#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub lambdas: Vec<f64>,
    pub norms: Vec<f64>,
    pub gamma_hat: f64,
    pub gamma_predicted: f64,
    pub rms: f64,
    /// Fits are accepted only with residual RMS below [`FIT_RMS_LIMIT`].
    pub accepted: bool,
}

pub const FIT_RMS_LIMIT: f64 = 0.05;

pub fn b_kernel_rate(w: Weights, lambdas: &[f64]) -> Result<RateFit> {
    if lambdas.len() < 2 || lambdas.iter().any(|l| !(*l > 0.0)) {
        return invalid("need at least two positive λ values");
    }
    let norms = lambdas.iter().map(|l| b_kernel_norm(*l, w, None).map(|n| n.value)).collect::<Result<Vec<_>>>()?;
    let (gamma_hat, _, rms) = super::fit::power_law(lambdas, &norms);
    Ok(RateFit {
        lambdas: lambdas.to_vec(),
        norms,
        gamma_hat,
        gamma_predicted: predicted_rate(w),
        rms,
        accepted: rms < FIT_RMS_LIMIT,
    })
}

/// `‖(B^±)'(λ)‖_{HS(σ,-α)}`, kernel `(±i/4π) e^{±iλr}`; requires σ, α > 3/2.
pub fn bprime_norm(lambda: f64, w: Weights, mc: Option<McSpec>) -> Result<HsNorm> {
    if !(w.sigma > 1.5) || !(w.alpha > 1.5) {
        return Err(Error::Precondition(format!("need σ, α > 3/2 (got σ = {}, α = {})", w.sigma, w.alpha)));
    }
    evaluate(&FreeResolventKernel { lambda, order: 1 }, w, mc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GRegime {
    /// `σ > 1/2 + j`: bounded in `x`.
    Bounded,
    /// `σ > 3/2 + j`: decays like `⟨x⟩⁻¹`.
    Decaying,
}

#[derive(Debug, Clone, Serialize)]
pub struct GNorm {
    pub value: f64,
    pub regime: GRegime,
}

/// `(∫ (|u-x| - |x|)^{2j} |x-u|^{-2} ⟨u⟩^{-2σ} du)^{1/2}` at `|x| = x_norm`.
pub fn g_function_norm(x_norm: f64, order: u32, sigma: f64) -> Result<GNorm> {
    if order > 2 {
        return invalid(format!("derivative order {order} exceeds 2"));
    }
    let j = order as f64;
    if !(sigma > 0.5 + j) {
        return Err(Error::Precondition(format!("need σ > 1/2 + j = {} (got {sigma})", 0.5 + j)));
    }
    let a = x_norm.abs();
    let gl = GaussLegendre::<f64>::new(PANEL_NODES);
    let end = RADIAL_END * a.max(1.0);
    let breaks = graded_breaks(&[a], end, &[]);
    let f = |r: f64| (r - a).powi(2 * order as i32) * shell_average(a, r, sigma);
    let body = gl.over_breaks(&breaks, f);
    let total = body + power_tail(f(end / 2.0), f(end), end)?;
    let regime = if sigma > 1.5 + j { GRegime::Decaying } else { GRegime::Bounded };
    Ok(GNorm { value: total.sqrt(), regime })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_average_matches_direct_quadrature() {
        let gl = GaussLegendre::<f64>::new(40);
        for &(s, r, sig) in &[(0.3, 2.0, 1.3), (5.0, 5.0, 1.0), (1e-6, 3.0, 2.2), (40.0, 0.01, 0.7)] {
            let direct = 2.0 * std::f64::consts::PI
                * gl.composite(-1.0, 1.0, 8, |mu| (1.0 + s * s + r * r + 2.0 * s * r * mu).powf(-sig));
            assert!((shell_average(s, r, sig) - direct).abs() < 1e-12 * direct, "{s} {r} {sig}");
        }
    }

    #[test]
    fn envelope_at_zero_separation_factorises() {
        // m(0) = 4π ∫⟨y⟩^{-2(σ+α)} dy.
        let w = Weights::new(1.2, 1.4);
        let c = w.sigma + w.alpha;
        let exact = FOUR_PI * 2.0 * std::f64::consts::PI
            * (libm::lgamma(1.5) + libm::lgamma(c - 1.5) - libm::lgamma(c)).exp();
        assert!((shell_envelope(0.0, w) - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn power_law_sampler_density_is_normalised() {
        let p = PowerLawSampler::new(2.3);
        // ∫ density = 1 by radial quadrature.
        let gl = GaussLegendre::<f64>::new(30);
        let total = gl.composite(0.0, std::f64::consts::FRAC_PI_2 - 1e-9, 40, |t| {
            let s = t.tan();
            FOUR_PI * s * s * p.density(&[s, 0.0, 0.0]) / (t.cos() * t.cos())
        });
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }

    #[test]
    fn g_norm_at_origin_is_the_resolvent_column() {
        let sigma = 1.7;
        let g = g_function_norm(0.0, 0, sigma).unwrap();
        // ‖|u|^{-1}⟨u⟩^{-σ}‖² = 4π ∫⟨r⟩^{-2σ} dr = 2π √π Γ(σ-1/2)/Γ(σ).
        let exact = 2.0 * std::f64::consts::PI * std::f64::consts::PI.sqrt()
            * (libm::lgamma(sigma - 0.5) - libm::lgamma(sigma)).exp();
        assert!((g.value * g.value - exact).abs() < 1e-9 * exact);
        assert!(g_function_norm(1.0, 1, 1.4).is_err());
        assert!(g_function_norm(1.0, 3, 9.0).is_err());
    }

    #[test]
    fn inadmissible_weights_are_rejected() {
        assert!(hs_norm_r0(Weights::new(1.0, 0.9), 1.0, 0, None).is_err());
        assert!(hs_norm_r0(Weights::new(0.4, 3.0), 1.0, 0, None).is_err());
        assert!(hs_norm_r0(Weights::new(1.4, 2.0), 1.0, 1, None).is_err());
        assert!(bprime_norm(0.5, Weights::new(1.4, 1.6), None).is_err());
    }

    fn z(c: f64) -> f64 {
        2.0 * std::f64::consts::PI * (libm::lgamma(1.5) + libm::lgamma(c - 1.5) - libm::lgamma(c)).exp()
    }

    #[test]
    fn r0_norm_is_lambda_independent_and_swap_symmetric() {
        let w = Weights::new(1.01, 1.01);
        let base = hs_norm_r0(w, 0.0, 0, None).unwrap().value;
        for l in [0.1, 1.0, 10.0, -3.0] {
            let v = hs_norm_r0(w, l, 0, None).unwrap().value;
            assert!((v - base).abs() <= 1e-12 * base, "{l}: {v} vs {base}");
        }
        let w = Weights::new(1.3, 0.9);
        let a = hs_norm_r0(w, 0.5, 0, None).unwrap().value;
        let b = hs_norm_r0(w.swapped(), 0.5, 0, None).unwrap().value;
        assert!((a - b).abs() <= 1e-10 * a);
    }

    #[test]
    fn quadrature_agrees_with_monte_carlo() {
        let w = Weights::new(1.3, 1.3);
        for n in [hs_norm_r0(w, 0.7, 0, Some(McSpec::default())).unwrap(), b_kernel_norm(0.5, w, Some(McSpec::default())).unwrap()] {
            let mc = n.mc.expect("monte carlo admissible");
            assert!(mc.agrees, "z = {}", mc.z_score);
        }
        let skipped = hs_norm_r0(Weights::new(0.7, 1.5), 0.0, 0, Some(McSpec::default())).unwrap();
        assert!(skipped.mc.is_none() && skipped.mc_skipped.is_some());
    }

    #[test]
    fn bprime_norm_factorises_and_ignores_lambda() {
        // |kernel| = 1/4π, so ‖·‖² = Z_σ Z_α / 16π².
        let w = Weights::new(2.01, 1.99);
        let exact = (z(w.sigma) * z(w.alpha)).sqrt() / FOUR_PI;
        for l in [0.0, 0.3, 5.0] {
            let v = bprime_norm(l, w, None).unwrap().value;
            assert!((v - exact).abs() < 1e-6 * exact, "{l}: {v} vs {exact}");
        }
        assert!(bprime_norm(1.0, Weights::new(1.4, 2.0), None).is_err());
    }

    #[test]
    fn b_kernel_is_even_dominated_and_vanishes_at_the_predicted_rate() {
        let w = Weights::new(1.3, 1.3);
        let r0 = hs_norm_r0(w, 0.0, 0, None).unwrap().value;
        for l in [0.05, 0.5, 5.0] {
            let b = b_kernel_norm(l, w, None).unwrap().value;
            let m = b_kernel_norm(-l, w, None).unwrap().value;
            assert!((b - m).abs() <= 1e-12 * b);
            assert!(b <= 2.0 * r0);
        }
        let fit = b_kernel_rate(w, &[0.01, 0.0178, 0.0316, 0.0562, 0.1]).unwrap();
        assert!(fit.accepted);
        assert!((fit.gamma_hat - fit.gamma_predicted).abs() < 0.1, "{} vs {}", fit.gamma_hat, fit.gamma_predicted);
    }
}
