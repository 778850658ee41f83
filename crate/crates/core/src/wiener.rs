//! Fourier-side L¹ norms: the discrete proxies behind Wiener-algebra
//! arguments and the uniform-in-`(n, L)` cut-off bounds.
//!
//! Transform convention: `ǧ(ξ) = (2π)⁻¹ ∫ g(λ) e^{-iλξ} dλ`, so that
//! `[1/λ]^∨ = -(i/2) sign(ξ)` (principal value).

use std::io::Write;

use num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::cutoff::bump;
use crate::error::{invalid, Error, Result};
use crate::jost::{solve_jost, Side, XGrid};
use crate::potentials::Potential;
use crate::scattering::ScatteringData;

type C64 = Complex<f64>;

/// Samples `g(start + j·step)`.
#[derive(Debug, Clone)]
pub struct Sampled {
    pub start: f64,
    pub step: f64,
    pub values: Vec<C64>,
}

impl Sampled {
    pub fn from_fn<F: Fn(f64) -> C64>(start: f64, end: f64, step: f64, f: F) -> Result<Self> {
        if !(end > start) || !(step > 0.0) {
            return invalid("sampling window needs start < end and positive step");
        }
        let n = ((end - start) / step).round() as usize + 1;
        Ok(Self { start, step, values: (0..n).map(|j| f(start + step * j as f64)).collect() })
    }

    pub fn lambda(&self, j: usize) -> f64 {
        self.start + self.step * j as f64
    }
}

/// Discrete transform on `ξ_m = m·Δξ`, `Δξ = 2π/(M·step)`, `m ∈ [-M/2, M/2)`.
#[derive(Debug, Clone)]
pub struct Transform {
    pub xi: Vec<f64>,
    pub values: Vec<C64>,
    pub xi_step: f64,
}

/// Zero-padded FFT evaluation of `ǧ`; `pad` is the minimum length.
pub fn inverse_transform(g: &Sampled, pad: usize) -> Transform {
    let m = pad.max(g.values.len()).next_power_of_two();
    let mut buf = vec![Complex::new(0.0, 0.0); m];
    buf[..g.values.len()].copy_from_slice(&g.values);
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let xi_step = 2.0 * std::f64::consts::PI / (m as f64 * g.step);
    let scale = g.step / (2.0 * std::f64::consts::PI);
    let half = m / 2;
    let mut xi = Vec::with_capacity(m);
    let mut values = Vec::with_capacity(m);
    for idx in 0..m {
        // Reorder to ascending ξ.
        let k = (idx + half) % m;
        let mi = k as isize - if k >= half { m as isize } else { 0 };
        let x = mi as f64 * xi_step;
        xi.push(x);
        values.push(buf[k] * scale * Complex::from_polar(1.0, -g.start * x));
    }
    Transform { xi, values, xi_step }
}

/// Discrete L¹ proxy of `ǧ`, with resolution metadata.
#[derive(Debug, Clone, Serialize)]
pub struct FourierL1 {
    pub value: f64,
    pub xi_step: f64,
    pub xi_extent: f64,
    /// Mass of the constant split off before transforming (a point mass at 0).
    pub point_mass: f64,
    pub warning: Option<String>,
}

/// Relative size at the window ends above which a warning is attached.
pub const ENDPOINT_TOL: f64 = 1e-6;

/// `‖ǧ‖₁` by zero-padded FFT. When both ends of the window approach the
/// same nonzero constant `c`, `g - c` is transformed and `|c|` reported as
/// a point mass.
pub fn l1_fourier_norm(g: &Sampled, pad: usize) -> Result<FourierL1> {
    let n = g.values.len();
    if n < 4 || g.values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return invalid("need at least four finite samples");
    }
    let scale = g.values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let (first, last) = (g.values[0], g.values[n - 1]);
    let mut warning = None;
    let mut point_mass = 0.0;
    let mut work = g.clone();
    if first.norm().max(last.norm()) > ENDPOINT_TOL * scale {
        if (first - last).norm() <= ENDPOINT_TOL * scale {
            let c = 0.5 * (first + last);
            work.values.iter_mut().for_each(|v| *v -= c);
            point_mass = c.norm();
        } else {
            warning = Some(format!(
                "samples not decayed at the window ends ({:.2e}, {:.2e} relative)",
                first.norm() / scale,
                last.norm() / scale
            ));
        }
    }
    let t = inverse_transform(&work, pad);
    let value = t.values.iter().map(|v| v.norm()).sum::<f64>() * t.xi_step + point_mass;
    Ok(FourierL1 {
        value,
        xi_step: t.xi_step,
        xi_extent: t.xi_step * t.xi.len() as f64 / 2.0,
        point_mass,
        warning,
    })
}

/// Outcome of the Wiener-algebra inverse check.
#[derive(Debug, Clone, Serialize)]
pub struct WienerReport {
    /// `min |D|` over the support of `χ`.
    pub lower_bound: f64,
    /// `‖[numerator/D]^∨‖₁`.
    pub ratio_l1: FourierL1,
    /// `sup_{supp χ} |1 - D/c|` for the fitted constant `c`.
    pub neumann_ratio: f64,
    /// `‖[χ (1 - D/c)ⁿ]^∨‖₁`, `n = 1..=4`.
    pub neumann_norms: Vec<f64>,
    pub finite: bool,
}

/// Checks that `num/D` lies in the Wiener algebra on the support of `χ`:
/// `D` must stay away from zero there, the ratio's transform must have a
/// finite L¹ proxy, and the Neumann diagnostic reports how far `D` is from
/// a constant.
pub fn wiener_ratio_check(
    lambda: &Sampled,
    chi: &[f64],
    numerator: &[C64],
    denominator: &[C64],
    floor: f64,
) -> Result<WienerReport> {
    let n = lambda.values.len();
    if chi.len() != n || numerator.len() != n || denominator.len() != n {
        return invalid("sample arrays must share the λ grid");
    }
    let support: Vec<usize> = (0..n).filter(|&j| chi[j] > 0.0).collect();
    if support.is_empty() {
        return invalid("χ vanishes on the whole grid");
    }
    let lower_bound = support.iter().map(|&j| denominator[j].norm()).fold(f64::INFINITY, f64::min);
    if !(lower_bound > floor) {
        return Err(Error::Singular(format!(
            "denominator drops to {lower_bound:.3e} on the support of χ; zero-energy resonance suspected, use the reduced form"
        )));
    }
    let ratio = Sampled {
        start: lambda.start,
        step: lambda.step,
        values: (0..n).map(|j| if chi[j] > 0.0 { numerator[j] / denominator[j] } else { Complex::new(0.0, 0.0) }).collect(),
    };
    let ratio_l1 = l1_fourier_norm(&ratio, 4 * n)?;
    let c = support.iter().map(|&j| denominator[j]).sum::<C64>() / support.len() as f64;
    let neumann_ratio = support.iter().map(|&j| (1.0 - denominator[j] / c).norm()).fold(0.0, f64::max);
    let mut neumann_norms = Vec::with_capacity(4);
    for p in 1..=4 {
        let s = Sampled {
            start: lambda.start,
            step: lambda.step,
            values: (0..n).map(|j| (1.0 - denominator[j] / c).powi(p) * chi[j]).collect(),
        };
        neumann_norms.push(l1_fourier_norm(&s, 4 * n)?.value);
    }
    let finite = ratio_l1.value.is_finite() && neumann_norms.iter().all(|v| v.is_finite());
    Ok(WienerReport { lower_bound, ratio_l1, neumann_ratio, neumann_norms, finite })
}

/// Raw form: `λχ(λ) / (χ̃(λ) W(λ))`.
pub fn wiener_inverse_check(lambda: &Sampled, chi: &[f64], chi_tilde_w: &[C64], floor: f64) -> Result<WienerReport> {
    let num: Vec<C64> = (0..chi.len()).map(|j| Complex::new(lambda.lambda(j) * chi[j], 0.0)).collect();
    wiener_ratio_check(lambda, chi, &num, chi_tilde_w, floor)
}

/// Reduced form: `χ(λ) / (-2i χ̃(λ) β(λ))`, the same ratio with the factor
/// `λ` cancelled; bounded through a zero-energy resonance.
pub fn wiener_inverse_check_reduced(
    lambda: &Sampled,
    chi: &[f64],
    chi_tilde_beta: &[C64],
    floor: f64,
) -> Result<WienerReport> {
    let num: Vec<C64> = chi.iter().map(|c| Complex::new(*c, 0.0)).collect();
    let den: Vec<C64> = chi_tilde_beta.iter().map(|b| Complex::new(0.0, -2.0) * b).collect();
    wiener_ratio_check(lambda, chi, &num, &den, floor)
}

/// Low-energy Wronskian samples on a symmetric λ grid through 0, with
/// `χ(λ/c)` and `χ̃(λ) = χ(λ/2c)`.
#[derive(Debug, Clone)]
pub struct WronskianSamples {
    pub grid: Sampled,
    pub chi: Vec<f64>,
    pub chi_tilde_w: Vec<C64>,
    /// `χ̃β`; the λ = 0 entry averages the two neighbours.
    pub chi_tilde_beta: Vec<C64>,
}

pub fn sample_wronskian(v: &Potential<f64>, scale: f64, step: f64, tol: f64) -> Result<WronskianSamples> {
    if !(scale > 0.0) || !(step > 0.0) || step > scale / 4.0 {
        return invalid("need 0 < step ≤ scale/4");
    }
    let half = (4.0 * scale / step).ceil() as i64;
    let lambdas: Vec<f64> = (-half..=half).map(|j| j as f64 * step).collect();
    let x = XGrid::spanning(-0.1, 0.1, 0.025)?;
    let plus = solve_jost(v, Side::Plus, &lambdas, x, tol)?;
    let minus = solve_jost(v, Side::Minus, &lambdas, x, tol)?;
    let s = ScatteringData::compute(&plus, &minus, 0.0)?;
    let chi: Vec<f64> = lambdas.iter().map(|l| bump(l / scale)).collect();
    let tilde: Vec<f64> = lambdas.iter().map(|l| bump(l / (2.0 * scale))).collect();
    let zero = half as usize;
    let mut beta = s.beta.clone();
    beta[zero] = 0.5 * (beta[zero - 1] + beta[zero + 1]);
    Ok(WronskianSamples {
        grid: Sampled { start: lambdas[0], step, values: vec![Complex::new(0.0, 0.0); lambdas.len()] },
        chi_tilde_w: s.w.iter().zip(&tilde).map(|(w, t)| w * *t).collect(),
        chi_tilde_beta: beta.iter().zip(&tilde).map(|(b, t)| b * *t).collect(),
        chi,
    })
}

impl WronskianSamples {
    pub fn chi_tilde_w_l1(&self) -> Result<FourierL1> {
        let g = Sampled { values: self.chi_tilde_w.clone(), ..self.grid.clone() };
        l1_fourier_norm(&g, 8 * g.values.len())
    }

    pub fn raw_check(&self, floor: f64) -> Result<WienerReport> {
        wiener_inverse_check(&self.grid, &self.chi, &self.chi_tilde_w, floor)
    }

    pub fn reduced_check(&self, floor: f64) -> Result<WienerReport> {
        wiener_inverse_check_reduced(&self.grid, &self.chi, &self.chi_tilde_beta, floor)
    }
}

/// One cell of the uniform-bounds table.
#[derive(Debug, Clone, Serialize)]
pub struct PrufCell {
    pub n: u32,
    pub truncation: f64,
    pub l1_norm: f64,
    /// Reported value is the `‖[χ_L(λ²)]^∨‖₁ · ‖sign‖_∞` proxy (n = 1).
    pub proxy: bool,
    /// Direct L¹ proxy of the cell's own function (grows like log L for n = 1).
    pub direct: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PrufTable {
    pub lambda0: f64,
    pub lambda_step: f64,
    pub cells: Vec<PrufCell>,
    /// Largest slope of `log ‖·‖` against `log L` over `n`.
    pub max_slope: f64,
    pub uniform: bool,
    pub note: &'static str,
}

/// `(1 - χ(λ²/λ₀)) χ(λ²/L) λ^{-n} λ₀^{n/2}`.
pub fn pruf_function(lambda0: f64, truncation: f64, n: u32, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let l2 = lambda * lambda;
    (1.0 - bump(l2 / lambda0)) * bump(l2 / truncation) * (lambda0.sqrt() / lambda).powi(n as i32)
}

fn cut_samples<F: Fn(f64) -> f64>(truncation: f64, step: f64, f: F) -> Result<Sampled> {
    let edge = 1.25 * (2.0 * truncation).sqrt();
    Sampled::from_fn(-edge, edge, step, |l| Complex::new(f(l), 0.0))
}

/// Default high-pass scale; well below the smallest truncation so the two
/// cut-offs have separated for every tabulated `L`.
pub const DEFAULT_PRUF_LAMBDA0: f64 = 1e-3;

/// Table of `‖[f_{n,L}]^∨‖₁` for `n ≤ n_max` and `L` in the list. The λ step
/// resolves the high-pass transition at `√λ₀`.
pub fn pruf_uniform_bounds(lambda0: f64, n_max: u32, truncations: &[f64]) -> Result<PrufTable> {
    if n_max < 2 {
        return invalid("n_max must be at least 2");
    }
    if !(lambda0 > 0.0) {
        return invalid("λ₀ must be positive");
    }
    let step = (lambda0.sqrt() / 100.0).min(0.005);
    let (lo, hi) = truncations.iter().fold((f64::INFINITY, 0.0f64), |(a, b), l| (a.min(*l), b.max(*l)));
    if truncations.iter().any(|l| !(*l > 0.0)) || hi < 10.0 * lo {
        return invalid("truncations must be positive and span at least one decade");
    }
    let mut cells = Vec::new();
    for n in 0..=n_max {
        for &l in truncations {
            let s = cut_samples(l, step, |x| pruf_function(lambda0, l, n, x))?;
            let direct = l1_fourier_norm(&s, 8 * s.values.len())?.value;
            let (l1_norm, proxy) = if n == 1 {
                let c = cut_samples(l, step, |x| bump(x * x / l))?;
                (l1_fourier_norm(&c, 8 * c.values.len())?.value, true)
            } else {
                (direct, false)
            };
            cells.push(PrufCell { n, truncation: l, l1_norm, proxy, direct });
        }
    }
    let mut max_slope = f64::NEG_INFINITY;
    for n in 0..=n_max {
        let row: Vec<&PrufCell> = cells.iter().filter(|c| c.n == n).collect();
        let xs: Vec<f64> = row.iter().map(|c| c.truncation).collect();
        let ys: Vec<f64> = row.iter().map(|c| c.l1_norm).collect();
        max_slope = max_slope.max(crate::resolvent3d::fit::power_law(&xs, &ys).0);
    }
    let uniform = cells.iter().all(|c| c.l1_norm.is_finite()) && max_slope < 0.1;
    Ok(PrufTable {
        lambda0,
        lambda_step: step,
        cells,
        max_slope,
        uniform,
        note: "discrete L1 proxies of the transforms; the bounded quantities are total-variation norms",
    })
}

impl PrufTable {
    /// CSV export: `n, L, l1_norm`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "L", "l1_norm"])?;
        for c in &self.cells {
            w.write_record([c.n.to_string(), format!("{:.17e}", c.truncation), format!("{:.17e}", c.l1_norm)])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parseval_round_trip() {
        let g = Sampled::from_fn(-6.0, 6.0, 0.01, |l| Complex::new((-l * l).exp(), 0.3 * l * (-l * l).exp())).unwrap();
        let t = inverse_transform(&g, 4096);
        let lhs: f64 = g.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.step;
        let rhs: f64 = t.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * t.xi_step * 2.0 * std::f64::consts::PI;
        assert!((lhs - rhs).abs() < 1e-8 * lhs);
        // Gaussian transform: (2π)⁻¹ √π e^{-ξ²/4}.
        let i0 = t.xi.iter().position(|x| *x == 0.0).unwrap();
        assert!((t.values[i0].re - std::f64::consts::PI.sqrt() / (2.0 * std::f64::consts::PI)).abs() < 1e-10);
    }

    #[test]
    fn bump_norm_is_stable_under_window_doubling() {
        let a = l1_fourier_norm(&Sampled::from_fn(-3.0, 3.0, 0.005, |l| Complex::new(bump(l), 0.0)).unwrap(), 1 << 14).unwrap();
        let b = l1_fourier_norm(&Sampled::from_fn(-6.0, 6.0, 0.005, |l| Complex::new(bump(l), 0.0)).unwrap(), 1 << 15).unwrap();
        assert!(a.value.is_finite() && a.warning.is_none());
        assert!((a.value - b.value).abs() < 0.05 * a.value);
    }

    #[test]
    fn reciprocal_has_flat_half_magnitude() {
        // Principal value on a symmetric grid that omits 0.
        let g = Sampled::from_fn(-200.0 + 0.005, 200.0 - 0.005, 0.01, |l| Complex::new(1.0 / l, 0.0)).unwrap();
        let t = inverse_transform(&g, 1 << 17);
        for (x, v) in t.xi.iter().zip(&t.values) {
            if (0.5..5.0).contains(&x.abs()) {
                assert!((v.norm() - 0.5).abs() < 0.05, "ξ={x}: {}", v.norm());
                assert!((v.im + 0.5 * x.signum()).abs() < 0.05);
            }
        }
    }

    #[test]
    fn constant_ends_become_a_point_mass() {
        let g = Sampled::from_fn(-20.0, 20.0, 0.01, |l| Complex::new(1.0 + (-l * l).exp(), 0.0)).unwrap();
        let r = l1_fourier_norm(&g, 1 << 13).unwrap();
        assert!((r.point_mass - 1.0).abs() < 1e-12 && r.warning.is_none());
        let g = Sampled::from_fn(-20.0, 20.0, 0.01, |l| Complex::new(l.atan(), 0.0)).unwrap();
        assert!(l1_fourier_norm(&g, 1 << 13).unwrap().warning.is_some());
    }

    #[test]
    fn free_ratio_raw_fails_reduced_passes() {
        let grid = Sampled::from_fn(-4.0, 4.0, 0.01, |_| Complex::new(0.0, 0.0)).unwrap();
        let n = grid.values.len();
        let chi: Vec<f64> = (0..n).map(|j| bump(grid.lambda(j))).collect();
        let tilde: Vec<f64> = (0..n).map(|j| bump(grid.lambda(j) / 2.0)).collect();
        let w: Vec<C64> = (0..n).map(|j| Complex::new(0.0, -2.0 * grid.lambda(j)) * tilde[j]).collect();
        // λ = 0 is a grid node, where W vanishes.
        assert!(wiener_inverse_check(&grid, &chi, &w, 1e-8).is_err());
        let beta: Vec<C64> = tilde.iter().map(|t| Complex::new(*t, 0.0)).collect();
        let r = wiener_inverse_check_reduced(&grid, &chi, &beta, 1e-8).unwrap();
        assert!(r.finite && r.ratio_l1.value < 2.0);
    }

    #[test]
    fn pruf_table_rejects_bad_input() {
        assert!(pruf_uniform_bounds(0.25, 1, &[1.0, 10.0]).is_err());
        assert!(pruf_uniform_bounds(0.25, 2, &[1.0, 2.0]).is_err());
        assert!(pruf_uniform_bounds(0.0, 2, &[1.0, 10.0]).is_err());
        assert_eq!(pruf_function(0.25, 1.0, 3, 0.0), 0.0);
    }

    #[test]
    fn pruf_table_is_uniform_in_truncation() {
        let tab = pruf_uniform_bounds(DEFAULT_PRUF_LAMBDA0, 4, &[1.0, 10.0, 100.0]).unwrap();
        assert!(tab.uniform && tab.max_slope < 0.1, "{}", tab.max_slope);
        let row = |n: u32| tab.cells.iter().filter(|c| c.n == n).map(|c| c.l1_norm).collect::<Vec<_>>();
        let n0 = row(0);
        let (lo, hi) = n0.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
        assert!(hi / lo < 1.15, "{n0:?}");
        // The n = 0 bound: twice the norm of the dilation-invariant truncation.
        assert!(n0.iter().all(|v| *v <= 2.0 * row(1)[0] * 1.01));
        let n2 = row(2);
        let c = n2[0] * DEFAULT_PRUF_LAMBDA0;
        assert!(n2.iter().all(|v| *v <= 1.01 * c / DEFAULT_PRUF_LAMBDA0));
        let mut buf = Vec::new();
        tab.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 16);
    }

    #[test]
    fn gaussian_ratio_is_finite_and_resolution_stable() {
        let v = Potential::gaussian(crate::potentials::Dimension::One, 1.0, 1.0).unwrap();
        let coarse = sample_wronskian(&v, 1.0, 0.02, 1e-12).unwrap();
        let fine = sample_wronskian(&v, 1.0, 0.01, 1e-12).unwrap();
        let (a, b) = (coarse.chi_tilde_w_l1().unwrap(), fine.chi_tilde_w_l1().unwrap());
        assert!(a.warning.is_none() && (a.value - b.value).abs() < 0.1 * b.value);
        let (ra, rb) = (coarse.raw_check(1e-6).unwrap(), fine.raw_check(1e-6).unwrap());
        assert!(ra.finite && (ra.ratio_l1.value - rb.ratio_l1.value).abs() < 0.05 * rb.ratio_l1.value);
    }

    #[test]
    fn resonant_ratio_needs_reduction() {
        let v = Potential::poschl_teller(crate::potentials::Dimension::One, 2.0).unwrap();
        let w = sample_wronskian(&v, 1.0, 0.02, 1e-12).unwrap();
        assert!(matches!(w.raw_check(1e-6), Err(Error::Singular(_))));
        let r = w.reduced_check(1e-6).unwrap();
        assert!(r.finite && r.ratio_l1.value.is_finite());
    }
}
