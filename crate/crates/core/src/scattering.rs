//! Wronskians, scattering coefficients, zero-energy classification and the
//! perturbed Green's function, all assembled from a pair of Jost tables.
//!
//! Convention: `W[f, g] = f g' - f' g`, so the free problem has
//! `W(λ) = -2iλ` and `β = W/(-2iλ) → 1` at high energy.

use std::io::Write;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::jost::{JostTable, Side};

type C64 = Complex<f64>;

const I: C64 = Complex { re: 0.0, im: 1.0 };

/// Below this modulus the Wronskian is treated as vanishing.
pub const WRONSKIAN_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Resonant,
    Nonresonant,
    Indeterminate,
}

/// Zero-energy verdict with the numbers it was based on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZeroEnergy {
    pub classification: Classification,
    pub w_at_zero: [f64; 2],
    pub eps_res: f64,
    pub scale: f64,
    /// `lim W(λ)/(-2iλ)` extrapolated from the two smallest positive `λ`.
    pub beta_at_zero: Option<[f64; 2]>,
}

#[derive(Debug, Clone)]
pub struct ScatteringData {
    pub lambda_grid: Vec<f64>,
    /// `W[f₊(λ), f₋(λ)]`.
    pub w: Vec<C64>,
    /// `W[f₊(λ), f₋(-λ)]`.
    pub w_cross: Vec<C64>,
    /// NaN at `λ = 0`.
    pub alpha_minus: Vec<C64>,
    /// NaN at `λ = 0`.
    pub beta: Vec<C64>,
    pub w_at_zero: Option<C64>,
    /// Evaluation point of the Wronskians.
    pub x0: f64,
}

/// `(f, f')` at `(λ, x)`, using `f(-λ) = conj f(λ)` (real potentials) when
/// `-λ` is absent from the table.
pub fn jost_value(table: &JostTable<f64>, lambda: f64, x: f64) -> Result<(C64, C64)> {
    if let Some(il) = table.lambda_index(lambda) {
        return table.f_and_derivative(il, x);
    }
    if let Some(il) = table.lambda_index(-lambda) {
        let (f, fp) = table.f_and_derivative(il, x)?;
        return Ok((f.conj(), fp.conj()));
    }
    invalid(format!("λ = {lambda} is not in the {} table", table.side.label()))
}

fn check_sides(plus: &JostTable<f64>, minus: &JostTable<f64>) -> Result<()> {
    if plus.side != Side::Plus || minus.side != Side::Minus {
        return invalid("expected a (+, -) pair of Jost tables");
    }
    Ok(())
}

fn wr((f, fp): (C64, C64), (g, gp): (C64, C64)) -> C64 {
    f * gp - fp * g
}

/// `W[f₊(λ), f₋(λ)]` evaluated at `x0`.
pub fn wronskian(plus: &JostTable<f64>, minus: &JostTable<f64>, lambda: f64, x0: f64) -> Result<C64> {
    check_sides(plus, minus)?;
    if plus.lambda_index(lambda).is_none() || minus.lambda_index(lambda).is_none() {
        return invalid(format!("λ = {lambda} missing from a Jost table"));
    }
    Ok(wr(jost_value(plus, lambda, x0)?, jost_value(minus, lambda, x0)?))
}

/// Largest pairwise difference of `W(λ)` over the evaluation points.
pub fn wronskian_spread(
    plus: &JostTable<f64>,
    minus: &JostTable<f64>,
    lambda: f64,
    points: &[f64],
) -> Result<f64> {
    let ws = points
        .iter()
        .map(|x| wronskian(plus, minus, lambda, *x))
        .collect::<Result<Vec<_>>>()?;
    let mut spread = 0.0f64;
    for a in &ws {
        for b in &ws {
            spread = spread.max((a - b).norm());
        }
    }
    Ok(spread)
}

/// `(α₋, β)` with `f₋(λ) = α₋ f₊(λ) + β f₊(-λ)`.
pub fn coefficients(plus: &JostTable<f64>, minus: &JostTable<f64>, lambda: f64, x0: f64) -> Result<(C64, C64)> {
    if lambda == 0.0 {
        return invalid("scattering coefficients are undefined at λ = 0");
    }
    let w = wronskian(plus, minus, lambda, x0)?;
    let denom = -2.0 * I * lambda;
    let fm = jost_value(minus, lambda, x0)?;
    let fp_neg = jost_value(plus, -lambda, x0)?;
    Ok((wr(fm, fp_neg) / denom, w / denom))
}

/// `sup_x |f₋(λ) - α₋ f₊(λ) - β f₊(-λ)|` over the shared grid.
pub fn expansion_residual(plus: &JostTable<f64>, minus: &JostTable<f64>, lambda: f64, x0: f64) -> Result<f64> {
    let (a, b) = coefficients(plus, minus, lambda, x0)?;
    let mut worst = 0.0f64;
    for x in minus.x_grid.points() {
        if x < plus.x_grid.start || x > plus.x_grid.end() {
            continue;
        }
        let fm = jost_value(minus, lambda, x)?.0;
        let fp = jost_value(plus, lambda, x)?.0;
        let fpn = jost_value(plus, -lambda, x)?.0;
        worst = worst.max((fm - a * fp - b * fpn).norm());
    }
    Ok(worst)
}

impl ScatteringData {
    /// Tabulates `W`, the cross Wronskian and `(α₋, β)` over the λ grid of
    /// `plus` (which must match that of `minus`).
    pub fn compute(plus: &JostTable<f64>, minus: &JostTable<f64>, x0: f64) -> Result<Self> {
        check_sides(plus, minus)?;
        if plus.lambda_grid != minus.lambda_grid {
            return invalid("Jost tables have different λ grids");
        }
        let n = plus.lambda_grid.len();
        let nan = Complex::new(f64::NAN, f64::NAN);
        let (mut w, mut w_cross, mut alpha, mut beta) =
            (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        let mut w_at_zero = None;
        for &l in &plus.lambda_grid {
            let fp = jost_value(plus, l, x0)?;
            let wl = wr(fp, jost_value(minus, l, x0)?);
            w.push(wl);
            w_cross.push(wr(fp, jost_value(minus, -l, x0)?));
            if l == 0.0 {
                w_at_zero = Some(wl);
                alpha.push(nan);
                beta.push(nan);
            } else {
                let (a, b) = coefficients(plus, minus, l, x0)?;
                alpha.push(a);
                beta.push(b);
            }
        }
        Ok(Self { lambda_grid: plus.lambda_grid.clone(), w, w_cross, alpha_minus: alpha, beta, w_at_zero, x0 })
    }

    /// Largest `|β|² - |α₋|² - 1` over nonzero λ.
    pub fn unitarity_defect(&self) -> f64 {
        self.alpha_minus
            .iter()
            .zip(&self.beta)
            .filter(|(a, _)| a.re.is_finite())
            .map(|(a, b)| (b.norm_sqr() - a.norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|W(-λ) - conj W(λ)|` over `±λ` pairs in the grid.
    pub fn conjugation_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, &l) in self.lambda_grid.iter().enumerate() {
            if let Some(j) = self.lambda_grid.iter().position(|m| *m == -l) {
                worst = worst.max((self.w[j] - self.w[i].conj()).norm());
            }
        }
        worst
    }

    /// Smallest `|W(λ)|` over nonzero λ.
    pub fn min_nonzero_wronskian(&self) -> f64 {
        self.lambda_grid
            .iter()
            .zip(&self.w)
            .filter(|(l, _)| **l != 0.0)
            .map(|(_, w)| w.norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// CSV export: `lambda, re_W, im_W, re_alpha, im_alpha, re_beta, im_beta`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lambda", "re_W", "im_W", "re_alpha", "im_alpha", "re_beta", "im_beta"])?;
        for i in 0..self.lambda_grid.len() {
            let row = [
                self.lambda_grid[i],
                self.w[i].re,
                self.w[i].im,
                self.alpha_minus[i].re,
                self.alpha_minus[i].im,
                self.beta[i].re,
                self.beta[i].im,
            ];
            w.write_record(row.iter().map(|v| format!("{v:.17e}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Classifies zero energy from `|W(0)|` against `eps_res·max(1, ‖V‖_{L¹₁})`.
pub fn classify_zero_energy(s: &ScatteringData, eps_res: f64, l11_norm: f64) -> Result<ZeroEnergy> {
    if !(eps_res > 0.0) {
        return invalid("eps_res must be positive");
    }
    let w0 = s
        .w_at_zero
        .ok_or_else(|| Error::Precondition("λ = 0 is not in the scattering grid".into()))?;
    let scale = l11_norm.max(1.0);
    let size = w0.norm();
    let classification = if size < eps_res * scale {
        Classification::Resonant
    } else if size > 2.0 * eps_res * scale {
        Classification::Nonresonant
    } else {
        Classification::Indeterminate
    };
    let beta_at_zero = if classification == Classification::Resonant {
        let mut pos: Vec<(f64, C64)> = s
            .lambda_grid
            .iter()
            .zip(&s.beta)
            .filter(|(l, _)| **l > 0.0)
            .map(|(l, b)| (*l, *b))
            .collect();
        pos.sort_by(|a, b| a.0.total_cmp(&b.0));
        match pos.as_slice() {
            [(l1, b1), (l2, b2), ..] => {
                let b0 = b1 - (b2 - b1) * (*l1 / (l2 - l1));
                Some([b0.re, b0.im])
            }
            [(_, b1)] => Some([b1.re, b1.im]),
            [] => None,
        }
    } else {
        None
    };
    Ok(ZeroEnergy { classification, w_at_zero: [w0.re, w0.im], eps_res, scale, beta_at_zero })
}

/// Outgoing (`sign = +1`) or incoming (`sign = -1`) resolvent kernel
/// `R_V(λ² ± i0)(x, y) = f₊(±λ, max) f₋(±λ, min) / W(±λ)`.
pub fn green_kernel(
    plus: &JostTable<f64>,
    minus: &JostTable<f64>,
    lambda: f64,
    sign: i8,
    x: f64,
    y: f64,
) -> Result<C64> {
    check_sides(plus, minus)?;
    if lambda == 0.0 {
        return invalid("Green's kernel needs λ ≠ 0");
    }
    if sign != 1 && sign != -1 {
        return invalid("sign must be +1 or -1");
    }
    let l = lambda * sign as f64;
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    let f_hi = jost_value(plus, l, hi)?;
    let f_lo = jost_value(minus, l, lo)?;
    // A fixed grid node keeps W free of interpolation noise.
    let g = &plus.x_grid;
    let x0 = g.at((((0.0f64).clamp(g.start, g.end()) - g.start) / g.step).round() as usize);
    let w = wr(jost_value(plus, l, x0)?, jost_value(minus, l, x0)?);
    if w.norm() < WRONSKIAN_FLOOR {
        return Err(Error::Singular(format!("|W({l})| = {:.3e} below floor", w.norm())));
    }
    Ok(f_hi.0 * f_lo.0 / w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jost::{solve_jost, XGrid};
    use crate::potentials::{Dimension, Potential};

    fn tables(v: &Potential<f64>, lambdas: &[f64]) -> (JostTable<f64>, JostTable<f64>) {
        let grid = XGrid::spanning(-3.0, 3.0, 0.01).unwrap();
        (
            solve_jost(v, Side::Plus, lambdas, grid, 1e-13).unwrap(),
            solve_jost(v, Side::Minus, lambdas, grid, 1e-13).unwrap(),
        )
    }

    #[test]
    fn free_wronskian_and_coefficients() {
        let v = Potential::zero(Dimension::One);
        let (p, m) = tables(&v, &[-2.0, 0.0, 0.5, 2.0]);
        for l in [-2.0, 0.5, 2.0] {
            let w = wronskian(&p, &m, l, 0.3).unwrap();
            assert!((w + 2.0 * I * l).norm() < 1e-13);
            let (a, b) = coefficients(&p, &m, l, 0.0).unwrap();
            assert!(a.norm() < 1e-13 && (b - 1.0).norm() < 1e-13);
        }
        assert!(coefficients(&p, &m, 0.0, 0.0).is_err());
        assert!(wronskian(&p, &m, 7.0, 0.0).is_err());
        let s = ScatteringData::compute(&p, &m, 0.0).unwrap();
        let z = classify_zero_energy(&s, 1e-4, 0.0).unwrap();
        assert_eq!(z.classification, Classification::Resonant);
    }

    #[test]
    fn poschl_teller_is_reflectionless_and_resonant() {
        let v = Potential::poschl_teller(Dimension::One, 2.0).unwrap();
        let lambdas = [-1.0, 0.0, 0.05, 0.1, 0.5, 1.0];
        let (p, m) = tables(&v, &lambdas);
        assert!((wronskian(&p, &m, 1.0, 0.0).unwrap() + 2.0).norm() < 1e-8);
        assert!(wronskian_spread(&p, &m, 1.0, &[-1.0, 0.0, 1.0]).unwrap() < 1e-8);
        let s = ScatteringData::compute(&p, &m, 0.0).unwrap();
        for a in s.alpha_minus.iter().filter(|a| a.re.is_finite()) {
            assert!(a.norm() < 1e-8);
        }
        assert!(s.unitarity_defect() < 1e-8);
        let z = classify_zero_energy(&s, 1e-4, 4.0).unwrap();
        assert_eq!(z.classification, Classification::Resonant);
        let b0 = z.beta_at_zero.unwrap();
        assert!((b0[0] + 1.0).abs() < 1e-2 && b0[1].abs() < 1e-2, "{b0:?}");
    }

    #[test]
    fn gaussian_is_nonresonant_and_unitary() {
        let v = Potential::gaussian(Dimension::One, 1.0, 1.0).unwrap();
        let lambdas = [-1.3, -0.4, 0.0, 0.4, 1.3];
        let (p, m) = tables(&v, &lambdas);
        let s = ScatteringData::compute(&p, &m, 0.0).unwrap();
        assert!(s.unitarity_defect() < 1e-8);
        assert!(s.conjugation_defect() < 1e-10);
        assert!(s.min_nonzero_wronskian() > 0.1);
        let l11 = v.weighted_l1_norm(1.0, None).unwrap().value;
        for eps in [1e-4, 5e-5] {
            assert_eq!(classify_zero_energy(&s, eps, l11).unwrap().classification, Classification::Nonresonant);
        }
        assert!(expansion_residual(&p, &m, 0.4, 0.0).unwrap() < 1e-8);
    }

    #[test]
    fn green_kernel_free_form_symmetry_and_residual() {
        let v = Potential::zero(Dimension::One);
        let (p, m) = tables(&v, &[0.8]);
        for sign in [1i8, -1] {
            let g = green_kernel(&p, &m, 0.8, sign, -0.5, 1.2).unwrap();
            let s = sign as f64;
            let exact = s * I / 1.6 * Complex::from_polar(1.0, s * 0.8 * 1.7);
            assert!((g - exact).norm() < 1e-12);
        }
        let v = Potential::gaussian(Dimension::One, 1.0, 1.0).unwrap();
        let (p, m) = tables(&v, &[0.8]);
        let a = green_kernel(&p, &m, 0.8, 1, -0.7, 0.9).unwrap();
        let b = green_kernel(&p, &m, 0.8, 1, 0.9, -0.7).unwrap();
        assert_eq!(a, b);
        // (-∂x² + V - λ²) G(·, y) = 0 away from x = y.
        let (y, h) = (0.9, 0.01);
        for x in [-1.5, -0.5, 0.3, 1.6, 2.2] {
            let g = |x: f64| green_kernel(&p, &m, 0.8, 1, x, y).unwrap();
            let d2 = (-g(x + 2.0 * h) + 16.0 * g(x + h) - 30.0 * g(x) + 16.0 * g(x - h) - g(x - 2.0 * h)) / (12.0 * h * h);
            let r = -d2 + (v.value(x) - 0.64) * g(x);
            assert!(r.norm() < 1e-6, "x={x}: {}", r.norm());
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let v = Potential::zero(Dimension::One);
        let (p, m) = tables(&v, &[0.0, 1.0]);
        let s = ScatteringData::compute(&p, &m, 0.0).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let t = String::from_utf8(buf).unwrap();
        assert!(t.starts_with("lambda,re_W,im_W,re_alpha,im_alpha,re_beta,im_beta"));
        assert_eq!(t.lines().count(), 3);
    }
}
