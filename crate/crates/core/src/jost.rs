//! Jost solutions `f±(λ, x) = e^{±iλx} m±(λ, x)` of `-f'' + V f = λ² f`.
//!
//! `m₊` solves the Volterra equation
//! `m(x) = 1 + ∫_x^∞ D_λ(y - x) V(y) m(y) dy`, `D_λ(u) = (e^{2iλu} - 1)/(2iλ)`,
//! with `D_0(u) = u`. It is solved by successive approximation on a uniform
//! grid: each sweep runs right to left, the convolution with `D_λ` is carried
//! by an exact two-term recursion, and `V m` is integrated panel-wise with
//! Gauss–Legendre nodes against a cubic interpolant of `m`. `m₋` is obtained
//! from the mirrored potential.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cutoff::bump;
use crate::error::{invalid, Error, Result};
use crate::potentials::{Dimension, Potential};
use crate::quad::GaussLegendre;
use crate::scalar::{lit, to_f64, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign<T: Real>(self) -> T {
        match self {
            Side::Plus => T::one(),
            Side::Minus => -T::one(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Side::Plus => "+",
            Side::Minus => "-",
        }
    }
}

/// Uniform grid `start + i·step`, `i < len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XGrid<T> {
    pub start: T,
    pub step: T,
    pub len: usize,
}

impl<T: Real> XGrid<T> {
    /// Grid covering `[lo, hi]` with spacing close to `step` (exact endpoints).
    pub fn spanning(lo: T, hi: T, step: T) -> Result<Self> {
        if !(hi > lo) || !(step > T::zero()) {
            return invalid("x grid needs lo < hi and positive step");
        }
        let n = to_f64((hi - lo) / step).round().max(4.0) as usize;
        Ok(Self { start: lo, step: (hi - lo) / lit(n as f64), len: n + 1 })
    }

    pub fn at(&self, i: usize) -> T {
        self.start + self.step * lit(i as f64)
    }

    pub fn end(&self) -> T {
        self.at(self.len - 1)
    }

    pub fn points(&self) -> Vec<T> {
        (0..self.len).map(|i| self.at(i)).collect()
    }
}

/// Tabulated `m(λ, x)` and `∂x m(λ, x)` for one side.
#[derive(Debug, Clone)]
pub struct JostTable<T> {
    pub side: Side,
    pub lambda_grid: Vec<T>,
    pub x_grid: XGrid<T>,
    /// Row-major over `(λ, x)`.
    pub m_values: Vec<Complex<T>>,
    pub m_x_derivative: Vec<Complex<T>>,
    /// Sup distance between the last two iterates, per `λ`.
    pub residual_norm: Vec<T>,
    pub sweeps: Vec<usize>,
    pub tolerance: T,
}

/// `I(ξ) = ∫_{|t|>ξ} |V(t)| dt` on a grid of `ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayMajorant<T> {
    pub xi_grid: Vec<T>,
    pub i_values: Vec<T>,
}

/// Numerical Fourier transform of `λ ↦ m(λ, x) - 1`.
#[derive(Debug, Clone)]
pub struct FourierSide {
    pub x: f64,
    pub xi_grid: Vec<f64>,
    pub values: Vec<Complex<f64>>,
    /// Window applied in `λ` before transforming.
    pub window: String,
    /// Resolution scale `δ` of the windowed transform.
    pub delta: f64,
}

impl FourierSide {
    /// Share of `Σ|m̂|` sitting at `ξ < -δ`, i.e. on the wrong side of the
    /// origin by more than the window resolution. Zero when `m̂` vanishes.
    pub fn negative_side_fraction(&self) -> f64 {
        let total: f64 = self.values.iter().map(|c| c.norm()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let neg: f64 = self
            .xi_grid
            .iter()
            .zip(&self.values)
            .filter(|(xi, _)| **xi < -self.delta)
            .map(|(_, c)| c.norm())
            .sum();
        neg / total
    }
}

const MAX_SWEEPS: usize = 500;
const PANEL_NODES: usize = 5;

/// Precomputed panel geometry shared by every `λ`.
struct Panels<T> {
    h: T,
    /// Offsets of the GL nodes within a panel.
    offsets: Vec<T>,
    weights: Vec<T>,
    /// `V` at the GL nodes, per panel.
    v_nodes: Vec<Vec<T>>,
    /// First stencil node of the cubic interpolant, per panel.
    stencil: Vec<usize>,
    /// Lagrange basis values `[q][s]`, per panel.
    lagrange: Vec<Vec<[T; 4]>>,
}

impl<T: Real> Panels<T> {
    fn new(v: &Potential<T>, grid: &XGrid<T>, mirrored: bool) -> Self {
        let gl = GaussLegendre::<T>::new(PANEL_NODES);
        let h = grid.step;
        let half = h / lit(2.0);
        let offsets: Vec<T> = gl.nodes.iter().map(|s| half * (T::one() + *s)).collect();
        let weights: Vec<T> = gl.weights.iter().map(|w| *w * half).collect();
        let n = grid.len;
        let mut v_nodes = Vec::with_capacity(n - 1);
        let mut stencil = Vec::with_capacity(n - 1);
        let mut lagrange = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            let x0 = grid.at(i);
            v_nodes.push(
                offsets
                    .iter()
                    .map(|u| {
                        let x = x0 + *u;
                        if mirrored {
                            v.value(-x)
                        } else {
                            v.value(x)
                        }
                    })
                    .collect(),
            );
            let j0 = i.saturating_sub(1).min(n - 4);
            stencil.push(j0);
            let nodes: Vec<T> = (0..4).map(|s| grid.at(j0 + s)).collect();
            lagrange.push(
                offsets
                    .iter()
                    .map(|u| {
                        let x = x0 + *u;
                        let mut basis = [T::zero(); 4];
                        for (s, b) in basis.iter_mut().enumerate() {
                            let mut p = T::one();
                            for (r, xr) in nodes.iter().enumerate() {
                                if r != s {
                                    p = p * (x - *xr) / (nodes[s] - *xr);
                                }
                            }
                            *b = p;
                        }
                        basis
                    })
                    .collect(),
            );
        }
        Self { h, offsets, weights, v_nodes, stencil, lagrange }
    }
}

/// `D_λ(u) = e^{iλu} sin(λu)/λ`, equal to `u` at `λ = 0`.
fn d_kernel<T: Real>(lambda: T, u: T) -> Complex<T> {
    let a = lambda * u;
    let sinc_u = if a.abs() < lit(1e-8) { u * (T::one() - a * a / lit(6.0)) } else { a.sin() / lambda };
    Complex::from_polar(T::one(), a) * sinc_u
}

/// `(m, ∂x m, last iterate change, sweeps)` for one `λ`.
type SingleSolve<T> = (Vec<Complex<T>>, Vec<Complex<T>>, T, usize);

/// Solves the `m₊` Volterra equation for one `λ` on `grid`.
fn solve_plus_single<T: Real>(panels: &Panels<T>, n: usize, lambda: T, tol: T) -> Result<SingleSolve<T>> {
    let zero = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    // Per-panel weights against the four stencil values.
    let mut wd = vec![[zero; 4]; n - 1];
    let mut we = vec![[zero; 4]; n - 1];
    let mut w1 = vec![[T::zero(); 4]; n - 1];
    let dk: Vec<Complex<T>> = panels.offsets.iter().map(|u| d_kernel(lambda, *u)).collect();
    let ek: Vec<Complex<T>> = panels
        .offsets
        .iter()
        .map(|u| Complex::from_polar(T::one(), lit::<T>(2.0) * lambda * *u))
        .collect();
    for i in 0..n - 1 {
        for q in 0..panels.offsets.len() {
            let base = panels.weights[q] * panels.v_nodes[i][q];
            if base == T::zero() {
                continue;
            }
            for s in 0..4 {
                let c = base * panels.lagrange[i][q][s];
                wd[i][s] += dk[q] * c;
                we[i][s] += ek[q] * c;
                w1[i][s] += c;
            }
        }
    }
    let shift = Complex::from_polar(T::one(), lit::<T>(2.0) * lambda * panels.h);
    let d_h = d_kernel(lambda, panels.h);

    let mut m = vec![one; n];
    let mut mx = vec![zero; n];
    let mut residual = T::infinity();
    for sweep in 1..=MAX_SWEEPS {
        let (mut q_acc, mut p_acc, mut b_acc) = (zero, zero, zero);
        let mut diff = T::zero();
        for i in (0..n - 1).rev() {
            let j0 = panels.stencil[i];
            let (mut ld, mut le, mut l1) = (zero, zero, zero);
            for s in 0..4 {
                let ms = m[j0 + s];
                ld += ms * wd[i][s];
                le += ms * we[i][s];
                l1 += ms * w1[i][s];
            }
            q_acc = ld + shift * q_acc + d_h * b_acc;
            p_acc = le + shift * p_acc;
            b_acc = l1 + b_acc;
            let new = one + q_acc;
            diff = diff.max((new - m[i]).norm());
            m[i] = new;
            mx[i] = -p_acc;
        }
        residual = diff;
        if !residual.is_finite() {
            break;
        }
        if residual < tol {
            return Ok((m, mx, residual, sweep));
        }
    }
    Err(Error::NoConvergence { iterations: MAX_SWEEPS, residual: to_f64(residual) })
}

/// Solves for `m±(λ, x)` on `lambda_grid × x_grid`.
///
/// The internal grid extends past the requested range up to the matching
/// point beyond which `∫ (1+|y|)|V(y)| dy` is negligible.
pub fn solve_jost<T: Real>(
    v: &Potential<T>,
    side: Side,
    lambda_grid: &[T],
    x_grid: XGrid<T>,
    tol: T,
) -> Result<JostTable<T>> {
    if v.dimension != Dimension::One {
        return invalid("Jost solutions are one-dimensional");
    }
    if lambda_grid.iter().any(|l| !l.is_finite()) {
        return invalid("λ grid contains non-finite values");
    }
    if x_grid.len < 4 {
        return invalid("x grid needs at least four points");
    }
    let l11 = v.weighted_l1_norm(T::one(), None)?;
    if !l11.value.is_finite() {
        return invalid("potential is not in L¹₁");
    }
    // Work in the coordinate where the asymptotic end is +∞.
    let mirrored = side == Side::Minus;
    let (lo, hi) = if mirrored { (-x_grid.end(), -x_grid.start) } else { (x_grid.start, x_grid.end()) };
    let (_, reach) = v.truncation_interval(T::one());
    let reach = if mirrored { -v.truncation_interval(T::one()).0 } else { reach };
    let extra = if reach > hi { to_f64((reach - hi) / x_grid.step).ceil() as usize + 1 } else { 0 };
    let work = XGrid { start: lo, step: x_grid.step, len: x_grid.len + extra };
    let panels = Panels::new(v, &work, mirrored);
    let n = work.len;

    let solved: Vec<_> = lambda_grid
        .par_iter()
        .map(|&lambda| solve_plus_single(&panels, n, lambda, tol))
        .collect::<Result<Vec<_>>>()?;

    let keep = x_grid.len;
    let mut m_values = Vec::with_capacity(lambda_grid.len() * keep);
    let mut m_x_derivative = Vec::with_capacity(lambda_grid.len() * keep);
    let mut residual_norm = Vec::with_capacity(lambda_grid.len());
    let mut sweeps = Vec::with_capacity(lambda_grid.len());
    for (m, mx, res, it) in solved {
        if mirrored {
            // m₋(x) = m̃(-x), ∂x m₋(x) = -∂x m̃(-x); requested x_i maps to work index keep-1-i.
            for i in 0..keep {
                m_values.push(m[keep - 1 - i]);
                m_x_derivative.push(-mx[keep - 1 - i]);
            }
        } else {
            m_values.extend_from_slice(&m[..keep]);
            m_x_derivative.extend_from_slice(&mx[..keep]);
        }
        residual_norm.push(res);
        sweeps.push(it);
    }
    Ok(JostTable {
        side,
        lambda_grid: lambda_grid.to_vec(),
        x_grid,
        m_values,
        m_x_derivative,
        residual_norm,
        sweeps,
        tolerance: tol,
    })
}

impl<T: Real> JostTable<T> {
    pub fn lambda_index(&self, lambda: T) -> Option<usize> {
        let scale = T::one().max(lambda.abs());
        self.lambda_grid
            .iter()
            .position(|l| (*l - lambda).abs() <= lit::<T>(1e-12) * scale)
    }

    pub fn x_index(&self, x: T) -> Option<usize> {
        let pos = (x - self.x_grid.start) / self.x_grid.step;
        let r = pos.round();
        if (pos - r).abs() < lit(1e-9) && r >= T::zero() && to_f64(r) < self.x_grid.len as f64 {
            Some(to_f64(r) as usize)
        } else {
            None
        }
    }

    pub fn m_row(&self, il: usize) -> &[Complex<T>] {
        let n = self.x_grid.len;
        &self.m_values[il * n..(il + 1) * n]
    }

    pub fn mx_row(&self, il: usize) -> &[Complex<T>] {
        let n = self.x_grid.len;
        &self.m_x_derivative[il * n..(il + 1) * n]
    }

    /// `(m, ∂x m)` at arbitrary `x` inside the grid (cubic interpolation,
    /// exact at nodes).
    pub fn sample(&self, il: usize, x: T) -> Result<(Complex<T>, Complex<T>)> {
        let g = &self.x_grid;
        let tol = g.step * lit(1e-9);
        if x < g.start - tol || x > g.end() + tol {
            return invalid(format!("x = {} outside the table range", to_f64(x)));
        }
        if let Some(i) = self.x_index(x) {
            return Ok((self.m_row(il)[i], self.mx_row(il)[i]));
        }
        let pos = to_f64((x - g.start) / g.step);
        let i = (pos.floor() as usize).min(g.len - 2);
        let j0 = i.saturating_sub(1).min(g.len - 4);
        let (mut m, mut mx) = (Complex::new(T::zero(), T::zero()), Complex::new(T::zero(), T::zero()));
        for s in 0..4 {
            let mut p = T::one();
            for r in 0..4 {
                if r != s {
                    p = p * (x - g.at(j0 + r)) / (g.at(j0 + s) - g.at(j0 + r));
                }
            }
            m += self.m_row(il)[j0 + s] * p;
            mx += self.mx_row(il)[j0 + s] * p;
        }
        Ok((m, mx))
    }

    /// `(f, ∂x f)` with `f = e^{±iλx} m`.
    pub fn f_and_derivative(&self, il: usize, x: T) -> Result<(Complex<T>, Complex<T>)> {
        let lambda = self.lambda_grid[il];
        let sgn: T = self.side.sign();
        let (m, mx) = self.sample(il, x)?;
        let e = Complex::from_polar(T::one(), sgn * lambda * x);
        let i_lam = Complex::new(T::zero(), sgn * lambda);
        Ok((e * m, e * (i_lam * m + mx)))
    }

    /// Sup over the grid of `|-f'' + (V - λ²) f|`. With `f = e^{±iλx} m` this
    /// is `|m'' ± 2iλ m' - V m|`; `m''` is an eighth-order difference of
    /// `m`, whose only fast component is the reflected `e^{∓2iλx}`, so the
    /// check stays sharp at large `|λ|`. Nodes within four steps of a
    /// discontinuity of `V` or of the grid ends are skipped.
    pub fn ode_residual(&self, v: &Potential<T>, il: usize) -> T {
        let g = &self.x_grid;
        let lambda = self.lambda_grid[il];
        let two_i_lam = Complex::new(T::zero(), lit::<T>(2.0) * self.side.sign::<T>() * lambda);
        let (m, mx) = (self.m_row(il), self.mx_row(il));
        let h2 = g.step * g.step;
        let breaks = v.breakpoints();
        let mut worst = T::zero();
        const STENCIL: [f64; 5] = [-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0];
        for i in 4..g.len.saturating_sub(4) {
            let x = g.at(i);
            if breaks.iter().any(|b| (*b - x).abs() < g.step * lit(4.5)) {
                continue;
            }
            let mut m2 = m[i] * lit::<T>(STENCIL[0]);
            for (k, c) in STENCIL.iter().enumerate().skip(1) {
                m2 += (m[i + k] + m[i - k]) * lit::<T>(*c);
            }
            let m2 = m2 / h2;
            let r = m2 + two_i_lam * mx[i] - m[i] * v.value(x);
            worst = worst.max(r.norm());
        }
        worst
    }

    /// Largest `|m(-λ, x) - conj m(λ, x)|` over `±λ` pairs present in the grid.
    pub fn conjugation_defect(&self) -> T {
        let mut worst = T::zero();
        for (il, &l) in self.lambda_grid.iter().enumerate() {
            if l <= T::zero() {
                continue;
            }
            if let Some(jl) = self.lambda_index(-l) {
                for (a, b) in self.m_row(il).iter().zip(self.m_row(jl)) {
                    worst = worst.max((a.conj() - *b).norm());
                }
            }
        }
        worst
    }

    /// `sup_x |m(λ, x) - 1|` per `λ`.
    pub fn sup_deviation(&self) -> Vec<T> {
        (0..self.lambda_grid.len())
            .map(|il| {
                self.m_row(il)
                    .iter()
                    .map(|m| (*m - Complex::new(T::one(), T::zero())).norm())
                    .fold(T::zero(), |a, b| a.max(b))
            })
            .collect()
    }

    /// CSV export: `side, lambda, x, re_m, im_m, re_mx, im_mx`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["side", "lambda", "x", "re_m", "im_m", "re_mx", "im_mx"])?;
        for (il, l) in self.lambda_grid.iter().enumerate() {
            for i in 0..self.x_grid.len {
                let m = self.m_row(il)[i];
                let mx = self.mx_row(il)[i];
                w.write_record([
                    self.side.label().to_string(),
                    format!("{:.17e}", to_f64(*l)),
                    format!("{:.17e}", to_f64(self.x_grid.at(i))),
                    format!("{:.17e}", to_f64(m.re)),
                    format!("{:.17e}", to_f64(m.im)),
                    format!("{:.17e}", to_f64(mx.re)),
                    format!("{:.17e}", to_f64(mx.im)),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// `I(ξ)` on the given grid.
pub fn decay_majorant<T: Real>(v: &Potential<T>, xi_grid: &[T]) -> Result<DecayMajorant<T>> {
    if xi_grid.iter().any(|x| *x < T::zero() || !x.is_finite()) {
        return invalid("ξ values must be finite and non-negative");
    }
    let mut i_values = Vec::with_capacity(xi_grid.len());
    for xi in xi_grid {
        i_values.push(lit(v.tail_mass(*xi)?));
    }
    Ok(DecayMajorant { xi_grid: xi_grid.to_vec(), i_values })
}

impl JostTable<f64> {
    /// Fourier transform `m̂(ξ) = (2π)⁻¹ ∫ w(λ) (m(λ, x) - 1) e^{-iλξ} dλ`
    /// at fixed `x`, with the smooth window `w(λ) = χ(2λ/Λ)` where `Λ` is
    /// the half-width of the (uniform) λ grid.
    pub fn m_fourier_side(&self, x: f64, xi_grid: &[f64]) -> Result<FourierSide> {
        let g = &self.x_grid;
        if x < g.start - 1e-12 || x > g.end() + 1e-12 {
            return invalid(format!("x = {x} outside the table range"));
        }
        let n = self.lambda_grid.len();
        if n < 8 {
            return invalid("λ grid too short for a Fourier transform");
        }
        let dl = self.lambda_grid[1] - self.lambda_grid[0];
        if self.lambda_grid.windows(2).any(|w| ((w[1] - w[0]) - dl).abs() > 1e-9 * dl.abs().max(1.0)) {
            return invalid("Fourier side needs a uniform λ grid");
        }
        let half = self.lambda_grid[n - 1].abs().min(self.lambda_grid[0].abs());
        let samples: Vec<Complex<f64>> = (0..n)
            .map(|il| {
                let (m, _) = self.sample(il, x)?;
                let w = bump(2.0 * self.lambda_grid[il] / half);
                Ok((m - 1.0) * w)
            })
            .collect::<Result<_>>()?;
        let values = xi_grid
            .iter()
            .map(|xi| {
                let mut acc = Complex::new(0.0, 0.0);
                for (l, s) in self.lambda_grid.iter().zip(&samples) {
                    acc += s * Complex::from_polar(1.0, -l * xi);
                }
                acc * dl / (2.0 * std::f64::consts::PI)
            })
            .collect();
        Ok(FourierSide {
            x,
            xi_grid: xi_grid.to_vec(),
            values,
            window: format!("chi(2*lambda/{half}) with {}", crate::cutoff::BUMP_FORMULA),
            delta: 4.0 * std::f64::consts::PI / half,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt2() -> Potential<f64> {
        Potential::poschl_teller(Dimension::One, 2.0).unwrap()
    }

    #[test]
    fn zero_potential_gives_unit_profile() {
        let v = Potential::<f64>::zero(Dimension::One);
        let grid = XGrid::spanning(-3.0, 3.0, 0.05).unwrap();
        let t = solve_jost(&v, Side::Plus, &[-1.0, 0.0, 2.0], grid, 1e-12).unwrap();
        assert!(t.m_values.iter().all(|m| (*m - 1.0).norm() == 0.0));
        assert!(t.m_x_derivative.iter().all(|m| m.norm() == 0.0));
    }

    #[test]
    fn poschl_teller_matches_closed_form() {
        // m₊(λ, x) = (λ + i tanh x)/(λ + i) for V = -2 sech² x.
        let grid = XGrid::spanning(-5.0, 5.0, 0.01).unwrap();
        let lambdas = [1.0, 0.5, -0.7];
        for side in [Side::Plus, Side::Minus] {
            let t = solve_jost(&pt2(), side, &lambdas, grid, 1e-13).unwrap();
            for (il, &l) in lambdas.iter().enumerate() {
                for i in (0..grid.len).step_by(37) {
                    let x = grid.at(i);
                    let s = side.sign::<f64>();
                    let exact = (Complex::new(l, 0.0) + Complex::new(0.0, s * x.tanh())) / Complex::new(l, 1.0);
                    assert!((t.m_row(il)[i] - exact).norm() < 1e-9, "side {side:?} λ={l} x={x}");
                }
            }
        }
    }

    #[test]
    fn solver_rejects_bad_lambda() {
        let grid = XGrid::spanning(-1.0, 1.0, 0.1).unwrap();
        assert!(solve_jost(&pt2(), Side::Plus, &[f64::NAN], grid, 1e-10).is_err());
    }

    #[test]
    fn ode_residual_and_conjugation() {
        let v = Potential::gaussian(Dimension::One, 1.0, 1.0).unwrap();
        let grid = XGrid::spanning(-4.0, 4.0, 0.01).unwrap();
        let lambdas = [-1.5, -0.5, 0.0, 0.5, 1.5];
        let t = solve_jost(&v, Side::Plus, &lambdas, grid, 1e-12).unwrap();
        for (il, lambda) in lambdas.iter().enumerate() {
            assert!(t.residual_norm[il] < 1e-12);
            let r = t.ode_residual(&v, il);
            assert!(r < 1e-6, "λ={lambda} residual {r}");
        }
        assert!(t.conjugation_defect() < 1e-12);
    }

    #[test]
    fn fourier_side_lives_on_positive_xi() {
        let v = Potential::boxed(Dimension::One, 1.0, 1.0).unwrap();
        let lambdas: Vec<f64> = (0..=3200).map(|i| -80.0 + i as f64 * 0.05).collect();
        let grid = XGrid::spanning(-0.5, 0.5, 0.01).unwrap();
        let xi: Vec<f64> = (0..=2400).map(|i| -30.0 + i as f64 * 0.025).collect();
        for side in [Side::Plus, Side::Minus] {
            let t = solve_jost(&v, side, &lambdas, grid, 1e-12).unwrap();
            let f = t.m_fourier_side(0.0, &xi).unwrap();
            assert!(f.negative_side_fraction() < 1e-3, "{side:?}: {}", f.negative_side_fraction());
        }
        assert!(solve_jost(&v, Side::Plus, &lambdas[..4], grid, 1e-12).unwrap().m_fourier_side(0.0, &xi).is_err());
    }

    #[test]
    fn large_lambda_flattening() {
        let v = Potential::gaussian(Dimension::One, 1.0, 1.0).unwrap();
        let norm = v.weighted_l1_norm(0.0, None).unwrap().value;
        let grid = XGrid::spanning(0.0, 4.0, 0.005).unwrap();
        let t = solve_jost(&v, Side::Plus, &[50.0], grid, 1e-14).unwrap();
        assert!(t.sup_deviation()[0] <= 0.05 * norm);
    }

    #[test]
    fn decay_majorant_values() {
        let b = Potential::boxed(Dimension::One, 1.0, 1.0).unwrap();
        let d = decay_majorant::<f64>(&b, &[0.0, 0.5, 2.0]).unwrap();
        assert!((d.i_values[0] - 2.0).abs() < 1e-12);
        assert!((d.i_values[1] - 1.0).abs() < 1e-12);
        assert_eq!(d.i_values[2], 0.0);
        assert!(decay_majorant(&b, &[-1.0]).is_err());
    }

    #[test]
    fn csv_export_has_expected_columns() {
        let grid = XGrid::spanning(-1.0, 1.0, 0.25).unwrap();
        let t = solve_jost(&pt2(), Side::Minus, &[1.0], grid, 1e-12).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("side,lambda,x,re_m,im_m,re_mx,im_mx"));
        assert_eq!(text.lines().count(), 1 + grid.len);
    }
}
