//! Brute-force reference: the Dirichlet finite-difference Hamiltonian on
//! `[-L, L]`, diagonalised densely. One decomposition yields the grid
//! propagator at every `t`, the bound states and a binned spectral density.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::cutoff::{bump, CutoffSpec};
use crate::error::{invalid, Error, Result};
use crate::jost::JostTable;
use crate::potentials::{Dimension, Potential};
use crate::scattering::green_kernel;

type C64 = Complex<f64>;

/// Largest interior grid accepted for a dense decomposition.
pub const MAX_GRID_POINTS: usize = 6000;

#[derive(Debug, Clone)]
pub struct GridHamiltonian {
    /// Interior nodes `-L + i h`, `0 < i < 2L/h`.
    pub x_grid: Vec<f64>,
    pub h: f64,
    pub half_length: f64,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal columns (ℓ² on the grid).
    pub eigenvectors: DMatrix<f64>,
}

/// Spectral weight applied to each mode before summation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Band {
    All,
    /// `χ(k/Λ)` on the continuum, `k = √E`.
    Window { truncation: f64 },
    /// Low-energy part `χ(k/k₀) χ(k/Λ)`.
    Low { cut: CutoffSpec },
    /// High-energy part `(1 - χ(k/k₀)) χ(k/Λ)`.
    High { cut: CutoffSpec },
}

impl Band {
    /// Weight of a mode with energy `e` (bound states get weight 1 unless
    /// the filter removes them).
    pub fn weight(&self, e: f64) -> f64 {
        if e < 0.0 {
            return match self {
                Band::High { .. } => 0.0,
                _ => 1.0,
            };
        }
        let k = e.sqrt();
        match self {
            Band::All => 1.0,
            Band::Window { truncation } => bump(k / truncation),
            Band::Low { cut } => cut.low(k) * cut.window(k),
            Band::High { cut } => cut.high(k) * cut.window(k),
        }
    }
}

/// Which modes enter the propagator sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeFilter {
    /// Drop `E < 0`.
    pub ac_only: bool,
    /// Zero-energy exclusion `|E| < eps_zero`, applied only when
    /// `resonant` is set.
    pub eps_zero: f64,
    pub resonant: bool,
    pub band: Band,
}

impl ModeFilter {
    pub fn full() -> Self {
        Self { ac_only: false, eps_zero: 0.0, resonant: false, band: Band::All }
    }

    pub fn ac(band: Band) -> Self {
        Self { ac_only: true, eps_zero: 0.0, resonant: false, band }
    }

    fn weight(&self, e: f64) -> f64 {
        if self.ac_only && e < 0.0 {
            return 0.0;
        }
        if self.ac_only && self.resonant && e.abs() < self.eps_zero {
            return 0.0;
        }
        self.band.weight(e)
    }
}

/// Default zero-energy exclusion `5 (π/L)²`.
pub fn default_eps_zero(half_length: f64) -> f64 {
    5.0 * (std::f64::consts::PI / half_length).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSource {
    Oracle,
    Spectral,
}

impl KernelSource {
    fn label(self) -> &'static str {
        match self {
            KernelSource::Oracle => "oracle",
            KernelSource::Spectral => "spectral",
        }
    }
}

/// Kernel values on a product grid `xs × ys` (row-major in `x`).
#[derive(Debug, Clone)]
pub struct KernelGrid {
    pub t: f64,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<C64>,
    pub source: KernelSource,
}

impl KernelGrid {
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.values[i * self.ys.len() + j]
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Sup-norm distance to a kernel on the same grid.
    pub fn sup_distance(&self, other: &KernelGrid) -> Result<f64> {
        if self.xs.len() != other.xs.len() || self.ys.len() != other.ys.len() {
            return invalid("kernel grids differ in shape");
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Appends rows `t, x, y, re_K, im_K, source`.
    pub fn write_rows<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        for (i, x) in self.xs.iter().enumerate() {
            for (j, y) in self.ys.iter().enumerate() {
                let k = self.at(i, j);
                w.write_record([
                    format!("{:.17e}", self.t),
                    format!("{x:.17e}"),
                    format!("{y:.17e}"),
                    format!("{:.17e}", k.re),
                    format!("{:.17e}", k.im),
                    self.source.label().to_string(),
                ])?;
            }
        }
        Ok(())
    }

    pub const CSV_HEADER: [&'static str; 6] = ["t", "x", "y", "re_K", "im_K", "source"];
}

/// Assembles and diagonalises `-D² + V` with Dirichlet ends.
pub fn build(v: &Potential<f64>, half_length: f64, h: f64) -> Result<GridHamiltonian> {
    if v.dimension != Dimension::One {
        return invalid("the grid oracle is one-dimensional");
    }
    if !(half_length > 0.0) || !(h > 0.0) || !half_length.is_finite() {
        return invalid("L and h must be positive and finite");
    }
    let (lo, hi) = v.truncation_interval(0.0);
    if lo < -half_length || hi > half_length {
        return Err(Error::Precondition(format!(
            "potential extends to [{lo:.3}, {hi:.3}], beyond the box [-{half_length}, {half_length}]"
        )));
    }
    let vmax = v.breakpoints().into_iter().chain((0..2001).map(|i| lo + (hi - lo) * i as f64 / 2000.0))
        .map(|x| v.value(x).abs())
        .fold(0.0, f64::max);
    if h >= 1.0 / (4.0 * vmax.sqrt() + 1.0) {
        return Err(Error::Precondition(format!(
            "h = {h} too coarse for max|V| = {vmax:.3}; need h < {:.4}",
            1.0 / (4.0 * vmax.sqrt() + 1.0)
        )));
    }
    let cells = (2.0 * half_length / h).round() as usize;
    if cells < 4 {
        return invalid("box too small for the grid spacing");
    }
    let n = cells - 1;
    if n > MAX_GRID_POINTS {
        return Err(Error::ResourceLimit(format!(
            "{n} grid points need {:.1} MiB for the dense matrix; limit is {MAX_GRID_POINTS} points",
            (n * n * 8) as f64 / (1024.0 * 1024.0)
        )));
    }
    let step = 2.0 * half_length / cells as f64;
    let x_grid: Vec<f64> = (1..=n).map(|i| -half_length + step * i as f64).collect();
    let off = -1.0 / (step * step);
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (i, x) in x_grid.iter().enumerate() {
        m[(i, i)] = -2.0 * off + v.value(*x);
        if i + 1 < n {
            m[(i, i + 1)] = off;
            m[(i + 1, i)] = off;
        }
    }
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]));
    let eigenvalues = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(GridHamiltonian { x_grid, h: step, half_length, eigenvalues, eigenvectors })
}

impl GridHamiltonian {
    pub fn negative_count(&self) -> usize {
        self.eigenvalues.iter().filter(|e| **e < 0.0).count()
    }

    /// `max |ΨᵀΨ - I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.eigenvectors.transpose() * &self.eigenvectors;
        let mut worst = 0.0f64;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// Index of the grid node nearest to `x`.
    pub fn nearest(&self, x: f64) -> Result<usize> {
        let pos = (x + self.half_length) / self.h;
        let i = pos.round() as isize - 1;
        if i < 0 || i as usize >= self.x_grid.len() {
            return invalid(format!("x = {x} outside the box interior"));
        }
        Ok(i as usize)
    }

    fn rows(&self, idx: &[usize]) -> DMatrix<f64> {
        let n = self.eigenvalues.len();
        DMatrix::from_fn(idx.len(), n, |a, j| self.eigenvectors[(idx[a], j)])
    }

    /// `K(t; x, y) = Σ_j w_j e^{itE_j} ψ_j(x) ψ_j(y) / h` on the grid nodes
    /// nearest to `xs × ys`.
    pub fn propagator(&self, t: f64, filter: &ModeFilter, xs: &[f64], ys: &[f64]) -> Result<KernelGrid> {
        if !t.is_finite() {
            return invalid("t must be finite");
        }
        let ix = xs.iter().map(|x| self.nearest(*x)).collect::<Result<Vec<_>>>()?;
        let iy = ys.iter().map(|y| self.nearest(*y)).collect::<Result<Vec<_>>>()?;
        let a = self.rows(&ix);
        let b = self.rows(&iy);
        let weights: Vec<f64> = self.eigenvalues.iter().map(|e| filter.weight(*e) / self.h).collect();
        let mut a_re = a.clone();
        let mut a_im = a;
        for (j, (e, w)) in self.eigenvalues.iter().zip(&weights).enumerate() {
            let (s, c) = (t * e).sin_cos();
            a_re.column_mut(j).scale_mut(w * c);
            a_im.column_mut(j).scale_mut(w * s);
        }
        let bt = b.transpose();
        let k_re = a_re * &bt;
        let k_im = a_im * &bt;
        let mut values = Vec::with_capacity(xs.len() * ys.len());
        for i in 0..xs.len() {
            for j in 0..ys.len() {
                values.push(Complex::new(k_re[(i, j)], k_im[(i, j)]));
            }
        }
        Ok(KernelGrid {
            t,
            xs: ix.iter().map(|i| self.x_grid[*i]).collect(),
            ys: iy.iter().map(|i| self.x_grid[*i]).collect(),
            values,
            source: KernelSource::Oracle,
        })
    }

    /// `e^{itH} ψ` for a grid vector `ψ`.
    pub fn evolve(&self, t: f64, psi: &[f64]) -> Result<Vec<C64>> {
        let n = self.eigenvalues.len();
        if psi.len() != n {
            return invalid("state length does not match the grid");
        }
        let coeff = self.eigenvectors.transpose() * nalgebra::DVector::from_column_slice(psi);
        let mut out = vec![Complex::new(0.0, 0.0); n];
        for j in 0..n {
            let c = Complex::from_polar(coeff[j], t * self.eigenvalues[j]);
            for (i, o) in out.iter_mut().enumerate() {
                *o += c * self.eigenvectors[(i, j)];
            }
        }
        Ok(out)
    }

    /// Spectral density per unit energy at `E = λ²` from the modes in the
    /// window `|E_j - λ²| < bin/2`.
    pub fn binned_density(&self, lambda: f64, x: f64, y: f64, bin: f64) -> Result<f64> {
        if !(lambda > 0.0) {
            return invalid("spectral density needs λ > 0");
        }
        if !(bin > 0.0) {
            return invalid("bin width must be positive");
        }
        let (ix, iy) = (self.nearest(x)?, self.nearest(y)?);
        let e = lambda * lambda;
        let mut acc = 0.0;
        for (j, ej) in self.eigenvalues.iter().enumerate() {
            if (ej - e).abs() < 0.5 * bin {
                acc += self.eigenvectors[(ix, j)] * self.eigenvectors[(iy, j)];
            }
        }
        Ok(acc / (self.h * bin))
    }
}

/// Spectral density `(2πi)⁻¹ [R(λ²+i0) - R(λ²-i0)](x, y)` per unit energy,
/// from the Jost tables.
pub fn stone_density(
    plus: &JostTable<f64>,
    minus: &JostTable<f64>,
    lambda: f64,
    x: f64,
    y: f64,
) -> Result<f64> {
    if !(lambda > 0.0) {
        return invalid("spectral density needs λ > 0");
    }
    let up = green_kernel(plus, minus, lambda, 1, x, y)?;
    let down = green_kernel(plus, minus, lambda, -1, x, y)?;
    Ok(((up - down) / Complex::new(0.0, 2.0 * std::f64::consts::PI)).re)
}

/// Both densities at one point: from the resolvent jump at `λ²` and from
/// oracle modes binned over `[λ² - bin/2, λ² + bin/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityPair {
    pub lambda: f64,
    pub from_resolvent: f64,
    pub from_oracle: f64,
}

pub fn density_pair(
    grid: &GridHamiltonian,
    plus: &JostTable<f64>,
    minus: &JostTable<f64>,
    lambda: f64,
    x: f64,
    y: f64,
    bin: f64,
) -> Result<DensityPair> {
    Ok(DensityPair {
        lambda,
        from_resolvent: stone_density(plus, minus, lambda, x, y)?,
        from_oracle: grid.binned_density(lambda, x, y, bin)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free_box() -> GridHamiltonian {
        build(&Potential::zero(Dimension::One), 20.0, 0.1).unwrap()
    }

    #[test]
    fn free_spectrum_is_positive_and_bounded() {
        let g = free_box();
        assert_eq!(g.negative_count(), 0);
        assert!(g.eigenvalues.iter().all(|e| *e > 0.0 && *e < 4.0 / (g.h * g.h)));
        assert!(g.orthonormality_defect() < 1e-10);
    }

    #[test]
    fn identity_at_time_zero_and_symmetry() {
        let g = free_box();
        let xs = [-1.0, 0.0, 0.5];
        let k = g.propagator(0.0, &ModeFilter::full(), &xs, &xs).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 / g.h } else { 0.0 };
                assert!((k.at(i, j) - target).norm() < 1e-9);
            }
        }
        let k = g.propagator(1.3, &ModeFilter::full(), &xs, &xs).unwrap();
        let km = g.propagator(-1.3, &ModeFilter::full(), &xs, &xs).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((k.at(i, j) - k.at(j, i)).norm() < 1e-12);
                assert!((km.at(i, j) - k.at(i, j).conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn evolution_is_unitary() {
        let g = free_box();
        let psi: Vec<f64> = g.x_grid.iter().map(|x| (-(x - 1.0) * (x - 1.0)).exp() * (1.0 + x.sin())).collect();
        let n0: f64 = psi.iter().map(|p| p * p).sum();
        let out = g.evolve(2.7, &psi).unwrap();
        let n1: f64 = out.iter().map(|p| p.norm_sqr()).sum();
        assert!((n0 - n1).abs() < 1e-8 * n0);
    }

    #[test]
    fn completeness_of_ac_and_bound_parts() {
        let v = Potential::poschl_teller(Dimension::One, 2.0).unwrap();
        let g = build(&v, 20.0, 0.05).unwrap();
        assert_eq!(g.negative_count(), 1);
        assert!((g.eigenvalues[0] + 1.0).abs() < 1e-3);
        let xs = [-0.5, 0.7];
        let full = g.propagator(0.9, &ModeFilter::full(), &xs, &xs).unwrap();
        let ac = g.propagator(0.9, &ModeFilter::ac(Band::All), &xs, &xs).unwrap();
        let e0 = g.eigenvalues[0];
        for i in 0..2 {
            for j in 0..2 {
                let (a, b) = (g.nearest(xs[i]).unwrap(), g.nearest(xs[j]).unwrap());
                let bound = Complex::from_polar(g.eigenvectors[(a, 0)] * g.eigenvectors[(b, 0)] / g.h, 0.9 * e0);
                assert!((full.at(i, j) - ac.at(i, j) - bound).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn rejections() {
        let v = Potential::gaussian(Dimension::One, 1.0, 1.0).unwrap();
        assert!(matches!(build(&v, 4.0, 0.05), Err(Error::Precondition(_))));
        assert!(matches!(build(&v, 40.0, 0.3), Err(Error::Precondition(_))));
        assert!(matches!(build(&v, 400.0, 0.05), Err(Error::ResourceLimit(_))));
        let g = free_box();
        assert!(g.binned_density(-1.0, 0.0, 0.0, 0.1).is_err());
    }
}
