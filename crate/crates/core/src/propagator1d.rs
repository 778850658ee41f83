//! Spectral assembly of `e^{itH} P_ac(x, y)` in one dimension:
//!
//! `K(t, x, y) = (πi)⁻¹ ∫_ℝ e^{itk²} k R(k)(x, y) dk`,
//! `R(k)(x, y) = f₊(k, max) f₋(k, min) / W(k)`,
//!
//! split by `χ(k/k₀) + (1 - χ(k/k₀)) = 1` and truncated by `χ(k/Λ)`. The low
//! part is built from Jost tables; the high part from the first Born terms
//! of `R = Σ (-1)ⁿ R₀ (V R₀)ⁿ` with a certified geometric tail.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cutoff::CutoffSpec;
use crate::error::{invalid, Error, Result};
use crate::jost::{solve_jost, Side, XGrid};
use crate::oracle::{KernelGrid, KernelSource};
use crate::potentials::{Dimension, Potential};
use crate::quad::{ChirpRule, GaussLegendre};
use crate::scattering::{classify_zero_energy, Classification, ScatteringData, ZeroEnergy};

type C64 = Complex<f64>;

const I: C64 = Complex { re: 0.0, im: 1.0 };

/// Below this `|β(0)|` the resonant reduction is refused.
pub const BETA_FLOOR: f64 = 1e-8;

/// Free kernel `(4πit)^{-1/2} e^{-ir²/4t}` of `e^{-itΔ}`.
pub fn free_kernel(t: f64, r: f64) -> C64 {
    let k = Complex::from_polar((4.0 * std::f64::consts::PI * t.abs()).powf(-0.5), std::f64::consts::FRAC_PI_4)
        * Complex::from_polar(1.0, -r * r / (4.0 * t.abs()));
    if t < 0.0 {
        k.conj()
    } else {
        k
    }
}

/// `(πi)⁻¹ ∫ e^{i(tk² + rk)} (i/2) w(k) dk` by plain composite
/// Gauss–Legendre on `[-b, b]`: the free kernel filtered by an even weight.
pub fn filtered_free_kernel_direct<F: Fn(f64) -> f64>(t: f64, r: f64, weight: F, b: f64, panels: usize) -> C64 {
    let gl = GaussLegendre::<f64>::new(16);
    let h = 2.0 * b / panels as f64;
    let mut acc = Complex::new(0.0, 0.0);
    for p in 0..panels {
        let (lo, hi) = (-b + h * p as f64, -b + h * (p + 1) as f64);
        for (s, w) in gl.nodes.iter().zip(&gl.weights) {
            let k = 0.5 * (lo + hi) + 0.5 * (hi - lo) * s;
            acc += Complex::from_polar(w * 0.5 * (hi - lo) * weight(k), t * k * k + r * k);
        }
    }
    acc / (2.0 * std::f64::consts::PI)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagatorSettings {
    /// Momentum truncation `Λ`.
    pub truncation: f64,
    /// Energy split `λ₀`; `‖V‖₁²` (floor 0.25) when absent.
    pub lambda0: Option<f64>,
    /// Largest `|t|` the chirp panels are sized for.
    pub t_max: f64,
    pub born_terms: usize,
    pub nodes_per_panel: usize,
    pub jost_step: f64,
    pub jost_tol: f64,
    pub eps_res: f64,
    /// Largest acceptable certified Born tail (kernel units).
    pub tail_tolerance: f64,
    /// Panel width of the spatial quadrature in the Born terms.
    pub born_panel_width: f64,
}

impl Default for PropagatorSettings {
    fn default() -> Self {
        Self {
            truncation: 4.0,
            lambda0: None,
            t_max: 50.0,
            born_terms: 2,
            nodes_per_panel: 12,
            jost_step: 0.01,
            jost_tol: 1e-12,
            eps_res: 1e-4,
            tail_tolerance: 0.1,
            born_panel_width: 0.25,
        }
    }
}

/// One kernel value with its parts.
#[derive(Debug, Clone)]
pub struct KernelValue {
    pub value: C64,
    pub low: C64,
    /// Born term contributions, `n = 0..=N`.
    pub born: Vec<C64>,
    pub tail_bound: f64,
    /// Quadrature resolution gauge.
    pub quad_error: f64,
}

/// `1/(-2iβ(k))` on a set of momenta, with `β(0)` extrapolated.
#[derive(Debug, Clone)]
pub struct ReducedDenominator {
    pub lambda: Vec<f64>,
    pub values: Vec<C64>,
    pub beta_at_zero: C64,
}

/// Rewrites `k/W(k)` as `1/(-2iβ(k))`, bounded through `k = 0` at a
/// resonance. Requires a resonant zero-energy verdict.
pub fn resonant_reduction(s: &ScatteringData, zero: &ZeroEnergy) -> Result<ReducedDenominator> {
    if zero.classification != Classification::Resonant {
        return Err(Error::Precondition("resonant reduction needs a resonant zero energy".into()));
    }
    let b0 = zero
        .beta_at_zero
        .map(|b| Complex::new(b[0], b[1]))
        .ok_or_else(|| Error::Precondition("β(0) could not be extrapolated".into()))?;
    if b0.norm() < BETA_FLOOR {
        return Err(Error::Singular(format!("|β(0)| = {:.3e} below floor", b0.norm())));
    }
    let values = s
        .lambda_grid
        .iter()
        .zip(&s.beta)
        .map(|(l, b)| if *l == 0.0 { 1.0 / (-2.0 * I * b0) } else { 1.0 / (-2.0 * I * b) })
        .collect();
    Ok(ReducedDenominator { lambda: s.lambda_grid.clone(), values, beta_at_zero: b0 })
}

/// Precomputed spectral propagator on a fixed set of spatial points.
#[derive(Debug, Clone)]
pub struct SpectralPropagator {
    pub points: Vec<f64>,
    pub cut: CutoffSpec,
    pub settings: PropagatorSettings,
    pub zero_energy: ZeroEnergy,
    pub l1_norm: f64,
    /// Certified bound on the discarded Born terms (kernel units).
    pub tail_bound: f64,
    low_rule: Option<ChirpRule<f64>>,
    /// `[pair][node]`, pairs `a ≤ b` packed.
    low_amp: Vec<Vec<C64>>,
    high_rules: Vec<ChirpRule<f64>>,
    /// `[n][pair][node over all high rules]`.
    born_amp: Vec<Vec<Vec<C64>>>,
}

fn pair_index(n: usize, a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    a * n - a * (a + 1) / 2 + b
}

impl SpectralPropagator {
    pub fn new(v: &Potential<f64>, points: &[f64], settings: PropagatorSettings) -> Result<Self> {
        if v.dimension != Dimension::One {
            return invalid("the spectral propagator is one-dimensional");
        }
        if points.is_empty() || points.iter().any(|p| !p.is_finite()) {
            return invalid("need finite evaluation points");
        }
        if !(settings.truncation > 0.0) || !(settings.t_max >= 1.0) {
            return invalid("truncation must be positive and t_max at least 1");
        }
        if settings.born_terms > 4 {
            return invalid("at most four Born terms are supported");
        }
        let l1_norm = v.weighted_l1_norm(0.0, None)?.value;
        let l11 = v.weighted_l1_norm(1.0, None)?.value;
        let mut cut = CutoffSpec::for_potential(l1_norm, settings.truncation);
        if let Some(l0) = settings.lambda0 {
            if !(l0 > 0.0) {
                return invalid("λ₀ must be positive");
            }
            cut.lambda0 = l0;
        }
        let (lo_p, hi_p) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(*p), b.max(*p)));
        let (v_lo, v_hi) = v.truncation_interval(0.0);
        // Longest extra path of a reflected wave, which sets the amplitude
        // oscillation in k.
        let reach = if v.is_zero() { 0.0 } else { 2.0 * (hi_p.abs().max(lo_p.abs()) + v_hi.abs().max(v_lo.abs())) };
        let npp = settings.nodes_per_panel;
        let mut half = ChirpRule::<f64>::half_width_for(settings.t_max, 0.1);
        if reach > 0.0 {
            // Keeps the per-panel amplitude phase within what `npp` Legendre
            // modes resolve.
            half = half.min(npp as f64 / (6.0 * reach));
        }

        // Low part.
        let low_edge = cut.low_support().min(cut.high_support());
        let low_rule = ChirpRule::new(-low_edge, low_edge, half, npp);
        let ks = low_rule.points();
        let x_lo = lo_p.min(0.0) - 0.05;
        let x_hi = hi_p.max(0.0) + 0.05;
        let grid = XGrid::spanning(x_lo, x_hi, settings.jost_step)?;
        // λ = 0 is appended for the classification.
        let mut lambdas = ks.clone();
        lambdas.push(0.0);
        let plus = solve_jost(v, Side::Plus, &lambdas, grid, settings.jost_tol)?;
        let minus = solve_jost(v, Side::Minus, &lambdas, grid, settings.jost_tol)?;
        let x0 = grid.at(((0.0 - grid.start) / grid.step).round() as usize);
        let scat = ScatteringData::compute(&plus, &minus, x0)?;
        let zero_energy = classify_zero_energy(&scat, settings.eps_res, l11)?;
        let inv_den: Vec<C64> = match zero_energy.classification {
            Classification::Indeterminate => {
                return Err(Error::Precondition(format!(
                    "zero energy is indeterminate (|W(0)| = {:.3e}); refine eps_res",
                    Complex::new(zero_energy.w_at_zero[0], zero_energy.w_at_zero[1]).norm()
                )))
            }
            Classification::Resonant => resonant_reduction(&scat, &zero_energy)?.values[..ks.len()].to_vec(),
            Classification::Nonresonant => ks.iter().zip(&scat.w).map(|(k, w)| *k / w).collect(),
        };
        let n = points.len();
        let mut low_amp = Vec::with_capacity(n * (n + 1) / 2);
        let samples: Vec<Vec<(C64, C64)>> = points
            .iter()
            .map(|x| {
                (0..ks.len())
                    .map(|il| Ok((plus.sample(il, *x)?.0, minus.sample(il, *x)?.0)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let weights: Vec<C64> = ks
            .iter()
            .zip(&inv_den)
            .map(|(k, d)| d * (cut.low(*k) * cut.window(*k)) / (std::f64::consts::PI * I))
            .collect();
        for a in 0..n {
            for b in a..n {
                let (ilo, ihi) = if points[a] <= points[b] { (a, b) } else { (b, a) };
                low_amp.push(
                    (0..ks.len())
                        .map(|q| weights[q] * samples[ihi][q].0 * samples[ilo][q].1)
                        .collect(),
                );
            }
        }

        // High part.
        let mut high_rules = Vec::new();
        if cut.high_support() > cut.k0() {
            high_rules.push(ChirpRule::new(-cut.high_support(), -cut.k0(), half, npp));
            high_rules.push(ChirpRule::new(cut.k0(), cut.high_support(), half, npp));
        }
        let hk: Vec<f64> = high_rules.iter().flat_map(|r| r.points()).collect();
        let born_amp = born_amplitudes(v, points, &hk, &cut, settings.born_terms, settings.born_panel_width)?;

        // Certified tail: |term_m| ≤ ‖V‖₁^m/(2|k|)^{m+1}.
        let mut tail_bound = 0.0;
        for rule in &high_rules {
            let pts = rule.points();
            let w = &rule.filon.rule.weights;
            for (i, k) in pts.iter().enumerate() {
                let q = l1_norm / (2.0 * k.abs());
                if q >= 1.0 {
                    tail_bound = f64::INFINITY;
                    continue;
                }
                let geo = q.powi(settings.born_terms as i32 + 1) / (1.0 - q);
                tail_bound += w[i % npp] * rule.half_width * cut.high(*k) * cut.window(*k) * geo
                    / (2.0 * std::f64::consts::PI);
            }
        }
        if tail_bound > settings.tail_tolerance {
            return Err(Error::Precondition(format!(
                "certified Born tail {tail_bound:.3e} exceeds {:.3e}; raise λ₀ or the number of Born terms",
                settings.tail_tolerance
            )));
        }
        Ok(Self {
            points: points.to_vec(),
            cut,
            settings,
            zero_energy,
            l1_norm,
            tail_bound,
            low_rule: if ks.is_empty() { None } else { Some(low_rule) },
            low_amp,
            high_rules,
            born_amp,
        })
    }

    fn check(&self, t: f64, a: usize, b: usize) -> Result<()> {
        if !t.is_finite() || t.abs() > self.settings.t_max * (1.0 + 1e-12) {
            return invalid(format!("|t| = {t} exceeds t_max = {}", self.settings.t_max));
        }
        if a >= self.points.len() || b >= self.points.len() {
            return invalid("point index out of range");
        }
        Ok(())
    }

    /// Low-energy part with its quadrature gauge.
    pub fn low_energy_kernel(&self, t: f64, a: usize, b: usize) -> Result<(C64, f64)> {
        self.check(t, a, b)?;
        let r = (self.points[a] - self.points[b]).abs();
        Ok(match &self.low_rule {
            Some(rule) => rule.integrate_with_error(t, r, &self.low_amp[pair_index(self.points.len(), a, b)]),
            None => (Complex::new(0.0, 0.0), 0.0),
        })
    }

    /// Contribution of the `n`-th Born term to the high-energy part.
    pub fn born_term_kernel(&self, t: f64, a: usize, b: usize, n: usize) -> Result<(C64, f64)> {
        self.check(t, a, b)?;
        if n > self.settings.born_terms {
            return invalid(format!("Born term {n} was not precomputed"));
        }
        let r = (self.points[a] - self.points[b]).abs();
        let amp = &self.born_amp[n][pair_index(self.points.len(), a, b)];
        let (mut acc, mut err, mut off) = (Complex::new(0.0, 0.0), 0.0, 0);
        for rule in &self.high_rules {
            let (v, e) = rule.integrate_with_error(t, r, &amp[off..off + rule.len()]);
            acc += v;
            err += e;
            off += rule.len();
        }
        Ok((acc, err))
    }

    pub fn kernel(&self, t: f64, a: usize, b: usize) -> Result<KernelValue> {
        let (low, mut quad_error) = self.low_energy_kernel(t, a, b)?;
        let mut born = Vec::with_capacity(self.settings.born_terms + 1);
        for n in 0..=self.settings.born_terms {
            let (v, e) = self.born_term_kernel(t, a, b, n)?;
            born.push(v);
            quad_error += e;
        }
        let value = low + born.iter().sum::<C64>();
        Ok(KernelValue { value, low, born, tail_bound: self.tail_bound, quad_error })
    }

    pub fn kernel_grid(&self, t: f64) -> Result<KernelGrid> {
        let n = self.points.len();
        let mut values = vec![Complex::new(0.0, 0.0); n * n];
        for a in 0..n {
            for b in a..n {
                let k = self.kernel(t, a, b)?.value;
                values[a * n + b] = k;
                values[b * n + a] = k;
            }
        }
        Ok(KernelGrid { t, xs: self.points.clone(), ys: self.points.clone(), values, source: KernelSource::Spectral })
    }

    /// `sup_{x,y} |K_n|` for each Born term over the given times.
    pub fn born_term_sups(&self, times: &[f64]) -> Result<Vec<f64>> {
        let n = self.points.len();
        let mut sups = vec![0.0f64; self.settings.born_terms + 1];
        for t in times {
            for a in 0..n {
                for b in a..n {
                    for (m, s) in sups.iter_mut().enumerate() {
                        *s = s.max(self.born_term_kernel(*t, a, b, m)?.0.norm());
                    }
                }
            }
        }
        Ok(sups)
    }
}

/// Amplitudes `(πi)⁻¹ k w(k) (-1)ⁿ (i/2k)^{n+1} S_n(k; x, y)` with
/// `S_n = ∫ ΠV e^{ik(Φ - |x-y|)}`, `Φ = |x-x₁| + Σ|x_j - x_{j-1}| + |x_n-y|`.
fn born_amplitudes(
    v: &Potential<f64>,
    points: &[f64],
    ks: &[f64],
    cut: &CutoffSpec,
    terms: usize,
    panel_width: f64,
) -> Result<Vec<Vec<Vec<C64>>>> {
    let n = points.len();
    let pairs = n * (n + 1) / 2;
    let mut out = vec![vec![vec![Complex::new(0.0, 0.0); ks.len()]; pairs]; terms + 1];
    if ks.is_empty() {
        return Ok(out);
    }
    // Spatial nodes with breaks at the evaluation points so the kinks of
    // |x - x₁| fall on panel edges.
    let (nodes, wv) = if v.is_zero() || terms == 0 {
        (Vec::new(), Vec::new())
    } else {
        let (lo, hi) = v.truncation_interval(0.0);
        let mut breaks: Vec<f64> = vec![lo, hi];
        breaks.extend(points.iter().copied().filter(|p| *p > lo && *p < hi));
        breaks.extend(v.breakpoints().into_iter().filter(|p| *p > lo && *p < hi));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let mut fine = Vec::new();
        for w in breaks.windows(2) {
            let m = ((w[1] - w[0]) / panel_width).ceil().max(1.0) as usize;
            for j in 0..m {
                fine.push(w[0] + (w[1] - w[0]) * j as f64 / m as f64);
            }
        }
        fine.push(hi);
        let gl = GaussLegendre::<f64>::new(8);
        let (xs, ws) = gl.composite_points(&fine);
        let wv: Vec<f64> = xs.iter().zip(&ws).map(|(x, w)| w * v.value(*x)).collect();
        (xs, wv)
    };
    let m = nodes.len();
    let per_k: Vec<Vec<C64>> = ks
        .par_iter()
        .map(|&k| {
            let mut terms_k = vec![Complex::new(0.0, 0.0); (terms + 1) * pairs];
            let weight = cut.high(k) * cut.window(k);
            if weight == 0.0 {
                return terms_k;
            }
            let base = k * weight / (std::f64::consts::PI * I);
            let g = I / (2.0 * k);
            terms_k[..pairs].fill(base * g);
            if m == 0 {
                return terms_k;
            }
            let ep: Vec<C64> = points.iter().map(|x| Complex::from_polar(1.0, k * x)).collect();
            let en: Vec<C64> = nodes.iter().map(|x| Complex::from_polar(1.0, k * x)).collect();
            // e^{ik|a-b|} from the unit phases.
            let phase = |ea: C64, eb: C64, a: f64, b: f64| if a >= b { ea * eb.conj() } else { eb * ea.conj() };
            // Y[p][b] = V w_p e^{ik|x_p - y_b|}.
            let mut y: Vec<C64> = vec![Complex::new(0.0, 0.0); m * n];
            for p in 0..m {
                for b in 0..n {
                    y[p * n + b] = phase(en[p], ep[b], nodes[p], points[b]) * wv[p];
                }
            }
            let mut left = vec![Complex::new(0.0, 0.0); n * m];
            for a in 0..n {
                for p in 0..m {
                    left[a * m + p] = phase(ep[a], en[p], points[a], nodes[p]);
                }
            }
            let mut coeff = base * g;
            let mut cur = y;
            for term in 1..=terms {
                coeff *= -g;
                if term > 1 {
                    // cur ← diag(Vw) · M · cur with M = e^{ik|x_p - x_q|}; the
                    // nodes are sorted, so M splits into prefix and suffix sums.
                    let mut next = vec![Complex::new(0.0, 0.0); m * n];
                    let mut acc = vec![Complex::new(0.0, 0.0); n];
                    for p in 0..m {
                        let e = en[p].conj();
                        for b in 0..n {
                            acc[b] += e * cur[p * n + b];
                            next[p * n + b] = en[p] * acc[b];
                        }
                    }
                    acc.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
                    for p in (0..m).rev() {
                        let e = en[p].conj();
                        for b in 0..n {
                            next[p * n + b] = (next[p * n + b] + e * acc[b]) * wv[p];
                            acc[b] += en[p] * cur[p * n + b];
                        }
                    }
                    cur = next;
                }
                for a in 0..n {
                    let row = &left[a * m..(a + 1) * m];
                    for b in a..n {
                        let mut s = Complex::new(0.0, 0.0);
                        for p in 0..m {
                            s += row[p] * cur[p * n + b];
                        }
                        let undo = phase(ep[a], ep[b], points[a], points[b]).conj();
                        terms_k[term * pairs + pair_index(n, a, b)] = coeff * s * undo;
                    }
                }
            }
            terms_k
        })
        .collect();
    for (q, tk) in per_k.iter().enumerate() {
        for term in 0..=terms {
            for p in 0..pairs {
                out[term][p][q] = tk[term * pairs + p];
            }
        }
    }
    Ok(out)
}

/// `K(t, x, y)` for a single pair of points.
pub fn full_kernel(v: &Potential<f64>, t: f64, x: f64, y: f64, settings: PropagatorSettings) -> Result<KernelValue> {
    let p = SpectralPropagator::new(v, &[x, y], settings)?;
    p.kernel(t, 0, 1)
}

/// Start of the large-time regime used for the growth fit.
pub const LARGE_T: f64 = 10.0;

/// `C(t) = |t|^{1/2} max_{x,y} |K(t, x, y)|` over a time list.
#[derive(Debug, Clone, Serialize)]
pub struct DispersiveReport {
    pub per_t: Vec<(f64, f64)>,
    pub c_max: f64,
    /// Least-squares slope of `log C` against `log t` over `t ≥ LARGE_T`.
    pub growth_exponent: f64,
    /// The same slope over the whole list (includes the early transient).
    pub full_range_exponent: f64,
    pub cutoffs: CutoffSpec,
    pub tail_bound: f64,
    pub classification: Classification,
}

pub fn dispersive_constant(prop: &SpectralPropagator, t_list: &[f64]) -> Result<DispersiveReport> {
    if t_list.is_empty() || t_list.iter().any(|t| !(*t >= 1.0)) {
        return invalid("dispersive constant needs times t ≥ 1");
    }
    let mut per_t = Vec::with_capacity(t_list.len());
    for &t in t_list {
        per_t.push((t, t.sqrt() * prop.kernel_grid(t)?.sup_abs()));
    }
    let c_max = per_t.iter().map(|p| p.1).fold(0.0, f64::max);
    let slope_over = |pts: Vec<&(f64, f64)>| {
        if pts.len() < 2 {
            return 0.0;
        }
        let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
        crate::resolvent3d::fit::slope(&xs, &ys).0
    };
    let growth_exponent = slope_over(per_t.iter().filter(|p| p.0 >= LARGE_T).collect());
    let full_range_exponent = slope_over(per_t.iter().collect());
    Ok(DispersiveReport {
        per_t,
        c_max,
        growth_exponent,
        full_range_exponent,
        cutoffs: prop.cut,
        tail_bound: prop.tail_bound,
        classification: prop.zero_energy.classification,
    })
}

/// Sweep CSV: `t, x, y, re_K, im_K, abs_K, sqrt_t_abs_K`.
pub fn write_sweep_csv<W: Write>(grids: &[KernelGrid], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x", "y", "re_K", "im_K", "abs_K", "sqrt_t_abs_K"])?;
    for g in grids {
        for (i, x) in g.xs.iter().enumerate() {
            for (j, y) in g.ys.iter().enumerate() {
                let k = g.at(i, j);
                w.write_record(
                    [g.t, *x, *y, k.re, k.im, k.norm(), g.t.abs().sqrt() * k.norm()]
                        .iter()
                        .map(|v| format!("{v:.17e}")),
                )?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
