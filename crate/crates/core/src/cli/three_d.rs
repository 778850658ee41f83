use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{require, require_positive, ExperimentConfig, NamedPotential};
use super::{failed, Context, Outcome, RunError, Verdict};
use crate::io::{num, Table};
use crate::potentials::{Dimension, FormConfig, PotentialConfig};
use crate::resolvent3d::ft_kernel::{ft_kernel_sweep, Cutoff, FtQuantity};
use crate::resolvent3d::kato::{default_probes, iterated_kato_bound};
use crate::resolvent3d::oscillatory::{
    log_times, stationary_phase_sweep, statphase_decay, AmplitudeModel, DecaySpec, PhaseGeometry, PhaseRegime, PhaseSign,
};
use crate::resolvent3d::s0::{coupling_scan, s0_invertibility, S0Class, S0Settings};
use crate::resolvent3d::{b_kernel_norm, b_kernel_rate, bprime_norm, hs_norm_r0, HsNorm, McSpec, Weights};

fn shape_3d(shape: FormConfig) -> PotentialConfig {
    PotentialConfig { dimension: 3, shape, scale: None, decay_exponent_hint: None }
}

fn check_weights(list: &[[f64; 2]], path: &str) -> Result<(), RunError> {
    for (i, w) in list.iter().enumerate() {
        require(w.iter().all(|x| x.is_finite()), &format!("{path}[{i}]"), "weights must be finite")?;
    }
    Ok(())
}

/// `(max - min) / max`.
fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    if hi == 0.0 {
        0.0
    } else {
        (hi - lo) / hi.abs()
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HsQuantity {
    R0,
    B,
    Bprime,
}

impl HsQuantity {
    fn label(self) -> &'static str {
        match self {
            HsQuantity::R0 => "r0",
            HsQuantity::B => "b",
            HsQuantity::Bprime => "bprime",
        }
    }

    fn evaluate(self, lambda: f64, w: Weights, mc: Option<McSpec>) -> crate::Result<HsNorm> {
        match self {
            HsQuantity::R0 => hs_norm_r0(w, lambda, 0, mc),
            HsQuantity::B => b_kernel_norm(lambda, w, mc),
            HsQuantity::Bprime => bprime_norm(lambda, w, mc),
        }
    }
}

/// One Monte Carlo cross-check cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McCell {
    pub quantity: HsQuantity,
    pub lambda: f64,
    pub sigma: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HsNormTableConfig {
    /// `(σ, α)` pairs for `R₀`.
    pub r0_weights: Vec<[f64; 2]>,
    pub r0_lambdas: Vec<f64>,
    pub bprime_weights: Vec<[f64; 2]>,
    pub bprime_lambdas: Vec<f64>,
    /// `(σ, α)` pairs for the vanishing-rate fit of `B`.
    pub b_weights: Vec<[f64; 2]>,
    pub b_lambdas: Vec<f64>,
    pub monte_carlo: Vec<McCell>,
    pub mc_samples: usize,
    pub spread_limit: f64,
    pub rate_tolerance: f64,
    pub mc_sigmas: f64,
}

impl Default for HsNormTableConfig {
    fn default() -> Self {
        Self {
            r0_weights: vec![[1.3, 1.3], [1.01, 1.01]],
            r0_lambdas: vec![0.0, 0.1, 1.0, 10.0],
            bprime_weights: vec![[2.01, 2.01], [2.01, 1.99]],
            bprime_lambdas: vec![0.0, 0.3, 5.0],
            b_weights: vec![[1.3, 1.3]],
            b_lambdas: vec![0.01, 0.0178, 0.0316, 0.0562, 0.1],
            monte_carlo: vec![
                McCell { quantity: HsQuantity::R0, lambda: 0.7, sigma: 1.3, alpha: 1.3 },
                McCell { quantity: HsQuantity::B, lambda: 0.5, sigma: 1.3, alpha: 1.3 },
            ],
            mc_samples: 1_000_000,
            spread_limit: 1e-12,
            rate_tolerance: 0.1,
            mc_sigmas: 3.0,
        }
    }
}

impl ExperimentConfig for HsNormTableConfig {
    fn validate(&self, _: &Path) -> Result<(), RunError> {
        check_weights(&self.r0_weights, "r0_weights")?;
        check_weights(&self.bprime_weights, "bprime_weights")?;
        check_weights(&self.b_weights, "b_weights")?;
        require(self.r0_lambdas.iter().all(|l| l.is_finite()), "r0_lambdas", "must be finite")?;
        require(self.bprime_lambdas.iter().all(|l| l.is_finite()), "bprime_lambdas", "must be finite")?;
        if !self.b_weights.is_empty() {
            require_positive(&self.b_lambdas, "b_lambdas")?;
            require(self.b_lambdas.len() >= 2, "b_lambdas", "the rate fit needs at least two values")?;
        }
        require(self.mc_samples >= 1000 || self.monte_carlo.is_empty(), "mc_samples", "must be at least 1000")?;
        require(self.mc_sigmas > 0.0, "mc_sigmas", "must be positive")
    }

    fn run(&self, ctx: &Context) -> Result<Outcome, RunError> {
        let mut out = Outcome::default();
        out.tolerance("lambda_spread", self.spread_limit);
        out.tolerance("rate_tolerance", self.rate_tolerance);
        out.tolerance("mc_sigmas", self.mc_sigmas);
        out.tolerance("fit_rms", crate::resolvent3d::hs::FIT_RMS_LIMIT);
        let mut table = Table::new("hs_norm_table", &["quantity", "lambda", "sigma", "alpha", "value", "stderr"]);
        let mut summary = serde_json::Map::new();

        for (q, weights, lambdas) in [
            (HsQuantity::R0, &self.r0_weights, &self.r0_lambdas),
            (HsQuantity::Bprime, &self.bprime_weights, &self.bprime_lambdas),
        ] {
            let rows = out.timed(&format!("{} norms", q.label()), || {
                weights
                    .par_iter()
                    .map(|[s, a]| {
                        lambdas
                            .iter()
                            .map(|l| q.evaluate(*l, Weights::new(*s, *a), None).map(|n| n.value))
                            .collect::<crate::Result<Vec<f64>>>()
                    })
                    .collect::<crate::Result<Vec<_>>>()
                    .map_err(failed("resolvent3d"))
            })?;
            for ([s, a], values) in weights.iter().zip(&rows) {
                for (l, v) in lambdas.iter().zip(values) {
                    table.push([q.label().to_string(), num(*l), num(*s), num(*a), num(*v), num(0.0)]);
                }
                let sp = spread(values);
                out.verdicts.push(Verdict::at_most(
                    format!("{} ({s}, {a}): lambda spread", q.label()),
                    sp,
                    self.spread_limit,
                    format!("relative spread {sp:.1e} over {} values of λ", values.len()),
                ));
            }
            summary.insert(format!("{}_norms", q.label()), json!(rows));
        }

        let fits = out.timed("b rate fits", || {
            self.b_weights
                .par_iter()
                .map(|[s, a]| b_kernel_rate(Weights::new(*s, *a), &self.b_lambdas))
                .collect::<crate::Result<Vec<_>>>()
                .map_err(failed("resolvent3d"))
        })?;
        for ([s, a], fit) in self.b_weights.iter().zip(&fits) {
            for (l, v) in fit.lambdas.iter().zip(&fit.norms) {
                table.push(["b".to_string(), num(*l), num(*s), num(*a), num(*v), num(0.0)]);
            }
            let gap = (fit.gamma_hat - fit.gamma_predicted).abs();
            out.verdicts.push(Verdict::at_most(
                format!("b ({s}, {a}): vanishing rate"),
                gap,
                self.rate_tolerance,
                format!("fitted exponent {:.4} against γ = {:.4}", fit.gamma_hat, fit.gamma_predicted),
            ));
            out.verdicts.push(Verdict::at_most(
                format!("b ({s}, {a}): fit residual"),
                fit.rms,
                crate::resolvent3d::hs::FIT_RMS_LIMIT,
                format!("log-log residual RMS {:.2e}", fit.rms),
            ));
        }
        summary.insert("b_rate_fits".into(), json!(fits));

        // Cells run one after another; each already fans out over streams.
        let spec = McSpec { samples: self.mc_samples, seed: ctx.seed };
        let mut mc_rows = Vec::new();
        for cell in &self.monte_carlo {
            let w = Weights::new(cell.sigma, cell.alpha);
            let n = out.timed(&format!("{} monte carlo", cell.quantity.label()), || {
                cell.quantity.evaluate(cell.lambda, w, Some(spec)).map_err(failed("resolvent3d"))
            })?;
            let name = format!("{} λ={} ({}, {}): monte carlo", cell.quantity.label(), cell.lambda, cell.sigma, cell.alpha);
            match &n.mc {
                Some(mc) => {
                    let mean = mc.estimate.mean.max(0.0);
                    let norm_err = if mean > 0.0 { mc.estimate.stderr / (2.0 * mean.sqrt()) } else { 0.0 };
                    table.push([
                        format!("{}_monte_carlo", cell.quantity.label()),
                        num(cell.lambda),
                        num(cell.sigma),
                        num(cell.alpha),
                        num(mean.sqrt()),
                        num(norm_err),
                    ]);
                    out.verdicts.push(Verdict::at_most(
                        name,
                        mc.z_score,
                        self.mc_sigmas,
                        format!("quadrature {:.6} against {:.6} ± {:.1e} (squared norms)", n.squared, mc.estimate.mean, mc.estimate.stderr),
                    ));
                }
                None => out.warnings.push(format!(
                    "{name}: skipped ({})",
                    n.mc_skipped.clone().unwrap_or_else(|| "not admissible".into())
                )),
            }
            mc_rows.push(n);
        }
        summary.insert("monte_carlo".into(), json!(mc_rows));
        summary.insert("mc_seed".into(), json!(ctx.seed));
        out.summary = serde_json::Value::Object(summary);
        out.tables = vec![table];
        Ok(out)
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KatoBoundConfig {
    pub potential: NamedPotential,
    pub ks: Vec<usize>,
    pub samples: usize,
    pub sigmas: f64,
    /// Known Kato norm to compare against, if any.
    pub reference_kato_norm: Option<f64>,
    pub kato_norm_tolerance: f64,
}

impl Default for KatoBoundConfig {
    fn default() -> Self {
        Self {
            potential: NamedPotential::new("unit-ball", shape_3d(FormConfig::Box { height: 1.0, half_width: 1.0 })),
            ks: vec![1, 2, 3],
            samples: 200_000,
            sigmas: 3.0,
            reference_kato_norm: Some(2.0 * std::f64::consts::PI),
            kato_norm_tolerance: 1e-3,
        }
    }
}

impl ExperimentConfig for KatoBoundConfig {
    fn validate(&self, base: &Path) -> Result<(), RunError> {
        self.potential.build(base, Dimension::Three, "potential")?;
        require(!self.ks.is_empty(), "ks", "must not be empty")?;
        for (i, k) in self.ks.iter().enumerate() {
            require((1..=3).contains(k), &format!("ks[{i}]"), "k must lie in 1..=3")?;
        }
        require(self.samples > 0, "samples", "must be positive")?;
        require(self.sigmas > 0.0, "sigmas", "must be positive")
    }

    fn run(&self, ctx: &Context) -> Result<Outcome, RunError> {
        let mut out = Outcome::default();
        out.tolerance("sigmas", self.sigmas);
        out.tolerance("kato_norm", self.kato_norm_tolerance);
        out.tolerance("max_relative_stderr", crate::resolvent3d::kato::MAX_RELATIVE_STDERR);
        let v = self.potential.build(&ctx.base_dir, Dimension::Three, "potential")?;
        let spec = McSpec { samples: self.samples, seed: ctx.seed };
        let probes = default_probes();
        let mut bounds = Vec::new();
        for &k in &self.ks {
            bounds.push(out.timed(&format!("k = {k}"), || iterated_kato_bound(&v, k, spec, &probes).map_err(failed("resolvent3d")))?);
        }
        let mut table = Table::new("kato_bound", &["k", "estimate", "stderr", "bound", "kato_norm"]);
        for b in &bounds {
            table.push([b.k.to_string(), num(b.estimate), num(b.stderr), num(b.bound), num(b.kato_norm)]);
            out.verdicts.push(Verdict::at_most(
                format!("k = {}: iterated bound", b.k),
                b.estimate,
                b.bound + self.sigmas * b.stderr,
                format!("{:.4} ± {:.1e} against (k+1)‖V‖_K^k = {:.4}", b.estimate, b.stderr, b.bound),
            ));
        }
        if let (Some(reference), Some(b)) = (self.reference_kato_norm, bounds.first()) {
            let gap = (b.kato_norm - reference).abs();
            out.verdicts.push(Verdict::at_most(
                "kato norm",
                gap,
                self.kato_norm_tolerance,
                format!("‖V‖_K = {:.9} against {reference:.9}", b.kato_norm),
            ));
        }
        out.summary = json!({ "potential": self.potential.name, "bounds": bounds, "seed": ctx.seed });
        out.tables = vec![table];
        Ok(out)
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OscillatoryDecayConfig {
    /// Cut integral parameters; `l` is replaced by each entry of `truncations`.
    pub decay: DecaySpec,
    pub truncations: Vec<f64>,
    pub slope_target: f64,
    pub slope_tolerance: f64,
    pub linearity_tolerance: f64,
    pub phase_times: Vec<f64>,
    pub phase_lambda0: f64,
    pub x_norm: f64,
    pub y_norm: f64,
    pub amplitude: AmplitudeModel,
    pub plus_slope_target: f64,
    pub plus_slope_tolerance: f64,
    /// Largest accepted `max_t t^{3/2}|I⁻| / (t₀^{3/2}|I⁻(t₀)|)`.
    pub minus_growth_limit: f64,
}

impl Default for OscillatoryDecayConfig {
    fn default() -> Self {
        Self {
            decay: DecaySpec::default(),
            truncations: vec![1.0, 4.0, 16.0],
            slope_target: -1.5,
            slope_tolerance: 0.2,
            linearity_tolerance: 0.15,
            phase_times: log_times(4.0, 256.0, 7),
            phase_lambda0: 1.0,
            x_norm: 1.0,
            y_norm: 1.0,
            amplitude: AmplitudeModel::default(),
            plus_slope_target: -2.0,
            plus_slope_tolerance: 0.25,
            minus_growth_limit: 1.5,
        }
    }
}

fn regime_label(r: PhaseRegime) -> &'static str {
    match r {
        PhaseRegime::ShortTime => "short_time",
        PhaseRegime::NoCriticalPoint => "no_critical_point",
        PhaseRegime::CriticalBelowThreshold => "critical_below_threshold",
        PhaseRegime::CriticalAboveThreshold => "critical_above_threshold",
    }
}

impl ExperimentConfig for OscillatoryDecayConfig {
    fn validate(&self, _: &Path) -> Result<(), RunError> {
        require_positive(&self.truncations, "truncations")?;
        require_positive(&self.decay.ts, "decay.ts")?;
        require(self.decay.lambda0 > 0.0, "decay.lambda0", "must be positive")?;
        require_positive(&self.phase_times, "phase_times")?;
        require(self.phase_times.len() >= 2, "phase_times", "needs at least two times")?;
        require(self.phase_lambda0 > 0.0, "phase_lambda0", "must be positive")?;
        require(self.amplitude.lambda_max > 0.0, "amplitude.lambda_max", "must be positive")
    }

    fn run(&self, _: &Context) -> Result<Outcome, RunError> {
        let mut out = Outcome::default();
        out.tolerance("slope_tolerance", self.slope_tolerance);
        out.tolerance("linearity_tolerance", self.linearity_tolerance);
        out.tolerance("plus_slope_tolerance", self.plus_slope_tolerance);
        out.tolerance("minus_growth_limit", self.minus_growth_limit);
        let tables = out.timed("cut integrals", || {
            self.truncations
                .par_iter()
                .map(|l| statphase_decay(&DecaySpec { l: *l, ..self.decay.clone() }))
                .collect::<crate::Result<Vec<_>>>()
                .map_err(failed("resolvent3d"))
        })?;
        let mut decay = Table::new("statphase_decay", &["L", "t", "abs_I"]);
        for t in &tables {
            let l = t.spec.l;
            for (time, v) in t.spec.ts.iter().zip(&t.values) {
                decay.push([num(l), num(*time), num(*v)]);
            }
            match t.slope {
                Some(s) => out.verdicts.push(Verdict::at_most(
                    format!("L = {l}: decay slope"),
                    (s - self.slope_target).abs(),
                    self.slope_tolerance,
                    format!("slope {s:.4} against {}", self.slope_target),
                )),
                None => out.warnings.push(format!("L = {l}: integral vanishes identically, no slope")),
            }
            let worst = t.linearity.iter().map(|(_, r)| (r / 2.0 - 1.0).abs()).fold(0.0, f64::max);
            out.verdicts.push(Verdict::at_most(
                format!("L = {l}: linear in a"),
                worst,
                self.linearity_tolerance,
                format!("|I(2a)|/|I(a)| within {:.1}% of 2", 100.0 * worst),
            ));
        }

        let (plus, minus) = out.timed("phase integrals", || {
            let plus = stationary_phase_sweep(
                &self.phase_times,
                PhaseSign::Plus,
                PhaseGeometry::Fixed { x_norm: self.x_norm, y_norm: self.y_norm },
                self.phase_lambda0,
                self.amplitude,
            );
            let minus =
                stationary_phase_sweep(&self.phase_times, PhaseSign::Minus, PhaseGeometry::Pinned, self.phase_lambda0, self.amplitude);
            Ok((plus.map_err(failed("resolvent3d"))?, minus.map_err(failed("resolvent3d"))?))
        })?;
        let mut phase = Table::new("stationary_phase", &["sign", "geometry", "t", "re_I", "im_I", "abs_I", "regime"]);
        for (label, geometry, sweep) in [("plus", "fixed", &plus), ("minus", "pinned", &minus)] {
            for p in &sweep.points {
                phase.push([
                    label.to_string(),
                    geometry.to_string(),
                    num(p.t),
                    num(p.value.re),
                    num(p.value.im),
                    num(p.value.norm()),
                    regime_label(p.regime).to_string(),
                ]);
            }
        }
        out.verdicts.push(Verdict::at_most(
            "I+ slope",
            (plus.slope - self.plus_slope_target).abs(),
            self.plus_slope_tolerance,
            format!("slope {:.4} against {}", plus.slope, self.plus_slope_target),
        ));
        let first = minus.points[0].t.powf(1.5) * minus.points[0].value.norm();
        let growth = if first > 0.0 { minus.scaled_max / first } else { f64::INFINITY };
        out.verdicts.push(Verdict::at_most(
            "I- pinned bounded",
            growth,
            self.minus_growth_limit,
            format!("max t^1.5|I-| = {:.4e}, {growth:.3} times its first value", minus.scaled_max),
        ));
        out.summary = json!({ "cut_integrals": tables, "plus": plus, "minus": minus });
        out.tables = vec![decay, phase];
        Ok(out)
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct S0ResonanceConfig {
    pub potential: NamedPotential,
    pub settings: S0Settings,
    pub refinement_tolerance: f64,
    /// Profile `p` of the attractive scan `V = -c p`.
    pub scan_profile: NamedPotential,
    pub couplings: Vec<f64>,
    pub lambda0s: Vec<f64>,
    pub cutoffs: Vec<Cutoff>,
    /// Largest accepted `max total / first total` for `χ₀B'`.
    pub bprime_growth_limit: f64,
    /// Smallest accepted exponent `p` in `total ∝ λ₀^p` for `χ₀B`.
    pub b_exponent_min: f64,
}

impl Default for S0ResonanceConfig {
    fn default() -> Self {
        let g = NamedPotential::new("gaussian", shape_3d(FormConfig::Gaussian { amplitude: 1.0, width: 1.0 }));
        Self {
            potential: g.clone(),
            settings: S0Settings::default(),
            refinement_tolerance: 0.1,
            scan_profile: g,
            couplings: (0..=80).map(|i| i as f64 * 0.05).collect(),
            lambda0s: vec![0.4, 0.2, 0.1],
            cutoffs: vec![Cutoff::Chi0, Cutoff::Chi1],
            bprime_growth_limit: 1.05,
            b_exponent_min: 0.4,
        }
    }
}

impl ExperimentConfig for S0ResonanceConfig {
    fn validate(&self, base: &Path) -> Result<(), RunError> {
        self.potential.build(base, Dimension::Three, "potential")?;
        self.scan_profile.build(base, Dimension::Three, "scan_profile")?;
        require(self.couplings.len() >= 3, "couplings", "the scan needs at least three couplings")?;
        require(self.couplings.iter().all(|c| c.is_finite() && *c >= 0.0), "couplings", "must be finite and non-negative")?;
        require_positive(&self.lambda0s, "lambda0s")?;
        require(self.lambda0s.len() >= 2, "lambda0s", "the scaling fit needs at least two values")?;
        require(!self.cutoffs.is_empty(), "cutoffs", "must not be empty")?;
        require(self.refinement_tolerance > 0.0, "refinement_tolerance", "must be positive")
    }

    fn run(&self, ctx: &Context) -> Result<Outcome, RunError> {
        let mut out = Outcome::default();
        out.tolerance("refinement", self.refinement_tolerance);
        out.tolerance("near_singular", self.settings.near_singular);
        out.tolerance("bprime_growth", self.bprime_growth_limit);
        out.tolerance("b_exponent_min", self.b_exponent_min);
        let v = self.potential.build(&ctx.base_dir, Dimension::Three, "potential")?;
        let profile = self.scan_profile.build(&ctx.base_dir, Dimension::Three, "scan_profile")?;
        let s = self.settings;
        let (coarse, fine) = out.timed("s0 invertibility", || {
            let coarse = s0_invertibility(&v, s).map_err(failed("resolvent3d"))?;
            let fine = s0_invertibility(&v, S0Settings { grid: s.grid.refined(), ..s }).map_err(failed("resolvent3d"))?;
            Ok((coarse, fine))
        })?;
        let change = (coarse.smallest_singular_value / fine.smallest_singular_value - 1.0).abs();
        out.verdicts.push(Verdict::holds(
            "s0 invertible",
            coarse.classification == S0Class::Invertible,
            format!("smallest singular value {:.5}", coarse.smallest_singular_value),
        ));
        out.verdicts.push(Verdict::at_most(
            "s0 refinement",
            change,
            self.refinement_tolerance,
            format!("{:.5} on the refined grid", fine.smallest_singular_value),
        ));

        let scan = out.timed("coupling scan", || coupling_scan(&profile, &self.couplings, s).map_err(failed("resolvent3d")))?;
        let mut scan_table = Table::new("s0_coupling_scan", &["coupling", "smallest_singular_value", "bound_states"]);
        for r in &scan.rows {
            scan_table.push([num(r.coupling), num(r.smallest_singular_value), r.bound_states.to_string()]);
        }
        out.verdicts.push(Verdict::holds(
            "scan dip at bound-state threshold",
            scan.coincide,
            format!("dip at {}, bound-state count changes at {} (step {:.3})", opt(scan.dip), opt(scan.count_change), scan.step),
        ));

        let sweeps = out.timed("fourier kernels", || {
            let cells: Vec<(FtQuantity, Cutoff)> = [FtQuantity::Chi0Bprime, FtQuantity::Chi0B]
                .into_iter()
                .flat_map(|q| self.cutoffs.iter().map(move |c| (q, *c)))
                .collect();
            cells
                .par_iter()
                .map(|(q, c)| ft_kernel_sweep(&self.lambda0s, *q, *c, q.default_weights()))
                .collect::<crate::Result<Vec<_>>>()
                .map_err(failed("resolvent3d"))
        })?;
        let mut ft = Table::new("ft_kernel_l1", &["quantity", "cutoff", "lambda0", "total"]);
        for sw in &sweeps {
            let (q, c) = (quantity_label(sw.quantity), cutoff_label(sw.cutoff));
            for (l, t) in sw.lambda0s.iter().zip(&sw.totals) {
                ft.push([q.to_string(), c.to_string(), num(*l), num(*t)]);
            }
            match sw.quantity {
                FtQuantity::Chi0Bprime => {
                    let growth = sw.totals.iter().copied().fold(0.0, f64::max) / sw.totals[0];
                    out.verdicts.push(Verdict::at_most(
                        format!("{q} ({c}): bounded"),
                        growth,
                        self.bprime_growth_limit,
                        format!("totals {:?}", rounded(&sw.totals)),
                    ));
                }
                FtQuantity::Chi0B => out.verdicts.push(Verdict::at_least(
                    format!("{q} ({c}): scaling exponent"),
                    sw.exponent,
                    self.b_exponent_min,
                    format!("total ∝ λ0^{:.3} over {:?} (fit RMS {:.1e})", sw.exponent, self.lambda0s, sw.rms),
                )),
            }
        }
        out.summary = json!({ "s0": coarse, "s0_refined": fine, "scan": scan, "ft_kernel": sweeps });
        out.tables = vec![scan_table, ft];
        Ok(out)
    }
}

fn quantity_label(q: FtQuantity) -> &'static str {
    match q {
        FtQuantity::Chi0Bprime => "chi0_Bprime",
        FtQuantity::Chi0B => "chi0_B",
    }
}

fn cutoff_label(c: Cutoff) -> &'static str {
    match c {
        Cutoff::Chi0 => "chi0",
        Cutoff::Chi1 => "chi1",
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "none".to_string(), |v| format!("{v:.3}"))
}

fn rounded(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 1e4).round() / 1e4).collect()
}
