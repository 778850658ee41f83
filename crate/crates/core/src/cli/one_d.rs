use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{build_all, require, require_finite, require_positive, ExperimentConfig, NamedPotential};
use super::{failed, Context, Outcome, RunError, Verdict};
use crate::io::{num, Table};
use crate::jost::{solve_jost, Side, XGrid};
use crate::oracle::{self, Band, ModeFilter};
use crate::potentials::{Dimension, FormConfig, Potential, PotentialConfig};
use crate::propagator1d::{dispersive_constant, PropagatorSettings, SpectralPropagator};
use crate::scattering::{classify_zero_energy, Classification, ScatteringData};
use crate::wiener::{pruf_uniform_bounds, sample_wronskian};

fn shape_1d(shape: FormConfig) -> PotentialConfig {
    PotentialConfig { dimension: 1, shape, scale: None, decay_exponent_hint: None }
}

fn gaussian() -> NamedPotential {
    NamedPotential::new("gaussian", shape_1d(FormConfig::Gaussian { amplitude: 1.0, width: 1.0 }))
}

fn pt2() -> NamedPotential {
    NamedPotential::new("pt2", shape_1d(FormConfig::PoschlTeller { coupling: 2.0 }))
}

/// Integer points of `[-10, 10]`.
fn central_window() -> Vec<f64> {
    (0..21).map(|i| -10.0 + i as f64).collect()
}

fn check_times(times: &[f64], settings: &PropagatorSettings) -> Result<(), RunError> {
    require_positive(times, "times")?;
    for (i, t) in times.iter().enumerate() {
        require(*t >= 1.0, &format!("times[{i}]"), "times must be at least 1")?;
        require(*t <= settings.t_max, &format!("times[{i}]"), "exceeds settings.t_max")?;
    }
    Ok(())
}

fn classification_label(c: Classification) -> &'static str {
    match c {
        Classification::Resonant => "resonant",
        Classification::Nonresonant => "nonresonant",
        Classification::Indeterminate => "indeterminate",
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FreeBaselineConfig {
    pub points: Vec<f64>,
    pub times: Vec<f64>,
    pub settings: PropagatorSettings,
    /// Largest relative error of `|K|` against `(4πt)^{-1/2}`.
    pub kernel_tolerance: f64,
    /// Largest relative error of the dispersive constant against `(4π)^{-1/2}`.
    pub constant_tolerance: f64,
}

impl Default for FreeBaselineConfig {
    fn default() -> Self {
        Self {
            points: vec![-5.0, -2.5, 0.0, 2.5, 5.0],
            times: vec![1.0, 2.0, 5.0, 10.0],
            settings: PropagatorSettings { truncation: 16.0, t_max: 10.0, ..Default::default() },
            kernel_tolerance: 1e-3,
            constant_tolerance: 1e-2,
        }
    }
}

impl ExperimentConfig for FreeBaselineConfig {
    fn validate(&self, _: &Path) -> Result<(), RunError> {
        require_finite(&self.points, "points")?;
        check_times(&self.times, &self.settings)
    }

    fn run(&self, _: &Context) -> Result<Outcome, RunError> {
        let mut out = Outcome::default();
        out.tolerance("kernel_relative_error", self.kernel_tolerance);
        out.tolerance("constant_relative_error", self.constant_tolerance);
        let v = Potential::zero(Dimension::One);
        let p = out.timed("propagator setup", || {
            SpectralPropagator::new(&v, &self.points, self.settings.clone()).map_err(failed("propagator1d"))
        })?;
        let mut kernel = Table::new("free_kernel", &["t", "x", "y", "re_K", "im_K", "abs_K", "exact_abs_K", "relative_error"]);
        let mut worst: f64 = 0.0;
        out.timed("kernel grids", || {
            for &t in &self.times {
                let g = p.kernel_grid(t).map_err(failed("propagator1d"))?;
                let exact = (4.0 * std::f64::consts::PI * t).sqrt().recip();
                for (i, x) in g.xs.iter().enumerate() {
                    for (j, y) in g.ys.iter().enumerate() {
                        let k = g.at(i, j);
                        let rel = (k.norm() - exact).abs() / exact;
                        worst = worst.max(rel);
                        kernel.push([num(t), num(*x), num(*y), num(k.re), num(k.im), num(k.norm()), num(exact), num(rel)]);
                    }
                }
            }
            Ok(())
        })?;
        let report = out.timed("dispersive constant", || dispersive_constant(&p, &self.times).map_err(failed("propagator1d")))?;
        let exact_c = (4.0 * std::f64::consts::PI).sqrt().recip();
        let mut constant = Table::new("dispersive_constant", &["t", "c_t", "exact"]);
        for (t, c) in &report.per_t {
            constant.push([num(*t), num(*c), num(exact_c)]);
        }
        let c_err = (report.c_max / exact_c - 1.0).abs();
        out.verdicts.push(Verdict::at_most(
            "kernel modulus",
            worst,
            self.kernel_tolerance,
            format!("max relative error of |K| against (4πt)^(-1/2) is {worst:.2e}"),
        ));
        out.verdicts.push(Verdict::at_most(
            "dispersive constant",
            c_err,
            self.constant_tolerance,
            format!("C = {:.5} against {exact_c:.5}", report.c_max),
        ));
        out.summary = json!({ "dispersive_constant": report, "exact_constant": exact_c, "max_kernel_relative_error": worst });
        out.tables = vec![kernel, constant];
        Ok(out)
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleEquivalenceConfig {
    pub potentials: Vec<NamedPotential>,
    pub points: Vec<f64>,
    pub times: Vec<f64>,
    pub settings: PropagatorSettings,
    /// Box half-length `L` of the oracle.
    pub half_length: f64,
    /// Oracle grid spacing.
    pub h: f64,
    /// Zero-energy exclusion of the oracle, applied to resonant potentials.
    pub eps_zero: f64,
    pub tolerance: f64,
}

impl Default for OracleEquivalenceConfig {
    fn default() -> Self {
        Self {
            potentials: vec![gaussian(), pt2()],
            points: central_window(),
            times: vec![1.0, 2.0, 4.0, 7.0, 10.0],
            settings: PropagatorSettings { truncation: 1.5, t_max: 10.0, ..Default::default() },
            half_length: 40.0,
            h: 0.05,
            eps_zero: 0.0,
            tolerance: 5e-2,
        }
    }
}

impl ExperimentConfig for OracleEquivalenceConfig {
    fn validate(&self, base: &Path) -> Result<(), RunError> {
        build_all(&self.potentials, base, Dimension::One, "potentials")?;
        require_finite(&self.points, "points")?;
        check_times(&self.times, &self.settings)?;
        require(self.half_length > 0.0, "half_length", "must be positive")?;
        require(self.h > 0.0 && self.h < self.half_length, "h", "must be positive and below half_length")?;
        require(self.points.iter().all(|p| p.abs() < self.half_length), "points", "must lie inside the oracle box")?;
        require(self.eps_zero >= 0.0, "eps_zero", "must be non-negative")
    }

    fn run(&self, ctx: &Context) -> Result<Outcome, RunError> {
        let mut out = Outcome::default();
        out.tolerance("sup_distance", self.tolerance);
        out.tolerance("eps_zero", self.eps_zero);
        let vs = build_all(&self.potentials, &ctx.base_dir, Dimension::One, "potentials")?;
        type Row = (f64, f64, f64, f64);
        let per: Vec<(Classification, usize, Vec<Row>)> = out.timed("spectral and oracle kernels", || {
            vs.par_iter()
                .map(|v| {
                    let p = SpectralPropagator::new(v, &self.points, self.settings.clone()).map_err(failed("propagator1d"))?;
                    let g = oracle::build(v, self.half_length, self.h).map_err(failed("oracle"))?;
                    let class = p.zero_energy.classification;
                    let filter = ModeFilter {
                        ac_only: true,
                        eps_zero: self.eps_zero,
                        resonant: class == Classification::Resonant,
                        band: Band::Window { truncation: self.settings.truncation },
                    };
                    let rows = self
                        .times
                        .iter()
                        .map(|&t| {
                            let a = p.kernel_grid(t).map_err(failed("propagator1d"))?;
                            let b = g.propagator(t, &filter, &self.points, &self.points).map_err(failed("oracle"))?;
                            let d = a.sup_distance(&b).map_err(failed("oracle"))?;
                            Ok((t, d, a.sup_abs(), b.sup_abs()))
                        })
                        .collect::<Result<Vec<Row>, RunError>>()?;
                    Ok((class, g.negative_count(), rows))
                })
                .collect::<Result<Vec<_>, RunError>>()
        })?;
        let mut table = Table::new("oracle_equivalence", &["potential", "t", "sup_distance", "sup_spectral", "sup_oracle"]);
        let mut summary = Vec::new();
        for (np, (class, bound, rows)) in self.potentials.iter().zip(&per) {
            let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
            for r in rows {
                table.push([np.name.clone(), num(r.0), num(r.1), num(r.2), num(r.3)]);
            }
            out.verdicts.push(Verdict::at_most(
                format!("{}: sup distance", np.name),
                worst,
                self.tolerance,
                format!("max over t of the sup-norm distance is {worst:.3e}"),
            ));
            summary.push(json!({ "potential": np.name, "classification": class, "oracle_bound_states": bound, "max_sup_distance": worst }));
        }
        out.summary = json!({ "potentials": summary });
        out.tables = vec![table];
        Ok(out)
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Theorem1SweepConfig {
    pub potentials: Vec<NamedPotential>,
    pub points: Vec<f64>,
    pub times: Vec<f64>,
    pub settings: PropagatorSettings,
    /// Largest accepted slope of `log C(t)` against `log t` for `t ≥ 10`.
    pub growth_limit: f64,
    /// λ step of the Wronskian samples for the Wiener precondition.
    pub wiener_step: f64,
    /// Floor below which the Wiener denominator counts as vanishing.
    pub wiener_floor: f64,
}

impl Default for Theorem1SweepConfig {
    fn default() -> Self {
        Self {
            potentials: vec![gaussian(), pt2()],
            points: central_window(),
            times: vec![1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 15.0, 20.0, 30.0, 40.0, 50.0],
            settings: PropagatorSettings { truncation: 4.0, t_max: 50.0, ..Default::default() },
            growth_limit: 0.05,
            wiener_step: 0.02,
            wiener_floor: 1e-6,
        }
    }
}

impl ExperimentConfig for Theorem1SweepConfig {
    fn validate(&self, base: &Path) -> Result<(), RunError> {
        build_all(&self.potentials, base, Dimension::One, "potentials")?;
        require_finite(&self.points, "points")?;
        check_times(&self.times, &self.settings)?;
        require(
            self.times.iter().filter(|t| **t >= crate::propagator1d::LARGE_T).count() >= 2,
            "times",
            "needs at least two times at or beyond 10 for the growth fit",
        )?;
        require(self.wiener_step > 0.0, "wiener_step", "must be positive")?;
        require(self.wiener_floor > 0.0, "wiener_floor", "must be positive")
    }

    fn run(&self, ctx: &Context) -> Result<Outcome, RunError> {
        let mut out = Outcome::default();
        out.tolerance("growth_exponent", self.growth_limit);
        out.tolerance("wiener_floor", self.wiener_floor);
        let vs = build_all(&self.potentials, &ctx.base_dir, Dimension::One, "potentials")?;
        let results = out.timed("sweep", || {
            vs.par_iter()
                .map(|v| {
                    let p = SpectralPropagator::new(v, &self.points, self.settings.clone()).map_err(failed("propagator1d"))?;
                    let w = sample_wronskian(v, 1.0, self.wiener_step, self.settings.jost_tol).map_err(failed("wiener"))?;
                    let check = match p.zero_energy.classification {
                        Classification::Resonant => w.reduced_check(self.wiener_floor),
                        _ => w.raw_check(self.wiener_floor),
                    }
                    .map_err(failed("wiener"))?;
                    // No verdict without finite Fourier norms.
                    let report = if check.finite {
                        Some(dispersive_constant(&p, &self.times).map_err(failed("propagator1d"))?)
                    } else {
                        None
                    };
                    Ok((check, report))
                })
                .collect::<Result<Vec<_>, RunError>>()
        })?;
        let mut table = Table::new("theorem1_sweep", &["potential", "t", "c_t"]);
        let mut summary = Vec::new();
        for (np, (check, report)) in self.potentials.iter().zip(&results) {
            out.verdicts.push(Verdict::holds(
                format!("{}: wiener precondition", np.name),
                check.finite,
                format!("Fourier L1 norm of the Wronskian ratio is {:.4}", check.ratio_l1.value),
            ));
            if let Some(w) = &check.ratio_l1.warning {
                out.warnings.push(format!("{}: {w}", np.name));
            }
            let Some(r) = report else {
                out.warnings.push(format!("{}: no dispersive verdict, Wiener precondition failed", np.name));
                continue;
            };
            for (t, c) in &r.per_t {
                table.push([np.name.clone(), num(*t), num(*c)]);
            }
            out.verdicts.push(Verdict::holds(
                format!("{}: finite constant", np.name),
                r.c_max.is_finite(),
                format!("max_t C(t) = {:.5}", r.c_max),
            ));
            out.verdicts.push(Verdict::at_most(
                format!("{}: growth exponent", np.name),
                r.full_range_exponent,
                self.growth_limit,
                format!("log-log slope of C(t) {:.4} over the whole sweep", r.full_range_exponent),
            ));
            out.verdicts.push(Verdict::at_most(
                format!("{}: large-time growth exponent", np.name),
                r.growth_exponent,
                self.growth_limit,
                format!("log-log slope of C(t) {:.4} for t ≥ {}", r.growth_exponent, crate::propagator1d::LARGE_T),
            ));
            summary.push(json!({ "potential": np.name, "wiener": check, "dispersive_constant": r }));
        }
        out.summary = json!({ "potentials": summary });
        out.tables = vec![table];
        Ok(out)
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Zero,
    Gaussian,
    Box,
    PoschlTeller,
}

impl Family {
    fn build(self, coupling: f64, width: f64) -> crate::Result<Potential<f64>> {
        let d = Dimension::One;
        match self {
            Family::Zero => Ok(Potential::zero(d)),
            Family::Gaussian => Potential::gaussian(d, coupling, width),
            Family::Box => Potential::boxed(d, coupling, width),
            Family::PoschlTeller => Potential::poschl_teller(d, coupling),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResonanceScanConfig {
    pub family: Family,
    /// Amplitude (gaussian), height (box) or coupling (Pöschl–Teller).
    pub couplings: Vec<f64>,
    /// Width (gaussian) or half-width (box).
    pub width: f64,
    pub eps_res: f64,
    pub jost_step: f64,
    pub jost_tol: f64,
    /// Half-length of the window on which zero-energy nodes are counted.
    pub node_window: f64,
}

impl Default for ResonanceScanConfig {
    fn default() -> Self {
        Self {
            family: Family::PoschlTeller,
            couplings: vec![0.5, 2.0, 4.5],
            width: 1.0,
            eps_res: 1e-4,
            jost_step: 0.01,
            jost_tol: 1e-12,
            node_window: 30.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct ScanPoint {
    coupling: f64,
    classification: Classification,
    w_at_zero: f64,
    threshold: f64,
    halved_eps_res: Classification,
    halved_step: Classification,
    stable: bool,
    bound_states: usize,
}

fn flips(a: Classification, b: Classification) -> bool {
    use Classification::*;
    matches!((a, b), (Resonant, Nonresonant) | (Nonresonant, Resonant))
}

impl ResonanceScanConfig {
    fn classify(&self, v: &Potential<f64>, eps: f64, step: f64) -> crate::Result<crate::scattering::ZeroEnergy> {
        let grid = XGrid::spanning(-1.0, 1.0, step)?;
        let lambdas = [0.0, 0.05, 0.1];
        let plus = solve_jost(v, Side::Plus, &lambdas, grid, self.jost_tol)?;
        let minus = solve_jost(v, Side::Minus, &lambdas, grid, self.jost_tol)?;
        let s = ScatteringData::compute(&plus, &minus, 0.0)?;
        classify_zero_energy(&s, eps, v.weighted_l1_norm(1.0, None)?.value)
    }

    /// Sign changes of `f₊(0, x)` on the node window; by Sturm oscillation
    /// this is the number of negative eigenvalues.
    fn bound_states(&self, v: &Potential<f64>) -> crate::Result<usize> {
        let grid = XGrid::spanning(-self.node_window, self.node_window, self.jost_step)?;
        let t = solve_jost(v, Side::Plus, &[0.0], grid, self.jost_tol)?;
        let mut count = 0;
        let mut last = 0.0f64;
        for m in t.m_row(0) {
            if m.re != 0.0 {
                if last != 0.0 && m.re.signum() != last.signum() {
                    count += 1;
                }
                last = m.re;
            }
        }
        Ok(count)
    }
}

impl ExperimentConfig for ResonanceScanConfig {
    fn validate(&self, _: &Path) -> Result<(), RunError> {
        require_finite(&self.couplings, "couplings")?;
        for (i, c) in self.couplings.iter().enumerate() {
            self.family
                .build(*c, self.width)
                .map_err(|e| RunError::schema(format!("couplings[{i}]"), e.to_string()))?;
        }
        require(self.eps_res > 0.0, "eps_res", "must be positive")?;
        require(self.jost_step > 0.0 && self.jost_step <= 0.1, "jost_step", "must lie in (0, 0.1]")?;
        require(self.jost_tol > 0.0, "jost_tol", "must be positive")?;
        require(self.node_window >= 5.0, "node_window", "must be at least 5")
    }

    fn run(&self, _: &Context) -> Result<Outcome, RunError> {
        let mut out = Outcome::default();
        out.tolerance("eps_res", self.eps_res);
        out.tolerance("jost_tol", self.jost_tol);
        let points = out.timed("classification", || {
            self.couplings
                .par_iter()
                .map(|&c| {
                    let v = self.family.build(c, self.width).map_err(failed("potentials"))?;
                    let base = self.classify(&v, self.eps_res, self.jost_step).map_err(failed("scattering"))?;
                    let half_eps = self.classify(&v, 0.5 * self.eps_res, self.jost_step).map_err(failed("scattering"))?;
                    let half_step = self.classify(&v, self.eps_res, 0.5 * self.jost_step).map_err(failed("scattering"))?;
                    let class = base.classification;
                    Ok(ScanPoint {
                        coupling: c,
                        classification: class,
                        w_at_zero: base.w_at_zero[0].hypot(base.w_at_zero[1]),
                        threshold: base.eps_res * base.scale,
                        halved_eps_res: half_eps.classification,
                        halved_step: half_step.classification,
                        stable: !flips(class, half_eps.classification) && !flips(class, half_step.classification),
                        bound_states: self.bound_states(&v).map_err(failed("jost"))?,
                    })
                })
                .collect::<Result<Vec<_>, RunError>>()
        })?;
        let mut table = Table::new(
            "resonance_scan",
            &["coupling", "classification", "abs_w0", "threshold", "halved_eps_res", "halved_step", "stable", "bound_states"],
        );
        for p in &points {
            table.push([
                num(p.coupling),
                classification_label(p.classification).to_string(),
                num(p.w_at_zero),
                num(p.threshold),
                classification_label(p.halved_eps_res).to_string(),
                classification_label(p.halved_step).to_string(),
                p.stable.to_string(),
                p.bound_states.to_string(),
            ]);
            out.verdicts.push(Verdict::holds(
                format!("coupling {}: stable classification", p.coupling),
                p.stable,
                format!(
                    "{} with {} bound state(s); halving eps_res gives {}, halving the step gives {}",
                    classification_label(p.classification),
                    p.bound_states,
                    classification_label(p.halved_eps_res),
                    classification_label(p.halved_step)
                ),
            ));
            if p.classification == Classification::Indeterminate {
                out.warnings.push(format!("coupling {}: zero energy is indeterminate", p.coupling));
            }
        }
        out.summary = json!({ "family": self.family, "scan": points });
        out.tables = vec![table];
        Ok(out)
    }
}

// ---------------------------------------------------------------------------

/// Uniform λ grid and ξ grid of the Fourier-side check.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FourierSideConfig {
    pub half_width: f64,
    pub lambda_step: f64,
    pub x: f64,
    pub xi_min: f64,
    pub xi_max: f64,
    pub xi_step: f64,
}

impl Default for FourierSideConfig {
    fn default() -> Self {
        Self { half_width: 80.0, lambda_step: 0.05, x: 0.0, xi_min: -30.0, xi_max: 30.0, xi_step: 0.025 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JostResidualsConfig {
    pub potentials: Vec<NamedPotential>,
    pub lambdas: Vec<f64>,
    pub x_min: f64,
    pub x_max: f64,
    pub x_step: f64,
    pub tol: f64,
    pub fourier: FourierSideConfig,
    pub residual_limit: f64,
    pub conjugation_limit: f64,
    /// Largest share of `Σ|m̂|` allowed beyond one resolution width left of 0.
    pub negative_side_limit: f64,
}

impl Default for JostResidualsConfig {
    fn default() -> Self {
        Self {
            potentials: vec![
                NamedPotential::new("zero", shape_1d(FormConfig::Zero)),
                NamedPotential::new("box", shape_1d(FormConfig::Box { height: 1.0, half_width: 1.0 })),
                gaussian(),
                pt2(),
            ],
            lambdas: (0..=40).map(|i| -10.0 + 0.5 * i as f64).collect(),
            x_min: -4.0,
            x_max: 4.0,
            x_step: 0.01,
            tol: 1e-12,
            fourier: FourierSideConfig::default(),
            residual_limit: 1e-6,
            conjugation_limit: 1e-8,
            negative_side_limit: 1e-3,
        }
    }
}

impl ExperimentConfig for JostResidualsConfig {
    fn validate(&self, base: &Path) -> Result<(), RunError> {
        build_all(&self.potentials, base, Dimension::One, "potentials")?;
        require_finite(&self.lambdas, "lambdas")?;
        require(self.x_max > self.x_min, "x_max", "must exceed x_min")?;
        require(self.x_step > 0.0, "x_step", "must be positive")?;
        require(self.tol > 0.0, "tol", "must be positive")?;
        let f = &self.fourier;
        require(f.half_width > 0.0 && f.lambda_step > 0.0, "fourier.half_width", "half_width and lambda_step must be positive")?;
        require(f.xi_max > f.xi_min && f.xi_step > 0.0, "fourier.xi_max", "need xi_min < xi_max and a positive step")?;
        require(f.x.abs() <= 1e6, "fourier.x", "must be finite")
    }

    fn run(&self, ctx: &Context) -> Result<Outcome, RunError> {
        let mut out = Outcome::default();
        out.tolerance("ode_residual", self.residual_limit);
        out.tolerance("conjugation_defect", self.conjugation_limit);
        out.tolerance("negative_side_fraction", self.negative_side_limit);
        out.tolerance("jost_tol", self.tol);
        let vs = build_all(&self.potentials, &ctx.base_dir, Dimension::One, "potentials")?;
        let grid = XGrid::spanning(self.x_min, self.x_max, self.x_step).map_err(failed("jost"))?;
        let f = &self.fourier;
        let n_lambda = (2.0 * f.half_width / f.lambda_step).round() as usize;
        let fourier_lambdas: Vec<f64> = (0..=n_lambda).map(|i| -f.half_width + i as f64 * f.lambda_step).collect();
        let n_xi = ((f.xi_max - f.xi_min) / f.xi_step).round() as usize;
        let xi: Vec<f64> = (0..=n_xi).map(|i| f.xi_min + i as f64 * f.xi_step).collect();
        let fourier_grid = XGrid::spanning(f.x - 0.5, f.x + 0.5, 0.01).map_err(failed("jost"))?;

        struct SideResult {
            residuals: Vec<f64>,
            conjugation: f64,
            negative_side: f64,
            m_hat: Vec<crate::C64>,
            delta: f64,
        }
        let results: Vec<Vec<SideResult>> = out.timed("jost tables", || {
            vs.par_iter()
                .map(|v| {
                    [Side::Plus, Side::Minus]
                        .into_iter()
                        .map(|side| {
                            let t = solve_jost(v, side, &self.lambdas, grid, self.tol).map_err(failed("jost"))?;
                            let residuals = (0..self.lambdas.len()).map(|il| t.ode_residual(v, il)).collect();
                            let ft = solve_jost(v, side, &fourier_lambdas, fourier_grid, self.tol).map_err(failed("jost"))?;
                            let m = ft.m_fourier_side(f.x, &xi).map_err(failed("jost"))?;
                            Ok(SideResult {
                                residuals,
                                conjugation: t.conjugation_defect(),
                                negative_side: m.negative_side_fraction(),
                                delta: m.delta,
                                m_hat: m.values,
                            })
                        })
                        .collect::<Result<Vec<_>, RunError>>()
                })
                .collect::<Result<Vec<_>, RunError>>()
        })?;
        let mut residual_table = Table::new("jost_residuals", &["potential", "side", "lambda", "ode_residual"]);
        let mut fourier_table = Table::new("jost_fourier_side", &["potential", "side", "xi", "re_m_hat", "im_m_hat"]);
        let mut summary = Vec::new();
        for (np, sides) in self.potentials.iter().zip(&results) {
            let mut worst_res: f64 = 0.0;
            let mut worst_conj: f64 = 0.0;
            let mut worst_neg: f64 = 0.0;
            for (side, r) in [Side::Plus, Side::Minus].iter().zip(sides) {
                for (l, res) in self.lambdas.iter().zip(&r.residuals) {
                    residual_table.push([np.name.clone(), side.label().to_string(), num(*l), num(*res)]);
                    worst_res = worst_res.max(*res);
                }
                for (x, m) in xi.iter().zip(&r.m_hat) {
                    fourier_table.push([np.name.clone(), side.label().to_string(), num(*x), num(m.re), num(m.im)]);
                }
                worst_conj = worst_conj.max(r.conjugation);
                worst_neg = worst_neg.max(r.negative_side);
            }
            let delta = sides[0].delta;
            out.verdicts.push(Verdict::at_most(
                format!("{}: ode residual", np.name),
                worst_res,
                self.residual_limit,
                format!("max over λ and both sides {worst_res:.2e}"),
            ));
            out.verdicts.push(Verdict::at_most(
                format!("{}: conjugation symmetry", np.name),
                worst_conj,
                self.conjugation_limit,
                format!("max |m(-λ) - conj m(λ)| = {worst_conj:.2e}"),
            ));
            out.verdicts.push(Verdict::at_most(
                format!("{}: negative-side mass", np.name),
                worst_neg,
                self.negative_side_limit,
                format!("share of |m̂| at ξ < -δ = -{delta:.3} is {worst_neg:.2e}"),
            ));
            summary.push(json!({
                "potential": np.name,
                "max_ode_residual": worst_res,
                "conjugation_defect": worst_conj,
                "negative_side_fraction": worst_neg,
                "resolution": delta,
            }));
        }
        out.summary = json!({ "potentials": summary });
        out.tables = vec![residual_table, fourier_table];
        Ok(out)
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BornConvergenceConfig {
    pub potential: NamedPotential,
    pub points: Vec<f64>,
    pub times: Vec<f64>,
    pub settings: PropagatorSettings,
    /// Added to `‖V‖₁ / (2√λ₀)` to form the ratio limit.
    pub slack: f64,
}

impl Default for BornConvergenceConfig {
    fn default() -> Self {
        Self {
            potential: gaussian(),
            points: central_window(),
            times: vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0],
            settings: PropagatorSettings { truncation: 4.0, t_max: 50.0, ..Default::default() },
            slack: 0.05,
        }
    }
}

impl ExperimentConfig for BornConvergenceConfig {
    fn validate(&self, base: &Path) -> Result<(), RunError> {
        self.potential.build(base, Dimension::One, "potential")?;
        require_finite(&self.points, "points")?;
        check_times(&self.times, &self.settings)?;
        require(self.settings.born_terms >= 1, "settings.born_terms", "needs at least one Born term")?;
        require(self.slack >= 0.0, "slack", "must be non-negative")
    }

    fn run(&self, ctx: &Context) -> Result<Outcome, RunError> {
        let mut out = Outcome::default();
        out.tolerance("ratio_slack", self.slack);
        out.tolerance("tail_tolerance", self.settings.tail_tolerance);
        let v = self.potential.build(&ctx.base_dir, Dimension::One, "potential")?;
        let p = out.timed("propagator setup", || {
            SpectralPropagator::new(&v, &self.points, self.settings.clone()).map_err(failed("propagator1d"))
        })?;
        let sups = out.timed("born terms", || p.born_term_sups(&self.times).map_err(failed("propagator1d")))?;
        let limit = p.l1_norm / (2.0 * p.cut.k0()) + self.slack;
        out.tolerance("ratio_limit", limit);
        let mut table = Table::new("born_terms", &["n", "sup_abs", "ratio_to_previous"]);
        let mut worst: f64 = 0.0;
        for (n, s) in sups.iter().enumerate() {
            let ratio = if n == 0 { f64::NAN } else { s / sups[n - 1] };
            if n > 0 {
                worst = worst.max(ratio);
            }
            table.push([n.to_string(), num(*s), if n == 0 { String::new() } else { num(ratio) }]);
        }
        out.verdicts.push(Verdict::at_most(
            "increment ratio",
            worst,
            limit,
            format!(
                "largest ratio of successive Born terms {worst:.3} above λ₀ = {:.4} (‖V‖₁ = {:.4})",
                p.cut.lambda0, p.l1_norm
            ),
        ));
        out.summary = json!({
            "potential": self.potential.name,
            "l1_norm": p.l1_norm,
            "lambda0": p.cut.lambda0,
            "tail_bound": p.tail_bound,
            "term_sups": sups,
            "ratio_limit": limit,
        });
        out.tables = vec![table];
        Ok(out)
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WienerTablesConfig {
    pub lambda0: f64,
    pub n_max: u32,
    pub truncations: Vec<f64>,
    pub slope_limit: f64,
    /// Potentials whose Wronskian ratio norms are checked for stability
    /// under halving the λ step.
    pub wronskian_potentials: Vec<NamedPotential>,
    pub wronskian_step: f64,
    pub wronskian_floor: f64,
    pub stability_limit: f64,
}

impl Default for WienerTablesConfig {
    fn default() -> Self {
        Self {
            lambda0: crate::wiener::DEFAULT_PRUF_LAMBDA0,
            n_max: 4,
            truncations: vec![1.0, 10.0, 100.0],
            slope_limit: 0.1,
            wronskian_potentials: vec![gaussian(), pt2()],
            wronskian_step: 0.02,
            wronskian_floor: 1e-6,
            stability_limit: 0.1,
        }
    }
}

impl ExperimentConfig for WienerTablesConfig {
    fn validate(&self, base: &Path) -> Result<(), RunError> {
        require(self.lambda0 > 0.0, "lambda0", "must be positive")?;
        require(self.n_max >= 2, "n_max", "must be at least 2")?;
        require_positive(&self.truncations, "truncations")?;
        require(self.wronskian_step > 0.0, "wronskian_step", "must be positive")?;
        if !self.wronskian_potentials.is_empty() {
            build_all(&self.wronskian_potentials, base, Dimension::One, "wronskian_potentials")?;
        }
        Ok(())
    }

    fn run(&self, ctx: &Context) -> Result<Outcome, RunError> {
        let mut out = Outcome::default();
        out.tolerance("log_slope", self.slope_limit);
        out.tolerance("wronskian_stability", self.stability_limit);
        let table = out.timed("uniform bounds", || {
            pruf_uniform_bounds(self.lambda0, self.n_max, &self.truncations).map_err(failed("wiener"))
        })?;
        let mut pruf = Table::new("pruf_table", &["n", "L", "l1_norm", "direct_l1_norm", "proxy"]);
        for c in &table.cells {
            pruf.push([c.n.to_string(), num(c.truncation), num(c.l1_norm), num(c.direct), c.proxy.to_string()]);
        }
        let finite = table.cells.iter().all(|c| c.l1_norm.is_finite());
        out.verdicts.push(Verdict::holds("cells finite", finite, format!("{} cells", table.cells.len())));
        out.verdicts.push(Verdict::at_most(
            "log slope",
            table.max_slope,
            self.slope_limit,
            format!("largest slope of log‖·‖ against log L is {:.4}", table.max_slope),
        ));

        let vs = if self.wronskian_potentials.is_empty() {
            Vec::new()
        } else {
            build_all(&self.wronskian_potentials, &ctx.base_dir, Dimension::One, "wronskian_potentials")?
        };
        let ratios = out.timed("wronskian ratios", || {
            vs.par_iter()
                .map(|v| {
                    let mut norms = Vec::new();
                    for step in [self.wronskian_step, 0.5 * self.wronskian_step] {
                        let w = sample_wronskian(v, 1.0, step, 1e-12).map_err(failed("wiener"))?;
                        // A vanishing Wronskian at 0 needs the reduced ratio.
                        let (r, reduced) = match w.raw_check(self.wronskian_floor) {
                            Ok(r) => (r, false),
                            Err(crate::Error::Singular(_)) => {
                                (w.reduced_check(self.wronskian_floor).map_err(failed("wiener"))?, true)
                            }
                            Err(e) => return Err(failed("wiener")(e)),
                        };
                        norms.push((step, w.chi_tilde_w_l1().map_err(failed("wiener"))?.value, r.ratio_l1.value, reduced));
                    }
                    Ok(norms)
                })
                .collect::<Result<Vec<_>, RunError>>()
        })?;
        let mut wr = Table::new("wronskian_l1", &["potential", "lambda_step", "chi_w_l1", "ratio_l1", "reduced"]);
        for (np, rows) in self.wronskian_potentials.iter().zip(&ratios) {
            for (step, wl1, rl1, red) in rows {
                wr.push([np.name.clone(), num(*step), num(*wl1), num(*rl1), red.to_string()]);
            }
            let change = (rows[0].2 - rows[1].2).abs() / rows[1].2;
            out.verdicts.push(Verdict::at_most(
                format!("{}: ratio norm stability", np.name),
                change,
                self.stability_limit,
                format!("relative change {change:.2e} when the λ step halves"),
            ));
        }
        out.summary = json!({ "pruf": table, "wronskian": ratios });
        out.tables = vec![pruf, wr];
        Ok(out)
    }
}
