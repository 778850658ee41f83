//! Potential families, sampled potentials, and the norms that gate the
//! dispersive estimates.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quad::GaussLegendre;
use crate::scalar::{lit, to_f64, Real};

/// Threshold below which the integrand majorant is treated as zero when
/// truncating closed-form potentials.
pub const TRUNCATION_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dimension {
    One,
    Three,
}

/// Shape of the potential. In dimension three the closed forms are radial
/// profiles `V(|x|)` and sampled data is a radial profile as well.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialForm<T> {
    Zero,
    /// `height` on `|x| <= half_width`.
    Box { height: T, half_width: T },
    /// `amplitude * exp(-(x/width)²)`.
    Gaussian { amplitude: T, width: T },
    /// `-coupling * sech²(x)`.
    PoschlTeller { coupling: T },
    /// Linear interpolation of `(grid, values)`, zero outside the grid.
    Sampled { grid: Vec<T>, values: Vec<T> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Potential<T> {
    pub dimension: Dimension,
    pub form: PotentialForm<T>,
    /// Dilation: the potential is `form(x / scale)`.
    pub scale: T,
    pub decay_exponent_hint: Option<T>,
}

/// A quadrature value with an error estimate from resolution doubling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl<T: Real> Potential<T> {
    pub fn new(dimension: Dimension, form: PotentialForm<T>) -> Result<Self> {
        if let PotentialForm::Sampled { grid, values } = &form {
            if grid.len() < 2 || grid.len() != values.len() {
                return invalid("sampled potential needs at least two (x, V) pairs of equal length");
            }
            if grid.windows(2).any(|w| !(w[1] > w[0])) {
                return invalid("sampled grid must be strictly increasing");
            }
            if grid.iter().chain(values).any(|v| !v.is_finite()) {
                return invalid("sampled potential contains non-finite values");
            }
            if dimension == Dimension::Three && grid[0] < T::zero() {
                return invalid("three-dimensional samples are a radial profile (r >= 0)");
            }
        }
        let params: Vec<T> = match &form {
            PotentialForm::Zero | PotentialForm::Sampled { .. } => vec![],
            PotentialForm::Box { height, half_width } => vec![*height, *half_width],
            PotentialForm::Gaussian { amplitude, width } => vec![*amplitude, *width],
            PotentialForm::PoschlTeller { coupling } => vec![*coupling],
        };
        if params.iter().any(|p| !p.is_finite()) {
            return invalid("potential parameters must be finite");
        }
        match &form {
            PotentialForm::Box { half_width, .. } if *half_width <= T::zero() => {
                return invalid("box half-width must be positive")
            }
            PotentialForm::Gaussian { width, .. } if *width <= T::zero() => {
                return invalid("gaussian width must be positive")
            }
            _ => {}
        }
        // Every built-in family decays faster than any power.
        Ok(Self { dimension, form, scale: T::one(), decay_exponent_hint: Some(T::infinity()) })
    }

    pub fn zero(dimension: Dimension) -> Self {
        Self::new(dimension, PotentialForm::Zero).expect("zero potential")
    }

    pub fn boxed(dimension: Dimension, height: T, half_width: T) -> Result<Self> {
        Self::new(dimension, PotentialForm::Box { height, half_width })
    }

    pub fn gaussian(dimension: Dimension, amplitude: T, width: T) -> Result<Self> {
        Self::new(dimension, PotentialForm::Gaussian { amplitude, width })
    }

    pub fn poschl_teller(dimension: Dimension, coupling: T) -> Result<Self> {
        Self::new(dimension, PotentialForm::PoschlTeller { coupling })
    }

    pub fn sampled(dimension: Dimension, grid: Vec<T>, values: Vec<T>) -> Result<Self> {
        Self::new(dimension, PotentialForm::Sampled { grid, values })
    }

    /// `V(x / s)`.
    pub fn dilated(&self, s: T) -> Result<Self> {
        if !(s > T::zero()) || !s.is_finite() {
            return invalid("dilation factor must be positive and finite");
        }
        let mut out = self.clone();
        out.scale = self.scale * s;
        Ok(out)
    }

    /// `c · V`.
    pub fn scaled_by(&self, c: T) -> Self {
        let mut out = self.clone();
        out.form = match &self.form {
            PotentialForm::Zero => PotentialForm::Zero,
            PotentialForm::Box { height, half_width } => {
                PotentialForm::Box { height: *height * c, half_width: *half_width }
            }
            PotentialForm::Gaussian { amplitude, width } => {
                PotentialForm::Gaussian { amplitude: *amplitude * c, width: *width }
            }
            PotentialForm::PoschlTeller { coupling } => PotentialForm::PoschlTeller { coupling: *coupling * c },
            PotentialForm::Sampled { grid, values } => PotentialForm::Sampled {
                grid: grid.clone(),
                values: values.iter().map(|v| *v * c).collect(),
            },
        };
        out
    }

    pub fn is_zero(&self) -> bool {
        match &self.form {
            PotentialForm::Zero => true,
            PotentialForm::Box { height, .. } => *height == T::zero(),
            PotentialForm::Gaussian { amplitude, .. } => *amplitude == T::zero(),
            PotentialForm::PoschlTeller { coupling } => *coupling == T::zero(),
            PotentialForm::Sampled { values, .. } => values.iter().all(|v| *v == T::zero()),
        }
    }

    /// Value at `x` (1D) or at radius `x` (3D).
    pub fn value(&self, x: T) -> T {
        let x = if self.dimension == Dimension::Three { x.abs() } else { x };
        let u = x / self.scale;
        match &self.form {
            PotentialForm::Zero => T::zero(),
            PotentialForm::Box { height, half_width } => {
                if u.abs() <= *half_width {
                    *height
                } else {
                    T::zero()
                }
            }
            PotentialForm::Gaussian { amplitude, width } => {
                let z = u / *width;
                *amplitude * (-z * z).exp()
            }
            PotentialForm::PoschlTeller { coupling } => {
                let c = u.cosh();
                if !c.is_finite() {
                    T::zero()
                } else {
                    -*coupling / (c * c)
                }
            }
            PotentialForm::Sampled { grid, values } => interpolate(grid, values, u),
        }
    }

    /// Points where `V` is discontinuous or has a kink (quadrature breaks).
    pub fn breakpoints(&self) -> Vec<T> {
        let s = self.scale;
        let mut b = match &self.form {
            PotentialForm::Box { half_width, .. } => vec![-*half_width * s, *half_width * s],
            PotentialForm::Sampled { grid, .. } => grid.iter().map(|g| *g * s).collect(),
            _ => vec![],
        };
        if self.dimension == Dimension::Three {
            b.retain(|x| *x > T::zero());
        }
        b
    }

    /// Extent `[lo, hi]` of the region where `|V|·(1+|x|)^γ` exceeds the
    /// truncation floor. Compactly supported forms return their support.
    pub fn truncation_interval(&self, gamma: T) -> (T, T) {
        let s = self.scale;
        match &self.form {
            PotentialForm::Zero => (T::zero(), T::zero()),
            PotentialForm::Box { half_width, .. } => (-*half_width * s, *half_width * s),
            PotentialForm::Sampled { grid, .. } => (grid[0] * s, grid[grid.len() - 1] * s),
            _ => {
                let floor: T = lit(TRUNCATION_FLOOR);
                let majorant = |r: T| self.value(r).abs().max(self.value(-r).abs()) * (T::one() + r).powf(gamma);
                let mut r = s;
                while majorant(r) > floor && r < lit(1e6) {
                    r *= lit(1.25);
                }
                (-r, r)
            }
        }
    }

    /// Quadrature breaks over `[lo, hi]`, including discontinuities.
    fn breaks(&self, lo: T, hi: T, panels: usize) -> Vec<T> {
        let mut b: Vec<T> = (0..=panels)
            .map(|i| lo + (hi - lo) * lit(i as f64 / panels as f64))
            .collect();
        for p in self.breakpoints() {
            if p > lo && p < hi {
                b.push(p);
            }
        }
        b.sort_by(|a, c| a.partial_cmp(c).expect("finite breaks"));
        b.dedup_by(|a, c| (*a - *c).abs() < lit(1e-14));
        b
    }

    /// `∫_{lo}^{hi} f(x) dx` with doubling-based error estimate.
    pub fn integrate_1d<F: Fn(T) -> T>(&self, lo: T, hi: T, f: F) -> Estimate {
        if !(hi > lo) {
            return Estimate { value: 0.0, error: 0.0 };
        }
        let gl = GaussLegendre::<T>::new(10);
        let coarse = gl.over_breaks(&self.breaks(lo, hi, 64), &f);
        let fine = gl.over_breaks(&self.breaks(lo, hi, 128), &f);
        Estimate { value: to_f64(fine), error: to_f64((fine - coarse).abs()) }
    }

    /// `∫ |V(x)| (1+|x|)^γ dx` over the real line (1D only).
    pub fn weighted_l1_norm(&self, gamma: T, truncation: Option<T>) -> Result<Estimate> {
        if self.dimension != Dimension::One {
            return invalid("weighted L1 norm is defined for one-dimensional potentials");
        }
        if gamma < T::zero() || !gamma.is_finite() {
            return invalid("weight exponent must be non-negative");
        }
        if self.is_zero() {
            return Ok(Estimate { value: 0.0, error: 0.0 });
        }
        let (lo, hi) = match truncation {
            Some(r) => {
                let (slo, shi) = self.truncation_interval(gamma);
                if matches!(self.form, PotentialForm::Box { .. }) && (r < shi || -r > slo) {
                    return invalid("truncation radius smaller than the support of the potential");
                }
                (-r, r)
            }
            None => self.truncation_interval(gamma),
        };
        Ok(self.integrate_1d(lo, hi, |x| self.value(x).abs() * (T::one() + x.abs()).powf(gamma)))
    }

    /// `I(ξ) = ∫_{|t| > ξ} |V(t)| dt` (1D).
    pub fn tail_mass(&self, xi: T) -> Result<f64> {
        if xi < T::zero() {
            return invalid("tail mass needs ξ >= 0");
        }
        let (lo, hi) = self.truncation_interval(T::zero());
        let right = self.integrate_1d(xi.max(lo), hi, |x| self.value(x).abs()).value;
        let left = self.integrate_1d(lo, (-xi).min(hi), |x| self.value(x).abs()).value;
        Ok(right + left)
    }

    /// Radial Kato potential `∫ |V(y)| / |x - y| dy` at `|x| = r` (3D),
    /// by the shell theorem:
    /// `4π [ r⁻¹ ∫_0^r |V| s² ds + ∫_r^∞ |V| s ds ]`.
    pub fn kato_potential(&self, r: T) -> f64 {
        let (_, hi) = self.truncation_interval(lit(1.0));
        let r = r.abs();
        let four_pi = 4.0 * std::f64::consts::PI;
        let inner = if r > T::zero() {
            self.integrate_1d(T::zero(), r.min(hi), |s| self.value(s).abs() * s * s).value / to_f64(r)
        } else {
            0.0
        };
        let outer = self.integrate_1d(r, hi, |s| self.value(s).abs() * s).value;
        four_pi * (inner + outer)
    }

    /// Kato norm `sup_x ∫ |V(y)| / |x - y| dy` over the radii in `sup_grid`
    /// (the origin is always added).
    pub fn kato_norm(&self, sup_grid: &[T]) -> Result<f64> {
        if self.dimension != Dimension::Three {
            return invalid("Kato norm is defined for three-dimensional potentials");
        }
        if sup_grid.is_empty() {
            return invalid("empty sup grid for the Kato norm");
        }
        let mut best = self.kato_potential(T::zero());
        for r in sup_grid {
            best = best.max(self.kato_potential(*r));
        }
        Ok(best)
    }
}

/// Independent evaluation of the Kato potential at a point at distance `r`
/// from the origin: spherical coordinates centred at the point, where the
/// `|x - y|⁻¹` singularity cancels against the `ρ²` Jacobian.
pub fn kato_potential_nested(v: &Potential<f64>, r: f64, rho_panels: usize) -> f64 {
    let gl = GaussLegendre::<f64>::new(12);
    let (_, hi) = v.truncation_interval(1.0);
    let rho_max = hi + r;
    let mut rho_breaks: Vec<f64> = (0..=rho_panels).map(|i| rho_max * i as f64 / rho_panels as f64).collect();
    for b in v.breakpoints() {
        for cand in [b - r, b + r, r - b] {
            if cand > 0.0 && cand < rho_max {
                rho_breaks.push(cand);
            }
        }
    }
    rho_breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    rho_breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    let bps = v.breakpoints();
    gl.over_breaks(&rho_breaks, |rho| {
        // μ-integration: |y|² = r² + ρ² + 2rρμ; break where |y| crosses a breakpoint.
        let mut mu_breaks = vec![-1.0, 1.0];
        if r > 0.0 && rho > 0.0 {
            for b in &bps {
                let mu = (b * b - r * r - rho * rho) / (2.0 * r * rho);
                if mu > -1.0 && mu < 1.0 {
                    mu_breaks.push(mu);
                }
            }
        }
        mu_breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ang = gl.over_breaks(&mu_breaks, |mu| {
            let y2 = (r * r + rho * rho + 2.0 * r * rho * mu).max(0.0);
            v.value(y2.sqrt()).abs()
        });
        2.0 * std::f64::consts::PI * rho * ang
    })
}

fn interpolate<T: Real>(grid: &[T], values: &[T], x: T) -> T {
    let n = grid.len();
    if x < grid[0] || x > grid[n - 1] {
        return T::zero();
    }
    let idx = match grid.binary_search_by(|g| g.partial_cmp(&x).expect("finite grid")) {
        Ok(i) => return values[i],
        Err(i) => i,
    };
    let (x0, x1) = (grid[idx - 1], grid[idx]);
    let w = (x - x0) / (x1 - x0);
    values[idx - 1] * (T::one() - w) + values[idx] * w
}

/// JSON description of a potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub dimension: u8,
    pub shape: FormConfig,
    #[serde(default)]
    pub scale: Option<f64>,
    #[serde(default)]
    pub decay_exponent_hint: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum FormConfig {
    Zero,
    Box { height: f64, half_width: f64 },
    Gaussian { amplitude: f64, width: f64 },
    PoschlTeller { coupling: f64 },
    Sampled { path: String },
}

impl PotentialConfig {
    /// Builds the potential; sampled paths are resolved relative to `base`.
    pub fn build(&self, base: Option<&Path>) -> Result<Potential<f64>> {
        let dim = match self.dimension {
            1 => Dimension::One,
            3 => Dimension::Three,
            d => return invalid(format!("dimension must be 1 or 3, got {d}")),
        };
        let form = match &self.shape {
            FormConfig::Zero => PotentialForm::Zero,
            FormConfig::Box { height, half_width } => {
                PotentialForm::Box { height: *height, half_width: *half_width }
            }
            FormConfig::Gaussian { amplitude, width } => {
                PotentialForm::Gaussian { amplitude: *amplitude, width: *width }
            }
            FormConfig::PoschlTeller { coupling } => PotentialForm::PoschlTeller { coupling: *coupling },
            FormConfig::Sampled { path } => {
                let p = match base {
                    Some(b) if Path::new(path).is_relative() => b.join(path),
                    _ => Path::new(path).to_path_buf(),
                };
                let (grid, values) = read_samples(&p)?;
                PotentialForm::Sampled { grid, values }
            }
        };
        let mut v = Potential::new(dim, form)?;
        if let Some(s) = self.scale {
            v = v.dilated(s)?;
        }
        if let Some(h) = self.decay_exponent_hint {
            v.decay_exponent_hint = Some(h);
        }
        Ok(v)
    }
}

/// Reads a two-column `(x, V(x))` CSV; a non-numeric first row is a header.
pub fn read_samples(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let (mut xs, mut vs) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() < 2 {
            return invalid(format!("row {} of {} has fewer than two columns", i + 1, path.display()));
        }
        let parsed = (rec[0].parse::<f64>(), rec[1].parse::<f64>());
        match parsed {
            (Ok(x), Ok(v)) => {
                xs.push(x);
                vs.push(v);
            }
            _ if i == 0 => continue,
            _ => {
                return Err(Error::InvalidInput(format!(
                    "row {} of {} is not numeric",
                    i + 1,
                    path.display()
                )))
            }
        }
    }
    Ok((xs, vs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn one() -> Dimension {
        Dimension::One
    }

    #[test]
    fn l1_norms_of_reference_potentials() {
        let z = Potential::<f64>::zero(one());
        assert_eq!(z.weighted_l1_norm(1.0, None).unwrap().value, 0.0);
        let b = Potential::boxed(one(), 1.0, 1.0).unwrap();
        assert!((b.weighted_l1_norm(0.0, None).unwrap().value - 2.0).abs() < 1e-12);
        // ∫_{-1}^{1} (1+|x|) dx = 3
        assert!((b.weighted_l1_norm(1.0, None).unwrap().value - 3.0).abs() < 1e-12);
        let g = Potential::gaussian(one(), 1.0, 1.0).unwrap();
        assert!((g.weighted_l1_norm(0.0, None).unwrap().value - PI.sqrt()).abs() < 1e-10);
        let pt = Potential::poschl_teller(one(), 2.0).unwrap();
        assert!((pt.weighted_l1_norm(0.0, None).unwrap().value - 4.0).abs() < 1e-9);
    }

    #[test]
    fn l1_norm_rejects_bad_input() {
        let g = Potential::gaussian(one(), 1.0, 1.0).unwrap();
        assert!(g.weighted_l1_norm(-1.0, None).is_err());
        assert!(Potential::sampled(one(), vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
        assert!(Potential::sampled(one(), vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        let b = Potential::boxed(one(), 1.0, 1.0).unwrap();
        assert!(b.weighted_l1_norm(0.0, Some(0.5)).is_err());
    }

    #[test]
    fn l1_norm_monotone_in_gamma_and_truncation() {
        let g = Potential::gaussian(one(), 1.0, 1.0).unwrap();
        let mut prev = 0.0;
        for gamma in [0.0, 0.5, 1.0, 2.0] {
            let v = g.weighted_l1_norm(gamma, None).unwrap().value;
            assert!(v >= prev);
            prev = v;
        }
        let a = g.weighted_l1_norm(1.0, Some(1.0)).unwrap().value;
        let b = g.weighted_l1_norm(1.0, Some(2.0)).unwrap().value;
        assert!(b > a);
    }

    #[test]
    fn sampled_potential_interpolates_linearly() {
        let v = Potential::sampled(one(), vec![-1.0, 0.0, 1.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(v.value(0.5), 1.0);
        assert_eq!(v.value(2.0), 0.0);
        assert!((v.weighted_l1_norm(0.0, None).unwrap().value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tail_mass_of_box() {
        let b = Potential::boxed(one(), 1.0, 1.0).unwrap();
        assert!((b.tail_mass(0.5).unwrap() - 1.0).abs() < 1e-12);
        assert!((b.tail_mass(0.0).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(b.tail_mass(3.0).unwrap(), 0.0);
    }

    #[test]
    fn kato_norm_of_unit_ball() {
        let ball = Potential::boxed(Dimension::Three, 1.0, 1.0).unwrap();
        let grid: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let k = ball.kato_norm(&grid).unwrap();
        assert!((k - 2.0 * PI).abs() < 1e-10, "{k}");
        assert!(ball.kato_norm(&[]).is_err());
        assert_eq!(Potential::<f64>::zero(Dimension::Three).kato_norm(&[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn kato_potential_agrees_with_nested_quadrature_off_centre() {
        let ball = Potential::boxed(Dimension::Three, 1.0, 1.0).unwrap();
        for &r in &[0.3, 0.9, 1.7] {
            let shell = ball.kato_potential(r);
            let nested = kato_potential_nested(&ball, r, 64);
            assert!((shell - nested).abs() < 1e-6 * shell, "r={r}: {shell} vs {nested}");
        }
        let g = Potential::gaussian(Dimension::Three, 1.0, 1.0).unwrap();
        let shell = g.kato_potential(0.8);
        let nested = kato_potential_nested(&g, 0.8, 64);
        assert!((shell - nested).abs() < 1e-8 * shell);
    }

    #[test]
    fn kato_norm_scales_quadratically_under_dilation() {
        let ball = Potential::boxed(Dimension::Three, 1.0, 1.0).unwrap();
        let grid: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let base = ball.kato_norm(&grid).unwrap();
        for s in [0.5, 2.0] {
            let k = ball.dilated(s).unwrap().kato_norm(&grid).unwrap();
            assert!((k - s * s * base).abs() < 1e-8 * base, "s={s}");
        }
    }

    #[test]
    fn config_round_trip_and_csv_ingestion() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.csv");
        std::fs::write(&path, "x,V\n-1,0\n0,1\n1,0\n").unwrap();
        let cfg: PotentialConfig = serde_json::from_str(r#"{"dimension":1,"shape":{"form":"sampled","path":"v.csv"}}"#).unwrap();
        let v = cfg.build(Some(dir.path())).unwrap();
        assert!((v.weighted_l1_norm(0.0, None).unwrap().value - 1.0).abs() < 1e-12);
        let cfg: PotentialConfig =
            serde_json::from_str(r#"{"dimension":1,"shape":{"form":"gaussian","amplitude":1.0,"width":1.0}}"#).unwrap();
        assert_eq!(cfg.build(None).unwrap().value(0.0), 1.0);
        assert!(serde_json::from_str::<PotentialConfig>(r#"{"dimension":2,"shape":{"form":"zero"}}"#)
            .unwrap()
            .build(None)
            .is_err());
        assert!(serde_json::from_str::<PotentialConfig>(r#"{"dimension":1,"shape":{"form":"zero"},"extra":1}"#).is_err());
        assert!(serde_json::from_str::<PotentialConfig>(r#"{"dimension":1,"shape":{"form":"box","height":1,"half_width":1,"x":0}}"#).is_err());
    }
}
