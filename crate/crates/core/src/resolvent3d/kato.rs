//! Monte Carlo check of the iterated Kato-norm bound
//! `sup_{x₀,x_{k+1}} ∫ Π|V(x_j)| Σ_ℓ Π_{j≠ℓ} |x_j - x_{j+1}|⁻¹ dx₁…dx_k ≤ (k+1)‖V‖_K^k`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::potentials::{Dimension, Potential};
use crate::quad::GaussLegendre;

use super::hs::{dot, monte_carlo, scale, unit_vector, McSpec};

/// Relative standard error above which an estimate is refused.
pub const MAX_RELATIVE_STDERR: f64 = 0.05;
const CELLS: usize = 256;

/// Piecewise-uniform (in volume) sampler approximating `|V|/‖V‖₁` on radial cells.
struct RadialCells {
    edges: Vec<f64>,
    cumulative: Vec<f64>,
    /// Cell probability over cell volume.
    density: Vec<f64>,
}

impl RadialCells {
    fn new(v: &Potential<f64>) -> Self {
        let (_, hi) = v.truncation_interval(1.0);
        let mut edges: Vec<f64> = (0..=CELLS).map(|i| hi * i as f64 / CELLS as f64).collect();
        edges.extend(v.breakpoints().into_iter().filter(|b| *b > 0.0 && *b < hi));
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        edges.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
        let gl = GaussLegendre::<f64>::new(8);
        let four_pi = 4.0 * std::f64::consts::PI;
        let masses: Vec<f64> =
            edges.windows(2).map(|e| four_pi * gl.integrate(e[0], e[1], |s| v.value(s).abs() * s * s)).collect();
        let total: f64 = masses.iter().sum();
        let mut acc = 0.0;
        let cumulative = masses
            .iter()
            .map(|m| {
                acc += m / total;
                acc
            })
            .collect();
        let density = masses
            .iter()
            .zip(edges.windows(2))
            .map(|(m, e)| m / total / (four_pi / 3.0 * (e[1].powi(3) - e[0].powi(3))))
            .collect();
        Self { edges, cumulative, density }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> ([f64; 3], f64) {
        let u: f64 = rng.random();
        let c = self.cumulative.partition_point(|p| *p < u).min(self.density.len() - 1);
        let (a, b) = (self.edges[c], self.edges[c + 1]);
        let t: f64 = rng.random();
        let r = (a.powi(3) + t * (b.powi(3) - a.powi(3))).cbrt();
        (scale(unit_vector(rng), r), self.density[c])
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KatoBound {
    pub k: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub bound: f64,
    pub kato_norm: f64,
    /// Probe pair attaining the supremum.
    pub worst_pair: ([f64; 3], [f64; 3]),
    pub samples: usize,
    pub seed: u64,
}

impl KatoBound {
    /// `estimate ≤ bound` up to `sigmas` standard errors.
    pub fn holds(&self, sigmas: f64) -> bool {
        self.estimate <= self.bound + sigmas * self.stderr
    }
}

/// Probe points on the z axis at radii 0, 1/2, 1, 2 (both signs).
pub fn default_probes() -> Vec<[f64; 3]> {
    let mut p = vec![[0.0; 3]];
    for r in [0.5, 1.0, 2.0] {
        p.push([0.0, 0.0, r]);
        p.push([0.0, 0.0, -r]);
    }
    p
}

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    dot(&d, &d).sqrt()
}

/// `Σ_ℓ Π_{j≠ℓ} 1/d_j` for the chain distances `d_0..d_k`.
fn chain_weight(d: &[f64]) -> f64 {
    let mut total = 0.0;
    for skip in 0..d.len() {
        total += d.iter().enumerate().filter(|(j, _)| *j != skip).map(|(_, x)| 1.0 / x).product::<f64>();
    }
    total
}

pub fn iterated_kato_bound(v: &Potential<f64>, k: usize, spec: McSpec, probes: &[[f64; 3]]) -> Result<KatoBound> {
    if v.dimension != Dimension::Three {
        return invalid("iterated Kato bound needs a three-dimensional potential");
    }
    if !(1..=3).contains(&k) {
        return invalid(format!("k = {k} outside 1..=3"));
    }
    if probes.is_empty() {
        return invalid("no probe points");
    }
    let kato = v.kato_norm(&[0.25, 0.5, 1.0, 2.0, 4.0])?;
    if !kato.is_finite() {
        return Err(Error::Precondition("Kato norm is not finite".into()));
    }
    let bound = (k + 1) as f64 * kato.powi(k as i32);
    let pairs: Vec<(usize, usize)> = (0..probes.len()).flat_map(|i| (i..probes.len()).map(move |j| (i, j))).collect();
    if v.is_zero() {
        return Ok(KatoBound { k, estimate: 0.0, stderr: 0.0, bound, kato_norm: kato, worst_pair: (probes[0], probes[0]), samples: 0, seed: spec.seed });
    }
    let cells = RadialCells::new(v);
    let mut best: Option<(f64, f64, usize)> = None;
    for (p, (i, j)) in pairs.iter().enumerate() {
        let (x0, xk) = (probes[*i], probes[*j]);
        // Common random numbers: every pair sees the same chain samples.
        let est = monte_carlo(spec, |rng| {
            let mut chain = Vec::with_capacity(k + 2);
            chain.push(x0);
            let mut weight = 1.0;
            for _ in 0..k {
                let (x, q) = cells.sample(rng);
                weight *= v.value(dot(&x, &x).sqrt()).abs() / q;
                chain.push(x);
            }
            chain.push(xk);
            let d: Vec<f64> = chain.windows(2).map(|w| distance(&w[0], &w[1])).collect();
            weight * chain_weight(&d)
        });
        if best.is_none_or(|b| est.mean > b.0) {
            best = Some((est.mean, est.stderr, p));
        }
    }
    let (estimate, stderr, p) = best.expect("at least one pair");
    if stderr > MAX_RELATIVE_STDERR * estimate {
        let rel = stderr / estimate;
        return Err(Error::ResourceLimit(format!(
            "relative standard error {rel:.3} exceeds {MAX_RELATIVE_STDERR}; use at least {} samples",
            (spec.samples as f64 * (rel / MAX_RELATIVE_STDERR).powi(2)).ceil()
        )));
    }
    let (i, j) = pairs[p];
    Ok(KatoBound { k, estimate, stderr, bound, kato_norm: kato, worst_pair: (probes[i], probes[j]), samples: spec.samples, seed: spec.seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball() -> Potential<f64> {
        Potential::boxed(Dimension::Three, 1.0, 1.0).unwrap()
    }

    fn spec() -> McSpec {
        McSpec { samples: 200_000, seed: 1 }
    }

    #[test]
    fn unit_ball_single_bound_is_sharp_at_the_centre() {
        let b = iterated_kato_bound(&ball(), 1, spec(), &default_probes()).unwrap();
        assert!((b.kato_norm - 2.0 * std::f64::consts::PI).abs() < 1e-9);
        assert!(b.holds(3.0), "{} vs {}", b.estimate, b.bound);
        // At x₀ = x₂ = 0 the integral is exactly 2‖V‖_K.
        assert!((b.estimate - b.bound).abs() < 4.0 * b.stderr, "{} ± {}", b.estimate, b.stderr);
    }

    #[test]
    fn iterated_bound_grows_geometrically() {
        let p = default_probes();
        let one = iterated_kato_bound(&ball(), 1, spec(), &p).unwrap();
        let two = iterated_kato_bound(&ball(), 2, spec(), &p).unwrap();
        let three = iterated_kato_bound(&ball(), 3, spec(), &p).unwrap();
        assert!(two.holds(3.0) && three.holds(3.0));
        let rel = (one.stderr / one.estimate).hypot(two.stderr / two.estimate);
        assert!(two.estimate / one.estimate <= 1.5 * one.kato_norm * (1.0 + 3.0 * rel));
    }

    #[test]
    fn zero_potential_and_bad_input() {
        let z = iterated_kato_bound(&Potential::zero(Dimension::Three), 2, spec(), &default_probes()).unwrap();
        assert_eq!(z.estimate, 0.0);
        assert!(iterated_kato_bound(&ball(), 4, spec(), &default_probes()).is_err());
        assert!(iterated_kato_bound(&ball(), 1, spec(), &[]).is_err());
        assert!(matches!(
            iterated_kato_bound(&ball(), 3, McSpec { samples: 20, seed: 1 }, &default_probes()),
            Err(Error::ResourceLimit(_))
        ));
    }
}
