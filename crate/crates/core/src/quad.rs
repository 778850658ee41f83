//! Quadrature rules: Gauss–Legendre, a Legendre-expansion Filon rule for
//! linear phases, and the panel-wise chirp rule built on top of it.

use num_complex::Complex;

use crate::scalar::{lit, Real};

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre needs at least one node");
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Newton iteration in f64, then converted.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = lit(-x);
            nodes[n - 1 - i] = lit(x);
            weights[i] = lit(w);
            weights[n - 1 - i] = lit(w);
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        let half = (b - a) / lit(2.0);
        let mid = (a + b) / lit(2.0);
        let mut acc = T::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += *w * f(mid + half * *x);
        }
        acc * half
    }

    /// Composite rule with `panels` equal panels on `[a, b]`.
    pub fn composite<F: FnMut(T) -> T>(&self, a: T, b: T, panels: usize, mut f: F) -> T {
        let h = (b - a) / lit(panels as f64);
        (0..panels)
            .map(|p| {
                let lo = a + h * lit(p as f64);
                self.integrate(lo, lo + h, &mut f)
            })
            .fold(T::zero(), |s, v| s + v)
    }

    /// Composite rule over the consecutive intervals of `breaks`.
    pub fn over_breaks<F: FnMut(T) -> T>(&self, breaks: &[T], mut f: F) -> T {
        breaks
            .windows(2)
            .map(|w| self.integrate(w[0], w[1], &mut f))
            .fold(T::zero(), |s, v| s + v)
    }

    /// Nodes and weights of the composite rule over `breaks`, flattened.
    pub fn composite_points(&self, breaks: &[T]) -> (Vec<T>, Vec<T>) {
        let mut xs = Vec::with_capacity(breaks.len() * self.len());
        let mut ws = Vec::with_capacity(breaks.len() * self.len());
        for w in breaks.windows(2) {
            let half = (w[1] - w[0]) / lit(2.0);
            let mid = (w[0] + w[1]) / lit(2.0);
            for (x, wt) in self.nodes.iter().zip(&self.weights) {
                xs.push(mid + half * *x);
                ws.push(*wt * half);
            }
        }
        (xs, ws)
    }
}

/// Legendre polynomial `P_n(x)` and its derivative (f64, used for node setup).
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Spherical Bessel functions `j_0(w) .. j_{m_max}(w)`.
///
/// Upward recurrence when `|w| > m_max`, otherwise Miller's downward
/// recurrence normalised with `sum (2m+1) j_m^2 = 1`.
pub fn spherical_bessel_j<T: Real>(w: T, m_max: usize) -> Vec<T> {
    let mut out = vec![T::zero(); m_max + 1];
    let aw = w.abs();
    if aw < lit(1e-6) {
        // Leading series terms.
        let mut term = T::one();
        for (m, o) in out.iter_mut().enumerate() {
            if m > 0 {
                term = term * w / lit((2 * m + 1) as f64);
            }
            *o = term;
        }
        out[0] = T::one() - w * w / lit(6.0);
        return out;
    }
    let (s, c) = (w.sin(), w.cos());
    if aw > lit(m_max as f64) {
        out[0] = s / w;
        if m_max >= 1 {
            out[1] = s / (w * w) - c / w;
        }
        for m in 1..m_max {
            out[m + 1] = lit::<T>((2 * m + 1) as f64) / w * out[m] - out[m - 1];
        }
        return out;
    }
    let start = m_max + 20 + to_usize(aw);
    let mut jp1 = T::zero();
    let mut j = lit::<T>(1e-20);
    let mut norm = T::zero();
    let big = lit::<T>(1e20);
    for m in (0..=start).rev() {
        if m <= m_max {
            out[m] = j;
        }
        norm += lit::<T>((2 * m + 1) as f64) * j * j;
        if m == 0 {
            break;
        }
        let jm1 = lit::<T>((2 * m + 1) as f64) / w * j - jp1;
        jp1 = j;
        j = jm1;
        if j.abs() > big {
            let scale = T::one() / big;
            j *= scale;
            jp1 *= scale;
            norm = norm * scale * scale;
            for o in out.iter_mut() {
                *o *= scale;
            }
        }
    }
    let mut scale = T::one() / norm.sqrt();
    // Fix the overall sign from the closed form of j_0 or j_1.
    let j0 = s / w;
    let j1 = s / (w * w) - c / w;
    let reference_sign = if j0.abs() >= j1.abs() {
        (j0 * out[0]).signum()
    } else {
        let ratio_j1 = if m_max >= 1 { out[1] } else { out[0] };
        (j1 * ratio_j1).signum()
    };
    scale *= reference_sign;
    for o in out.iter_mut() {
        *o *= scale;
    }
    out
}

fn to_usize<T: Real>(x: T) -> usize {
    x.to_f64().map(|v| v.max(0.0) as usize).unwrap_or(0)
}

/// Filon-type rule for `∫_{-1}^{1} e^{iωs} q(s) ds`.
///
/// `q` is sampled at the Gauss–Legendre nodes, expanded in Legendre
/// polynomials, and each term is integrated exactly through
/// `∫ e^{iωs} P_m(s) ds = 2 i^m j_m(ω)`. Exact for polynomial `q` of degree
/// below the node count, for any `ω`.
#[derive(Debug, Clone)]
pub struct FilonLegendre<T> {
    pub rule: GaussLegendre<T>,
    /// `legendre[m][q] = (2m+1)/2 * w_q * P_m(s_q)`.
    projector: Vec<Vec<T>>,
}

impl<T: Real> FilonLegendre<T> {
    pub fn new(n: usize) -> Self {
        let rule = GaussLegendre::<T>::new(n);
        let mut projector = vec![vec![T::zero(); n]; n];
        for (q, (&s, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
            let mut p0 = T::one();
            let mut p1 = s;
            for (m, row) in projector.iter_mut().enumerate() {
                let pm = match m {
                    0 => T::one(),
                    1 => s,
                    _ => {
                        let mf: T = lit(m as f64);
                        let p2 = ((lit::<T>(2.0) * mf - T::one()) * s * p1 - (mf - T::one()) * p0) / mf;
                        p0 = p1;
                        p1 = p2;
                        p2
                    }
                };
                row[q] = lit::<T>((2 * m + 1) as f64) / lit(2.0) * w * pm;
            }
        }
        Self { rule, projector }
    }

    pub fn nodes(&self) -> &[T] {
        &self.rule.nodes
    }

    /// `∫_{-1}^{1} e^{iωs} q(s) ds` from samples of `q` at the nodes.
    pub fn integrate(&self, omega: T, samples: &[Complex<T>]) -> Complex<T> {
        self.integrate_with_tail(omega, samples).0
    }

    /// As [`Self::integrate`], also returning `|c_{n-2}| + |c_{n-1}|`, the
    /// size of the two highest Legendre coefficients (a resolution gauge).
    pub fn integrate_with_tail(&self, omega: T, samples: &[Complex<T>]) -> (Complex<T>, T) {
        let n = self.rule.len();
        debug_assert_eq!(samples.len(), n);
        let j = spherical_bessel_j(omega, n - 1);
        let mut acc = Complex::new(T::zero(), T::zero());
        let mut tail = T::zero();
        // i^m cycles through 1, i, -1, -i.
        for (m, row) in self.projector.iter().enumerate() {
            let mut c = Complex::new(T::zero(), T::zero());
            for (p, s) in row.iter().zip(samples) {
                c += *s * *p;
            }
            if m + 2 >= n {
                tail += c.norm();
            }
            let im = match m % 4 {
                0 => Complex::new(T::one(), T::zero()),
                1 => Complex::new(T::zero(), T::one()),
                2 => Complex::new(-T::one(), T::zero()),
                _ => Complex::new(T::zero(), -T::one()),
            };
            acc += c * im * (lit::<T>(2.0) * j[m]);
        }
        (acc, tail)
    }
}

/// Panel layout for chirp integrals `∫_a^b e^{i(t k² + r k)} A(k) dk`.
///
/// On a panel with centre `c` and half-width `δ` the phase is
/// `t c² + r c + (2tc + r) δ s + t δ² s²`; the linear part is integrated
/// exactly by [`FilonLegendre`] and the quadratic remainder is folded into
/// the amplitude, which stays smooth while `t δ²` is O(1).
#[derive(Debug, Clone)]
pub struct ChirpRule<T> {
    pub filon: FilonLegendre<T>,
    pub centres: Vec<T>,
    pub half_width: T,
}

impl<T: Real> ChirpRule<T> {
    /// Uniform panels on `[a, b]` with half-width at most `max_half_width`.
    pub fn new(a: T, b: T, max_half_width: T, nodes_per_panel: usize) -> Self {
        let len = b - a;
        let panels = (len / (lit::<T>(2.0) * max_half_width)).ceil().max(T::one());
        let n = to_usize(panels).max(1);
        let half_width = len / lit(2.0 * n as f64);
        let centres = (0..n)
            .map(|p| a + half_width * lit((2 * p + 1) as f64))
            .collect();
        Self { filon: FilonLegendre::new(nodes_per_panel), centres, half_width }
    }

    /// Panel half-width suited to chirp rate `t_max`: `min(cap, 0.5/√t_max)`.
    pub fn half_width_for(t_max: T, cap: T) -> T {
        let w = lit::<T>(0.5) / t_max.abs().max(T::one()).sqrt();
        w.min(cap)
    }

    /// All quadrature abscissae, panel-major.
    pub fn points(&self) -> Vec<T> {
        let mut pts = Vec::with_capacity(self.centres.len() * self.filon.nodes().len());
        for c in &self.centres {
            for s in self.filon.nodes() {
                pts.push(*c + self.half_width * *s);
            }
        }
        pts
    }

    pub fn len(&self) -> usize {
        self.centres.len() * self.filon.nodes().len()
    }

    pub fn is_empty(&self) -> bool {
        self.centres.is_empty()
    }

    /// `∫ e^{i(t k² + r k)} A(k) dk` with `A` sampled at [`Self::points`].
    pub fn integrate(&self, t: T, r: T, amplitude: &[Complex<T>]) -> Complex<T> {
        self.integrate_with_error(t, r, amplitude).0
    }

    /// Integral plus an error gauge: the summed size of the highest Legendre
    /// coefficients of each panel's amplitude, times the panel length.
    pub fn integrate_with_error(&self, t: T, r: T, amplitude: &[Complex<T>]) -> (Complex<T>, T) {
        let p = self.filon.nodes().len();
        debug_assert_eq!(amplitude.len(), self.len());
        let d = self.half_width;
        let two: T = lit(2.0);
        let mut buf = vec![Complex::new(T::zero(), T::zero()); p];
        let mut acc = Complex::new(T::zero(), T::zero());
        let mut err = T::zero();
        for (panel, c) in self.centres.iter().enumerate() {
            let amp = &amplitude[panel * p..(panel + 1) * p];
            if amp.iter().all(|a| a.re == T::zero() && a.im == T::zero()) {
                continue;
            }
            for ((b, a), s) in buf.iter_mut().zip(amp).zip(self.filon.nodes()) {
                *b = *a * Complex::from_polar(T::one(), t * d * d * *s * *s);
            }
            let omega = (two * t * *c + r) * d;
            let theta = t * *c * *c + r * *c;
            let (v, tail) = self.filon.integrate_with_tail(omega, &buf);
            acc += v * Complex::from_polar(d, theta);
            err += tail * two * d;
        }
        (acc, err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::<f64>::new(6);
        let v = gl.integrate(-1.0, 2.0, |x| x.powi(11) - 3.0 * x.powi(4) + 1.0);
        let exact = (2f64.powi(12) - 1.0) / 12.0 - 3.0 * (32.0 + 1.0) / 5.0 + 3.0;
        assert_relative_eq!(v, exact, max_relative = 1e-13);
        assert_relative_eq!(gl.weights.iter().sum::<f64>(), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn spherical_bessel_matches_closed_forms() {
        for &w in &[1e-3, 0.3, 2.0, 7.5, 25.0, 400.0, -3.0] {
            let j = spherical_bessel_j::<f64>(w, 11);
            let j0 = w.sin() / w;
            let j1 = w.sin() / (w * w) - w.cos() / w;
            let j2 = (3.0 / (w * w) - 1.0) * w.sin() / w - 3.0 * w.cos() / (w * w);
            assert!((j[0] - j0).abs() < 1e-12, "j0 at {w}");
            assert!((j[1] - j1).abs() < 1e-10, "j1 at {w}");
            assert!((j[2] - j2).abs() < 1e-8 * (1.0 + j2.abs()), "j2 at {w}");
        }
    }

    #[test]
    fn filon_exact_for_polynomial_amplitude() {
        let f = FilonLegendre::<f64>::new(8);
        for &w in &[0.0, 0.5, 40.0, 1000.0] {
            let samples: Vec<_> = f.nodes().iter().map(|&s| Complex::new(s * s, 0.0)).collect();
            let got = f.integrate(w, &samples);
            // ∫ s² cos(ws) ds over [-1,1].
            let exact = if w == 0.0 {
                2.0 / 3.0
            } else {
                2.0 * ((w * w - 2.0) * w.sin() + 2.0 * w * w.cos()) / w.powi(3)
            };
            assert!((got.re - exact).abs() < 1e-12, "w = {w}: {} vs {exact}", got.re);
            assert!(got.im.abs() < 1e-12);
        }
    }

    #[test]
    fn chirp_rule_reproduces_gaussian_fresnel_integral() {
        // ∫ e^{itk² + irk} e^{-k²} dk = sqrt(π/(1-it)) e^{-r²/(4(1-it))}
        let (t, r) = (7.0, 3.0);
        let rule = ChirpRule::<f64>::new(-8.0, 8.0, ChirpRule::half_width_for(t, 0.25), 10);
        let amp: Vec<_> = rule.points().iter().map(|k| Complex::new((-k * k).exp(), 0.0)).collect();
        let got = rule.integrate(t, r, &amp);
        let z = Complex::new(1.0, -t);
        let exact = (Complex::new(std::f64::consts::PI, 0.0) / z).sqrt() * (-(r * r) / (4.0 * z)).exp();
        assert!((got - exact).norm() < 1e-10, "{got} vs {exact}");
    }
}
