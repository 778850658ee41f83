//! Least-squares power-law fits.

/// Slope and intercept of the least-squares line through `(x, y)`, plus the
/// RMS residual.
pub fn slope(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let rms = (xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum::<f64>() / n).sqrt();
    (b, a, rms)
}

/// Power-law fit `y ≈ C xᵖ` on log–log values: `(p, C, rms)`.
pub fn power_law(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (p, a, rms) = slope(&lx, &ly);
    (p, a.exp(), rms)
}
