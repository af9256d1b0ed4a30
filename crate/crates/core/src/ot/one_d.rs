use crate::error::{Error, Result};

use super::pow_p;

/// p-Wasserstein distance between two equal-weight samples on the line.
///
/// On ℝ the optimal coupling matches order statistics, so the distance is
/// `((1/N) Σ_i |a_(i) − b_(i)|^p)^(1/p)`. Inputs need not be sorted.
pub fn wasserstein_1d(a: &[f64], b: &[f64], p: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::config(format!(
            "equal sample counts required, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::config("samples must be non-empty"));
    }
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::config(format!("Wasserstein order p must be positive, got {p}")));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    Ok(sorted_power_cost(&a, &b, p).powf(1.0 / p))
}

/// `(1/N) Σ |a_i − b_i|^p` for already sorted inputs.
pub(crate) fn sorted_power_cost(a: &[f64], b: &[f64], p: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| pow_p((x - y).abs(), p)).sum::<f64>() / a.len() as f64
}
