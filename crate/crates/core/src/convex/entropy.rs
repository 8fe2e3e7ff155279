//! Proximal map of the negative entropy restricted to the simplex.

use crate::error::{Error, Result};
use crate::linops::Vector;

const TOL: f64 = 1e-12;
const MAX_ITER: usize = 100;

/// `argmin_p ½‖p - v‖² + t Σ p_i log p_i` over the probability simplex.
///
/// Each coordinate solves `p + t log p = v_i - t - ν`; the multiplier `ν`
/// is found by safeguarded Newton on `Σ p_i(ν) = 1`.
pub(crate) fn prox_neg_entropy(v: &Vector, t: f64) -> Result<Vector> {
    let k = v.dim() as f64;
    let vmax = v.max();
    // Σp >= 1 at `lo` (the largest coordinate alone reaches 1) and Σp <= 1 at `hi`.
    let mut lo = vmax - t - 1.0;
    let mut hi = vmax - t - 1.0 / k + t * k.ln();
    let weights = |nu: f64| -> Vec<f64> { v.iter().map(|&vi| coordinate(vi - t - nu, t)).collect() };

    let mut nu = 0.5 * (lo + hi);
    let mut p = weights(nu);
    for _ in 0..MAX_ITER {
        let excess: f64 = p.iter().sum::<f64>() - 1.0;
        if excess.abs() <= TOL {
            break;
        }
        if excess > 0.0 {
            lo = nu;
        } else {
            hi = nu;
        }
        // dp/dν = -p / (p + t)
        let slope: f64 = -p.iter().map(|&pi| pi / (pi + t)).sum::<f64>();
        let newton = nu - excess / slope;
        nu = if slope < 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        p = weights(nu);
        if hi - lo <= f64::EPSILON * (1.0 + nu.abs()) {
            break;
        }
    }
    let total: f64 = p.iter().sum();
    if !(total > 0.0 && total.is_finite()) || (total - 1.0).abs() > 1e-6 {
        return Err(Error::NoConvergence { iterations: MAX_ITER, residual: (total - 1.0).abs() });
    }
    Ok(Vector::from_raw(p.into_iter().map(|x| x / total).collect()))
}

/// Root `p = e^x` of `e^x + t x = c`.
fn coordinate(c: f64, t: f64) -> f64 {
    // Newton on a convex increasing function from a point right of the root
    // decreases monotonically.
    let mut x = if c > 0.0 { (c / t).min(c.ln().max(0.0)) } else { c / t };
    for _ in 0..MAX_ITER {
        let e = x.exp();
        let step = (e + t * x - c) / (e + t);
        x -= step;
        if step.abs() <= 1e-15 * (1.0 + x.abs()) {
            break;
        }
    }
    x.exp()
}
