//! Central finite differences, the reference every analytic gradient in the
//! crate is tested against.

use super::{matrix::norm, ParamStore};
use crate::error::{Error, Result};

/// `(f(x + h e_i) - f(x - h e_i)) / 2h` for every coordinate `i`.
pub fn finite_diff_grad<F>(mut f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(h > 0.0) {
        return Err(Error::InvalidConfig(format!("finite-difference step {h} must be > 0")));
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = f(&probe);
        probe[i] = x[i] - h;
        let fm = f(&probe);
        probe[i] = x[i];
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::NonFinite(format!("objective at coordinate {i} ± {h}")));
        }
        grad.push((fp - fm) / (2.0 * h));
    }
    Ok(grad)
}

/// [`finite_diff_grad`] over the values of a [`ParamStore`].
pub fn finite_diff_grad_store<F>(mut f: F, params: &ParamStore, h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&ParamStore) -> f64,
{
    let mut probe = params.clone();
    finite_diff_grad(
        |x| {
            probe.values_mut().copy_from_slice(x);
            f(&probe)
        },
        params.values(),
        h,
    )
}

/// `‖a - b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        norm(&diff) / scale
    }
}
