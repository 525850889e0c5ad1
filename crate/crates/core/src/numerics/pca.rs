//! First principal component by power iteration.

use super::matrix::{axpy, dot, norm};
use super::Matrix;
use crate::error::{Error, Result};

const TOLERANCE: f64 = 1e-12;
const MAX_ITERS: usize = 10_000;

/// Unit-norm leading principal direction of the mean-centred rows.
///
/// The covariance is never formed; each iteration applies `Xᵀ X` as two
/// thin products, so cost is `O(rows · cols)` per step. The sign is fixed so
/// that the entry of largest magnitude is positive (first one on ties).
pub fn pca_first_component(rows: &Matrix) -> Result<Vec<f64>> {
    let (n, _) = rows.shape();
    if n < 2 {
        return Err(Error::Degenerate(format!("PCA needs at least 2 rows, got {n}")));
    }
    let mean = rows.column_means();
    let mut centered = rows.clone();
    for i in 0..n {
        axpy(-1.0, &mean, centered.row_mut(i));
    }
    leading_direction(&centered).map_err(|_| Error::Degenerate("all rows are identical".into()))
}

/// Leading eigenvector of the uncentred second moment `Xᵀ X`.
///
/// This is the axis for sign-ambiguous data such as unit directions, where
/// `u` and `-u` describe the same line and a set of identical rows still has
/// a well-defined answer. Same sign convention as [`pca_first_component`].
pub fn principal_axis(rows: &Matrix) -> Result<Vec<f64>> {
    if rows.rows() == 0 {
        return Err(Error::Degenerate("principal axis of an empty set".into()));
    }
    leading_direction(rows)
}

fn leading_direction(x: &Matrix) -> Result<Vec<f64>> {
    let (n, d) = x.shape();
    if d == 0 {
        return Err(Error::Degenerate("principal axis of zero-dimensional rows".into()));
    }
    let scale = x.as_slice().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        return Err(Error::Degenerate("all rows are zero".into()));
    }

    // Start from the longest row: it always has a component along the
    // leading eigenvector unless the spectrum is tied.
    let start = (0..n)
        .max_by(|&a, &b| norm(x.row(a)).total_cmp(&norm(x.row(b))))
        .unwrap();
    let mut v = x.row(start).to_vec();
    normalize(&mut v);
    let mut proj = vec![0.0; n];
    let mut next = vec![0.0; d];
    for _ in 0..MAX_ITERS {
        for (p, r) in proj.iter_mut().zip(x.row_iter()) {
            *p = dot(r, &v);
        }
        next.iter_mut().for_each(|x| *x = 0.0);
        for (p, r) in proj.iter().zip(x.row_iter()) {
            axpy(*p, r, &mut next);
        }
        if norm(&next) == 0.0 {
            break;
        }
        normalize(&mut next);
        orient(&mut next);
        let delta = v
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut v, &mut next);
        if delta < TOLERANCE {
            break;
        }
    }
    orient(&mut v);
    Ok(v)
}

fn normalize(v: &mut [f64]) {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Flips `v` so its largest-magnitude entry is positive.
pub(crate) fn orient(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}
