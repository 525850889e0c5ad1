use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::lowrank::{compose_modulation, LatentCodes};
use crate::numerics::matrix::dot;
use crate::numerics::{pca_first_component, Matrix};
use crate::video::Video;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkOptions {
    pub samples: usize,
    /// Explicit `α` interval; by default the span of the projections of
    /// the centred `Φ` rows onto the axis.
    pub range: Option<(f64, f64)>,
    /// Multiplies the default interval; values above 1 extrapolate.
    pub overshoot: f64,
}

impl Default for WalkOptions {
    fn default() -> Self {
        WalkOptions {
            samples: 9,
            range: None,
            overshoot: 1.0,
        }
    }
}

/// Frames rendered along the leading principal axis of `Φ`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentWalk {
    pub mean: Vec<f64>,
    pub axis: Vec<f64>,
    pub alphas: Vec<f64>,
    /// `samples x k`, one temporal code per rendered frame.
    pub phi: Matrix,
    pub frames: Video,
}

/// Renders `mean(Φ) + α · axis` for evenly spaced `α`, keeping `v` fixed.
pub fn latent_walk(
    model: &Checkpoint,
    codes: &LatentCodes,
    opts: &WalkOptions,
    height: usize,
    width: usize,
) -> Result<LatentWalk> {
    if opts.samples < 2 {
        return Err(Error::InvalidConfig(format!(
            "a latent walk needs at least 2 samples, got {}",
            opts.samples
        )));
    }
    let phi = &codes.phi;
    let axis = pca_first_component(phi)?;
    let mean = phi.column_means();
    let (lo, hi) = match opts.range {
        Some(r) => r,
        None => {
            let proj = phi.row_iter().map(|r| {
                let centred: Vec<f64> = r.iter().zip(&mean).map(|(a, b)| a - b).collect();
                dot(&centred, &axis)
            });
            let (lo, hi) = proj.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p), h.max(p)));
            (opts.overshoot * lo, opts.overshoot * hi)
        }
    };
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidConfig(format!("walk range [{lo}, {hi}] is not finite")));
    }
    let n = opts.samples;
    let alphas: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let k = codes.rank();
    let mut walk_phi = Matrix::zeros(n, k);
    let mut data = Vec::with_capacity(n * height * width);
    for (i, &a) in alphas.iter().enumerate() {
        let row = walk_phi.row_mut(i);
        for j in 0..k {
            row[j] = mean[j] + a * axis[j];
        }
        let m = compose_modulation(&codes.v, &model.subspace, walk_phi.row(i))?;
        data.extend(model.backbone.render_frame(&m, height, width)?);
    }
    Ok(LatentWalk {
        mean,
        axis,
        alphas,
        phi: walk_phi,
        frames: Video::from_unclamped(n, height, width, data)?,
    })
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0;
        for &o in &order[i..=j] {
            r[o] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dims("spearman inputs", a.len(), b.len()));
    }
    Ok(super::signal::pearson(&ranks(a), &ranks(b)))
}
