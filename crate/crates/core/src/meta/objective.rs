//! The per-video reconstruction objective: mean over frames of the
//! per-frame mean squared error at `m_t = v + Bᵀ φ_t`.

use crate::error::{Error, Result};
use crate::inr::{CoordGrid, SharedBackbone};
use crate::lowrank::{compose_modulation, LatentCodes, Subspace};
use crate::numerics::matrix::{axpy, dot};
use crate::numerics::{Matrix, SeededRng};
use crate::video::Video;

/// Which pixels each frame is evaluated on.
#[derive(Clone, Debug, PartialEq)]
pub enum CoordPlan {
    Full,
    /// One index set shared by all frames.
    Shared(Vec<usize>),
    PerFrame(Vec<Vec<usize>>),
}

impl CoordPlan {
    /// Draws `per_frame` pixels (or the full grid when that covers it).
    pub fn draw(pixels: usize, frames: usize, per_frame: usize, independent: bool, rng: &mut SeededRng) -> Self {
        if per_frame >= pixels {
            CoordPlan::Full
        } else if independent {
            CoordPlan::PerFrame((0..frames).map(|_| rng.sample_indices(pixels, per_frame)).collect())
        } else {
            CoordPlan::Shared(rng.sample_indices(pixels, per_frame))
        }
    }

    fn indices(&self, t: usize) -> Option<&[usize]> {
        match self {
            CoordPlan::Full => None,
            CoordPlan::Shared(idx) => Some(idx),
            CoordPlan::PerFrame(all) => Some(&all[t]),
        }
    }

    /// Coordinates and target intensities for frame `t`.
    pub(crate) fn frame_data(&self, grid: &CoordGrid, video: &Video, t: usize) -> (Vec<[f64; 2]>, Vec<f64>) {
        let frame = video.frame(t);
        match self.indices(t) {
            None => (grid.points().to_vec(), frame.to_vec()),
            Some(idx) => (
                idx.iter().map(|&i| grid.points()[i]).collect(),
                idx.iter().map(|&i| frame[i]).collect(),
            ),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct ObjectiveOut {
    pub loss: f64,
    pub grad_v: Vec<f64>,
    pub grad_phi: Matrix,
    /// Backbone gradient (layout of the backbone store), when requested.
    pub grad_theta: Option<Vec<f64>>,
    /// `k x q` basis gradient, when requested.
    pub grad_basis: Option<Vec<f64>>,
}

/// Objective value with code gradients, plus backbone and basis gradients
/// when `shared_grads` is set.
pub(crate) fn evaluate(
    backbone: &SharedBackbone,
    subspace: &Subspace,
    codes: &LatentCodes,
    video: &Video,
    grid: &CoordGrid,
    plan: &CoordPlan,
    shared_grads: bool,
) -> ObjectiveOut {
    let frames = video.frames();
    let (q, k) = (subspace.dim(), subspace.rank());
    let inv_t = 1.0 / frames as f64;
    let mut loss = 0.0;
    let mut grad_v = vec![0.0; q];
    let mut grad_phi = Matrix::zeros(frames, k);
    let mut grad_theta = shared_grads.then(|| vec![0.0; backbone.num_params()]);
    let mut grad_basis = shared_grads.then(|| vec![0.0; k * q]);

    for t in 0..frames {
        let phi_t = codes.phi.row(t);
        let m = compose_modulation(&codes.v, subspace, phi_t).expect("codes match subspace");
        let shifts = backbone.shifts(&m).expect("modulation matches backbone");
        let (coords, targets) = plan.frame_data(grid, video, t);
        let theta = grad_theta.as_deref_mut().map(|g| (g, m.as_slice()));
        let (frame_loss, grad_shift) = backbone.frame_objective(&shifts, &coords, &targets, theta);
        loss += frame_loss * inv_t;
        let mut gm = backbone.shift_grad_to_modulation(&grad_shift);
        gm.iter_mut().for_each(|g| *g *= inv_t);
        axpy(1.0, &gm, &mut grad_v);
        for i in 0..k {
            grad_phi[(t, i)] = dot(subspace.basis_row(i), &gm);
        }
        if let Some(gb) = grad_basis.as_mut() {
            for (i, &c) in phi_t.iter().enumerate() {
                axpy(c, &gm, &mut gb[i * q..(i + 1) * q]);
            }
        }
    }
    if let Some(g) = grad_theta.as_mut() {
        g.iter_mut().for_each(|x| *x *= inv_t);
    }
    ObjectiveOut {
        loss,
        grad_v,
        grad_phi,
        grad_theta,
        grad_basis,
    }
}

/// Objective value only.
pub(crate) fn loss_only(
    backbone: &SharedBackbone,
    subspace: &Subspace,
    codes: &LatentCodes,
    video: &Video,
    grid: &CoordGrid,
    plan: &CoordPlan,
) -> f64 {
    let frames = video.frames();
    (0..frames)
        .map(|t| {
            let m = compose_modulation(&codes.v, subspace, codes.phi.row(t)).expect("codes match subspace");
            let shifts = backbone.shifts(&m).expect("modulation matches backbone");
            let (coords, targets) = plan.frame_data(grid, video, t);
            backbone.frame_loss(&shifts, &coords, &targets)
        })
        .sum::<f64>()
        / frames as f64
}

/// Per-frame mean squared errors on the full grid.
pub fn frame_losses(
    backbone: &SharedBackbone,
    subspace: &Subspace,
    codes: &LatentCodes,
    video: &Video,
) -> Result<Vec<f64>> {
    if codes.frames() != video.frames() {
        return Err(Error::dims("latent frames vs video frames", video.frames(), codes.frames()));
    }
    let grid = CoordGrid::full(video.height(), video.width());
    (0..video.frames())
        .map(|t| {
            let m = compose_modulation(&codes.v, subspace, codes.phi.row(t))?;
            let shifts = backbone.shifts(&m)?;
            Ok(backbone.frame_loss(&shifts, grid.points(), video.frame(t)))
        })
        .collect()
}

/// Full-grid objective value.
pub fn reconstruction_loss(
    backbone: &SharedBackbone,
    subspace: &Subspace,
    codes: &LatentCodes,
    video: &Video,
) -> Result<f64> {
    let l = frame_losses(backbone, subspace, codes, video)?;
    Ok(l.iter().sum::<f64>() / l.len() as f64)
}
