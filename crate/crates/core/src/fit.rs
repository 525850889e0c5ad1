//! Frozen-backbone encoding of individual videos.
//!
//! Only `v` and `Φ` move; the checkpoint is borrowed immutably, so the
//! shared backbone and basis cannot change during a fit.

use rayon::prelude::*;

use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::inr::CoordGrid;
use crate::lowrank::LatentCodes;
use crate::meta::{apply_code_step, evaluate, frame_losses, CoordPlan, TrainConfig};
use crate::numerics::SeededRng;
use crate::video::Video;

const STREAM_FIT: u64 = 0xF17;

/// Gradient-descent settings for [`fit_video`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub steps: usize,
    pub lr: f64,
    /// Pixels per frame per step; 0 means the full grid.
    pub subsample: usize,
    pub seed: u64,
}

impl FitOptions {
    pub fn from_config(cfg: &TrainConfig) -> Self {
        FitOptions {
            steps: cfg.fit_steps,
            lr: cfg.fit_lr,
            subsample: cfg.fit_subsample,
            seed: cfg.seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::InvalidConfig(format!("fit_lr must be positive, got {}", self.lr)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub codes: LatentCodes,
    pub reconstruction: Video,
    /// Objective before each step followed by the full-grid value at the
    /// final codes, so `steps + 1` entries.
    pub loss_curve: Vec<f64>,
    /// Full-grid MSE of every frame at the final codes.
    pub frame_losses: Vec<f64>,
    pub steps: usize,
}

/// Fits latent codes to `video` from zero with the backbone frozen.
pub fn fit_video(model: &Checkpoint, video: &Video, opts: &FitOptions) -> Result<FitResult> {
    opts.validate()?;
    let (backbone, subspace) = (&model.backbone, &model.subspace);
    let grid = CoordGrid::full(video.height(), video.width());
    let mut rng = SeededRng::fork(opts.seed, &[STREAM_FIT]);
    let per_frame = if opts.subsample == 0 {
        video.pixels_per_frame()
    } else {
        opts.subsample
    };
    let mut codes = LatentCodes::zeros(subspace.dim(), subspace.rank(), video.frames());
    let mut loss_curve = Vec::with_capacity(opts.steps + 1);
    for step in 0..opts.steps {
        let plan = CoordPlan::draw(video.pixels_per_frame(), video.frames(), per_frame, false, &mut rng);
        let out = evaluate(backbone, subspace, &codes, video, &grid, &plan, false);
        if !out.loss.is_finite() {
            return Err(Error::NonFiniteLoss { stage: "fit_video", step });
        }
        loss_curve.push(out.loss);
        apply_code_step(&mut codes, &out, opts.lr);
    }
    let frame_losses = frame_losses(backbone, subspace, &codes, video)?;
    let final_loss = frame_losses.iter().sum::<f64>() / frame_losses.len() as f64;
    if !final_loss.is_finite() {
        return Err(Error::NonFiniteLoss {
            stage: "fit_video",
            step: opts.steps,
        });
    }
    loss_curve.push(final_loss);
    let reconstruction = render_video(model, &codes, video.height(), video.width())?;
    Ok(FitResult {
        codes,
        reconstruction,
        loss_curve,
        frame_losses,
        steps: opts.steps,
    })
}

/// Fits every video independently, in parallel, keeping input order.
pub fn fit_videos(model: &Checkpoint, videos: &[Video], opts: &FitOptions) -> Result<Vec<FitResult>> {
    videos.par_iter().map(|v| fit_video(model, v, opts)).collect()
}

/// Renders all frames of `codes` on an `height x width` grid, clamped to
/// the unit interval.
pub fn render_video(model: &Checkpoint, codes: &LatentCodes, height: usize, width: usize) -> Result<Video> {
    let mut data = Vec::with_capacity(codes.frames() * height * width);
    for m in codes.modulations(&model.subspace)? {
        data.extend(model.backbone.render_frame(&m, height, width)?);
    }
    Video::from_unclamped(codes.frames(), height, width, data)
}

/// Storage accounting for one encoded video. The shared backbone and basis
/// are amortised over the dataset and therefore not counted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompressionStats {
    pub original_values: u64,
    pub code_values: u64,
    pub ratio: f64,
}

pub fn compression_stats(frames: usize, height: usize, width: usize, q: usize, k: usize) -> Result<CompressionStats> {
    if [frames, height, width, q, k].contains(&0) {
        return Err(Error::InvalidConfig("compression_stats needs positive dimensions".into()));
    }
    let original_values = (frames * height * width) as u64;
    let code_values = (q + frames * k) as u64;
    Ok(CompressionStats {
        original_values,
        code_values,
        ratio: original_values as f64 / code_values as f64,
    })
}
