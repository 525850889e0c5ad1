use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;

use super::objective::{evaluate, loss_only, CoordPlan};
use super::unrolled::second_order_grads;
use super::{apply_code_step, MetaOrder, TrainConfig};
use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::inr::{CoordGrid, SharedBackbone};
use crate::lowrank::{ortho_penalty, LatentCodes, Subspace};
use crate::numerics::matrix::axpy;
use crate::numerics::{adam_step, AdamState, SeededRng};
use crate::video::Video;

const STREAM_OUTER: u64 = 0x0A7E;
const STREAM_EPOCH: u64 = 0xE90C;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossReport {
    pub iteration: usize,
    pub reconstruction: f64,
    pub orthogonality: f64,
    pub total: f64,
}

impl LossReport {
    pub fn new(iteration: usize, reconstruction: f64, orthogonality: f64, lambda_ortho: f64) -> Self {
        LossReport {
            iteration,
            reconstruction,
            orthogonality,
            total: reconstruction + lambda_ortho * orthogonality,
        }
    }
}

/// Fits `v` and `Φ` from zero with `cfg.inner_steps` gradient steps at
/// `cfg.inner_lr`, each on a fresh pixel subsample.
pub fn inner_adapt(
    backbone: &SharedBackbone,
    subspace: &Subspace,
    video: &Video,
    cfg: &TrainConfig,
    rng: &mut SeededRng,
) -> Result<LatentCodes> {
    let plans = draw_plans(video, cfg, cfg.inner_steps, rng);
    adapt_with_plans(backbone, subspace, video, &plans, cfg.inner_lr)
}

fn draw_plans(video: &Video, cfg: &TrainConfig, count: usize, rng: &mut SeededRng) -> Vec<CoordPlan> {
    (0..count)
        .map(|_| {
            CoordPlan::draw(
                video.pixels_per_frame(),
                video.frames(),
                cfg.coord_subsample,
                cfg.per_frame_sampling,
                rng,
            )
        })
        .collect()
}

fn adapt_with_plans(
    backbone: &SharedBackbone,
    subspace: &Subspace,
    video: &Video,
    plans: &[CoordPlan],
    lr: f64,
) -> Result<LatentCodes> {
    check_shapes(backbone, subspace)?;
    let grid = CoordGrid::full(video.height(), video.width());
    let mut codes = LatentCodes::zeros(subspace.dim(), subspace.rank(), video.frames());
    for (step, plan) in plans.iter().enumerate() {
        let out = evaluate(backbone, subspace, &codes, video, &grid, plan, false);
        if !out.loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                stage: "inner_adapt",
                step,
            });
        }
        apply_code_step(&mut codes, &out, lr);
    }
    Ok(codes)
}

fn check_shapes(backbone: &SharedBackbone, subspace: &Subspace) -> Result<()> {
    if backbone.config().modulation_dim != subspace.dim() {
        return Err(Error::dims(
            "subspace dimension vs backbone modulation_dim",
            backbone.config().modulation_dim,
            subspace.dim(),
        ));
    }
    Ok(())
}

/// Averaged outer gradients for one batch, before the optimizer step.
#[derive(Clone, Debug)]
pub struct OuterGradients {
    pub reconstruction: f64,
    pub orthogonality: f64,
    /// Backbone gradient (layout of the backbone parameter store).
    pub theta: Vec<f64>,
    /// Basis gradient including the orthogonality term.
    pub basis: Vec<f64>,
}

fn video_rng(seed: u64, iteration: usize, slot: usize) -> SeededRng {
    SeededRng::fork(seed, &[STREAM_OUTER, iteration as u64, slot as u64])
}

/// Gradient of the batch-mean meta objective with respect to the backbone
/// and basis. `iteration` selects the pixel subsamples.
pub fn outer_gradients(
    backbone: &SharedBackbone,
    subspace: &Subspace,
    batch: &[&Video],
    cfg: &TrainConfig,
    iteration: usize,
) -> Result<OuterGradients> {
    if batch.is_empty() {
        return Err(Error::InvalidConfig("outer step on an empty batch".into()));
    }
    check_shapes(backbone, subspace)?;
    let per_video: Vec<Result<(f64, Vec<f64>, Vec<f64>)>> = batch
        .par_iter()
        .enumerate()
        .map(|(slot, video)| {
            let mut rng = video_rng(cfg.seed, iteration, slot);
            let inner = draw_plans(video, cfg, cfg.inner_steps, &mut rng);
            let outer = draw_plans(video, cfg, 1, &mut rng).pop().unwrap();
            match cfg.meta_order {
                MetaOrder::First => {
                    let codes = adapt_with_plans(backbone, subspace, video, &inner, cfg.inner_lr)?;
                    let grid = CoordGrid::full(video.height(), video.width());
                    let out = evaluate(backbone, subspace, &codes, video, &grid, &outer, true);
                    Ok((out.loss, out.grad_theta.unwrap(), out.grad_basis.unwrap()))
                }
                MetaOrder::Second => {
                    let so = second_order_grads(backbone, subspace, video, &inner, &outer, cfg.inner_lr);
                    Ok((so.loss, so.grad_theta, so.grad_basis))
                }
            }
        })
        .collect();

    let inv_b = 1.0 / batch.len() as f64;
    let mut recon = 0.0;
    let mut theta = vec![0.0; backbone.num_params()];
    let mut basis = vec![0.0; subspace.basis().len()];
    for (i, r) in per_video.into_iter().enumerate() {
        let (loss, gt, gb) = r?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                stage: "outer_step",
                step: i,
            });
        }
        recon += inv_b * loss;
        axpy(inv_b, &gt, &mut theta);
        axpy(inv_b, &gb, &mut basis);
    }
    let ortho = ortho_penalty(subspace);
    if cfg.lambda_ortho != 0.0 {
        axpy(cfg.lambda_ortho, &ortho.grad, &mut basis);
    }
    Ok(OuterGradients {
        reconstruction: recon,
        orthogonality: ortho.value,
        theta,
        basis,
    })
}

/// The scalar whose gradient [`outer_gradients`] returns under second-order
/// meta-learning: batch-mean reconstruction at the adapted codes plus
/// `λ_ortho` times the orthogonality penalty.
pub fn meta_objective(
    backbone: &SharedBackbone,
    subspace: &Subspace,
    batch: &[&Video],
    cfg: &TrainConfig,
    iteration: usize,
) -> Result<f64> {
    let mut total = 0.0;
    for (slot, video) in batch.iter().enumerate() {
        let mut rng = video_rng(cfg.seed, iteration, slot);
        let inner = draw_plans(video, cfg, cfg.inner_steps, &mut rng);
        let outer = draw_plans(video, cfg, 1, &mut rng).pop().unwrap();
        let codes = adapt_with_plans(backbone, subspace, video, &inner, cfg.inner_lr)?;
        let grid = CoordGrid::full(video.height(), video.width());
        total += loss_only(backbone, subspace, &codes, video, &grid, &outer);
    }
    Ok(total / batch.len() as f64 + cfg.lambda_ortho * ortho_penalty(subspace).value)
}

/// Adam moments for the backbone and the basis.
#[derive(Clone, Debug, PartialEq)]
pub struct OuterState {
    pub backbone: AdamState,
    pub subspace: AdamState,
}

impl OuterState {
    pub fn new(backbone: &SharedBackbone, subspace: &Subspace, lr: f64) -> Self {
        OuterState {
            backbone: AdamState::new(backbone.params(), lr),
            subspace: AdamState::new(subspace.params(), lr),
        }
    }
}

/// One outer iteration: adapt, accumulate, average, one Adam step.
pub fn outer_step(
    backbone: &mut SharedBackbone,
    subspace: &mut Subspace,
    batch: &[&Video],
    cfg: &TrainConfig,
    state: &mut OuterState,
    iteration: usize,
) -> Result<LossReport> {
    let grads = outer_gradients(backbone, subspace, batch, cfg, iteration)?;
    backbone.params_mut().set_grads(&grads.theta)?;
    subspace.params_mut().set_grads(&grads.basis)?;
    adam_step(backbone.params_mut(), &mut state.backbone)?;
    adam_step(subspace.params_mut(), &mut state.subspace)?;
    Ok(LossReport::new(
        iteration,
        grads.reconstruction,
        grads.orthogonality,
        cfg.lambda_ortho,
    ))
}

/// Where [`train`] writes its artefacts.
#[derive(Clone, Debug, Default)]
pub struct TrainOutput {
    pub checkpoint: Option<PathBuf>,
    /// Loss curve CSV (`iteration,recon,ortho,total`), appended per iteration.
    pub loss_csv: Option<PathBuf>,
}

/// Stateful training loop over a fixed dataset.
pub struct Trainer<'a> {
    dataset: &'a [Video],
    cfg: TrainConfig,
    model: Checkpoint,
    state: OuterState,
    order: Vec<usize>,
    cursor: usize,
    epoch: u64,
}

impl<'a> Trainer<'a> {
    pub fn new(dataset: &'a [Video], cfg: &TrainConfig) -> Result<Self> {
        let model = Checkpoint::initialize(cfg)?;
        Trainer::resume(dataset, model)
    }

    /// Continues from an existing model with fresh optimizer moments.
    pub fn resume(dataset: &'a [Video], model: Checkpoint) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::InvalidConfig("training dataset is empty".into()));
        }
        let cfg = model.config.clone();
        cfg.validate()?;
        let state = OuterState::new(&model.backbone, &model.subspace, cfg.outer_lr);
        Ok(Trainer {
            dataset,
            cfg,
            model,
            state,
            order: Vec::new(),
            cursor: 0,
            epoch: 0,
        })
    }

    fn next_batch(&mut self) -> Vec<usize> {
        let mut batch = Vec::with_capacity(self.cfg.batch_videos);
        while batch.len() < self.cfg.batch_videos.min(self.dataset.len()) {
            if self.cursor == self.order.len() {
                self.order = (0..self.dataset.len()).collect();
                SeededRng::fork(self.cfg.seed, &[STREAM_EPOCH, self.epoch]).shuffle(&mut self.order);
                self.epoch += 1;
                self.cursor = 0;
            }
            batch.push(self.order[self.cursor]);
            self.cursor += 1;
        }
        batch
    }

    pub fn step(&mut self) -> Result<LossReport> {
        let iteration = self.model.loss_curve.len();
        let batch: Vec<&Video> = self.next_batch().into_iter().map(|i| &self.dataset[i]).collect();
        let report = outer_step(
            &mut self.model.backbone,
            &mut self.model.subspace,
            &batch,
            &self.cfg,
            &mut self.state,
            iteration,
        )?;
        self.model.loss_curve.push(report);
        Ok(report)
    }

    pub fn model(&self) -> &Checkpoint {
        &self.model
    }

    pub fn into_model(self) -> Checkpoint {
        self.model
    }

    /// Runs `cfg.outer_iters` iterations, writing checkpoints and the loss
    /// curve as configured, and calling `progress` after every iteration.
    pub fn run(mut self, output: &TrainOutput, mut progress: impl FnMut(&LossReport)) -> Result<Checkpoint> {
        let mut csv = match &output.loss_csv {
            Some(path) => {
                if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                }
                let mut f = OpenOptions::new()
                    .create(true)
                    .write(true)
                    .truncate(true)
                    .open(path)
                    .map_err(|e| Error::io(path, e))?;
                writeln!(f, "iteration,recon,ortho,total").map_err(|e| Error::io(path, e))?;
                Some((f, path.clone()))
            }
            None => None,
        };
        for i in 0..self.cfg.outer_iters {
            let report = self.step()?;
            if let Some((f, path)) = csv.as_mut() {
                writeln!(
                    f,
                    "{},{},{},{}",
                    report.iteration, report.reconstruction, report.orthogonality, report.total
                )
                .map_err(|e| Error::io(path.as_path(), e))?;
            }
            progress(&report);
            let every = self.cfg.checkpoint_every;
            if let Some(path) = &output.checkpoint {
                if every > 0 && (i + 1) % every == 0 && i + 1 < self.cfg.outer_iters {
                    self.model.save(path)?;
                }
            }
        }
        if let Some(path) = &output.checkpoint {
            self.model.save(path)?;
        }
        Ok(self.model)
    }
}

/// Trains a fresh model on `dataset` for `cfg.outer_iters` iterations.
pub fn train(dataset: &[Video], cfg: &TrainConfig, output: &TrainOutput) -> Result<Checkpoint> {
    Trainer::new(dataset, cfg)?.run(output, |_| {})
}
