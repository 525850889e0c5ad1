//! Walks along the leading principal axis of a video's temporal codes and
//! measures the disk radius in each rendered frame.
//!
//! cargo run --release --example latent_walk

use lrm_functa::fit::{fit_video, FitOptions};
use lrm_functa::meta::{TrainConfig, TrainOutput, Trainer};
use lrm_functa::phantom::{estimate_radius, generate_suite, PhantomConfig, SuiteConfig};
use lrm_functa::trajectory::{latent_walk, spearman, WalkOptions};
use lrm_functa::video::Video;

fn main() -> lrm_functa::Result<()> {
    let template = PhantomConfig {
        frames: 24,
        height: 24,
        width: 24,
        ..PhantomConfig::default()
    };
    let suite = generate_suite(&SuiteConfig {
        train: 6,
        held_out: 1,
        template: template.clone(),
        period_range: (8.0, 12.0),
        seed: 5,
        ..SuiteConfig::default()
    })?;
    let train: Vec<Video> = suite.train.iter().map(|i| i.phantom.video.clone()).collect();
    let cfg = TrainConfig {
        hidden_width: 32,
        hidden_layers: 3,
        modulation_dim: 32,
        outer_lr: 1e-3,
        outer_iters: 300,
        coord_subsample: 128,
        batch_videos: 2,
        ..TrainConfig::default()
    };
    let model = Trainer::new(&train, &cfg)?.run(&TrainOutput::default(), |_| {})?;
    let video = &suite.held_out[0].phantom.video;
    let codes = fit_video(&model, video, &FitOptions::from_config(&model.config))?.codes;

    let opts = WalkOptions {
        samples: 11,
        overshoot: 1.2,
        ..WalkOptions::default()
    };
    let walk = latent_walk(&model, &codes, &opts, 48, 48)?;
    let radii: Vec<f64> = (0..walk.frames.frames())
        .map(|i| estimate_radius(walk.frames.frame(i), template.background, template.foreground) * 24.0 / 48.0)
        .collect();
    for (a, r) in walk.alphas.iter().zip(&radii) {
        println!("alpha {a:+.3}: radius {r:.2} px (at the training resolution)");
    }
    println!("Spearman rank correlation: {:.3}", spearman(&walk.alphas, &radii)?);
    Ok(())
}
