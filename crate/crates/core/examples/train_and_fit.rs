//! Meta-trains a small model on phantoms, then encodes unseen videos with
//! the frozen backbone and reports quality and storage.
//!
//! cargo run --release --example train_and_fit

use std::time::Instant;

use lrm_functa::fit::{compression_stats, fit_video, FitOptions};
use lrm_functa::meta::{TrainConfig, TrainOutput, Trainer};
use lrm_functa::metrics::{psnr, ssim3d};
use lrm_functa::phantom::{generate_suite, PhantomConfig, SuiteConfig};
use lrm_functa::video::Video;

fn main() -> lrm_functa::Result<()> {
    let suite = generate_suite(&SuiteConfig {
        train: 8,
        held_out: 2,
        template: PhantomConfig {
            frames: 16,
            height: 24,
            width: 24,
            ..PhantomConfig::default()
        },
        period_range: (6.0, 10.0),
        seed: 1,
        ..SuiteConfig::default()
    })?;
    let train: Vec<Video> = suite.train.iter().map(|i| i.phantom.video.clone()).collect();
    let cfg = TrainConfig {
        hidden_width: 32,
        hidden_layers: 3,
        modulation_dim: 32,
        outer_lr: 1e-3,
        outer_iters: 400,
        coord_subsample: 128,
        batch_videos: 2,
        ..TrainConfig::default()
    };
    let start = Instant::now();
    let model = Trainer::new(&train, &cfg)?.run(&TrainOutput::default(), |r| {
        if (r.iteration + 1) % 100 == 0 {
            println!("iteration {:4}: reconstruction {:.5}", r.iteration + 1, r.reconstruction);
        }
    })?;
    println!("trained in {:.1}s", start.elapsed().as_secs_f64());

    let opts = FitOptions::from_config(&model.config);
    for item in &suite.held_out {
        let video = &item.phantom.video;
        let fit = fit_video(&model, video, &opts)?;
        let (t, h, w) = video.shape();
        let stats = compression_stats(t, h, w, cfg.modulation_dim, cfg.rank)?;
        println!(
            "held-out video: PSNR {:.2} dB, SSIM3D {:.3}, {} values stored for {} pixels ({:.1}x)",
            psnr(video, &fit.reconstruction)?,
            ssim3d(video, &fit.reconstruction)?,
            stats.code_values,
            stats.original_values,
            stats.ratio
        );
    }
    Ok(())
}
