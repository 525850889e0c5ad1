//! Trains, fits and scores once per latent rank, as `lrm ranksweep` does.
//!
//! cargo run --release --example rank_sweep

use lrm_functa::cli::train_fit_eval;
use lrm_functa::meta::TrainConfig;
use lrm_functa::phantom::{generate_suite, PhantomConfig, SuiteConfig};
use lrm_functa::video::Video;

fn main() -> lrm_functa::Result<()> {
    let suite = generate_suite(&SuiteConfig {
        train: 6,
        held_out: 2,
        template: PhantomConfig {
            frames: 16,
            height: 16,
            width: 16,
            ..PhantomConfig::default()
        },
        period_range: (6.0, 10.0),
        seed: 2,
        ..SuiteConfig::default()
    })?;
    let train: Vec<Video> = suite.train.iter().map(|i| i.phantom.video.clone()).collect();
    let held: Vec<Video> = suite.held_out.iter().map(|i| i.phantom.video.clone()).collect();
    let base = TrainConfig {
        hidden_width: 24,
        hidden_layers: 2,
        modulation_dim: 16,
        outer_lr: 1e-3,
        outer_iters: 200,
        coord_subsample: 64,
        batch_videos: 2,
        ..TrainConfig::default()
    };
    println!("{:>3} {:>9} {:>8} {:>8}", "k", "PSNR", "SSIM3D", "ratio");
    for k in [1, 2, 4, 8, 16] {
        let s = train_fit_eval(&train, &held, &TrainConfig { rank: k, ..base.clone() })?;
        println!("{k:>3} {:>9.2} {:>8.4} {:>8.1}", s.psnr, s.ssim3d, s.compression_ratio);
    }
    Ok(())
}
