//! Unsupervised end-diastole / end-systole detection from fitted temporal
//! codes, scored against the phantom's analytic labels.
//!
//! cargo run --release --example phase_detection

use lrm_functa::fit::{fit_video, FitOptions};
use lrm_functa::meta::{TrainConfig, TrainOutput, Trainer};
use lrm_functa::phantom::{generate_suite, PhantomConfig, SuiteConfig};
use lrm_functa::trajectory::{
    detect_extrema, extract_signal, frame_mae, Orientation, SignalOptions, DEFAULT_PROMINENCE_FRAC,
};
use lrm_functa::video::Video;

fn main() -> lrm_functa::Result<()> {
    let suite = generate_suite(&SuiteConfig {
        train: 6,
        held_out: 3,
        template: PhantomConfig {
            frames: 32,
            height: 24,
            width: 24,
            ..PhantomConfig::default()
        },
        seed: 3,
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
    let opts = FitOptions::from_config(&model.config);

    for item in &suite.held_out {
        let video = &item.phantom.video;
        let codes = fit_video(&model, video, &opts)?.codes;
        let mut signal = extract_signal(&codes.phi, &SignalOptions::default())?;
        // bright frames have the largest disk, which should land in valleys
        signal.orient(Orientation::Intensity, Some(&video.frame_means()))?;
        let found = detect_extrema(&signal, DEFAULT_PROMINENCE_FRAC);
        let t = video.frames();
        println!("period {:.2}", item.config.period);
        println!("  ED labelled {:?}, detected {:?}, MAE {:.2}", item.phantom.ed, found.ed, frame_mae(&found.ed, &item.phantom.ed, t)?);
        println!("  ES labelled {:?}, detected {:?}, MAE {:.2}", item.phantom.es, found.es, frame_mae(&found.es, &item.phantom.es, t)?);
    }
    Ok(())
}
