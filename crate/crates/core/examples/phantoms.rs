//! Generates a small train / held-out phantom suite and shows the analytic
//! phase labels. Pass a directory to also write the videos.
//!
//! cargo run --release --example phantoms -- [out_dir]

use std::path::PathBuf;

use lrm_functa::phantom::{estimate_radius, generate_suite, PhantomConfig, SuiteConfig};
use lrm_functa::video::write_video;

fn main() -> lrm_functa::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from);
    let cfg = SuiteConfig {
        train: 4,
        held_out: 2,
        template: PhantomConfig {
            frames: 32,
            height: 48,
            width: 48,
            ..PhantomConfig::default()
        },
        seed: 7,
        ..SuiteConfig::default()
    };
    let suite = generate_suite(&cfg)?;
    for (split, items) in [("train", &suite.train), ("held_out", &suite.held_out)] {
        for (i, item) in items.iter().enumerate() {
            let p = &item.phantom;
            let radii: Vec<f64> = (0..p.video.frames())
                .map(|t| estimate_radius(p.video.frame(t), item.config.background, item.config.foreground))
                .collect();
            let (lo, hi) = radii.iter().fold((f64::MAX, f64::MIN), |(a, b), &r| (a.min(r), b.max(r)));
            println!(
                "{split}/{i}: period {:.2} frames, ED {:?}, ES {:?}, radius {lo:.1}..{hi:.1} px",
                item.config.period, p.ed, p.es
            );
            if let Some(dir) = &out {
                write_video(&dir.join(split).join(format!("phantom_{i:03}.lrmv")), &p.video)?;
            }
        }
    }
    if let Some(dir) = out {
        println!("videos written under {}", dir.display());
    }
    Ok(())
}
