//! PSNR, SSIM3D and storage accounting on hand-made degradations.
//!
//! cargo run --release --example quality_metrics

use lrm_functa::fit::compression_stats;
use lrm_functa::metrics::{psnr, ssim3d};
use lrm_functa::numerics::SeededRng;
use lrm_functa::phantom::{generate_phantom, PhantomConfig};
use lrm_functa::video::Video;

fn db(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.2}")
    } else {
        "inf".into()
    }
}

fn main() -> lrm_functa::Result<()> {
    let clean = generate_phantom(&PhantomConfig {
        noise: 0.0,
        ..PhantomConfig::default()
    })?
    .video;
    let (t, h, w) = clean.shape();
    let mut rng = SeededRng::new(0);
    for sigma in [0.0, 0.01, 0.05, 0.1] {
        let data: Vec<f64> = clean.data().iter().map(|x| x + sigma * rng.normal()).collect();
        let noisy = Video::from_unclamped(t, h, w, data)?;
        println!(
            "gaussian noise {sigma:.2}: PSNR {} dB, SSIM3D {:.4}",
            db(psnr(&clean, &noisy)?),
            ssim3d(&clean, &noisy)?
        );
    }
    // temporal misalignment by one frame
    let order: Vec<usize> = (0..t).map(|i| (i + 1) % t).collect();
    let shifted = clean.permuted(&order)?;
    println!("frames shifted by one: PSNR {} dB, SSIM3D {:.4}", db(psnr(&clean, &shifted)?), ssim3d(&clean, &shifted)?);

    println!("storage for a 100-frame 112x112 video with q = 256:");
    for k in [1, 2, 8, 32, 128, 512] {
        let s = compression_stats(100, 112, 112, 256, k)?;
        println!("  k = {k:3}: {:6} values, {:8.1}x", s.code_values, s.ratio);
    }
    Ok(())
}
