//! Reconstruction quality: PSNR and a box-window volumetric SSIM, both at
//! data range 1.

use std::path::Path;

use crate::error::{Error, Result};
use crate::video::Video;

pub const SSIM_WINDOW: usize = 7;
const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

fn check_shapes(a: &Video, b: &Video) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::InvalidConfig(format!(
            "video shapes differ: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

pub fn mse(a: &Video, b: &Video) -> Result<f64> {
    check_shapes(a, b)?;
    let sum: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / a.data().len() as f64)
}

/// `10 log10(1 / MSE)`; identical inputs give `f64::INFINITY`.
pub fn psnr(a: &Video, b: &Video) -> Result<f64> {
    let e = mse(a, b)?;
    Ok(if e == 0.0 { f64::INFINITY } else { -10.0 * e.log10() })
}

/// Decibel value as written to CSV (`inf` for a perfect match).
pub fn format_db(db: f64) -> String {
    if db == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{db}")
    }
}

/// SSIM with a `7 x 7 x 7` uniform window, averaged over all positions
/// where the window fits.
pub fn ssim3d(a: &Video, b: &Video) -> Result<f64> {
    ssim3d_window(a, b, SSIM_WINDOW)
}

pub fn ssim3d_window(a: &Video, b: &Video, window: usize) -> Result<f64> {
    check_shapes(a, b)?;
    let (t, h, w) = a.shape();
    if window == 0 {
        return Err(Error::InvalidConfig("SSIM window must be at least 1".into()));
    }
    let smallest = t.min(h).min(w);
    if smallest < window {
        return Err(Error::InvalidConfig(format!(
            "video dimension {smallest} is smaller than the SSIM window {window}; use a window of at most {smallest}"
        )));
    }
    let (x, y) = (a.data(), b.data());
    let fields: [Vec<f64>; 5] = [
        x.to_vec(),
        y.to_vec(),
        x.iter().map(|v| v * v).collect(),
        y.iter().map(|v| v * v).collect(),
        x.iter().zip(y).map(|(u, v)| u * v).collect(),
    ];
    let sums: Vec<Vec<f64>> = fields.iter().map(|f| box_sum(f, (t, h, w), window)).collect();
    let n = (window * window * window) as f64;
    let count = sums[0].len();
    let mut total = 0.0;
    for i in 0..count {
        let mx = sums[0][i] / n;
        let my = sums[1][i] / n;
        let vx = sums[2][i] / n - mx * mx;
        let vy = sums[3][i] / n - my * my;
        let cxy = sums[4][i] / n - mx * my;
        total += ((2.0 * mx * my + C1) * (2.0 * cxy + C2)) / ((mx * mx + my * my + C1) * (vx + vy + C2));
    }
    Ok(total / count as f64)
}

/// Window sums over every valid placement, separably along w, h, then t.
fn box_sum(data: &[f64], (t, h, w): (usize, usize, usize), win: usize) -> Vec<f64> {
    let (ot, oh, ow) = (t - win + 1, h - win + 1, w - win + 1);
    let mut along_w = vec![0.0; t * h * ow];
    for row in 0..t * h {
        let src = &data[row * w..(row + 1) * w];
        for j in 0..ow {
            along_w[row * ow + j] = src[j..j + win].iter().sum();
        }
    }
    let mut along_h = vec![0.0; t * oh * ow];
    for f in 0..t {
        for i in 0..oh {
            for j in 0..ow {
                along_h[(f * oh + i) * ow + j] = (0..win).map(|d| along_w[(f * h + i + d) * ow + j]).sum();
            }
        }
    }
    let plane = oh * ow;
    let mut out = vec![0.0; ot * plane];
    for f in 0..ot {
        for p in 0..plane {
            out[f * plane + p] = (0..win).map(|d| along_h[(f + d) * plane + p]).sum();
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct VideoQuality {
    pub id: String,
    pub psnr: f64,
    pub ssim3d: f64,
}

/// Per-video scores and their means.
#[derive(Clone, Debug, PartialEq)]
pub struct QualityReport {
    pub videos: Vec<VideoQuality>,
    pub mean_psnr: f64,
    pub mean_ssim3d: f64,
}

impl QualityReport {
    pub fn new(videos: Vec<VideoQuality>) -> Self {
        let n = videos.len().max(1) as f64;
        let mean_psnr = videos.iter().map(|v| v.psnr).sum::<f64>() / n;
        let mean_ssim3d = videos.iter().map(|v| v.ssim3d).sum::<f64>() / n;
        QualityReport {
            videos,
            mean_psnr,
            mean_ssim3d,
        }
    }

    /// Scores `(id, reference, reconstruction)` triples. SSIM uses the
    /// default window, shrunk to the smallest video dimension if needed.
    pub fn evaluate<'a>(pairs: impl IntoIterator<Item = (String, &'a Video, &'a Video)>) -> Result<Self> {
        let mut videos = Vec::new();
        for (id, reference, recon) in pairs {
            let (t, h, w) = reference.shape();
            let window = SSIM_WINDOW.min(t).min(h).min(w);
            videos.push(VideoQuality {
                psnr: psnr(reference, recon)?,
                ssim3d: ssim3d_window(reference, recon, window)?,
                id,
            });
        }
        Ok(QualityReport::new(videos))
    }

    /// CSV with a header `video,psnr,ssim3d` and a final `mean` row.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["video", "psnr", "ssim3d"])?;
        for v in &self.videos {
            w.write_record([v.id.clone(), format_db(v.psnr), v.ssim3d.to_string()])?;
        }
        w.write_record(["mean".to_string(), format_db(self.mean_psnr), self.mean_ssim3d.to_string()])?;
        let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
        crate::write_atomic(path, &bytes)
    }
}
