//! Synthetic "cardiac" phantoms: a soft-edged bright disk whose radius
//! oscillates sinusoidally, with exact end-diastole / end-systole labels.
//!
//! Frame `t` shows a disk of radius `r(t) = r0 + A sin(2πt/P + phase)`
//! (both fractions of `min(H, W)`), centred at a point drifting at constant
//! velocity. End-diastole is maximal radius (`sin = +1`), end-systole
//! minimal radius (`sin = -1`).

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::SeededRng;
use crate::video::Video;

/// Width of the antialiasing ramp at the disk edge, in pixels.
pub const EDGE_RAMP_PX: f64 = 1.5;

#[derive(Clone, Debug, PartialEq)]
pub struct PhantomConfig {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    /// Cycle length in frames; need not be an integer.
    pub period: f64,
    pub base_radius: f64,
    pub amplitude: f64,
    /// Radians.
    pub phase: f64,
    /// Centre velocity `(dx, dy)` in pixels per frame.
    pub drift: [f64; 2],
    /// Multiplicative speckle strength.
    pub noise: f64,
    pub foreground: f64,
    pub background: f64,
    pub seed: u64,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        PhantomConfig {
            frames: 32,
            height: 64,
            width: 64,
            period: 16.0,
            base_radius: 0.25,
            amplitude: 0.08,
            phase: 0.0,
            drift: [0.0, 0.0],
            noise: 0.05,
            foreground: 0.8,
            background: 0.1,
            seed: 0,
        }
    }
}

impl PhantomConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.frames == 0 || self.height == 0 || self.width == 0 {
            return bad(format!("phantom dimensions must be positive: {}x{}x{}", self.frames, self.height, self.width));
        }
        if !(self.period > 2.0) || !self.period.is_finite() {
            return bad(format!("period {} must exceed 2 frames", self.period));
        }
        if !(self.amplitude >= 0.0 && self.amplitude < self.base_radius) {
            return bad(format!(
                "amplitude {} must satisfy 0 <= A < r0 = {}",
                self.amplitude, self.base_radius
            ));
        }
        if self.base_radius + self.amplitude >= 0.5 {
            return bad(format!(
                "r0 + A = {} must stay below half the frame",
                self.base_radius + self.amplitude
            ));
        }
        if !(self.noise >= 0.0) {
            return bad(format!("noise {} must be >= 0", self.noise));
        }
        if !(0.0..=1.0).contains(&self.foreground) || !(0.0..=1.0).contains(&self.background) {
            return bad("foreground/background intensities must lie in [0, 1]".into());
        }
        if !self.phase.is_finite() || !self.drift.iter().all(|d| d.is_finite()) {
            return bad("phase and drift must be finite".into());
        }
        Ok(())
    }

    /// Disk radius in pixels at (possibly fractional) time `t`.
    pub fn radius_px(&self, t: f64) -> f64 {
        let scale = self.height.min(self.width) as f64;
        scale * (self.base_radius + self.amplitude * (2.0 * PI * t / self.period + self.phase).sin())
    }

    /// Disk centre `(x, y)` in pixel units at frame `t`.
    pub fn centre_px(&self, t: f64) -> [f64; 2] {
        let mid = (self.frames as f64 - 1.0) / 2.0;
        [
            self.width as f64 / 2.0 + self.drift[0] * (t - mid),
            self.height as f64 / 2.0 + self.drift[1] * (t - mid),
        ]
    }

    /// Frames nearest the times where `sin(2πt/P + phase) = target`
    /// (`±1`), restricted to `[0, T)`.
    fn extremum_frames(&self, target_angle: f64) -> Vec<usize> {
        if self.amplitude == 0.0 {
            return Vec::new();
        }
        let p = self.period;
        let first = (target_angle - self.phase) / (2.0 * PI) * p;
        let mut t = first - ((first + 0.5) / p).floor() * p;
        let mut out = Vec::new();
        while t < self.frames as f64 - 0.5 {
            if t >= -0.5 {
                out.push(t.round().max(0.0) as usize);
            }
            t += p;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Phantom {
    pub video: Video,
    /// End-diastole frames (maximal radius).
    pub ed: Vec<usize>,
    /// End-systole frames (minimal radius).
    pub es: Vec<usize>,
}

pub fn generate_phantom(cfg: &PhantomConfig) -> Result<Phantom> {
    cfg.validate()?;
    let (t_n, h, w) = (cfg.frames, cfg.height, cfg.width);
    let mut rng = SeededRng::fork(cfg.seed, &[0xD15C]);
    let mut data = Vec::with_capacity(t_n * h * w);
    for t in 0..t_n {
        let r = cfg.radius_px(t as f64);
        let [cx, cy] = cfg.centre_px(t as f64);
        for i in 0..h {
            let y = i as f64 + 0.5;
            for j in 0..w {
                let x = j as f64 + 0.5;
                let d = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
                let cover = edge_coverage(r - d);
                let mut value = cfg.background + (cfg.foreground - cfg.background) * cover;
                if cfg.noise > 0.0 {
                    value *= 1.0 + cfg.noise * rng.uniform(-1.0, 1.0);
                }
                data.push(value.clamp(0.0, 1.0));
            }
        }
    }
    Ok(Phantom {
        video: Video::new(t_n, h, w, data)?,
        ed: cfg.extremum_frames(PI / 2.0),
        es: cfg.extremum_frames(3.0 * PI / 2.0),
    })
}

/// Fraction of a pixel covered by the disk, given the signed distance from
/// the pixel centre to the edge (positive inside): a linear ramp of width
/// [`EDGE_RAMP_PX`] centred on the boundary.
pub fn edge_coverage(signed_distance: f64) -> f64 {
    (0.5 + signed_distance / EDGE_RAMP_PX).clamp(0.0, 1.0)
}

/// Disk radius in pixels implied by a frame's foreground coverage, where
/// each pixel counts by where it sits between the two intensity levels.
pub fn estimate_radius(frame: &[f64], background: f64, foreground: f64) -> f64 {
    let span = foreground - background;
    let area: f64 = frame.iter().map(|x| ((x - background) / span).clamp(0.0, 1.0)).sum();
    (area / PI).sqrt()
}

/// Settings for a train / held-out suite of phantoms.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteConfig {
    pub train: usize,
    pub held_out: usize,
    pub template: PhantomConfig,
    pub period_range: (f64, f64),
    /// Phase drawn uniformly from this range (radians).
    pub phase_range: (f64, f64),
    /// Largest drift speed in pixels per frame; direction is uniform.
    pub max_drift: f64,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            train: 16,
            held_out: 8,
            template: PhantomConfig::default(),
            period_range: (10.0, 20.0),
            phase_range: (0.0, 2.0 * PI),
            max_drift: 0.05,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SuiteItem {
    pub config: PhantomConfig,
    pub phantom: Phantom,
}

#[derive(Clone, Debug)]
pub struct PhantomSuite {
    pub train: Vec<SuiteItem>,
    pub held_out: Vec<SuiteItem>,
}

pub fn generate_suite(cfg: &SuiteConfig) -> Result<PhantomSuite> {
    let total = cfg.train + cfg.held_out;
    let mut items = Vec::with_capacity(total);
    for i in 0..total {
        let mut rng = SeededRng::fork(cfg.seed, &[0x5017E, i as u64]);
        let mut pc = cfg.template.clone();
        pc.period = rng.uniform(cfg.period_range.0, cfg.period_range.1);
        pc.phase = rng.uniform(cfg.phase_range.0, cfg.phase_range.1);
        let speed = rng.uniform(0.0, cfg.max_drift);
        let angle = rng.uniform(0.0, 2.0 * PI);
        pc.drift = [speed * angle.cos(), speed * angle.sin()];
        pc.seed = cfg.seed.wrapping_mul(1_000_003).wrapping_add(i as u64);
        let phantom = generate_phantom(&pc)?;
        items.push(SuiteItem { config: pc, phantom });
    }
    let held_out = items.split_off(cfg.train);
    Ok(PhantomSuite { train: items, held_out })
}
