use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::matrix::{dot, norm};
use crate::numerics::{principal_axis, Matrix};

/// Differences shorter than this are treated as no motion.
pub const MIN_STEP_NORM: f64 = 1e-12;

/// Pairwise cosine similarities between the rows of `phi`.
pub fn cosine_similarity_matrix(phi: &Matrix) -> Result<Matrix> {
    let n = phi.rows();
    let norms: Vec<f64> = phi.row_iter().map(norm).collect();
    if let Some(t) = norms.iter().position(|&x| x == 0.0) {
        return Err(Error::Degenerate(format!("frame {t} has a zero latent vector")));
    }
    let mut c = Matrix::zeros(n, n);
    for i in 0..n {
        c[(i, i)] = 1.0;
        for j in i + 1..n {
            let s = dot(phi.row(i), phi.row(j)) / (norms[i] * norms[j]);
            c[(i, j)] = s;
            c[(j, i)] = s;
        }
    }
    Ok(c)
}

/// Unit steps between consecutive frames.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionDirections {
    /// One unit row per kept step.
    pub directions: Matrix,
    /// Step `t` is the move from frame `t` to `t + 1`.
    pub kept: Vec<usize>,
    /// Steps whose length was below [`MIN_STEP_NORM`].
    pub dropped: Vec<usize>,
}

pub fn motion_directions(phi: &Matrix) -> Result<MotionDirections> {
    let (frames, k) = phi.shape();
    if frames < 2 {
        return Err(Error::Degenerate(format!("motion needs at least 2 frames, got {frames}")));
    }
    let mut data = Vec::new();
    let (mut kept, mut dropped) = (Vec::new(), Vec::new());
    for t in 0..frames - 1 {
        let d: Vec<f64> = phi.row(t + 1).iter().zip(phi.row(t)).map(|(a, b)| a - b).collect();
        let len = norm(&d);
        if len < MIN_STEP_NORM {
            dropped.push(t);
        } else {
            data.extend(d.iter().map(|x| x / len));
            kept.push(t);
        }
    }
    if kept.is_empty() {
        return Err(Error::Degenerate("latent trajectory does not move".into()));
    }
    Ok(MotionDirections {
        directions: Matrix::from_vec(kept.len(), k, data)?,
        kept,
        dropped,
    })
}

/// How the sign of the phase signal is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Orientation {
    /// Largest-magnitude entry of the principal direction is positive.
    #[default]
    PcaSign,
    /// The signal is anti-correlated with per-frame mean intensity, so the
    /// brightest frames sit in valleys.
    Intensity,
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::PcaSign => "pca-sign",
            Orientation::Intensity => "intensity",
        })
    }
}

impl FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pca-sign" => Ok(Orientation::PcaSign),
            "intensity" => Ok(Orientation::Intensity),
            other => Err(Error::InvalidConfig(format!(
                "unknown orientation {other:?} (expected pca-sign or intensity)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignalOptions {
    /// Moving-average window; `None` picks [`default_detrend_window`].
    pub detrend_window: Option<usize>,
    /// Known cycle length in frames, used only for the default window.
    pub expected_period: Option<f64>,
    pub savgol_window: usize,
    pub savgol_order: usize,
}

impl Default for SignalOptions {
    fn default() -> Self {
        SignalOptions {
            detrend_window: None,
            expected_period: None,
            savgol_window: 7,
            savgol_order: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSignal {
    /// Unit principal motion direction `p`.
    pub direction: Vec<f64>,
    pub raw: Vec<f64>,
    pub detrended: Vec<f64>,
    pub filtered: Vec<f64>,
    pub detrend_window: usize,
    pub savgol_window: usize,
}

impl PhaseSignal {
    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    /// Negates `p` and every series.
    pub fn flip(&mut self) {
        for series in [
            &mut self.direction,
            &mut self.raw,
            &mut self.detrended,
            &mut self.filtered,
        ] {
            series.iter_mut().for_each(|x| *x = -*x);
        }
    }

    /// Applies `orientation`; `frame_means` is needed for
    /// [`Orientation::Intensity`].
    pub fn orient(&mut self, orientation: Orientation, frame_means: Option<&[f64]>) -> Result<()> {
        match orientation {
            Orientation::PcaSign => Ok(()),
            Orientation::Intensity => {
                let means = frame_means.ok_or_else(|| {
                    Error::InvalidConfig("intensity orientation needs the source video".into())
                })?;
                if means.len() != self.len() {
                    return Err(Error::dims("frame intensities", self.len(), means.len()));
                }
                if pearson(&self.filtered, means) > 0.0 {
                    self.flip();
                }
                Ok(())
            }
        }
    }
}

/// Pearson correlation; 0 when either input is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

fn odd_at_most(w: usize, cap: usize) -> usize {
    let w = w.clamp(1, cap.max(1));
    if w % 2 == 1 {
        w
    } else if w < cap {
        w + 1
    } else {
        w - 1
    }
}

/// `min(T, 2P)` when a period is known, else `T/2`, made odd.
pub fn default_detrend_window(frames: usize, expected_period: Option<f64>) -> usize {
    let w = match expected_period {
        Some(p) if p.is_finite() && p > 0.0 => ((2.0 * p).round() as usize).min(frames),
        _ => frames / 2,
    };
    odd_at_most(w, frames)
}

/// Subtracts a centred moving average. Near the ends the window is cut
/// to the samples that exist.
pub fn moving_average_detrend(x: &[f64], window: usize) -> Vec<f64> {
    let n = x.len();
    let half = window / 2;
    (0..n)
        .map(|i| {
            let slice = &x[i.saturating_sub(half)..=(i + half).min(n - 1)];
            x[i] - slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect()
}

/// Smoothing weights of a Savitzky–Golay filter: the value at the window
/// centre of the least-squares polynomial of degree `order`.
pub fn savgol_coefficients(window: usize, order: usize) -> Result<Vec<f64>> {
    if window % 2 == 0 || order >= window {
        return Err(Error::InvalidConfig(format!(
            "Savitzky-Golay needs an odd window larger than the order, got window {window}, order {order}"
        )));
    }
    let half = (window / 2) as f64;
    let m = order + 1;
    // Normal equations (AᵀA) c = e₀ with A[i][j] = (i - half)^j; the weights
    // are then A c.
    let mut ata = vec![vec![0.0; m]; m];
    for i in 0..window {
        let x = i as f64 - half;
        for (r, row) in ata.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell += x.powi((r + c) as i32);
            }
        }
    }
    let mut rhs = vec![0.0; m];
    rhs[0] = 1.0;
    let c = solve(ata, rhs)?;
    Ok((0..window)
        .map(|i| {
            let x = i as f64 - half;
            c.iter().enumerate().map(|(j, cj)| cj * x.powi(j as i32)).sum()
        })
        .collect())
}

/// Gaussian elimination with partial pivoting on a small dense system.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col] == 0.0 {
            return Err(Error::Degenerate("singular least-squares system".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Ok(x)
}

/// Savitzky–Golay smoothing with mirror padding (`x[-i] = x[i]`). The
/// window is made odd and clamped to the series length, and the order is
/// lowered if it no longer fits.
pub fn savgol_filter(x: &[f64], window: usize, order: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let window = odd_at_most(window, n);
    let order = order.min(window - 1);
    let coef = savgol_coefficients(window, order)?;
    let half = window / 2;
    let at = |i: isize| -> f64 {
        let last = n as isize - 1;
        let j = if i < 0 {
            -i
        } else if i > last {
            2 * last - i
        } else {
            i
        };
        x[j as usize]
    };
    Ok((0..n as isize)
        .map(|i| {
            coef.iter()
                .enumerate()
                .map(|(j, c)| c * at(i + j as isize - half as isize))
                .sum()
        })
        .collect())
}

/// Projects every `φ_t` onto the principal motion direction, removes slow
/// wander and smooths. The sign follows the principal-axis convention;
/// see [`PhaseSignal::orient`] for alternatives.
pub fn extract_signal(phi: &Matrix, opts: &SignalOptions) -> Result<PhaseSignal> {
    let frames = phi.rows();
    let motion = motion_directions(phi)?;
    let direction = principal_axis(&motion.directions)?;
    let raw: Vec<f64> = phi.row_iter().map(|r| dot(r, &direction)).collect();
    let detrend_window = match opts.detrend_window {
        Some(w) => odd_at_most(w, frames),
        None => default_detrend_window(frames, opts.expected_period),
    };
    let detrended = moving_average_detrend(&raw, detrend_window);
    let savgol_window = odd_at_most(opts.savgol_window, frames);
    let filtered = savgol_filter(&detrended, savgol_window, opts.savgol_order)?;
    Ok(PhaseSignal {
        direction,
        raw,
        detrended,
        filtered,
        detrend_window,
        savgol_window,
    })
}
