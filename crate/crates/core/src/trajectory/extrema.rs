use crate::error::{Error, Result};

use super::signal::PhaseSignal;

pub const DEFAULT_PROMINENCE_FRAC: f64 = 0.5;

/// Interior local maxima. A flat top counts once, at its middle sample
/// (left-biased for even lengths); plateaus touching either end are skipped.
pub fn local_maxima(x: &[f64]) -> Vec<usize> {
    let n = x.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if x[i - 1] < x[i] {
            let mut j = i;
            while j + 1 < n && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 < n && x[j + 1] < x[i] {
                out.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Topographic prominence of each peak: its height above the higher of the
/// lowest points reached on either side before meeting strictly higher
/// ground (or the end of the series).
pub fn prominences(x: &[f64], peaks: &[usize]) -> Vec<f64> {
    peaks
        .iter()
        .map(|&p| {
            let h = x[p];
            let left = x[..=p].iter().rev().take_while(|&&v| v <= h).fold(h, |m, &v| m.min(v));
            let right = x[p..].iter().take_while(|&&v| v <= h).fold(h, |m, &v| m.min(v));
            h - left.max(right)
        })
        .collect()
}

/// `x` reflected about both end samples (`x[-i] = x[i]`), the same
/// extension the smoothing filter uses. Index `i` of `x` sits at
/// `i + x.len() - 1`.
pub fn mirror_extend(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut ext = Vec::with_capacity(3 * n.max(1) - 2);
    ext.extend(x[1..].iter().rev());
    ext.extend_from_slice(x);
    ext.extend(x[..n.saturating_sub(1)].iter().rev());
    ext
}

/// Whether a maximum at an end sample is a real turn: the parabola through
/// the three samples nearest that end must open downwards with its vertex
/// less than one frame outside the series.
fn turns_at_end(x: &[f64], end: usize) -> bool {
    let n = x.len();
    if n < 3 {
        return false;
    }
    let centre = if end == 0 { 1 } else { n - 2 };
    let (a, b, c) = (x[centre - 1], x[centre], x[centre + 1]);
    let curvature = a - 2.0 * b + c;
    if curvature >= 0.0 {
        return false;
    }
    let vertex = centre as f64 + (a - c) / (2.0 * curvature);
    vertex > -1.0 && vertex < n as f64
}

/// Peaks whose prominence is at least `threshold`. Peaks and prominences
/// are taken on the mirror extension; an end sample also has to pass
/// [`turns_at_end`].
pub fn prominent_peaks(x: &[f64], threshold: f64) -> Vec<usize> {
    if x.is_empty() {
        return Vec::new();
    }
    let offset = x.len() - 1;
    let ext = mirror_extend(x);
    let peaks: Vec<usize> = local_maxima(&ext)
        .into_iter()
        .filter(|&i| (offset..offset + x.len()).contains(&i))
        .filter(|&i| {
            let j = i - offset;
            (j != 0 && j != offset) || turns_at_end(x, j)
        })
        .collect();
    let prom = prominences(&ext, &peaks);
    peaks
        .into_iter()
        .zip(prom)
        .filter(|&(_, p)| p >= threshold)
        .map(|(i, _)| i - offset)
        .collect()
}

/// Population standard deviation.
pub fn std_dev(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt()
}

/// Detected cardiac phases: valleys are end-diastole, peaks end-systole.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhaseDetection {
    pub ed: Vec<usize>,
    pub es: Vec<usize>,
    /// Absolute prominence a detection had to reach.
    pub threshold: f64,
}

impl PhaseDetection {
    pub fn is_empty(&self) -> bool {
        self.ed.is_empty() && self.es.is_empty()
    }
}

/// Valleys and peaks of `s` with prominence at least
/// `prominence_frac · std(s)`.
pub fn detect_in_series(s: &[f64], prominence_frac: f64) -> PhaseDetection {
    let threshold = prominence_frac * std_dev(s);
    if s.len() < 3 {
        return PhaseDetection {
            threshold,
            ..Default::default()
        };
    }
    let neg: Vec<f64> = s.iter().map(|v| -v).collect();
    PhaseDetection {
        ed: prominent_peaks(&neg, threshold),
        es: prominent_peaks(s, threshold),
        threshold,
    }
}

/// Runs [`detect_in_series`] on the filtered signal.
pub fn detect_extrema(signal: &PhaseSignal, prominence_frac: f64) -> PhaseDetection {
    detect_in_series(&signal.filtered, prominence_frac)
}

/// Mean distance from each labelled frame to the nearest detection. With
/// no detections every label scores `frames`, so a miss is never silent.
pub fn frame_mae(detected: &[usize], labeled: &[usize], frames: usize) -> Result<f64> {
    if labeled.is_empty() {
        return Err(Error::InvalidConfig("frame_mae needs at least one labelled frame".into()));
    }
    let total: f64 = labeled
        .iter()
        .map(|&l| {
            detected
                .iter()
                .map(|&d| d.abs_diff(l) as f64)
                .fold(frames as f64, f64::min)
        })
        .sum();
    Ok(total / labeled.len() as f64)
}
