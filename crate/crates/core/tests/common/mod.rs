//! Naive reference implementations shared by the oracle tests and the
//! acceptance run.

#![allow(dead_code)]

use lrm_functa::metrics::{psnr, ssim3d, ssim3d_window};
use lrm_functa::numerics::{pca_first_component, Matrix, SeededRng};
use lrm_functa::trajectory::{detect_in_series, local_maxima, prominences, savgol_filter, std_dev};
use lrm_functa::video::Video;

/// Eigenvector of the largest eigenvalue of a symmetric matrix by cyclic
/// Jacobi rotations.
fn jacobi_top_eigenvector(mut a: Vec<Vec<f64>>) -> (f64, Vec<f64>, f64) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut eig: Vec<(f64, usize)> = (0..n).map(|i| (a[i][i], i)).collect();
    eig.sort_by(|x, y| y.0.total_cmp(&x.0));
    let top = eig[0].1;
    let gap = eig[0].0 - eig.get(1).map_or(0.0, |e| e.0);
    (eig[0].0, v.iter().map(|row| row[top]).collect(), gap)
}

fn covariance(m: &Matrix) -> Vec<Vec<f64>> {
    let (n, d) = m.shape();
    let mean: Vec<f64> = (0..d).map(|j| (0..n).map(|i| m[(i, j)]).sum::<f64>() / n as f64).collect();
    (0..d)
        .map(|a| {
            (0..d)
                .map(|b| (0..n).map(|i| (m[(i, a)] - mean[a]) * (m[(i, b)] - mean[b])).sum::<f64>() / n as f64)
                .collect()
        })
        .collect()
}


/// Value at the centre of the least-squares polynomial through `ys`, by
/// Gram–Schmidt projection onto `1, x, …, x^order`.
fn ls_centre(ys: &[f64], order: usize) -> f64 {
    let half = (ys.len() / 2) as f64;
    let xs: Vec<f64> = (0..ys.len()).map(|i| i as f64 - half).collect();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for p in 0..=order {
        let mut b: Vec<f64> = xs.iter().map(|x| x.powi(p as i32)).collect();
        for q in &basis {
            let proj: f64 = b.iter().zip(q).map(|(a, c)| a * c).sum();
            b.iter_mut().zip(q).for_each(|(a, c)| *a -= proj * c);
        }
        let n = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        b.iter_mut().for_each(|x| *x /= n);
        basis.push(b);
    }
    let centre = ys.len() / 2;
    basis
        .iter()
        .map(|q| q.iter().zip(ys).map(|(a, y)| a * y).sum::<f64>() * q[centre])
        .sum()
}


/// Prominence by definition: for each side, the lowest point reachable
/// without climbing above the peak, scanning every start position.
fn brute_prominence(x: &[f64], i: usize) -> f64 {
    let h = x[i];
    let mut left = h;
    for j in (0..i).rev() {
        if x[j..i].iter().all(|&v| v <= h) {
            left = left.min(x[j..=i].iter().copied().fold(f64::INFINITY, f64::min));
        }
    }
    let mut right = h;
    for j in i + 1..x.len() {
        if x[i + 1..=j].iter().all(|&v| v <= h) {
            right = right.min(x[i..=j].iter().copied().fold(f64::INFINITY, f64::min));
        }
    }
    h - left.max(right)
}

/// For a maximum at an end sample: solves p'(u) = 0 for the Lagrange
/// parabola through the three end samples at local positions 0, 1, 2 and
/// checks that it is a maximum less than one frame outside the series.
fn end_is_turn(x: &[f64], end: usize) -> bool {
    let n = x.len();
    let (a, b, c, base) = if end == 0 { (x[0], x[1], x[2], 0.0) } else { (x[n - 3], x[n - 2], x[n - 1], (n - 3) as f64) };
    // p'(u) = a(2u-3)/2 - b(2u-2) + c(2u-1)/2 = (a - 2b + c) u + (-3a + 4b - c)/2
    let slope = a - 2.0 * b + c;
    if slope >= 0.0 {
        return false;
    }
    let u = -(-3.0 * a + 4.0 * b - c) / (2.0 * slope);
    let pos = base + u;
    pos > -1.0 && pos < n as f64
}

fn brute_detect(x: &[f64], frac: f64) -> (Vec<usize>, Vec<usize>) {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let sd = (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt();
    let thr = frac * sd;
    // reflect about both ends without repeating the end sample
    let at = |j: isize| -> f64 {
        let j = if j < 0 { -j } else if j >= n as isize { 2 * (n as isize - 1) - j } else { j };
        x[j as usize]
    };
    let ext: Vec<f64> = (-(n as isize - 1)..2 * n as isize - 1).map(at).collect();
    let off = n - 1;
    let scan = |s: &[f64]| -> Vec<usize> {
        let orig = &s[off..off + n];
        (off..off + n)
            .filter(|&i| s[i - 1] < s[i] && s[i] > s[i + 1])
            .filter(|&i| brute_prominence(s, i) >= thr)
            .map(|i| i - off)
            .filter(|&j| (j != 0 && j != n - 1) || end_is_turn(orig, j))
            .collect()
    };
    let neg: Vec<f64> = ext.iter().map(|v| -v).collect();
    (scan(&neg), scan(&ext))
}


fn naive_ssim(a: &Video, b: &Video, win: usize) -> f64 {
    let (t, h, w) = a.shape();
    let (c1, c2) = (1e-4, 9e-4);
    let at = |v: &Video, f: usize, i: usize, j: usize| v.data()[(f * h + i) * w + j];
    let mut total = 0.0;
    let mut count = 0.0;
    for f in 0..=t - win {
        for i in 0..=h - win {
            for j in 0..=w - win {
                let mut xs = Vec::new();
                let mut ys = Vec::new();
                for df in 0..win {
                    for di in 0..win {
                        for dj in 0..win {
                            xs.push(at(a, f + df, i + di, j + dj));
                            ys.push(at(b, f + df, i + di, j + dj));
                        }
                    }
                }
                let n = xs.len() as f64;
                let mx = xs.iter().sum::<f64>() / n;
                let my = ys.iter().sum::<f64>() / n;
                let vx = xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>() / n;
                let vy = ys.iter().map(|y| (y - my) * (y - my)).sum::<f64>() / n;
                let cxy = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / n;
                total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
                count += 1.0;
            }
        }
    }
    total / count
}

fn random_video(shape: (usize, usize, usize), rng: &mut SeededRng) -> Video {
    let n = shape.0 * shape.1 * shape.2;
    Video::new(shape.0, shape.1, shape.2, rng.uniform_vec(n, 0.0, 1.0)).unwrap()
}

/// Outcome of one oracle comparison: a summary on success, the first
/// disagreement otherwise.
pub type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn check_pca() -> Check {
    let mut checked = 0;
    let mut worst: f64 = 1.0;
    for seed in 0..200 {
        let mut rng = SeededRng::new(seed);
        let n = 5 + rng.below(40);
        let d = 2 + rng.below(5);
        let mut m = rng.normal_matrix(n, d);
        for i in 0..n {
            for j in 0..d {
                m[(i, j)] *= 1.0 + j as f64;
            }
        }
        let (top, vec, gap) = jacobi_top_eigenvector(covariance(&m));
        if gap < 1e-3 * top {
            continue;
        }
        let p = pca_first_component(&m).map_err(|e| e.to_string())?;
        let cos: f64 = p.iter().zip(&vec).map(|(a, b)| a * b).sum::<f64>().abs();
        ensure(cos > 1.0 - 1e-9, || format!("seed {seed}: |cos| = {cos}"))?;
        worst = worst.min(cos);
        checked += 1;
    }
    ensure(checked > 150, || format!("only {checked} well-separated cases"))?;
    Ok(format!("{checked} matrices, min |cos| = 1 - {:.1e}", 1.0 - worst))
}

pub fn check_savgol() -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..50 {
        let mut rng = SeededRng::new(seed);
        let n = 20 + rng.below(30);
        let window = [5, 7, 9, 11][rng.below(4)];
        let order = rng.below(4).min(window - 1);
        // exact on polynomials of degree <= order, interior points
        let coef = rng.normal_vec(order + 1);
        let poly: Vec<f64> = (0..n)
            .map(|t| coef.iter().enumerate().map(|(p, c)| c * (t as f64 / 10.0).powi(p as i32)).sum())
            .collect();
        let smooth = savgol_filter(&poly, window, order).map_err(|e| e.to_string())?;
        for t in window / 2..n - window / 2 {
            let err = (smooth[t] - poly[t]).abs();
            ensure(err < 1e-9, || format!("seed {seed} t {t}: polynomial error {err:e}"))?;
            worst = worst.max(err);
        }
        // arbitrary data, every point including mirrored edges
        let x = rng.normal_vec(n);
        let h = window / 2;
        let padded: Vec<f64> = (0..n + 2 * h)
            .map(|i| {
                let j = i as isize - h as isize;
                let j = if j < 0 { -j } else if j >= n as isize { 2 * (n as isize - 1) - j } else { j };
                x[j as usize]
            })
            .collect();
        let y = savgol_filter(&x, window, order).map_err(|e| e.to_string())?;
        for t in 0..n {
            let oracle = ls_centre(&padded[t..t + window], order);
            let err = (y[t] - oracle).abs();
            ensure(err < 1e-9, || format!("seed {seed} t {t}: {} vs {oracle}", y[t]))?;
            worst = worst.max(err);
        }
    }
    Ok(format!("50 signals, max error {worst:.1e}"))
}

pub fn check_prominence() -> Check {
    let mut found = 0;
    for seed in 0..100 {
        let mut rng = SeededRng::new(1000 + seed);
        let n = 20 + rng.below(60);
        let raw = rng.normal_vec(n);
        let smooth = savgol_filter(&raw, 7, 2).map_err(|e| e.to_string())?;
        let frac = rng.uniform(0.0, 1.5);
        let d = detect_in_series(&smooth, frac);
        let (ed, es) = brute_detect(&smooth, frac);
        ensure(d.ed == ed && d.es == es, || {
            format!("seed {seed}: valleys {:?} vs {ed:?}, peaks {:?} vs {es:?}", d.ed, d.es)
        })?;
        ensure((d.threshold - frac * std_dev(&smooth)).abs() < 1e-15, || format!("seed {seed}: threshold"))?;
        let peaks = local_maxima(&smooth);
        for (p, v) in peaks.iter().zip(prominences(&smooth, &peaks)) {
            ensure((v - brute_prominence(&smooth, *p)).abs() < 1e-15, || format!("seed {seed}: prominence at {p}"))?;
        }
        found += ed.len() + es.len();
    }
    Ok(format!("100 signals, {found} extrema, identical indices"))
}

pub fn check_quality_metrics() -> Check {
    let mut rng = SeededRng::new(77);
    let mut worst: f64 = 0.0;
    for case in 0..6 {
        let shape = (7 + rng.below(3), 7 + rng.below(5), 7 + rng.below(5));
        let a = random_video(shape, &mut rng);
        // partially correlated second video
        let data: Vec<f64> = a.data().iter().map(|x| (0.7 * x + 0.3 * rng.uniform(0.0, 1.0)).min(1.0)).collect();
        let b = Video::new(shape.0, shape.1, shape.2, data).map_err(|e| e.to_string())?;
        let fast = ssim3d(&a, &b).map_err(|e| e.to_string())?;
        let slow = naive_ssim(&a, &b, 7);
        ensure((fast - slow).abs() < 1e-9, || format!("case {case}: ssim {fast} vs {slow}"))?;
        let w3 = ssim3d_window(&a, &b, 3).map_err(|e| e.to_string())?;
        let slow3 = naive_ssim(&a, &b, 3);
        ensure((w3 - slow3).abs() < 1e-9, || format!("case {case}: window 3 ssim {w3} vs {slow3}"))?;
        let mse: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.data().len() as f64;
        let p = psnr(&a, &b).map_err(|e| e.to_string())?;
        let naive = 10.0 * (1.0 / mse).log10();
        ensure((p - naive).abs() < 1e-10, || format!("case {case}: psnr {p} vs {naive}"))?;
        worst = worst.max((fast - slow).abs()).max((w3 - slow3).abs()).max((p - naive).abs());
    }
    Ok(format!("6 video pairs, max difference {worst:.1e}"))
}
