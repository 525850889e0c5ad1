//! CSV tables and standalone SVG figures for phase analysis.
//!
//! CSV is the machine-readable record; every SVG also embeds its data as a
//! comment. An optional `stamp` comment (for example a timestamp) is the only
//! content that may differ between otherwise identical runs.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::numerics::Matrix;

use super::extrema::PhaseDetection;
use super::signal::PhaseSignal;

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))
}

/// `frame_index,s_raw,s_detrended,s_filt,is_ed,is_es`, one row per frame.
pub fn signal_csv(signal: &PhaseSignal, detection: &PhaseDetection) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["frame_index", "s_raw", "s_detrended", "s_filt", "is_ed", "is_es"])?;
    for t in 0..signal.len() {
        w.write_record([
            t.to_string(),
            signal.raw[t].to_string(),
            signal.detrended[t].to_string(),
            signal.filtered[t].to_string(),
            u8::from(detection.ed.contains(&t)).to_string(),
            u8::from(detection.es.contains(&t)).to_string(),
        ])?;
    }
    finish_csv(w)
}

/// Headerless numeric matrix, one CSV row per matrix row.
pub fn matrix_csv(m: &Matrix) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in m.row_iter() {
        w.write_record(row.iter().map(|x| x.to_string()))?;
    }
    finish_csv(w)
}

const W: f64 = 640.0;
const H: f64 = 360.0;
const MARGIN: f64 = 48.0;

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64>, ys: impl Iterator<Item = f64>) -> Self {
        Frame {
            x: padded_range(xs),
            y: padded_range(ys),
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * MARGIN)
    }
}

fn padded_range(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(x), h.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn header(title: &str, stamp: Option<&str>, data: &str) -> String {
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    );
    if let Some(stamp) = stamp {
        let _ = writeln!(s, "<!-- {} -->", stamp.replace("--", "- -"));
    }
    let _ = writeln!(s, "<!-- data\n{}-->", data.replace("--", "- -"));
    let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>",
        W / 2.0,
        escape(title)
    );
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(s: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let _ = writeln!(
        s,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>",
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
        W / 2.0,
        H - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        s,
        "<text x=\"14\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{}</text>",
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
    for (v, anchor, x, y) in [
        (f.x.0, "start", MARGIN, H - MARGIN + 14.0),
        (f.x.1, "end", W - MARGIN, H - MARGIN + 14.0),
    ] {
        let _ = writeln!(
            s,
            "<text x=\"{x}\" y=\"{y}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"{anchor}\">{v:.3}</text>"
        );
    }
    for (v, y) in [(f.y.0, H - MARGIN), (f.y.1, MARGIN + 10.0)] {
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{y}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{v:.3}</text>",
            MARGIN - 4.0
        );
    }
}

fn polyline(s: &mut String, f: &Frame, pts: impl Iterator<Item = (f64, f64)>, color: &str, dashed: bool) {
    let coords: Vec<String> = pts
        .filter(|(_, y)| y.is_finite())
        .map(|(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
        .collect();
    let dash = if dashed { " stroke-dasharray=\"4 3\"" } else { "" };
    let _ = writeln!(
        s,
        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash} points=\"{}\"/>",
        coords.join(" ")
    );
}

/// Raw and filtered signal with ED (valley) and ES (peak) markers.
pub fn signal_svg(signal: &PhaseSignal, detection: &PhaseDetection, stamp: Option<&str>) -> String {
    let data = String::from_utf8(signal_csv(signal, detection).unwrap_or_default()).unwrap_or_default();
    let mut s = header("Phase signal", stamp, &data);
    let ts = (0..signal.len()).map(|t| t as f64);
    let ys = signal.detrended.iter().chain(&signal.filtered).copied();
    let f = Frame::new(ts, ys);
    axes(&mut s, &f, "frame", "signal");
    polyline(&mut s, &f, signal.detrended.iter().enumerate().map(|(t, &y)| (t as f64, y)), "#999", true);
    polyline(&mut s, &f, signal.filtered.iter().enumerate().map(|(t, &y)| (t as f64, y)), "#1f5fa8", false);
    for (idx, color) in [(&detection.ed, "#c0392b"), (&detection.es, "#27ae60")] {
        for &t in idx {
            let _ = writeln!(
                s,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"{color}\"/>",
                f.px(t as f64),
                f.py(signal.filtered[t])
            );
        }
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\"><tspan fill=\"#c0392b\">ED</tspan> <tspan fill=\"#27ae60\">ES</tspan></text>",
        W - MARGIN - 40.0,
        MARGIN - 6.0
    );
    s.push_str("</svg>\n");
    s
}

/// Cosine-similarity heatmap, −1 blue through white to +1 red.
pub fn heatmap_svg(c: &Matrix, stamp: Option<&str>) -> String {
    let data = String::from_utf8(matrix_csv(c).unwrap_or_default()).unwrap_or_default();
    let mut s = header("Cosine similarity of frame latents", stamp, &data);
    let n = c.rows().max(1);
    let side = (H - 2.0 * MARGIN).min(W - 2.0 * MARGIN);
    let cell = side / n as f64;
    let x0 = (W - side) / 2.0;
    for i in 0..c.rows() {
        for j in 0..c.cols() {
            let v = c[(i, j)].clamp(-1.0, 1.0);
            let (r, g, b) = if v >= 0.0 {
                (255.0, 255.0 * (1.0 - v), 255.0 * (1.0 - v))
            } else {
                (255.0 * (1.0 + v), 255.0 * (1.0 + v), 255.0)
            };
            let _ = writeln!(
                s,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"rgb({},{},{})\"/>",
                x0 + j as f64 * cell,
                MARGIN + i as f64 * cell,
                cell + 0.01,
                cell + 0.01,
                r.round(),
                g.round(),
                b.round()
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Two-dimensional trajectory of `φ_t`, points joined in time order.
pub fn scatter_svg(phi: &Matrix, stamp: Option<&str>) -> Result<String> {
    if phi.cols() != 2 {
        return Err(Error::dims("trajectory scatter needs rank", 2, phi.cols()));
    }
    let data = String::from_utf8(matrix_csv(phi)?).unwrap_or_default();
    let mut s = header("Latent trajectory", stamp, &data);
    let f = Frame::new(phi.row_iter().map(|r| r[0]), phi.row_iter().map(|r| r[1]));
    axes(&mut s, &f, "phi[0]", "phi[1]");
    polyline(&mut s, &f, phi.row_iter().map(|r| (r[0], r[1])), "#bbb", false);
    let last = phi.rows().saturating_sub(1).max(1) as f64;
    for (t, r) in phi.row_iter().enumerate() {
        let shade = (200.0 * (1.0 - t as f64 / last)).round();
        let _ = writeln!(
            s,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"rgb({shade},{shade},255)\"/>",
            f.px(r[0]),
            f.py(r[1])
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Line plot over a log2 x axis, one series per `(name, values)`.
pub fn log2_line_svg(
    title: &str,
    xs: &[f64],
    series: &[(&str, Vec<f64>)],
    stamp: Option<&str>,
) -> Result<String> {
    if xs.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidConfig("log2 axis needs positive x values".into()));
    }
    let mut data = String::from("x");
    for (name, _) in series {
        let _ = write!(data, ",{name}");
    }
    data.push('\n');
    for (i, x) in xs.iter().enumerate() {
        let _ = write!(data, "{x}");
        for (_, ys) in series {
            let _ = write!(data, ",{}", ys.get(i).copied().unwrap_or(f64::NAN));
        }
        data.push('\n');
    }
    let mut s = header(title, stamp, &data);
    let lx: Vec<f64> = xs.iter().map(|x| x.log2()).collect();
    let palette = ["#1f5fa8", "#c0392b", "#27ae60", "#8e44ad"];
    let mut sections = Vec::new();
    for (i, (name, ys)) in series.iter().enumerate() {
        let f = Frame::new(lx.iter().copied(), ys.iter().copied());
        sections.push((f, name, ys, palette[i % palette.len()]));
    }
    if let Some((f, name, _, _)) = sections.first() {
        axes(&mut s, f, "k (log2 scale)", name);
        for (x, &k) in lx.iter().zip(xs) {
            let _ = writeln!(
                s,
                "<text x=\"{:.2}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{k}</text>",
                f.px(*x),
                H - MARGIN + 26.0
            );
        }
    }
    for (i, (f, name, ys, color)) in sections.iter().enumerate() {
        polyline(&mut s, f, lx.iter().copied().zip(ys.iter().copied()), color, false);
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" fill=\"{color}\">{}</text>",
            MARGIN + 6.0,
            MARGIN + 14.0 + 12.0 * i as f64,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
