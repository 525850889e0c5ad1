use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use super::{
    usage, AnalyzeArgs, CliResult, Command, ConfigArgs, EvalArgs, FitArgs, FitFlags, GenArgs, RanksweepArgs,
    TrainArgs, WalkArgs,
};
use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::fit::{compression_stats, fit_video, FitOptions};
use crate::lowrank::{read_latents, write_latents, LatentCodes};
use crate::meta::{TrainConfig, TrainOutput, Trainer};
use crate::metrics::{format_db, QualityReport};
use crate::phantom::{generate_suite, PhantomConfig, SuiteConfig};
use crate::trajectory::{
    cosine_similarity_matrix, detect_extrema, extract_signal, frame_mae, heatmap_svg, log2_line_svg, matrix_csv,
    scatter_svg, signal_csv, signal_svg, Orientation, SignalOptions, WalkOptions,
};
use crate::video::{read_video, write_video, Video};
use crate::write_atomic;

pub(super) fn dispatch(command: Command) -> CliResult {
    match command {
        Command::Gen(a) => gen(a),
        Command::Train(a) => train(a),
        Command::Fit(a) => fit(a),
        Command::Analyze(a) => analyze(a),
        Command::Walk(a) => walk(a),
        Command::Eval(a) => eval(a),
        Command::Ranksweep(a) => ranksweep(a),
    }
}

fn require_file(path: &Path, what: &str) -> CliResult {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("{what} {} does not exist or is not a file", path.display())))
    }
}

/// `(name, path)` for a single `.lrmv` file or every one in a directory,
/// sorted by name.
fn list_videos(path: &Path) -> CliResult<Vec<(String, PathBuf)>> {
    let name_of = |p: &Path| {
        p.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    };
    if path.is_file() {
        return Ok(vec![(name_of(path), path.to_path_buf())]);
    }
    if !path.is_dir() {
        return Err(usage(format!("{} does not exist", path.display())));
    }
    let mut found: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "lrmv"))
        .collect();
    found.sort();
    if found.is_empty() {
        return Err(usage(format!("no .lrmv videos in {}", path.display())));
    }
    Ok(found.into_iter().map(|p| (name_of(&p), p)).collect())
}

fn read_all(list: &[(String, PathBuf)]) -> Result<Vec<Video>> {
    list.iter().map(|(_, p)| read_video(p)).collect()
}

fn load_config(args: &ConfigArgs) -> CliResult<TrainConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            require_file(path, "config")?;
            TrainConfig::load(path).map_err(|e| usage(e.to_string()))?
        }
        None => TrainConfig::default(),
    };
    for kv in &args.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim()).map_err(|e| usage(e.to_string()))?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn fit_options(model: &Checkpoint, flags: &FitFlags) -> CliResult<FitOptions> {
    let mut o = FitOptions::from_config(&model.config);
    if let Some(s) = flags.fit_steps {
        o.steps = s;
    }
    if let Some(lr) = flags.fit_lr {
        if !(lr.is_finite() && lr > 0.0) {
            return Err(usage(format!("--fit-lr must be positive, got {lr}")));
        }
        o.lr = lr;
    }
    if let Some(n) = flags.fit_subsample {
        o.subsample = n;
    }
    if let Some(seed) = flags.seed {
        o.seed = seed;
    }
    Ok(o)
}

fn stamp(deterministic: bool) -> Option<String> {
    if deterministic {
        return None;
    }
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Some(format!("generated at unix time {secs}"))
}

fn join(values: &[usize], sep: &str) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(sep)
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))
}

fn gen(a: GenArgs) -> CliResult {
    let cfg = SuiteConfig {
        train: a.train,
        held_out: a.held_out,
        template: PhantomConfig {
            frames: a.frames,
            height: a.height,
            width: a.width,
            noise: a.noise,
            ..PhantomConfig::default()
        },
        period_range: (a.period_min, a.period_max),
        seed: a.seed,
        ..SuiteConfig::default()
    };
    if a.train + a.held_out == 0 {
        return Err(usage("nothing to generate: --train and --held-out are both 0"));
    }
    if !(a.period_min > 2.0 && a.period_min <= a.period_max) {
        return Err(usage("need 2 < --period-min <= --period-max"));
    }
    let suite = generate_suite(&cfg).map_err(|e| usage(e.to_string()))?;
    let mut rows = Vec::new();
    for (split, items) in [("train", &suite.train), ("held_out", &suite.held_out)] {
        for (i, item) in items.iter().enumerate() {
            let rel = format!("{split}/phantom_{i:03}.lrmv");
            write_video(&a.out.join(&rel), &item.phantom.video)?;
            rows.push(vec![
                rel,
                item.config.period.to_string(),
                item.config.phase.to_string(),
                join(&item.phantom.ed, " "),
                join(&item.phantom.es, " "),
            ]);
        }
    }
    let manifest = a.out.join("manifest.csv");
    write_atomic(&manifest, &csv_bytes(&["path", "period", "phase", "ed", "es"], &rows)?)?;
    println!(
        "wrote {} training and {} held-out phantoms to {}",
        suite.train.len(),
        suite.held_out.len(),
        a.out.display()
    );
    Ok(())
}

fn train(a: TrainArgs) -> CliResult {
    let list = list_videos(&a.data)?;
    let mut cfg = load_config(&a.config)?;
    if let Some(n) = a.iters {
        cfg.outer_iters = n;
    }
    let videos = read_all(&list)?;
    let output = TrainOutput {
        checkpoint: Some(a.out.join("model.lrmc")),
        loss_csv: Some(a.out.join("loss.csv")),
    };
    write_atomic(&a.out.join("config.txt"), cfg.to_text().as_bytes())?;
    let every = (cfg.outer_iters / 20).max(1);
    let quiet = a.quiet;
    let model = Trainer::new(&videos, &cfg)?.run(&output, |r| {
        if !quiet && (r.iteration + 1) % every == 0 {
            println!(
                "iter {:>6}  recon {:.6}  ortho {:.6}  total {:.6}",
                r.iteration + 1,
                r.reconstruction,
                r.orthogonality,
                r.total
            );
        }
    })?;
    println!(
        "trained on {} videos for {} iterations; checkpoint {}",
        videos.len(),
        model.loss_curve.len(),
        a.out.join("model.lrmc").display()
    );
    Ok(())
}

fn fit(a: FitArgs) -> CliResult {
    require_file(&a.model, "checkpoint")?;
    let list = list_videos(&a.video)?;
    let model = Checkpoint::load(&a.model)?;
    let opts = fit_options(&model, &a.fit)?;
    let mut summary = Vec::new();
    for (name, path) in &list {
        let video = read_video(path)?;
        let fit = fit_video(&model, &video, &opts)?;
        write_latents(&a.out.join("latents").join(format!("{name}.lrml")), &fit.codes)?;
        write_video(&a.out.join("recon").join(format!("{name}.lrmv")), &fit.reconstruction)?;
        let curve: Vec<Vec<String>> = fit
            .loss_curve
            .iter()
            .enumerate()
            .map(|(i, l)| vec![i.to_string(), l.to_string()])
            .collect();
        write_atomic(
            &a.out.join("loss").join(format!("{name}.csv")),
            &csv_bytes(&["step", "loss"], &curve)?,
        )?;
        let (t, h, w) = video.shape();
        let stats = compression_stats(t, h, w, fit.codes.dim(), fit.codes.rank())?;
        let psnr = crate::metrics::psnr(&video, &fit.reconstruction)?;
        println!("{name}: psnr {} dB after {} steps", format_db(psnr), fit.steps);
        summary.push(vec![
            name.clone(),
            fit.steps.to_string(),
            fit.loss_curve.last().copied().unwrap_or(f64::NAN).to_string(),
            format_db(psnr),
            stats.original_values.to_string(),
            stats.code_values.to_string(),
            stats.ratio.to_string(),
        ]);
    }
    write_atomic(
        &a.out.join("fit_summary.csv"),
        &csv_bytes(
            &[
                "video",
                "steps",
                "final_loss",
                "psnr",
                "original_values",
                "code_values",
                "compression_ratio",
            ],
            &summary,
        )?,
    )?;
    Ok(())
}

fn analyze(a: AnalyzeArgs) -> CliResult {
    require_file(&a.model, "checkpoint")?;
    match (&a.latents, &a.video) {
        (None, None) => return Err(usage("analyze needs --latents or --video")),
        (Some(l), _) => require_file(l, "latents")?,
        _ => {}
    }
    if let Some(v) = &a.video {
        require_file(v, "video")?;
    }
    if a.orient == Orientation::Intensity && a.video.is_none() {
        return Err(usage("--orient intensity needs --video for per-frame intensities"));
    }
    if !(a.prominence >= 0.0) {
        return Err(usage("--prominence must be non-negative"));
    }
    let model = Checkpoint::load(&a.model)?;
    let video = a.video.as_deref().map(read_video).transpose()?;
    let codes: LatentCodes = match (&a.latents, &video) {
        (Some(path), _) => read_latents(path)?,
        (None, Some(v)) => {
            let fit = fit_video(&model, v, &fit_options(&model, &a.fit)?)?;
            write_latents(&a.out.join("latents.lrml"), &fit.codes)?;
            fit.codes
        }
        (None, None) => unreachable!("checked above"),
    };
    if let Some(v) = &video {
        if v.frames() != codes.frames() {
            return Err(usage(format!(
                "video has {} frames but the codes have {}",
                v.frames(),
                codes.frames()
            )));
        }
    }
    let opts = SignalOptions {
        detrend_window: a.detrend_window,
        expected_period: a.period,
        savgol_window: a.savgol_window,
        savgol_order: a.savgol_order,
    };
    let mut signal = extract_signal(&codes.phi, &opts)?;
    let means = video.as_ref().map(|v| v.frame_means());
    signal.orient(a.orient, means.as_deref())?;
    let detection = detect_extrema(&signal, a.prominence);
    let stamp = stamp(a.deterministic);
    write_atomic(&a.out.join("signal.csv"), &signal_csv(&signal, &detection)?)?;
    write_atomic(&a.out.join("signal.svg"), signal_svg(&signal, &detection, stamp.as_deref()).as_bytes())?;
    match cosine_similarity_matrix(&codes.phi) {
        Ok(c) => {
            write_atomic(&a.out.join("cosine.csv"), &matrix_csv(&c)?)?;
            write_atomic(&a.out.join("cosine.svg"), heatmap_svg(&c, stamp.as_deref()).as_bytes())?;
        }
        Err(e) => eprintln!("skipping cosine similarity: {e}"),
    }
    if codes.rank() == 2 {
        write_atomic(&a.out.join("trajectory.svg"), scatter_svg(&codes.phi, stamp.as_deref())?.as_bytes())?;
    }
    println!("ED (valleys): [{}]", join(&detection.ed, ", "));
    println!("ES (peaks):   [{}]", join(&detection.es, ", "));
    let frames = codes.frames();
    for (name, labels, found) in [("ED", &a.ed, &detection.ed), ("ES", &a.es, &detection.es)] {
        if labels.is_empty() {
            continue;
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= frames) {
            return Err(usage(format!("{name} label {bad} is outside the {frames} frames")));
        }
        println!("{name} MAE: {} frames", frame_mae(found, labels, frames)?);
    }
    Ok(())
}

fn walk(a: WalkArgs) -> CliResult {
    require_file(&a.model, "checkpoint")?;
    require_file(&a.latents, "latents")?;
    if a.samples < 2 {
        return Err(usage("--samples must be at least 2"));
    }
    if a.height == 0 || a.width == 0 {
        return Err(usage("--height and --width must be positive"));
    }
    let model = Checkpoint::load(&a.model)?;
    let codes = read_latents(&a.latents)?;
    let opts = WalkOptions {
        samples: a.samples,
        range: a.alpha_min.zip(a.alpha_max),
        overshoot: a.overshoot,
    };
    let walk = crate::trajectory::latent_walk(&model, &codes, &opts, a.height, a.width)?;
    write_video(&a.out.join("walk.lrmv"), &walk.frames)?;
    let means = walk.frames.frame_means();
    let mut header = vec!["index".to_string(), "alpha".to_string()];
    header.extend((0..codes.rank()).map(|j| format!("phi_{j}")));
    header.push("mean_intensity".into());
    let rows: Vec<Vec<String>> = (0..a.samples)
        .map(|i| {
            let mut r = vec![i.to_string(), walk.alphas[i].to_string()];
            r.extend(walk.phi.row(i).iter().map(|x| x.to_string()));
            r.push(means[i].to_string());
            r
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_atomic(&a.out.join("walk.csv"), &csv_bytes(&header, &rows)?)?;
    let svg = walk_svg(&walk.alphas, &means, stamp(a.deterministic).as_deref());
    write_atomic(&a.out.join("walk.svg"), svg.as_bytes())?;
    println!("rendered {} frames along the principal latent axis", a.samples);
    Ok(())
}

/// Mean intensity against `α`, drawn as a tiny standalone SVG.
fn walk_svg(alphas: &[f64], means: &[f64], stamp: Option<&str>) -> String {
    let (w, h, m) = (480.0, 240.0, 36.0);
    let span = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let ((x0, x1), (y0, y1)) = (span(alphas), span(means));
    let mut s = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n");
    if let Some(stamp) = stamp {
        let _ = writeln!(s, "<!-- {stamp} -->");
    }
    let _ = writeln!(s, "<!-- data alpha,mean_intensity");
    for (a, v) in alphas.iter().zip(means) {
        let _ = writeln!(s, "{a},{v}");
    }
    let _ = writeln!(s, "-->");
    let pts: Vec<String> = alphas
        .iter()
        .zip(means)
        .map(|(a, v)| {
            format!(
                "{:.2},{:.2}",
                m + (a - x0) / (x1 - x0) * (w - 2.0 * m),
                h - m - (v - y0) / (y1 - y0) * (h - 2.0 * m)
            )
        })
        .collect();
    let _ = writeln!(s, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1.5\" points=\"{}\"/>",
        pts.join(" ")
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">alpha vs mean intensity</text>",
        w / 2.0,
        h - 8.0
    );
    s.push_str("</svg>\n");
    s
}

fn eval(a: EvalArgs) -> CliResult {
    let refs = list_videos(&a.reference)?;
    let pairs: Vec<(String, PathBuf, PathBuf)> = if a.reconstruction.is_file() {
        if refs.len() != 1 {
            return Err(usage("a single reconstruction file needs a single reference file"));
        }
        vec![(refs[0].0.clone(), refs[0].1.clone(), a.reconstruction.clone())]
    } else if a.reconstruction.is_dir() {
        refs.into_iter()
            .map(|(name, r)| {
                let file = r.file_name().map(PathBuf::from).unwrap_or_default();
                let recon = a.reconstruction.join(file);
                if recon.is_file() {
                    Ok((name, r, recon))
                } else {
                    Err(usage(format!("missing reconstruction {}", recon.display())))
                }
            })
            .collect::<CliResult<_>>()?
    } else {
        return Err(usage(format!("{} does not exist", a.reconstruction.display())));
    };
    let loaded: Vec<(String, Video, Video)> = pairs
        .into_iter()
        .map(|(n, r, c)| Ok((n, read_video(&r)?, read_video(&c)?)))
        .collect::<Result<_>>()?;
    let report = QualityReport::evaluate(loaded.iter().map(|(n, r, c)| (n.clone(), r, c)))?;
    report.write_csv(&a.out.join("eval.csv"))?;
    for v in &report.videos {
        println!("{}: psnr {} dB, ssim3d {:.4}", v.id, format_db(v.psnr), v.ssim3d);
    }
    println!("mean: psnr {} dB, ssim3d {:.4}", format_db(report.mean_psnr), report.mean_ssim3d);
    Ok(())
}

/// Scores of one rank in a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct RankScore {
    pub rank: usize,
    pub psnr: f64,
    pub ssim3d: f64,
    pub compression_ratio: f64,
}

/// Trains at `cfg` (with its rank), fits every held-out video and scores the
/// reconstructions. `ranksweep` runs exactly this per rank.
pub fn train_fit_eval(train: &[Video], held_out: &[Video], cfg: &TrainConfig) -> Result<RankScore> {
    let model = Trainer::new(train, cfg)?.run(&TrainOutput::default(), |_| {})?;
    let opts = FitOptions::from_config(&model.config);
    let fits: Vec<Video> = held_out
        .iter()
        .map(|v| fit_video(&model, v, &opts).map(|f| f.reconstruction))
        .collect::<Result<_>>()?;
    let report = QualityReport::evaluate(
        held_out
            .iter()
            .zip(&fits)
            .enumerate()
            .map(|(i, (r, c))| (i.to_string(), r, c)),
    )?;
    let (t, h, w) = held_out
        .first()
        .map(Video::shape)
        .ok_or_else(|| Error::InvalidConfig("no held-out videos".into()))?;
    Ok(RankScore {
        rank: cfg.rank,
        psnr: report.mean_psnr,
        ssim3d: report.mean_ssim3d,
        compression_ratio: compression_stats(t, h, w, cfg.modulation_dim, cfg.rank)?.ratio,
    })
}

fn ranksweep(a: RanksweepArgs) -> CliResult {
    if a.ranks.is_empty() {
        return Err(usage("--ranks needs at least one value"));
    }
    let train_list = list_videos(&a.train)?;
    let eval_list = list_videos(&a.eval)?;
    let mut base = load_config(&a.config)?;
    if let Some(n) = a.iters {
        base.outer_iters = n;
    }
    if let Some(&bad) = a.ranks.iter().find(|&&k| k == 0 || k > base.modulation_dim) {
        return Err(usage(format!(
            "rank {bad} outside 1..={}",
            base.modulation_dim
        )));
    }
    let train = read_all(&train_list)?;
    let held_out = read_all(&eval_list)?;
    let mut rows = Vec::new();
    let mut ok: Vec<RankScore> = Vec::new();
    for &k in &a.ranks {
        let cfg = TrainConfig { rank: k, ..base.clone() };
        match train_fit_eval(&train, &held_out, &cfg) {
            Ok(s) => {
                println!(
                    "k = {k}: psnr {} dB, ssim3d {:.4}, ratio {:.1}",
                    format_db(s.psnr),
                    s.ssim3d,
                    s.compression_ratio
                );
                rows.push(vec![
                    k.to_string(),
                    format_db(s.psnr),
                    s.ssim3d.to_string(),
                    s.compression_ratio.to_string(),
                    String::new(),
                ]);
                ok.push(s);
            }
            Err(e) => {
                eprintln!("k = {k}: failed: {e}");
                rows.push(vec![k.to_string(), String::new(), String::new(), String::new(), e.to_string()]);
            }
        }
    }
    write_atomic(
        &a.out.join("ranksweep.csv"),
        &csv_bytes(&["k", "psnr", "ssim3d", "compression_ratio", "error"], &rows)?,
    )?;
    if !ok.is_empty() {
        let xs: Vec<f64> = ok.iter().map(|s| s.rank as f64).collect();
        let svg = log2_line_svg(
            "Held-out quality against latent rank",
            &xs,
            &[
                ("PSNR (dB)", ok.iter().map(|s| s.psnr).collect()),
                ("SSIM3D", ok.iter().map(|s| s.ssim3d).collect()),
            ],
            stamp(a.deterministic).as_deref(),
        )?;
        write_atomic(&a.out.join("ranksweep.svg"), svg.as_bytes())?;
    }
    if ok.is_empty() {
        return Err(Error::InvalidConfig("every rank failed".into()).into());
    }
    Ok(())
}
