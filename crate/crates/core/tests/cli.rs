//! End-to-end runs of the `lrm` binary on tiny inputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lrm_functa::cli::train_fit_eval;
use lrm_functa::meta::TrainConfig;
use lrm_functa::video::{read_video, Video};

const TINY: &[&str] = &[
    "--set", "hidden_width=8",
    "--set", "hidden_layers=2",
    "--set", "modulation_dim=8",
    "--set", "coord_subsample=16",
    "--set", "batch_videos=1",
    "--set", "outer_lr=1e-3",
    "--set", "fit_steps=4",
    "--set", "fit_subsample=32",
];

fn lrm(args: &[&str]) -> Output {
    lrm_env(args, None)
}

fn lrm_env(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lrm"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("LRM_THREADS", t),
        None => cmd.env_remove("LRM_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn ok(out: &Output) -> String {
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {stdout}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    stdout
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path) -> PathBuf {
    let data = dir.join("data");
    ok(&lrm(&[
        "gen", "--out", s(&data), "--seed", "3", "--train", "2", "--held-out", "1",
        "--frames", "12", "--height", "8", "--width", "8", "--period-min", "5", "--period-max", "6",
    ]));
    data
}

fn train(data: &Path, out: &Path, threads: Option<&str>) {
    let train_dir = data.join("train");
    let mut args = vec!["train", "--data", s(&train_dir), "--out", s(out), "--iters", "3", "--quiet"];
    args.extend_from_slice(TINY);
    ok(&lrm_env(&args, threads));
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut all = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            all.extend(files_under(&p));
        } else {
            all.push(p);
        }
    }
    all.sort();
    all
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.lrmc");
    let out = dir.path().join("out");
    let code = |o: Output| o.status.code();
    assert_eq!(code(lrm(&[])), Some(2));
    assert_eq!(code(lrm(&["frobnicate"])), Some(2));
    assert_eq!(
        code(lrm(&["fit", "--model", s(&missing), "--video", s(dir.path()), "--out", s(&out)])),
        Some(2)
    );
    assert_eq!(
        code(lrm(&["analyze", "--model", s(&missing), "--video", s(dir.path()), "--out", s(&out)])),
        Some(2)
    );
    assert_eq!(
        code(lrm(&["ranksweep", "--train", s(dir.path()), "--eval", s(dir.path()), "--out", s(&out), "--ranks", ""])),
        Some(2)
    );
    assert_eq!(
        code(lrm(&["gen", "--out", s(&out), "--train", "0", "--held-out", "0"])),
        Some(2)
    );
    assert_eq!(
        code(lrm_env(&["gen", "--out", s(&out), "--train", "1", "--held-out", "0", "--frames", "8", "--height", "8", "--width", "8"], Some("zero"))),
        Some(2)
    );
    assert_eq!(code(lrm(&["train", "--data", s(dir.path()), "--out", s(&out), "--set", "rank=0"])), Some(2));
    assert!(!out.exists(), "usage errors must not write output");
    assert_eq!(code(lrm(&["--help"])), Some(0));
}

#[test]
fn corrupted_checkpoint_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path());
    let bad = dir.path().join("bad.lrmc");
    fs::write(&bad, b"LRMC not really a checkpoint").unwrap();
    let out = lrm(&["fit", "--model", s(&bad), "--video", s(&data.join("held_out")), "--out", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn full_pipeline_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path());
    let manifest = fs::read_to_string(data.join("manifest.csv")).unwrap();
    assert!(manifest.starts_with("path,period,phase,ed,es"));
    assert_eq!(manifest.lines().count(), 4);

    let run = dir.path().join("run");
    train(&data, &run, None);
    for f in ["model.lrmc", "loss.csv", "config.txt"] {
        assert!(run.join(f).is_file(), "{f}");
    }
    assert_eq!(fs::read_to_string(run.join("loss.csv")).unwrap().lines().count(), 4);
    let model = run.join("model.lrmc");

    let fitted = dir.path().join("fit");
    ok(&lrm(&["fit", "--model", s(&model), "--video", s(&data.join("held_out")), "--out", s(&fitted)]));
    let summary = fs::read_to_string(fitted.join("fit_summary.csv")).unwrap();
    assert!(summary.starts_with("video,steps,final_loss,psnr,original_values,code_values,compression_ratio"));
    let row: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1], "4");
    // 12 frames of 8x8 against an 8-dimensional static code plus rank-2 codes per frame
    assert_eq!(row[4], "768");
    assert_eq!(row[5], (8 + 2 * 12).to_string());
    let name = row[0];
    let latents = fitted.join("latents").join(format!("{name}.lrml"));
    assert!(latents.is_file());
    assert!(fitted.join("loss").join(format!("{name}.csv")).is_file());
    let recon: Video = read_video(&fitted.join("recon").join(format!("{name}.lrmv"))).unwrap();
    assert_eq!(recon.shape(), (12, 8, 8));

    let analysis = dir.path().join("analysis");
    let stdout = ok(&lrm(&[
        "analyze", "--model", s(&model), "--latents", s(&latents), "--out", s(&analysis),
        "--ed", "3", "--es", "6", "--deterministic",
    ]));
    assert!(stdout.contains("ED (valleys)"));
    assert!(stdout.contains("MAE"));
    let signal = fs::read_to_string(analysis.join("signal.csv")).unwrap();
    assert!(signal.starts_with("frame_index,s_raw,s_detrended,s_filt,is_ed,is_es"));
    assert_eq!(signal.lines().count(), 13);
    for f in ["signal.svg", "cosine.csv", "cosine.svg", "trajectory.svg"] {
        assert!(analysis.join(f).is_file(), "{f}");
    }
    assert_eq!(fs::read_to_string(analysis.join("cosine.csv")).unwrap().lines().count(), 12);

    let walked = dir.path().join("walk");
    ok(&lrm(&[
        "walk", "--model", s(&model), "--latents", s(&latents), "--out", s(&walked),
        "--samples", "5", "--height", "8", "--width", "8", "--deterministic",
    ]));
    assert_eq!(read_video(&walked.join("walk.lrmv")).unwrap().shape(), (5, 8, 8));
    let walk_csv = fs::read_to_string(walked.join("walk.csv")).unwrap();
    assert_eq!(walk_csv.lines().count(), 6);
    assert!(walked.join("walk.svg").is_file());

    let evaluated = dir.path().join("eval");
    ok(&lrm(&[
        "eval", "--reference", s(&data.join("held_out")), "--reconstruction", s(&fitted.join("recon")),
        "--out", s(&evaluated),
    ]));
    let eval_csv = fs::read_to_string(evaluated.join("eval.csv")).unwrap();
    assert_eq!(eval_csv.lines().count(), 3, "{eval_csv}");

    // analysing the video directly fits it and keeps the codes
    let direct = dir.path().join("direct");
    let video = data.join("held_out").join(format!("{name}.lrmv"));
    ok(&lrm(&[
        "analyze", "--model", s(&model), "--video", s(&video), "--out", s(&direct),
        "--orient", "intensity", "--deterministic",
    ]));
    assert!(direct.join("latents.lrml").is_file());

    // nothing is written outside the requested output directories
    let mut top: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    top.sort();
    assert_eq!(top, ["analysis", "data", "direct", "eval", "fit", "run", "walk"]);
    assert!(files_under(dir.path()).iter().all(|p| !p.file_name().unwrap().to_string_lossy().contains(".tmp")));
}

#[test]
fn intensity_orientation_needs_the_video() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path());
    let run = dir.path().join("run");
    train(&data, &run, None);
    let fitted = dir.path().join("fit");
    ok(&lrm(&["fit", "--model", s(&run.join("model.lrmc")), "--video", s(&data.join("held_out")), "--out", s(&fitted)]));
    let latents = files_under(&fitted.join("latents")).remove(0);
    let out = lrm(&[
        "analyze", "--model", s(&run.join("model.lrmc")), "--latents", s(&latents),
        "--out", s(&dir.path().join("a")), "--orient", "intensity",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = lrm(&[
        "analyze", "--model", s(&run.join("model.lrmc")), "--latents", s(&latents),
        "--out", s(&dir.path().join("a")), "--orient", "sideways",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn orientations_swap_phase_labels() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path());
    let run = dir.path().join("run");
    train(&data, &run, None);
    let model = run.join("model.lrmc");
    let video = files_under(&data.join("held_out")).remove(0);
    let a = dir.path().join("a");
    ok(&lrm(&["analyze", "--model", s(&model), "--video", s(&video), "--out", s(&a), "--deterministic", "--prominence", "0"]));
    let latents = a.join("latents.lrml");
    let base = fs::read_to_string(a.join("signal.csv")).unwrap();
    let b = dir.path().join("b");
    ok(&lrm(&[
        "analyze", "--model", s(&model), "--video", s(&video), "--latents", s(&latents),
        "--out", s(&b), "--orient", "intensity", "--deterministic", "--prominence", "0",
    ]));
    let other = fs::read_to_string(b.join("signal.csv")).unwrap();
    let filt: Vec<f64> = column(&base, "s_filt").iter().map(|v| v.parse().unwrap()).collect();
    let filt2: Vec<f64> = column(&other, "s_filt").iter().map(|v| v.parse().unwrap()).collect();
    let flipped = filt.iter().zip(&filt2).all(|(x, y)| x == &-y);
    let same = filt == filt2;
    assert!(flipped || same);
    if flipped {
        assert_eq!(column(&base, "is_ed"), column(&other, "is_es"));
        assert_eq!(column(&base, "is_es"), column(&other, "is_ed"));
    } else {
        assert_eq!(column(&base, "is_ed"), column(&other, "is_ed"));
    }
}

#[test]
fn outputs_are_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path());
    let (one, two) = (dir.path().join("one"), dir.path().join("two"));
    train(&data, &one, Some("1"));
    train(&data, &two, Some("2"));
    for f in ["model.lrmc", "loss.csv", "config.txt"] {
        assert_eq!(fs::read(one.join(f)).unwrap(), fs::read(two.join(f)).unwrap(), "{f}");
    }
    let model = one.join("model.lrmc");
    let held = data.join("held_out");
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "2"].iter().enumerate() {
        let fit = dir.path().join(format!("fit{i}"));
        ok(&lrm_env(&["fit", "--model", s(&model), "--video", s(&held), "--out", s(&fit)], Some(threads)));
        let latents = files_under(&fit.join("latents")).remove(0);
        let an = dir.path().join(format!("an{i}"));
        ok(&lrm_env(
            &["analyze", "--model", s(&model), "--latents", s(&latents), "--out", s(&an), "--deterministic"],
            Some(threads),
        ));
        outputs.push((fit, an));
    }
    let (fa, aa) = &outputs[0];
    let (fb, ab) = &outputs[1];
    let left = files_under(fa);
    let right = files_under(fb);
    assert_eq!(left.len(), right.len());
    for (x, y) in left.iter().zip(&right) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
    }
    for f in ["signal.csv", "signal.svg", "cosine.csv", "cosine.svg", "trajectory.svg"] {
        assert_eq!(fs::read(aa.join(f)).unwrap(), fs::read(ab.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn ranksweep_matches_the_library_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path());
    let out = dir.path().join("sweep");
    let (train_dir, held_dir) = (data.join("train"), data.join("held_out"));
    let mut args = vec![
        "ranksweep", "--train", s(&train_dir), "--eval", s(&held_dir),
        "--out", s(&out), "--ranks", "1,2", "--iters", "3", "--deterministic",
    ];
    args.extend_from_slice(TINY);
    ok(&lrm(&args));
    let csv = fs::read_to_string(out.join("ranksweep.csv")).unwrap();
    assert!(csv.starts_with("k,psnr,ssim3d,compression_ratio,error"));
    assert!(out.join("ranksweep.svg").is_file());

    let mut cfg = TrainConfig::default();
    for pair in TINY.chunks(2) {
        let (k, v) = pair[1].split_once('=').unwrap();
        cfg.set(k, v).unwrap();
    }
    cfg.outer_iters = 3;
    cfg.rank = 2;
    let load = |sub: &str| -> Vec<Video> { files_under(&data.join(sub)).iter().map(|p| read_video(p).unwrap()).collect() };
    let score = train_fit_eval(&load("train"), &load("held_out"), &cfg).unwrap();
    let row: Vec<&str> = csv.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(row[0], "2");
    assert_eq!(row[1].parse::<f64>().unwrap(), score.psnr);
    assert_eq!(row[2].parse::<f64>().unwrap(), score.ssim3d);
    assert_eq!(row[3].parse::<f64>().unwrap(), score.compression_ratio);

    let bad = lrm(&[
        "ranksweep", "--train", s(&data.join("train")), "--eval", s(&data.join("held_out")),
        "--out", s(&dir.path().join("bad")), "--ranks", "99", "--set", "modulation_dim=8",
    ]);
    assert_eq!(bad.status.code(), Some(2));
}
