use std::fs;

use lrm_functa::lowrank::{read_latents, write_latents, LatentCodes};
use lrm_functa::meta::{train, TrainConfig, TrainOutput};
use lrm_functa::numerics::SeededRng;
use lrm_functa::phantom::{generate_phantom, PhantomConfig};
use lrm_functa::video::{read_video, write_video, Video};
use lrm_functa::{Checkpoint, Error, FormatError};

fn format_kind(e: Error) -> FormatError {
    match e {
        Error::Format { kind, .. } => kind,
        other => panic!("expected a format error, got {other}"),
    }
}

fn small_video() -> Video {
    generate_phantom(&PhantomConfig {
        frames: 3,
        height: 6,
        width: 5,
        seed: 4,
        ..Default::default()
    })
    .unwrap()
    .video
}

#[test]
fn video_file_round_trip_and_damage() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/v.lrmv");
    let video = small_video();
    write_video(&path, &video).unwrap();
    let back = read_video(&path).unwrap();
    assert_eq!(back, video);
    assert!(back.data().iter().zip(video.data()).all(|(a, b)| a.to_bits() == b.to_bits()));

    let bytes = fs::read(&path).unwrap();
    fs::write(&path, &bytes[..bytes.len() - 9]).unwrap();
    assert!(matches!(format_kind(read_video(&path).unwrap_err()), FormatError::Truncated { .. }));

    let mut flipped = bytes.clone();
    flipped[40] ^= 0x20;
    fs::write(&path, &flipped).unwrap();
    assert!(matches!(format_kind(read_video(&path).unwrap_err()), FormatError::CrcMismatch { .. }));

    let mut magic = bytes.clone();
    magic[0] = b'X';
    fs::write(&path, &magic).unwrap();
    assert!(matches!(format_kind(read_video(&path).unwrap_err()), FormatError::BadMagic { .. }));

    let mut version = bytes;
    version[4] = 9;
    fs::write(&path, &version).unwrap();
    assert!(matches!(
        format_kind(read_video(&path).unwrap_err()),
        FormatError::UnsupportedVersion(9)
    ));

    let missing = read_video(&dir.path().join("absent.lrmv")).unwrap_err();
    assert!(matches!(missing, Error::Io { .. }));
}

#[test]
fn latent_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("codes.lrml");
    let mut rng = SeededRng::new(2);
    let codes = LatentCodes {
        v: rng.normal_vec(7),
        phi: rng.normal_matrix(5, 3),
    };
    write_latents(&path, &codes).unwrap();
    assert_eq!(read_latents(&path).unwrap(), codes);
    let bytes = fs::read(&path).unwrap();
    fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
    assert!(matches!(format_kind(read_latents(&path).unwrap_err()), FormatError::Truncated { .. }));
}

#[test]
fn trained_checkpoint_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.lrmc");
    let cfg = TrainConfig {
        hidden_width: 6,
        hidden_layers: 2,
        modulation_dim: 5,
        outer_iters: 3,
        batch_videos: 1,
        coord_subsample: 8,
        lambda_ortho: 0.5,
        ..TrainConfig::default()
    };
    let csv = dir.path().join("loss.csv");
    let model = train(
        &[small_video()],
        &cfg,
        &TrainOutput {
            checkpoint: Some(path.clone()),
            loss_csv: Some(csv.clone()),
        },
    )
    .unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back.to_bytes().unwrap(), model.to_bytes().unwrap());
    assert_eq!(back.to_bytes().unwrap(), fs::read(&path).unwrap());
    assert_eq!(back.backbone.params().values(), model.backbone.params().values());
    assert_eq!(back.loss_curve, model.loss_curve);
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "iteration,recon,ortho,total");
    assert_eq!(lines.len(), 4);

    let mut bytes = fs::read(&path).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 1;
    fs::write(&path, &bytes).unwrap();
    assert!(matches!(format_kind(Checkpoint::load(&path).unwrap_err()), FormatError::CrcMismatch { .. }));
    fs::write(&path, &bytes[..10]).unwrap();
    assert!(matches!(format_kind(Checkpoint::load(&path).unwrap_err()), FormatError::Truncated { .. }));
}
