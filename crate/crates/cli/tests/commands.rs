use std::path::{Path, PathBuf};
use std::process::Command;

use clap::Parser;
use hran::data::ImageRGB8;
use hran::model::Placement;
use hran::nn::AttentionKind;
use hran::train::Checkpoint;
use hran::{HranModel, ModelConfig};
use hran_cli::commands::gradcheck::{shrink, INSTANCE_SEED};
use hran_cli::{exit, exit_code, run, Cli};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/desk")
}

/// Runs a command in-process; returns the exit code and stdout.
fn hran(args: &[&str]) -> (i32, String) {
    let cli = Cli::try_parse_from(std::iter::once("hran").chain(args.iter().copied())).expect("valid arguments");
    let mut out = Vec::new();
    let code = match run(cli, &mut out) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    };
    (code, String::from_utf8(out).unwrap())
}

fn binary(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hran")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_config() -> ModelConfig {
    ModelConfig {
        num_rafgs: 1,
        blocks_per_rafg: 2,
        channels: 8,
        upsample_channels: 4,
        scale: 2,
        ..ModelConfig::default()
    }
}

/// A freshly initialised x2 checkpoint. Attention weights start at zero, so
/// every output pixel depends only on its local neighbourhood.
fn fresh_checkpoint(dir: &Path) -> PathBuf {
    let model = HranModel::new(&small_config(), 3).unwrap();
    let p = dir.join("fresh.hrn");
    Checkpoint::from_model(&model).save(&p).unwrap();
    p
}

fn textured(w: usize, h: usize) -> ImageRGB8 {
    ImageRGB8::from_fn(w, h, |x, y| {
        [
            ((x * 37 + y * 11) % 256) as u8,
            ((x * y + 3 * y) % 251) as u8,
            (128.0 + 100.0 * ((x as f64) * 0.3).sin() * ((y as f64) * 0.2).cos()) as u8,
        ]
    })
    .unwrap()
}

const TRAIN_FLAGS: &[&str] = &[
    "--num-rafgs", "1", "--blocks-per-rafg", "1", "--channels", "4", "--scale", "2", "--upsample-channels", "4",
    "--batch-size", "2", "--patch-size", "8", "--set", "log_every=1", "--set", "checkpoint_every=5",
];

fn train(out: &Path, extra: &[&str]) -> (i32, String) {
    let data = fixtures().join("train");
    let mut args = vec!["train", "--data", s(&data), "--out", s(out)];
    args.extend_from_slice(TRAIN_FLAGS);
    args.extend_from_slice(extra);
    hran(&args)
}

#[test]
fn sr_doubles_a_64x48_input() {
    let dir = tempfile::tempdir().unwrap();
    let ck = fresh_checkpoint(dir.path());
    let input = dir.path().join("in.png");
    textured(64, 48).save(&input).unwrap();
    let out = dir.path().join("out.png");
    let (code, text) = hran(&["sr", "--ckpt", s(&ck), "--in", s(&input), "--out", s(&out)]);
    assert_eq!(code, exit::OK);
    assert!(text.contains("128x96"), "{text}");
    let sr = ImageRGB8::load(&out).unwrap();
    assert_eq!((sr.width(), sr.height()), (128, 96));
}

#[test]
fn tiled_and_untiled_outputs_agree_within_one_level() {
    let dir = tempfile::tempdir().unwrap();
    let ck = fresh_checkpoint(dir.path());
    let input = dir.path().join("in.png");
    textured(70, 45).save(&input).unwrap();
    let whole = dir.path().join("whole.png");
    let tiled = dir.path().join("tiled.png");
    assert_eq!(hran(&["sr", "--ckpt", s(&ck), "--in", s(&input), "--out", s(&whole)]).0, 0);
    assert_eq!(hran(&["sr", "--ckpt", s(&ck), "--in", s(&input), "--out", s(&tiled), "--tile", "16"]).0, 0);
    let (a, b) = (ImageRGB8::load(&whole).unwrap(), ImageRGB8::load(&tiled).unwrap());
    let worst = a.pixels().iter().zip(b.pixels()).map(|(x, y)| x.abs_diff(*y)).max().unwrap();
    assert!(worst <= 1, "max difference {worst}");
}

#[test]
fn sr_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let ck = fresh_checkpoint(dir.path());
    let input = dir.path().join("in.png");
    textured(33, 21).save(&input).unwrap();
    let (a, b) = (dir.path().join("a.png"), dir.path().join("b.png"));
    hran(&["sr", "--ckpt", s(&ck), "--in", s(&input), "--out", s(&a)]);
    hran(&["sr", "--ckpt", s(&ck), "--in", s(&input), "--out", s(&b)]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn sr_rejects_a_mismatched_scale() {
    let dir = tempfile::tempdir().unwrap();
    let ck = fresh_checkpoint(dir.path());
    let input = dir.path().join("in.png");
    textured(8, 8).save(&input).unwrap();
    let out = dir.path().join("o.png");
    let (code, _) = hran(&["sr", "--ckpt", s(&ck), "--in", s(&input), "--out", s(&out), "--scale", "3"]);
    assert_eq!(code, exit::CONFIG);
}

#[test]
fn identity_baseline_prints_inf() {
    let hr = fixtures().join("train");
    let (code, text) = hran(&["eval", "--hr", s(&hr), "--baseline", "identity", "--scale", "2"]);
    assert_eq!(code, 0);
    let mean = text.lines().find(|l| l.starts_with("MEAN")).unwrap();
    assert!(mean.contains("inf"), "{text}");
    assert!(text.contains("5 image(s) with infinite PSNR"), "{text}");
}

#[test]
fn eval_lines_are_sorted_and_finite_for_bicubic() {
    let hr = fixtures().join("train");
    let (code, text) = hran(&["eval", "--hr", s(&hr), "--baseline", "bicubic", "--scale", "2"]);
    assert_eq!(code, 0);
    let names: Vec<&str> = text.lines().skip(1).map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(
        names,
        ["astronaut.png", "chelsea.png", "coffee.png", "immunohistochemistry.png", "rocket.png", "MEAN"]
    );
    for l in text.lines().skip(1) {
        let v: f64 = l.split_whitespace().nth(1).unwrap().parse().unwrap();
        assert!(v.is_finite() && v > 20.0, "{l}");
    }
    let (_, again) = hran(&["eval", "--hr", s(&hr), "--baseline", "bicubic", "--scale", "2"]);
    assert_eq!(text, again);
}

#[test]
fn eval_of_a_checkpoint_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let ck = fresh_checkpoint(dir.path());
    let hr = fixtures().join("train");
    let (code, text) = hran(&["eval", "--ckpt", s(&ck), "--hr", s(&hr), "--json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["images"].as_array().unwrap().len(), 5);
    assert!(v["mean"]["psnr_y"].as_f64().unwrap().is_finite());
}

#[test]
fn eval_of_an_empty_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = hran(&["eval", "--hr", s(dir.path()), "--baseline", "bicubic", "--scale", "2"]);
    assert_eq!(code, exit::DATA);
}

fn total_params(args: &[&str]) -> usize {
    let mut full = vec!["params"];
    full.extend_from_slice(args);
    let (code, text) = hran(&full);
    assert_eq!(code, 0);
    let total = text.lines().find(|l| l.starts_with("total")).unwrap();
    total.split_whitespace().last().unwrap().parse().unwrap()
}

#[test]
fn params_orders_parallel_above_in_place() {
    let parallel = total_params(&[]);
    let in_place = total_params(&["--attention-placement", "in_place"]);
    assert!(parallel > in_place, "{parallel} vs {in_place}");
    assert!((750_000..=1_050_000).contains(&parallel), "{parallel}");
}

#[test]
fn gradcheck_default_passes() {
    let (code, text) = hran(&["gradcheck"]);
    assert_eq!(code, exit::OK);
    assert_eq!(text.lines().last().unwrap(), "PASS max_rel_err<1e-4");
}

#[test]
fn every_shrunk_variant_gradchecks_at_the_fixed_seed() {
    let kinds = [None, Some(AttentionKind::Lca), Some(AttentionKind::Ca), Some(AttentionKind::Eca), Some(AttentionKind::Pa)];
    for attention in kinds {
        for placement in [Placement::Parallel, Placement::InPlace] {
            if attention.is_none() && placement == Placement::InPlace {
                continue;
            }
            for banks in [true, false] {
                for scale in [2, 3, 4] {
                    for blocks_per_rafg in [1, 3] {
                        let cfg = ModelConfig { attention, placement, banks, scale, blocks_per_rafg, ..ModelConfig::default() };
                        let r = hran::gradsuite::check_model(&shrink(&cfg), 4, 4, INSTANCE_SEED).unwrap();
                        assert!(r.pass, "{cfg:?}: {r:?}");
                    }
                }
            }
        }
    }
}

#[test]
fn degrade_bi_x2_halves_a_100px_image() {
    let dir = tempfile::tempdir().unwrap();
    let hr = dir.path().join("hr");
    std::fs::create_dir(&hr).unwrap();
    textured(100, 100).save(&hr.join("a.png")).unwrap();
    let out = dir.path().join("lr");
    let (code, _) = hran(&["degrade", "--hr", s(&hr), "--deg", "BI", "--scale", "2", "--out", s(&out)]);
    assert_eq!(code, 0);
    let lr = ImageRGB8::load(&out.join("a.png")).unwrap();
    assert_eq!((lr.width(), lr.height()), (50, 50));
}

#[test]
fn featmaps_writes_one_png_per_block() {
    let dir = tempfile::tempdir().unwrap();
    let ck = fresh_checkpoint(dir.path());
    let input = dir.path().join("in.png");
    textured(20, 16).save(&input).unwrap();
    let out = dir.path().join("maps");
    let (code, text) = hran(&["featmaps", "--ckpt", s(&ck), "--in", s(&input), "--out", s(&out)]);
    assert_eq!(code, 0);
    for l in text.lines() {
        let img = ImageRGB8::load(Path::new(l)).unwrap();
        assert_eq!((img.width(), img.height()), (20, 16));
    }
    assert!(text.contains("rafg1_rb2"), "{text}");
}

#[test]
fn same_seed_gives_identical_logs_and_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(train(&a, &["--seed", "7", "--iters", "10"]).0, 0);
    assert_eq!(train(&b, &["--seed", "7", "--iters", "10"]).0, 0);
    let log = std::fs::read_to_string(a.join("train.log")).unwrap();
    assert_eq!(log.lines().count(), 10);
    assert_eq!(log, std::fs::read_to_string(b.join("train.log")).unwrap());
    assert_eq!(std::fs::read(a.join("final.hrn")).unwrap(), std::fs::read(b.join("final.hrn")).unwrap());
    assert!(a.join("iter_00000005.hrn").exists());
}

#[test]
fn frozen_config_retrains_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.txt");
    std::fs::write(&file, "channels = 16\nseed = 3\ntotal_iters = 6\n").unwrap();
    let first = dir.path().join("first");
    let data = fixtures().join("train");
    let (code, _) = hran(&[
        "train", "--config", s(&file), "--data", s(&data), "--out", s(&first), "--channels", "6", "--num-rafgs", "1",
        "--blocks-per-rafg", "1", "--scale", "2", "--batch-size", "2", "--patch-size", "8",
    ]);
    assert_eq!(code, 0);
    let frozen = std::fs::read_to_string(first.join("config.txt")).unwrap();
    assert!(frozen.lines().any(|l| l.trim() == "channels = 6"), "{frozen}");

    let second = dir.path().join("second");
    let frozen_path = first.join("config.txt");
    let (code, _) = hran(&["train", "--config", s(&frozen_path), "--data", s(&data), "--out", s(&second)]);
    assert_eq!(code, 0);
    for f in ["train.log", "final.hrn", "config.txt"] {
        assert_eq!(std::fs::read(first.join(f)).unwrap(), std::fs::read(second.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn resumed_training_matches_an_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let (whole, part, rest) = (dir.path().join("whole"), dir.path().join("part"), dir.path().join("rest"));
    assert_eq!(train(&whole, &["--seed", "4", "--iters", "10"]).0, 0);
    // Stop after five iterations of the same ten-iteration run.
    assert_eq!(train(&part, &["--seed", "4", "--iters", "10", "--set", "checkpoint_every=5"]).0, 0);
    let ck = part.join("iter_00000005.hrn");
    assert_eq!(train(&rest, &["--seed", "4", "--iters", "10", "--resume", s(&ck)]).0, 0);
    let a = Checkpoint::load(&whole.join("final.hrn")).unwrap();
    let b = Checkpoint::load(&rest.join("final.hrn")).unwrap();
    assert_eq!(a.iteration, 10);
    assert_eq!(a.params, b.params);
    let tail: Vec<String> = std::fs::read_to_string(whole.join("train.log")).unwrap().lines().skip(5).map(String::from).collect();
    let resumed: Vec<String> = std::fs::read_to_string(rest.join("train.log")).unwrap().lines().map(String::from).collect();
    assert_eq!(tail, resumed);
}

#[test]
fn exploding_learning_rate_exits_with_the_nan_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let (code, _) = train(&out, &["--seed", "1", "--iters", "50", "--lr", "1e30"]);
    assert_eq!(code, exit::NAN);
    assert!(out.join("final.hrn.nan").exists());
}

#[test]
fn missing_data_exits_with_the_data_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let (code, err) = binary(&["train", "--out", s(&out)]);
    assert_eq!(code, exit::DATA, "{err}");
    assert!(err.contains("--data"), "{err}");

    let nowhere = dir.path().join("no_such_dir");
    let (code, err) = binary(&["train", "--data", s(&nowhere), "--out", s(&out), "--seed", "1", "--iters", "1"]);
    assert_eq!(code, exit::DATA, "{err}");
    assert!(err.contains("no_such_dir"), "{err}");
}

#[test]
fn config_errors_name_the_key() {
    let (code, err) = binary(&["params", "--set", "chanels=3"]);
    assert_eq!(code, exit::CONFIG);
    assert!(err.contains("chanels"), "{err}");

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.txt");
    std::fs::write(&file, "scale = 5\n").unwrap();
    let (code, err) = binary(&["params", "--config", s(&file)]);
    assert_eq!(code, exit::CONFIG);
    assert!(err.contains("scale"), "{err}");
}

#[test]
fn usage_errors_exit_with_the_config_code_and_help_with_zero() {
    assert_eq!(binary(&["frobnicate"]).0, exit::CONFIG);
    assert_eq!(binary(&["sr"]).0, exit::CONFIG);
    assert_eq!(binary(&["--help"]).0, exit::OK);
}

#[test]
fn a_corrupt_checkpoint_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let ck = dir.path().join("bad.hrn");
    std::fs::write(&ck, b"not a checkpoint").unwrap();
    let input = dir.path().join("in.png");
    textured(8, 8).save(&input).unwrap();
    let out = dir.path().join("o.png");
    let (code, err) = binary(&["sr", "--ckpt", s(&ck), "--in", s(&input), "--out", s(&out)]);
    assert_eq!(code, exit::DATA);
    assert!(err.contains("bad.hrn"), "{err}");
}
