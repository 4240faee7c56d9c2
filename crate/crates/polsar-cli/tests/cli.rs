//! Command-level behavior: exit codes, degenerate inputs, and the
//! generator's noiseless-limit properties.
#![allow(clippy::needless_range_loop)]

mod common;

use std::time::Instant;

use common::{assert_ok, polsar, scratch};

use polsar_cli::commands::synth::{generate, read_manifest, Mechanism, Region, SceneManifest};
use polsar_core::{coherency, pauli_vector, write_slc, ScatteringField};

#[test]
fn missing_input_exits_with_io_code() {
    let dir = scratch("exit-io");
    let result = polsar(&[
        "--out",
        dir.to_str().unwrap(),
        "decompose",
        "--input",
        "/nonexistent/scene.slc",
    ]);
    assert_eq!(result.status, 2, "stderr: {}", result.stderr);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn invalid_window_exits_with_validation_code() {
    let dir = scratch("exit-validation");
    let out = dir.to_str().unwrap();
    assert_ok(
        &polsar(&["--out", out, "--seed", "1", "synth", "--width", "16", "--height", "16"]),
        "synth",
    );
    let scene = dir.join("scene.slc");
    let result = polsar(&[
        "--out",
        out,
        "decompose",
        "--input",
        scene.to_str().unwrap(),
        "--window",
        "2",
    ]);
    assert_eq!(result.status, 3, "stderr: {}", result.stderr);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn numeric_class_maps_to_exit_four() {
    assert_eq!(polsar_core::ErrorClass::Numeric.exit_code(), 4);
    assert_eq!(polsar_core::ErrorClass::Io.exit_code(), 2);
    assert_eq!(polsar_core::ErrorClass::Validation.exit_code(), 3);
}

#[test]
fn zero_scene_decomposes_to_valid_zero_outputs() {
    let dir = scratch("zero-scene");
    let out = dir.to_str().unwrap();
    let scene = dir.join("zeros.slc");
    write_slc(&scene, &ScatteringField::zeros(16, 16)).unwrap();
    assert_ok(
        &polsar(&["--out", out, "decompose", "--input", scene.to_str().unwrap()]),
        "decompose zeros",
    );
    let pauli = polsar_core::pngio::read_rgb_png(&dir.join("pauli.png")).unwrap();
    assert!(pauli.data.iter().all(|&v| v == 0));
    let (manifest, data) = polsar_core::payload::read_payload(&dir.join("eigen.json")).unwrap();
    let valid_channel = manifest.channels.iter().position(|c| c == "valid").unwrap();
    let n = manifest.width * manifest.height;
    assert!(data[valid_channel * n..(valid_channel + 1) * n]
        .iter()
        .all(|&v| v == 0.0));

    // clustering an all-invalid scene is a validation failure
    let result = polsar(&["--out", out, "mvd"]);
    assert_eq!(result.status, 3, "stderr: {}", result.stderr);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn synthetic_scene_decomposes_quickly() {
    let dir = scratch("timed-decompose");
    let out = dir.to_str().unwrap();
    assert_ok(
        &polsar(&["--out", out, "--seed", "5", "synth"]),
        "synth 128",
    );
    let started = Instant::now();
    assert_ok(
        &polsar(&[
            "--out",
            out,
            "decompose",
            "--input",
            dir.join("scene.slc").to_str().unwrap(),
        ]),
        "decompose 128",
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "decompose took {elapsed:?}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn k_one_degenerate_run_completes() {
    let dir = scratch("k-one");
    let out = dir.to_str().unwrap();
    assert_ok(
        &polsar(&["--out", out, "--seed", "6", "synth", "--width", "48", "--height", "48"]),
        "synth",
    );
    assert_ok(
        &polsar(&[
            "--out",
            out,
            "decompose",
            "--input",
            dir.join("scene.slc").to_str().unwrap(),
        ]),
        "decompose",
    );
    assert_ok(&polsar(&["--out", out, "mvd", "--k", "1"]), "mvd k=1");
    let model_text = std::fs::read_to_string(dir.join("cluster_model.json")).unwrap();
    let model: serde_json::Value = serde_json::from_str(&model_text).unwrap();
    assert_eq!(model["k"], 1);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn three_region_scene_yields_thirteen_class_mvd_with_all_hues() {
    let dir = scratch("three-region");
    let out = dir.to_str().unwrap();
    assert_ok(
        &polsar(&["--out", out, "--seed", "7", "synth", "--width", "96", "--height", "96"]),
        "synth",
    );
    assert_ok(
        &polsar(&[
            "--out",
            out,
            "decompose",
            "--input",
            dir.join("scene.slc").to_str().unwrap(),
        ]),
        "decompose",
    );
    assert_ok(&polsar(&["--out", out, "mvd"]), "mvd");
    let mvd = mvd_codec::read_mvd1(&dir.join("mvd.mvd")).unwrap();
    assert_eq!(mvd.class_count(), 13);
    let legend_text = std::fs::read_to_string(dir.join("legend.json")).unwrap();
    let legend: Vec<serde_json::Value> = serde_json::from_str(&legend_text).unwrap();
    for primary in ["odd", "double", "volume"] {
        let hit = legend.iter().any(|entry| {
            entry["primary"] == primary
                && mvd
                    .class_index
                    .iter()
                    .any(|&c| c as u64 == entry["index"].as_u64().unwrap())
        });
        assert!(hit, "no populated {primary} class");
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn fuse_demo_emits_score_maps_quickly_and_needs_seed() {
    let dir = scratch("fuse-timing");
    let out = dir.to_str().unwrap();
    assert_ok(
        &polsar(&["--out", out, "--seed", "8", "synth", "--width", "64", "--height", "64"]),
        "synth",
    );
    assert_ok(
        &polsar(&[
            "--out",
            out,
            "decompose",
            "--input",
            dir.join("scene.slc").to_str().unwrap(),
        ]),
        "decompose",
    );
    assert_ok(&polsar(&["--out", out, "mvd"]), "mvd");

    // no seed -> validation failure
    let no_seed = polsar(&[
        "--out",
        out,
        "fuse-demo",
        "--pseudo",
        dir.join("pauli.png").to_str().unwrap(),
        "--mvd",
        dir.join("mvd.mvd").to_str().unwrap(),
    ]);
    assert_eq!(no_seed.status, 3);

    let started = Instant::now();
    assert_ok(
        &polsar(&[
            "--out",
            out,
            "--seed",
            "9",
            "fuse-demo",
            "--pseudo",
            dir.join("pauli.png").to_str().unwrap(),
            "--mvd",
            dir.join("mvd.mvd").to_str().unwrap(),
        ]),
        "fuse-demo",
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 2.0, "fuse-demo took {elapsed:?}");
    // one score map per sparse prompt (default N = 6)
    for i in 0..6 {
        assert!(dir.join(format!("score_{i:02}.png")).exists());
        assert!(dir.join(format!("vsd_{i:02}.png")).exists());
    }
    assert!(dir.join("vd.png").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn evaluate_identical_dirs_scores_ones_and_empty_dir_fails() {
    let dir = scratch("evaluate");
    let out = dir.to_str().unwrap();
    assert_ok(
        &polsar(&["--out", out, "--seed", "10", "synth", "--width", "32", "--height", "32"]),
        "synth",
    );
    let eval_out = dir.join("eval");
    assert_ok(
        &polsar(&[
            "--out",
            eval_out.to_str().unwrap(),
            "evaluate",
            "--pred",
            out,
            "--gt",
            out,
        ]),
        "evaluate self",
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(eval_out.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["mean_iou"], 1.0);
    assert_eq!(report["mean_accuracy"], 1.0);
    assert_eq!(report["mean_f1"], 1.0);

    let empty = dir.join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let result = polsar(&[
        "--out",
        eval_out.to_str().unwrap(),
        "evaluate",
        "--pred",
        empty.to_str().unwrap(),
        "--gt",
        empty.to_str().unwrap(),
    ]);
    assert_eq!(result.status, 3);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn dataset_misaligned_pair_rejected() {
    let dir = scratch("misaligned");
    let out = dir.to_str().unwrap();
    assert_ok(
        &polsar(&["--out", out, "--seed", "11", "synth", "--width", "64", "--height", "64"]),
        "synth 64",
    );
    assert_ok(
        &polsar(&[
            "--out",
            out,
            "decompose",
            "--input",
            dir.join("scene.slc").to_str().unwrap(),
        ]),
        "decompose",
    );
    // truth raster is 64x64 but pauli from a different size scene:
    let dir2 = scratch("misaligned-2");
    let out2 = dir2.to_str().unwrap();
    assert_ok(
        &polsar(&["--out", out2, "--seed", "12", "synth", "--width", "96", "--height", "96"]),
        "synth 96",
    );
    assert_ok(
        &polsar(&[
            "--out",
            out2,
            "decompose",
            "--input",
            dir2.join("scene.slc").to_str().unwrap(),
        ]),
        "decompose 96",
    );
    let result = polsar(&[
        "--out",
        out,
        "dataset",
        "--pseudo",
        dir2.join("pauli.png").to_str().unwrap(),
        "--mvd",
        dir.join("truth.mvd").to_str().unwrap(),
        "--tile-size",
        "32",
    ]);
    assert_eq!(result.status, 3, "stderr: {}", result.stderr);
    std::fs::remove_dir_all(&dir).ok();
    std::fs::remove_dir_all(&dir2).ok();
}

#[test]
fn threads_env_honored_only_without_flag() {
    let dir = scratch("threads-env");
    let out = dir.to_str().unwrap();
    // malformed env value fails when the flag is absent...
    let bad_env = std::process::Command::new(env!("CARGO_BIN_EXE_polsar"))
        .args(["--out", out, "--seed", "3", "synth", "--width", "16", "--height", "16"])
        .env("POLSAR_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad_env.status.code(), Some(3));
    // ...and is ignored when --threads is given
    let with_flag = std::process::Command::new(env!("CARGO_BIN_EXE_polsar"))
        .args([
            "--out", out, "--seed", "3", "--threads", "1", "synth", "--width", "16", "--height",
            "16",
        ])
        .env("POLSAR_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(
        with_flag.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&with_flag.stderr)
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn dataset_purity_filter_can_empty_the_manifest_with_warning() {
    let dir = scratch("purity-empty");
    let out = dir.to_str().unwrap();
    // uniform class-0 raster: every tile is 100% class 0
    let mvd = mvd_codec::MvdRaster {
        width: 64,
        height: 64,
        class_index: vec![0; 64 * 64],
        palette: vec![[0, 0, 255], [255, 0, 0]],
        legend: vec![
            mvd_codec::LegendEntry {
                index: 0,
                name: "water".into(),
                primary: "odd".into(),
                tier: None,
                rgb: [0, 0, 255],
            },
            mvd_codec::LegendEntry {
                index: 1,
                name: "land".into(),
                primary: "volume".into(),
                tier: None,
                rgb: [255, 0, 0],
            },
        ],
    };
    mvd_codec::write_mvd1(&dir.join("flat.mvd"), &mvd).unwrap();
    let rgb = polsar_core::render::Rgb8Raster::new(64, 64);
    polsar_core::pngio::write_rgb_png(&dir.join("flat.png"), &rgb).unwrap();
    let result = polsar(&[
        "--out",
        out,
        "dataset",
        "--pseudo",
        dir.join("flat.png").to_str().unwrap(),
        "--mvd",
        dir.join("flat.mvd").to_str().unwrap(),
        "--tile-size",
        "32",
        "--ratios",
        "1,1",
        "--purity-class",
        "0",
        "--purity",
        "1.0",
    ]);
    assert_eq!(result.status, 0, "stderr: {}", result.stderr);
    assert!(
        result.stderr.contains("removed every tile"),
        "expected warning, got: {}",
        result.stderr
    );
    let manifest = dataset_forge::read_manifest(&dir.join("manifest.json")).unwrap();
    assert!(manifest.tiles.is_empty());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn evaluate_hand_built_two_class_case() {
    // prediction/truth pair engineered to the confusion matrix
    // [[3, 1], [1, 3]]: IoU 0.6 each, mAcc = mF1 = 0.75
    let dir = scratch("evaluate-two-class");
    let pred_dir = dir.join("pred");
    let gt_dir = dir.join("gt");
    std::fs::create_dir_all(&pred_dir).unwrap();
    std::fs::create_dir_all(&gt_dir).unwrap();
    let raster = |classes: Vec<u8>| mvd_codec::MvdRaster {
        width: 4,
        height: 2,
        class_index: classes,
        palette: vec![[0, 0, 0], [255, 255, 255]],
        legend: (0..2)
            .map(|i| mvd_codec::LegendEntry {
                index: i,
                name: format!("c{i}"),
                primary: String::new(),
                tier: None,
                rgb: [0, 0, 0],
            })
            .collect(),
    };
    let gt = raster(vec![0, 0, 0, 0, 1, 1, 1, 1]);
    let pred = raster(vec![0, 0, 0, 1, 0, 1, 1, 1]);
    mvd_codec::write_mvd1(&gt_dir.join("tile.mvd"), &gt).unwrap();
    mvd_codec::write_mvd1(&pred_dir.join("tile.mvd"), &pred).unwrap();
    let eval_out = dir.join("eval");
    assert_ok(
        &polsar(&[
            "--out",
            eval_out.to_str().unwrap(),
            "evaluate",
            "--pred",
            pred_dir.to_str().unwrap(),
            "--gt",
            gt_dir.to_str().unwrap(),
        ]),
        "evaluate two-class",
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(eval_out.join("report.json")).unwrap())
            .unwrap();
    assert!((report["mean_iou"].as_f64().unwrap() - 0.6).abs() < 1e-12);
    assert!((report["mean_accuracy"].as_f64().unwrap() - 0.75).abs() < 1e-12);
    assert!((report["mean_f1"].as_f64().unwrap() - 0.75).abs() < 1e-12);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn synth_geometry_roundtrip_and_noiseless_alpha_limits() {
    // manifest round-trip through the CLI
    let dir = scratch("synth-roundtrip");
    let out = dir.to_str().unwrap();
    assert_ok(
        &polsar(&["--out", out, "--seed", "13", "synth", "--width", "60", "--height", "40"]),
        "synth",
    );
    let manifest = read_manifest(&dir.join("synth.json")).unwrap();
    assert_eq!(manifest.width, 60);
    assert_eq!(manifest.height, 40);
    assert_eq!(manifest.regions.len(), 3);
    assert_eq!(manifest.mechanism_at(0, 0), Mechanism::Odd);
    assert_eq!(manifest.mechanism_at(25, 0), Mechanism::Double);
    assert_eq!(manifest.mechanism_at(59, 39), Mechanism::Volume);
    std::fs::remove_dir_all(&dir).ok();

    // noiseless limit: per-pixel alpha exactly 0 / 90 degrees on
    // odd / double regions after a single look
    let manifest = SceneManifest {
        version: 1,
        width: 24,
        height: 8,
        seed: 99,
        snr_db: f64::INFINITY,
        regions: vec![
            Region {
                mechanism: Mechanism::Odd,
                x0: 0,
                y0: 0,
                x1: 12,
                y1: 8,
            },
            Region {
                mechanism: Mechanism::Double,
                x0: 12,
                y0: 0,
                x1: 24,
                y1: 8,
            },
        ],
    };
    let (field, truth) = generate(&manifest).unwrap();
    let coh = coherency(&pauli_vector(&field), 1).unwrap();
    let eig = eigen_decomp::analyze(&coh).unwrap();
    for i in 0..coh.len() {
        let expected = if truth[i] == 0 { 0.0 } else { 90.0 };
        assert!(
            (eig.alpha[i] - expected).abs() < 1e-9,
            "pixel {i}: alpha {} vs {expected}",
            eig.alpha[i]
        );
    }
}
