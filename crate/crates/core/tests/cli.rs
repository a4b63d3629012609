//! End-to-end CLI tests: subcommands, exit codes, file formats and
//! determinism of on-disk outputs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_depthresp"))
}

fn small_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("config.json");
    let json = format!(
        r#"{{
  "scene": {{
    "tess_u": 32,
    "tess_v": 32,
    "intrinsics": {{ "width_px": 64, "height_px": 48, "focal_px": 52.0 }}
  }},
  "signal": {{ "synthetic": {{ "duration_s": 12.0 }} }},
  "roi": {{ "x0": 24, "y0": 16, "width_px": 16, "height_px": 16 }}{extra}
}}"#
    );
    std::fs::write(&path, json).unwrap();
    path
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(cmd: &mut Command) -> i32 {
    cmd.output().unwrap().status.code().unwrap_or(-1)
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    entries
        .into_iter()
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect()
}

#[test]
fn render_writes_reloadable_video_and_reports_frames() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(tmp.path(), "");
    let out_dir = tmp.path().join("video");
    let out = run_ok(bin().args([
        "render",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("360 frames"), "stdout: {stdout}");

    let (video, meta) = depthresp::io::read_video(&out_dir).unwrap();
    assert_eq!(video.frame_count(), 360);
    assert_eq!((video.width(), video.height()), (64, 48));
    assert!(meta.scene.is_some());
    assert!(meta.config.is_some());
    assert!(meta.config_hash.is_some());
}

#[test]
fn render_minimal_8x8_round_trips_bit_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("tiny.json");
    std::fs::write(
        &config,
        r#"{
  "scene": {
    "tess_u": 16,
    "tess_v": 16,
    "intrinsics": { "width_px": 8, "height_px": 8, "focal_px": 6.0 }
  },
  "signal": { "synthetic": { "duration_s": 2.0 } }
}"#,
    )
    .unwrap();
    let out_dir = tmp.path().join("tiny_video");
    run_ok(bin().args([
        "render",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]));
    let (video, _) = depthresp::io::read_video(&out_dir).unwrap();
    assert_eq!((video.width(), video.height()), (8, 8));
    // re-write and compare the raw frame bytes
    let copy = tmp.path().join("copy");
    let meta = depthresp::io::VideoMeta::for_video(&video, 3.0);
    depthresp::io::write_video(&copy, &video, &meta).unwrap();
    let orig = std::fs::read(out_dir.join("f0000.depth")).unwrap();
    let back = std::fs::read(copy.join("f0000.depth")).unwrap();
    assert_eq!(orig, back);
}

#[test]
fn render_with_missing_signal_file_exits_2_naming_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("bad.json");
    std::fs::write(
        &config,
        r#"{ "signal": { "file": { "path": "/no/such/waveform.csv", "sample_rate_hz": 250.0 } } }"#,
    )
    .unwrap();
    let mut cmd = bin();
    cmd.args([
        "render",
        "--config",
        config.to_str().unwrap(),
        "--out",
        tmp.path().join("x").to_str().unwrap(),
    ]);
    let out = cmd.output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/waveform.csv"));
}

#[test]
fn config_with_unknown_key_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("typo.json");
    std::fs::write(&config, r#"{ "scene": { "amplitud_m": 0.01 } }"#).unwrap();
    let mut cmd = bin();
    cmd.args([
        "render",
        "--config",
        config.to_str().unwrap(),
        "--out",
        tmp.path().join("x").to_str().unwrap(),
    ]);
    let out = cmd.output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("amplitud_m"));
}

fn rendered_video(tmp: &Path) -> PathBuf {
    let config = small_config(tmp, "");
    let out_dir = tmp.join("video");
    run_ok(bin().args([
        "render",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]));
    out_dir
}

#[test]
fn corrupt_is_seed_deterministic_and_identity_for_null_chains() {
    let tmp = tempfile::tempdir().unwrap();
    let video = rendered_video(tmp.path());

    // near-zero sigma rounds to the identity on f32 depths
    let chain = tmp.path().join("identity.json");
    std::fs::write(
        &chain,
        r#"[ { "type": "gaussian", "sigma_m": 1e-12, "seed": 5 } ]"#,
    )
    .unwrap();
    let out_a = tmp.path().join("a");
    run_ok(bin().args([
        "corrupt",
        "--video",
        video.to_str().unwrap(),
        "--chain",
        chain.to_str().unwrap(),
        "--out",
        out_a.to_str().unwrap(),
    ]));
    let src = std::fs::read(video.join("f0010.depth")).unwrap();
    let dst = std::fs::read(out_a.join("f0010.depth")).unwrap();
    assert_eq!(src, dst, "identity chain changed the frames");

    // a real chain with two models, fixed seed, run twice
    let chain2 = tmp.path().join("two.json");
    std::fs::write(
        &chain2,
        r#"[
  { "type": "motion", "max_shift_px": 2.0 },
  { "type": "edge_gaussian", "sigma_g_px": 2.0, "sigma_m": 0.3, "aoe_threshold": 0.05 }
]"#,
    )
    .unwrap();
    let out_b = tmp.path().join("b");
    let out_c = tmp.path().join("c");
    for (out, threads) in [(&out_b, "1"), (&out_c, "2")] {
        run_ok(bin().args([
            "corrupt",
            "--video",
            video.to_str().unwrap(),
            "--chain",
            chain2.to_str().unwrap(),
            "--seed",
            "9",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]));
    }
    assert_eq!(
        dir_bytes(&out_b),
        dir_bytes(&out_c),
        "corrupt output depends on --threads"
    );

    // the chain is recorded in order in meta.json
    let (_, meta) = depthresp::io::read_video(&out_b).unwrap();
    let recorded = meta.noise_chain.unwrap();
    assert_eq!(recorded.len(), 2);
    assert_eq!(recorded[0].model_name(), "motion");
    assert_eq!(recorded[1].model_name(), "edge_gaussian");
}

#[test]
fn corrupt_with_unknown_model_type_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let video = rendered_video(tmp.path());
    let chain = tmp.path().join("bad.json");
    std::fs::write(&chain, r#"[ { "type": "speckle", "sigma_m": 0.1 } ]"#).unwrap();
    let code = exit_code(bin().args([
        "corrupt",
        "--video",
        video.to_str().unwrap(),
        "--chain",
        chain.to_str().unwrap(),
        "--out",
        tmp.path().join("x").to_str().unwrap(),
    ]));
    assert_eq!(code, 2);
}

#[test]
fn extract_row_counts_and_bounds_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let video = rendered_video(tmp.path());

    let csv = tmp.path().join("sig.csv");
    run_ok(bin().args([
        "extract",
        "--video",
        video.to_str().unwrap(),
        "--x0",
        "24",
        "--y0",
        "16",
        "--width",
        "16",
        "--height",
        "16",
        "--out",
        csv.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 361); // header + 360 samples

    // rescaling keeps the temporal length
    let csv_small = tmp.path().join("sig_small.csv");
    run_ok(bin().args([
        "extract",
        "--video",
        video.to_str().unwrap(),
        "--x0",
        "24",
        "--y0",
        "16",
        "--width",
        "16",
        "--height",
        "16",
        "--scale",
        "0.05",
        "--out",
        csv_small.to_str().unwrap(),
    ]));
    let small = std::fs::read_to_string(&csv_small).unwrap();
    assert_eq!(small.lines().count(), 361);
    assert_ne!(text, small);

    // out-of-bounds RoI
    let code = exit_code(bin().args([
        "extract",
        "--video",
        video.to_str().unwrap(),
        "--x0",
        "60",
        "--y0",
        "16",
        "--width",
        "16",
        "--height",
        "16",
        "--out",
        tmp.path().join("oob.csv").to_str().unwrap(),
    ]));
    assert_eq!(code, 2);
}

#[test]
fn analyze_caps_on_a_pure_reference_and_rejects_length_mismatch() {
    let tmp = tempfile::tempdir().unwrap();
    // exact-bin sine at 30 Hz: 2048 samples, f0 = 17 * 30 / 2048
    let f0 = 17.0 * 30.0 / 2048.0;
    let mut csv = String::from("time_s,value_m\n");
    for i in 0..2048 {
        let t = i as f64 / 30.0;
        csv.push_str(&format!(
            "{t:.9},{:.9}\n",
            (2.0 * std::f64::consts::PI * f0 * t).sin()
        ));
    }
    let sig = tmp.path().join("sine.csv");
    std::fs::write(&sig, &csv).unwrap();

    let out = run_ok(bin().args([
        "analyze",
        "--signal",
        sig.to_str().unwrap(),
        "--reference",
        sig.to_str().unwrap(),
    ]));
    let report: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("analyze prints JSON");
    assert_eq!(report["snr_db"], 60.0);
    assert!(report["rho"].as_f64().unwrap() > 0.999999);

    let shorter = tmp.path().join("short.csv");
    let truncated: String = csv.lines().take(1000).collect::<Vec<_>>().join("\n");
    std::fs::write(&shorter, truncated).unwrap();
    let code = exit_code(bin().args([
        "analyze",
        "--signal",
        shorter.to_str().unwrap(),
        "--reference",
        sig.to_str().unwrap(),
    ]));
    assert_eq!(code, 2);
}

#[test]
fn sweep_row_counts_and_byte_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(tmp.path(), "");

    let grid = tmp.path().join("grid.json");
    std::fs::write(
        &grid,
        r#"{
  "chain": [ { "type": "gaussian", "sigma_m": 0.01 } ],
  "param_name": "sigma_m",
  "param_values": [0.005, 0.01, 0.02, 0.04, 0.08],
  "scales": [1.0, 0.2, 0.05],
  "seeds": [1, 2, 3]
}"#,
    )
    .unwrap();

    let out_a = tmp.path().join("sweep_a");
    let out = run_ok(bin().args([
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--grid",
        grid.to_str().unwrap(),
        "--threads",
        "2",
        "--out",
        out_a.to_str().unwrap(),
    ]));
    assert!(String::from_utf8_lossy(&out.stdout).contains("45 cells"));

    let rows = std::fs::read_to_string(out_a.join("sweep.csv")).unwrap();
    assert_eq!(rows.lines().count(), 46); // header + 45
    let summary = std::fs::read_to_string(out_a.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 16); // header + 5 values x 3 scales
    assert!(out_a.join("sweep.svg").exists());

    // rerun with a different thread count: byte-identical CSVs
    let out_b = tmp.path().join("sweep_b");
    run_ok(bin().args([
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--grid",
        grid.to_str().unwrap(),
        "--threads",
        "1",
        "--out",
        out_b.to_str().unwrap(),
    ]));
    assert_eq!(
        std::fs::read(out_a.join("sweep.csv")).unwrap(),
        std::fs::read(out_b.join("sweep.csv")).unwrap()
    );
    assert_eq!(
        std::fs::read(out_a.join("summary.csv")).unwrap(),
        std::fs::read(out_b.join("summary.csv")).unwrap()
    );
    assert_eq!(
        std::fs::read(out_a.join("sweep.svg")).unwrap(),
        std::fs::read(out_b.join("sweep.svg")).unwrap()
    );
}

#[test]
fn one_cell_grid_yields_one_row_plus_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(tmp.path(), "");
    let grid = tmp.path().join("grid1.json");
    std::fs::write(
        &grid,
        r#"{
  "chain": [ { "type": "gaussian", "sigma_m": 1e-9 } ],
  "param_name": "sigma_m",
  "param_values": [1e-9],
  "scales": [1.0],
  "seeds": [1]
}"#,
    )
    .unwrap();
    let out_dir = tmp.path().join("sweep1");
    run_ok(bin().args([
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--grid",
        grid.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]));
    let rows = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert_eq!(rows.lines().count(), 2);
    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
}
