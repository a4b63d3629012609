//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Constants that depend on the default scene (the calibrated chest
//! amplitude, the equivalence framing, sweep operating points) were derived
//! with `cargo run --example calibrate` and are frozen here; see the README
//! for the procedure.

use depthresp::analysis::{self, corrupt_and_measure};
use depthresp::extract::{self, RoiSpec};
use depthresp::io;
use depthresp::noise::{self, NoiseSpec};
use depthresp::scene::{self, CameraIntrinsics, DepthVideo, TorsoScene};
use depthresp::signals::{self, RespSignal, SynthesisParams};
use std::sync::OnceLock;

/// Chest amplitude at which Gaussian noise of frame std 0.067 at scale 0.2
/// lands on the 6.7 dB operating point (see `examples/calibrate.rs`,
/// stage `amplitude`). Large relative to real breathing because the
/// procedural torso fills a much smaller part of the frame than the
/// original full-body mesh.
const CALIBRATED_AMPLITUDE_M: f64 = 0.3115;

/// Principal point at which the chest RoI sees the same radial-mask power
/// as the whole frame (stage `framing`).
const PARITY_PRINCIPAL_POINT: [f64; 2] = [478.0, 398.0];

const BAND_HZ: f64 = 0.1;
const F0_RANGE: (f64, f64) = (0.1, 0.5);

fn driver() -> &'static RespSignal {
    static DRIVER: OnceLock<RespSignal> = OnceLock::new();
    DRIVER.get_or_init(|| {
        let s = signals::synthesize(&SynthesisParams::default()).unwrap();
        signals::normalize(&signals::resample_linear(&s, 30.0).unwrap()).unwrap()
    })
}

fn calibrated_scene() -> TorsoScene {
    TorsoScene {
        amplitude_m: CALIBRATED_AMPLITUDE_M,
        ..Default::default()
    }
}

/// Clean video at the calibrated amplitude, shared across criteria.
fn calibrated_video() -> &'static DepthVideo {
    static VIDEO: OnceLock<DepthVideo> = OnceLock::new();
    VIDEO.get_or_init(|| scene::animate(&calibrated_scene(), driver()).unwrap())
}

fn f0() -> f64 {
    analysis::detect_f0(driver(), F0_RANGE).unwrap().f0_hz
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sxy += (x - ma) * (y - mb);
        sxx += (x - ma) * (x - ma);
        syy += (y - mb) * (y - mb);
    }
    sxy / (sxx * syy).sqrt()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Per-frame RoI-mean noise of a chain against the clean video.
fn roi_noise(video: &DepthVideo, chain: &[NoiseSpec], roi: &RoiSpec) -> Vec<f64> {
    video
        .frames
        .iter()
        .enumerate()
        .map(|(t, frame)| {
            let noisy = noise::corrupt_frame(frame, chain, t as u32);
            extract::roi_sample(&noisy, roi).unwrap() - extract::roi_sample(frame, roi).unwrap()
        })
        .collect()
}

#[test]
fn criterion_1_clean_pipeline_fidelity() {
    let start = std::time::Instant::now();
    let scene = TorsoScene::default(); // amplitude 0.01
    let video = scene::animate(&scene, driver()).unwrap();
    let roi = RoiSpec::paper(&scene).unwrap();
    let extracted = extract::extract_signal(&video, &roi).unwrap();
    let elapsed = start.elapsed().as_secs_f64();

    // depth shrinks as the chest rises toward the camera, so the raw
    // correlation against the driver is negative by convention
    let r = pearson(extracted.samples(), driver().samples());
    let snr = analysis::snr(&extracted, f0(), BAND_HZ).unwrap();

    let pass = r.abs() > 0.999 && snr.db >= 20.0 && elapsed < 60.0;
    println!(
        "criterion 1 (clean pipeline): |r| = {:.6}, snr = {:.2} dB, runtime = {:.1} s -> {}",
        r.abs(),
        snr.db,
        elapsed,
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(r.abs() > 0.999, "correlation magnitude {r}");
    assert!(r < 0.0, "depth is expected to anti-correlate with inhalation");
    assert!(snr.db >= 20.0, "clean snr {}", snr.db);
    assert!(elapsed < 60.0, "runtime {elapsed} s");
}

#[test]
fn criterion_2_operating_point() {
    let video = calibrated_video();
    let roi = RoiSpec::paper(&calibrated_scene()).unwrap().with_scale(0.2);
    assert_eq!(roi.scaled_dims(), (56, 41));

    let mut snrs = Vec::new();
    let mut sigmas = Vec::new();
    for seed in 1..=5u64 {
        let chain = [NoiseSpec::Gaussian {
            sigma_m: 0.067,
            seed,
        }];
        let m = corrupt_and_measure(video, &chain, &roi, f0(), BAND_HZ).unwrap();
        snrs.push(m.snr_db);
        sigmas.push(m.empirical_sigma_m);
    }
    let snr = mean(&snrs);
    let sigma = mean(&sigmas);
    let pass = (snr - 6.7).abs() <= 2.0 && (sigma - 0.067).abs() < 0.001;
    println!(
        "criterion 2 (operating point): frame std = {sigma:.4} m, snr = {snr:.2} dB \
         (target 6.7 +/- 2.0) -> {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!((sigma - 0.067).abs() < 0.001, "measured frame std {sigma}");
    assert!((snr - 6.7).abs() <= 2.0, "snr {snr} dB off the operating point");
}

#[test]
fn criterion_3_noise_model_equivalence() {
    // frontal flat-chest scene framed so the chest RoI carries the same
    // radial-mask power as the frame average; moderate amplitude keeps the
    // axial magnitude uniform across the breath
    let scn = TorsoScene {
        amplitude_m: 0.05,
        intrinsics: CameraIntrinsics {
            principal_point: Some(PARITY_PRINCIPAL_POINT),
            ..Default::default()
        },
        ..Default::default()
    };
    let video = scene::animate(&scn, driver()).unwrap();
    let roi = RoiSpec::chest_core(&scn, 10).unwrap();
    let f0 = f0();

    // calibrate the radial and axial parameters against the measured frame
    // std using their exact scaling laws (std ~ sigma_m and ~ d_level^2)
    let probe = DepthVideo::new(video.frames[..10].to_vec(), 30.0).unwrap();
    let probe_std = |spec: NoiseSpec| -> f64 {
        let noisy = noise::apply_chain(&probe, &[spec]).unwrap();
        analysis::measure_noise_std(&noisy, &probe).unwrap()
    };
    let radial_factor = probe_std(NoiseSpec::Radial {
        sigma_m: 0.1,
        seed: 99,
    }) / 0.1;
    let axial_factor = probe_std(NoiseSpec::Axial {
        d_offset_m: 2.5,
        d_level: 0.1,
        seed: 99,
    }) / 0.01;

    let levels = [0.01, 0.017783, 0.031623, 0.056234, 0.1];
    let scales = [1.0, 0.2];
    let seeds = [1u64, 2, 3];
    let mut worst_gap = 0.0f64;
    let mut worst_sigma_err = 0.0f64;
    for &sigma_target in &levels {
        for &scale in &scales {
            let r = roi.clone().with_scale(scale);
            let mut snr_by_model = Vec::new();
            let mut sigma_by_model = Vec::new();
            for model in 0..3 {
                let mut snr_acc = 0.0;
                let mut sigma_acc = 0.0;
                for &seed in &seeds {
                    let spec = match model {
                        0 => NoiseSpec::Gaussian {
                            sigma_m: sigma_target,
                            seed,
                        },
                        1 => NoiseSpec::Radial {
                            sigma_m: sigma_target / radial_factor,
                            seed,
                        },
                        _ => NoiseSpec::Axial {
                            d_offset_m: 2.5,
                            d_level: (sigma_target / axial_factor).sqrt(),
                            seed,
                        },
                    };
                    let m = corrupt_and_measure(&video, &[spec], &r, f0, BAND_HZ).unwrap();
                    snr_acc += m.snr_db;
                    sigma_acc += m.empirical_sigma_m;
                }
                snr_by_model.push(snr_acc / 3.0);
                sigma_by_model.push(sigma_acc / 3.0);
            }
            for i in 0..3 {
                worst_sigma_err = worst_sigma_err
                    .max((sigma_by_model[i] - sigma_target).abs() / sigma_target);
                for j in i + 1..3 {
                    worst_gap = worst_gap.max((snr_by_model[i] - snr_by_model[j]).abs());
                }
            }
        }
    }
    let pass = worst_gap <= 1.5 && worst_sigma_err < 0.05;
    println!(
        "criterion 3 (gaussian/axial/radial equivalence): max pairwise gap = {worst_gap:.2} dB \
         (<= 1.5), max sigma mismatch = {:.1}% -> {}",
        100.0 * worst_sigma_err,
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(worst_sigma_err < 0.05, "sigma matching drifted");
    assert!(worst_gap <= 1.5, "equivalence gap {worst_gap} dB");
}

#[test]
fn criterion_4_edge_noise_scale_sensitivity() {
    let video = calibrated_video();
    let scn = calibrated_scene();
    let core = RoiSpec::chest_core(&scn, 10).unwrap();
    let f0 = f0();

    let sigma_gs = [0.5, 1.0, 2.0, 4.0, 8.0];
    let snr_at = |scale: f64, sigma_g: f64| -> f64 {
        let chain = [NoiseSpec::EdgeGaussian {
            sigma_g_px: sigma_g,
            sigma_m: 0.5,
            aoe_threshold: 0.05,
            seed: 1,
        }];
        corrupt_and_measure(video, &chain, &core.clone().with_scale(scale), f0, BAND_HZ)
            .unwrap()
            .snr_db
    };

    let low: Vec<f64> = sigma_gs.iter().map(|&g| snr_at(0.05, g)).collect();
    let high: Vec<f64> = sigma_gs.iter().map(|&g| snr_at(1.0, g)).collect();
    let low_drop = low[0] - low[low.len() - 1];
    let high_span = high.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - high.iter().cloned().fold(f64::INFINITY, f64::min);

    let pass = low_drop > 10.0 && high_span < 3.0;
    println!(
        "criterion 4 (edge noise vs scale): scale 0.05 drop = {low_drop:.1} dB (> 10), \
         scale 1.0 span = {high_span:.2} dB (< 3) -> {}",
        if pass { "PASS" } else { "FAIL" }
    );
    println!("  scale 0.05 snr over sigma_g {sigma_gs:?}: {low:?}");
    println!("  scale 1.0  snr over sigma_g {sigma_gs:?}: {high:?}");
    assert!(low_drop > 10.0, "low-resolution drop {low_drop} dB");
    assert!(high_span < 3.0, "full-resolution span {high_span} dB");
}

/// Chest window the torso extends beyond, so translation slides the
/// displacement-weight field across it (the RoI-tracking-error mechanism).
fn asymmetric_roi(scn: &TorsoScene) -> RoiSpec {
    let core = RoiSpec::chest_core(scn, 10).unwrap();
    RoiSpec {
        x0: core.x0,
        y0: core.y0,
        width_px: 60,
        height_px: core.height_px,
        scale: 1.0,
    }
}

#[test]
fn criterion_5_motion_scale_insensitivity() {
    let video = calibrated_video();
    let roi = asymmetric_roi(&calibrated_scene());
    let f0 = f0();

    let shifts = [1.0, 2.0, 3.0, 5.0, 8.0];
    let scales = [1.0, 0.05];
    let mut snr = vec![Vec::new(); scales.len()];
    for (si, &scale) in scales.iter().enumerate() {
        for &k in &shifts {
            let mut acc = 0.0;
            for seed in 1..=3u64 {
                let chain = [NoiseSpec::Motion {
                    max_shift_px: k,
                    seed,
                }];
                acc += corrupt_and_measure(
                    video,
                    &chain,
                    &roi.clone().with_scale(scale),
                    f0,
                    BAND_HZ,
                )
                .unwrap()
                .snr_db;
            }
            snr[si].push(acc / 3.0);
        }
    }

    let monotone = snr
        .iter()
        .all(|row| row.windows(2).all(|w| w[0] > w[1]));
    let max_gap = (0..shifts.len())
        .map(|i| (snr[0][i] - snr[1][i]).abs())
        .fold(0.0, f64::max);
    let pass = monotone && max_gap <= 3.0;
    println!(
        "criterion 5 (motion noise): monotone decreasing = {monotone}, \
         max |snr(1.0) - snr(0.05)| = {max_gap:.2} dB (<= 3) -> {}",
        if pass { "PASS" } else { "FAIL" }
    );
    println!("  scale 1.0  snr over shifts {shifts:?}: {:?}", snr[0]);
    println!("  scale 0.05 snr over shifts {shifts:?}: {:?}", snr[1]);
    assert!(monotone, "snr not monotone in max_shift_px");
    assert!(max_gap <= 3.0, "scale gap {max_gap} dB");
}

#[test]
fn criterion_6_combined_noise_additivity() {
    let video = calibrated_video();
    let scn = calibrated_scene();
    let roi = RoiSpec::paper(&scn).unwrap().with_scale(0.2);
    let f0 = f0();

    let motion = NoiseSpec::Motion {
        max_shift_px: 2.0,
        seed: 3,
    };
    let eg = |sigma_m: f64| NoiseSpec::EdgeGaussian {
        sigma_g_px: 2.0,
        sigma_m,
        aoe_threshold: 0.05,
        seed: 4,
    };

    // adding edge noise reduces the SNR at every grid point
    let snr_motion = corrupt_and_measure(video, std::slice::from_ref(&motion), &roi, f0, BAND_HZ)
        .unwrap()
        .snr_db;
    let mut inequality = true;
    let mut combined_snrs = Vec::new();
    for sigma_m in [0.375, 0.75, 1.5] {
        let snr_c = corrupt_and_measure(
            video,
            &[motion.clone(), eg(sigma_m)],
            &roi,
            f0,
            BAND_HZ,
        )
        .unwrap()
        .snr_db;
        inequality &= snr_c < snr_motion;
        combined_snrs.push(snr_c);
    }

    // per-frame RoI noise variances add
    let var = |d: &[f64]| {
        let m = mean(d);
        d.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / d.len() as f64
    };
    let vm = var(&roi_noise(video, std::slice::from_ref(&motion), &roi));
    let ve = var(&roi_noise(video, &[eg(0.75)], &roi));
    let vc = var(&roi_noise(video, &[motion.clone(), eg(0.75)], &roi));
    let ratio = vc / (vm + ve);

    let pass = inequality && (ratio - 1.0).abs() <= 0.1;
    println!(
        "criterion 6 (combined noise): snr(M) = {snr_motion:.2} dB vs combined {combined_snrs:?}; \
         var ratio = {ratio:.3} (within 10%) -> {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(inequality, "adding edge noise failed to reduce the SNR");
    assert!(
        (ratio - 1.0).abs() <= 0.1,
        "variance additivity ratio {ratio}"
    );
}

#[test]
fn criterion_7_clt_normality() {
    let video = calibrated_video();
    let scn = calibrated_scene();
    let roi = RoiSpec::paper(&scn).unwrap().with_scale(0.2);

    let perm = NoiseSpec::EdgePermutation {
        sigma_g_px: 2.0,
        r_p_px: 4,
        aoe_threshold: 0.05,
        seed: 1,
    };
    let noise_series = roi_noise(video, std::slice::from_ref(&perm), &roi);
    let n = noise_series.len() as f64;
    let m = mean(&noise_series);
    let sd = (noise_series.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / n).sqrt();
    let skew = noise_series
        .iter()
        .map(|d| ((d - m) / sd).powi(3))
        .sum::<f64>()
        / n;
    let kurt = noise_series
        .iter()
        .map(|d| ((d - m) / sd).powi(4))
        .sum::<f64>()
        / n
        - 3.0;
    let pass = skew.abs() < 0.2 && kurt.abs() < 0.5;
    println!(
        "criterion 7 (CLT at scale 0.2, RoI {:?}): skew = {skew:.3} (< 0.2), \
         excess kurtosis = {kurt:.3} (< 0.5) -> {}",
        roi.scaled_dims(),
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(skew.abs() < 0.2, "skew {skew}");
    assert!(kurt.abs() < 0.5, "excess kurtosis {kurt}");

    // single-pixel RoI on the silhouette at scale 0.05: recorded, not
    // asserted — averaging is gone, so normality may fail here
    let (bx0, by0, _, _) = scene::torso_projection_bbox(&scn).unwrap();
    let single = RoiSpec {
        x0: bx0.saturating_sub(10),
        y0: by0 + 60,
        width_px: 20,
        height_px: 20,
        scale: 0.05,
    };
    assert_eq!(single.scaled_dims(), (1, 1));
    let series = roi_noise(video, &[perm], &single);
    let m1 = mean(&series);
    let sd1 = (series.iter().map(|d| (d - m1) * (d - m1)).sum::<f64>() / n).sqrt();
    if sd1 > 0.0 {
        let skew1 = series.iter().map(|d| ((d - m1) / sd1).powi(3)).sum::<f64>() / n;
        let kurt1 = series.iter().map(|d| ((d - m1) / sd1).powi(4)).sum::<f64>() / n - 3.0;
        println!(
            "  recorded (single-pixel RoI at scale 0.05): skew = {skew1:.2}, \
             excess kurtosis = {kurt1:.2}"
        );
    } else {
        println!("  recorded (single-pixel RoI at scale 0.05): no noise reached the pixel");
    }
}

#[test]
fn criterion_8_micro_oracle_spotchecks() {
    // the full derived-oracle suite runs as the module unit tests in this
    // same workspace invocation; spot-check the cross-module laws here

    // RoI averaging of i.i.d. pixel noise follows sigma / sqrt(N)
    let clean = DepthVideo::new(
        vec![depthresp::scene::DepthFrame::new(100, 80, 2.0); 400],
        30.0,
    )
    .unwrap();
    let sigma = 0.1;
    for (scale, tol) in [(1.0, 0.1), (0.2, 0.1)] {
        let roi = RoiSpec {
            x0: 10,
            y0: 8,
            width_px: 80,
            height_px: 60,
            scale,
        };
        let chain = [NoiseSpec::Gaussian { sigma_m: sigma, seed: 5 }];
        let series = roi_noise(&clean, &chain, &roi);
        let m = mean(&series);
        let sd =
            (series.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / series.len() as f64).sqrt();
        let (sw, sh) = roi.scaled_dims();
        let expect = sigma / ((sw * sh) as f64).sqrt();
        assert!(
            (sd - expect).abs() / expect < tol,
            "scale {scale}: roi noise std {sd} vs {expect}"
        );
    }

    // chained gaussians add in variance
    let frame = depthresp::scene::DepthFrame::new(640, 480, 2.0);
    let chain = [
        NoiseSpec::Gaussian {
            sigma_m: 0.03,
            seed: 7,
        },
        NoiseSpec::Gaussian {
            sigma_m: 0.04,
            seed: 7,
        },
    ];
    let noisy = noise::corrupt_frame(&frame, &chain, 0);
    let std = analysis::frame_diff_std(&noisy, &frame);
    let expect = (0.03f64.powi(2) + 0.04f64.powi(2)).sqrt();
    assert!((std - expect).abs() / expect < 0.02);

    // synthetic generator peaks at its configured rate
    let s = signals::synthesize(&SynthesisParams::default()).unwrap();
    let est = analysis::detect_f0(&s, F0_RANGE).unwrap();
    assert!((est.f0_hz - 0.25).abs() < 0.01);

    println!("criterion 8 (micro-oracles): spot checks pass; full suite runs with cargo test -> PASS");
}

#[test]
fn criterion_9_byte_determinism() {
    // identical config + seed => byte-identical artifacts, independent of
    // the thread count; exercised through the public pipeline APIs
    let scn = TorsoScene {
        tess_u: 32,
        tess_v: 32,
        intrinsics: CameraIntrinsics {
            width_px: 64,
            height_px: 48,
            focal_px: 52.0,
            principal_point: None,
        },
        ..Default::default()
    };
    let params = SynthesisParams {
        duration_s: 12.0,
        ..Default::default()
    };
    let drv = signals::normalize(
        &signals::resample_linear(&signals::synthesize(&params).unwrap(), 30.0).unwrap(),
    )
    .unwrap();

    let chain = [
        NoiseSpec::Motion {
            max_shift_px: 2.0,
            seed: 11,
        },
        NoiseSpec::EdgeGaussian {
            sigma_g_px: 2.0,
            sigma_m: 0.3,
            aoe_threshold: 0.05,
            seed: 11,
        },
    ];

    let run = |threads: usize| -> (Vec<u8>, Vec<u8>) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let video = scene::animate(&scn, &drv).unwrap();
                let noisy = noise::apply_chain(&video, &chain).unwrap();
                let frames: Vec<u8> = noisy
                    .frames
                    .iter()
                    .flat_map(|f| f.as_slice().iter().flat_map(|v| v.to_le_bytes()))
                    .collect();
                let roi = RoiSpec {
                    x0: 20,
                    y0: 12,
                    width_px: 24,
                    height_px: 24,
                    scale: 0.2,
                };
                let sig = extract::extract_signal(&noisy, &roi).unwrap();
                let mut csv = Vec::new();
                for (i, v) in sig.samples().iter().enumerate() {
                    csv.extend_from_slice(
                        format!("{},{}\n", io::fmt_sig9(i as f64 / 30.0), io::fmt_sig9(*v))
                            .as_bytes(),
                    );
                }
                (frames, csv)
            })
    };

    let (frames_1, csv_1) = run(1);
    let (frames_4, csv_4) = run(4);
    let pass = frames_1 == frames_4 && csv_1 == csv_4;
    println!(
        "criterion 9 (determinism): frame bytes identical = {}, csv bytes identical = {} -> {}",
        frames_1 == frames_4,
        csv_1 == csv_4,
        if pass { "PASS" } else { "FAIL" }
    );
    assert_eq!(frames_1, frames_4);
    assert_eq!(csv_1, csv_4);
}
