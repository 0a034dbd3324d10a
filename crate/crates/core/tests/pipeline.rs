//! End-to-end flows: synthesize a corpus, build mixtures, enhance, score.

use std::path::Path;

use gazesep::attention::SelectionTrace;
use gazesep::audio::mix_equal_gain;
use gazesep::dataset::{build_dataset, BuildOptions, MixtureRecord, UtteranceRecord};
use gazesep::enhance::{fixed_target_enhance, gaze_gated_enhance};
use gazesep::metrics::{evaluate_set, si_sdr, Condition, EvalOptions};
use gazesep::scene::{generate_scene, SceneConfig};
use gazesep::stft::StftConfig;
use gazesep::synth::{pseudo_speech, tone_burst};
use gazesep::wav::write_wav;
use gazesep::{debounce, track_attention, AttentionConfig, SAMPLE_RATE, VIDEO_FPS};
use tempfile::tempdir;

fn demo_corpus(dir: &Path, n_per_speaker: usize) -> Vec<UtteranceRecord> {
    let mut records = Vec::new();
    for k in 0..n_per_speaker {
        for (spk, seed_base) in [("spk1", 100u64), ("spk2", 200u64)] {
            let id = format!("{spk}_{k}");
            let len = 16_000 + 640 * 25 * k + if spk == "spk2" { 320 } else { 0 };
            let wave = pseudo_speech(len, seed_base + k as u64);
            let path = dir.join(format!("{id}.wav"));
            write_wav(&path, &wave).unwrap();
            records.push(UtteranceRecord {
                id,
                speaker_id: spk.into(),
                audio_path: path,
                duration: len as f64 / SAMPLE_RATE as f64,
            });
        }
    }
    records
}

#[test]
fn fixed_target_beats_plain_mixture_without_switches() {
    let dir = tempdir().unwrap();
    let records = demo_corpus(dir.path(), 3);
    let out = dir.path().join("out");
    let built = build_dataset(&records, &out, &BuildOptions::default()).unwrap();
    assert_eq!(built.len(), 6);

    let options = EvalOptions {
        conditions: vec![Condition::Mixed, Condition::FixedA],
        ..EvalOptions::default()
    };
    let report = evaluate_set(&built, &out, &options).unwrap();
    assert!(report.failures.is_empty(), "{:?}", report.failures);

    let mixed = report.mean(Condition::Mixed, "si_sdr").unwrap();
    let fixed = report.mean(Condition::FixedA, "si_sdr").unwrap();
    assert!(
        fixed > mixed,
        "oracle-masked target {fixed} dB should beat the raw mixture {mixed} dB"
    );
    let mixed_stoi = report.mean(Condition::Mixed, "stoi").unwrap();
    let fixed_stoi = report.mean(Condition::FixedA, "stoi").unwrap();
    assert!(fixed_stoi > mixed_stoi);
}

#[test]
fn gaze_following_wins_on_switch_records() {
    let dir = tempdir().unwrap();
    let records = demo_corpus(dir.path(), 2);
    let out = dir.path().join("out");
    let options = BuildOptions {
        seed: 7,
        switch_fraction: 1.0,
        ..BuildOptions::default()
    };
    let built = build_dataset(&records, &out, &options).unwrap();
    assert_eq!(built.len(), 4);
    assert!(built.iter().all(|r| r.switch.is_some()));

    let report = evaluate_set(&built, &out, &EvalOptions::default()).unwrap();
    assert!(report.failures.is_empty(), "{:?}", report.failures);

    let gaze = report.mean(Condition::GazeGuided, "si_sdr").unwrap();
    let fixed_a = report.mean(Condition::FixedA, "si_sdr").unwrap();
    let fixed_b = report.mean(Condition::FixedB, "si_sdr").unwrap();
    assert!(
        gaze >= fixed_a + 3.0 && gaze >= fixed_b + 3.0,
        "gaze {gaze} dB vs fixed {fixed_a} / {fixed_b} dB"
    );

    let gaze_stoi = report.mean(Condition::GazeGuided, "stoi").unwrap();
    assert!(gaze_stoi > report.mean(Condition::FixedA, "stoi").unwrap());
    assert!(gaze_stoi > report.mean(Condition::FixedB, "stoi").unwrap());
}

#[test]
fn selection_switch_recovers_the_reference_tone() {
    let len = 2 * SAMPLE_RATE as usize;
    let half = len / 2;
    let a = tone_burst(len, 0..len, 440.0, 0.3);
    let b = tone_burst(len, 0..len, 1320.0, 0.3);
    let mixture = mix_equal_gain(&a, &b).unwrap();
    let reference = {
        let mut samples = a.samples[..half].to_vec();
        samples.extend_from_slice(&b.samples[half..]);
        gazesep::audio::Waveform::new(samples, SAMPLE_RATE)
    };

    let n_frames = len / 640;
    let mut per_frame = vec![Some(0); n_frames];
    for sel in per_frame.iter_mut().skip(n_frames / 2) {
        *sel = Some(1);
    }
    let selection = SelectionTrace::new(per_frame, VIDEO_FPS);
    let cfg = StftConfig::default();
    let sources = [a, b];

    let followed = gaze_gated_enhance(&mixture, &sources, &selection, &cfg).unwrap();
    let fixed = fixed_target_enhance(&mixture, &sources, 0, &cfg).unwrap();

    let got = si_sdr(&reference, &followed).unwrap();
    let stuck = si_sdr(&reference, &fixed).unwrap();
    assert!(
        got >= stuck + 3.0,
        "following the switch scored {got} dB, staying on A scored {stuck} dB"
    );
}

#[test]
fn attention_tracking_recovers_the_scripted_target() {
    let mut agree = 0usize;
    let mut total = 0usize;
    for seed in 0..20u64 {
        let config = SceneConfig {
            seed,
            switch_time: if seed % 2 == 0 { Some(2.0) } else { None },
            initial_target: (seed % 2) as usize,
            ..SceneConfig::default()
        };
        let scene = generate_scene(&config).unwrap();
        let raw = track_attention(&scene, &AttentionConfig::default()).unwrap();
        let selection = debounce(&raw, 1);
        assert_eq!(selection.per_frame.len(), scene.n_frames());
        for (sel, truth) in selection.per_frame.iter().zip(&scene.attended_truth) {
            total += 1;
            if *sel == Some(*truth) {
                agree += 1;
            }
        }
    }
    let rate = agree as f64 / total as f64;
    assert!(rate >= 0.99, "recovered {agree}/{total} frames ({rate:.4})");
}

#[test]
fn repeated_builds_and_evaluations_are_identical() {
    let dir = tempdir().unwrap();
    let records = demo_corpus(dir.path(), 2);
    let options = BuildOptions {
        seed: 3,
        switch_fraction: 0.5,
        ..BuildOptions::default()
    };

    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let built_a = build_dataset(&records, &out_a, &options).unwrap();
    let built_b = build_dataset(&records, &out_b, &options).unwrap();
    assert_eq!(built_a, built_b);

    let mut paths = vec![std::path::PathBuf::from("manifest.toml")];
    for record in &built_a {
        paths.push(record.mixture_path.clone());
        paths.push(record.reference_path.clone());
        if let Some(scene) = &record.scene_ref {
            paths.push(scene.clone());
        }
    }
    for rel in &paths {
        let bytes_a = std::fs::read(out_a.join(rel)).unwrap();
        let bytes_b = std::fs::read(out_b.join(rel)).unwrap();
        assert_eq!(bytes_a, bytes_b, "{} differs between builds", rel.display());
    }

    let eval = EvalOptions::default();
    let first = evaluate_set(&built_a, &out_a, &eval).unwrap();
    let second = evaluate_set(&built_a, &out_a, &eval).unwrap();
    assert_eq!(first.to_csv(), second.to_csv());
    assert_eq!(first.per_record_csv(), second.per_record_csv());
}

#[test]
fn identity_record_scores_perfect_stoi_and_infinite_si_sdr() {
    let dir = tempdir().unwrap();
    let wave = pseudo_speech(SAMPLE_RATE as usize, 42);
    let utterance_path = dir.path().join("utterance.wav");
    write_wav(&utterance_path, &wave).unwrap();
    let out = dir.path().join("out");
    std::fs::create_dir_all(out.join("audio")).unwrap();
    write_wav(&out.join("audio/identity_mixture.wav"), &wave).unwrap();
    write_wav(&out.join("audio/identity_reference.wav"), &wave).unwrap();

    let utterance = UtteranceRecord {
        id: "identity".into(),
        speaker_id: "spk1".into(),
        audio_path: utterance_path,
        duration: 1.0,
    };
    let record = MixtureRecord {
        id: "identity".into(),
        mixture_path: "audio/identity_mixture.wav".into(),
        reference_path: "audio/identity_reference.wav".into(),
        scene_ref: None,
        switch: None,
        target: utterance.clone(),
        interferer: utterance,
    };

    let options = EvalOptions {
        conditions: vec![Condition::Mixed],
        ..EvalOptions::default()
    };
    let report = evaluate_set(&[record], &out, &options).unwrap();
    assert!(report.failures.is_empty(), "{:?}", report.failures);

    let stoi_row = report
        .rows
        .iter()
        .find(|r| r.condition == Condition::Mixed && r.metric == "stoi")
        .unwrap();
    assert!((stoi_row.mean - 1.0).abs() <= 1e-6);

    let sdr_row = report
        .rows
        .iter()
        .find(|r| r.condition == Condition::Mixed && r.metric == "si_sdr")
        .unwrap();
    assert_eq!(sdr_row.count, 0);
    assert_eq!(sdr_row.inf_count, 1);
    assert!(sdr_row.mean.is_nan());
}
