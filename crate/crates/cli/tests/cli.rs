//! Black-box tests of the installed binary: exit codes, printed output,
//! and on-disk artifacts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gazesep::scene::Scene;
use gazesep::synth::pseudo_speech;
use gazesep::wav::{read_wav, write_wav};
use tempfile::tempdir;

fn gazesep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gazesep"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).unwrap()
}

/// Writes WAVs of the given durations and a CSV cataloguing them.
fn write_corpus(dir: &Path, entries: &[(&str, &str, f64)]) -> PathBuf {
    let mut csv = String::from("id,speaker_id,audio_path,duration\n");
    for (n, (id, speaker, duration)) in entries.iter().enumerate() {
        let len = (duration * 16_000.0).round() as usize;
        let path = dir.join(format!("{id}.wav"));
        write_wav(&path, &pseudo_speech(len, 900 + n as u64)).unwrap();
        csv.push_str(&format!("{id},{speaker},{},{duration}\n", path.display()));
    }
    let csv_path = dir.join("utterances.csv");
    std::fs::write(&csv_path, csv).unwrap();
    csv_path
}

#[test]
fn pair_prints_four_directed_pairs_after_skipping_same_speaker() {
    let dir = tempdir().unwrap();
    let csv = write_corpus(
        dir.path(),
        &[("a", "spk1", 3.0), ("b", "spk1", 3.05), ("c", "spk2", 3.1)],
    );
    let output = gazesep(&["pair", csv.to_str().unwrap()]);
    assert!(output.status.success(), "{}", stderr(&output));
    assert_eq!(stdout(&output), "a,c\nc,a\nb,c\nc,b\n");
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let output = gazesep(&["separate"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr(&output).contains("Usage"));

    let help = gazesep(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(stdout(&help).contains("Usage"));
}

#[test]
fn scene_writes_a_loadable_manifest() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("scene.toml");
    let output = gazesep(&[
        "scene",
        "--switch-time",
        "2.0",
        "--seed",
        "9",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    let scene = Scene::load(&path).unwrap();
    assert_eq!(scene.config.seed, 9);
    assert_eq!(scene.config.switch_time, Some(2.0));
    assert_eq!(scene.n_frames(), 100);
    assert!(scene.attended_truth.contains(&1));
}

#[test]
fn build_enhance_and_spectrogram_produce_artifacts() {
    let dir = tempdir().unwrap();
    let csv = write_corpus(dir.path(), &[("a", "spk1", 1.0), ("b", "spk2", 1.04)]);
    let out = dir.path().join("ds");

    let build = gazesep(&[
        "build",
        csv.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(build.status.success(), "{}", stderr(&build));
    assert!(stdout(&build).contains("built 2 records"));

    let estimate = dir.path().join("estimate.wav");
    let enhance = gazesep(&[
        "enhance",
        "--manifest",
        out.join("manifest.toml").to_str().unwrap(),
        "--record",
        "a__b",
        "--condition",
        "fixed_A",
        "--out",
        estimate.to_str().unwrap(),
    ]);
    assert!(enhance.status.success(), "{}", stderr(&enhance));
    let wave = read_wav(&estimate).unwrap();
    assert_eq!(wave.len(), 16_000);

    let pgm = dir.path().join("estimate.pgm");
    let spectrogram = gazesep(&[
        "spectrogram",
        estimate.to_str().unwrap(),
        "--out",
        pgm.to_str().unwrap(),
    ]);
    assert!(spectrogram.status.success(), "{}", stderr(&spectrogram));
    let bytes = std::fs::read(&pgm).unwrap();
    assert!(bytes.starts_with(b"P5\n"));
}

#[test]
fn eval_lists_every_bad_record_and_exits_2() {
    let dir = tempdir().unwrap();
    let csv = write_corpus(dir.path(), &[("a", "spk1", 1.0), ("b", "spk2", 1.04)]);
    let out = dir.path().join("ds");
    let build = gazesep(&[
        "build",
        csv.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(build.status.success(), "{}", stderr(&build));

    // Shorten both references so every record has mismatched lengths.
    for id in ["a__b", "b__a"] {
        let path = out.join(format!("audio/{id}_reference.wav"));
        let mut wave = read_wav(&path).unwrap();
        wave.samples.truncate(wave.len() / 2);
        write_wav(&path, &wave).unwrap();
    }

    let eval = gazesep(&[
        "eval",
        "--manifest",
        out.join("manifest.toml").to_str().unwrap(),
        "--conditions",
        "mixed",
    ]);
    assert_eq!(eval.status.code(), Some(2));
    let diagnostics = stderr(&eval);
    assert!(diagnostics.contains("a__b"), "{diagnostics}");
    assert!(diagnostics.contains("b__a"), "{diagnostics}");
    assert!(diagnostics.contains("all 2 records failed"), "{diagnostics}");
}

#[test]
fn experiment_reruns_are_byte_identical() {
    let dir = tempdir().unwrap();
    let csv = write_corpus(dir.path(), &[("a", "spk1", 1.0), ("b", "spk2", 1.04)]);
    let ds = dir.path().join("ds");
    let build = gazesep(&[
        "switch",
        csv.to_str().unwrap(),
        "--out",
        ds.to_str().unwrap(),
        "--seed",
        "5",
    ]);
    assert!(build.status.success(), "{}", stderr(&build));

    let cfg_path = dir.path().join("exp.cfg");
    let run_dir = dir.path().join("run");
    std::fs::write(
        &cfg_path,
        format!(
            "manifest = {}\nconditions = mixed,gaze_guided\nspectrograms = 1\nout = {}\n",
            ds.join("manifest.toml").display(),
            run_dir.display(),
        ),
    )
    .unwrap();

    let run = |label: &str| -> Vec<(PathBuf, Vec<u8>)> {
        let output = gazesep(&["experiment", "--config", cfg_path.to_str().unwrap(), "--seed", "7"]);
        assert!(output.status.success(), "{label}: {}", stderr(&output));
        assert!(stdout(&output).contains("gaze_guided"));
        let mut files = Vec::new();
        let mut stack = vec![run_dir.clone()];
        while let Some(dir) = stack.pop() {
            for entry in std::fs::read_dir(dir).unwrap() {
                let path = entry.unwrap().path();
                if path.is_dir() {
                    stack.push(path);
                } else {
                    files.push((path.clone(), std::fs::read(&path).unwrap()));
                }
            }
        }
        files.sort();
        files
    };

    let first = run("first");
    assert!(first.iter().any(|(p, _)| p.ends_with("report.csv")));
    assert!(first.iter().any(|(p, _)| p.ends_with("resolved_config.cfg")));
    assert!(first
        .iter()
        .any(|(p, _)| p.extension().is_some_and(|e| e == "pgm")));

    std::fs::remove_dir_all(&run_dir).unwrap();
    let second = run("second");
    assert_eq!(first.len(), second.len());
    for ((path_a, bytes_a), (path_b, bytes_b)) in first.iter().zip(&second) {
        assert_eq!(path_a, path_b);
        assert_eq!(bytes_a, bytes_b, "{} differs between runs", path_a.display());
    }
}

#[test]
fn experiment_rejects_unknown_config_keys() {
    let dir = tempdir().unwrap();
    let cfg_path = dir.path().join("exp.cfg");
    std::fs::write(&cfg_path, "manifest = x.toml\nwindow = 512\n").unwrap();
    let output = gazesep(&["experiment", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("unknown config key"));
}
