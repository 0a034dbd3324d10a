//! Command-line harness tying the library into reproducible experiments:
//! scene generation, dataset builds, enhancement runs, evaluation, and
//! report/spectrogram emission.

mod experiment;

pub use experiment::{run_experiment, ExperimentConfig};

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use gazesep::dataset::{
    build_dataset, load_record_audio, pair_utterances, read_utterance_csv, BuildOptions,
    DatasetManifest, MixtureRecord,
};
use gazesep::metrics::{
    condition_estimate, evaluate_set, Condition, EvalOptions, MetricReport, MetricsError,
};
use gazesep::scene::{generate_scene, SceneConfig};
use gazesep::stft::{stft, write_pgm, StftConfig};
use gazesep::wav::{read_wav, write_wav};
use gazesep::DEFAULT_SWITCH_GAP;

#[derive(Parser)]
#[command(name = "gazesep", version, about = "Gaze-guided speech enhancement toolkit")]
struct Cli {
    /// Seed for randomized steps; for `experiment` it overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output path; a directory or file depending on the subcommand.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Plain-text key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic two-speaker scene manifest.
    Scene(SceneArgs),
    /// Print the directed target/interferer pairs for an utterance CSV.
    Pair {
        /// CSV with id,speaker_id,audio_path,duration columns.
        csv: PathBuf,
    },
    /// Build mixtures, references, scenes, and a manifest from an utterance CSV.
    Build(BuildArgs),
    /// Like `build`, but applies the speaker-switch treatment to every pair.
    Switch(BuildArgs),
    /// Enhance one record under one condition and write the estimate WAV.
    Enhance(EnhanceArgs),
    /// Score a built dataset and print the report table.
    Eval(EvalArgs),
    /// Run the experiment described by a config file and write its reports.
    Experiment,
    /// Render a WAV file's log-magnitude spectrogram to a PGM image.
    Spectrogram {
        /// Input waveform, PCM16 mono.
        wav: PathBuf,
    },
}

#[derive(Args)]
struct SceneArgs {
    #[arg(long, default_value_t = 1280)]
    width: u32,
    #[arg(long, default_value_t = 720)]
    height: u32,
    /// Clip length in seconds.
    #[arg(long, default_value_t = 4.0)]
    duration: f64,
    #[arg(long, default_value_t = 2)]
    speakers: usize,
    /// Face box side as a fraction of frame height.
    #[arg(long, default_value_t = 0.25)]
    face_size: f64,
    /// Gaze jitter standard deviation, pixels.
    #[arg(long, default_value_t = 8.0)]
    jitter: f64,
    /// Face box random-walk step standard deviation, pixels.
    #[arg(long, default_value_t = 0.0)]
    motion: f64,
    /// When set, attention flips to the other speaker at this time.
    #[arg(long)]
    switch_time: Option<f64>,
    #[arg(long, default_value_t = 0)]
    initial_target: usize,
}

#[derive(Args)]
struct BuildArgs {
    /// CSV with id,speaker_id,audio_path,duration columns.
    csv: PathBuf,
    /// Fraction of directed pairs that get the speaker-switch treatment.
    #[arg(long, default_value_t = 0.0)]
    switch_fraction: f64,
    /// Silent gap between the halves of a switch mixture, seconds.
    #[arg(long, default_value_t = DEFAULT_SWITCH_GAP)]
    gap: f64,
    /// Skip writing scene manifests.
    #[arg(long)]
    no_scenes: bool,
}

#[derive(Args)]
struct EnhanceArgs {
    /// Dataset manifest written by `build` or `switch`.
    #[arg(long)]
    manifest: PathBuf,
    /// Record id within the manifest.
    #[arg(long)]
    record: String,
    /// One of: mixed, fixed_A, fixed_B, gaze_guided.
    #[arg(long)]
    condition: String,
}

#[derive(Args)]
struct EvalArgs {
    /// Dataset manifest written by `build` or `switch`.
    #[arg(long)]
    manifest: PathBuf,
    /// Comma-separated subset of: mixed, fixed_A, fixed_B, gaze_guided.
    #[arg(long, default_value = "mixed,fixed_A,fixed_B,gaze_guided")]
    conditions: String,
    /// Frames a new gaze selection must persist before it commits.
    #[arg(long, default_value_t = 1)]
    debounce_k: usize,
    /// External PESQ command, called as `cmd reference.wav estimate.wav`.
    #[arg(long)]
    pesq_command: Option<String>,
}

/// Parses `argv` and runs the selected subcommand. Returns the process exit
/// status: 0 on success, 1 on a usage error, 2 on a data error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{err}");
                    0
                }
                _ => {
                    eprint!("{err}");
                    1
                }
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(message) => {
            eprintln!("error: {message}");
            2
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), String> {
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Scene(args) => cmd_scene(args, seed, cli.out),
        Command::Pair { csv } => cmd_pair(&csv, cli.out),
        Command::Build(args) => cmd_build(args, seed, cli.out, false),
        Command::Switch(args) => cmd_build(args, seed, cli.out, true),
        Command::Enhance(args) => cmd_enhance(args, cli.out),
        Command::Eval(args) => cmd_eval(args, cli.out),
        Command::Experiment => {
            let config = cli
                .config
                .ok_or("experiment needs --config pointing at a key=value file")?;
            let cfg = ExperimentConfig::from_file(&config, cli.seed, cli.out)?;
            let report = run_experiment(&cfg)?;
            print!("{}", report.to_table());
            Ok(())
        }
        Command::Spectrogram { wav } => cmd_spectrogram(&wav, cli.out),
    }
}

fn stringify(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn cmd_scene(args: SceneArgs, seed: u64, out: Option<PathBuf>) -> Result<(), String> {
    let config = SceneConfig {
        frame_width: args.width,
        frame_height: args.height,
        duration: args.duration,
        n_speakers: args.speakers,
        face_size_fraction: args.face_size,
        jitter_sigma: args.jitter,
        box_motion_sigma: args.motion,
        switch_time: args.switch_time,
        initial_target: args.initial_target,
        seed,
        ..SceneConfig::default()
    };
    let scene = generate_scene(&config).map_err(stringify)?;
    let path = out.unwrap_or_else(|| PathBuf::from("scene.toml"));
    scene.save(&path).map_err(stringify)?;
    println!("{}", path.display());
    Ok(())
}

fn cmd_pair(csv: &Path, out: Option<PathBuf>) -> Result<(), String> {
    let records = read_utterance_csv(csv).map_err(stringify)?;
    let pairs = pair_utterances(&records).map_err(stringify)?;
    let mut text = String::new();
    for (target, interferer) in &pairs {
        text.push_str(&format!("{},{}\n", target.id, interferer.id));
    }
    print!("{text}");
    if let Some(path) = out {
        std::fs::write(&path, text).map_err(stringify)?;
    }
    Ok(())
}

fn cmd_build(
    args: BuildArgs,
    seed: u64,
    out: Option<PathBuf>,
    all_switch: bool,
) -> Result<(), String> {
    let out = out.ok_or("build needs --out for the dataset directory")?;
    let records = read_utterance_csv(&args.csv).map_err(stringify)?;
    let options = BuildOptions {
        seed,
        with_scenes: !args.no_scenes,
        switch_fraction: if all_switch { 1.0 } else { args.switch_fraction },
        gap: args.gap,
    };
    let built = build_dataset(&records, &out, &options).map_err(stringify)?;
    let switches = built.iter().filter(|r| r.switch.is_some()).count();
    println!(
        "built {} records ({} with a switch) -> {}",
        built.len(),
        switches,
        out.join("manifest.toml").display()
    );
    Ok(())
}

fn find_record<'a>(
    manifest: &'a DatasetManifest,
    id: &str,
) -> Result<&'a MixtureRecord, String> {
    manifest.records.iter().find(|r| r.id == id).ok_or_else(|| {
        let known: Vec<&str> = manifest.records.iter().map(|r| r.id.as_str()).collect();
        format!("record {id:?} not in manifest; records: {}", known.join(", "))
    })
}

fn cmd_enhance(args: EnhanceArgs, out: Option<PathBuf>) -> Result<(), String> {
    let out = out.ok_or("enhance needs --out for the estimate WAV path")?;
    let condition: Condition = args.condition.parse().map_err(stringify)?;
    let manifest = DatasetManifest::load(&args.manifest).map_err(stringify)?;
    let base = manifest_base(&args.manifest);
    let record = find_record(&manifest, &args.record)?;
    let audio = load_record_audio(record, base).map_err(stringify)?;
    let options = EvalOptions::default();
    let estimate = condition_estimate(&audio, condition, &options).map_err(stringify)?;
    write_wav(&out, &estimate).map_err(stringify)?;
    println!("{}", out.display());
    Ok(())
}

fn manifest_base(manifest_path: &Path) -> &Path {
    manifest_path.parent().unwrap_or_else(|| Path::new("."))
}

fn parse_conditions(text: &str) -> Result<Vec<Condition>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(stringify))
        .collect()
}

fn cmd_eval(args: EvalArgs, out: Option<PathBuf>) -> Result<(), String> {
    let manifest = DatasetManifest::load(&args.manifest).map_err(stringify)?;
    let base = manifest_base(&args.manifest);
    let options = EvalOptions {
        conditions: parse_conditions(&args.conditions)?,
        debounce_k: args.debounce_k,
        pesq_command: args.pesq_command,
        ..EvalOptions::default()
    };
    let report = match evaluate_set(&manifest.records, base, &options) {
        Ok(report) => report,
        Err(MetricsError::AllRecordsFailed { failures }) => {
            for (id, message) in &failures {
                eprintln!("{id}: {message}");
            }
            return Err(format!("all {} records failed to evaluate", failures.len()));
        }
        Err(e) => return Err(e.to_string()),
    };
    for (id, message) in &report.failures {
        eprintln!("{id}: {message}");
    }
    print!("{}", report.to_table());
    if let Some(dir) = out {
        write_report_files(&dir, &report)?;
    }
    Ok(())
}

fn write_report_files(dir: &Path, report: &MetricReport) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(stringify)?;
    std::fs::write(dir.join("report.csv"), report.to_csv()).map_err(stringify)?;
    std::fs::write(dir.join("per_record.csv"), report.per_record_csv()).map_err(stringify)?;
    std::fs::write(dir.join("report.txt"), report.to_table()).map_err(stringify)?;
    Ok(())
}

fn cmd_spectrogram(wav: &Path, out: Option<PathBuf>) -> Result<(), String> {
    let waveform = read_wav(wav).map_err(stringify)?;
    let spectrogram = stft(&waveform, &StftConfig::default()).map_err(stringify)?;
    let path = out.unwrap_or_else(|| wav.with_extension("pgm"));
    write_pgm(&spectrogram, &path).map_err(stringify)?;
    println!("{}", path.display());
    Ok(())
}
