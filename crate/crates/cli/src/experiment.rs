//! Configured experiment runs: a key=value file names a built dataset,
//! the conditions to score, and parameter overrides; the run writes CSV
//! reports, a text table, the fully resolved config, and optional
//! spectrograms, all as a pure function of (config, seed).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use gazesep::dataset::{load_record_audio, DatasetManifest};
use gazesep::metrics::{
    condition_estimate, evaluate_set, Condition, EvalOptions, MetricReport, MetricsError,
};
use gazesep::rng::SplitMix64;
use gazesep::stft::{stft, write_pgm, StftConfig};
use gazesep::AttentionConfig;

/// Everything a run needs, with defaults already applied.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub manifest: PathBuf,
    pub out: PathBuf,
    pub conditions: Vec<Condition>,
    pub gamma: f64,
    pub tau: f64,
    pub gaze_region_fraction: f64,
    pub debounce_k: usize,
    pub window_length: usize,
    pub hop: usize,
    pub fft_size: usize,
    pub seed: u64,
    /// How many records get their per-condition spectrograms rendered.
    pub spectrograms: usize,
    pub pesq_command: Option<String>,
}

impl ExperimentConfig {
    /// Reads a key=value file. `seed` and `out` given on the command line
    /// take precedence over the file.
    pub fn from_file(
        path: &Path,
        seed: Option<u64>,
        out: Option<PathBuf>,
    ) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::from_text(&text, seed, out)
    }

    pub fn from_text(
        text: &str,
        seed: Option<u64>,
        out: Option<PathBuf>,
    ) -> Result<Self, String> {
        let pairs = parse_key_values(text)?;
        for key in pairs.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(format!("unknown config key {key:?}"));
            }
        }
        let get = |key: &str| pairs.get(key).map(String::as_str);
        let parse_num = |key: &str, default: f64| -> Result<f64, String> {
            match get(key) {
                Some(v) => v.parse().map_err(|_| format!("{key} = {v:?} is not a number")),
                None => Ok(default),
            }
        };
        let parse_int = |key: &str, default: usize| -> Result<usize, String> {
            match get(key) {
                Some(v) => v.parse().map_err(|_| format!("{key} = {v:?} is not an integer")),
                None => Ok(default),
            }
        };

        let manifest = PathBuf::from(get("manifest").ok_or("config needs manifest = <path>")?);
        let out = match out.or_else(|| get("out").map(PathBuf::from)) {
            Some(p) => p,
            None => return Err("config needs out = <dir> (or pass --out)".into()),
        };
        let conditions = match get("conditions") {
            Some(list) => list
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<Condition>().map_err(|e| e.to_string()))
                .collect::<Result<Vec<_>, _>>()?,
            None => Condition::ALL.to_vec(),
        };
        if conditions.is_empty() {
            return Err("conditions list is empty".into());
        }
        let seed = match seed {
            Some(s) => s,
            None => match get("seed") {
                Some(v) => v.parse().map_err(|_| format!("seed = {v:?} is not an integer"))?,
                None => 0,
            },
        };
        let pesq_command = get("pesq_command")
            .map(str::to_owned)
            .filter(|s| !s.is_empty());

        let cfg = Self {
            manifest,
            out,
            conditions,
            gamma: parse_num("gamma", 0.75)?,
            tau: parse_num("tau", 0.15)?,
            gaze_region_fraction: parse_num("gaze_region_fraction", 0.2)?,
            debounce_k: parse_int("debounce_k", 1)?,
            window_length: parse_int("window_length", 512)?,
            hop: parse_int("hop", 128)?,
            fft_size: parse_int("fft_size", 512)?,
            seed,
            spectrograms: parse_int("spectrograms", 0)?,
            pesq_command,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), String> {
        if !self.manifest.is_file() {
            return Err(format!("manifest {} does not exist", self.manifest.display()));
        }
        self.attention().validate().map_err(|e| e.to_string())?;
        self.stft().validate().map_err(|e| e.to_string())?;
        Ok(())
    }

    fn attention(&self) -> AttentionConfig {
        AttentionConfig {
            gamma: self.gamma,
            min_score_tau: self.tau,
            gaze_region_fraction: self.gaze_region_fraction,
            ..AttentionConfig::default()
        }
    }

    fn stft(&self) -> StftConfig {
        StftConfig {
            window_length: self.window_length,
            hop: self.hop,
            fft_size: self.fft_size,
        }
    }

    fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            conditions: self.conditions.clone(),
            attention: self.attention(),
            debounce_k: self.debounce_k,
            stft: self.stft(),
            pesq_command: self.pesq_command.clone(),
        }
    }

    /// The full configuration with every default expanded, in the same
    /// key=value syntax the parser accepts.
    pub fn resolved(&self) -> String {
        let conditions: Vec<&str> = self.conditions.iter().map(|c| c.as_str()).collect();
        let mut text = String::new();
        let mut put = |key: &str, value: String| {
            let _ = writeln!(text, "{key} = {value}");
        };
        put("conditions", conditions.join(","));
        put("debounce_k", self.debounce_k.to_string());
        put("fft_size", self.fft_size.to_string());
        put("gamma", self.gamma.to_string());
        put("gaze_region_fraction", self.gaze_region_fraction.to_string());
        put("hop", self.hop.to_string());
        put("manifest", self.manifest.display().to_string());
        put("out", self.out.display().to_string());
        put(
            "pesq_command",
            self.pesq_command.clone().unwrap_or_default(),
        );
        put("seed", self.seed.to_string());
        put("spectrograms", self.spectrograms.to_string());
        put("tau", self.tau.to_string());
        put("window_length", self.window_length.to_string());
        text
    }
}

const KNOWN_KEYS: [&str; 13] = [
    "conditions",
    "debounce_k",
    "fft_size",
    "gamma",
    "gaze_region_fraction",
    "hop",
    "manifest",
    "out",
    "pesq_command",
    "seed",
    "spectrograms",
    "tau",
    "window_length",
];

fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut pairs = BTreeMap::new();
    for (number, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value, got {raw:?}", number + 1))?;
        pairs.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(pairs)
}

/// Scores every record under every configured condition and writes
/// `per_record.csv`, `report.csv`, `report.txt`, `resolved_config.cfg`,
/// and spectrograms for a seeded sample of records into the output
/// directory. Identical configs produce byte-identical outputs.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MetricReport, String> {
    let manifest = DatasetManifest::load(&cfg.manifest).map_err(|e| e.to_string())?;
    let base = cfg.manifest.parent().unwrap_or_else(|| Path::new("."));
    let options = cfg.eval_options();
    let report = match evaluate_set(&manifest.records, base, &options) {
        Ok(report) => report,
        Err(MetricsError::AllRecordsFailed { failures }) => {
            for (id, message) in &failures {
                log::error!("{id}: {message}");
            }
            return Err(format!("all {} records failed to evaluate", failures.len()));
        }
        Err(e) => return Err(e.to_string()),
    };
    for (id, message) in &report.failures {
        log::warn!("record {id} skipped: {message}");
    }

    let io = |e: std::io::Error| format!("writing report: {e}");
    std::fs::create_dir_all(&cfg.out).map_err(io)?;
    std::fs::write(cfg.out.join("per_record.csv"), report.per_record_csv()).map_err(io)?;
    std::fs::write(cfg.out.join("report.csv"), report.to_csv()).map_err(io)?;
    std::fs::write(cfg.out.join("resolved_config.cfg"), cfg.resolved()).map_err(io)?;
    let mut text = report.to_table();
    text.push_str("\n# resolved config\n");
    text.push_str(&cfg.resolved());
    std::fs::write(cfg.out.join("report.txt"), text).map_err(io)?;

    if cfg.spectrograms > 0 {
        write_spectrograms(cfg, &manifest, base, &options)?;
    }
    Ok(report)
}

/// Renders per-condition spectrograms for a seed-chosen subset of records.
fn write_spectrograms(
    cfg: &ExperimentConfig,
    manifest: &DatasetManifest,
    base: &Path,
    options: &EvalOptions,
) -> Result<(), String> {
    let dir = cfg.out.join("spectrograms");
    std::fs::create_dir_all(&dir).map_err(|e| format!("writing report: {e}"))?;

    let mut order: Vec<usize> = (0..manifest.records.len()).collect();
    let mut rng = SplitMix64::new(cfg.seed);
    rng.shuffle(&mut order);
    order.truncate(cfg.spectrograms.min(manifest.records.len()));
    order.sort_unstable();

    for index in order {
        let record = &manifest.records[index];
        let audio = match load_record_audio(record, base) {
            Ok(audio) => audio,
            Err(e) => {
                log::warn!("spectrograms for {} skipped: {e}", record.id);
                continue;
            }
        };
        for &condition in &cfg.conditions {
            let estimate = match condition_estimate(&audio, condition, options) {
                Ok(estimate) => estimate,
                Err(e) => {
                    log::warn!("{} {condition} skipped: {e}", record.id);
                    continue;
                }
            };
            let spec = stft(&estimate, &options.stft).map_err(|e| e.to_string())?;
            let path = dir.join(format!("{}_{}.pgm", record.id, condition.as_str()));
            write_pgm(&spec, &path).map_err(|e| e.to_string())?;
        }
    }
    Ok(())
}
