//! Corpus construction: duration pairing, mixture builds, and manifests.
//!
//! Input is a CSV of utterances (`id,speaker_id,audio_path,duration`). The
//! pairer sorts by duration and pairs each utterance with the nearest
//! distinct-speaker neighbor, then emits both directions so every utterance
//! serves once as target and once as interferer. The builder mixes each
//! directed pair at equal gain, optionally appends a speaker-switch repeat
//! with a silent gap, generates a matching scene, and writes a TOML manifest
//! whose audio and scene paths are relative to the manifest itself.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{
    self, aligned_interferer, build_switch_mixture, build_switch_reference, mix_equal_gain,
    trim_or_pad, AudioError, Waveform, DEFAULT_SWITCH_GAP,
};
use crate::manifest::u64_string;
use crate::rng::{SplitMix64, GENERATOR};
use crate::scene::{generate_scene, Scene, SceneConfig, SceneError};
use crate::wav::{read_wav, write_wav, WavError};
use crate::{SAMPLES_PER_FRAME, SAMPLE_RATE};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: csv error: {detail}")]
    Csv { path: PathBuf, detail: String },
    #[error("invalid utterance record: {0}")]
    InvalidRecord(String),
    #[error("no distinct-speaker pairing exists")]
    NoPairs,
    #[error("invalid build options: {0}")]
    InvalidOptions(String),
    #[error("all {0} records failed to build")]
    AllRecordsFailed(usize),
    #[error("dataset manifest parse error: {0}")]
    Parse(String),
    #[error("dataset manifest serialize error: {0}")]
    Serialize(String),
    #[error("record {id}: {detail}")]
    BadRecord { id: String, detail: String },
    #[error(transparent)]
    Wav(#[from] WavError),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

/// One source utterance from the input CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceRecord {
    pub id: String,
    pub speaker_id: String,
    pub audio_path: PathBuf,
    pub duration: f64,
}

/// Switch metadata of a mixture: gap length and the video frame at which
/// ground-truth attention flips (the gap midpoint).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchInfo {
    pub gap_seconds: f64,
    pub switch_frame: usize,
}

/// One built mixture; audio and scene paths are relative to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureRecord {
    pub id: String,
    pub mixture_path: PathBuf,
    pub reference_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene_ref: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switch: Option<SwitchInfo>,
    pub target: UtteranceRecord,
    pub interferer: UtteranceRecord,
}

/// Knobs of [`build_dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct BuildOptions {
    pub seed: u64,
    pub with_scenes: bool,
    /// Fraction of directed pairs that get the speaker-switch treatment.
    pub switch_fraction: f64,
    /// Silent gap between the two halves of a switch mixture, seconds.
    pub gap: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            with_scenes: true,
            switch_fraction: 0.0,
            gap: DEFAULT_SWITCH_GAP,
        }
    }
}

/// On-disk index of a built dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub generator: String,
    #[serde(with = "u64_string")]
    pub seed: u64,
    pub sample_rate: u32,
    pub records: Vec<MixtureRecord>,
}

impl DatasetManifest {
    pub fn to_toml(&self) -> Result<String, DatasetError> {
        toml::to_string(self).map_err(|e| DatasetError::Serialize(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self, DatasetError> {
        toml::from_str(text).map_err(|e| DatasetError::Parse(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<(), DatasetError> {
        fs::write(path, self.to_toml()?).map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }
}

/// Reads and validates the `id,speaker_id,audio_path,duration` CSV.
pub fn read_utterance_csv(path: &Path) -> Result<Vec<UtteranceRecord>, DatasetError> {
    let csv_err = |detail: String| DatasetError::Csv {
        path: path.to_path_buf(),
        detail,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(e.to_string()))?;
    let mut records = Vec::new();
    for row in reader.deserialize::<UtteranceRecord>() {
        records.push(row.map_err(|e| csv_err(e.to_string()))?);
    }
    let mut seen = BTreeSet::new();
    for r in &records {
        if !(r.duration.is_finite() && r.duration > 0.0) {
            return Err(DatasetError::InvalidRecord(format!(
                "utterance {} has duration {}",
                r.id, r.duration
            )));
        }
        if !seen.insert(r.id.clone()) {
            return Err(DatasetError::InvalidRecord(format!(
                "duplicate utterance id {}",
                r.id
            )));
        }
    }
    Ok(records)
}

/// Pairs utterances of similar duration across distinct speakers and emits
/// both directions of every base pair.
///
/// Records are sorted by duration; each not-yet-paired record takes the
/// nearest later distinct-speaker record, preferring one that is itself
/// unpaired, and falls back to the nearest earlier distinct-speaker record
/// at the end of the list. A record with no distinct-speaker partner at all
/// is dropped with a warning.
pub fn pair_utterances(
    records: &[UtteranceRecord],
) -> Result<Vec<(UtteranceRecord, UtteranceRecord)>, DatasetError> {
    let distinct: BTreeSet<&str> = records.iter().map(|r| r.speaker_id.as_str()).collect();
    if records.len() < 2 || distinct.len() < 2 {
        return Err(DatasetError::NoPairs);
    }
    let mut sorted: Vec<&UtteranceRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.duration.total_cmp(&b.duration).then(a.id.cmp(&b.id)));

    let mut used = vec![false; sorted.len()];
    let mut base: Vec<(usize, usize)> = Vec::new();
    for i in 0..sorted.len() {
        if used[i] {
            continue;
        }
        let differs = |j: usize| sorted[j].speaker_id != sorted[i].speaker_id;
        let forward_unused = (i + 1..sorted.len()).find(|&j| differs(j) && !used[j]);
        let forward_used = (i + 1..sorted.len()).find(|&j| differs(j));
        let backward = (0..i).rev().find(|&j| differs(j));
        match forward_unused.or(forward_used).or(backward) {
            Some(j) => {
                used[i] = true;
                used[j] = true;
                base.push((i, j));
            }
            None => log::warn!(
                "utterance {} has no distinct-speaker partner; dropped",
                sorted[i].id
            ),
        }
    }
    if base.is_empty() {
        return Err(DatasetError::NoPairs);
    }
    let mut pairs = Vec::with_capacity(2 * base.len());
    for (i, j) in base {
        pairs.push((sorted[i].clone(), sorted[j].clone()));
        pairs.push((sorted[j].clone(), sorted[i].clone()));
    }
    Ok(pairs)
}

fn absolute(path: &Path) -> PathBuf {
    std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf())
}

/// Builds one directed pair into waveforms plus switch metadata.
///
/// The target is trimmed down to a whole number of video frames so every
/// scene, selection, and gating index stays integer-exact; the interferer is
/// trimmed or padded to match.
fn build_pair_audio(
    target: &Waveform,
    interferer: &Waveform,
    switch_gap: Option<f64>,
) -> Result<(Waveform, Waveform, [Waveform; 2], Option<SwitchInfo>), DatasetError> {
    let len = target.len() - target.len() % SAMPLES_PER_FRAME;
    if len == 0 {
        return Err(DatasetError::InvalidRecord(
            "target audio is shorter than one video frame".into(),
        ));
    }
    let x_t = trim_or_pad(target, len);
    let x_i = aligned_interferer(interferer, len);
    let mix = mix_equal_gain(&x_t, &x_i)?;

    match switch_gap {
        None => Ok((mix, x_t.clone(), [x_t, x_i], None)),
        Some(gap) => {
            let gap_samples = audio::frame_aligned_gap(SAMPLE_RATE, gap)?;
            let mixture = build_switch_mixture(&mix, gap)?;
            let reference = build_switch_reference(&x_t, &x_i, gap)?;
            let sources = [
                build_switch_mixture(&x_t, gap)?,
                build_switch_mixture(&x_i, gap)?,
            ];
            assert_eq!(mixture.len(), 2 * len + gap_samples);
            assert_eq!(mixture.len() % SAMPLES_PER_FRAME, 0);
            let switch_frame = (len + gap_samples / 2) / SAMPLES_PER_FRAME;
            Ok((
                mixture,
                reference,
                sources,
                Some(SwitchInfo {
                    gap_seconds: gap,
                    switch_frame,
                }),
            ))
        }
    }
}

fn scene_for_record(
    mixture_len: usize,
    switch: Option<&SwitchInfo>,
    seed: u64,
) -> Result<Scene, DatasetError> {
    let duration = mixture_len as f64 / SAMPLE_RATE as f64;
    let switch_time = match switch {
        Some(s) => {
            // Attention flips at the midpoint of the silent gap.
            let gap_samples = audio::frame_aligned_gap(SAMPLE_RATE, s.gap_seconds)?;
            let base_len = (mixture_len - gap_samples) / 2;
            Some((base_len + gap_samples / 2) as f64 / SAMPLE_RATE as f64)
        }
        None => None,
    };
    let cfg = SceneConfig {
        duration,
        switch_time,
        seed,
        ..SceneConfig::default()
    };
    Ok(generate_scene(&cfg)?)
}

/// Builds every directed pair into mixture/reference audio, optional scenes,
/// and a manifest at `out_dir/manifest.toml`. Identical inputs and options
/// produce byte-identical outputs.
pub fn build_dataset(
    records: &[UtteranceRecord],
    out_dir: &Path,
    options: &BuildOptions,
) -> Result<Vec<MixtureRecord>, DatasetError> {
    if !(0.0..=1.0).contains(&options.switch_fraction) {
        return Err(DatasetError::InvalidOptions(format!(
            "switch_fraction {} outside [0, 1]",
            options.switch_fraction
        )));
    }
    audio::frame_aligned_gap(SAMPLE_RATE, options.gap)?;

    let pairs = pair_utterances(records)?;
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source: std::io::Error| DatasetError::Io { path, source }
    };
    let audio_dir = out_dir.join("audio");
    fs::create_dir_all(&audio_dir).map_err(io_err(&audio_dir))?;
    let scene_dir = out_dir.join("scenes");
    if options.with_scenes {
        fs::create_dir_all(&scene_dir).map_err(io_err(&scene_dir))?;
    }

    let mut rng = SplitMix64::new(options.seed);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    rng.shuffle(&mut order);
    let n_switch = (options.switch_fraction * pairs.len() as f64).round() as usize;
    let switch_set: BTreeSet<usize> = order.into_iter().take(n_switch).collect();
    let scene_seeds: Vec<u64> = pairs.iter().map(|_| rng.next_u64()).collect();

    let mut built = Vec::new();
    let mut failures = Vec::new();
    for (i, (target, interferer)) in pairs.iter().enumerate() {
        let id = format!("{}__{}", target.id, interferer.id);
        let result = (|| -> Result<MixtureRecord, DatasetError> {
            let check_rate = |w: &Waveform, which: &UtteranceRecord| {
                if w.rate != SAMPLE_RATE {
                    return Err(DatasetError::InvalidRecord(format!(
                        "utterance {} has rate {} Hz, need {}",
                        which.id, w.rate, SAMPLE_RATE
                    )));
                }
                Ok(())
            };
            let tgt_wave = read_wav(&target.audio_path)?;
            check_rate(&tgt_wave, target)?;
            let intf_wave = read_wav(&interferer.audio_path)?;
            check_rate(&intf_wave, interferer)?;

            let gap = switch_set.contains(&i).then_some(options.gap);
            let (mixture, reference, _, switch) = build_pair_audio(&tgt_wave, &intf_wave, gap)?;

            let mixture_rel = PathBuf::from(format!("audio/{id}_mixture.wav"));
            let reference_rel = PathBuf::from(format!("audio/{id}_reference.wav"));
            write_wav(&out_dir.join(&mixture_rel), &mixture)?;
            write_wav(&out_dir.join(&reference_rel), &reference)?;

            let scene_ref = if options.with_scenes {
                let scene = scene_for_record(mixture.len(), switch.as_ref(), scene_seeds[i])?;
                let rel = PathBuf::from(format!("scenes/{id}_scene.toml"));
                scene.save(&out_dir.join(&rel))?;
                Some(rel)
            } else {
                None
            };

            let mut target = target.clone();
            target.audio_path = absolute(&target.audio_path);
            let mut interferer = interferer.clone();
            interferer.audio_path = absolute(&interferer.audio_path);
            Ok(MixtureRecord {
                id: id.clone(),
                mixture_path: mixture_rel,
                reference_path: reference_rel,
                scene_ref,
                switch,
                target,
                interferer,
            })
        })();
        match result {
            Ok(record) => built.push(record),
            Err(e) => {
                log::warn!("record {id} failed to build: {e}");
                failures.push(id);
            }
        }
    }
    if built.is_empty() {
        return Err(DatasetError::AllRecordsFailed(pairs.len()));
    }

    let manifest = DatasetManifest {
        generator: GENERATOR.to_string(),
        seed: options.seed,
        sample_rate: SAMPLE_RATE,
        records: built.clone(),
    };
    manifest.save(&out_dir.join("manifest.toml"))?;
    Ok(built)
}

/// Everything evaluation needs for one record, loaded and reconstructed.
#[derive(Debug, Clone)]
pub struct RecordAudio {
    pub mixture: Waveform,
    pub reference: Waveform,
    /// Clean per-track signals aligned to the mixture timeline; track 0 is
    /// the target speaker, track 1 the interferer.
    pub sources: [Waveform; 2],
    pub scene: Option<Scene>,
}

/// Loads a record's audio and scene, rebuilding the aligned clean sources
/// from the original utterance files.
pub fn load_record_audio(record: &MixtureRecord, base: &Path) -> Result<RecordAudio, DatasetError> {
    let bad = |detail: String| DatasetError::BadRecord {
        id: record.id.clone(),
        detail,
    };
    let mixture = read_wav(&base.join(&record.mixture_path))?;
    let reference = read_wav(&base.join(&record.reference_path))?;
    if mixture.rate != SAMPLE_RATE || reference.rate != SAMPLE_RATE {
        return Err(bad("mixture or reference is not 16 kHz".into()));
    }

    let gap_samples = match &record.switch {
        Some(s) => audio::frame_aligned_gap(SAMPLE_RATE, s.gap_seconds)?,
        None => 0,
    };
    let base_len = match &record.switch {
        Some(_) => {
            let body = mixture.len().checked_sub(gap_samples).ok_or_else(|| {
                bad("mixture shorter than its switch gap".into())
            })?;
            if body % 2 != 0 {
                return Err(bad("switch mixture length minus gap is odd".into()));
            }
            body / 2
        }
        None => mixture.len(),
    };
    if reference.len() != mixture.len() {
        return Err(bad(format!(
            "reference has {} samples, mixture {}",
            reference.len(),
            mixture.len()
        )));
    }

    let x_t = trim_or_pad(&read_wav(&record.target.audio_path)?, base_len);
    let x_i = aligned_interferer(&read_wav(&record.interferer.audio_path)?, base_len);
    let sources = match &record.switch {
        Some(s) => [
            build_switch_mixture(&x_t, s.gap_seconds)?,
            build_switch_mixture(&x_i, s.gap_seconds)?,
        ],
        None => [x_t, x_i],
    };
    if sources[0].len() != mixture.len() {
        return Err(bad(format!(
            "reconstructed sources have {} samples, mixture {}",
            sources[0].len(),
            mixture.len()
        )));
    }

    let scene = match &record.scene_ref {
        Some(rel) => {
            let scene = Scene::load(&base.join(rel))?;
            if scene.n_frames() * SAMPLES_PER_FRAME != mixture.len() {
                return Err(bad(format!(
                    "scene covers {} frames, mixture needs {}",
                    scene.n_frames(),
                    mixture.len() / SAMPLES_PER_FRAME
                )));
            }
            Some(scene)
        }
        None => None,
    };
    Ok(RecordAudio {
        mixture,
        reference,
        sources,
        scene,
    })
}
