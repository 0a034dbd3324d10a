//! Gaze-guided target speaker selection and oracle speech enhancement.
//!
//! The crate covers the full desk-scale pipeline: face/gaze geometry and
//! target scoring, gaze-to-video attention tracing, synthetic scene
//! simulation, waveform mixing, STFT analysis with ideal-ratio-mask
//! enhancement gated by the attention trace, STOI / SI-SDR metrics, and a
//! dataset builder that turns a WAV manifest into mixture records.
//!
//! Audio is mono 16 kHz throughout; video runs at 25 frames per second, so
//! one video frame spans exactly 640 audio samples.

pub mod attention;
pub mod audio;
pub mod dataset;
pub mod enhance;
pub mod geometry;
pub(crate) mod manifest;
pub mod metrics;
pub mod rng;
pub mod scene;
pub mod stft;
pub mod synth;
pub mod wav;

pub use attention::{
    debounce, resample_gaze, track_attention, AttentionError, GazeSample, GazeTrace,
    SelectionTrace,
};
pub use audio::{
    add_noise_snr, aligned_interferer, build_switch_mixture, build_switch_reference, clip,
    mix_equal_gain, trim_or_pad, AudioError, Waveform, DEFAULT_SWITCH_GAP,
};
pub use dataset::{
    build_dataset, load_record_audio, pair_utterances, read_utterance_csv, BuildOptions,
    DatasetError, DatasetManifest, MixtureRecord, RecordAudio, SwitchInfo, UtteranceRecord,
};
pub use enhance::{
    fixed_target_enhance, gaze_gated_enhance, irm, EnhanceError, MaskSequence, IRM_EPSILON,
};
pub use geometry::{
    face_center, gaze_region, inverse_distance, iou, match_score, select_target, AttentionConfig,
    BoundingBox, GeometryError, Point2D,
};
pub use metrics::{
    evaluate_record, evaluate_set, si_sdr, stoi, Condition, EvalOptions, MetricReport, MetricRow,
    MetricsError, RecordScores,
};
pub use scene::{generate_scene, Scene, SceneConfig, SceneError};
pub use stft::{istft, spectrogram_pgm, stft, write_pgm, ComplexSpectrogram, StftConfig, StftError};
pub use wav::{read_wav, write_wav, WavError};

/// Audio sample rate of the whole pipeline, in Hz.
pub const SAMPLE_RATE: u32 = 16_000;

/// Video frame rate of the whole pipeline, in frames per second.
pub const VIDEO_FPS: f64 = 25.0;

/// Audio samples per video frame (16000 / 25).
pub const SAMPLES_PER_FRAME: usize = 640;
