//! Synthetic audiovisual scenes: face tracks, gaze traces, and ground truth.
//!
//! Faces rest on a horizontal line, evenly spaced; an optional per-frame
//! Gaussian drift moves each box as a random walk clamped to the frame. Gaze
//! samples follow the attended face's current center with Gaussian jitter.
//! An optional `switch_time` flips attention to the other track partway
//! through, which is the ground truth for speaker-switch experiments.
//!
//! Scenes serialize to TOML manifests that record the generator family, so a
//! stored seed regenerates the identical scene.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attention::{GazeSample, GazeTrace};
use crate::geometry::{BoundingBox, Point2D};
use crate::manifest::u64_string;
use crate::rng::{NormalSampler, SplitMix64, GENERATOR};

/// Nominal gaze sampling rate in Hz.
pub const GAZE_RATE: f64 = 120.0;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("invalid scene config: {0}")]
    InvalidConfig(String),
    #[error("infeasible layout: {0}")]
    Infeasible(String),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("scene manifest parse error: {0}")]
    Parse(String),
    #[error("scene manifest serialize error: {0}")]
    Serialize(String),
}

/// Parameters of a generated scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub frame_width: u32,
    pub frame_height: u32,
    pub fps: f64,
    /// Clip length in seconds; the scene has `floor(duration * fps)` frames.
    pub duration: f64,
    pub n_speakers: usize,
    /// Face box side as a fraction of frame height.
    pub face_size_fraction: f64,
    /// Standard deviation of gaze jitter around the attended center, pixels.
    pub jitter_sigma: f64,
    /// Per-frame standard deviation of the box random walk, pixels.
    pub box_motion_sigma: f64,
    /// When set, attention flips to the other track at this time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switch_time: Option<f64>,
    pub initial_target: usize,
    #[serde(with = "u64_string")]
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            frame_width: 1280,
            frame_height: 720,
            fps: 25.0,
            duration: 4.0,
            n_speakers: 2,
            face_size_fraction: 0.25,
            jitter_sigma: 8.0,
            box_motion_sigma: 0.0,
            switch_time: None,
            initial_target: 0,
            seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<(), SceneError> {
        let err = |msg: String| Err(SceneError::InvalidConfig(msg));
        if self.frame_width == 0 || self.frame_height == 0 {
            return err("frame dimensions must be positive".into());
        }
        if self.fps != 25.0 {
            return err(format!("fps is fixed at 25, got {}", self.fps));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return err(format!("duration {} not positive", self.duration));
        }
        if self.n_speakers == 0 {
            return err("need at least one speaker".into());
        }
        if !(self.face_size_fraction > 0.0 && self.face_size_fraction <= 1.0) {
            return err(format!(
                "face_size_fraction {} outside (0, 1]",
                self.face_size_fraction
            ));
        }
        if !(self.jitter_sigma >= 0.0 && self.jitter_sigma.is_finite())
            || !(self.box_motion_sigma >= 0.0 && self.box_motion_sigma.is_finite())
        {
            return err("noise sigmas must be finite and non-negative".into());
        }
        if let Some(st) = self.switch_time {
            if !(st > 0.0 && st < self.duration) {
                return err(format!("switch_time {st} outside (0, duration)"));
            }
            if self.n_speakers < 2 {
                return err("switch_time needs at least two speakers".into());
            }
        }
        if self.initial_target >= self.n_speakers {
            return err(format!(
                "initial_target {} out of range for {} speakers",
                self.initial_target, self.n_speakers
            ));
        }
        let side = self.face_size_fraction * self.frame_height as f64;
        let spacing = self.frame_width as f64 / self.n_speakers as f64;
        if side > spacing {
            return Err(SceneError::Infeasible(format!(
                "face side {side:.1} px exceeds the {spacing:.1} px spacing of \
                 {} rest positions",
                self.n_speakers
            )));
        }
        Ok(())
    }

    pub fn n_frames(&self) -> usize {
        clock_count(self.duration, self.fps)
    }
}

/// A generated scene: per-track face boxes, the gaze trace, and per-frame
/// ground-truth attended track ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub config: SceneConfig,
    pub tracks: Vec<Vec<BoundingBox>>,
    pub gaze: GazeTrace,
    pub attended_truth: Vec<usize>,
}

impl Scene {
    pub fn n_frames(&self) -> usize {
        self.attended_truth.len()
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        self.config.validate()?;
        let n = self.n_frames();
        if self.tracks.len() != self.config.n_speakers {
            return Err(SceneError::InvalidScene(format!(
                "{} tracks for {} speakers",
                self.tracks.len(),
                self.config.n_speakers
            )));
        }
        let w = self.config.frame_width as f64;
        let h = self.config.frame_height as f64;
        for (j, track) in self.tracks.iter().enumerate() {
            if track.len() != n {
                return Err(SceneError::InvalidScene(format!(
                    "track {j} has {} boxes, expected {n}",
                    track.len()
                )));
            }
            for (f, b) in track.iter().enumerate() {
                if b.x_min() < 0.0 || b.y_min() < 0.0 || b.x_max() > w || b.y_max() > h {
                    return Err(SceneError::InvalidScene(format!(
                        "track {j} frame {f} box leaves the frame"
                    )));
                }
            }
        }
        if let Some(&id) = self.attended_truth.iter().find(|&&id| id >= self.tracks.len()) {
            return Err(SceneError::InvalidScene(format!(
                "attended_truth id {id} out of range"
            )));
        }
        let changes = self
            .attended_truth
            .windows(2)
            .filter(|w| w[0] != w[1])
            .count();
        if changes > 1 {
            return Err(SceneError::InvalidScene(format!(
                "attended_truth changes {changes} times"
            )));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String, SceneError> {
        let manifest = SceneManifest {
            generator: GENERATOR.to_string(),
            attended_truth: self.attended_truth.clone(),
            tracks: self.tracks.clone(),
            config: self.config.clone(),
            gaze: self.gaze.clone(),
        };
        toml::to_string(&manifest).map_err(|e| SceneError::Serialize(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self, SceneError> {
        let manifest: SceneManifest =
            toml::from_str(text).map_err(|e| SceneError::Parse(e.to_string()))?;
        let scene = Scene {
            config: manifest.config,
            tracks: manifest.tracks,
            gaze: manifest.gaze,
            attended_truth: manifest.attended_truth,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn save(&self, path: &Path) -> Result<(), SceneError> {
        let text = self.to_toml()?;
        fs::write(path, text).map_err(|source| SceneError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, SceneError> {
        let text = fs::read_to_string(path).map_err(|source| SceneError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct SceneManifest {
    generator: String,
    attended_truth: Vec<usize>,
    tracks: Vec<Vec<BoundingBox>>,
    config: SceneConfig,
    gaze: GazeTrace,
}

/// Counts whole clock ticks in `duration` seconds at `rate` Hz. The small
/// tolerance keeps tick-aligned durations from losing the final tick to
/// floating-point rounding.
fn clock_count(duration: f64, rate: f64) -> usize {
    (duration * rate + 1e-9).floor() as usize
}

/// Generates a scene from a validated config; identical configs yield
/// identical scenes.
pub fn generate_scene(cfg: &SceneConfig) -> Result<Scene, SceneError> {
    cfg.validate()?;
    let n_frames = cfg.n_frames();
    if n_frames == 0 {
        return Err(SceneError::InvalidConfig(format!(
            "duration {} s is shorter than one video frame",
            cfg.duration
        )));
    }
    let n_gaze = clock_count(cfg.duration, GAZE_RATE);
    let w = cfg.frame_width as f64;
    let h = cfg.frame_height as f64;
    let side = cfg.face_size_fraction * h;
    let half = side / 2.0;

    let mut root = SplitMix64::new(cfg.seed);
    let mut drift = NormalSampler::new(root.fork());
    let mut jitter = NormalSampler::new(root.fork());

    let mut tracks = Vec::with_capacity(cfg.n_speakers);
    for j in 0..cfg.n_speakers {
        let rest_x = w * (2 * j + 1) as f64 / (2 * cfg.n_speakers) as f64;
        let rest_y = h / 2.0;
        let mut boxes = Vec::with_capacity(n_frames);
        let (mut cx, mut cy) = (rest_x, rest_y);
        for f in 0..n_frames {
            if f > 0 {
                cx = (cx + cfg.box_motion_sigma * drift.sample()).clamp(half, w - half);
                cy = (cy + cfg.box_motion_sigma * drift.sample()).clamp(half, h - half);
            }
            boxes.push(
                BoundingBox::new(cx - half, cy - half, cx + half, cy + half)
                    .expect("clamped face box is valid"),
            );
        }
        tracks.push(boxes);
    }

    let flip_frame = cfg.switch_time.map(|st| clock_count(st, cfg.fps));
    let other = (cfg.initial_target + 1) % cfg.n_speakers;
    let attended_truth: Vec<usize> = (0..n_frames)
        .map(|f| match flip_frame {
            Some(flip) if f >= flip => other,
            _ => cfg.initial_target,
        })
        .collect();

    let mut samples = Vec::with_capacity(n_gaze);
    for k in 0..n_gaze {
        let t = k as f64 / GAZE_RATE;
        let frame = (clock_count(t, cfg.fps)).min(n_frames - 1);
        let attended = attended_truth[frame];
        let b = &tracks[attended][frame];
        let cx = (b.x_min() + b.x_max()) / 2.0;
        let cy = (b.y_min() + b.y_max()) / 2.0;
        let point = Point2D::new(
            cx + cfg.jitter_sigma * jitter.sample(),
            cy + cfg.jitter_sigma * jitter.sample(),
        );
        samples.push(GazeSample::new(t, point, true));
    }
    let gaze = GazeTrace::new(samples, GAZE_RATE)
        .map_err(|e| SceneError::InvalidScene(e.to_string()))?;

    Ok(Scene {
        config: cfg.clone(),
        tracks,
        gaze,
        attended_truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attention::{debounce, track_attention};
    use crate::geometry::AttentionConfig;

    #[test]
    fn default_layout_matches_expected_rest_boxes() {
        let scene = generate_scene(&SceneConfig {
            jitter_sigma: 0.0,
            ..SceneConfig::default()
        })
        .unwrap();
        assert_eq!(scene.n_frames(), 100);
        assert_eq!(scene.gaze.len(), 480);
        let a = &scene.tracks[0][0];
        let b = &scene.tracks[1][0];
        assert_eq!(
            (a.x_min(), a.y_min(), a.x_max(), a.y_max()),
            (230.0, 270.0, 410.0, 450.0)
        );
        assert_eq!(
            (b.x_min(), b.y_min(), b.x_max(), b.y_max()),
            (870.0, 270.0, 1050.0, 450.0)
        );
        assert_eq!(a.width(), 180.0);
        scene.validate().unwrap();
    }

    #[test]
    fn zero_jitter_gaze_sits_on_attended_center() {
        let scene = generate_scene(&SceneConfig {
            jitter_sigma: 0.0,
            ..SceneConfig::default()
        })
        .unwrap();
        for s in scene.gaze.samples() {
            assert_eq!((s.point.x, s.point.y), (320.0, 360.0));
            assert!(s.valid);
        }
    }

    #[test]
    fn same_seed_reproduces_different_seed_differs() {
        let cfg = SceneConfig {
            seed: 11,
            box_motion_sigma: 1.5,
            ..SceneConfig::default()
        };
        let a = generate_scene(&cfg).unwrap();
        let b = generate_scene(&cfg).unwrap();
        assert_eq!(a, b);
        let c = generate_scene(&SceneConfig { seed: 12, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn switch_time_flips_truth_once() {
        let scene = generate_scene(&SceneConfig {
            switch_time: Some(2.0),
            ..SceneConfig::default()
        })
        .unwrap();
        assert!(scene.attended_truth[..50].iter().all(|&id| id == 0));
        assert!(scene.attended_truth[50..].iter().all(|&id| id == 1));
        scene.validate().unwrap();
    }

    #[test]
    fn overlapping_rest_layout_is_rejected() {
        let cfg = SceneConfig {
            n_speakers: 8,
            face_size_fraction: 0.9,
            ..SceneConfig::default()
        };
        assert!(matches!(
            generate_scene(&cfg),
            Err(SceneError::Infeasible(_))
        ));
    }

    #[test]
    fn box_motion_stays_in_frame() {
        let scene = generate_scene(&SceneConfig {
            box_motion_sigma: 25.0,
            duration: 8.0,
            seed: 3,
            ..SceneConfig::default()
        })
        .unwrap();
        scene.validate().unwrap();
    }

    #[test]
    fn manifest_roundtrip_preserves_scene() {
        let scene = generate_scene(&SceneConfig {
            seed: 21,
            box_motion_sigma: 2.0,
            switch_time: Some(1.0),
            ..SceneConfig::default()
        })
        .unwrap();
        let text = scene.to_toml().unwrap();
        assert!(text.contains("generator"));
        let back = Scene::from_toml(&text).unwrap();
        assert_eq!(back, scene);
    }

    #[test]
    fn manifest_rejects_out_of_range_truth() {
        let mut scene = generate_scene(&SceneConfig::default()).unwrap();
        scene.attended_truth[3] = 9;
        assert!(scene.validate().is_err());
    }

    #[test]
    fn tracking_constant_fixation_yields_all_target() {
        let scene = generate_scene(&SceneConfig {
            jitter_sigma: 0.0,
            ..SceneConfig::default()
        })
        .unwrap();
        let trace = track_attention(&scene, &AttentionConfig::default()).unwrap();
        assert_eq!(trace.per_frame, vec![Some(0); 100]);
    }

    #[test]
    fn tracking_follows_a_switch_at_frame_50() {
        let scene = generate_scene(&SceneConfig {
            jitter_sigma: 0.0,
            switch_time: Some(2.0),
            ..SceneConfig::default()
        })
        .unwrap();
        let trace = track_attention(&scene, &AttentionConfig::default()).unwrap();
        assert!(trace.per_frame[..50].iter().all(|&s| s == Some(0)));
        assert!(trace.per_frame[50..].iter().all(|&s| s == Some(1)));
    }

    #[test]
    fn tracking_holds_through_dropouts() {
        let mut scene = generate_scene(&SceneConfig {
            jitter_sigma: 0.0,
            ..SceneConfig::default()
        })
        .unwrap();
        // Invalidate every sample in frames 10..20.
        let samples: Vec<GazeSample> = scene
            .gaze
            .samples()
            .iter()
            .map(|s| {
                let frame = (s.t * 25.0) as usize;
                let mut s = *s;
                if (10..20).contains(&frame) {
                    s.valid = false;
                }
                s
            })
            .collect();
        scene.gaze = GazeTrace::new(samples, GAZE_RATE).unwrap();
        let trace = track_attention(&scene, &AttentionConfig::default()).unwrap();
        assert_eq!(trace.per_frame, vec![Some(0); 100]);
    }

    #[test]
    fn tracking_holds_through_subthreshold_frames() {
        // Small faces so that a far-corner gaze scores below tau.
        let mut scene = generate_scene(&SceneConfig {
            jitter_sigma: 0.0,
            face_size_fraction: 0.1,
            ..SceneConfig::default()
        })
        .unwrap();
        let samples: Vec<GazeSample> = scene
            .gaze
            .samples()
            .iter()
            .map(|s| {
                let frame = (s.t * 25.0) as usize;
                let mut s = *s;
                if (30..40).contains(&frame) {
                    s.point = Point2D::new(640.0, 719.0);
                }
                s
            })
            .collect();
        scene.gaze = GazeTrace::new(samples, GAZE_RATE).unwrap();
        let cfg = AttentionConfig::default();
        let trace = track_attention(&scene, &cfg).unwrap();
        assert_eq!(trace.per_frame, vec![Some(0); 100]);
    }

    #[test]
    fn tracking_with_debounce_delays_the_commit() {
        let scene = generate_scene(&SceneConfig {
            jitter_sigma: 0.0,
            switch_time: Some(2.0),
            ..SceneConfig::default()
        })
        .unwrap();
        let raw = track_attention(&scene, &AttentionConfig::default()).unwrap();
        let smoothed = debounce(&raw, 3);
        assert!(smoothed.per_frame[..52].iter().all(|&s| s == Some(0)));
        assert!(smoothed.per_frame[52..].iter().all(|&s| s == Some(1)));
        let identity = debounce(&raw, 1);
        assert_eq!(identity, raw);
    }
}
