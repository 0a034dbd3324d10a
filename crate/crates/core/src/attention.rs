//! Gaze resampling to the video frame clock and attended-track tracing.
//!
//! Raw gaze arrives at a nominal 120 Hz with per-sample validity flags. Each
//! video frame takes the coordinate-wise median of the valid samples in its
//! window; empty windows carry the previous frame's value forward. The traced
//! selection holds the last chosen track across dropouts and sub-threshold
//! frames, and an optional debounce suppresses short excursions.

use serde::de::{self, SeqAccess, Visitor};
use serde::ser::SerializeTuple;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::geometry::{select_target, AttentionConfig, Point2D};
use crate::scene::Scene;

#[derive(Debug, Error)]
pub enum AttentionError {
    #[error("gaze trace invalid: {0}")]
    InvalidTrace(String),
    #[error("scene frame shapes disagree: {0}")]
    FrameCountMismatch(String),
    #[error("selection trace line {line} malformed: {text:?}")]
    MalformedTraceLine { line: usize, text: String },
}

/// One gaze measurement: timestamp in seconds, frame-pixel point, validity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GazeSample {
    pub t: f64,
    pub point: Point2D,
    pub valid: bool,
}

impl GazeSample {
    pub fn new(t: f64, point: Point2D, valid: bool) -> Self {
        Self { t, point, valid }
    }
}

impl Serialize for GazeSample {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        // Flat [t, x, y, valid] row; validity is stored as 0.0 / 1.0 so the
        // array stays homogeneous for strict TOML writers.
        let mut tup = serializer.serialize_tuple(4)?;
        tup.serialize_element(&self.t)?;
        tup.serialize_element(&self.point.x)?;
        tup.serialize_element(&self.point.y)?;
        tup.serialize_element(&if self.valid { 1.0f64 } else { 0.0f64 })?;
        tup.end()
    }
}

impl<'de> Deserialize<'de> for GazeSample {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct SampleVisitor;

        impl<'de> Visitor<'de> for SampleVisitor {
            type Value = GazeSample;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("an array [t, x, y, valid]")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Self::Value, A::Error> {
                let mut vals = [0.0f64; 4];
                for (i, v) in vals.iter_mut().enumerate() {
                    *v = seq
                        .next_element()?
                        .ok_or_else(|| de::Error::invalid_length(i, &self))?;
                }
                Ok(GazeSample::new(
                    vals[0],
                    Point2D::new(vals[1], vals[2]),
                    vals[3] != 0.0,
                ))
            }
        }

        deserializer.deserialize_tuple(4, SampleVisitor)
    }
}

/// Time-ordered gaze samples with their nominal sampling rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GazeTrace {
    pub nominal_rate: f64,
    samples: Vec<GazeSample>,
}

impl<'de> Deserialize<'de> for GazeTrace {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct RawTrace {
            nominal_rate: f64,
            samples: Vec<GazeSample>,
        }
        let raw = RawTrace::deserialize(deserializer)?;
        GazeTrace::new(raw.samples, raw.nominal_rate)
            .map_err(|e| serde::de::Error::custom(e.to_string()))
    }
}

impl GazeTrace {
    /// Validates finiteness, non-negative strictly increasing timestamps,
    /// and a positive nominal rate.
    pub fn new(samples: Vec<GazeSample>, nominal_rate: f64) -> Result<Self, AttentionError> {
        if !(nominal_rate > 0.0 && nominal_rate.is_finite()) {
            return Err(AttentionError::InvalidTrace(format!(
                "nominal rate {nominal_rate} not positive"
            )));
        }
        let mut prev = f64::NEG_INFINITY;
        for (i, s) in samples.iter().enumerate() {
            if !s.t.is_finite() || s.t < 0.0 || !s.point.is_finite() {
                return Err(AttentionError::InvalidTrace(format!(
                    "sample {i} has non-finite or negative fields"
                )));
            }
            if s.t <= prev {
                return Err(AttentionError::InvalidTrace(format!(
                    "timestamps not strictly increasing at sample {i}"
                )));
            }
            prev = s.t;
        }
        Ok(Self {
            nominal_rate,
            samples,
        })
    }

    pub fn samples(&self) -> &[GazeSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Per-video-frame track selection; `None` marks frames with no target.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionTrace {
    pub per_frame: Vec<Option<usize>>,
    pub fps: f64,
}

impl SelectionTrace {
    pub fn new(per_frame: Vec<Option<usize>>, fps: f64) -> Self {
        Self { per_frame, fps }
    }

    /// A trace that selects the same value on every frame.
    pub fn constant(value: Option<usize>, n_frames: usize, fps: f64) -> Self {
        Self {
            per_frame: vec![value; n_frames],
            fps,
        }
    }

    pub fn len(&self) -> usize {
        self.per_frame.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_frame.is_empty()
    }

    /// Renders `frame_index,track_id` rows; `-1` stands for no selection.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (f, sel) in self.per_frame.iter().enumerate() {
            let id = sel.map(|i| i as i64).unwrap_or(-1);
            out.push_str(&format!("{f},{id}\n"));
        }
        out
    }

    /// Parses the `to_text` format, requiring consecutive frame indices.
    pub fn from_text(text: &str, fps: f64) -> Result<Self, AttentionError> {
        let mut per_frame = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = || AttentionError::MalformedTraceLine {
                line: lineno + 1,
                text: line.to_string(),
            };
            let (frame, id) = line.split_once(',').ok_or_else(bad)?;
            let frame: usize = frame.trim().parse().map_err(|_| bad())?;
            let id: i64 = id.trim().parse().map_err(|_| bad())?;
            if frame != per_frame.len() || id < -1 {
                return Err(bad());
            }
            per_frame.push(if id < 0 { None } else { Some(id as usize) });
        }
        Ok(Self { per_frame, fps })
    }
}

/// Resamples a gaze trace onto `n_frames` video-frame windows.
///
/// Frame `f` covers `[f/fps, (f+1)/fps)` and yields the coordinate-wise
/// median of its valid samples. Empty windows repeat the previous frame's
/// value; frames before the first valid sample stay `None`.
pub fn resample_gaze(trace: &GazeTrace, fps: f64, n_frames: usize) -> Vec<Option<Point2D>> {
    let mut out: Vec<Option<Point2D>> = Vec::with_capacity(n_frames);
    let samples = trace.samples();
    let mut cursor = 0usize;
    for f in 0..n_frames {
        let t0 = f as f64 / fps;
        let t1 = (f + 1) as f64 / fps;
        while cursor < samples.len() && samples[cursor].t < t0 {
            cursor += 1;
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut i = cursor;
        while i < samples.len() && samples[i].t < t1 {
            if samples[i].valid {
                xs.push(samples[i].point.x);
                ys.push(samples[i].point.y);
            }
            i += 1;
        }
        cursor = i;
        let value = if xs.is_empty() {
            out.last().copied().flatten()
        } else {
            Some(Point2D::new(median(&mut xs), median(&mut ys)))
        };
        out.push(value);
    }
    out
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite gaze coordinates"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Traces the attended track across a scene: per frame, the resampled gaze
/// point is scored against that frame's face boxes, and dropouts or
/// sub-threshold frames hold the previous selection.
pub fn track_attention(
    scene: &Scene,
    cfg: &AttentionConfig,
) -> Result<SelectionTrace, AttentionError> {
    let n_frames = scene.n_frames();
    for (j, track) in scene.tracks.iter().enumerate() {
        if track.len() != n_frames {
            return Err(AttentionError::FrameCountMismatch(format!(
                "track {j} has {} boxes, expected {n_frames}",
                track.len()
            )));
        }
    }
    let points = resample_gaze(&scene.gaze, scene.config.fps, n_frames);
    let mut per_frame = Vec::with_capacity(n_frames);
    let mut held: Option<usize> = None;
    let mut boxes = Vec::with_capacity(scene.tracks.len());
    for (f, point) in points.iter().enumerate() {
        let raw = point.and_then(|g| {
            boxes.clear();
            boxes.extend(scene.tracks.iter().map(|track| track[f]));
            select_target(g, &boxes, cfg)
        });
        held = raw.or(held);
        per_frame.push(held);
    }
    Ok(SelectionTrace::new(per_frame, scene.config.fps))
}

/// Commits a switch from the held value to a new value only after the new
/// value persists for `k` consecutive frames; `k = 1` is the identity.
///
/// Panics if `k == 0`.
pub fn debounce(trace: &SelectionTrace, k: usize) -> SelectionTrace {
    assert!(k >= 1, "debounce needs k >= 1");
    let raw = &trace.per_frame;
    let mut per_frame = Vec::with_capacity(raw.len());
    let mut current: Option<usize> = None;
    let mut candidate: Option<Option<usize>> = None;
    let mut run = 0usize;
    for (f, &v) in raw.iter().enumerate() {
        if f == 0 {
            current = v;
        } else if v == current {
            candidate = None;
            run = 0;
        } else {
            if candidate == Some(v) {
                run += 1;
            } else {
                candidate = Some(v);
                run = 1;
            }
            if run >= k {
                current = v;
                candidate = None;
                run = 0;
            }
        }
        per_frame.push(current);
    }
    SelectionTrace::new(per_frame, trace.fps)
}
