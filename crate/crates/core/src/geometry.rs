//! Face boxes, gaze regions, and the matching score that picks the attended
//! speaker.
//!
//! A candidate face is scored against the current gaze point as a convex
//! blend of two cues: an inverse-distance term between the gaze point and the
//! face center, and the IoU between the face box and a square gaze region
//! around the point. The blend weight, region size, and acceptance threshold
//! live in [`AttentionConfig`].

use serde::de::{self, SeqAccess, Visitor};
use serde::ser::SerializeTuple;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Errors from geometric construction and scoring.
#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid bounding box [{x_min}, {y_min}, {x_max}, {y_max}]")]
    InvalidBox {
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
    },
    #[error("invalid attention config: {0}")]
    InvalidConfig(String),
    #[error("gaze region is degenerate: gaze ({x}, {y}) lies off-frame")]
    GazeOffFrame { x: f64, y: f64 },
}

/// A point in frame pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Axis-aligned box with strictly positive extent on both axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

impl BoundingBox {
    /// Builds a box, rejecting non-finite or empty extents.
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, GeometryError> {
        let finite =
            x_min.is_finite() && y_min.is_finite() && x_max.is_finite() && y_max.is_finite();
        if !finite || x_min >= x_max || y_min >= y_max {
            return Err(GeometryError::InvalidBox {
                x_min,
                y_min,
                x_max,
                y_max,
            });
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    /// Intersection box, or `None` when interiors do not overlap.
    pub fn intersect(&self, other: &BoundingBox) -> Option<BoundingBox> {
        let x_min = self.x_min.max(other.x_min);
        let y_min = self.y_min.max(other.y_min);
        let x_max = self.x_max.min(other.x_max);
        let y_max = self.y_max.min(other.y_max);
        BoundingBox::new(x_min, y_min, x_max, y_max).ok()
    }

    pub fn contains(&self, p: Point2D) -> bool {
        p.x >= self.x_min && p.x < self.x_max && p.y >= self.y_min && p.y < self.y_max
    }
}

impl Serialize for BoundingBox {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut tup = serializer.serialize_tuple(4)?;
        tup.serialize_element(&self.x_min)?;
        tup.serialize_element(&self.y_min)?;
        tup.serialize_element(&self.x_max)?;
        tup.serialize_element(&self.y_max)?;
        tup.end()
    }
}

impl<'de> Deserialize<'de> for BoundingBox {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct BoxVisitor;

        impl<'de> Visitor<'de> for BoxVisitor {
            type Value = BoundingBox;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("an array [x_min, y_min, x_max, y_max]")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Self::Value, A::Error> {
                let mut vals = [0.0f64; 4];
                for (i, v) in vals.iter_mut().enumerate() {
                    *v = seq
                        .next_element()?
                        .ok_or_else(|| de::Error::invalid_length(i, &self))?;
                }
                BoundingBox::new(vals[0], vals[1], vals[2], vals[3])
                    .map_err(|e| de::Error::custom(e.to_string()))
            }
        }

        deserializer.deserialize_tuple(4, BoxVisitor)
    }
}

/// Parameters of the gaze-vs-face matching score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttentionConfig {
    /// Blend weight of the inverse-distance term; the IoU term gets `1 - gamma`.
    pub gamma: f64,
    /// Side of the square gaze region as a fraction of frame height.
    pub gaze_region_fraction: f64,
    /// Scores below this threshold select no target.
    pub min_score_tau: f64,
    pub frame_width: f64,
    pub frame_height: f64,
}

impl Default for AttentionConfig {
    fn default() -> Self {
        Self {
            gamma: 0.75,
            gaze_region_fraction: 0.2,
            min_score_tau: 0.15,
            frame_width: 1280.0,
            frame_height: 720.0,
        }
    }
}

impl AttentionConfig {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let err = |msg: String| Err(GeometryError::InvalidConfig(msg));
        if !(0.0..=1.0).contains(&self.gamma) {
            return err(format!("gamma {} outside [0, 1]", self.gamma));
        }
        if !(self.gaze_region_fraction > 0.0 && self.gaze_region_fraction <= 1.0) {
            return err(format!(
                "gaze_region_fraction {} outside (0, 1]",
                self.gaze_region_fraction
            ));
        }
        if !(0.0..1.0).contains(&self.min_score_tau) {
            return err(format!("min_score_tau {} outside [0, 1)", self.min_score_tau));
        }
        if !(self.frame_width > 0.0 && self.frame_width.is_finite())
            || !(self.frame_height > 0.0 && self.frame_height.is_finite())
        {
            return err(format!(
                "frame {}x{} not positive",
                self.frame_width, self.frame_height
            ));
        }
        Ok(())
    }
}

/// Intersection-over-union of two boxes, in `[0, 1]`.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = match a.intersect(b) {
        Some(i) => i.area(),
        None => return 0.0,
    };
    inter / (a.area() + b.area() - inter)
}

/// Center point of a box.
pub fn face_center(b: &BoundingBox) -> Point2D {
    Point2D::new((b.x_min() + b.x_max()) / 2.0, (b.y_min() + b.y_max()) / 2.0)
}

/// Distance cue in `(0, 1]`: `1 / (1 + d / diag(b))` where `d` is the
/// Euclidean distance from the gaze point to the face center.
pub fn inverse_distance(g: Point2D, b: &BoundingBox) -> f64 {
    let c = face_center(b);
    let d = (g.x - c.x).hypot(g.y - c.y);
    1.0 / (1.0 + d / b.diagonal())
}

/// Square region of side `gaze_region_fraction · frame_height` centered at
/// the gaze point, intersected with the frame rectangle.
pub fn gaze_region(g: Point2D, cfg: &AttentionConfig) -> Result<BoundingBox, GeometryError> {
    let half = cfg.gaze_region_fraction * cfg.frame_height / 2.0;
    let clipped = BoundingBox::new(
        (g.x - half).max(0.0),
        (g.y - half).max(0.0),
        (g.x + half).min(cfg.frame_width),
        (g.y + half).min(cfg.frame_height),
    );
    clipped.map_err(|_| GeometryError::GazeOffFrame { x: g.x, y: g.y })
}

/// Matching score `gamma · D + (1 - gamma) · IoU(gaze region, box)`.
pub fn match_score(
    g: Point2D,
    b: &BoundingBox,
    cfg: &AttentionConfig,
) -> Result<f64, GeometryError> {
    let region = gaze_region(g, cfg)?;
    Ok(cfg.gamma * inverse_distance(g, b) + (1.0 - cfg.gamma) * iou(&region, b))
}

/// Index of the best-scoring box, or `None` when no score reaches
/// `min_score_tau` or the gaze region is off-frame. Ties go to the lowest
/// index.
pub fn select_target(g: Point2D, boxes: &[BoundingBox], cfg: &AttentionConfig) -> Option<usize> {
    let region = gaze_region(g, cfg).ok()?;
    let mut best: Option<(usize, f64)> = None;
    for (i, b) in boxes.iter().enumerate() {
        let score = cfg.gamma * inverse_distance(g, b) + (1.0 - cfg.gamma) * iou(&region, b);
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((i, score));
        }
    }
    match best {
        Some((i, s)) if s >= cfg.min_score_tau => Some(i),
        _ => None,
    }
}
