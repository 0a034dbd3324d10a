//! Oracle ideal-ratio-mask enhancement gated by an attention trace.
//!
//! The mask for source `i` is the magnitude ratio `|S_i| / (sum_j |S_j| + eps)`,
//! computed from the clean source spectrograms. Gating happens per STFT
//! frame: frame `t` belongs to video frame `t * hop / 640`, and the mask of
//! whichever source the selection names there is applied to the mixture
//! spectrogram. Frames with no selection pass through unmasked, which keeps
//! audio audible during gaze dropouts.

use rustfft::num_complex::Complex;
use thiserror::Error;

use crate::attention::SelectionTrace;
use crate::audio::Waveform;
use crate::stft::{istft, stft, ComplexSpectrogram, StftConfig, StftError};
use crate::SAMPLES_PER_FRAME;

/// Denominator guard for the ideal ratio mask.
pub const IRM_EPSILON: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum EnhanceError {
    #[error("source index {index} out of range for {n_sources} sources")]
    InvalidIndex { index: usize, n_sources: usize },
    #[error("spectrogram shapes differ: {0}")]
    ShapeMismatch(String),
    #[error("source {index} has {got} samples, mixture has {expected}")]
    LengthMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("source {index} rate {got} Hz does not match mixture rate {expected} Hz")]
    RateMismatch { index: usize, got: u32, expected: u32 },
    #[error("selection covers {got} video frames, mixture needs {needed}")]
    SelectionTooShort { got: usize, needed: usize },
    #[error("no clean sources given")]
    NoSources,
    #[error(transparent)]
    Stft(#[from] StftError),
}

/// Per-frame, per-bin real gains in `[0, 1]`, aligned to a spectrogram.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskSequence {
    pub config: StftConfig,
    pub frames: Vec<Vec<f64>>,
}

impl MaskSequence {
    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }
}

fn check_same_shape(sources: &[ComplexSpectrogram]) -> Result<(), EnhanceError> {
    let first = &sources[0];
    for (i, s) in sources.iter().enumerate().skip(1) {
        if s.config != first.config
            || s.n_frames() != first.n_frames()
            || s.frames.iter().any(|f| f.len() != first.n_bins())
        {
            return Err(EnhanceError::ShapeMismatch(format!(
                "source {i} does not match source 0"
            )));
        }
    }
    Ok(())
}

/// Ideal ratio mask of `sources[target_index]` against the whole source set.
pub fn irm(sources: &[ComplexSpectrogram], target_index: usize) -> Result<MaskSequence, EnhanceError> {
    if sources.is_empty() {
        return Err(EnhanceError::NoSources);
    }
    if target_index >= sources.len() {
        return Err(EnhanceError::InvalidIndex {
            index: target_index,
            n_sources: sources.len(),
        });
    }
    check_same_shape(sources)?;
    let target = &sources[target_index];
    let frames = target
        .frames
        .iter()
        .enumerate()
        .map(|(t, frame)| {
            frame
                .iter()
                .enumerate()
                .map(|(b, c)| {
                    let total: f64 = sources.iter().map(|s| s.frames[t][b].norm()).sum();
                    c.norm() / (total + IRM_EPSILON)
                })
                .collect()
        })
        .collect();
    Ok(MaskSequence {
        config: target.config,
        frames,
    })
}

fn check_inputs(
    mixture: &Waveform,
    clean_sources: &[Waveform],
) -> Result<(), EnhanceError> {
    if clean_sources.is_empty() {
        return Err(EnhanceError::NoSources);
    }
    for (index, s) in clean_sources.iter().enumerate() {
        if s.rate != mixture.rate {
            return Err(EnhanceError::RateMismatch {
                index,
                got: s.rate,
                expected: mixture.rate,
            });
        }
        if s.len() != mixture.len() {
            return Err(EnhanceError::LengthMismatch {
                index,
                got: s.len(),
                expected: mixture.len(),
            });
        }
    }
    Ok(())
}

/// Video frames needed to gate a signal of `len` samples.
pub fn video_frames_needed(len: usize) -> usize {
    len.div_ceil(SAMPLES_PER_FRAME)
}

/// Masks the mixture frame by frame according to `selection` and resynthesizes.
///
/// STFT frame `t` is gated by video frame `t * hop / 640`; the final frame,
/// centered exactly at the signal end, reuses the last covered video frame.
pub fn gaze_gated_enhance(
    mixture: &Waveform,
    clean_sources: &[Waveform],
    selection: &SelectionTrace,
    cfg: &StftConfig,
) -> Result<Waveform, EnhanceError> {
    check_inputs(mixture, clean_sources)?;
    let needed = video_frames_needed(mixture.len());
    if selection.per_frame.len() < needed {
        return Err(EnhanceError::SelectionTooShort {
            got: selection.per_frame.len(),
            needed,
        });
    }
    for sel in &selection.per_frame {
        if let Some(i) = *sel {
            if i >= clean_sources.len() {
                return Err(EnhanceError::InvalidIndex {
                    index: i,
                    n_sources: clean_sources.len(),
                });
            }
        }
    }

    let mut mix_spec = stft(mixture, cfg)?;
    let source_specs = clean_sources
        .iter()
        .map(|s| stft(s, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let masks = (0..source_specs.len())
        .map(|i| irm(&source_specs, i))
        .collect::<Result<Vec<_>, _>>()?;

    let last_video = selection.per_frame.len() - 1;
    for (t, frame) in mix_spec.frames.iter_mut().enumerate() {
        let v = (t * cfg.hop / SAMPLES_PER_FRAME).min(last_video);
        if let Some(i) = selection.per_frame[v] {
            for (bin, value) in frame.iter_mut().enumerate() {
                *value *= Complex::new(masks[i].frames[t][bin], 0.0);
            }
        }
    }
    Ok(istft(&mix_spec)?)
}

/// [`gaze_gated_enhance`] with the selection pinned to one source throughout.
pub fn fixed_target_enhance(
    mixture: &Waveform,
    clean_sources: &[Waveform],
    fixed: usize,
    cfg: &StftConfig,
) -> Result<Waveform, EnhanceError> {
    if fixed >= clean_sources.len() {
        return Err(EnhanceError::InvalidIndex {
            index: fixed,
            n_sources: clean_sources.len(),
        });
    }
    let selection = SelectionTrace::constant(
        Some(fixed),
        video_frames_needed(mixture.len()).max(1),
        crate::VIDEO_FPS,
    );
    gaze_gated_enhance(mixture, clean_sources, &selection, cfg)
}
