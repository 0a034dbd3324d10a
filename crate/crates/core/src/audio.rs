//! Waveforms and the mixing operations behind mixture construction.
//!
//! The mixing rule is equal-gain: the interferer is trimmed or zero-padded to
//! the target's length and hard-clipped to `[-1, 1]`, then the sum is clipped
//! again. Switch scenarios concatenate the same mixture twice around a silent
//! gap whose length must be a whole number of video frames so the audio,
//! video, and selection clocks stay aligned.

use thiserror::Error;

use crate::SAMPLES_PER_FRAME;

/// Default silent gap between the two halves of a switch mixture, seconds.
/// 0.48 s is 7680 samples, exactly 12 video frames.
pub const DEFAULT_SWITCH_GAP: f64 = 0.48;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("sample rates differ: {a} vs {b}")]
    RateMismatch { a: u32, b: u32 },
    #[error("lengths differ: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("noise has {got} samples but the signal needs {needed}")]
    NoiseTooShort { needed: usize, got: usize },
    #[error("{which} has zero power")]
    ZeroPower { which: &'static str },
    #[error("gap of {samples} samples is not a whole number of video frames")]
    GapNotFrameAligned { samples: usize },
    #[error("gap must be non-negative, got {seconds} s")]
    NegativeGap { seconds: f64 },
}

/// Mono audio: samples in `[-1, 1]` at a positive sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, rate: u32) -> Self {
        assert!(rate > 0, "sample rate must be positive");
        Self { samples, rate }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.rate as f64
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    /// Mean square power over the full length.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64
    }
}

/// Hard clip to `[-1, 1]`.
pub fn clip(v: f64) -> f64 {
    v.clamp(-1.0, 1.0)
}

/// Truncates or zero-pads to exactly `len` samples.
pub fn trim_or_pad(x: &Waveform, len: usize) -> Waveform {
    let mut samples = Vec::with_capacity(len);
    samples.extend(x.samples.iter().take(len));
    samples.resize(len, 0.0);
    Waveform::new(samples, x.rate)
}

/// The interferer as it enters a mixture: trimmed or padded to `len`, then
/// hard-clipped.
pub fn aligned_interferer(intf: &Waveform, len: usize) -> Waveform {
    let mut out = trim_or_pad(intf, len);
    for s in &mut out.samples {
        *s = clip(*s);
    }
    out
}

/// Equal-gain mixture at the target's length: the interferer is aligned and
/// clipped first, then the sum is clipped.
pub fn mix_equal_gain(tgt: &Waveform, intf: &Waveform) -> Result<Waveform, AudioError> {
    if tgt.rate != intf.rate {
        return Err(AudioError::RateMismatch {
            a: tgt.rate,
            b: intf.rate,
        });
    }
    let aligned = aligned_interferer(intf, tgt.len());
    let samples = tgt
        .samples
        .iter()
        .zip(&aligned.samples)
        .map(|(t, i)| clip(t + i))
        .collect();
    Ok(Waveform::new(samples, tgt.rate))
}

/// Adds `noise` to `x` scaled so the mean-square powers stand at `snr_db`,
/// then clips. The noise must cover the signal and is trimmed to its length.
pub fn add_noise_snr(x: &Waveform, noise: &Waveform, snr_db: f64) -> Result<Waveform, AudioError> {
    if x.rate != noise.rate {
        return Err(AudioError::RateMismatch {
            a: x.rate,
            b: noise.rate,
        });
    }
    if noise.len() < x.len() {
        return Err(AudioError::NoiseTooShort {
            needed: x.len(),
            got: noise.len(),
        });
    }
    let trimmed = trim_or_pad(noise, x.len());
    let signal_power = x.power();
    let noise_power = trimmed.power();
    if signal_power == 0.0 {
        return Err(AudioError::ZeroPower { which: "signal" });
    }
    if noise_power == 0.0 {
        return Err(AudioError::ZeroPower { which: "noise" });
    }
    let scale = (signal_power / (noise_power * 10f64.powf(snr_db / 10.0))).sqrt();
    let samples = x
        .samples
        .iter()
        .zip(&trimmed.samples)
        .map(|(s, n)| clip(s + scale * n))
        .collect();
    Ok(Waveform::new(samples, x.rate))
}

pub(crate) fn frame_aligned_gap(rate: u32, gap: f64) -> Result<usize, AudioError> {
    if !(gap >= 0.0 && gap.is_finite()) {
        return Err(AudioError::NegativeGap { seconds: gap });
    }
    let samples = (gap * rate as f64).round() as usize;
    if !samples.is_multiple_of(SAMPLES_PER_FRAME) {
        return Err(AudioError::GapNotFrameAligned { samples });
    }
    Ok(samples)
}

/// Switch mixture: the mixture, a silent gap, then the same mixture again.
/// The gap must round to a whole number of video frames.
pub fn build_switch_mixture(mix: &Waveform, gap: f64) -> Result<Waveform, AudioError> {
    let gap_samples = frame_aligned_gap(mix.rate, gap)?;
    let mut samples = Vec::with_capacity(2 * mix.len() + gap_samples);
    samples.extend_from_slice(&mix.samples);
    samples.resize(mix.len() + gap_samples, 0.0);
    samples.extend_from_slice(&mix.samples);
    Ok(Waveform::new(samples, mix.rate))
}

/// Ground-truth reference for a switch scenario: speaker A's clean speech,
/// the silent gap, then speaker B's clean speech.
pub fn build_switch_reference(
    clean_a: &Waveform,
    clean_b: &Waveform,
    gap: f64,
) -> Result<Waveform, AudioError> {
    if clean_a.rate != clean_b.rate {
        return Err(AudioError::RateMismatch {
            a: clean_a.rate,
            b: clean_b.rate,
        });
    }
    if clean_a.len() != clean_b.len() {
        return Err(AudioError::LengthMismatch {
            a: clean_a.len(),
            b: clean_b.len(),
        });
    }
    let gap_samples = frame_aligned_gap(clean_a.rate, gap)?;
    let mut samples = Vec::with_capacity(2 * clean_a.len() + gap_samples);
    samples.extend_from_slice(&clean_a.samples);
    samples.resize(clean_a.len() + gap_samples, 0.0);
    samples.extend_from_slice(&clean_b.samples);
    Ok(Waveform::new(samples, clean_a.rate))
}
