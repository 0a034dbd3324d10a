//! Short-time Fourier analysis with exact weighted overlap-add inversion.
//!
//! Frames use a periodic Hann window with hop = window/4, which satisfies the
//! constant-overlap-add condition. The signal is zero-padded by half a window
//! at both ends so frame `f` is centered at sample `f * hop`; a signal of
//! `len` samples yields `len / hop + 1` frames (lengths that are not hop
//! multiples keep their tail through the stored signal length). The inverse
//! applies the same window again and divides by the accumulated squared
//! window, so an unmodified round trip reconstructs the input to floating-
//! point accuracy.

use std::fs;
use std::path::{Path, PathBuf};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::Waveform;

#[derive(Debug, Error)]
pub enum StftError {
    #[error("invalid stft config: {0}")]
    InvalidConfig(String),
    #[error("spectrogram shape is inconsistent: {0}")]
    ShapeMismatch(String),
    #[error("cannot export an empty spectrogram")]
    EmptySpectrogram,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Analysis parameters; the defaults give 5 hops per video frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftConfig {
    pub window_length: usize,
    pub hop: usize,
    pub fft_size: usize,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            window_length: 512,
            hop: 128,
            fft_size: 512,
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<(), StftError> {
        if self.window_length == 0 || self.hop == 0 {
            return Err(StftError::InvalidConfig(
                "window and hop must be positive".into(),
            ));
        }
        if self.hop * 4 != self.window_length {
            return Err(StftError::InvalidConfig(format!(
                "hop {} must be a quarter of window {} for constant overlap-add",
                self.hop, self.window_length
            )));
        }
        if self.fft_size < self.window_length {
            return Err(StftError::InvalidConfig(format!(
                "fft size {} smaller than window {}",
                self.fft_size, self.window_length
            )));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Frames for a signal of `len` samples under the centering convention.
    pub fn n_frames(&self, len: usize) -> usize {
        if len == 0 {
            0
        } else {
            len / self.hop + 1
        }
    }
}

/// Periodic Hann window `0.5 * (1 - cos(2 pi n / len))`.
pub fn hann_window(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * n as f64 / len as f64).cos()))
        .collect()
}

/// One-sided complex spectrogram, time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    pub config: StftConfig,
    pub rate: u32,
    /// Original signal length in samples, restored by [`istft`].
    pub signal_len: usize,
    /// `frames[t][b]` for frame `t` and bin `b`, `fft_size / 2 + 1` bins.
    pub frames: Vec<Vec<Complex<f64>>>,
}

impl ComplexSpectrogram {
    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn n_bins(&self) -> usize {
        self.config.n_bins()
    }

    fn check_shape(&self) -> Result<(), StftError> {
        self.config.validate()?;
        let bins = self.n_bins();
        if self.frames.iter().any(|f| f.len() != bins) {
            return Err(StftError::ShapeMismatch(format!(
                "expected {bins} bins per frame"
            )));
        }
        if self.config.n_frames(self.signal_len) != self.frames.len() {
            return Err(StftError::ShapeMismatch(format!(
                "{} frames but signal length {} implies {}",
                self.frames.len(),
                self.signal_len,
                self.config.n_frames(self.signal_len)
            )));
        }
        Ok(())
    }
}

/// Forward transform under the centering convention described in the module
/// docs.
pub fn stft(x: &Waveform, cfg: &StftConfig) -> Result<ComplexSpectrogram, StftError> {
    cfg.validate()?;
    let pad = cfg.window_length / 2;
    let mut padded = vec![0.0; x.len() + cfg.window_length];
    padded[pad..pad + x.len()].copy_from_slice(&x.samples);

    let window = hann_window(cfg.window_length);
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(cfg.fft_size);
    let n_frames = cfg.n_frames(x.len());
    let n_bins = cfg.n_bins();

    let mut frames = Vec::with_capacity(n_frames);
    let mut buf = vec![Complex::new(0.0, 0.0); cfg.fft_size];
    for f in 0..n_frames {
        let start = f * cfg.hop;
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = if i < cfg.window_length {
                Complex::new(padded[start + i] * window[i], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            };
        }
        fft.process(&mut buf);
        frames.push(buf[..n_bins].to_vec());
    }
    Ok(ComplexSpectrogram {
        config: *cfg,
        rate: x.rate,
        signal_len: x.len(),
        frames,
    })
}

/// Weighted overlap-add inverse, returning exactly `signal_len` samples.
pub fn istft(spec: &ComplexSpectrogram) -> Result<Waveform, StftError> {
    spec.check_shape()?;
    let cfg = &spec.config;
    if spec.signal_len == 0 {
        return Ok(Waveform::new(Vec::new(), spec.rate));
    }
    let pad = cfg.window_length / 2;
    let padded_len = spec.signal_len + cfg.window_length;
    let mut num = vec![0.0; padded_len];
    let mut den = vec![0.0; padded_len];

    let window = hann_window(cfg.window_length);
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(cfg.fft_size);
    let mut buf = vec![Complex::new(0.0, 0.0); cfg.fft_size];
    for (f, frame) in spec.frames.iter().enumerate() {
        // Rebuild the full conjugate-symmetric spectrum from the stored half.
        buf[..frame.len()].copy_from_slice(frame);
        for k in 1..cfg.fft_size / 2 {
            buf[cfg.fft_size - k] = frame[k].conj();
        }
        ifft.process(&mut buf);
        let start = f * cfg.hop;
        for i in 0..cfg.window_length {
            let sample = buf[i].re / cfg.fft_size as f64;
            num[start + i] += window[i] * sample;
            den[start + i] += window[i] * window[i];
        }
    }

    let samples = (0..spec.signal_len)
        .map(|n| {
            let d = den[n + pad];
            if d > 1e-12 {
                num[n + pad] / d
            } else {
                0.0
            }
        })
        .collect();
    Ok(Waveform::new(samples, spec.rate))
}

/// Renders the magnitude spectrogram as a binary 8-bit PGM image: columns are
/// frames, rows are bins with the highest frequency on top, and
/// `20 * log10(|S| + 1e-8)` is normalized per image to `[0, 255]`.
pub fn spectrogram_pgm(spec: &ComplexSpectrogram) -> Result<Vec<u8>, StftError> {
    spec.check_shape()?;
    let (width, height) = (spec.n_frames(), spec.n_bins());
    if width == 0 {
        return Err(StftError::EmptySpectrogram);
    }
    let db: Vec<Vec<f64>> = spec
        .frames
        .iter()
        .map(|frame| {
            frame
                .iter()
                .map(|c| 20.0 * (c.norm() + 1e-8).log10())
                .collect()
        })
        .collect();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for row in &db {
        for &v in row {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let span = hi - lo;
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.reserve(width * height);
    for row in 0..height {
        let bin = height - 1 - row;
        for frame in db.iter() {
            let v = if span > 1e-12 {
                ((frame[bin] - lo) / span * 255.0).round()
            } else {
                0.0
            };
            out.push(v.clamp(0.0, 255.0) as u8);
        }
    }
    Ok(out)
}

/// Writes [`spectrogram_pgm`] output to a file.
pub fn write_pgm(spec: &ComplexSpectrogram, path: &Path) -> Result<(), StftError> {
    let bytes = spectrogram_pgm(spec)?;
    fs::write(path, bytes).map_err(|source| StftError::Io {
        path: path.to_path_buf(),
        source,
    })
}
