//! Short-time objective intelligibility.
//!
//! Classic STOI: both signals are resampled to 10 kHz, silent frames are
//! discarded by reference energy, short-time one-third-octave band envelopes
//! are compared segment by segment with clipped, normalized correlation, and
//! the result is the average over all segments and bands.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::audio::Waveform;

use super::resample::resample;
use super::MetricsError;

const INTERNAL_RATE: f64 = 10_000.0;
const FRAME: usize = 256;
const HOP: usize = 128;
const FFT_SIZE: usize = 512;
const N_BANDS: usize = 15;
const MIN_CENTER_HZ: f64 = 150.0;
const SEGMENT_FRAMES: usize = 30;
const DYN_RANGE_DB: f64 = 40.0;
/// Clip bound `10^(-beta/20)` for beta = -15 dB.
const CLIP_C: f64 = 5.623413251903491;
const EPS: f64 = f64::EPSILON;

/// MATLAB-convention Hann window: sample k is `0.5*(1-cos(2pi(k+1)/(n+1)))`.
fn hanning(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos()))
        .collect()
}

fn frame_starts(len: usize) -> impl Iterator<Item = usize> {
    (0..).map(|i| i * HOP).take_while(move |s| s + FRAME <= len)
}

/// Drops frames whose windowed reference energy falls more than
/// `DYN_RANGE_DB` below the loudest frame, compacting both signals by
/// overlap-adding the surviving windowed frames at consecutive hops.
fn remove_silent_frames(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let w = hanning(FRAME);
    let starts: Vec<usize> = frame_starts(x.len()).collect();
    if starts.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let energies: Vec<f64> = starts
        .iter()
        .map(|&s| {
            let sum: f64 = (0..FRAME).map(|k| (x[s + k] * w[k]).powi(2)).sum();
            20.0 * (sum.sqrt() + EPS).log10()
        })
        .collect();
    let max_energy = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let kept: Vec<usize> = starts
        .iter()
        .zip(&energies)
        .filter(|(_, &e)| e > max_energy - DYN_RANGE_DB)
        .map(|(&s, _)| s)
        .collect();

    let out_len = (kept.len() - 1) * HOP + FRAME;
    let mut xs = vec![0.0; out_len];
    let mut ys = vec![0.0; out_len];
    for (j, &s) in kept.iter().enumerate() {
        for k in 0..FRAME {
            xs[j * HOP + k] += x[s + k] * w[k];
            ys[j * HOP + k] += y[s + k] * w[k];
        }
    }
    (xs, ys)
}

/// One-sided magnitude-squared short-time spectra, frames major.
fn power_spectra(x: &[f64]) -> Vec<Vec<f64>> {
    let w = hanning(FRAME);
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(FFT_SIZE);
    let mut buf = vec![Complex::new(0.0, 0.0); FFT_SIZE];
    frame_starts(x.len())
        .map(|s| {
            for (i, slot) in buf.iter_mut().enumerate() {
                *slot = if i < FRAME {
                    Complex::new(x[s + i] * w[i], 0.0)
                } else {
                    Complex::new(0.0, 0.0)
                };
            }
            fft.process(&mut buf);
            buf[..FFT_SIZE / 2 + 1].iter().map(|c| c.norm_sqr()).collect()
        })
        .collect()
}

/// Inclusive-start, exclusive-end FFT bin range of each one-third-octave
/// band, edges snapped to the nearest bin.
fn band_edges() -> [(usize, usize); N_BANDS] {
    let mut edges = [(0usize, 0usize); N_BANDS];
    for (k, edge) in edges.iter_mut().enumerate() {
        let center = MIN_CENTER_HZ * 2f64.powf(k as f64 / 3.0);
        let lo = center * 2f64.powf(-1.0 / 6.0);
        let hi = center * 2f64.powf(1.0 / 6.0);
        let snap = |f: f64| (f * FFT_SIZE as f64 / INTERNAL_RATE).round() as usize;
        *edge = (snap(lo), snap(hi));
    }
    edges
}

/// Band envelope per frame: root of the summed bin powers in each band.
fn band_envelopes(spectra: &[Vec<f64>]) -> Vec<[f64; N_BANDS]> {
    let edges = band_edges();
    spectra
        .iter()
        .map(|frame| {
            let mut bands = [0.0; N_BANDS];
            for (b, &(lo, hi)) in edges.iter().enumerate() {
                bands[b] = frame[lo..hi].iter().sum::<f64>().sqrt();
            }
            bands
        })
        .collect()
}

fn segment_correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sum_x2: f64 = x.iter().map(|v| v * v).sum();
    let sum_y2: f64 = y.iter().map(|v| v * v).sum();
    let alpha = (sum_x2 / (sum_y2 + EPS)).sqrt();
    let clipped: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(&xv, &yv)| (alpha * yv).min((1.0 + CLIP_C) * xv))
        .collect();

    let x_mean = x.iter().sum::<f64>() / n;
    let y_mean = clipped.iter().sum::<f64>() / n;
    let mut dot = 0.0;
    let mut xx = 0.0;
    let mut yy = 0.0;
    for (&xv, &yv) in x.iter().zip(&clipped) {
        let (a, b) = (xv - x_mean, yv - y_mean);
        dot += a * b;
        xx += a * a;
        yy += b * b;
    }
    dot / (xx.sqrt() + EPS) / (yy.sqrt() + EPS)
}

/// STOI of `estimate` against `reference`; `rate` must be 16 kHz.
pub fn stoi(reference: &Waveform, estimate: &Waveform, rate: u32) -> Result<f64, MetricsError> {
    if reference.rate != rate || estimate.rate != rate {
        return Err(MetricsError::RateMismatch {
            reference: reference.rate,
            estimate: estimate.rate,
        });
    }
    if rate != crate::SAMPLE_RATE {
        return Err(MetricsError::UnsupportedRate { rate });
    }
    if reference.len() != estimate.len() || reference.is_empty() {
        return Err(MetricsError::LengthMismatch {
            reference: reference.len(),
            estimate: estimate.len(),
        });
    }

    let x = resample(&reference.samples, 5, 8);
    let y = resample(&estimate.samples, 5, 8);
    let (x, y) = remove_silent_frames(&x, &y);

    let x_bands = band_envelopes(&power_spectra(&x));
    let y_bands = band_envelopes(&power_spectra(&y));
    let n_frames = x_bands.len();
    if n_frames < SEGMENT_FRAMES {
        return Err(MetricsError::TooShort {
            frames: n_frames,
            needed: SEGMENT_FRAMES,
        });
    }

    let mut total = 0.0;
    let n_segments = n_frames - SEGMENT_FRAMES + 1;
    let mut seg_x = [0.0; SEGMENT_FRAMES];
    let mut seg_y = [0.0; SEGMENT_FRAMES];
    for m in 0..n_segments {
        for band in 0..N_BANDS {
            for (i, frame) in x_bands[m..m + SEGMENT_FRAMES].iter().enumerate() {
                seg_x[i] = frame[band];
            }
            for (i, frame) in y_bands[m..m + SEGMENT_FRAMES].iter().enumerate() {
                seg_y[i] = frame[band];
            }
            total += segment_correlation(&seg_x, &seg_y);
        }
    }
    Ok(total / (n_segments * N_BANDS) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::pseudo_speech;
    use crate::SAMPLE_RATE;

    #[test]
    fn hanning_matches_matlab_convention() {
        let w = hanning(4);
        let expected = [
            0.3454915028125263,
            0.9045084971874737,
            0.9045084971874737,
            0.3454915028125264,
        ];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn band_edges_cover_fifteen_bands_within_nyquist() {
        let edges = band_edges();
        assert_eq!(edges[0], (7, 9));
        for (lo, hi) in edges {
            assert!(lo < hi);
            assert!(hi <= FFT_SIZE / 2 + 1);
        }
        assert!(edges[N_BANDS - 1].1 <= 220);
    }

    #[test]
    fn identity_scores_one() {
        let x = pseudo_speech(2 * SAMPLE_RATE as usize, 404);
        let score = stoi(&x, &x, SAMPLE_RATE).unwrap();
        assert!((score - 1.0).abs() <= 1e-6, "{score}");
    }

    #[test]
    fn scaling_the_estimate_does_not_change_the_score() {
        let x = pseudo_speech(2 * SAMPLE_RATE as usize, 405);
        let half = Waveform::new(x.samples.iter().map(|s| s * 0.5).collect(), SAMPLE_RATE);
        let score = stoi(&x, &half, SAMPLE_RATE).unwrap();
        assert!((score - 1.0).abs() <= 1e-6, "{score}");
    }

    #[test]
    fn noise_drops_the_score() {
        let x = pseudo_speech(2 * SAMPLE_RATE as usize, 406);
        let noisy = crate::audio::add_noise_snr(
            &x,
            &crate::synth::white_noise(x.len(), 999),
            0.0,
        )
        .unwrap();
        let clean = stoi(&x, &x, SAMPLE_RATE).unwrap();
        let degraded = stoi(&x, &noisy, SAMPLE_RATE).unwrap();
        assert!(degraded < clean - 0.05, "{degraded} vs {clean}");
        assert!(degraded > 0.0);
    }

    #[test]
    fn snr_sweep_is_monotone_non_increasing() {
        let x = pseudo_speech(2 * SAMPLE_RATE as usize, 407);
        let noise = crate::synth::white_noise(x.len(), 1000);
        let mut prev = f64::INFINITY;
        for snr in [20.0, 10.0, 5.0, 0.0, -5.0, -10.0] {
            let noisy = crate::audio::add_noise_snr(&x, &noise, snr).unwrap();
            let score = stoi(&x, &noisy, SAMPLE_RATE).unwrap();
            assert!(score <= prev + 1e-3, "snr {snr}: {score} vs {prev}");
            prev = score;
        }
    }

    #[test]
    fn short_input_is_rejected() {
        let x = pseudo_speech(4000, 408);
        assert!(matches!(
            stoi(&x, &x, SAMPLE_RATE),
            Err(MetricsError::TooShort { .. })
        ));
    }

    #[test]
    fn silent_frames_do_not_dilute_the_score() {
        let speech = pseudo_speech(SAMPLE_RATE as usize, 409);
        let mut padded = vec![0.0; 8000];
        padded.extend_from_slice(&speech.samples);
        padded.extend(vec![0.0; 8000]);
        let x = Waveform::new(padded, SAMPLE_RATE);
        let score = stoi(&x, &x, SAMPLE_RATE).unwrap();
        assert!((score - 1.0).abs() <= 1e-6, "{score}");
    }
}
