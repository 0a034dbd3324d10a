//! Deterministic test and demo signals.
//!
//! `pseudo_speech` drives the intelligibility and separation metrics in tests
//! and demo corpora: a bank of log-spaced carriers spanning the one-third-
//! octave analysis range, each with its own slow amplitude modulation, plus a
//! faint noise floor. It is not speech, but it has speech-like band coverage
//! and envelope dynamics, which is what the metrics respond to.

use crate::audio::Waveform;
use crate::rng::{NormalSampler, SplitMix64};
use crate::SAMPLE_RATE;

const CARRIERS: usize = 24;
const LOW_HZ: f64 = 140.0;
const HIGH_HZ: f64 = 4200.0;

/// Speech-band modulated multitone at RMS 0.1, 16 kHz.
pub fn pseudo_speech(len: usize, seed: u64) -> Waveform {
    let mut rng = SplitMix64::new(seed);
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut samples = vec![0.0; len];
    for c in 0..CARRIERS {
        let freq = LOW_HZ * (HIGH_HZ / LOW_HZ).powf(c as f64 / (CARRIERS - 1) as f64);
        let phase = rng.next_f64() * two_pi;
        let mod_rate = 1.5 + 6.5 * rng.next_f64();
        let mod_phase = rng.next_f64() * two_pi;
        let amp = 0.5 + 0.5 * rng.next_f64();
        for (n, sample) in samples.iter_mut().enumerate() {
            let t = n as f64 / SAMPLE_RATE as f64;
            let envelope = 0.55 + 0.45 * (two_pi * mod_rate * t + mod_phase).cos();
            *sample += amp * envelope * (two_pi * freq * t + phase).sin();
        }
    }
    let mut noise = NormalSampler::new(rng.fork());
    for sample in &mut samples {
        *sample += 0.02 * noise.sample();
    }
    normalize_rms(&Waveform::new(samples, SAMPLE_RATE), 0.1)
}

/// Unit-variance Gaussian noise at 16 kHz.
pub fn white_noise(len: usize, seed: u64) -> Waveform {
    let mut sampler = NormalSampler::new(SplitMix64::new(seed));
    Waveform::new((0..len).map(|_| sampler.sample()).collect(), SAMPLE_RATE)
}

/// Cosine at `freq` Hz, nonzero only on `active`, at the given gain.
pub fn tone_burst(len: usize, active: std::ops::Range<usize>, freq: f64, gain: f64) -> Waveform {
    let two_pi = 2.0 * std::f64::consts::PI;
    let samples = (0..len)
        .map(|n| {
            if active.contains(&n) {
                gain * (two_pi * freq * n as f64 / SAMPLE_RATE as f64).cos()
            } else {
                0.0
            }
        })
        .collect();
    Waveform::new(samples, SAMPLE_RATE)
}

/// Rescales to the target RMS; silent input is returned unchanged.
pub fn normalize_rms(wave: &Waveform, target: f64) -> Waveform {
    let rms = wave.rms();
    if rms == 0.0 {
        return wave.clone();
    }
    let scale = target / rms;
    Waveform::new(wave.samples.iter().map(|s| s * scale).collect(), wave.rate)
}
