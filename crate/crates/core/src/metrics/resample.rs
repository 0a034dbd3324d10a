//! Polyphase windowed-sinc sample-rate conversion.
//!
//! The prototype lowpass is a Kaiser-windowed sinc designed for 80 dB
//! stopband attenuation, with the cutoff pulled below the output Nyquist by
//! half the transition band so the stopband starts at Nyquist itself. The
//! zero-phase delay is compensated, so output sample `m` sits at input time
//! `m * down / up`.

/// Stopband attenuation the filter is designed for, in dB.
const ATTENUATION_DB: f64 = 80.0;

/// Taps per polyphase branch before the odd-length adjustment.
const TAPS_PER_PHASE: usize = 128;

/// Modified Bessel function of the first kind, order zero.
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut k = 1.0;
    loop {
        term *= (half / k) * (half / k);
        sum += term;
        if term < sum * 1e-18 {
            return sum;
        }
        k += 1.0;
    }
}

fn sinc(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        let pt = std::f64::consts::PI * t;
        pt.sin() / pt
    }
}

/// Kaiser-windowed sinc lowpass with unit DC gain, odd length.
fn design_lowpass(n_taps: usize, cutoff: f64) -> Vec<f64> {
    let beta = 0.1102 * (ATTENUATION_DB - 8.7);
    let delay = (n_taps - 1) as f64 / 2.0;
    let i0_beta = bessel_i0(beta);
    let mut taps: Vec<f64> = (0..n_taps)
        .map(|n| {
            let t = n as f64 - delay;
            let ratio = t / delay;
            let window = bessel_i0(beta * (1.0 - ratio * ratio).max(0.0).sqrt()) / i0_beta;
            2.0 * cutoff * sinc(2.0 * cutoff * t) * window
        })
        .collect();
    let gain: f64 = taps.iter().sum();
    for tap in &mut taps {
        *tap /= gain;
    }
    taps
}

/// Resamples `x` by the rational factor `up / down`, returning
/// `ceil(len * up / down)` samples aligned to the input timeline.
pub fn resample(x: &[f64], up: usize, down: usize) -> Vec<f64> {
    assert!(up > 0 && down > 0);
    if x.is_empty() {
        return Vec::new();
    }
    let n_taps = TAPS_PER_PHASE * up + 1;
    let cutoff_cycles = 1.0 / (2.0 * up.max(down) as f64);
    let transition = (ATTENUATION_DB - 8.0)
        / (2.285 * 2.0 * std::f64::consts::PI * (n_taps - 1) as f64);
    let taps = design_lowpass(n_taps, cutoff_cycles - transition / 2.0);
    let delay = (n_taps - 1) / 2;

    let out_len = (x.len() * up).div_ceil(down);
    let mut out = Vec::with_capacity(out_len);
    for m in 0..out_len {
        let center = m * down + delay;
        // Input indices k with 0 <= center - k*up < n_taps, clipped to x.
        let k_min = (center + 1).saturating_sub(n_taps).div_ceil(up);
        let k_max = (center / up).min(x.len() - 1);
        let mut acc = 0.0;
        for k in k_min..=k_max {
            acc += x[k] * taps[center - k * up];
        }
        out.push(acc * up as f64);
    }
    out
}
