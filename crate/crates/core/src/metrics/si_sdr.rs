//! Scale-invariant signal-to-distortion ratio.

use crate::audio::Waveform;

use super::MetricsError;

/// SI-SDR of `estimate` against `reference`, in dB.
///
/// Both signals have their means removed, the reference is rescaled by the
/// projection coefficient `alpha = <estimate, reference> / |reference|^2`, and
/// the value is `10 log10(|alpha r|^2 / |alpha r - e|^2)`. A zero residual
/// returns `f64::INFINITY`; callers treat that sentinel separately.
pub fn si_sdr(reference: &Waveform, estimate: &Waveform) -> Result<f64, MetricsError> {
    if reference.rate != estimate.rate {
        return Err(MetricsError::RateMismatch {
            reference: reference.rate,
            estimate: estimate.rate,
        });
    }
    if reference.len() != estimate.len() || reference.is_empty() {
        return Err(MetricsError::LengthMismatch {
            reference: reference.len(),
            estimate: estimate.len(),
        });
    }
    let n = reference.len() as f64;
    let r_mean = reference.samples.iter().sum::<f64>() / n;
    let e_mean = estimate.samples.iter().sum::<f64>() / n;

    let mut dot = 0.0;
    let mut r_energy = 0.0;
    for (&r, &e) in reference.samples.iter().zip(&estimate.samples) {
        let (r, e) = (r - r_mean, e - e_mean);
        dot += r * e;
        r_energy += r * r;
    }
    if r_energy == 0.0 {
        return Err(MetricsError::ZeroReference);
    }
    let alpha = dot / r_energy;

    let mut signal = 0.0;
    let mut residual = 0.0;
    for (&r, &e) in reference.samples.iter().zip(&estimate.samples) {
        let target = alpha * (r - r_mean);
        let err = target - (e - e_mean);
        signal += target * target;
        residual += err * err;
    }
    if residual == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / residual).log10())
}
