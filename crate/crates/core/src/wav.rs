//! Mono 16-bit PCM RIFF WAV reading and writing.
//!
//! Real amplitudes map to integers by `round(x * 32768)` clamped to the i16
//! range, and back by division with 32768. The reader walks the chunk list,
//! honors the word alignment padding of odd chunks, and accepts only
//! uncompressed 16-bit mono files.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::audio::Waveform;

#[derive(Debug, Error)]
pub enum WavError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed wav: {detail}")]
    Malformed { path: PathBuf, detail: String },
    #[error("{path}: unsupported wav: {detail}")]
    Unsupported { path: PathBuf, detail: String },
}

fn sample_to_i16(x: f64) -> i16 {
    (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

/// Writes `wave` as mono PCM16.
pub fn write_wav(path: &Path, wave: &Waveform) -> Result<(), WavError> {
    let data_len = wave.len() * 2;
    let mut bytes = Vec::with_capacity(44 + data_len);
    bytes.extend_from_slice(b"RIFF");
    bytes.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    bytes.extend_from_slice(b"WAVE");
    bytes.extend_from_slice(b"fmt ");
    bytes.extend_from_slice(&16u32.to_le_bytes());
    bytes.extend_from_slice(&1u16.to_le_bytes());
    bytes.extend_from_slice(&1u16.to_le_bytes());
    bytes.extend_from_slice(&wave.rate.to_le_bytes());
    bytes.extend_from_slice(&(wave.rate * 2).to_le_bytes());
    bytes.extend_from_slice(&2u16.to_le_bytes());
    bytes.extend_from_slice(&16u16.to_le_bytes());
    bytes.extend_from_slice(b"data");
    bytes.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in &wave.samples {
        bytes.extend_from_slice(&sample_to_i16(s).to_le_bytes());
    }
    fs::write(path, bytes).map_err(|source| WavError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a mono PCM16 file; the sample rate comes from the fmt chunk.
pub fn read_wav(path: &Path) -> Result<Waveform, WavError> {
    let bytes = fs::read(path).map_err(|source| WavError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let malformed = |detail: &str| WavError::Malformed {
        path: path.to_path_buf(),
        detail: detail.to_string(),
    };
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(malformed("missing RIFF/WAVE header"));
    }

    let mut rate: Option<u32> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_end = pos + 8 + size;
        if body_end > bytes.len() {
            return Err(malformed("chunk overruns file"));
        }
        let body = &bytes[pos + 8..body_end];
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(malformed("fmt chunk too small"));
                }
                let format = u16::from_le_bytes(body[0..2].try_into().unwrap());
                let channels = u16::from_le_bytes(body[2..4].try_into().unwrap());
                let bits = u16::from_le_bytes(body[14..16].try_into().unwrap());
                if format != 1 || channels != 1 || bits != 16 {
                    return Err(WavError::Unsupported {
                        path: path.to_path_buf(),
                        detail: format!(
                            "format {format}, {channels} channel(s), {bits} bits; need PCM mono 16"
                        ),
                    });
                }
                rate = Some(u32::from_le_bytes(body[4..8].try_into().unwrap()));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        pos = body_end + body_end % 2;
    }

    let rate = rate.ok_or_else(|| malformed("no fmt chunk"))?;
    let data = data.ok_or_else(|| malformed("no data chunk"))?;
    if data.len() % 2 != 0 {
        return Err(malformed("odd data chunk length"));
    }
    if rate == 0 {
        return Err(malformed("zero sample rate"));
    }
    let samples = data
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0)
        .collect();
    Ok(Waveform::new(samples, rate))
}
