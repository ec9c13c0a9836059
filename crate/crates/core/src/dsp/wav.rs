//! Minimal RIFF/WAVE PCM reader and 16-bit writer.

use std::fs;
use std::path::Path;

use super::{DspError, Waveform};

const WAVE_FORMAT_PCM: u16 = 1;
const WAVE_FORMAT_IEEE_FLOAT: u16 = 3;
const WAVE_FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Clone, Copy)]
struct FmtChunk {
    format: u16,
    channels: u16,
    sample_rate: u32,
    bits_per_sample: u16,
    block_align: u16,
}

/// Reads a PCM WAV file, downmixing to mono by channel mean.
pub fn load_wav(path: impl AsRef<Path>) -> Result<Waveform, DspError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| DspError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode_wav(&bytes)
}

/// Decodes an in-memory WAV byte buffer.
pub fn decode_wav(bytes: &[u8]) -> Result<Waveform, DspError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(DspError::Format("missing RIFF/WAVE header".into()));
    }
    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_start = pos + 8;
        // Writers sometimes leave a bogus size on the data chunk; clamp to what is present.
        let body_end = body_start.saturating_add(size).min(bytes.len());
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => fmt = Some(parse_fmt(body)?),
            b"data" => data = Some(body),
            _ => {}
        }
        pos = body_start.saturating_add(size).saturating_add(size & 1);
    }
    let fmt = fmt.ok_or_else(|| DspError::Format("missing fmt chunk".into()))?;
    let data = data.ok_or_else(|| DspError::Format("missing data chunk".into()))?;
    if fmt.channels == 0 || fmt.sample_rate == 0 {
        return Err(DspError::Format("zero channels or sample rate".into()));
    }
    let bytes_per_sample = (fmt.bits_per_sample as usize).div_ceil(8);
    let block = (fmt.block_align as usize).max(bytes_per_sample * fmt.channels as usize);
    let n_frames = data.len() / block;
    if n_frames == 0 {
        return Err(DspError::Empty);
    }

    let decode: fn(&[u8]) -> f64 = match (fmt.format, fmt.bits_per_sample) {
        (WAVE_FORMAT_PCM, 8) => |b| (b[0] as f64 - 128.0) / 128.0,
        (WAVE_FORMAT_PCM, 16) => |b| i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0,
        (WAVE_FORMAT_PCM, 24) => |b| {
            let v = i32::from_le_bytes([0, b[0], b[1], b[2]]) >> 8;
            v as f64 / 8_388_608.0
        },
        (WAVE_FORMAT_PCM, 32) => |b| i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64 / 2_147_483_648.0,
        (WAVE_FORMAT_IEEE_FLOAT, 32) => |b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
        (format, bits) => {
            return Err(DspError::Unsupported(format!(
                "format tag {format:#06x} with {bits} bits per sample"
            )))
        }
    };

    let channels = fmt.channels as usize;
    let mut samples = Vec::with_capacity(n_frames);
    for frame in data.chunks_exact(block).take(n_frames) {
        let mut acc = 0.0;
        for ch in 0..channels {
            let off = ch * bytes_per_sample;
            acc += decode(&frame[off..off + bytes_per_sample]);
        }
        let s = acc / channels as f64;
        if !s.is_finite() {
            return Err(DspError::NonFinite);
        }
        samples.push(s.clamp(-1.0, 1.0));
    }
    Waveform::new(samples, fmt.sample_rate)
}

fn parse_fmt(body: &[u8]) -> Result<FmtChunk, DspError> {
    if body.len() < 16 {
        return Err(DspError::Format("fmt chunk too short".into()));
    }
    let u16_at = |i: usize| u16::from_le_bytes([body[i], body[i + 1]]);
    let mut format = u16_at(0);
    if format == WAVE_FORMAT_EXTENSIBLE {
        if body.len() < 26 {
            return Err(DspError::Format("extensible fmt chunk too short".into()));
        }
        // first two bytes of the sub-format GUID carry the real tag
        format = u16_at(24);
    }
    Ok(FmtChunk {
        format,
        channels: u16_at(2),
        sample_rate: u32::from_le_bytes(body[4..8].try_into().unwrap()),
        block_align: u16_at(12),
        bits_per_sample: u16_at(14),
    })
}

/// Encodes mono samples as 16-bit PCM WAV bytes.
pub fn encode_wav_i16(samples: &[f64], sample_rate: u32) -> Vec<u8> {
    let data_len = (samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&WAVE_FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    // Hand-rolled writer kept separate from `encode_wav_i16`.
    fn wav_bytes(format: u16, channels: u16, rate: u32, bits: u16, payload: &[u8]) -> Vec<u8> {
        let block = channels * bits / 8;
        let mut v = b"RIFF".to_vec();
        v.extend((36 + payload.len() as u32).to_le_bytes());
        v.extend(b"WAVE");
        v.extend(b"fmt ");
        v.extend(16u32.to_le_bytes());
        v.extend(format.to_le_bytes());
        v.extend(channels.to_le_bytes());
        v.extend(rate.to_le_bytes());
        v.extend((rate * block as u32).to_le_bytes());
        v.extend(block.to_le_bytes());
        v.extend(bits.to_le_bytes());
        v.extend(b"LIST");
        v.extend(3u32.to_le_bytes());
        v.extend([1, 2, 3, 0]);
        v.extend(b"data");
        v.extend((payload.len() as u32).to_le_bytes());
        v.extend_from_slice(payload);
        v
    }

    #[test]
    fn constant_16bit_scales_to_half() {
        let payload: Vec<u8> = std::iter::repeat(16384i16.to_le_bytes()).take(100).flatten().collect();
        let w = decode_wav(&wav_bytes(1, 1, 8000, 16, &payload)).unwrap();
        assert_eq!(w.samples().len(), 100);
        assert!(w.samples().iter().all(|&s| (s - 0.5).abs() <= 1.0 / 32768.0));
    }

    #[test]
    fn opposite_stereo_channels_cancel() {
        let mut payload = Vec::new();
        for _ in 0..50 {
            payload.extend(16384i16.to_le_bytes());
            payload.extend((-16384i16).to_le_bytes());
        }
        let w = decode_wav(&wav_bytes(1, 2, 8000, 16, &payload)).unwrap();
        assert_eq!(w.samples().len(), 50);
        assert!(w.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn sine_round_trip_through_independent_writer() {
        let rate = 44100u32;
        let amp = 0.8;
        let payload: Vec<u8> = (0..rate)
            .flat_map(|i| {
                let s = amp * (2.0 * std::f64::consts::PI * 440.0 * i as f64 / rate as f64).sin();
                ((s * 32767.0).round() as i16).to_le_bytes()
            })
            .collect();
        let w = decode_wav(&wav_bytes(1, 1, rate, 16, &payload)).unwrap();
        assert_eq!(w.samples().len(), 44100);
        assert_eq!(w.sample_rate(), 44100);
        let peak = w.samples().iter().fold(0.0f64, |m, s| m.max(s.abs()));
        assert!((peak - amp).abs() < 1e-3, "peak {peak}");
    }

    #[test]
    fn other_bit_depths() {
        let w8 = decode_wav(&wav_bytes(1, 1, 8000, 8, &[128, 192, 64])).unwrap();
        assert_eq!(w8.samples(), &[0.0, 0.5, -0.5]);

        let mut p24 = Vec::new();
        p24.extend(&(4_194_304i32).to_le_bytes()[..3]);
        p24.extend(&(-4_194_304i32).to_le_bytes()[..3]);
        let w24 = decode_wav(&wav_bytes(1, 1, 8000, 24, &p24)).unwrap();
        assert_eq!(w24.samples(), &[0.5, -0.5]);

        let p32: Vec<u8> = [1_073_741_824i32, -1_073_741_824].iter().flat_map(|v| v.to_le_bytes()).collect();
        assert_eq!(decode_wav(&wav_bytes(1, 1, 8000, 32, &p32)).unwrap().samples(), &[0.5, -0.5]);

        let pf: Vec<u8> = [0.25f32, -0.75].iter().flat_map(|v| v.to_le_bytes()).collect();
        assert_eq!(decode_wav(&wav_bytes(3, 1, 8000, 32, &pf)).unwrap().samples(), &[0.25, -0.75]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(decode_wav(b"not a wav file"), Err(DspError::Format(_))));
        assert!(matches!(decode_wav(&wav_bytes(1, 1, 8000, 16, &[])), Err(DspError::Empty)));
        assert!(matches!(
            decode_wav(&wav_bytes(2, 1, 8000, 16, &[0, 0])),
            Err(DspError::Unsupported(_))
        ));
        assert!(matches!(load_wav("/nonexistent/file.wav"), Err(DspError::Io { .. })));
    }

    #[test]
    fn encoder_output_decodes() {
        let s = vec![0.0, 0.5, -0.5, 1.0];
        let w = decode_wav(&encode_wav_i16(&s, 16000)).unwrap();
        for (a, b) in w.samples().iter().zip(&s) {
            assert!((a - b).abs() < 1e-4);
        }
    }
}
