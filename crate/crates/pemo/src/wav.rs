//! Minimal RIFF/WAVE reader and writer.
//!
//! Reads PCM 16/24/32-bit and IEEE float32; multichannel input is averaged to
//! mono. Writes mono 32-bit float, which round-trips the internal f64 buffers
//! with no quantization beyond the f32 cast.

use crate::error::{Error, Result};
use crate::signal::AudioSignal;
use std::io::{Read, Write};
use std::path::Path;

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioSignal> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_wav(&bytes)
}

pub fn write_wav(path: impl AsRef<Path>, signal: &AudioSignal) -> Result<()> {
    let bytes = encode_wav_f32(signal);
    std::fs::File::create(path)?.write_all(&bytes)?;
    Ok(())
}

fn le_u16(b: &[u8], at: usize) -> Result<u16> {
    b.get(at..at + 2)
        .map(|s| u16::from_le_bytes([s[0], s[1]]))
        .ok_or_else(|| Error::WavParse("truncated chunk".into()))
}

fn le_u32(b: &[u8], at: usize) -> Result<u32> {
    b.get(at..at + 4)
        .map(|s| u32::from_le_bytes([s[0], s[1], s[2], s[3]]))
        .ok_or_else(|| Error::WavParse("truncated chunk".into()))
}

pub fn decode_wav(bytes: &[u8]) -> Result<AudioSignal> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::WavParse("missing RIFF/WAVE header".into()));
    }
    let mut pos = 12;
    let mut fmt: Option<(u16, u16, u32, u16)> = None; // (format, channels, fs, bits)
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = le_u32(bytes, pos + 4)? as usize;
        let body_end = (pos + 8 + size).min(bytes.len());
        let body = &bytes[pos + 8..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(Error::WavParse("fmt chunk too small".into()));
                }
                let mut format = le_u16(body, 0)?;
                let channels = le_u16(body, 2)?;
                let fs = le_u32(body, 4)?;
                let bits = le_u16(body, 14)?;
                if format == FORMAT_EXTENSIBLE {
                    // sub-format GUID starts with the effective format code
                    if body.len() >= 26 {
                        format = le_u16(body, 24)?;
                    }
                }
                fmt = Some((format, channels, fs, bits));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        pos = pos + 8 + size + (size & 1); // chunks are word-aligned
    }
    let (format, channels, fs, bits) = fmt.ok_or_else(|| Error::WavParse("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::WavParse("no data chunk".into()))?;
    if channels == 0 {
        return Err(Error::WavParse("zero channels".into()));
    }
    let decode: fn(&[u8]) -> f64 = match (format, bits) {
        (FORMAT_PCM, 16) => |b| i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0,
        (FORMAT_PCM, 24) => |b| {
            let v = ((b[2] as i32) << 16 | (b[1] as i32) << 8 | b[0] as i32) << 8 >> 8;
            v as f64 / 8388608.0
        },
        (FORMAT_PCM, 32) => |b| i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64 / 2147483648.0,
        (FORMAT_IEEE_FLOAT, 32) => |b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
        _ => {
            return Err(Error::WavUnsupported(format!("format code {format}, {bits} bits")));
        }
    };
    let bytes_per = (bits / 8) as usize;
    let frame = bytes_per * channels as usize;
    let n_frames = data.len() / frame;
    let mut samples = Vec::with_capacity(n_frames);
    for i in 0..n_frames {
        let mut acc = 0.0;
        for c in 0..channels as usize {
            let at = i * frame + c * bytes_per;
            acc += decode(&data[at..at + bytes_per]);
        }
        samples.push(acc / channels as f64);
    }
    Ok(AudioSignal::new(samples, fs as f64))
}

pub fn encode_wav_f32(signal: &AudioSignal) -> Vec<u8> {
    let n = signal.samples.len();
    let data_size = 4 * n as u32;
    let mut out = Vec::with_capacity(58 + 4 * n);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_size).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_IEEE_FLOAT.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    let fs = signal.fs_hz.round() as u32;
    out.extend_from_slice(&fs.to_le_bytes());
    out.extend_from_slice(&(fs * 4).to_le_bytes()); // byte rate
    out.extend_from_slice(&4u16.to_le_bytes()); // block align
    out.extend_from_slice(&32u16.to_le_bytes()); // bits
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_size.to_le_bytes());
    for &s in &signal.samples {
        out.extend_from_slice(&(s as f32).to_le_bytes());
    }
    out
}
