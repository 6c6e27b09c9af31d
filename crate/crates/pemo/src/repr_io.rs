//! Representation files: JSON header + little-endian f64 payload.

use crate::modulation::{AudioBandInfo, InternalRepresentation};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"PEMOREP1";

#[derive(Serialize, Deserialize)]
struct Header {
    fs_hz: f64,
    t_obs_s: Option<f64>,
    n_samples: usize,
    audio_bands: Vec<AudioBandInfo>,
    n_mod_bands: Vec<usize>,
}

pub fn write_representation(w: &mut impl Write, r: &InternalRepresentation) -> Result<()> {
    let header = Header {
        fs_hz: r.fs_hz,
        t_obs_s: r.t_obs_s,
        n_samples: r.n_samples(),
        audio_bands: r.audio_bands.clone(),
        n_mod_bands: (0..r.n_audio_bands()).map(|m| r.n_mod_bands(m)).collect(),
    };
    let head = serde_json::to_vec(&header).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_all(&(head.len() as u32).to_le_bytes())?;
    w.write_all(&head)?;
    for ch in r.channels.iter().flatten() {
        for &v in ch {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_representation(rd: &mut impl Read) -> Result<InternalRepresentation> {
    let mut magic = [0u8; 8];
    rd.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::InvalidArgument("not a representation file".into()));
    }
    let mut len = [0u8; 4];
    rd.read_exact(&mut len)?;
    let mut head = vec![0u8; u32::from_le_bytes(len) as usize];
    rd.read_exact(&mut head)?;
    let header: Header =
        serde_json::from_slice(&head).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    if header.audio_bands.len() != header.n_mod_bands.len() {
        return Err(Error::InvalidArgument("band metadata lengths disagree".into()));
    }
    let mut channels = Vec::with_capacity(header.audio_bands.len());
    let mut buf = vec![0u8; header.n_samples * 8];
    for &n_mods in &header.n_mod_bands {
        let mut mods = Vec::with_capacity(n_mods);
        for _ in 0..n_mods {
            rd.read_exact(&mut buf)?;
            mods.push(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect());
        }
        channels.push(mods);
    }
    Ok(InternalRepresentation {
        fs_hz: header.fs_hz,
        audio_bands: header.audio_bands,
        channels,
        t_obs_s: header.t_obs_s,
    })
}

pub fn save(path: &Path, r: &InternalRepresentation) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_representation(&mut f, r)
}

pub fn load(path: &Path) -> Result<InternalRepresentation> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_representation(&mut f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rep() -> InternalRepresentation {
        InternalRepresentation {
            fs_hz: 1000.0,
            audio_bands: vec![
                AudioBandInfo { fc_hz: 100.0, erb_number: 3.0 },
                AudioBandInfo { fc_hz: 200.0, erb_number: 4.0 },
            ],
            channels: vec![
                vec![vec![1.0, -2.0, 3.5], vec![0.0, 0.25, -0.125]],
                vec![vec![9.0, 8.0, 7.0]],
            ],
            t_obs_s: Some(0.003),
        }
    }

    #[test]
    fn round_trip_preserves_everything() {
        let r = sample_rep();
        let mut buf = Vec::new();
        write_representation(&mut buf, &r).unwrap();
        let back = read_representation(&mut buf.as_slice()).unwrap();
        assert_eq!(back.fs_hz, r.fs_hz);
        assert_eq!(back.t_obs_s, r.t_obs_s);
        assert_eq!(back.channels, r.channels);
        assert_eq!(back.audio_bands, r.audio_bands);
    }

    #[test]
    fn rejects_foreign_files() {
        let r = read_representation(&mut &b"RIFFxxxxWAVE"[..]);
        assert!(r.is_err());
    }
}
