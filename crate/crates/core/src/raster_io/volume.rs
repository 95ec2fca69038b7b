use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use super::DistributionVolume;
use crate::error::{Error, Result};

pub const VOLUME_MAGIC: [u8; 4] = *b"ADLV";
pub const VOLUME_VERSION: u32 = 1;
const HEADER_LEN: usize = 20;
const FORMAT: &str = "ADLV";

/// A volume read from disk together with its normalization check.
#[derive(Debug, Clone)]
pub struct LoadedVolume {
    pub volume: DistributionVolume,
    /// Number of non-skipped pixels that do not sum to one. Nonzero means the
    /// file is readable but should not be trusted as a probability volume.
    pub unnormalized_pixels: usize,
}

impl LoadedVolume {
    pub fn warning(&self) -> bool {
        self.unnormalized_pixels > 0
    }
}

/// Writes `magic, version, W, H, D` as little-endian `u32`s followed by the
/// `f32` payload in d-major, row-major order. No normalization check is made.
pub fn write_volume(volume: &DistributionVolume, path: &Path) -> Result<()> {
    let dims = [volume.width(), volume.height(), volume.d_max()];
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(&VOLUME_MAGIC);
    header.extend_from_slice(&VOLUME_VERSION.to_le_bytes());
    for dim in dims {
        let dim = u32::try_from(dim).map_err(|_| Error::Unsupported {
            format: FORMAT,
            reason: format!("dimension {dim} exceeds u32"),
        })?;
        header.extend_from_slice(&dim.to_le_bytes());
    }

    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::with_capacity(1 << 20, file);
    let io_err = |e| Error::io(path, e);
    out.write_all(&header).map_err(io_err)?;
    let mut buf = Vec::with_capacity(4 * 4096);
    for chunk in volume.as_slice().chunks(4096) {
        buf.clear();
        for v in chunk {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn read_volume(path: &Path) -> Result<LoadedVolume> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let volume = decode_volume(&bytes)?;
    let unnormalized_pixels = volume.unnormalized_pixels();
    if unnormalized_pixels > 0 {
        log::warn!(
            "{}: {unnormalized_pixels} pixel distributions do not sum to 1",
            path.display()
        );
    }
    Ok(LoadedVolume {
        volume,
        unnormalized_pixels,
    })
}

fn decode_volume(bytes: &[u8]) -> Result<DistributionVolume> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            format: FORMAT,
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    if bytes[..4] != VOLUME_MAGIC {
        return Err(Error::MalformedHeader {
            format: FORMAT,
            reason: format!("bad magic {:02x?}", &bytes[..4]),
        });
    }
    let word = |i: usize| u32::from_le_bytes([bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]]);
    let version = word(4);
    if version != VOLUME_VERSION {
        return Err(Error::Unsupported {
            format: FORMAT,
            reason: format!("version {version}"),
        });
    }
    let (width, height, d_max) = (word(8) as usize, word(12) as usize, word(16) as usize);
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(d_max))
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::MalformedHeader {
            format: FORMAT,
            reason: format!("dimensions {width}x{height}x{d_max} overflow"),
        })?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < expected {
        return Err(Error::Truncated {
            format: FORMAT,
            expected,
            found: payload.len(),
        });
    }
    let probs = payload[..expected]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    DistributionVolume::from_raw(width, height, d_max, probs)
}
