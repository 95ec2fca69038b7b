use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use super::DisparityMap;
use crate::error::{Error, Result};

/// Quantization step of the KITTI encoding.
pub const KITTI_SCALE: f32 = 256.0;

fn png_err(e: impl std::fmt::Display) -> Error {
    Error::Png(e.to_string())
}

fn decode(path: &Path) -> Result<(png::OutputInfo, Vec<u8>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(png_err)?;
    let mut buf = vec![0; reader.output_buffer_size().ok_or_else(|| png_err("image too large"))?];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    buf.truncate(info.buffer_size());
    Ok((info, buf))
}

fn encode(path: &Path, width: usize, height: usize, depth: png::BitDepth, data: &[u8]) -> Result<()> {
    let (w, h) = (
        u32::try_from(width).map_err(|_| png_err("width exceeds u32"))?,
        u32::try_from(height).map_err(|_| png_err("height exceeds u32"))?,
    );
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), w, h);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(depth);
    let mut writer = encoder.write_header().map_err(png_err)?;
    writer.write_image_data(data).map_err(png_err)?;
    writer.finish().map_err(png_err)
}

/// Reads a KITTI disparity PNG: 16-bit grayscale, `disparity = value / 256`, `0` = no label.
pub fn read_kitti_png(path: &Path) -> Result<DisparityMap> {
    let (info, buf) = decode(path)?;
    if info.color_type != png::ColorType::Grayscale {
        return Err(Error::Unsupported {
            format: "KITTI PNG",
            reason: format!("expected 1 channel, found {:?}", info.color_type),
        });
    }
    if info.bit_depth != png::BitDepth::Sixteen {
        return Err(Error::Unsupported {
            format: "KITTI PNG",
            reason: format!("expected 16-bit samples, found {:?}", info.bit_depth),
        });
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let mut values = Vec::with_capacity(width * height);
    let mut mask = Vec::with_capacity(width * height);
    // png stores 16-bit samples big-endian
    for s in buf.chunks_exact(2) {
        let raw = u16::from_be_bytes([s[0], s[1]]);
        values.push(f32::from(raw) / KITTI_SCALE);
        mask.push(raw != 0);
    }
    DisparityMap::with_mask(width, height, values, mask)
}

/// Writes a KITTI disparity PNG with `value = round(disparity * 256)`; invalid pixels encode as `0`.
///
/// Valid disparities must round to a value in `1..=65535`, i.e. lie in `[1/512, 256)`.
pub fn write_kitti_png(map: &DisparityMap, path: &Path) -> Result<()> {
    let (width, height) = (map.width(), map.height());
    let mut data = Vec::with_capacity(width * height * 2);
    for y in 0..height {
        for x in 0..width {
            let stored = match map.get(x, y) {
                None => 0u16,
                Some(d) => {
                    let q = (d * KITTI_SCALE).round();
                    if q > f32::from(u16::MAX) {
                        return Err(Error::OutOfRange {
                            x,
                            y,
                            value: d,
                            reason: "KITTI PNG holds disparities below 256",
                        });
                    }
                    if q < 1.0 {
                        return Err(Error::OutOfRange {
                            x,
                            y,
                            value: d,
                            reason: "rounds to 0, which KITTI PNG reserves for missing labels",
                        });
                    }
                    q as u16
                }
            };
            data.extend_from_slice(&stored.to_be_bytes());
        }
    }
    encode(path, width, height, png::BitDepth::Sixteen, &data)
}

/// Writes a validity mask as an 8-bit grayscale PNG (255 = valid, 0 = invalid).
pub fn write_mask_png(mask: &[bool], width: usize, height: usize, path: &Path) -> Result<()> {
    if mask.len() != width * height {
        return Err(Error::DimensionMismatch(format!(
            "mask has {} entries for a {width}x{height} raster",
            mask.len()
        )));
    }
    let data: Vec<u8> = mask.iter().map(|&v| if v { 255 } else { 0 }).collect();
    encode(path, width, height, png::BitDepth::Eight, &data)
}

/// Reads a grayscale validity mask of 8 or 16 bits; any nonzero sample is valid.
/// Returns `(width, height, mask)`.
pub fn read_mask_png(path: &Path) -> Result<(usize, usize, Vec<bool>)> {
    let (info, buf) = decode(path)?;
    if info.color_type != png::ColorType::Grayscale {
        return Err(Error::Unsupported {
            format: "mask PNG",
            reason: format!("expected 1 channel, found {:?}", info.color_type),
        });
    }
    let mask = match info.bit_depth {
        png::BitDepth::Eight => buf.iter().map(|&v| v != 0).collect(),
        png::BitDepth::Sixteen => buf.chunks_exact(2).map(|s| s[0] != 0 || s[1] != 0).collect(),
        other => {
            return Err(Error::Unsupported {
                format: "mask PNG",
                reason: format!("unsupported bit depth {other:?}"),
            })
        }
    };
    Ok((info.width as usize, info.height as usize, mask))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_25600_is_disparity_100() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("k.png");
        let data: Vec<u8> = [25600u16, 0].iter().flat_map(|v| v.to_be_bytes()).collect();
        encode(&p, 2, 1, png::BitDepth::Sixteen, &data).unwrap();
        let map = read_kitti_png(&p).unwrap();
        assert_eq!(map.get(0, 0), Some(100.0));
        assert_eq!(map.get(1, 0), None);
    }

    #[test]
    fn rejects_eight_bit() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("k8.png");
        encode(&p, 1, 1, png::BitDepth::Eight, &[9]).unwrap();
        assert!(matches!(read_kitti_png(&p), Err(Error::Unsupported { .. })));
    }

    #[test]
    fn rejects_rgb() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rgb.png");
        let file = File::create(&p).unwrap();
        let mut enc = png::Encoder::new(BufWriter::new(file), 1, 1);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Sixteen);
        enc.write_header().unwrap().write_image_data(&[0; 6]).unwrap();
        assert!(matches!(read_kitti_png(&p), Err(Error::Unsupported { .. })));
    }

    #[test]
    fn rejects_unrepresentable_disparity() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("big.png");
        let map = DisparityMap::from_values(1, 1, vec![256.0]).unwrap();
        assert!(matches!(write_kitti_png(&map, &p), Err(Error::OutOfRange { .. })));
        let tiny = DisparityMap::from_values(1, 1, vec![0.001]).unwrap();
        assert!(matches!(write_kitti_png(&tiny, &p), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn mask_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.png");
        let mask = vec![true, false, false, true, true, false];
        write_mask_png(&mask, 3, 2, &p).unwrap();
        assert_eq!(read_mask_png(&p).unwrap(), (3, 2, mask));
    }
}
