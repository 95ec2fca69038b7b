use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{read_mask_png, write_mask_png, DisparityMap};
use crate::error::{Error, Result};

const FORMAT: &str = "PFM";

/// Path of the validity sidecar written next to a PFM that has invalid pixels:
/// `disp.pfm` → `disp.pfm.valid.png`.
pub fn mask_sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".valid.png");
    PathBuf::from(name)
}

/// Reads a grayscale PFM. Rows are returned top-down whatever the scale sign.
///
/// Non-finite and negative samples are invalid. If a validity sidecar
/// (see [`mask_sidecar_path`]) exists, its zero pixels are invalid as well.
pub fn read_pfm(path: &Path) -> Result<DisparityMap> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (width, height, little_endian, offset) = parse_header(&bytes)?;

    let count = width
        .checked_mul(height)
        .ok_or_else(|| malformed(format!("{width}x{height} overflows")))?;
    let expected = count
        .checked_mul(4)
        .ok_or_else(|| malformed(format!("{width}x{height} overflows")))?;
    let payload = &bytes[offset..];
    if payload.len() < expected {
        return Err(Error::Truncated {
            format: FORMAT,
            expected,
            found: payload.len(),
        });
    }

    let mut values = vec![0.0f32; count];
    for (row_on_disk, chunk) in payload[..expected].chunks_exact(width * 4).enumerate() {
        let y = height - 1 - row_on_disk;
        let row = &mut values[y * width..(y + 1) * width];
        for (v, b) in row.iter_mut().zip(chunk.chunks_exact(4)) {
            let raw = [b[0], b[1], b[2], b[3]];
            *v = if little_endian {
                f32::from_le_bytes(raw)
            } else {
                f32::from_be_bytes(raw)
            };
        }
    }

    let sidecar = mask_sidecar_path(path);
    if sidecar.exists() {
        let (mw, mh, mask) = read_mask_png(&sidecar)?;
        if (mw, mh) != (width, height) {
            return Err(Error::DimensionMismatch(format!(
                "{} is {mw}x{mh}, PFM is {width}x{height}",
                sidecar.display()
            )));
        }
        return DisparityMap::with_mask(width, height, values, mask);
    }
    DisparityMap::from_values(width, height, values)
}

/// Writes a little-endian grayscale PFM (scale `-1.0`, rows bottom-up).
///
/// Invalid pixels are stored as `0.0`. When the map has any invalid pixel a
/// validity sidecar PNG is written next to it; otherwise a stale sidecar is removed.
pub fn write_pfm(map: &DisparityMap, path: &Path) -> Result<()> {
    let (width, height) = (map.width(), map.height());
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);

    write!(out, "Pf\n{width} {height}\n-1.0\n").map_err(io_err)?;
    let mut row_bytes = Vec::with_capacity(width * 4);
    for y in (0..height).rev() {
        row_bytes.clear();
        for x in 0..width {
            let v = map.get(x, y).unwrap_or(0.0);
            row_bytes.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&row_bytes).map_err(io_err)?;
    }
    out.flush().map_err(io_err)?;

    let sidecar = mask_sidecar_path(path);
    if map.valid_count() < map.len() {
        write_mask_png(map.mask(), width, height, &sidecar)?;
    } else if sidecar.exists() {
        fs::remove_file(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    }
    Ok(())
}

fn malformed(reason: String) -> Error {
    Error::MalformedHeader {
        format: FORMAT,
        reason,
    }
}

/// Returns `(width, height, little_endian, payload_offset)`.
fn parse_header(bytes: &[u8]) -> Result<(usize, usize, bool, usize)> {
    let mut pos = 0;
    let mut tokens = Vec::with_capacity(4);
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(malformed("header ends early".into()));
        }
        if pos - start > 32 {
            return Err(malformed("header token too long".into()));
        }
        let token = std::str::from_utf8(&bytes[start..pos])
            .map_err(|_| malformed("header is not ASCII".into()))?;
        tokens.push(token);
    }
    // exactly one whitespace byte separates the scale from the payload
    if pos >= bytes.len() {
        return Err(Error::Truncated {
            format: FORMAT,
            expected: 1,
            found: 0,
        });
    }
    pos += 1;

    match tokens[0] {
        "Pf" => {}
        "PF" => {
            return Err(Error::Unsupported {
                format: FORMAT,
                reason: "3-channel color PFM".into(),
            })
        }
        other => return Err(malformed(format!("bad magic {other:?}"))),
    }
    let width: usize = tokens[1]
        .parse()
        .map_err(|_| malformed(format!("bad width {:?}", tokens[1])))?;
    let height: usize = tokens[2]
        .parse()
        .map_err(|_| malformed(format!("bad height {:?}", tokens[2])))?;
    let scale: f64 = tokens[3]
        .parse()
        .map_err(|_| malformed(format!("bad scale {:?}", tokens[3])))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(malformed(format!("bad scale {scale}")));
    }
    Ok((width, height, scale < 0.0, pos))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_raw(path: &Path, header: &str, rows_bottom_up: &[f32], big_endian: bool) {
        let mut bytes = header.as_bytes().to_vec();
        for v in rows_bottom_up {
            if big_endian {
                bytes.extend_from_slice(&v.to_be_bytes());
            } else {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        fs::write(path, bytes).unwrap();
    }

    #[test]
    fn two_by_two_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.pfm");
        let b = dir.path().join("b.pfm");
        // [[1,2],[3,4]] top-down is stored bottom-up as 3 4 1 2
        write_raw(&a, "Pf\n2 2\n-1.0\n", &[3.0, 4.0, 1.0, 2.0], false);
        let map = read_pfm(&a).unwrap();
        assert_eq!(map.values(), &[1.0, 2.0, 3.0, 4.0]);
        write_pfm(&map, &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        assert!(!mask_sidecar_path(&b).exists());
    }

    #[test]
    fn big_endian_scale_is_honoured() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("be.pfm");
        write_raw(&p, "Pf\n2 1\n1.0\n", &[5.5, 6.5], true);
        assert_eq!(read_pfm(&p).unwrap().values(), &[5.5, 6.5]);
    }

    #[test]
    fn infinite_pixel_is_invalid() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("inf.pfm");
        write_raw(&p, "Pf\n2 2\n-1.0\n", &[3.0, f32::INFINITY, 1.0, 2.0], false);
        let map = read_pfm(&p).unwrap();
        assert_eq!(map.mask(), &[true, true, true, false]);
        assert_eq!(map.valid_count(), 3);
    }

    #[test]
    fn negative_and_nan_are_invalid() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("neg.pfm");
        write_raw(&p, "Pf\n3 1\n-1.0\n", &[-1.0, f32::NAN, 0.0], false);
        assert_eq!(read_pfm(&p).unwrap().mask(), &[false, false, true]);
    }

    #[test]
    fn invalid_pixels_survive_via_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sparse.pfm");
        let map = DisparityMap::with_mask(2, 1, vec![7.0, 9.0], vec![true, false]).unwrap();
        write_pfm(&map, &p).unwrap();
        assert!(mask_sidecar_path(&p).exists());
        let back = read_pfm(&p).unwrap();
        assert_eq!(back.mask(), map.mask());
        assert_eq!(back.get(0, 0), Some(7.0));

        // rewriting a dense map drops the stale sidecar
        let dense = DisparityMap::from_values(2, 1, vec![1.0, 2.0]).unwrap();
        write_pfm(&dense, &p).unwrap();
        assert!(!mask_sidecar_path(&p).exists());
        assert_eq!(read_pfm(&p).unwrap().valid_count(), 2);
    }

    #[test]
    fn rejects_color_pfm() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.pfm");
        write_raw(&p, "PF\n1 1\n-1.0\n", &[1.0, 2.0, 3.0], false);
        assert!(matches!(read_pfm(&p), Err(Error::Unsupported { .. })));
    }

    #[test]
    fn rejects_malformed_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.pfm");
        for header in ["P5\n1 1\n-1.0\n", "Pf\nx 1\n-1.0\n", "Pf\n1 1\n0.0\n", "Pf\n1"] {
            fs::write(&p, header).unwrap();
            assert!(read_pfm(&p).is_err(), "{header:?} accepted");
        }
    }

    #[test]
    fn rejects_truncated_payload() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("short.pfm");
        write_raw(&p, "Pf\n2 2\n-1.0\n", &[1.0, 2.0, 3.0], false);
        assert!(matches!(read_pfm(&p), Err(Error::Truncated { .. })));
    }

    #[test]
    fn missing_file_reports_path() {
        let err = read_pfm(Path::new("/nonexistent/x.pfm")).unwrap_err();
        assert!(err.is_io());
        assert!(err.to_string().contains("/nonexistent/x.pfm"));
    }
}
