use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster_io::DisparityMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Pinhole camera parameters for back-projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    /// Focal length in pixels.
    pub focal: f64,
    /// Stereo baseline in meters.
    pub baseline: f64,
    pub cx: f64,
    pub cy: f64,
}

/// Back-projects every valid pixel with `d > 0`: `Z = f·B/d`, `X = (x − cx)·Z/f`, `Y = (y − cy)·Z/f`.
pub fn disparity_to_pointcloud(map: &DisparityMap, cam: &Intrinsics) -> Result<Vec<Point3>> {
    if !(cam.focal > 0.0 && cam.baseline > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "focal ({}) and baseline ({}) must be positive",
            cam.focal, cam.baseline
        )));
    }
    let mut points = Vec::with_capacity(map.valid_count());
    for y in 0..map.height() {
        for x in 0..map.width() {
            let Some(d) = map.get(x, y).filter(|d| *d > 0.0) else {
                continue;
            };
            let z = cam.focal * cam.baseline / f64::from(d);
            points.push(Point3 {
                x: (x as f64 - cam.cx) * z / cam.focal,
                y: (y as f64 - cam.cy) * z / cam.focal,
                z,
            });
        }
    }
    Ok(points)
}

/// ASCII PLY with one `x y z` vertex per point, in meters.
pub fn write_ply(points: &[Point3], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_ply_to(points, &mut out).map_err(|e| Error::io(path, e))
}

pub fn write_ply_to(points: &[Point3], out: &mut impl Write) -> std::io::Result<()> {
    write!(
        out,
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nend_header\n",
        points.len()
    )?;
    for p in points {
        writeln!(out, "{} {} {}", p.x as f32, p.y as f32, p.z as f32)?;
    }
    out.flush()
}
