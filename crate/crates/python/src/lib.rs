// Python wrapper. Marshalling only: every computation happens in adl-core.
use std::path::PathBuf;

use numpy::ndarray::{Array2, Array3};
use numpy::{IntoPyArray, PyArray2, PyArray3, PyReadonlyArray1, PyReadonlyArray2, PyReadonlyArray3};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use adl_core::cli::{GtMode, Tunables, WindowSize, DENSE_COVERAGE};
use adl_core::estimator::{self, Method};
use adl_core::{gt_model, loss, raster_io, DisparityMap, DistributionVolume, Error};

fn to_py(e: Error) -> PyErr {
    if e.is_io() {
        PyIOError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

/// Reads `config` keys with the CLI flag names (`-` or `_` separators both accepted).
fn tunables_from_dict(config: Option<&Bound<'_, PyDict>>) -> PyResult<Tunables> {
    let mut t = Tunables::default();
    let Some(config) = config else {
        return Ok(t);
    };
    for (key, value) in config.iter() {
        let key: String = key.extract()?;
        match key.replace('_', "-").as_str() {
            "window" => {
                t.window = Some(if let Ok(s) = value.extract::<String>() {
                    s.parse::<WindowSize>().map_err(PyValueError::new_err)?
                } else {
                    let (rows, cols): (usize, usize) = value.extract()?;
                    WindowSize { rows, cols }
                })
            }
            "eps" => t.eps = Some(value.extract()?),
            "min-pts" => t.min_pts = Some(value.extract()?),
            "alpha" => t.alpha = Some(value.extract()?),
            "b" => t.b = Some(value.extract()?),
            "dmax" => t.dmax = Some(value.extract()?),
            "method" => t.method = Some(value.extract()?),
            "peak-threshold" => t.peak_threshold = Some(value.extract()?),
            "gt-mode" => {
                let mode: String = value.extract()?;
                t.gt_mode = Some(match mode.as_str() {
                    "auto" => GtMode::Auto,
                    "dense" => GtMode::Dense,
                    "sparse" => GtMode::Sparse,
                    other => return Err(PyValueError::new_err(format!("unknown gt-mode `{other}`"))),
                })
            }
            "threads" | "keep" | "seed" => {}
            other => return Err(PyValueError::new_err(format!("unknown config key `{other}`"))),
        }
    }
    Ok(t)
}

fn volume_from_array(a: &PyReadonlyArray3<'_, f32>) -> PyResult<DistributionVolume> {
    let view = a.as_array();
    let (d, h, w) = view.dim();
    let data = match view.as_slice() {
        Some(s) => s.to_vec(),
        None => view.iter().copied().collect(),
    };
    DistributionVolume::from_raw(w, h, d, data).map_err(to_py)
}

fn volume_to_array<'py>(py: Python<'py>, v: DistributionVolume) -> PyResult<Bound<'py, PyArray3<f32>>> {
    let shape = (v.d_max(), v.height(), v.width());
    let array = Array3::from_shape_vec(shape, v.into_raw()).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(array.into_pyarray(py))
}

fn mask_to_vec(mask: &PyReadonlyArray2<'_, bool>, h: usize, w: usize) -> PyResult<Vec<bool>> {
    let view = mask.as_array();
    if view.dim() != (h, w) {
        return Err(PyValueError::new_err(format!(
            "mask has shape {:?}, expected ({h}, {w})",
            view.dim()
        )));
    }
    Ok(view.iter().copied().collect())
}

/// Builds the ground-truth distribution volume.
///
/// `gt` is an (H, W) float32 disparity array; `valid` marks labeled pixels
/// (default: finite, nonnegative entries). Returns a (D, H, W) float32
/// volume and an (H, W) boolean array that is True where a pixel was skipped.
#[pyfunction]
#[pyo3(signature = (gt, valid=None, config=None))]
fn build_gt_volume<'py>(
    py: Python<'py>,
    gt: PyReadonlyArray2<'py, f32>,
    valid: Option<PyReadonlyArray2<'py, bool>>,
    config: Option<&Bound<'py, PyDict>>,
) -> PyResult<(Bound<'py, PyArray3<f32>>, Bound<'py, PyArray2<bool>>)> {
    let view = gt.as_array();
    let (h, w) = view.dim();
    let values: Vec<f32> = view.iter().copied().collect();
    let map = match valid {
        Some(mask) => DisparityMap::with_mask(w, h, values, mask_to_vec(&mask, h, w)?),
        None => DisparityMap::from_values(w, h, values),
    }
    .map_err(to_py)?;
    let tunables = tunables_from_dict(config)?;
    let dense = match tunables.gt_mode.unwrap_or(GtMode::Auto) {
        GtMode::Dense => true,
        GtMode::Sparse => false,
        GtMode::Auto => map.coverage() >= DENSE_COVERAGE,
    };
    let cfg = tunables.resolve(dense).map_err(to_py)?;
    let built = py.detach(|| gt_model::build_gt_volume(&map, &cfg.window, &cfg.model));
    let skipped: Vec<bool> = built.modeled.iter().map(|m| !m).collect();
    let skipped = Array2::from_shape_vec((h, w), skipped).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((volume_to_array(py, built.volume)?, skipped.into_pyarray(py)))
}

/// Mean cross-entropy of softmax(logits) against `p_gt` over non-skipped pixels,
/// and the gradient of that mean with respect to the logits.
#[pyfunction]
#[pyo3(signature = (p_gt, logits, skip))]
fn loss_and_grad<'py>(
    py: Python<'py>,
    p_gt: PyReadonlyArray3<'py, f32>,
    logits: PyReadonlyArray3<'py, f32>,
    skip: PyReadonlyArray2<'py, bool>,
) -> PyResult<(f64, Bound<'py, PyArray3<f32>>)> {
    let target = volume_from_array(&p_gt)?;
    let logits = volume_from_array(&logits)?;
    let modeled: Vec<bool> = mask_to_vec(&skip, target.height(), target.width())?
        .into_iter()
        .map(|s| !s)
        .collect();
    let (value, grad) = py
        .detach(|| loss::volume_loss_and_grad(&target, &modeled, &logits))
        .map_err(to_py)?;
    Ok((value, volume_to_array(py, grad)?))
}

/// Per-pixel disparity with `method` in {"softargmax", "sme", "dme"}.
/// Skipped (all-zero) pixels come back as NaN.
#[pyfunction]
#[pyo3(signature = (volume, method="dme"))]
fn estimate<'py>(
    py: Python<'py>,
    volume: PyReadonlyArray3<'py, f32>,
    method: &str,
) -> PyResult<Bound<'py, PyArray2<f32>>> {
    let method: Method = method.parse().map_err(to_py)?;
    let vol = volume_from_array(&volume)?;
    let map = py.detach(|| estimator::estimate_volume(&vol, method)).map_err(to_py)?;
    let values: Vec<f32> = map
        .values()
        .iter()
        .zip(map.mask())
        .map(|(&v, &ok)| if ok { v } else { f32::NAN })
        .collect();
    let out = Array2::from_shape_vec((map.height(), map.width()), values)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(out.into_pyarray(py))
}

fn as_f64(a: &PyReadonlyArray1<'_, f64>) -> Vec<f64> {
    a.as_array().iter().copied().collect()
}

#[pyfunction]
fn cross_entropy(p_gt: PyReadonlyArray1<'_, f64>, p: PyReadonlyArray1<'_, f64>) -> PyResult<f64> {
    loss::cross_entropy(&as_f64(&p_gt), &as_f64(&p)).map_err(to_py)
}

#[pyfunction]
fn ce_gradient_wrt_logits(p_gt: PyReadonlyArray1<'_, f64>, logits: PyReadonlyArray1<'_, f64>) -> PyResult<Vec<f64>> {
    loss::ce_gradient_wrt_logits(&as_f64(&p_gt), &as_f64(&logits)).map_err(to_py)
}

#[pyfunction]
fn soft_argmax(p: PyReadonlyArray1<'_, f64>) -> PyResult<f64> {
    estimator::soft_argmax(&as_f64(&p)).map_err(to_py)
}

#[pyfunction]
fn sme_estimate(p: PyReadonlyArray1<'_, f64>) -> f64 {
    estimator::sme_estimate(&as_f64(&p))
}

#[pyfunction]
fn dme_estimate(p: PyReadonlyArray1<'_, f64>) -> f64 {
    estimator::dme_estimate(&as_f64(&p))
}

/// Modals as `(d_l, d_r, peak, mass, mean)` tuples.
#[pyfunction]
#[pyo3(signature = (p, peak_threshold=0.0))]
fn segment_modals(p: PyReadonlyArray1<'_, f64>, peak_threshold: f64) -> Vec<(usize, usize, f64, f64, f64)> {
    estimator::segment_modals(&as_f64(&p), peak_threshold)
        .into_iter()
        .map(|s| (s.d_l, s.d_r, s.peak, s.mass, s.mean))
        .collect()
}

/// Reads an ADLV file as a (D, H, W) float32 array.
#[pyfunction]
fn read_volume(py: Python<'_>, path: PathBuf) -> PyResult<Bound<'_, PyArray3<f32>>> {
    let loaded = raster_io::read_volume(&path).map_err(to_py)?;
    volume_to_array(py, loaded.volume)
}

#[pyfunction]
fn write_volume(volume: PyReadonlyArray3<'_, f32>, path: PathBuf) -> PyResult<()> {
    raster_io::write_volume(&volume_from_array(&volume)?, &path).map_err(to_py)
}

#[pymodule]
fn adl_stereo(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(build_gt_volume, m)?)?;
    m.add_function(wrap_pyfunction!(loss_and_grad, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(cross_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(ce_gradient_wrt_logits, m)?)?;
    m.add_function(wrap_pyfunction!(soft_argmax, m)?)?;
    m.add_function(wrap_pyfunction!(sme_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(dme_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(segment_modals, m)?)?;
    m.add_function(wrap_pyfunction!(read_volume, m)?)?;
    m.add_function(wrap_pyfunction!(write_volume, m)?)?;
    Ok(())
}
