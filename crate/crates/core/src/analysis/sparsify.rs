use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster_io::DisparityMap;

/// Keeps each labeled pixel independently with probability `keep_fraction`.
///
/// Row `y` draws from a ChaCha8 stream selected by `y` under `seed`, so the
/// output depends only on `(gt, keep_fraction, seed)`, never on thread scheduling.
pub fn downsample_gt(gt: &DisparityMap, keep_fraction: f64, seed: u64) -> Result<DisparityMap> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "keep fraction must lie in (0, 1], got {keep_fraction}"
        )));
    }
    let width = gt.width();
    let mut mask = gt.mask().to_vec();
    if width > 0 {
        mask.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(y as u64);
            for valid in row.iter_mut() {
                // one draw per pixel, labeled or not, keeps streams aligned with columns
                let u: f64 = rng.random();
                *valid &= u < keep_fraction;
            }
        });
    }
    DisparityMap::with_mask(gt.width(), gt.height(), gt.values().to_vec(), mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keep_all_is_identity() {
        let gt = DisparityMap::with_mask(4, 2, vec![3.0; 8], vec![true, false, true, true, true, true, false, true]).unwrap();
        assert_eq!(downsample_gt(&gt, 1.0, 9).unwrap(), gt);
    }

    #[test]
    fn same_seed_same_output() {
        let gt = DisparityMap::from_values(64, 64, vec![1.0; 4096]).unwrap();
        let a = downsample_gt(&gt, 0.5, 42).unwrap();
        assert_eq!(a, downsample_gt(&gt, 0.5, 42).unwrap());
        assert_ne!(a, downsample_gt(&gt, 0.5, 43).unwrap());
    }

    #[test]
    fn never_revives_invalid_pixels() {
        let gt = DisparityMap::with_mask(3, 1, vec![1.0; 3], vec![false, true, false]).unwrap();
        let out = downsample_gt(&gt, 0.9, 1).unwrap();
        assert!(!out.mask()[0] && !out.mask()[2]);
    }

    #[test]
    fn rejects_bad_fraction() {
        let gt = DisparityMap::invalid(1, 1);
        assert!(downsample_gt(&gt, 0.0, 1).is_err());
        assert!(downsample_gt(&gt, 1.5, 1).is_err());
    }
}
