//! Depth-view corruption: sensor noise and missing-data holes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::raster::{clamp_foreground, DepthView};
use crate::error::{Error, Result};

/// Perturbs foreground pixels with i.i.d. `N(0, sigma²)` noise, clamped to `(0, 1]`.
pub fn add_noise(depth: &DepthView, sigma: f64, seed: u64) -> Result<DepthView> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("noise sigma {sigma} must be non-negative")));
    }
    let mut out = depth.clone();
    if sigma == 0.0 {
        return Ok(out);
    }
    let normal = Normal::new(0.0, sigma).expect("sigma checked above");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in out.values.iter_mut().filter(|v| **v > 0.0) {
        *v = clamp_foreground(*v as f64 + normal.sample(&mut rng));
    }
    Ok(out)
}

/// Clears `count` disks of radius `radius_px` to background. Disk centres are
/// drawn uniformly from the pixels that are foreground before any hole is cut.
pub fn punch_holes(depth: &DepthView, count: usize, radius_px: f64, seed: u64) -> Result<DepthView> {
    if !(radius_px >= 0.0) {
        return Err(Error::invalid(format!("hole radius {radius_px} must be non-negative")));
    }
    let mut out = depth.clone();
    let candidates: Vec<usize> = (0..depth.values.len()).filter(|&i| depth.values[i] > 0.0).collect();
    if count == 0 || candidates.is_empty() {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = radius_px.floor() as isize;
    let r2 = radius_px * radius_px;
    for _ in 0..count {
        let c = candidates[rng.random_range(0..candidates.len())];
        let (cx, cy) = ((c % depth.width) as isize, (c / depth.width) as isize);
        for dy in -r..=r {
            for dx in -r..=r {
                if ((dx * dx + dy * dy) as f64) > r2 {
                    continue;
                }
                let (x, y) = (cx + dx, cy + dy);
                if x >= 0 && y >= 0 && (x as usize) < depth.width && (y as usize) < depth.height {
                    out.values[y as usize * depth.width + x as usize] = 0.0;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(n: usize, v: f32) -> DepthView {
        DepthView::new(n, n, vec![v; n * n]).unwrap()
    }

    #[test]
    fn zero_sigma_is_identity() {
        let mut d = flat(16, 0.4);
        d.values[3] = 0.0;
        assert_eq!(add_noise(&d, 0.0, 9).unwrap(), d);
    }

    #[test]
    fn noise_statistics() {
        let d = flat(128, 0.5);
        let out = add_noise(&d, 0.05, 42).unwrap();
        let diffs: Vec<f64> = out.values.iter().zip(&d.values).map(|(a, b)| (*a - *b) as f64).collect();
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let var = diffs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (diffs.len() - 1) as f64;
        assert!((var.sqrt() - 0.05).abs() < 0.05 * 0.05);
    }

    #[test]
    fn background_survives_noise() {
        let mut d = flat(32, 0.02);
        for i in (0..d.values.len()).step_by(3) {
            d.values[i] = 0.0;
        }
        let out = add_noise(&d, 0.3, 1).unwrap();
        assert_eq!(out.foreground_count(), d.foreground_count());
        assert!(out.is_well_formed());
        assert_eq!(out, add_noise(&d, 0.3, 1).unwrap());
    }

    #[test]
    fn holes() {
        let d = flat(32, 0.7);
        assert_eq!(punch_holes(&d, 0, 2.0, 5).unwrap(), d);
        for seed in 0..20 {
            let out = punch_holes(&d, 1, 2.0, seed).unwrap();
            let cleared = d.foreground_count() - out.foreground_count();
            assert!((9..=13).contains(&cleared), "{cleared}");
            assert!(out.is_well_formed());
        }
        assert_eq!(punch_holes(&d, 3, 2.0, 8).unwrap(), punch_holes(&d, 3, 2.0, 8).unwrap());
    }
}
