use crate::error::{Error, Result};
use crate::geometry::VoxelGrid;
use crate::objectives::LOG_CLIP;

pub const DEFAULT_THRESHOLD: f32 = 0.5;

fn check_threshold(t: f32) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("threshold {t} outside (0,1)")))
    }
}

fn same_size(op: &'static str, a: &VoxelGrid, b: &VoxelGrid) -> Result<()> {
    if a.n == b.n {
        Ok(())
    } else {
        Err(Error::shape(op, format!("{}³ vs {}³", a.n, b.n)))
    }
}

/// Intersection over union after binarizing `pred` at `t` (values `≥ t` are
/// occupied) and `gt` at ½. Two empty sets score 1.
pub fn iou_values<T: Copy + Into<f64>>(pred: &[T], gt: &[T], t: f32) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::shape("iou", format!("{} vs {} entries", pred.len(), gt.len())));
    }
    check_threshold(t)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&p, &g) in pred.iter().zip(gt) {
        let (p, g) = (p.into() >= t as f64, g.into() >= 0.5);
        inter += (p && g) as usize;
        union += (p || g) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

pub fn iou(pred: &VoxelGrid, gt: &VoxelGrid, t: f32) -> Result<f64> {
    same_size("iou", pred, gt)?;
    iou_values(&pred.values, &gt.values, t)
}

/// Mean binary cross-entropy with predictions clipped to `[1e-7, 1−1e-7]`.
pub fn ce_values<T: Copy + Into<f64>>(pred: &[T], gt: &[T]) -> Result<f64> {
    if pred.len() != gt.len() || pred.is_empty() {
        return Err(Error::shape("ce_metric", format!("{} vs {} entries", pred.len(), gt.len())));
    }
    let total: f64 = pred
        .iter()
        .zip(gt)
        .map(|(&p, &g)| {
            let (p, g) = (p.into().clamp(LOG_CLIP, 1.0 - LOG_CLIP), g.into());
            -(g * p.ln() + (1.0 - g) * (1.0 - p).ln())
        })
        .sum();
    Ok(total / pred.len() as f64)
}

pub fn ce_metric(pred: &VoxelGrid, gt: &VoxelGrid) -> Result<f64> {
    same_size("ce_metric", pred, gt)?;
    ce_values(&pred.values, &gt.values)
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Distance from each point of `from` to its nearest point in `to`.
pub fn nearest_distances(from: &[[f64; 3]], to: &[[f64; 3]]) -> Result<Vec<f64>> {
    if to.is_empty() {
        return Err(Error::invalid("nearest distance to an empty point set"));
    }
    Ok(from.iter().map(|a| to.iter().map(|b| dist(a, b)).fold(f64::INFINITY, f64::min)).collect())
}

/// Symmetric Hausdorff distance between two non-empty point sets.
pub fn hausdorff(a: &[[f64; 3]], b: &[[f64; 3]]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("Hausdorff distance of an empty point set"));
    }
    let ab = nearest_distances(a, b)?.into_iter().fold(0.0, f64::max);
    let ba = nearest_distances(b, a)?.into_iter().fold(0.0, f64::max);
    Ok(ab.max(ba))
}

/// For each predicted voxel at or above `t` (storage order), the distance in
/// voxel edges to the nearest occupied ground-truth voxel.
pub fn per_point_distance_field(pred: &VoxelGrid, gt: &VoxelGrid, t: f32) -> Result<Vec<f64>> {
    same_size("per_point_distance_field", pred, gt)?;
    check_threshold(t)?;
    let targets = gt.occupied_centers(0.5);
    if targets.is_empty() {
        return Err(Error::invalid("ground-truth grid is empty"));
    }
    nearest_distances(&pred.occupied_centers(t), &targets)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_with(n: usize, on: &[(usize, usize, usize, f32)]) -> VoxelGrid {
        let mut g = VoxelGrid::empty(n);
        for &(x, y, z, v) in on {
            g.set(x, y, z, v);
        }
        g
    }

    #[test]
    fn iou_examples() {
        let a = grid_with(2, &[(0, 0, 0, 1.0), (1, 1, 1, 1.0)]);
        assert_eq!(iou(&a, &a, 0.5).unwrap(), 1.0);
        let b = grid_with(2, &[(1, 0, 0, 1.0)]);
        assert_eq!(iou(&a, &b, 0.5).unwrap(), 0.0);
        let pred = grid_with(2, &[(0, 0, 0, 0.6), (1, 0, 0, 0.7), (0, 1, 0, 0.2)]);
        let gt = grid_with(2, &[(1, 0, 0, 1.0), (0, 1, 0, 1.0)]);
        assert!((iou(&pred, &gt, 0.5).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(iou(&VoxelGrid::empty(2), &VoxelGrid::empty(2), 0.5).unwrap(), 1.0);
        assert!(iou(&a, &VoxelGrid::empty(3), 0.5).is_err());
        assert!(iou(&a, &a, 1.0).is_err());
    }

    #[test]
    fn ce_examples() {
        assert!((ce_values(&[0.5], &[1.0]).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        let pair = ce_values(&[0.9, 0.1], &[1.0, 0.0]).unwrap();
        assert!((pair + 0.9f64.ln()).abs() < 1e-15);
        assert!((pair - 0.105361).abs() < 1e-6);
        let gt = [1.0, 0.0, 0.0, 1.0];
        let confident = ce_values(&[1.0, 0.0, 0.0, 1.0], &gt).unwrap();
        assert!(confident > 0.0 && confident < 1.6e-6);
        assert!(ce_values(&[0.5], &gt).is_err());
    }

    #[test]
    fn hausdorff_examples() {
        let a = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]];
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        assert_eq!(hausdorff(&[[0.0, 0.0, 0.0]], &[[3.0, 0.0, 0.0]]).unwrap(), 3.0);
        assert_eq!(hausdorff(&a, &[[0.0, 0.0, 0.0]]).unwrap(), 1.0);
        assert!(hausdorff(&a, &[]).is_err());
    }

    #[test]
    fn distance_field_examples() {
        let gt = grid_with(4, &[(1, 1, 1, 1.0)]);
        assert_eq!(per_point_distance_field(&gt, &gt, 0.5).unwrap(), vec![0.0]);
        let pred = grid_with(4, &[(1, 1, 2, 0.9)]);
        assert_eq!(per_point_distance_field(&pred, &gt, 0.5).unwrap(), vec![1.0]);
        assert!(per_point_distance_field(&pred, &VoxelGrid::empty(4), 0.5).is_err());
    }
}
