//! Surface voxelization and column-wise depth read-back.

use super::camera::{project, ProjectionParams};
use super::mesh::TriMesh;
use super::raster::{DepthView, ViewFrame};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Cubic occupancy grid over the normalized view cube.
///
/// Axis x follows depth-view columns, y follows rows, z follows normalized
/// depth (layer `n−1` is nearest the camera). Storage is x-fastest, then y, then z.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelGrid {
    pub n: usize,
    pub values: Vec<f32>,
}

impl VoxelGrid {
    pub fn empty(n: usize) -> Self {
        Self { n, values: vec![0.0; n * n * n] }
    }

    pub fn new(n: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != n * n * n {
            return Err(Error::shape("voxel grid", format!("n={n} needs {} values, got {}", n * n * n, values.len())));
        }
        Ok(Self { n, values })
    }

    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.n * (y + self.n * z)
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f32 {
        self.values[self.index(x, y, z)]
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, v: f32) {
        let i = self.index(x, y, z);
        self.values[i] = v;
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn occupied_count(&self) -> usize {
        self.values.iter().filter(|&&v| v == 1.0).count()
    }

    /// Centers `(x+½, y+½, z+½)` of voxels at or above `threshold`, in voxel units.
    pub fn occupied_centers(&self, threshold: f32) -> Vec<[f64; 3]> {
        let n = self.n;
        let mut out = Vec::new();
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    if self.get(x, y, z) >= threshold {
                        out.push([x as f64 + 0.5, y as f64 + 0.5, z as f64 + 0.5]);
                    }
                }
            }
        }
        out
    }

    /// `n×n×n` tensor; channel axis is z, so each channel is one depth layer.
    pub fn to_tensor(&self) -> Tensor {
        let n = self.n;
        Tensor::new([n, n, n], self.values.iter().map(|&v| v as f64).collect()).expect("extents match")
    }

    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        match *t.shape() {
            [a, b, c] if a == b && b == c => Self::new(a, t.data().iter().map(|&v| v as f32).collect()),
            ref s => Err(Error::shape("voxel grid", format!("expected n×n×n tensor, got {s:?}"))),
        }
    }
}

/// Marks every voxel whose closed box intersects a mesh triangle.
///
/// Grid x/y coincide with depth-view pixel coordinates scaled by `n / frame.size`;
/// grid z is the frame's normalized depth scaled by `n`.
pub fn voxelize(mesh: &TriMesh, params: &ProjectionParams, frame: &ViewFrame, n: usize) -> Result<VoxelGrid> {
    if n < 8 {
        return Err(Error::invalid(format!("grid size {n} below 8")));
    }
    let size = frame.size as f64;
    let unit: Vec<[f64; 3]> = project(mesh, params)?
        .into_iter()
        .map(|p| [p[0] / size, p[1] / size, frame.range.normalize(p[2])])
        .collect();
    let nf = n as f64;
    let mut grid = VoxelGrid::empty(n);
    for tri in &mesh.triangles {
        let t = tri.map(|i| {
            let u = unit[i];
            [u[0] * nf, u[1] * nf, u[2] * nf]
        });
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        let mut outside = false;
        for a in 0..3 {
            let mn = t[0][a].min(t[1][a]).min(t[2][a]);
            let mx = t[0][a].max(t[1][a]).max(t[2][a]);
            // closed boxes [k, k+1]: a coordinate on an integer touches both neighbours
            let first = mn.ceil() - 1.0;
            let last = mx.floor();
            if last < 0.0 || first > nf - 1.0 {
                outside = true;
                break;
            }
            lo[a] = first.max(0.0) as usize;
            hi[a] = last.min(nf - 1.0) as usize;
        }
        if outside {
            continue;
        }
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    let idx = grid.index(x, y, z);
                    if grid.values[idx] == 1.0 {
                        continue;
                    }
                    let c = [x as f64 + 0.5, y as f64 + 0.5, z as f64 + 0.5];
                    if tri_box_overlap(c, 0.5, &t) {
                        grid.values[idx] = 1.0;
                    }
                }
            }
        }
    }
    Ok(grid)
}

/// Separating-axis test between a triangle and the closed cube `center ± half`.
/// Touching counts as overlap.
pub fn tri_box_overlap(center: [f64; 3], half: f64, tri: &[[f64; 3]; 3]) -> bool {
    let v: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|a| tri[i][a] - center[a]));
    let e: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|a| v[(i + 1) % 3][a] - v[i][a]));

    // box face normals
    for a in 0..3 {
        let mn = v[0][a].min(v[1][a]).min(v[2][a]);
        let mx = v[0][a].max(v[1][a]).max(v[2][a]);
        if mn > half || mx < -half {
            return false;
        }
    }

    // edge × box-axis cross products
    for edge in &e {
        for a in 0..3 {
            let mut axis = [0.0; 3];
            // axis = unit_a × edge
            let (b, c) = ((a + 1) % 3, (a + 2) % 3);
            axis[b] = -edge[c];
            axis[c] = edge[b];
            let p: [f64; 3] = std::array::from_fn(|i| dot(axis, v[i]));
            let r = half * (axis[0].abs() + axis[1].abs() + axis[2].abs());
            let mn = p[0].min(p[1]).min(p[2]);
            let mx = p[0].max(p[1]).max(p[2]);
            if mn > r || mx < -r {
                return false;
            }
        }
    }

    // triangle plane
    let normal = cross(e[0], e[1]);
    let d = dot(normal, v[0]);
    let r = half * (normal[0].abs() + normal[1].abs() + normal[2].abs());
    d.abs() <= r
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Depth of the nearest voxel at or above `threshold` in each `(x, y)` column, as the
/// normalized center of its layer; empty columns are background.
pub fn depth_from_grid(grid: &VoxelGrid, threshold: f32) -> Result<DepthView> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid(format!("threshold {threshold} outside (0,1)")));
    }
    let n = grid.n;
    let mut view = DepthView::background(n, n);
    for y in 0..n {
        for x in 0..n {
            if let Some(z) = (0..n).rev().find(|&z| grid.get(x, y, z) >= threshold) {
                view.values[y * n + x] = ((z as f64 + 0.5) / n as f64) as f32;
            }
        }
    }
    Ok(view)
}
