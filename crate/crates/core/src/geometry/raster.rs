//! Z-buffer depth rendering.

use super::camera::{project, ProjectionParams};
use super::mesh::TriMesh;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Smallest value a foreground pixel may hold; 0 is reserved for background.
pub const MIN_FOREGROUND: f32 = 1e-6;

/// Camera-depth interval mapped affinely onto normalized depth `[0, 1]`,
/// with `near` (largest `z_cam`, closest to the viewer) at 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DepthRange {
    pub near: f64,
    pub far: f64,
}

impl DepthRange {
    pub fn new(near: f64, far: f64) -> Result<Self> {
        if !(near > far) || !near.is_finite() || !far.is_finite() {
            return Err(Error::invalid(format!("depth range needs near > far, got {near} / {far}")));
        }
        Ok(Self { near, far })
    }

    /// The cube `[−size/2, size/2]` in camera depth: voxels come out cubic, one
    /// pixel on a side, for cameras centred on the view.
    pub fn cube(size: usize) -> Self {
        let h = 0.5 * size as f64;
        Self { near: h, far: -h }
    }

    /// The z-range of the projected mesh. The nearest vertex maps to 1 and the
    /// far end is pushed back by 2% of the span so the farthest vertex stays
    /// strictly above the background value.
    pub fn fit(mesh: &TriMesh, params: &ProjectionParams) -> Result<Self> {
        let pts = project(mesh, params)?;
        let (lo, hi) = pts
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[2]), hi.max(p[2])));
        if !lo.is_finite() {
            return Ok(Self { near: 1.0, far: 0.0 });
        }
        let span = if hi > lo { hi - lo } else { 1.0 };
        Ok(Self { near: hi, far: lo - 0.02 * span })
    }

    pub fn normalize(&self, z: f64) -> f64 {
        (z - self.far) / (self.near - self.far)
    }
}

/// Square view geometry shared by a depth view and the voxel grid aligned with it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ViewFrame {
    pub size: usize,
    pub range: DepthRange,
}

impl ViewFrame {
    pub fn new(size: usize, range: DepthRange) -> Self {
        Self { size, range }
    }

    /// Frame normalized over this mesh's own depth extent.
    pub fn fit(mesh: &TriMesh, params: &ProjectionParams, size: usize) -> Result<Self> {
        Ok(Self { size, range: DepthRange::fit(mesh, params)? })
    }
}

/// Single-channel depth raster; 0 marks background, foreground lies in `(0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthView {
    pub width: usize,
    pub height: usize,
    /// Row-major, `height` rows of `width` values.
    pub values: Vec<f32>,
}

impl DepthView {
    pub fn background(width: usize, height: usize) -> Self {
        Self { width, height, values: vec![0.0; width * height] }
    }

    pub fn new(width: usize, height: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::shape("depth view", format!("{width}×{height} needs {} values, got {}", width * height, values.len())));
        }
        Ok(Self { width, height, values })
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }

    pub fn foreground_count(&self) -> usize {
        self.values.iter().filter(|&&v| v > 0.0).count()
    }

    /// Every value is background or in `(0, 1]`.
    pub fn is_well_formed(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || (v > 0.0 && v <= 1.0))
    }

    /// `1×H×W` network input.
    pub fn to_tensor(&self) -> Tensor {
        Tensor::new([1, self.height, self.width], self.values.iter().map(|&v| v as f64).collect())
            .expect("extents match")
    }
}

pub(crate) fn clamp_foreground(d: f64) -> f32 {
    (d as f32).clamp(MIN_FOREGROUND, 1.0)
}

/// Renders the nearest visible surface per pixel.
///
/// Pixel `(x, y)` samples the image-plane point `(x + 0.5, y + 0.5)`. Coverage
/// uses edge functions with a top-left tie rule, so pixels on an edge shared by
/// two triangles are claimed by exactly one of them. `z_cam` is interpolated
/// barycentrically and the largest value wins.
pub fn render_depth(mesh: &TriMesh, params: &ProjectionParams, frame: &ViewFrame) -> Result<DepthView> {
    if frame.size < 8 {
        return Err(Error::invalid(format!("view size {} below 8", frame.size)));
    }
    let size = frame.size;
    let pts = project(mesh, params)?;
    let mut zbuf = vec![f64::NEG_INFINITY; size * size];
    for tri in &mesh.triangles {
        let [mut a, mut b, c] = tri.map(|i| pts[i]);
        let mut area = edge(a, b, c);
        if area == 0.0 {
            continue;
        }
        if area < 0.0 {
            std::mem::swap(&mut a, &mut b);
            area = -area;
        }
        let lo_x = a[0].min(b[0]).min(c[0]);
        let hi_x = a[0].max(b[0]).max(c[0]);
        let lo_y = a[1].min(b[1]).min(c[1]);
        let hi_y = a[1].max(b[1]).max(c[1]);
        let x0 = ((lo_x - 0.5).ceil().max(0.0)) as usize;
        let y0 = ((lo_y - 0.5).ceil().max(0.0)) as usize;
        let x1 = (hi_x - 0.5).floor().min(size as f64 - 1.0);
        let y1 = (hi_y - 0.5).floor().min(size as f64 - 1.0);
        if x1 < 0.0 || y1 < 0.0 {
            continue;
        }
        let (x1, y1) = (x1 as usize, y1 as usize);
        let owns = [top_left(b, c), top_left(c, a), top_left(a, b)];
        for py in y0..=y1 {
            for px in x0..=x1 {
                let p = [px as f64 + 0.5, py as f64 + 0.5, 0.0];
                let w = [edge(b, c, p), edge(c, a, p), edge(a, b, p)];
                let covered = w.iter().zip(&owns).all(|(&e, &own)| e > 0.0 || (e == 0.0 && own));
                if !covered {
                    continue;
                }
                let z = (w[0] * a[2] + w[1] * b[2] + w[2] * c[2]) / area;
                let slot = &mut zbuf[py * size + px];
                if z > *slot {
                    *slot = z;
                }
            }
        }
    }
    let values = zbuf
        .iter()
        .map(|&z| if z == f64::NEG_INFINITY { 0.0 } else { clamp_foreground(frame.range.normalize(z)) })
        .collect();
    DepthView::new(size, size, values)
}

/// Twice the signed area of `(a, b, p)` on the image plane.
fn edge(a: [f64; 3], b: [f64; 3], p: [f64; 3]) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

/// Tie ownership for edge `a → b` of a positively oriented triangle. Reversing
/// the edge flips the answer, which is what makes shared edges single-owner.
fn top_left(a: [f64; 3], b: [f64; 3]) -> bool {
    let d = [b[0] - a[0], b[1] - a[1]];
    d[1] < 0.0 || (d[1] == 0.0 && d[0] > 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::camera::ProjectionParams;

    const I3: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

    fn ident() -> ProjectionParams {
        ProjectionParams::new(1.0, I3, [0.0, 0.0]).unwrap()
    }

    #[test]
    fn empty_mesh_renders_background() {
        let frame = ViewFrame::new(8, DepthRange::cube(8));
        let v = render_depth(&TriMesh::default(), &ident(), &frame).unwrap();
        assert_eq!(v.values, vec![0.0; 64]);
        assert!(render_depth(&TriMesh::default(), &ident(), &ViewFrame::new(4, DepthRange::cube(4))).is_err());
    }

    #[test]
    fn nearer_triangle_wins() {
        let far = [[0.0, 0.0, 0.3], [8.0, 0.0, 0.3], [0.0, 8.0, 0.3]];
        let near = [[0.0, 0.0, 0.7], [8.0, 0.0, 0.7], [0.0, 8.0, 0.7]];
        let range = DepthRange::new(1.0, 0.0).unwrap();
        for order in [[far, near], [near, far]] {
            let mesh = TriMesh::new(
                order.iter().flatten().copied().collect(),
                vec![[0, 1, 2], [3, 4, 5]],
            )
            .unwrap();
            let v = render_depth(&mesh, &ident(), &ViewFrame::new(8, range)).unwrap();
            assert!((v.get(1, 1) - 0.7).abs() < 1e-6);
        }
    }

    #[test]
    fn flat_triangle_at_near_plane_is_one() {
        let mesh = TriMesh::new(vec![[0.0, 0.0, 1.0], [9.0, 0.0, 1.0], [0.0, 9.0, 1.0]], vec![[0, 1, 2]]).unwrap();
        let v = render_depth(&mesh, &ident(), &ViewFrame::new(8, DepthRange::new(1.0, 0.0).unwrap())).unwrap();
        assert_eq!(v.get(2, 2), 1.0);
    }

    #[test]
    fn oblique_plane_matches_plane_equation() {
        // z = 0.2 + 0.03·x + 0.05·y
        let plane = |x: f64, y: f64| 0.2 + 0.03 * x + 0.05 * y;
        let verts = vec![[-1.0, -1.0, plane(-1.0, -1.0)], [12.0, -1.0, plane(12.0, -1.0)], [-1.0, 12.0, plane(-1.0, 12.0)]];
        let mesh = TriMesh::new(verts, vec![[0, 1, 2]]).unwrap();
        let range = DepthRange::new(1.0, 0.0).unwrap();
        let v = render_depth(&mesh, &ident(), &ViewFrame::new(10, range)).unwrap();
        let mut checked = 0;
        for y in 0..10 {
            for x in 0..10 {
                let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
                if cx + cy < 11.0 {
                    assert!((v.get(x, y) as f64 - plane(cx, cy)).abs() < 1e-6);
                    checked += 1;
                }
            }
        }
        assert!(checked > 40);
    }

    #[test]
    fn shared_edge_pixels_counted_once() {
        // a square split along its diagonal; the diagonal passes through pixel centres
        let verts = vec![[1.0, 1.0, 0.5], [7.0, 1.0, 0.5], [7.0, 7.0, 0.5], [1.0, 7.0, 0.5]];
        let mesh = TriMesh::new(verts, vec![[0, 1, 2], [0, 2, 3]]).unwrap();
        let pts = project(&mesh, &ident()).unwrap();
        let mut hits = vec![0; 64];
        for tri in &mesh.triangles {
            let [mut a, mut b, c] = tri.map(|i| pts[i]);
            if edge(a, b, c) < 0.0 {
                std::mem::swap(&mut a, &mut b);
            }
            let owns = [top_left(b, c), top_left(c, a), top_left(a, b)];
            for py in 0..8 {
                for px in 0..8 {
                    let p = [px as f64 + 0.5, py as f64 + 0.5, 0.0];
                    let w = [edge(b, c, p), edge(c, a, p), edge(a, b, p)];
                    if w.iter().zip(&owns).all(|(&e, &o)| e > 0.0 || (e == 0.0 && o)) {
                        hits[py * 8 + px] += 1;
                    }
                }
            }
        }
        assert!(hits.iter().all(|&h| h <= 1));
        assert_eq!(hits.iter().sum::<i32>(), 36);
    }
}
