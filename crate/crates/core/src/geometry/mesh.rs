use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::camera::{pose_rotation, ProjectionParams};
use crate::error::{Error, Result};

/// Triangle surface: positions in model units and vertex-index triples.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriMesh {
    pub fn new(vertices: Vec<[f64; 3]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Self { vertices, triangles };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= n) {
                return Err(Error::invalid(format!("triangle {t} indexes past {n} vertices")));
            }
        }
        Ok(())
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        let u = sub(b, a);
        let v = sub(c, a);
        let cr = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
        0.5 * (cr[0] * cr[0] + cr[1] * cr[1] + cr[2] * cr[2]).sqrt()
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Controls for [`synth_face`].
#[derive(Clone, Debug, PartialEq)]
pub struct FaceParams {
    /// Shape coefficients, roughly standard-normal; at least four.
    pub identity: Vec<f64>,
    /// Mouth opening in `[0, 1]`.
    pub expression: f64,
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    /// Side of the square depth view the projection targets, in pixels.
    pub view_size: usize,
    /// Samples per axis of the height-field lattice; 0 selects `2·view_size + 1`.
    pub resolution: usize,
}

impl FaceParams {
    pub fn frontal(view_size: usize) -> Self {
        Self {
            identity: vec![0.0; 4],
            expression: 0.0,
            yaw: 0.0,
            pitch: 0.0,
            roll: 0.0,
            view_size,
            resolution: 0,
        }
    }
}

pub const MIN_IDENTITY_COEFFS: usize = 4;
/// Fraction of the view the face's bounding sphere spans.
const FILL: f64 = 0.8;

/// Builds a face-like open surface and the weak-perspective camera that frames it.
///
/// The surface is a height field over an elliptical footprint: a shallow
/// ellipsoidal cap with a Gaussian nose ridge, two eye sockets and a mouth
/// depression whose depth follows `expression`. Seed-driven perturbations are
/// even in `x`, so an unposed face is mirror-symmetric about its vertical
/// midplane.
pub fn synth_face(seed: u64, p: &FaceParams) -> Result<(TriMesh, ProjectionParams)> {
    if p.identity.len() < MIN_IDENTITY_COEFFS {
        return Err(Error::invalid(format!(
            "need at least {MIN_IDENTITY_COEFFS} identity coefficients, got {}",
            p.identity.len()
        )));
    }
    for (name, angle) in [("yaw", p.yaw), ("pitch", p.pitch), ("roll", p.roll)] {
        if !(-90.0..=90.0).contains(&angle) {
            return Err(Error::invalid(format!("{name} {angle}° outside [-90, 90]")));
        }
    }
    if !(0.0..=1.0).contains(&p.expression) {
        return Err(Error::invalid(format!("expression {} outside [0, 1]", p.expression)));
    }
    if p.view_size == 0 {
        return Err(Error::invalid("view size must be positive"));
    }

    let id = |k: usize| p.identity.get(k).copied().unwrap_or(0.0).clamp(-3.0, 3.0);
    let half_w = 0.75 * (1.0 + 0.08 * id(0));
    let half_h = 1.0 * (1.0 + 0.08 * id(1));
    let depth = 0.5 * (1.0 + 0.1 * id(2));
    let nose = 0.2 * (1.0 + 0.2 * id(3));
    let eye = 0.08 * (1.0 + 0.2 * id(4));
    let mouth = 0.1 * p.expression;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let wobble: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));

    let m = if p.resolution == 0 { 2 * p.view_size + 1 } else { p.resolution };
    if m < 3 {
        return Err(Error::invalid("lattice resolution must be at least 3"));
    }
    let coord = |i: usize| -1.0 + 2.0 * i as f64 / (m - 1) as f64;
    let inside = |i: usize, j: usize| {
        let (s, t) = (coord(i), coord(j));
        s * s + t * t <= 1.0 + 1e-12
    };

    let height = |s: f64, t: f64| -> f64 {
        let (x, y) = (s * half_w, t * half_h);
        let r2 = s * s + t * t;
        let cap = depth * ((1.0 - 0.85 * r2).max(0.0).sqrt() - 0.15f64.sqrt());
        let ridge = nose * (-(x * x) / (2.0 * 0.14 * 0.14)).exp() * (-((y - 0.05).powi(2)) / (2.0 * 0.3 * 0.3)).exp();
        let socket = |cx: f64| (-((x - cx).powi(2) + (y - 0.3).powi(2)) / (2.0 * 0.11 * 0.11)).exp();
        let eyes = -eye * (socket(0.3) + socket(-0.3));
        let lips = -mouth * (-(x * x) / (2.0 * 0.2 * 0.2) - (y + 0.5).powi(2) / (2.0 * 0.07 * 0.07)).exp();
        let waves = 0.02
            * (wobble[0] * s * s + wobble[1] * t + wobble[2] * s * s * t + wobble[3] * (std::f64::consts::PI * t).cos());
        cap + ridge + eyes + lips + waves
    };

    let mut index = vec![usize::MAX; m * m];
    let mut vertices = Vec::new();
    for j in 0..m {
        for i in 0..m {
            if inside(i, j) {
                let (s, t) = (coord(i), coord(j));
                index[j * m + i] = vertices.len();
                vertices.push([s * half_w, t * half_h, height(s, t)]);
            }
        }
    }
    let mut triangles = Vec::new();
    for j in 0..m - 1 {
        for i in 0..m - 1 {
            let q = [index[j * m + i], index[j * m + i + 1], index[(j + 1) * m + i + 1], index[(j + 1) * m + i]];
            if q.iter().all(|&v| v != usize::MAX) {
                triangles.push([q[0], q[1], q[2]]);
                triangles.push([q[0], q[2], q[3]]);
            }
        }
    }

    // center on the bounding-box midpoint so rotations act about the face
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for v in &vertices {
        for a in 0..3 {
            lo[a] = lo[a].min(v[a]);
            hi[a] = hi[a].max(v[a]);
        }
    }
    let center: [f64; 3] = std::array::from_fn(|a| 0.5 * (lo[a] + hi[a]));
    let mut radius: f64 = 0.0;
    for v in &mut vertices {
        for a in 0..3 {
            v[a] -= center[a];
        }
        radius = radius.max((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt());
    }

    let size = p.view_size as f64;
    let params = ProjectionParams::new(
        FILL * size / (2.0 * radius),
        pose_rotation(p.yaw, p.pitch, p.roll),
        [0.5 * size, 0.5 * size],
    )?;
    Ok((TriMesh::new(vertices, triangles)?, params))
}
