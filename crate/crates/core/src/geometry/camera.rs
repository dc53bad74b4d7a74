use super::mesh::TriMesh;
use crate::error::{Error, Result};

pub type Mat3 = [[f64; 3]; 3];

/// Weak-perspective camera: `(u, v) = f·P·R·V + T`, with `P` the orthographic
/// projection dropping z.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionParams {
    pub scale: f64,
    pub rotation: Mat3,
    /// Translation on the image plane, in pixels.
    pub translation: [f64; 2],
}

impl ProjectionParams {
    pub fn new(scale: f64, rotation: Mat3, translation: [f64; 2]) -> Result<Self> {
        let p = Self { scale, rotation, translation };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::invalid(format!("projection scale {} must be positive", self.scale)));
        }
        let r = &self.rotation;
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
                worst = worst.max((dot - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        if worst >= 1e-9 || (det(r) - 1.0).abs() >= 1e-9 {
            return Err(Error::invalid("rotation is not a proper orthonormal matrix"));
        }
        Ok(())
    }
}

pub fn det(r: &Mat3) -> f64 {
    r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
        + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
}

fn matmul(a: &Mat3, b: &Mat3) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|k| a[i][k] * b[k][j]).sum()))
}

/// Rotation about the vertical (y) axis; maps +x to −z at +90°.
pub fn rot_y(deg: f64) -> Mat3 {
    let (s, c) = deg.to_radians().sin_cos();
    [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

pub fn rot_x(deg: f64) -> Mat3 {
    let (s, c) = deg.to_radians().sin_cos();
    [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]
}

pub fn rot_z(deg: f64) -> Mat3 {
    let (s, c) = deg.to_radians().sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

/// Yaw applied first, then pitch, then roll.
pub fn pose_rotation(yaw: f64, pitch: f64, roll: f64) -> Mat3 {
    matmul(&rot_z(roll), &matmul(&rot_x(pitch), &rot_y(yaw)))
}

/// Image-plane position and camera depth of one point.
pub fn project_point(v: [f64; 3], p: &ProjectionParams) -> [f64; 3] {
    let r = &p.rotation;
    let rv: [f64; 3] = std::array::from_fn(|i| r[i][0] * v[0] + r[i][1] * v[1] + r[i][2] * v[2]);
    [
        p.scale * rv[0] + p.translation[0],
        p.scale * rv[1] + p.translation[1],
        p.scale * rv[2],
    ]
}

/// Per-vertex `(u, v, z_cam)`; `z_cam` is the depth component the orthographic
/// projection discards, scaled by `f` like the image coordinates.
pub fn project(mesh: &TriMesh, params: &ProjectionParams) -> Result<Vec<[f64; 3]>> {
    params.validate()?;
    Ok(mesh.vertices.iter().map(|&v| project_point(v, params)).collect())
}
