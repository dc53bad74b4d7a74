//! Synthesis of (corrupted depth view, ground-truth grid) training pairs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::corrupt::{add_noise, punch_holes};
use super::mesh::{synth_face, FaceParams, TriMesh};
use super::raster::{render_depth, DepthRange, DepthView, ViewFrame};
use super::voxel::{voxelize, VoxelGrid};
use super::camera::ProjectionParams;
use crate::error::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub view_size: usize,
    pub grid_size: usize,
    pub sigma_noise: f64,
    pub holes: usize,
    pub hole_radius: f64,
    pub max_yaw: f64,
    pub max_pitch: f64,
    pub max_roll: f64,
    pub identity_dims: usize,
}

impl SynthConfig {
    pub fn new(view_size: usize) -> Self {
        Self {
            view_size,
            grid_size: view_size,
            sigma_noise: 0.02,
            holes: 0,
            hole_radius: 2.0,
            max_yaw: 90.0,
            max_pitch: 20.0,
            max_roll: 15.0,
            identity_dims: 5,
        }
    }

    /// The cube every sample of a dataset shares: pixel-aligned x/y, camera depth
    /// over `[−size/2, size/2]`, so voxels are cubes one pixel on a side.
    pub fn frame(&self) -> ViewFrame {
        ViewFrame::new(self.view_size, DepthRange::cube(self.view_size))
    }
}

/// Pose and shape draw for one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSpec {
    pub seed: u64,
    pub face: FaceParams,
}

impl SampleSpec {
    pub fn draw(seed: u64, cfg: &SynthConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let identity = (0..cfg.identity_dims.max(4)).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut sym = |m: f64| if m > 0.0 { rng.random_range(-m..=m) } else { 0.0 };
        let yaw = sym(cfg.max_yaw);
        let pitch = sym(cfg.max_pitch);
        let roll = sym(cfg.max_roll);
        let expression = rng.random_range(0.0..=1.0);
        Self {
            seed,
            face: FaceParams { identity, expression, yaw, pitch, roll, view_size: cfg.view_size, resolution: 0 },
        }
    }
}

pub struct SynthSample {
    pub spec: SampleSpec,
    pub mesh: TriMesh,
    pub camera: ProjectionParams,
    pub clean: DepthView,
    pub depth: DepthView,
    pub grid: VoxelGrid,
}

pub fn synth_sample(seed: u64, cfg: &SynthConfig) -> Result<SynthSample> {
    let spec = SampleSpec::draw(seed, cfg);
    let (mesh, camera) = synth_face(seed, &spec.face)?;
    let frame = cfg.frame();
    let clean = render_depth(&mesh, &camera, &frame)?;
    let grid = voxelize(&mesh, &camera, &frame, cfg.grid_size)?;
    let noisy = add_noise(&clean, cfg.sigma_noise, seed ^ 0x6e6f_6973_65)?;
    let depth = punch_holes(&noisy, cfg.holes, cfg.hole_radius, seed ^ 0x686f_6c65)?;
    Ok(SynthSample { spec, mesh, camera, clean, depth, grid })
}
