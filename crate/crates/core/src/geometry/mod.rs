//! Procedural faces, weak-perspective depth rendering, surface voxelization,
//! depth corruption and the associated file formats.

pub mod camera;
pub mod corrupt;
pub mod dataset;
pub mod io;
pub mod mesh;
pub mod raster;
pub mod voxel;

pub use camera::{pose_rotation, project, ProjectionParams};
pub use corrupt::{add_noise, punch_holes};
pub use dataset::{synth_sample, SampleSpec, SynthConfig, SynthSample};
pub use mesh::{synth_face, FaceParams, TriMesh};
pub use raster::{render_depth, DepthRange, DepthView, ViewFrame};
pub use voxel::{depth_from_grid, tri_box_overlap, voxelize, VoxelGrid};
