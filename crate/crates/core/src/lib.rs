//! Single-view depth to voxel-occupancy face reconstruction.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`], [`graph`], [`gradcheck`]: a small reverse-mode tensor engine
//! * [`geometry`]: procedural faces, depth rendering, voxelization, corruption, file formats
//! * [`model`]: the attention-guided generator and the conditional critic
//! * [`objectives`]: adversarial, gradient-penalty, cross-entropy and sparsity losses
//! * [`training`]: Adam, the alternating critic/generator schedule, checkpoints
//! * [`evaluation`]: IoU, cross-entropy, Hausdorff distance, surface export

mod conv;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod gradcheck;
pub mod graph;
pub mod model;
pub mod objectives;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
pub use geometry::{DepthRange, DepthView, ProjectionParams, TriMesh, VoxelGrid};
pub use graph::{Activation, Graph, NodeId};
pub use model::{ModelConfig, NetworkParams};
pub use objectives::LossWeights;
pub use tensor::Tensor;
pub use training::{AdamConfig, AdamState, TrainSchedule, Trainer};
