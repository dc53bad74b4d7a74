//! Attention-guided generator (depth view → occupancy grid) and the
//! convolutional critic scoring (depth view, grid) pairs.

pub mod attention;
pub mod config;
pub mod critic;
pub mod generator;
pub mod params;

pub use attention::{channel_attention, spatial_attention, AttentionWeights};
pub use config::ModelConfig;
pub use critic::{build_critic, critic_forward, critic_graph, critic_specs, ConvCritic};
pub use generator::{build_generator, generator_forward, generator_graph, generator_specs, GeneratorNodes};
pub use params::{BoundParams, NetworkParams, ParamSpec};
