//! Adam, the alternating critic/generator schedule and training checkpoints.

pub mod adam;
pub mod checkpoint;
pub mod trainer;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint};
pub use trainer::{log_line, model_config_from, IterationLosses, TrainSample, TrainSchedule, Trainer};
