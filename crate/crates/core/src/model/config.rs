use crate::error::{Error, Result};

/// Every strided layer uses 5×5 kernels, stride 2 and padding 2 (output padding
/// 1 when transposed), so each layer exactly halves or doubles the resolution.
pub const KERNEL: usize = 5;
pub const STRIDE: usize = 2;
pub const PAD: usize = 2;
pub const OUT_PAD: usize = 1;

pub const SPATIAL_REDUCTION: usize = 8;
pub const CHANNEL_REDUCTION: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub preset: String,
    pub view_size: usize,
    pub grid_size: usize,
    /// Output channels of each encoder layer; the critic mirrors these.
    pub encoder_channels: Vec<usize>,
    /// Output channels of each stride-2 transposed convolution, bottleneck first.
    pub decoder_channels: Vec<usize>,
    pub leaky_slope: f64,
    pub attention: bool,
}

impl ModelConfig {
    /// 128² views, 128³ grids.
    pub fn paper() -> Self {
        Self {
            preset: "paper".into(),
            view_size: 128,
            grid_size: 128,
            encoder_channels: vec![64, 128, 256, 256, 512, 512, 512],
            decoder_channels: vec![32, 32, 64, 64, 128, 128, 256],
            leaky_slope: 0.2,
            attention: true,
        }
    }

    /// 32² views, 32³ grids; sized for CPU training.
    pub fn desk() -> Self {
        Self {
            preset: "desk".into(),
            view_size: 32,
            grid_size: 32,
            encoder_channels: vec![16, 32, 64, 64, 128],
            decoder_channels: vec![16, 16, 32, 32, 64],
            leaky_slope: 0.2,
            attention: true,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper" => Ok(Self::paper()),
            "desk" => Ok(Self::desk()),
            other => Err(Error::invalid(format!("unknown preset {other:?} (expected paper or desk)"))),
        }
    }

    /// Number of stride-2 layers on each side: `log2(view_size)`.
    pub fn depth(&self) -> usize {
        self.view_size.trailing_zeros() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        if self.view_size != self.grid_size {
            return bad(format!("view size {} must equal grid size {}", self.view_size, self.grid_size));
        }
        if self.view_size < 8 || !self.view_size.is_power_of_two() {
            return bad(format!("view size {} must be a power of two ≥ 8", self.view_size));
        }
        let depth = self.depth();
        if self.encoder_channels.len() != depth {
            return bad(format!("{} encoder layers for a {}-pixel view; need {depth}", self.encoder_channels.len(), self.view_size));
        }
        if self.decoder_channels.len() != depth {
            return bad(format!("{} decoder layers; need {depth}", self.decoder_channels.len()));
        }
        if self.encoder_channels.iter().chain(&self.decoder_channels).any(|&c| c == 0) {
            return bad("channel counts must be positive".into());
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return bad(format!("leaky slope {} outside (0,1)", self.leaky_slope));
        }
        if self.attention {
            if self.encoder_channels[0] % SPATIAL_REDUCTION != 0 {
                return bad(format!("spatial attention needs first encoder channels divisible by {SPATIAL_REDUCTION}"));
            }
            if self.decoder_channels[depth - 1] % CHANNEL_REDUCTION != 0 {
                return bad(format!("channel attention needs last decoder channels divisible by {CHANNEL_REDUCTION}"));
            }
        }
        Ok(())
    }
}
