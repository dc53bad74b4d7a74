use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::objectives::GridCritic;
use crate::tensor::Tensor;

use super::config::{ModelConfig, KERNEL, PAD, STRIDE};
use super::params::{BoundParams, NetworkParams, ParamSpec};

/// Critic layout: the encoder's conv stack over `1 + grid_size` input channels.
pub fn critic_specs(cfg: &ModelConfig) -> Result<Vec<ParamSpec>> {
    cfg.validate()?;
    let k = KERNEL;
    let mut out = Vec::new();
    let mut c_in = 1 + cfg.grid_size;
    for (i, &c) in cfg.encoder_channels.iter().enumerate() {
        out.push(ParamSpec { name: format!("conv.{i}.weight"), shape: vec![c, c_in, k, k], fan_in: c_in * k * k });
        out.push(ParamSpec { name: format!("conv.{i}.bias"), shape: vec![c], fan_in: 0 });
        c_in = c;
    }
    Ok(out)
}

pub fn build_critic(cfg: &ModelConfig, seed: u64) -> Result<NetworkParams> {
    NetworkParams::init(&critic_specs(cfg)?, seed)
}

/// Records the critic; returns the score and every pre-activation.
fn critic_layers(g: &mut Graph, cfg: &ModelConfig, p: &BoundParams, depth: NodeId, grid: NodeId) -> Result<(NodeId, Vec<NodeId>)> {
    let (s, n) = (cfg.view_size, cfg.grid_size);
    if g.value(depth).shape() != [1, s, s] || g.value(grid).shape() != [n, s, s] {
        return Err(Error::shape(
            "critic",
            format!("depth {:?} and grid {:?} for a {s}-pixel model", g.value(depth).shape(), g.value(grid).shape()),
        ));
    }
    let mut h = g.concat_channels(depth, grid)?;
    let mut pre = Vec::with_capacity(cfg.depth());
    for i in 0..cfg.depth() {
        let z = g.conv2d(h, p.get(&format!("conv.{i}.weight"))?, Some(p.get(&format!("conv.{i}.bias"))?), STRIDE, PAD)?;
        pre.push(z);
        h = g.leaky_relu(z, cfg.leaky_slope)?;
    }
    Ok((g.mean(h)?, pre))
}

/// Unbounded realism score: mean of the final `C × 1 × 1` activations.
pub fn critic_graph(g: &mut Graph, cfg: &ModelConfig, p: &BoundParams, depth: NodeId, grid: NodeId) -> Result<NodeId> {
    Ok(critic_layers(g, cfg, p, depth, grid)?.0)
}

pub fn critic_forward(cfg: &ModelConfig, params: &NetworkParams, depth: &Tensor, grid: &Tensor) -> Result<f64> {
    let mut g = Graph::new();
    let p = params.bind(&mut g, false);
    let d = g.constant(depth.clone());
    let y = g.constant(grid.clone());
    let score = critic_graph(&mut g, cfg, &p, d, y)?;
    g.value(score).item()
}

/// The convolutional critic bound to a graph.
pub struct ConvCritic<'a> {
    pub cfg: &'a ModelConfig,
    pub params: &'a BoundParams,
}

impl GridCritic for ConvCritic<'_> {
    /// Builds `∂D/∂grid` as an explicit graph so it can itself be
    /// differentiated with respect to the critic weights.
    ///
    /// With `h_l = φ(z_l)`, `z_l = K_l ⋆ h_{l−1} + b_l` and `D = mean(h_L)`, the
    /// input gradient is `K_1ᵀ(m_1 ⊙ … K_Lᵀ(m_L ⊙ 1/C_L))` where `m_l` is the
    /// (piecewise constant) activation slope at `z_l`. The slopes come from a
    /// forward pass and carry no gradient; each `K_lᵀ` is a transposed
    /// convolution sharing the weight node with the forward layer.
    fn input_gradient(&self, g: &mut Graph, depth: &Tensor, grid: &Tensor) -> Result<NodeId> {
        let cfg = self.cfg;
        let d = g.constant(depth.clone());
        let y = g.constant(grid.clone());
        let (_, pre) = critic_layers(g, cfg, self.params, d, y)?;
        let slope = cfg.leaky_slope;
        let last = g.value(*pre.last().expect("at least three layers")).len();
        let mut delta = g.constant(Tensor::full(g.value(*pre.last().unwrap()).shape().to_vec(), 1.0 / last as f64));
        for i in (0..pre.len()).rev() {
            let mask = g.value(pre[i]).map(|z| if z >= 0.0 { 1.0 } else { slope });
            let a = g.mul_const(delta, mask)?;
            let input_extent = if i == 0 { cfg.view_size } else { g.value(pre[i - 1]).shape()[1] };
            let out_extent = g.value(pre[i]).shape()[1];
            let out_pad = input_extent + 2 * PAD - KERNEL - (out_extent - 1) * STRIDE;
            let k = self.params.get(&format!("conv.{i}.weight"))?;
            delta = g.transpose_conv2d(a, k, None, STRIDE, PAD, out_pad)?;
        }
        g.slice_channels(delta, 1, cfg.grid_size)
    }
}
