//! Adversarial, reconstruction and sparsity losses plus the gradient penalty.

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::tensor::Tensor;

/// Probabilities are clipped to `[LOG_CLIP, 1 − LOG_CLIP]` before any logarithm.
pub const LOG_CLIP: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lambda_gp: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { alpha: 20.0, beta: 100.0, gamma: 20.0, lambda_gp: 5.0 }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma), ("lambda_gp", self.lambda_gp)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("loss weight {name} = {v} must be finite and non-negative")));
            }
        }
        Ok(())
    }
}

/// `−mean(scores)`.
pub fn gen_adversarial_loss(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::invalid("adversarial loss needs at least one score"));
    }
    Ok(-scores.iter().sum::<f64>() / scores.len() as f64)
}

/// `mean(d_fake) − mean(d_real) + penalty`.
pub fn critic_loss(d_fake: &[f64], d_real: &[f64], penalty: f64) -> Result<f64> {
    if d_fake.is_empty() || d_real.is_empty() {
        return Err(Error::invalid("critic loss needs at least one score on each side"));
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    Ok(mean(d_fake) - mean(d_real) + penalty)
}

/// Fraction of occupied entries in a binary target; rejects non-binary values.
pub fn occupancy_ratio(target: &Tensor) -> Result<f64> {
    if target.is_empty() {
        return Err(Error::invalid("empty target grid"));
    }
    let mut occupied = 0usize;
    for &t in target.data() {
        if t == 1.0 {
            occupied += 1;
        } else if t != 0.0 {
            return Err(Error::invalid(format!("target grid must be binary, found {t}")));
        }
    }
    Ok(occupied as f64 / target.len() as f64)
}

/// Records the class-weighted cross-entropy of `y` against a binary target,
/// summed over voxels, with `ω` the target's occupancy ratio.
pub fn weighted_bce_graph(g: &mut Graph, y: NodeId, target: &Tensor) -> Result<NodeId> {
    let omega = occupancy_ratio(target)?;
    g.weighted_bce(y, target.clone(), omega, LOG_CLIP)
}

pub fn weighted_bce(y: &Tensor, target: &Tensor) -> Result<f64> {
    let mut g = Graph::new();
    let node = g.constant(y.clone());
    let loss = weighted_bce_graph(&mut g, node, target)?;
    g.value(loss).item()
}

/// `Σ |y_i|`; predictions are non-negative so this is the plain sum.
pub fn sparsity_loss(y: &Tensor) -> f64 {
    y.sum()
}

/// A critic whose gradient with respect to the grid input can be recorded as a
/// differentiable graph.
pub trait GridCritic {
    /// Records `∇_grid D(depth, grid)` on `g`, shaped like `grid`.
    fn input_gradient(&self, g: &mut Graph, depth: &Tensor, grid: &Tensor) -> Result<NodeId>;
}

/// `eps·real + (1−eps)·fake`.
pub fn interpolate(fake: &Tensor, real: &Tensor, eps: f64) -> Result<Tensor> {
    if fake.shape() != real.shape() {
        return Err(Error::shape("interpolate", format!("{:?} vs {:?}", fake.shape(), real.shape())));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::invalid(format!("interpolation weight {eps} outside [0,1]")));
    }
    let data = fake.data().iter().zip(real.data()).map(|(&f, &r)| eps * r + (1.0 - eps) * f).collect();
    Tensor::new(fake.shape().to_vec(), data)
}

/// `λ·(‖∇_{y′} D(y′)‖₂ − 1)²` at the interpolate `y′`, with one norm over all
/// grid entries.
pub fn gradient_penalty(
    g: &mut Graph,
    critic: &dyn GridCritic,
    depth: &Tensor,
    fake: &Tensor,
    real: &Tensor,
    eps: f64,
    lambda_gp: f64,
) -> Result<NodeId> {
    let mixed = interpolate(fake, real, eps)?;
    let grad = critic.input_gradient(g, depth, &mixed)?;
    let norm = g.norm(grad);
    let off = g.add_scalar(norm, -1.0);
    let sq = g.square(off);
    Ok(g.scale(sq, lambda_gp))
}

/// Unweighted loss terms of one generator/critic evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossParts {
    pub adversarial: f64,
    pub reconstruction: f64,
    pub sparsity: f64,
    pub critic: f64,
}

/// `(L_G, L_D)` with `L_G = α·adversarial + β·reconstruction + γ·sparsity`.
pub fn total_losses(w: &LossWeights, parts: &LossParts) -> Result<(f64, f64)> {
    for (name, v) in [
        ("adversarial", parts.adversarial),
        ("reconstruction", parts.reconstruction),
        ("sparsity", parts.sparsity),
        ("critic", parts.critic),
    ] {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("{name} loss term is {v}")));
        }
    }
    let lg = w.alpha * parts.adversarial + w.beta * parts.reconstruction + w.gamma * parts.sparsity;
    Ok((lg, parts.critic))
}
