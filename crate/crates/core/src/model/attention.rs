//! Spatial and channel re-weighting of feature maps.

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

use super::config::{CHANNEL_REDUCTION, SPATIAL_REDUCTION};

/// Weights of the two 1×1 convolutions inside an attention block.
#[derive(Clone, Copy, Debug)]
pub struct AttentionWeights {
    pub cv1_weight: NodeId,
    pub cv1_bias: NodeId,
    pub cv2_weight: NodeId,
    pub cv2_bias: NodeId,
}

/// Softmax-normalized per-position weighting.
///
/// `map = softmax_{all positions}(cv2(cv1(f)))` with `cv1: C → C/8` and
/// `cv2: C/8 → 1`; each channel plane is multiplied by `map`. Returns the
/// weighted features and the `H·W` map.
pub fn spatial_attention(g: &mut Graph, f: NodeId, w: &AttentionWeights) -> Result<(NodeId, NodeId)> {
    let shape = g.value(f).shape().to_vec();
    let [c, h, wd] = shape[..] else {
        return Err(Error::shape("spatial_attention", format!("expected C×H×W, got {shape:?}")));
    };
    if c % SPATIAL_REDUCTION != 0 {
        return Err(Error::invalid(format!("spatial attention needs C divisible by {SPATIAL_REDUCTION}, got {c}")));
    }
    let a = g.conv2d(f, w.cv1_weight, Some(w.cv1_bias), 1, 0)?;
    let logits = g.conv2d(a, w.cv2_weight, Some(w.cv2_bias), 1, 0)?;
    let flat = g.reshape(logits, [h * wd])?;
    let map = g.softmax(flat, 0)?;
    let out = g.mul_spatial(f, map)?;
    Ok((out, map))
}

/// Softmax-normalized per-channel weighting.
///
/// `weights = softmax_C(cv2(cv1(maxpool(f))))` with `cv1: C → C/4` and
/// `cv2: C/4 → C`; channel `c` is multiplied by `weights[c]`. Returns the
/// weighted features and the `C` weights.
pub fn channel_attention(g: &mut Graph, f: NodeId, w: &AttentionWeights) -> Result<(NodeId, NodeId)> {
    let shape = g.value(f).shape().to_vec();
    let [c, _, _] = shape[..] else {
        return Err(Error::shape("channel_attention", format!("expected C×H×W, got {shape:?}")));
    };
    if c % CHANNEL_REDUCTION != 0 {
        return Err(Error::invalid(format!("channel attention needs C divisible by {CHANNEL_REDUCTION}, got {c}")));
    }
    let pooled = g.global_max_pool(f)?;
    let pooled = g.reshape(pooled, [c, 1, 1])?;
    let a = g.conv2d(pooled, w.cv1_weight, Some(w.cv1_bias), 1, 0)?;
    let logits = g.conv2d(a, w.cv2_weight, Some(w.cv2_bias), 1, 0)?;
    let flat = g.reshape(logits, [c])?;
    let weights = g.softmax(flat, 0)?;
    let out = g.mul_channel(f, weights)?;
    Ok((out, weights))
}
