use crate::error::{Error, Result};
use crate::geometry::{DepthView, VoxelGrid};
use crate::graph::{Graph, NodeId};

use super::attention::{channel_attention, spatial_attention, AttentionWeights};
use super::config::{ModelConfig, CHANNEL_REDUCTION, KERNEL, OUT_PAD, PAD, SPATIAL_REDUCTION, STRIDE};
use super::params::{BoundParams, NetworkParams, ParamSpec};

fn conv_spec(out: &mut Vec<ParamSpec>, name: &str, shape: [usize; 4], fan_in: usize, bias: usize) {
    out.push(ParamSpec { name: format!("{name}.weight"), shape: shape.to_vec(), fan_in });
    out.push(ParamSpec { name: format!("{name}.bias"), shape: vec![bias], fan_in: 0 });
}

/// Input channels of each stride-2 transposed convolution.
pub(crate) fn decoder_inputs(cfg: &ModelConfig) -> Vec<usize> {
    let l = cfg.depth();
    (0..l)
        .map(|i| if i == 0 { cfg.encoder_channels[l - 1] } else { cfg.decoder_channels[i - 1] + cfg.encoder_channels[l - 1 - i] })
        .collect()
}

/// Generator parameter layout, in binding order. Does not allocate tensors, so
/// it is cheap even for the large preset.
pub fn generator_specs(cfg: &ModelConfig) -> Result<Vec<ParamSpec>> {
    cfg.validate()?;
    let k = KERNEL;
    let mut out = Vec::new();
    let mut c_in = 1;
    for (i, &c) in cfg.encoder_channels.iter().enumerate() {
        conv_spec(&mut out, &format!("enc.{i}"), [c, c_in, k, k], c_in * k * k, c);
        c_in = c;
    }
    if cfg.attention {
        let c = cfg.encoder_channels[0];
        let m = c / SPATIAL_REDUCTION;
        conv_spec(&mut out, "sa.cv1", [m, c, 1, 1], c, m);
        conv_spec(&mut out, "sa.cv2", [1, m, 1, 1], m, 1);
    }
    for (i, (&ci, &co)) in decoder_inputs(cfg).iter().zip(&cfg.decoder_channels).enumerate() {
        conv_spec(&mut out, &format!("dec.{i}"), [ci, co, k, k], ci * k * k, co);
    }
    let last = *cfg.decoder_channels.last().expect("validated");
    if cfg.attention {
        let m = last / CHANNEL_REDUCTION;
        conv_spec(&mut out, "ca.cv1", [m, last, 1, 1], last, m);
        conv_spec(&mut out, "ca.cv2", [last, m, 1, 1], m, last);
    }
    conv_spec(&mut out, "out", [last, cfg.grid_size, 1, 1], last, cfg.grid_size);
    Ok(out)
}

pub fn build_generator(cfg: &ModelConfig, seed: u64) -> Result<NetworkParams> {
    NetworkParams::init(&generator_specs(cfg)?, seed)
}

fn attention_weights(p: &BoundParams, prefix: &str) -> Result<AttentionWeights> {
    Ok(AttentionWeights {
        cv1_weight: p.get(&format!("{prefix}.cv1.weight"))?,
        cv1_bias: p.get(&format!("{prefix}.cv1.bias"))?,
        cv2_weight: p.get(&format!("{prefix}.cv2.weight"))?,
        cv2_bias: p.get(&format!("{prefix}.cv2.bias"))?,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct GeneratorNodes {
    /// `grid_size × view × view` occupancy probabilities, indexed `[z][y][x]`.
    pub grid: NodeId,
    pub spatial_map: Option<NodeId>,
    pub channel_weights: Option<NodeId>,
}

/// Records the generator on `g`. `depth` must be `1 × view × view`.
pub fn generator_graph(g: &mut Graph, cfg: &ModelConfig, p: &BoundParams, depth: NodeId) -> Result<GeneratorNodes> {
    let s = cfg.view_size;
    if g.value(depth).shape() != [1, s, s] {
        return Err(Error::shape("generator", format!("depth {:?}, expected [1, {s}, {s}]", g.value(depth).shape())));
    }
    let l = cfg.depth();
    let slope = cfg.leaky_slope;
    let mut skips = Vec::with_capacity(l);
    let mut spatial_map = None;
    let mut h = depth;
    for i in 0..l {
        let w = p.get(&format!("enc.{i}.weight"))?;
        let b = p.get(&format!("enc.{i}.bias"))?;
        h = g.conv2d(h, w, Some(b), STRIDE, PAD)?;
        h = g.leaky_relu(h, slope)?;
        if i == 0 && cfg.attention {
            let (out, map) = spatial_attention(g, h, &attention_weights(p, "sa")?)?;
            h = out;
            spatial_map = Some(map);
        }
        skips.push(h);
    }
    for i in 0..l {
        if i > 0 {
            h = g.concat_channels(h, skips[l - 1 - i])?;
        }
        let w = p.get(&format!("dec.{i}.weight"))?;
        let b = p.get(&format!("dec.{i}.bias"))?;
        h = g.transpose_conv2d(h, w, Some(b), STRIDE, PAD, OUT_PAD)?;
        h = g.leaky_relu(h, slope)?;
    }
    let mut channel_weights = None;
    if cfg.attention {
        let (out, weights) = channel_attention(g, h, &attention_weights(p, "ca")?)?;
        h = out;
        channel_weights = Some(weights);
    }
    h = g.transpose_conv2d(h, p.get("out.weight")?, Some(p.get("out.bias")?), 1, 0, 0)?;
    let grid = g.sigmoid(h);
    Ok(GeneratorNodes { grid, spatial_map, channel_weights })
}

/// Largest `f32` below 1 and smallest positive normal `f32`: probabilities are
/// stored in single precision, where a saturated sigmoid would otherwise round
/// to exactly 0 or 1.
const PROB_HI: f32 = 1.0 - f32::EPSILON / 2.0;
const PROB_LO: f32 = f32::MIN_POSITIVE;

/// Inference: predicted occupancy probabilities for one depth view.
pub fn generator_forward(cfg: &ModelConfig, params: &NetworkParams, depth: &DepthView) -> Result<VoxelGrid> {
    if depth.width != cfg.view_size || depth.height != cfg.view_size {
        return Err(Error::shape(
            "generator",
            format!("{}×{} view for a {}-pixel model", depth.width, depth.height, cfg.view_size),
        ));
    }
    let mut g = Graph::new();
    let p = params.bind(&mut g, false);
    let x = g.constant(depth.to_tensor());
    let out = generator_graph(&mut g, cfg, &p, x)?;
    let n = cfg.grid_size;
    let values = g.value(out.grid).data().iter().map(|&v| (v as f32).clamp(PROB_LO, PROB_HI)).collect();
    VoxelGrid::new(n, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ModelConfig {
        ModelConfig {
            preset: "desk".into(),
            view_size: 8,
            grid_size: 8,
            encoder_channels: vec![8, 8, 8],
            decoder_channels: vec![4, 4, 4],
            leaky_slope: 0.2,
            attention: true,
        }
    }

    /// Independent walk over the architecture description.
    fn tally(enc: &[usize], dec: &[usize], grid: usize, attention: bool) -> usize {
        let l = enc.len();
        let mut n = 0;
        let mut c_in = 1;
        for &c in enc {
            n += c * c_in * 25 + c;
            c_in = c;
        }
        for i in 0..l {
            let ci = if i == 0 { enc[l - 1] } else { dec[i - 1] + enc[l - 1 - i] };
            n += ci * dec[i] * 25 + dec[i];
        }
        if attention {
            let c = enc[0];
            n += (c / 8) * c + c / 8 + c / 8 + 1;
            let d = dec[l - 1];
            n += (d / 4) * d + d / 4 + d * (d / 4) + d;
        }
        n + dec[l - 1] * grid + grid
    }

    #[test]
    fn desk_parameter_count_matches_tally() {
        let cfg = ModelConfig::desk();
        let p = build_generator(&cfg, 0).unwrap();
        assert_eq!(p.count(), tally(&cfg.encoder_channels, &cfg.decoder_channels, 32, true));
        let specs = generator_specs(&cfg).unwrap();
        p.check(&specs).unwrap();
    }

    #[test]
    fn paper_first_kernel_shape() {
        let specs = generator_specs(&ModelConfig::paper()).unwrap();
        assert_eq!(specs[0].name, "enc.0.weight");
        assert_eq!(specs[0].shape, vec![64, 1, 5, 5]);
        let last = specs.iter().find(|s| s.name == "out.weight").unwrap();
        assert_eq!(last.shape, vec![256, 128, 1, 1]);
        let names: std::collections::HashSet<_> = specs.iter().map(|s| &s.name).collect();
        assert_eq!(names.len(), specs.len());
    }

    #[test]
    fn init_is_deterministic_and_biases_zero() {
        let cfg = tiny();
        let a = build_generator(&cfg, 9).unwrap();
        let b = build_generator(&cfg, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, build_generator(&cfg, 10).unwrap());
        for (name, t) in a.iter() {
            if name.ends_with(".bias") {
                assert!(t.data().iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn attention_toggle_shares_initialization() {
        let cfg = tiny();
        let with = build_generator(&cfg, 4).unwrap();
        let without = build_generator(&ModelConfig { attention: false, ..cfg }, 4).unwrap();
        for (name, t) in without.iter() {
            assert_eq!(with.get(name), Some(t), "{name}");
        }
    }

    #[test]
    fn output_shape_and_range() {
        let cfg = tiny();
        let p = build_generator(&cfg, 1).unwrap();
        let mut view = DepthView::background(8, 8);
        for (i, v) in view.values.iter_mut().enumerate() {
            *v = (i % 5) as f32 * 0.2;
        }
        let grid = generator_forward(&cfg, &p, &view).unwrap();
        assert_eq!(grid.n, 8);
        assert!(grid.values.iter().all(|&v| v > 0.0 && v < 1.0));
        assert_eq!(grid, generator_forward(&cfg, &p, &view).unwrap());
        let zero = generator_forward(&cfg, &p, &DepthView::background(8, 8)).unwrap();
        assert!(zero.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn attention_maps_are_normalized() {
        let cfg = tiny();
        let params = build_generator(&cfg, 2).unwrap();
        let mut g = Graph::new();
        let p = params.bind(&mut g, false);
        let x = g.constant(DepthView::background(8, 8).to_tensor());
        let out = generator_graph(&mut g, &cfg, &p, x).unwrap();
        assert_eq!(g.value(out.grid).shape(), [8, 8, 8]);
        assert!((g.value(out.spatial_map.unwrap()).sum() - 1.0).abs() < 1e-6);
        assert!((g.value(out.channel_weights.unwrap()).sum() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_wrong_view_size() {
        let cfg = tiny();
        let p = build_generator(&cfg, 1).unwrap();
        assert!(generator_forward(&cfg, &p, &DepthView::background(16, 16)).is_err());
        let mut bad = cfg.clone();
        bad.decoder_channels.push(4);
        assert!(build_generator(&bad, 1).is_err());
    }
}
