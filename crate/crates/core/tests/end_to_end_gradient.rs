//! Generator loss gradients through the full generator and critic, checked
//! against central differences on a sample of coordinates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use voxface::geometry::{synth_sample, SynthConfig};
use voxface::gradcheck::{adaptive_central_difference, analytic_gradient, relative_error, ADAPTIVE_STEPS};
use voxface::model::{build_critic, build_generator, critic_graph, generator_graph, BoundParams};
use voxface::objectives::weighted_bce_graph;
use voxface::training::TrainSample;
use voxface::{Graph, LossWeights, ModelConfig, NodeId, Result, Tensor};

#[test]
fn generator_loss_gradient_on_a_four_sample_batch() {
    let cfg = ModelConfig { encoder_channels: vec![16, 16, 16, 16, 16], decoder_channels: vec![8, 8, 8, 8, 8], ..ModelConfig::desk() };
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut generator = build_generator(&cfg, 3).unwrap();
    for t in generator.tensors_mut() {
        for v in t.data_mut() {
            *v += rng.random_range(-0.05..0.05);
        }
    }
    let critic = build_critic(&cfg, 4).unwrap();
    let synth = SynthConfig::new(cfg.view_size);
    let batch: Vec<TrainSample> = (0..4)
        .map(|s| {
            let x = synth_sample(40 + s, &synth).unwrap();
            TrainSample::new(&x.depth, &x.grid)
        })
        .collect();
    let w = LossWeights::default();
    let names: Vec<String> = generator.names().map(String::from).collect();
    let loss = |g: &mut Graph, ids: &[NodeId]| -> Result<NodeId> {
        let gp = BoundParams::from_ids(&names, ids);
        let cp = critic.bind(g, false);
        let mut terms = Vec::new();
        for s in &batch {
            let d = g.constant(s.depth.clone());
            let y = generator_graph(g, &cfg, &gp, d)?.grid;
            let score = critic_graph(g, &cfg, &cp, d, y)?;
            let a = g.scale(score, -w.alpha);
            let bce = weighted_bce_graph(g, y, &s.target)?;
            let b = g.scale(bce, w.beta);
            let sum = g.sum(y);
            let c = g.scale(sum, w.gamma);
            let ab = g.add(a, b)?;
            terms.push(g.add(ab, c)?);
        }
        let mut total = terms[0];
        for &t in &terms[1..] {
            total = g.add(total, t)?;
        }
        Ok(g.scale(total, 0.25))
    };
    let mut points: Vec<Tensor> = generator.tensors().cloned().collect();
    let analytic = analytic_gradient(&loss, &points).unwrap();
    let value = |pts: &[Tensor]| -> Result<f64> {
        let mut g = Graph::new();
        let ids: Vec<NodeId> = pts.iter().map(|p| g.constant(p.clone())).collect();
        let out = loss(&mut g, &ids)?;
        g.value(out).item()
    };
    let mut picks: Vec<(usize, usize)> = (0..points.len()).map(|t| (t, rng.random_range(0..points[t].len()))).collect();
    for _ in 0..60 {
        let t = rng.random_range(0..points.len());
        picks.push((t, rng.random_range(0..points[t].len())));
    }
    let mut worst: f64 = 0.0;
    for (t, i) in picks {
        let orig = points[t].data()[i];
        let cell = std::cell::RefCell::new(&mut points);
        let numeric = adaptive_central_difference(
            |v| {
                let mut p = cell.borrow_mut();
                p[t].data_mut()[i] = v;
                value(&p[..])
            },
            orig,
            &ADAPTIVE_STEPS,
        )
        .unwrap();
        points[t].data_mut()[i] = orig;
        let err = relative_error(analytic[t].data()[i], numeric);
        assert!(err < 1e-3, "{} [{i}]: analytic {} numeric {numeric}", names[t], analytic[t].data()[i]);
        worst = worst.max(err);
    }
    assert!(worst.is_finite());
}
