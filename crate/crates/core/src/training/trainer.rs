use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{DepthView, VoxelGrid};
use crate::graph::Graph;
use crate::model::{
    build_critic, build_generator, critic_graph, critic_specs, generator_graph, generator_specs, ConvCritic, ModelConfig,
    NetworkParams,
};
use crate::objectives::{gradient_penalty, total_losses, weighted_bce_graph, LossParts, LossWeights};
use crate::tensor::Tensor;

use super::adam::{adam_step, AdamConfig, AdamState};
use super::checkpoint::Checkpoint;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainSchedule {
    pub iterations: u64,
    pub critic_steps: u32,
    pub generator_steps: u32,
    pub eval_interval: u64,
    pub seed: u64,
}

impl TrainSchedule {
    pub fn new(iterations: u64, seed: u64) -> Self {
        Self { iterations, critic_steps: 1, generator_steps: 2, eval_interval: 500, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.critic_steps == 0 || self.generator_steps == 0 {
            return Err(Error::invalid("critic and generator step counts must be positive"));
        }
        if self.eval_interval == 0 {
            return Err(Error::invalid("evaluation interval must be positive"));
        }
        Ok(())
    }
}

/// One (depth view, binary target grid) training pair as tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainSample {
    pub depth: Tensor,
    pub target: Tensor,
}

impl TrainSample {
    pub fn new(depth: &DepthView, target: &VoxelGrid) -> Self {
        Self { depth: depth.to_tensor(), target: target.to_tensor() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationLosses {
    /// Critic loss of each critic step.
    pub critic: Vec<f64>,
    /// Weighted generator loss of each generator step.
    pub generator: Vec<f64>,
    /// Reconstruction term of each generator step, before its update.
    pub reconstruction: Vec<f64>,
}

/// Owns both networks, their optimizers and the sampling stream.
///
/// Parameters and moments are kept at `f32` precision between steps (all
/// arithmetic is `f64`), so a checkpoint captures the exact training state.
#[derive(Clone, Debug)]
pub struct Trainer {
    pub model: ModelConfig,
    pub weights: LossWeights,
    pub adam: AdamConfig,
    pub schedule: TrainSchedule,
    pub generator: NetworkParams,
    pub critic: NetworkParams,
    pub generator_opt: AdamState,
    pub critic_opt: AdamState,
    pub iteration: u64,
    rng: ChaCha8Rng,
}

impl Trainer {
    /// Fresh networks. Both are initialized from `schedule.seed`; layer names
    /// keep their streams apart.
    pub fn new(model: ModelConfig, weights: LossWeights, adam: AdamConfig, schedule: TrainSchedule) -> Result<Self> {
        model.validate()?;
        weights.validate()?;
        adam.validate()?;
        schedule.validate()?;
        let mut generator = build_generator(&model, schedule.seed)?;
        let mut critic = build_critic(&model, schedule.seed)?;
        generator.round_to_f32();
        critic.round_to_f32();
        let generator_opt = AdamState::new(&generator);
        let critic_opt = AdamState::new(&critic);
        let rng = ChaCha8Rng::seed_from_u64(schedule.seed);
        Ok(Self { model, weights, adam, schedule, generator, critic, generator_opt, critic_opt, iteration: 0, rng })
    }

    fn check_sample(&self, s: &TrainSample) -> Result<()> {
        let (v, n) = (self.model.view_size, self.model.grid_size);
        if s.depth.shape() != [1, v, v] || s.target.shape() != [n, n, n] {
            return Err(Error::shape(
                "train sample",
                format!("depth {:?}, target {:?} for a {v}-pixel model", s.depth.shape(), s.target.shape()),
            ));
        }
        Ok(())
    }

    fn predict_tensor(&self, depth: &Tensor) -> Result<Tensor> {
        let mut g = Graph::new();
        let p = self.generator.bind(&mut g, false);
        let x = g.constant(depth.clone());
        let out = generator_graph(&mut g, &self.model, &p, x)?;
        Ok(g.value(out.grid).clone())
    }

    /// One critic update with a fresh interpolation weight; returns its loss.
    fn critic_step(&mut self, s: &TrainSample) -> Result<f64> {
        let fake = self.predict_tensor(&s.depth)?;
        let eps: f64 = self.rng.random();
        let mut g = Graph::new();
        let p = self.critic.bind(&mut g, true);
        let d = g.constant(s.depth.clone());
        let y_fake = g.constant(fake.clone());
        let y_real = g.constant(s.target.clone());
        let d_fake = critic_graph(&mut g, &self.model, &p, d, y_fake)?;
        let d_real = critic_graph(&mut g, &self.model, &p, d, y_real)?;
        let critic = ConvCritic { cfg: &self.model, params: &p };
        let penalty = gradient_penalty(&mut g, &critic, &s.depth, &fake, &s.target, eps, self.weights.lambda_gp)?;
        let diff = g.sub(d_fake, d_real)?;
        let loss = g.add(diff, penalty)?;
        let value = g.value(loss).item()?;
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("critic loss ({value})")));
        }
        g.backward(loss)?;
        let grads = p.grads(&g);
        adam_step(&self.adam, &mut self.critic, &grads, &mut self.critic_opt)?;
        self.critic.round_to_f32();
        self.critic_opt.round_to_f32();
        Ok(value)
    }

    /// One generator update against the frozen critic; returns
    /// `(weighted loss, reconstruction term)`.
    fn generator_step(&mut self, s: &TrainSample) -> Result<(f64, f64)> {
        let mut g = Graph::new();
        let gp = self.generator.bind(&mut g, true);
        let cp = self.critic.bind(&mut g, false);
        let d = g.constant(s.depth.clone());
        let y = generator_graph(&mut g, &self.model, &gp, d)?.grid;
        let score = critic_graph(&mut g, &self.model, &cp, d, y)?;
        let adv = g.scale(score, -1.0);
        let bce = weighted_bce_graph(&mut g, y, &s.target)?;
        let sparse = g.sum(y);
        let parts = LossParts {
            adversarial: g.value(adv).item()?,
            reconstruction: g.value(bce).item()?,
            sparsity: g.value(sparse).item()?,
            critic: 0.0,
        };
        let (lg, _) = total_losses(&self.weights, &parts)?;
        let w = self.weights;
        let a = g.scale(adv, w.alpha);
        let b = g.scale(bce, w.beta);
        let c = g.scale(sparse, w.gamma);
        let ab = g.add(a, b)?;
        let loss = g.add(ab, c)?;
        if !lg.is_finite() {
            return Err(Error::NonFinite(format!("generator loss ({lg})")));
        }
        g.backward(loss)?;
        let grads = gp.grads(&g);
        adam_step(&self.adam, &mut self.generator, &grads, &mut self.generator_opt)?;
        self.generator.round_to_f32();
        self.generator_opt.round_to_f32();
        Ok((lg, parts.reconstruction))
    }

    /// Critic steps, then generator steps, on one sample. Any non-finite value
    /// restores the state from before the iteration and returns the error.
    pub fn train_iteration(&mut self, s: &TrainSample) -> Result<IterationLosses> {
        self.check_sample(s)?;
        let snapshot = self.clone();
        match self.iteration_inner(s) {
            Ok(l) => {
                self.iteration += 1;
                Ok(l)
            }
            Err(e) => {
                *self = snapshot;
                Err(e)
            }
        }
    }

    fn iteration_inner(&mut self, s: &TrainSample) -> Result<IterationLosses> {
        let mut out = IterationLosses { critic: Vec::new(), generator: Vec::new(), reconstruction: Vec::new() };
        for _ in 0..self.schedule.critic_steps {
            out.critic.push(self.critic_step(s)?);
        }
        for _ in 0..self.schedule.generator_steps {
            let (lg, bce) = self.generator_step(s)?;
            out.generator.push(lg);
            out.reconstruction.push(bce);
        }
        Ok(out)
    }

    /// Sample for the current iteration: the dataset in order, cyclically.
    pub fn next_index(&self, len: usize) -> usize {
        (self.iteration % len as u64) as usize
    }

    pub fn predict(&self, depth: &DepthView) -> Result<VoxelGrid> {
        crate::model::generator_forward(&self.model, &self.generator, depth)
    }

    pub fn rng_word_pos(&self) -> u128 {
        self.rng.get_word_pos()
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut meta = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            meta.insert(k.to_string(), v);
        };
        let list = |c: &[usize]| c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        put("generator_steps_taken", self.generator_opt.t.to_string());
        put("critic_steps_taken", self.critic_opt.t.to_string());
        put("iteration", self.iteration.to_string());
        put("rng_seed", self.schedule.seed.to_string());
        put("rng_word_pos", self.rng.get_word_pos().to_string());
        put("iterations", self.schedule.iterations.to_string());
        put("critic_steps", self.schedule.critic_steps.to_string());
        put("generator_steps", self.schedule.generator_steps.to_string());
        put("eval_interval", self.schedule.eval_interval.to_string());
        put("alpha", self.weights.alpha.to_string());
        put("beta", self.weights.beta.to_string());
        put("gamma", self.weights.gamma.to_string());
        put("lambda_gp", self.weights.lambda_gp.to_string());
        put("lr", self.adam.lr.to_string());
        put("beta1", self.adam.beta1.to_string());
        put("beta2", self.adam.beta2.to_string());
        put("adam_eps", self.adam.eps.to_string());
        put("view_size", self.model.view_size.to_string());
        put("grid_size", self.model.grid_size.to_string());
        put("encoder_channels", list(&self.model.encoder_channels));
        put("decoder_channels", list(&self.model.decoder_channels));
        put("leaky_slope", self.model.leaky_slope.to_string());
        put("attention", self.model.attention.to_string());
        put("gp_gradient", "nested".to_string());
        Checkpoint {
            preset: self.model.preset.clone(),
            generator: self.generator.clone(),
            critic: self.critic.clone(),
            generator_opt: self.generator_opt.clone(),
            critic_opt: self.critic_opt.clone(),
            meta,
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let model = model_config_from(ck)?;
        let weights = LossWeights {
            alpha: ck.meta_parse("alpha")?,
            beta: ck.meta_parse("beta")?,
            gamma: ck.meta_parse("gamma")?,
            lambda_gp: ck.meta_parse("lambda_gp")?,
        };
        let adam = AdamConfig {
            lr: ck.meta_parse("lr")?,
            beta1: ck.meta_parse("beta1")?,
            beta2: ck.meta_parse("beta2")?,
            eps: ck.meta_parse("adam_eps")?,
        };
        let schedule = TrainSchedule {
            iterations: ck.meta_parse("iterations")?,
            critic_steps: ck.meta_parse("critic_steps")?,
            generator_steps: ck.meta_parse("generator_steps")?,
            eval_interval: ck.meta_parse("eval_interval")?,
            seed: ck.meta_parse("rng_seed")?,
        };
        ck.generator.check(&generator_specs(&model)?)?;
        ck.critic.check(&critic_specs(&model)?)?;
        let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
        rng.set_word_pos(ck.meta_parse("rng_word_pos")?);
        Ok(Self {
            model,
            weights,
            adam,
            schedule,
            generator: ck.generator.clone(),
            critic: ck.critic.clone(),
            generator_opt: ck.generator_opt.clone(),
            critic_opt: ck.critic_opt.clone(),
            iteration: ck.meta_parse("iteration")?,
            rng,
        })
    }
}

/// Model configuration recorded in a checkpoint.
pub fn model_config_from(ck: &Checkpoint) -> Result<ModelConfig> {
    let list = |key: &str| -> Result<Vec<usize>> {
        ck.meta(key)?
            .split(',')
            .map(|s| s.parse().map_err(|_| Error::format("checkpoint", format!("bad channel list for {key}"))))
            .collect()
    };
    let cfg = ModelConfig {
        preset: ck.preset.clone(),
        view_size: ck.meta_parse("view_size")?,
        grid_size: ck.meta_parse("grid_size")?,
        encoder_channels: list("encoder_channels")?,
        decoder_channels: list("decoder_channels")?,
        leaky_slope: ck.meta_parse("leaky_slope")?,
        attention: ck.meta_parse("attention")?,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Tab-separated log record: `iter L_D L_G1 L_G2 wall_ms`.
pub fn log_line(iteration: u64, losses: &IterationLosses, wall_ms: u128) -> String {
    let mut s = iteration.to_string();
    for v in losses.critic.iter().chain(&losses.generator) {
        let _ = write!(s, "\t{v}");
    }
    let _ = write!(s, "\t{wall_ms}");
    s
}
