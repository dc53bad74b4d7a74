//! `key = value` run configuration with preset defaults.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use voxface::geometry::SynthConfig;
use voxface::training::TrainSchedule;
use voxface::{AdamConfig, LossWeights, ModelConfig};

use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub preset: String,
    pub seed: u64,
    pub view_size: usize,
    pub encoder_channels: Vec<usize>,
    pub decoder_channels: Vec<usize>,
    pub leaky_slope: f64,
    pub attention: bool,
    pub sparsity: bool,
    pub samples: usize,
    pub sigma_noise: f64,
    pub holes: usize,
    pub hole_radius: f64,
    pub max_yaw: f64,
    pub max_pitch: f64,
    pub max_roll: f64,
    pub iterations: u64,
    pub eval_interval: u64,
    pub critic_steps: u32,
    pub generator_steps: u32,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lambda_gp: f64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub threshold: f32,
}

/// Adam step size for the desk preset. The short 2000-iteration budget at 32³
/// does not move the attention-enabled generator at the full-scale rate.
pub const DESK_LR: f64 = 1e-3;

impl RunConfig {
    pub fn preset(name: &str) -> Result<Self, CliError> {
        let model = ModelConfig::preset(name).map_err(|e| CliError::Usage(e.to_string()))?;
        let synth = SynthConfig::new(model.view_size);
        let weights = LossWeights::default();
        let adam = AdamConfig::default();
        let schedule = TrainSchedule::new(2000, 0);
        Ok(Self {
            preset: name.to_string(),
            seed: 0,
            view_size: model.view_size,
            encoder_channels: model.encoder_channels,
            decoder_channels: model.decoder_channels,
            leaky_slope: model.leaky_slope,
            attention: true,
            sparsity: true,
            samples: 200,
            sigma_noise: synth.sigma_noise,
            holes: synth.holes,
            hole_radius: synth.hole_radius,
            max_yaw: synth.max_yaw,
            max_pitch: synth.max_pitch,
            max_roll: synth.max_roll,
            iterations: schedule.iterations,
            eval_interval: schedule.eval_interval,
            critic_steps: schedule.critic_steps,
            generator_steps: schedule.generator_steps,
            alpha: weights.alpha,
            beta: weights.beta,
            gamma: weights.gamma,
            lambda_gp: weights.lambda_gp,
            lr: if name == "desk" { DESK_LR } else { adam.lr },
            beta1: adam.beta1,
            beta2: adam.beta2,
            adam_eps: adam.eps,
            threshold: 0.5,
        })
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        fn p<T: FromStr>(key: &str, v: &str) -> Result<T, CliError> {
            v.parse().map_err(|_| CliError::Usage(format!("bad value {v:?} for {key}")))
        }
        fn list(key: &str, v: &str) -> Result<Vec<usize>, CliError> {
            v.split(',').map(|s| p(key, s.trim())).collect()
        }
        match key {
            "preset" => {
                if value != self.preset {
                    return Err(CliError::Usage(format!("preset {value:?} must be chosen before other keys")));
                }
            }
            "seed" => self.seed = p(key, value)?,
            "view_size" => self.view_size = p(key, value)?,
            "encoder_channels" => self.encoder_channels = list(key, value)?,
            "decoder_channels" => self.decoder_channels = list(key, value)?,
            "leaky_slope" => self.leaky_slope = p(key, value)?,
            "attention" => self.attention = p(key, value)?,
            "sparsity" => self.sparsity = p(key, value)?,
            "samples" => self.samples = p(key, value)?,
            "sigma_noise" => self.sigma_noise = p(key, value)?,
            "holes" => self.holes = p(key, value)?,
            "hole_radius" => self.hole_radius = p(key, value)?,
            "max_yaw" => self.max_yaw = p(key, value)?,
            "max_pitch" => self.max_pitch = p(key, value)?,
            "max_roll" => self.max_roll = p(key, value)?,
            "iterations" => self.iterations = p(key, value)?,
            "eval_interval" => self.eval_interval = p(key, value)?,
            "critic_steps" => self.critic_steps = p(key, value)?,
            "generator_steps" => self.generator_steps = p(key, value)?,
            "alpha" => self.alpha = p(key, value)?,
            "beta" => self.beta = p(key, value)?,
            "gamma" => self.gamma = p(key, value)?,
            "lambda_gp" => self.lambda_gp = p(key, value)?,
            "lr" => self.lr = p(key, value)?,
            "beta1" => self.beta1 = p(key, value)?,
            "beta2" => self.beta2 = p(key, value)?,
            "adam_eps" => self.adam_eps = p(key, value)?,
            "threshold" => self.threshold = p(key, value)?,
            other => return Err(CliError::Usage(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Preset defaults, then the file's settings. `preset` overrides the
    /// file's own `preset` key.
    pub fn from_text(text: &str, preset: Option<&str>) -> Result<Self, CliError> {
        let pairs = parse_pairs(text)?;
        let file_preset = pairs.iter().find(|(k, _)| k == "preset").map(|(_, v)| v.as_str());
        let mut cfg = Self::preset(preset.or(file_preset).unwrap_or("desk"))?;
        for (k, v) in &pairs {
            if k != "preset" {
                cfg.set(k, v)?;
            }
        }
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, preset: Option<&str>) -> Result<Self, CliError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_text(&text, preset)
    }

    /// Every effective value, in a form [`RunConfig::from_text`] reads back.
    pub fn to_text(&self) -> String {
        let list = |c: &[usize]| c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("preset", self.preset.clone());
        kv("seed", self.seed.to_string());
        kv("view_size", self.view_size.to_string());
        kv("encoder_channels", list(&self.encoder_channels));
        kv("decoder_channels", list(&self.decoder_channels));
        kv("leaky_slope", self.leaky_slope.to_string());
        kv("attention", self.attention.to_string());
        kv("sparsity", self.sparsity.to_string());
        kv("samples", self.samples.to_string());
        kv("sigma_noise", self.sigma_noise.to_string());
        kv("holes", self.holes.to_string());
        kv("hole_radius", self.hole_radius.to_string());
        kv("max_yaw", self.max_yaw.to_string());
        kv("max_pitch", self.max_pitch.to_string());
        kv("max_roll", self.max_roll.to_string());
        kv("iterations", self.iterations.to_string());
        kv("eval_interval", self.eval_interval.to_string());
        kv("critic_steps", self.critic_steps.to_string());
        kv("generator_steps", self.generator_steps.to_string());
        kv("alpha", self.alpha.to_string());
        kv("beta", self.beta.to_string());
        kv("gamma", self.gamma.to_string());
        kv("lambda_gp", self.lambda_gp.to_string());
        kv("lr", self.lr.to_string());
        kv("beta1", self.beta1.to_string());
        kv("beta2", self.beta2.to_string());
        kv("adam_eps", self.adam_eps.to_string());
        kv("threshold", self.threshold.to_string());
        s
    }

    pub fn model(&self) -> Result<ModelConfig, CliError> {
        let m = ModelConfig {
            preset: self.preset.clone(),
            view_size: self.view_size,
            grid_size: self.view_size,
            encoder_channels: self.encoder_channels.clone(),
            decoder_channels: self.decoder_channels.clone(),
            leaky_slope: self.leaky_slope,
            attention: self.attention,
        };
        m.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(m)
    }

    pub fn synth(&self) -> SynthConfig {
        SynthConfig {
            view_size: self.view_size,
            grid_size: self.view_size,
            sigma_noise: self.sigma_noise,
            holes: self.holes,
            hole_radius: self.hole_radius,
            max_yaw: self.max_yaw,
            max_pitch: self.max_pitch,
            max_roll: self.max_roll,
            ..SynthConfig::new(self.view_size)
        }
    }

    /// Loss weights with the sparsity term switched off when disabled.
    pub fn weights(&self) -> LossWeights {
        LossWeights {
            alpha: self.alpha,
            beta: self.beta,
            gamma: if self.sparsity { self.gamma } else { 0.0 },
            lambda_gp: self.lambda_gp,
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig { lr: self.lr, beta1: self.beta1, beta2: self.beta2, eps: self.adam_eps }
    }

    pub fn schedule(&self) -> TrainSchedule {
        TrainSchedule {
            iterations: self.iterations,
            critic_steps: self.critic_steps,
            generator_steps: self.generator_steps,
            eval_interval: self.eval_interval,
            seed: self.seed,
        }
    }
}

fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value, got {raw:?}", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}
