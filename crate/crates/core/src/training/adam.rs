use crate::error::{Error, Result};
use crate::model::NetworkParams;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-4, beta1: 0.5, beta2: 0.999, eps: 1e-8 }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(format!("learning rate {} must be positive", self.lr)));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::invalid(format!("{name} = {b} outside [0,1)")));
            }
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::invalid(format!("eps {} must be positive", self.eps)));
        }
        Ok(())
    }
}

/// First and second moments per parameter tensor plus the step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &NetworkParams) -> Self {
        let zeros: Vec<Tensor> = params.tensors().map(|t| Tensor::zeros(t.shape().to_vec())).collect();
        Self { m: zeros.clone(), v: zeros, t: 0 }
    }

    pub fn round_to_f32(&mut self) {
        for t in self.m.iter_mut().chain(self.v.iter_mut()) {
            t.data_mut().iter_mut().for_each(|v| *v = *v as f32 as f64);
        }
    }
}

/// One bias-corrected Adam update. Non-finite gradients leave everything
/// untouched and return an error naming the parameter.
pub fn adam_step(cfg: &AdamConfig, params: &mut NetworkParams, grads: &[Tensor], state: &mut AdamState) -> Result<()> {
    if grads.len() != params.len() || state.m.len() != params.len() {
        return Err(Error::shape(
            "adam_step",
            format!("{} parameters, {} gradients, {} moments", params.len(), grads.len(), state.m.len()),
        ));
    }
    for ((name, p), g) in params.iter().zip(grads) {
        if p.shape() != g.shape() {
            return Err(Error::shape("adam_step", format!("{name}: parameter {:?}, gradient {:?}", p.shape(), g.shape())));
        }
        if !g.all_finite() {
            return Err(Error::NonFinite(format!("gradient of {name}; step refused")));
        }
    }
    if state.t >= (1 << 31) - 1 {
        return Err(Error::invalid("Adam step counter exhausted"));
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (((p, g), m), v) in params.tensors_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        let it = p.data_mut().iter_mut().zip(g.data()).zip(m.data_mut()).zip(v.data_mut());
        for (((p, &g), m), v) in it {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let mh = *m / c1;
            let vh = *v / c2;
            *p -= cfg.lr * mh / (vh.sqrt() + cfg.eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_params(v: f64) -> NetworkParams {
        let mut p = NetworkParams::new();
        p.push("w", Tensor::scalar(v)).unwrap();
        p
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = scalar_params(1.5);
        let mut s = AdamState::new(&p);
        adam_step(&AdamConfig::default(), &mut p, &[Tensor::scalar(0.0)], &mut s).unwrap();
        assert_eq!(p.get("w").unwrap().data()[0], 1.5);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let cfg = AdamConfig { lr: 1e-3, ..Default::default() };
        let mut p = scalar_params(0.0);
        let mut s = AdamState::new(&p);
        adam_step(&cfg, &mut p, &[Tensor::scalar(4.0)], &mut s).unwrap();
        let moved = p.get("w").unwrap().data()[0];
        assert!((moved + 1e-3).abs() < 1e-11, "{moved}");
    }

    #[test]
    fn two_steps_match_scalar_oracle() {
        let cfg = AdamConfig { lr: 0.01, beta1: 0.9, beta2: 0.99, eps: 1e-8 };
        let mut p = scalar_params(2.0);
        let mut s = AdamState::new(&p);
        for _ in 0..2 {
            adam_step(&cfg, &mut p, &[Tensor::scalar(0.5)], &mut s).unwrap();
        }
        let (mut theta, mut m, mut v) = (2.0f64, 0.0f64, 0.0f64);
        for t in 1..=2 {
            m = 0.9 * m + 0.1 * 0.5;
            v = 0.99 * v + 0.01 * 0.25;
            let mh = m / (1.0 - 0.9f64.powi(t));
            let vh = v / (1.0 - 0.99f64.powi(t));
            theta -= 0.01 * mh / (vh.sqrt() + 1e-8);
        }
        assert!((p.get("w").unwrap().data()[0] - theta).abs() < 1e-12);
    }

    #[test]
    fn nan_gradient_is_refused() {
        let mut p = scalar_params(1.0);
        let mut s = AdamState::new(&p);
        let err = adam_step(&AdamConfig::default(), &mut p, &[Tensor::scalar(f64::NAN)], &mut s).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
        assert_eq!(s.t, 0);
        assert_eq!(p.get("w").unwrap().data()[0], 1.0);
    }
}
