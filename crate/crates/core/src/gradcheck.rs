//! Central finite-difference verification of graph gradients.

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::tensor::Tensor;

pub const DEFAULT_EPS: f64 = 1e-5;

/// Relative error with a `max(1, |analytic|, |numeric|)` denominator.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / 1f64.max(analytic.abs()).max(numeric.abs())
}

/// Largest [`relative_error`] over paired coordinates.
pub fn max_relative_error(analytic: &[Tensor], numeric: &[Tensor]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .flat_map(|(a, n)| a.data().iter().zip(n.data()))
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max)
}

fn eval_scalar<F>(f: &F, points: &[Tensor], track: bool) -> Result<(Graph, Vec<NodeId>, NodeId)>
where
    F: Fn(&mut Graph, &[NodeId]) -> Result<NodeId>,
{
    let mut g = Graph::new();
    let ids: Vec<NodeId> = points.iter().map(|p| g.leaf(p.clone(), track)).collect();
    let out = f(&mut g, &ids)?;
    if g.value(out).len() != 1 {
        return Err(Error::shape("grad_check", "function must be scalar-valued"));
    }
    Ok((g, ids, out))
}

/// Gradients of a scalar graph function by reverse-mode differentiation.
pub fn analytic_gradient<F>(f: &F, points: &[Tensor]) -> Result<Vec<Tensor>>
where
    F: Fn(&mut Graph, &[NodeId]) -> Result<NodeId>,
{
    let (mut g, ids, out) = eval_scalar(f, points, true)?;
    g.backward(out)?;
    Ok(ids
        .iter()
        .zip(points)
        .map(|(&id, p)| g.take_grad(id).unwrap_or_else(|| Tensor::zeros(p.shape().to_vec())))
        .collect())
}

/// `(f(p + eps·eᵢ) − f(p − eps·eᵢ)) / 2·eps` for every coordinate of every point.
pub fn numeric_gradient<F>(f: &F, points: &[Tensor], eps: f64) -> Result<Vec<Tensor>>
where
    F: Fn(&mut Graph, &[NodeId]) -> Result<NodeId>,
{
    if !(eps > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let value_at = |pts: &[Tensor]| -> Result<f64> {
        let (g, _, out) = eval_scalar(f, pts, false)?;
        g.value(out).item()
    };
    let mut work = points.to_vec();
    let mut grads = Vec::with_capacity(points.len());
    for t in 0..points.len() {
        let mut grad = Tensor::zeros(points[t].shape().to_vec());
        for i in 0..points[t].len() {
            let orig = points[t].data()[i];
            work[t].data_mut()[i] = orig + eps;
            let hi = value_at(&work)?;
            work[t].data_mut()[i] = orig - eps;
            let lo = value_at(&work)?;
            work[t].data_mut()[i] = orig;
            grad.data_mut()[i] = (hi - lo) / (2.0 * eps);
        }
        grads.push(grad);
    }
    Ok(grads)
}

/// Candidate steps for [`numeric_gradient_adaptive`], in order of preference.
pub const ADAPTIVE_STEPS: [f64; 4] = [1e-5, 1e-4, 1e-6, 1e-3];

/// A step is accepted outright when the bias bound `mismatch / 2` is below
/// this fraction of `max(1, |estimate|)`.
const LINEAR_ENOUGH: f64 = 1e-4;

/// Central difference of a scalar function at `x` that tolerates
/// piecewise-linear activations.
///
/// A step that straddles a leaky-ReLU kink (or a max-pool switch) biases the
/// central difference by at most half the gap between the forward and
/// backward one-sided differences; a step that is too small drowns in
/// rounding. Steps are tried in order and the first whose gap bounds the bias
/// tightly is used; failing that, the step with the smallest gap. The choice
/// depends only on function values, never on the gradient under test.
pub fn adaptive_central_difference(f: impl Fn(f64) -> Result<f64>, x: f64, steps: &[f64]) -> Result<f64> {
    let base = f(x)?;
    adaptive_from(f, x, base, steps)
}

fn adaptive_from(f: impl Fn(f64) -> Result<f64>, x: f64, base: f64, steps: &[f64]) -> Result<f64> {
    if steps.is_empty() || steps.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::invalid("finite-difference steps must be positive"));
    }
    let mut best = (f64::INFINITY, 0.0);
    for &eps in steps {
        let hi = f(x + eps)?;
        let lo = f(x - eps)?;
        let mismatch = ((hi - base) - (base - lo)).abs() / eps;
        let central = (hi - lo) / (2.0 * eps);
        if mismatch / 2.0 <= LINEAR_ENOUGH * central.abs().max(1.0) {
            return Ok(central);
        }
        if mismatch < best.0 {
            best = (mismatch, central);
        }
    }
    Ok(best.1)
}

/// [`numeric_gradient`] with [`adaptive_central_difference`] per coordinate.
pub fn numeric_gradient_adaptive<F>(f: &F, points: &[Tensor], steps: &[f64]) -> Result<Vec<Tensor>>
where
    F: Fn(&mut Graph, &[NodeId]) -> Result<NodeId>,
{
    let base = {
        let (g, _, out) = eval_scalar(f, points, false)?;
        g.value(out).item()?
    };
    let mut work = points.to_vec();
    let mut grads = Vec::with_capacity(points.len());
    for t in 0..points.len() {
        let mut grad = Tensor::zeros(points[t].shape().to_vec());
        for i in 0..points[t].len() {
            let orig = points[t].data()[i];
            let cell = std::cell::RefCell::new(&mut work);
            let d = adaptive_from(
                |v| {
                    let mut w = cell.borrow_mut();
                    w[t].data_mut()[i] = v;
                    let (g, _, out) = eval_scalar(f, &w[..], false)?;
                    g.value(out).item()
                },
                orig,
                base,
                steps,
            )?;
            work[t].data_mut()[i] = orig;
            grad.data_mut()[i] = d;
        }
        grads.push(grad);
    }
    Ok(grads)
}

/// Maximum relative error between backward gradients and central differences
/// for a function of several tensors.
pub fn grad_check_many<F>(f: F, points: &[Tensor], eps: f64) -> Result<f64>
where
    F: Fn(&mut Graph, &[NodeId]) -> Result<NodeId>,
{
    let analytic = analytic_gradient(&f, points)?;
    let numeric = numeric_gradient(&f, points, eps)?;
    Ok(max_relative_error(&analytic, &numeric))
}

/// Single-input form of [`grad_check_many`].
pub fn grad_check<F>(f: F, point: &Tensor, eps: f64) -> Result<f64>
where
    F: Fn(&mut Graph, NodeId) -> Result<NodeId>,
{
    grad_check_many(|g: &mut Graph, ids: &[NodeId]| f(g, ids[0]), std::slice::from_ref(point), eps)
}
