use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::tensor::Tensor;

/// Name, shape and fan-in of one parameter tensor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    /// Inputs feeding one output unit; 0 marks a bias.
    pub fan_in: usize,
}

impl ParamSpec {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }
}

/// Ordered, uniquely named parameter tensors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NetworkParams {
    entries: Vec<(String, Tensor)>,
}

impl NetworkParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, t: Tensor) -> Result<()> {
        let name = name.into();
        if self.entries.iter().any(|(n, _)| *n == name) {
            return Err(Error::invalid(format!("duplicate parameter {name}")));
        }
        self.entries.push((name, t));
        Ok(())
    }

    /// He-style initialization: weights `N(0, 2/fan_in)`, biases zero. Each
    /// tensor draws from its own stream keyed by `(seed, name)`, so networks
    /// that share layer names share those layers' initial values.
    pub fn init(specs: &[ParamSpec], seed: u64) -> Result<Self> {
        let mut p = Self::new();
        for s in specs {
            let t = if s.fan_in == 0 {
                Tensor::zeros(s.shape.clone())
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ name_hash(&s.name));
                Tensor::randn(s.shape.clone(), (2.0 / s.fan_in as f64).sqrt(), &mut rng)
            };
            p.push(s.name.clone(), t)?;
        }
        Ok(p)
    }

    pub fn zeros(specs: &[ParamSpec]) -> Result<Self> {
        let mut p = Self::new();
        for s in specs {
            p.push(s.name.clone(), Tensor::zeros(s.shape.clone()))?;
        }
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total scalar count.
    pub fn count(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.len()).sum()
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn tensors(&self) -> impl Iterator<Item = &Tensor> {
        self.entries.iter().map(|(_, t)| t)
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.entries.iter_mut().map(|(_, t)| t)
    }

    /// Checks names and shapes against a layout.
    pub fn check(&self, specs: &[ParamSpec]) -> Result<()> {
        if specs.len() != self.entries.len() {
            return Err(Error::invalid(format!("{} parameters, layout has {}", self.entries.len(), specs.len())));
        }
        for (s, (n, t)) in specs.iter().zip(&self.entries) {
            if s.name != *n || s.shape != t.shape() {
                return Err(Error::shape(
                    "parameters",
                    format!("{n} {:?} where layout expects {} {:?}", t.shape(), s.name, s.shape),
                ));
            }
        }
        Ok(())
    }

    /// Adds every tensor to `graph` as a leaf.
    pub fn bind(&self, graph: &mut Graph, requires_grad: bool) -> BoundParams {
        let ids = self.entries.iter().map(|(_, t)| graph.leaf(t.clone(), requires_grad)).collect();
        let index = self.entries.iter().enumerate().map(|(i, (n, _))| (n.clone(), i)).collect();
        BoundParams { ids, index }
    }

    /// Rounds every value to the nearest `f32`.
    pub fn round_to_f32(&mut self) {
        for t in self.tensors_mut() {
            t.data_mut().iter_mut().for_each(|v| *v = *v as f32 as f64);
        }
    }

    /// FNV-1a over the bit patterns of every value, in order.
    pub fn fingerprint(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for t in self.tensors() {
            for v in t.data() {
                for b in v.to_bits().to_le_bytes() {
                    h = (h ^ b as u64).wrapping_mul(0x0100_0000_01b3);
                }
            }
        }
        h
    }
}

fn name_hash(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Graph handles for a [`NetworkParams`], in the same order.
#[derive(Clone, Debug)]
pub struct BoundParams {
    ids: Vec<NodeId>,
    index: HashMap<String, usize>,
}

impl BoundParams {
    /// Pairs names with nodes already on a graph.
    pub fn from_ids(names: &[String], ids: &[NodeId]) -> Self {
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        Self { ids: ids.to_vec(), index }
    }

    pub fn get(&self, name: &str) -> Result<NodeId> {
        self.index
            .get(name)
            .map(|&i| self.ids[i])
            .ok_or_else(|| Error::invalid(format!("missing parameter {name}")))
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    /// Gradients in parameter order; parameters the loss never reached get zeros.
    pub fn grads(&self, graph: &Graph) -> Vec<Tensor> {
        self.ids
            .iter()
            .map(|&id| graph.grad(id).cloned().unwrap_or_else(|| Tensor::zeros(graph.value(id).shape().to_vec())))
            .collect()
    }
}
