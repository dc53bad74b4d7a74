//! Reverse-mode differentiation over an explicitly recorded operation graph.
//!
//! A [`Graph`] is built fresh for every forward pass. Nodes are appended in
//! application order, so the node index is a topological order and backward
//! is a single reverse sweep.

use crate::conv::{self, Dims, Window};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Element-wise nonlinearities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    LeakyRelu(f64),
    Sigmoid,
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Conv2d {
        x: NodeId,
        k: NodeId,
        b: Option<NodeId>,
        win: Window,
    },
    ConvTranspose2d {
        x: NodeId,
        k: NodeId,
        b: Option<NodeId>,
        win: Window,
    },
    LeakyRelu {
        x: NodeId,
        slope: f64,
    },
    Sigmoid {
        x: NodeId,
    },
    Softmax {
        x: NodeId,
        axis: usize,
    },
    GlobalMaxPool {
        x: NodeId,
        argmax: Vec<usize>,
    },
    ConcatChannels {
        a: NodeId,
        b: NodeId,
    },
    SliceChannels {
        x: NodeId,
        start: usize,
    },
    Reshape {
        x: NodeId,
    },
    Add {
        a: NodeId,
        b: NodeId,
    },
    Sub {
        a: NodeId,
        b: NodeId,
    },
    Mul {
        a: NodeId,
        b: NodeId,
    },
    MulConst {
        x: NodeId,
        factor: Tensor,
    },
    Scale {
        x: NodeId,
        c: f64,
    },
    AddScalar {
        x: NodeId,
    },
    MulSpatial {
        f: NodeId,
        map: NodeId,
    },
    MulChannel {
        f: NodeId,
        weights: NodeId,
    },
    Sum {
        x: NodeId,
    },
    Mean {
        x: NodeId,
    },
    Square {
        x: NodeId,
    },
    Norm {
        x: NodeId,
    },
    WeightedBce {
        y: NodeId,
        target: Tensor,
        omega: f64,
        clip: f64,
    },
}

#[derive(Clone, Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
    grad: Option<Tensor>,
}

/// A recorded computation. See the module docs.
#[derive(Clone, Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Adds a leaf holding `value`.
    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> NodeId {
        self.push(value, Op::Leaf, requires_grad)
    }

    /// A leaf whose gradient is tracked.
    pub fn param(&mut self, value: Tensor) -> NodeId {
        self.leaf(value, true)
    }

    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.leaf(value, false)
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn requires_grad(&self, id: NodeId) -> bool {
        self.nodes[id.0].requires_grad
    }

    /// Accumulated gradient of a leaf, if a backward pass reached it.
    pub fn grad(&self, id: NodeId) -> Option<&Tensor> {
        self.nodes[id.0].grad.as_ref()
    }

    pub fn take_grad(&mut self, id: NodeId) -> Option<Tensor> {
        self.nodes[id.0].grad.take()
    }

    pub fn zero_grad(&mut self) {
        for node in &mut self.nodes {
            node.grad = None;
        }
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> NodeId {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
            grad: None,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn any_grad(&self, ids: &[NodeId]) -> bool {
        ids.iter().any(|&id| self.nodes[id.0].requires_grad)
    }

    fn chw(&self, id: NodeId, op: &'static str) -> Result<Dims> {
        let t = self.value(id);
        t.chw()
            .map(|(c, h, w)| Dims::new(c, h, w))
            .ok_or_else(|| Error::shape(op, format!("expected C×H×W, got {:?}", t.shape())))
    }

    fn kernel4(&self, id: NodeId, op: &'static str) -> Result<[usize; 4]> {
        match *self.value(id).shape() {
            [a, b, c, d] => Ok([a, b, c, d]),
            ref s => Err(Error::shape(op, format!("kernel must be rank 4, got {s:?}"))),
        }
    }

    fn check_bias(&self, b: Option<NodeId>, channels: usize, op: &'static str) -> Result<()> {
        if let Some(b) = b {
            if self.value(b).len() != channels {
                return Err(Error::shape(
                    op,
                    format!("bias has {} entries for {channels} channels", self.value(b).len()),
                ));
            }
        }
        Ok(())
    }

    fn add_bias(&self, y: &mut [f64], b: Option<NodeId>, plane: usize) {
        if let Some(b) = b {
            for (chunk, &bv) in y.chunks_mut(plane).zip(self.value(b).data()) {
                chunk.iter_mut().for_each(|v| *v += bv);
            }
        }
    }

    /// Cross-correlation of `x` (`C_in×H×W`) with kernel bank `k` (`C_out×C_in×kh×kw`).
    pub fn conv2d(&mut self, x: NodeId, k: NodeId, b: Option<NodeId>, stride: usize, pad: usize) -> Result<NodeId> {
        const OP: &str = "conv2d";
        let xd = self.chw(x, OP)?;
        let [c_out, c_in, kh, kw] = self.kernel4(k, OP)?;
        if c_in != xd.c {
            return Err(Error::shape(OP, format!("input has {} channels, kernel expects {c_in}", xd.c)));
        }
        if stride == 0 {
            return Err(Error::invalid("conv2d stride must be positive"));
        }
        self.check_bias(b, c_out, OP)?;
        let win = Window { kh, kw, stride, pad };
        if win.out_extent(xd.h, kh).is_none() || win.out_extent(xd.w, kw).is_none() {
            return Err(Error::shape(OP, format!("{kh}×{kw} kernel exceeds padded {}×{}", xd.h, xd.w)));
        }
        let (mut y, yd) = conv::correlate(self.value(x).data(), xd, self.value(k).data(), c_out, win);
        self.add_bias(&mut y, b, yd.h * yd.w);
        let rg = self.any_grad(&[x, k]) || b.is_some_and(|b| self.requires_grad(b));
        let value = Tensor::new([yd.c, yd.h, yd.w], y)?;
        Ok(self.push(value, Op::Conv2d { x, k, b, win }, rg))
    }

    /// Transposed convolution; `k` is laid out `C_in×C_out×kh×kw`.
    ///
    /// Output extent is `(H−1)·stride − 2·pad + kh + out_pad`.
    #[allow(clippy::too_many_arguments)]
    pub fn transpose_conv2d(
        &mut self,
        x: NodeId,
        k: NodeId,
        b: Option<NodeId>,
        stride: usize,
        pad: usize,
        out_pad: usize,
    ) -> Result<NodeId> {
        const OP: &str = "transpose_conv2d";
        let xd = self.chw(x, OP)?;
        let [c_in, c_out, kh, kw] = self.kernel4(k, OP)?;
        if c_in != xd.c {
            return Err(Error::shape(OP, format!("input has {} channels, kernel expects {c_in}", xd.c)));
        }
        if stride == 0 {
            return Err(Error::invalid("transpose_conv2d stride must be positive"));
        }
        if out_pad >= stride {
            return Err(Error::invalid(format!("out_pad {out_pad} must be < stride {stride}")));
        }
        self.check_bias(b, c_out, OP)?;
        let extent = |n: usize, kk: usize| -> Result<usize> {
            ((n - 1) * stride + kk + out_pad)
                .checked_sub(2 * pad)
                .filter(|&e| e > 0)
                .ok_or_else(|| Error::shape(OP, "padding exceeds output extent"))
        };
        let target = Dims::new(c_out, extent(xd.h, kh)?, extent(xd.w, kw)?);
        let win = Window { kh, kw, stride, pad };
        let mut y = conv::scatter(self.value(x).data(), xd, self.value(k).data(), target, win);
        self.add_bias(&mut y, b, target.h * target.w);
        let rg = self.any_grad(&[x, k]) || b.is_some_and(|b| self.requires_grad(b));
        let value = Tensor::new([target.c, target.h, target.w], y)?;
        Ok(self.push(value, Op::ConvTranspose2d { x, k, b, win }, rg))
    }

    pub fn pointwise(&mut self, x: NodeId, kind: Activation) -> Result<NodeId> {
        match kind {
            Activation::LeakyRelu(slope) => self.leaky_relu(x, slope),
            Activation::Sigmoid => Ok(self.sigmoid(x)),
        }
    }

    pub fn leaky_relu(&mut self, x: NodeId, slope: f64) -> Result<NodeId> {
        if !(slope > 0.0 && slope < 1.0) {
            return Err(Error::invalid(format!("leaky slope {slope} outside (0,1)")));
        }
        let value = self.value(x).map(|v| if v >= 0.0 { v } else { slope * v });
        let rg = self.requires_grad(x);
        Ok(self.push(value, Op::LeakyRelu { x, slope }, rg))
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let value = self.value(x).map(sigmoid);
        let rg = self.requires_grad(x);
        self.push(value, Op::Sigmoid { x }, rg)
    }

    /// Softmax along `axis`, with the slice maximum subtracted before exponentiation.
    pub fn softmax(&mut self, x: NodeId, axis: usize) -> Result<NodeId> {
        let t = self.value(x);
        let shape = t.shape();
        if axis >= shape.len() {
            return Err(Error::shape("softmax", format!("axis {axis} for shape {shape:?}")));
        }
        let (outer, n, inner) = split_axis(shape, axis);
        let src = t.data();
        let mut out = vec![0.0; src.len()];
        for o in 0..outer {
            for i in 0..inner {
                let idx = |a: usize| (o * n + a) * inner + i;
                let max = (0..n).map(|a| src[idx(a)]).fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for a in 0..n {
                    let e = (src[idx(a)] - max).exp();
                    out[idx(a)] = e;
                    total += e;
                }
                for a in 0..n {
                    out[idx(a)] /= total;
                }
            }
        }
        let value = Tensor::new(shape.to_vec(), out)?;
        let rg = self.requires_grad(x);
        Ok(self.push(value, Op::Softmax { x, axis }, rg))
    }

    /// Per-channel maximum over the spatial plane; `C×H×W → C×1`.
    pub fn global_max_pool(&mut self, x: NodeId) -> Result<NodeId> {
        let d = self.chw(x, "global_max_pool")?;
        let plane = d.h * d.w;
        if plane == 0 {
            return Err(Error::shape("global_max_pool", "empty spatial plane"));
        }
        let src = self.value(x).data();
        let mut argmax = Vec::with_capacity(d.c);
        let mut out = Vec::with_capacity(d.c);
        for c in 0..d.c {
            let chan = &src[c * plane..(c + 1) * plane];
            let (best, &v) = chan
                .iter()
                .enumerate()
                .fold((0, &chan[0]), |acc, (i, v)| if *v > *acc.1 { (i, v) } else { acc });
            argmax.push(c * plane + best);
            out.push(v);
        }
        let value = Tensor::new([d.c, 1], out)?;
        let rg = self.requires_grad(x);
        Ok(self.push(value, Op::GlobalMaxPool { x, argmax }, rg))
    }

    /// Stacks `a` (`C_a×H×W`) on top of `b` (`C_b×H×W`).
    pub fn concat_channels(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let da = self.chw(a, "concat_channels")?;
        let db = self.chw(b, "concat_channels")?;
        if (da.h, da.w) != (db.h, db.w) {
            return Err(Error::shape(
                "concat_channels",
                format!("spatial {}×{} vs {}×{}", da.h, da.w, db.h, db.w),
            ));
        }
        let mut data = Vec::with_capacity(da.len() + db.len());
        data.extend_from_slice(self.value(a).data());
        data.extend_from_slice(self.value(b).data());
        let value = Tensor::new([da.c + db.c, da.h, da.w], data)?;
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(value, Op::ConcatChannels { a, b }, rg))
    }

    /// Channels `[start, start+len)` of a `C×H×W` tensor.
    pub fn slice_channels(&mut self, x: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let d = self.chw(x, "slice_channels")?;
        if start + len > d.c {
            return Err(Error::shape(
                "slice_channels",
                format!("[{start}, {}) of {} channels", start + len, d.c),
            ));
        }
        let plane = d.h * d.w;
        let data = self.value(x).data()[start * plane..(start + len) * plane].to_vec();
        let value = Tensor::new([len, d.h, d.w], data)?;
        let rg = self.requires_grad(x);
        Ok(self.push(value, Op::SliceChannels { x, start }, rg))
    }

    pub fn reshape(&mut self, x: NodeId, shape: impl Into<Vec<usize>>) -> Result<NodeId> {
        let value = self.value(x).clone().reshape(shape)?;
        let rg = self.requires_grad(x);
        Ok(self.push(value, Op::Reshape { x }, rg))
    }

    fn binary(&mut self, a: NodeId, b: NodeId, name: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(Error::shape(name, format!("{:?} vs {:?}", ta.shape(), tb.shape())));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(&u, &v)| f(u, v)).collect();
        Tensor::new(ta.shape().to_vec(), data)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.binary(a, b, "add", |u, v| u + v)?;
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(value, Op::Add { a, b }, rg))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.binary(a, b, "sub", |u, v| u - v)?;
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(value, Op::Sub { a, b }, rg))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.binary(a, b, "mul", |u, v| u * v)?;
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(value, Op::Mul { a, b }, rg))
    }

    /// Element-wise product with a constant tensor of the same shape.
    pub fn mul_const(&mut self, x: NodeId, factor: Tensor) -> Result<NodeId> {
        let t = self.value(x);
        if t.shape() != factor.shape() {
            return Err(Error::shape("mul_const", format!("{:?} vs {:?}", t.shape(), factor.shape())));
        }
        let data = t.data().iter().zip(factor.data()).map(|(a, b)| a * b).collect();
        let value = Tensor::new(t.shape().to_vec(), data)?;
        let rg = self.requires_grad(x);
        Ok(self.push(value, Op::MulConst { x, factor }, rg))
    }

    pub fn scale(&mut self, x: NodeId, c: f64) -> NodeId {
        let value = self.value(x).map(|v| v * c);
        let rg = self.requires_grad(x);
        self.push(value, Op::Scale { x, c }, rg)
    }

    pub fn add_scalar(&mut self, x: NodeId, c: f64) -> NodeId {
        let value = self.value(x).map(|v| v + c);
        let rg = self.requires_grad(x);
        self.push(value, Op::AddScalar { x }, rg)
    }

    /// `out[c,p] = f[c,p] · map[p]` for `f: C×H×W` and a map with `H·W` entries.
    pub fn mul_spatial(&mut self, f: NodeId, map: NodeId) -> Result<NodeId> {
        let d = self.chw(f, "mul_spatial")?;
        let plane = d.h * d.w;
        let m = self.value(map).data();
        if m.len() != plane {
            return Err(Error::shape("mul_spatial", format!("map has {} entries for a {}×{} plane", m.len(), d.h, d.w)));
        }
        let mut data = self.value(f).data().to_vec();
        for chunk in data.chunks_mut(plane) {
            chunk.iter_mut().zip(m).for_each(|(v, w)| *v *= w);
        }
        let value = Tensor::new(self.value(f).shape().to_vec(), data)?;
        let rg = self.any_grad(&[f, map]);
        Ok(self.push(value, Op::MulSpatial { f, map }, rg))
    }

    /// `out[c,p] = f[c,p] · weights[c]` for `f: C×H×W` and `C` weights.
    pub fn mul_channel(&mut self, f: NodeId, weights: NodeId) -> Result<NodeId> {
        let d = self.chw(f, "mul_channel")?;
        let plane = d.h * d.w;
        let wv = self.value(weights).data();
        if wv.len() != d.c {
            return Err(Error::shape("mul_channel", format!("{} weights for {} channels", wv.len(), d.c)));
        }
        let mut data = self.value(f).data().to_vec();
        for (chunk, &w) in data.chunks_mut(plane).zip(wv) {
            chunk.iter_mut().for_each(|v| *v *= w);
        }
        let value = Tensor::new(self.value(f).shape().to_vec(), data)?;
        let rg = self.any_grad(&[f, weights]);
        Ok(self.push(value, Op::MulChannel { f, weights }, rg))
    }

    pub fn sum(&mut self, x: NodeId) -> NodeId {
        let value = Tensor::scalar(self.value(x).sum());
        let rg = self.requires_grad(x);
        self.push(value, Op::Sum { x }, rg)
    }

    pub fn mean(&mut self, x: NodeId) -> Result<NodeId> {
        let t = self.value(x);
        if t.is_empty() {
            return Err(Error::invalid("mean of an empty tensor"));
        }
        let value = Tensor::scalar(t.sum() / t.len() as f64);
        let rg = self.requires_grad(x);
        Ok(self.push(value, Op::Mean { x }, rg))
    }

    pub fn square(&mut self, x: NodeId) -> NodeId {
        let value = self.value(x).map(|v| v * v);
        let rg = self.requires_grad(x);
        self.push(value, Op::Square { x }, rg)
    }

    /// Euclidean norm over all entries. The gradient at the origin is taken as 0.
    pub fn norm(&mut self, x: NodeId) -> NodeId {
        let n = self.value(x).data().iter().map(|v| v * v).sum::<f64>().sqrt();
        let rg = self.requires_grad(x);
        self.push(Tensor::scalar(n), Op::Norm { x }, rg)
    }

    /// Class-weighted binary cross-entropy, summed over all entries:
    /// `−Σ [(1−ω)·t·ln y + ω·(1−t)·ln(1−y)]`, with `y` clipped to `[clip, 1−clip]`.
    pub fn weighted_bce(&mut self, y: NodeId, target: Tensor, omega: f64, clip: f64) -> Result<NodeId> {
        let yt = self.value(y);
        if yt.len() != target.len() {
            return Err(Error::shape("weighted_bce", format!("{:?} vs {:?}", yt.shape(), target.shape())));
        }
        let mut loss = 0.0;
        for (&p, &t) in yt.data().iter().zip(target.data()) {
            let p = p.clamp(clip, 1.0 - clip);
            loss -= (1.0 - omega) * t * p.ln() + omega * (1.0 - t) * (1.0 - p).ln();
        }
        let rg = self.requires_grad(y);
        Ok(self.push(Tensor::scalar(loss), Op::WeightedBce { y, target, omega, clip }, rg))
    }

    /// Accumulates `d loss / d leaf` into every reachable leaf that requires a gradient.
    ///
    /// Repeated calls add to existing gradients; use [`Graph::zero_grad`] to reset.
    pub fn backward(&mut self, loss: NodeId) -> Result<()> {
        if self.value(loss).len() != 1 {
            return Err(Error::shape(
                "backward",
                format!("loss must be scalar, got shape {:?}", self.value(loss).shape()),
            ));
        }
        let mut adj: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        adj[loss.0] = Some(Tensor::full(self.value(loss).shape().to_vec(), 1.0));
        for id in (0..=loss.0).rev() {
            let Some(g) = adj[id].take() else { continue };
            if !self.nodes[id].requires_grad {
                continue;
            }
            let contributions = self.local_grads(id, &g)?;
            if matches!(self.nodes[id].op, Op::Leaf) {
                match &mut self.nodes[id].grad {
                    Some(acc) => acc.add_assign(&g),
                    slot => *slot = Some(g),
                }
                continue;
            }
            for (input, grad) in contributions {
                if !self.nodes[input.0].requires_grad {
                    continue;
                }
                match &mut adj[input.0] {
                    Some(acc) => acc.add_assign(&grad),
                    slot => *slot = Some(grad),
                }
            }
        }
        Ok(())
    }

    fn local_grads(&self, id: usize, g: &Tensor) -> Result<Vec<(NodeId, Tensor)>> {
        let node = &self.nodes[id];
        let out = &node.value;
        let rg = |n: NodeId| self.nodes[n.0].requires_grad;
        let like = |n: NodeId, data: Vec<f64>| Tensor::new(self.value(n).shape().to_vec(), data);
        let mut res = Vec::new();
        match &node.op {
            Op::Leaf => {}
            Op::Conv2d { x, k, b, win } => {
                let xd = self.chw(*x, "conv2d")?;
                let yd = self.chw(NodeId(id), "conv2d")?;
                if rg(*x) {
                    let dx = conv::scatter(g.data(), yd, self.value(*k).data(), xd, *win);
                    res.push((*x, like(*x, dx)?));
                }
                if rg(*k) {
                    let dk = conv::kernel_grad(self.value(*x).data(), xd, g.data(), yd, *win);
                    res.push((*k, like(*k, dk)?));
                }
                if let Some(b) = b.filter(|b| rg(*b)) {
                    res.push((b, like(b, channel_sums(g.data(), yd))?));
                }
            }
            Op::ConvTranspose2d { x, k, b, win } => {
                let xd = self.chw(*x, "transpose_conv2d")?;
                let yd = self.chw(NodeId(id), "transpose_conv2d")?;
                if rg(*x) {
                    // kernel laid out C_in×C_out: correlating the upstream grad with it maps back to C_in
                    let (dx, _) = conv::correlate(g.data(), yd, self.value(*k).data(), xd.c, *win);
                    res.push((*x, like(*x, dx)?));
                }
                if rg(*k) {
                    let dk = conv::kernel_grad(g.data(), yd, self.value(*x).data(), xd, *win);
                    res.push((*k, like(*k, dk)?));
                }
                if let Some(b) = b.filter(|b| rg(*b)) {
                    res.push((b, like(b, channel_sums(g.data(), yd))?));
                }
            }
            Op::LeakyRelu { x, slope } => {
                let xv = self.value(*x).data();
                let d = g.data().iter().zip(xv).map(|(&gv, &v)| if v >= 0.0 { gv } else { slope * gv }).collect();
                res.push((*x, like(*x, d)?));
            }
            Op::Sigmoid { x } => {
                let d = g.data().iter().zip(out.data()).map(|(&gv, &s)| gv * s * (1.0 - s)).collect();
                res.push((*x, like(*x, d)?));
            }
            Op::Softmax { x, axis } => {
                let (outer, n, inner) = split_axis(out.shape(), *axis);
                let (s, gd) = (out.data(), g.data());
                let mut d = vec![0.0; s.len()];
                for o in 0..outer {
                    for i in 0..inner {
                        let idx = |a: usize| (o * n + a) * inner + i;
                        let dot: f64 = (0..n).map(|a| gd[idx(a)] * s[idx(a)]).sum();
                        for a in 0..n {
                            d[idx(a)] = s[idx(a)] * (gd[idx(a)] - dot);
                        }
                    }
                }
                res.push((*x, like(*x, d)?));
            }
            Op::GlobalMaxPool { x, argmax } => {
                let mut d = vec![0.0; self.value(*x).len()];
                for (&pos, &gv) in argmax.iter().zip(g.data()) {
                    d[pos] += gv;
                }
                res.push((*x, like(*x, d)?));
            }
            Op::ConcatChannels { a, b } => {
                let split = self.value(*a).len();
                res.push((*a, like(*a, g.data()[..split].to_vec())?));
                res.push((*b, like(*b, g.data()[split..].to_vec())?));
            }
            Op::SliceChannels { x, start } => {
                let d = self.chw(*x, "slice_channels")?;
                let plane = d.h * d.w;
                let mut dx = vec![0.0; d.len()];
                dx[start * plane..start * plane + g.len()].copy_from_slice(g.data());
                res.push((*x, like(*x, dx)?));
            }
            Op::Reshape { x } => res.push((*x, like(*x, g.data().to_vec())?)),
            Op::Add { a, b } => {
                res.push((*a, g.clone()));
                res.push((*b, g.clone()));
            }
            Op::Sub { a, b } => {
                res.push((*a, g.clone()));
                res.push((*b, g.map(|v| -v)));
            }
            Op::Mul { a, b } => {
                let (va, vb) = (self.value(*a).data(), self.value(*b).data());
                let da = g.data().iter().zip(vb).map(|(x, y)| x * y).collect();
                let db = g.data().iter().zip(va).map(|(x, y)| x * y).collect();
                res.push((*a, like(*a, da)?));
                res.push((*b, like(*b, db)?));
            }
            Op::MulConst { x, factor } => {
                let d = g.data().iter().zip(factor.data()).map(|(a, b)| a * b).collect();
                res.push((*x, like(*x, d)?));
            }
            Op::Scale { x, c } => res.push((*x, g.map(|v| v * c))),
            Op::AddScalar { x } => res.push((*x, g.clone())),
            Op::MulSpatial { f, map } => {
                let d = self.chw(*f, "mul_spatial")?;
                let plane = d.h * d.w;
                let (fv, mv) = (self.value(*f).data(), self.value(*map).data());
                let mut df = g.data().to_vec();
                for chunk in df.chunks_mut(plane) {
                    chunk.iter_mut().zip(mv).for_each(|(v, m)| *v *= m);
                }
                let mut dm = vec![0.0; plane];
                for (gc, fc) in g.data().chunks(plane).zip(fv.chunks(plane)) {
                    for p in 0..plane {
                        dm[p] += gc[p] * fc[p];
                    }
                }
                res.push((*f, like(*f, df)?));
                res.push((*map, like(*map, dm)?));
            }
            Op::MulChannel { f, weights } => {
                let d = self.chw(*f, "mul_channel")?;
                let plane = d.h * d.w;
                let (fv, wv) = (self.value(*f).data(), self.value(*weights).data());
                let mut df = g.data().to_vec();
                for (chunk, &w) in df.chunks_mut(plane).zip(wv) {
                    chunk.iter_mut().for_each(|v| *v *= w);
                }
                let dw = g
                    .data()
                    .chunks(plane)
                    .zip(fv.chunks(plane))
                    .map(|(gc, fc)| gc.iter().zip(fc).map(|(a, b)| a * b).sum())
                    .collect();
                res.push((*f, like(*f, df)?));
                res.push((*weights, like(*weights, dw)?));
            }
            Op::Sum { x } => {
                let gv = g.data()[0];
                res.push((*x, Tensor::full(self.value(*x).shape().to_vec(), gv)));
            }
            Op::Mean { x } => {
                let n = self.value(*x).len() as f64;
                let gv = g.data()[0] / n;
                res.push((*x, Tensor::full(self.value(*x).shape().to_vec(), gv)));
            }
            Op::Square { x } => {
                let d = g.data().iter().zip(self.value(*x).data()).map(|(gv, v)| 2.0 * v * gv).collect();
                res.push((*x, like(*x, d)?));
            }
            Op::Norm { x } => {
                let n = out.data()[0];
                let gv = g.data()[0];
                let d = if n > 0.0 {
                    self.value(*x).data().iter().map(|v| gv * v / n).collect()
                } else {
                    vec![0.0; self.value(*x).len()]
                };
                res.push((*x, like(*x, d)?));
            }
            Op::WeightedBce { y, target, omega, clip } => {
                let gv = g.data()[0];
                let d = self
                    .value(*y)
                    .data()
                    .iter()
                    .zip(target.data())
                    .map(|(&p, &t)| {
                        if p < *clip || p > 1.0 - clip {
                            0.0
                        } else {
                            -gv * ((1.0 - omega) * t / p - omega * (1.0 - t) / (1.0 - p))
                        }
                    })
                    .collect();
                res.push((*y, like(*y, d)?));
            }
        }
        Ok(res)
    }
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

fn split_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

fn channel_sums(g: &[f64], d: Dims) -> Vec<f64> {
    g.chunks(d.h * d.w).map(|c| c.iter().sum()).collect()
}
