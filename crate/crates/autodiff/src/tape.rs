//! Define-by-run operation tape.
//!
//! Every forward op appends a node holding its output value and enough
//! information to run the local gradient rule. Backward walks the tape
//! once in reverse, so its cost is proportional to the forward node count.

use std::cell::RefCell;
use std::rc::Rc;

use crate::error::{AdError, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    AddScalar(usize),
    Matmul(usize, usize),
    AddRowBias(usize, usize),
    AddChanBias(usize, usize),
    Conv2d {
        input: usize,
        weight: usize,
        stride: usize,
        pad: usize,
    },
    ConvT2d {
        input: usize,
        weight: usize,
        stride: usize,
        pad: usize,
    },
    Relu(usize),
    Silu(usize),
    Tanh(usize),
    Exp(usize),
    Log(usize),
    Abs(usize),
    Reshape(usize),
    Concat { inputs: Vec<usize>, axis: usize },
    Slice { input: usize, axis: usize, start: usize, end: usize },
    Sum(usize),
    Mean(usize),
}

struct Node {
    value: Tensor,
    op: Op,
}

struct TapeInner {
    nodes: Vec<Node>,
}

/// Shared handle to a single-threaded tape.
#[derive(Clone)]
pub struct Tape {
    inner: Rc<RefCell<TapeInner>>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

/// A value recorded on a tape.
#[derive(Clone)]
pub struct Var {
    tape: Tape,
    id: usize,
}

impl std::fmt::Debug for Var {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Var").field("id", &self.id).finish()
    }
}


/// Per-node gradients produced by a backward pass.
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    shapes: Vec<Vec<usize>>,
    /// Number of tape nodes visited by the reverse sweep.
    pub visited: usize,
}

impl Gradients {
    /// Gradient with respect to `v`; zeros if backward never reached it.
    pub fn wrt(&self, v: &Var) -> Tensor {
        match &self.grads[v.id] {
            Some(g) => Tensor::new(self.shapes[v.id].clone(), g.clone()).unwrap(),
            None => Tensor::zeros(&self.shapes[v.id]),
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Self {
            inner: Rc::new(RefCell::new(TapeInner { nodes: Vec::new() })),
        }
    }

    pub fn len(&self) -> usize {
        self.inner.borrow().nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn leaf(&self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    fn push(&self, value: Tensor, op: Op) -> Var {
        let mut inner = self.inner.borrow_mut();
        inner.nodes.push(Node { value, op });
        Var {
            tape: self.clone(),
            id: inner.nodes.len() - 1,
        }
    }

    fn push_checked(&self, value: Tensor, op: Op, name: &'static str) -> Result<Var> {
        if !value.all_finite() {
            return Err(AdError::NonFinite { op: name });
        }
        Ok(self.push(value, op))
    }

    fn value_of(&self, id: usize) -> Tensor {
        self.inner.borrow().nodes[id].value.clone()
    }

    /// Reverse sweep seeded with d(out)/d(out) = 1; `out` must be scalar.
    pub fn backward(&self, out: &Var) -> Result<Gradients> {
        let shape = out.shape();
        if shape.iter().product::<usize>() != 1 {
            return Err(AdError::NonScalarOutput(shape));
        }
        self.backward_with(out, &Tensor::new(shape, vec![1.0]).unwrap())
    }

    /// Reverse sweep seeded at an arbitrary node with an explicit cotangent.
    pub fn backward_with(&self, out: &Var, cotangent: &Tensor) -> Result<Gradients> {
        let inner = self.inner.borrow();
        let n = inner.nodes.len();
        if cotangent.shape() != inner.nodes[out.id].value.shape() {
            return Err(AdError::CotangentShape {
                got: cotangent.shape().to_vec(),
                expected: inner.nodes[out.id].value.shape().to_vec(),
            });
        }
        let mut grads: Vec<Option<Vec<f64>>> = (0..n).map(|_| None).collect();
        grads[out.id] = Some(cotangent.data().to_vec());
        let mut visited = 0usize;
        for id in (0..n).rev() {
            visited += 1;
            let g = match grads[id].take() {
                Some(g) => g,
                None => continue,
            };
            let node = &inner.nodes[id];
            backprop_node(&inner.nodes, node, &g, &mut grads);
            grads[id] = Some(g);
        }
        let shapes = inner
            .nodes
            .iter()
            .map(|nd| nd.value.shape().to_vec())
            .collect();
        Ok(Gradients {
            grads,
            shapes,
            visited,
        })
    }
}

fn accumulate(grads: &mut [Option<Vec<f64>>], id: usize, len: usize, f: impl FnOnce(&mut [f64])) {
    let slot = grads[id].get_or_insert_with(|| vec![0.0; len]);
    f(slot);
}

fn backprop_node(nodes: &[Node], node: &Node, g: &[f64], grads: &mut Vec<Option<Vec<f64>>>) {
    match &node.op {
        Op::Leaf => {}
        Op::Add(a, b) => {
            accumulate(grads, *a, g.len(), |d| {
                for (di, gi) in d.iter_mut().zip(g) {
                    *di += gi;
                }
            });
            accumulate(grads, *b, g.len(), |d| {
                for (di, gi) in d.iter_mut().zip(g) {
                    *di += gi;
                }
            });
        }
        Op::Sub(a, b) => {
            accumulate(grads, *a, g.len(), |d| {
                for (di, gi) in d.iter_mut().zip(g) {
                    *di += gi;
                }
            });
            accumulate(grads, *b, g.len(), |d| {
                for (di, gi) in d.iter_mut().zip(g) {
                    *di -= gi;
                }
            });
        }
        Op::Mul(a, b) => {
            let av = nodes[*a].value.data().to_vec();
            let bv = nodes[*b].value.data().to_vec();
            accumulate(grads, *a, g.len(), |d| {
                for i in 0..g.len() {
                    d[i] += g[i] * bv[i];
                }
            });
            accumulate(grads, *b, g.len(), |d| {
                for i in 0..g.len() {
                    d[i] += g[i] * av[i];
                }
            });
        }
        Op::Scale(a, c) => {
            accumulate(grads, *a, g.len(), |d| {
                for i in 0..g.len() {
                    d[i] += g[i] * c;
                }
            });
        }
        Op::AddScalar(a) => {
            accumulate(grads, *a, g.len(), |d| {
                for (di, gi) in d.iter_mut().zip(g) {
                    *di += gi;
                }
            });
        }
        Op::Matmul(a, b) => {
            let ash = nodes[*a].value.shape().to_vec();
            let bsh = nodes[*b].value.shape().to_vec();
            let (m, k, n) = (ash[0], ash[1], bsh[1]);
            let av = nodes[*a].value.data().to_vec();
            let bv = nodes[*b].value.data().to_vec();
            // dA = G * B^T
            accumulate(grads, *a, m * k, |d| {
                for i in 0..m {
                    for j in 0..n {
                        let gij = g[i * n + j];
                        for l in 0..k {
                            d[i * k + l] += gij * bv[l * n + j];
                        }
                    }
                }
            });
            // dB = A^T * G
            accumulate(grads, *b, k * n, |d| {
                for i in 0..m {
                    for l in 0..k {
                        let ail = av[i * k + l];
                        for j in 0..n {
                            d[l * n + j] += ail * g[i * n + j];
                        }
                    }
                }
            });
        }
        Op::AddRowBias(x, b) => {
            let xsh = nodes[*x].value.shape().to_vec();
            let (rows, cols) = (xsh[0], xsh[1]);
            accumulate(grads, *x, rows * cols, |d| {
                for (di, gi) in d.iter_mut().zip(g) {
                    *di += gi;
                }
            });
            accumulate(grads, *b, cols, |d| {
                for r in 0..rows {
                    for c in 0..cols {
                        d[c] += g[r * cols + c];
                    }
                }
            });
        }
        Op::AddChanBias(x, b) => {
            let xsh = nodes[*x].value.shape().to_vec();
            let (n, c, hw) = (xsh[0], xsh[1], xsh[2] * xsh[3]);
            accumulate(grads, *x, n * c * hw, |d| {
                for (di, gi) in d.iter_mut().zip(g) {
                    *di += gi;
                }
            });
            accumulate(grads, *b, c, |d| {
                for ni in 0..n {
                    for ci in 0..c {
                        let base = (ni * c + ci) * hw;
                        let mut s = 0.0;
                        for p in 0..hw {
                            s += g[base + p];
                        }
                        d[ci] += s;
                    }
                }
            });
        }
        Op::Conv2d {
            input,
            weight,
            stride,
            pad,
        } => {
            let ish = nodes[*input].value.shape().to_vec();
            let wsh = nodes[*weight].value.shape().to_vec();
            let (nb, cin, h, w) = (ish[0], ish[1], ish[2], ish[3]);
            let (cout, _, kh, kw) = (wsh[0], wsh[1], wsh[2], wsh[3]);
            let ho = (h + 2 * pad - kh) / stride + 1;
            let wo = (w + 2 * pad - kw) / stride + 1;
            let iv = nodes[*input].value.data().to_vec();
            let wv = nodes[*weight].value.data().to_vec();
            accumulate(grads, *input, iv.len(), |_| {});
            accumulate(grads, *weight, wv.len(), |_| {});
            // split borrows: take both out, then put back
            let mut din = grads[*input].take().unwrap();
            let mut dw = grads[*weight].take().unwrap();
            for n in 0..nb {
                for co in 0..cout {
                    for oy in 0..ho {
                        for ox in 0..wo {
                            let go = g[((n * cout + co) * ho + oy) * wo + ox];
                            if go == 0.0 {
                                continue;
                            }
                            for ci in 0..cin {
                                for ky in 0..kh {
                                    let iy = oy * stride + ky;
                                    if iy < *pad || iy - pad >= h {
                                        continue;
                                    }
                                    let iy = iy - pad;
                                    for kx in 0..kw {
                                        let ix = ox * stride + kx;
                                        if ix < *pad || ix - pad >= w {
                                            continue;
                                        }
                                        let ix = ix - pad;
                                        let ii = ((n * cin + ci) * h + iy) * w + ix;
                                        let wi = ((co * cin + ci) * kh + ky) * kw + kx;
                                        din[ii] += go * wv[wi];
                                        dw[wi] += go * iv[ii];
                                    }
                                }
                            }
                        }
                    }
                }
            }
            grads[*input] = Some(din);
            grads[*weight] = Some(dw);
        }
        Op::ConvT2d {
            input,
            weight,
            stride,
            pad,
        } => {
            let ish = nodes[*input].value.shape().to_vec();
            let wsh = nodes[*weight].value.shape().to_vec();
            let (nb, cin, h, w) = (ish[0], ish[1], ish[2], ish[3]);
            let (_, cout, kh, kw) = (wsh[0], wsh[1], wsh[2], wsh[3]);
            let ho = (h - 1) * stride + kh - 2 * pad;
            let wo = (w - 1) * stride + kw - 2 * pad;
            let iv = nodes[*input].value.data().to_vec();
            let wv = nodes[*weight].value.data().to_vec();
            accumulate(grads, *input, iv.len(), |_| {});
            accumulate(grads, *weight, wv.len(), |_| {});
            let mut din = grads[*input].take().unwrap();
            let mut dw = grads[*weight].take().unwrap();
            for n in 0..nb {
                for ci in 0..cin {
                    for iy in 0..h {
                        for ix in 0..w {
                            let ii = ((n * cin + ci) * h + iy) * w + ix;
                            let xv = iv[ii];
                            let mut acc = 0.0;
                            for co in 0..cout {
                                for ky in 0..kh {
                                    let oy = iy * stride + ky;
                                    if oy < *pad || oy - pad >= ho {
                                        continue;
                                    }
                                    let oy = oy - pad;
                                    for kx in 0..kw {
                                        let ox = ix * stride + kx;
                                        if ox < *pad || ox - pad >= wo {
                                            continue;
                                        }
                                        let ox = ox - pad;
                                        let oi = ((n * cout + co) * ho + oy) * wo + ox;
                                        let wi = ((ci * cout + co) * kh + ky) * kw + kx;
                                        acc += g[oi] * wv[wi];
                                        dw[wi] += xv * g[oi];
                                    }
                                }
                            }
                            din[ii] += acc;
                        }
                    }
                }
            }
            grads[*input] = Some(din);
            grads[*weight] = Some(dw);
        }
        Op::Relu(a) => {
            let av = nodes[*a].value.data().to_vec();
            accumulate(grads, *a, g.len(), |d| {
                for i in 0..g.len() {
                    if av[i] > 0.0 {
                        d[i] += g[i];
                    }
                }
            });
        }
        Op::Silu(a) => {
            let av = nodes[*a].value.data().to_vec();
            accumulate(grads, *a, g.len(), |d| {
                for i in 0..g.len() {
                    let s = 1.0 / (1.0 + (-av[i]).exp());
                    d[i] += g[i] * s * (1.0 + av[i] * (1.0 - s));
                }
            });
        }
        Op::Tanh(a) => {
            let yv = node.value.data().to_vec();
            accumulate(grads, *a, g.len(), |d| {
                for i in 0..g.len() {
                    d[i] += g[i] * (1.0 - yv[i] * yv[i]);
                }
            });
        }
        Op::Exp(a) => {
            let yv = node.value.data().to_vec();
            accumulate(grads, *a, g.len(), |d| {
                for i in 0..g.len() {
                    d[i] += g[i] * yv[i];
                }
            });
        }
        Op::Log(a) => {
            let av = nodes[*a].value.data().to_vec();
            accumulate(grads, *a, g.len(), |d| {
                for i in 0..g.len() {
                    d[i] += g[i] / av[i];
                }
            });
        }
        Op::Abs(a) => {
            let av = nodes[*a].value.data().to_vec();
            accumulate(grads, *a, g.len(), |d| {
                for i in 0..g.len() {
                    d[i] += g[i] * av[i].signum() * if av[i] == 0.0 { 0.0 } else { 1.0 };
                }
            });
        }
        Op::Reshape(a) => {
            accumulate(grads, *a, g.len(), |d| {
                for (di, gi) in d.iter_mut().zip(g) {
                    *di += gi;
                }
            });
        }
        Op::Concat { inputs, axis } => {
            let out_shape = node.value.shape().to_vec();
            let outer: usize = out_shape[..*axis].iter().product();
            let inner: usize = out_shape[*axis + 1..].iter().product();
            let mut offset = 0usize;
            let total_axis = out_shape[*axis];
            for &inp in inputs {
                let ish = nodes[inp].value.shape().to_vec();
                let ax = ish[*axis];
                let len: usize = ish.iter().product();
                accumulate(grads, inp, len, |d| {
                    for o in 0..outer {
                        for a in 0..ax {
                            let src = (o * total_axis + offset + a) * inner;
                            let dst = (o * ax + a) * inner;
                            for i in 0..inner {
                                d[dst + i] += g[src + i];
                            }
                        }
                    }
                });
                offset += ax;
            }
        }
        Op::Slice {
            input,
            axis,
            start,
            end,
        } => {
            let ish = nodes[*input].value.shape().to_vec();
            let outer: usize = ish[..*axis].iter().product();
            let inner: usize = ish[*axis + 1..].iter().product();
            let ax = ish[*axis];
            let sel = end - start;
            let len: usize = ish.iter().product();
            accumulate(grads, *input, len, |d| {
                for o in 0..outer {
                    for a in 0..sel {
                        let dst = (o * ax + start + a) * inner;
                        let src = (o * sel + a) * inner;
                        for i in 0..inner {
                            d[dst + i] += g[src + i];
                        }
                    }
                }
            });
        }
        Op::Sum(a) => {
            let len = nodes[*a].value.len();
            accumulate(grads, *a, len, |d| {
                for di in d.iter_mut() {
                    *di += g[0];
                }
            });
        }
        Op::Mean(a) => {
            let len = nodes[*a].value.len();
            let scale = 1.0 / len as f64;
            accumulate(grads, *a, len, |d| {
                for di in d.iter_mut() {
                    *di += g[0] * scale;
                }
            });
        }
    }
}

impl Var {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn tape(&self) -> &Tape {
        &self.tape
    }

    pub fn value(&self) -> Tensor {
        self.tape.value_of(self.id)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.tape.inner.borrow().nodes[self.id].value.shape().to_vec()
    }

    fn same_shape(&self, other: &Var, op: &'static str) -> Result<()> {
        let a = self.shape();
        let b = other.shape();
        if a != b {
            return Err(AdError::ShapeMismatch {
                op,
                detail: format!("{a:?} vs {b:?}"),
            });
        }
        Ok(())
    }

    fn zip_ew(&self, other: &Var, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        self.same_shape(other, op)?;
        let a = self.value();
        let b = other.value();
        let data = a
            .data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| f(*x, *y))
            .collect();
        Tensor::new(a.shape().to_vec(), data)
    }

    pub fn add(&self, other: &Var) -> Result<Var> {
        let v = self.zip_ew(other, "add", |x, y| x + y)?;
        self.tape.push_checked(v, Op::Add(self.id, other.id), "add")
    }

    pub fn sub(&self, other: &Var) -> Result<Var> {
        let v = self.zip_ew(other, "sub", |x, y| x - y)?;
        self.tape.push_checked(v, Op::Sub(self.id, other.id), "sub")
    }

    pub fn mul(&self, other: &Var) -> Result<Var> {
        let v = self.zip_ew(other, "mul", |x, y| x * y)?;
        self.tape.push_checked(v, Op::Mul(self.id, other.id), "mul")
    }

    pub fn scale(&self, c: f64) -> Result<Var> {
        let a = self.value();
        let data = a.data().iter().map(|x| x * c).collect();
        let v = Tensor::new(a.shape().to_vec(), data)?;
        self.tape.push_checked(v, Op::Scale(self.id, c), "scale")
    }

    pub fn add_scalar(&self, c: f64) -> Result<Var> {
        let a = self.value();
        let data = a.data().iter().map(|x| x + c).collect();
        let v = Tensor::new(a.shape().to_vec(), data)?;
        self.tape
            .push_checked(v, Op::AddScalar(self.id), "add_scalar")
    }

    pub fn matmul(&self, other: &Var) -> Result<Var> {
        let a = self.value();
        let b = other.value();
        if a.shape().len() != 2 || b.shape().len() != 2 || a.shape()[1] != b.shape()[0] {
            return Err(AdError::ShapeMismatch {
                op: "matmul",
                detail: format!("{:?} x {:?}", a.shape(), b.shape()),
            });
        }
        let (m, k, n) = (a.shape()[0], a.shape()[1], b.shape()[1]);
        let mut out = vec![0.0; m * n];
        let av = a.data();
        let bv = b.data();
        for i in 0..m {
            for l in 0..k {
                let ail = av[i * k + l];
                if ail == 0.0 {
                    continue;
                }
                let brow = &bv[l * n..(l + 1) * n];
                let orow = &mut out[i * n..(i + 1) * n];
                for j in 0..n {
                    orow[j] += ail * brow[j];
                }
            }
        }
        let v = Tensor::new(vec![m, n], out)?;
        self.tape
            .push_checked(v, Op::Matmul(self.id, other.id), "matmul")
    }

    /// x: [rows, cols] + bias [cols], broadcast over rows.
    pub fn add_row_bias(&self, bias: &Var) -> Result<Var> {
        let x = self.value();
        let b = bias.value();
        if x.shape().len() != 2 || b.shape().len() != 1 || b.shape()[0] != x.shape()[1] {
            return Err(AdError::ShapeMismatch {
                op: "add_row_bias",
                detail: format!("{:?} + {:?}", x.shape(), b.shape()),
            });
        }
        let (rows, cols) = (x.shape()[0], x.shape()[1]);
        let mut out = x.data().to_vec();
        for r in 0..rows {
            for c in 0..cols {
                out[r * cols + c] += b.data()[c];
            }
        }
        let v = Tensor::new(vec![rows, cols], out)?;
        self.tape
            .push_checked(v, Op::AddRowBias(self.id, bias.id), "add_row_bias")
    }

    /// x: [N, C, H, W] + bias [C], broadcast over batch and space.
    pub fn add_chan_bias(&self, bias: &Var) -> Result<Var> {
        let x = self.value();
        let b = bias.value();
        if x.shape().len() != 4 || b.shape().len() != 1 || b.shape()[0] != x.shape()[1] {
            return Err(AdError::ShapeMismatch {
                op: "add_chan_bias",
                detail: format!("{:?} + {:?}", x.shape(), b.shape()),
            });
        }
        let (n, c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
        let mut out = x.data().to_vec();
        for ni in 0..n {
            for ci in 0..c {
                let bias_v = b.data()[ci];
                let base = ((ni * c + ci) * h) * w;
                for p in 0..h * w {
                    out[base + p] += bias_v;
                }
            }
        }
        let v = Tensor::new(vec![n, c, h, w], out)?;
        self.tape
            .push_checked(v, Op::AddChanBias(self.id, bias.id), "add_chan_bias")
    }

    /// Zero-padded strided 2-D convolution.
    /// Input [N, Cin, H, W], weight [Cout, Cin, KH, KW].
    pub fn conv2d(&self, weight: &Var, stride: usize, pad: usize) -> Result<Var> {
        let x = self.value();
        let wt = weight.value();
        if x.shape().len() != 4 || wt.shape().len() != 4 || x.shape()[1] != wt.shape()[1] {
            return Err(AdError::ShapeMismatch {
                op: "conv2d",
                detail: format!("input {:?}, weight {:?}", x.shape(), wt.shape()),
            });
        }
        let (nb, cin, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
        let (cout, kh, kw) = (wt.shape()[0], wt.shape()[2], wt.shape()[3]);
        if h + 2 * pad < kh || w + 2 * pad < kw {
            return Err(AdError::ShapeMismatch {
                op: "conv2d",
                detail: format!("kernel {kh}x{kw} larger than padded input {h}x{w}+2*{pad}"),
            });
        }
        let ho = (h + 2 * pad - kh) / stride + 1;
        let wo = (w + 2 * pad - kw) / stride + 1;
        let xv = x.data();
        let wv = wt.data();
        let mut out = vec![0.0; nb * cout * ho * wo];
        for n in 0..nb {
            for co in 0..cout {
                for oy in 0..ho {
                    for ox in 0..wo {
                        let mut acc = 0.0;
                        for ci in 0..cin {
                            for ky in 0..kh {
                                let iy = oy * stride + ky;
                                if iy < pad || iy - pad >= h {
                                    continue;
                                }
                                let iy = iy - pad;
                                for kx in 0..kw {
                                    let ix = ox * stride + kx;
                                    if ix < pad || ix - pad >= w {
                                        continue;
                                    }
                                    let ix = ix - pad;
                                    acc += xv[((n * cin + ci) * h + iy) * w + ix]
                                        * wv[((co * cin + ci) * kh + ky) * kw + kx];
                                }
                            }
                        }
                        out[((n * cout + co) * ho + oy) * wo + ox] = acc;
                    }
                }
            }
        }
        let v = Tensor::new(vec![nb, cout, ho, wo], out)?;
        self.tape.push_checked(
            v,
            Op::Conv2d {
                input: self.id,
                weight: weight.id,
                stride,
                pad,
            },
            "conv2d",
        )
    }

    /// Transposed (fractionally strided) convolution; exact adjoint of conv2d.
    /// Input [N, Cin, H, W], weight [Cin, Cout, KH, KW].
    pub fn conv_transpose2d(&self, weight: &Var, stride: usize, pad: usize) -> Result<Var> {
        let x = self.value();
        let wt = weight.value();
        if x.shape().len() != 4 || wt.shape().len() != 4 || x.shape()[1] != wt.shape()[0] {
            return Err(AdError::ShapeMismatch {
                op: "conv_transpose2d",
                detail: format!("input {:?}, weight {:?}", x.shape(), wt.shape()),
            });
        }
        let (nb, cin, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
        let (cout, kh, kw) = (wt.shape()[1], wt.shape()[2], wt.shape()[3]);
        let ho = (h - 1) * stride + kh;
        let wo = (w - 1) * stride + kw;
        if ho < 2 * pad || wo < 2 * pad {
            return Err(AdError::ShapeMismatch {
                op: "conv_transpose2d",
                detail: format!("padding {pad} too large for output {ho}x{wo}"),
            });
        }
        let (ho, wo) = (ho - 2 * pad, wo - 2 * pad);
        let xv = x.data();
        let wv = wt.data();
        let mut out = vec![0.0; nb * cout * ho * wo];
        for n in 0..nb {
            for ci in 0..cin {
                for iy in 0..h {
                    for ix in 0..w {
                        let v = xv[((n * cin + ci) * h + iy) * w + ix];
                        if v == 0.0 {
                            continue;
                        }
                        for co in 0..cout {
                            for ky in 0..kh {
                                let oy = iy * stride + ky;
                                if oy < pad || oy - pad >= ho {
                                    continue;
                                }
                                let oy = oy - pad;
                                for kx in 0..kw {
                                    let ox = ix * stride + kx;
                                    if ox < pad || ox - pad >= wo {
                                        continue;
                                    }
                                    let ox = ox - pad;
                                    out[((n * cout + co) * ho + oy) * wo + ox] +=
                                        v * wv[((ci * cout + co) * kh + ky) * kw + kx];
                                }
                            }
                        }
                    }
                }
            }
        }
        let v = Tensor::new(vec![nb, cout, ho, wo], out)?;
        self.tape.push_checked(
            v,
            Op::ConvT2d {
                input: self.id,
                weight: weight.id,
                stride,
                pad,
            },
            "conv_transpose2d",
        )
    }

    fn unary(&self, op: Op, name: &'static str, f: impl Fn(f64) -> f64) -> Result<Var> {
        let a = self.value();
        let data = a.data().iter().map(|x| f(*x)).collect();
        let v = Tensor::new(a.shape().to_vec(), data)?;
        self.tape.push_checked(v, op, name)
    }

    pub fn relu(&self) -> Result<Var> {
        self.unary(Op::Relu(self.id), "relu", |x| x.max(0.0))
    }

    pub fn silu(&self) -> Result<Var> {
        self.unary(Op::Silu(self.id), "silu", |x| x / (1.0 + (-x).exp()))
    }

    pub fn tanh(&self) -> Result<Var> {
        self.unary(Op::Tanh(self.id), "tanh", f64::tanh)
    }

    pub fn exp(&self) -> Result<Var> {
        self.unary(Op::Exp(self.id), "exp", f64::exp)
    }

    pub fn log(&self) -> Result<Var> {
        self.unary(Op::Log(self.id), "log", f64::ln)
    }

    pub fn abs(&self) -> Result<Var> {
        self.unary(Op::Abs(self.id), "abs", f64::abs)
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Var> {
        let v = self.value().reshaped(shape)?;
        self.tape.push_checked(v, Op::Reshape(self.id), "reshape")
    }

    pub fn sum(&self) -> Result<Var> {
        let s: f64 = self.value().data().iter().sum();
        self.tape
            .push_checked(Tensor::scalar(s), Op::Sum(self.id), "sum")
    }

    pub fn mean(&self) -> Result<Var> {
        let v = self.value();
        let s: f64 = v.data().iter().sum::<f64>() / v.len() as f64;
        self.tape
            .push_checked(Tensor::scalar(s), Op::Mean(self.id), "mean")
    }

    pub fn slice(&self, axis: usize, start: usize, end: usize) -> Result<Var> {
        let x = self.value();
        let sh = x.shape().to_vec();
        if axis >= sh.len() || start >= end || end > sh[axis] {
            return Err(AdError::ShapeMismatch {
                op: "slice",
                detail: format!("axis {axis} range {start}..{end} of shape {sh:?}"),
            });
        }
        let outer: usize = sh[..axis].iter().product();
        let inner: usize = sh[axis + 1..].iter().product();
        let ax = sh[axis];
        let sel = end - start;
        let mut out = vec![0.0; outer * sel * inner];
        for o in 0..outer {
            for a in 0..sel {
                let src = (o * ax + start + a) * inner;
                let dst = (o * sel + a) * inner;
                out[dst..dst + inner].copy_from_slice(&x.data()[src..src + inner]);
            }
        }
        let mut osh = sh.clone();
        osh[axis] = sel;
        let v = Tensor::new(osh, out)?;
        self.tape.push_checked(
            v,
            Op::Slice {
                input: self.id,
                axis,
                start,
                end,
            },
            "slice",
        )
    }
}

/// Concatenate along `axis`; all other extents must match.
pub fn concat(vars: &[&Var], axis: usize) -> Result<Var> {
    assert!(!vars.is_empty());
    let tape = vars[0].tape.clone();
    let first = vars[0].value();
    let base = first.shape().to_vec();
    let mut total = 0usize;
    for v in vars {
        let sh = v.shape();
        if sh.len() != base.len()
            || sh
                .iter()
                .enumerate()
                .any(|(i, &e)| i != axis && e != base[i])
        {
            return Err(AdError::ShapeMismatch {
                op: "concat",
                detail: format!("{base:?} vs {sh:?} along axis {axis}"),
            });
        }
        total += sh[axis];
    }
    let outer: usize = base[..axis].iter().product();
    let inner: usize = base[axis + 1..].iter().product();
    let mut out = vec![0.0; outer * total * inner];
    let mut offset = 0usize;
    let mut ids = Vec::with_capacity(vars.len());
    for v in vars {
        let val = v.value();
        let ax = val.shape()[axis];
        for o in 0..outer {
            for a in 0..ax {
                let src = (o * ax + a) * inner;
                let dst = (o * total + offset + a) * inner;
                out[dst..dst + inner].copy_from_slice(&val.data()[src..src + inner]);
            }
        }
        offset += ax;
        ids.push(v.id);
    }
    let mut osh = base;
    osh[axis] = total;
    let v = Tensor::new(osh, out)?;
    tape.push_checked(v, Op::Concat { inputs: ids, axis }, "concat")
}
