//! Recorded operations and reverse-mode accumulation.
//!
//! Every op appends one node holding its output value and whatever the
//! backward pass needs. Nodes are numbered in creation order, so the
//! numbering is a topological order and backward walks it in reverse.

use crate::error::{Error, Result};
use crate::tensor::array::Tensor;
use crate::tensor::scalar::Scalar;

/// Epsilon added to variances in every normalization.
pub const NORM_EPS: f64 = 1e-5;
pub const LEAKY_SLOPE: f64 = 0.01;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op<T> {
    Leaf,
    AddPad(Var, Var),
    MulPad(Var, Var),
    Concat(Vec<Var>),
    Relu(Var),
    LeakyRelu(Var),
    Swish(Var),
    Sigmoid(Var),
    LayerNorm { x: Var, gamma: Var, beta: Var, xhat: Vec<T>, rstd: Vec<T> },
    BatchNormTrain { x: Var, gamma: Var, beta: Var, xhat: Vec<T>, rstd: Vec<T> },
    BatchNormEval { x: Var, gamma: Var, beta: Var, xhat: Vec<T>, rstd: Vec<T> },
    Conv { x: Var, w: Var, b: Var, kernel: usize },
    Depthwise { x: Var, k: Var, group: usize },
    SoftmaxChannels(Var),
    Attention { q: Var, k: Var, v: Var, heads: usize, probs: Vec<T> },
    MaxPool { x: Var, argmax: Vec<usize> },
    AvgPool { x: Var, kernel: usize },
    MeanTime(Var),
    EmbeddingBag { table: Var, bags: Vec<Vec<usize>> },
    SoftmaxXent { logits: Var, labels: Vec<usize>, probs: Vec<T> },
    Sum(Var),
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
}

/// Per-channel statistics of a training-mode batch normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchStats<T> {
    pub mean: Vec<T>,
    /// Biased variance over the `batch * time` rows.
    pub var: Vec<T>,
    pub rows: usize,
}

#[derive(Default)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
}

/// Result of [`Tape::backward`]: one gradient buffer per reached node.
pub struct Gradients<T> {
    grads: Vec<Option<Vec<T>>>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient with respect to `v`, or `None` when the loss does not
    /// depend on it.
    pub fn wrt(&self, v: Var) -> Option<&[T]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    pub fn take(&mut self, v: Var) -> Option<Vec<T>> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// Dot product with independent partial sums, so the additions pipeline.
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: T = ca.remainder().iter().zip(cb.remainder()).map(|(&x, &y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] = acc[k] + x[k] * y[k];
        }
    }
    acc.iter().copied().sum::<T>() + tail
}

fn softmax_in_place<T: Scalar>(row: &mut [T]) {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum = sum + *v;
    }
    for v in row.iter_mut() {
        *v = *v / sum;
    }
}

fn shape_err(what: &str, detail: String) -> Error {
    Error::contract(format!("{what}: {detail}"))
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    fn check(&self, v: Var) -> Result<&Tensor<T>> {
        self.nodes.get(v.0).map(|n| &n.value).ok_or_else(|| {
            Error::contract(format!("variable {} is not recorded on this tape", v.0))
        })
    }

    fn same_rows(&self, what: &str, a: Var, b: Var) -> Result<()> {
        let (sa, sb) = (self.check(a)?.shape(), self.check(b)?.shape());
        if sa[0] != sb[0] || sa[1] != sb[1] {
            return Err(shape_err(what, format!("operands {sa:?} and {sb:?} differ in batch or time")));
        }
        Ok(())
    }

    pub fn leaf(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Elementwise sum; the narrower operand is zero-padded on channels.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_rows("add", a, b)?;
        let (va, vb) = (self.value(a), self.value(b));
        let (wa, wb) = (va.width(), vb.width());
        let w = wa.max(wb);
        let mut out = Tensor::zeros([va.batch(), va.time(), w]);
        let o = out.data_mut();
        for r in 0..va.rows() {
            for (c, &x) in va.row(r).iter().enumerate() {
                o[r * w + c] = x;
            }
            for (c, &x) in vb.row(r).iter().enumerate() {
                o[r * w + c] = o[r * w + c] + x;
            }
        }
        Ok(self.push(out, Op::AddPad(a, b)))
    }

    /// Elementwise product; the narrower operand is zero-padded on channels.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_rows("mul", a, b)?;
        let (va, vb) = (self.value(a), self.value(b));
        let (wa, wb) = (va.width(), vb.width());
        let w = wa.max(wb);
        let mut out = Tensor::zeros([va.batch(), va.time(), w]);
        let o = out.data_mut();
        for r in 0..va.rows() {
            let (ra, rb) = (va.row(r), vb.row(r));
            for c in 0..wa.min(wb) {
                o[r * w + c] = ra[c] * rb[c];
            }
        }
        Ok(self.push(out, Op::MulPad(a, b)))
    }

    /// Channel concatenation.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts.first().ok_or_else(|| Error::contract("concat of nothing"))?;
        for &p in parts {
            self.same_rows("concat", first, p)?;
        }
        let widths: Vec<usize> = parts.iter().map(|&p| self.value(p).width()).collect();
        let w: usize = widths.iter().sum();
        let v0 = self.value(first);
        let mut out = Tensor::zeros([v0.batch(), v0.time(), w]);
        let rows = v0.rows();
        let o = out.data_mut();
        let mut off = 0;
        for (&p, &pw) in parts.iter().zip(&widths) {
            let vp = &self.nodes[p.0].value;
            for r in 0..rows {
                o[r * w + off..r * w + off + pw].copy_from_slice(vp.row(r));
            }
            off += pw;
        }
        Ok(self.push(out, Op::Concat(parts.to_vec())))
    }

    fn map(&mut self, x: Var, f: impl Fn(T) -> T, op: Op<T>) -> Result<Var> {
        let v = self.check(x)?;
        let data = v.data().iter().map(|&e| f(e)).collect();
        let out = Tensor::new(v.shape(), data)?;
        Ok(self.push(out, op))
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        self.map(x, |e| e.max(T::zero()), Op::Relu(x))
    }

    pub fn leaky_relu(&mut self, x: Var) -> Result<Var> {
        let s = T::lit(LEAKY_SLOPE);
        self.map(x, move |e| if e > T::zero() { e } else { s * e }, Op::LeakyRelu(x))
    }

    /// `x * sigmoid(x)`.
    pub fn swish(&mut self, x: Var) -> Result<Var> {
        self.map(x, |e| e * sigmoid(e), Op::Swish(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        self.map(x, sigmoid, Op::Sigmoid(x))
    }

    fn norm_params(&self, what: &str, x: Var, gamma: Var, beta: Var) -> Result<usize> {
        let w = self.check(x)?.width();
        if self.check(gamma)?.len() != w || self.check(beta)?.len() != w {
            return Err(shape_err(what, format!("scale and shift need {w} values")));
        }
        Ok(w)
    }

    /// Normalizes each `(batch, time)` row over its channels.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var) -> Result<Var> {
        let w = self.norm_params("layer norm", x, gamma, beta)?;
        let vx = self.value(x);
        let (g, b) = (self.value(gamma).data(), self.value(beta).data());
        let eps = T::lit(NORM_EPS);
        let n = T::lit(w as f64);
        let rows = vx.rows();
        let mut xhat = vec![T::zero(); vx.len()];
        let mut rstd = vec![T::zero(); rows];
        let mut out = Tensor::zeros(vx.shape());
        let o = out.data_mut();
        for r in 0..rows {
            let row = vx.row(r);
            let mean = row.iter().copied().sum::<T>() / n;
            let var = row.iter().map(|&e| (e - mean) * (e - mean)).sum::<T>() / n;
            let rs = T::one() / (var + eps).sqrt();
            rstd[r] = rs;
            for c in 0..w {
                let h = (row[c] - mean) * rs;
                xhat[r * w + c] = h;
                o[r * w + c] = g[c] * h + b[c];
            }
        }
        Ok(self.push(out, Op::LayerNorm { x, gamma, beta, xhat, rstd }))
    }

    /// Batch normalization with statistics of the current batch, taken per
    /// channel over every `(batch, time)` row.
    pub fn batch_norm_train(&mut self, x: Var, gamma: Var, beta: Var) -> Result<(Var, BatchStats<T>)> {
        let w = self.norm_params("batch norm", x, gamma, beta)?;
        let vx = self.value(x);
        let rows = vx.rows();
        let n = T::lit(rows as f64);
        let d = vx.data();
        let mut mean = vec![T::zero(); w];
        let mut var = vec![T::zero(); w];
        for r in 0..rows {
            for c in 0..w {
                mean[c] = mean[c] + d[r * w + c];
            }
        }
        mean.iter_mut().for_each(|m| *m = *m / n);
        for r in 0..rows {
            for c in 0..w {
                let e = d[r * w + c] - mean[c];
                var[c] = var[c] + e * e;
            }
        }
        var.iter_mut().for_each(|v| *v = *v / n);
        let eps = T::lit(NORM_EPS);
        let rstd: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
        let (out, xhat) = self.affine_channels(x, gamma, beta, &mean, &rstd);
        let stats = BatchStats { mean, var, rows };
        Ok((self.push(out, Op::BatchNormTrain { x, gamma, beta, xhat, rstd }), stats))
    }

    /// Batch normalization with frozen statistics.
    pub fn batch_norm_eval(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        mean: &[T],
        var: &[T],
    ) -> Result<Var> {
        let w = self.norm_params("batch norm", x, gamma, beta)?;
        if mean.len() != w || var.len() != w {
            return Err(shape_err("batch norm", format!("running statistics need {w} values")));
        }
        let eps = T::lit(NORM_EPS);
        let rstd: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
        let (out, xhat) = self.affine_channels(x, gamma, beta, mean, &rstd);
        Ok(self.push(out, Op::BatchNormEval { x, gamma, beta, xhat, rstd }))
    }

    fn affine_channels(&self, x: Var, gamma: Var, beta: Var, mean: &[T], rstd: &[T]) -> (Tensor<T>, Vec<T>) {
        let vx = self.value(x);
        let w = vx.width();
        let (g, b) = (self.value(gamma).data(), self.value(beta).data());
        let mut xhat = vec![T::zero(); vx.len()];
        let mut out = Tensor::zeros(vx.shape());
        let o = out.data_mut();
        for (i, &e) in vx.data().iter().enumerate() {
            let c = i % w;
            let h = (e - mean[c]) * rstd[c];
            xhat[i] = h;
            o[i] = g[c] * h + b[c];
        }
        (out, xhat)
    }

    /// Causal convolution along time. `w` has shape
    /// `(kernel, in_channels, out_channels)`, `b` holds `out_channels` biases.
    /// Output step `t` sees input steps `t - kernel + 1 ..= t`.
    pub fn conv(&mut self, x: Var, w: Var, b: Var, kernel: usize) -> Result<Var> {
        let vx = self.check(x)?;
        let sw = self.check(w)?.shape();
        let ci = vx.width();
        if kernel == 0 || sw[0] != kernel || sw[1] != ci {
            return Err(shape_err("conv", format!("weights {sw:?} do not fit kernel {kernel} over {ci} channels")));
        }
        let co = sw[2];
        if self.check(b)?.len() != co {
            return Err(shape_err("conv", format!("bias needs {co} values")));
        }
        let (bt, tt) = (vx.batch(), vx.time());
        let (xd, wd, bd) = (vx.data(), self.value(w).data(), self.value(b).data());
        let mut out = Tensor::zeros([bt, tt, co]);
        let o = out.data_mut();
        for bi in 0..bt {
            for t in 0..tt {
                let orow = &mut o[(bi * tt + t) * co..(bi * tt + t + 1) * co];
                orow.copy_from_slice(bd);
                for j in 0..kernel.min(t + 1) {
                    let xrow = &xd[(bi * tt + t - j) * ci..(bi * tt + t - j + 1) * ci];
                    for (i, &xv) in xrow.iter().enumerate() {
                        let wrow = &wd[(j * ci + i) * co..(j * ci + i + 1) * co];
                        for (ov, &wv) in orow.iter_mut().zip(wrow) {
                            *ov = *ov + xv * wv;
                        }
                    }
                }
            }
        }
        Ok(self.push(out, Op::Conv { x, w, b, kernel }))
    }

    /// Causal per-channel convolution. `k` has shape `(1, kernels, size)`;
    /// channel `c` uses kernel `c / group`.
    pub fn depthwise(&mut self, x: Var, k: Var, group: usize) -> Result<Var> {
        let vx = self.check(x)?;
        let sk = self.check(k)?.shape();
        let c = vx.width();
        if group == 0 || sk[0] != 1 || sk[1] != c.div_ceil(group) || sk[2] == 0 {
            return Err(shape_err("depthwise conv", format!("kernels {sk:?} do not fit {c} channels in groups of {group}")));
        }
        let size = sk[2];
        let (bt, tt) = (vx.batch(), vx.time());
        let (xd, kd) = (vx.data(), self.value(k).data());
        let mut out = Tensor::zeros(vx.shape());
        let o = out.data_mut();
        for bi in 0..bt {
            for t in 0..tt {
                for j in 0..size.min(t + 1) {
                    let src = (bi * tt + t - j) * c;
                    let dst = (bi * tt + t) * c;
                    for ch in 0..c {
                        o[dst + ch] = o[dst + ch] + kd[(ch / group) * size + j] * xd[src + ch];
                    }
                }
            }
        }
        Ok(self.push(out, Op::Depthwise { x, k, group }))
    }

    /// Softmax over the channel axis of every row.
    pub fn softmax_channels(&mut self, x: Var) -> Result<Var> {
        let mut out = self.check(x)?.clone();
        let w = out.width();
        if w > 0 {
            for row in out.data_mut().chunks_mut(w) {
                softmax_in_place(row);
            }
        }
        Ok(self.push(out, Op::SoftmaxChannels(x)))
    }

    /// Multi-head scaled dot-product attention with softmax over time.
    /// `q`, `k`, `v` share one shape whose width is divisible by `heads`.
    pub fn attention(&mut self, q: Var, k: Var, v: Var, heads: usize) -> Result<Var> {
        let s = self.check(q)?.shape();
        if self.check(k)?.shape() != s || self.check(v)?.shape() != s {
            return Err(shape_err("attention", "query, key and value shapes differ".into()));
        }
        if heads == 0 || s[2] % heads != 0 {
            return Err(shape_err("attention", format!("width {} not divisible by {heads} heads", s[2])));
        }
        let [bt, tt, d] = s;
        let dh = d / heads;
        let scale = T::one() / T::lit(dh as f64).sqrt();
        let (qd, kd, vd) = (self.value(q).data(), self.value(k).data(), self.value(v).data());
        let mut probs = vec![T::zero(); bt * heads * tt * tt];
        let mut out = Tensor::zeros(s);
        let o = out.data_mut();
        for bi in 0..bt {
            for h in 0..heads {
                for t1 in 0..tt {
                    let p = &mut probs[((bi * heads + h) * tt + t1) * tt..((bi * heads + h) * tt + t1 + 1) * tt];
                    let qrow = &qd[(bi * tt + t1) * d + h * dh..(bi * tt + t1) * d + (h + 1) * dh];
                    for (t2, pv) in p.iter_mut().enumerate() {
                        let krow = &kd[(bi * tt + t2) * d + h * dh..(bi * tt + t2) * d + (h + 1) * dh];
                        *pv = qrow.iter().zip(krow).map(|(&a, &b)| a * b).sum::<T>() * scale;
                    }
                    softmax_in_place(p);
                    let orow = &mut o[(bi * tt + t1) * d + h * dh..(bi * tt + t1) * d + (h + 1) * dh];
                    for (t2, &pv) in p.iter().enumerate() {
                        let vrow = &vd[(bi * tt + t2) * d + h * dh..(bi * tt + t2) * d + (h + 1) * dh];
                        for (ov, &vv) in orow.iter_mut().zip(vrow) {
                            *ov = *ov + pv * vv;
                        }
                    }
                }
            }
        }
        Ok(self.push(out, Op::Attention { q, k, v, heads, probs }))
    }

    /// Attention weights recorded by an attention op, laid out as
    /// `(batch, head, query, key)`.
    pub fn attention_probs(&self, v: Var) -> Option<&[T]> {
        match &self.nodes.get(v.0)?.op {
            Op::Attention { probs, .. } => Some(probs),
            _ => None,
        }
    }

    /// Causal stride-1 max pooling.
    pub fn max_pool(&mut self, x: Var, kernel: usize) -> Result<Var> {
        let vx = self.check(x)?;
        if kernel == 0 {
            return Err(shape_err("max pool", "kernel must be positive".into()));
        }
        let [bt, tt, c] = vx.shape();
        let xd = vx.data();
        let mut out = Tensor::zeros(vx.shape());
        let mut argmax = vec![0; vx.len()];
        let o = out.data_mut();
        for bi in 0..bt {
            for t in 0..tt {
                for ch in 0..c {
                    let dst = (bi * tt + t) * c + ch;
                    let mut best = dst;
                    for j in 1..kernel.min(t + 1) {
                        let src = (bi * tt + t - j) * c + ch;
                        if xd[src] > xd[best] {
                            best = src;
                        }
                    }
                    o[dst] = xd[best];
                    argmax[dst] = best;
                }
            }
        }
        Ok(self.push(out, Op::MaxPool { x, argmax }))
    }

    /// Causal stride-1 average pooling over the in-range window.
    pub fn avg_pool(&mut self, x: Var, kernel: usize) -> Result<Var> {
        let vx = self.check(x)?;
        if kernel == 0 {
            return Err(shape_err("avg pool", "kernel must be positive".into()));
        }
        let [bt, tt, c] = vx.shape();
        let xd = vx.data();
        let mut out = Tensor::zeros(vx.shape());
        let o = out.data_mut();
        for bi in 0..bt {
            for t in 0..tt {
                let n = kernel.min(t + 1);
                let inv = T::one() / T::lit(n as f64);
                for j in 0..n {
                    for ch in 0..c {
                        let dst = (bi * tt + t) * c + ch;
                        o[dst] = o[dst] + xd[(bi * tt + t - j) * c + ch] * inv;
                    }
                }
            }
        }
        Ok(self.push(out, Op::AvgPool { x, kernel }))
    }

    /// Mean over the time axis; the output has time length 1.
    pub fn mean_time(&mut self, x: Var) -> Result<Var> {
        let vx = self.check(x)?;
        let [bt, tt, c] = vx.shape();
        if tt == 0 {
            return Err(shape_err("mean over time", "empty time axis".into()));
        }
        let inv = T::one() / T::lit(tt as f64);
        let mut out = Tensor::zeros([bt, 1, c]);
        let o = out.data_mut();
        for bi in 0..bt {
            for t in 0..tt {
                for ch in 0..c {
                    o[bi * c + ch] = o[bi * c + ch] + vx.get(bi, t, ch) * inv;
                }
            }
        }
        Ok(self.push(out, Op::MeanTime(x)))
    }

    /// Mean of embedding rows per bag. `table` has shape `(1, vocab, dim)`
    /// and `bags` holds `batch * time` token lists in row-major order. An
    /// empty bag embeds to zeros.
    pub fn embedding_bag(&mut self, table: Var, bags: &[Vec<usize>], batch: usize, time: usize) -> Result<Var> {
        let st = self.check(table)?.shape();
        if st[0] != 1 || bags.len() != batch * time {
            return Err(shape_err("embedding bag", format!("{} bags for shape ({batch}, {time})", bags.len())));
        }
        let (vocab, d) = (st[1], st[2]);
        if let Some(&bad) = bags.iter().flatten().find(|&&tok| tok >= vocab) {
            return Err(shape_err("embedding bag", format!("token {bad} outside vocabulary of {vocab}")));
        }
        let td = self.value(table).data();
        let mut out = Tensor::zeros([batch, time, d]);
        let o = out.data_mut();
        for (r, bag) in bags.iter().enumerate() {
            if bag.is_empty() {
                continue;
            }
            let inv = T::one() / T::lit(bag.len() as f64);
            for &tok in bag {
                for c in 0..d {
                    o[r * d + c] = o[r * d + c] + td[tok * d + c] * inv;
                }
            }
        }
        Ok(self.push(out, Op::EmbeddingBag { table, bags: bags.to_vec() }))
    }

    /// Mean softmax cross-entropy over rows; one label per row.
    pub fn softmax_cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let vl = self.check(logits)?;
        let (rows, k) = (vl.rows(), vl.width());
        if rows == 0 || labels.len() != rows {
            return Err(shape_err("cross entropy", format!("{} labels for {rows} rows", labels.len())));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(shape_err("cross entropy", format!("label {bad} outside {k} classes")));
        }
        let mut probs = vl.data().to_vec();
        let mut loss = T::zero();
        for (r, row) in probs.chunks_mut(k).enumerate() {
            softmax_in_place(row);
            loss = loss - row[labels[r]].max(T::min_positive_value()).ln();
        }
        let out = Tensor::new([1, 1, 1], vec![loss / T::lit(rows as f64)])?;
        Ok(self.push(out, Op::SoftmaxXent { logits, labels: labels.to_vec(), probs }))
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let s = self.check(x)?.data().iter().copied().sum::<T>();
        Ok(self.push(Tensor::new([1, 1, 1], vec![s])?, Op::Sum(x)))
    }

    /// Reverse-mode gradients of the scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        let v = self.check(loss)?;
        if v.len() != 1 {
            return Err(Error::contract(format!("loss must be a scalar, got shape {:?}", v.shape())));
        }
        self.backward_with(loss, vec![T::one()])
    }

    /// Reverse-mode gradients given the gradient of some output `out`.
    pub fn backward_with(&self, out: Var, seed: Vec<T>) -> Result<Gradients<T>> {
        if self.nodes.is_empty() {
            return Err(Error::contract("backward called before any forward op was recorded"));
        }
        let v = self.check(out)?;
        if seed.len() != v.len() {
            return Err(Error::contract(format!("seed gradient has {} values, output has {}", seed.len(), v.len())));
        }
        let mut grads: Vec<Option<Vec<T>>> = (0..=out.0).map(|_| None).collect();
        grads[out.0] = Some(seed);
        for i in (0..=out.0).rev() {
            let (lo, hi) = grads.split_at_mut(i);
            let Some(g) = hi[0].as_ref() else { continue };
            for (var, local) in self.local_grads(i, g) {
                match &mut lo[var.0] {
                    Some(acc) => acc.iter_mut().zip(&local).for_each(|(a, &l)| *a = *a + l),
                    slot @ None => *slot = Some(local),
                }
            }
        }
        Ok(Gradients { grads })
    }

    fn zeros_like(&self, v: Var) -> Vec<T> {
        vec![T::zero(); self.value(v).len()]
    }

    /// Gradient contributions of node `i` to each of its inputs.
    fn local_grads(&self, i: usize, g: &[T]) -> Vec<(Var, Vec<T>)> {
        let node = &self.nodes[i];
        let y = node.value.data();
        let xval = |v: Var| self.value(v).data();
        match &node.op {
            Op::Leaf => vec![],
            Op::AddPad(a, b) => {
                let w = node.value.width();
                let part = |v: Var| {
                    let wv = self.value(v).width();
                    let mut out = self.zeros_like(v);
                    for (r, row) in out.chunks_mut(wv.max(1)).enumerate() {
                        row.copy_from_slice(&g[r * w..r * w + wv]);
                    }
                    out
                };
                vec![(*a, part(*a)), (*b, part(*b))]
            }
            Op::MulPad(a, b) => {
                let w = node.value.width();
                let part = |v: Var, other: Var| {
                    let (wv, wo) = (self.value(v).width(), self.value(other).width());
                    let od = xval(other);
                    let mut out = self.zeros_like(v);
                    for (r, row) in out.chunks_mut(wv.max(1)).enumerate() {
                        for c in 0..wv.min(wo) {
                            row[c] = g[r * w + c] * od[r * wo + c];
                        }
                    }
                    out
                };
                vec![(*a, part(*a, *b)), (*b, part(*b, *a))]
            }
            Op::Concat(parts) => {
                let w = node.value.width();
                let mut off = 0;
                let mut res = Vec::with_capacity(parts.len());
                for &p in parts {
                    let wp = self.value(p).width();
                    let mut out = self.zeros_like(p);
                    for (r, row) in out.chunks_mut(wp.max(1)).enumerate() {
                        row.copy_from_slice(&g[r * w + off..r * w + off + wp]);
                    }
                    off += wp;
                    res.push((p, out));
                }
                res
            }
            Op::Relu(x) => {
                let xd = xval(*x);
                vec![(*x, g.iter().zip(xd).map(|(&gv, &e)| if e > T::zero() { gv } else { T::zero() }).collect())]
            }
            Op::LeakyRelu(x) => {
                let s = T::lit(LEAKY_SLOPE);
                let xd = xval(*x);
                vec![(*x, g.iter().zip(xd).map(|(&gv, &e)| if e > T::zero() { gv } else { gv * s }).collect())]
            }
            Op::Swish(x) => {
                let xd = xval(*x);
                let d = g
                    .iter()
                    .zip(xd)
                    .map(|(&gv, &e)| {
                        let s = sigmoid(e);
                        gv * (s + e * s * (T::one() - s))
                    })
                    .collect();
                vec![(*x, d)]
            }
            Op::Sigmoid(x) => {
                vec![(*x, g.iter().zip(y).map(|(&gv, &s)| gv * s * (T::one() - s)).collect())]
            }
            Op::LayerNorm { x, gamma, beta, xhat, rstd } => {
                let w = node.value.width();
                let gm = xval(*gamma);
                let n = T::lit(w as f64);
                let mut gx = self.zeros_like(*x);
                let mut gg = vec![T::zero(); w];
                let mut gb = vec![T::zero(); w];
                let mut gh = vec![T::zero(); w];
                for r in 0..node.value.rows() {
                    let (mut m1, mut m2) = (T::zero(), T::zero());
                    for c in 0..w {
                        let idx = r * w + c;
                        gg[c] = gg[c] + g[idx] * xhat[idx];
                        gb[c] = gb[c] + g[idx];
                        gh[c] = g[idx] * gm[c];
                        m1 = m1 + gh[c];
                        m2 = m2 + gh[c] * xhat[idx];
                    }
                    let (m1, m2) = (m1 / n, m2 / n);
                    for c in 0..w {
                        let idx = r * w + c;
                        gx[idx] = rstd[r] * (gh[c] - m1 - xhat[idx] * m2);
                    }
                }
                vec![(*x, gx), (*gamma, gg), (*beta, gb)]
            }
            Op::BatchNormTrain { x, gamma, beta, xhat, rstd } => {
                let w = node.value.width();
                let rows = node.value.rows();
                let gm = xval(*gamma);
                let n = T::lit(rows as f64);
                let mut gg = vec![T::zero(); w];
                let mut gb = vec![T::zero(); w];
                let mut m1 = vec![T::zero(); w];
                let mut m2 = vec![T::zero(); w];
                for (idx, &gv) in g.iter().enumerate() {
                    let c = idx % w;
                    gg[c] = gg[c] + gv * xhat[idx];
                    gb[c] = gb[c] + gv;
                    let gh = gv * gm[c];
                    m1[c] = m1[c] + gh;
                    m2[c] = m2[c] + gh * xhat[idx];
                }
                let gx = g
                    .iter()
                    .enumerate()
                    .map(|(idx, &gv)| {
                        let c = idx % w;
                        rstd[c] * (gv * gm[c] - m1[c] / n - xhat[idx] * m2[c] / n)
                    })
                    .collect();
                vec![(*x, gx), (*gamma, gg), (*beta, gb)]
            }
            Op::BatchNormEval { x, gamma, beta, xhat, rstd } => {
                let w = node.value.width();
                let gm = xval(*gamma);
                let mut gg = vec![T::zero(); w];
                let mut gb = vec![T::zero(); w];
                let mut gx = vec![T::zero(); g.len()];
                for (idx, &gv) in g.iter().enumerate() {
                    let c = idx % w;
                    gg[c] = gg[c] + gv * xhat[idx];
                    gb[c] = gb[c] + gv;
                    gx[idx] = gv * gm[c] * rstd[c];
                }
                vec![(*x, gx), (*gamma, gg), (*beta, gb)]
            }
            Op::Conv { x, w, b, kernel } => {
                let vx = self.value(*x);
                let [bt, tt, ci] = vx.shape();
                let co = node.value.width();
                let (xd, wd) = (vx.data(), xval(*w));
                let mut gx = self.zeros_like(*x);
                let mut gw = self.zeros_like(*w);
                let mut gb = vec![T::zero(); co];
                for bi in 0..bt {
                    for t in 0..tt {
                        let grow = &g[(bi * tt + t) * co..(bi * tt + t + 1) * co];
                        for (acc, &gv) in gb.iter_mut().zip(grow) {
                            *acc = *acc + gv;
                        }
                        for j in 0..(*kernel).min(t + 1) {
                            let src = (bi * tt + t - j) * ci;
                            for i in 0..ci {
                                let xv = xd[src + i];
                                let base = (j * ci + i) * co;
                                for (gwv, &gv) in gw[base..base + co].iter_mut().zip(grow) {
                                    *gwv = *gwv + xv * gv;
                                }
                                gx[src + i] = gx[src + i] + dot(&wd[base..base + co], grow);
                            }
                        }
                    }
                }
                vec![(*x, gx), (*w, gw), (*b, gb)]
            }
            Op::Depthwise { x, k, group } => {
                let vx = self.value(*x);
                let [bt, tt, c] = vx.shape();
                let size = self.value(*k).width();
                let (xd, kd) = (vx.data(), xval(*k));
                let mut gx = self.zeros_like(*x);
                let mut gk = self.zeros_like(*k);
                for bi in 0..bt {
                    for t in 0..tt {
                        for j in 0..size.min(t + 1) {
                            let src = (bi * tt + t - j) * c;
                            let dst = (bi * tt + t) * c;
                            for ch in 0..c {
                                let ki = (ch / group) * size + j;
                                gk[ki] = gk[ki] + g[dst + ch] * xd[src + ch];
                                gx[src + ch] = gx[src + ch] + g[dst + ch] * kd[ki];
                            }
                        }
                    }
                }
                vec![(*x, gx), (*k, gk)]
            }
            Op::SoftmaxChannels(x) => {
                let w = node.value.width();
                let mut gx = vec![T::zero(); g.len()];
                for r in 0..node.value.rows() {
                    let (yr, gr) = (&y[r * w..(r + 1) * w], &g[r * w..(r + 1) * w]);
                    let dot: T = yr.iter().zip(gr).map(|(&a, &b)| a * b).sum();
                    for c in 0..w {
                        gx[r * w + c] = yr[c] * (gr[c] - dot);
                    }
                }
                vec![(*x, gx)]
            }
            Op::Attention { q, k, v, heads, probs } => {
                let [bt, tt, d] = node.value.shape();
                let dh = d / heads;
                let scale = T::one() / T::lit(dh as f64).sqrt();
                let (qd, kd, vd) = (xval(*q), xval(*k), xval(*v));
                let mut gq = vec![T::zero(); qd.len()];
                let mut gk = vec![T::zero(); kd.len()];
                let mut gv = vec![T::zero(); vd.len()];
                let mut gp = vec![T::zero(); tt];
                for bi in 0..bt {
                    for h in 0..*heads {
                        for t1 in 0..tt {
                            let p = &probs[((bi * heads + h) * tt + t1) * tt..((bi * heads + h) * tt + t1 + 1) * tt];
                            let o1 = (bi * tt + t1) * d + h * dh;
                            let grow = &g[o1..o1 + dh];
                            for t2 in 0..tt {
                                let o2 = (bi * tt + t2) * d + h * dh;
                                let mut acc = T::zero();
                                for e in 0..dh {
                                    acc = acc + grow[e] * vd[o2 + e];
                                    gv[o2 + e] = gv[o2 + e] + p[t2] * grow[e];
                                }
                                gp[t2] = acc;
                            }
                            let dot: T = gp.iter().zip(p).map(|(&a, &b)| a * b).sum();
                            for t2 in 0..tt {
                                let gs = p[t2] * (gp[t2] - dot) * scale;
                                let o2 = (bi * tt + t2) * d + h * dh;
                                for e in 0..dh {
                                    gq[o1 + e] = gq[o1 + e] + gs * kd[o2 + e];
                                    gk[o2 + e] = gk[o2 + e] + gs * qd[o1 + e];
                                }
                            }
                        }
                    }
                }
                vec![(*q, gq), (*k, gk), (*v, gv)]
            }
            Op::MaxPool { x, argmax } => {
                let mut gx = self.zeros_like(*x);
                for (i, &src) in argmax.iter().enumerate() {
                    gx[src] = gx[src] + g[i];
                }
                vec![(*x, gx)]
            }
            Op::AvgPool { x, kernel } => {
                let [bt, tt, c] = node.value.shape();
                let mut gx = self.zeros_like(*x);
                for bi in 0..bt {
                    for t in 0..tt {
                        let n = (*kernel).min(t + 1);
                        let inv = T::one() / T::lit(n as f64);
                        for j in 0..n {
                            for ch in 0..c {
                                let src = (bi * tt + t - j) * c + ch;
                                gx[src] = gx[src] + g[(bi * tt + t) * c + ch] * inv;
                            }
                        }
                    }
                }
                vec![(*x, gx)]
            }
            Op::MeanTime(x) => {
                let [bt, tt, c] = self.value(*x).shape();
                let inv = T::one() / T::lit(tt as f64);
                let mut gx = self.zeros_like(*x);
                for bi in 0..bt {
                    for t in 0..tt {
                        for ch in 0..c {
                            gx[(bi * tt + t) * c + ch] = g[bi * c + ch] * inv;
                        }
                    }
                }
                vec![(*x, gx)]
            }
            Op::EmbeddingBag { table, bags } => {
                let d = node.value.width();
                let mut gt = self.zeros_like(*table);
                for (r, bag) in bags.iter().enumerate() {
                    if bag.is_empty() {
                        continue;
                    }
                    let inv = T::one() / T::lit(bag.len() as f64);
                    for &tok in bag {
                        for c in 0..d {
                            gt[tok * d + c] = gt[tok * d + c] + g[r * d + c] * inv;
                        }
                    }
                }
                vec![(*table, gt)]
            }
            Op::SoftmaxXent { logits, labels, probs } => {
                let k = self.value(*logits).width();
                let scale = g[0] / T::lit(labels.len() as f64);
                let mut gl: Vec<T> = probs.iter().map(|&p| p * scale).collect();
                for (r, &l) in labels.iter().enumerate() {
                    gl[r * k + l] = gl[r * k + l] - scale;
                }
                vec![(*logits, gl)]
            }
            Op::Sum(x) => vec![(*x, vec![g[0]; self.value(*x).len()])],
        }
    }
}
