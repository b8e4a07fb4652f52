//! Parameter slots and the dense / recurrent building blocks.
//!
//! Every layer reads its weights out of one flat parameter vector through
//! [`Slot`]s, and writes gradients into a vector with the same layout.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::linalg::{add_assign, affine, matvec_acc, matvec_t_acc, outer_acc, sigmoid};
use crate::embed::EmbeddingTable;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub offset: usize,
    pub len: usize,
}

impl Slot {
    #[inline]
    pub fn of<'a, T>(&self, params: &'a [T]) -> &'a [T] {
        &params[self.offset..self.offset + self.len]
    }

    #[inline]
    pub fn of_mut<'a, T>(&self, params: &'a mut [T]) -> &'a mut [T] {
        &mut params[self.offset..self.offset + self.len]
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// How a slot should be initialised.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    /// Uniform in `[-sqrt(6 / (fan_in + fan_out)), +...]`.
    Glorot { fan_in: usize, fan_out: usize },
    Zeros,
    /// Zeros except `value` over `[start, start + len)`.
    Band { start: usize, len: usize, value: f64 },
}

#[derive(Debug, Default, Clone)]
pub struct LayoutBuilder {
    len: usize,
    pub(crate) slots: Vec<(String, Slot, Init)>,
}

impl LayoutBuilder {
    pub fn alloc(&mut self, name: impl Into<String>, len: usize, init: Init) -> Slot {
        let slot = Slot {
            offset: self.len,
            len,
        };
        self.len += len;
        self.slots.push((name.into(), slot, init));
        slot
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn initialize<T: Scalar>(&self, rng: &mut ChaCha8Rng) -> Vec<T> {
        let mut params = vec![T::zero(); self.len];
        for (_, slot, init) in &self.slots {
            let dst = slot.of_mut(&mut params);
            match *init {
                Init::Glorot { fan_in, fan_out } => {
                    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                    for p in dst.iter_mut() {
                        *p = T::lit(rng.random_range(-limit..limit));
                    }
                }
                Init::Zeros => {}
                Init::Band { start, len, value } => {
                    for p in &mut dst[start..start + len] {
                        *p = T::lit(value);
                    }
                }
            }
        }
        params
    }
}

/// Read-only view of embedding rows, with fine-tuned rows taking precedence.
#[derive(Clone, Copy)]
pub struct EmbeddingView<'a, T> {
    pub table: &'a EmbeddingTable<T>,
    pub tuned: &'a BTreeMap<usize, Vec<T>>,
}

impl<'a, T: Scalar> EmbeddingView<'a, T> {
    #[inline]
    pub fn row(&self, index: usize) -> &'a [T] {
        match self.tuned.get(&index) {
            Some(v) => v,
            None => self.table.row(index),
        }
    }
}

/// Fully connected layer, `W` stored `output x input`.
#[derive(Debug, Clone, Copy)]
pub struct Dense {
    pub w: Slot,
    pub b: Slot,
    pub input: usize,
    pub output: usize,
}

impl Dense {
    pub fn new(layout: &mut LayoutBuilder, name: &str, input: usize, output: usize) -> Self {
        let w = layout.alloc(
            format!("{name}.w"),
            input * output,
            Init::Glorot {
                fan_in: input,
                fan_out: output,
            },
        );
        let b = layout.alloc(format!("{name}.b"), output, Init::Zeros);
        Dense {
            w,
            b,
            input,
            output,
        }
    }

    pub fn forward<T: Scalar>(&self, params: &[T], x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.output];
        affine(self.w.of(params), self.b.of(params), x, &mut out);
        out
    }

    /// Forward for a binary input given by its active positions.
    pub fn forward_sparse<T: Scalar>(&self, params: &[T], active: &[usize]) -> Vec<T> {
        let w = self.w.of(params);
        self.b
            .of(params)
            .iter()
            .zip(w.chunks_exact(self.input))
            .map(|(&b, row)| active.iter().fold(b, |acc, &j| acc + row[j]))
            .collect()
    }

    /// Accumulate parameter gradients; add `W^T dy` into `dx` when given.
    pub fn backward<T: Scalar>(
        &self,
        params: &[T],
        grads: &mut [T],
        x: &[T],
        dy: &[T],
        dx: Option<&mut [T]>,
    ) {
        outer_acc(self.w.of_mut(grads), dy, x);
        add_assign(self.b.of_mut(grads), dy);
        if let Some(dx) = dx {
            matvec_t_acc(self.w.of(params), dy, dx);
        }
    }

    pub fn backward_sparse<T: Scalar>(&self, grads: &mut [T], active: &[usize], dy: &[T]) {
        let input = self.input;
        let dw = self.w.of_mut(grads);
        for (row, &g) in dw.chunks_exact_mut(input).zip(dy) {
            if g == T::zero() {
                continue;
            }
            for &j in active {
                row[j] += g;
            }
        }
        add_assign(self.b.of_mut(grads), dy);
    }
}

/// Inverted dropout mask: each entry is 0 or `1 / (1 - rate)`.
pub fn dropout_mask<T: Scalar>(len: usize, rate: f64, rng: &mut ChaCha8Rng) -> Vec<T> {
    let keep = T::lit(1.0 / (1.0 - rate));
    (0..len)
        .map(|_| if rng.random::<f64>() < rate { T::zero() } else { keep })
        .collect()
}

#[derive(Debug, Clone)]
pub enum StackInput<T> {
    Dense(Vec<T>),
    Binary(Vec<usize>),
}

/// Activations kept for backprop through a ReLU + dropout stack.
#[derive(Debug, Clone)]
pub struct StackCache<T> {
    input: StackInput<T>,
    /// Post-dropout activations of each layer (the last one is the output).
    acts: Vec<Vec<T>>,
    pre: Vec<Vec<T>>,
    masks: Vec<Option<Vec<T>>>,
}

impl<T: Scalar> StackCache<T> {
    pub fn output(&self) -> &[T] {
        self.acts.last().expect("non-empty stack")
    }
}

/// Layers of `relu(W x + b)` each followed by dropout (train mode only).
#[derive(Debug, Clone)]
pub struct DenseStack {
    pub layers: Vec<Dense>,
    pub dropout: f64,
}

impl DenseStack {
    pub fn new(layout: &mut LayoutBuilder, name: &str, input: usize, widths: &[usize], dropout: f64) -> Self {
        let mut layers = Vec::with_capacity(widths.len());
        let mut prev = input;
        for (i, &w) in widths.iter().enumerate() {
            layers.push(Dense::new(layout, &format!("{name}.{i}"), prev, w));
            prev = w;
        }
        DenseStack { layers, dropout }
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, |l| l.output)
    }

    pub fn forward<T: Scalar>(
        &self,
        params: &[T],
        input: StackInput<T>,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> StackCache<T> {
        let mut acts: Vec<Vec<T>> = Vec::with_capacity(self.layers.len());
        let mut pre_all = Vec::with_capacity(self.layers.len());
        let mut masks = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let pre = match (i, &input) {
                (0, StackInput::Dense(x)) => layer.forward(params, x),
                (0, StackInput::Binary(active)) => layer.forward_sparse(params, active),
                _ => layer.forward(params, &acts[i - 1]),
            };
            let mut act: Vec<T> = pre.iter().map(|&z| z.max(T::zero())).collect();
            let mask = match rng.as_deref_mut() {
                Some(r) if self.dropout > 0.0 => {
                    let m = dropout_mask::<T>(act.len(), self.dropout, r);
                    for (a, &k) in act.iter_mut().zip(&m) {
                        *a *= k;
                    }
                    Some(m)
                }
                _ => None,
            };
            pre_all.push(pre);
            masks.push(mask);
            acts.push(act);
        }
        StackCache {
            input,
            acts,
            pre: pre_all,
            masks,
        }
    }

    /// Backprop `d_out`; returns the gradient w.r.t. a dense input.
    pub fn backward<T: Scalar>(
        &self,
        params: &[T],
        grads: &mut [T],
        cache: &StackCache<T>,
        d_out: &[T],
    ) -> Option<Vec<T>> {
        let mut delta = d_out.to_vec();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            if let Some(m) = &cache.masks[i] {
                for (d, &k) in delta.iter_mut().zip(m) {
                    *d *= k;
                }
            }
            for (d, &z) in delta.iter_mut().zip(&cache.pre[i]) {
                if z <= T::zero() {
                    *d = T::zero();
                }
            }
            if i > 0 {
                let mut dx = vec![T::zero(); layer.input];
                layer.backward(params, grads, &cache.acts[i - 1], &delta, Some(&mut dx));
                delta = dx;
            } else {
                return match &cache.input {
                    StackInput::Dense(x) => {
                        let mut dx = vec![T::zero(); layer.input];
                        layer.backward(params, grads, x, &delta, Some(&mut dx));
                        Some(dx)
                    }
                    StackInput::Binary(active) => {
                        layer.backward_sparse(grads, active, &delta);
                        None
                    }
                };
            }
        }
        None
    }
}

/// Single-direction LSTM with gate order `[input, forget, cell, output]`.
#[derive(Debug, Clone, Copy)]
pub struct Lstm {
    pub wx: Slot,
    pub wh: Slot,
    pub b: Slot,
    pub input: usize,
    pub hidden: usize,
}

/// Per-step activations in processing order.
#[derive(Debug, Clone)]
pub struct LstmCache<T> {
    /// Embedding row consumed at each step.
    pub rows: Vec<usize>,
    /// `[i, f, g, o]` post-activation gates per step, `4H` each.
    gates: Vec<Vec<T>>,
    cells: Vec<Vec<T>>,
    pub hidden: Vec<Vec<T>>,
}

impl Lstm {
    pub fn new(layout: &mut LayoutBuilder, name: &str, input: usize, hidden: usize) -> Self {
        let h4 = 4 * hidden;
        let wx = layout.alloc(
            format!("{name}.wx"),
            h4 * input,
            Init::Glorot {
                fan_in: input,
                fan_out: h4,
            },
        );
        let wh = layout.alloc(
            format!("{name}.wh"),
            h4 * hidden,
            Init::Glorot {
                fan_in: hidden,
                fan_out: h4,
            },
        );
        let b = layout.alloc(
            format!("{name}.b"),
            h4,
            Init::Band {
                start: hidden,
                len: hidden,
                value: 1.0,
            },
        );
        Lstm {
            wx,
            wh,
            b,
            input,
            hidden,
        }
    }

    pub fn forward<T: Scalar>(
        &self,
        params: &[T],
        emb: EmbeddingView<'_, T>,
        rows: Vec<usize>,
    ) -> LstmCache<T> {
        let h = self.hidden;
        let (wx, wh, b) = (self.wx.of(params), self.wh.of(params), self.b.of(params));
        let mut gates_all = Vec::with_capacity(rows.len());
        let mut cells = Vec::with_capacity(rows.len());
        let mut hidden = Vec::with_capacity(rows.len());
        let mut h_prev = vec![T::zero(); h];
        let mut c_prev = vec![T::zero(); h];
        for &row in &rows {
            let mut z = vec![T::zero(); 4 * h];
            affine(wx, b, emb.row(row), &mut z);
            matvec_acc(wh, &h_prev, &mut z);
            for k in 0..h {
                z[k] = sigmoid(z[k]);
                z[h + k] = sigmoid(z[h + k]);
                z[2 * h + k] = z[2 * h + k].tanh();
                z[3 * h + k] = sigmoid(z[3 * h + k]);
            }
            let c: Vec<T> = (0..h)
                .map(|k| z[h + k] * c_prev[k] + z[k] * z[2 * h + k])
                .collect();
            let hh: Vec<T> = (0..h).map(|k| z[3 * h + k] * c[k].tanh()).collect();
            gates_all.push(z);
            c_prev.clone_from(&c);
            h_prev.clone_from(&hh);
            cells.push(c);
            hidden.push(hh);
        }
        LstmCache {
            rows,
            gates: gates_all,
            cells,
            hidden,
        }
    }

    /// Backprop through time. `d_hidden[s]` is the external gradient on the
    /// hidden state of step `s`. Row gradients are returned per step when
    /// `want_inputs` is set.
    pub fn backward<T: Scalar>(
        &self,
        params: &[T],
        grads: &mut [T],
        emb: EmbeddingView<'_, T>,
        cache: &LstmCache<T>,
        d_hidden: &[Vec<T>],
        want_inputs: bool,
    ) -> Vec<Vec<T>> {
        let h = self.hidden;
        let steps = cache.rows.len();
        let wx = self.wx.of(params);
        let wh = self.wh.of(params);
        let mut dh_next = vec![T::zero(); h];
        let mut dc_next = vec![T::zero(); h];
        let mut d_inputs = if want_inputs {
            vec![Vec::new(); steps]
        } else {
            Vec::new()
        };
        let zero = vec![T::zero(); h];
        let one = T::one();
        for s in (0..steps).rev() {
            let g = &cache.gates[s];
            let c = &cache.cells[s];
            let c_prev = if s > 0 { &cache.cells[s - 1] } else { &zero };
            let h_prev = if s > 0 { &cache.hidden[s - 1] } else { &zero };
            let mut dz = vec![T::zero(); 4 * h];
            for k in 0..h {
                let (i, f, gg, o) = (g[k], g[h + k], g[2 * h + k], g[3 * h + k]);
                let dh = d_hidden[s][k] + dh_next[k];
                let tc = c[k].tanh();
                let d_o = dh * tc;
                let dc = dc_next[k] + dh * o * (one - tc * tc);
                dz[k] = dc * gg * i * (one - i);
                dz[h + k] = dc * c_prev[k] * f * (one - f);
                dz[2 * h + k] = dc * i * (one - gg * gg);
                dz[3 * h + k] = d_o * o * (one - o);
                dc_next[k] = dc * f;
            }
            outer_acc(self.wx.of_mut(grads), &dz, emb.row(cache.rows[s]));
            outer_acc(self.wh.of_mut(grads), &dz, h_prev);
            add_assign(self.b.of_mut(grads), &dz);
            dh_next.iter_mut().for_each(|d| *d = T::zero());
            matvec_t_acc(wh, &dz, &mut dh_next);
            if want_inputs {
                let mut dx = vec![T::zero(); self.input];
                matvec_t_acc(wx, &dz, &mut dx);
                d_inputs[s] = dx;
            }
        }
        d_inputs
    }
}

/// Feed-forward attention: `e_t = v . tanh(W h_t + b)`, softmax over valid steps.
#[derive(Debug, Clone, Copy)]
pub struct Attention {
    pub w: Slot,
    pub b: Slot,
    pub v: Slot,
    pub input: usize,
}

#[derive(Debug, Clone)]
pub struct AttentionCache<T> {
    pub weights: Vec<T>,
    projected: Vec<Vec<T>>,
    pub pooled: Vec<T>,
}

impl Attention {
    pub fn new(layout: &mut LayoutBuilder, name: &str, input: usize, width: usize) -> Self {
        let w = layout.alloc(
            format!("{name}.w"),
            width * input,
            Init::Glorot {
                fan_in: input,
                fan_out: width,
            },
        );
        let b = layout.alloc(format!("{name}.b"), width, Init::Zeros);
        let v = layout.alloc(
            format!("{name}.v"),
            width,
            Init::Glorot {
                fan_in: width,
                fan_out: 1,
            },
        );
        Attention {
            w,
            b,
            v,
            input,
        }
    }

    pub fn forward<T: Scalar>(&self, params: &[T], states: &[Vec<T>]) -> AttentionCache<T> {
        attention_forward(
            self.w.of(params),
            self.b.of(params),
            self.v.of(params),
            self.input,
            states,
        )
    }

    /// Returns the gradient for every state.
    pub fn backward<T: Scalar>(
        &self,
        params: &[T],
        grads: &mut [T],
        states: &[Vec<T>],
        cache: &AttentionCache<T>,
        d_pooled: &[T],
    ) -> Vec<Vec<T>> {
        let n = states.len();
        let v = self.v.of(params);
        let w = self.w.of(params);
        let d_alpha: Vec<T> = states.iter().map(|h| super::linalg::dot(h, d_pooled)).collect();
        let mean: T = cache
            .weights
            .iter()
            .zip(&d_alpha)
            .map(|(&a, &d)| a * d)
            .sum();
        let mut d_states = Vec::with_capacity(n);
        for t in 0..n {
            let a = cache.weights[t];
            let de = a * (d_alpha[t] - mean);
            let u = &cache.projected[t];
            add_scaled(self.v.of_mut(grads), u, de);
            let dz: Vec<T> = u
                .iter()
                .zip(v)
                .map(|(&ut, &vt)| de * vt * (T::one() - ut * ut))
                .collect();
            outer_acc(self.w.of_mut(grads), &dz, &states[t]);
            add_assign(self.b.of_mut(grads), &dz);
            let mut dh: Vec<T> = d_pooled.iter().map(|&g| a * g).collect();
            matvec_t_acc(w, &dz, &mut dh);
            d_states.push(dh);
        }
        d_states
    }
}

fn add_scaled<T: Scalar>(dst: &mut [T], src: &[T], scale: T) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += scale * s;
    }
}

/// Attention pooling over `states` (all valid), with weights `w` (`width x input`).
pub fn attention_forward<T: Scalar>(
    w: &[T],
    b: &[T],
    v: &[T],
    input: usize,
    states: &[Vec<T>],
) -> AttentionCache<T> {
    let width = b.len();
    let mut projected = Vec::with_capacity(states.len());
    let mut scores = Vec::with_capacity(states.len());
    for h in states {
        debug_assert_eq!(h.len(), input);
        let mut u = vec![T::zero(); width];
        affine(w, b, h, &mut u);
        u.iter_mut().for_each(|x| *x = x.tanh());
        scores.push(super::linalg::dot(v, &u));
        projected.push(u);
    }
    let weights = super::linalg::softmax(&scores);
    let mut pooled = vec![T::zero(); input];
    for (h, &a) in states.iter().zip(&weights) {
        add_scaled(&mut pooled, h, a);
    }
    AttentionCache {
        weights,
        projected,
        pooled,
    }
}

/// One-dimensional same-padded convolution over embedding rows followed by a
/// per-filter global max over all `max_len` positions.
#[derive(Debug, Clone, Copy)]
pub struct Conv1d {
    pub w: Slot,
    pub b: Slot,
    pub filters: usize,
    pub width: usize,
    pub dim: usize,
}

#[derive(Debug, Clone)]
pub struct ConvCache<T> {
    pub pooled: Vec<T>,
    /// Position of the maximum for each filter.
    pub argmax: Vec<usize>,
}

impl Conv1d {
    pub fn new(layout: &mut LayoutBuilder, name: &str, filters: usize, width: usize, dim: usize) -> Self {
        let w = layout.alloc(
            format!("{name}.w"),
            filters * width * dim,
            Init::Glorot {
                fan_in: width * dim,
                fan_out: width * filters,
            },
        );
        let b = layout.alloc(format!("{name}.b"), filters, Init::Zeros);
        Conv1d {
            w,
            b,
            filters,
            width,
            dim,
        }
    }

    fn left(&self) -> usize {
        (self.width - 1) / 2
    }

    /// Gather the `width * dim` window centred on position `t`.
    fn window<T: Scalar>(&self, emb: EmbeddingView<'_, T>, indices: &[usize], t: usize, out: &mut [T]) {
        let left = self.left();
        for k in 0..self.width {
            let dst = &mut out[k * self.dim..(k + 1) * self.dim];
            match (t + k).checked_sub(left).filter(|&p| p < indices.len()) {
                Some(p) => dst.copy_from_slice(emb.row(indices[p])),
                None => dst.iter_mut().for_each(|x| *x = T::zero()),
            }
        }
    }

    pub fn forward<T: Scalar>(
        &self,
        params: &[T],
        emb: EmbeddingView<'_, T>,
        indices: &[usize],
        true_length: usize,
    ) -> ConvCache<T> {
        let (w, b) = (self.w.of(params), self.b.of(params));
        let len = indices.len();
        let span = self.width * self.dim;
        // Windows starting past the last real token see only zero rows (the
        // padding row is all zeros) and evaluate to the bias alone.
        let live = (true_length + self.left()).min(len);
        let mut pooled: Vec<T> = vec![T::neg_infinity(); self.filters];
        let mut argmax = vec![0usize; self.filters];
        let mut window = vec![T::zero(); span];
        let padded_only = indices[true_length.min(len)..].iter().all(|&i| emb.row(i).iter().all(|x| x.is_zero()));
        for t in 0..len {
            if t >= live && padded_only {
                for f in 0..self.filters {
                    if b[f] > pooled[f] {
                        pooled[f] = b[f];
                        argmax[f] = t;
                    }
                }
                break;
            }
            self.window(emb, indices, t, &mut window);
            for f in 0..self.filters {
                let z = b[f] + super::linalg::dot(&w[f * span..(f + 1) * span], &window);
                if z > pooled[f] {
                    pooled[f] = z;
                    argmax[f] = t;
                }
            }
        }
        ConvCache { pooled, argmax }
    }

    /// `d_pooled` is the gradient on the pooled (pre-activation) maxima.
    /// Returns `(position, row gradient)` pairs when `want_inputs` is set.
    #[allow(clippy::too_many_arguments)]
    pub fn backward<T: Scalar>(
        &self,
        params: &[T],
        grads: &mut [T],
        emb: EmbeddingView<'_, T>,
        indices: &[usize],
        cache: &ConvCache<T>,
        d_pooled: &[T],
        want_inputs: bool,
    ) -> Vec<(usize, Vec<T>)> {
        let span = self.width * self.dim;
        let w = self.w.of(params);
        let mut window = vec![T::zero(); span];
        let mut d_window: BTreeMap<usize, Vec<T>> = BTreeMap::new();
        for f in 0..self.filters {
            let g = d_pooled[f];
            if g == T::zero() {
                continue;
            }
            let t = cache.argmax[f];
            self.window(emb, indices, t, &mut window);
            add_scaled(&mut self.w.of_mut(grads)[f * span..(f + 1) * span], &window, g);
            self.b.of_mut(grads)[f] += g;
            if want_inputs {
                let dw = d_window.entry(t).or_insert_with(|| vec![T::zero(); span]);
                add_scaled(dw, &w[f * span..(f + 1) * span], g);
            }
        }
        let left = self.left();
        let mut out = Vec::new();
        for (t, dw) in d_window {
            for k in 0..self.width {
                if let Some(p) = (t + k).checked_sub(left).filter(|&p| p < indices.len()) {
                    out.push((p, dw[k * self.dim..(k + 1) * self.dim].to_vec()));
                }
            }
        }
        out
    }
}
