//! The hybrid classifier: convolutional encoder, attention-LSTM encoder and a
//! linguistic-feature perceptron, concatenated into a two-way softmax head.

use std::collections::BTreeMap;
use std::ops::Range;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ModelConfig, RnnPooling};
use super::layers::{
    Attention, AttentionCache, Conv1d, ConvCache, Dense, DenseStack, EmbeddingView, LayoutBuilder,
    Lstm, LstmCache, StackCache, StackInput,
};
use super::linalg::{add_assign, softmax};
use super::loss::LOSS_EPSILON;
use crate::corpus::Label;
use crate::embed::{EmbeddingTable, EncodedSequence, PAD_INDEX};
use crate::error::{Error, Result};
use crate::lexfeat::LinguisticFeatureVector;
use crate::scalar::Scalar;
use crate::seed;

/// Everything the model consumes for one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceInput {
    pub sequence: EncodedSequence,
    pub features: LinguisticFeatureVector,
}

/// Class probabilities `(non-suggestive, suggestive)` and the argmax label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub prob: [f64; 2],
    pub label: Label,
}

impl Prediction {
    pub fn from_logits<T: Scalar>(logits: &[T; 2]) -> Self {
        let p = softmax(logits);
        let label = if logits[1] > logits[0] {
            Label::Suggestive
        } else {
            Label::NonSuggestive
        };
        Prediction {
            prob: [p[0].as_f64(), p[1].as_f64()],
            label,
        }
    }

    /// From class probabilities; ties go to the non-suggestive class.
    pub fn from_probs(prob: [f64; 2]) -> Self {
        let label = if prob[1] > prob[0] {
            Label::Suggestive
        } else {
            Label::NonSuggestive
        };
        Prediction { prob, label }
    }

    pub fn p_suggestive(&self) -> f64 {
        self.prob[1]
    }

    pub fn p(&self, label: Label) -> f64 {
        self.prob[label.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Debug, Clone)]
struct CnnBranch {
    conv: Conv1d,
    dense: DenseStack,
}

#[derive(Debug, Clone)]
struct RnnBranch {
    forward: Lstm,
    backward: Option<Lstm>,
    attention: Option<Attention>,
    dense: DenseStack,
}

/// Parameter layout and wiring derived from a [`ModelConfig`].
#[derive(Debug, Clone)]
pub(crate) struct Network {
    layout: LayoutBuilder,
    cnn: Option<CnnBranch>,
    rnn: Option<RnnBranch>,
    ling: Option<DenseStack>,
    head: Dense,
    fusion_width: usize,
}

impl Network {
    fn build(config: &ModelConfig, embedding_dim: usize, feature_dim: usize) -> Result<Self> {
        config.validate()?;
        if embedding_dim == 0 {
            return Err(Error::InvalidArgument("embedding dim must be positive".into()));
        }
        let variant = config.variant;
        let mut layout = LayoutBuilder::default();
        let mut fusion_width = 0;

        let cnn = variant.uses_cnn().then(|| {
            let conv = Conv1d::new(&mut layout, "cnn.conv", config.cnn_filters, config.cnn_width, embedding_dim);
            let dense = DenseStack::new(&mut layout, "cnn.dense", config.cnn_filters, &[config.cnn_dense], config.cnn_dropout);
            fusion_width += dense.output_width();
            CnnBranch { conv, dense }
        });

        let rnn = variant.rnn_pooling().map(|pooling| {
            let forward = Lstm::new(&mut layout, "rnn.lstm_fwd", embedding_dim, config.lstm_hidden);
            let backward = config
                .bidirectional
                .then(|| Lstm::new(&mut layout, "rnn.lstm_bwd", embedding_dim, config.lstm_hidden));
            let state_width = config.lstm_hidden * if config.bidirectional { 2 } else { 1 };
            let attention = (pooling == RnnPooling::Attention).then(|| {
                Attention::new(&mut layout, "rnn.attention", state_width, config.attention_width())
            });
            let dense = DenseStack::new(&mut layout, "rnn.dense", state_width, &config.rnn_dense, config.rnn_dropout);
            fusion_width += dense.output_width();
            RnnBranch {
                forward,
                backward,
                attention,
                dense,
            }
        });

        let ling = if variant.uses_linguistic() {
            if feature_dim == 0 {
                return Err(Error::InvalidArgument(
                    "linguistic branch needs a non-empty feature schema".into(),
                ));
            }
            let stack = DenseStack::new(&mut layout, "ling.dense", feature_dim, &config.ling_hidden, config.ling_dropout);
            fusion_width += stack.output_width();
            Some(stack)
        } else {
            None
        };

        let head = Dense::new(&mut layout, "head", fusion_width, 2);
        Ok(Network {
            layout,
            cnn,
            rnn,
            ling,
            head,
            fusion_width,
        })
    }
}

struct RnnCache<T> {
    forward: LstmCache<T>,
    backward: Option<LstmCache<T>>,
    states: Vec<Vec<T>>,
    attention: Option<AttentionCache<T>>,
    stack: StackCache<T>,
}

struct ForwardCache<T> {
    cnn: Option<(ConvCache<T>, StackCache<T>)>,
    rnn: Option<RnnCache<T>>,
    ling: Option<StackCache<T>>,
    fused: Vec<T>,
    logits: [T; 2],
}

/// Parameter gradients. Embedding rows are only present when fine-tuning.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    pub dense: Vec<T>,
    pub embedding: BTreeMap<usize, Vec<T>>,
}

impl<T: Scalar> Gradients<T> {
    fn zeros(len: usize) -> Self {
        Gradients {
            dense: vec![T::zero(); len],
            embedding: BTreeMap::new(),
        }
    }

    fn merge(&mut self, other: Gradients<T>) {
        add_assign(&mut self.dense, &other.dense);
        for (row, g) in other.embedding {
            match self.embedding.get_mut(&row) {
                Some(acc) => add_assign(acc, &g),
                None => {
                    self.embedding.insert(row, g);
                }
            }
        }
    }
}

/// A trained or freshly initialised hybrid classifier.
#[derive(Debug, Clone)]
pub struct HybridModel<T> {
    pub(crate) config: ModelConfig,
    pub(crate) embedding_dim: usize,
    pub(crate) feature_dim: usize,
    pub(crate) schema_id: String,
    pub(crate) embedding_fingerprint: String,
    pub(crate) params: Vec<T>,
    pub(crate) tuned_embeddings: BTreeMap<usize, Vec<T>>,
    net: Network,
}

/// Examples per gradient accumulation buffer. Fixed so the summation order,
/// and therefore the result, does not depend on the thread count.
const CHUNK: usize = 8;

impl<T: Scalar> HybridModel<T> {
    /// Fresh parameters drawn from the config's `init` sub-seed.
    pub fn new(
        config: ModelConfig,
        embedding_dim: usize,
        feature_dim: usize,
        schema_id: impl Into<String>,
        embedding_fingerprint: impl Into<String>,
    ) -> Result<Self> {
        let net = Network::build(&config, embedding_dim, feature_dim)?;
        let params = net.layout.initialize(&mut seed::rng(config.seed, &["init"]));
        Ok(HybridModel {
            config,
            embedding_dim,
            feature_dim,
            schema_id: schema_id.into(),
            embedding_fingerprint: embedding_fingerprint.into(),
            params,
            tuned_embeddings: BTreeMap::new(),
            net,
        })
    }

    pub(crate) fn from_parts(
        config: ModelConfig,
        embedding_dim: usize,
        feature_dim: usize,
        schema_id: String,
        embedding_fingerprint: String,
        params: Vec<T>,
        tuned_embeddings: BTreeMap<usize, Vec<T>>,
    ) -> Result<Self> {
        let net = Network::build(&config, embedding_dim, feature_dim)?;
        if params.len() != net.layout.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} parameters, found {}",
                net.layout.len(),
                params.len()
            )));
        }
        if let Some((row, v)) = tuned_embeddings.iter().find(|(_, v)| v.len() != embedding_dim) {
            return Err(Error::Checkpoint(format!(
                "tuned embedding row {row} has width {}",
                v.len()
            )));
        }
        Ok(HybridModel {
            config,
            embedding_dim,
            feature_dim,
            schema_id,
            embedding_fingerprint,
            params,
            tuned_embeddings,
            net,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding_dim
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn schema_id(&self) -> &str {
        &self.schema_id
    }

    pub fn embedding_fingerprint(&self) -> &str {
        &self.embedding_fingerprint
    }

    /// Width of the concatenated encoder outputs fed to the softmax head.
    pub fn fusion_width(&self) -> usize {
        self.net.fusion_width
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn tuned_embeddings(&self) -> &BTreeMap<usize, Vec<T>> {
        &self.tuned_embeddings
    }

    pub(crate) fn tuned_embeddings_mut(&mut self) -> &mut BTreeMap<usize, Vec<T>> {
        &mut self.tuned_embeddings
    }

    /// Named parameter ranges within [`params`](Self::params).
    pub fn parameter_ranges(&self) -> Vec<(String, Range<usize>)> {
        self.net
            .layout
            .slots
            .iter()
            .map(|(name, slot, _)| (name.clone(), slot.range()))
            .collect()
    }

    fn view<'a>(&'a self, table: &'a EmbeddingTable<T>) -> EmbeddingView<'a, T> {
        EmbeddingView {
            table,
            tuned: &self.tuned_embeddings,
        }
    }

    fn check_input(&self, input: &SentenceInput, table: &EmbeddingTable<T>) -> Result<()> {
        if table.dim() != self.embedding_dim {
            return Err(Error::WidthMismatch {
                what: "embedding",
                expected: self.embedding_dim,
                got: table.dim(),
            });
        }
        if input.features.len() != self.feature_dim {
            return Err(Error::WidthMismatch {
                what: "linguistic feature vector",
                expected: self.feature_dim,
                got: input.features.len(),
            });
        }
        let seq = &input.sequence;
        if seq.true_length > seq.indices.len() {
            return Err(Error::InvalidArgument("true_length exceeds sequence length".into()));
        }
        if seq.indices.is_empty() {
            return Err(Error::InvalidArgument("empty index sequence".into()));
        }
        if self.net.rnn.is_some() && seq.true_length == 0 {
            return Err(Error::InvalidArgument(
                "recurrent encoder needs at least one token".into(),
            ));
        }
        if let Some(&bad) = seq.indices.iter().find(|&&i| i >= table.rows()) {
            return Err(Error::InvalidArgument(format!(
                "token index {bad} outside embedding table of {} rows",
                table.rows()
            )));
        }
        if seq.indices[seq.true_length..].iter().any(|&i| i != PAD_INDEX) {
            return Err(Error::InvalidArgument("non-padding index after true_length".into()));
        }
        Ok(())
    }

    fn forward_cached(
        &self,
        input: &SentenceInput,
        table: &EmbeddingTable<T>,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> ForwardCache<T> {
        let params = &self.params[..];
        let emb = self.view(table);
        let seq = &input.sequence;
        let mut fused = Vec::with_capacity(self.net.fusion_width);

        let cnn = self.net.cnn.as_ref().map(|branch| {
            let conv = branch
                .conv
                .forward(params, emb, &seq.indices, seq.true_length);
            let activated: Vec<T> = conv.pooled.iter().map(|&z| z.max(T::zero())).collect();
            let stack = branch
                .dense
                .forward(params, StackInput::Dense(activated), rng.as_deref_mut());
            fused.extend_from_slice(stack.output());
            (conv, stack)
        });

        let rnn = self.net.rnn.as_ref().map(|branch| {
            let n = seq.true_length;
            let rows: Vec<usize> = seq.indices[..n].to_vec();
            let fwd = branch.forward.forward(params, emb, rows.clone());
            let bwd = branch
                .backward
                .as_ref()
                .map(|lstm| lstm.forward(params, emb, rows.iter().rev().copied().collect()));
            let states: Vec<Vec<T>> = (0..n)
                .map(|t| {
                    let mut s = fwd.hidden[t].clone();
                    if let Some(b) = &bwd {
                        s.extend_from_slice(&b.hidden[n - 1 - t]);
                    }
                    s
                })
                .collect();
            let (attention, pooled) = match &branch.attention {
                Some(att) => {
                    let cache = att.forward(params, &states);
                    let pooled = cache.pooled.clone();
                    (Some(cache), pooled)
                }
                None => {
                    let mut last = fwd.hidden[n - 1].clone();
                    if let Some(b) = &bwd {
                        last.extend_from_slice(&b.hidden[n - 1]);
                    }
                    (None, last)
                }
            };
            let stack = branch
                .dense
                .forward(params, StackInput::Dense(pooled), rng.as_deref_mut());
            fused.extend_from_slice(stack.output());
            RnnCache {
                forward: fwd,
                backward: bwd,
                states,
                attention,
                stack,
            }
        });

        let ling = self.net.ling.as_ref().map(|stack| {
            let active: Vec<usize> = input.features.active().collect();
            let cache = stack.forward(params, StackInput::Binary(active), rng);
            fused.extend_from_slice(cache.output());
            cache
        });

        let out = self.net.head.forward(params, &fused);
        ForwardCache {
            cnn,
            rnn,
            ling,
            fused,
            logits: [out[0], out[1]],
        }
    }

    fn backward(
        &self,
        input: &SentenceInput,
        table: &EmbeddingTable<T>,
        cache: &ForwardCache<T>,
        d_logits: &[T; 2],
        grads: &mut Gradients<T>,
    ) {
        let params = &self.params[..];
        let emb = self.view(table);
        let fine_tune = self.config.fine_tune_embeddings;
        let seq = &input.sequence;
        let mut d_fused = vec![T::zero(); self.net.fusion_width];
        self.net
            .head
            .backward(params, &mut grads.dense, &cache.fused, d_logits, Some(&mut d_fused));
        let mut offset = 0;
        let mut row_grads: Vec<(usize, Vec<T>)> = Vec::new();

        if let (Some(branch), Some((conv, stack))) = (&self.net.cnn, &cache.cnn) {
            let w = branch.dense.output_width();
            let d_in = branch
                .dense
                .backward(params, &mut grads.dense, stack, &d_fused[offset..offset + w])
                .expect("dense input");
            offset += w;
            let d_pooled: Vec<T> = d_in
                .iter()
                .zip(&conv.pooled)
                .map(|(&d, &z)| if z > T::zero() { d } else { T::zero() })
                .collect();
            let positions = branch.conv.backward(
                params,
                &mut grads.dense,
                emb,
                &seq.indices,
                conv,
                &d_pooled,
                fine_tune,
            );
            row_grads.extend(positions.into_iter().map(|(p, g)| (seq.indices[p], g)));
        }

        if let (Some(branch), Some(rc)) = (&self.net.rnn, &cache.rnn) {
            let w = branch.dense.output_width();
            let d_pooled = branch
                .dense
                .backward(params, &mut grads.dense, &rc.stack, &d_fused[offset..offset + w])
                .expect("dense input");
            offset += w;
            let n = rc.states.len();
            let d_states: Vec<Vec<T>> = match (&branch.attention, &rc.attention) {
                (Some(att), Some(ac)) => {
                    att.backward(params, &mut grads.dense, &rc.states, ac, &d_pooled)
                }
                _ => {
                    let mut d = vec![vec![T::zero(); d_pooled.len()]; n];
                    let h = branch.forward.hidden;
                    d[n - 1][..h].copy_from_slice(&d_pooled[..h]);
                    if branch.backward.is_some() {
                        // backward direction's final state sits at position 0
                        d[0][h..].copy_from_slice(&d_pooled[h..]);
                    }
                    d
                }
            };
            let h = branch.forward.hidden;
            let d_fwd: Vec<Vec<T>> = d_states.iter().map(|d| d[..h].to_vec()).collect();
            let dx = branch.forward.backward(
                params,
                &mut grads.dense,
                emb,
                &rc.forward,
                &d_fwd,
                fine_tune,
            );
            for (t, g) in dx.into_iter().enumerate() {
                row_grads.push((seq.indices[t], g));
            }
            if let (Some(lstm), Some(bc)) = (&branch.backward, &rc.backward) {
                let d_bwd: Vec<Vec<T>> = (0..n).map(|s| d_states[n - 1 - s][h..].to_vec()).collect();
                let dx = lstm.backward(params, &mut grads.dense, emb, bc, &d_bwd, fine_tune);
                for (s, g) in dx.into_iter().enumerate() {
                    row_grads.push((seq.indices[n - 1 - s], g));
                }
            }
        }

        if let (Some(stack), Some(lc)) = (&self.net.ling, &cache.ling) {
            let w = stack.output_width();
            stack.backward(params, &mut grads.dense, lc, &d_fused[offset..offset + w]);
        }

        if fine_tune {
            for (row, g) in row_grads {
                if row == PAD_INDEX {
                    continue;
                }
                match grads.embedding.get_mut(&row) {
                    Some(acc) => add_assign(acc, &g),
                    None => {
                        grads.embedding.insert(row, g);
                    }
                }
            }
        }
    }

    /// Fusion-head logits in inference mode.
    pub fn logits(&self, input: &SentenceInput, table: &EmbeddingTable<T>) -> Result<[T; 2]> {
        self.check_input(input, table)?;
        Ok(self.forward_cached(input, table, None).logits)
    }

    /// Single forward pass. `rng` drives dropout and is only used in train mode.
    pub fn forward(
        &self,
        input: &SentenceInput,
        table: &EmbeddingTable<T>,
        mode: Mode,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Prediction> {
        self.check_input(input, table)?;
        let rng = match mode {
            Mode::Train => rng,
            Mode::Infer => None,
        };
        Ok(Prediction::from_logits(&self.forward_cached(input, table, rng).logits))
    }

    /// Attention weights over the `max_len` positions (zeros on padding),
    /// or `None` for variants without attention.
    pub fn attention_weights(
        &self,
        input: &SentenceInput,
        table: &EmbeddingTable<T>,
    ) -> Result<Option<Vec<T>>> {
        self.check_input(input, table)?;
        let cache = self.forward_cached(input, table, None);
        Ok(cache.rnn.and_then(|r| r.attention).map(|a| {
            let mut w = a.weights;
            w.resize(input.sequence.indices.len(), T::zero());
            w
        }))
    }

    /// Inference-mode predictions, in input order.
    pub fn predict_proba(
        &self,
        table: &EmbeddingTable<T>,
        inputs: &[&SentenceInput],
    ) -> Result<Vec<Prediction>> {
        inputs
            .par_iter()
            .map(|input| self.forward(input, table, Mode::Infer, None))
            .collect()
    }

    /// Mean class-weighted cross-entropy over `batch` and its gradient.
    ///
    /// With `dropout_seed` set, the forward pass runs in train mode with a
    /// dropout stream derived from the seed and the example's batch position.
    pub fn loss_and_gradient(
        &self,
        table: &EmbeddingTable<T>,
        batch: &[(&SentenceInput, Label)],
        dropout_seed: Option<u64>,
    ) -> Result<(T, Gradients<T>)> {
        if batch.is_empty() {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        for (input, _) in batch {
            self.check_input(input, table)?;
        }
        let n = T::lit(batch.len() as f64);
        let pos_weight = T::lit(self.config.positive_weight);
        let eps = T::lit(LOSS_EPSILON);
        let partials: Vec<(T, Gradients<T>)> = batch
            .par_chunks(CHUNK)
            .enumerate()
            .map(|(c, chunk)| {
                let mut grads = Gradients::zeros(self.params.len());
                let mut loss = T::zero();
                for (j, (input, label)) in chunk.iter().enumerate() {
                    let mut rng = dropout_seed
                        .map(|s| seed::rng(s, &["example", &(c * CHUNK + j).to_string()]));
                    let cache = self.forward_cached(input, table, rng.as_mut());
                    let p = softmax(&cache.logits);
                    let y = label.index();
                    let w = if label.is_positive() { pos_weight } else { T::one() };
                    loss += -w * p[y].max(eps).ln();
                    let mut d = [p[0] * w / n, p[1] * w / n];
                    d[y] -= w / n;
                    self.backward(input, table, &cache, &d, &mut grads);
                }
                (loss, grads)
            })
            .collect();
        let mut total = Gradients::zeros(self.params.len());
        let mut loss = T::zero();
        for (l, g) in partials {
            loss += l;
            total.merge(g);
        }
        Ok((loss / n, total))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::encode;
    use crate::model::config::Variant;

    fn tiny_config(variant: Variant) -> ModelConfig {
        ModelConfig {
            variant,
            max_len: 6,
            cnn_filters: 3,
            cnn_width: 3,
            cnn_dense: 4,
            lstm_hidden: 3,
            rnn_dense: vec![4, 2],
            ling_hidden: vec![4, 2],
            seed: 5,
            ..ModelConfig::default()
        }
    }

    fn table() -> EmbeddingTable<f64> {
        EmbeddingTable::from_rows(
            3,
            [
                ("go", vec![0.5, -0.2, 0.1]),
                ("there", vec![-0.3, 0.8, 0.0]),
                ("early", vec![0.9, 0.1, -0.4]),
            ],
        )
        .unwrap()
    }

    fn input(words: &[&str], t: &EmbeddingTable<f64>, feat: Vec<u8>) -> SentenceInput {
        SentenceInput {
            sequence: encode(words, t, 6),
            features: LinguisticFeatureVector {
                values: feat,
                schema_id: "s".into(),
            },
        }
    }

    #[test]
    fn probabilities_normalised_and_argmax_consistent() {
        let t = table();
        for v in Variant::ALL {
            let m = HybridModel::<f64>::new(tiny_config(v), 3, 4, "s", "e").unwrap();
            let x = input(&["go", "there", "early"], &t, vec![1, 0, 1, 0]);
            let p = m.forward(&x, &t, Mode::Infer, None).unwrap();
            assert!((p.prob[0] + p.prob[1] - 1.0).abs() < 1e-12);
            let l = m.logits(&x, &t).unwrap();
            assert_eq!(p.label.index(), usize::from(l[1] > l[0]));
        }
    }

    #[test]
    fn width_mismatch_rejected() {
        let t = table();
        let m = HybridModel::<f64>::new(tiny_config(Variant::Hybrid), 3, 4, "s", "e").unwrap();
        let x = input(&["go"], &t, vec![1, 0]);
        assert!(matches!(
            m.forward(&x, &t, Mode::Infer, None),
            Err(Error::WidthMismatch { .. })
        ));
    }

    #[test]
    fn fusion_width_follows_variant() {
        let m = HybridModel::<f32>::new(tiny_config(Variant::Hybrid), 3, 4, "s", "e").unwrap();
        assert_eq!(m.fusion_width(), 4 + 2 + 2);
        let m = HybridModel::<f32>::new(tiny_config(Variant::HybridMinusCnn), 3, 4, "s", "e").unwrap();
        assert_eq!(m.fusion_width(), 4);
    }

    #[test]
    fn padded_positions_get_zero_attention() {
        let t = table();
        let m = HybridModel::<f64>::new(tiny_config(Variant::LstmAttention), 3, 4, "s", "e").unwrap();
        let x = input(&["go", "there"], &t, vec![0; 4]);
        let w = m.attention_weights(&x, &t).unwrap().unwrap();
        assert_eq!(w.len(), 6);
        assert!(w[2..].iter().all(|&a| a == 0.0));
        assert!((w[0] + w[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dropout_only_in_train_mode() {
        let t = table();
        let m = HybridModel::<f64>::new(tiny_config(Variant::Hybrid), 3, 4, "s", "e").unwrap();
        let x = input(&["go", "there", "early"], &t, vec![1, 1, 0, 1]);
        let a = m.forward(&x, &t, Mode::Infer, None).unwrap();
        let mut r = seed::rng(1, &["x"]);
        let b = m.forward(&x, &t, Mode::Infer, Some(&mut r)).unwrap();
        assert_eq!(a, b);
        let outs: Vec<f64> = (0..8)
            .map(|i| {
                let mut r = seed::rng(i, &["x"]);
                m.forward(&x, &t, Mode::Train, Some(&mut r)).unwrap().prob[1]
            })
            .collect();
        assert!(outs.iter().any(|&p| (p - outs[0]).abs() > 1e-9));
    }
}
