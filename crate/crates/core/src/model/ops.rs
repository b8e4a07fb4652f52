//! Stand-alone entry points to the encoder primitives, operating on explicit
//! matrices rather than token indices. They share their arithmetic with the
//! network's own layers.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;

use super::layers::{attention_forward, dropout_mask, Conv1d, EmbeddingView, Slot};
use super::linalg::affine;
use crate::embed::EmbeddingTable;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Feed-forward attention parameters: projection `w` (`width x hidden`),
/// bias `b` and query `v` (both `width`).
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams<T> {
    pub w: Vec<T>,
    pub b: Vec<T>,
    pub v: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionPooling<T> {
    /// One weight per row of the input; rows at or past `true_length` get 0.
    pub weights: Vec<T>,
    pub pooled: Vec<T>,
}

/// Softmax-weighted sum of the first `true_length` hidden states.
pub fn attention_pool<T: Scalar>(
    hidden_states: &[Vec<T>],
    true_length: usize,
    params: &AttentionParams<T>,
) -> Result<AttentionPooling<T>> {
    if true_length == 0 {
        return Err(Error::InvalidArgument("attention needs true_length >= 1".into()));
    }
    if true_length > hidden_states.len() {
        return Err(Error::InvalidArgument(format!(
            "true_length {true_length} exceeds {} states",
            hidden_states.len()
        )));
    }
    let h = hidden_states[0].len();
    let width = params.b.len();
    if params.v.len() != width || params.w.len() != width * h {
        return Err(Error::WidthMismatch {
            what: "attention projection",
            expected: width * h,
            got: params.w.len(),
        });
    }
    if let Some(bad) = hidden_states.iter().find(|s| s.len() != h) {
        return Err(Error::WidthMismatch {
            what: "hidden state",
            expected: h,
            got: bad.len(),
        });
    }
    let cache = attention_forward(&params.w, &params.b, &params.v, h, &hidden_states[..true_length]);
    let mut weights = cache.weights;
    weights.resize(hidden_states.len(), T::zero());
    Ok(AttentionPooling {
        weights,
        pooled: cache.pooled,
    })
}

/// Convolution filters: `w` is `filters x (width * dim)` with the window laid
/// out position-major, `b` has one bias per filter.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams<T> {
    pub filters: usize,
    pub width: usize,
    pub w: Vec<T>,
    pub b: Vec<T>,
}

/// Same-padded 1-D convolution over the rows of `embedded`, then the
/// per-filter maximum over every position.
pub fn conv_global_max<T: Scalar>(embedded: &[Vec<T>], params: &ConvParams<T>) -> Result<Vec<T>> {
    let len = embedded.len();
    if len == 0 {
        return Err(Error::InvalidArgument("empty input".into()));
    }
    let dim = embedded[0].len();
    if params.w.len() != params.filters * params.width * dim || params.b.len() != params.filters {
        return Err(Error::WidthMismatch {
            what: "convolution filters",
            expected: params.filters * params.width * dim,
            got: params.w.len(),
        });
    }
    let table = EmbeddingTable::from_rows(
        dim,
        embedded.iter().enumerate().map(|(i, r)| (format!("#{i}"), r.clone())),
    )?;
    let indices: Vec<usize> = (0..len).map(|i| i + 2).collect();
    let mut flat = params.w.clone();
    flat.extend_from_slice(&params.b);
    let conv = Conv1d {
        w: Slot { offset: 0, len: params.w.len() },
        b: Slot { offset: params.w.len(), len: params.filters },
        filters: params.filters,
        width: params.width,
        dim,
    };
    let tuned = BTreeMap::new();
    let view = EmbeddingView { table: &table, tuned: &tuned };
    Ok(conv.forward(&flat, view, &indices, len).pooled)
}

/// Convolutional encoder: pooled maxima through ReLU, one dense ReLU layer
/// (`dense_w` is `out x filters`), then dropout when `rng` is given.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnParams<T> {
    pub conv: ConvParams<T>,
    pub dense_w: Vec<T>,
    pub dense_b: Vec<T>,
    pub dropout: f64,
}

pub fn cnn_encode<T: Scalar>(
    embedded: &[Vec<T>],
    params: &CnnParams<T>,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<Vec<T>> {
    let pooled = conv_global_max(embedded, &params.conv)?;
    let activated: Vec<T> = pooled.iter().map(|&z| z.max(T::zero())).collect();
    let out_width = params.dense_b.len();
    if params.dense_w.len() != out_width * activated.len() {
        return Err(Error::WidthMismatch {
            what: "cnn dense layer",
            expected: out_width * activated.len(),
            got: params.dense_w.len(),
        });
    }
    let mut out = vec![T::zero(); out_width];
    affine(&params.dense_w, &params.dense_b, &activated, &mut out);
    out.iter_mut().for_each(|x| *x = x.max(T::zero()));
    if let Some(rng) = rng {
        if params.dropout > 0.0 {
            let mask = dropout_mask::<T>(out.len(), params.dropout, rng);
            out.iter_mut().zip(mask).for_each(|(x, m)| *x *= m);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn attention_uniform_on_identical_states() {
        let p = AttentionParams::<f64> {
            w: vec![0.3, -0.1, 0.2, 0.5],
            b: vec![0.1, 0.0],
            v: vec![1.0, -2.0],
        };
        let states = vec![vec![0.4, 0.7]; 5];
        let out = attention_pool(&states, 3, &p).unwrap();
        for &w in &out.weights[..3] {
            assert!((w - 1.0 / 3.0).abs() < 1e-12);
        }
        assert_eq!(&out.weights[3..], &[0.0, 0.0]);
        assert!((out.pooled[0] - 0.4).abs() < 1e-12 && (out.pooled[1] - 0.7).abs() < 1e-12);

        let single = attention_pool(&states, 1, &p).unwrap();
        assert_eq!(single.weights[0], 1.0);
        assert!(attention_pool(&states, 0, &p).is_err());
    }

    #[test]
    fn zero_input_pools_to_bias() {
        let params = ConvParams {
            filters: 3,
            width: 5,
            w: (0..30).map(|i| (i as f64 * 0.37).sin()).collect(),
            b: vec![0.25, -1.5, 0.0],
        };
        let pooled = conv_global_max(&vec![vec![0.0; 2]; 8], &params).unwrap();
        assert_eq!(pooled, params.b);
    }

    #[test]
    fn global_max_is_translation_invariant() {
        let params = ConvParams {
            filters: 2,
            width: 3,
            w: (0..12).map(|i| ((i * 7 % 5) as f64) - 2.0).collect(),
            b: vec![0.1, -0.2],
        };
        let pattern = [vec![1.0, -0.5], vec![0.3, 0.9], vec![-0.7, 0.2]];
        let place = |at: usize| {
            let mut x = vec![vec![0.0; 2]; 12];
            for (k, row) in pattern.iter().enumerate() {
                x[at + k] = row.clone();
            }
            conv_global_max(&x, &params).unwrap()
        };
        assert_eq!(place(2), place(6));
    }

    #[test]
    fn cnn_encode_shapes() {
        let params = CnnParams::<f64> {
            conv: ConvParams {
                filters: 2,
                width: 3,
                w: vec![0.1; 12],
                b: vec![0.0, 0.0],
            },
            dense_w: vec![1.0, 1.0, -1.0, -1.0, 0.5, 0.5],
            dense_b: vec![0.0; 3],
            dropout: 0.75,
        };
        let x = vec![vec![1.0, 1.0]; 6];
        let out = cnn_encode(&x, &params, None).unwrap();
        assert_eq!(out.len(), 3);
        assert!((out[0] - 1.2).abs() < 1e-12);
        assert_eq!(out[1], 0.0);
    }
}
