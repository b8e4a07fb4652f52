use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which encoders feed the fusion head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Hybrid,
    CnnOnly,
    LstmOnly,
    LstmAttention,
    HybridMinusCnn,
    HybridMinusRnn,
    HybridMinusLinguistic,
}

/// Recurrent-branch pooling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RnnPooling {
    Attention,
    LastState,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Hybrid,
        Variant::CnnOnly,
        Variant::LstmOnly,
        Variant::LstmAttention,
        Variant::HybridMinusCnn,
        Variant::HybridMinusRnn,
        Variant::HybridMinusLinguistic,
    ];

    pub const ABLATIONS: [Variant; 4] = [
        Variant::Hybrid,
        Variant::HybridMinusCnn,
        Variant::HybridMinusRnn,
        Variant::HybridMinusLinguistic,
    ];

    pub fn uses_cnn(self) -> bool {
        matches!(
            self,
            Variant::Hybrid
                | Variant::CnnOnly
                | Variant::HybridMinusRnn
                | Variant::HybridMinusLinguistic
        )
    }

    pub fn rnn_pooling(self) -> Option<RnnPooling> {
        match self {
            Variant::LstmOnly => Some(RnnPooling::LastState),
            Variant::Hybrid
            | Variant::LstmAttention
            | Variant::HybridMinusCnn
            | Variant::HybridMinusLinguistic => Some(RnnPooling::Attention),
            Variant::CnnOnly | Variant::HybridMinusRnn => None,
        }
    }

    pub fn uses_linguistic(self) -> bool {
        matches!(
            self,
            Variant::Hybrid | Variant::HybridMinusCnn | Variant::HybridMinusRnn
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Hybrid => "hybrid",
            Variant::CnnOnly => "cnn_only",
            Variant::LstmOnly => "lstm_only",
            Variant::LstmAttention => "lstm_attention",
            Variant::HybridMinusCnn => "hybrid_minus_cnn",
            Variant::HybridMinusRnn => "hybrid_minus_rnn",
            Variant::HybridMinusLinguistic => "hybrid_minus_linguistic",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown variant {s:?}")))
    }
}

/// Architecture and optimisation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub variant: Variant,
    pub max_len: usize,
    pub cnn_filters: usize,
    pub cnn_width: usize,
    pub cnn_dense: usize,
    pub cnn_dropout: f64,
    pub lstm_hidden: usize,
    pub bidirectional: bool,
    /// Attention projection width; `None` means `lstm_hidden`.
    pub attention_dim: Option<usize>,
    pub rnn_dense: Vec<usize>,
    pub rnn_dropout: f64,
    pub ling_hidden: Vec<usize>,
    pub ling_dropout: f64,
    pub positive_weight: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub fine_tune_embeddings: bool,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            variant: Variant::Hybrid,
            max_len: 60,
            cnn_filters: 250,
            cnn_width: 5,
            cnn_dense: 250,
            cnn_dropout: 0.75,
            lstm_hidden: 64,
            bidirectional: false,
            attention_dim: None,
            rnn_dense: vec![150, 25],
            rnn_dropout: 0.2,
            ling_hidden: vec![150, 25],
            ling_dropout: 0.2,
            positive_weight: 10.0,
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 50,
            patience: 3,
            fine_tune_embeddings: false,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn attention_width(&self) -> usize {
        self.attention_dim.unwrap_or(self.lstm_hidden)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("max_len", self.max_len),
            ("cnn_filters", self.cnn_filters),
            ("cnn_width", self.cnn_width),
            ("cnn_dense", self.cnn_dense),
            ("lstm_hidden", self.lstm_hidden),
            ("attention_dim", self.attention_width()),
            ("batch_size", self.batch_size),
            ("max_epochs", self.max_epochs),
            ("patience", self.patience),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        for (name, widths) in [("rnn_dense", &self.rnn_dense), ("ling_hidden", &self.ling_hidden)] {
            if widths.is_empty() || widths.contains(&0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must list at least one positive width"
                )));
            }
        }
        for (name, p) in [
            ("cnn_dropout", self.cnn_dropout),
            ("rnn_dropout", self.rnn_dropout),
            ("ling_dropout", self.ling_dropout),
        ] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("{name} must lie in [0, 1)")));
            }
        }
        if !(self.positive_weight > 0.0 && self.positive_weight.is_finite()) {
            return Err(Error::InvalidArgument("positive_weight must be > 0".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning_rate must be > 0".into()));
        }
        Ok(())
    }

    /// Output width of each active branch, in fusion order (cnn, rnn, linguistic).
    pub fn fusion_width(&self) -> usize {
        let v = self.variant;
        let cnn = if v.uses_cnn() { self.cnn_dense } else { 0 };
        let rnn = if v.rnn_pooling().is_some() {
            *self.rnn_dense.last().expect("validated")
        } else {
            0
        };
        let ling = if v.uses_linguistic() {
            *self.ling_hidden.last().expect("validated")
        } else {
            0
        };
        cnn + rnn + ling
    }
}
