//! Central finite differences against the analytic gradient, in f64 with
//! dropout disabled.

use sugmine::corpus::Label;
use sugmine::embed::{encode, EmbeddingTable};
use sugmine::lexfeat::LinguisticFeatureVector;
use sugmine::model::{HybridModel, ModelConfig, SentenceInput, Variant};

const WORDS: [(&str, [f64; 3]); 4] = [
    ("go", [0.5, -0.2, 0.1]),
    ("there", [-0.3, 0.8, 0.05]),
    ("early", [0.9, 0.1, -0.4]),
    ("rooms", [0.2, 0.3, 0.7]),
];

fn table(bump: Option<(usize, usize, f64)>) -> EmbeddingTable<f64> {
    EmbeddingTable::from_rows(
        3,
        WORDS.iter().enumerate().map(|(i, (w, v))| {
            let mut v = v.to_vec();
            if let Some((row, col, h)) = bump {
                if row == i + 2 {
                    v[col] += h;
                }
            }
            (*w, v)
        }),
    )
    .unwrap()
}

fn config(variant: Variant, bidirectional: bool) -> ModelConfig {
    ModelConfig {
        variant,
        max_len: 6,
        cnn_filters: 3,
        cnn_width: 3,
        cnn_dense: 4,
        cnn_dropout: 0.0,
        lstm_hidden: 3,
        bidirectional,
        attention_dim: Some(2),
        rnn_dense: vec![4, 2],
        rnn_dropout: 0.0,
        ling_hidden: vec![3, 2],
        ling_dropout: 0.0,
        positive_weight: 3.0,
        fine_tune_embeddings: true,
        seed: 11,
        ..ModelConfig::default()
    }
}

fn inputs(t: &EmbeddingTable<f64>) -> Vec<(SentenceInput, Label)> {
    let mk = |words: &[&str], feats: Vec<u8>| SentenceInput {
        sequence: encode(words, t, 6),
        features: LinguisticFeatureVector {
            values: feats,
            schema_id: "s".into(),
        },
    };
    vec![
        (mk(&["go", "there", "early"], vec![1, 0, 1, 0, 0]), Label::Suggestive),
        (mk(&["rooms", "early", "zzz", "go"], vec![0, 1, 0, 0, 1]), Label::NonSuggestive),
        (mk(&["there"], vec![0, 0, 0, 1, 0]), Label::NonSuggestive),
    ]
}

fn loss(model: &HybridModel<f64>, t: &EmbeddingTable<f64>) -> f64 {
    let data = inputs(t);
    let batch: Vec<(&SentenceInput, Label)> = data.iter().map(|(x, l)| (x, *l)).collect();
    model.loss_and_gradient(t, &batch, None).unwrap().0
}

fn close(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= 1e-5 + 1e-4 * analytic.abs().max(numeric.abs())
}

/// Finite-difference mismatches over every dense parameter and embedding
/// entry, plus the largest relative error seen among entries above 1e-7.
pub fn check(variant: Variant, bidirectional: bool) -> (Vec<String>, f64) {
    let t = table(None);
    let mut model = HybridModel::<f64>::new(config(variant, bidirectional), 3, 5, "s", "e").unwrap();
    // Zero-initialised biases put pure-padding conv windows exactly on the
    // ReLU kink; shift every parameter off it.
    for (i, p) in model.params_mut().iter_mut().enumerate() {
        *p += 0.03 * (i as f64 * 0.7).sin();
    }
    let data = inputs(&t);
    let batch: Vec<(&SentenceInput, Label)> = data.iter().map(|(x, l)| (x, *l)).collect();
    let (_, grads) = model.loss_and_gradient(&t, &batch, None).unwrap();
    let h = 1e-6;
    let mut bad = Vec::new();
    let mut worst = 0.0f64;
    let mut note = |a: f64, n: f64, what: String, bad: &mut Vec<String>| {
        let scale = a.abs().max(n.abs());
        if scale > 1e-7 {
            worst = worst.max((a - n).abs() / scale);
        }
        if !close(a, n) {
            bad.push(format!("{what}: {a} vs {n}"));
        }
    };
    for i in 0..model.params().len() {
        let orig = model.params()[i];
        model.params_mut()[i] = orig + h;
        let up = loss(&model, &t);
        model.params_mut()[i] = orig - h;
        let down = loss(&model, &t);
        model.params_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        note(grads.dense[i], numeric, format!("{variant} param {i}"), &mut bad);
    }

    let embedding_expected = variant.uses_cnn() || variant.rnn_pooling().is_some();
    if grads.embedding.is_empty() == embedding_expected {
        bad.push(format!("{variant} embedding gradient presence"));
    }
    for row in 2..2 + WORDS.len() {
        for col in 0..3 {
            let numeric = (loss(&model, &table(Some((row, col, h))))
                - loss(&model, &table(Some((row, col, -h)))))
                / (2.0 * h);
            let analytic = grads.embedding.get(&row).map_or(0.0, |g| g[col]);
            note(analytic, numeric, format!("{variant} embedding {row}.{col}"), &mut bad);
        }
    }
    (bad, worst)
}
