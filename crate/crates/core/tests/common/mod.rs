//! Brute-force oracles and stub components shared by the integration tests.
#![allow(dead_code)]

pub mod checks;
pub mod gradcheck;

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sugmine::corpus::{FoldSplit, Label, LabeledDataset};
use sugmine::eval::{metrics_from_confusion, ClassMetrics, Confusion, FoldOutcome, FoldRunner};
use sugmine::model::Prediction;
use sugmine::selftrain::{Example, PoolItem, SelfTrainLearner};

/// Top-`k` n-grams by count, ties lexicographic, found by comparing every
/// window against every other.
pub fn brute_vocab(seqs: &[Vec<String>], n: usize, k: usize) -> Vec<String> {
    let mut windows: Vec<Vec<String>> = Vec::new();
    for s in seqs {
        if s.len() < n {
            continue;
        }
        for i in 0..=s.len() - n {
            windows.push(s[i..i + n].to_vec());
        }
    }
    let mut counted: Vec<(usize, String)> = Vec::new();
    for (i, w) in windows.iter().enumerate() {
        if windows[..i].contains(w) {
            continue;
        }
        let count = windows.iter().filter(|o| *o == w).count();
        counted.push((count, w.join(" ")));
    }
    counted.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    counted.into_iter().take(k).map(|(_, g)| g).collect()
}

/// Same-padded convolution then max over positions, as nested loops.
/// `w[f]` holds `width * dim` weights, position-major.
pub fn naive_conv_max(x: &[Vec<f64>], width: usize, w: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let dim = x[0].len();
    let left = (width - 1) / 2;
    let mut out = Vec::new();
    for f in 0..b.len() {
        let mut best = f64::NEG_INFINITY;
        for t in 0..x.len() {
            let mut z = b[f];
            for k in 0..width {
                let p = t as i64 + k as i64 - left as i64;
                if p < 0 || p >= x.len() as i64 {
                    continue;
                }
                for d in 0..dim {
                    z += w[f][k * dim + d] * x[p as usize][d];
                }
            }
            if z > best {
                best = z;
            }
        }
        out.push(best);
    }
    out
}

/// Feed-forward attention written out step by step: scores, softmax over
/// the first `len` states, weighted sum. Returns (weights padded to
/// `states.len()`, pooled).
pub fn naive_attention(
    states: &[Vec<f64>],
    len: usize,
    w: &[Vec<f64>],
    b: &[f64],
    v: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let mut scores = Vec::new();
    for h in &states[..len] {
        let mut e = 0.0;
        for a in 0..b.len() {
            let mut u = b[a];
            for (j, hj) in h.iter().enumerate() {
                u += w[a][j] * hj;
            }
            e += v[a] * u.tanh();
        }
        scores.push(e);
    }
    let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    let mut weights: Vec<f64> = exps.iter().map(|e| e / z).collect();
    let mut pooled = vec![0.0; states[0].len()];
    for (h, a) in states.iter().zip(&weights) {
        for (p, x) in pooled.iter_mut().zip(h) {
            *p += a * x;
        }
    }
    weights.resize(states.len(), 0.0);
    (weights, pooled)
}

/// Per class: items whose predicted class it is, sorted by that class's
/// probability (descending) then id, first `k` ids.
pub fn sort_select(items: &[(String, f64)], k: usize) -> (Vec<String>, Vec<String>) {
    let mut pos: Vec<(f64, String)> = Vec::new();
    let mut neg: Vec<(f64, String)> = Vec::new();
    for (id, p1) in items {
        let p0 = 1.0 - p1;
        if *p1 > p0 {
            pos.push((*p1, id.clone()));
        } else {
            neg.push((p0, id.clone()));
        }
    }
    let order = |v: &mut Vec<(f64, String)>| {
        v.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        v.iter().take(k).map(|(_, id)| id.clone()).collect::<Vec<_>>()
    };
    (order(&mut pos), order(&mut neg))
}

/// Textbook P/R/F1 for one class given its tp, fp, fn (0 when undefined).
pub fn textbook_prf(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let r = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

/// (P, R, F1) for suggestive, non-suggestive and the macro means.
pub fn recompute(c: &Confusion) -> [(f64, f64, f64); 3] {
    let s = textbook_prf(c.tp, c.fp, c.fn_);
    let n = textbook_prf(c.tn, c.fn_, c.fp);
    let m = ((s.0 + n.0) / 2.0, (s.1 + n.1) / 2.0, (s.2 + n.2) / 2.0);
    [s, n, m]
}

pub fn metrics_match(m: &ClassMetrics, tol: f64) -> bool {
    let [s, n, mac] = recompute(&m.confusion);
    let pairs = [
        (s.0, m.suggestive.precision),
        (s.1, m.suggestive.recall),
        (s.2, m.suggestive.f1),
        (n.0, m.non_suggestive.precision),
        (n.1, m.non_suggestive.recall),
        (n.2, m.non_suggestive.f1),
        (mac.0, m.macro_precision),
        (mac.1, m.macro_recall),
        (mac.2, m.macro_f1),
    ];
    pairs.iter().all(|(a, b)| (a - b).abs() <= tol)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

pub fn dataset(labels: &[Label]) -> LabeledDataset {
    LabeledDataset::new(
        labels
            .iter()
            .enumerate()
            .map(|(i, &label)| sugmine::corpus::LabeledSentence {
                id: format!("s{i:05}"),
                text: format!("sentence {i}"),
                label,
            })
            .collect(),
    )
    .unwrap()
}

/// Learner whose inputs are suggestive probabilities and whose validation
/// macro F1 for iteration `i` is `f1[i - 1]`.
pub struct InjectedF1 {
    pub f1: Vec<f64>,
}

impl SelfTrainLearner for InjectedF1 {
    type Input = f64;
    type Model = usize;

    fn train(&self, iteration: usize, _: &[Example<f64>], _: &[Example<f64>]) -> sugmine::Result<usize> {
        Ok(iteration)
    }

    fn predict(&self, _: &usize, inputs: &[&f64]) -> sugmine::Result<Vec<Prediction>> {
        Ok(inputs.iter().map(|&&p| Prediction::from_probs([1.0 - p, p])).collect())
    }

    fn validate(&self, model: &usize, _: &[Example<f64>]) -> sugmine::Result<ClassMetrics> {
        let mut m = metrics_from_confusion(Confusion {
            tp: 1,
            fp: 0,
            fn_: 0,
            tn: 1,
        });
        m.macro_f1 = self.f1[*model - 1];
        Ok(m)
    }
}

pub fn stub_labeled(n: usize) -> Vec<Example<f64>> {
    (0..n)
        .map(|i| Example {
            id: format!("l{i:04}"),
            input: 0.5,
            label: if i % 2 == 0 { Label::Suggestive } else { Label::NonSuggestive },
            pseudo: false,
        })
        .collect()
}

/// `n_pos` items scored as suggestive and `n_neg` as not, with distinct scores.
pub fn stub_pool(n_pos: usize, n_neg: usize) -> Vec<PoolItem<f64>> {
    let mut out = Vec::new();
    for i in 0..n_pos {
        out.push(PoolItem {
            id: format!("p{i:05}"),
            input: 0.51 + 0.48 * (i as f64 + 1.0) / (n_pos as f64 + 1.0),
        });
    }
    for i in 0..n_neg {
        out.push(PoolItem {
            id: format!("n{i:05}"),
            input: 0.01 + 0.48 * (i as f64 + 1.0) / (n_neg as f64 + 1.0),
        });
    }
    out
}

/// Predicts one fixed label for every test sentence.
pub struct ConstantRunner(pub Label);

impl FoldRunner for ConstantRunner {
    fn run_fold(&self, dataset: &LabeledDataset, fold: &FoldSplit) -> sugmine::Result<FoldOutcome> {
        let gold: Vec<Label> = dataset.select(&fold.test_ids)?.iter().map(|s| s.label).collect();
        let predicted = vec![self.0; gold.len()];
        Ok(FoldOutcome {
            metrics: sugmine::eval::prf_metrics(&predicted, &gold)?,
            selftrain: None,
        })
    }
}

/// Predicts from a hash of the sentence id: deterministic, imperfect.
pub struct HashRunner;

impl FoldRunner for HashRunner {
    fn run_fold(&self, dataset: &LabeledDataset, fold: &FoldSplit) -> sugmine::Result<FoldOutcome> {
        let test = dataset.select(&fold.test_ids)?;
        let gold: Vec<Label> = test.iter().map(|s| s.label).collect();
        let predicted: Vec<Label> = test
            .iter()
            .map(|s| {
                let h = sugmine::seed::sub_seed(0, &[&s.id]);
                if h.is_multiple_of(3) { s.label } else if h.is_multiple_of(2) { Label::Suggestive } else { Label::NonSuggestive }
            })
            .collect();
        Ok(FoldOutcome {
            metrics: sugmine::eval::prf_metrics(&predicted, &gold)?,
            selftrain: None,
        })
    }
}

/// Positive count per fold's test part.
pub fn test_positives(ds: &LabeledDataset, folds: &[FoldSplit]) -> BTreeMap<usize, (usize, usize)> {
    folds
        .iter()
        .map(|f| {
            let pos = ds.select(&f.test_ids).unwrap().iter().filter(|s| s.label.is_positive()).count();
            (f.fold_index, (pos, f.test_ids.len()))
        })
        .collect()
}
