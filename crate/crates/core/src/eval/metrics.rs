use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

/// 2x2 counts with class 1 (suggestive) as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn add(&mut self, other: &Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Per-class and macro-averaged precision, recall and F1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub suggestive: ClassScores,
    pub non_suggestive: ClassScores,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub confusion: Confusion,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn scores(tp: usize, fp: usize, fn_: usize) -> ClassScores {
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    ClassScores {
        precision,
        recall,
        f1,
        support: tp + fn_,
    }
}

/// Undefined ratios count as 0.
pub fn metrics_from_confusion(c: Confusion) -> ClassMetrics {
    let suggestive = scores(c.tp, c.fp, c.fn_);
    let non_suggestive = scores(c.tn, c.fn_, c.fp);
    ClassMetrics {
        suggestive,
        non_suggestive,
        macro_precision: (suggestive.precision + non_suggestive.precision) / 2.0,
        macro_recall: (suggestive.recall + non_suggestive.recall) / 2.0,
        macro_f1: (suggestive.f1 + non_suggestive.f1) / 2.0,
        confusion: c,
    }
}

pub fn prf_metrics(predicted: &[Label], gold: &[Label]) -> Result<ClassMetrics> {
    if predicted.len() != gold.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for {} gold labels",
            predicted.len(),
            gold.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut c = Confusion::default();
    for (p, g) in predicted.iter().zip(gold) {
        match (p.is_positive(), g.is_positive()) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(metrics_from_confusion(c))
}
