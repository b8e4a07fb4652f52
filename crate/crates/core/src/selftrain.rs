//! Self-training: retrain on the labeled set augmented with the pool items
//! the previous model was most confident about, keeping the iteration with
//! the best validation macro F1.

use std::cmp::Ordering;

use log::info;
use serde::{Deserialize, Serialize};

use crate::corpus::{Label, UnlabeledSentence};
use crate::error::{Error, Result};
use crate::eval::{prf_metrics, ClassMetrics};
use crate::model::{Direction, EarlyStopping, ModelConfig, Prediction, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfTrainConfig {
    pub per_class_add: usize,
    pub max_iterations: usize,
    pub patience: usize,
    pub base_model_config: ModelConfig,
}

impl Default for SelfTrainConfig {
    fn default() -> Self {
        SelfTrainConfig {
            per_class_add: 100,
            max_iterations: 6,
            patience: 3,
            base_model_config: ModelConfig::default(),
        }
    }
}

impl SelfTrainConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("per_class_add", self.per_class_add),
            ("max_iterations", self.max_iterations),
            ("patience", self.patience),
        ] {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be at least 1")));
            }
        }
        self.base_model_config.validate()
    }
}

/// A training instance; `pseudo` marks labels assigned by self-training.
#[derive(Debug, Clone, PartialEq)]
pub struct Example<I> {
    pub id: String,
    pub input: I,
    pub label: Label,
    pub pseudo: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolItem<I> {
    pub id: String,
    pub input: I,
}

/// What the loop needs from a classifier.
pub trait SelfTrainLearner {
    type Input: Sync;
    type Model;

    /// Train from a fresh initialisation. `iteration` starts at 1.
    fn train(
        &self,
        iteration: usize,
        labeled: &[Example<Self::Input>],
        validation: &[Example<Self::Input>],
    ) -> Result<Self::Model>;

    fn predict(&self, model: &Self::Model, inputs: &[&Self::Input]) -> Result<Vec<Prediction>>;

    fn validate(&self, model: &Self::Model, validation: &[Example<Self::Input>]) -> Result<ClassMetrics> {
        let inputs: Vec<&Self::Input> = validation.iter().map(|e| &e.input).collect();
        let predicted: Vec<Label> = self.predict(model, &inputs)?.iter().map(|p| p.label).collect();
        let gold: Vec<Label> = validation.iter().map(|e| e.label).collect();
        prf_metrics(&predicted, &gold)
    }
}

/// Indices of the chosen positives and negatives. For each class, items
/// predicted as that class ranked by its probability (descending, ties by
/// ascending id), truncated to `per_class`.
pub fn select_confident_indices(
    ids: &[&str],
    predictions: &[Prediction],
    per_class: usize,
) -> (Vec<usize>, Vec<usize>) {
    assert_eq!(ids.len(), predictions.len());
    let pick = |class: Label| {
        let mut idx: Vec<usize> = (0..ids.len()).filter(|&i| predictions[i].label == class).collect();
        idx.sort_by(|&a, &b| {
            predictions[b]
                .p(class)
                .partial_cmp(&predictions[a].p(class))
                .unwrap_or(Ordering::Equal)
                .then_with(|| ids[a].cmp(ids[b]))
        });
        idx.truncate(per_class);
        idx
    };
    (pick(Label::Suggestive), pick(Label::NonSuggestive))
}

/// Pseudo-positive and pseudo-negative picks from scored pool sentences.
pub fn select_confident(
    pool: &[(UnlabeledSentence, Prediction)],
    per_class: usize,
) -> (Vec<UnlabeledSentence>, Vec<UnlabeledSentence>) {
    let ids: Vec<&str> = pool.iter().map(|(s, _)| s.id.as_str()).collect();
    let preds: Vec<Prediction> = pool.iter().map(|(_, p)| *p).collect();
    let (pos, neg) = select_confident_indices(&ids, &preds, per_class);
    let take = |v: Vec<usize>| v.into_iter().map(|i| pool[i].0.clone()).collect();
    (take(pos), take(neg))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Patience,
    MaxIterations,
    PoolExhausted,
    NothingSelected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Labeled examples the iteration's model was trained on.
    pub train_size: usize,
    pub validation: ClassMetrics,
    pub added_positive: usize,
    pub added_negative: usize,
    pub added_ids: Vec<String>,
    pub pool_remaining: usize,
    /// Labeled-set size after this iteration's additions.
    pub labeled_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfTrainRun {
    pub iterations: Vec<IterationRecord>,
    pub best_iteration: usize,
    pub best_macro_f1: f64,
    pub stop_reason: StopReason,
    /// Where the best model was written, when it was.
    pub best_model: Option<String>,
}

impl SelfTrainRun {
    pub fn best(&self) -> &IterationRecord {
        &self.iterations[self.best_iteration - 1]
    }
}

fn has_both_classes<I>(examples: &[Example<I>]) -> bool {
    let pos = examples.iter().filter(|e| e.label.is_positive()).count();
    pos > 0 && pos < examples.len()
}

/// Run the loop; returns the history and the best iteration's model.
pub fn self_train<L: SelfTrainLearner>(
    learner: &L,
    labeled: Vec<Example<L::Input>>,
    pool: Vec<PoolItem<L::Input>>,
    validation: &[Example<L::Input>],
    config: &SelfTrainConfig,
) -> Result<(SelfTrainRun, L::Model)> {
    config.validate()?;
    if !has_both_classes(&labeled) {
        return Err(Error::InvalidArgument("labeled set must contain both classes".into()));
    }
    if !has_both_classes(validation) {
        return Err(Error::InvalidArgument("validation set must contain both classes".into()));
    }
    let mut labeled = labeled;
    let mut pool = pool;
    let mut stopper = EarlyStopping::new(Direction::Maximize, config.patience);
    let mut best_model = None;
    let mut iterations = Vec::new();
    let mut stop_reason = StopReason::MaxIterations;

    for iteration in 1..=config.max_iterations {
        let train_size = labeled.len();
        let model = learner.train(iteration, &labeled, validation)?;
        let metrics = learner.validate(&model, validation)?;
        let verdict = stopper.observe(iteration, metrics.macro_f1);
        info!(
            "self-training iteration {iteration}: {train_size} labeled, validation macro F1 {:.4}",
            metrics.macro_f1
        );

        let inputs: Vec<&L::Input> = pool.iter().map(|p| &p.input).collect();
        let predictions = if inputs.is_empty() {
            Vec::new()
        } else {
            learner.predict(&model, &inputs)?
        };
        if verdict == Verdict::Improved {
            best_model = Some(model);
        }
        let ids: Vec<&str> = pool.iter().map(|p| p.id.as_str()).collect();
        let (pos, neg) = select_confident_indices(&ids, &predictions, config.per_class_add);
        let mut chosen: Vec<(usize, Label)> = pos
            .iter()
            .map(|&i| (i, Label::Suggestive))
            .chain(neg.iter().map(|&i| (i, Label::NonSuggestive)))
            .collect();
        let added_ids: Vec<String> = chosen.iter().map(|&(i, _)| pool[i].id.clone()).collect();
        chosen.sort_unstable_by_key(|&(i, _)| i);
        let mut taken = Vec::with_capacity(chosen.len());
        for &(i, label) in chosen.iter().rev() {
            taken.push((pool.remove(i), label));
        }
        for (item, label) in taken.into_iter().rev() {
            labeled.push(Example {
                id: item.id,
                input: item.input,
                label,
                pseudo: true,
            });
        }
        iterations.push(IterationRecord {
            iteration,
            train_size,
            validation: metrics,
            added_positive: pos.len(),
            added_negative: neg.len(),
            added_ids,
            pool_remaining: pool.len(),
            labeled_size: labeled.len(),
        });

        if verdict == Verdict::Stop {
            stop_reason = StopReason::Patience;
            break;
        }
        if iteration == config.max_iterations {
            break;
        }
        if pool.is_empty() {
            stop_reason = StopReason::PoolExhausted;
            break;
        }
        if pos.is_empty() && neg.is_empty() {
            stop_reason = StopReason::NothingSelected;
            break;
        }
    }
    let (best_iteration, best_macro_f1) = stopper.best().expect("at least one iteration ran");
    let run = SelfTrainRun {
        iterations,
        best_iteration,
        best_macro_f1,
        stop_reason,
        best_model: None,
    };
    Ok((run, best_model.expect("best iteration kept its model")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pred(p1: f64) -> Prediction {
        Prediction::from_probs([1.0 - p1, p1])
    }

    #[test]
    fn picks_extremes() {
        let pool: Vec<(UnlabeledSentence, Prediction)> = [0.9, 0.6, 0.2]
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                (
                    UnlabeledSentence {
                        id: format!("u{i}"),
                        text: "x".into(),
                    },
                    pred(p),
                )
            })
            .collect();
        let (pos, neg) = select_confident(&pool, 1);
        assert_eq!(pos[0].id, "u0");
        assert_eq!(neg[0].id, "u2");

        let (pos, neg) = select_confident(&pool[2..], 5);
        assert!(pos.is_empty());
        assert_eq!(neg.len(), 1);
        assert_eq!(select_confident(&[], 3), (vec![], vec![]));
    }

    #[test]
    fn ties_break_by_id() {
        let ids = ["b", "a", "c"];
        let preds = [pred(0.8), pred(0.8), pred(0.7)];
        let (pos, _) = select_confident_indices(&ids, &preds, 2);
        assert_eq!(pos, vec![1, 0]);
    }

    #[test]
    fn config_bounds() {
        assert!(SelfTrainConfig::default().validate().is_ok());
        let c = SelfTrainConfig {
            patience: 0,
            ..SelfTrainConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
