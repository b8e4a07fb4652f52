//! Mini-batch Adam training with early stopping on validation loss.

use std::collections::BTreeMap;

use log::debug;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::loss::weighted_loss;
use super::network::{Gradients, HybridModel, SentenceInput};
use crate::corpus::Label;
use crate::embed::EmbeddingTable;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed;

/// Adam with Keras' default moment decay and epsilon.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: i32,
    m: Vec<T>,
    v: Vec<T>,
    row_m: BTreeMap<usize, Vec<T>>,
    row_v: BTreeMap<usize, Vec<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(learning_rate: f64, n_params: usize) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
            step: 0,
            m: vec![T::zero(); n_params],
            v: vec![T::zero(); n_params],
            row_m: BTreeMap::new(),
            row_v: BTreeMap::new(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn update(
        params: &mut [T],
        grads: &[T],
        m: &mut [T],
        v: &mut [T],
        b1: T,
        b2: T,
        step_size: T,
        eps: T,
    ) {
        let one = T::one();
        for i in 0..params.len() {
            let g = grads[i];
            m[i] = b1 * m[i] + (one - b1) * g;
            v[i] = b2 * v[i] + (one - b2) * g * g;
            params[i] -= step_size * m[i] / (v[i].sqrt() + eps);
        }
    }

    /// One update. Embedding rows are updated lazily (only rows with a
    /// gradient this step), starting from the frozen table's values.
    pub fn step(
        &mut self,
        params: &mut [T],
        tuned: &mut BTreeMap<usize, Vec<T>>,
        table: &EmbeddingTable<T>,
        grads: &Gradients<T>,
    ) {
        self.step += 1;
        let t = self.step;
        let correction = (1.0 - self.beta2.powi(t)).sqrt() / (1.0 - self.beta1.powi(t));
        let step_size = T::lit(self.learning_rate * correction);
        let (b1, b2, eps) = (T::lit(self.beta1), T::lit(self.beta2), T::lit(self.epsilon));
        Self::update(params, &grads.dense, &mut self.m, &mut self.v, b1, b2, step_size, eps);
        let dim = table.dim();
        for (&row, g) in &grads.embedding {
            let p = tuned.entry(row).or_insert_with(|| table.row(row).to_vec());
            let m = self.row_m.entry(row).or_insert_with(|| vec![T::zero(); dim]);
            let v = self.row_v.entry(row).or_insert_with(|| vec![T::zero(); dim]);
            Self::update(p, g, m, v, b1, b2, step_size, eps);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Improved,
    Stalled,
    /// Stalled for `patience` consecutive observations.
    Stop,
}

/// Patience-based stopping rule; only strict improvements reset the counter.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    direction: Direction,
    patience: usize,
    best: Option<(usize, f64)>,
    stalled: usize,
}

impl EarlyStopping {
    pub fn new(direction: Direction, patience: usize) -> Self {
        EarlyStopping {
            direction,
            patience,
            best: None,
            stalled: 0,
        }
    }

    pub fn observe(&mut self, step: usize, value: f64) -> Verdict {
        let better = match (self.best, self.direction) {
            (None, _) => true,
            (Some((_, b)), Direction::Minimize) => value < b,
            (Some((_, b)), Direction::Maximize) => value > b,
        };
        if better {
            self.best = Some((step, value));
            self.stalled = 0;
            Verdict::Improved
        } else {
            self.stalled += 1;
            if self.stalled >= self.patience {
                Verdict::Stop
            } else {
                Verdict::Stalled
            }
        }
    }

    pub fn best(&self) -> Option<(usize, f64)> {
        self.best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_validation_loss: f64,
    pub stopped_early: bool,
}

/// Drive epochs until the validation loss stalls for `patience` epochs.
/// `run_epoch(e)` returns `(train_loss, validation_loss, snapshot)`; the
/// snapshot from the best epoch is returned.
pub fn run_with_early_stopping<S>(
    max_epochs: usize,
    patience: usize,
    mut run_epoch: impl FnMut(usize) -> Result<(f64, f64, S)>,
) -> Result<(S, TrainingHistory)> {
    let mut stopper = EarlyStopping::new(Direction::Minimize, patience);
    let mut best_state = None;
    let mut epochs = Vec::new();
    let mut stopped_early = false;
    for epoch in 1..=max_epochs {
        let (train_loss, validation_loss, state) = run_epoch(epoch)?;
        if !validation_loss.is_finite() {
            return Err(Error::Divergence(format!(
                "validation loss {validation_loss} at epoch {epoch}"
            )));
        }
        epochs.push(EpochRecord {
            epoch,
            train_loss,
            validation_loss,
        });
        match stopper.observe(epoch, validation_loss) {
            Verdict::Improved => best_state = Some(state),
            Verdict::Stalled => {}
            Verdict::Stop => {
                stopped_early = epoch < max_epochs;
                break;
            }
        }
    }
    let (best_epoch, best_validation_loss) = stopper
        .best()
        .ok_or_else(|| Error::InvalidArgument("max_epochs must be positive".into()))?;
    Ok((
        best_state.expect("an improvement was recorded"),
        TrainingHistory {
            epochs,
            best_epoch,
            best_validation_loss,
            stopped_early,
        },
    ))
}

fn check_both_classes(name: &str, data: &[(&SentenceInput, Label)]) -> Result<()> {
    let pos = data.iter().filter(|(_, l)| l.is_positive()).count();
    if pos == 0 || pos == data.len() {
        return Err(Error::InvalidArgument(format!(
            "{name} split must contain both classes ({pos} of {} positive)",
            data.len()
        )));
    }
    Ok(())
}

/// Validation loss of `model` in inference mode.
pub fn evaluate_loss<T: Scalar>(
    model: &HybridModel<T>,
    table: &EmbeddingTable<T>,
    data: &[(&SentenceInput, Label)],
) -> Result<f64> {
    let inputs: Vec<&SentenceInput> = data.iter().map(|(x, _)| *x).collect();
    let labels: Vec<Label> = data.iter().map(|(_, l)| *l).collect();
    let preds = model.predict_proba(table, &inputs)?;
    let probs: Vec<[f64; 2]> = preds.iter().map(|p| p.prob).collect();
    weighted_loss(&probs, &labels, model.config().positive_weight)
}

/// Train from a fresh initialisation; returns the best-validation-loss model.
pub fn train_supervised<T: Scalar>(
    train: &[(&SentenceInput, Label)],
    validation: &[(&SentenceInput, Label)],
    table: &EmbeddingTable<T>,
    config: &ModelConfig,
    schema_id: &str,
) -> Result<(HybridModel<T>, TrainingHistory)> {
    check_both_classes("training", train)?;
    check_both_classes("validation", validation)?;
    let feature_dim = train[0].0.features.len();
    let mut model = HybridModel::<T>::new(
        config.clone(),
        table.dim(),
        feature_dim,
        schema_id,
        table.fingerprint(),
    )?;
    let mut adam = Adam::new(config.learning_rate, model.params().len());
    let mut order: Vec<usize> = (0..train.len()).collect();

    let ((params, tuned), history) =
        run_with_early_stopping(config.max_epochs, config.patience, |epoch| {
            let epoch_tag = epoch.to_string();
            order.sort_unstable();
            order.shuffle(&mut seed::rng(config.seed, &["shuffle", &epoch_tag]));
            let mut loss_sum = 0.0;
            for (b, idx) in order.chunks(config.batch_size).enumerate() {
                let batch: Vec<(&SentenceInput, Label)> = idx.iter().map(|&i| train[i]).collect();
                let dropout_seed = seed::sub_seed(config.seed, &["dropout", &epoch_tag, &b.to_string()]);
                let (loss, grads) = model.loss_and_gradient(table, &batch, Some(dropout_seed))?;
                let loss = loss.as_f64();
                if !loss.is_finite() {
                    return Err(Error::Divergence(format!(
                        "training loss {loss} at epoch {epoch}, batch {b}"
                    )));
                }
                loss_sum += loss * batch.len() as f64;
                let HybridModel {
                    params,
                    tuned_embeddings,
                    ..
                } = &mut model;
                adam.step(params, tuned_embeddings, table, &grads);
            }
            let train_loss = loss_sum / train.len() as f64;
            let val_loss = evaluate_loss(&model, table, validation)?;
            debug!("epoch {epoch}: train {train_loss:.5} validation {val_loss:.5}");
            Ok((
                train_loss,
                val_loss,
                (model.params().to_vec(), model.tuned_embeddings().clone()),
            ))
        })?;
    model.params_mut().copy_from_slice(&params);
    *model.tuned_embeddings_mut() = tuned;
    Ok((model, history))
}
