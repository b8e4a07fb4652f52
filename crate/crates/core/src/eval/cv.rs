use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::ClassMetrics;
use crate::corpus::{make_folds_with_validation, FoldSplit, LabeledDataset, DEFAULT_VALIDATION_FRACTION};
use crate::error::{Error, Result};
use crate::model::Variant;
use crate::selftrain::SelfTrainRun;

/// Trains and tests one fold.
pub trait FoldRunner: Sync {
    fn run_fold(&self, dataset: &LabeledDataset, fold: &FoldSplit) -> Result<FoldOutcome>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub metrics: ClassMetrics,
    pub selftrain: Option<SelfTrainRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold_index: usize,
    pub train_size: usize,
    pub validation_size: usize,
    pub test_size: usize,
    pub metrics: ClassMetrics,
    pub selftrain: Option<SelfTrainRun>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    /// Sample standard deviation (n - 1); 0 for a single value.
    pub sd: f64,
}

pub fn mean_sd(values: &[f64]) -> MeanSd {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    MeanSd { mean, sd }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub macro_precision: MeanSd,
    pub macro_recall: MeanSd,
    pub macro_f1: MeanSd,
    pub suggestive_precision: MeanSd,
    pub suggestive_recall: MeanSd,
    pub suggestive_f1: MeanSd,
}

impl CvSummary {
    pub fn from_folds(folds: &[FoldResult]) -> Self {
        let of = |f: fn(&ClassMetrics) -> f64| {
            mean_sd(&folds.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>())
        };
        CvSummary {
            macro_precision: of(|m| m.macro_precision),
            macro_recall: of(|m| m.macro_recall),
            macro_f1: of(|m| m.macro_f1),
            suggestive_precision: of(|m| m.suggestive.precision),
            suggestive_recall: of(|m| m.suggestive.recall),
            suggestive_f1: of(|m| m.suggestive.f1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<FoldResult>,
    pub summary: CvSummary,
}

impl CvResult {
    pub fn fold_macro_f1(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.metrics.macro_f1).collect()
    }
}

/// Run `f` on a pool of `jobs` threads (0 = rayon's default).
pub fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Stratified k-fold cross-validation; folds run in parallel on `jobs` threads.
pub fn cross_validate<R: FoldRunner>(
    dataset: &LabeledDataset,
    runner: &R,
    k: usize,
    seed: u64,
    jobs: usize,
) -> Result<CvResult> {
    let splits = make_folds_with_validation(dataset, k, seed, DEFAULT_VALIDATION_FRACTION)?;
    cross_validate_splits(dataset, runner, &splits, seed, jobs)
}

pub fn cross_validate_splits<R: FoldRunner>(
    dataset: &LabeledDataset,
    runner: &R,
    splits: &[FoldSplit],
    seed: u64,
    jobs: usize,
) -> Result<CvResult> {
    let outcomes: Vec<Result<FoldOutcome>> = with_jobs(jobs, || {
        splits.par_iter().map(|s| runner.run_fold(dataset, s)).collect()
    })?;
    let mut folds = Vec::with_capacity(splits.len());
    for (split, outcome) in splits.iter().zip(outcomes) {
        let outcome = outcome.map_err(|e| Error::Fold {
            fold: split.fold_index,
            source: Box::new(e),
        })?;
        folds.push(FoldResult {
            fold_index: split.fold_index,
            train_size: split.train_ids.len(),
            validation_size: split.validation_ids.len(),
            test_size: split.test_ids.len(),
            metrics: outcome.metrics,
            selftrain: outcome.selftrain,
        });
    }
    Ok(CvResult {
        k: splits.len(),
        seed,
        summary: CvSummary::from_folds(&folds),
        folds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: Variant,
    pub result: CvResult,
}

/// Cross-validate each variant on identical folds.
pub fn run_ablation<R: FoldRunner>(
    dataset: &LabeledDataset,
    variants: &[Variant],
    make_runner: impl Fn(Variant) -> Result<R>,
    k: usize,
    seed: u64,
    jobs: usize,
) -> Result<Vec<AblationRow>> {
    let splits = make_folds_with_validation(dataset, k, seed, DEFAULT_VALIDATION_FRACTION)?;
    variants
        .iter()
        .map(|&variant| {
            let runner = make_runner(variant)?;
            Ok(AblationRow {
                variant,
                result: cross_validate_splits(dataset, &runner, &splits, seed, jobs)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_sd() {
        let s = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_sd(&[0.7]).sd, 0.0);
    }
}
