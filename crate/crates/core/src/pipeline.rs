//! Glue between parsed corpora and the hybrid model: per-fold schema fitting,
//! input encoding, and the learner and fold-runner implementations.

use std::collections::HashMap;

use crate::annotate::{annotate_all, Annotator, ParsedSentence};
use crate::corpus::{FoldSplit, Label, LabeledDataset, UnlabeledPool};
use crate::embed::{encode, EmbeddingTable};
use crate::error::{Error, Result};
use crate::eval::{prf_metrics, ClassMetrics, FoldOutcome, FoldRunner};
use crate::lexfeat::{fit_schema_with, Extractor, FeatureSchema, SchemaConfig};
use crate::model::{train_supervised, HybridModel, ModelConfig, Prediction, SentenceInput, TrainingHistory};
use crate::scalar::Scalar;
use crate::seed;
use crate::selftrain::{self_train, Example, PoolItem, SelfTrainConfig, SelfTrainLearner, SelfTrainRun};

/// Parses keyed by sentence id.
#[derive(Debug, Clone, Default)]
pub struct ParsedCorpus {
    by_id: HashMap<String, ParsedSentence>,
    order: Vec<String>,
}

impl ParsedCorpus {
    pub fn from_parses(parses: Vec<ParsedSentence>) -> Self {
        let order = parses.iter().map(|p| p.source_id.clone()).collect();
        let by_id = parses.into_iter().map(|p| (p.source_id.clone(), p)).collect();
        ParsedCorpus { by_id, order }
    }

    pub fn annotate_dataset(dataset: &LabeledDataset, backend: &dyn Annotator) -> Result<Self> {
        let items = dataset.sentences().iter().map(|s| (s.id.as_str(), s.text.as_str()));
        Ok(Self::from_parses(annotate_all(items, backend)?))
    }

    pub fn annotate_pool(pool: &UnlabeledPool, backend: &dyn Annotator) -> Result<Self> {
        let items = pool.sentences.iter().map(|s| (s.id.as_str(), s.text.as_str()));
        Ok(Self::from_parses(annotate_all(items, backend)?))
    }

    pub fn get(&self, id: &str) -> Result<&ParsedSentence> {
        self.by_id
            .get(id)
            .ok_or_else(|| Error::Annotation(format!("no parse for sentence {id}")))
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Parses in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = &ParsedSentence> {
        self.order.iter().map(|id| &self.by_id[id])
    }
}

/// Fit a feature schema on the parses of `ids` only.
pub fn fit_schema_on(corpus: &ParsedCorpus, ids: &[String], config: &SchemaConfig) -> Result<FeatureSchema> {
    let parses: Vec<ParsedSentence> = ids
        .iter()
        .map(|id| corpus.get(id).cloned())
        .collect::<Result<_>>()?;
    fit_schema_with(&parses, config)
}

/// Encode a parse into model input under `schema`.
pub fn sentence_input<T: Scalar>(
    parsed: &ParsedSentence,
    extractor: &Extractor<'_>,
    table: &EmbeddingTable<T>,
    max_len: usize,
) -> SentenceInput {
    let words: Vec<&str> = parsed.words().collect();
    SentenceInput {
        sequence: encode(&words, table, max_len),
        features: extractor.extract(parsed),
    }
}

/// Labeled examples for `ids`, with gold labels from `dataset`.
pub fn examples_for<T: Scalar>(
    dataset: &LabeledDataset,
    corpus: &ParsedCorpus,
    ids: &[String],
    extractor: &Extractor<'_>,
    table: &EmbeddingTable<T>,
    max_len: usize,
) -> Result<Vec<Example<SentenceInput>>> {
    dataset
        .select(ids)?
        .into_iter()
        .map(|s| {
            Ok(Example {
                id: s.id.clone(),
                input: sentence_input(corpus.get(&s.id)?, extractor, table, max_len),
                label: s.label,
                pseudo: false,
            })
        })
        .collect()
}

pub fn pool_items<T: Scalar>(
    pool: &ParsedCorpus,
    extractor: &Extractor<'_>,
    table: &EmbeddingTable<T>,
    max_len: usize,
) -> Vec<PoolItem<SentenceInput>> {
    pool.iter()
        .map(|p| PoolItem {
            id: p.source_id.clone(),
            input: sentence_input(p, extractor, table, max_len),
        })
        .collect()
}

/// The hybrid classifier as a self-training learner. Each iteration trains
/// from an initialisation drawn from its own sub-seed.
pub struct HybridLearner<'a, T> {
    pub table: &'a EmbeddingTable<T>,
    pub config: ModelConfig,
    pub schema_id: String,
}

impl<T: Scalar> HybridLearner<'_, T> {
    pub fn fit(
        &self,
        iteration: usize,
        labeled: &[Example<SentenceInput>],
        validation: &[Example<SentenceInput>],
    ) -> Result<(HybridModel<T>, TrainingHistory)> {
        let config = ModelConfig {
            seed: seed::sub_seed(self.config.seed, &["iteration", &iteration.to_string()]),
            ..self.config.clone()
        };
        train_supervised(&pairs(labeled), &pairs(validation), self.table, &config, &self.schema_id)
    }
}

fn pairs(xs: &[Example<SentenceInput>]) -> Vec<(&SentenceInput, Label)> {
    xs.iter().map(|e| (&e.input, e.label)).collect()
}

impl<T: Scalar> SelfTrainLearner for HybridLearner<'_, T> {
    type Input = SentenceInput;
    type Model = HybridModel<T>;

    fn train(
        &self,
        iteration: usize,
        labeled: &[Example<SentenceInput>],
        validation: &[Example<SentenceInput>],
    ) -> Result<HybridModel<T>> {
        Ok(self.fit(iteration, labeled, validation)?.0)
    }

    fn predict(&self, model: &HybridModel<T>, inputs: &[&SentenceInput]) -> Result<Vec<Prediction>> {
        model.predict_proba(self.table, inputs)
    }
}

pub fn evaluate_model<T: Scalar>(
    model: &HybridModel<T>,
    table: &EmbeddingTable<T>,
    examples: &[Example<SentenceInput>],
) -> Result<ClassMetrics> {
    let inputs: Vec<&SentenceInput> = examples.iter().map(|e| &e.input).collect();
    let predicted: Vec<Label> = model.predict_proba(table, &inputs)?.iter().map(|p| p.label).collect();
    let gold: Vec<Label> = examples.iter().map(|e| e.label).collect();
    prf_metrics(&predicted, &gold)
}

/// Cross-validation fold runner for the hybrid model. Self-trains when both
/// a pool and a self-training config are present, else trains once.
pub struct HybridFoldRunner<'a, T> {
    pub corpus: &'a ParsedCorpus,
    pub pool: Option<&'a ParsedCorpus>,
    pub table: &'a EmbeddingTable<T>,
    pub model: ModelConfig,
    pub selftrain: Option<SelfTrainConfig>,
    pub schema: SchemaConfig,
}

impl<T: Scalar> HybridFoldRunner<'_, T> {
    /// The schema a fold trains with: fitted on its training part alone.
    pub fn fold_schema(&self, fold: &FoldSplit) -> Result<FeatureSchema> {
        fit_schema_on(self.corpus, &fold.train_ids, &self.schema)
    }
}

impl<T: Scalar> FoldRunner for HybridFoldRunner<'_, T> {
    fn run_fold(&self, dataset: &LabeledDataset, fold: &FoldSplit) -> Result<FoldOutcome> {
        let schema = self.fold_schema(fold)?;
        let extractor = Extractor::new(&schema);
        let max_len = self.model.max_len;
        let build = |ids: &[String]| examples_for(dataset, self.corpus, ids, &extractor, self.table, max_len);
        let train = build(&fold.train_ids)?;
        let validation = build(&fold.validation_ids)?;
        let test = build(&fold.test_ids)?;
        let learner = HybridLearner {
            table: self.table,
            config: ModelConfig {
                seed: seed::sub_seed(self.model.seed, &["fold", &fold.fold_index.to_string()]),
                ..self.model.clone()
            },
            schema_id: schema.id.clone(),
        };
        let (model, selftrain): (HybridModel<T>, Option<SelfTrainRun>) = match (self.pool, &self.selftrain) {
            (Some(pool), Some(st)) => {
                let items = pool_items(pool, &extractor, self.table, max_len);
                let (run, model) = self_train(&learner, train, items, &validation, st)?;
                (model, Some(run))
            }
            _ => (learner.train(1, &train, &validation)?, None),
        };
        Ok(FoldOutcome {
            metrics: evaluate_model(&model, self.table, &test)?,
            selftrain,
        })
    }
}
