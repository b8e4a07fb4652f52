use std::fs;
use std::path::{Path, PathBuf};

use log::info;

use super::config::{data_path, RunConfig};
use super::manifest::RunManifest;
use super::CliError;
use crate::annotate::{Annotator, CommandAnnotator};
use crate::corpus::{
    compute_stats, load_labeled, load_unlabeled, make_folds_with_validation, split_validation, LabeledDataset,
};
use crate::embed::{load_embeddings, save_embeddings, EmbeddingTable};
use crate::error::{Error, Result};
use crate::eval::{
    cross_validate, emit_report, run_ablation, significance_test, AblationRow, PairedTTest, Report,
};
use crate::lexfeat::{Extractor, FeatureSchema};
use crate::model::{HybridModel, SentenceInput, Variant};
use crate::pipeline::{
    evaluate_model, examples_for, fit_schema_on, pool_items, sentence_input, HybridFoldRunner, HybridLearner,
    ParsedCorpus,
};
use crate::scalar::Scalar;
use crate::selftrain::self_train;

pub const MODEL_FILE: &str = "model.json";
pub const SCHEMA_FILE: &str = "schema.json";
pub const EMBEDDINGS_FILE: &str = "embeddings.txt";

/// Settings plus the manifest being assembled for this run.
pub struct Context {
    pub config: RunConfig,
    pub manifest: RunManifest,
    /// Trained model directory, for `predict`.
    pub model_dir: Option<PathBuf>,
    /// Sentences to classify, for `predict`.
    pub input: Option<PathBuf>,
}

impl Context {
    fn out(&self) -> &Path {
        &self.config.out
    }

    fn required(&self, what: &str, value: &Option<PathBuf>, flag: &str) -> std::result::Result<PathBuf, CliError> {
        value
            .as_deref()
            .map(data_path)
            .ok_or_else(|| CliError::Usage(format!("{what} is required (use {flag})")))
    }

    fn labeled(&mut self) -> std::result::Result<LabeledDataset, CliError> {
        let path = self.required("a labeled dataset", &self.config.data.labeled.clone(), "--data")?;
        self.manifest.record_input("labeled", &path)?;
        Ok(load_labeled(&path)?)
    }

    fn annotator(&mut self) -> std::result::Result<Box<dyn Annotator>, CliError> {
        if let Some(path) = self.config.data.annotations.clone() {
            let path = data_path(&path);
            self.manifest.record_input("annotations", &path)?;
            return Ok(Box::new(crate::annotate::load_fixture(&path)?));
        }
        if let Some(cmd) = &self.config.data.parser_cmd {
            return Ok(Box::new(CommandAnnotator::from_command_line(cmd)?));
        }
        Err(CliError::Run(Error::BackendUnavailable(
            "no parser configured: pass --annotations FILE or --parser-cmd COMMAND".into(),
        )))
    }

    fn pool(&mut self, backend: &dyn Annotator) -> Result<Option<ParsedCorpus>> {
        let Some(path) = self.config.data.unlabeled.clone() else {
            return Ok(None);
        };
        let path = data_path(&path);
        self.manifest.record_input("unlabeled", &path)?;
        let pool = load_unlabeled(&path, self.config.data.unlabeled_limit)?;
        Ok(Some(ParsedCorpus::annotate_pool(&pool, backend)?))
    }

    /// Load the embedding file restricted to the words of `corpora`.
    fn embeddings<T: Scalar>(&mut self, corpora: &[&ParsedCorpus]) -> std::result::Result<EmbeddingTable<T>, CliError> {
        let path = self.required("an embedding file", &self.config.data.embeddings.clone(), "--embeddings")?;
        self.manifest.record_input("embeddings", &path)?;
        let full: EmbeddingTable<T> = load_embeddings(&path, self.config.data.embedding_dim)?;
        let words: Vec<String> = corpora
            .iter()
            .flat_map(|c| c.iter())
            .flat_map(|p| p.words().map(str::to_string).collect::<Vec<_>>())
            .collect();
        let table = full.restrict(words.iter().map(String::as_str));
        info!(
            "embeddings: {} of {} rows kept for the corpus vocabulary",
            table.vocab_size(),
            full.vocab_size()
        );
        Ok(table)
    }

    fn write_json<S: serde::Serialize>(&mut self, name: &str, value: &S) -> Result<PathBuf> {
        let path = self.out().join(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        self.manifest.record_output(&path);
        Ok(path)
    }
}

type CmdResult = std::result::Result<(), CliError>;

pub fn stats(ctx: &mut Context) -> CmdResult {
    let ds = ctx.labeled()?;
    let s = compute_stats(&ds)?;
    println!("positive\t{}", s.n_positive);
    println!("negative\t{}", s.n_negative);
    println!("total\t{}", s.n_total);
    println!("ratio\t{}", s.ratio_display());
    ctx.write_json("stats.json", &s)?;
    Ok(())
}

pub fn folds(ctx: &mut Context) -> CmdResult {
    let ds = ctx.labeled()?;
    let c = &ctx.config;
    let splits = make_folds_with_validation(&ds, c.eval.folds, c.fold_seed(), c.eval.validation_fraction)?;
    let dir = ctx.out().join("folds");
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for s in &splits {
        for (part, ids) in [("train", &s.train_ids), ("validation", &s.validation_ids), ("test", &s.test_ids)] {
            let path = dir.join(format!("fold{}_{part}.ids", s.fold_index + 1));
            let mut text = ids.join("\n");
            text.push('\n');
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            ctx.manifest.record_output(&path);
        }
        println!(
            "fold {}\ttrain {}\tvalidation {}\ttest {}",
            s.fold_index + 1,
            s.train_ids.len(),
            s.validation_ids.len(),
            s.test_ids.len()
        );
    }
    ctx.write_json("folds.json", &splits)?;
    Ok(())
}

fn save_model_dir<T: Scalar>(
    ctx: &mut Context,
    model: &HybridModel<T>,
    schema: &FeatureSchema,
    table: &EmbeddingTable<T>,
) -> Result<PathBuf> {
    let dir = ctx.out().join("model");
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    model.save(dir.join(MODEL_FILE))?;
    schema.save(dir.join(SCHEMA_FILE))?;
    save_embeddings(table, dir.join(EMBEDDINGS_FILE))?;
    for f in [MODEL_FILE, SCHEMA_FILE, EMBEDDINGS_FILE] {
        ctx.manifest.record_output(&dir.join(f));
    }
    Ok(dir)
}

/// Shared set-up for `train` and `selftrain`: validation split, schema
/// fitted on the training part, encoded examples.
struct Prepared<T> {
    table: EmbeddingTable<T>,
    schema: FeatureSchema,
    dataset: LabeledDataset,
    parsed: ParsedCorpus,
    pool: Option<ParsedCorpus>,
    train_ids: Vec<String>,
    validation_ids: Vec<String>,
}

fn prepare<T: Scalar>(ctx: &mut Context, with_pool: bool) -> std::result::Result<Prepared<T>, CliError> {
    let dataset = ctx.labeled()?;
    let backend = ctx.annotator()?;
    let parsed = ParsedCorpus::annotate_dataset(&dataset, backend.as_ref())?;
    let pool = if with_pool { ctx.pool(backend.as_ref())? } else { None };
    let mut corpora = vec![&parsed];
    corpora.extend(pool.as_ref());
    let table = ctx.embeddings::<T>(&corpora)?;
    let (train_ids, validation_ids) = split_validation(
        &dataset,
        &dataset.ids(),
        ctx.config.eval.validation_fraction,
        ctx.config.fold_seed(),
    )?;
    let schema = fit_schema_on(&parsed, &train_ids, &ctx.config.features)?;
    Ok(Prepared {
        table,
        schema,
        dataset,
        parsed,
        pool,
        train_ids,
        validation_ids,
    })
}

pub fn train<T: Scalar>(ctx: &mut Context) -> CmdResult {
    let p = prepare::<T>(ctx, false)?;
    let extractor = Extractor::new(&p.schema);
    let max_len = ctx.config.model.max_len;
    let train = examples_for(&p.dataset, &p.parsed, &p.train_ids, &extractor, &p.table, max_len)?;
    let validation = examples_for(&p.dataset, &p.parsed, &p.validation_ids, &extractor, &p.table, max_len)?;
    let learner = HybridLearner {
        table: &p.table,
        config: ctx.config.model_config(),
        schema_id: p.schema.id.clone(),
    };
    let (model, history) = learner.fit(1, &train, &validation)?;
    let metrics = evaluate_model(&model, &p.table, &validation)?;
    save_model_dir(ctx, &model, &p.schema, &p.table)?;
    ctx.write_json("history.json", &history)?;
    ctx.write_json("validation_metrics.json", &metrics)?;
    println!(
        "trained {} epochs (best {}), validation macro F1 {:.4}",
        history.epochs.len(),
        history.best_epoch,
        metrics.macro_f1
    );
    Ok(())
}

pub fn selftrain<T: Scalar>(ctx: &mut Context) -> CmdResult {
    let p = prepare::<T>(ctx, true)?;
    let pool = p
        .pool
        .as_ref()
        .ok_or_else(|| CliError::Usage("selftrain needs an unlabeled pool (use --unlabeled)".into()))?;
    let extractor = Extractor::new(&p.schema);
    let max_len = ctx.config.model.max_len;
    let train = examples_for(&p.dataset, &p.parsed, &p.train_ids, &extractor, &p.table, max_len)?;
    let validation = examples_for(&p.dataset, &p.parsed, &p.validation_ids, &extractor, &p.table, max_len)?;
    let items = pool_items(pool, &extractor, &p.table, max_len);
    let learner = HybridLearner {
        table: &p.table,
        config: ctx.config.model_config(),
        schema_id: p.schema.id.clone(),
    };
    let (mut run, model) = self_train(&learner, train, items, &validation, &ctx.config.selftrain_config())?;
    let dir = save_model_dir(ctx, &model, &p.schema, &p.table)?;
    run.best_model = Some(dir.join(MODEL_FILE).display().to_string());
    for f in emit_report(Report::SelfTraining(&run), ctx.out())? {
        ctx.manifest.record_output(&f);
    }
    println!(
        "{} iterations ({:?}), best iteration {} with validation macro F1 {:.4}",
        run.iterations.len(),
        run.stop_reason,
        run.best_iteration,
        run.best_macro_f1
    );
    Ok(())
}

struct CvInputs<T> {
    dataset: LabeledDataset,
    parsed: ParsedCorpus,
    pool: Option<ParsedCorpus>,
    table: EmbeddingTable<T>,
}

fn cv_inputs<T: Scalar>(ctx: &mut Context) -> std::result::Result<CvInputs<T>, CliError> {
    let dataset = ctx.labeled()?;
    let backend = ctx.annotator()?;
    let parsed = ParsedCorpus::annotate_dataset(&dataset, backend.as_ref())?;
    let pool = ctx.pool(backend.as_ref())?;
    let mut corpora = vec![&parsed];
    corpora.extend(pool.as_ref());
    let table = ctx.embeddings::<T>(&corpora)?;
    Ok(CvInputs {
        dataset,
        parsed,
        pool,
        table,
    })
}

fn runner<'a, T: Scalar>(ctx: &Context, inputs: &'a CvInputs<T>, variant: Variant) -> HybridFoldRunner<'a, T> {
    HybridFoldRunner {
        corpus: &inputs.parsed,
        pool: inputs.pool.as_ref(),
        table: &inputs.table,
        model: ctx.config.model_config().with_variant(variant),
        selftrain: inputs.pool.as_ref().map(|_| ctx.config.selftrain_config()),
        schema: ctx.config.features.clone(),
    }
}

pub fn evaluate<T: Scalar>(ctx: &mut Context) -> CmdResult {
    let inputs = cv_inputs::<T>(ctx)?;
    let c = &ctx.config;
    let result = cross_validate(
        &inputs.dataset,
        &runner(ctx, &inputs, c.model.variant),
        c.eval.folds,
        c.fold_seed(),
        c.eval.jobs,
    )?;
    for f in emit_report(Report::CrossValidation(&result), ctx.out())? {
        ctx.manifest.record_output(&f);
    }
    let s = &result.summary;
    println!(
        "{} {}-fold: macro P {:.4} R {:.4} F1 {:.4} (sd {:.4})",
        ctx.config.model.variant, result.k, s.macro_precision.mean, s.macro_recall.mean, s.macro_f1.mean, s.macro_f1.sd
    );
    Ok(())
}

#[derive(serde::Serialize)]
struct Comparison {
    baseline: Variant,
    against: Variant,
    test: PairedTTest,
}

pub fn ablate<T: Scalar>(ctx: &mut Context) -> CmdResult {
    let inputs = cv_inputs::<T>(ctx)?;
    let c = &ctx.config;
    let rows: Vec<AblationRow> = run_ablation(
        &inputs.dataset,
        &Variant::ABLATIONS,
        |v| Ok(runner(ctx, &inputs, v)),
        c.eval.folds,
        c.fold_seed(),
        c.eval.jobs,
    )?;
    for f in emit_report(Report::Ablation(&rows), ctx.out())? {
        ctx.manifest.record_output(&f);
    }
    let full = rows[0].result.fold_macro_f1();
    let mut comparisons = Vec::new();
    for row in &rows[1..] {
        comparisons.push(Comparison {
            baseline: rows[0].variant,
            against: row.variant,
            test: significance_test(&full, &row.result.fold_macro_f1())?,
        });
    }
    ctx.write_json("significance.json", &comparisons)?;
    println!("variant\tmacro_P\tmacro_R\tmacro_F1");
    for row in &rows {
        let s = &row.result.summary;
        println!(
            "{}\t{:.4}\t{:.4}\t{:.4}",
            row.variant, s.macro_precision.mean, s.macro_recall.mean, s.macro_f1.mean
        );
    }
    Ok(())
}

/// Scalar type recorded in a checkpoint file.
pub fn checkpoint_scalar(path: &Path) -> Result<String> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let header: serde_json::Value = serde_json::from_str(&text)?;
    header
        .get("scalar")
        .and_then(|v| v.as_str())
        .map(str::to_string)
        .ok_or_else(|| Error::Checkpoint(format!("{} has no scalar field", path.display())))
}

pub fn predict<T: Scalar>(ctx: &mut Context) -> CmdResult {
    let dir = ctx
        .model_dir
        .clone()
        .ok_or_else(|| CliError::Usage("predict needs --model DIR".into()))?;
    let input = ctx
        .input
        .clone()
        .ok_or_else(|| CliError::Usage("predict needs --input FILE".into()))?;
    let input = data_path(&input);
    let model_path = dir.join(MODEL_FILE);
    ctx.manifest.record_input("model", &model_path)?;
    ctx.manifest.record_input("input", &input)?;
    let model = HybridModel::<T>::load(&model_path)?;
    let table: EmbeddingTable<T> = load_embeddings(dir.join(EMBEDDINGS_FILE), model.embedding_dim())?;
    if table.fingerprint() != model.embedding_fingerprint() {
        return Err(Error::Checkpoint("embedding table does not match the checkpoint".into()).into());
    }
    let schema = FeatureSchema::load(dir.join(SCHEMA_FILE))?;
    if schema.id != model.schema_id() {
        return Err(Error::Checkpoint("feature schema does not match the checkpoint".into()).into());
    }
    let sentences = load_unlabeled(&input, None)?;
    let backend = ctx.annotator()?;
    let parsed = ParsedCorpus::annotate_pool(&sentences, backend.as_ref())?;
    let extractor = Extractor::new(&schema);
    let inputs: Vec<SentenceInput> = parsed
        .iter()
        .map(|p| sentence_input(p, &extractor, &table, model.config().max_len))
        .collect();
    let refs: Vec<&SentenceInput> = inputs.iter().collect();
    let predictions = model.predict_proba(&table, &refs)?;
    let mut tsv = String::from("id\tp_suggestive\tlabel\n");
    for (s, p) in sentences.sentences.iter().zip(&predictions) {
        tsv.push_str(&format!("{}\t{}\t{}\n", s.id, p.p_suggestive(), p.label));
    }
    let path = ctx.out().join("predictions.tsv");
    fs::write(&path, &tsv).map_err(|e| Error::io(&path, e))?;
    ctx.manifest.record_output(&path);
    print!("{tsv}");
    Ok(())
}
