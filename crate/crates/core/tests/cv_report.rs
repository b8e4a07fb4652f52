//! Cross-validation harness, ablation, report files and fold hygiene.

mod common;

use std::collections::HashSet;
use std::fs;

use common::*;
use sugmine::corpus::{make_folds, Label};
use sugmine::eval::{
    cross_validate, emit_report, parse_confusion_tsv, run_ablation, svg, Report,
};
use sugmine::lexfeat::SchemaConfig;
use sugmine::model::{ModelConfig, Variant};
use sugmine::pipeline::{HybridFoldRunner, ParsedCorpus};
use sugmine::selftrain::{self_train, SelfTrainConfig};
use sugmine::synthetic::labeled_with_counts;

fn imbalanced(n_pos: usize, n_neg: usize) -> Vec<Label> {
    let mut v = vec![Label::Suggestive; n_pos];
    v.extend(vec![Label::NonSuggestive; n_neg]);
    v
}

#[test]
fn constant_predictor_gives_analytic_metrics() {
    let ds = dataset(&imbalanced(23, 177));
    let result = cross_validate(&ds, &ConstantRunner(Label::Suggestive), 5, 9, 1).unwrap();
    let folds = make_folds(&ds, 5, 9).unwrap();
    let pos = test_positives(&ds, &folds);
    for f in &result.folds {
        let (p, n) = pos[&f.fold_index];
        let m = &f.metrics;
        let precision = p as f64 / n as f64;
        assert!((m.suggestive.precision - precision).abs() < 1e-12);
        assert_eq!(m.suggestive.recall, 1.0);
        let f1 = 2.0 * precision / (precision + 1.0);
        assert!((m.suggestive.f1 - f1).abs() < 1e-12);
        assert_eq!(m.non_suggestive.f1, 0.0);
        assert!((m.macro_f1 - f1 / 2.0).abs() < 1e-12);
    }
    let all_neg = cross_validate(&ds, &ConstantRunner(Label::NonSuggestive), 5, 9, 1).unwrap();
    for f in &all_neg.folds {
        assert_eq!(f.metrics.suggestive.precision, 0.0);
        assert_eq!(f.metrics.suggestive.f1, 0.0);
    }
}

#[test]
fn ablation_of_identical_runners_is_identical() {
    let ds = dataset(&imbalanced(30, 170));
    let rows = run_ablation(&ds, &Variant::ABLATIONS, |_| Ok(HashRunner), 5, 4, 1).unwrap();
    assert_eq!(rows.len(), 4);
    for r in &rows[1..] {
        assert_eq!(r.result, rows[0].result);
    }
}

#[test]
fn parallel_folds_match_serial() {
    let ds = dataset(&imbalanced(30, 170));
    let a = cross_validate(&ds, &HashRunner, 5, 4, 1).unwrap();
    let b = cross_validate(&ds, &HashRunner, 5, 4, 3).unwrap();
    assert_eq!(a, b);
}

#[test]
fn schema_sees_only_training_part() {
    let (ds, annotator) = labeled_with_counts(30, 270, 5).unwrap();
    let corpus = ParsedCorpus::annotate_dataset(&ds, &annotator).unwrap();
    let table = sugmine::synthetic::embeddings::<f32>(4, 1).unwrap();
    let runner = HybridFoldRunner {
        corpus: &corpus,
        pool: None,
        table: &table,
        model: ModelConfig::default(),
        selftrain: None,
        schema: SchemaConfig {
            word_capacities: [10_000; 3],
            pos_capacities: [10_000; 3],
            ..SchemaConfig::default()
        },
    };
    for fold in make_folds(&ds, 5, 2).unwrap() {
        let schema = runner.fold_schema(&fold).unwrap();
        let mut train_trigrams = HashSet::new();
        for id in &fold.train_ids {
            let w: Vec<String> = corpus.get(id).unwrap().words().map(|w| w.to_lowercase()).collect();
            for g in w.windows(3) {
                train_trigrams.insert(g.join(" "));
            }
        }
        for g in &schema.word_vocabs[2].entries {
            assert!(train_trigrams.contains(g), "fold {} leaked {g:?}", fold.fold_index);
        }
        assert_eq!(schema.word_vocabs[2].len(), train_trigrams.len());
    }
}

#[test]
fn reports_are_consistent_with_confusions() {
    let ds = dataset(&imbalanced(30, 170));
    let dir = tempfile::tempdir().unwrap();
    let cv = cross_validate(&ds, &HashRunner, 5, 4, 1).unwrap();
    let files = emit_report(Report::CrossValidation(&cv), dir.path().join("cv")).unwrap();
    assert_eq!(files.len(), 7);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("cv/metrics.json")).unwrap()).unwrap();
    assert!(json["zero_division"].is_string());
    for (i, fold) in cv.folds.iter().enumerate() {
        let c = parse_confusion_tsv(&fs::read_to_string(dir.path().join(format!("cv/confusion_fold{}.tsv", i + 1))).unwrap()).unwrap();
        assert_eq!(c, fold.metrics.confusion);
        assert!(metrics_match(&fold.metrics, 1e-9));
        let f1 = json["folds"][i]["metrics"]["macro_f1"].as_f64().unwrap();
        assert!((f1 - recompute(&c)[2].2).abs() <= 1e-9);
    }

    let rows = run_ablation(&ds, &Variant::ABLATIONS, |_| Ok(HashRunner), 5, 4, 1).unwrap();
    emit_report(Report::Ablation(&rows), dir.path().join("ab")).unwrap();
    for v in Variant::ABLATIONS {
        assert!(dir.path().join("ab").join(v.name()).join("confusion_fold5.tsv").exists());
    }
    let tsv = fs::read_to_string(dir.path().join("ab/ablation.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 5);

    assert!(emit_report(Report::CrossValidation(&cv), "").is_err());
}

#[test]
fn validation_curve_marks_best() {
    let learner = InjectedF1 {
        f1: vec![0.60, 0.62, 0.63, 0.61, 0.62, 0.60],
    };
    let (run, _) = self_train(
        &learner,
        stub_labeled(10),
        stub_pool(1000, 1000),
        &stub_labeled(4),
        &SelfTrainConfig::default(),
    )
    .unwrap();
    let s = svg::validation_curve(&run);
    assert_eq!(s.matches("class=\"point").count(), 6);
    assert_eq!(s.matches("class=\"point best\"").count(), 1);
    assert!(s.contains("data-iteration=\"3\" class=\"point best\"") || s.contains("class=\"point best\" data-iteration=\"3\""));
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(Report::SelfTraining(&run), dir.path()).unwrap();
    assert_eq!(files.len(), 4);
}
