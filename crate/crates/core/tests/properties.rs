//! Property-based invariants.

mod common;

use std::collections::HashSet;

use common::*;
use proptest::prelude::*;
use sugmine::annotate::{DependencyArc, ParsedSentence, Token};
use sugmine::corpus::{make_folds_with_validation, split_validation, Label};
use sugmine::embed::{encode, EmbeddingTable, PAD_INDEX};
use sugmine::eval::{metrics_from_confusion, prf_metrics, Confusion};
use sugmine::lexfeat::{extract, fit_schema};
use sugmine::model::{attention_pool, weighted_loss, AttentionParams, HybridModel, ModelConfig, Prediction, SentenceInput, Variant};
use sugmine::selftrain::{select_confident_indices, self_train, SelfTrainConfig};

fn labels(n_pos: usize, n_neg: usize) -> Vec<Label> {
    let mut v = vec![Label::Suggestive; n_pos];
    v.extend(vec![Label::NonSuggestive; n_neg]);
    v
}

fn parse_strategy() -> impl Strategy<Value = ParsedSentence> {
    let tok = (prop::sample::select(vec!["go", "we", "book", "room", ".", "Try"]), prop::sample::select(vec!["VB", "PRP", "NN", "VBP", "."]));
    prop::collection::vec(tok, 1..10).prop_flat_map(|toks| {
        let n = toks.len();
        let arcs = prop::collection::vec((0..n, 0..n, prop::sample::select(vec!["nsubj", "dobj"])), 0..4);
        (Just(toks), arcs)
    })
    .prop_map(|(toks, arcs)| ParsedSentence {
        source_id: "x".into(),
        tokens: toks
            .into_iter()
            .enumerate()
            .map(|(index, (t, p))| Token { index, text: t.into(), pos: p.into() })
            .collect(),
        arcs: arcs
            .into_iter()
            .filter(|(h, d, _)| h != d)
            .map(|(head, dependent, r)| DependencyArc { head, dependent, relation: r.into() })
            .collect(),
    })
}

proptest! {
    #[test]
    fn attention_weights_normalised(seed in any::<u64>(), t in 1usize..=10, h in 1usize..=8, a in 1usize..=6, cut in 0.0f64..1.0) {
        let mut rng = sugmine::seed::rng(seed, &["attention"]);
        let len = 1 + ((t - 1) as f64 * cut) as usize;
        let states = random_matrix(&mut rng, t, h);
        let params = AttentionParams {
            w: random_matrix(&mut rng, a, h).concat(),
            b: random_matrix(&mut rng, 1, a).concat(),
            v: random_matrix(&mut rng, 1, a).concat(),
        };
        let out = attention_pool(&states, len, &params).unwrap();
        let sum: f64 = out.weights[..len].iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-6);
        prop_assert!(out.weights[len..].iter().all(|&w| w == 0.0));
        prop_assert!(out.weights.iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn folds_partition_and_stratify(n_pos in 20usize..60, n_neg in 20usize..200, k in 2usize..6, seed in any::<u64>()) {
        let ds = dataset(&labels(n_pos, n_neg));
        prop_assert!(make_folds_with_validation(&dataset(&labels(k - 1, n_neg)), k, seed, 0.1).is_err());
        let folds = make_folds_with_validation(&ds, k, seed, 0.1).unwrap();
        let mut seen_test = HashSet::new();
        let mut test_pos = Vec::new();
        for f in &folds {
            let all: Vec<&String> = f.train_ids.iter().chain(&f.validation_ids).chain(&f.test_ids).collect();
            let set: HashSet<&String> = all.iter().copied().collect();
            prop_assert_eq!(set.len(), all.len());
            prop_assert_eq!(set.len(), ds.len());
            for id in &f.test_ids {
                prop_assert!(seen_test.insert(id.clone()));
            }
            test_pos.push(ds.select(&f.test_ids).unwrap().iter().filter(|s| s.label.is_positive()).count());
            let sizes: Vec<usize> = folds.iter().map(|f| f.test_ids.len()).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
        prop_assert_eq!(seen_test.len(), ds.len());
        prop_assert!(test_pos.iter().max().unwrap() - test_pos.iter().min().unwrap() <= 1);
    }

    #[test]
    fn validation_split_is_stratified(n_pos in 2usize..30, n_neg in 2usize..200, fraction in 0.05f64..0.5, seed in any::<u64>()) {
        let ds = dataset(&labels(n_pos, n_neg));
        let ids = ds.ids();
        let n_val = (fraction * ids.len() as f64).round() as usize;
        match split_validation(&ds, &ids, fraction, seed) {
            Ok((train, val)) => {
                prop_assert_eq!(val.len(), n_val);
                prop_assert_eq!(train.len() + val.len(), ids.len());
                let vs: HashSet<&String> = val.iter().collect();
                prop_assert!(train.iter().all(|id| !vs.contains(id)));
                let vp = ds.select(&val).unwrap().iter().filter(|s| s.label.is_positive()).count();
                prop_assert!(vp >= 1 && vp < n_pos);
                prop_assert!((vp as f64 - fraction * n_pos as f64).abs() < 1.0 + 1e-9);
            }
            Err(_) => {
                let pos_quota = fraction * n_pos as f64;
                prop_assert!(n_val == 0 || pos_quota < 1.0 || pos_quota > n_pos as f64 - 1.0 || fraction * n_neg as f64 > n_neg as f64 - 1.0 || fraction * n_neg as f64 <= 1.0);
            }
        }
    }

    #[test]
    fn metrics_agree_with_confusion(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..200)) {
        let l = |b: bool| if b { Label::Suggestive } else { Label::NonSuggestive };
        let predicted: Vec<Label> = pairs.iter().map(|p| l(p.0)).collect();
        let gold: Vec<Label> = pairs.iter().map(|p| l(p.1)).collect();
        let m = prf_metrics(&predicted, &gold).unwrap();
        prop_assert_eq!(m.confusion.total(), pairs.len());
        prop_assert!(metrics_match(&m, 1e-12));
        prop_assert_eq!(metrics_from_confusion(m.confusion), m);
        for v in [m.macro_precision, m.macro_recall, m.macro_f1, m.suggestive.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert_eq!(m.suggestive.support + m.non_suggestive.support, pairs.len());
    }

    #[test]
    fn confusion_round_trips(tp in 0usize..1000, fp in 0usize..1000, fn_ in 0usize..1000, tn in 0usize..1000) {
        let c = Confusion { tp, fp, fn_, tn };
        prop_assert_eq!(sugmine::eval::parse_confusion_tsv(&sugmine::eval::confusion_tsv(&c)).unwrap(), c);
    }

    #[test]
    fn selection_sizes_and_order(ps in prop::collection::vec(0.0f64..=1.0, 0..120), k in 0usize..50) {
        let ids: Vec<String> = (0..ps.len()).map(|i| format!("u{i:03}")).collect();
        let id_refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let preds: Vec<Prediction> = ps.iter().map(|&p| Prediction::from_probs([1.0 - p, p])).collect();
        let (pos, neg) = select_confident_indices(&id_refs, &preds, k);
        let avail_pos = preds.iter().filter(|p| p.label == Label::Suggestive).count();
        prop_assert_eq!(pos.len(), k.min(avail_pos));
        prop_assert_eq!(neg.len(), k.min(ps.len() - avail_pos));
        let chosen: HashSet<usize> = pos.iter().chain(&neg).copied().collect();
        prop_assert_eq!(chosen.len(), pos.len() + neg.len());
        prop_assert!(pos.windows(2).all(|w| ps[w[0]] >= ps[w[1]]));
        prop_assert!(neg.windows(2).all(|w| ps[w[0]] <= ps[w[1]]));
    }

    #[test]
    fn self_training_bookkeeping(n_pos in 0usize..400, n_neg in 0usize..400, per_class in 1usize..150, trace in prop::collection::vec(0.0f64..1.0, 1..8)) {
        let learner = InjectedF1 { f1: trace.clone() };
        let config = SelfTrainConfig { per_class_add: per_class, max_iterations: trace.len(), ..SelfTrainConfig::default() };
        let (run, model) = self_train(&learner, stub_labeled(10), stub_pool(n_pos, n_neg), &stub_labeled(4), &config).unwrap();
        let mut labeled = 10;
        let mut pool = n_pos + n_neg;
        let mut seen = HashSet::new();
        for r in &run.iterations {
            prop_assert_eq!(r.train_size, labeled);
            prop_assert!(r.added_positive <= per_class && r.added_negative <= per_class);
            labeled += r.added_positive + r.added_negative;
            prop_assert!(r.pool_remaining <= pool);
            pool = r.pool_remaining;
            prop_assert_eq!(r.labeled_size, labeled);
            for id in &r.added_ids {
                prop_assert!(seen.insert(id.clone()));
            }
        }
        let best = run.iterations.iter().map(|r| r.validation.macro_f1).fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(run.best_macro_f1, best);
        prop_assert_eq!(trace[model - 1], best);
        prop_assert!(run.iterations.len() <= trace.len());
    }

    #[test]
    fn features_are_binary_and_sized(train in prop::collection::vec(parse_strategy(), 1..10), probe in parse_strategy()) {
        let schema = fit_schema(&train).unwrap();
        let v = extract(&probe, &schema);
        prop_assert_eq!(v.len(), schema.total_dim());
        prop_assert!(v.values.iter().all(|&b| b <= 1));
        prop_assert_eq!(v.schema_id, schema.id.clone());
        prop_assert_eq!(fit_schema(&train).unwrap(), schema);
    }

    #[test]
    fn encode_pads_and_truncates(n in 0usize..30, max_len in 1usize..20) {
        let table: EmbeddingTable<f32> = EmbeddingTable::from_rows(2, [("a", vec![1.0, 0.0])]).unwrap();
        let toks: Vec<&str> = (0..n).map(|i| if i % 2 == 0 { "A" } else { "zz" }).collect();
        let e = encode(&toks, &table, max_len);
        prop_assert_eq!(e.indices.len(), max_len);
        prop_assert_eq!(e.true_length, n.min(max_len));
        prop_assert!(e.indices[e.true_length..].iter().all(|&i| i == PAD_INDEX));
        prop_assert!(e.indices[..e.true_length].iter().all(|&i| i != PAD_INDEX));
    }

    #[test]
    fn weighted_loss_non_negative(ps in prop::collection::vec((0.0f64..=1.0, any::<bool>()), 1..50), w in 0.1f64..20.0) {
        let probs: Vec<[f64; 2]> = ps.iter().map(|(p, _)| [1.0 - p, *p]).collect();
        let gold: Vec<Label> = ps.iter().map(|(_, b)| if *b { Label::Suggestive } else { Label::NonSuggestive }).collect();
        let loss = weighted_loss(&probs, &gold, w).unwrap();
        prop_assert!(loss.is_finite() && loss >= 0.0);
    }
}

fn tiny_config(variant: Variant) -> ModelConfig {
    ModelConfig {
        variant,
        max_len: 5,
        cnn_filters: 3,
        cnn_width: 3,
        cnn_dense: 4,
        lstm_hidden: 3,
        rnn_dense: vec![4, 2],
        ling_hidden: vec![3, 2],
        ..ModelConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn predictions_are_distributions(seed in any::<u64>(), v in 0usize..7, words in prop::collection::vec(0usize..4, 0..8), feats in prop::collection::vec(0u8..=1, 4)) {
        let variant = Variant::ALL[v];
        let table: EmbeddingTable<f64> = EmbeddingTable::from_rows(
            3,
            ["go", "see", "the", "room"].iter().enumerate().map(|(i, w)| (*w, vec![i as f64 * 0.3 - 0.4, 0.2, -0.1 * i as f64])),
        ).unwrap();
        let vocab = ["go", "see", "the", "room"];
        let toks: Vec<&str> = words.iter().map(|&i| vocab[i]).collect();
        let input = SentenceInput {
            sequence: encode(&toks, &table, 5),
            features: sugmine::lexfeat::LinguisticFeatureVector { values: feats, schema_id: "s".into() },
        };
        let model = HybridModel::<f64>::new(ModelConfig { seed, ..tiny_config(variant) }, 3, 4, "s", table.fingerprint()).unwrap();
        if toks.is_empty() && variant.rnn_pooling().is_some() {
            return Ok(());
        }
        let p = model.predict_proba(&table, &[&input]).unwrap()[0];
        prop_assert!((p.prob[0] + p.prob[1] - 1.0).abs() < 1e-12);
        prop_assert_eq!(p.label == Label::Suggestive, p.prob[1] > p.prob[0]);
        if let Some(w) = model.attention_weights(&input, &table).unwrap() {
            let len = input.sequence.true_length;
            prop_assert!((w[..len].iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(w[len..].iter().all(|&x| x == 0.0));
        }
    }
}
