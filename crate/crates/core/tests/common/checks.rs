//! Randomised library-versus-oracle comparisons. Each returns the number of
//! instances checked or a description of the first disagreement.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sugmine::annotate::{ParsedSentence, Token};
use sugmine::lexfeat::{fit_schema_with, SchemaConfig};
use sugmine::model::{attention_pool, conv_global_max, AttentionParams, ConvParams, Prediction};
use sugmine::seed;
use sugmine::selftrain::select_confident_indices;

use super::*;

const WORDS: [&str; 6] = ["go", "the", "room", "Go", "book", "early"];
const TAGS: [&str; 4] = ["VB", "DT", "NN", "RB"];
const TOL: f64 = 1e-9;

fn random_parse(rng: &mut ChaCha8Rng, id: usize) -> ParsedSentence {
    let n = rng.random_range(1..8);
    ParsedSentence {
        source_id: format!("x{id}"),
        tokens: (0..n)
            .map(|index| Token {
                index,
                text: WORDS.choose(rng).unwrap().to_string(),
                pos: TAGS.choose(rng).unwrap().to_string(),
            })
            .collect(),
        arcs: vec![],
    }
}

fn close_all(got: &[f64], want: &[f64]) -> Result<(), String> {
    if got.len() != want.len() {
        return Err(format!("length {} vs {}", got.len(), want.len()));
    }
    match got.iter().zip(want).find(|(g, w)| (*g - *w).abs() > TOL) {
        Some((g, w)) => Err(format!("{g} vs {w}")),
        None => Ok(()),
    }
}

/// Word and PoS n-gram vocabularies over at most ~100 tokens.
pub fn ngram_vocab(trials: usize) -> Result<usize, String> {
    let mut rng = seed::rng(1, &["ngram"]);
    for trial in 0..trials {
        let parses: Vec<ParsedSentence> = (0..rng.random_range(1..15)).map(|i| random_parse(&mut rng, i)).collect();
        let caps = [rng.random_range(1..12), rng.random_range(1..12), rng.random_range(1..12)];
        let config = SchemaConfig {
            word_capacities: caps,
            pos_capacities: caps,
            ..SchemaConfig::default()
        };
        let schema = fit_schema_with(&parses, &config).map_err(|e| e.to_string())?;
        let words: Vec<Vec<String>> = parses
            .iter()
            .map(|p| p.words().map(|w| w.to_lowercase()).collect())
            .collect();
        let tags: Vec<Vec<String>> = parses.iter().map(|p| p.tags().map(String::from).collect()).collect();
        for n in 1..=3 {
            if schema.word_vocabs[n - 1].entries != brute_vocab(&words, n, caps[n - 1]) {
                return Err(format!("trial {trial}: word {n}-grams differ"));
            }
            if schema.pos_vocabs[n - 1].entries != brute_vocab(&tags, n, caps[n - 1]) {
                return Err(format!("trial {trial}: PoS {n}-grams differ"));
            }
        }
    }
    Ok(trials)
}

pub fn conv_max(trials: usize) -> Result<usize, String> {
    let mut rng = seed::rng(2, &["conv"]);
    for trial in 0..trials {
        let len = rng.random_range(1..10);
        let dim = rng.random_range(1..5);
        let width = rng.random_range(1..6);
        let filters = rng.random_range(1..4);
        let x = random_matrix(&mut rng, len, dim);
        let w = random_matrix(&mut rng, filters, width * dim);
        let b: Vec<f64> = (0..filters).map(|_| rng.random_range(-1.0..1.0)).collect();
        let params = ConvParams {
            filters,
            width,
            w: w.concat(),
            b: b.clone(),
        };
        let got = conv_global_max(&x, &params).map_err(|e| e.to_string())?;
        close_all(&got, &naive_conv_max(&x, width, &w, &b)).map_err(|e| format!("trial {trial}: {e}"))?;
    }
    Ok(trials)
}

pub fn attention(trials: usize) -> Result<usize, String> {
    let mut rng = seed::rng(3, &["attention"]);
    for trial in 0..trials {
        let t = rng.random_range(1..11);
        let h = rng.random_range(1..9);
        let a = rng.random_range(1..6);
        let len = rng.random_range(1..=t);
        let states = random_matrix(&mut rng, t, h);
        let w = random_matrix(&mut rng, a, h);
        let b: Vec<f64> = (0..a).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..a).map(|_| rng.random_range(-2.0..2.0)).collect();
        let params = AttentionParams {
            w: w.concat(),
            b: b.clone(),
            v: v.clone(),
        };
        let got = attention_pool(&states, len, &params).map_err(|e| e.to_string())?;
        let (weights, pooled) = naive_attention(&states, len, &w, &b, &v);
        close_all(&got.weights, &weights).map_err(|e| format!("trial {trial} weights: {e}"))?;
        close_all(&got.pooled, &pooled).map_err(|e| format!("trial {trial} pooled: {e}"))?;
    }
    Ok(trials)
}

pub fn selection(trials: usize) -> Result<usize, String> {
    let mut rng = seed::rng(4, &["select"]);
    for trial in 0..trials {
        let n = rng.random_range(0..=100);
        // Coarse scores so ties are common.
        let items: Vec<(String, f64)> = (0..n)
            .map(|i| (format!("u{:03}", (i * 37) % 101), rng.random_range(0..=20) as f64 / 20.0))
            .collect();
        let k = rng.random_range(0..30);
        let ids: Vec<&str> = items.iter().map(|(id, _)| id.as_str()).collect();
        let preds: Vec<Prediction> = items.iter().map(|(_, p)| Prediction::from_probs([1.0 - p, *p])).collect();
        let (pos, neg) = select_confident_indices(&ids, &preds, k);
        let names = |v: Vec<usize>| v.into_iter().map(|i| ids[i].to_string()).collect::<Vec<_>>();
        if (names(pos), names(neg)) != sort_select(&items, k) {
            return Err(format!("trial {trial}: selections differ"));
        }
    }
    Ok(trials)
}
