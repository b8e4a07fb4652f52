//! Linguistic feature extraction: suggestion keywords, word and PoS n-gram
//! bags, and imperative-mood cues read off the dependency arcs.
//!
//! All features are binary presence bits laid out in a fixed order:
//!
//! ```text
//! [18 keywords][word 1/2/3-grams][PoS 1/2/3-grams][imperative VB][nsubj (head PoS, dep PoS) pairs]
//! ```

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::annotate::ParsedSentence;
use crate::error::{Error, Result};

/// Suggestion keywords, in their canonical feature order.
pub const KEYWORDS: [&str; 18] = [
    "advice",
    "suggest",
    "may",
    "suggestion",
    "ask",
    "warn",
    "recommend",
    "do",
    "advise",
    "request",
    "warning",
    "tip",
    "recommendation",
    "not",
    "should",
    "can",
    "would",
    "will",
];

pub const SCHEMA_FORMAT: &str = "sugmine-feature-schema";
pub const SCHEMA_VERSION: u32 = 1;

const NGRAM_SEP: &str = " ";

/// Capacities and conventions used when fitting a schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaConfig {
    pub word_capacities: [usize; 3],
    pub pos_capacities: [usize; 3],
    pub nsubj_capacity: usize,
    /// Relation label treated as nominal subject.
    pub nsubj_label: String,
}

impl Default for SchemaConfig {
    fn default() -> Self {
        SchemaConfig {
            word_capacities: [300, 100, 100],
            pos_capacities: [50, 50, 50],
            nsubj_capacity: 50,
            nsubj_label: "nsubj".to_string(),
        }
    }
}

/// Top-k n-grams of one order, most frequent first (ties lexicographic).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramVocab {
    pub order: usize,
    pub capacity: usize,
    pub entries: Vec<String>,
}

impl NgramVocab {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn index(&self) -> HashMap<&str, usize> {
        self.entries.iter().enumerate().map(|(i, e)| (e.as_str(), i)).collect()
    }
}

/// Fitted, immutable feature layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub format: String,
    pub version: u32,
    pub keyword_list: Vec<String>,
    pub word_vocabs: Vec<NgramVocab>,
    pub pos_vocabs: Vec<NgramVocab>,
    pub nsubj_pair_vocab: Vec<(String, String)>,
    pub nsubj_capacity: usize,
    pub nsubj_label: String,
    /// Word n-grams are counted over lowercased tokens.
    pub lowercase_words: bool,
    /// Punctuation tokens are kept as ordinary tokens.
    pub keep_punctuation: bool,
    pub id: String,
}

impl FeatureSchema {
    pub fn total_dim(&self) -> usize {
        self.keyword_list.len()
            + self.word_vocabs.iter().map(NgramVocab::len).sum::<usize>()
            + self.pos_vocabs.iter().map(NgramVocab::len).sum::<usize>()
            + 1
            + self.nsubj_pair_vocab.len()
    }

    /// Offsets of each block within the feature vector.
    pub fn layout(&self) -> FeatureLayout {
        let keywords = 0;
        let words = keywords + self.keyword_list.len();
        let pos = words + self.word_vocabs.iter().map(NgramVocab::len).sum::<usize>();
        let imperative = pos + self.pos_vocabs.iter().map(NgramVocab::len).sum::<usize>();
        let nsubj = imperative + 1;
        FeatureLayout {
            keywords,
            words,
            pos,
            imperative,
            nsubj,
            total: nsubj + self.nsubj_pair_vocab.len(),
        }
    }

    fn compute_id(&self) -> String {
        let mut copy = self.clone();
        copy.id = String::new();
        let bytes = serde_json::to_vec(&copy).expect("schema serializes");
        hex::encode(&Sha256::digest(&bytes)[..8])
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let schema: FeatureSchema = serde_json::from_str(&text)?;
        if schema.format != SCHEMA_FORMAT || schema.version != SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!(
                "{}: unsupported schema {} v{}",
                path.display(),
                schema.format,
                schema.version
            )));
        }
        if schema.compute_id() != schema.id {
            return Err(Error::InvalidArgument(format!(
                "{}: schema id does not match its content",
                path.display()
            )));
        }
        Ok(schema)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureLayout {
    pub keywords: usize,
    pub words: usize,
    pub pos: usize,
    pub imperative: usize,
    pub nsubj: usize,
    pub total: usize,
}

/// Binary feature vector tied to the schema that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinguisticFeatureVector {
    pub values: Vec<u8>,
    pub schema_id: String,
}

impl LinguisticFeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        self.values.iter().enumerate().filter(|(_, &v)| v != 0).map(|(i, _)| i)
    }
}

fn lowercase_words(parsed: &ParsedSentence) -> Vec<String> {
    parsed.words().map(str::to_lowercase).collect()
}

fn ngrams<S: AsRef<str>>(items: &[S], n: usize) -> impl Iterator<Item = String> + '_ {
    items.windows(n).map(|w| {
        w.iter().map(AsRef::as_ref).collect::<Vec<&str>>().join(NGRAM_SEP)
    })
}

fn top_k<K: Ord + Clone>(counts: HashMap<K, usize>, k: usize) -> Vec<K> {
    let mut items: Vec<(K, usize)> = counts.into_iter().collect();
    items.sort_by(|(ka, ca), (kb, cb)| cb.cmp(ca).then_with(|| ka.cmp(kb)));
    items.truncate(k);
    items.into_iter().map(|(key, _)| key).collect()
}

fn fit_vocab<S: AsRef<str>>(sequences: &[Vec<S>], order: usize, capacity: usize) -> NgramVocab {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for seq in sequences {
        for g in ngrams(seq, order) {
            *counts.entry(g).or_default() += 1;
        }
    }
    NgramVocab {
        order,
        capacity,
        entries: top_k(counts, capacity),
    }
}

/// (head PoS, dependent PoS) for every arc carrying `label`.
pub fn nsubj_pairs<'a>(
    parsed: &'a ParsedSentence,
    label: &'a str,
) -> impl Iterator<Item = (&'a str, &'a str)> + 'a {
    parsed.arcs.iter().filter(move |a| a.relation == label).map(|a| {
        (
            parsed.tokens[a.head].pos.as_str(),
            parsed.tokens[a.dependent].pos.as_str(),
        )
    })
}

pub fn fit_schema(train: &[ParsedSentence]) -> Result<FeatureSchema> {
    fit_schema_with(train, &SchemaConfig::default())
}

pub fn fit_schema_with(train: &[ParsedSentence], config: &SchemaConfig) -> Result<FeatureSchema> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let words: Vec<Vec<String>> = train.iter().map(lowercase_words).collect();
    let tags: Vec<Vec<&str>> = train.iter().map(|p| p.tags().collect()).collect();

    let word_vocabs = (1..=3)
        .map(|n| fit_vocab(&words, n, config.word_capacities[n - 1]))
        .collect();
    let pos_vocabs = (1..=3)
        .map(|n| fit_vocab(&tags, n, config.pos_capacities[n - 1]))
        .collect();

    let mut pair_counts: HashMap<(String, String), usize> = HashMap::new();
    for p in train {
        for (h, d) in nsubj_pairs(p, &config.nsubj_label) {
            *pair_counts.entry((h.to_string(), d.to_string())).or_default() += 1;
        }
    }

    let mut schema = FeatureSchema {
        format: SCHEMA_FORMAT.to_string(),
        version: SCHEMA_VERSION,
        keyword_list: KEYWORDS.iter().map(|k| k.to_string()).collect(),
        word_vocabs,
        pos_vocabs,
        nsubj_pair_vocab: top_k(pair_counts, config.nsubj_capacity),
        nsubj_capacity: config.nsubj_capacity,
        nsubj_label: config.nsubj_label.clone(),
        lowercase_words: true,
        keep_punctuation: true,
        id: String::new(),
    };
    schema.id = schema.compute_id();
    Ok(schema)
}

/// 1 iff the first token is `VB`, or some `VB` token touches no nsubj arc.
pub fn imperative_vb_feature(parsed: &ParsedSentence) -> u8 {
    imperative_vb_feature_with(parsed, "nsubj")
}

pub fn imperative_vb_feature_with(parsed: &ParsedSentence, nsubj_label: &str) -> u8 {
    if parsed.tokens.first().is_some_and(|t| t.pos == "VB") {
        return 1;
    }
    let in_nsubj: HashSet<usize> = parsed
        .arcs
        .iter()
        .filter(|a| a.relation == nsubj_label)
        .flat_map(|a| [a.head, a.dependent])
        .collect();
    let free_vb = parsed
        .tokens
        .iter()
        .any(|t| t.pos == "VB" && !in_nsubj.contains(&t.index));
    u8::from(free_vb)
}

/// One bit per schema nsubj pair present in the sentence.
pub fn nsubj_pair_features(parsed: &ParsedSentence, schema: &FeatureSchema) -> Vec<u8> {
    let present: BTreeSet<(&str, &str)> = nsubj_pairs(parsed, &schema.nsubj_label).collect();
    schema
        .nsubj_pair_vocab
        .iter()
        .map(|(h, d)| u8::from(present.contains(&(h.as_str(), d.as_str()))))
        .collect()
}

/// Precomputed lookup tables for fast repeated extraction.
pub struct Extractor<'s> {
    schema: &'s FeatureSchema,
    layout: FeatureLayout,
    keywords: HashMap<&'s str, usize>,
    words: Vec<HashMap<&'s str, usize>>,
    pos: Vec<HashMap<&'s str, usize>>,
    word_offsets: Vec<usize>,
    pos_offsets: Vec<usize>,
}

impl<'s> Extractor<'s> {
    pub fn new(schema: &'s FeatureSchema) -> Self {
        let layout = schema.layout();
        let offsets = |vocabs: &[NgramVocab], start: usize| {
            vocabs
                .iter()
                .scan(start, |acc, v| {
                    let here = *acc;
                    *acc += v.len();
                    Some(here)
                })
                .collect::<Vec<_>>()
        };
        Extractor {
            schema,
            layout,
            keywords: schema
                .keyword_list
                .iter()
                .enumerate()
                .map(|(i, k)| (k.as_str(), i))
                .collect(),
            words: schema.word_vocabs.iter().map(NgramVocab::index).collect(),
            pos: schema.pos_vocabs.iter().map(NgramVocab::index).collect(),
            word_offsets: offsets(&schema.word_vocabs, layout.words),
            pos_offsets: offsets(&schema.pos_vocabs, layout.pos),
        }
    }

    pub fn extract(&self, parsed: &ParsedSentence) -> LinguisticFeatureVector {
        let mut values = vec![0u8; self.layout.total];
        let words = lowercase_words(parsed);
        for w in &words {
            if let Some(&i) = self.keywords.get(w.as_str()) {
                values[self.layout.keywords + i] = 1;
            }
        }
        for (vocab, (index, &offset)) in self
            .schema
            .word_vocabs
            .iter()
            .zip(self.words.iter().zip(&self.word_offsets))
        {
            for g in ngrams(&words, vocab.order) {
                if let Some(&i) = index.get(g.as_str()) {
                    values[offset + i] = 1;
                }
            }
        }
        let tags: Vec<&str> = parsed.tags().collect();
        for (vocab, (index, &offset)) in self
            .schema
            .pos_vocabs
            .iter()
            .zip(self.pos.iter().zip(&self.pos_offsets))
        {
            for g in ngrams(&tags, vocab.order) {
                if let Some(&i) = index.get(g.as_str()) {
                    values[offset + i] = 1;
                }
            }
        }
        values[self.layout.imperative] =
            imperative_vb_feature_with(parsed, &self.schema.nsubj_label);
        for (i, bit) in nsubj_pair_features(parsed, self.schema).into_iter().enumerate() {
            values[self.layout.nsubj + i] = bit;
        }
        LinguisticFeatureVector {
            values,
            schema_id: self.schema.id.clone(),
        }
    }
}

pub fn extract(parsed: &ParsedSentence, schema: &FeatureSchema) -> LinguisticFeatureVector {
    Extractor::new(schema).extract(parsed)
}
