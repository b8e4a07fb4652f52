//! Generated review-like corpora with a known labelling rule: a sentence is
//! suggestive iff it has an imperative verb and contains a keyword. Parses
//! come with the sentences, so no external parser is needed.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::annotate::{DependencyArc, FixtureAnnotator, ParsedSentence, Token};
use crate::corpus::{save_labeled, Label, LabeledDataset, LabeledSentence, UnlabeledPool, UnlabeledSentence};
use crate::embed::{save_embeddings, EmbeddingTable};
use crate::error::{Error, Result};
use crate::lexfeat::{imperative_vb_feature, KEYWORDS};
use crate::scalar::Scalar;
use crate::seed;

const VERBS: [&str; 16] = [
    "book", "try", "bring", "visit", "avoid", "check", "take", "get", "order", "pack", "reserve",
    "choose", "skip", "call", "pick", "grab",
];
const KEYWORD_VERBS: [&str; 6] = ["ask", "request", "suggest", "recommend", "advise", "warn"];
const PAST: [&str; 10] = [
    "booked", "tried", "visited", "loved", "enjoyed", "found", "liked", "hated", "used", "ordered",
];
const PRESENT: [&str; 5] = ["love", "like", "need", "want", "prefer"];
const PRONOUNS: [&str; 4] = ["we", "i", "they", "you"];
const DETERMINERS: [&str; 4] = ["the", "a", "this", "that"];
const NOUNS: [&str; 16] = [
    "room", "breakfast", "pool", "staff", "camera", "battery", "lens", "view", "bar", "lobby",
    "menu", "screen", "charger", "bed", "shuttle", "suite",
];
const KEYWORD_NOUNS: [&str; 5] = ["tip", "advice", "suggestion", "warning", "recommendation"];
const ADJECTIVES: [&str; 8] = ["great", "small", "noisy", "clean", "cheap", "bright", "slow", "friendly"];
const PREPOSITIONS: [&str; 5] = ["for", "in", "at", "near", "with"];
const ADVERBS: [&str; 4] = ["early", "here", "again", "really"];
const MODALS: [&str; 4] = ["should", "can", "would", "will"];
const COPULAS: [&str; 2] = ["was", "seemed"];

/// Tokens plus arcs under construction.
struct Builder {
    tokens: Vec<(String, &'static str)>,
    arcs: Vec<(usize, usize, &'static str)>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            tokens: Vec::new(),
            arcs: Vec::new(),
        }
    }

    fn push(&mut self, word: &str, tag: &'static str) -> usize {
        self.tokens.push((word.to_string(), tag));
        self.tokens.len() - 1
    }

    fn arc(&mut self, head: usize, dep: usize, rel: &'static str) {
        self.arcs.push((head, dep, rel));
    }

    /// `DT NN`, attached to `head` with `rel`.
    fn noun_phrase(&mut self, rng: &mut ChaCha8Rng, head: usize, rel: &'static str, nouns: &[&str]) -> usize {
        let det = self.push(DETERMINERS.choose(rng).unwrap(), "DT");
        let n = self.push(nouns.choose(rng).unwrap(), "NN");
        self.arc(n, det, "det");
        self.arc(head, n, rel);
        n
    }

    fn tail(&mut self, rng: &mut ChaCha8Rng, verb: usize) {
        if rng.random_bool(0.5) {
            let prep = self.push(PREPOSITIONS.choose(rng).unwrap(), "IN");
            self.arc(verb, prep, "prep");
            self.noun_phrase(rng, prep, "pobj", &NOUNS);
        }
        if rng.random_bool(0.4) {
            let adv = self.push(ADVERBS.choose(rng).unwrap(), "RB");
            self.arc(verb, adv, "advmod");
        }
    }

    fn finish(self) -> (String, ParsedSentence) {
        let text = self.tokens.iter().map(|(w, _)| w.as_str()).collect::<Vec<_>>().join(" ");
        let parsed = ParsedSentence {
            source_id: String::new(),
            tokens: self
                .tokens
                .into_iter()
                .enumerate()
                .map(|(index, (text, pos))| Token {
                    index,
                    text,
                    pos: pos.to_string(),
                })
                .collect(),
            arcs: self
                .arcs
                .into_iter()
                .map(|(head, dependent, rel)| DependencyArc {
                    head,
                    dependent,
                    relation: rel.to_string(),
                })
                .collect(),
        };
        (text, parsed)
    }
}

fn imperative(rng: &mut ChaCha8Rng, keyword: bool) -> (String, ParsedSentence) {
    let mut b = Builder::new();
    let choice = if keyword { rng.random_range(0..4) } else { 4 + rng.random_range(0..2) };
    match choice {
        0 => {
            let v = b.push(KEYWORD_VERBS.choose(rng).unwrap(), "VB");
            b.noun_phrase(rng, v, "dobj", &NOUNS);
            b.tail(rng, v);
        }
        1 => {
            let aux = b.push("do", "VB");
            let v = b.push(VERBS.choose(rng).unwrap(), "VB");
            b.arc(v, aux, "aux");
            b.noun_phrase(rng, v, "dobj", &NOUNS);
            b.tail(rng, v);
        }
        2 => {
            let k = b.push(KEYWORD_NOUNS.choose(rng).unwrap(), "NN");
            let colon = b.push(":", ":");
            let v = b.push(VERBS.choose(rng).unwrap(), "VB");
            b.arc(v, k, "dep");
            b.arc(v, colon, "punct");
            b.noun_phrase(rng, v, "dobj", &NOUNS);
            b.tail(rng, v);
        }
        3 => {
            let v = b.push(VERBS.choose(rng).unwrap(), "VB");
            let obj = b.noun_phrase(rng, v, "dobj", &NOUNS);
            let comma = b.push(",", ",");
            let not = b.push("not", "RB");
            b.arc(v, comma, "punct");
            b.arc(obj, not, "neg");
            b.noun_phrase(rng, obj, "appos", &NOUNS);
        }
        4 => {
            let v = b.push(VERBS.choose(rng).unwrap(), "VB");
            b.noun_phrase(rng, v, "dobj", &NOUNS);
            b.tail(rng, v);
        }
        _ => {
            let adv = b.push(ADVERBS.choose(rng).unwrap(), "RB");
            let v = b.push(VERBS.choose(rng).unwrap(), "VB");
            b.arc(v, adv, "advmod");
            b.noun_phrase(rng, v, "dobj", &NOUNS);
            b.tail(rng, v);
        }
    }
    b.finish()
}

fn declarative(rng: &mut ChaCha8Rng, keyword: bool) -> (String, ParsedSentence) {
    let mut b = Builder::new();
    let choice = if keyword { rng.random_range(0..3) } else { 3 + rng.random_range(0..3) };
    match choice {
        0 => {
            let subj = b.push(PRONOUNS.choose(rng).unwrap(), "PRP");
            let md = b.push(MODALS.choose(rng).unwrap(), "MD");
            let v = b.push(VERBS.choose(rng).unwrap(), "VB");
            b.arc(v, subj, "nsubj");
            b.arc(v, md, "aux");
            b.noun_phrase(rng, v, "dobj", &NOUNS);
            b.tail(rng, v);
        }
        1 => {
            let subj = b.push(PRONOUNS.choose(rng).unwrap(), "PRP");
            let v = b.push(PAST.choose(rng).unwrap(), "VBD");
            b.arc(v, subj, "nsubj");
            b.noun_phrase(rng, v, "dobj", &KEYWORD_NOUNS);
            b.tail(rng, v);
        }
        2 => {
            let subj = b.push(PRONOUNS.choose(rng).unwrap(), "PRP");
            let did = b.push("did", "VBD");
            let not = b.push("not", "RB");
            let v = b.push(PRESENT.choose(rng).unwrap(), "VB");
            b.arc(v, subj, "nsubj");
            b.arc(v, did, "aux");
            b.arc(v, not, "neg");
            b.noun_phrase(rng, v, "dobj", &NOUNS);
            b.tail(rng, v);
        }
        3 => {
            let subj = b.push(PRONOUNS.choose(rng).unwrap(), "PRP");
            let v = b.push(PAST.choose(rng).unwrap(), "VBD");
            b.arc(v, subj, "nsubj");
            b.noun_phrase(rng, v, "dobj", &NOUNS);
            b.tail(rng, v);
        }
        4 => {
            let det = b.push(DETERMINERS.choose(rng).unwrap(), "DT");
            let n = b.push(NOUNS.choose(rng).unwrap(), "NN");
            let cop = b.push(COPULAS.choose(rng).unwrap(), "VBD");
            let adj = b.push(ADJECTIVES.choose(rng).unwrap(), "JJ");
            b.arc(n, det, "det");
            b.arc(cop, n, "nsubj");
            b.arc(cop, adj, "acomp");
        }
        _ => {
            let subj = b.push(PRONOUNS.choose(rng).unwrap(), "PRP");
            let v = b.push(PRESENT.choose(rng).unwrap(), "VBP");
            b.arc(v, subj, "nsubj");
            b.noun_phrase(rng, v, "dobj", &NOUNS);
            b.tail(rng, v);
        }
    }
    b.finish()
}

/// The generator's ground truth, evaluated on a parse.
pub fn rule_label(parsed: &ParsedSentence) -> Label {
    let keyword = parsed
        .words()
        .any(|w| KEYWORDS.contains(&w.to_lowercase().as_str()));
    if keyword && imperative_vb_feature(parsed) == 1 {
        Label::Suggestive
    } else {
        Label::NonSuggestive
    }
}

/// Negative cells: imperative without keyword, keyword without imperative,
/// neither. Weights are relative.
const NEGATIVE_MIX: [(bool, bool, u32); 3] = [(true, false, 25), (false, true, 35), (false, false, 40)];

fn negative(rng: &mut ChaCha8Rng) -> (String, ParsedSentence) {
    let total: u32 = NEGATIVE_MIX.iter().map(|c| c.2).sum();
    let mut r = rng.random_range(0..total);
    for &(imp, kw, w) in &NEGATIVE_MIX {
        if r < w {
            return if imp { imperative(rng, kw) } else { declarative(rng, kw) };
        }
        r -= w;
    }
    unreachable!()
}

fn sentences(n_positive: usize, n_negative: usize, rng: &mut ChaCha8Rng) -> Vec<(String, ParsedSentence, Label)> {
    let mut out: Vec<(String, ParsedSentence, Label)> = (0..n_positive + n_negative)
        .map(|i| {
            let (text, parsed) = if i < n_positive {
                imperative(rng, true)
            } else {
                negative(rng)
            };
            let label = rule_label(&parsed);
            (text, parsed, label)
        })
        .collect();
    out.shuffle(rng);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    pub positive_rate: f64,
    pub embedding_dim: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_labeled: 2000,
            n_unlabeled: 5000,
            positive_rate: 0.1,
            embedding_dim: 16,
            seed: 7,
        }
    }
}

pub struct SyntheticCorpus {
    pub labeled: LabeledDataset,
    pub pool: UnlabeledPool,
    pub annotator: FixtureAnnotator,
    /// Gold labels of the pool sentences, by id.
    pub pool_labels: Vec<Label>,
    embedding_dim: usize,
    seed: u64,
}

pub struct SyntheticFiles {
    pub labeled: PathBuf,
    pub unlabeled: PathBuf,
    pub parses: PathBuf,
    pub embeddings: PathBuf,
}

pub fn generate(config: &SyntheticConfig) -> Result<SyntheticCorpus> {
    if !(0.0..=1.0).contains(&config.positive_rate) {
        return Err(Error::InvalidArgument("positive_rate must lie in [0, 1]".into()));
    }
    let n_pos = (config.positive_rate * config.n_labeled as f64).round() as usize;
    let mut rng = seed::rng(config.seed, &["synthetic", "labeled"]);
    let (labeled, mut annotator) = build_labeled(sentences(n_pos, config.n_labeled - n_pos, &mut rng))?;

    let u_pos = (config.positive_rate * config.n_unlabeled as f64).round() as usize;
    let mut rng = seed::rng(config.seed, &["synthetic", "pool"]);
    let mut pool = Vec::with_capacity(config.n_unlabeled);
    let mut pool_labels = Vec::with_capacity(config.n_unlabeled);
    for (i, (text, parsed, label)) in sentences(u_pos, config.n_unlabeled - u_pos, &mut rng)
        .into_iter()
        .enumerate()
    {
        annotator.insert(&text, parsed)?;
        pool.push(UnlabeledSentence {
            id: format!("u{:06}", i + 1),
            text,
        });
        pool_labels.push(label);
    }
    Ok(SyntheticCorpus {
        labeled,
        pool: UnlabeledPool { sentences: pool },
        annotator,
        pool_labels,
        embedding_dim: config.embedding_dim,
        seed: config.seed,
    })
}

fn build_labeled(items: Vec<(String, ParsedSentence, Label)>) -> Result<(LabeledDataset, FixtureAnnotator)> {
    let mut annotator = FixtureAnnotator::default();
    let mut out = Vec::with_capacity(items.len());
    for (i, (text, parsed, label)) in items.into_iter().enumerate() {
        annotator.insert(&text, parsed)?;
        out.push(LabeledSentence {
            id: format!("s{:06}", i + 1),
            text,
            label,
        });
    }
    Ok((LabeledDataset::new(out)?, annotator))
}

/// A labeled set with exactly `n_positive` suggestive sentences.
pub fn labeled_with_counts(n_positive: usize, n_negative: usize, seed: u64) -> Result<(LabeledDataset, FixtureAnnotator)> {
    let mut rng = seed::rng(seed, &["synthetic", "counts"]);
    build_labeled(sentences(n_positive, n_negative, &mut rng))
}

/// Every word the generator can emit, sorted.
pub fn vocabulary() -> Vec<&'static str> {
    let lists: [&[&'static str]; 14] = [
        &VERBS, &KEYWORD_VERBS, &PAST, &PRESENT, &PRONOUNS, &DETERMINERS, &NOUNS, &KEYWORD_NOUNS,
        &ADJECTIVES, &PREPOSITIONS, &ADVERBS, &MODALS, &COPULAS, &["do", "did", "not", ":", ","],
    ];
    let set: BTreeSet<&'static str> = lists.iter().flat_map(|l| l.iter().copied()).collect();
    set.into_iter().collect()
}

/// Random vectors, uniform in [-1, 1), one per vocabulary word.
pub fn embeddings<T: Scalar>(dim: usize, seed: u64) -> Result<EmbeddingTable<T>> {
    let mut rng = seed::rng(seed, &["synthetic", "embeddings"]);
    let rows: Vec<(&str, Vec<T>)> = vocabulary()
        .into_iter()
        .map(|w| (w, (0..dim).map(|_| T::lit(rng.random_range(-1.0..1.0))).collect()))
        .collect();
    EmbeddingTable::from_rows(dim, rows)
}

impl SyntheticCorpus {
    pub fn embeddings<T: Scalar>(&self) -> Result<EmbeddingTable<T>> {
        embeddings(self.embedding_dim, self.seed)
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding_dim
    }

    /// Write `labeled.tsv`, `unlabeled.txt`, `parses.jsonl` and `embeddings.txt`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<SyntheticFiles> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = SyntheticFiles {
            labeled: dir.join("labeled.tsv"),
            unlabeled: dir.join("unlabeled.txt"),
            parses: dir.join("parses.jsonl"),
            embeddings: dir.join("embeddings.txt"),
        };
        save_labeled(&self.labeled, &files.labeled)?;
        let mut pool = String::new();
        for s in &self.pool.sentences {
            pool.push_str(&s.text);
            pool.push('\n');
        }
        std::fs::write(&files.unlabeled, pool).map_err(|e| Error::io(&files.unlabeled, e))?;
        self.annotator.save(&files.parses)?;
        save_embeddings(&self.embeddings::<f64>()?, &files.embeddings)?;
        Ok(files)
    }
}
