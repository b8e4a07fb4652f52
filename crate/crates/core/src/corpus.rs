//! Labeled and unlabeled review-sentence datasets: loading, statistics and
//! stratified splitting.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Binary target class. `Suggestive` is the rare positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Label {
    NonSuggestive = 0,
    Suggestive = 1,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::NonSuggestive, Label::Suggestive];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Label> {
        match i {
            0 => Some(Label::NonSuggestive),
            1 => Some(Label::Suggestive),
            _ => None,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Suggestive
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        l as u8
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        Label::from_index(v as usize).ok_or_else(|| format!("label {v} outside {{0,1}}"))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSentence {
    pub id: String,
    pub text: String,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnlabeledSentence {
    pub id: String,
    pub text: String,
}

/// An ordered collection of labeled sentences with unique ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledDataset {
    sentences: Vec<LabeledSentence>,
    index: HashMap<String, usize>,
}

impl LabeledDataset {
    pub fn new(sentences: Vec<LabeledSentence>) -> Result<Self> {
        let mut index = HashMap::with_capacity(sentences.len());
        for (i, s) in sentences.iter().enumerate() {
            if s.text.trim().is_empty() {
                return Err(Error::InvalidArgument(format!("sentence {} has empty text", s.id)));
            }
            if index.insert(s.id.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate id {}", s.id)));
            }
        }
        Ok(LabeledDataset { sentences, index })
    }

    pub fn sentences(&self) -> &[LabeledSentence] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&LabeledSentence> {
        self.index.get(id).map(|&i| &self.sentences[i])
    }

    pub fn ids(&self) -> Vec<String> {
        self.sentences.iter().map(|s| s.id.clone()).collect()
    }

    /// Look up each id, failing on the first unknown one.
    pub fn select(&self, ids: &[String]) -> Result<Vec<&LabeledSentence>> {
        ids.iter()
            .map(|id| {
                self.get(id)
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown sentence id {id}")))
            })
            .collect()
    }
}

/// Unlabeled sentences in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UnlabeledPool {
    pub sentences: Vec<UnlabeledSentence>,
}

impl UnlabeledPool {
    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

/// Sentence-level class counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_total: usize,
    pub n_positive: usize,
    pub n_negative: usize,
    /// Negatives per positive; `None` when there are no positives.
    pub imbalance_ratio: Option<f64>,
}

impl DatasetStats {
    /// `1:17.5` style rendering.
    pub fn ratio_display(&self) -> String {
        match self.imbalance_ratio {
            Some(r) => format!("1:{r:.1}"),
            None => "1:inf".to_string(),
        }
    }
}

/// One cross-validation fold. The three id lists partition the dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub fold_index: usize,
    pub train_ids: Vec<String>,
    pub validation_ids: Vec<String>,
    pub test_ids: Vec<String>,
}

pub const DEFAULT_VALIDATION_FRACTION: f64 = 0.1;

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn strip_cr(line: &str) -> &str {
    line.strip_suffix('\r').unwrap_or(line)
}

/// Load a `label<TAB>text` file. Ids are `s000001`, `s000002`, ... in file order.
pub fn load_labeled(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let content = read_text(path)?;
    let mut sentences = Vec::new();
    for (lineno, raw) in content.lines().enumerate() {
        let line = strip_cr(raw);
        if line.trim().is_empty() {
            continue;
        }
        let (label, text) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, lineno + 1, "expected \"label<TAB>text\""))?;
        let label = match label.trim() {
            "0" => Label::NonSuggestive,
            "1" => Label::Suggestive,
            other => {
                return Err(Error::parse(
                    path,
                    lineno + 1,
                    format!("label {other:?} outside {{0,1}}"),
                ))
            }
        };
        if text.trim().is_empty() {
            return Err(Error::parse(path, lineno + 1, "empty sentence text"));
        }
        sentences.push(LabeledSentence {
            id: format!("s{:06}", sentences.len() + 1),
            text: text.to_string(),
            label,
        });
    }
    if sentences.is_empty() {
        return Err(Error::EmptyDataset);
    }
    LabeledDataset::new(sentences)
}

/// Write a dataset back in the labeled TSV format.
pub fn save_labeled(dataset: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for s in dataset.sentences() {
        writeln!(out, "{}\t{}", s.label, s.text).expect("write to Vec");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Load one sentence per line, keeping at most `limit` non-blank lines.
/// Ids are `u000001`, ... so they never collide with labeled ids.
pub fn load_unlabeled(path: impl AsRef<Path>, limit: Option<usize>) -> Result<UnlabeledPool> {
    let path = path.as_ref();
    let content = read_text(path)?;
    let limit = limit.unwrap_or(usize::MAX);
    let sentences = content
        .lines()
        .map(strip_cr)
        .filter(|l| !l.trim().is_empty())
        .take(limit)
        .enumerate()
        .map(|(i, text)| UnlabeledSentence {
            id: format!("u{:06}", i + 1),
            text: text.to_string(),
        })
        .collect();
    Ok(UnlabeledPool { sentences })
}

pub fn compute_stats(dataset: &LabeledDataset) -> Result<DatasetStats> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n_positive = dataset.sentences().iter().filter(|s| s.label.is_positive()).count();
    let n_total = dataset.len();
    let n_negative = n_total - n_positive;
    let imbalance_ratio = (n_positive > 0).then(|| n_negative as f64 / n_positive as f64);
    Ok(DatasetStats {
        n_total,
        n_positive,
        n_negative,
        imbalance_ratio,
    })
}

fn ids_by_class<'a>(
    items: impl Iterator<Item = &'a LabeledSentence>,
) -> [Vec<String>; 2] {
    let mut by_class: [Vec<String>; 2] = Default::default();
    for s in items {
        by_class[s.label.index()].push(s.id.clone());
    }
    by_class
}

/// Stratified k-fold split with a validation part carved from each training
/// part (default fraction 0.1).
pub fn make_folds(dataset: &LabeledDataset, k: usize, seed: u64) -> Result<Vec<FoldSplit>> {
    make_folds_with_validation(dataset, k, seed, DEFAULT_VALIDATION_FRACTION)
}

pub fn make_folds_with_validation(
    dataset: &LabeledDataset,
    k: usize,
    seed: u64,
    validation_fraction: f64,
) -> Result<Vec<FoldSplit>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    let mut by_class = ids_by_class(dataset.sentences().iter());
    for (class, ids) in by_class.iter().enumerate() {
        if ids.len() < k {
            return Err(Error::InvalidArgument(format!(
                "class {class} has {} instances, fewer than k = {k}",
                ids.len()
            )));
        }
    }

    // Deal the shuffled classes round-robin as one continuous sequence so the
    // per-class remainders land on different folds and totals stay within 1.
    let mut rng = seed::rng(seed, &["folds"]);
    let mut assignment: HashMap<&str, usize> = HashMap::with_capacity(dataset.len());
    let mut cursor = 0usize;
    for ids in by_class.iter_mut().rev() {
        ids.shuffle(&mut rng);
        for id in ids.iter() {
            assignment.insert(id.as_str(), cursor % k);
            cursor += 1;
        }
    }

    let mut folds = Vec::with_capacity(k);
    for fold in 0..k {
        let mut test_ids = Vec::new();
        let mut rest = Vec::new();
        for s in dataset.sentences() {
            if assignment[s.id.as_str()] == fold {
                test_ids.push(s.id.clone());
            } else {
                rest.push(s.id.clone());
            }
        }
        let (train_ids, validation_ids) = split_validation(
            dataset,
            &rest,
            validation_fraction,
            seed::sub_seed(seed, &["validation", &fold.to_string()]),
        )?;
        folds.push(FoldSplit {
            fold_index: fold,
            train_ids,
            validation_ids,
            test_ids,
        });
    }
    Ok(folds)
}

/// Stratified split of `ids` into (train, validation).
///
/// The validation size is `round(fraction * n)`, allocated across classes by
/// largest remainder (ties favour the positive class). Any class with at
/// least two members must appear on both sides.
pub fn split_validation(
    dataset: &LabeledDataset,
    ids: &[String],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<String>, Vec<String>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "validation fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let members = dataset.select(ids)?;
    let mut by_class = ids_by_class(members.iter().copied());
    let n = ids.len();
    let n_val = (fraction * n as f64).round() as usize;
    if n_val == 0 {
        return Err(Error::InvalidArgument(format!(
            "fraction {fraction} of {n} ids leaves the validation part empty"
        )));
    }
    if n_val >= n {
        return Err(Error::InvalidArgument(format!(
            "fraction {fraction} of {n} ids leaves the training part empty"
        )));
    }

    let quotas: Vec<f64> = by_class.iter().map(|c| fraction * c.len() as f64).collect();
    let mut take: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut remaining = n_val - take.iter().sum::<usize>();
    let mut order: Vec<usize> = vec![1, 0];
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).expect("finite").then(b.cmp(&a))
    });
    for &class in &order {
        if remaining == 0 {
            break;
        }
        if take[class] < by_class[class].len() {
            take[class] += 1;
            remaining -= 1;
        }
    }

    for (class, ids) in by_class.iter().enumerate() {
        if ids.len() >= 2 && (take[class] == 0 || take[class] == ids.len()) {
            return Err(Error::InvalidArgument(format!(
                "fraction {fraction} leaves class {class} empty in the {} part",
                if take[class] == 0 { "validation" } else { "training" }
            )));
        }
    }

    let mut rng = seed::rng(seed, &["split_validation"]);
    let mut validation: HashSet<String> = HashSet::with_capacity(n_val);
    for (class, ids) in by_class.iter_mut().enumerate() {
        ids.shuffle(&mut rng);
        validation.extend(ids.iter().take(take[class]).cloned());
    }
    let (val, train): (Vec<String>, Vec<String>) =
        ids.iter().cloned().partition(|id| validation.contains(id));
    Ok((train, val))
}
