//! PoS tags and dependency arcs from a pluggable parser backend.
//!
//! The parser itself lives outside this crate. Two backends ship here: a
//! frozen fixture table for deterministic tests, and an adapter that pipes
//! sentences through an external command speaking the fixture record format.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub index: usize,
    pub text: String,
    pub pos: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyArc {
    pub head: usize,
    pub dependent: usize,
    pub relation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedSentence {
    pub source_id: String,
    pub tokens: Vec<Token>,
    pub arcs: Vec<DependencyArc>,
}

impl ParsedSentence {
    /// Check index contiguity, non-empty tags and arc endpoints.
    pub fn validate(&self) -> Result<()> {
        for (i, t) in self.tokens.iter().enumerate() {
            if t.index != i {
                return Err(Error::Annotation(format!(
                    "token {i} carries index {}",
                    t.index
                )));
            }
            if t.pos.is_empty() {
                return Err(Error::Annotation(format!("token {i} ({:?}) has no PoS tag", t.text)));
            }
        }
        let n = self.tokens.len();
        for arc in &self.arcs {
            if arc.head >= n || arc.dependent >= n {
                return Err(Error::Annotation(format!(
                    "arc {}->{} ({}) references a token outside 0..{n}",
                    arc.head, arc.dependent, arc.relation
                )));
            }
            if arc.head == arc.dependent {
                return Err(Error::Annotation(format!(
                    "arc {}->{} ({}) is a self loop",
                    arc.head, arc.dependent, arc.relation
                )));
            }
        }
        Ok(())
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.text.as_str())
    }

    pub fn tags(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.pos.as_str())
    }
}

/// On-disk record: `{"text", "tokens":[{"text","pos"}], "arcs":[{"head","dep","rel"}]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub text: String,
    pub tokens: Vec<FixtureToken>,
    #[serde(default)]
    pub arcs: Vec<FixtureArc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureToken {
    pub text: String,
    pub pos: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureArc {
    pub head: usize,
    pub dep: usize,
    pub rel: String,
}

impl FixtureRecord {
    pub fn from_parsed(text: &str, parsed: &ParsedSentence) -> Self {
        FixtureRecord {
            text: text.to_string(),
            tokens: parsed
                .tokens
                .iter()
                .map(|t| FixtureToken {
                    text: t.text.clone(),
                    pos: t.pos.clone(),
                })
                .collect(),
            arcs: parsed
                .arcs
                .iter()
                .map(|a| FixtureArc {
                    head: a.head,
                    dep: a.dependent,
                    rel: a.relation.clone(),
                })
                .collect(),
        }
    }

    pub fn to_parsed(&self, source_id: &str) -> Result<ParsedSentence> {
        let parsed = ParsedSentence {
            source_id: source_id.to_string(),
            tokens: self
                .tokens
                .iter()
                .enumerate()
                .map(|(index, t)| Token {
                    index,
                    text: t.text.clone(),
                    pos: t.pos.clone(),
                })
                .collect(),
            arcs: self
                .arcs
                .iter()
                .map(|a| DependencyArc {
                    head: a.head,
                    dependent: a.dep,
                    relation: a.rel.clone(),
                })
                .collect(),
        };
        parsed.validate()?;
        Ok(parsed)
    }
}

/// A tagger + dependency parser.
pub trait Annotator: Send + Sync {
    fn annotate_text(&self, text: &str) -> Result<ParsedSentence>;

    /// Batch entry point; backends with per-call overhead override this.
    fn annotate_batch(&self, texts: &[&str]) -> Result<Vec<ParsedSentence>> {
        texts.iter().map(|t| self.annotate_text(t)).collect()
    }

    fn describe(&self) -> String;
}

/// Annotate one sentence, rejecting empty input and inconsistent backend output.
pub fn annotate(text: &str, backend: &dyn Annotator) -> Result<ParsedSentence> {
    if text.trim().is_empty() {
        return Err(Error::InvalidArgument("cannot annotate an empty sentence".into()));
    }
    let parsed = backend.annotate_text(text)?;
    parsed.validate()?;
    Ok(parsed)
}

/// Annotate `(id, text)` pairs in one backend round trip, stamping source ids.
pub fn annotate_all<'a>(
    items: impl IntoIterator<Item = (&'a str, &'a str)>,
    backend: &dyn Annotator,
) -> Result<Vec<ParsedSentence>> {
    let (ids, texts): (Vec<&str>, Vec<&str>) = items.into_iter().unzip();
    if let Some(pos) = texts.iter().position(|t| t.trim().is_empty()) {
        return Err(Error::InvalidArgument(format!("sentence {} is empty", ids[pos])));
    }
    let parsed = backend.annotate_batch(&texts)?;
    if parsed.len() != texts.len() {
        return Err(Error::Annotation(format!(
            "backend returned {} parses for {} sentences",
            parsed.len(),
            texts.len()
        )));
    }
    parsed
        .into_iter()
        .zip(ids)
        .map(|(mut p, id)| {
            p.validate()?;
            p.source_id = id.to_string();
            Ok(p)
        })
        .collect()
}

/// Immutable text → parse table.
#[derive(Debug, Clone, Default)]
pub struct FixtureAnnotator {
    table: HashMap<String, ParsedSentence>,
}

impl FixtureAnnotator {
    pub fn from_records(records: impl IntoIterator<Item = FixtureRecord>) -> Result<Self> {
        let mut table = HashMap::new();
        for rec in records {
            let parsed = rec.to_parsed("")?;
            table.entry(rec.text).or_insert(parsed);
        }
        Ok(FixtureAnnotator { table })
    }

    pub fn insert(&mut self, text: &str, parsed: ParsedSentence) -> Result<()> {
        parsed.validate()?;
        self.table.insert(text.to_string(), parsed);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn records(&self) -> Vec<FixtureRecord> {
        let mut out: Vec<FixtureRecord> = self
            .table
            .iter()
            .map(|(text, p)| FixtureRecord::from_parsed(text, p))
            .collect();
        out.sort_by(|a, b| a.text.cmp(&b.text));
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_fixture(path, &self.records())
    }
}

impl Annotator for FixtureAnnotator {
    fn annotate_text(&self, text: &str) -> Result<ParsedSentence> {
        self.table
            .get(text)
            .cloned()
            .ok_or_else(|| Error::Annotation(format!("sentence not in fixture: {text:?}")))
    }

    fn describe(&self) -> String {
        format!("fixture({} sentences)", self.table.len())
    }
}

/// Load a line-delimited fixture file.
pub fn load_fixture(path: impl AsRef<Path>) -> Result<FixtureAnnotator> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: FixtureRecord = serde_json::from_str(line)
            .map_err(|e| Error::parse(path, lineno + 1, e.to_string()))?;
        rec.to_parsed("")
            .map_err(|e| Error::parse(path, lineno + 1, e.to_string()))?;
        records.push(rec);
    }
    FixtureAnnotator::from_records(records)
}

pub fn write_fixture(path: impl AsRef<Path>, records: &[FixtureRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for rec in records {
        serde_json::to_writer(&mut out, rec)?;
        out.push(b'\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Runs an external program once per batch: sentences go to its stdin one
/// per line, and it must print one fixture record per line in the same order.
#[derive(Debug, Clone)]
pub struct CommandAnnotator {
    program: String,
    args: Vec<String>,
}

impl CommandAnnotator {
    /// Split a shell-like command line on whitespace (no quoting support).
    pub fn from_command_line(command: &str) -> Result<Self> {
        let mut parts = command.split_whitespace().map(str::to_string);
        let program = parts
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty parser command".into()))?;
        Ok(CommandAnnotator {
            program,
            args: parts.collect(),
        })
    }
}

impl Annotator for CommandAnnotator {
    fn annotate_text(&self, text: &str) -> Result<ParsedSentence> {
        let mut out = self.annotate_batch(&[text])?;
        Ok(out.remove(0))
    }

    fn annotate_batch(&self, texts: &[&str]) -> Result<Vec<ParsedSentence>> {
        if let Some(t) = texts.iter().find(|t| t.contains('\n')) {
            return Err(Error::InvalidArgument(format!("sentence contains a newline: {t:?}")));
        }
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::BackendUnavailable(format!("{}: {e}", self.program)))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let payload: String = texts.iter().flat_map(|t| [*t, "\n"]).collect();
        let writer = std::thread::spawn(move || stdin.write_all(payload.as_bytes()));

        let stdout = child.stdout.take().expect("piped stdout");
        let mut parsed = Vec::with_capacity(texts.len());
        for (i, line) in BufReader::new(stdout).lines().enumerate() {
            let line = line.map_err(|e| Error::Annotation(format!("reading parser output: {e}")))?;
            let rec: FixtureRecord = serde_json::from_str(&line)
                .map_err(|e| Error::Annotation(format!("parser output line {}: {e}", i + 1)))?;
            parsed.push(rec.to_parsed("")?);
        }
        writer
            .join()
            .map_err(|_| Error::Annotation("stdin writer panicked".into()))?
            .map_err(|e| Error::BackendUnavailable(format!("writing to parser: {e}")))?;
        let status = child
            .wait()
            .map_err(|e| Error::BackendUnavailable(format!("{}: {e}", self.program)))?;
        if !status.success() {
            return Err(Error::BackendUnavailable(format!(
                "{} exited with {status}",
                self.program
            )));
        }
        if parsed.len() != texts.len() {
            return Err(Error::Annotation(format!(
                "parser returned {} records for {} sentences",
                parsed.len(),
                texts.len()
            )));
        }
        Ok(parsed)
    }

    fn describe(&self) -> String {
        format!("command({} {})", self.program, self.args.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(text: &str, tokens: &[(&str, &str)], arcs: &[(usize, usize, &str)]) -> FixtureRecord {
        FixtureRecord {
            text: text.into(),
            tokens: tokens
                .iter()
                .map(|(t, p)| FixtureToken {
                    text: (*t).into(),
                    pos: (*p).into(),
                })
                .collect(),
            arcs: arcs
                .iter()
                .map(|(h, d, r)| FixtureArc {
                    head: *h,
                    dep: *d,
                    rel: (*r).into(),
                })
                .collect(),
        }
    }

    fn two_sentence_fixture() -> FixtureAnnotator {
        FixtureAnnotator::from_records([
            record("Get ready", &[("Get", "VB"), ("ready", "JJ")], &[(0, 1, "acomp")]),
            record(
                "I agree .",
                &[("I", "PRP"), ("agree", "VBP"), (".", ".")],
                &[(1, 0, "nsubj"), (1, 2, "punct")],
            ),
        ])
        .unwrap()
    }

    #[test]
    fn fixture_answers_only_known_sentences() {
        let fx = two_sentence_fixture();
        assert_eq!(annotate("Get ready", &fx).unwrap().tokens[0].pos, "VB");
        assert!(annotate("I agree .", &fx).is_ok());
        assert!(matches!(annotate("Unknown one", &fx), Err(Error::Annotation(_))));
        assert!(matches!(annotate("  ", &fx), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn fixture_round_trip() {
        let fx = two_sentence_fixture();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fx.jsonl");
        fx.save(&path).unwrap();
        let back = load_fixture(&path).unwrap();
        for text in ["Get ready", "I agree ."] {
            assert_eq!(annotate(text, &back).unwrap(), annotate(text, &fx).unwrap());
        }
    }

    #[test]
    fn out_of_range_arc_is_a_load_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        let bad = record(
            "a b c d e",
            &[("a", "DT"), ("b", "NN"), ("c", "VBZ"), ("d", "JJ"), ("e", ".")],
            &[(2, 99, "dep")],
        );
        write_fixture(&path, &[bad]).unwrap();
        assert!(matches!(load_fixture(&path), Err(Error::Parse { line: 1, .. })));

        fs::write(&path, "{not json}\n").unwrap();
        assert!(matches!(load_fixture(&path), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn self_loop_rejected() {
        let p = record("a b", &[("a", "DT"), ("b", "NN")], &[(1, 1, "dep")]).to_parsed("x");
        assert!(p.is_err());
    }

    #[test]
    fn missing_command_is_unavailable() {
        let cmd = CommandAnnotator::from_command_line("/definitely/not/a/parser --x").unwrap();
        assert!(matches!(
            annotate("Get ready", &cmd),
            Err(Error::BackendUnavailable(_))
        ));
    }

    #[cfg(unix)]
    #[test]
    fn command_backend_reads_records() {
        let dir = tempfile::tempdir().unwrap();
        let script = dir.path().join("parser.sh");
        let line = serde_json::to_string(&record("x", &[("Go", "VB")], &[])).unwrap();
        fs::write(
            &script,
            format!("#!/bin/sh\nwhile read -r l; do echo '{line}'; done\n"),
        )
        .unwrap();
        let cmd = CommandAnnotator::from_command_line(&format!("sh {}", script.display())).unwrap();
        let out = annotate_all([("a", "Go"), ("b", "Go now")], &cmd).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[1].source_id, "b");
        assert_eq!(out[0].tokens[0].pos, "VB");
    }
}
