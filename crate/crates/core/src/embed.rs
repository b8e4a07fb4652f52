//! Pretrained word vectors and fixed-length index sequences.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const PAD_INDEX: usize = 0;
pub const OOV_INDEX: usize = 1;
pub const DEFAULT_MAX_LEN: usize = 60;
pub const DEFAULT_DIM: usize = 300;

/// Row-major `(|vocab| + 2) x dim` matrix. Row 0 is padding, row 1 is OOV,
/// both all zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable<T> {
    dim: usize,
    vocab: HashMap<String, usize>,
    matrix: Vec<T>,
}

impl<T: Scalar> EmbeddingTable<T> {
    /// Build from `(token, vector)` rows; later duplicates are ignored.
    pub fn from_rows<I, S>(dim: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<T>)>,
        S: Into<String>,
    {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dim must be positive".into()));
        }
        let mut table = EmbeddingTable {
            dim,
            vocab: HashMap::new(),
            matrix: vec![T::zero(); 2 * dim],
        };
        for (token, vector) in rows {
            if vector.len() != dim {
                return Err(Error::WidthMismatch {
                    what: "embedding row",
                    expected: dim,
                    got: vector.len(),
                });
            }
            table.push(token.into(), &vector);
        }
        Ok(table)
    }

    fn push(&mut self, token: String, vector: &[T]) {
        let next = self.rows();
        if let std::collections::hash_map::Entry::Vacant(e) = self.vocab.entry(token) {
            e.insert(next);
            self.matrix.extend_from_slice(vector);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    /// Number of matrix rows, including padding and OOV.
    pub fn rows(&self) -> usize {
        self.matrix.len() / self.dim
    }

    pub fn row(&self, index: usize) -> &[T] {
        &self.matrix[index * self.dim..(index + 1) * self.dim]
    }

    pub fn matrix(&self) -> &[T] {
        &self.matrix
    }

    pub fn lookup(&self, token: &str) -> usize {
        self.vocab.get(token).copied().unwrap_or(OOV_INDEX)
    }

    /// Keep only the rows for `tokens` (lowercased lookup keys), renumbered.
    pub fn restrict<'a>(&self, tokens: impl IntoIterator<Item = &'a str>) -> Self {
        let mut wanted: Vec<(usize, String)> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for t in tokens {
            let key = t.to_lowercase();
            if let Some(&row) = self.vocab.get(&key) {
                if seen.insert(row) {
                    wanted.push((row, key));
                }
            }
        }
        wanted.sort();
        let mut out = EmbeddingTable {
            dim: self.dim,
            vocab: HashMap::with_capacity(wanted.len()),
            matrix: vec![T::zero(); 2 * self.dim],
        };
        for (row, key) in wanted {
            let v = self.row(row).to_vec();
            out.push(key, &v);
        }
        out
    }

    /// Content hash over dimension, token order and values.
    pub fn fingerprint(&self) -> String {
        let mut tokens: Vec<(&String, &usize)> = self.vocab.iter().collect();
        tokens.sort_by_key(|(_, &i)| i);
        let mut h = Sha256::new();
        h.update((self.dim as u64).to_le_bytes());
        for (t, _) in tokens {
            h.update((t.len() as u64).to_le_bytes());
            h.update(t.as_bytes());
        }
        for v in &self.matrix {
            h.update(v.as_f64().to_le_bytes());
        }
        hex::encode(&h.finalize()[..8])
    }
}

/// Load a GloVe-style text file: `token v1 ... v_dim` per line.
pub fn load_embeddings<T: Scalar>(path: impl AsRef<Path>, dim: usize) -> Result<EmbeddingTable<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut table = EmbeddingTable::from_rows(dim, std::iter::empty::<(String, Vec<T>)>())?;
    let mut values: Vec<T> = Vec::with_capacity(dim);
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        values.clear();
        for f in fields {
            let x: f64 = f.parse().map_err(|_| {
                Error::parse(path, lineno + 1, format!("not a number: {f:?}"))
            })?;
            values.push(T::lit(x));
        }
        if values.len() != dim {
            return Err(Error::parse(
                path,
                lineno + 1,
                format!("expected {dim} values, found {}", values.len()),
            ));
        }
        table.push(token.to_string(), &values);
    }
    Ok(table)
}

/// Write `table` in the text format [`load_embeddings`] reads, rows in
/// index order, so a reload reproduces the same indices and values.
pub fn save_embeddings<T: Scalar>(table: &EmbeddingTable<T>, path: impl AsRef<Path>) -> Result<()> {
    use std::fmt::Write;
    let path = path.as_ref();
    let mut tokens: Vec<(&String, &usize)> = table.vocab.iter().collect();
    tokens.sort_by_key(|(_, &i)| i);
    let mut out = String::new();
    for (token, &row) in tokens {
        out.push_str(token);
        for v in table.row(row) {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Fixed-length index sequence; positions `>= true_length` hold [`PAD_INDEX`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedSequence {
    pub indices: Vec<usize>,
    pub true_length: usize,
}

/// Lowercase, look up, truncate on the right and right-pad to `max_len`.
pub fn encode<T: Scalar, S: AsRef<str>>(
    tokens: &[S],
    table: &EmbeddingTable<T>,
    max_len: usize,
) -> EncodedSequence {
    assert!(max_len >= 1, "max_len must be at least 1");
    let mut indices: Vec<usize> = tokens
        .iter()
        .take(max_len)
        .map(|t| table.lookup(&t.as_ref().to_lowercase()))
        .collect();
    let true_length = indices.len();
    indices.resize(max_len, PAD_INDEX);
    EncodedSequence {
        indices,
        true_length,
    }
}
