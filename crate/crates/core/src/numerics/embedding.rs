use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Parameter, Tensor2};
use crate::error::{Error, Result};
use crate::preprocess::{Vocabulary, PAD_ID};

/// Token embedding table, one row per vocabulary id. Frozen unless
/// `table.trainable` is set. The PAD row is all zeros.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Embeddings {
    pub table: Parameter,
}

/// Parsed `token v1 v2 ... vk` text vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct WordVectors {
    pub dim: usize,
    pub entries: Vec<(String, Vec<f64>)>,
}

/// Parse word2vec-style text vectors. The dimension is taken from the first
/// vector line; a leading `count dim` header line is skipped.
pub fn parse_word_vectors(text: &str) -> Result<WordVectors> {
    let mut dim = None;
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let values: Vec<&str> = fields.collect();
        if lineno == 0 && values.len() == 1 && token.parse::<u64>().is_ok() && values[0].parse::<u64>().is_ok() {
            continue;
        }
        let parsed = values
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<core::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        let expected = *dim.get_or_insert(parsed.len());
        if parsed.len() != expected || expected == 0 {
            return Err(Error::Parse(format!(
                "line {}: expected {expected} components, found {}",
                lineno + 1,
                parsed.len()
            )));
        }
        entries.push((token.to_string(), parsed));
    }
    let dim = dim.ok_or(Error::EmptyInput("word vector file"))?;
    Ok(WordVectors { dim, entries })
}

impl Embeddings {
    /// N(0, std²) rows; PAD stays zero.
    pub fn random<R: Rng + ?Sized>(vocab_len: usize, dim: usize, std: f64, rng: &mut R) -> Self {
        let mut table = Tensor2::random_normal(vocab_len, dim, std, rng);
        table.row_mut(PAD_ID as usize).fill(0.0);
        Embeddings { table: Parameter::frozen(table) }
    }

    /// Rows for tokens found in `vectors` are copied (matched on the
    /// lowercased token); the rest are drawn as in [`Embeddings::random`].
    pub fn from_pretrained<R: Rng + ?Sized>(vocab: &Vocabulary, vectors: &WordVectors, std: f64, rng: &mut R) -> Self {
        let mut emb = Embeddings::random(vocab.len(), vectors.dim, std, rng);
        for (token, values) in &vectors.entries {
            let id = vocab.lookup(&token.to_lowercase());
            if id as usize >= crate::preprocess::RESERVED {
                emb.table.value.row_mut(id as usize).copy_from_slice(values);
            }
        }
        emb
    }

    pub fn zeros(vocab_len: usize, dim: usize) -> Self {
        Embeddings { table: Parameter::frozen(Tensor2::zeros(vocab_len, dim)) }
    }

    pub fn dim(&self) -> usize {
        self.table.value.cols()
    }

    pub fn vocab_len(&self) -> usize {
        self.table.value.rows()
    }

    pub fn lookup(&self, id: u32) -> &[f64] {
        self.table.value.row(id as usize)
    }

    pub fn trainable(&self) -> bool {
        self.table.trainable
    }

    /// Accumulate a gradient for one row; a no-op while frozen.
    pub fn accumulate(&mut self, id: u32, grad: &[f64]) {
        if self.table.trainable {
            for (g, d) in self.table.grad.row_mut(id as usize).iter_mut().zip(grad) {
                *g += d;
            }
        }
    }
}
