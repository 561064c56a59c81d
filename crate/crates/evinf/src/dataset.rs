//! Line-delimited JSON dataset files.
//!
//! Each line is one object tagged by `kind`: `article` (id, split, text and
//! sentence spans), `prompt` or `record`. Tokens are rebuilt from the
//! sentence spans on load.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use evinf_core::corpus::Article;
use evinf_core::preprocess::Span;
use evinf_core::{AnnotationRecord, Dataset, IcoPrompt, ProcessedDocument, Split};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Line {
    Article { id: String, split: Split, text: String, sentences: Vec<Span> },
    Prompt(IcoPrompt),
    Record(AnnotationRecord),
}

/// Serialize articles (by id), then prompts, then records.
pub fn write_dataset<W: Write>(dataset: &Dataset, mut out: W) -> std::io::Result<()> {
    let mut line = |l: &Line| -> std::io::Result<()> {
        serde_json::to_writer(&mut out, l)?;
        out.write_all(b"\n")
    };
    for (id, a) in &dataset.articles {
        line(&Line::Article {
            id: id.clone(),
            split: a.split,
            text: a.doc.text.clone(),
            sentences: a.doc.sentences.clone(),
        })?;
    }
    for p in &dataset.prompts {
        line(&Line::Prompt(p.clone()))?;
    }
    for r in &dataset.records {
        line(&Line::Record(r.clone()))?;
    }
    Ok(())
}

pub fn dataset_bytes(dataset: &Dataset) -> Vec<u8> {
    let mut buf = Vec::new();
    write_dataset(dataset, &mut buf).expect("writing to memory cannot fail");
    buf
}

/// Parse a dataset; `source` names the input in error messages.
pub fn read_dataset<R: BufRead>(input: R, source: &Path) -> Result<Dataset> {
    let mut articles = BTreeMap::new();
    let mut prompts = Vec::new();
    let mut records = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| CliError::io(source, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(&line).map_err(|e| CliError::data(source, format!("line {}: {e}", n + 1)))?;
        match parsed {
            Line::Article { id, split, text, sentences } => {
                let doc = ProcessedDocument::from_sentences(&text, sentences)
                    .map_err(|e| CliError::data(source, format!("line {}: {e}", n + 1)))?;
                if articles.insert(id.clone(), Article { doc, split }).is_some() {
                    return Err(CliError::data(source, format!("line {}: duplicate article {id}", n + 1)));
                }
            }
            Line::Prompt(p) => prompts.push(p),
            Line::Record(r) => records.push(r),
        }
    }
    Dataset::new(articles, prompts, records).map_err(|e| CliError::data(source, e))
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_dataset(BufReader::new(file), path)
}

pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    crate::error::write_bytes(path, dataset_bytes(dataset))
}

/// One processed document per line, for the `preprocess` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocumentLine {
    pub id: String,
    pub text: String,
    pub sentences: Vec<Span>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use evinf_core::corpus::{generate_synthetic, SynthConfig};

    #[test]
    fn synthetic_dataset_round_trips() {
        let synth = generate_synthetic(&SynthConfig { articles: 12, ..SynthConfig::default() }).unwrap();
        let bytes = dataset_bytes(&synth.dataset);
        let back = read_dataset(&bytes[..], Path::new("mem")).unwrap();
        assert_eq!(back, synth.dataset);
        assert_eq!(dataset_bytes(&back), bytes);
    }

    #[test]
    fn bad_lines_are_data_errors() {
        let err = read_dataset(&b"{\"kind\":\"nope\"}\n"[..], Path::new("mem")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let dangling = br#"{"kind":"prompt","prompt_id":1,"article_id":"x","intervention":"a","comparator":"b","outcome":"c"}"#;
        assert!(read_dataset(&dangling[..], Path::new("mem")).is_err());
    }
}
