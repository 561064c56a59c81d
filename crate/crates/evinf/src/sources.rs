//! Released-corpus inputs: annotation CSVs, split id lists and the article
//! directory.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::{Path, PathBuf};

use evinf_core::corpus::RawRow;
use evinf_core::preprocess::{strip_xml, SentenceSplitter};
use evinf_core::{ProcessedDocument, Split};

use crate::error::{read_to_string, CliError, Result};

/// Annotation row as read from CSV, with character offsets.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub line: usize,
    pub prompt_id: u64,
    pub article_id: String,
    pub user_id: i64,
    pub intervention: String,
    pub comparator: String,
    pub outcome: String,
    pub label: String,
    pub rationale: String,
    pub evidence_start: Option<usize>,
    pub evidence_end: Option<usize>,
    pub label_valid: bool,
    pub rationale_valid: bool,
}

/// Lowercase and drop everything but letters and digits, so that
/// `Evidence Start`, `evidence_start` and `EvidenceStart` agree.
fn normalize_header(h: &str) -> String {
    h.chars().filter(char::is_ascii_alphanumeric).map(|c| c.to_ascii_lowercase()).collect()
}

struct Columns(HashMap<String, usize>);

impl Columns {
    fn new(headers: &csv::StringRecord) -> Self {
        Columns(headers.iter().enumerate().map(|(i, h)| (normalize_header(h), i)).collect())
    }

    fn get<'r>(&self, rec: &'r csv::StringRecord, names: &[&str]) -> Option<&'r str> {
        names.iter().find_map(|n| self.0.get(*n)).and_then(|&i| rec.get(i)).map(str::trim)
    }

    fn has(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }
}

fn parse_flag(cell: Option<&str>) -> std::result::Result<bool, String> {
    match cell.map(|c| c.to_ascii_lowercase()) {
        None => Ok(true),
        Some(c) => match c.as_str() {
            "1" | "true" | "t" | "yes" | "y" | "1.0" => Ok(true),
            "0" | "false" | "f" | "no" | "n" | "0.0" => Ok(false),
            other => Err(format!("unrecognised validity flag {other:?}")),
        },
    }
}

/// Offsets below zero or empty cells mean "no offset".
fn parse_offset(cell: Option<&str>) -> std::result::Result<Option<usize>, String> {
    match cell {
        None | Some("") => Ok(None),
        Some(c) => {
            let v: f64 = c.parse().map_err(|_| format!("unparseable offset {c:?}"))?;
            Ok((v >= 0.0).then_some(v as usize))
        }
    }
}

fn parse_id<T: std::str::FromStr>(cell: Option<&str>, what: &str) -> std::result::Result<T, String> {
    let c = cell.ok_or_else(|| format!("missing {what}"))?;
    c.parse::<T>().or_else(|_| {
        // Ids are sometimes written as floats.
        c.parse::<f64>().ok().filter(|f| f.fract() == 0.0).and_then(|f| format!("{f:.0}").parse().ok()).ok_or_else(|| format!("unparseable {what} {c:?}"))
    })
}

/// ICO texts keyed by prompt id, from a prompts CSV.
pub fn read_prompts<R: Read>(input: R, source: &Path) -> Result<BTreeMap<u64, (String, [String; 3])>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let cols = Columns::new(rdr.headers().map_err(|e| CliError::data(source, e))?);
    for need in ["promptid", "intervention", "comparator", "outcome"] {
        if !cols.has(need) {
            return Err(CliError::data(source, format!("missing column {need}")));
        }
    }
    let mut out = BTreeMap::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::data(source, e))?;
        let id: u64 = parse_id(cols.get(&rec, &["promptid"]), "prompt id").map_err(|e| CliError::data(source, format!("row {}: {e}", n + 1)))?;
        let article = cols.get(&rec, &["pmcid", "articleid"]).unwrap_or("").to_string();
        let field = |name| cols.get(&rec, &[name]).unwrap_or("").to_string();
        out.insert(id, (article, [field("intervention"), field("comparator"), field("outcome")]));
    }
    Ok(out)
}

/// `(line, message)` for a row that could not be parsed.
pub type RowError = (usize, String);

/// Annotation rows. ICO texts come from `prompts` when given, else from the
/// annotation file itself. Rows that cannot be parsed are returned as
/// `(line, message)` errors instead of aborting.
pub fn read_annotations<R: Read>(
    input: R,
    source: &Path,
    prompts: Option<&BTreeMap<u64, (String, [String; 3])>>,
) -> Result<(Vec<CsvRow>, Vec<RowError>)> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let cols = Columns::new(rdr.headers().map_err(|e| CliError::data(source, e))?);
    for need in ["promptid", "userid"] {
        if !cols.has(need) {
            return Err(CliError::data(source, format!("missing column {need}")));
        }
    }
    if prompts.is_none() && !cols.has("intervention") {
        return Err(CliError::data(source, "no ICO columns and no prompts file"));
    }
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let line = n + 2;
        let rec = rec.map_err(|e| CliError::data(source, e))?;
        let parsed = (|| -> std::result::Result<CsvRow, String> {
            let prompt_id: u64 = parse_id(cols.get(&rec, &["promptid"]), "prompt id")?;
            let user_id: i64 = parse_id(cols.get(&rec, &["userid"]), "user id")?;
            let mut article_id = cols.get(&rec, &["pmcid", "articleid"]).unwrap_or("").to_string();
            let ico = match prompts {
                Some(map) => {
                    let (art, ico) = map.get(&prompt_id).ok_or_else(|| format!("prompt {prompt_id} not in the prompts file"))?;
                    if article_id.is_empty() {
                        article_id = art.clone();
                    }
                    ico.clone()
                }
                None => ["intervention", "comparator", "outcome"].map(|c| cols.get(&rec, &[c]).unwrap_or("").to_string()),
            };
            if article_id.is_empty() {
                return Err("missing article id".into());
            }
            let code = cols.get(&rec, &["labelcode"]).filter(|c| !c.is_empty());
            let label = code.or_else(|| cols.get(&rec, &["label"])).unwrap_or("").to_string();
            let [intervention, comparator, outcome] = ico;
            Ok(CsvRow {
                line,
                prompt_id,
                article_id,
                user_id,
                intervention,
                comparator,
                outcome,
                label,
                rationale: cols.get(&rec, &["annotations", "rationale", "evidence"]).unwrap_or("").to_string(),
                evidence_start: parse_offset(cols.get(&rec, &["evidencestart"]))?,
                evidence_end: parse_offset(cols.get(&rec, &["evidenceend"]))?,
                label_valid: parse_flag(cols.get(&rec, &["validlabel", "labelvalid"]))?,
                rationale_valid: parse_flag(cols.get(&rec, &["validreasoning", "rationalevalid", "validrationale"]))?,
            })
        })();
        match parsed {
            Ok(r) => rows.push(r),
            Err(e) => errors.push((line, e)),
        }
    }
    Ok((rows, errors))
}

/// Byte offset of the `chars`-th character, or the text length just past
/// the last character.
pub fn char_to_byte(text: &str, chars: usize) -> Option<usize> {
    text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len())).nth(chars)
}

/// Convert to core rows, turning character offsets into byte offsets of
/// the article text. Offsets past the end are dropped so that ingestion
/// falls back to fuzzy alignment.
pub fn to_raw_rows(rows: &[CsvRow], texts: &BTreeMap<String, String>) -> Vec<RawRow> {
    rows.iter()
        .map(|r| {
            let text = texts.get(&r.article_id).map(String::as_str).unwrap_or("");
            RawRow {
                prompt_id: r.prompt_id,
                article_id: r.article_id.clone(),
                user_id: r.user_id,
                intervention: r.intervention.clone(),
                comparator: r.comparator.clone(),
                outcome: r.outcome.clone(),
                label: r.label.clone(),
                rationale: r.rationale.clone(),
                evidence_start: r.evidence_start.and_then(|c| char_to_byte(text, c)),
                evidence_end: r.evidence_end.and_then(|c| char_to_byte(text, c)),
                label_valid: r.label_valid,
                rationale_valid: r.rationale_valid,
            }
        })
        .collect()
}

const SPLIT_FILES: [(Split, &[&str]); 3] = [
    (Split::Train, &["train_article_ids.txt", "train.txt"]),
    (Split::Dev, &["validation_article_ids.txt", "dev_article_ids.txt", "validation.txt", "dev.txt"]),
    (Split::Test, &["test_article_ids.txt", "test.txt"]),
];

/// Article id → split, from one id-per-line file per split in `dir`.
pub fn read_split_ids(dir: &Path) -> Result<BTreeMap<String, Split>> {
    let mut out = BTreeMap::new();
    for (split, names) in SPLIT_FILES {
        let Some(path) = names.iter().map(|n| dir.join(n)).find(|p| p.is_file()) else {
            return Err(CliError::data(dir, format!("no id file for the {split} split (tried {})", names.join(", "))));
        };
        for id in read_to_string(&path)?.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(prev) = out.insert(id.to_string(), split) {
                return Err(CliError::data(&path, format!("article {id} listed in both {prev} and {split}")));
            }
        }
    }
    Ok(out)
}

/// Directory of `.nxml`, `.xml` or `.txt` articles keyed by file stem,
/// optionally under `xml_files/` or `txt_files/` and with a `PMC` prefix.
#[derive(Clone, Debug)]
pub struct ArticleStore {
    root: PathBuf,
}

impl ArticleStore {
    pub fn new(root: &Path) -> Result<Self> {
        if !root.is_dir() {
            return Err(CliError::data(root, "article directory not found"));
        }
        Ok(ArticleStore { root: root.to_path_buf() })
    }

    /// First existing file for `id`; XML is preferred over plain text.
    pub fn resolve(&self, id: &str) -> Option<PathBuf> {
        let stems = [id.to_string(), format!("PMC{id}")];
        for (sub, exts) in [("xml_files", &["nxml", "xml"][..]), ("txt_files", &["txt"][..]), ("", &["nxml", "xml", "txt"][..])] {
            for stem in &stems {
                for ext in exts {
                    let p = self.root.join(sub).join(format!("{stem}.{ext}"));
                    if p.is_file() {
                        return Some(p);
                    }
                }
            }
        }
        None
    }

    /// Cleaned text of an article file: tags stripped from XML.
    pub fn read_text(path: &Path) -> Result<String> {
        let raw = read_to_string(path)?;
        let is_xml = matches!(path.extension().and_then(|e| e.to_str()), Some("xml" | "nxml"));
        Ok(if is_xml { strip_xml(&raw) } else { raw.split_whitespace().collect::<Vec<_>>().join(" ") })
    }

    pub fn load(&self, id: &str, splitter: &SentenceSplitter) -> Result<Option<ProcessedDocument>> {
        match self.resolve(id) {
            Some(p) => Ok(Some(ProcessedDocument::from_text(&ArticleStore::read_text(&p)?, splitter))),
            None => Ok(None),
        }
    }
}

/// Article files directly under `dir` (or `dir` itself if it is a file),
/// as `(id, path)` sorted by id.
pub fn list_article_files(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let is_article = |p: &Path| matches!(p.extension().and_then(|e| e.to_str()), Some("xml" | "nxml" | "txt"));
    let stem = |p: &Path| p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
    if dir.is_file() {
        return Ok(vec![(stem(dir), dir.to_path_buf())]);
    }
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.is_file() && is_article(&path) {
            out.push((stem(&path), path));
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ANNOTATIONS: &str = "\
UserID,PromptID,PMCID,Valid Label,Valid Reasoning,Label,Annotations,Label Code,In Abstract,Evidence Start,Evidence End
0,7,123,1,1,significantly increased,rose sharply,1,0,4,16
3,7,123,1,0,significantly increased,rose,,0,-1,-1
2,x,123,1,1,no significant difference,,0,0,,
";
    const PROMPTS: &str = "PromptID,PMCID,Outcome,Intervention,Comparator\n7,123,weight,drug a,drug b\n";

    #[test]
    fn released_layout_parses() {
        let prompts = read_prompts(PROMPTS.as_bytes(), Path::new("p")).unwrap();
        let (rows, errors) = read_annotations(ANNOTATIONS.as_bytes(), Path::new("a"), Some(&prompts)).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(errors.len(), 1);
        assert_eq!(errors[0].0, 4);
        let r = &rows[0];
        assert_eq!((r.user_id, r.prompt_id, r.article_id.as_str()), (0, 7, "123"));
        assert_eq!((r.intervention.as_str(), r.outcome.as_str()), ("drug a", "weight"));
        assert_eq!((r.label.as_str(), r.evidence_start, r.evidence_end), ("1", Some(4), Some(16)));
        assert!(r.label_valid && r.rationale_valid);
        let r = &rows[1];
        assert_eq!((r.label.as_str(), r.evidence_start), ("significantly increased", None));
        assert!(!r.rationale_valid);
    }

    #[test]
    fn character_offsets_become_byte_offsets() {
        let text = "αβ rose";
        assert_eq!(char_to_byte(text, 0), Some(0));
        assert_eq!(char_to_byte(text, 3), Some(5));
        assert_eq!(char_to_byte(text, 7), Some(text.len()));
        assert_eq!(char_to_byte(text, 8), None);
        let row = CsvRow {
            line: 2,
            prompt_id: 1,
            article_id: "a".into(),
            user_id: 0,
            intervention: "i".into(),
            comparator: "c".into(),
            outcome: "o".into(),
            label: "1".into(),
            rationale: "rose".into(),
            evidence_start: Some(3),
            evidence_end: Some(7),
            label_valid: true,
            rationale_valid: true,
        };
        let texts = BTreeMap::from([("a".to_string(), text.to_string())]);
        let raw = &to_raw_rows(&[row], &texts)[0];
        assert_eq!(&text[raw.evidence_start.unwrap()..raw.evidence_end.unwrap()], "rose");
    }

    #[test]
    fn missing_columns_are_reported() {
        assert!(read_prompts("PromptID,Outcome\n".as_bytes(), Path::new("p")).is_err());
        assert!(read_annotations("PromptID,PMCID\n".as_bytes(), Path::new("a"), None).is_err());
    }
}
