//! Hand-written fixture files for the rule baseline and the sentence splitter.

use evinf_core::heuristics::Heuristics;
use evinf_core::preprocess::SentenceSplitter;
use evinf_core::{IcoPrompt, Label};

const GOLDEN: &str = include_str!("fixtures/heuristics_golden.tsv");
const SENTENCES: &str = include_str!("fixtures/sentences.txt");

fn golden_rows() -> Vec<(Label, &'static str, &'static str)> {
    GOLDEN
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let mut cols = l.splitn(3, '\t');
            let code: i64 = cols.next().unwrap().parse().unwrap();
            let branch = cols.next().unwrap();
            let sentence = cols.next().unwrap();
            (Label::from_code(code).unwrap(), branch, sentence)
        })
        .collect()
}

#[test]
fn heuristics_golden_file() {
    let rows = golden_rows();
    assert!(rows.len() >= 40, "only {} golden rows", rows.len());
    let prompt = IcoPrompt {
        prompt_id: 0,
        article_id: "golden".into(),
        intervention: "metformin".into(),
        comparator: "placebo".into(),
        outcome: "HbA1c".into(),
    };
    let h = Heuristics::default();
    let failures: Vec<String> = rows
        .iter()
        .filter_map(|&(want, branch, s)| {
            let got = h.classify_oracle(s, &prompt).unwrap();
            (got != want).then(|| format!("{branch}: want {want:?}, got {got:?}: {s}"))
        })
        .collect();
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn golden_file_covers_every_branch() {
    let rows = golden_rows();
    for prefix in ["eq-", "gt-", "lt-", "nearest-", "sum-", "tie-", "no-p-", "direction-"] {
        assert!(rows.iter().filter(|r| r.1.starts_with(prefix)).count() >= 2, "branch {prefix} under-covered");
    }
    assert!(rows.iter().any(|r| r.1 == "no-p-synonym-tie" && r.0 == Label::SigIncreased));
}

fn sentence_documents() -> Vec<Vec<&'static str>> {
    let mut docs = vec![Vec::new()];
    for line in SENTENCES.lines().filter(|l| !l.starts_with('#')) {
        if line.trim().is_empty() {
            if !docs.last().unwrap().is_empty() {
                docs.push(Vec::new());
            }
        } else {
            docs.last_mut().unwrap().push(line);
        }
    }
    docs.retain(|d| !d.is_empty());
    docs
}

#[test]
fn sentence_splitter_matches_hand_segmentation() {
    let docs = sentence_documents();
    assert_eq!(docs.iter().map(Vec::len).sum::<usize>(), 50);
    let splitter = SentenceSplitter::default();
    for doc in docs {
        let text = doc.join(" ");
        let got: Vec<&str> = splitter.split(&text).iter().map(|s| &text[s.start..s.end]).collect();
        assert_eq!(got, doc);
    }
}
