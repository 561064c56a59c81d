use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AnnotationRecord, Article, Dataset, IcoPrompt, Label, Split};
use crate::error::{Error, Result};
use crate::numerics::seeded_rng;
use crate::preprocess::{ProcessedDocument, SentenceSplitter, Span};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub articles: usize,
    /// Between 2 and 5.
    pub prompts_per_article: usize,
    pub filler_sentences: usize,
    /// Size of each intervention / comparator / outcome name pool.
    pub name_pool: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { articles: 200, prompts_per_article: 4, filler_sentences: 12, name_pool: 24, seed: 0 }
    }
}

/// A generated dataset together with the index of each prompt's planted
/// evidence sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCorpus {
    pub dataset: Dataset,
    pub gold_sentence: BTreeMap<u64, usize>,
}

const SYLLABLES: &[&str] = &[
    "za", "lo", "tri", "ve", "mo", "ra", "ki", "nu", "pe", "do", "su", "fa", "xi", "bo", "ge", "ta", "mi", "co", "ju",
    "ne",
];
const INTERVENTION_SUFFIX: &[&str] = &["ine", "olol", "umab", "azide", "exin"];
const COMPARATOR_SUFFIX: &[&str] = &["cillin", "arin", "oxan", "etide"];
const OUTCOME_NOUN: &[&str] = &["titre", "clearance", "index", "concentration", "score"];

const INCREASE_VERBS: &[&str] = &["increased", "raised", "elevated", "improved"];
const DECREASE_VERBS: &[&str] = &["decreased", "reduced", "lowered"];

const FILLERS: &[&str] = &[
    "Participants were recruited from {n} outpatient clinics.",
    "The mean age of the cohort was {d} years.",
    "Baseline characteristics were similar between the groups.",
    "Data were analysed according to the intention to treat principle.",
    "Adverse events were recorded at each scheduled visit.",
    "The study protocol was approved by the local ethics committee.",
    "Randomisation was performed with sealed opaque envelopes.",
    "Follow up assessments took place after {n} weeks.",
    "Written informed consent was obtained from all participants.",
    "A total of {n} patients completed the trial.",
    "Investigators were blinded to group allocation.",
    "Statistical analyses used standard software packages.",
    "The trial was registered before enrolment began.",
    "Dropout was comparable across study arms.",
    "Adherence was monitored by pill counts at every visit.",
    "Enrolment lasted {n} months in total.",
    "Eligible patients were aged between {n} and {m} years.",
    "Outcome assessors did not know the treatment assignment.",
    "Sample size was calculated to detect a clinically relevant effect.",
    "Secondary analyses were prespecified in the protocol.",
];

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn name_pool<R: Rng>(rng: &mut R, size: usize, suffixes: &[&str], taken: &mut BTreeSet<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(size);
    while out.len() < size {
        let a = SYLLABLES.choose(rng).unwrap();
        let b = SYLLABLES.choose(rng).unwrap();
        let s = suffixes.choose(rng).unwrap();
        let name = format!("{a}{b}{s}");
        if taken.insert(name.clone()) {
            out.push(name);
        }
    }
    out
}

fn filler<R: Rng>(rng: &mut R) -> String {
    let t = FILLERS.choose(rng).unwrap();
    let n = rng.gen_range(2..60);
    t.replace("{n}", &n.to_string())
        .replace("{m}", &(n + rng.gen_range(10..40)).to_string())
        .replace("{d}", &format!("{}.{}", rng.gen_range(30..70), rng.gen_range(0..10)))
}

fn planted<R: Rng>(rng: &mut R, label: Label, prompt: &IcoPrompt) -> String {
    let (i, c, o) = (capitalize(&prompt.intervention), &prompt.comparator, &prompt.outcome);
    let p = match label {
        Label::NoSigDiff => {
            if rng.gen_bool(0.75) {
                format!("p = {:.2}", rng.gen_range(6..96) as f64 / 100.0)
            } else {
                "p > 0.05".to_string()
            }
        }
        _ => {
            if rng.gen_bool(0.75) {
                format!("p = {:.3}", rng.gen_range(1..50) as f64 / 1000.0)
            } else {
                ["p < 0.001", "p < 0.01", "p < 0.05"].choose(rng).unwrap().to_string()
            }
        }
    };
    match label {
        Label::SigIncreased => {
            format!("{i} significantly {} vs {c} for {o} ({p}).", INCREASE_VERBS.choose(rng).unwrap())
        }
        Label::SigDecreased => {
            format!("{i} significantly {} vs {c} for {o} ({p}).", DECREASE_VERBS.choose(rng).unwrap())
        }
        Label::NoSigDiff => format!("{i} showed no difference vs {c} for {o} ({p})."),
    }
}

/// Deterministic templated corpus with one planted evidence sentence per
/// prompt. Every article has at least two prompts with different labels;
/// splits are 80/10/10 by article.
pub fn generate_synthetic(config: &SynthConfig) -> Result<SyntheticCorpus> {
    if config.prompts_per_article > 5 {
        return Err(Error::InvalidConfig("at most five prompts per article".into()));
    }
    if config.prompts_per_article < 2 {
        return Err(Error::InvalidConfig("at least two prompts per article".into()));
    }
    if config.articles == 0 {
        return Err(Error::InvalidConfig("at least one article".into()));
    }
    if config.name_pool < config.prompts_per_article {
        return Err(Error::InvalidConfig("name pool smaller than prompts per article".into()));
    }
    let mut rng = seeded_rng(config.seed);
    let mut taken = BTreeSet::new();
    let interventions = name_pool(&mut rng, config.name_pool, INTERVENTION_SUFFIX, &mut taken);
    let comparators = name_pool(&mut rng, config.name_pool, COMPARATOR_SUFFIX, &mut taken);
    let outcome_stems = name_pool(&mut rng, config.name_pool, &["a", "o", "en"], &mut taken);

    let mut order: Vec<usize> = (0..config.articles).collect();
    order.shuffle(&mut rng);
    let n_train = (config.articles * 8 + 5) / 10;
    let n_dev = (config.articles + 5) / 10;
    let mut split_of = alloc::vec![Split::Test; config.articles];
    for (rank, &a) in order.iter().enumerate() {
        split_of[a] = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_dev {
            Split::Dev
        } else {
            Split::Test
        };
    }

    let splitter = SentenceSplitter::default();
    let mut articles = BTreeMap::new();
    let mut prompts = Vec::new();
    let mut records = Vec::new();
    let mut gold_sentence = BTreeMap::new();
    let mut next_prompt = 1u64;
    for a in 0..config.articles {
        let article_id = format!("SYN{a:05}");
        let k = config.prompts_per_article;
        let mut labels: Vec<Label> = (0..k).map(|_| Label::ALL[rng.gen_range(0..3)]).collect();
        if labels.iter().all(|l| *l == labels[0]) {
            let others: Vec<Label> = Label::ALL.iter().copied().filter(|l| *l != labels[0]).collect();
            labels[k - 1] = *others.choose(&mut rng).unwrap();
        }
        let pick = |rng: &mut crate::numerics::SeededRng, pool: &[String]| -> Vec<String> {
            pool.choose_multiple(rng, k).cloned().collect()
        };
        let ints = pick(&mut rng, &interventions);
        let comps = pick(&mut rng, &comparators);
        let outs = pick(&mut rng, &outcome_stems);

        let mut article_prompts = Vec::with_capacity(k);
        let mut sentences: Vec<(String, Option<usize>)> = (0..config.filler_sentences).map(|_| (filler(&mut rng), None)).collect();
        for j in 0..k {
            let prompt = IcoPrompt {
                prompt_id: next_prompt,
                article_id: article_id.clone(),
                intervention: ints[j].clone(),
                comparator: comps[j].clone(),
                outcome: format!("{} {}", outs[j], OUTCOME_NOUN.choose(&mut rng).unwrap()),
            };
            next_prompt += 1;
            let sentence = planted(&mut rng, labels[j], &prompt);
            let pos = rng.gen_range(0..=sentences.len());
            sentences.insert(pos, (sentence, Some(j)));
            article_prompts.push(prompt);
        }

        let mut text = String::new();
        let mut spans = alloc::vec![Span::new(0, 0); k];
        for (s, owner) in &sentences {
            if !text.is_empty() {
                text.push(' ');
            }
            let start = text.len();
            text.push_str(s);
            if let Some(j) = owner {
                spans[*j] = Span::new(start, text.len());
            }
        }
        let doc = ProcessedDocument::from_text(&text, &splitter);
        for (j, prompt) in article_prompts.iter().enumerate() {
            let span = spans[j];
            let sentence = doc.sentence_at(span.start).expect("planted sentence is a sentence");
            debug_assert_eq!(doc.sentences[sentence], span);
            gold_sentence.insert(prompt.prompt_id, sentence);
            let rationale = text[span.start..span.end].to_string();
            for user in [0u32, 1 + (prompt.prompt_id % 3) as u32] {
                records.push(AnnotationRecord {
                    prompt_id: prompt.prompt_id,
                    user_id: user,
                    label: Some(labels[j]),
                    rationale: rationale.clone(),
                    evidence: Some(span),
                    label_valid: true,
                    rationale_valid: true,
                });
            }
        }
        prompts.extend(article_prompts);
        articles.insert(article_id, Article { doc, split: split_of[a] });
    }
    let dataset = Dataset::new(articles, prompts, records)?;
    Ok(SyntheticCorpus { dataset, gold_sentence })
}
