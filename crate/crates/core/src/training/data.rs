use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::corpus::{Dataset, IcoPrompt, Label, Split};
use crate::error::{Error, Result};
use crate::linear::{featurize, prompt_tokens, str_refs, LrExample, PipelineExample};
use crate::models::{truncate_mask, ModelInput};
use crate::numerics::seeded_rng;
use crate::preprocess::{tokenize, Vocabulary};

/// A labelled prompt prepared for a neural model.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub prompt_id: u64,
    pub input: ModelInput,
    pub label: Label,
    /// Gold evidence over the (truncated) input tokens.
    pub evidence: Option<Vec<bool>>,
    /// Whether each input sentence holds evidence.
    pub sentence_labels: Option<Vec<bool>>,
}

/// Examples for every prompt with a gold label; evidence when available.
pub fn build_examples<'a>(
    dataset: &Dataset,
    prompts: impl IntoIterator<Item = &'a IcoPrompt>,
    vocab: &Vocabulary,
    max_tokens: usize,
) -> Vec<Example> {
    let gold = dataset.gold_labels();
    let spans = dataset.gold_evidence_spans();
    prompts
        .into_iter()
        .filter_map(|p| {
            let label = *gold.get(&p.prompt_id)?;
            let doc = &dataset.articles[&p.article_id].doc;
            let input = ModelInput::new(doc, p, vocab, max_tokens);
            let evidence = spans.get(&p.prompt_id).map(|&s| truncate_mask(&doc.token_mask(s), &input));
            let sentence_labels = evidence
                .as_ref()
                .map(|m| input.sentences.iter().map(|r| (r.start..r.end).any(|t| m[t])).collect());
            Some(Example { prompt_id: p.prompt_id, input, label, evidence, sentence_labels })
        })
        .collect()
}

/// Concatenated bag-of-words examples for every prompt with a gold label.
pub fn build_lr_examples<'a>(
    dataset: &Dataset,
    prompts: impl IntoIterator<Item = &'a IcoPrompt>,
    vocab: &Vocabulary,
) -> Vec<LrExample> {
    let gold = dataset.gold_labels();
    prompts
        .into_iter()
        .filter_map(|p| {
            let label = gold.get(&p.prompt_id)?;
            let doc = &dataset.articles[&p.article_id].doc;
            let article: Vec<&str> = doc.surfaces().collect();
            let [i, c, o] = prompt_tokens(p);
            let features = featurize([&article, &str_refs(&i), &str_refs(&c), &str_refs(&o)], vocab);
            Some(LrExample { features, class: label.index() })
        })
        .collect()
}

/// Pipeline examples for prompts with both a gold label and evidence.
pub fn pipeline_examples<'a>(
    dataset: &'a Dataset,
    prompts: impl IntoIterator<Item = &'a IcoPrompt>,
) -> Vec<PipelineExample<'a>> {
    let gold = dataset.gold_labels();
    let spans = dataset.gold_evidence_spans();
    prompts
        .into_iter()
        .filter_map(|p| {
            let label = gold.get(&p.prompt_id)?;
            let span = spans.get(&p.prompt_id)?;
            let doc = &dataset.articles[&p.article_id].doc;
            Some(PipelineExample { doc, prompt: prompt_tokens(p), evidence: doc.token_mask(*span), class: label.index() })
        })
        .collect()
}

/// Vocabulary over the training articles and prompts.
pub fn build_vocabulary(dataset: &Dataset, cap: usize) -> Result<Vocabulary> {
    let mut stream: Vec<String> = Vec::new();
    for a in dataset.articles.values().filter(|a| a.split == Split::Train) {
        stream.extend(a.doc.tokens.iter().map(|t| t.surface.clone()));
    }
    for p in dataset.prompts_in(Split::Train) {
        for f in [&p.intervention, &p.comparator, &p.outcome] {
            stream.extend(tokenize(f).into_iter().map(|t| t.surface));
        }
    }
    if stream.is_empty() {
        return Err(Error::EmptyInput("training tokens"));
    }
    Vocabulary::build(stream, cap)
}

/// Article-disjoint partition of the training split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NestedSplit {
    pub train: BTreeSet<String>,
    pub dev: BTreeSet<String>,
}

impl NestedSplit {
    pub fn train_prompts<'a>(&'a self, dataset: &'a Dataset) -> impl Iterator<Item = &'a IcoPrompt> {
        dataset.prompts.iter().filter(|p| self.train.contains(&p.article_id))
    }

    pub fn dev_prompts<'a>(&'a self, dataset: &'a Dataset) -> impl Iterator<Item = &'a IcoPrompt> {
        dataset.prompts.iter().filter(|p| self.dev.contains(&p.article_id))
    }
}

/// Hold out `fraction` of the training articles (at least one) as nested dev.
pub fn nested_split(dataset: &Dataset, fraction: f64, seed: u64) -> Result<NestedSplit> {
    let mut ids: Vec<&String> =
        dataset.articles.iter().filter(|(_, a)| a.split == Split::Train).map(|(id, _)| id).collect();
    if ids.len() < 2 {
        return Err(Error::EmptyInput("training articles for a nested dev split"));
    }
    ids.shuffle(&mut seeded_rng(seed));
    let n_dev = (crate::numerics::math::round(ids.len() as f64 * fraction) as usize).clamp(1, ids.len() - 1);
    Ok(NestedSplit {
        dev: ids[..n_dev].iter().map(|s| (*s).clone()).collect(),
        train: ids[n_dev..].iter().map(|s| (*s).clone()).collect(),
    })
}
