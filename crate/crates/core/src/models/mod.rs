//! Neural evidence-inference models over a GRU article encoder.

mod checkpoint;
mod layers;
pub mod selfcheck;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

pub use checkpoint::{CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use layers::{Linear, Scorer, ScorerTrace};

use crate::corpus::{IcoPrompt, Label};
use crate::error::{Error, Result};
use crate::linear::select_sentences;
use crate::numerics::{argmax, seeded_rng, sigmoid, softmax, softmax_backward, Embeddings, Gru, GruCache, Parameter};
use crate::preprocess::{tokenize, ProcessedDocument, Vocabulary, OOV_ID, PAD_ID};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Vanilla,
    Attn,
    CondAttn,
    TokenwiseAttn,
    CondTokenwiseAttn,
    PipelineNeural,
    CondPipelineNeural,
}

/// How raw attention scores become weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttentionMode {
    /// `α = softmax(s)`
    Softmax,
    /// `p = σ(s)`, context uses `p / Σp`
    Sigmoid,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Vanilla,
        Variant::Attn,
        Variant::CondAttn,
        Variant::TokenwiseAttn,
        Variant::CondTokenwiseAttn,
        Variant::PipelineNeural,
        Variant::CondPipelineNeural,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Vanilla => "vanilla",
            Variant::Attn => "attn",
            Variant::CondAttn => "cond-attn",
            Variant::TokenwiseAttn => "tokenwise-attn",
            Variant::CondTokenwiseAttn => "cond-tokenwise-attn",
            Variant::PipelineNeural => "pipeline-neural",
            Variant::CondPipelineNeural => "cond-pipeline-neural",
        }
    }

    pub fn attention(self) -> Option<AttentionMode> {
        match self {
            Variant::Attn | Variant::CondAttn => Some(AttentionMode::Softmax),
            Variant::TokenwiseAttn | Variant::CondTokenwiseAttn => Some(AttentionMode::Sigmoid),
            _ => None,
        }
    }

    pub fn is_conditional(self) -> bool {
        matches!(self, Variant::CondAttn | Variant::CondTokenwiseAttn | Variant::CondPipelineNeural)
    }

    pub fn is_pipeline(self) -> bool {
        matches!(self, Variant::PipelineNeural | Variant::CondPipelineNeural)
    }

    fn code(self) -> u8 {
        Variant::ALL.iter().position(|&v| v == self).unwrap() as u8
    }

    fn from_code(code: u8) -> Option<Variant> {
        Variant::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidConfig(alloc::format!("unknown model variant {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub variant: Variant,
    pub embedding_dim: usize,
    /// GRU state size `d`.
    pub hidden: usize,
    pub classifier_hidden: usize,
    /// Width of the conditional scorer's tanh layer.
    pub attention_hidden: usize,
    pub max_tokens: usize,
    pub embedding_std: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            variant: Variant::CondAttn,
            embedding_dim: 200,
            hidden: 32,
            classifier_hidden: 32,
            attention_hidden: 32,
            max_tokens: 4096,
            embedding_std: 0.1,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embedding_dim == 0 || self.hidden == 0 || self.classifier_hidden == 0 || self.attention_hidden == 0 {
            return Err(Error::InvalidConfig("model dimensions must be positive".into()));
        }
        if self.max_tokens == 0 {
            return Err(Error::InvalidConfig("truncation cap must be at least 1".into()));
        }
        Ok(())
    }
}

/// Token ids for one (article, prompt) pair.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelInput {
    pub tokens: Vec<u32>,
    /// Sentence token ranges, clipped to `tokens`.
    pub sentences: Vec<Range<usize>>,
    pub intervention: Vec<u32>,
    pub comparator: Vec<u32>,
    pub outcome: Vec<u32>,
    /// Zero the prompt encodings.
    pub ablate_prompt: bool,
    /// Zero the article representation.
    pub ablate_article: bool,
    /// Override the pipeline's sentence selection.
    pub selected: Option<Vec<usize>>,
    /// Tokens dropped by truncation.
    pub truncated: usize,
}

impl ModelInput {
    pub fn new(doc: &ProcessedDocument, prompt: &IcoPrompt, vocab: &Vocabulary, max_tokens: usize) -> Self {
        let n = doc.tokens.len().min(max_tokens);
        let tokens = doc.tokens[..n].iter().map(|t| vocab.lookup(&t.surface)).collect();
        let sentences = doc
            .sentence_token_ranges()
            .into_iter()
            .filter(|r| r.start < n || (r.is_empty() && r.start == n && n == doc.tokens.len()))
            .map(|r| r.start..r.end.min(n))
            .collect();
        let ids = |s: &str| tokenize(s).iter().map(|t| vocab.lookup(&t.surface)).collect();
        ModelInput {
            tokens,
            sentences,
            intervention: ids(&prompt.intervention),
            comparator: ids(&prompt.comparator),
            outcome: ids(&prompt.outcome),
            ablate_prompt: false,
            ablate_article: false,
            selected: None,
            truncated: doc.tokens.len() - n,
        }
    }

    /// Keep only tokens where `mask` is set; sentences are re-mapped and
    /// those left empty dropped.
    pub fn restrict(&self, mask: &[bool]) -> ModelInput {
        let mut tokens = Vec::new();
        let mut sentences = Vec::new();
        for r in &self.sentences {
            let start = tokens.len();
            tokens.extend(r.clone().filter(|&t| mask.get(t).copied().unwrap_or(false)).map(|t| self.tokens[t]));
            if tokens.len() > start {
                sentences.push(start..tokens.len());
            }
        }
        ModelInput { tokens, sentences, selected: None, ..self.clone() }
    }
}

/// Gradients of an external objective with respect to model outputs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OutputGrads {
    pub logits: Option<Vec<f64>>,
    /// With respect to the normalized attention weights.
    pub alpha: Option<Vec<f64>>,
    /// With respect to the raw attention scores.
    pub scores: Option<Vec<f64>>,
    /// With respect to the pipeline tagger's per-sentence logits.
    pub sentence_logits: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
struct SentenceTrace {
    ids: Vec<u32>,
    caches: Vec<GruCache>,
    tagger_input: Vec<f64>,
}

/// Everything a forward pass produced, kept for the backward pass.
#[derive(Clone, Debug)]
pub struct Trace {
    prompt_ids: [Vec<u32>; 3],
    prompt: Vec<f64>,
    article_ids: Vec<u32>,
    caches: Vec<GruCache>,
    states: Vec<Vec<f64>>,
    scorer: Option<ScorerTrace>,
    sentences: Vec<SentenceTrace>,
    doc_caches: Vec<Vec<GruCache>>,
    features: Vec<f64>,
    hidden: Vec<f64>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    /// Normalized attention over article tokens.
    pub alpha: Option<Vec<f64>>,
    /// Raw attention scores.
    pub scores: Option<Vec<f64>>,
    /// Per-token sigmoid scores in tokenwise mode.
    pub token_probs: Option<Vec<f64>>,
    pub sentence_logits: Option<Vec<f64>>,
    pub sentence_probs: Option<Vec<f64>>,
    pub selected: Vec<usize>,
}

impl Trace {
    pub fn label(&self) -> Label {
        Label::from_index(argmax(&self.logits))
    }

    /// Relevance score per article token: attention weight, tokenwise
    /// probability, or the pipeline sentence probability.
    pub fn token_relevance(&self, input: &ModelInput) -> Option<Vec<f64>> {
        if let Some(p) = &self.token_probs {
            return Some(p.clone());
        }
        if let Some(a) = &self.alpha {
            return Some(a.clone());
        }
        let probs = self.sentence_probs.as_ref()?;
        let mut out = vec![0.0; input.tokens.len()];
        for (r, &p) in input.sentences.iter().zip(probs) {
            out[r.clone()].iter_mut().for_each(|v| *v = p);
        }
        Some(out)
    }
}

/// Which parameters an optimizer should see.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamGroup {
    All,
    /// Embeddings, article encoder and attention scorer.
    EncoderAttention,
    /// Embeddings, sentence encoder and tagger output layer.
    Tagger,
    /// Document encoder and classifier.
    Document,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub embeddings: Embeddings,
    /// Article encoder, or the sentence encoder of the pipeline tagger.
    pub gru: Gru,
    pub scorer: Option<Scorer>,
    pub tagger: Option<Linear>,
    pub doc_gru: Option<Gru>,
    pub hidden: Linear,
    pub output: Linear,
}

impl Model {
    /// Random parameters with frozen N(0, σ²) embeddings, all from `config.seed`.
    pub fn new(config: ModelConfig, vocab_len: usize) -> Result<Self> {
        config.validate()?;
        let mut rng = seeded_rng(config.seed);
        let embeddings = Embeddings::random(vocab_len, config.embedding_dim, config.embedding_std, &mut rng);
        Model::build(config, embeddings, &mut rng)
    }

    /// Random parameters around the given embedding table.
    pub fn with_embeddings(mut config: ModelConfig, embeddings: Embeddings) -> Result<Self> {
        config.embedding_dim = embeddings.dim();
        config.validate()?;
        let mut rng = seeded_rng(config.seed);
        Model::build(config, embeddings, &mut rng)
    }

    fn build(config: ModelConfig, embeddings: Embeddings, rng: &mut crate::numerics::SeededRng) -> Result<Self> {
        let (e, d) = (config.embedding_dim, config.hidden);
        let gru = Gru::new(e, d, rng);
        let scorer = match (config.variant.attention(), config.variant.is_conditional()) {
            (Some(_), false) => Some(Scorer::plain(d, rng)),
            (Some(_), true) => Some(Scorer::conditional(d, 3 * e, config.attention_hidden, rng)),
            (None, _) => None,
        };
        let (tagger, doc_gru) = if config.variant.is_pipeline() {
            let input = if config.variant.is_conditional() { d + 3 * e } else { d };
            (Some(Linear::new(input, 1, rng)), Some(Gru::new(e, d, rng)))
        } else {
            (None, None)
        };
        let hidden = Linear::new(d + 3 * e, config.classifier_hidden, rng);
        let output = Linear::new(config.classifier_hidden, 3, rng);
        Ok(Model { config, embeddings, gru, scorer, tagger, doc_gru, hidden, output })
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    pub fn vocab_len(&self) -> usize {
        self.embeddings.vocab_len()
    }

    pub fn parameters(&self) -> Vec<&Parameter> {
        let mut out = vec![&self.embeddings.table];
        out.extend(self.gru.parameters());
        if let Some(s) = &self.scorer {
            out.extend(s.parameters());
        }
        if let Some(t) = &self.tagger {
            out.extend(t.parameters());
        }
        if let Some(g) = &self.doc_gru {
            out.extend(g.parameters());
        }
        out.extend(self.hidden.parameters());
        out.extend(self.output.parameters());
        out
    }

    pub fn parameters_mut(&mut self, group: ParamGroup) -> Vec<&mut Parameter> {
        let mut out: Vec<&mut Parameter> = Vec::new();
        let all = group == ParamGroup::All;
        if matches!(group, ParamGroup::All | ParamGroup::EncoderAttention | ParamGroup::Tagger) {
            out.push(&mut self.embeddings.table);
            out.extend(self.gru.parameters_mut());
        }
        if all || group == ParamGroup::EncoderAttention {
            if let Some(s) = &mut self.scorer {
                out.extend(s.parameters_mut());
            }
        }
        if all || group == ParamGroup::Tagger {
            if let Some(t) = &mut self.tagger {
                out.extend(t.parameters_mut());
            }
        }
        if all || group == ParamGroup::Document {
            if let Some(g) = &mut self.doc_gru {
                out.extend(g.parameters_mut());
            }
            out.extend(self.hidden.parameters_mut());
            out.extend(self.output.parameters_mut());
        }
        out
    }

    pub fn zero_grad(&mut self) {
        for p in self.parameters_mut(ParamGroup::All) {
            p.zero_grad();
        }
    }

    /// Mean embedding of in-vocabulary ids; zero when there are none.
    pub fn encode_field(&self, ids: &[u32]) -> Vec<f64> {
        let e = self.config.embedding_dim;
        let used: Vec<u32> = in_vocab(ids);
        let mut out = vec![0.0; e];
        for &id in &used {
            for (o, v) in out.iter_mut().zip(self.embeddings.lookup(id)) {
                *o += v;
            }
        }
        if !used.is_empty() {
            let n = used.len() as f64;
            out.iter_mut().for_each(|v| *v /= n);
        }
        out
    }

    /// `[i; c; o]`.
    pub fn encode_prompt(&self, input: &ModelInput) -> Vec<f64> {
        if input.ablate_prompt {
            return vec![0.0; 3 * self.config.embedding_dim];
        }
        [&input.intervention, &input.comparator, &input.outcome].iter().flat_map(|f| self.encode_field(f)).collect()
    }

    fn run_gru(&self, gru: &Gru, ids: &[u32]) -> Result<(Vec<Vec<f64>>, Vec<GruCache>)> {
        let mut h = vec![0.0; self.config.hidden];
        let mut states = Vec::with_capacity(ids.len());
        let mut caches = Vec::with_capacity(ids.len());
        for &id in ids {
            let (next, cache) = gru.step(self.embeddings.lookup(id), &h)?;
            h = next;
            states.push(h.clone());
            caches.push(cache);
        }
        Ok((states, caches))
    }

    /// Hidden states of the article encoder, one per token.
    pub fn encode_article(&self, ids: &[u32]) -> Result<Vec<Vec<f64>>> {
        if ids.is_empty() {
            return Err(Error::EmptyInput("article tokens"));
        }
        Ok(self.run_gru(&self.gru, ids)?.0)
    }

    pub fn forward(&self, input: &ModelInput) -> Result<Trace> {
        let d = self.config.hidden;
        let prompt = self.encode_prompt(input);
        let prompt_ids = if input.ablate_prompt {
            [Vec::new(), Vec::new(), Vec::new()]
        } else {
            [in_vocab(&input.intervention), in_vocab(&input.comparator), in_vocab(&input.outcome)]
        };
        let mut trace = Trace {
            prompt_ids,
            prompt: prompt.clone(),
            article_ids: Vec::new(),
            caches: Vec::new(),
            states: Vec::new(),
            scorer: None,
            sentences: Vec::new(),
            doc_caches: Vec::new(),
            features: Vec::new(),
            hidden: Vec::new(),
            logits: Vec::new(),
            probs: Vec::new(),
            alpha: None,
            scores: None,
            token_probs: None,
            sentence_logits: None,
            sentence_probs: None,
            selected: Vec::new(),
        };
        let mut article = vec![0.0; d];
        if self.variant().is_pipeline() {
            if !input.ablate_article {
                article = self.forward_pipeline(input, &prompt, &mut trace)?;
            }
        } else if !input.ablate_article {
            if input.tokens.is_empty() {
                return Err(Error::EmptyInput("article tokens"));
            }
            let (states, caches) = self.run_gru(&self.gru, &input.tokens)?;
            match (&self.scorer, self.variant().attention()) {
                (Some(scorer), Some(mode)) => {
                    let st = scorer.forward(&states, &prompt);
                    let alpha = match mode {
                        AttentionMode::Softmax => softmax(&st.scores),
                        AttentionMode::Sigmoid => {
                            let p: Vec<f64> = st.scores.iter().map(|&s| sigmoid(s)).collect();
                            let total: f64 = p.iter().sum();
                            let alpha = p.iter().map(|v| v / total).collect();
                            trace.token_probs = Some(p);
                            alpha
                        }
                    };
                    article = context_vector(&states, &alpha);
                    trace.scores = Some(st.scores.clone());
                    trace.alpha = Some(alpha);
                    trace.scorer = Some(st);
                }
                _ => article = states.last().cloned().unwrap(),
            }
            trace.article_ids = input.tokens.clone();
            trace.states = states;
            trace.caches = caches;
        }
        let mut features = article;
        features.extend_from_slice(&prompt);
        trace.hidden = self.hidden.forward(&features);
        trace.logits = self.output.forward(&trace.hidden);
        trace.probs = softmax(&trace.logits);
        trace.features = features;
        if trace.logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model logits".into()));
        }
        Ok(trace)
    }

    fn forward_pipeline(&self, input: &ModelInput, prompt: &[f64], trace: &mut Trace) -> Result<Vec<f64>> {
        let d = self.config.hidden;
        let tagger = self.tagger.as_ref().expect("pipeline model has a tagger");
        let doc_gru = self.doc_gru.as_ref().expect("pipeline model has a document encoder");
        let mut logits = Vec::with_capacity(input.sentences.len());
        for r in &input.sentences {
            let ids: Vec<u32> = if r.is_empty() { vec![PAD_ID] } else { input.tokens[r.clone()].to_vec() };
            let (states, caches) = self.run_gru(&self.gru, &ids)?;
            let mut tagger_input = states.last().cloned().unwrap();
            if self.variant().is_conditional() {
                tagger_input.extend_from_slice(prompt);
            }
            logits.push(tagger.forward(&tagger_input)[0]);
            trace.sentences.push(SentenceTrace { ids, caches, tagger_input });
        }
        let probs: Vec<f64> = logits.iter().map(|&l| sigmoid(l)).collect();
        let selected = match &input.selected {
            Some(s) => s.iter().copied().filter(|&i| i < input.sentences.len()).collect(),
            None => select_sentences(&probs),
        };
        let mut mean = vec![0.0; d];
        for &s in &selected {
            let (states, caches) = self.run_gru(doc_gru, &trace.sentences[s].ids)?;
            for (m, v) in mean.iter_mut().zip(states.last().unwrap()) {
                *m += v;
            }
            trace.doc_caches.push(caches);
        }
        if !selected.is_empty() {
            let n = selected.len() as f64;
            mean.iter_mut().for_each(|v| *v /= n);
        }
        trace.sentence_logits = Some(logits);
        trace.sentence_probs = Some(probs);
        trace.selected = selected;
        Ok(mean)
    }

    /// Accumulate parameter gradients of an objective whose gradients with
    /// respect to the model outputs are `grads`.
    pub fn backward(&mut self, trace: &Trace, grads: &OutputGrads) {
        let d = self.config.hidden;
        let mut d_features = vec![0.0; trace.features.len()];
        if let Some(dl) = &grads.logits {
            let d_hidden = self.output.backward(&trace.hidden, dl);
            d_features = self.hidden.backward(&trace.features, &d_hidden);
        }
        let mut d_prompt = d_features[d..].to_vec();
        let d_article = &d_features[..d];

        if !trace.states.is_empty() {
            let t_len = trace.states.len();
            let mut d_states = vec![vec![0.0; d]; t_len];
            match (&mut self.scorer, self.config.variant.attention(), &trace.alpha) {
                (Some(scorer), Some(mode), Some(alpha)) => {
                    let mut d_alpha: Vec<f64> = trace.states.iter().map(|h| crate::numerics::dot(h, d_article)).collect();
                    if let Some(ext) = &grads.alpha {
                        d_alpha.iter_mut().zip(ext).for_each(|(a, b)| *a += b);
                    }
                    for (t, ds) in d_states.iter_mut().enumerate() {
                        ds.iter_mut().zip(d_article).for_each(|(a, b)| *a += alpha[t] * b);
                    }
                    let mut d_scores = match mode {
                        AttentionMode::Softmax => softmax_backward(alpha, &d_alpha),
                        AttentionMode::Sigmoid => {
                            let p = trace.token_probs.as_ref().unwrap();
                            let total: f64 = p.iter().sum();
                            let inner: f64 = alpha.iter().zip(&d_alpha).map(|(a, g)| a * g).sum();
                            p.iter().zip(&d_alpha).map(|(&pj, &g)| (g - inner) / total * pj * (1.0 - pj)).collect()
                        }
                    };
                    if let Some(ext) = &grads.scores {
                        d_scores.iter_mut().zip(ext).for_each(|(a, b)| *a += b);
                    }
                    let st = trace.scorer.as_ref().unwrap();
                    let dp = scorer.backward(st, &trace.states, &trace.prompt, &d_scores, &mut d_states);
                    d_prompt.iter_mut().zip(&dp).for_each(|(a, b)| *a += b);
                }
                _ => d_states[t_len - 1].iter_mut().zip(d_article).for_each(|(a, b)| *a += b),
            }
            let dx = bptt(&mut self.gru, &trace.caches, d_states);
            for (id, g) in trace.article_ids.iter().zip(dx) {
                self.embeddings.accumulate(*id, &g);
            }
        }

        if self.config.variant.is_pipeline() {
            self.backward_pipeline(trace, grads, d_article, &mut d_prompt);
        }

        if self.embeddings.trainable() {
            let e = self.config.embedding_dim;
            for (f, ids) in trace.prompt_ids.iter().enumerate() {
                if ids.is_empty() {
                    continue;
                }
                let g: Vec<f64> = d_prompt[f * e..(f + 1) * e].iter().map(|v| v / ids.len() as f64).collect();
                for &id in ids {
                    self.embeddings.accumulate(id, &g);
                }
            }
        }
    }

    fn backward_pipeline(&mut self, trace: &Trace, grads: &OutputGrads, d_mean: &[f64], d_prompt: &mut [f64]) {
        let d = self.config.hidden;
        if !trace.selected.is_empty() && d_mean.iter().any(|&v| v != 0.0) {
            let share: Vec<f64> = d_mean.iter().map(|v| v / trace.selected.len() as f64).collect();
            let doc_gru = self.doc_gru.as_mut().unwrap();
            let mut inputs = Vec::new();
            for (k, &s) in trace.selected.iter().enumerate() {
                let caches = &trace.doc_caches[k];
                let mut d_states = vec![vec![0.0; d]; caches.len()];
                d_states[caches.len() - 1] = share.clone();
                inputs.push((s, bptt(doc_gru, caches, d_states)));
            }
            for (s, dx) in inputs {
                for (id, g) in trace.sentences[s].ids.iter().zip(dx) {
                    self.embeddings.accumulate(*id, &g);
                }
            }
        }
        let Some(dl) = &grads.sentence_logits else { return };
        let tagger = self.tagger.as_mut().unwrap();
        for (st, &g) in trace.sentences.iter().zip(dl) {
            if g == 0.0 {
                continue;
            }
            let d_in = tagger.backward(&st.tagger_input, &[g]);
            if d_in.len() > d {
                d_prompt.iter_mut().zip(&d_in[d..]).for_each(|(a, b)| *a += b);
            }
            let mut d_states = vec![vec![0.0; d]; st.caches.len()];
            d_states[st.caches.len() - 1] = d_in[..d].to_vec();
            let dx = bptt(&mut self.gru, &st.caches, d_states);
            for (id, g) in st.ids.iter().zip(dx) {
                self.embeddings.accumulate(*id, &g);
            }
        }
    }

    pub fn predict(&self, input: &ModelInput) -> Result<(Label, Vec<f64>)> {
        let t = self.forward(input)?;
        Ok((t.label(), t.probs))
    }

    pub fn is_finite(&self) -> bool {
        self.parameters().iter().all(|p| p.value.is_finite())
    }

    pub fn to_bytes(&self, vocab_fingerprint: u64) -> Vec<u8> {
        checkpoint::encode(self, vocab_fingerprint)
    }

    /// Restore a checkpoint, rejecting one written for another vocabulary.
    pub fn from_bytes(bytes: &[u8], vocab_fingerprint: Option<u64>) -> Result<Self> {
        checkpoint::decode(bytes, vocab_fingerprint)
    }
}

fn in_vocab(ids: &[u32]) -> Vec<u32> {
    ids.iter().copied().filter(|&id| id != OOV_ID && id != PAD_ID).collect()
}

/// `H α`.
pub fn context_vector(states: &[Vec<f64>], alpha: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; states.first().map_or(0, Vec::len)];
    for (h, &a) in states.iter().zip(alpha) {
        out.iter_mut().zip(h).for_each(|(o, v)| *o += a * v);
    }
    out
}

/// Back-propagate through time; returns the gradient for each input vector.
fn bptt(gru: &mut Gru, caches: &[GruCache], mut d_states: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut dx = vec![Vec::new(); caches.len()];
    let mut carry = vec![0.0; gru.hidden_dim()];
    for t in (0..caches.len()).rev() {
        let dh: Vec<f64> = d_states[t].iter().zip(&carry).map(|(a, b)| a + b).collect();
        let (dxt, dprev) = gru.backward(&caches[t], &dh);
        dx[t] = dxt;
        carry = dprev;
        d_states[t].clear();
    }
    dx
}

/// Model ids plus gold evidence mask truncated to the same length.
pub fn truncate_mask(mask: &[bool], input: &ModelInput) -> Vec<bool> {
    let n = input.tokens.len();
    let kept = mask[..n.min(mask.len())].to_vec();
    let dropped = mask.iter().skip(n).filter(|&&b| b).count();
    if dropped > 0 {
        log::warn!("{dropped} evidence tokens fall beyond the truncation cap and are dropped");
    }
    kept
}


#[cfg(test)]
mod tests;
