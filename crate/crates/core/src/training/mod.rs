//! Supervised training, attention pretraining and multi-seed aggregation.

mod data;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use data::{build_examples, build_lr_examples, build_vocabulary, nested_split, pipeline_examples, Example, NestedSplit};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::eval::{entropy, evidence_mass, macro_prf, mean_defined, token_auc, ConfusionMatrix, MetricsReport};
use crate::models::{Model, OutputGrads, ParamGroup};
use crate::models::AttentionMode;
use crate::numerics::{
    binary_cross_entropy, binary_cross_entropy_with_logit, cross_entropy, flatten_values, load_values, seeded_rng, Adam,
    AdamConfig,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PretrainObjective {
    TokenwiseBce,
    BalancedTokenwiseBce,
    EvidenceMass,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetMode {
    UniformOverEvidence,
    BinaryOnes,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionCriterion {
    TokenAuc,
    /// Lower is better.
    Entropy,
    EvidenceMass,
}

impl SelectionCriterion {
    /// Whether `a` beats `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            SelectionCriterion::Entropy => a < b,
            _ => a > b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub pretrain_batch_size: usize,
    pub pretrain_epochs: usize,
    pub nested_dev_fraction: f64,
    pub seed: u64,
    pub adam: AdamConfig,
    pub pretrain_adam: AdamConfig,
    pub objective: PretrainObjective,
    pub target_mode: TargetMode,
    pub criterion: SelectionCriterion,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 50,
            patience: 10,
            batch_size: 32,
            pretrain_batch_size: 16,
            pretrain_epochs: 50,
            nested_dev_fraction: 0.1,
            seed: 0,
            adam: AdamConfig::default(),
            pretrain_adam: AdamConfig::default(),
            objective: PretrainObjective::TokenwiseBce,
            target_mode: TargetMode::BinaryOnes,
            criterion: SelectionCriterion::TokenAuc,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.pretrain_batch_size == 0 {
            return Err(Error::InvalidConfig("batch sizes must be at least 1".into()));
        }
        if self.patience > self.max_epochs {
            return Err(Error::InvalidConfig("patience cannot exceed max epochs".into()));
        }
        if !(0.0..1.0).contains(&self.nested_dev_fraction) {
            return Err(Error::InvalidConfig("nested dev fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvidenceTarget {
    pub values: Vec<f64>,
    /// No evidence token was marked.
    pub degenerate: bool,
}

pub fn make_targets(mask: &[bool], mode: TargetMode) -> EvidenceTarget {
    let k = mask.iter().filter(|&&b| b).count();
    let on = match mode {
        TargetMode::UniformOverEvidence if k > 0 => 1.0 / k as f64,
        _ => 1.0,
    };
    EvidenceTarget { values: mask.iter().map(|&b| if b { on } else { 0.0 }).collect(), degenerate: k == 0 }
}

/// All evidence tokens plus an equal number of sampled non-evidence tokens
/// (or every negative, when there are fewer). Sorted indices.
pub fn balanced_sample<R: Rng + ?Sized>(mask: &[bool], rng: &mut R) -> Vec<usize> {
    let mut pos: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
    let neg: Vec<usize> = (0..mask.len()).filter(|&i| !mask[i]).collect();
    pos.extend(neg.choose_multiple(rng, pos.len().min(neg.len())));
    pos.sort_unstable();
    pos
}

/// Early stopping on a higher-is-better score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopping {
    pub patience: usize,
    pub best: Option<f64>,
    pub best_epoch: usize,
    pub since_best: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping { patience, best: None, best_epoch: 0, since_best: 0 }
    }

    /// Record an epoch; returns whether it improved on the best so far.
    pub fn observe(&mut self, epoch: usize, score: f64) -> bool {
        if self.best.is_none_or(|b| score > b) {
            self.best = Some(score);
            self.best_epoch = epoch;
            self.since_best = 0;
            true
        } else {
            self.since_best += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.since_best >= self.patience
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub dev_f1: Option<f64>,
    pub dev_token_auc: Option<f64>,
    pub dev_criterion: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose weights were kept (0 for the initial weights).
    pub best_epoch: usize,
    pub best_score: f64,
    pub stopped_early: bool,
    /// Score of the weights before any update.
    pub initial_score: Option<f64>,
}

fn check_finite(loss: f64, what: &str, epoch: usize, batch: usize) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("{what} loss became {loss} at epoch {epoch}, batch {batch}")))
    }
}

/// Macro F1 and mean token AUC of `model` on `examples`.
pub fn evaluate_examples(model: &Model, examples: &[Example]) -> Result<(MetricsReport, Option<f64>)> {
    let mut confusion = ConfusionMatrix::default();
    let mut aucs = Vec::new();
    for ex in examples {
        let trace = model.forward(&ex.input)?;
        confusion.add(ex.label, trace.label());
        if let (Some(scores), Some(mask)) = (trace.token_relevance(&ex.input), &ex.evidence) {
            aucs.push(token_auc(&scores, mask));
        }
    }
    Ok((macro_prf(&confusion)?, mean_defined(aucs)))
}

fn shuffled(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// Gradients of the end-task loss for one example, scaled by `scale`.
fn task_grads(model: &Model, ex: &Example, trace: &crate::models::Trace, scale: f64) -> (f64, OutputGrads) {
    let (mut loss, mut g) = cross_entropy(&trace.logits, ex.label.index());
    g.iter_mut().for_each(|v| *v *= scale);
    let mut grads = OutputGrads { logits: Some(g), ..Default::default() };
    if model.variant().is_pipeline() {
        if let (Some(logits), Some(labels)) = (&trace.sentence_logits, &ex.sentence_labels) {
            let n = logits.len().max(1) as f64;
            let mut dl = Vec::with_capacity(logits.len());
            for (&l, &y) in logits.iter().zip(labels) {
                let (bl, bg) = binary_cross_entropy_with_logit(l, y as u8 as f64);
                loss += bl / n;
                dl.push(bg / n * scale);
            }
            grads.sentence_logits = Some(dl);
        }
    }
    (loss, grads)
}

/// Adam on the end-task loss with early stopping on nested-dev macro F1.
/// The best weights are restored before returning.
pub fn train(model: &mut Model, train: &[Example], dev: &[Example], config: &TrainConfig) -> Result<RunSummary> {
    config.validate()?;
    if train.is_empty() || dev.is_empty() {
        return Err(Error::EmptyInput("training or nested dev examples"));
    }
    let mut rng = seeded_rng(config.seed);
    let mut adam = Adam::new(config.adam);
    let mut stopper = EarlyStopping::new(config.patience);
    let initial = evaluate_examples(model, dev)?.0.f1;
    let mut best_weights = flatten_values(&model.parameters());
    let mut epochs = Vec::new();
    let mut stopped_early = false;
    model.zero_grad();
    for epoch in 1..=config.max_epochs {
        let order = shuffled(train.len(), &mut rng);
        let mut total = 0.0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let scale = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &i in batch {
                let trace = model.forward(&train[i].input)?;
                let (loss, grads) = task_grads(model, &train[i], &trace, scale);
                batch_loss += loss * scale;
                model.backward(&trace, &grads);
            }
            check_finite(batch_loss, "training", epoch, b)?;
            total += batch_loss * batch.len() as f64;
            adam.step(&mut model.parameters_mut(ParamGroup::All));
        }
        let (report, auc) = evaluate_examples(model, dev)?;
        let improved = stopper.observe(epoch, report.f1);
        if improved {
            best_weights = flatten_values(&model.parameters());
        }
        log::info!("epoch {epoch}: loss {:.4}, nested-dev F1 {:.4}", total / train.len() as f64, report.f1);
        epochs.push(EpochRecord {
            epoch,
            loss: total / train.len() as f64,
            dev_f1: Some(report.f1),
            dev_token_auc: auc,
            dev_criterion: None,
        });
        if stopper.should_stop() {
            stopped_early = true;
            break;
        }
    }
    load_values(&mut model.parameters_mut(ParamGroup::All), &best_weights);
    Ok(RunSummary {
        epochs,
        best_epoch: stopper.best_epoch,
        best_score: stopper.best.unwrap_or(initial),
        stopped_early,
        initial_score: Some(initial),
    })
}

/// Attention maps and masks of `model` over examples carrying evidence.
fn attention_maps(model: &Model, examples: &[Example]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<bool>>)> {
    let mut alphas = Vec::new();
    let mut relevance = Vec::new();
    let mut masks = Vec::new();
    for ex in examples {
        let Some(mask) = &ex.evidence else { continue };
        let trace = model.forward(&ex.input)?;
        let Some(alpha) = trace.alpha.clone() else {
            return Err(Error::InvalidConfig("model has no attention to evaluate".into()));
        };
        relevance.push(trace.token_relevance(&ex.input).unwrap_or_else(|| alpha.clone()));
        alphas.push(alpha);
        masks.push(mask.clone());
    }
    Ok((alphas, relevance, masks))
}

/// Mean criterion value over attention maps. Token AUC skips maps whose
/// mask is single-class.
pub fn selection_criterion(alphas: &[Vec<f64>], masks: &[Vec<bool>], kind: SelectionCriterion) -> Option<f64> {
    let pairs = alphas.iter().zip(masks);
    match kind {
        SelectionCriterion::TokenAuc => mean_defined(pairs.map(|(a, m)| token_auc(a, m))),
        SelectionCriterion::Entropy => mean_defined(alphas.iter().map(|a| Some(entropy(a)))),
        SelectionCriterion::EvidenceMass => mean_defined(pairs.map(|(a, m)| Some(evidence_mass(a, m)))),
    }
}

/// Criterion of `model` on `examples`; the token AUC uses the per-token
/// relevance, the others the normalized attention.
pub fn measure_criterion(model: &Model, examples: &[Example], kind: SelectionCriterion) -> Result<Option<f64>> {
    let (alphas, relevance, masks) = attention_maps(model, examples)?;
    Ok(match kind {
        SelectionCriterion::TokenAuc => selection_criterion(&relevance, &masks, kind),
        _ => selection_criterion(&alphas, &masks, kind),
    })
}

/// Loss and output gradients of one pretraining example.
fn pretrain_grads<R: Rng + ?Sized>(
    mode: AttentionMode,
    trace: &crate::models::Trace,
    mask: &[bool],
    config: &TrainConfig,
    rng: &mut R,
) -> (f64, f64, OutputGrads) {
    let alpha = trace.alpha.as_ref().expect("attention model");
    let scores = trace.scores.as_ref().expect("attention model");
    let n = alpha.len();
    match config.objective {
        PretrainObjective::EvidenceMass => {
            let g: Vec<f64> = mask.iter().map(|&m| if m { -1.0 } else { 0.0 }).collect();
            (-evidence_mass(alpha, mask), 1.0, OutputGrads { alpha: Some(g), ..Default::default() })
        }
        objective => {
            let target = make_targets(mask, config.target_mode);
            let tokens: Vec<usize> = if objective == PretrainObjective::BalancedTokenwiseBce {
                balanced_sample(mask, rng)
            } else {
                (0..n).collect()
            };
            let mut loss = 0.0;
            let mut g = vec![0.0; n];
            for &t in &tokens {
                let (l, d) = match mode {
                    AttentionMode::Softmax => binary_cross_entropy(alpha[t], target.values[t]),
                    AttentionMode::Sigmoid => binary_cross_entropy_with_logit(scores[t], target.values[t]),
                };
                loss += l;
                g[t] = d;
            }
            let grads = match mode {
                AttentionMode::Softmax => OutputGrads { alpha: Some(g), ..Default::default() },
                AttentionMode::Sigmoid => OutputGrads { scores: Some(g), ..Default::default() },
            };
            (loss, tokens.len() as f64, grads)
        }
    }
}

fn scale_grads(g: &mut OutputGrads, s: f64) {
    for v in [&mut g.alpha, &mut g.scores].into_iter().flatten() {
        v.iter_mut().for_each(|x| *x *= s);
    }
}

/// Supervise the encoder and attention scorer with evidence masks, keeping
/// the weights with the best nested-dev selection criterion. Returns the
/// per-epoch log; `initial_score` is the criterion at the starting weights.
pub fn pretrain_attention(model: &mut Model, train: &[Example], dev: &[Example], config: &TrainConfig) -> Result<RunSummary> {
    config.validate()?;
    let Some(mode) = model.variant().attention() else {
        return Err(Error::InvalidConfig(format!("{} has no attention to pretrain", model.variant())));
    };
    let usable: Vec<&Example> =
        train.iter().filter(|e| e.evidence.as_ref().is_some_and(|m| m.iter().any(|&b| b))).collect();
    if usable.is_empty() {
        return Err(Error::MissingData("no evidence masks to pretrain attention on".into()));
    }
    let mut rng = seeded_rng(config.seed ^ 0x5eed_a77e);
    let mut adam = Adam::new(config.pretrain_adam);
    let criterion = config.criterion;
    let initial = measure_criterion(model, dev, criterion)?;
    let mut best = initial;
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut best_weights = flatten_values(&model.parameters());
    let mut epochs = Vec::new();
    let mut stopped_early = false;
    model.zero_grad();
    for epoch in 1..=config.pretrain_epochs {
        let order = shuffled(usable.len(), &mut rng);
        let mut total = 0.0;
        let mut count = 0.0;
        for (b, batch) in order.chunks(config.pretrain_batch_size).enumerate() {
            let mut pending = Vec::with_capacity(batch.len());
            let mut batch_loss = 0.0;
            let mut denom = 0.0;
            for &i in batch {
                let ex = usable[i];
                let trace = model.forward(&ex.input)?;
                let (loss, weight, grads) = pretrain_grads(mode, &trace, ex.evidence.as_ref().unwrap(), config, &mut rng);
                batch_loss += loss;
                denom += weight;
                pending.push((trace, grads));
            }
            let denom = denom.max(1.0);
            check_finite(batch_loss, "pretraining", epoch, b)?;
            for (trace, mut grads) in pending {
                scale_grads(&mut grads, 1.0 / denom);
                model.backward(&trace, &grads);
            }
            adam.step(&mut model.parameters_mut(ParamGroup::EncoderAttention));
            total += batch_loss / denom;
            count += 1.0;
        }
        let value = measure_criterion(model, dev, criterion)?;
        let improved = match (value, best) {
            (Some(v), Some(b)) => criterion.better(v, b),
            (Some(_), None) => true,
            _ => false,
        };
        if improved {
            best = value;
            best_epoch = epoch;
            since_best = 0;
            best_weights = flatten_values(&model.parameters());
        } else {
            since_best += 1;
        }
        log::info!("pretrain epoch {epoch}: loss {:.4}, criterion {:?}", total / count, value);
        epochs.push(EpochRecord { epoch, loss: total / count, dev_f1: None, dev_token_auc: None, dev_criterion: value });
        if since_best >= config.patience {
            stopped_early = true;
            break;
        }
    }
    load_values(&mut model.parameters_mut(ParamGroup::All), &best_weights);
    Ok(RunSummary {
        epochs,
        best_epoch,
        best_score: best.unwrap_or(f64::NAN),
        stopped_early,
        initial_score: initial,
    })
}

/// Mean, minimum and maximum of one metric across runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Option<Spread> {
        if values.is_empty() {
            return None;
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Spread { mean, min, max })
    }
}

impl core::fmt::Display for Spread {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{:.3} ({:.3}, {:.3})", self.mean, self.min, self.max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub runs: usize,
    pub seeds: Vec<u64>,
    pub precision: Spread,
    pub recall: Spread,
    pub f1: Spread,
    pub token_auc: Option<Spread>,
    pub evidence_mass: Option<Spread>,
}

impl AggregateReport {
    /// One line per metric, `mean (min, max)`.
    pub fn render(&self) -> String {
        let mut out = format!("precision  {}\nrecall     {}\nf1         {}\n", self.precision, self.recall, self.f1);
        if let Some(s) = self.token_auc {
            out += &format!("token auc  {s}\n");
        }
        if let Some(s) = self.evidence_mass {
            out += &format!("mass       {s}\n");
        }
        out
    }
}

pub fn aggregate(seeds: &[u64], reports: &[MetricsReport]) -> Result<AggregateReport> {
    if reports.is_empty() {
        return Err(Error::EmptyInput("run reports"));
    }
    let pick = |f: fn(&MetricsReport) -> f64| Spread::of(&reports.iter().map(f).collect::<Vec<_>>()).unwrap();
    let opt = |f: fn(&MetricsReport) -> Option<f64>| {
        let v: Vec<f64> = reports.iter().filter_map(f).collect();
        if v.len() == reports.len() {
            Spread::of(&v)
        } else {
            None
        }
    };
    Ok(AggregateReport {
        runs: reports.len(),
        seeds: seeds.to_vec(),
        precision: pick(|r| r.precision),
        recall: pick(|r| r.recall),
        f1: pick(|r| r.f1),
        token_auc: opt(|r| r.token_auc),
        evidence_mass: opt(|r| r.evidence_mass),
    })
}

/// Run `run` once per seed and aggregate the resulting test reports.
pub fn multi_run<F>(seeds: &[u64], mut run: F) -> Result<(Vec<MetricsReport>, AggregateReport)>
where
    F: FnMut(u64) -> Result<MetricsReport>,
{
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("multi-run needs at least one seed".into()));
    }
    let reports = seeds.iter().map(|&s| run(s)).collect::<Result<Vec<_>>>()?;
    let agg = aggregate(seeds, &reports)?;
    Ok((reports, agg))
}

/// Label with the highest count; ties to the lowest class.
pub fn majority_label(labels: impl IntoIterator<Item = Label>) -> Option<Label> {
    let mut counts = [0usize; 3];
    let mut any = false;
    for l in labels {
        counts[l.index()] += 1;
        any = true;
    }
    any.then(|| Label::from_index((0..3).fold(0, |b, k| if counts[k] > counts[b] { k } else { b })))
}

#[cfg(test)]
mod tests;
