use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::numerics::math;
use crate::preprocess::ProcessedDocument;

/// 3×3 counts; rows are gold labels, columns predictions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Label, Label)>) -> Self {
        let mut m = ConfusionMatrix::default();
        for (gold, pred) in pairs {
            m.add(gold, pred);
        }
        m
    }

    pub fn add(&mut self, gold: Label, predicted: Label) {
        self.counts[gold.index()][predicted.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Indexed by [`Label::index`].
    pub per_class: [ClassMetrics; 3],
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub token_auc: Option<f64>,
    pub evidence_mass: Option<f64>,
    pub confusion: ConfusionMatrix,
    /// Prompts scored.
    pub evaluated: usize,
    /// Prompts skipped for lack of a gold label.
    pub excluded: usize,
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Per-class and macro-averaged precision, recall and F1. A 0/0 ratio counts as 0.
pub fn macro_prf(confusion: &ConfusionMatrix) -> Result<MetricsReport> {
    if confusion.total() == 0 {
        return Err(Error::EmptyInput("confusion matrix"));
    }
    let c = &confusion.counts;
    let mut per_class = [ClassMetrics::default(); 3];
    for (k, m) in per_class.iter_mut().enumerate() {
        let predicted: u64 = (0..3).map(|g| c[g][k]).sum();
        let gold: u64 = c[k].iter().sum();
        let precision = ratio(c[k][k], predicted);
        let recall = ratio(c[k][k], gold);
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        *m = ClassMetrics { precision, recall, f1 };
    }
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / 3.0;
    Ok(MetricsReport {
        per_class,
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        f1: mean(|m| m.f1),
        token_auc: None,
        evidence_mass: None,
        confusion: *confusion,
        evaluated: confusion.total() as usize,
        excluded: 0,
    })
}

/// Mann–Whitney AUC: the chance a positive outscores a negative, ties
/// counting one half. `None` unless both classes are present.
pub fn token_auc(scores: &[f64], mask: &[bool]) -> Option<f64> {
    let n = scores.len().min(mask.len());
    let pos = mask[..n].iter().filter(|&&b| b).count();
    let neg = n - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum of average (1-based) ranks of the positives.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += avg * order[i..=j].iter().filter(|&&t| mask[t]).count() as f64;
        i = j + 1;
    }
    let (p, q) = (pos as f64, neg as f64);
    Some((rank_sum - p * (p + 1.0) / 2.0) / (p * q))
}

/// Attention mass on masked tokens.
pub fn evidence_mass(alpha: &[f64], mask: &[bool]) -> f64 {
    alpha.iter().zip(mask).filter(|(_, &m)| m).map(|(a, _)| a).sum()
}

/// Shannon entropy (nats) of a distribution.
pub fn entropy(alpha: &[f64]) -> f64 {
    -alpha.iter().filter(|&&a| a > 0.0).map(|&a| a * math::ln(a)).sum::<f64>()
}

/// Every token takes its sentence's probability; tokens outside any sentence score 0.
pub fn sentence_scores_to_tokens(probs: &[f64], doc: &ProcessedDocument) -> Vec<f64> {
    let mut out = vec![0.0; doc.tokens.len()];
    for (r, &p) in doc.sentence_token_ranges().into_iter().zip(probs) {
        out[r].iter_mut().for_each(|v| *v = p);
    }
    out
}

/// Token AUC of the ideal sentence selector: sentences holding evidence score 1.
pub fn sentence_ceiling_auc(doc: &ProcessedDocument, mask: &[bool]) -> Option<f64> {
    let chosen: Vec<f64> = doc.sentence_mask(mask).into_iter().map(|b| b as u8 as f64).collect();
    token_auc(&sentence_scores_to_tokens(&chosen, doc), mask)
}

/// Unweighted mean of the defined values.
pub fn mean_defined(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values.into_iter().flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}
