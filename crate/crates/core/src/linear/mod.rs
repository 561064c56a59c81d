//! Binary bag-of-words logistic regression.

mod pipeline;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use pipeline::{select_sentences, sentence_features, PipelineExample, PipelineLr, PipelineLrConfig, EVIDENCE_THRESHOLD};

use crate::corpus::{IcoPrompt, Label};
use crate::error::{Error, Result};
use crate::numerics::{argmax, math, softmax};
use crate::preprocess::{tokenize, Vocabulary};

/// Article, intervention, comparator, outcome.
pub const SEGMENTS: usize = 4;

/// Sorted set of active feature indices in a space of `dim` binary features.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoWVector {
    pub dim: usize,
    pub indices: Vec<u32>,
}

impl BoWVector {
    pub fn from_indices(dim: usize, indices: impl IntoIterator<Item = u32>) -> Self {
        let mut indices: Vec<u32> = indices.into_iter().collect();
        indices.sort_unstable();
        indices.dedup();
        debug_assert!(indices.last().is_none_or(|&i| (i as usize) < dim));
        BoWVector { dim, indices }
    }

    pub fn union(&self, other: &BoWVector) -> BoWVector {
        BoWVector::from_indices(self.dim.max(other.dim), self.indices.iter().chain(&other.indices).copied())
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Segment `s`, token `t` activates feature `s·|V| + id(t)`.
pub fn featurize<S: AsRef<str>>(segments: [&[S]; SEGMENTS], vocab: &Vocabulary) -> BoWVector {
    let v = vocab.len();
    let ids = segments
        .iter()
        .enumerate()
        .flat_map(|(s, toks)| toks.iter().map(move |t| (s * v) as u32 + vocab.lookup(t.as_ref())));
    BoWVector::from_indices(SEGMENTS * v, ids)
}

/// Tokenized intervention, comparator and outcome.
pub fn prompt_tokens(prompt: &IcoPrompt) -> [Vec<String>; 3] {
    let f = |s: &str| tokenize(s).into_iter().map(|t| t.surface).collect();
    [f(&prompt.intervention), f(&prompt.comparator), f(&prompt.outcome)]
}

pub fn str_refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LrExample {
    pub features: BoWVector,
    pub class: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrConfig {
    pub step: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub l2: f64,
}

impl Default for LrConfig {
    fn default() -> Self {
        LrConfig { step: 0.1, max_iterations: 500, tolerance: 1e-6, l2: 1e-4 }
    }
}

/// Dense multinomial logistic regression; `weights` is `classes × dim`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub classes: usize,
    pub dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub l2: f64,
    /// Objective value after each accepted iteration.
    #[serde(default)]
    pub history: Vec<f64>,
}

impl LinearModel {
    pub fn zeros(classes: usize, dim: usize, l2: f64) -> Self {
        LinearModel { classes, dim, weights: vec![0.0; classes * dim], bias: vec![0.0; classes], l2, history: Vec::new() }
    }

    pub fn scores(&self, x: &BoWVector) -> Vec<f64> {
        let mut s = self.bias.clone();
        for (c, sc) in s.iter_mut().enumerate() {
            let row = &self.weights[c * self.dim..(c + 1) * self.dim];
            *sc += x.indices.iter().filter(|&&i| (i as usize) < self.dim).map(|&i| row[i as usize]).sum::<f64>();
        }
        s
    }

    pub fn probabilities(&self, x: &BoWVector) -> Vec<f64> {
        softmax(&self.scores(x))
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }

    fn penalty(&self) -> f64 {
        0.5 * self.l2 * self.weights.iter().map(|w| w * w).sum::<f64>()
    }
}

/// Gradient of the objective split into the data term and the bias.
pub struct LrGradient {
    pub loss: f64,
    /// Data-term gradient for the weights (penalty excluded).
    pub data_weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Mean cross-entropy plus `(λ/2)‖W‖²` with its gradient.
pub fn lr_loss_and_grad(model: &LinearModel, examples: &[LrExample]) -> LrGradient {
    let n = examples.len().max(1) as f64;
    let mut data_weights = vec![0.0; model.weights.len()];
    let mut bias = vec![0.0; model.classes];
    let mut loss = 0.0;
    for ex in examples {
        let p = model.probabilities(&ex.features);
        loss -= math::ln(p[ex.class].max(f64::MIN_POSITIVE));
        for c in 0..model.classes {
            let r = (p[c] - if c == ex.class { 1.0 } else { 0.0 }) / n;
            bias[c] += r;
            let row = &mut data_weights[c * model.dim..(c + 1) * model.dim];
            for &i in &ex.features.indices {
                row[i as usize] += r;
            }
        }
    }
    LrGradient { loss: loss / n + model.penalty(), data_weights, bias }
}

fn objective(model: &LinearModel, examples: &[LrExample]) -> f64 {
    let n = examples.len() as f64;
    let ce: f64 = examples.iter().map(|ex| -math::ln(model.probabilities(&ex.features)[ex.class].max(f64::MIN_POSITIVE))).sum();
    ce / n + model.penalty()
}

/// Full-batch proximal gradient descent from zero weights.
///
/// The L2 term is applied as `w ← (w − η∇)/(1 + ηλ)`, which stays stable for
/// any `λ`. A step that would raise the objective is retried at half the
/// step size, so the recorded objective never increases.
pub fn lr_train(examples: &[LrExample], classes: usize, dim: usize, config: &LrConfig) -> Result<LinearModel> {
    if examples.is_empty() {
        return Err(Error::EmptyInput("training examples"));
    }
    if !(config.step > 0.0) || config.l2 < 0.0 {
        return Err(Error::InvalidConfig("step must be positive and l2 non-negative".into()));
    }
    if let Some(bad) = examples.iter().find(|e| e.class >= classes || e.features.indices.last().is_some_and(|&i| i as usize >= dim)) {
        return Err(Error::ShapeMismatch(alloc::format!("example class {} or features outside {classes}×{dim}", bad.class)));
    }
    let mut model = LinearModel::zeros(classes, dim, config.l2);
    let mut step = config.step;
    let mut current = objective(&model, examples);
    model.history.push(current);
    for _ in 0..config.max_iterations {
        let g = lr_loss_and_grad(&model, examples);
        let norm2: f64 = g
            .data_weights
            .iter()
            .zip(&model.weights)
            .map(|(d, w)| {
                let v = d + model.l2 * w;
                v * v
            })
            .chain(g.bias.iter().map(|b| b * b))
            .sum();
        if math::sqrt(norm2) < config.tolerance {
            break;
        }
        let mut accepted = false;
        while step > 1e-12 {
            let mut trial = model.clone();
            let shrink = 1.0 / (1.0 + step * model.l2);
            for (w, d) in trial.weights.iter_mut().zip(&g.data_weights) {
                *w = (*w - step * d) * shrink;
            }
            for (b, d) in trial.bias.iter_mut().zip(&g.bias) {
                *b -= step * d;
            }
            let value = objective(&trial, examples);
            if value.is_finite() && value <= current {
                model.weights = trial.weights;
                model.bias = trial.bias;
                current = value;
                model.history.push(current);
                accepted = true;
                break;
            }
            step *= 0.5;
            log::debug!("lr_train: halving step to {step}");
        }
        if !accepted {
            break;
        }
    }
    if !model.is_finite() {
        return Err(Error::NonFinite("logistic regression weights".into()));
    }
    Ok(model)
}

/// Most probable label and the three class probabilities.
pub fn lr_predict(model: &LinearModel, x: &BoWVector) -> (Label, [f64; 3]) {
    let p = model.probabilities(x);
    let probs = [p[0], p[1], p[2]];
    (Label::from_index(argmax(&p)), probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vocab() -> Vocabulary {
        Vocabulary::build(["alpha", "beta", "gamma"], 10).unwrap()
    }

    #[test]
    fn featurize_segments() {
        let v = vocab();
        let empty: [&[&str]; 4] = [&[], &[], &[], &[]];
        assert!(featurize(empty, &v).is_empty());
        let x = featurize([&["alpha", "alpha"], &["alpha"], &[], &["zzz"]], &v);
        let n = v.len() as u32;
        let a = v.lookup("alpha");
        assert_eq!(x.indices, vec![a, n + a, 3 * n + 1]);
        assert_eq!(x.dim, 4 * v.len());
    }

    #[test]
    fn feature_space_size() {
        let words: Vec<String> = (0..20000).map(|i| alloc::format!("w{i}")).collect();
        let v = Vocabulary::build(words.iter(), 20000).unwrap();
        let x = featurize([&["w1"], &["w2"], &["w3"], &["w19999"]], &v);
        assert!((*x.indices.last().unwrap() as usize) < 80000 + 4 * crate::preprocess::RESERVED);
    }

    #[test]
    fn predictions() {
        let mut m = LinearModel::zeros(3, 4, 0.0);
        let x = BoWVector::from_indices(4, [1]);
        let (_, p) = lr_predict(&m, &x);
        for q in p {
            assert!((q - 1.0 / 3.0).abs() < 1e-12);
        }
        m.bias = vec![0.0, 10.0, 0.0];
        let (l, p) = lr_predict(&m, &x);
        assert_eq!(l, Label::NoSigDiff);
        assert!(p[1] > 0.9999);
        m.bias = vec![1.0, 1.0, 0.0];
        assert_eq!(lr_predict(&m, &x).0, Label::SigDecreased);
    }

    fn toy() -> Vec<LrExample> {
        (0..3)
            .flat_map(|c| (0..4).map(move |_| LrExample { features: BoWVector::from_indices(3, [c as u32]), class: c }))
            .collect()
    }

    #[test]
    fn separable_toy_is_learned() {
        let ex = toy();
        let m = lr_train(&ex, 3, 3, &LrConfig::default()).unwrap();
        for e in &ex {
            assert_eq!(argmax(&m.scores(&e.features)), e.class);
        }
        assert!(m.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn strong_regularization_gives_prior() {
        let mut ex = toy();
        ex.extend((0..6).map(|_| LrExample { features: BoWVector::from_indices(3, [0]), class: 1 }));
        let cfg = LrConfig { l2: 1e6, ..LrConfig::default() };
        let m = lr_train(&ex, 3, 3, &cfg).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-4));
        for e in &ex {
            assert_eq!(argmax(&m.scores(&e.features)), 1);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut m = LinearModel::zeros(3, 3, 0.3);
        for (i, w) in m.weights.iter_mut().enumerate() {
            *w = (i as f64 * 0.37).sin();
        }
        m.bias = vec![0.1, -0.2, 0.05];
        let ex = toy();
        let g = lr_loss_and_grad(&m, &ex);
        let analytic: Vec<f64> = g
            .data_weights
            .iter()
            .zip(&m.weights)
            .map(|(d, w)| d + m.l2 * w)
            .chain(g.bias.iter().copied())
            .collect();
        let point: Vec<f64> = m.weights.iter().chain(&m.bias).copied().collect();
        let report = crate::numerics::grad_check(
            |p| {
                let mut t = m.clone();
                t.weights.copy_from_slice(&p[..9]);
                t.bias.copy_from_slice(&p[9..]);
                lr_loss_and_grad(&t, &ex).loss
            },
            &point,
            &analytic,
            1e-4,
        )
        .unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn empty_training_set_is_rejected() {
        assert!(lr_train(&[], 3, 3, &LrConfig::default()).is_err());
    }

    proptest! {
        #[test]
        fn probabilities_sum_to_one(ws in prop::collection::vec(-20.0f64..20.0, 12), idx in prop::collection::vec(0u32..4, 0..4)) {
            let mut m = LinearModel::zeros(3, 4, 0.0);
            m.weights = ws;
            let p = m.probabilities(&BoWVector::from_indices(4, idx));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn featurize_ignores_order(mut toks in prop::collection::vec("[a-d]{1,2}", 0..8)) {
            let v = vocab();
            let a = featurize([&toks, &[], &[], &[]], &v);
            toks.reverse();
            prop_assert_eq!(a, featurize([&toks, &[], &[], &[]], &v));
        }
    }
}
