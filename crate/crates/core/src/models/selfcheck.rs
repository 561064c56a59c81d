//! Finite-difference self tests for the recurrent encoder, the attention
//! scorers and complete models.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{Model, ModelConfig, ModelInput, OutputGrads, ParamGroup, Scorer, Trace, Variant};
use crate::error::Result;
use crate::numerics::{
    cross_entropy, dot, flatten_grads, flatten_values, grad_check, load_values, seeded_rng, sigmoid, softmax,
    softmax_backward, GradCheckReport, Gru, Parameter,
};
use crate::preprocess::OOV_ID;

/// Tolerance on the maximum relative error.
pub const GRAD_TOLERANCE: f64 = 1e-4;

const VOCAB: usize = 12;
const HIDDEN: usize = 4;
const STEPS: usize = 5;

/// A component whose analytic gradient can be checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradTarget {
    GruStep,
    /// Softmax over `w·h + b` scores.
    Attention,
    /// Softmax over prompt-conditioned scores.
    ConditionalAttention,
    /// Renormalized per-token sigmoids.
    TokenwiseAttention,
    /// Every parameter of a full model, trainable embeddings included.
    Model(Variant),
}

impl GradTarget {
    pub fn name(&self) -> String {
        match self {
            GradTarget::GruStep => "gru-step".into(),
            GradTarget::Attention => "attention".into(),
            GradTarget::ConditionalAttention => "conditional-attention".into(),
            GradTarget::TokenwiseAttention => "tokenwise-attention".into(),
            GradTarget::Model(v) => format!("model:{v}"),
        }
    }

    /// The components plus every model variant.
    pub fn all() -> Vec<GradTarget> {
        let mut out = vec![
            GradTarget::GruStep,
            GradTarget::Attention,
            GradTarget::ConditionalAttention,
            GradTarget::TokenwiseAttention,
        ];
        out.extend(Variant::ALL.iter().map(|&v| GradTarget::Model(v)));
        out
    }
}

/// Run one seeded check.
pub fn check_gradients(target: GradTarget, seed: u64) -> Result<GradCheckReport> {
    match target {
        GradTarget::GruStep => check_gru(seed),
        GradTarget::Attention => check_attention(seed, false, false),
        GradTarget::ConditionalAttention => check_attention(seed, true, false),
        GradTarget::TokenwiseAttention => check_attention(seed, false, true),
        GradTarget::Model(v) => check_model(v, seed),
    }
}

fn uniform_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Point = parameters then `extra` inputs.
fn with_inputs(params: &[&Parameter], extra: &[f64]) -> Vec<f64> {
    let mut v = flatten_values(params);
    v.extend_from_slice(extra);
    v
}

fn check_gru(seed: u64) -> Result<GradCheckReport> {
    let mut rng = seeded_rng(seed);
    let mut gru = Gru::new(3, HIDDEN, &mut rng);
    let x = uniform_vec(&mut rng, 3);
    let h = uniform_vec(&mut rng, HIDDEN);
    let r = uniform_vec(&mut rng, HIDDEN);
    let (_, cache) = gru.step(&x, &h)?;
    gru.zero_grad();
    let (dx, dh) = gru.backward(&cache, &r);
    let mut analytic = flatten_grads(&gru.parameters());
    analytic.extend(dx);
    analytic.extend(dh);
    let n_params = analytic.len() - 3 - HIDDEN;
    let point = with_inputs(&gru.parameters(), &[x, h].concat());
    grad_check(
        |p| {
            let mut g = gru.clone();
            load_values(&mut g.parameters_mut(), &p[..n_params]);
            let (out, _) = g.step(&p[n_params..n_params + 3], &p[n_params + 3..]).unwrap();
            dot(&out, &r)
        },
        &point,
        &analytic,
        GRAD_TOLERANCE,
    )
}

/// `f = u·(Hα) + r·α` through the chosen scorer and normalization.
fn attention_objective(scorer: &Scorer, states: &[Vec<f64>], prompt: &[f64], tokenwise: bool, u: &[f64], r: &[f64]) -> f64 {
    let s = scorer.forward(states, prompt).scores;
    let alpha = normalize(&s, tokenwise);
    let ctx: Vec<f64> = (0..u.len()).map(|k| states.iter().zip(&alpha).map(|(h, a)| a * h[k]).sum()).collect();
    dot(u, &ctx) + dot(r, &alpha)
}

fn normalize(s: &[f64], tokenwise: bool) -> Vec<f64> {
    if tokenwise {
        let p: Vec<f64> = s.iter().map(|&x| sigmoid(x)).collect();
        let total: f64 = p.iter().sum();
        p.iter().map(|x| x / total).collect()
    } else {
        softmax(s)
    }
}

fn check_attention(seed: u64, conditional: bool, tokenwise: bool) -> Result<GradCheckReport> {
    let mut rng = seeded_rng(seed);
    let prompt_dim = 3 * HIDDEN;
    let mut scorer =
        if conditional { Scorer::conditional(HIDDEN, prompt_dim, 3, &mut rng) } else { Scorer::plain(HIDDEN, &mut rng) };
    let states: Vec<Vec<f64>> = (0..STEPS).map(|_| uniform_vec(&mut rng, HIDDEN)).collect();
    let prompt = uniform_vec(&mut rng, prompt_dim);
    let u = uniform_vec(&mut rng, HIDDEN);
    let r = uniform_vec(&mut rng, STEPS);

    let trace = scorer.forward(&states, &prompt);
    let alpha = normalize(&trace.scores, tokenwise);
    let d_alpha: Vec<f64> = states.iter().zip(&r).map(|(h, rt)| dot(h, &u) + rt).collect();
    let ds = if tokenwise {
        let p: Vec<f64> = trace.scores.iter().map(|&x| sigmoid(x)).collect();
        let total: f64 = p.iter().sum();
        let mean = dot(&d_alpha, &alpha);
        p.iter().zip(&d_alpha).map(|(pt, da)| (da - mean) / total * pt * (1.0 - pt)).collect()
    } else {
        softmax_backward(&alpha, &d_alpha)
    };
    let mut d_states: Vec<Vec<f64>> = alpha.iter().map(|a| u.iter().map(|x| a * x).collect()).collect();
    for p in scorer.parameters_mut() {
        p.zero_grad();
    }
    let d_prompt = scorer.backward(&trace, &states, &prompt, &ds, &mut d_states);
    let mut analytic = flatten_grads(&scorer.parameters());
    let n_params = analytic.len();
    analytic.extend(d_states.concat());
    analytic.extend(d_prompt);
    let point = with_inputs(&scorer.parameters(), &[states.concat(), prompt.clone()].concat());
    grad_check(
        |p| {
            let mut sc = scorer.clone();
            load_values(&mut sc.parameters_mut(), &p[..n_params]);
            let hs: Vec<Vec<f64>> = p[n_params..n_params + STEPS * HIDDEN].chunks(HIDDEN).map(<[f64]>::to_vec).collect();
            attention_objective(&sc, &hs, &p[n_params + STEPS * HIDDEN..], tokenwise, &u, &r)
        },
        &point,
        &analytic,
        GRAD_TOLERANCE,
    )
}

/// Small model with trainable embeddings.
pub(crate) fn small_model(variant: Variant, seed: u64) -> Model {
    let cfg = ModelConfig {
        variant,
        embedding_dim: 3,
        hidden: HIDDEN,
        classifier_hidden: 3,
        attention_hidden: 3,
        max_tokens: 64,
        embedding_std: 0.5,
        seed,
    };
    let mut model = Model::new(cfg, VOCAB).expect("valid small config");
    model.embeddings.table.trainable = true;
    model
}

/// Two-sentence input over random ids, with an OOV prompt word.
pub(crate) fn random_input(seed: u64, len: usize) -> ModelInput {
    let mut rng = seeded_rng(seed ^ 0xabcdef);
    let mut id = || rng.gen_range(2..VOCAB as u32);
    let tokens: Vec<u32> = (0..len).map(|_| id()).collect();
    let cut = len / 2;
    ModelInput {
        sentences: vec![0..cut, cut..len],
        intervention: vec![id(), id()],
        comparator: vec![id()],
        outcome: vec![id(), OOV_ID, id()],
        tokens,
        ..ModelInput::default()
    }
}

/// Cross-entropy on a fixed class plus fixed linear functionals of α, the
/// raw scores and the sentence logits, so every output carries gradient.
pub(crate) struct Objective {
    class: usize,
    r: Vec<f64>,
    q: Vec<f64>,
    w: Vec<f64>,
}

impl Objective {
    pub(crate) fn new(seed: u64, len: usize, sentences: usize) -> Self {
        let mut rng = seeded_rng(seed.wrapping_mul(31) + 7);
        Objective {
            class: (seed % 3) as usize,
            r: uniform_vec(&mut rng, len),
            q: uniform_vec(&mut rng, len),
            w: uniform_vec(&mut rng, sentences),
        }
    }

    pub(crate) fn value(&self, t: &Trace) -> f64 {
        let mut f = cross_entropy(&t.logits, self.class).0;
        if let Some(a) = &t.alpha {
            f += dot(a, &self.r);
        }
        if let Some(s) = &t.scores {
            f += dot(s, &self.q);
        }
        if let Some(l) = &t.sentence_logits {
            f += dot(l, &self.w);
        }
        f
    }

    pub(crate) fn grads(&self, t: &Trace) -> OutputGrads {
        OutputGrads {
            logits: Some(cross_entropy(&t.logits, self.class).1),
            alpha: t.alpha.as_ref().map(|_| self.r.clone()),
            scores: t.scores.as_ref().map(|_| self.q.clone()),
            sentence_logits: t.sentence_logits.as_ref().map(|_| self.w.clone()),
        }
    }
}

/// Check every parameter of `model` on `input` under `obj`.
pub(crate) fn check_model_on(model: &Model, input: &ModelInput, obj: &Objective) -> Result<GradCheckReport> {
    let mut model = model.clone();
    let trace = model.forward(input)?;
    model.zero_grad();
    model.backward(&trace, &obj.grads(&trace));
    let analytic = flatten_grads(&model.parameters());
    let point = flatten_values(&model.parameters());
    grad_check(
        |p| {
            let mut m = model.clone();
            load_values(&mut m.parameters_mut(ParamGroup::All), p);
            obj.value(&m.forward(input).expect("forward succeeded at the base point"))
        },
        &point,
        &analytic,
        GRAD_TOLERANCE,
    )
}

fn check_model(variant: Variant, seed: u64) -> Result<GradCheckReport> {
    let model = small_model(variant, seed);
    let mut input = random_input(seed, STEPS);
    if variant.is_pipeline() {
        // Fix the discrete selection so the objective is smooth.
        input.selected = Some(vec![0, 1]);
    }
    let obj = Objective::new(seed, STEPS, input.sentences.len());
    check_model_on(&model, &input, &obj)
}
