//! Dense double-precision numerics for the neural models: tensors with
//! gradient accumulators, a GRU cell with a hand-derived backward pass,
//! losses, Adam, and central-difference gradient checking.

mod adam;
mod embedding;
mod gradcheck;
mod gru;
mod loss;
pub mod math;
mod tensor;

pub use adam::{Adam, AdamConfig};
pub use embedding::{parse_word_vectors, Embeddings, WordVectors};
pub use gradcheck::{grad_check, GradCheckReport, FD_STEP};
pub use gru::{Gru, GruCache};
pub use loss::{binary_cross_entropy, binary_cross_entropy_with_logit, cross_entropy, PROB_EPS};
pub use tensor::{Parameter, Tensor2};

use alloc::vec::Vec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic generator used everywhere a seed is accepted.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Box-Muller draw from N(0, 1).
pub fn standard_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen::<f64>();
    math::sqrt(-2.0 * math::ln(u1)) * math::cos(2.0 * core::f64::consts::PI * u2)
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + math::exp(-x))
    } else {
        let e = math::exp(x);
        e / (1.0 + e)
    }
}

/// Max-subtracted softmax. Empty input yields an empty distribution.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = scores.iter().map(|s| math::exp(s - max)).collect();
    let total: f64 = out.iter().sum();
    for v in &mut out {
        *v /= total;
    }
    out
}

/// Gradient of a loss with respect to softmax inputs, given the softmax
/// output and the gradient with respect to that output.
pub fn softmax_backward(probs: &[f64], d_probs: &[f64]) -> Vec<f64> {
    let dot: f64 = probs.iter().zip(d_probs).map(|(p, d)| p * d).sum();
    probs.iter().zip(d_probs).map(|(p, d)| p * (d - dot)).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Concatenate parameter values in order.
pub fn flatten_values(params: &[&Parameter]) -> Vec<f64> {
    params.iter().flat_map(|p| p.value.values().iter().copied()).collect()
}

/// Concatenate parameter gradients in order.
pub fn flatten_grads(params: &[&Parameter]) -> Vec<f64> {
    params.iter().flat_map(|p| p.grad.values().iter().copied()).collect()
}

/// Overwrite parameter values from a flat vector produced by [`flatten_values`].
pub fn load_values(params: &mut [&mut Parameter], flat: &[f64]) {
    let mut offset = 0;
    for p in params.iter_mut() {
        let n = p.value.len();
        p.value.values_mut().copy_from_slice(&flat[offset..offset + n]);
        offset += n;
    }
    assert_eq!(offset, flat.len(), "flat parameter vector length");
}
