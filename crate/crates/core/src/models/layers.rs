use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::numerics::{dot, math, Parameter, Tensor2};

/// `y = W x + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    pub w: Parameter,
    pub b: Parameter,
}

impl Linear {
    pub fn new<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> Self {
        let bound = 1.0 / math::sqrt(input.max(1) as f64);
        Linear { w: Parameter::new(Tensor2::random_uniform(output, input, bound, rng)), b: Parameter::zeros(output, 1) }
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Linear { w: Parameter::zeros(output, input), b: Parameter::zeros(output, 1) }
    }

    pub fn input_dim(&self) -> usize {
        self.w.value.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.w.value.rows()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.b.value.values().to_vec();
        self.w.value.matvec_acc(x, &mut y);
        y
    }

    /// Accumulate gradients and return `dx`.
    pub fn backward(&mut self, x: &[f64], dy: &[f64]) -> Vec<f64> {
        self.w.grad.add_outer(dy, x);
        self.b.grad.add_column(dy);
        self.w.value.matvec_t(dy)
    }

    pub fn parameters(&self) -> [&Parameter; 2] {
        [&self.w, &self.b]
    }

    pub fn parameters_mut(&mut self) -> [&mut Parameter; 2] {
        [&mut self.w, &mut self.b]
    }
}

/// Per-token attention scores over hidden states.
#[derive(Clone, Debug, PartialEq)]
pub enum Scorer {
    /// `s_t = w·h_t + b`
    Plain { w: Parameter, b: Parameter },
    /// `s_t = v·tanh(W_h h_t + W_p [i; c; o] + b) + b_v`
    Conditional { wh: Parameter, wp: Parameter, b: Parameter, v: Parameter, bv: Parameter },
}

/// Intermediate values kept for the backward pass.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScorerTrace {
    pub scores: Vec<f64>,
    /// Hidden units per token (conditional scorer only).
    pub units: Vec<Vec<f64>>,
}

impl Scorer {
    pub fn plain<R: Rng + ?Sized>(hidden: usize, rng: &mut R) -> Self {
        let bound = 1.0 / math::sqrt(hidden as f64);
        Scorer::Plain { w: Parameter::new(Tensor2::random_uniform(1, hidden, bound, rng)), b: Parameter::zeros(1, 1) }
    }

    pub fn conditional<R: Rng + ?Sized>(hidden: usize, prompt: usize, units: usize, rng: &mut R) -> Self {
        let bound = 1.0 / math::sqrt((hidden + prompt) as f64);
        Scorer::Conditional {
            wh: Parameter::new(Tensor2::random_uniform(units, hidden, bound, rng)),
            wp: Parameter::new(Tensor2::random_uniform(units, prompt, bound, rng)),
            b: Parameter::zeros(units, 1),
            v: Parameter::new(Tensor2::random_uniform(1, units, 1.0 / math::sqrt(units as f64), rng)),
            bv: Parameter::zeros(1, 1),
        }
    }

    pub fn parameters(&self) -> Vec<&Parameter> {
        match self {
            Scorer::Plain { w, b } => vec![w, b],
            Scorer::Conditional { wh, wp, b, v, bv } => vec![wh, wp, b, v, bv],
        }
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        match self {
            Scorer::Plain { w, b } => vec![w, b],
            Scorer::Conditional { wh, wp, b, v, bv } => vec![wh, wp, b, v, bv],
        }
    }

    /// Raw scores for each column of `states`; `prompt` is `[i; c; o]`.
    pub fn forward(&self, states: &[Vec<f64>], prompt: &[f64]) -> ScorerTrace {
        match self {
            Scorer::Plain { w, b } => {
                let b = b.value.values()[0];
                ScorerTrace { scores: states.iter().map(|h| dot(w.value.values(), h) + b).collect(), units: Vec::new() }
            }
            Scorer::Conditional { wh, wp, b, v, bv } => {
                let mut shared = b.value.values().to_vec();
                wp.value.matvec_acc(prompt, &mut shared);
                let bv = bv.value.values()[0];
                let units: Vec<Vec<f64>> = states
                    .iter()
                    .map(|h| {
                        let mut a = shared.clone();
                        wh.value.matvec_acc(h, &mut a);
                        a.into_iter().map(math::tanh).collect()
                    })
                    .collect();
                let scores = units.iter().map(|u| dot(v.value.values(), u) + bv).collect();
                ScorerTrace { scores, units }
            }
        }
    }

    /// Given `ds`, accumulate parameter gradients, add into `d_states`, and
    /// return the gradient for the prompt vector.
    pub fn backward(
        &mut self,
        trace: &ScorerTrace,
        states: &[Vec<f64>],
        prompt: &[f64],
        ds: &[f64],
        d_states: &mut [Vec<f64>],
    ) -> Vec<f64> {
        match self {
            Scorer::Plain { w, b } => {
                for (t, &g) in ds.iter().enumerate() {
                    for (gw, h) in w.grad.values_mut().iter_mut().zip(&states[t]) {
                        *gw += g * h;
                    }
                    b.grad.values_mut()[0] += g;
                    for (dh, wv) in d_states[t].iter_mut().zip(w.value.values()) {
                        *dh += g * wv;
                    }
                }
                vec![0.0; prompt.len()]
            }
            Scorer::Conditional { wh, wp, b, v, bv } => {
                let mut d_shared = vec![0.0; b.value.rows()];
                for (t, &g) in ds.iter().enumerate() {
                    if g == 0.0 {
                        continue;
                    }
                    let u = &trace.units[t];
                    bv.grad.values_mut()[0] += g;
                    let d_pre: Vec<f64> = u
                        .iter()
                        .zip(v.value.values())
                        .zip(v.grad.values_mut())
                        .map(|((&uk, &vk), gv)| {
                            *gv += g * uk;
                            g * vk * (1.0 - uk * uk)
                        })
                        .collect();
                    wh.grad.add_outer(&d_pre, &states[t]);
                    wh.value.matvec_t_acc(&d_pre, &mut d_states[t]);
                    for (a, d) in d_shared.iter_mut().zip(&d_pre) {
                        *a += d;
                    }
                }
                b.grad.add_column(&d_shared);
                wp.grad.add_outer(&d_shared, prompt);
                wp.value.matvec_t(&d_shared)
            }
        }
    }
}
