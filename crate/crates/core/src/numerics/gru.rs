use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{math, sigmoid, Parameter, Tensor2};
use crate::error::{Error, Result};

/// Gated recurrent unit:
///
/// ```text
/// z  = σ(Wz x + Uz h + bz)
/// r  = σ(Wr x + Ur h + br)
/// h̃  = tanh(Wh x + Uh (r ⊙ h) + bh)
/// h' = (1 - z) ⊙ h + z ⊙ h̃
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gru {
    pub wz: Parameter,
    pub uz: Parameter,
    pub bz: Parameter,
    pub wr: Parameter,
    pub ur: Parameter,
    pub br: Parameter,
    pub wh: Parameter,
    pub uh: Parameter,
    pub bh: Parameter,
}

/// Values saved by [`Gru::step`] for the backward pass.
#[derive(Clone, Debug)]
pub struct GruCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    pub candidate: Vec<f64>,
    pub r_h: Vec<f64>,
}

impl Gru {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        let m = |rows, cols| Parameter::zeros(rows, cols);
        Gru {
            wz: m(hidden, input),
            uz: m(hidden, hidden),
            bz: m(hidden, 1),
            wr: m(hidden, input),
            ur: m(hidden, hidden),
            br: m(hidden, 1),
            wh: m(hidden, input),
            uh: m(hidden, hidden),
            bh: m(hidden, 1),
        }
    }

    /// Uniform(-1/√d, 1/√d) initialisation of every weight and bias.
    pub fn new<R: Rng + ?Sized>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let bound = 1.0 / math::sqrt(hidden as f64);
        let mut gru = Gru::zeros(input, hidden);
        for p in gru.parameters_mut() {
            p.value = Tensor2::random_uniform(p.value.rows(), p.value.cols(), bound, rng);
        }
        gru
    }

    pub fn input_dim(&self) -> usize {
        self.wz.value.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.wz.value.rows()
    }

    pub fn parameters(&self) -> [&Parameter; 9] {
        [&self.wz, &self.uz, &self.bz, &self.wr, &self.ur, &self.br, &self.wh, &self.uh, &self.bh]
    }

    pub fn parameters_mut(&mut self) -> [&mut Parameter; 9] {
        [
            &mut self.wz,
            &mut self.uz,
            &mut self.bz,
            &mut self.wr,
            &mut self.ur,
            &mut self.br,
            &mut self.wh,
            &mut self.uh,
            &mut self.bh,
        ]
    }

    pub fn step(&self, x: &[f64], h: &[f64]) -> Result<(Vec<f64>, GruCache)> {
        let d = self.hidden_dim();
        if x.len() != self.input_dim() || h.len() != d {
            return Err(Error::ShapeMismatch(format!(
                "GRU expects input {} and state {}, got {} and {}",
                self.input_dim(),
                d,
                x.len(),
                h.len()
            )));
        }
        let gate = |w: &Parameter, u: &Parameter, b: &Parameter, state: &[f64]| {
            let mut a = b.value.values().to_vec();
            w.value.matvec_acc(x, &mut a);
            u.value.matvec_acc(state, &mut a);
            a
        };
        let z: Vec<f64> = gate(&self.wz, &self.uz, &self.bz, h).into_iter().map(sigmoid).collect();
        let r: Vec<f64> = gate(&self.wr, &self.ur, &self.br, h).into_iter().map(sigmoid).collect();
        let r_h: Vec<f64> = r.iter().zip(h).map(|(a, b)| a * b).collect();
        let candidate: Vec<f64> = gate(&self.wh, &self.uh, &self.bh, &r_h).into_iter().map(math::tanh).collect();
        let h_new = (0..d).map(|k| (1.0 - z[k]) * h[k] + z[k] * candidate[k]).collect();
        Ok((h_new, GruCache { x: x.to_vec(), h_prev: h.to_vec(), z, r, candidate, r_h }))
    }

    /// Accumulate parameter gradients for one step and return `(dx, dh_prev)`.
    pub fn backward(&mut self, cache: &GruCache, dh_new: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d = self.hidden_dim();
        let GruCache { x, h_prev, z, r, candidate, r_h } = cache;
        let mut dx = vec![0.0; x.len()];
        let mut dh = vec![0.0; d];

        let mut da_h = vec![0.0; d];
        let mut da_z = vec![0.0; d];
        for k in 0..d {
            let d_cand = dh_new[k] * z[k];
            let dz = dh_new[k] * (candidate[k] - h_prev[k]);
            dh[k] += dh_new[k] * (1.0 - z[k]);
            da_h[k] = d_cand * (1.0 - candidate[k] * candidate[k]);
            da_z[k] = dz * z[k] * (1.0 - z[k]);
        }

        self.wh.grad.add_outer(&da_h, x);
        self.uh.grad.add_outer(&da_h, r_h);
        self.bh.grad.add_column(&da_h);
        self.wh.value.matvec_t_acc(&da_h, &mut dx);
        let d_rh = self.uh.value.matvec_t(&da_h);

        let mut da_r = vec![0.0; d];
        for k in 0..d {
            dh[k] += d_rh[k] * r[k];
            let dr = d_rh[k] * h_prev[k];
            da_r[k] = dr * r[k] * (1.0 - r[k]);
        }

        self.wz.grad.add_outer(&da_z, x);
        self.uz.grad.add_outer(&da_z, h_prev);
        self.bz.grad.add_column(&da_z);
        self.wz.value.matvec_t_acc(&da_z, &mut dx);
        self.uz.value.matvec_t_acc(&da_z, &mut dh);

        self.wr.grad.add_outer(&da_r, x);
        self.ur.grad.add_outer(&da_r, h_prev);
        self.br.grad.add_column(&da_r);
        self.wr.value.matvec_t_acc(&da_r, &mut dx);
        self.ur.value.matvec_t_acc(&da_r, &mut dh);

        (dx, dh)
    }

    pub fn zero_grad(&mut self) {
        for p in self.parameters_mut() {
            p.zero_grad();
        }
    }
}
