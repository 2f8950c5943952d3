use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sigmoid;
use super::tensor::{glorot_bound, Tensor};
use crate::error::{DctError, Result};

/// Weights of one LSTM layer. Input matrices are `hidden x input`, recurrent
/// matrices `hidden x hidden`, biases have length `hidden`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParameters {
    pub w_ei: Tensor,
    pub w_ef: Tensor,
    pub w_ec: Tensor,
    pub w_eo: Tensor,
    pub w_hi: Tensor,
    pub w_hf: Tensor,
    pub w_hc: Tensor,
    pub w_ho: Tensor,
    pub b_i: Tensor,
    pub b_f: Tensor,
    pub b_c: Tensor,
    pub b_o: Tensor,
}

pub const LSTM_TENSOR_NAMES: [&str; 12] = [
    "w_ei", "w_ef", "w_ec", "w_eo", "w_hi", "w_hf", "w_hc", "w_ho", "b_i", "b_f", "b_c", "b_o",
];

impl LstmParameters {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        let e = || Tensor::zeros(&[hidden, input]);
        let h = || Tensor::zeros(&[hidden, hidden]);
        let b = || Tensor::zeros(&[hidden]);
        LstmParameters {
            w_ei: e(),
            w_ef: e(),
            w_ec: e(),
            w_eo: e(),
            w_hi: h(),
            w_hf: h(),
            w_hc: h(),
            w_ho: h(),
            b_i: b(),
            b_f: b(),
            b_c: b(),
            b_o: b(),
        }
    }

    /// Glorot-uniform matrices, forget bias 1, other biases 0.
    pub fn init<R: Rng + ?Sized>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(input, hidden);
        let eb = glorot_bound(input, hidden);
        let hb = glorot_bound(hidden, hidden);
        for w in [&mut p.w_ei, &mut p.w_ef, &mut p.w_ec, &mut p.w_eo] {
            *w = Tensor::uniform(&[hidden, input], eb, rng);
        }
        for w in [&mut p.w_hi, &mut p.w_hf, &mut p.w_hc, &mut p.w_ho] {
            *w = Tensor::uniform(&[hidden, hidden], hb, rng);
        }
        p.b_f.fill(1.0);
        p
    }

    pub fn input_size(&self) -> usize {
        self.w_ei.cols()
    }

    pub fn hidden_size(&self) -> usize {
        self.w_ei.rows()
    }

    pub fn tensors(&self) -> [(&'static str, &Tensor); 12] {
        let t = [
            &self.w_ei, &self.w_ef, &self.w_ec, &self.w_eo, &self.w_hi, &self.w_hf, &self.w_hc, &self.w_ho, &self.b_i,
            &self.b_f, &self.b_c, &self.b_o,
        ];
        std::array::from_fn(|k| (LSTM_TENSOR_NAMES[k], t[k]))
    }

    pub fn tensors_mut(&mut self) -> [(&'static str, &mut Tensor); 12] {
        let LstmParameters {
            w_ei,
            w_ef,
            w_ec,
            w_eo,
            w_hi,
            w_hf,
            w_hc,
            w_ho,
            b_i,
            b_f,
            b_c,
            b_o,
        } = self;
        let mut t = [w_ei, w_ef, w_ec, w_eo, w_hi, w_hf, w_hc, w_ho, b_i, b_f, b_c, b_o].into_iter();
        std::array::from_fn(|k| (LSTM_TENSOR_NAMES[k], t.next().expect("12 tensors")))
    }

    pub fn validate(&self) -> Result<()> {
        let (input, hidden) = (self.input_size(), self.hidden_size());
        for (name, t) in self.tensors() {
            let want: Vec<usize> = match name.as_bytes()[0] {
                b'b' => vec![hidden],
                _ if name.starts_with("w_e") => vec![hidden, input],
                _ => vec![hidden, hidden],
            };
            if t.shape() != want.as_slice() {
                return Err(DctError::shape(format!(
                    "lstm.{name} has shape {:?}, expected {want:?}",
                    t.shape()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        LstmState {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

/// Intermediates of one step, kept for backpropagation through time.
#[derive(Debug, Clone)]
pub struct LstmStepCache {
    pub input: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub o: Vec<f64>,
    /// Candidate cell value `tanh(W_ec r + W_hc h + b_c)`.
    pub g: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

/// One LSTM update:
///
/// ```text
/// i = σ(W_ei r + W_hi h' + b_i)      f = σ(W_ef r + W_hf h' + b_f)
/// o = σ(W_eo r + W_ho h' + b_o)      g = tanh(W_ec r + W_hc h' + b_c)
/// c = f ⊙ c' + i ⊙ g                 h = o ⊙ tanh(c)
/// ```
pub fn lstm_step(input: &[f64], prev: &LstmState, p: &LstmParameters) -> Result<LstmState> {
    let cache = step_cached(input, prev, p)?;
    Ok(LstmState { h: cache.h, c: cache.c })
}

fn step_cached(input: &[f64], prev: &LstmState, p: &LstmParameters) -> Result<LstmStepCache> {
    let hidden = p.hidden_size();
    if input.len() != p.input_size() {
        return Err(DctError::shape(format!(
            "lstm input has width {}, expected {}",
            input.len(),
            p.input_size()
        )));
    }
    if prev.h.len() != hidden || prev.c.len() != hidden {
        return Err(DctError::shape(format!(
            "lstm state sized ({}, {}), expected {hidden}",
            prev.h.len(),
            prev.c.len()
        )));
    }
    let pre = |we: &Tensor, wh: &Tensor, b: &Tensor| {
        let mut a = b.data().to_vec();
        we.matvec_acc(input, &mut a);
        wh.matvec_acc(&prev.h, &mut a);
        a
    };
    let i: Vec<f64> = pre(&p.w_ei, &p.w_hi, &p.b_i).into_iter().map(sigmoid).collect();
    let f: Vec<f64> = pre(&p.w_ef, &p.w_hf, &p.b_f).into_iter().map(sigmoid).collect();
    let g: Vec<f64> = pre(&p.w_ec, &p.w_hc, &p.b_c).into_iter().map(f64::tanh).collect();
    let o: Vec<f64> = pre(&p.w_eo, &p.w_ho, &p.b_o).into_iter().map(sigmoid).collect();
    let c: Vec<f64> = (0..hidden).map(|k| f[k] * prev.c[k] + i[k] * g[k]).collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let h: Vec<f64> = (0..hidden).map(|k| o[k] * tanh_c[k]).collect();
    Ok(LstmStepCache {
        input: input.to_vec(),
        h_prev: prev.h.clone(),
        c_prev: prev.c.clone(),
        i,
        f,
        o,
        g,
        c,
        tanh_c,
        h,
    })
}

/// Runs the cell over a sequence from the zero state.
pub fn lstm_forward(inputs: &[Vec<f64>], p: &LstmParameters) -> Result<Vec<LstmStepCache>> {
    let mut state = LstmState::zeros(p.hidden_size());
    let mut caches = Vec::with_capacity(inputs.len());
    for r in inputs {
        let cache = step_cached(r, &state, p)?;
        state = LstmState {
            h: cache.h.clone(),
            c: cache.c.clone(),
        };
        caches.push(cache);
    }
    Ok(caches)
}

/// Backpropagation through time. `dh[t]` is the gradient arriving at `h_t`
/// from outside the recurrence; parameter gradients are added into `grad`.
pub fn lstm_backward(
    p: &LstmParameters,
    caches: &[LstmStepCache],
    dh: &[Vec<f64>],
    grad: &mut LstmParameters,
) -> Result<()> {
    if caches.len() != dh.len() {
        return Err(DctError::shape(format!(
            "{} cached steps but {} upstream gradients",
            caches.len(),
            dh.len()
        )));
    }
    let hidden = p.hidden_size();
    let mut dh_next = vec![0.0; hidden];
    let mut dc_next = vec![0.0; hidden];
    let mut da_i = vec![0.0; hidden];
    let mut da_f = vec![0.0; hidden];
    let mut da_c = vec![0.0; hidden];
    let mut da_o = vec![0.0; hidden];
    for (cache, dh_ext) in caches.iter().zip(dh).rev() {
        if dh_ext.len() != hidden {
            return Err(DctError::shape("upstream hidden gradient has the wrong width"));
        }
        for k in 0..hidden {
            let dh_k = dh_ext[k] + dh_next[k];
            let dc = dc_next[k] + dh_k * cache.o[k] * (1.0 - cache.tanh_c[k] * cache.tanh_c[k]);
            let d_o = dh_k * cache.tanh_c[k];
            let d_i = dc * cache.g[k];
            let d_g = dc * cache.i[k];
            let d_f = dc * cache.c_prev[k];
            da_i[k] = d_i * cache.i[k] * (1.0 - cache.i[k]);
            da_f[k] = d_f * cache.f[k] * (1.0 - cache.f[k]);
            da_o[k] = d_o * cache.o[k] * (1.0 - cache.o[k]);
            da_c[k] = d_g * (1.0 - cache.g[k] * cache.g[k]);
            dc_next[k] = dc * cache.f[k];
        }
        let gates = [
            (&da_i, &mut grad.w_ei, &mut grad.w_hi, &mut grad.b_i, &p.w_hi),
            (&da_f, &mut grad.w_ef, &mut grad.w_hf, &mut grad.b_f, &p.w_hf),
            (&da_c, &mut grad.w_ec, &mut grad.w_hc, &mut grad.b_c, &p.w_hc),
            (&da_o, &mut grad.w_eo, &mut grad.w_ho, &mut grad.b_o, &p.w_ho),
        ];
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        for (da, gwe, gwh, gb, wh) in gates {
            gwe.add_outer(da, &cache.input);
            gwh.add_outer(da, &cache.h_prev);
            gb.add_vec(da);
            wh.matvec_t_acc(da, &mut dh_next);
        }
    }
    Ok(())
}
