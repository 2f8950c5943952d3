//! Hand-sized instance (static 3→2, hidden 2, three days) checked against
//! values frozen from an independent step-by-step evaluation, and against a
//! scalar-loop re-implementation that shares no code with the crate.

use dct_core::nn::Tensor;
use dct_core::tracker::{forward_tape, DctWeights, Sizes};

const P_SUCCESS: f64 = 0.6599942107719077;
const ALPHA: [f64; 3] = [0.3307996100888387, 0.3308480063857973, 0.33835238352536406];
const EMOTION_POS: [f64; 3] = [0.6016841456689515, 0.5993307561190357, 0.5856142086570536];

const XS: [f64; 3] = [0.2, 0.7, 1.0];
const DAYS: [[f64; 3]; 3] = [[1.0, 0.0, 0.5], [0.0, 1.0, 0.25], [0.0, 0.0, 1.0]];

struct Raw {
    se_w: Vec<Vec<f64>>,
    se_b: Vec<f64>,
    gates: Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>)>, // i, f, c, o
    att_w: Vec<f64>,
    att_b: f64,
    out_w: Vec<Vec<f64>>,
    out_b: Vec<f64>,
    em_w: Vec<Vec<f64>>,
    em_b: Vec<f64>,
}

fn m(rows: &[&[f64]]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| r.to_vec()).collect()
}

fn raw() -> Raw {
    Raw {
        se_w: m(&[&[-0.4, 0.3, -0.1], &[-0.5, 0.2, -0.2]]),
        se_b: vec![-0.2, 0.3],
        gates: vec![
            (
                m(&[&[-0.2, 0.5, 0.1], &[-0.3, 0.4, 0.0]]),
                m(&[&[0.2, -0.2], &[0.5, 0.1]]),
                vec![0.0, -0.4],
            ),
            (
                m(&[&[-0.1, -0.5, 0.2], &[-0.2, 0.5, 0.1]]),
                m(&[&[0.3, -0.1], &[-0.5, 0.2]]),
                vec![0.1, -0.3],
            ),
            (
                m(&[&[0.0, -0.4, 0.3], &[-0.1, -0.5, 0.2]]),
                m(&[&[0.4, 0.0], &[-0.4, 0.3]]),
                vec![0.2, -0.2],
            ),
            (
                m(&[&[0.1, -0.3, 0.4], &[0.0, -0.4, 0.3]]),
                m(&[&[0.5, 0.1], &[-0.3, 0.4]]),
                vec![0.3, -0.1],
            ),
        ],
        att_w: vec![0.1, -0.3, 0.2, -0.2],
        att_b: 0.3,
        out_w: m(&[&[-0.3, 0.4, 0.0, -0.4, 0.3, -0.1], &[-0.5, 0.2, -0.2, 0.5, 0.1, -0.3]]),
        out_b: vec![-0.3, 0.2],
        em_w: m(&[&[-0.1, -0.5, 0.2, -0.2], &[0.5, 0.1, -0.3, 0.4]]),
        em_b: vec![-0.1, 0.4],
    }
}

fn to_tensor(rows: &[Vec<f64>]) -> Tensor {
    Tensor::matrix(rows.len(), rows[0].len(), rows.concat()).unwrap()
}

fn weights(r: &Raw) -> DctWeights {
    let sizes = Sizes {
        static_input_dim: 3,
        static_dim: 2,
        hidden_dim: 2,
        input_dim: 3,
    };
    let mut w = DctWeights::zeros(&sizes);
    w.static_encoder.weight = to_tensor(&r.se_w);
    w.static_encoder.bias = Tensor::vector(r.se_b.clone());
    let l = &mut w.lstm;
    let (e, h, b) = &r.gates[0];
    (l.w_ei, l.w_hi, l.b_i) = (to_tensor(e), to_tensor(h), Tensor::vector(b.clone()));
    let (e, h, b) = &r.gates[1];
    (l.w_ef, l.w_hf, l.b_f) = (to_tensor(e), to_tensor(h), Tensor::vector(b.clone()));
    let (e, h, b) = &r.gates[2];
    (l.w_ec, l.w_hc, l.b_c) = (to_tensor(e), to_tensor(h), Tensor::vector(b.clone()));
    let (e, h, b) = &r.gates[3];
    (l.w_eo, l.w_ho, l.b_o) = (to_tensor(e), to_tensor(h), Tensor::vector(b.clone()));
    w.attention.w_s = Tensor::vector(r.att_w.clone());
    w.attention.b_s = Tensor::vector(vec![r.att_b]);
    w.success_head.weight = to_tensor(&r.out_w);
    w.success_head.bias = Tensor::vector(r.out_b.clone());
    w.emotion_head.weight = to_tensor(&r.em_w);
    w.emotion_head.bias = Tensor::vector(r.em_b.clone());
    w
}

/// Scalar loops only.
fn oracle(r: &Raw) -> (f64, Vec<f64>, Vec<f64>) {
    let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
    let mut sr = [0.0; 2];
    for j in 0..2 {
        let mut a = r.se_b[j];
        for k in 0..3 {
            a += r.se_w[j][k] * XS[k];
        }
        sr[j] = a.tanh();
    }
    let (mut h, mut c) = ([0.0f64; 2], [0.0f64; 2]);
    let mut vs = Vec::new();
    for day in DAYS {
        let mut pre = [[0.0f64; 2]; 4];
        for (g, (we, wh, b)) in r.gates.iter().enumerate() {
            for j in 0..2 {
                let mut a = b[j];
                for k in 0..3 {
                    a += we[j][k] * day[k];
                }
                for k in 0..2 {
                    a += wh[j][k] * h[k];
                }
                pre[g][j] = a;
            }
        }
        let mut nh = [0.0; 2];
        for j in 0..2 {
            let (i, f, g, o) = (sig(pre[0][j]), sig(pre[1][j]), pre[2][j].tanh(), sig(pre[3][j]));
            c[j] = f * c[j] + i * g;
            nh[j] = o * c[j].tanh();
        }
        h = nh;
        vs.push([sr[0], sr[1], h[0], h[1]]);
    }
    let mut ex = Vec::new();
    for v in &vs {
        let mut u = r.att_b;
        for k in 0..4 {
            u += r.att_w[k] * v[k];
        }
        ex.push(u.tanh().exp());
    }
    let total: f64 = ex.iter().sum();
    let alpha: Vec<f64> = ex.iter().map(|e| e / total).collect();
    let mut x = vec![sr[0], sr[1]];
    for k in 0..4 {
        x.push((0..3).map(|t| alpha[t] * vs[t][k]).sum());
    }
    let logit = |w: &[Vec<f64>], b: &[f64], x: &[f64], row: usize| {
        b[row] + w[row].iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    };
    let (z0, z1) = (logit(&r.out_w, &r.out_b, &x, 0), logit(&r.out_w, &r.out_b, &x, 1));
    let p = z1.exp() / (z0.exp() + z1.exp());
    let em = vs
        .iter()
        .map(|v| {
            let (e0, e1) = (logit(&r.em_w, &r.em_b, v, 0), logit(&r.em_w, &r.em_b, v, 1));
            e1.exp() / (e0.exp() + e1.exp())
        })
        .collect();
    (p, alpha, em)
}

#[test]
fn oracle_reproduces_frozen_values() {
    let (p, alpha, em) = oracle(&raw());
    assert!((p - P_SUCCESS).abs() < 1e-12);
    for k in 0..3 {
        assert!((alpha[k] - ALPHA[k]).abs() < 1e-12);
        assert!((em[k] - EMOTION_POS[k]).abs() < 1e-12);
    }
}

#[test]
fn forward_matches_hand_evaluation() {
    let w = weights(&raw());
    let days: Vec<Vec<f64>> = DAYS.iter().map(|d| d.to_vec()).collect();
    let out = forward_tape(&w, &XS, &days).unwrap().output();
    assert!((out.p_success - P_SUCCESS).abs() < 1e-9, "{}", out.p_success);
    for k in 0..3 {
        assert!((out.attention[k] - ALPHA[k]).abs() < 1e-9);
        assert!((out.day_emotions[k][1] - EMOTION_POS[k]).abs() < 1e-9);
    }
}
