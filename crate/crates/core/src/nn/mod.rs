//! Numerical building blocks of the tracking model.
//!
//! Every operation has a forward function and, where the model trains
//! through it, an explicit backward function that accumulates parameter
//! gradients into a structure shaped like the parameters. There is no
//! general autodiff: the model's graph is fixed and composed by hand in
//! [`crate::tracker`].

mod attention;
mod dense;
mod gradcheck;
mod loss;
mod lstm;
mod tensor;

pub use attention::{
    attention_backward, attention_pool, attention_scores, attention_weights, softmax, AttentionParameters,
};
pub use dense::{dense, dense_backward, dense_tanh, Dense};
pub use gradcheck::{gradcheck, gradcheck_coords, relative_error, sample_coords, GradcheckOptions};
pub use loss::{cross_entropy, softmax_binary, softmax_cross_entropy_grad, PROB_CLAMP};
pub use lstm::{lstm_backward, lstm_forward, lstm_step, LstmParameters, LstmState, LstmStepCache};
pub use tensor::{glorot_bound, Tensor};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
