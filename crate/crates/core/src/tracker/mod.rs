//! The full tracking model and everything built on it.
//!
//! Per campaign: the static vector goes through a tanh dense layer (`S_r`);
//! the daily vectors go through the LSTM (`h_t`); each day's cooperative
//! state is `V_t = [S_r ; h_t]`; attention pools the `V_t` into `D_r`; a
//! linear head on `[S_r ; D_r]` followed by softmax gives the success
//! probability. A second linear head on each `V_t` predicts that day's
//! review polarity. Classes are ordered (failure, success) and (neg, pos).

mod eval;
mod model;
mod params;
mod track;
mod train;

pub use eval::{evaluate, evaluate_with, predict_final, roc_auc, Metrics};
pub use model::{
    backward, day_labels, forward, forward_tape, gradcheck_model, loss_and_grad, Example, ForwardOutput, ForwardTape,
    GradcheckReport, GroupError, LossBreakdown, OutputGrad,
};
pub use params::{make_funds_only, DctParameters, DctWeights, GradientBundle, Sizes, Variant, CHECKPOINT_VERSION};
pub use track::{prefix_probabilities, track, Emotion, TrackPoint, TrackingCurve, CURVE_CSV_HEADER};
pub use train::{train, train_from, TrainConfig};
