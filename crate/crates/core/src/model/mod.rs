//! Set neural encoder, manual backpropagation and the training loop.

mod adam;
mod forward;
mod negative;
mod params;
mod train;

pub use adam::{adam_step, AdamState};
pub use forward::{batch_loss, bce, bce_loss, loss_and_grad, sigmoid, Scorer, SetInput};
pub use negative::{negative_sample, NegativeSampler, MAX_ATTEMPTS};
pub use params::{Aggr, Linear, ModelParams, ModelShape};
pub use train::{train, EpochRecord, ModelSpec, TrainConfig, TrainContext, TrainOutcome};

use crate::graph::Attributes;
use crate::spjoin::JoinedQuery;
use crate::Result;

/// Pooled representation `h_Q` of a joined query. Stored features are
/// multiplied by `feature_scale`; attribute rows, if any, are appended per
/// member.
pub fn encode_query(
    jq: &JoinedQuery,
    attrs: Option<&Attributes>,
    params: &ModelParams,
    feature_scale: f64,
) -> Result<Vec<f64>> {
    params.encode(&SetInput::from_joined(jq, feature_scale, attrs)?)
}
