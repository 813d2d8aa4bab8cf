//! Proximal policy optimization with a recurrent (LSTM) actor, a
//! feed-forward critic and Adam, plus the dense-actor baseline.

mod agent;
mod buffer;
mod loss;
mod nets;

pub use crate::config::PpoSection as PpoConfig;
pub use agent::{
    metrics_csv, train, Agent, EpisodeSummary, MetricsRow, PolicyController, TrainOutcome, Trainer, UpdateStats,
    METRICS_HEADER,
};
pub use buffer::{direct_advantages, gae_advantages, RolloutBuffer, Transition};
pub use loss::{clipped_objective, clipped_objective_grad, clipped_policy_loss, is_clipped, value_loss};
pub use nets::{
    dense_matched_width, gaussian_log_prob, gaussian_log_prob_grad, PolicyBody, PolicyNet, StepCache, ValueCache,
    ValueNet,
};

#[cfg(test)]
mod tests;
