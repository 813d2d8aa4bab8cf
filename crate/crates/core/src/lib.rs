// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod env;
pub mod error;
pub mod geometry;
pub mod io;
pub mod nn;
pub mod pattern;
pub mod ppo;
pub mod scalar;
pub mod wind;

pub use error::{Error, Result};

pub type Vec3 = geometry::Vec3<f64>;
pub type SwarmState = geometry::SwarmState<f64>;
pub type ArenaConfig = geometry::ArenaConfig<f64>;
pub type BaseStation = geometry::BaseStation<f64>;
pub type CarrierConfig = pattern::CarrierConfig<f64>;
pub type PatternGrid = pattern::PatternGrid<f64>;
pub type PatternMetrics = pattern::PatternMetrics<f64>;
pub type WindModel = wind::WindModel<f64>;
pub type EnvConfig = env::EnvConfig<f64>;
pub type Environment = env::Environment<f64>;
pub type PolicyNet = ppo::PolicyNet<f64>;
pub type ValueNet = ppo::ValueNet<f64>;
pub type Agent = ppo::Agent<f64>;
pub type Trainer = ppo::Trainer<f64>;
