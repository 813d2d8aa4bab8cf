//! Run configuration: a versioned TOML document with `arena`, `carrier`,
//! `wind`, `env` and `ppo` sections. Unknown keys are rejected and every
//! invariant violation is reported with its field path.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ArenaConfig, BaseStation, Vec3};
use crate::nn::AdamConfig;
use crate::pattern::{CarrierConfig, Resolution};
use crate::scalar::Scalar;

pub const SCHEMA_VERSION: u32 = 1;

/// One invariant violation, addressed by dotted field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl ConfigIssue {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    /// 1° pattern grid.
    Train,
    /// 0.25° pattern grid.
    Acceptance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarrierSection {
    pub frequency_hz: f64,
    pub speed_of_light: f64,
}

/// Wind section, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum WindSection {
    Constant {
        speed: f64,
        #[serde(default)]
        direction: f64,
    },
    Shear {
        ground_speed: f64,
        gradient: f64,
        #[serde(default)]
        direction: f64,
    },
    Turbulent {
        mean_speed: f64,
        intensity: f64,
        frequency: f64,
        /// Fixed phase; drawn per episode when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phase: Option<f64>,
        /// Fixed direction; drawn per episode when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        direction: Option<f64>,
        #[serde(default = "default_reference_speed")]
        reference_speed: f64,
        #[serde(default = "default_roughness")]
        roughness: f64,
    },
}

fn default_reference_speed() -> f64 {
    5.0
}

fn default_roughness() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardConvention {
    /// `D_lin / M_lin`.
    Linear,
    /// `D_dB / M_dB`.
    Db,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolutionSection {
    pub theta_samples: usize,
    pub phi_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSection {
    pub n_uavs: usize,
    /// Episode length `T`, seconds.
    pub horizon: f64,
    pub dt: f64,
    pub penalty: f64,
    pub reward_convention: RewardConvention,
    /// Normalizer for the wind-speed observation, m/s.
    pub v_max: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub base_station: [f64; 3],
    pub phase_aligned_start: bool,
    /// Overrides the grid implied by `precision`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<ResolutionSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdvantageMode {
    /// Discounted sum of `r − V` plus a bootstrap term.
    Direct,
    Gae,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PpoSection {
    pub clip_epsilon: f64,
    pub gamma: f64,
    /// Transitions per minibatch; rounded up to whole segments.
    pub batch_size: usize,
    pub update_epochs: usize,
    /// Steps collected per environment per iteration.
    pub rollout_length: usize,
    /// Recurrent segment length for batched replay.
    pub segment_length: usize,
    pub log_std_init: f64,
    pub max_iterations: usize,
    pub n_pop: usize,
    pub hidden: usize,
    pub value_hidden: usize,
    /// `false` replaces the LSTM with a dense layer (standard PPO).
    pub recurrent: bool,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Global gradient-norm cap; 0 disables clipping.
    pub grad_clip: f64,
    pub advantage: AdvantageMode,
    pub gae_lambda: f64,
    pub normalize_advantages: bool,
}

impl PpoSection {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig { learning_rate: self.learning_rate, beta1: self.beta1, beta2: self.beta2, eps: self.adam_eps }
    }

    pub fn buffer_capacity(&self) -> usize {
        self.rollout_length * self.n_pop
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub output_dir: String,
    pub seeds: Vec<u64>,
    pub precision: Precision,
    pub arena: ArenaConfig<f64>,
    pub carrier: CarrierSection,
    pub wind: WindSection,
    pub env: EnvSection,
    pub ppo: PpoSection,
}

impl RunConfig {
    /// 8 UAVs, 3 GHz, constant 2 m/s wind, 100 s episodes at 0.5 s steps.
    pub fn paper_default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            output_dir: "runs/default".into(),
            seeds: vec![1, 2, 3],
            precision: Precision::Train,
            arena: ArenaConfig::paper_default(),
            carrier: CarrierSection { frequency_hz: 3e9, speed_of_light: 3e8 },
            wind: WindSection::Constant { speed: 2.0, direction: 0.0 },
            env: EnvSection {
                n_uavs: 8,
                horizon: 100.0,
                dt: 0.5,
                penalty: 10.0,
                reward_convention: RewardConvention::Linear,
                v_max: 10.0,
                tau_min: 0.5,
                tau_max: 0.5,
                base_station: [0.0, 0.0, 0.0],
                phase_aligned_start: true,
                resolution: None,
            },
            ppo: PpoSection {
                clip_epsilon: 0.2,
                gamma: 0.99,
                batch_size: 100,
                update_epochs: 4,
                rollout_length: 200,
                segment_length: 50,
                log_std_init: 0.5f64.ln(),
                max_iterations: 1000,
                n_pop: 1,
                hidden: 64,
                value_hidden: 64,
                recurrent: true,
                learning_rate: 3e-4,
                beta1: 0.9,
                beta2: 0.999,
                adam_eps: 1e-8,
                grad_clip: 5.0,
                advantage: AdvantageMode::Direct,
                gae_lambda: 0.95,
                normalize_advantages: true,
            },
        }
    }

    /// Parses and validates. Parse failures and invariant violations both
    /// come back as [`Error::Config`] with field paths.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let message = e.inner().message().trim().to_string();
            Error::Config(vec![ConfigIssue::new(if path == "." { "<root>".into() } else { path }, message)])
        })?;
        let issues = cfg.issues();
        if issues.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(issues))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Number of decision steps per episode, `T / dt`.
    pub fn steps_per_episode(&self) -> usize {
        (self.env.horizon / self.env.dt).round() as usize
    }

    pub fn resolution(&self) -> Resolution {
        match (self.env.resolution, self.precision) {
            (Some(r), _) => Resolution { theta_samples: r.theta_samples, phi_samples: r.phi_samples },
            (None, Precision::Train) => Resolution::TRAIN,
            (None, Precision::Acceptance) => Resolution::ACCEPTANCE,
        }
    }

    pub fn arena<T: Scalar>(&self) -> ArenaConfig<T> {
        let a = &self.arena;
        ArenaConfig {
            x_extent: T::lit(a.x_extent),
            y_extent: T::lit(a.y_extent),
            z_min: T::lit(a.z_min),
            z_max: T::lit(a.z_max),
            d_min: T::lit(a.d_min),
        }
    }

    pub fn carrier<T: Scalar>(&self) -> CarrierConfig<T> {
        CarrierConfig::new(T::lit(self.carrier.frequency_hz), T::lit(self.carrier.speed_of_light))
    }

    pub fn base_station<T: Scalar>(&self) -> BaseStation<T> {
        let [x, y, z] = self.env.base_station;
        BaseStation { position: Vec3::new(T::lit(x), T::lit(y), T::lit(z)) }
    }

    /// Every invariant violation, in section order.
    pub fn issues(&self) -> Vec<ConfigIssue> {
        let mut out = Vec::new();
        let mut check = |ok: bool, path: &str, msg: String| {
            if !ok {
                out.push(ConfigIssue::new(path, msg));
            }
        };
        check(
            self.schema_version == SCHEMA_VERSION,
            "schema_version",
            format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
        );
        check(!self.seeds.is_empty(), "seeds", "seed list must be nonempty".into());
        check(!self.output_dir.is_empty(), "output_dir", "must be nonempty".into());

        for (field, msg) in self.arena.issues() {
            check(false, &format!("arena.{field}"), msg);
        }

        let c = &self.carrier;
        check(c.frequency_hz > 0.0 && c.frequency_hz.is_finite(), "carrier.frequency_hz", format!("must be > 0, got {}", c.frequency_hz));
        check(c.speed_of_light > 0.0 && c.speed_of_light.is_finite(), "carrier.speed_of_light", format!("must be > 0, got {}", c.speed_of_light));

        match self.wind {
            WindSection::Constant { speed, direction } => {
                check(speed >= 0.0 && speed.is_finite(), "wind.speed", format!("must be >= 0, got {speed}"));
                check(direction.is_finite(), "wind.direction", "must be finite".into());
            }
            WindSection::Shear { ground_speed, gradient, direction } => {
                check(ground_speed >= 0.0 && ground_speed.is_finite(), "wind.ground_speed", format!("must be >= 0, got {ground_speed}"));
                check(gradient.is_finite(), "wind.gradient", "must be finite".into());
                check(direction.is_finite(), "wind.direction", "must be finite".into());
                let z = if gradient < 0.0 { self.arena.z_max } else { self.arena.z_min };
                let v = ground_speed + gradient * z;
                check(v >= 0.0, "wind.gradient", format!("wind speed {v} m/s at altitude {z} m is negative"));
            }
            WindSection::Turbulent { mean_speed, intensity, frequency, phase, direction, reference_speed, roughness } => {
                check(mean_speed >= 0.0 && mean_speed.is_finite(), "wind.mean_speed", format!("must be >= 0, got {mean_speed}"));
                check(intensity >= 0.0 && intensity.is_finite(), "wind.intensity", format!("must be >= 0, got {intensity}"));
                check(frequency >= 0.0 && frequency.is_finite(), "wind.frequency", format!("must be >= 0, got {frequency}"));
                check(phase.is_none_or(f64::is_finite), "wind.phase", "must be finite".into());
                check(direction.is_none_or(f64::is_finite), "wind.direction", "must be finite".into());
                check(reference_speed >= 0.0, "wind.reference_speed", format!("must be >= 0, got {reference_speed}"));
                check(roughness > 0.0, "wind.roughness", format!("must be > 0, got {roughness}"));
            }
        }

        let e = &self.env;
        check(e.n_uavs >= 1, "env.n_uavs", "must be >= 1".into());
        check(e.horizon > 0.0 && e.horizon.is_finite(), "env.horizon", format!("must be > 0, got {}", e.horizon));
        let steps = e.horizon / e.dt;
        check(
            e.dt > 0.0 && (steps - steps.round()).abs() <= 1e-9 * steps.max(1.0),
            "env.dt",
            format!("horizon / dt = {} / {} is not an integral step count", e.horizon, e.dt),
        );
        check(e.penalty >= 0.0 && e.penalty.is_finite(), "env.penalty", format!("must be >= 0, got {}", e.penalty));
        check(e.v_max > 0.0, "env.v_max", format!("must be > 0, got {}", e.v_max));
        check(e.tau_min <= e.dt, "env.tau_min", format!("tau_min ({}) must be <= dt ({})", e.tau_min, e.dt));
        check(e.dt <= e.tau_max, "env.tau_max", format!("dt ({}) must be <= tau_max ({})", e.dt, e.tau_max));
        check(e.base_station.iter().all(|v| v.is_finite()), "env.base_station", "must be finite".into());
        if let Some(r) = e.resolution {
            check(r.theta_samples >= 3, "env.resolution.theta_samples", "must be >= 3".into());
            check(r.phi_samples >= 4, "env.resolution.phi_samples", "must be >= 4".into());
        }
        let bs = self.base_station::<f64>().position;
        check(
            !(bs.x.abs() <= self.arena.x_extent / 2.0 && bs.y.abs() <= self.arena.y_extent / 2.0 && bs.z >= self.arena.z_min && bs.z <= self.arena.z_max),
            "env.base_station",
            "base station must lie outside the flight volume".into(),
        );

        let p = &self.ppo;
        check(p.clip_epsilon > 0.0 && p.clip_epsilon < 1.0, "ppo.clip_epsilon", format!("must lie in (0, 1), got {}", p.clip_epsilon));
        check((0.0..1.0).contains(&p.gamma), "ppo.gamma", format!("must lie in [0, 1), got {}", p.gamma));
        check(p.update_epochs >= 1, "ppo.update_epochs", "must be >= 1".into());
        check(p.rollout_length >= 1, "ppo.rollout_length", "must be >= 1".into());
        check(p.segment_length >= 1, "ppo.segment_length", "must be >= 1".into());
        check(p.n_pop >= 1, "ppo.n_pop", "must be >= 1".into());
        check(p.hidden >= 1, "ppo.hidden", "must be >= 1".into());
        check(p.value_hidden >= 1, "ppo.value_hidden", "must be >= 1".into());
        check(
            p.batch_size >= 1 && p.batch_size <= p.buffer_capacity(),
            "ppo.batch_size",
            format!("must lie in [1, rollout_length * n_pop = {}], got {}", p.buffer_capacity(), p.batch_size),
        );
        check(p.log_std_init.is_finite(), "ppo.log_std_init", "must be finite".into());
        check(p.learning_rate > 0.0, "ppo.learning_rate", format!("must be > 0, got {}", p.learning_rate));
        check((0.0..1.0).contains(&p.beta1), "ppo.beta1", format!("must lie in [0, 1), got {}", p.beta1));
        check((0.0..1.0).contains(&p.beta2), "ppo.beta2", format!("must lie in [0, 1), got {}", p.beta2));
        check(p.adam_eps > 0.0, "ppo.adam_eps", "must be > 0".into());
        check(p.grad_clip >= 0.0, "ppo.grad_clip", "must be >= 0".into());
        check((0.0..=1.0).contains(&p.gae_lambda), "ppo.gae_lambda", format!("must lie in [0, 1], got {}", p.gae_lambda));
        out
    }
}
