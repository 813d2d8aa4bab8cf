//! The beamforming MDP: per-UAV excitation weights are the action, the swarm
//! drifts under wind every `dt`, and the reward trades directivity toward the
//! base station against the maximum sidelobe level.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{RewardConvention, RunConfig, WindSection};
use crate::error::{Error, Result};
use crate::geometry::{
    apply_displacement, build_swarm, check_bounds, check_collisions, phase_align, steering_direction, ArenaConfig,
    BaseStation, SwarmState, Vec3,
};
use crate::io::fmt_num;
use crate::pattern::{metrics, CarrierConfig, PatternMetrics, Resolution};
use crate::scalar::{sigmoid, Scalar};
use crate::wind::{
    episode_phase, wind_deltas, wind_observation, ConstantWindParams, ShearWindParams, TurbulentWindParams, WindModel,
};

/// Re-draws of the initial placement when phase alignment would push a UAV
/// out of bounds or into a neighbour.
const ALIGN_RETRIES: u64 = 64;

pub const TRACE_HEADER: &str =
    "episode,step,t,wind_type,V_t,theta_t,reward,directivity_db,msll_db,penalty,violations,collisions";

#[derive(Debug, Clone)]
pub struct EnvConfig<T> {
    pub n_uavs: usize,
    /// Decision steps per episode, `T / dt`.
    pub steps: usize,
    pub dt: T,
    pub arena: ArenaConfig<T>,
    pub carrier: CarrierConfig<T>,
    pub wind: WindSection,
    pub bs: BaseStation<T>,
    pub penalty: T,
    pub reward_convention: RewardConvention,
    pub v_max: T,
    pub resolution: Resolution,
    pub phase_aligned_start: bool,
}

impl<T: Scalar> EnvConfig<T> {
    /// Assumes `cfg` has been validated.
    pub fn from_run(cfg: &RunConfig) -> Self {
        Self {
            n_uavs: cfg.env.n_uavs,
            steps: cfg.steps_per_episode(),
            dt: T::lit(cfg.env.dt),
            arena: cfg.arena(),
            carrier: cfg.carrier(),
            wind: cfg.wind.clone(),
            bs: cfg.base_station(),
            penalty: T::lit(cfg.env.penalty),
            reward_convention: cfg.env.reward_convention,
            v_max: T::lit(cfg.env.v_max),
            resolution: cfg.resolution(),
            phase_aligned_start: cfg.env.phase_aligned_start,
        }
    }

    pub fn observation_len(&self) -> usize {
        4 * self.n_uavs + 2
    }
}

/// Wind model for one episode. Unset turbulent phase/direction are drawn
/// from the episode seed.
pub fn episode_wind<T: Scalar>(section: &WindSection, seed: u64) -> WindModel<T> {
    match *section {
        WindSection::Constant { speed, direction } => {
            WindModel::Constant(ConstantWindParams { speed: T::lit(speed), direction: T::lit(direction) })
        }
        WindSection::Shear { ground_speed, gradient, direction } => WindModel::Shear(ShearWindParams {
            ground_speed: T::lit(ground_speed),
            gradient: T::lit(gradient),
            direction: T::lit(direction),
        }),
        WindSection::Turbulent { mean_speed, intensity, frequency, phase, direction, reference_speed, roughness } => {
            let direction = direction.unwrap_or_else(|| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD1_5EC7_10A5);
                rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)
            });
            WindModel::Turbulent(TurbulentWindParams {
                mean_speed: T::lit(mean_speed),
                intensity: T::lit(intensity),
                frequency: T::lit(frequency),
                phase: T::lit(phase.unwrap_or_else(|| episode_phase(seed))),
                direction: T::lit(direction),
                reference_speed: T::lit(reference_speed),
                roughness: T::lit(roughness),
            })
        }
    }
}

/// Independent sub-seed for stream `index` of `base` (SplitMix64 finalizer).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Flat observation: per UAV `(x, y, z)` scaled to `[-1, 1]` by the arena and
/// the weight, then `V_t / V_max` and `θ_t / π`.
pub fn encode_state<T: Scalar>(swarm: &SwarmState<T>, wind_obs: (T, T), arena: &ArenaConfig<T>, v_max: T) -> Vec<T> {
    let mut obs = Vec::with_capacity(4 * swarm.len() + 2);
    for u in &swarm.uavs {
        let p = u.position;
        obs.push(p.x / arena.half_x());
        obs.push(p.y / arena.half_y());
        obs.push((p.z - arena.z_mid()) / arena.z_half());
        obs.push(u.weight);
    }
    obs.push(wind_obs.0 / v_max);
    obs.push(wind_obs.1 / T::PI());
    obs
}

/// Inverse of [`encode_state`]; the timeslot is not encoded and comes back 0.
pub fn decode_state<T: Scalar>(obs: &[T], arena: &ArenaConfig<T>, v_max: T) -> Result<(SwarmState<T>, (T, T))> {
    if obs.len() < 2 || !(obs.len() - 2).is_multiple_of(4) {
        return Err(Error::Dimension { context: "observation", expected: 4 * ((obs.len().max(2) - 2) / 4) + 2, actual: obs.len() });
    }
    let n = (obs.len() - 2) / 4;
    let mut swarm = SwarmState::from_positions(&vec![Vec3::zero(); n], T::one());
    for (u, c) in swarm.uavs.iter_mut().zip(obs.chunks_exact(4)) {
        u.position = Vec3::new(c[0] * arena.half_x(), c[1] * arena.half_y(), c[2] * arena.z_half() + arena.z_mid());
        u.weight = c[3];
    }
    Ok((swarm, (obs[4 * n] * v_max, obs[4 * n + 1] * T::PI())))
}

/// Reward for one pattern. `None` metrics mean the pattern radiates no power,
/// which is scored as a violation. An undefined sidelobe level (no sidelobes)
/// counts as 0 dB.
pub fn compute_reward<T: Scalar>(
    convention: RewardConvention,
    penalty: T,
    metrics: Option<&PatternMetrics<T>>,
    violation: bool,
) -> T {
    let Some(m) = metrics else {
        return -penalty;
    };
    let base = match convention {
        RewardConvention::Linear => m.directivity_linear / m.msll_linear.unwrap_or(T::one()),
        RewardConvention::Db => match m.msll_db {
            Some(db) if db != T::zero() => m.directivity_db / db,
            _ => m.directivity_db,
        },
    };
    if violation {
        base - penalty
    } else {
        base
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo<T> {
    pub t: T,
    pub wind_speed: T,
    pub wind_direction: T,
    /// `None` for a zero-power pattern.
    pub directivity_db: Option<T>,
    pub msll_db: Option<T>,
    pub penalty_applied: bool,
    pub bound_violations: usize,
    pub collision_pairs: usize,
}

#[derive(Debug, Clone)]
pub struct StepResult<T> {
    pub observation: Vec<T>,
    pub reward: T,
    pub done: bool,
    pub info: StepInfo<T>,
}

/// One simulated episode at a time.
#[derive(Debug, Clone)]
pub struct Environment<T> {
    config: EnvConfig<T>,
    swarm: SwarmState<T>,
    wind: WindModel<T>,
    done: bool,
    initial: Option<PatternMetrics<T>>,
}

impl<T: Scalar> Environment<T> {
    pub fn new(config: EnvConfig<T>) -> Self {
        Self {
            swarm: SwarmState::from_positions(&[], T::one()),
            wind: WindModel::calm(),
            config,
            done: true,
            initial: None,
        }
    }

    pub fn config(&self) -> &EnvConfig<T> {
        &self.config
    }

    pub fn swarm(&self) -> &SwarmState<T> {
        &self.swarm
    }

    pub fn wind(&self) -> &WindModel<T> {
        &self.wind
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn time(&self) -> T {
        T::from_count(self.swarm.timeslot) * self.config.dt
    }

    /// Pattern metrics of the freshly reset swarm.
    pub fn initial_metrics(&self) -> Option<&PatternMetrics<T>> {
        self.initial.as_ref()
    }

    pub fn reset(&mut self, seed: u64) -> Result<Vec<T>> {
        let c = &self.config;
        let swarm = if c.phase_aligned_start {
            self.aligned_start(seed)?
        } else {
            build_swarm(&c.arena, c.n_uavs, seed)?
        };
        self.swarm = swarm;
        self.wind = episode_wind(&c.wind, seed);
        self.done = false;
        self.initial = self.pattern_metrics()?;
        Ok(self.observe())
    }

    fn aligned_start(&self, seed: u64) -> Result<SwarmState<T>> {
        let c = &self.config;
        let mut last = None;
        for k in 0..ALIGN_RETRIES {
            let s = if k == 0 { seed } else { derive_seed(seed, k) };
            let raw = build_swarm(&c.arena, c.n_uavs, s)?;
            let aligned = phase_align(&raw, &c.bs, c.carrier.wavelength)?;
            let clean = check_bounds(&aligned, &c.arena).iter().all(|v| !v)
                && check_collisions(&aligned, c.arena.d_min).is_empty();
            if clean {
                return Ok(aligned);
            }
            last = Some(aligned);
        }
        Ok(last.expect("at least one attempt"))
    }

    pub fn observe(&self) -> Vec<T> {
        let w = wind_observation(&self.wind, &self.swarm, self.time());
        encode_state(&self.swarm, w, &self.config.arena, self.config.v_max)
    }

    fn pattern_metrics(&self) -> Result<Option<PatternMetrics<T>>> {
        let target = steering_direction(&self.swarm, &self.config.bs)?;
        match metrics(&self.swarm, &self.config.carrier, target, self.config.resolution) {
            Ok(m) => Ok(Some(m)),
            Err(Error::ZeroPowerPattern) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Raw policy outputs, mapped through the logistic function.
    pub fn step(&mut self, action: &[T]) -> Result<StepResult<T>> {
        let weights: Vec<T> = action.iter().map(|&a| sigmoid(a)).collect();
        self.step_weights(&weights)
    }

    /// Applies excitation weights directly (clamped to `[0, 1]`).
    pub fn step_weights(&mut self, weights: &[T]) -> Result<StepResult<T>> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        if weights.len() != self.swarm.len() {
            return Err(Error::LengthMismatch { expected: self.swarm.len(), actual: weights.len() });
        }
        self.swarm.set_weights(weights)?;
        let deltas = wind_deltas(&self.wind, &self.swarm, self.time(), self.config.dt)?;
        let timeslot = self.swarm.timeslot + 1;
        self.swarm = apply_displacement(&self.swarm, &deltas)?;
        self.swarm.timeslot = timeslot;
        self.done = timeslot >= self.config.steps;

        let m = self.pattern_metrics()?;
        let violations = check_bounds(&self.swarm, &self.config.arena).iter().filter(|&&v| v).count();
        let collisions = check_collisions(&self.swarm, self.config.arena.d_min).len();
        let penalty_applied = violations > 0 || m.is_none();
        let reward = compute_reward(self.config.reward_convention, self.config.penalty, m.as_ref(), violations > 0);
        let (wind_speed, wind_direction) = wind_observation(&self.wind, &self.swarm, self.time());
        Ok(StepResult {
            observation: self.observe(),
            reward,
            done: self.done,
            info: StepInfo {
                t: self.time(),
                wind_speed,
                wind_direction,
                directivity_db: m.map(|m| m.directivity_db),
                msll_db: m.and_then(|m| m.msll_db),
                penalty_applied,
                bound_violations: violations,
                collision_pairs: collisions,
            },
        })
    }
}

/// A per-step weight chooser that sees only the observation.
pub trait Controller<T> {
    /// Called once before each episode.
    fn begin_episode(&mut self, _episode: usize) {}
    /// Excitation weights in `[0, 1]`.
    fn weights(&mut self, obs: &[T]) -> Result<Vec<T>>;
}

/// Every weight fixed at 1: the no-adaptation baseline.
#[derive(Debug, Clone, Default)]
pub struct UniformController;

impl<T: Scalar> Controller<T> for UniformController {
    fn weights(&mut self, obs: &[T]) -> Result<Vec<T>> {
        Ok(vec![T::one(); (obs.len() - 2) / 4])
    }
}

/// Independent uniform weights each step.
#[derive(Debug, Clone)]
pub struct RandomController {
    rng: ChaCha8Rng,
}

impl RandomController {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl<T: Scalar> Controller<T> for RandomController {
    fn weights(&mut self, obs: &[T]) -> Result<Vec<T>> {
        Ok((0..(obs.len() - 2) / 4).map(|_| T::lit(self.rng.gen::<f64>())).collect())
    }
}

/// One row of the episode trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow<T> {
    pub episode: usize,
    pub step: usize,
    pub wind_type: &'static str,
    pub reward: T,
    pub info: StepInfo<T>,
}

impl<T: Scalar> TraceRow<T> {
    pub fn csv_line(&self) -> String {
        let opt = |v: Option<T>| v.map_or_else(|| "undefined".to_string(), fmt_num);
        let i = &self.info;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.episode,
            self.step,
            fmt_num(i.t),
            self.wind_type,
            fmt_num(i.wind_speed),
            fmt_num(i.wind_direction),
            fmt_num(self.reward),
            opt(i.directivity_db),
            opt(i.msll_db),
            u8::from(i.penalty_applied),
            i.bound_violations,
            i.collision_pairs
        )
    }
}

pub fn trace_csv<T: Scalar>(rows: &[TraceRow<T>]) -> String {
    let mut s = String::with_capacity(rows.len() * 160);
    s.push_str(TRACE_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{}", r.csv_line());
    }
    s
}

/// Runs one full episode under `controller`.
pub fn run_episode<T: Scalar, C: Controller<T> + ?Sized>(
    env: &mut Environment<T>,
    controller: &mut C,
    seed: u64,
    episode: usize,
) -> Result<Vec<TraceRow<T>>> {
    let mut obs = env.reset(seed)?;
    controller.begin_episode(episode);
    let mut rows = Vec::with_capacity(env.config().steps);
    let wind_type = env.wind().kind();
    loop {
        let w = controller.weights(&obs)?;
        let r = env.step_weights(&w)?;
        rows.push(TraceRow { episode, step: env.swarm().timeslot, wind_type, reward: r.reward, info: r.info });
        obs = r.observation;
        if r.done {
            return Ok(rows);
        }
    }
}

/// Evaluates `controller` over `episodes` episodes with seeds derived from
/// `seed`; no learning takes place.
pub fn run_baseline<T: Scalar, C: Controller<T> + ?Sized>(
    config: &EnvConfig<T>,
    controller: &mut C,
    seed: u64,
    episodes: usize,
) -> Result<Vec<TraceRow<T>>> {
    let mut env = Environment::new(config.clone());
    let mut rows = Vec::new();
    for e in 0..episodes {
        rows.extend(run_episode(&mut env, controller, derive_seed(seed, e as u64), e)?);
    }
    Ok(rows)
}
