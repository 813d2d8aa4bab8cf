use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::{PpoSection, RunConfig};
use crate::env::{derive_seed, Controller, EnvConfig, Environment};
use crate::error::{Error, Result};
use crate::io::fmt_num;
use crate::nn::{clip_global_norm, AdamState, Checkpoint, LstmState, Parameterized};
use crate::scalar::{sigmoid, Scalar};

use super::buffer::{RolloutBuffer, Transition};
use super::loss::{clipped_objective, clipped_objective_grad, is_clipped};
use super::nets::{gaussian_log_prob, gaussian_log_prob_grad, PolicyNet, ValueNet};

pub const METRICS_HEADER: &str =
    "iteration,episode,mean_reward,mean_directivity_db,mean_msll_db,policy_loss,value_loss,mean_ratio,clip_fraction";

/// Averages over every minibatch of one optimization phase.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats<T> {
    pub policy_loss: T,
    pub value_loss: T,
    pub mean_ratio: T,
    pub clip_fraction: T,
    /// Optimizer steps taken.
    pub minibatches: usize,
}

/// Actor, frozen actor-old copy, critic and their optimizers.
#[derive(Debug, Clone)]
pub struct Agent<T> {
    pub policy: PolicyNet<T>,
    pub policy_old: PolicyNet<T>,
    pub value: ValueNet<T>,
    policy_opt: AdamState<T>,
    value_opt: AdamState<T>,
    pub config: PpoSection,
}

impl<T: Scalar> Agent<T> {
    pub fn new(obs_dim: usize, n_uavs: usize, config: &PpoSection, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let policy = PolicyNet::new(obs_dim, config.hidden, n_uavs, config.recurrent, T::lit(config.log_std_init), &mut rng);
        let value = ValueNet::new(obs_dim, config.value_hidden, &mut rng);
        Self {
            policy_opt: AdamState::new(config.adam(), &policy),
            value_opt: AdamState::new(config.adam(), &value),
            policy_old: policy.clone(),
            policy,
            value,
            config: config.clone(),
        }
    }

    pub fn kind(&self) -> &'static str {
        if self.policy.is_recurrent() {
            "ppo-la"
        } else {
            "ppo-dense"
        }
    }

    pub fn topology(&self) -> BTreeMap<String, u64> {
        BTreeMap::from([
            ("obs_dim".to_string(), self.policy.obs_dim() as u64),
            ("n_uavs".to_string(), self.policy.n_actions() as u64),
            ("hidden".to_string(), self.config.hidden as u64),
            ("value_hidden".to_string(), self.config.value_hidden as u64),
            ("recurrent".to_string(), u64::from(self.policy.is_recurrent())),
        ])
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new(self.kind(), self.topology());
        ck.add("policy", &self.policy);
        ck.add("value", &self.value);
        ck
    }

    /// Rebuilds an agent from a checkpoint. Topology must match the shape
    /// implied by `obs_dim`, `n_uavs` and `config`.
    pub fn from_checkpoint(ck: &Checkpoint, obs_dim: usize, n_uavs: usize, config: &PpoSection) -> Result<Self> {
        let mut config = config.clone();
        config.recurrent = ck.topology.get("recurrent").copied().unwrap_or(1) == 1;
        if let Some(&h) = ck.topology.get("hidden") {
            config.hidden = h as usize;
        }
        if let Some(&h) = ck.topology.get("value_hidden") {
            config.value_hidden = h as usize;
        }
        let mut agent = Self::new(obs_dim, n_uavs, &config, 0);
        let expected = agent.topology();
        if ck.topology != expected {
            let show = |m: &BTreeMap<String, u64>| m.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ");
            return Err(Error::TopologyMismatch(format!(
                "checkpoint has {}, environment needs {}",
                show(&ck.topology),
                show(&expected)
            )));
        }
        if ck.agent_kind != agent.kind() {
            return Err(Error::TopologyMismatch(format!("agent kind {} vs {}", ck.agent_kind, agent.kind())));
        }
        ck.restore("policy", &mut agent.policy)?;
        ck.restore("value", &mut agent.value)?;
        agent.policy_old = agent.policy.clone();
        Ok(agent)
    }

    /// Probability ratios of the current policy against the stored
    /// log-probabilities, replaying every segment from its stored state.
    pub fn ratios(&self, buffer: &RolloutBuffer<T>) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(buffer.len());
        for (s, e) in buffer.segments(self.config.segment_length) {
            let mut state = buffer.transitions[s].state.clone();
            for tr in &buffer.transitions[s..e] {
                let (mean, next, _) = self.policy.step(&tr.observation, &state)?;
                out.push((gaussian_log_prob(&tr.action, &mean, &self.policy.log_std) - tr.log_prob_old).exp());
                state = next;
            }
        }
        Ok(out)
    }

    /// Clipped-surrogate and value losses on a set of segments, with their
    /// gradients. Returns `(policy_loss, value_loss, ratio_sum, clipped)`.
    pub fn loss_and_grads(
        &self,
        buffer: &RolloutBuffer<T>,
        segments: &[(usize, usize)],
        policy_grads: &mut PolicyNet<T>,
        value_grads: &mut ValueNet<T>,
    ) -> Result<(T, T, T, usize)> {
        let n: usize = segments.iter().map(|(s, e)| e - s).sum();
        let inv_n = T::one() / T::from_count(n.max(1));
        let eps = T::lit(self.config.clip_epsilon);
        let (mut objective, mut vloss, mut ratio_sum, mut clipped) = (T::zero(), T::zero(), T::zero(), 0);
        for &(s, e) in segments {
            let mut state = buffer.transitions[s].state.clone();
            let mut caches = Vec::with_capacity(e - s);
            let mut grad_means = Vec::with_capacity(e - s);
            for tr in &buffer.transitions[s..e] {
                let (mean, next, cache) = self.policy.step(&tr.observation, &state)?;
                state = next;
                let lp = gaussian_log_prob(&tr.action, &mean, &self.policy.log_std);
                let ratio = (lp - tr.log_prob_old).exp();
                if !ratio.is_finite() {
                    return Err(Error::NonFinite { what: "probability ratio", value: ratio.as_f64() });
                }
                let a = tr.advantage;
                objective += clipped_objective(ratio, a, eps);
                ratio_sum += ratio;
                clipped += usize::from(is_clipped(ratio, a, eps));
                let coeff = -clipped_objective_grad(ratio, a, eps) * inv_n;
                let (gm, gs) = gaussian_log_prob_grad(&tr.action, &mean, &self.policy.log_std);
                for (g, d) in policy_grads.log_std.iter_mut().zip(gs) {
                    *g += coeff * d;
                }
                grad_means.push(gm.into_iter().map(|d| coeff * d).collect::<Vec<_>>());
                caches.push(cache);

                let (v, vc) = self.value.forward(&tr.observation)?;
                let diff = v - tr.return_target;
                vloss += diff * diff;
                self.value.backward(&vc, (diff + diff) * inv_n, value_grads)?;
            }
            self.policy.backward_sequence(&caches, &grad_means, policy_grads)?;
        }
        Ok((-objective * inv_n, vloss * inv_n, ratio_sum, clipped))
    }

    /// Multi-epoch minibatch optimization over the buffer, then actor-old
    /// synchronization and buffer clearing.
    pub fn update(&mut self, buffer: &mut RolloutBuffer<T>, rng: &mut ChaCha8Rng) -> Result<UpdateStats<T>> {
        if buffer.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let cfg = &self.config;
        let mut segments = buffer.segments(cfg.segment_length);
        let per_batch = cfg.batch_size.div_ceil(cfg.segment_length).max(1);
        let clip = T::lit(cfg.grad_clip);
        let mut stats = UpdateStats::default();
        let (mut samples, mut clipped_total) = (0usize, 0usize);
        for _ in 0..cfg.update_epochs {
            segments.shuffle(rng);
            for batch in segments.chunks(per_batch) {
                let mut gp = self.policy.zeroed();
                let mut gv = self.value.zeroed();
                let (pl, vl, rsum, clipped) = self.loss_and_grads(buffer, batch, &mut gp, &mut gv)?;
                if !pl.is_finite() || !vl.is_finite() {
                    let value = if pl.is_finite() { vl } else { pl };
                    return Err(Error::NonFinite { what: "loss", value: value.as_f64() });
                }
                if clip > T::zero() {
                    clip_global_norm(&mut gp, clip);
                    clip_global_norm(&mut gv, clip);
                }
                self.policy_opt.step(&mut self.policy, &gp)?;
                self.value_opt.step(&mut self.value, &gv)?;
                stats.policy_loss += pl;
                stats.value_loss += vl;
                stats.mean_ratio += rsum;
                stats.minibatches += 1;
                samples += batch.iter().map(|(s, e)| e - s).sum::<usize>();
                clipped_total += clipped;
            }
        }
        let m = T::from_count(stats.minibatches.max(1));
        stats.policy_loss /= m;
        stats.value_loss /= m;
        stats.mean_ratio /= T::from_count(samples.max(1));
        stats.clip_fraction = T::from_count(clipped_total) / T::from_count(samples.max(1));
        self.policy_old = self.policy.clone();
        buffer.clear();
        Ok(stats)
    }
}

/// Deterministic-mode policy: weights are the logistic of the action means.
#[derive(Debug, Clone)]
pub struct PolicyController<T> {
    policy: PolicyNet<T>,
    state: LstmState<T>,
}

impl<T: Scalar> PolicyController<T> {
    pub fn new(policy: PolicyNet<T>) -> Self {
        let state = policy.initial_state();
        Self { policy, state }
    }
}

impl<T: Scalar> Controller<T> for PolicyController<T> {
    fn begin_episode(&mut self, _episode: usize) {
        self.state = self.policy.initial_state();
    }

    fn weights(&mut self, obs: &[T]) -> Result<Vec<T>> {
        let (mean, next, _) = self.policy.step(obs, &self.state)?;
        self.state = next;
        Ok(mean.into_iter().map(sigmoid).collect())
    }
}

/// Per-episode summary emitted once per finished episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary<T> {
    pub episode: usize,
    pub mean_reward: T,
    pub mean_directivity_db: Option<T>,
    pub mean_msll_db: Option<T>,
}

#[derive(Debug, Clone, Default)]
struct EpisodeAccumulator<T> {
    reward: T,
    steps: usize,
    d_sum: T,
    d_n: usize,
    m_sum: T,
    m_n: usize,
}

impl<T: Scalar> EpisodeAccumulator<T> {
    fn mean(sum: T, n: usize) -> Option<T> {
        (n > 0).then(|| sum / T::from_count(n))
    }
}

#[derive(Debug, Clone)]
struct EnvSlot<T> {
    env: Environment<T>,
    obs: Vec<T>,
    state: LstmState<T>,
    seed_base: u64,
    episodes_started: u64,
    acc: EpisodeAccumulator<T>,
}

/// One metrics CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow<T> {
    pub iteration: usize,
    pub summary: EpisodeSummary<T>,
    pub stats: UpdateStats<T>,
}

impl<T: Scalar> MetricsRow<T> {
    pub fn csv_line(&self) -> String {
        let opt = |v: Option<T>| v.map_or_else(|| "undefined".to_string(), fmt_num);
        let s = &self.summary;
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.iteration,
            s.episode,
            fmt_num(s.mean_reward),
            opt(s.mean_directivity_db),
            opt(s.mean_msll_db),
            fmt_num(self.stats.policy_loss),
            fmt_num(self.stats.value_loss),
            fmt_num(self.stats.mean_ratio),
            fmt_num(self.stats.clip_fraction)
        )
    }
}

pub fn metrics_csv<T: Scalar>(rows: &[MetricsRow<T>]) -> String {
    let mut s = String::from(METRICS_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{}", r.csv_line());
    }
    s
}

/// The outer training loop: collect from `n_pop` environments in fixed
/// order, estimate advantages, optimize, repeat.
#[derive(Debug, Clone)]
pub struct Trainer<T> {
    pub agent: Agent<T>,
    pub buffer: RolloutBuffer<T>,
    slots: Vec<EnvSlot<T>>,
    sample_rng: ChaCha8Rng,
    update_rng: ChaCha8Rng,
    iteration: usize,
    episodes_done: usize,
    pub metrics: Vec<MetricsRow<T>>,
    best: Option<(T, Checkpoint)>,
    /// Summaries finished during collection, awaiting this iteration's stats.
    pending: Vec<EpisodeSummary<T>>,
}

impl<T: Scalar> Trainer<T> {
    pub fn new(run: &RunConfig, seed: u64) -> Self {
        let env_cfg: EnvConfig<T> = EnvConfig::from_run(run);
        let obs_dim = env_cfg.observation_len();
        let agent = Agent::new(obs_dim, env_cfg.n_uavs, &run.ppo, derive_seed(seed, 9));
        let slots = (0..run.ppo.n_pop)
            .map(|k| EnvSlot {
                env: Environment::new(env_cfg.clone()),
                obs: Vec::new(),
                state: agent.policy.initial_state(),
                seed_base: derive_seed(seed, 1000 + k as u64),
                episodes_started: 0,
                acc: EpisodeAccumulator::default(),
            })
            .collect();
        Self {
            agent,
            buffer: RolloutBuffer::new(),
            slots,
            sample_rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, 7)),
            update_rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, 8)),
            iteration: 0,
            episodes_done: 0,
            metrics: Vec::new(),
            best: None,
            pending: Vec::new(),
        }
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn episodes_done(&self) -> usize {
        self.episodes_done
    }

    /// Fills the (empty) buffer with `rollout_length` steps from every
    /// environment, sampling from the actor-old network.
    pub fn collect(&mut self) -> Result<()> {
        debug_assert!(self.buffer.is_empty(), "buffer must be empty before collection");
        self.buffer.clear();
        let policy = &self.agent.policy_old;
        let std: Vec<T> = policy.log_std.iter().map(|s| s.exp()).collect();
        for slot in &mut self.slots {
            for _ in 0..self.agent.config.rollout_length {
                if slot.env.is_done() {
                    let s = derive_seed(slot.seed_base, slot.episodes_started);
                    slot.episodes_started += 1;
                    slot.obs = slot.env.reset(s)?;
                    slot.state = policy.initial_state();
                    slot.acc = EpisodeAccumulator::default();
                }
                let (mean, next_state, _) = policy.step(&slot.obs, &slot.state)?;
                let action: Vec<T> = mean
                    .iter()
                    .zip(&std)
                    .map(|(&m, &s)| {
                        let xi: f64 = StandardNormal.sample(&mut self.sample_rng);
                        m + s * T::lit(xi)
                    })
                    .collect();
                let log_prob_old = gaussian_log_prob(&action, &mean, &policy.log_std);
                let r = slot.env.step(&action)?;

                let acc = &mut slot.acc;
                acc.reward += r.reward;
                acc.steps += 1;
                if let Some(d) = r.info.directivity_db {
                    acc.d_sum += d;
                    acc.d_n += 1;
                }
                if let Some(m) = r.info.msll_db {
                    acc.m_sum += m;
                    acc.m_n += 1;
                }
                let prev_state = std::mem::replace(&mut slot.state, next_state);
                self.buffer.push(Transition {
                    observation: std::mem::replace(&mut slot.obs, r.observation.clone()),
                    action,
                    reward: r.reward,
                    next_observation: r.observation,
                    log_prob_old,
                    value_estimate: T::zero(),
                    advantage: T::zero(),
                    return_target: T::zero(),
                    done: r.done,
                    state: prev_state,
                });
                if r.done {
                    let acc = std::mem::take(&mut slot.acc);
                    self.pending.push(EpisodeSummary {
                        episode: self.episodes_done,
                        mean_reward: acc.reward / T::from_count(acc.steps),
                        mean_directivity_db: EpisodeAccumulator::mean(acc.d_sum, acc.d_n),
                        mean_msll_db: EpisodeAccumulator::mean(acc.m_sum, acc.m_n),
                    });
                    self.episodes_done += 1;
                }
            }
            self.buffer.close_chunk();
        }
        Ok(())
    }

    /// One collect → advantage → update cycle. Returns the rows it added.
    pub fn run_iteration(&mut self) -> Result<&[MetricsRow<T>]> {
        // The best checkpoint is the policy that produced the best episode,
        // i.e. the one acting during this collection.
        let acting = self.agent.checkpoint();
        self.collect()?;
        let cfg = &self.agent.config;
        self.buffer.compute_advantages(&self.agent.value, T::lit(cfg.gamma), cfg.advantage, T::lit(cfg.gae_lambda))?;
        if cfg.normalize_advantages {
            self.buffer.normalize_advantages();
        }
        let stats = self.agent.update(&mut self.buffer, &mut self.update_rng)?;
        let start = self.metrics.len();
        for summary in self.pending.drain(..) {
            if self.best.as_ref().is_none_or(|(b, _)| summary.mean_reward > *b) {
                self.best = Some((summary.mean_reward, acting.clone()));
            }
            self.metrics.push(MetricsRow { iteration: self.iteration, summary, stats });
        }
        self.iteration += 1;
        Ok(&self.metrics[start..])
    }

    pub fn metrics_csv(&self) -> String {
        metrics_csv(&self.metrics)
    }

    pub fn final_checkpoint(&self) -> Checkpoint {
        self.agent.checkpoint()
    }

    /// Checkpoint of the policy behind the best episode mean reward; the
    /// current policy if no episode has finished yet.
    pub fn best_checkpoint(&self) -> Checkpoint {
        self.best.as_ref().map_or_else(|| self.agent.checkpoint(), |(_, c)| c.clone())
    }

    pub fn best_mean_reward(&self) -> Option<T> {
        self.best.as_ref().map(|b| b.0)
    }
}

/// Everything a finished training run produces.
#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub metrics: Vec<MetricsRow<T>>,
    pub final_checkpoint: Checkpoint,
    pub best_checkpoint: Checkpoint,
}

/// Runs `ppo.max_iterations` iterations.
pub fn train<T: Scalar>(run: &RunConfig, seed: u64) -> Result<TrainOutcome<T>> {
    let mut trainer = Trainer::new(run, seed);
    for _ in 0..run.ppo.max_iterations {
        trainer.run_iteration()?;
    }
    Ok(TrainOutcome {
        final_checkpoint: trainer.final_checkpoint(),
        best_checkpoint: trainer.best_checkpoint(),
        metrics: trainer.metrics,
    })
}
