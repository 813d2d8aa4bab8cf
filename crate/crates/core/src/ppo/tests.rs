use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::config::{AdvantageMode, RunConfig};
use crate::nn::{grad_check, LstmState, Parameterized};

fn small_config() -> PpoConfig {
    let mut c = RunConfig::paper_default().ppo;
    c.hidden = 5;
    c.value_hidden = 6;
    c.segment_length = 4;
    c.batch_size = 8;
    c
}

/// Synthetic buffer of `chunks` trajectories with consistent stored states.
fn synthetic_buffer(agent: &Agent<f64>, obs_dim: usize, steps: usize, seed: u64) -> RolloutBuffer<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = RolloutBuffer::new();
    let mut state = agent.policy_old.initial_state();
    for k in 0..steps {
        let obs: Vec<f64> = (0..obs_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (mean, next, _) = agent.policy_old.step(&obs, &state).unwrap();
        let action: Vec<f64> = mean.iter().map(|m| m + 0.5 * rng.gen_range(-1.0..1.0)).collect();
        let done = k % 7 == 6;
        buf.push(Transition {
            log_prob_old: gaussian_log_prob(&action, &mean, &agent.policy_old.log_std),
            next_observation: obs.clone(),
            observation: obs,
            action,
            reward: rng.gen_range(-1.0..1.0),
            value_estimate: 0.0,
            advantage: rng.gen_range(-1.0..1.0),
            return_target: rng.gen_range(-1.0..1.0),
            done,
            state: std::mem::replace(&mut state, next),
        });
        if done {
            state = agent.policy_old.initial_state();
        }
    }
    buf
}

#[test]
fn full_policy_gradient_matches_finite_differences() {
    for recurrent in [true, false] {
        let mut cfg = small_config();
        cfg.recurrent = recurrent;
        cfg.hidden = if recurrent { 5 } else { 3 };
        let mut agent = Agent::<f64>::new(6, 2, &cfg, 3);
        let buf = synthetic_buffer(&agent, 6, 10, 1);
        // Perturb the actor so ratios are away from 1 and some samples clip.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        agent.policy.visit_mut("", &mut |_, b| b.iter_mut().for_each(|v| *v += rng.gen_range(-0.05..0.05)));
        let segs = buf.segments(cfg.segment_length);

        let mut gp = agent.policy.zeroed();
        let mut gv = agent.value.zeroed();
        agent.loss_and_grads(&buf, &segs, &mut gp, &mut gv).unwrap();

        let policy_loss = |p: &PolicyNet<f64>| {
            let mut a = agent.clone();
            a.policy = p.clone();
            let (mut g1, mut g2) = (a.policy.zeroed(), a.value.zeroed());
            a.loss_and_grads(&buf, &segs, &mut g1, &mut g2).unwrap().0
        };
        let report = grad_check(&agent.policy, &gp, policy_loss, 1e-5, 1e-4);
        assert!(report.max_rel_error < 1e-4, "recurrent={recurrent}: {report:?}");

        let value_loss = |v: &ValueNet<f64>| {
            let mut a = agent.clone();
            a.value = v.clone();
            let (mut g1, mut g2) = (a.policy.zeroed(), a.value.zeroed());
            a.loss_and_grads(&buf, &segs, &mut g1, &mut g2).unwrap().1
        };
        let report = grad_check(&agent.value, &gv, value_loss, 1e-5, 1e-4);
        assert!(report.max_rel_error < 1e-4, "{report:?}");
    }
}

#[test]
fn first_epoch_ratios_are_one() {
    let agent = Agent::<f64>::new(6, 2, &small_config(), 4);
    let buf = synthetic_buffer(&agent, 6, 20, 5);
    for r in agent.ratios(&buf).unwrap() {
        assert!((r - 1.0).abs() < 1e-12);
    }
}

#[test]
fn dead_zone_gives_exactly_zero_gradient() {
    let mut agent = Agent::<f64>::new(6, 2, &small_config(), 4);
    let mut buf = synthetic_buffer(&agent, 6, 4, 6);
    // Shift the old log-probs so every ratio is e^{±1}, outside 1 ± ε, with
    // the advantage sign that selects the clipped branch.
    for t in &mut buf.transitions {
        let up = t.advantage > 0.0;
        t.log_prob_old += if up { -1.0 } else { 1.0 };
    }
    agent.policy_old = agent.policy.clone();
    let segs = buf.segments(4);
    let mut gp = agent.policy.zeroed();
    let mut gv = agent.value.zeroed();
    let (_, _, _, clipped) = agent.loss_and_grads(&buf, &segs, &mut gp, &mut gv).unwrap();
    assert_eq!(clipped, 4);
    assert!(gp.flatten().iter().all(|&g| g == 0.0));
}

#[test]
fn update_synchronizes_and_clears() {
    let mut agent = Agent::<f64>::new(6, 2, &small_config(), 4);
    let mut buf = synthetic_buffer(&agent, 6, 20, 7);
    let before = agent.policy.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    agent.update(&mut buf, &mut rng).unwrap();
    assert!(buf.is_empty());
    assert_ne!(agent.policy, before);
    let a: Vec<u64> = agent.policy.flatten().iter().map(|v| v.to_bits()).collect();
    let b: Vec<u64> = agent.policy_old.flatten().iter().map(|v| v.to_bits()).collect();
    assert_eq!(a, b);
}

#[test]
fn zero_advantages_leave_policy_unchanged() {
    let mut agent = Agent::<f64>::new(6, 2, &small_config(), 4);
    let mut buf = synthetic_buffer(&agent, 6, 20, 8);
    buf.transitions.iter_mut().for_each(|t| t.advantage = 0.0);
    let before = agent.policy.clone();
    agent.update(&mut buf, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert_eq!(agent.policy, before);
}

#[test]
fn loss_decreases_between_epochs_on_fixed_data() {
    let mut cfg = small_config();
    cfg.update_epochs = 1;
    cfg.batch_size = 40;
    cfg.segment_length = 40;
    cfg.learning_rate = 1e-3;
    let mut agent = Agent::<f64>::new(6, 2, &cfg, 4);
    let buf = synthetic_buffer(&agent, 6, 40, 9);
    let segs = buf.segments(40);
    let total = |a: &Agent<f64>| {
        let (mut g1, mut g2) = (a.policy.zeroed(), a.value.zeroed());
        let (p, v, _, _) = a.loss_and_grads(&buf, &segs, &mut g1, &mut g2).unwrap();
        (p, v)
    };
    let (p0, v0) = total(&agent);
    let mut b = buf.clone();
    agent.update(&mut b, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let (p1, v1) = total(&agent);
    assert!(p1 < p0 && v1 < v0, "{p0} -> {p1}, {v0} -> {v1}");
}

#[test]
fn advantages_match_double_loop_oracle() {
    let cfg = small_config();
    let agent = Agent::<f64>::new(6, 2, &cfg, 10);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let mut buf = synthetic_buffer(&agent, 6, 10, rng.gen());
        buf.close_chunk();
        let gamma = rng.gen_range(0.0..0.999);
        buf.compute_advantages(&agent.value, gamma, AdvantageMode::Direct, 0.0).unwrap();
        for (s, e) in buf.chunks() {
            let tr = &buf.transitions[s..e];
            let last = &tr[tr.len() - 1];
            let boot = if last.done { 0.0 } else { agent.value.value(&last.next_observation).unwrap() };
            let big_t = tr.len() - 1;
            for t in 0..tr.len() {
                let mut a = 0.0;
                for (tp, x) in tr.iter().enumerate().skip(t) {
                    a += gamma.powi((tp - t) as i32) * (x.reward - agent.value.value(&x.observation).unwrap());
                }
                a += gamma.powi((big_t - t + 1) as i32) * boot;
                assert!((tr[t].advantage - a).abs() < 1e-12);
                assert!((tr[t].return_target - (a + tr[t].value_estimate)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn empty_buffer_is_an_error() {
    let mut agent = Agent::<f64>::new(6, 2, &small_config(), 4);
    let mut buf = RolloutBuffer::new();
    assert!(buf.compute_advantages(&agent.value, 0.9, AdvantageMode::Direct, 0.0).is_err());
    assert!(agent.update(&mut buf, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
}

#[test]
fn checkpoint_round_trip_restores_agent() {
    let agent = Agent::<f64>::new(10, 2, &small_config(), 12);
    let text = agent.checkpoint().to_text().unwrap();
    let back = crate::nn::Checkpoint::from_text(&text).unwrap();
    let restored = Agent::<f64>::from_checkpoint(&back, 10, 2, &small_config()).unwrap();
    assert_eq!(restored.policy, agent.policy);
    assert_eq!(restored.value, agent.value);
    assert!(matches!(Agent::<f64>::from_checkpoint(&back, 14, 3, &small_config()), Err(crate::Error::TopologyMismatch(_))));
}

#[test]
fn dense_variant_has_no_lstm_block() {
    let mut cfg = small_config();
    let lstm = Agent::<f64>::new(6, 2, &cfg, 1);
    cfg.recurrent = false;
    let dense = Agent::<f64>::new(6, 2, &cfg, 1);
    let names = |a: &Agent<f64>| {
        let mut n = Vec::new();
        a.policy.visit("policy", &mut |name, _| n.push(name.to_string()));
        n
    };
    assert!(names(&lstm).iter().any(|n| n.starts_with("policy.lstm")));
    assert!(!names(&dense).iter().any(|n| n.contains("lstm")));
    assert_eq!(dense.kind(), "ppo-dense");
    assert_eq!(dense.policy.initial_state(), LstmState::zeros(0));
}

#[test]
fn controller_uses_logistic_of_means() {
    use crate::env::Controller;
    let agent = Agent::<f64>::new(6, 1, &small_config(), 1);
    let mut c = PolicyController::new(agent.policy.clone());
    let obs = vec![0.1; 6];
    let w = c.weights(&obs).unwrap();
    let (m, _, _) = agent.policy.step(&obs, &agent.policy.initial_state()).unwrap();
    assert_eq!(w, vec![crate::scalar::sigmoid(m[0])]);
}
