use proptest::prelude::*;

use swarmbeam_core::config::{RewardConvention, RunConfig, WindSection};
use swarmbeam_core::env::{compute_reward, decode_state, encode_state, EnvConfig, Environment};
use swarmbeam_core::geometry::{
    apply_displacement, build_swarm, check_collisions, steering_direction, ArenaConfig, BaseStation, SwarmState, Vec3,
};
use swarmbeam_core::pattern::{metrics, pattern_grid, CarrierConfig, Resolution};
use swarmbeam_core::wind::{
    constant_displacement, shear_displacement, turbulent_displacement, wind_deltas, ConstantWindParams,
    ShearWindParams, TurbulentWindParams, WindModel,
};

const COARSE: Resolution = Resolution { theta_samples: 61, phi_samples: 121 };

fn carrier() -> CarrierConfig<f64> {
    CarrierConfig::paper_default()
}

/// Small random swarm within a few wavelengths of the origin.
fn swarm_strategy(max_n: usize) -> impl Strategy<Value = SwarmState<f64>> {
    prop::collection::vec(((-0.8..0.8f64), (-0.8..0.8f64), (-0.8..0.8f64), (0.05..1.0f64)), 2..=max_n).prop_map(|v| {
        let pos: Vec<Vec3<f64>> = v.iter().map(|&(x, y, z, _)| Vec3::new(x, y, z)).collect();
        let mut s = SwarmState::from_positions(&pos, 1.0);
        let w: Vec<f64> = v.iter().map(|t| t.3).collect();
        s.set_weights(&w).unwrap();
        s
    })
}

fn target_strategy() -> impl Strategy<Value = (f64, f64)> {
    (0.2..2.9f64, -3.0..3.0f64)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weight_scaling_leaves_metrics_unchanged(s in swarm_strategy(6), target in target_strategy(), c in 0.05..1.0f64) {
        let base = metrics(&s, &carrier(), target, COARSE).unwrap();
        let mut scaled = s.clone();
        let w: Vec<f64> = s.weights().iter().map(|w| w * c).collect();
        scaled.set_weights(&w).unwrap();
        let m = metrics(&scaled, &carrier(), target, COARSE).unwrap();
        prop_assert!(close(base.directivity_db, m.directivity_db, 1e-9));
        match (base.msll_db, m.msll_db) {
            (Some(a), Some(b)) => prop_assert!(close(a, b, 1e-9)),
            (a, b) => prop_assert_eq!(a.is_some(), b.is_some()),
        }
    }

    #[test]
    fn rigid_translation_preserves_every_cell(s in swarm_strategy(6), shift in (-30.0..30.0f64, -30.0..30.0f64, -30.0..30.0f64)) {
        let d = Vec3::new(shift.0, shift.1, shift.2);
        let moved = apply_displacement(&s, &vec![d; s.len()]).unwrap();
        let a = pattern_grid(&s, &carrier(), 31, 61).unwrap();
        let b = pattern_grid(&moved, &carrier(), 31, 61).unwrap();
        let peak = a.max_power();
        for (p, q) in a.power.iter().zip(&b.power) {
            prop_assert!((p - q).abs() <= 1e-9 * peak.max(1.0));
        }
    }

    #[test]
    fn rigid_translation_preserves_metrics(s in swarm_strategy(5), target in target_strategy(), shift in (-20.0..20.0f64, -20.0..20.0f64)) {
        let moved = apply_displacement(&s, &vec![Vec3::new(shift.0, shift.1, 0.0); s.len()]).unwrap();
        let a = metrics(&s, &carrier(), target, COARSE).unwrap();
        let b = metrics(&moved, &carrier(), target, COARSE).unwrap();
        prop_assert!(close(a.directivity_linear, b.directivity_linear, 1e-9));
        if let (Some(x), Some(y)) = (a.msll_linear, b.msll_linear) {
            prop_assert!(close(x, y, 1e-9));
        }
    }

    #[test]
    fn msll_linear_is_a_fraction_of_the_peak(s in swarm_strategy(6), target in target_strategy()) {
        let m = metrics(&s, &carrier(), target, COARSE).unwrap();
        if let Some(l) = m.msll_linear {
            prop_assert!(l > 0.0 && l <= 1.0);
        }
    }

    #[test]
    fn power_integral_positive_for_nonzero_weights(s in swarm_strategy(6)) {
        prop_assert!(pattern_grid(&s, &carrier(), 31, 61).unwrap().power_integral() > 0.0);
    }

    #[test]
    fn constant_and_turbulent_deltas_telescope(
        speed in 0.0..15.0f64, dir in -3.1..3.1f64, sigma in 0.0..3.0f64, omega in 0.0..2.0f64,
        phase in 0.0..6.2f64, dts in prop::collection::vec(0.01..2.0f64, 1..60),
    ) {
        let s = SwarmState::from_positions(&[Vec3::new(1.0, 2.0, 60.0)], 1.0);
        let cp = ConstantWindParams { speed, direction: dir };
        let tp = TurbulentWindParams { mean_speed: speed, intensity: sigma, frequency: omega, phase, direction: dir, reference_speed: 5.0, roughness: 0.1 };
        for (model, closed) in [
            (WindModel::Constant(cp), Box::new(move |t| constant_displacement(&cp, t)) as Box<dyn Fn(f64) -> [f64; 2]>),
            (WindModel::Turbulent(tp), Box::new(move |t| turbulent_displacement(&tp, t))),
        ] {
            let mut t = 0.0;
            let mut sum = Vec3::zero();
            for &dt in &dts {
                let d = wind_deltas(&model, &s, t, dt).unwrap()[0];
                prop_assert_eq!(d.z, 0.0);
                sum = sum + d;
                t += dt;
            }
            let want = closed(t);
            prop_assert!((sum.x - want[0]).abs() <= 1e-9 * t.max(1.0));
            prop_assert!((sum.y - want[1]).abs() <= 1e-9 * t.max(1.0));
        }
    }

    #[test]
    fn shear_deltas_telescope_at_fixed_altitude(
        v0 in 0.0..5.0f64, k in 0.0..0.1f64, z in 50.0..70.0f64, dir in -3.1..3.1f64, steps in 1usize..200, dt in 0.05..1.0f64,
    ) {
        let p = ShearWindParams { ground_speed: v0, gradient: k, direction: dir };
        let s = SwarmState::from_positions(&[Vec3::new(0.0, 0.0, z)], 1.0);
        let mut sum = Vec3::zero();
        for i in 0..steps {
            sum = sum + wind_deltas(&WindModel::Shear(p), &s, i as f64 * dt, dt).unwrap()[0];
        }
        let t = steps as f64 * dt;
        let want = shear_displacement(&p, z, t).unwrap();
        prop_assert!((sum.x - want[0]).abs() <= 1e-9 * t.max(1.0));
        prop_assert!((sum.y - want[1]).abs() <= 1e-9 * t.max(1.0));
    }

    #[test]
    fn quiet_turbulence_is_constant_wind(speed in 0.0..15.0f64, dir in -3.1..3.1f64, omega in 0.0..2.0f64, phase in 0.0..6.2f64, t in 0.0..100.0f64, dt in 0.01..1.0f64) {
        let s = SwarmState::from_positions(&[Vec3::new(0.0, 0.0, 60.0), Vec3::new(3.0, -1.0, 55.0)], 1.0);
        let c = WindModel::Constant(ConstantWindParams { speed, direction: dir });
        let q = WindModel::Turbulent(TurbulentWindParams { mean_speed: speed, intensity: 0.0, frequency: omega, phase, direction: dir, reference_speed: 5.0, roughness: 0.1 });
        let a = wind_deltas(&c, &s, t, dt).unwrap();
        let b = wind_deltas(&q, &s, t, dt).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.x.to_bits(), y.x.to_bits());
            prop_assert_eq!(x.y.to_bits(), y.y.to_bits());
            prop_assert_eq!(x.z.to_bits(), y.z.to_bits());
        }
    }

    #[test]
    fn constant_displacement_is_linear(speed in 0.0..15.0f64, dir in -3.1..3.1f64, t in 0.0..500.0f64) {
        let p = ConstantWindParams { speed, direction: dir };
        let a = constant_displacement(&p, t);
        let b = constant_displacement(&p, 2.0 * t);
        prop_assert_eq!(b[0], 2.0 * a[0]);
        prop_assert_eq!(b[1], 2.0 * a[1]);
    }

    #[test]
    fn displacement_round_trips(seed in any::<u64>(), d in (-10.0..10.0f64, -10.0..10.0f64, -5.0..5.0f64)) {
        let arena = ArenaConfig::<f64>::paper_default();
        let s = build_swarm(&arena, 8, seed).unwrap();
        let fwd = vec![Vec3::new(d.0, d.1, d.2); s.len()];
        let back = vec![Vec3::new(-d.0, -d.1, -d.2); s.len()];
        let r = apply_displacement(&apply_displacement(&s, &fwd).unwrap(), &back).unwrap();
        for (p, q) in s.positions().zip(r.positions()) {
            prop_assert!((p - q).norm() <= 1e-12);
        }
    }

    #[test]
    fn build_swarm_is_reproducible(seed in any::<u64>(), n in 1usize..16) {
        let arena = ArenaConfig::<f64>::paper_default();
        prop_assert_eq!(build_swarm(&arena, n, seed).unwrap(), build_swarm(&arena, n, seed).unwrap());
    }

    #[test]
    fn collisions_match_brute_force(pts in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64), 0..12), d_min in 0.1..3.0f64) {
        let pos: Vec<Vec3<f64>> = pts.iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect();
        let s = SwarmState::from_positions(&pos, 1.0);
        let got = check_collisions(&s, d_min);
        let mut want = Vec::new();
        for i in 0..pos.len() {
            for j in 0..pos.len() {
                if i != j && (pos[i] - pos[j]).norm() < d_min && i < j {
                    want.push((i, j));
                }
            }
        }
        prop_assert_eq!(got, want);
    }

    #[test]
    fn steering_direction_reprojects(seed in any::<u64>(), bs in (-200.0..200.0f64, -200.0..200.0f64, -10.0..10.0f64)) {
        let arena = ArenaConfig::<f64>::paper_default();
        let s = build_swarm(&arena, 8, seed).unwrap();
        let b = BaseStation { position: Vec3::new(bs.0, bs.1, bs.2) };
        let (th, ph) = steering_direction(&s, &b).unwrap();
        prop_assert!((0.0..=std::f64::consts::PI).contains(&th));
        let v = b.position - s.centroid();
        let u = v * (1.0 / v.norm());
        let r = Vec3::from_spherical(th, ph);
        prop_assert!((u - r).norm() <= 1e-12);
    }

    #[test]
    fn observation_round_trips(seed in any::<u64>(), v in 0.0..10.0f64, th in -3.1..3.1f64) {
        let arena = ArenaConfig::<f64>::paper_default();
        let s = build_swarm(&arena, 8, seed).unwrap();
        let obs = encode_state(&s, (v, th), &arena, 10.0);
        prop_assert_eq!(obs.len(), 4 * 8 + 2);
        let (back, (v2, th2)) = decode_state(&obs, &arena, 10.0).unwrap();
        prop_assert!((v - v2).abs() <= 1e-12 && (th - th2).abs() <= 1e-12);
        for (a, b) in s.uavs.iter().zip(&back.uavs) {
            prop_assert!((a.position - b.position).norm() <= 1e-12);
            prop_assert_eq!(a.weight, b.weight);
        }
    }

    #[test]
    fn linear_reward_is_scale_invariant(s in swarm_strategy(6), target in target_strategy(), c in 0.1..1.0f64) {
        let m = metrics(&s, &carrier(), target, COARSE).unwrap();
        let mut scaled = s.clone();
        let w: Vec<f64> = s.weights().iter().map(|w| w * c).collect();
        scaled.set_weights(&w).unwrap();
        let n = metrics(&scaled, &carrier(), target, COARSE).unwrap();
        let a = compute_reward(RewardConvention::Linear, 10.0, Some(&m), false);
        let b = compute_reward(RewardConvention::Linear, 10.0, Some(&n), false);
        prop_assert!(close(a, b, 1e-9));
    }

    #[test]
    fn violation_costs_exactly_the_penalty(s in swarm_strategy(6), target in target_strategy(), p0 in 0.0..100.0f64, db in any::<bool>()) {
        let m = metrics(&s, &carrier(), target, COARSE).unwrap();
        let conv = if db { RewardConvention::Db } else { RewardConvention::Linear };
        let free = compute_reward(conv, p0, Some(&m), false);
        let hit = compute_reward(conv, p0, Some(&m), true);
        prop_assert_eq!(hit, free - p0);
    }
}

fn small_env(wind: WindSection) -> EnvConfig<f64> {
    let mut run = RunConfig::paper_default();
    run.env.horizon = 5.0;
    run.wind = wind;
    let mut c = EnvConfig::from_run(&run);
    c.resolution = COARSE;
    c
}

#[test]
fn episode_length_is_horizon_over_dt() {
    let c = EnvConfig::<f64>::from_run(&RunConfig::paper_default());
    assert_eq!(c.steps, 200);
    let mut env = Environment::new(small_env(WindSection::Constant { speed: 2.0, direction: 0.0 }));
    env.reset(3).unwrap();
    let mut n = 0;
    while !env.is_done() {
        env.step_weights(&[1.0; 8]).unwrap();
        n += 1;
    }
    assert_eq!(n, 10);
    assert!(env.step_weights(&[1.0; 8]).is_err());
}

#[test]
fn calm_wind_gives_constant_rewards() {
    let mut env = Environment::new(small_env(WindSection::Constant { speed: 0.0, direction: 0.0 }));
    env.reset(11).unwrap();
    let w = [0.3, 0.9, 1.0, 0.5, 0.7, 0.2, 0.8, 0.6];
    let first = env.step_weights(&w).unwrap().reward;
    while !env.is_done() {
        let r = env.step_weights(&w).unwrap().reward;
        assert!((r - first).abs() <= 1e-12);
    }
}

#[test]
fn step_is_deterministic() {
    let cfg = small_env(WindSection::Turbulent {
        mean_speed: 3.0,
        intensity: 1.0,
        frequency: 0.5,
        phase: None,
        direction: None,
        reference_speed: 5.0,
        roughness: 0.1,
    });
    let run = |seed| {
        let mut env = Environment::new(cfg.clone());
        let mut out = vec![env.reset(seed).unwrap()];
        let mut k = 0.0;
        while !env.is_done() {
            k += 0.37;
            let a: Vec<f64> = (0..8).map(|i| (k * i as f64).sin()).collect();
            let r = env.step(&a).unwrap();
            out.push(r.observation);
            out.push(vec![r.reward]);
        }
        out
    };
    let a = run(42);
    assert_eq!(a, run(42));
    assert_ne!(a, run(43));
}
