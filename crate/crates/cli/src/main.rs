use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use swarmbeam_core::config::{ConfigIssue, RunConfig};
use swarmbeam_core::env::{
    derive_seed, run_baseline, trace_csv, Controller, EnvConfig, Environment, RandomController, TraceRow,
    UniformController,
};
use swarmbeam_core::geometry::{read_snapshot, steering_direction, SwarmState, Vec3};
use swarmbeam_core::io::{fmt_num, RunManifest};
use swarmbeam_core::nn::Checkpoint;
use swarmbeam_core::pattern::{metrics, pattern_grid};
use swarmbeam_core::ppo::{Agent, PolicyController, Trainer};
use swarmbeam_core::wind::{wind_deltas, wind_observation};
use swarmbeam_core::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_ACCEPTANCE: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "swarmbeam",
    version,
    about = "UAV-swarm collaborative beamforming under wind: pattern analysis, wind traces, PPO training and evaluation",
    after_help = "Exit status: 0 success, 2 configuration error, 3 runtime error, 4 acceptance check failed.\n\
                  Without --config the built-in 8-UAV constant-wind configuration is used."
)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Replace the configured seed list with this single seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dump the radiation pattern grid and its metrics.
    Pattern {
        /// Uniform half-wavelength z-axis array of N elements instead of a swarm.
        #[arg(long, conflicts_with = "snapshot")]
        ula: Option<usize>,
        /// Swarm snapshot CSV (`index,x,y,z,weight`).
        #[arg(long)]
        snapshot: Option<PathBuf>,
        /// Target direction `THETA,PHI` in degrees (default: toward the base
        /// station, or broadside for --ula).
        #[arg(long, value_parser = parse_direction, allow_hyphen_values = true)]
        target_deg: Option<(f64, f64)>,
    },
    /// Per-UAV cumulative wind displacement over one episode.
    WindTrace,
    /// Train an agent for every configured seed.
    Train,
    /// Run a trained policy deterministically and write episode traces.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Episodes per seed.
        #[arg(long, default_value_t = 1)]
        episodes: usize,
        /// Fail with exit status 4 unless the mean directivity (dB) is at least this.
        #[arg(long, allow_hyphen_values = true)]
        min_directivity_db: Option<f64>,
        /// Fail with exit status 4 unless the mean directivity (dB) is at most this.
        #[arg(long, allow_hyphen_values = true)]
        max_directivity_db: Option<f64>,
    },
    /// Run a non-learning controller and write episode traces.
    Baseline {
        #[arg(long, value_enum, default_value_t = BaselineKind::Uniform)]
        kind: BaselineKind,
        /// Episodes per seed.
        #[arg(long, default_value_t = 1)]
        episodes: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BaselineKind {
    Uniform,
    Random,
}

fn parse_direction(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected THETA,PHI")?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok((p(a)?, p(b)?))
}

#[derive(Debug)]
struct AcceptanceFailure(String);

impl std::fmt::Display for AcceptanceFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for AcceptanceFailure {}

struct Run {
    cfg: RunConfig,
    out: PathBuf,
    quiet: bool,
    manifest: RunManifest,
}

impl Run {
    fn emit(&mut self, rel: &str, contents: &[u8]) -> anyhow::Result<()> {
        self.manifest.emit(&self.out, rel, contents)?;
        Ok(())
    }

    fn progress(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn env_config(&self) -> EnvConfig<f64> {
        EnvConfig::from_run(&self.cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<AcceptanceFailure>().is_some() {
        return EXIT_ACCEPTANCE;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::Config(_)) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn load_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(vec![config_issue("<file>", &format!("{}: {e}", p.display()))]))?;
            RunConfig::from_toml_str(&text)?
        }
        None => RunConfig::paper_default(),
    };
    if let Some(s) = cli.seed {
        cfg.seeds = vec![s];
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.display().to_string();
    }
    let issues = cfg.issues();
    if !issues.is_empty() {
        return Err(Error::Config(issues).into());
    }
    Ok(cfg)
}

fn config_issue(path: &str, message: &str) -> ConfigIssue {
    ConfigIssue { path: path.to_string(), message: message.to_string() }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = load_config(&cli)?;
    let out = PathBuf::from(&cfg.output_dir);
    let name = match &cli.command {
        Command::Pattern { .. } => "pattern",
        Command::WindTrace => "wind-trace",
        Command::Train => "train",
        Command::Eval { .. } => "eval",
        Command::Baseline { .. } => "baseline",
    };
    let manifest = RunManifest::new(name, &cfg.to_toml(), cfg.seeds.clone());
    let mut run = Run { cfg, out, quiet: cli.quiet, manifest };
    let config_text = run.cfg.to_toml();
    run.emit("config.toml", config_text.as_bytes())?;

    let result = match cli.command {
        Command::Pattern { ula, snapshot, target_deg } => cmd_pattern(&mut run, ula, snapshot.as_deref(), target_deg),
        Command::WindTrace => cmd_wind_trace(&mut run),
        Command::Train => cmd_train(&mut run),
        Command::Eval { checkpoint, episodes, min_directivity_db, max_directivity_db } => {
            cmd_eval(&mut run, &checkpoint, episodes, (min_directivity_db, max_directivity_db))
        }
        Command::Baseline { kind, episodes } => cmd_baseline(&mut run, kind, episodes),
    };
    let out = run.out.clone();
    let path = run.manifest.finish(&out)?;
    if !cli.quiet {
        eprintln!("manifest: {}", path.display());
    }
    result
}

fn ula(n: usize, wavelength: f64) -> SwarmState<f64> {
    let offset = (n as f64 - 1.0) / 2.0;
    let positions: Vec<Vec3<f64>> = (0..n).map(|i| Vec3::new(0.0, 0.0, (i as f64 - offset) * wavelength / 2.0)).collect();
    SwarmState::from_positions(&positions, 1.0)
}

fn cmd_pattern(run: &mut Run, ula_n: Option<usize>, snapshot: Option<&Path>, target_deg: Option<(f64, f64)>) -> anyhow::Result<()> {
    let env_cfg = run.env_config();
    let carrier = env_cfg.carrier;
    let swarm = match (ula_n, snapshot) {
        (Some(n), _) => {
            if n == 0 {
                bail!(Error::Config(vec![config_issue("--ula", "must be >= 1")]));
            }
            ula(n, carrier.wavelength)
        }
        (None, Some(p)) => read_snapshot(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        (None, None) => {
            let mut env = Environment::new(env_cfg.clone());
            env.reset(run.cfg.seeds[0])?;
            env.swarm().clone()
        }
    };
    let target = match (target_deg, ula_n) {
        (Some((t, p)), _) => (t.to_radians(), p.to_radians()),
        (None, Some(_)) => (std::f64::consts::FRAC_PI_2, 0.0),
        (None, None) => steering_direction(&swarm, &env_cfg.bs)?,
    };
    let res = env_cfg.resolution;
    run.progress(format!("pattern: {} elements on a {}x{} grid", swarm.len(), res.theta_samples, res.phi_samples));
    let grid = pattern_grid(&swarm, &carrier, res.theta_samples, res.phi_samples)?;
    let m = metrics(&swarm, &carrier, target, res)?;

    let mut csv = String::with_capacity(grid.power.len() * 48);
    csv.push_str("theta_deg,phi_deg,power_db\n");
    for (i, th) in grid.thetas.iter().enumerate() {
        for (j, ph) in grid.phis.iter().enumerate() {
            let p = grid.at(i, j);
            let _ = writeln!(csv, "{},{},{}", fmt_num(th.to_degrees()), fmt_num(ph.to_degrees()), fmt_num(10.0 * p.log10()));
        }
    }
    run.emit("pattern.csv", csv.as_bytes())?;

    let msll = m.msll_db.map_or_else(|| "\"undefined\"".to_string(), fmt_num);
    let summary = format!(
        "directivity_db = {}\nmsll_db = {msll}\npeak_theta_deg = {}\npeak_phi_deg = {}\ndirectivity_linear = {}\ntarget_theta_deg = {}\ntarget_phi_deg = {}\nelements = {}\n",
        fmt_num(m.directivity_db),
        fmt_num(m.peak_direction.0.to_degrees()),
        fmt_num(m.peak_direction.1.to_degrees()),
        fmt_num(m.directivity_linear),
        fmt_num(target.0.to_degrees()),
        fmt_num(target.1.to_degrees()),
        swarm.len()
    );
    run.emit("summary.toml", summary.as_bytes())?;
    run.progress(format!(
        "D = {:.3} dB, MSLL = {}",
        m.directivity_db,
        m.msll_db.map_or("undefined".to_string(), |v| format!("{v:.3} dB"))
    ));
    Ok(())
}

fn cmd_wind_trace(run: &mut Run) -> anyhow::Result<()> {
    let env_cfg = run.env_config();
    let mut csv = String::from("t,uav,dx,dy,dz,V_t,theta_t\n");
    let seed = run.cfg.seeds[0];
    let mut env = Environment::new(env_cfg.clone());
    env.reset(seed)?;
    let wind = *env.wind();
    let mut swarm = env.swarm().clone();
    let mut total = vec![Vec3::<f64>::zero(); swarm.len()];
    for k in 0..env_cfg.steps {
        let t = k as f64 * env_cfg.dt;
        let deltas = wind_deltas(&wind, &swarm, t, env_cfg.dt)?;
        for (acc, d) in total.iter_mut().zip(&deltas) {
            *acc = *acc + *d;
        }
        swarm = swarmbeam_core::geometry::apply_displacement(&swarm, &deltas)?;
        let t1 = (k + 1) as f64 * env_cfg.dt;
        let (v, th) = wind_observation(&wind, &swarm, t1);
        for (i, d) in total.iter().enumerate() {
            let _ = writeln!(csv, "{},{i},{},{},{},{},{}", fmt_num(t1), fmt_num(d.x), fmt_num(d.y), fmt_num(d.z), fmt_num(v), fmt_num(th));
        }
    }
    run.emit("wind_trace.csv", csv.as_bytes())?;
    run.progress(format!("wind-trace: {} steps, {} UAVs, {} wind", env_cfg.steps, swarm.len(), wind.kind()));
    Ok(())
}

fn cmd_train(run: &mut Run) -> anyhow::Result<()> {
    let seeds = run.cfg.seeds.clone();
    for seed in seeds {
        let mut trainer: Trainer<f64> = Trainer::new(&run.cfg, seed);
        let dir = format!("seed-{seed}");
        for it in 0..run.cfg.ppo.max_iterations {
            if let Err(e) = trainer.run_iteration() {
                let dump = format!(
                    "seed = {seed}\niteration = {it}\nepisodes_done = {}\nerror = {:?}\n\n{}",
                    trainer.episodes_done(),
                    e.to_string(),
                    trainer.metrics_csv()
                );
                run.emit(&format!("{dir}/diagnostic.txt"), dump.as_bytes())?;
                return Err(anyhow!(e).context(format!("training seed {seed} aborted at iteration {it}")));
            }
            if !run.quiet && (it + 1) % 10 == 0 {
                if let Some(r) = trainer.metrics.last() {
                    eprintln!(
                        "seed {seed} iteration {} episodes {} mean reward {:.4} D {:.3} dB",
                        it + 1,
                        trainer.episodes_done(),
                        r.summary.mean_reward,
                        r.summary.mean_directivity_db.unwrap_or(f64::NAN)
                    );
                }
            }
        }
        run.emit(&format!("{dir}/metrics.csv"), trainer.metrics_csv().as_bytes())?;
        run.emit(&format!("{dir}/checkpoint_final.toml"), trainer.final_checkpoint().to_text()?.as_bytes())?;
        run.emit(&format!("{dir}/checkpoint_best.toml"), trainer.best_checkpoint().to_text()?.as_bytes())?;
        run.progress(format!("seed {seed}: {} episodes", trainer.episodes_done()));
    }
    Ok(())
}

fn episodes_over_seeds<C: Controller<f64>>(
    env_cfg: &EnvConfig<f64>,
    seeds: &[u64],
    episodes: usize,
    controller: &mut C,
) -> anyhow::Result<Vec<TraceRow<f64>>> {
    let mut rows = Vec::new();
    let mut env = Environment::new(env_cfg.clone());
    let mut index = 0;
    for &seed in seeds {
        for e in 0..episodes {
            rows.extend(swarmbeam_core::env::run_episode(&mut env, controller, derive_seed(seed, e as u64), index)?);
            index += 1;
        }
    }
    Ok(rows)
}

fn trace_summary(rows: &[TraceRow<f64>]) -> (f64, Option<f64>, f64, String) {
    let d: Vec<f64> = rows.iter().filter_map(|r| r.info.directivity_db).collect();
    let m: Vec<f64> = rows.iter().filter_map(|r| r.info.msll_db).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let reward = mean(&rows.iter().map(|r| r.reward).collect::<Vec<_>>());
    let d_mean = mean(&d);
    let m_mean = (!m.is_empty()).then(|| mean(&m));
    let text = format!(
        "steps = {}\nmean_reward = {}\nmean_directivity_db = {}\nmean_msll_db = {}\n",
        rows.len(),
        fmt_num(reward),
        fmt_num(d_mean),
        m_mean.map_or_else(|| "\"undefined\"".to_string(), fmt_num)
    );
    (d_mean, m_mean, reward, text)
}

fn cmd_eval(run: &mut Run, checkpoint: &Path, episodes: usize, band: (Option<f64>, Option<f64>)) -> anyhow::Result<()> {
    let env_cfg = run.env_config();
    let text = std::fs::read_to_string(checkpoint).with_context(|| format!("reading {}", checkpoint.display()))?;
    let ck = Checkpoint::from_text(&text)?;
    let agent: Agent<f64> = Agent::from_checkpoint(&ck, env_cfg.observation_len(), env_cfg.n_uavs, &run.cfg.ppo)?;
    let mut controller = PolicyController::new(agent.policy);
    let rows = episodes_over_seeds(&env_cfg, &run.cfg.seeds.clone(), episodes, &mut controller)?;
    run.emit("eval_trace.csv", trace_csv(&rows).as_bytes())?;
    let (d, _, _, summary) = trace_summary(&rows);
    run.emit("eval_summary.toml", summary.as_bytes())?;
    run.progress(format!("eval: mean D {d:.3} dB over {} steps", rows.len()));
    let (lo, hi) = band;
    if lo.is_some_and(|lo| d < lo) || hi.is_some_and(|hi| d > hi) {
        return Err(AcceptanceFailure(format!(
            "mean directivity {d:.3} dB outside [{}, {}]",
            lo.map_or("-inf".into(), |v| v.to_string()),
            hi.map_or("inf".into(), |v| v.to_string())
        ))
        .into());
    }
    Ok(())
}

fn cmd_baseline(run: &mut Run, kind: BaselineKind, episodes: usize) -> anyhow::Result<()> {
    let env_cfg = run.env_config();
    let seeds = run.cfg.seeds.clone();
    let (name, rows) = match kind {
        BaselineKind::Uniform => ("uniform", episodes_over_seeds(&env_cfg, &seeds, episodes, &mut UniformController)?),
        BaselineKind::Random => {
            let mut rows = Vec::new();
            for &seed in &seeds {
                let mut c = RandomController::new(derive_seed(seed, 77));
                let mut part = run_baseline(&env_cfg, &mut c, seed, episodes)?;
                let offset = rows.len() / env_cfg.steps.max(1);
                part.iter_mut().for_each(|r| r.episode += offset);
                rows.extend(part);
            }
            ("random", rows)
        }
    };
    run.emit(&format!("baseline_{name}.csv"), trace_csv(&rows).as_bytes())?;
    let (d, _, _, summary) = trace_summary(&rows);
    run.emit(&format!("baseline_{name}_summary.toml"), summary.as_bytes())?;
    run.progress(format!("baseline {name}: mean D {d:.3} dB over {} steps", rows.len()));
    Ok(())
}
