//! Paired evaluation runs for the learned agent and the planning baseline.

use crate::metrics::{MetricsRow, RowSink};
use crate::tasks::TaskSpec;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use wbc_agent::params::{NetworkSpec, PolicyParams};
use wbc_agent::Policy;
use wbc_baseline::{execute, plan_to_setpoint, time_parameterize, Config5D, Limits, PlannerParams};
use wbc_core::env::{sample_setup, Env, EnvConfig, EnvError, EpisodeResult, EpisodeSetup};
use wbc_core::trace::write_trace;
use wbc_core::world::WorldModel;

pub enum Method {
    /// Greedy closed-loop policy.
    Agent { spec: NetworkSpec, params: PolicyParams },
    /// Plan, time-parameterize, then execute open loop.
    Baseline(PlannerParams),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Agent { .. } => "agent",
            Method::Baseline(_) => "baseline",
        }
    }
}

/// Seeds for runs `0..n_runs` of `task`. Both methods draw start and goal
/// from these, so they face identical instances.
pub fn run_seeds(task: u32, n_runs: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(task as u64);
    (0..n_runs).map(|_| rng.next_u64()).collect()
}

/// Start configuration and setpoint for one run.
pub fn run_setup(world: &WorldModel, cfg: &EnvConfig, run_seed: u64) -> Result<EpisodeSetup, EnvError> {
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    sample_setup(world, cfg, &mut rng).map(|(setup, _)| setup)
}

fn failure(method: &str, task: u32, seed: u64, planning_time: f64) -> MetricsRow {
    MetricsRow {
        method: method.to_string(),
        task,
        total_time: planning_time,
        base_distance: 0.0,
        joint_distance: 0.0,
        planning_time,
        execution_time: 0.0,
        success: false,
        seed,
    }
}

fn row(method: &str, task: u32, seed: u64, planning_time: f64, res: &EpisodeResult, dt: f64) -> MetricsRow {
    let execution_time = res.steps as f64 * dt;
    MetricsRow {
        method: method.to_string(),
        task,
        total_time: planning_time + execution_time,
        base_distance: res.base_distance,
        joint_distance: res.joint_distance,
        planning_time,
        execution_time,
        success: res.outcome.is_success(),
        seed,
    }
}

#[derive(Clone, Debug)]
pub struct EvalOptions {
    pub threads: usize,
    /// Writes one JSONL trace per run here when set.
    pub trace_dir: Option<PathBuf>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { threads: 1, trace_dir: None }
    }
}

/// File name of the trace written for run `index`.
pub fn trace_file_name(method: &str, task: u32, index: usize) -> String {
    format!("{method}_task{task}_run{index:03}.jsonl")
}

struct Runner<'a> {
    method: &'a Method,
    task: &'a TaskSpec,
    cfg: Arc<EnvConfig>,
    world: Arc<WorldModel>,
}

impl Runner<'_> {
    fn run_one(&self, env: &mut Env, policy: &mut Option<Policy>, run_seed: u64) -> Result<MetricsRow, (f64, String)> {
        let name = self.method.name();
        let dt = self.cfg.robot.control_period;
        let setup = run_setup(&self.world, &self.cfg, run_seed).map_err(|e| (0.0, e.to_string()))?;
        match self.method {
            Method::Agent { .. } => {
                let policy = policy.as_mut().expect("agent runs carry a policy");
                let mut obs = env.reset_with(self.world.clone(), setup, run_seed).map_err(|e| (0.0, e.to_string()))?;
                loop {
                    let out = env.step(policy.act(&obs)).map_err(|e| (0.0, e.to_string()))?;
                    if let Some(res) = out.info.result {
                        return Ok(row(name, self.task.id, run_seed, 0.0, &res, dt));
                    }
                    obs = out.observation;
                }
            }
            Method::Baseline(params) => {
                let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
                rng.set_stream(1);
                let start = Config5D::from_state(&setup.start);
                let plan = plan_to_setpoint(&self.world, &self.cfg.robot, &start, setup.goal, params, &mut rng);
                let plan = match plan {
                    Ok(p) => p,
                    Err(wbc_baseline::PlanError::PlanningFailed { elapsed, .. }) => {
                        return Err((elapsed, "planning failed".into()));
                    }
                    Err(e) => return Err((0.0, e.to_string())),
                };
                let traj = time_parameterize(&plan.path, &Limits::for_robot(&self.cfg.robot));
                env.reset_with(self.world.clone(), setup, run_seed).map_err(|e| (plan.planning_time, e.to_string()))?;
                let res = execute(&traj, env).map_err(|e| (plan.planning_time, e.to_string()))?;
                Ok(row(name, self.task.id, run_seed, plan.planning_time, &res, dt))
            }
        }
    }
}

/// Runs `n_runs` paired instances of `task` on up to `threads` threads.
/// Rows are returned in run order; each is also appended to `sink` as soon
/// as it finishes. Per-run errors become failure rows.
pub fn run_eval(
    method: &Method,
    task: &TaskSpec,
    base_cfg: &EnvConfig,
    n_runs: usize,
    seed: u64,
    threads: usize,
    sink: Option<&Mutex<RowSink>>,
) -> Result<Vec<MetricsRow>, EnvError> {
    let opts = EvalOptions { threads, trace_dir: None };
    run_eval_with(method, task, base_cfg, n_runs, seed, &opts, sink)
}

fn save_trace(env: &mut Env, dir: &Path, name: &str) {
    let records = env.take_trace();
    let res = std::fs::create_dir_all(dir)
        .and_then(|_| std::fs::File::create(dir.join(name)))
        .and_then(|f| write_trace(std::io::BufWriter::new(f), &records));
    if let Err(e) = res {
        log::error!("writing trace {name}: {e}");
    }
}

/// [`run_eval`] with trace recording.
pub fn run_eval_with(
    method: &Method,
    task: &TaskSpec,
    base_cfg: &EnvConfig,
    n_runs: usize,
    seed: u64,
    opts: &EvalOptions,
    sink: Option<&Mutex<RowSink>>,
) -> Result<Vec<MetricsRow>, EnvError> {
    let mut cfg = task.env_config(base_cfg);
    cfg.options.record_trace = opts.trace_dir.is_some();
    let threads = opts.threads;
    let runner = Runner { method, task, cfg: Arc::new(cfg), world: Arc::new(task.world.clone()) };
    let seeds = run_seeds(task.id, n_runs, seed);
    let threads = threads.clamp(1, n_runs.max(1));
    let next = Mutex::new(0usize);
    let results: Mutex<Vec<Option<MetricsRow>>> = Mutex::new(vec![None; n_runs]);
    let worker = || -> Result<(), EnvError> {
        let mut env = Env::with_shared(runner.cfg.clone())?;
        env.set_tolerance(task.tolerance());
        let mut policy = match method {
            Method::Agent { spec, params } => Some(Policy::new(spec, params)),
            Method::Baseline(_) => None,
        };
        loop {
            let i = {
                let mut n = next.lock().expect("lock");
                if *n >= n_runs {
                    return Ok(());
                }
                *n += 1;
                *n - 1
            };
            let r = runner.run_one(&mut env, &mut policy, seeds[i]).unwrap_or_else(|(t, msg)| {
                log::warn!("{} task {} run {i}: {msg}", method.name(), task.id);
                failure(method.name(), task.id, seeds[i], t)
            });
            if let Some(dir) = &opts.trace_dir {
                save_trace(&mut env, dir, &trace_file_name(method.name(), task.id, i));
            }
            if let Some(sink) = sink {
                if let Err(e) = sink.lock().expect("lock").append(&r) {
                    log::error!("writing metrics row: {e}");
                }
            }
            results.lock().expect("lock")[i] = Some(r);
        }
    };
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads).map(|_| s.spawn(&worker)).collect();
        handles.into_iter().try_for_each(|h| h.join().expect("eval worker panicked"))
    })?;
    Ok(results.into_inner().expect("lock").into_iter().map(|r| r.expect("every run finished")).collect())
}
