//! `wbc`: train, evaluate, plan, replay and benchmark.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;
use wbc_agent::checkpoint;
use wbc_agent::policy::bench_inference;
use wbc_agent::trainer::{read_log, Trainer, LOG_FILE, STATE_FILE};
use wbc_agent::PolicyParams;
use wbc_cli::config::{RunConfig, CONFIG_KEYS};
use wbc_baseline::{plan_to_setpoint, time_parameterize, Config5D, Limits, PlanFile};
use wbc_core::trace::read_trace;
use wbc_eval::curves::{learning_summary, write_training_plots};
use wbc_eval::metrics::{format_summary, read_rows, write_summary_csv, RowSink};
use wbc_eval::run::{run_seeds, run_setup};
use wbc_eval::{run_eval_with, summarize, EvalOptions, Method, TaskSpec};

/// Smoothing factor for the reward and success curves.
const CURVE_ALPHA: f64 = 0.1;

#[derive(Parser, Debug)]
#[command(name = "wbc", version, about = "Whole-body control of a mobile manipulator in narrow corridors")]
#[command(after_long_help = CONFIG_KEYS)]
struct Cli {
    /// JSON configuration file; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed overriding train.seed and the evaluation seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a policy with PPO and the tolerance curriculum.
    Train(TrainArgs),
    /// Evaluate a checkpoint or the planning baseline on fixed tasks.
    Eval(EvalArgs),
    /// Plan one baseline trajectory and write it as JSON.
    Plan(PlanArgs),
    /// Render a JSONL episode trace to PNG frames.
    Replay(ReplayArgs),
    /// Measure single-threaded policy inference rate.
    BenchInference(BenchArgs),
    /// Print the effective configuration as JSON.
    PrintConfig,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Output directory for the log, checkpoints and plots.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    total_steps: Option<u64>,
    /// Continue from the state saved in --out.
    #[arg(long)]
    resume: bool,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Policy checkpoint, or `baseline` for the planner.
    #[arg(long)]
    checkpoint: String,
    /// Task id 1-4, or `all`.
    #[arg(long, default_value = "all")]
    task: String,
    #[arg(long, default_value_t = 20)]
    runs: usize,
    /// Per-run metrics CSV; rows are appended.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Write one JSONL trace per run into this directory.
    #[arg(long)]
    traces: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PlanArgs {
    /// Task id 1-4.
    #[arg(long)]
    task: String,
    /// Evaluation run index whose start and setpoint are planned for.
    #[arg(long, default_value_t = 0)]
    run: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    /// JSONL trace file.
    trace: PathBuf,
    /// Directory for frame_NNNNN.png images.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Checkpoint to benchmark; freshly initialized weights otherwise.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    iters: usize,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("WBC_LOG_LEVEL", "info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = RunConfig::load(cli.config.as_deref()).map_err(usage)?;
    if let Some(s) = cli.seed {
        cfg.train.seed = s;
    }
    match cli.command {
        Command::Train(a) => train(cfg, a),
        Command::Eval(a) => eval(cfg, a),
        Command::Plan(a) => plan(cfg, a),
        Command::Replay(a) => replay(a),
        Command::BenchInference(a) => bench(cfg, a),
        Command::PrintConfig => {
            println!("{}", serde_json::to_string_pretty(&cfg).map_err(runtime)?);
            Ok(())
        }
    }
}

fn parse_tasks(arg: &str) -> Result<Vec<TaskSpec>, Failure> {
    if arg == "all" {
        return Ok(TaskSpec::all());
    }
    let id: u32 = arg.parse().map_err(|_| usage(format!("unknown task id {arg:?} (expected 1-4 or all)")))?;
    TaskSpec::builtin(id).map(|t| vec![t]).map_err(usage)
}

fn train(mut cfg: RunConfig, a: TrainArgs) -> Result<(), Failure> {
    if let Some(w) = a.workers {
        cfg.train.n_workers = w;
    }
    if let Some(t) = a.total_steps {
        cfg.train.total_steps = t;
    }
    let mut trainer = if a.resume {
        if !a.out.join(STATE_FILE).exists() {
            return Err(usage(format!("nothing to resume in {}", a.out.display())));
        }
        Trainer::resume(&a.out, cfg.env.clone(), a.total_steps).map_err(runtime)?
    } else {
        Trainer::new(cfg.env.clone(), cfg.network.clone(), cfg.train.clone(), cfg.adr.clone()).map_err(runtime)?
    };
    std::fs::create_dir_all(&a.out).map_err(runtime)?;
    std::fs::write(a.out.join("config.json"), serde_json::to_string_pretty(&cfg).map_err(runtime)?).map_err(runtime)?;
    log::info!("training for {} updates into {}", trainer.total_updates(), a.out.display());
    trainer.run(Some(&a.out), |_| true).map_err(runtime)?;

    let log = read_log(&a.out.join(LOG_FILE)).map_err(runtime)?;
    write_training_plots(&log, &a.out, CURVE_ALPHA).map_err(runtime)?;
    if let Some(s) = learning_summary(&log, cfg.adr.window, CURVE_ALPHA, 10) {
        let text = serde_json::to_string_pretty(&s).map_err(runtime)?;
        std::fs::write(a.out.join("summary.json"), &text).map_err(runtime)?;
        println!("{text}");
    }
    Ok(())
}

fn eval(cfg: RunConfig, a: EvalArgs) -> Result<(), Failure> {
    let tasks = parse_tasks(&a.task)?;
    let method = if a.checkpoint == "baseline" {
        Method::Baseline(cfg.planner.clone())
    } else {
        let params = checkpoint::load(Path::new(&a.checkpoint), &cfg.network).map_err(usage)?;
        Method::Agent { spec: cfg.network.clone(), params }
    };
    let sink = Mutex::new(RowSink::open(&a.out).map_err(runtime)?);
    let opts = EvalOptions { threads: a.threads, trace_dir: a.traces.clone() };
    for task in &tasks {
        log::info!("{} on task {} ({} runs)", method.name(), task.id, a.runs);
        run_eval_with(&method, task, &cfg.env, a.runs, cfg.train.seed, &opts, Some(&sink)).map_err(runtime)?;
    }
    drop(sink);
    let summary = summarize(&read_rows(&a.out).map_err(runtime)?);
    let path = a.out.with_extension("summary.csv");
    write_summary_csv(&summary, File::create(&path).map_err(runtime)?).map_err(runtime)?;
    print!("{}", format_summary(&summary));
    Ok(())
}

fn plan(cfg: RunConfig, a: PlanArgs) -> Result<(), Failure> {
    let task = parse_tasks(&a.task)?.into_iter().next().filter(|_| a.task != "all");
    let task = task.ok_or_else(|| usage("plan needs a single task id"))?;
    let env_cfg = task.env_config(&cfg.env);
    let run_seed = run_seeds(task.id, a.run + 1, cfg.train.seed)[a.run];
    let setup = run_setup(&task.world, &env_cfg, run_seed).map_err(runtime)?;
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    rng.set_stream(1);
    let start = Config5D::from_state(&setup.start);
    let res = plan_to_setpoint(&task.world, &env_cfg.robot, &start, setup.goal, &cfg.planner, &mut rng).map_err(runtime)?;
    let trajectory = time_parameterize(&res.path, &Limits::for_robot(&env_cfg.robot));
    log::info!(
        "planned {} waypoints in {:.3} s, trajectory {:.2} s",
        res.path.len(),
        res.planning_time,
        trajectory.duration()
    );
    let file = PlanFile { planning_time: res.planning_time, attempts_used: res.attempts_used, trajectory };
    std::fs::write(&a.out, file.to_json()).map_err(runtime)?;
    Ok(())
}

fn replay(a: ReplayArgs) -> Result<(), Failure> {
    let f = File::open(&a.trace).map_err(|e| usage(format!("{}: {e}", a.trace.display())))?;
    let (records, skipped) = read_trace(BufReader::new(f)).map_err(runtime)?;
    for (line, err) in &skipped {
        log::warn!("{}:{line}: skipped: {err}", a.trace.display());
    }
    std::fs::create_dir_all(&a.out).map_err(runtime)?;
    let frames = wbc_eval::render::render_trace(&records, &a.out).map_err(runtime)?;
    println!("wrote {} frames to {}", frames.len(), a.out.display());
    Ok(())
}

fn bench(cfg: RunConfig, a: BenchArgs) -> Result<(), Failure> {
    if a.iters == 0 {
        return Err(usage("--iters must be positive"));
    }
    let params = match &a.checkpoint {
        Some(p) => checkpoint::load(p, &cfg.network).map_err(usage)?,
        None => PolicyParams::init(&cfg.network, cfg.train.seed),
    };
    let r = bench_inference(&cfg.network, &params, a.iters, cfg.train.seed);
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "{} iterations in {:.3} s: {:.1} Hz, mean {:.1} us, p99 {:.1} us",
        r.iterations, r.seconds, r.hz, r.mean_latency_us, r.p99_latency_us
    )
    .map_err(runtime)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn leaf_keys(prefix: &str, v: &Value, out: &mut Vec<String>) {
        match v {
            Value::Object(m) => {
                for (k, v) in m {
                    let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    // Nested objects inside these are values, not sections.
                    if matches!(k.as_str(), "mount" | "conv1" | "conv2" | "fixed_layout") || !v.is_object() {
                        out.push(p);
                    } else {
                        leaf_keys(&p, v, out);
                    }
                }
            }
            _ => out.push(prefix.to_string()),
        }
    }

    #[test]
    fn help_lists_every_config_key() {
        let v = serde_json::to_value(RunConfig::default()).unwrap();
        let mut keys = Vec::new();
        leaf_keys("", &v, &mut keys);
        assert!(keys.len() > 80);
        let mut missing = Vec::new();
        for k in keys {
            let (section, last) = k.rsplit_once('.').unwrap();
            let section = section.replace("lidar_rear", "lidar_front");
            let found = CONFIG_KEYS.lines().any(|l| {
                let name = l.split("  ").next().unwrap_or("");
                name.starts_with(&format!("{section}.")) && name.split([' ', '/', '.']).any(|w| w == last)
            });
            if !found {
                missing.push(k);
            }
        }
        assert!(missing.is_empty(), "config keys missing from help: {missing:?}");

        let v = serde_json::to_value(RunConfig::default()).unwrap();
        for line in CONFIG_KEYS.lines().filter(|l| l.starts_with(char::is_lowercase)) {
            let first = line.split_whitespace().next().unwrap().trim_end_matches(".*");
            let ptr = format!("/{}", first.replace('.', "/"));
            assert!(v.pointer(&ptr).is_some(), "help names unknown key {first}");
        }
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_json(r#"{"train": {"n_worker": 2}}"#).unwrap_err();
        assert!(err.contains("n_worker"), "{err}");
        let err = RunConfig::from_json(r#"{"trian": {}}"#).unwrap_err();
        assert!(err.contains("trian"), "{err}");
    }

    #[test]
    fn partial_config_keeps_defaults() {
        let cfg = RunConfig::from_json(r#"{"adr": {"window": 50}}"#).unwrap();
        assert_eq!(cfg.adr.window, 50);
        assert_eq!(cfg.train, RunConfig::default().train);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(RunConfig::from_json(r#"{"train": {"n_workers": 0}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"network": {"n_beams": 100}}"#).is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
