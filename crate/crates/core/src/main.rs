use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use tmdp::harness::{
    mean, run, tail_means, write_csv, write_snapshots, ConfigFile, ExperimentConfig, RunOutput,
};
use tmdp::verify::{contraction_suite, oracle_suite, VerifyReport};
use tmdp::{Error, Result};

#[derive(Parser)]
#[command(name = "tmdp", version, about = "Threatened MDP simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment over one or more seeds.
    Run(RunArgs),
    /// Run every point of a config file's sweep grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Extra `key=value` overrides applied before expansion.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Check the operator and learning rule against brute-force oracles.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Parser)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    env: Option<String>,
    #[arg(long)]
    agent_a: Option<String>,
    #[arg(long)]
    agent_b: Option<String>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    episodes: Option<u64>,
    /// Comma-separated seeds; `a..b` ranges allowed.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record mixture weights and belief snapshots.
    #[arg(long)]
    snapshots: bool,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Contraction,
    Oracle,
    All,
}

fn apply_overrides(map: &mut BTreeMap<String, String>, set: &[String]) -> Result<()> {
    for kv in set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects key=value, got `{kv}`")))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(())
}

fn read_config(path: &PathBuf) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ConfigFile::parse(&text)
}

/// Mean over seeds of each player's reward over the final 10% of records.
fn summary(cfg: &ExperimentConfig, out: &RunOutput) -> Vec<f64> {
    let tail = (cfg.budget as usize / 10).max(1);
    let players = out.records.first().map_or(0, |r| r.rewards.len());
    (0..players)
        .map(|p| mean(&tail_means(&out.records, p, tail)))
        .collect()
}

fn emit(cfg: &ExperimentConfig, out: &RunOutput) -> Result<()> {
    if let Some(path) = &cfg.out {
        write_csv(&out.records, path)?;
        info!("wrote {} records to {}", out.records.len(), path.display());
    }
    if let Some(path) = &cfg.snapshot_out {
        write_snapshots(&out.snapshots, path)?;
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut map = match &args.config {
        Some(path) => {
            let file = read_config(path)?;
            if !file.sweeps.is_empty() {
                return Err(Error::Config("sweep axes need the `sweep` command".into()));
            }
            file.entries
        }
        None => BTreeMap::new(),
    };
    let flags = [
        ("env", args.env),
        ("agent_a", args.agent_a),
        ("agent_b", args.agent_b),
        ("steps", args.steps.map(|n| n.to_string())),
        ("episodes", args.episodes.map(|n| n.to_string())),
        ("seeds", args.seeds),
        ("out", args.out.map(|p| p.display().to_string())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            if k == "steps" {
                map.remove("episodes");
            } else if k == "episodes" {
                map.remove("steps");
            }
            map.insert(k.to_string(), v);
        }
    }
    if args.snapshots {
        map.insert("snapshots".into(), "true".into());
    }
    apply_overrides(&mut map, &args.set)?;
    let cfg = ExperimentConfig::from_map(&map, &[])?;
    let out = run(&cfg)?;
    emit(&cfg, &out)?;
    let means: Vec<String> = summary(&cfg, &out)
        .iter()
        .map(|m| format!("{m:.4}"))
        .collect();
    println!("final-10% mean reward per player: {}", means.join(" "));
    Ok(())
}

fn cmd_sweep(config: PathBuf, set: Vec<String>) -> Result<()> {
    let mut file = read_config(&config)?;
    apply_overrides(&mut file.entries, &set)?;
    let vars: Vec<String> = file.sweeps.iter().flat_map(|a| a.names.clone()).collect();
    let points = file.expand()?;
    let configs = points
        .iter()
        .map(|p| ExperimentConfig::from_map(p, &vars))
        .collect::<Result<Vec<_>>>()?;
    println!("{}\tdm_mean\tdm_sd", vars.join("\t"));
    for (point, cfg) in points.iter().zip(&configs) {
        let out = run(cfg)?;
        emit(cfg, &out)?;
        let tail = (cfg.budget as usize / 10).max(1);
        let per_seed = tail_means(&out.records, 0, tail);
        let m = mean(&per_seed);
        let sd = if per_seed.len() > 1 {
            let var =
                per_seed.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (per_seed.len() - 1) as f64;
            var.sqrt()
        } else {
            0.0
        };
        let labels: Vec<&str> = vars.iter().map(|v| point[v].as_str()).collect();
        println!("{}\t{m:.2}\t{sd:.2}", labels.join("\t"));
    }
    Ok(())
}

fn cmd_verify(suite: Suite, seed: u64) -> Result<bool> {
    let mut report = VerifyReport::default();
    if matches!(suite, Suite::Contraction | Suite::All) {
        report.contraction = contraction_suite(seed)?;
    }
    if matches!(suite, Suite::Oracle | Suite::All) {
        report.oracle = Some(oracle_suite(seed, 500_000)?);
    }
    report.passed = report.contraction.iter().all(|c| c.passed)
        && report.oracle.as_ref().is_none_or(|o| o.passed);
    let json =
        serde_json::to_string_pretty(&report).map_err(|e| Error::Verification(e.to_string()))?;
    println!("{json}");
    Ok(report.passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TMDP_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args).map(|_| true),
        Command::Sweep { config, set } => cmd_sweep(config, set).map(|_| true),
        Command::Verify { suite, seed } => cmd_verify(suite, seed),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
