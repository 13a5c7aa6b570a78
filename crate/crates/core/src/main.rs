//! `rlsvi-lab`: runs one study and writes its CSV, summary and manifest.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use rlsvi_core::harness::{render_optimism_table, run_experiment, write_outputs, Experiment, ExperimentConfig};
use rlsvi_core::Error;
use serde_json::{json, Map, Value};

#[derive(Debug, Parser)]
#[command(name = "rlsvi-lab", version, about = "RLSVI benchmark harness")]
struct Cli {
    /// chain-coherent, chain-agnostic, recommendation, tabular-regret or verify-optimism
    experiment: String,
    /// JSON file of settings; flags given on the command line take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Chain length, product count, or tabular state count
    #[arg(long = "N")]
    n: Option<usize>,
    /// Episode length
    #[arg(long = "H")]
    h: Option<usize>,
    /// Products recommended per episode
    #[arg(long = "J")]
    j: Option<usize>,
    /// Basis functions per period
    #[arg(long = "K")]
    k: Option<usize>,
    /// Actions per state (tabular study)
    #[arg(long = "A")]
    a: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    /// Standard deviation of the preference weights
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    /// Recommendation problem instances
    #[arg(long)]
    instances: Option<usize>,
    /// Repetitions per instance for the bandit baselines
    #[arg(long)]
    bandit_runs: Option<usize>,
    /// Observation noise variance
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Boltzmann temperature; also replaces the recommendation eta grid
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    eta: Option<Vec<f64>>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

impl Cli {
    fn overrides(&self) -> Result<Value, Error> {
        let mut top = Map::new();
        let mut agent = Map::new();
        let mut put = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                top.insert(k.into(), v);
            }
        };
        put("num_states", self.n.map(Value::from));
        put("horizon", self.h.map(Value::from));
        put("recommendations", self.j.map(Value::from));
        put("num_features", self.k.map(Value::from));
        put("num_actions", self.a.map(Value::from));
        put("rho", self.rho.map(Value::from));
        put("scale", self.c.map(Value::from));
        put("episodes", self.episodes.map(Value::from));
        put("runs", self.runs.map(Value::from));
        put("instances", self.instances.map(Value::from));
        put("bandit_runs", self.bandit_runs.map(Value::from));
        put("algorithm", self.algo.clone().map(Value::from));
        put("seed", self.seed.map(Value::from));
        put("out", self.out.as_ref().map(|p| json!(p)));
        put("workers", self.workers.map(Value::from));
        put("eta_grid", self.eta.clone().map(|e| json!(e)));
        if let Some(s2) = self.sigma2 {
            if !(s2 > 0.0 && s2.is_finite()) {
                return Err(Error::Config(format!("sigma2 must be positive, got {s2}")));
            }
            agent.insert("sigma".into(), json!(s2.sqrt()));
        }
        if let Some(l) = self.lambda {
            agent.insert("lambda".into(), json!(l));
        }
        if let Some(e) = self.epsilon {
            agent.insert("epsilon".into(), json!(e));
        }
        if let Some(eta) = self.eta.as_ref().and_then(|e| e.first()) {
            agent.insert("eta".into(), json!(eta));
        }
        if !agent.is_empty() {
            top.insert("agent".into(), Value::Object(agent));
        }
        Ok(Value::Object(top))
    }

    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let experiment: Experiment = self.experiment.parse()?;
        let mut layers = Vec::new();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            layers.push(serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?);
        }
        layers.push(self.overrides()?);
        ExperimentConfig::merged(experiment, &layers)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match cli.resolve() {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("rlsvi-lab: {e}");
            return ExitCode::from(1);
        }
    };
    let out = match run_experiment(&cfg) {
        Ok(out) => out,
        Err(Error::Config(msg)) => {
            eprintln!("rlsvi-lab: configuration error: {msg}");
            return ExitCode::from(1);
        }
        Err(e) => {
            eprintln!("rlsvi-lab: {e}");
            return ExitCode::from(2);
        }
    };
    let path = cfg.out.clone().unwrap_or_else(|| PathBuf::from(format!("results/{}.csv", cfg.experiment)));
    let paths = match write_outputs(&cfg, &out, &path) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("rlsvi-lab: {e}");
            return ExitCode::from(2);
        }
    };
    if !out.optimism.is_empty() {
        print!("{}", render_optimism_table(&out.optimism));
    }
    for (k, v) in &out.metrics {
        println!("{k} = {v:.6}");
    }
    println!("wrote {}", paths.data.display());
    if let Some(s) = paths.summary {
        println!("wrote {}", s.display());
    }
    println!("wrote {}", paths.manifest.display());
    if out.optimism.iter().any(|r| !r.pass) {
        eprintln!("rlsvi-lab: some optimism checks failed");
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
