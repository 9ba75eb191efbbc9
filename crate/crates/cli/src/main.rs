//! Experiment runner: single scenario runs, parameter sweeps over the
//! distillation overhead or the node count, and steady-state rate LP
//! analyses. All outputs are CSV and are byte-identical across repeat
//! invocations of the same inputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use bellswap::ids::{NodeId, PairKey};
use bellswap::lp::{
    build_objective_model, export_lp_text, solve_lexicographic, solve_objective, LexPhase1,
    LpStatus, RateMode, RateObjective, RateProblem, RateSolution,
};
use bellswap::sim::{
    self, metrics_csv_header, metrics_csv_row, ScenarioConfig, SimError, TopologySpec,
};

#[derive(Parser)]
#[command(
    name = "bellswap",
    version,
    about = "Path-oblivious Bell-pair distribution experiments"
)]
struct Cli {
    /// Override the scenario seed (run), the seed list (sweep), or the
    /// grid topology seed (lp).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one scenario config and print its metrics as a CSV row
    Run {
        /// Scenario config (JSON)
        #[arg(long)]
        config: PathBuf,
    },
    /// Execute a parameter sweep and write runs plus per-point aggregates
    Sweep {
        /// Sweep spec (JSON)
        #[arg(long)]
        spec: PathBuf,
        /// Output CSV path (written atomically)
        #[arg(long)]
        out: PathBuf,
    },
    /// Build and solve the steady-state rate program
    Lp {
        /// LP config (JSON)
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        objective: ObjectiveArg,
        /// Also write the model as LP-format text
        #[arg(long)]
        export: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ObjectiveArg {
    /// Maximize total consumption
    MaxC,
    /// Maximize the demand scaling factor
    MaxAlpha,
    /// Minimize total generation under fixed demand
    MinG,
    /// Minimize the maximum generation rate under fixed demand
    MinMaxG,
    /// Maximize consumption, then minimize generation sustaining it
    Lex,
}

/// Failures mapped to exit codes: 2 config, 3 incomplete run, 4 I/O.
enum CliError {
    Config(String),
    Incomplete,
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Incomplete => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<SimError> for CliError {
    fn from(err: SimError) -> Self {
        // Keep the inner message; main() adds the "config error" prefix.
        match err {
            SimError::Config(msg) | SimError::Parse(msg) => CliError::Config(msg),
            other => CliError::Config(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => cmd_run(&config, cli.seed),
        Command::Sweep { spec, out } => cmd_sweep(&spec, &out, cli.seed),
        Command::Lp {
            config,
            objective,
            export,
        } => cmd_lp(&config, objective, export.as_deref(), cli.seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            match &err {
                CliError::Config(msg) => eprintln!("config error: {msg}"),
                CliError::Incomplete => eprintln!("run incomplete: tick budget exhausted"),
                CliError::Io(msg) => eprintln!("i/o error: {msg}"),
            }
            ExitCode::from(err.exit_code())
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Writes via a sibling temp file plus rename, so readers never observe
/// a half-written CSV.
fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    std::fs::write(&tmp, contents).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)?;
    Ok(())
}

fn cmd_run(config_path: &Path, seed_override: Option<u64>) -> Result<(), CliError> {
    let json = read_file(config_path)?;
    let mut config = ScenarioConfig::from_json_str(&json).map_err(CliError::from)?;
    if let Some(seed) = seed_override {
        config.seed = seed;
    }
    let metrics = sim::run(&config)?;
    println!("{}", metrics_csv_header());
    println!("{}", metrics_csv_row(&config, &metrics));
    if !metrics.completed {
        return Err(CliError::Incomplete);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SweepAxis {
    Distill,
    Nodes,
}

impl SweepAxis {
    fn name(self) -> &'static str {
        match self {
            SweepAxis::Distill => "distill",
            SweepAxis::Nodes => "nodes",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSpec {
    base: ScenarioConfig,
    axis: SweepAxis,
    values: Vec<u64>,
    seeds: Vec<u64>,
}

impl SweepSpec {
    fn validate(&self) -> Result<(), CliError> {
        if self.values.is_empty() {
            return Err(CliError::Config("values: must be non-empty".into()));
        }
        if !self.values.windows(2).all(|w| w[0] < w[1]) {
            return Err(CliError::Config(
                "values: must be strictly increasing".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(CliError::Config(
                "seeds: must list at least one seed".into(),
            ));
        }
        Ok(())
    }
}

/// Applies one sweep point to the base config. The per-point seed
/// replaces both the scenario seed and, for grid topologies, the
/// topology seed.
fn scenario_at(
    base: &ScenarioConfig,
    axis: SweepAxis,
    value: u64,
    seed: u64,
) -> Result<ScenarioConfig, CliError> {
    let mut config = base.clone();
    config.seed = seed;
    if let TopologySpec::Grid { side, .. } = config.topology {
        config.topology = TopologySpec::Grid { side, seed };
    }
    match axis {
        SweepAxis::Distill => {
            config.costs = config
                .costs
                .with_distill_default(value)
                .map_err(|e| CliError::Config(format!("values: {e}")))?;
        }
        SweepAxis::Nodes => {
            config.topology = match config.topology {
                TopologySpec::Cycle { .. } => TopologySpec::Cycle {
                    nodes: value as usize,
                },
                TopologySpec::Grid { .. } => {
                    let side = (value as f64).sqrt().round() as usize;
                    if side * side != value as usize {
                        return Err(CliError::Config(format!(
                            "values: {value} is not a perfect square, so it cannot size a grid"
                        )));
                    }
                    TopologySpec::Grid { side, seed }
                }
                TopologySpec::Edges { .. } => {
                    return Err(CliError::Config(
                        "axis: nodes sweeps need a cycle or grid topology".into(),
                    ))
                }
            };
        }
    }
    Ok(config)
}

const SWEEP_HEADER: &str = "kind,axis,axis_value,topology,nodes,distill,seed,mode,requests,\
satisfied,swaps,denominator,overhead,ticks,residual_pairs,overhead_mean,overhead_stddev";

fn cmd_sweep(
    spec_path: &Path,
    out_path: &Path,
    seed_override: Option<u64>,
) -> Result<(), CliError> {
    let json = read_file(spec_path)?;
    let mut spec: SweepSpec =
        serde_json::from_str(&json).map_err(|e| CliError::Config(e.to_string()))?;
    spec.base
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(seed) = seed_override {
        spec.seeds = vec![seed];
    }
    spec.validate()?;

    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    let mut all_complete = true;
    for &value in &spec.values {
        let mut overheads: Vec<f64> = Vec::new();
        let mut point_rows = String::new();
        for &seed in &spec.seeds {
            let config = scenario_at(&spec.base, spec.axis, value, seed)?;
            let metrics = sim::run(&config)?;
            all_complete &= metrics.completed;
            if let Some(overhead) = metrics.swap_overhead {
                overheads.push(overhead);
            }
            let _ = writeln!(
                point_rows,
                "run,{},{},{},,",
                spec.axis.name(),
                value,
                metrics_csv_row(&config, &metrics)
            );
        }
        out.push_str(&point_rows);
        let (mean, stddev) = mean_stddev(&overheads);
        let _ = writeln!(
            out,
            "aggregate,{},{},,,,,,,,,,,,,{},{}",
            spec.axis.name(),
            value,
            fmt_stat(mean),
            fmt_stat(stddev),
        );
    }
    write_atomic(out_path, &out)?;
    if !all_complete {
        return Err(CliError::Incomplete);
    }
    Ok(())
}

/// Mean and sample standard deviation; absent when undefined.
fn mean_stddev(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (Some(mean), None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some(var.sqrt()))
}

fn fmt_stat(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v}"),
        None => "NA".to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum GenerationMode {
    #[default]
    Fixed,
    Variable,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LpConfig {
    topology: TopologySpec,
    #[serde(default)]
    demand: Vec<(usize, usize, f64)>,
    #[serde(default)]
    costs: bellswap::inventory::CostTable,
    /// Generation mode for the consumption-maximizing objectives;
    /// the generation-minimizing ones always treat it as variable.
    #[serde(default)]
    generation: GenerationMode,
}

fn cmd_lp(
    config_path: &Path,
    objective: ObjectiveArg,
    export: Option<&Path>,
    seed_override: Option<u64>,
) -> Result<(), CliError> {
    let json = read_file(config_path)?;
    let config: LpConfig =
        serde_json::from_str(&json).map_err(|e| CliError::Config(e.to_string()))?;
    let mut topology = config.topology;
    if let (Some(seed), TopologySpec::Grid { side, .. }) = (seed_override, &topology) {
        topology = TopologySpec::Grid { side: *side, seed };
    }
    let graph = topology
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut demand: BTreeMap<PairKey, f64> = BTreeMap::new();
    for &(a, b, kappa) in &config.demand {
        let pair = PairKey::new(NodeId(a), NodeId(b))
            .map_err(|e| CliError::Config(format!("demand: {e}")))?;
        if demand.insert(pair, kappa).is_some() {
            return Err(CliError::Config(format!(
                "demand: pair {pair} listed more than once"
            )));
        }
    }
    let base = RateProblem::new(graph, demand, config.costs)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let gen_mode = match config.generation {
        GenerationMode::Fixed => RateMode::Fixed,
        GenerationMode::Variable => RateMode::Variable,
    };

    let lp_err = |e: bellswap::lp::LpError| CliError::Config(e.to_string());
    let mut out = String::from("phase,kind,name,value\n");
    match objective {
        ObjectiveArg::MaxC | ObjectiveArg::MaxAlpha => {
            let prob = base
                .with_generation(gen_mode)
                .with_consumption(RateMode::Variable);
            let rate_objective = match objective {
                ObjectiveArg::MaxC => RateObjective::MaxTotalConsumption,
                _ => RateObjective::MaxAlpha,
            };
            if let Some(path) = export {
                let bm = build_objective_model(&prob, rate_objective).map_err(lp_err)?;
                write_atomic(path, &export_lp_text(&bm.model))?;
            }
            let sol = solve_objective(&prob, rate_objective).map_err(lp_err)?;
            push_solution_block(&mut out, 1, &sol);
        }
        ObjectiveArg::MinG | ObjectiveArg::MinMaxG => {
            let prob = base
                .with_generation(RateMode::Variable)
                .with_consumption(RateMode::Fixed);
            let rate_objective = match objective {
                ObjectiveArg::MinG => RateObjective::MinTotalGeneration,
                _ => RateObjective::MinMaxGeneration,
            };
            if let Some(path) = export {
                let bm = build_objective_model(&prob, rate_objective).map_err(lp_err)?;
                write_atomic(path, &export_lp_text(&bm.model))?;
            }
            let sol = solve_objective(&prob, rate_objective).map_err(lp_err)?;
            push_solution_block(&mut out, 1, &sol);
        }
        ObjectiveArg::Lex => {
            let prob = base
                .with_generation(RateMode::Variable)
                .with_consumption(RateMode::Variable);
            if let Some(path) = export {
                let bm = build_objective_model(&prob, RateObjective::MaxTotalConsumption)
                    .map_err(lp_err)?;
                write_atomic(path, &export_lp_text(&bm.model))?;
            }
            let (phase1, phase2) =
                solve_lexicographic(&prob, LexPhase1::MaxTotalConsumption).map_err(lp_err)?;
            push_solution_block(&mut out, 1, &phase1);
            push_solution_block(&mut out, 2, &phase2);
        }
    }
    print!("{out}");
    Ok(())
}

/// One labeled block of solution rows: status, objective, then every
/// solved rate. Infeasibility is a reported answer, not an error.
fn push_solution_block(out: &mut String, phase: usize, sol: &RateSolution) {
    let _ = writeln!(out, "{phase},status,,{}", sol.status);
    let objective = if sol.status == LpStatus::Optimal {
        format!("{}", sol.objective)
    } else {
        "NA".to_string()
    };
    let _ = writeln!(out, "{phase},objective,,{objective}");
    if sol.status != LpStatus::Optimal {
        return;
    }
    if let Some(alpha) = sol.alpha {
        let _ = writeln!(out, "{phase},var,alpha,{alpha}");
    }
    for (pair, value) in &sol.consumption {
        let _ = writeln!(out, "{phase},var,c_{}_{},{value}", pair.lo(), pair.hi());
    }
    for (pair, value) in &sol.generation {
        let _ = writeln!(out, "{phase},var,g_{}_{},{value}", pair.lo(), pair.hi());
    }
    for ((swapper, pair), value) in &sol.sigma {
        let _ = writeln!(
            out,
            "{phase},var,sigma_{}_{}_{},{value}",
            swapper,
            pair.lo(),
            pair.hi()
        );
    }
}
