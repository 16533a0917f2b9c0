//! End-to-end experiment driver and the command-line interface.
//!
//! An experiment runs a number of Monte-Carlo UE drops on one scenario
//! config. Per drop the channels are synthesized once and shared by every
//! mode, so with-spin versus without-spin comparisons are paired. Results
//! export as diff-able CSV plus a JSON summary; plotting stays external.

use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::channel::ChannelSet;
use crate::coupling::SpinVector;
use crate::error::{Error, Result};
use crate::fp_solver::{solve, solve_with_spins, SolveOptions, SolveResult, SpinTrace};
use crate::scenario::{build_scenario, Scenario, ScenarioConfig};

/// Spin handling of one experiment arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentMode {
    /// Full exhaustive spin search.
    WithSpin,
    /// Conventional fixed FDD: spins pinned to zero.
    WithoutSpin,
}

impl ExperimentMode {
    /// Stable identifier used in CSV columns.
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentMode::WithSpin => "with_spin",
            ExperimentMode::WithoutSpin => "without_spin",
        }
    }
}

/// Monte-Carlo experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Scenario template; drop `d` uses seed `base_seed + d`.
    pub scenario: ScenarioConfig,
    /// Number of UE drops.
    pub drops: usize,
    /// Base RNG seed.
    pub base_seed: u64,
    /// Arms to run per drop.
    pub modes: Vec<ExperimentMode>,
    /// Solver options shared by all drops.
    pub solve: SolveOptions,
}

/// One arm's outcome for one drop.
#[derive(Debug, Clone)]
pub struct ModeOutcome {
    /// Which arm.
    pub mode: ExperimentMode,
    /// Achieved sum rate.
    pub f0: f64,
    /// Winning spin vector.
    pub spin: SpinVector,
    /// Per-spin traces of this solve.
    pub traces: Vec<SpinTrace>,
}

/// Outcome of one drop across all requested modes.
#[derive(Debug, Clone)]
pub struct DropOutcome {
    /// Drop index.
    pub drop_index: usize,
    /// Scenario seed used.
    pub seed: u64,
    /// Outcomes aligned with the config's mode list.
    pub per_mode: Vec<ModeOutcome>,
}

/// Full experiment result.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    /// Successful drops in index order.
    pub drops: Vec<DropOutcome>,
    /// Drops skipped due to errors.
    pub warnings: usize,
    /// Requested drop count.
    pub requested_drops: usize,
    /// Base seed echo.
    pub base_seed: u64,
    /// Mode list echo.
    pub modes: Vec<ExperimentMode>,
    /// Scenario config echo.
    pub scenario: ScenarioConfig,
}

fn run_one_drop(
    config: &ExperimentConfig,
    drop_index: usize,
) -> Result<DropOutcome> {
    let seed = config.base_seed + drop_index as u64;
    let scenario = build_scenario(&config.scenario, seed)?;
    let channels = ChannelSet::synthesize(&scenario)?;
    let mut per_mode = Vec::with_capacity(config.modes.len());
    for mode in &config.modes {
        let result: SolveResult = match mode {
            ExperimentMode::WithSpin => solve(&scenario, &channels, &config.solve)?,
            ExperimentMode::WithoutSpin => solve_with_spins(
                &scenario,
                &channels,
                &[SpinVector::zeros(scenario.sat_count())],
                &config.solve,
            )?,
        };
        per_mode.push(ModeOutcome {
            mode: *mode,
            f0: result.f0_value,
            spin: result.best_spin,
            traces: result.traces,
        });
    }
    Ok(DropOutcome { drop_index, seed, per_mode })
}

/// Run every drop of the experiment. Drops execute independently (and may
/// run in parallel); failed drops are counted and skipped, and the surviving
/// outcomes are ordered by drop index regardless of completion order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    if config.drops == 0 {
        return Err(Error::InvalidConfig("experiment needs at least one drop".into()));
    }
    if config.modes.is_empty() {
        return Err(Error::InvalidConfig("experiment needs at least one mode".into()));
    }
    config.scenario.validate()?;

    let outcomes: Vec<Result<DropOutcome>> = (0..config.drops)
        .into_par_iter()
        .map(|d| run_one_drop(config, d))
        .collect();

    let mut drops = Vec::with_capacity(config.drops);
    let mut warnings = 0usize;
    for outcome in outcomes {
        match outcome {
            Ok(o) => drops.push(o),
            Err(e) => {
                warnings += 1;
                eprintln!("warning: drop skipped: {e}");
            }
        }
    }

    Ok(ExperimentResult {
        drops,
        warnings,
        requested_drops: config.drops,
        base_seed: config.base_seed,
        modes: config.modes.clone(),
        scenario: config.scenario.clone(),
    })
}

/// Summary statistics of one mode's rate sample.
#[derive(Debug, Clone, Serialize)]
pub struct ModeStats {
    /// Mode identifier.
    pub mode: String,
    /// Sample count.
    pub count: usize,
    /// Mean rate.
    pub mean: f64,
    /// Median rate.
    pub median: f64,
    /// Minimum rate.
    pub min: f64,
    /// Maximum rate.
    pub max: f64,
}

fn mode_rates(result: &ExperimentResult, mode: ExperimentMode) -> Vec<f64> {
    result
        .drops
        .iter()
        .flat_map(|d| d.per_mode.iter())
        .filter(|m| m.mode == mode)
        .map(|m| m.f0)
        .collect()
}

/// Median of a sample sorted in place.
fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Compute per-mode statistics in config mode order.
pub fn summarize(result: &ExperimentResult) -> Vec<ModeStats> {
    result
        .modes
        .iter()
        .map(|&mode| {
            let mut rates = mode_rates(result, mode);
            rates.sort_by(f64::total_cmp);
            let count = rates.len();
            let mean = if count > 0 {
                rates.iter().sum::<f64>() / count as f64
            } else {
                f64::NAN
            };
            ModeStats {
                mode: mode.as_str().to_string(),
                count,
                mean,
                median: median(&rates),
                min: rates.first().copied().unwrap_or(f64::NAN),
                max: rates.last().copied().unwrap_or(f64::NAN),
            }
        })
        .collect()
}

#[derive(Serialize)]
struct Summary<'a> {
    version: String,
    timestamp_unix_s: u64,
    scenario: &'a ScenarioConfig,
    drops_requested: usize,
    drops_completed: usize,
    warnings: usize,
    base_seed: u64,
    modes: Vec<&'static str>,
    per_mode: Vec<ModeStats>,
}

/// Write `traces.csv`, `rates.csv`, `cdf.csv`, and `summary.json` into
/// `directory` (created if missing).
///
/// `traces.csv` carries the convergence traces of each drop's spin-search
/// arm when present, otherwise of the first arm. Everything except the
/// timestamp inside `summary.json` is a pure function of the experiment
/// result, so repeated runs produce byte-identical CSV bodies.
pub fn export_results(result: &ExperimentResult, directory: &Path) -> Result<()> {
    std::fs::create_dir_all(directory)?;

    let mut traces = std::io::BufWriter::new(std::fs::File::create(directory.join("traces.csv"))?);
    writeln!(traces, "spin_bits,drop,iteration,f2")?;
    for drop in &result.drops {
        let arm = drop
            .per_mode
            .iter()
            .find(|m| m.mode == ExperimentMode::WithSpin)
            .or_else(|| drop.per_mode.first());
        if let Some(arm) = arm {
            for trace in &arm.traces {
                for (i, rec) in trace.iterations.iter().enumerate() {
                    writeln!(
                        traces,
                        "{},{},{},{}",
                        trace.spin.bits_string(),
                        drop.drop_index,
                        i,
                        rec.f2
                    )?;
                }
            }
        }
    }
    traces.flush()?;

    let mut rates = std::io::BufWriter::new(std::fs::File::create(directory.join("rates.csv"))?);
    writeln!(rates, "drop,mode,f0_bits_per_s_hz")?;
    for drop in &result.drops {
        for m in &drop.per_mode {
            writeln!(rates, "{},{},{}", drop.drop_index, m.mode.as_str(), m.f0)?;
        }
    }
    rates.flush()?;

    let mut cdf = std::io::BufWriter::new(std::fs::File::create(directory.join("cdf.csv"))?);
    writeln!(cdf, "mode,rate,cdf")?;
    for &mode in &result.modes {
        let mut sample = mode_rates(result, mode);
        sample.sort_by(f64::total_cmp);
        let n = sample.len();
        for (i, rate) in sample.iter().enumerate() {
            writeln!(cdf, "{},{},{}", mode.as_str(), rate, (i + 1) as f64 / n as f64)?;
        }
    }
    cdf.flush()?;

    let summary = Summary {
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp_unix_s: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        scenario: &result.scenario,
        drops_requested: result.requested_drops,
        drops_completed: result.drops.len(),
        warnings: result.warnings,
        base_seed: result.base_seed,
        modes: result.modes.iter().map(|m| m.as_str()).collect(),
        per_mode: summarize(result),
    };
    std::fs::write(
        directory.join("summary.json"),
        serde_json::to_string_pretty(&summary).expect("serializable") + "\n",
    )?;
    Ok(())
}

// ---------------------------------------------------------------------------
// CLI
// ---------------------------------------------------------------------------

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CliMode {
    WithSpin,
    WithoutSpin,
    Both,
}

impl CliMode {
    fn modes(&self) -> Vec<ExperimentMode> {
        match self {
            CliMode::WithSpin => vec![ExperimentMode::WithSpin],
            CliMode::WithoutSpin => vec![ExperimentMode::WithoutSpin],
            CliMode::Both => vec![ExperimentMode::WithSpin, ExperimentMode::WithoutSpin],
        }
    }
}

#[derive(Parser)]
#[command(name = "bandspin", version, about = "LEO spectrum sharing with dynamic FDD band assignment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo experiment and export CSV/JSON results.
    Run {
        /// Scenario config file (.toml or .json).
        #[arg(long)]
        config: PathBuf,
        /// Base seed (defaults to the config seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Number of UE drops.
        #[arg(long, default_value_t = 10)]
        drops: usize,
        /// Which arms to run.
        #[arg(long, value_enum, default_value = "both")]
        mode: CliMode,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Subproblem relative gap tolerance.
        #[arg(long)]
        gap_tol: Option<f64>,
        /// Inner-iteration cap.
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Solve a single scenario and print the chosen spins and allocation.
    Solve {
        /// Scenario config file (.toml or .json).
        #[arg(long)]
        config: PathBuf,
        /// Seed (defaults to the config seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Subproblem relative gap tolerance.
        #[arg(long)]
        gap_tol: Option<f64>,
        /// Inner-iteration cap.
        #[arg(long)]
        max_iters: Option<usize>,
        /// Write the per-spin convergence trace CSV here.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Bracket the global optimum of a tiny instance (K <= 2, J <= 2) by
    /// exhaustive search and compare with the solver.
    Oracle {
        /// Scenario config file (.toml or .json).
        #[arg(long)]
        config: PathBuf,
        /// Seed (defaults to the config seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Power grid levels per variable.
        #[arg(long, default_value_t = 16)]
        grid_levels: usize,
    },
    /// Export per-link channel norms and UE-UE gains as JSON.
    DumpChannels {
        /// Scenario config file (.toml or .json).
        #[arg(long)]
        config: PathBuf,
        /// Seed (defaults to the config seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for channels.json; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn apply_solver_flags(opts: &mut SolveOptions, gap_tol: Option<f64>, max_iters: Option<usize>) {
    if let Some(g) = gap_tol {
        opts.subproblem.relative_gap_tol = g;
    }
    if let Some(m) = max_iters {
        opts.max_inner_iterations = m;
    }
}

fn load_scenario(path: &Path, seed: Option<u64>) -> Result<(ScenarioConfig, Scenario)> {
    let config = ScenarioConfig::from_file(path)?;
    let seed = seed.unwrap_or(config.seed);
    let scenario = build_scenario(&config, seed)?;
    Ok((config, scenario))
}

fn cli_run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { config, seed, drops, mode, out, gap_tol, max_iters } => {
            let cfg = ScenarioConfig::from_file(&config)?;
            let base_seed = seed.unwrap_or(cfg.seed);
            let mut solve_opts = SolveOptions::default();
            apply_solver_flags(&mut solve_opts, gap_tol, max_iters);
            let experiment = ExperimentConfig {
                scenario: cfg,
                drops,
                base_seed,
                modes: mode.modes(),
                solve: solve_opts,
            };
            let result = run_experiment(&experiment)?;
            export_results(&result, &out)?;
            for stats in summarize(&result) {
                println!(
                    "{}: n={} mean={:.4} median={:.4} min={:.4} max={:.4}",
                    stats.mode, stats.count, stats.mean, stats.median, stats.min, stats.max
                );
            }
            println!("results written to {}", out.display());
            Ok(())
        }
        Command::Solve { config, seed, gap_tol, max_iters, trace_out } => {
            let (_, scenario) = load_scenario(&config, seed)?;
            let channels = ChannelSet::synthesize(&scenario)?;
            let mut opts = SolveOptions::default();
            apply_solver_flags(&mut opts, gap_tol, max_iters);
            let result = solve(&scenario, &channels, &opts)?;
            println!("spin: {}", result.best_spin);
            println!("f0:   {:.6} bits/s/Hz", result.f0_value);
            for k in 0..scenario.ue_count() {
                let dl = result
                    .best_alloc
                    .dl_serving(k)
                    .map(|j| format!("sat {j} @ {:.4} W", result.best_alloc.p_dl[k]))
                    .unwrap_or_else(|| "-".into());
                let ul = result
                    .best_alloc
                    .ul_serving(k)
                    .map(|j| format!("sat {j} @ {:.4} W", result.best_alloc.p_ul[k]))
                    .unwrap_or_else(|| "-".into());
                println!("ue {k:2}: dl {dl:24} ul {ul}");
            }
            println!(
                "subproblems: {} solves, {} nodes total, {} max/solve",
                result.stats.solves, result.stats.total_nodes, result.stats.max_nodes
            );
            if let Some(path) = trace_out {
                crate::fp_solver::write_trace_csv(&result, &path)?;
                println!("trace written to {}", path.display());
            }
            Ok(())
        }
        Command::Oracle { config, seed, grid_levels } => {
            let (_, scenario) = load_scenario(&config, seed)?;
            let channels = ChannelSet::synthesize(&scenario)?;
            let bracket = crate::oracle::oracle_global_f0(&scenario, &channels, grid_levels)?;
            let result = solve(&scenario, &channels, &SolveOptions::default())?;
            println!("grid lower bound: {:.6} bits/s/Hz", bracket.lower);
            println!("upper bound:      {:.6} bits/s/Hz", bracket.upper);
            println!("solver f0:        {:.6} bits/s/Hz", result.f0_value);
            Ok(())
        }
        Command::DumpChannels { config, seed, out } => {
            let (_, scenario) = load_scenario(&config, seed)?;
            let channels = ChannelSet::synthesize(&scenario)?;
            let json = channel_dump_json(&scenario, &channels);
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir)?;
                    let path = dir.join("channels.json");
                    std::fs::write(&path, json + "\n")?;
                    println!("channels written to {}", path.display());
                }
                None => println!("{json}"),
            }
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct SatUeDump {
    k: usize,
    j: usize,
    band: usize,
    norm: f64,
}

#[derive(Serialize)]
struct UeUeDump {
    k: usize,
    k_other: usize,
    band: usize,
    gain_sq: f64,
}

#[derive(Serialize)]
struct ChannelDump {
    sat_ue: Vec<SatUeDump>,
    ue_ue: Vec<UeUeDump>,
}

/// Channel-dump export: per-(k, j, band) channel norms and per-pair squared
/// UE-UE gains, for debugging and cross-implementation comparison.
pub fn channel_dump_json(scenario: &Scenario, channels: &ChannelSet) -> String {
    let mut dump = ChannelDump { sat_ue: Vec::new(), ue_ue: Vec::new() };
    for k in 0..scenario.ue_count() {
        for j in 0..scenario.sat_count() {
            for band in 0..2 {
                dump.sat_ue.push(SatUeDump {
                    k,
                    j,
                    band,
                    norm: crate::channel::vec_norm(channels.sat_ue(k, j, band)),
                });
            }
        }
    }
    for k in 0..scenario.ue_count() {
        for k2 in (k + 1)..scenario.ue_count() {
            for band in 0..2 {
                let g = channels.ue_ue(k, k2, band);
                dump.ue_ue.push(UeUeDump { k, k_other: k2, band, gain_sq: g * g });
            }
        }
    }
    serde_json::to_string_pretty(&dump).expect("serializable")
}

/// CLI entry point. Exit codes: 0 success, 2 config/usage error, 3 solver
/// failure.
pub fn cli_main(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match cli_run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidConfig(_) | Error::ConfigParse(_) | Error::Io(_) => 2,
                _ => 3,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::paper_default_config;

    fn tiny_experiment(drops: usize) -> ExperimentConfig {
        let mut scenario = paper_default_config(2);
        scenario.ue_count = 3;
        scenario.antenna_count_x = 4;
        scenario.antenna_count_y = 4;
        ExperimentConfig {
            scenario,
            drops,
            base_seed: 100,
            modes: vec![ExperimentMode::WithSpin, ExperimentMode::WithoutSpin],
            solve: SolveOptions::default(),
        }
    }

    #[test]
    fn experiment_pairs_modes_and_dominates() {
        let result = run_experiment(&tiny_experiment(3)).unwrap();
        assert_eq!(result.drops.len(), 3);
        assert_eq!(result.warnings, 0);
        for drop in &result.drops {
            let with = &drop.per_mode[0];
            let without = &drop.per_mode[1];
            assert_eq!(with.mode, ExperimentMode::WithSpin);
            assert!(
                with.f0 >= without.f0 - 1e-9 * without.f0.abs(),
                "drop {}: spin {} < fixed {}",
                drop.drop_index,
                with.f0,
                without.f0
            );
            assert_eq!(without.spin, SpinVector::zeros(2));
        }
    }

    #[test]
    fn export_files_and_shape() {
        let result = run_experiment(&tiny_experiment(2)).unwrap();
        let dir = std::env::temp_dir().join(format!("bandspin-test-{}", std::process::id()));
        export_results(&result, &dir).unwrap();

        let rates = std::fs::read_to_string(dir.join("rates.csv")).unwrap();
        let lines: Vec<&str> = rates.lines().collect();
        assert_eq!(lines[0], "drop,mode,f0_bits_per_s_hz");
        assert_eq!(lines.len(), 1 + 2 * 2, "drops x modes rows");

        let cdf = std::fs::read_to_string(dir.join("cdf.csv")).unwrap();
        let mut last = 0.0f64;
        for line in cdf.lines().skip(1).filter(|l| l.starts_with("with_spin")) {
            let v: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
            assert!(v >= last);
            last = v;
        }
        assert!((last - 1.0).abs() < 1e-12);

        let summary = std::fs::read_to_string(dir.join("summary.json")).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&summary).unwrap();
        assert_eq!(parsed["drops_completed"], 2);
        assert!(parsed["version"].is_string());

        assert!(dir.join("traces.csv").exists());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn reruns_are_byte_identical() {
        let cfg = tiny_experiment(2);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        let dir_a = std::env::temp_dir().join(format!("bandspin-det-a-{}", std::process::id()));
        let dir_b = std::env::temp_dir().join(format!("bandspin-det-b-{}", std::process::id()));
        export_results(&a, &dir_a).unwrap();
        export_results(&b, &dir_b).unwrap();
        for file in ["rates.csv", "traces.csv", "cdf.csv"] {
            let fa = std::fs::read(dir_a.join(file)).unwrap();
            let fb = std::fs::read(dir_b.join(file)).unwrap();
            assert_eq!(fa, fb, "{file} differs between reruns");
        }
        std::fs::remove_dir_all(&dir_a).ok();
        std::fs::remove_dir_all(&dir_b).ok();
    }

    #[test]
    fn channel_dump_contains_all_links() {
        let mut cfg = paper_default_config(2);
        cfg.ue_count = 3;
        cfg.antenna_count_x = 2;
        cfg.antenna_count_y = 2;
        let sc = build_scenario(&cfg, 0).unwrap();
        let ch = ChannelSet::synthesize(&sc).unwrap();
        let json = channel_dump_json(&sc, &ch);
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed["sat_ue"].as_array().unwrap().len(), 3 * 2 * 2);
        assert_eq!(parsed["ue_ue"].as_array().unwrap().len(), 3 * 2);
    }
}
