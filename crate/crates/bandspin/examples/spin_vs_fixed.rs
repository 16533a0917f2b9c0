//! Paired Monte-Carlo comparison of dynamic band assignment against the
//! conventional fixed-FDD baseline, over random UE drops.
//!
//! Every drop shares its channel realization between both arms, so the
//! per-drop gain is a paired comparison. With two satellites the two arms
//! track each other closely; with four, splitting the constellation across
//! the bands relieves the downlink pile-up and the spin arm pulls ahead.
//!
//! ```bash
//! cargo run --release --example spin_vs_fixed [drops]
//! ```

use bandspin::harness::{export_results, run_experiment, summarize, ExperimentConfig, ExperimentMode};
use bandspin::prelude::*;

fn main() -> Result<()> {
    let drops: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);

    for j in [2usize, 4] {
        let config = ExperimentConfig {
            scenario: paper_default_config(j),
            drops,
            base_seed: 2000,
            modes: vec![ExperimentMode::WithSpin, ExperimentMode::WithoutSpin],
            solve: SolveOptions::default(),
        };
        let result = run_experiment(&config)?;

        let mut gains: Vec<f64> = result
            .drops
            .iter()
            .map(|d| (d.per_mode[0].f0 - d.per_mode[1].f0) / d.per_mode[1].f0)
            .collect();
        gains.sort_by(f64::total_cmp);
        let median = gains[gains.len() / 2];

        println!("J = {j}, {} drops:", result.drops.len());
        for stats in summarize(&result) {
            println!(
                "  {:<12} mean {:.4}  median {:.4}  min {:.4}  max {:.4}  (bits/s/Hz)",
                stats.mode, stats.mean, stats.median, stats.min, stats.max
            );
        }
        println!(
            "  spin gain    median {:+.1}%  best {:+.1}%  worst {:+.1}%",
            100.0 * median,
            100.0 * gains.last().unwrap(),
            100.0 * gains.first().unwrap()
        );

        let dir = std::path::PathBuf::from(format!("spin_vs_fixed_j{j}"));
        export_results(&result, &dir)?;
        println!("  CSVs written to {}/", dir.display());
        println!();
    }
    Ok(())
}
