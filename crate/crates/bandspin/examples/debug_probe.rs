// Temporary calibration probe: 50-drop validation at candidate noise floors.
use bandspin::harness::{run_experiment, ExperimentConfig, ExperimentMode};
use bandspin::prelude::*;

fn pctl(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() as f64 - 1.0) * q).round() as usize;
    sorted[idx]
}

fn main() {
    let drops = 50usize;
    for noise in [5e-13, 6.5e-13] {
        for j in [2usize, 4] {
            let mut scenario = paper_default_config(j);
            scenario.noise_variance_w = Some(noise);
            let config = ExperimentConfig {
                scenario,
                drops,
                base_seed: 0,
                modes: vec![ExperimentMode::WithSpin, ExperimentMode::WithoutSpin],
                solve: SolveOptions::default(),
            };
            let started = std::time::Instant::now();
            let result = run_experiment(&config).unwrap();
            let mut gains: Vec<f64> = result
                .drops
                .iter()
                .map(|d| {
                    let with = d.per_mode[0].f0;
                    let without = d.per_mode[1].f0;
                    (with - without) / without
                })
                .collect();
            gains.sort_by(f64::total_cmp);
            println!(
                "noise {noise:.2e} J={j}: median {:+.2}% p75 {:+.2}% p90 {:+.2}% max {:+.2}% min {:+.2}% | {:.0}s",
                100.0 * pctl(&gains, 0.5),
                100.0 * pctl(&gains, 0.75),
                100.0 * pctl(&gains, 0.9),
                100.0 * gains.last().unwrap(),
                100.0 * gains.first().unwrap(),
                started.elapsed().as_secs_f64()
            );
        }
    }
}
