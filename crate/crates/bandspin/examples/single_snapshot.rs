//! Solve one snapshot end to end: build a scenario, synthesize channels,
//! run the full spin search, and print the winning configuration.
//!
//! ```bash
//! cargo run --release --example single_snapshot
//! ```

use bandspin::prelude::*;

fn main() -> Result<()> {
    let config = paper_default_config(3);
    let scenario = build_scenario(&config, 42)?;
    let channels = ChannelSet::synthesize(&scenario)?;

    let result = solve(&scenario, &channels, &SolveOptions::default())?;

    println!("snapshot with J = {} satellites, K = {} UEs", scenario.sat_count(), scenario.ue_count());
    println!("winning spin: {}  (1 = band 1 is DL)", result.best_spin);
    println!("sum rate:     {:.4} bits/s/Hz", result.f0_value);
    println!();
    println!(" ue | dl sat | p_dl (W) | ul sat | p_ul (W)");
    println!("----+--------+----------+--------+---------");
    for k in 0..scenario.ue_count() {
        let dl = result.best_alloc.dl_serving(k);
        let ul = result.best_alloc.ul_serving(k);
        println!(
            " {k:2} | {:>6} | {:8.4} | {:>6} | {:7.4}",
            dl.map(|j| j.to_string()).unwrap_or_else(|| "-".into()),
            result.best_alloc.p_dl[k],
            ul.map(|j| j.to_string()).unwrap_or_else(|| "-".into()),
            result.best_alloc.p_ul[k],
        );
    }
    println!();
    println!(
        "subproblems: {} solves, {} branch-and-bound nodes total",
        result.stats.solves, result.stats.total_nodes
    );

    // The allocation the solver hands back is feasible by construction.
    let report = check_feasibility(&result.best_alloc, &result.best_spin, &scenario)?;
    assert!(report.feasible);
    Ok(())
}
