//! Multi-satellite LEO spectrum sharing with dynamic FDD band assignment.
//!
//! A group of LEO satellites serves ground terminals on two shared frequency
//! bands. Each satellite picks which band carries its downlink and which its
//! uplink (its *spin*), and the library jointly optimizes that choice
//! together with user association and transmit powers to maximize the sum
//! spectral efficiency of one snapshot.
//!
//! The solver chain:
//!
//! - [`scenario`] builds deterministic single-snapshot scenarios from a
//!   declarative config and a seed.
//! - [`channel`] synthesizes pure-LOS satellite and terminal channels and
//!   the matched-filter beamformers.
//! - [`coupling`] applies the spin structure and precomputes every squared
//!   gain the objectives read.
//! - [`objective`] evaluates the objective chain f0-f3 and checks
//!   feasibility.
//! - [`fp_solver`] runs the alternating algorithm: closed-form auxiliary
//!   updates plus an exact joint association/power subproblem per iteration,
//!   wrapped in an exhaustive spin search.
//! - [`miqcqp`] solves that subproblem to global optimality with branch and
//!   bound over an interior-point relaxation.
//! - [`oracle`] holds independent brute-force references used only by tests.
//! - [`harness`] drives Monte-Carlo experiments and the CLI.
//!
//! # Example
//!
//! ```
//! use bandspin::prelude::*;
//!
//! let mut config = paper_default_config(2);
//! config.ue_count = 3;
//! config.antenna_count_x = 4;
//! config.antenna_count_y = 4;
//! let scenario = build_scenario(&config, 7).unwrap();
//! let channels = ChannelSet::synthesize(&scenario).unwrap();
//! let result = solve(&scenario, &channels, &SolveOptions::default()).unwrap();
//! assert!(result.f0_value > 0.0);
//! println!("spin {} rate {:.3} bits/s/Hz", result.best_spin, result.f0_value);
//! ```

pub mod channel;
pub mod coupling;
pub mod error;
pub mod fp_solver;
pub mod harness;
pub mod miqcqp;
pub mod objective;
pub mod oracle;
pub mod scenario;

/// Common imports for downstream code and the examples.
pub mod prelude {
    pub use crate::channel::ChannelSet;
    pub use crate::coupling::{precompute_gains, GainTables, SpinVector};
    pub use crate::error::{Error, Result};
    pub use crate::fp_solver::{
        big_m_value, initialize_alloc, inner_loop, solve, solve_with_spins, SolveOptions,
        SolveResult,
    };
    pub use crate::harness::{run_experiment, ExperimentConfig, ExperimentMode};
    pub use crate::objective::{
        check_feasibility, eval_f0, eval_f1, eval_f2, eval_f3, Allocation, AuxState,
    };
    pub use crate::scenario::{
        build_scenario, geometry_of, paper_default_config, Scenario, ScenarioConfig,
    };
}
