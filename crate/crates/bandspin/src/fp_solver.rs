//! The alternating solver: exhaustive spin enumeration wrapping closed-form
//! auxiliary updates and exact joint association/power subproblem solves.
//!
//! For each spin vector the inner loop repeats
//!
//! 1. chi update (the link SINRs),
//! 2. xi update (the quadratic-transform ratios),
//! 3. exact solve of the joint subproblem in (d, u, p),
//!
//! until the objective stalls. Each step can only increase f2, so the
//! per-spin trace is non-decreasing; the winner across spins is the iterate
//! with the highest converged f2, and the reported sum rate is recomputed
//! from the original objective on that winner.

use rayon::prelude::*;
use std::time::Instant;

use crate::coupling::{precompute_gains, GainTables, SpinVector};
use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::miqcqp::{branch_and_bound_seeded, build_p4, BnbOptions, BnbStatus};
use crate::objective::{
    check_feasibility, eval_f0, eval_f2, penalty_denominators, sinrs, Allocation, AuxState,
};
use crate::scenario::Scenario;

/// Options for [`solve`] and [`inner_loop`].
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Inner-iteration cap per spin vector.
    pub max_inner_iterations: usize,
    /// Relative f2 stall threshold that ends the inner loop.
    pub convergence_rel_tol: f64,
    /// Options forwarded to the subproblem solver.
    pub subproblem: BnbOptions,
    /// Record per-iteration traces.
    pub trace: bool,
    /// Refuse exhaustive spin search above this many satellites.
    pub spin_cap: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_inner_iterations: 100,
            convergence_rel_tol: 1e-5,
            subproblem: BnbOptions::default(),
            trace: true,
            spin_cap: 16,
        }
    }
}

/// One inner-loop iteration record.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    /// f2 after the auxiliary updates (equals f0 of the current iterate).
    pub f2: f64,
    /// f0 of the current iterate.
    pub f0: f64,
    /// Nodes used by the subproblem solve of this iteration (0 when the
    /// loop converged before solving).
    pub subproblem_nodes: usize,
    /// Wall-clock milliseconds of the subproblem solve.
    pub wall_ms: f64,
}

/// Per-spin convergence trace.
#[derive(Debug, Clone)]
pub struct SpinTrace {
    /// Spin vector of this run.
    pub spin: SpinVector,
    /// Iteration records in order.
    pub iterations: Vec<IterationRecord>,
}

/// Aggregate subproblem statistics.
#[derive(Debug, Clone, Default)]
pub struct SubproblemStats {
    /// Subproblem solves issued.
    pub solves: usize,
    /// Total branch-and-bound nodes.
    pub total_nodes: usize,
    /// Largest single-solve node count.
    pub max_nodes: usize,
    /// Solves that hit the node limit.
    pub node_limit_hits: usize,
    /// Subproblem results rejected by the monotonicity guard.
    pub guarded_rejections: usize,
}

impl SubproblemStats {
    fn absorb(&mut self, other: &SubproblemStats) {
        self.solves += other.solves;
        self.total_nodes += other.total_nodes;
        self.max_nodes = self.max_nodes.max(other.max_nodes);
        self.node_limit_hits += other.node_limit_hits;
        self.guarded_rejections += other.guarded_rejections;
    }
}

/// Converged inner-loop state for one spin.
#[derive(Debug, Clone)]
pub struct InnerLoopResult {
    /// Final allocation.
    pub alloc: Allocation,
    /// Auxiliary variables consistent with `alloc`.
    pub aux: AuxState,
    /// Final f2 value (the spin-selection key).
    pub f2: f64,
    /// Iteration trace.
    pub trace: Vec<IterationRecord>,
    /// Subproblem statistics.
    pub stats: SubproblemStats,
}

/// Full solver output.
#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Winning spin vector.
    pub best_spin: SpinVector,
    /// Winning allocation.
    pub best_alloc: Allocation,
    /// Auxiliary variables of the winner.
    pub best_aux: AuxState,
    /// Sum rate of the winner, recomputed from the original objective.
    pub f0_value: f64,
    /// Converged f2 of the winner.
    pub f2_value: f64,
    /// Per-spin traces, in enumeration order.
    pub traces: Vec<SpinTrace>,
    /// Aggregate subproblem statistics.
    pub stats: SubproblemStats,
}

/// Closed-form chi update: the exact per-link SINRs (interference-only
/// denominators), both blocks simultaneously.
pub fn update_chi(gains: &GainTables, alloc: &Allocation, noise: f64) -> (Vec<f64>, Vec<f64>) {
    sinrs(gains, alloc, noise)
}

/// Closed-form xi update given chi: ratios with full-set denominators
/// (the quadratic penalty structure, signal included), both blocks
/// simultaneously.
pub fn update_xi(
    gains: &GainTables,
    alloc: &Allocation,
    aux: &AuxState,
    noise: f64,
) -> (Vec<f64>, Vec<f64>) {
    let kc = gains.ue_count();
    let jc = gains.sat_count();
    let (dl_den, ul_den) = penalty_denominators(gains, alloc, noise);
    let mut xi_dl = vec![0.0; kc * jc];
    let mut xi_ul = vec![0.0; kc * jc];
    for k in 0..kc {
        for j in 0..jc {
            let idx = k * jc + j;
            if alloc.d(k, j) {
                xi_dl[idx] = ((1.0 + aux.chi_dl[idx]) * alloc.p_dl[k]).sqrt()
                    * gains.dl_sig(k, j).sqrt()
                    / dl_den[idx];
            }
            if alloc.u(k, j) {
                xi_ul[idx] = ((1.0 + aux.chi_ul[idx]) * alloc.p_ul[k]).sqrt()
                    * gains.ul_sig(k, j).sqrt()
                    / ul_den[idx];
            }
        }
    }
    (xi_dl, xi_ul)
}

/// Big-M constant: the smallest integer at least `max(sqrt(p_sat_max),
/// sqrt(p_ue_max), 1)`.
pub fn big_m_value(scenario: &Scenario) -> f64 {
    scenario
        .p_sat_max_w
        .sqrt()
        .max(scenario.p_ue_max_w.sqrt())
        .max(1.0)
        .ceil()
}

/// Feasible starting point: every UE attaches both directions to its
/// strongest direct DL satellite (which always satisfies the FDD condition),
/// DL budgets split equally over each satellite's load, UL at full power.
pub fn initialize_alloc(gains: &GainTables, scenario: &Scenario) -> Allocation {
    let kc = gains.ue_count();
    let jc = gains.sat_count();
    let mut alloc = Allocation::empty(kc, jc);
    let mut load = vec![0usize; jc];
    let mut choice = vec![0usize; kc];
    for k in 0..kc {
        let mut best = 0usize;
        for j in 1..jc {
            if gains.dl_sig(k, j) > gains.dl_sig(k, best) {
                best = j;
            }
        }
        choice[k] = best;
        load[best] += 1;
        alloc.set_d(k, best, true);
        alloc.set_u(k, best, true);
        alloc.p_ul[k] = scenario.p_ue_max_w;
    }
    for k in 0..kc {
        alloc.p_dl[k] = scenario.p_sat_max_w / load[choice[k]] as f64;
    }
    alloc
}

fn alloc_from_subproblem(sol: &crate::miqcqp::SubproblemSolution, kc: usize, jc: usize) -> Allocation {
    let mut alloc = Allocation::empty(kc, jc);
    for k in 0..kc {
        for j in 0..jc {
            let i = k * jc + j;
            if sol.d[i] {
                alloc.set_d(k, j, true);
            }
            if sol.u[i] {
                alloc.set_u(k, j, true);
            }
        }
        alloc.p_dl[k] = sol.t_dl[k] * sol.t_dl[k];
        alloc.p_ul[k] = sol.t_ul[k] * sol.t_ul[k];
    }
    alloc
}

/// Run the alternating block updates for one fixed spin until the relative
/// f2 change drops below tolerance or the iteration cap is hit.
pub fn inner_loop(
    gains: &GainTables,
    scenario: &Scenario,
    init_alloc: Allocation,
    options: &SolveOptions,
) -> Result<InnerLoopResult> {
    let kc = gains.ue_count();
    let jc = gains.sat_count();
    let noise = scenario.noise_variance_w;

    let report = check_feasibility(&init_alloc, &gains.spin, scenario)?;
    if !report.feasible {
        return Err(Error::Infeasible(format!(
            "inner loop started from an infeasible allocation: {}",
            report.violations.join("; ")
        )));
    }

    let big_m = big_m_value(scenario);
    let mut alloc = init_alloc;
    let mut aux = AuxState::zeros(kc, jc);
    let mut trace = Vec::new();
    let mut stats = SubproblemStats::default();
    let mut prev_f2 = f64::NEG_INFINITY;
    let mut f2_now = 0.0;

    for _iter in 0..options.max_inner_iterations {
        let (chi_dl, chi_ul) = update_chi(gains, &alloc, noise);
        aux.chi_dl = chi_dl;
        aux.chi_ul = chi_ul;
        let (xi_dl, xi_ul) = update_xi(gains, &alloc, &aux, noise);
        aux.xi_dl = xi_dl;
        aux.xi_ul = xi_ul;

        f2_now = eval_f2(gains, &alloc, &aux, noise);
        let converged =
            prev_f2.is_finite() && (f2_now - prev_f2).abs() <= options.convergence_rel_tol * f2_now.abs().max(1e-12);
        prev_f2 = f2_now;

        if converged {
            if options.trace {
                trace.push(IterationRecord {
                    f2: f2_now,
                    f0: eval_f0(gains, &alloc, noise),
                    subproblem_nodes: 0,
                    wall_ms: 0.0,
                });
            }
            break;
        }

        let p4 = build_p4(gains, &aux, scenario, big_m)?;
        let warm_d: Vec<Option<usize>> = (0..kc).map(|k| alloc.dl_serving(k)).collect();
        let warm_u: Vec<Option<usize>> = (0..kc).map(|k| alloc.ul_serving(k)).collect();
        let started = Instant::now();
        let sol = branch_and_bound_seeded(&p4, &options.subproblem, Some((&warm_d, &warm_u)))?;
        let wall_ms = started.elapsed().as_secs_f64() * 1e3;

        stats.solves += 1;
        stats.total_nodes += sol.nodes;
        stats.max_nodes = stats.max_nodes.max(sol.nodes);
        if sol.status == BnbStatus::NodeLimit {
            stats.node_limit_hits += 1;
        }

        // The warm-started search can only return something at least as good
        // as the current allocation; the guard protects monotonicity against
        // numerical slip anyway.
        let candidate = alloc_from_subproblem(&sol, kc, jc);
        let f2_candidate = eval_f2(gains, &candidate, &aux, noise);
        if f2_candidate >= f2_now - 1e-12 * f2_now.abs().max(1.0) {
            alloc = candidate;
        } else {
            stats.guarded_rejections += 1;
        }

        if options.trace {
            trace.push(IterationRecord {
                f2: f2_now,
                f0: eval_f0(gains, &alloc, noise),
                subproblem_nodes: sol.nodes,
                wall_ms,
            });
        }
    }

    Ok(InnerLoopResult { alloc, aux, f2: f2_now, trace, stats })
}

/// Run [`inner_loop`] for every spin vector in `spins` and keep the tuple
/// with the highest converged f2 (ties go to the earliest, i.e.
/// lexicographically smallest, spin).
pub fn solve_with_spins(
    scenario: &Scenario,
    channels: &ChannelSet,
    spins: &[SpinVector],
    options: &SolveOptions,
) -> Result<SolveResult> {
    if spins.is_empty() {
        return Err(Error::Infeasible("no spin vectors to search".into()));
    }

    let runs: Vec<Result<(SpinVector, InnerLoopResult)>> = spins
        .par_iter()
        .map(|spin| {
            let gains = precompute_gains(channels, spin)?;
            let init = initialize_alloc(&gains, scenario);
            let run = inner_loop(&gains, scenario, init, options)?;
            Ok((spin.clone(), run))
        })
        .collect();

    let mut best: Option<(usize, f64)> = None;
    let mut traces = Vec::with_capacity(spins.len());
    let mut stats = SubproblemStats::default();
    let mut results = Vec::with_capacity(spins.len());
    for (i, run) in runs.into_iter().enumerate() {
        let (spin, run) = run?;
        stats.absorb(&run.stats);
        traces.push(SpinTrace { spin, iterations: run.trace.clone() });
        if best.map(|(_, f2)| run.f2 > f2).unwrap_or(true) {
            best = Some((i, run.f2));
        }
        results.push(run);
    }
    let (best_idx, f2_value) = best.expect("at least one spin");
    let winner = &results[best_idx];
    let gains = precompute_gains(channels, &spins[best_idx])?;
    let f0_value = eval_f0(&gains, &winner.alloc, scenario.noise_variance_w);

    Ok(SolveResult {
        best_spin: spins[best_idx].clone(),
        best_alloc: winner.alloc.clone(),
        best_aux: winner.aux.clone(),
        f0_value,
        f2_value,
        traces,
        stats,
    })
}

/// Full Algorithm-1 solve: exhaustive search over all `2^J` spin vectors.
pub fn solve(
    scenario: &Scenario,
    channels: &ChannelSet,
    options: &SolveOptions,
) -> Result<SolveResult> {
    let j = scenario.sat_count();
    if j > options.spin_cap {
        return Err(Error::SpinCapExceeded { j, cap: options.spin_cap });
    }
    let spins = SpinVector::enumerate(j);
    solve_with_spins(scenario, channels, &spins, options)
}

/// Export per-spin traces as CSV with columns
/// `spin_bits,iteration,f2,f0,subproblem_nodes,wall_ms`.
pub fn write_trace_csv(result: &SolveResult, path: &std::path::Path) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "spin_bits,iteration,f2,f0,subproblem_nodes,wall_ms")?;
    for trace in &result.traces {
        for (i, rec) in trace.iterations.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                trace.spin.bits_string(),
                i,
                rec.f2,
                rec.f0,
                rec.subproblem_nodes,
                rec.wall_ms
            )?;
        }
    }
    Ok(())
}
