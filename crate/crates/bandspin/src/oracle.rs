//! Independent brute-force references for tests and acceptance checks.
//!
//! Nothing here is used by the solve path, and nothing here calls into the
//! coupling / objective / miqcqp implementations beyond reading their plain
//! data types: the spin logic, beamformers, and continuous optimizations are
//! all re-derived locally so the two routes can check each other. Enumeration
//! caps are hard preconditions; an oracle that subsamples is not an oracle.

use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::coupling::SpinVector;
use crate::error::{Error, Result};
use crate::miqcqp::SubproblemP4;
use crate::objective::Allocation;
use crate::scenario::{Scenario, UeUeBandConvention};

// Local primitives; deliberately not shared with the channel module.

fn norm_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|e| e.re * e.re + e.im * e.im).sum()
}

fn matched_filter(h: &[Complex64]) -> Vec<Complex64> {
    let n = norm_sq(h).sqrt();
    h.iter().map(|e| e.conj() / n).collect()
}

fn transfer_sq(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc.re * acc.re + acc.im * acc.im
}

fn dl_band(spin: &SpinVector, j: usize) -> usize {
    if spin.bit(j) {
        0
    } else {
        1
    }
}

fn ul_band(spin: &SpinVector, j: usize) -> usize {
    1 - dl_band(spin, j)
}

/// Per-link SINRs computed straight from the raw complex channels and the
/// received-signal model, bypassing the gain tables entirely.
///
/// Returns `(dl, ul)` SINR matrices indexed `k * J + j`.
pub fn oracle_sinr(
    channels: &ChannelSet,
    alloc: &Allocation,
    spin: &SpinVector,
    noise: f64,
) -> (Vec<f64>, Vec<f64>) {
    let kc = channels.ue_count();
    let jc = channels.sat_count();
    let mut dl = vec![0.0; kc * jc];
    let mut ul = vec![0.0; kc * jc];

    for k in 0..kc {
        for j in 0..jc {
            let mut dl_den = noise;
            let mut ul_den = noise;
            let v_kj = matched_filter(channels.sat_ue(k, j, ul_band(spin, j)));
            for j2 in 0..jc {
                for k2 in 0..kc {
                    if k2 == k {
                        continue;
                    }
                    if alloc.d(k2, j2) && spin.bit(j) == spin.bit(j2) {
                        let gamma = channels.sat_ue(k, j2, dl_band(spin, j2));
                        let w = matched_filter(channels.sat_ue(k2, j2, dl_band(spin, j2)));
                        dl_den += alloc.p_dl[k2] * transfer_sq(gamma, &w);
                    }
                    if alloc.u(k2, j2) {
                        if spin.bit(j) == spin.bit(j2) {
                            let gamma = channels.sat_ue(k2, j, ul_band(spin, j2));
                            ul_den += alloc.p_ul[k2] * transfer_sq(&v_kj, gamma);
                        } else if j2 != j {
                            let band = match channels.ue_ue_band_convention {
                                UeUeBandConvention::Paper => dl_band(spin, j2),
                                UeUeBandConvention::Physical => dl_band(spin, j),
                            };
                            let nu = channels.ue_ue(k2, k, band);
                            dl_den += alloc.p_ul[k2] * nu * nu;
                        }
                    }
                }
            }
            let idx = k * jc + j;
            if alloc.d(k, j) {
                dl[idx] = alloc.p_dl[k] * norm_sq(channels.sat_ue(k, j, dl_band(spin, j))) / dl_den;
            }
            if alloc.u(k, j) {
                ul[idx] = alloc.p_ul[k] * norm_sq(channels.sat_ue(k, j, ul_band(spin, j))) / ul_den;
            }
        }
    }
    (dl, ul)
}

/// Best objective and argmax of P4 by exhaustive association enumeration.
#[derive(Debug, Clone)]
pub struct OracleP4Result {
    /// Best objective found (constants included).
    pub objective: f64,
    /// DL serving satellite per UE.
    pub d_assoc: Vec<Option<usize>>,
    /// UL serving satellite per UE.
    pub u_assoc: Vec<Option<usize>>,
    /// DL amplitude per UE.
    pub amp_dl: Vec<f64>,
    /// UL amplitude per UE.
    pub amp_ul: Vec<f64>,
    /// Association patterns evaluated.
    pub patterns: usize,
}

/// Exhaustively solve P4: every association pattern satisfying the row and
/// FDD constraints, each with an exact continuous solve.
///
/// Hard precondition: `K <= 3`, `J <= 2` (at most `(J+1)^(2K) = 729`
/// patterns).
pub fn oracle_p4(p4: &SubproblemP4) -> Result<OracleP4Result> {
    let kc = p4.k_count;
    let jc = p4.j_count;
    if kc > 3 || jc > 2 {
        return Err(Error::OracleTooLarge(format!(
            "oracle_p4 accepts K <= 3, J <= 2, got K = {kc}, J = {jc}"
        )));
    }

    let base = jc + 1;
    let digits = 2 * kc;
    let total = base.pow(digits as u32);
    let mut best: Option<OracleP4Result> = None;

    for code in 0..total {
        let mut rem = code;
        let mut d_assoc = vec![None; kc];
        let mut u_assoc = vec![None; kc];
        for k in 0..kc {
            let c = rem % base;
            rem /= base;
            d_assoc[k] = (c > 0).then(|| c - 1);
            let c = rem % base;
            rem /= base;
            u_assoc[k] = (c > 0).then(|| c - 1);
        }
        // FDD filter: a UE served in both directions needs matching spins.
        let consistent = (0..kc).all(|k| match (d_assoc[k], u_assoc[k]) {
            (Some(a), Some(b)) => p4.spin.bit(a) == p4.spin.bit(b),
            _ => true,
        });
        if !consistent {
            continue;
        }

        let (amp_dl, amp_ul, value) = continuous_best(p4, &d_assoc, &u_assoc);
        if best.as_ref().map(|b| value > b.objective).unwrap_or(true) {
            best = Some(OracleP4Result {
                objective: value,
                d_assoc,
                u_assoc,
                amp_dl,
                amp_ul,
                patterns: total,
            });
        }
    }
    Ok(best.expect("all-unserved pattern always enumerated"))
}

/// Exact continuous optimum for one association pattern. Independent
/// re-derivation: UL amplitudes clamp at their own peak, DL amplitudes solve
/// the per-satellite budget ball with a safeguarded multiplier search.
fn continuous_best(
    p4: &SubproblemP4,
    d_assoc: &[Option<usize>],
    u_assoc: &[Option<usize>],
) -> (Vec<f64>, Vec<f64>, f64) {
    let kc = p4.k_count;
    let idx = |k: usize, j: usize| k * p4.j_count + j;
    let mut amp_dl = vec![0.0; kc];
    let mut amp_ul = vec![0.0; kc];

    for k in 0..kc {
        if let Some(j) = u_assoc[k] {
            let (a, c) = (p4.a_ul[idx(k, j)], p4.c_ul[idx(k, j)]);
            amp_ul[k] = if c > 0.0 {
                (a / (2.0 * c)).clamp(0.0, p4.sqrt_p_ue_max)
            } else if a > 0.0 {
                p4.sqrt_p_ue_max
            } else {
                0.0
            };
        }
    }

    for j in 0..p4.j_count {
        let served: Vec<usize> = (0..kc).filter(|&k| d_assoc[k] == Some(j)).collect();
        if served.is_empty() {
            continue;
        }
        let budget = p4.p_sat_max[j];
        let coeff: Vec<(f64, f64)> = served
            .iter()
            .map(|&k| (p4.a_dl[idx(k, j)], p4.c_dl[idx(k, j)]))
            .collect();

        // KKT: z_i(mu) = a_i / (2 (c_i + mu)), mu >= 0 complementary with the
        // ball. Try the interior solution, then search the multiplier.
        let norm_at = |mu: f64| -> f64 {
            coeff
                .iter()
                .map(|&(a, c)| {
                    if a <= 0.0 {
                        0.0
                    } else {
                        let z = a / (2.0 * (c + mu));
                        z * z
                    }
                })
                .sum()
        };
        let interior_ok = coeff.iter().all(|&(a, c)| a <= 0.0 || c > 0.0) && norm_at(0.0) <= budget;
        let mu = if interior_ok {
            0.0
        } else {
            let mut lo = 0.0f64;
            let mut hi = 1.0f64;
            while norm_at(hi) > budget {
                hi *= 4.0;
            }
            for _ in 0..300 {
                let mid = 0.5 * (lo + hi);
                if norm_at(mid) > budget {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hi
        };
        let scale = {
            let n = norm_at(mu);
            if n > budget {
                (budget / n).sqrt()
            } else {
                1.0
            }
        };
        for (slot, &k) in served.iter().enumerate() {
            let (a, c) = coeff[slot];
            amp_dl[k] = if a > 0.0 { scale * a / (2.0 * (c + mu)) } else { 0.0 };
        }
    }

    let mut value = p4.obj_const;
    for k in 0..kc {
        if let Some(j) = d_assoc[k] {
            let i = idx(k, j);
            value += p4.a_dl[i] * amp_dl[k] - p4.c_dl[i] * amp_dl[k] * amp_dl[k];
        }
        if let Some(j) = u_assoc[k] {
            let i = idx(k, j);
            value += p4.a_ul[i] * amp_ul[k] - p4.c_ul[i] * amp_ul[k] * amp_ul[k];
        }
    }
    (amp_dl, amp_ul, value)
}

/// Bracket of the global sum-rate optimum on a tiny instance.
#[derive(Debug, Clone, Copy)]
pub struct GlobalBracket {
    /// Best f0 found by the grid search (a global lower bound).
    pub lower: f64,
    /// Interference-free full-power bound (a global upper bound).
    pub upper: f64,
}

/// Exhaustive search over spins, associations, and a uniform transmit-power
/// grid. `grid_levels = 1` means full power only.
///
/// Hard precondition: `K <= 2`, `J <= 2`.
pub fn oracle_global_f0(
    scenario: &Scenario,
    channels: &ChannelSet,
    grid_levels: usize,
) -> Result<GlobalBracket> {
    let kc = scenario.ue_count();
    let jc = scenario.sat_count();
    if kc > 2 || jc > 2 {
        return Err(Error::OracleTooLarge(format!(
            "oracle_global_f0 accepts K <= 2, J <= 2, got K = {kc}, J = {jc}"
        )));
    }
    if grid_levels == 0 {
        return Err(Error::OracleTooLarge("grid_levels must be at least 1".into()));
    }
    let noise = scenario.noise_variance_w;

    let level = |i: usize, max: f64| {
        if grid_levels == 1 {
            max
        } else {
            max * i as f64 / (grid_levels - 1) as f64
        }
    };

    let mut best = 0.0f64; // the all-off allocation achieves f0 = 0
    for spin in SpinVector::enumerate(jc) {
        // Oracle-side gains from raw channels.
        let sig_dl: Vec<f64> = (0..kc * jc)
            .map(|i| norm_sq(channels.sat_ue(i / jc, i % jc, dl_band(&spin, i % jc))))
            .collect();
        let sig_ul: Vec<f64> = (0..kc * jc)
            .map(|i| norm_sq(channels.sat_ue(i / jc, i % jc, ul_band(&spin, i % jc))))
            .collect();

        let base = jc + 1;
        let digits = 2 * kc;
        let total = base.pow(digits as u32);
        for code in 0..total {
            let mut rem = code;
            let mut d_assoc = vec![None; kc];
            let mut u_assoc = vec![None; kc];
            for k in 0..kc {
                let c = rem % base;
                rem /= base;
                d_assoc[k] = (c > 0).then(|| c - 1);
                let c = rem % base;
                rem /= base;
                u_assoc[k] = (c > 0).then(|| c - 1);
            }
            let consistent = (0..kc).all(|k| match (d_assoc[k], u_assoc[k]) {
                (Some(a), Some(b)) => spin.bit(a) == spin.bit(b),
                _ => true,
            });
            if !consistent {
                continue;
            }

            let dl_served: Vec<usize> = (0..kc).filter(|&k| d_assoc[k].is_some()).collect();
            let ul_served: Vec<usize> = (0..kc).filter(|&k| u_assoc[k].is_some()).collect();
            let dl_combos = grid_levels.pow(dl_served.len() as u32);
            let ul_combos = grid_levels.pow(ul_served.len() as u32);

            for dc in 0..dl_combos {
                let mut p_dl = vec![0.0; kc];
                let mut rem = dc;
                for &k in &dl_served {
                    p_dl[k] = level(rem % grid_levels, scenario.p_sat_max_w);
                    rem /= grid_levels;
                }
                // Per-satellite budget filter.
                let ok = (0..jc).all(|j| {
                    let used: f64 = (0..kc)
                        .filter(|&k| d_assoc[k] == Some(j))
                        .map(|k| p_dl[k])
                        .sum();
                    used <= scenario.p_sat_max_w * (1.0 + 1e-12)
                });
                if !ok {
                    continue;
                }
                for uc in 0..ul_combos {
                    let mut p_ul = vec![0.0; kc];
                    let mut rem = uc;
                    for &k in &ul_served {
                        p_ul[k] = level(rem % grid_levels, scenario.p_ue_max_w);
                        rem /= grid_levels;
                    }

                    // Product form of the sum rate: one log at the end.
                    let mut product = 1.0f64;
                    for k in 0..kc {
                        for j in 0..jc {
                            let i = k * jc + j;
                            let mut dl_den = noise;
                            let mut ul_den = noise;
                            for k2 in 0..kc {
                                if k2 == k {
                                    continue;
                                }
                                if let Some(j2) = d_assoc[k2] {
                                    if spin.bit(j) == spin.bit(j2) {
                                        let gamma =
                                            channels.sat_ue(k, j2, dl_band(&spin, j2));
                                        let w = matched_filter(
                                            channels.sat_ue(k2, j2, dl_band(&spin, j2)),
                                        );
                                        dl_den += p_dl[k2] * transfer_sq(gamma, &w);
                                    }
                                }
                                if let Some(j2) = u_assoc[k2] {
                                    if spin.bit(j) == spin.bit(j2) {
                                        let v = matched_filter(
                                            channels.sat_ue(k, j, ul_band(&spin, j)),
                                        );
                                        let gamma =
                                            channels.sat_ue(k2, j, ul_band(&spin, j2));
                                        ul_den += p_ul[k2] * transfer_sq(&v, gamma);
                                    } else if j2 != j {
                                        let band = match channels.ue_ue_band_convention {
                                            UeUeBandConvention::Paper => dl_band(&spin, j2),
                                            UeUeBandConvention::Physical => dl_band(&spin, j),
                                        };
                                        let nu = channels.ue_ue(k2, k, band);
                                        dl_den += p_ul[k2] * nu * nu;
                                    }
                                }
                            }
                            if d_assoc[k] == Some(j) {
                                product *= 1.0 + p_dl[k] * sig_dl[i] / dl_den;
                            }
                            if u_assoc[k] == Some(j) {
                                product *= 1.0 + p_ul[k] * sig_ul[i] / ul_den;
                            }
                        }
                    }
                    let f0 = product.log2();
                    if f0 > best {
                        best = f0;
                    }
                }
            }
        }
    }

    // Interference-free full-power upper bound, over the best band choice.
    let mut upper = 0.0;
    for k in 0..kc {
        let mut best_dl = 0.0f64;
        let mut best_ul = 0.0f64;
        for j in 0..jc {
            for l in 0..2 {
                let sig = norm_sq(channels.sat_ue(k, j, l));
                best_dl = best_dl.max(scenario.p_sat_max_w * sig / noise);
                best_ul = best_ul.max(scenario.p_ue_max_w * sig / noise);
            }
        }
        upper += (1.0 + best_dl).log2() + (1.0 + best_ul).log2();
    }

    Ok(GlobalBracket { lower: best, upper })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::precompute_gains;
    use crate::fp_solver::{big_m_value, update_chi};
    use crate::miqcqp::build_p4;
    use crate::objective::{testutil::random_feasible_alloc, AuxState};
    use crate::scenario::{build_scenario, paper_default_config};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(j: usize, k: usize, seed: u64) -> (Scenario, ChannelSet) {
        let mut cfg = paper_default_config(j);
        cfg.ue_count = k;
        cfg.antenna_count_x = 4;
        cfg.antenna_count_y = 4;
        let sc = build_scenario(&cfg, seed).unwrap();
        let ch = ChannelSet::synthesize(&sc).unwrap();
        (sc, ch)
    }

    #[test]
    fn oracle_sinr_matches_gain_table_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for trial in 0..10u64 {
            let j = 1 + (trial as usize % 2);
            let (sc, ch) = setup(j, 3, trial);
            for spin in SpinVector::enumerate(j) {
                let gains = precompute_gains(&ch, &spin).unwrap();
                let alloc = random_feasible_alloc(&sc, &spin, &mut rng);
                let (dl_a, ul_a) = oracle_sinr(&ch, &alloc, &spin, sc.noise_variance_w);
                let (dl_b, ul_b) = update_chi(&gains, &alloc, sc.noise_variance_w);
                for i in 0..dl_a.len() {
                    assert!(
                        (dl_a[i] - dl_b[i]).abs() <= 1e-10 * dl_b[i].abs().max(1.0),
                        "dl sinr {} vs {}",
                        dl_a[i],
                        dl_b[i]
                    );
                    assert!((ul_a[i] - ul_b[i]).abs() <= 1e-10 * ul_b[i].abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn oracle_sinr_zero_power() {
        let (sc, ch) = setup(2, 2, 5);
        let spin = SpinVector::zeros(2);
        let alloc = Allocation::empty(2, 2);
        let (dl, ul) = oracle_sinr(&ch, &alloc, &spin, sc.noise_variance_w);
        assert!(dl.iter().chain(ul.iter()).all(|&s| s == 0.0));
    }

    #[test]
    fn oracle_p4_single_link_pattern_count() {
        let (sc, ch) = setup(1, 1, 6);
        let spin = SpinVector::zeros(1);
        let gains = precompute_gains(&ch, &spin).unwrap();
        let mut aux = AuxState::zeros(1, 1);
        aux.chi_dl[0] = 1.0;
        aux.chi_ul[0] = 0.5;
        aux.xi_dl[0] = 0.8;
        aux.xi_ul[0] = 0.3;
        let p4 = build_p4(&gains, &aux, &sc, big_m_value(&sc)).unwrap();
        let res = oracle_p4(&p4).unwrap();
        assert_eq!(res.patterns, 4);
        // Single link: closed-form peak for both directions.
        let peak_dl = (p4.a_dl[0] / (2.0 * p4.c_dl[0])).clamp(0.0, 20.0f64.sqrt());
        assert!((res.amp_dl[0] - peak_dl).abs() < 1e-9);
    }

    #[test]
    fn oracle_p4_rejects_large() {
        let (sc, ch) = setup(2, 4, 7);
        let spin = SpinVector::zeros(2);
        let gains = precompute_gains(&ch, &spin).unwrap();
        let aux = AuxState::zeros(4, 2);
        let p4 = build_p4(&gains, &aux, &sc, big_m_value(&sc)).unwrap();
        assert!(matches!(oracle_p4(&p4), Err(Error::OracleTooLarge(_))));
    }

    #[test]
    fn bracket_orders_and_grid_refines() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (sc, ch) = setup(2, 2, 8);
        let _ = &mut rng;
        let coarse = oracle_global_f0(&sc, &ch, 3).unwrap();
        let fine = oracle_global_f0(&sc, &ch, 5).unwrap();
        assert!(coarse.lower <= coarse.upper);
        // 5 levels refine 3 (both contain {0, max/2, max}).
        assert!(fine.lower >= coarse.lower - 1e-12);
        assert_eq!(coarse.upper, fine.upper);

        // Full-power-only grid still yields a valid bracket.
        let one = oracle_global_f0(&sc, &ch, 1).unwrap();
        assert!(one.lower <= fine.lower + 1e-12);
    }
}
