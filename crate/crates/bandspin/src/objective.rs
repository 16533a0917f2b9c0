//! The objective chain f0 through f3 and feasibility checking.
//!
//! f0 is the sum spectral efficiency; f1 moves the SINRs out of the
//! logarithms with auxiliary variables chi; f2 converts the ratios into
//! quadratics with auxiliary variables xi; f3 is f2 rewritten in the
//! amplitude variables `z = association * sqrt(power)`. All evaluators
//! consume [`GainTables`] only — the raw-channel route exists solely in the
//! oracle module so the two can cross-check each other.

use crate::coupling::{GainTables, SpinVector};
use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Binary associations and transmit powers for one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    k_count: usize,
    j_count: usize,
    d: Vec<bool>,
    u: Vec<bool>,
    /// DL power toward UE k (W).
    pub p_dl: Vec<f64>,
    /// UL power of UE k (W).
    pub p_ul: Vec<f64>,
}

impl Allocation {
    /// All-zero allocation (always feasible).
    pub fn empty(k_count: usize, j_count: usize) -> Self {
        Self {
            k_count,
            j_count,
            d: vec![false; k_count * j_count],
            u: vec![false; k_count * j_count],
            p_dl: vec![0.0; k_count],
            p_ul: vec![0.0; k_count],
        }
    }

    /// Number of UEs.
    pub fn ue_count(&self) -> usize {
        self.k_count
    }

    /// Number of satellites.
    pub fn sat_count(&self) -> usize {
        self.j_count
    }

    /// DL association bit d_{kj}.
    pub fn d(&self, k: usize, j: usize) -> bool {
        self.d[k * self.j_count + j]
    }

    /// UL association bit u_{kj}.
    pub fn u(&self, k: usize, j: usize) -> bool {
        self.u[k * self.j_count + j]
    }

    /// Set d_{kj}.
    pub fn set_d(&mut self, k: usize, j: usize, v: bool) {
        self.d[k * self.j_count + j] = v;
    }

    /// Set u_{kj}.
    pub fn set_u(&mut self, k: usize, j: usize, v: bool) {
        self.u[k * self.j_count + j] = v;
    }

    /// Satellite serving UE `k` in DL, if any.
    pub fn dl_serving(&self, k: usize) -> Option<usize> {
        (0..self.j_count).find(|&j| self.d(k, j))
    }

    /// Satellite serving UE `k` in UL, if any.
    pub fn ul_serving(&self, k: usize) -> Option<usize> {
        (0..self.j_count).find(|&j| self.u(k, j))
    }
}

/// Auxiliary variables of the two transforms.
#[derive(Debug, Clone)]
pub struct AuxState {
    k_count: usize,
    j_count: usize,
    /// chi values, indexed `k * J + j`; must stay non-negative.
    pub chi_dl: Vec<f64>,
    /// See `chi_dl`.
    pub chi_ul: Vec<f64>,
    /// xi values, indexed `k * J + j`.
    pub xi_dl: Vec<f64>,
    /// See `xi_dl`.
    pub xi_ul: Vec<f64>,
}

impl AuxState {
    /// All-zero auxiliary state.
    pub fn zeros(k_count: usize, j_count: usize) -> Self {
        Self {
            k_count,
            j_count,
            chi_dl: vec![0.0; k_count * j_count],
            chi_ul: vec![0.0; k_count * j_count],
            xi_dl: vec![0.0; k_count * j_count],
            xi_ul: vec![0.0; k_count * j_count],
        }
    }

    /// Number of UEs.
    pub fn ue_count(&self) -> usize {
        self.k_count
    }

    /// Number of satellites.
    pub fn sat_count(&self) -> usize {
        self.j_count
    }

    #[inline]
    /// Flat index of link `(k, j)`.
    pub fn idx(&self, k: usize, j: usize) -> usize {
        k * self.j_count + j
    }
}

/// Outcome of a feasibility check, listing every violated constraint.
#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    /// True when no constraint is violated.
    pub feasible: bool,
    /// Human-readable description of each violation.
    pub violations: Vec<String>,
}

/// Check constraints (8c)-(8g) plus the FDD band-consistency condition,
/// which only binds for UEs served in both directions.
pub fn check_feasibility(
    alloc: &Allocation,
    spin: &SpinVector,
    scenario: &Scenario,
) -> Result<FeasibilityReport> {
    let k_count = scenario.ue_count();
    let j_count = scenario.sat_count();
    if alloc.k_count != k_count || alloc.j_count != j_count || spin.len() != j_count {
        return Err(Error::DimensionMismatch(format!(
            "alloc {}x{}, spin {}, scenario {}x{}",
            alloc.k_count,
            alloc.j_count,
            spin.len(),
            k_count,
            j_count
        )));
    }

    let mut violations = Vec::new();
    let tol = 1e-9;

    for k in 0..k_count {
        let d_sum: usize = (0..j_count).filter(|&j| alloc.d(k, j)).count();
        let u_sum: usize = (0..j_count).filter(|&j| alloc.u(k, j)).count();
        if d_sum > 1 {
            violations.push(format!("UE {k}: {d_sum} DL associations"));
        }
        if u_sum > 1 {
            violations.push(format!("UE {k}: {u_sum} UL associations"));
        }
        if d_sum == 1 && u_sum == 1 {
            let dr: usize = (0..j_count).filter(|&j| alloc.d(k, j) && spin.bit(j)).count();
            let ur: usize = (0..j_count).filter(|&j| alloc.u(k, j) && spin.bit(j)).count();
            if dr != ur {
                violations.push(format!("UE {k}: DL and UL satellites have opposite spins"));
            }
        }
    }

    for j in 0..j_count {
        let used: f64 = (0..k_count)
            .filter(|&k| alloc.d(k, j))
            .map(|k| alloc.p_dl[k])
            .sum();
        if used > scenario.p_sat_max_w * (1.0 + tol) {
            violations.push(format!(
                "satellite {j}: DL power {used} exceeds budget {}",
                scenario.p_sat_max_w
            ));
        }
    }

    for k in 0..k_count {
        if alloc.p_ul[k] > scenario.p_ue_max_w * (1.0 + tol) {
            violations.push(format!(
                "UE {k}: UL power {} exceeds budget {}",
                alloc.p_ul[k], scenario.p_ue_max_w
            ));
        }
        if alloc.p_dl[k] < 0.0 {
            violations.push(format!("UE {k}: negative DL power {}", alloc.p_dl[k]));
        }
        if alloc.p_ul[k] < 0.0 {
            violations.push(format!("UE {k}: negative UL power {}", alloc.p_ul[k]));
        }
    }

    Ok(FeasibilityReport {
        feasible: violations.is_empty(),
        violations,
    })
}

/// Per-link SINRs of the sum-rate objective.
///
/// These are exactly the closed-form chi updates: numerators are the served
/// direct-link powers, denominators exclude the desired UE (sums over
/// `K \ {k}`).
pub fn sinrs(gains: &GainTables, alloc: &Allocation, noise: f64) -> (Vec<f64>, Vec<f64>) {
    let kc = gains.ue_count();
    let jc = gains.sat_count();
    let mut dl = vec![0.0; kc * jc];
    let mut ul = vec![0.0; kc * jc];
    for k in 0..kc {
        for j in 0..jc {
            let mut dl_den = noise;
            let mut ul_den = noise;
            for j2 in 0..jc {
                for k2 in 0..kc {
                    if k2 == k {
                        continue;
                    }
                    if alloc.d(k2, j2) {
                        dl_den += alloc.p_dl[k2] * gains.dl_xint(k, j, k2, j2);
                    }
                    if alloc.u(k2, j2) {
                        ul_den += alloc.p_ul[k2] * gains.ul_xint(k, j, k2, j2);
                        if j2 != j {
                            dl_den += alloc.p_ul[k2] * gains.uu(k, j, k2, j2);
                        }
                    }
                }
            }
            let idx = k * jc + j;
            if alloc.d(k, j) {
                dl[idx] = alloc.p_dl[k] * gains.dl_sig(k, j) / dl_den;
            }
            if alloc.u(k, j) {
                ul[idx] = alloc.p_ul[k] * gains.ul_sig(k, j) / ul_den;
            }
        }
    }
    (dl, ul)
}

/// Quadratic-penalty denominators of f2 and of the xi updates.
///
/// Unlike the SINR denominators these sum over the full UE set K, including
/// the desired signal itself; that is the structure the transforms produce
/// and it must not be "corrected" to match f0. The UE-UE term stays over
/// `K \ {k}`, `J \ {j}`.
pub fn penalty_denominators(
    gains: &GainTables,
    alloc: &Allocation,
    noise: f64,
) -> (Vec<f64>, Vec<f64>) {
    let kc = gains.ue_count();
    let jc = gains.sat_count();
    let mut dl = vec![noise; kc * jc];
    let mut ul = vec![noise; kc * jc];
    for k in 0..kc {
        for j in 0..jc {
            let idx = k * jc + j;
            for j2 in 0..jc {
                for k2 in 0..kc {
                    if alloc.d(k2, j2) {
                        dl[idx] += alloc.p_dl[k2] * gains.dl_xint(k, j, k2, j2);
                    }
                    if alloc.u(k2, j2) {
                        ul[idx] += alloc.p_ul[k2] * gains.ul_xint(k, j, k2, j2);
                        if j2 != j && k2 != k {
                            dl[idx] += alloc.p_ul[k2] * gains.uu(k, j, k2, j2);
                        }
                    }
                }
            }
        }
    }
    (dl, ul)
}

/// Sum spectral efficiency (bits/s/Hz) of a feasible allocation.
pub fn eval_f0(gains: &GainTables, alloc: &Allocation, noise: f64) -> f64 {
    let (dl, ul) = sinrs(gains, alloc, noise);
    dl.iter().map(|s| (1.0 + s).log2()).sum::<f64>()
        + ul.iter().map(|s| (1.0 + s).log2()).sum::<f64>()
}

/// Scale of every non-logarithmic transform term.
///
/// The logs report bits, so the auxiliary-variable machinery (the -chi
/// terms, the fractions, and the quadratic penalties) carries 1/ln(2):
/// that is the unique scaling under which the closed-form chi and xi
/// updates are exact stationary points of f1 and f2 while the collapse
/// identities still hold. An unscaled evaluation would leave a gradient
/// of (1/ln2 - 1) per link at the closed-form updates and void the
/// monotonicity argument.
pub(crate) const AUX_SCALE: f64 = std::f64::consts::LOG2_E;

/// First transform objective: SINRs moved out of the logarithms.
pub fn eval_f1(gains: &GainTables, alloc: &Allocation, aux: &AuxState, noise: f64) -> f64 {
    let kc = gains.ue_count();
    let jc = gains.sat_count();
    let (dl_den, ul_den) = penalty_denominators(gains, alloc, noise);
    let mut total = 0.0;
    for k in 0..kc {
        for j in 0..jc {
            let idx = k * jc + j;
            let cd = aux.chi_dl[idx];
            let cu = aux.chi_ul[idx];
            total += (1.0 + cd).log2() + (1.0 + cu).log2() - AUX_SCALE * (cd + cu);
            if alloc.u(k, j) {
                total +=
                    AUX_SCALE * (1.0 + cu) * alloc.p_ul[k] * gains.ul_sig(k, j) / ul_den[idx];
            }
            if alloc.d(k, j) {
                total +=
                    AUX_SCALE * (1.0 + cd) * alloc.p_dl[k] * gains.dl_sig(k, j) / dl_den[idx];
            }
        }
    }
    total
}

/// Second transform objective: ratios converted to quadratics.
pub fn eval_f2(gains: &GainTables, alloc: &Allocation, aux: &AuxState, noise: f64) -> f64 {
    let kc = gains.ue_count();
    let jc = gains.sat_count();
    let (dl_den, ul_den) = penalty_denominators(gains, alloc, noise);
    let mut total = 0.0;
    for k in 0..kc {
        for j in 0..jc {
            let idx = k * jc + j;
            let cd = aux.chi_dl[idx];
            let cu = aux.chi_ul[idx];
            let xd = aux.xi_dl[idx];
            let xu = aux.xi_ul[idx];
            total += (1.0 + cd).log2() + (1.0 + cu).log2() - AUX_SCALE * (cd + cu);
            if alloc.d(k, j) {
                total += AUX_SCALE
                    * 2.0
                    * xd
                    * ((1.0 + cd) * alloc.p_dl[k]).sqrt()
                    * gains.dl_sig(k, j).sqrt();
            }
            if alloc.u(k, j) {
                total += AUX_SCALE
                    * 2.0
                    * xu
                    * ((1.0 + cu) * alloc.p_ul[k]).sqrt()
                    * gains.ul_sig(k, j).sqrt();
            }
            total -= AUX_SCALE * xd * xd * dl_den[idx];
            total -= AUX_SCALE * xu * xu * ul_den[idx];
        }
    }
    total
}

/// Third objective: f2 in the substituted amplitude variables
/// `z_dl = d * sqrt(p_dl)`, `z_ul = u * sqrt(p_ul)` (both indexed `k * J + j`).
///
/// The interference penalties are the index-swapped regrouping of f2's: the
/// weight on `z_{kj}^2` collects the xi of every victim link against the
/// transposed cross gains.
pub fn eval_f3(
    gains: &GainTables,
    z_dl: &[f64],
    z_ul: &[f64],
    aux: &AuxState,
    noise: f64,
) -> f64 {
    let kc = gains.ue_count();
    let jc = gains.sat_count();
    let mut total = 0.0;
    for k in 0..kc {
        for j in 0..jc {
            let idx = k * jc + j;
            let cd = aux.chi_dl[idx];
            let cu = aux.chi_ul[idx];
            let xd = aux.xi_dl[idx];
            let xu = aux.xi_ul[idx];
            total += (1.0 + cd).log2() + (1.0 + cu).log2() - AUX_SCALE * (cd + cu);
            total -= AUX_SCALE * (xd * xd * noise + xu * xu * noise);
            total +=
                AUX_SCALE * 2.0 * xd * z_dl[idx] * (1.0 + cd).sqrt() * gains.dl_sig(k, j).sqrt();
            total +=
                AUX_SCALE * 2.0 * xu * z_ul[idx] * (1.0 + cu).sqrt() * gains.ul_sig(k, j).sqrt();

            let mut dl_pen = 0.0;
            let mut uu_pen = 0.0;
            let mut ul_pen = 0.0;
            for j2 in 0..jc {
                for k2 in 0..kc {
                    let idx2 = k2 * jc + j2;
                    let xd2 = aux.xi_dl[idx2];
                    let xu2 = aux.xi_ul[idx2];
                    dl_pen += xd2 * xd2 * gains.dl_xint(k2, j2, k, j);
                    ul_pen += xu2 * xu2 * gains.ul_xint(k2, j2, k, j);
                    if j2 != j && k2 != k {
                        uu_pen += xd2 * xd2 * gains.uu(k2, j2, k, j);
                    }
                }
            }
            total -= AUX_SCALE * z_dl[idx] * z_dl[idx] * dl_pen;
            total -= AUX_SCALE * z_ul[idx] * z_ul[idx] * (uu_pen + ul_pen);
        }
    }
    total
}

/// Amplitude variables of an allocation: `z = association * sqrt(power)`.
pub fn alloc_to_z(alloc: &Allocation) -> (Vec<f64>, Vec<f64>) {
    let kc = alloc.ue_count();
    let jc = alloc.sat_count();
    let mut z_dl = vec![0.0; kc * jc];
    let mut z_ul = vec![0.0; kc * jc];
    for k in 0..kc {
        for j in 0..jc {
            if alloc.d(k, j) {
                z_dl[k * jc + j] = alloc.p_dl[k].sqrt();
            }
            if alloc.u(k, j) {
                z_ul[k * jc + j] = alloc.p_ul[k].sqrt();
            }
        }
    }
    (z_dl, z_ul)
}

/// Test-only generator of random feasible allocations; shared by the unit
/// tests of several modules.
#[cfg(test)]
pub(crate) mod testutil {
    use super::Allocation;
    use crate::coupling::SpinVector;
    use crate::scenario::Scenario;
    use rand::Rng;

    pub(crate) fn random_feasible_alloc(
        scenario: &Scenario,
        spin: &SpinVector,
        rng: &mut impl Rng,
    ) -> Allocation {
        let kc = scenario.ue_count();
        let jc = scenario.sat_count();
        let mut alloc = Allocation::empty(kc, jc);
        for k in 0..kc {
            let dj = if rng.gen_bool(0.8) {
                Some(rng.gen_range(0..jc))
            } else {
                None
            };
            let uj = if rng.gen_bool(0.8) {
                Some(rng.gen_range(0..jc))
            } else {
                None
            };
            // Enforce the FDD condition when both directions are served.
            let uj = match (dj, uj) {
                (Some(a), Some(b)) if spin.bit(a) != spin.bit(b) => Some(a),
                _ => uj,
            };
            if let Some(j) = dj {
                alloc.set_d(k, j, true);
            }
            if let Some(j) = uj {
                alloc.set_u(k, j, true);
                alloc.p_ul[k] = rng.gen::<f64>() * scenario.p_ue_max_w;
            }
        }
        for j in 0..jc {
            let served: Vec<usize> = (0..kc).filter(|&k| alloc.d(k, j)).collect();
            if !served.is_empty() {
                let share = scenario.p_sat_max_w / served.len() as f64;
                for &k in &served {
                    alloc.p_dl[k] = rng.gen::<f64>() * share;
                }
            }
        }
        alloc
    }
}
