//! Primal-dual interior-point solver for box-constrained convex QCQPs with
//! sparse linear rows and diagonal convex quadratic rows.
//!
//! The problem form is
//!
//! ```text
//! maximize    sum_i ( lin_i x_i - quad_i x_i^2 )          quad_i >= 0
//! subject to  lo <= x <= hi
//!             sum lin * x + sum_{q in Q_r} x_q^2 <= rhs_r   for each row r
//! ```
//!
//! Besides the primal iterate, the solver reports a certified upper bound
//! obtained from the partial Lagrangian dual: for any nonnegative row
//! multipliers, maximizing the Lagrangian over the box alone is separable and
//! closed-form, so the resulting value upper-bounds the true optimum by weak
//! duality regardless of how far the iterate is from convergence. Branch and
//! bound relies on that bound, never on the primal value.

/// One inequality `sum lin * x + sum_{q} x_q^2 <= rhs`.
#[derive(Debug, Clone)]
pub struct Row {
    /// Sparse linear part: (variable index, coefficient).
    pub lin: Vec<(usize, f64)>,
    /// Variables entering quadratically with unit coefficient.
    pub quad: Vec<usize>,
    /// Right-hand side.
    pub rhs: f64,
}

/// Box-constrained QCQP in max form.
#[derive(Debug, Clone)]
pub struct BoxQcqp {
    /// Linear objective coefficients.
    pub obj_lin: Vec<f64>,
    /// Non-negative quadratic objective coefficients (concavity).
    pub obj_quad: Vec<f64>,
    /// Lower bounds, finite.
    pub lo: Vec<f64>,
    /// Upper bounds, finite.
    pub hi: Vec<f64>,
    /// Coupling rows.
    pub rows: Vec<Row>,
}

/// Solver outcome.
#[derive(Debug, Clone)]
pub struct IpmResult {
    /// Primal iterate, clipped to the box.
    pub x: Vec<f64>,
    /// Final multipliers of the coupling rows.
    pub row_duals: Vec<f64>,
    /// Objective value at `x`.
    pub primal_value: f64,
    /// Valid upper bound on the optimum (weak duality over the box).
    pub certified_bound: f64,
    /// Iterations used.
    pub iterations: usize,
    /// Whether the requested tolerance was reached.
    pub converged: bool,
    /// Worst coupling-row violation at `x`.
    pub max_row_violation: f64,
}

impl BoxQcqp {
    fn n(&self) -> usize {
        self.obj_lin.len()
    }

    /// Objective at a point (max form).
    pub fn objective(&self, x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, &v)| self.obj_lin[i] * v - self.obj_quad[i] * v * v)
            .sum()
    }

    fn row_value(&self, r: &Row, x: &[f64]) -> f64 {
        let mut v = -r.rhs;
        for &(i, c) in &r.lin {
            v += c * x[i];
        }
        for &q in &r.quad {
            v += x[q] * x[q];
        }
        v
    }

    /// Certified upper bound from nonnegative row multipliers: maximize the
    /// Lagrangian over the box, which is separable per coordinate.
    pub fn dual_bound(&self, row_duals: &[f64]) -> f64 {
        let n = self.n();
        let mut lin = self.obj_lin.clone();
        let mut quad = self.obj_quad.clone();
        let mut constant = 0.0;
        for (r, &lam) in self.rows.iter().zip(row_duals) {
            debug_assert!(lam >= 0.0);
            constant += lam * r.rhs;
            for &(i, c) in &r.lin {
                lin[i] -= lam * c;
            }
            for &q in &r.quad {
                quad[q] += lam;
            }
        }
        let mut bound = constant;
        for i in 0..n {
            bound += box_max(lin[i], quad[i], self.lo[i], self.hi[i]);
        }
        bound
    }
}

/// Maximum of `a x - h x^2` over `[lo, hi]` with `h >= 0`.
fn box_max(a: f64, h: f64, lo: f64, hi: f64) -> f64 {
    let eval = |x: f64| a * x - h * x * x;
    if h > 0.0 {
        let x = (a / (2.0 * h)).clamp(lo, hi);
        eval(x)
    } else {
        eval(lo).max(eval(hi))
    }
}

/// Largest step `alpha <= cap` with `v + alpha dv >= 0` componentwise.
fn max_step(v: &[f64], dv: &[f64], cap: f64) -> f64 {
    let mut a = cap;
    for (&vi, &di) in v.iter().zip(dv) {
        if di < 0.0 {
            a = a.min(-vi / di);
        }
    }
    a
}

/// Dense Cholesky factorization (lower), with escalating diagonal
/// regularization on breakdown.
struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    fn factor(mut a: Vec<f64>, n: usize) -> Self {
        let base: f64 = (0..n).map(|i| a[i * n + i]).fold(0.0, f64::max);
        let mut reg = 1e-13 * (1.0 + base);
        loop {
            let mut m = a.clone();
            if Self::try_factor(&mut m, n) {
                return Self { n, l: m };
            }
            for i in 0..n {
                a[i * n + i] += reg;
            }
            reg *= 100.0;
        }
    }

    fn try_factor(a: &mut [f64], n: usize) -> bool {
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= a[j * n + k] * a[j * n + k];
            }
            if d <= 0.0 || !d.is_finite() {
                return false;
            }
            let d = d.sqrt();
            a[j * n + j] = d;
            for i in (j + 1)..n {
                let mut v = a[i * n + j];
                for k in 0..j {
                    v -= a[i * n + k] * a[j * n + k];
                }
                a[i * n + j] = v / d;
            }
        }
        true
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut v = y[i];
            for k in 0..i {
                v -= self.l[i * n + k] * y[k];
            }
            y[i] = v / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut v = y[i];
            for k in (i + 1)..n {
                v -= self.l[k * n + i] * y[k];
            }
            y[i] = v / self.l[i * n + i];
        }
        y
    }
}

/// Solve a [`BoxQcqp`] with a Mehrotra predictor-corrector method.
///
/// `tol` controls the scaled primal/dual residual and complementarity
/// targets; the certified bound in the result is valid even when the
/// tolerance was not reached.
pub fn solve_box_qcqp(p: &BoxQcqp, tol: f64, max_iter: usize) -> IpmResult {
    let n = p.n();
    debug_assert!(p.obj_quad.iter().all(|&c| c >= 0.0));
    debug_assert!(p.lo.iter().zip(&p.hi).all(|(l, h)| l <= h && l.is_finite() && h.is_finite()));

    if p.rows.is_empty() {
        // Pure box problem: closed form.
        let mut x = vec![0.0; n];
        let mut val = 0.0;
        for i in 0..n {
            let xi = if p.obj_quad[i] > 0.0 {
                (p.obj_lin[i] / (2.0 * p.obj_quad[i])).clamp(p.lo[i], p.hi[i])
            } else if p.obj_lin[i] > 0.0 {
                p.hi[i]
            } else {
                p.lo[i]
            };
            x[i] = xi;
            val += p.obj_lin[i] * xi - p.obj_quad[i] * xi * xi;
        }
        return IpmResult {
            x,
            row_duals: Vec::new(),
            primal_value: val,
            certified_bound: val,
            iterations: 0,
            converged: true,
            max_row_violation: 0.0,
        };
    }

    let m_rows = p.rows.len();
    let m = 2 * n + m_rows;

    // Constraint order: x - hi <= 0, lo - x <= 0 per variable, then rows.
    let mut x: Vec<f64> = p.lo.iter().zip(&p.hi).map(|(l, h)| 0.5 * (l + h)).collect();
    let mut s = vec![0.0; m];
    let mut lam = vec![1.0; m];

    let eval_g = |x: &[f64], g: &mut [f64]| {
        for i in 0..n {
            g[2 * i] = x[i] - p.hi[i];
            g[2 * i + 1] = p.lo[i] - x[i];
        }
        for (r, row) in p.rows.iter().enumerate() {
            g[2 * n + r] = p.row_value(row, x);
        }
    };

    let mut g = vec![0.0; m];
    eval_g(&x, &mut g);
    let scale_s: f64 = 1.0
        + p.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max)
        + p.hi.iter().map(|h| h.abs()).fold(0.0, f64::max);
    for i in 0..m {
        s[i] = (-g[i]).max(0.1 * scale_s);
    }

    let rhs_scale: f64 = scale_s;
    let obj_scale: f64 =
        1.0 + p.obj_lin.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let tol_p = tol * rhs_scale;
    let tol_d = tol * obj_scale;
    let tol_mu = tol * (rhs_scale + obj_scale);

    let mut best_bound = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    // Work arrays reused across iterations.
    let mut r_d = vec![0.0; n];
    let mut r_p = vec![0.0; m];
    let mut grad_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m_rows];

    for iter in 0..max_iter {
        iterations = iter + 1;
        eval_g(&x, &mut g);

        // Row gradients at the current point.
        for (r, row) in p.rows.iter().enumerate() {
            let gr = &mut grad_rows[r];
            gr.clear();
            gr.extend(row.lin.iter().copied());
            for &q in &row.quad {
                gr.push((q, 2.0 * x[q]));
            }
        }

        // Dual residual: grad f_min + J^T lambda, with f_min = -objective.
        for i in 0..n {
            r_d[i] = 2.0 * p.obj_quad[i] * x[i] - p.obj_lin[i];
            r_d[i] += lam[2 * i] - lam[2 * i + 1];
        }
        for (r, gr) in grad_rows.iter().enumerate() {
            let l = lam[2 * n + r];
            for &(i, c) in gr {
                r_d[i] += l * c;
            }
        }
        for i in 0..m {
            r_p[i] = g[i] + s[i];
        }
        let mu: f64 = s.iter().zip(&lam).map(|(a, b)| a * b).sum::<f64>() / m as f64;

        best_bound = best_bound.min(p.dual_bound(&lam[2 * n..]));

        let rd_inf = r_d.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let rp_inf = r_p.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if rd_inf <= tol_d && rp_inf <= tol_p && mu <= tol_mu {
            converged = true;
            break;
        }

        // Reduced Newton matrix: W + J^T diag(lam/s) J.
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            let mut w = 2.0 * p.obj_quad[i];
            w += lam[2 * i] / s[2 * i] + lam[2 * i + 1] / s[2 * i + 1];
            a[i * n + i] += w;
        }
        for (r, row) in p.rows.iter().enumerate() {
            let l = lam[2 * n + r];
            // Curvature of the quadratic constraint in the Lagrangian.
            for &q in &row.quad {
                a[q * n + q] += 2.0 * l;
            }
            let d = l / s[2 * n + r];
            let gr = &grad_rows[r];
            for (ai, &(i, ci)) in gr.iter().enumerate() {
                for &(j, cj) in gr.iter().take(ai + 1) {
                    let (hi_idx, lo_idx) = if i >= j { (i, j) } else { (j, i) };
                    a[hi_idx * n + lo_idx] += d * ci * cj;
                    if hi_idx != lo_idx {
                        a[lo_idx * n + hi_idx] += d * ci * cj;
                    }
                }
            }
        }
        let chol = Cholesky::factor(a, n);

        // J delta_x accumulator shared by both solves.
        let jmul = |dx: &[f64], out: &mut [f64]| {
            for i in 0..n {
                out[2 * i] = dx[i];
                out[2 * i + 1] = -dx[i];
            }
            for (r, gr) in grad_rows.iter().enumerate() {
                let mut v = 0.0;
                for &(i, c) in gr {
                    v += c * dx[i];
                }
                out[2 * n + r] = v;
            }
        };

        let solve_step = |chol: &Cholesky,
                          rc: &[f64]|
         -> (Vec<f64>, Vec<f64>, Vec<f64>) {
            // rhs = -r_d + J^T (rc/s - (lam/s) r_p)
            let mut coef = vec![0.0; m];
            for i in 0..m {
                coef[i] = rc[i] / s[i] - lam[i] / s[i] * r_p[i];
            }
            let mut rhs = vec![0.0; n];
            for i in 0..n {
                rhs[i] = -r_d[i] + coef[2 * i] - coef[2 * i + 1];
            }
            for (r, gr) in grad_rows.iter().enumerate() {
                let c = coef[2 * n + r];
                for &(i, ci) in gr {
                    rhs[i] += ci * c;
                }
            }
            let dx = chol.solve(&rhs);
            let mut jdx = vec![0.0; m];
            jmul(&dx, &mut jdx);
            let mut ds = vec![0.0; m];
            let mut dl = vec![0.0; m];
            for i in 0..m {
                ds[i] = -r_p[i] - jdx[i];
                dl[i] = (-rc[i] + lam[i] * r_p[i]) / s[i] + lam[i] / s[i] * jdx[i];
            }
            (dx, ds, dl)
        };

        // Affine predictor.
        let rc_aff: Vec<f64> = s.iter().zip(&lam).map(|(a, b)| a * b).collect();
        let (_dx_a, ds_a, dl_a) = solve_step(&chol, &rc_aff);
        let ap = max_step(&s, &ds_a, 1.0);
        let ad = max_step(&lam, &dl_a, 1.0);
        let mu_aff: f64 = (0..m)
            .map(|i| (s[i] + ap * ds_a[i]) * (lam[i] + ad * dl_a[i]))
            .sum::<f64>()
            / m as f64;
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);

        // Corrector.
        let rc: Vec<f64> = (0..m)
            .map(|i| s[i] * lam[i] - sigma * mu + ds_a[i] * dl_a[i])
            .collect();
        let (dx, ds, dl) = solve_step(&chol, &rc);
        let tau = 0.995;
        let ap = (tau * max_step(&s, &ds, f64::INFINITY)).min(1.0);
        let ad = (tau * max_step(&lam, &dl, f64::INFINITY)).min(1.0);
        for i in 0..n {
            x[i] += ap * dx[i];
        }
        for i in 0..m {
            s[i] += ap * ds[i];
            lam[i] += ad * dl[i];
        }
    }

    eval_g(&x, &mut g);
    best_bound = best_bound.min(p.dual_bound(&lam[2 * n..]));
    for i in 0..n {
        x[i] = x[i].clamp(p.lo[i], p.hi[i]);
    }
    let max_row_violation = p
        .rows
        .iter()
        .map(|r| p.row_value(r, &x).max(0.0))
        .fold(0.0, f64::max);

    IpmResult {
        primal_value: p.objective(&x),
        certified_bound: best_bound,
        row_duals: lam[2 * n..].to_vec(),
        x,
        iterations,
        converged,
        max_row_violation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn box_only_closed_form() {
        let p = BoxQcqp {
            obj_lin: vec![2.0, -1.0, 4.0],
            obj_quad: vec![1.0, 1.0, 0.0],
            lo: vec![0.0, 0.0, 0.0],
            hi: vec![3.0, 3.0, 2.0],
            rows: vec![],
        };
        let r = solve_box_qcqp(&p, 1e-10, 50);
        assert!((r.x[0] - 1.0).abs() < 1e-9);
        assert!((r.x[1] - 0.0).abs() < 1e-9);
        assert!((r.x[2] - 2.0).abs() < 1e-9);
        assert!((r.certified_bound - r.primal_value).abs() < 1e-9);
    }

    #[test]
    fn linear_budget() {
        // maximize x + y s.t. x + y <= 1, box [0, 1]^2.
        let p = BoxQcqp {
            obj_lin: vec![1.0, 1.0],
            obj_quad: vec![0.0, 0.0],
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0],
            rows: vec![Row { lin: vec![(0, 1.0), (1, 1.0)], quad: vec![], rhs: 1.0 }],
        };
        let r = solve_box_qcqp(&p, 1e-10, 60);
        assert!(r.converged);
        assert!((r.primal_value - 1.0).abs() < 1e-7, "value {}", r.primal_value);
        assert!(r.certified_bound >= r.primal_value - 1e-9);
        assert!(r.certified_bound - 1.0 < 1e-7, "bound {}", r.certified_bound);
    }

    #[test]
    fn quadratic_ball_projection() {
        // maximize 3x + 4y s.t. x^2 + y^2 <= 1, box [0, 2]^2.
        // Optimum at (3/5, 4/5), value 5.
        let p = BoxQcqp {
            obj_lin: vec![3.0, 4.0],
            obj_quad: vec![0.0, 0.0],
            lo: vec![0.0, 0.0],
            hi: vec![2.0, 2.0],
            rows: vec![Row { lin: vec![], quad: vec![0, 1], rhs: 1.0 }],
        };
        let r = solve_box_qcqp(&p, 1e-10, 60);
        assert!(r.converged);
        assert!((r.x[0] - 0.6).abs() < 1e-6);
        assert!((r.x[1] - 0.8).abs() < 1e-6);
        assert!((r.certified_bound - 5.0).abs() < 1e-6);
    }

    #[test]
    fn bound_is_valid_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let n = rng.gen_range(2..8);
            let p = BoxQcqp {
                obj_lin: (0..n).map(|_| rng.gen::<f64>() * 4.0 - 1.0).collect(),
                obj_quad: (0..n).map(|_| rng.gen::<f64>()).collect(),
                lo: vec![0.0; n],
                hi: (0..n).map(|_| 0.5 + rng.gen::<f64>() * 2.0).collect(),
                rows: vec![
                    Row {
                        lin: (0..n).map(|i| (i, rng.gen::<f64>())).collect(),
                        quad: vec![],
                        rhs: 1.0 + rng.gen::<f64>(),
                    },
                    Row { lin: vec![], quad: (0..n).collect(), rhs: 1.0 + rng.gen::<f64>() },
                ],
            };
            let r = solve_box_qcqp(&p, 1e-10, 60);
            // Monte-Carlo feasible points never beat the certified bound.
            for _ in 0..200 {
                let mut x: Vec<f64> =
                    (0..n).map(|i| rng.gen::<f64>() * p.hi[i]).collect();
                for row in &p.rows {
                    let mut v = p.row_value(row, &x);
                    let mut guard = 0;
                    while v > 0.0 && guard < 60 {
                        for xi in &mut x {
                            *xi *= 0.8;
                        }
                        v = p.row_value(row, &x);
                        guard += 1;
                    }
                }
                let val = p.objective(&x);
                assert!(
                    val <= r.certified_bound + 1e-7 * (1.0 + val.abs()),
                    "feasible value {val} beats bound {}",
                    r.certified_bound
                );
            }
            assert!(
                r.certified_bound >= r.primal_value - 1e-6 * (1.0 + r.primal_value.abs())
            );
        }
    }

    #[test]
    fn gap_closes_on_well_posed_instance() {
        let p = BoxQcqp {
            obj_lin: vec![1.0, 2.0, 0.5, 1.5],
            obj_quad: vec![0.3, 0.1, 0.0, 0.7],
            lo: vec![0.0; 4],
            hi: vec![2.0; 4],
            rows: vec![
                Row { lin: vec![(0, 1.0), (1, 1.0), (2, 1.0)], quad: vec![], rhs: 2.5 },
                Row { lin: vec![(2, -1.0), (3, 1.0)], quad: vec![], rhs: 0.5 },
                Row { lin: vec![], quad: vec![0, 3], rhs: 2.0 },
            ],
        };
        let r = solve_box_qcqp(&p, 1e-10, 80);
        assert!(r.converged, "did not converge");
        let gap = r.certified_bound - r.primal_value;
        assert!(gap.abs() < 1e-7, "gap {gap}");
        assert!(r.max_row_violation < 1e-8);
    }
}
