//! Dense convex quadratic programming by a dual active-set method.
//!
//! Solves
//! ```text
//!     minimize    1/2 dᵀ G d + gᵀ d
//!     subject to  E d  = e
//!                 A d <= b
//! ```
//! for strictly convex `G` (the SQP layer regularizes indefinite Hessians
//! before calling in). The method starts from the equality-constrained
//! minimizer and adds the most violated inequality one at a time, taking
//! combined primal/dual steps and dropping blocking constraints whose
//! multipliers reach zero. No primal-feasible starting point is required,
//! and infeasibility is detected when a violated constraint admits neither
//! a primal step nor a droppable blocker.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{axpy, dot, Cholesky, Mat};

#[derive(Clone, Debug, PartialEq)]
pub enum QpError {
    /// The equality rows are linearly dependent.
    DependentEqualities,
    /// No point satisfies all constraints.
    Infeasible,
    /// Active-set loop exceeded its iteration budget.
    IterationLimit,
}

impl core::fmt::Display for QpError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            QpError::DependentEqualities => write!(f, "equality constraints are linearly dependent"),
            QpError::Infeasible => write!(f, "quadratic program is infeasible"),
            QpError::IterationLimit => write!(f, "active-set iteration limit reached"),
        }
    }
}

impl core::error::Error for QpError {}

#[derive(Clone, Debug)]
pub struct QpSolution {
    pub d: Vec<f64>,
    /// Multipliers of the equality rows (sign-free), stationarity
    /// convention `G d + g + Eᵀλ + Aᵀμ = 0`.
    pub eq_multipliers: Vec<f64>,
    /// Multipliers of the inequality rows, nonnegative, zero off the
    /// active set.
    pub ineq_multipliers: Vec<f64>,
    pub iterations: usize,
}

struct WorkingSet<'a> {
    eq: Option<(&'a Mat, &'a [f64])>,
    ineq: Option<(&'a Mat, &'a [f64])>,
    /// Indices into the inequality rows currently held active.
    active: Vec<usize>,
    /// Columns `G⁻¹ cᵢᵀ` for every working row (equalities first).
    ycols: Vec<Vec<f64>>,
    /// Schur complement `C G⁻¹ Cᵀ` and its factor.
    schur: Mat,
    schol: Option<Cholesky>,
    n_eq: usize,
}

impl<'a> WorkingSet<'a> {
    fn len(&self) -> usize {
        self.n_eq + self.active.len()
    }

    fn row(&self, k: usize) -> &[f64] {
        if k < self.n_eq {
            self.eq.expect("eq present").0.row(k)
        } else {
            self.ineq.expect("ineq present").0.row(self.active[k - self.n_eq])
        }
    }

    fn rhs(&self, k: usize) -> f64 {
        if k < self.n_eq {
            self.eq.expect("eq present").1[k]
        } else {
            self.ineq.expect("ineq present").1[self.active[k - self.n_eq]]
        }
    }

    fn refactor(&mut self) -> bool {
        let m = self.len();
        self.schur = Mat::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v = dot(self.row(i), &self.ycols[j]);
                self.schur.set(i, j, v);
                self.schur.set(j, i, v);
            }
        }
        match self.schur.cholesky() {
            Some(c) => {
                self.schol = Some(c);
                true
            }
            None => false,
        }
    }

    /// `C v` over the working rows.
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|k| dot(self.row(k), v)).collect()
    }

    /// `Y r` accumulated into a fresh vector of length `n`.
    fn ymul(&self, r: &[f64], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (col, rk) in self.ycols.iter().zip(r) {
            axpy(*rk, col, &mut out);
        }
        out
    }
}

/// Solves the QP given a Cholesky factor of the (already regularized)
/// Hessian `G`.
pub fn solve_qp(
    gchol: &Cholesky,
    grad: &[f64],
    eq: Option<(&Mat, &[f64])>,
    ineq: Option<(&Mat, &[f64])>,
    max_iter: usize,
) -> Result<QpSolution, QpError> {
    let n = grad.len();
    debug_assert_eq!(gchol.dim(), n);
    let n_eq = eq.map_or(0, |(m, _)| m.rows());
    let n_in = ineq.map_or(0, |(m, _)| m.rows());

    let mut work = WorkingSet {
        eq,
        ineq,
        active: Vec::new(),
        ycols: Vec::with_capacity(n_eq + 8),
        schur: Mat::zeros(0, 0),
        schol: None,
        n_eq,
    };

    // G⁻¹ g reused throughout.
    let ginv_g = gchol.solve(grad);

    // Seed the working set with every equality row.
    for k in 0..n_eq {
        let col = gchol.solve(work.row(k));
        work.ycols.push(col);
    }
    if n_eq > 0 && !work.refactor() {
        return Err(QpError::DependentEqualities);
    }

    // Equality-constrained minimizer and its multipliers.
    let mut d: Vec<f64>;
    let mut nu: Vec<f64>;
    if n_eq > 0 {
        let mut rhs: Vec<f64> = (0..n_eq).map(|k| work.rhs(k) + dot(work.row(k), &ginv_g)).collect();
        work.schol.as_ref().expect("factored").solve_into(&mut rhs);
        for v in &mut rhs {
            *v = -*v;
        }
        nu = rhs;
        let y_nu = work.ymul(&nu, n);
        d = ginv_g.iter().zip(&y_nu).map(|(a, b)| -a - b).collect();
    } else {
        d = ginv_g.iter().map(|v| -v).collect();
        nu = Vec::new();
    }

    if n_in == 0 {
        return Ok(QpSolution {
            d,
            eq_multipliers: nu,
            ineq_multipliers: Vec::new(),
            iterations: 0,
        });
    }

    let (amat, bvec) = ineq.expect("checked above");
    let mut iterations = 0usize;

    loop {
        // Most violated inactive inequality.
        let mut p = usize::MAX;
        let mut worst = 0.0;
        for i in 0..n_in {
            if work.active.contains(&i) {
                continue;
            }
            let v = dot(amat.row(i), &d) - bvec[i];
            let tol = 1e-10 * (1.0 + bvec[i].abs().max(crate::linalg::norm_inf(&d)));
            if v > tol && v > worst {
                worst = v;
                p = i;
            }
        }
        if p == usize::MAX {
            let mut mu = vec![0.0; n_in];
            for (slot, idx) in work.active.iter().enumerate() {
                mu[*idx] = nu[n_eq + slot].max(0.0);
            }
            nu.truncate(n_eq);
            return Ok(QpSolution {
                d,
                eq_multipliers: nu,
                ineq_multipliers: mu,
                iterations,
            });
        }

        let nplus = amat.row(p);
        let w = gchol.solve(nplus);
        let mut mu_p = 0.0;

        // Inner loop: step toward satisfying p, dropping blockers as needed.
        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(QpError::IterationLimit);
            }

            let (r, z) = if work.len() > 0 {
                let cw = work.apply(&w);
                let r = work.schol.as_ref().expect("factored").solve(&cw);
                let yr = work.ymul(&r, n);
                let z: Vec<f64> = w.iter().zip(&yr).map(|(a, b)| a - b).collect();
                (r, z)
            } else {
                (Vec::new(), w.clone())
            };

            let kappa = dot(nplus, &z);
            let viol = dot(nplus, &d) - bvec[p];
            if viol <= 1e-11 * (1.0 + bvec[p].abs()) {
                // Satisfied while dropping blockers; fold the accumulated
                // multiplier in as an active row if it is meaningful.
                if mu_p > 0.0 {
                    work.active.push(p);
                    work.ycols.push(w.clone());
                    nu.push(mu_p);
                    if !work.refactor() {
                        return Err(QpError::IterationLimit);
                    }
                }
                break;
            }

            let kappa_floor = 1e-12 * (1.0 + crate::linalg::norm_inf(nplus));
            let t_full = if kappa > kappa_floor { viol / kappa } else { f64::INFINITY };

            let mut t_dual = f64::INFINITY;
            let mut blocker = usize::MAX;
            for (slot, _) in work.active.iter().enumerate() {
                let rk = r[n_eq + slot];
                if rk > 1e-12 {
                    let ratio = nu[n_eq + slot] / rk;
                    if ratio < t_dual {
                        t_dual = ratio;
                        blocker = slot;
                    }
                }
            }

            let t = t_full.min(t_dual);
            if !t.is_finite() {
                return Err(QpError::Infeasible);
            }

            for (di, zi) in d.iter_mut().zip(&z) {
                *di -= t * zi;
            }
            for (nk, rk) in nu.iter_mut().zip(&r) {
                *nk -= t * rk;
            }
            mu_p += t;

            if t_full <= t_dual {
                work.active.push(p);
                work.ycols.push(w.clone());
                nu.push(mu_p);
                if !work.refactor() {
                    return Err(QpError::IterationLimit);
                }
                break;
            } else {
                let k = n_eq + blocker;
                work.active.remove(blocker);
                work.ycols.remove(k);
                nu.remove(k);
                if work.len() > 0 && !work.refactor() {
                    return Err(QpError::IterationLimit);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat;

    fn ident_chol(n: usize) -> Cholesky {
        Mat::identity(n).cholesky().unwrap()
    }

    #[test]
    fn unconstrained_minimum() {
        let g = [2.0, -4.0];
        let sol = solve_qp(&ident_chol(2), &g, None, None, 100).unwrap();
        assert!((sol.d[0] + 2.0).abs() < 1e-12);
        assert!((sol.d[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn known_inequality_solution() {
        // minimize 1/2 x² + 1/2 y² + x  s.t.  x + 2y >= 1, i.e. -x - 2y <= -1.
        let a = Mat::from_rows(&[&[-1.0, -2.0]]);
        let b = [-1.0];
        let g = [1.0, 0.0];
        let sol = solve_qp(&ident_chol(2), &g, None, Some((&a, &b)), 100).unwrap();
        assert!((sol.d[0] + 0.6).abs() < 1e-10, "{:?}", sol.d);
        assert!((sol.d[1] - 0.8).abs() < 1e-10, "{:?}", sol.d);
        assert!(sol.ineq_multipliers[0] > 0.0);
    }

    #[test]
    fn equality_and_bounds() {
        // minimize 1/2||d||² + gᵀd  s.t.  d0 + d1 = 1,  d0 <= 0.2.
        let e = Mat::from_rows(&[&[1.0, 1.0]]);
        let ev = [1.0];
        let a = Mat::from_rows(&[&[1.0, 0.0]]);
        let b = [0.2];
        let g = [0.0, 0.0];
        let sol = solve_qp(&ident_chol(2), &g, Some((&e, &ev)), Some((&a, &b)), 100).unwrap();
        assert!((sol.d[0] - 0.2).abs() < 1e-10);
        assert!((sol.d[1] - 0.8).abs() < 1e-10);
        // Stationarity: d + Eᵀλ + Aᵀμ = 0.
        let lam = sol.eq_multipliers[0];
        let mu = sol.ineq_multipliers[0];
        assert!((sol.d[0] + lam + mu).abs() < 1e-10);
        assert!((sol.d[1] + lam).abs() < 1e-10);
        assert!(mu >= 0.0);
    }

    #[test]
    fn detects_infeasible_constraints() {
        // d0 <= -1 and -d0 <= -2 (d0 >= 2) cannot both hold.
        let a = Mat::from_rows(&[&[1.0], &[-1.0]]);
        let b = [-1.0, -2.0];
        let g = [0.0];
        let err = solve_qp(&ident_chol(1), &g, None, Some((&a, &b)), 100).unwrap_err();
        assert_eq!(err, QpError::Infeasible);
    }

    #[test]
    fn pinned_variable_conflicts_with_bound() {
        // Equality d0 = -3 with bound d0 <= -4 unsatisfiable.
        let e = Mat::from_rows(&[&[1.0]]);
        let ev = [-3.0];
        let a = Mat::from_rows(&[&[1.0]]);
        let b = [-4.0];
        let g = [0.0];
        let err = solve_qp(&ident_chol(1), &g, Some((&e, &ev)), Some((&a, &b)), 100).unwrap_err();
        assert_eq!(err, QpError::Infeasible);
    }

    #[test]
    fn random_boxes_satisfy_kkt() {
        // Random diagonal-dominant G, random bounds; verify KKT directly.
        let mut rng = crate::rng::DeterministicRng::new(7);
        for _case in 0..50 {
            let n = 4;
            let mut gm = Mat::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let v = rng.uniform(-0.3, 0.3);
                    gm.add_to(i, j, v);
                    gm.add_to(j, i, v);
                }
                gm.add_to(i, i, 2.0);
            }
            let chol = gm.cholesky().unwrap();
            let g: Vec<f64> = (0..n).map(|_| rng.uniform(-2.0, 2.0)).collect();
            // Box |d_i| <= 0.5 as general rows.
            let mut rows = Mat::zeros(2 * n, n);
            let mut b = vec![0.5; 2 * n];
            for i in 0..n {
                rows.set(i, i, 1.0);
                rows.set(n + i, i, -1.0);
                b[i] = 0.5;
                b[n + i] = 0.5;
            }
            let sol = solve_qp(&chol, &g, None, Some((&rows, &b)), 500).unwrap();
            // Primal feasibility.
            for i in 0..n {
                assert!(sol.d[i] <= 0.5 + 1e-9 && sol.d[i] >= -0.5 - 1e-9);
            }
            // Stationarity G d + g + Aᵀμ = 0.
            let gd = gm.matvec(&sol.d);
            let atmu = rows.tr_matvec(&sol.ineq_multipliers);
            for i in 0..n {
                assert!(
                    (gd[i] + g[i] + atmu[i]).abs() < 1e-8,
                    "stationarity violated: {}",
                    gd[i] + g[i] + atmu[i]
                );
            }
            // Complementarity.
            for (k, mu) in sol.ineq_multipliers.iter().enumerate() {
                assert!(*mu >= -1e-12);
                let slack = b[k] - dot(rows.row(k), &sol.d);
                assert!(mu * slack < 1e-8);
            }
        }
    }
}
