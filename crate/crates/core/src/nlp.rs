//! Sequential quadratic programming for small dense nonlinear programs.
//!
//! The solver handles
//! ```text
//!     minimize    F(z)
//!     subject to  c_eq(z) = 0,   c_in(z) <= 0,   lb <= z <= ub
//! ```
//! with exact Lagrangian Hessians supplied by the problem. Indefinite
//! Hessians are shifted by a Levenberg parameter until they factor, the
//! quadratic subproblem is solved by the dual active-set method in
//! [`crate::qp`], and steps are globalized by a backtracking line search on
//! an L1 merit function. Equality feasibility is driven to 1e-10 so that
//! multiple-shooting defects meet the trajectory-consistency contract.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{dot, norm_inf, Mat};
use crate::qp::{self, QpError};

/// Dense NLP with callbacks for values and derivatives.
pub trait NlpProblem {
    fn num_vars(&self) -> usize;
    fn num_eq(&self) -> usize;
    fn num_ineq(&self) -> usize;
    fn bounds(&self) -> (&[f64], &[f64]);
    fn objective(&self, z: &[f64]) -> f64;
    fn gradient(&self, z: &[f64], out: &mut [f64]);
    fn eq_constraints(&self, z: &[f64], out: &mut [f64]);
    fn ineq_constraints(&self, z: &[f64], out: &mut [f64]);
    fn eq_jacobian(&self, z: &[f64], out: &mut Mat);
    fn ineq_jacobian(&self, z: &[f64], out: &mut Mat);
    fn lagrangian_hessian(&self, z: &[f64], eq_mult: &[f64], ineq_mult: &[f64], out: &mut Mat);
}

#[derive(Clone, Debug)]
pub struct SqpOptions {
    pub kkt_tol: f64,
    /// Feasibility tolerance for equality constraints (dynamics defects).
    pub eq_tol: f64,
    pub max_iter: usize,
}

impl Default for SqpOptions {
    fn default() -> Self {
        SqpOptions {
            kkt_tol: 1e-8,
            eq_tol: 1e-10,
            max_iter: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SqpStatus {
    Solved,
    MaxIter,
    QpInfeasible,
    LineSearchFailure,
}

#[derive(Clone, Debug)]
pub struct SqpResult {
    pub z: Vec<f64>,
    pub objective: f64,
    pub eq_multipliers: Vec<f64>,
    pub ineq_multipliers: Vec<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub status: SqpStatus,
}

struct Eval {
    obj: f64,
    grad: Vec<f64>,
    ceq: Vec<f64>,
    cin: Vec<f64>,
    jeq: Mat,
    jin: Mat,
}

fn evaluate(p: &impl NlpProblem, z: &[f64]) -> Eval {
    let (n, me, mi) = (p.num_vars(), p.num_eq(), p.num_ineq());
    let mut e = Eval {
        obj: p.objective(z),
        grad: vec![0.0; n],
        ceq: vec![0.0; me],
        cin: vec![0.0; mi],
        jeq: Mat::zeros(me, n),
        jin: Mat::zeros(mi, n),
    };
    p.gradient(z, &mut e.grad);
    p.eq_constraints(z, &mut e.ceq);
    p.ineq_constraints(z, &mut e.cin);
    p.eq_jacobian(z, &mut e.jeq);
    p.ineq_jacobian(z, &mut e.jin);
    e
}

fn infeasibility(ceq: &[f64], cin: &[f64]) -> f64 {
    let mut v = 0.0;
    for c in ceq {
        v += crate::fmath::abs(*c);
    }
    for c in cin {
        v += c.max(0.0);
    }
    v
}

fn merit(obj: f64, infeas: f64, penalty: f64) -> f64 {
    if obj.is_nan() {
        f64::INFINITY
    } else {
        obj + penalty * infeas
    }
}

/// KKT residual pieces: (stationarity, primal eq, primal ineq, complementarity).
fn kkt_residual(
    e: &Eval,
    lam: &[f64],
    mu: &[f64],
    mu_lb: &[f64],
    mu_ub: &[f64],
) -> (f64, f64, f64, f64) {
    let n = e.grad.len();
    let mut stat = e.grad.clone();
    for (k, l) in lam.iter().enumerate() {
        crate::linalg::axpy(*l, e.jeq.row(k), &mut stat);
    }
    for (k, m) in mu.iter().enumerate() {
        crate::linalg::axpy(*m, e.jin.row(k), &mut stat);
    }
    for i in 0..n {
        stat[i] += mu_ub[i] - mu_lb[i];
    }
    let p_eq = norm_inf(&e.ceq);
    let p_in = e.cin.iter().fold(0.0_f64, |m, c| m.max(c.max(0.0)));
    let mut comp = 0.0_f64;
    for (k, m) in mu.iter().enumerate() {
        comp = comp.max(crate::fmath::abs(m * e.cin[k]));
    }
    (norm_inf(&stat), p_eq, p_in, comp)
}

pub fn solve_sqp(p: &impl NlpProblem, z0: &[f64], opts: &SqpOptions) -> SqpResult {
    let n = p.num_vars();
    let me = p.num_eq();
    let mi = p.num_ineq();
    let (lb, ub) = p.bounds();

    let mut z: Vec<f64> = z0
        .iter()
        .enumerate()
        .map(|(i, v)| v.clamp(lb[i], ub[i]))
        .collect();
    let mut lam = vec![0.0; me];
    let mut mu = vec![0.0; mi];
    let mut mu_lb = vec![0.0; n];
    let mut mu_ub = vec![0.0; n];
    let mut penalty: f64 = 1.0;
    let mut tau = 0.0; // Levenberg shift carried between iterations
    let mut hess = Mat::zeros(n, n);

    let mut status = SqpStatus::MaxIter;
    let mut iterations = 0;
    let mut e = evaluate(p, &z);

    for iter in 0..opts.max_iter {
        iterations = iter;
        let (stat, p_eq, p_in, comp) = kkt_residual(&e, &lam, &mu, &mu_lb, &mu_ub);
        if stat <= opts.kkt_tol
            && p_eq <= opts.eq_tol
            && p_in <= opts.kkt_tol
            && comp <= opts.kkt_tol * 10.0
        {
            status = SqpStatus::Solved;
            break;
        }

        p.lagrangian_hessian(&z, &lam, &mu, &mut hess);
        let scale = hess.max_abs().max(1.0);
        tau = tau / 4.0;
        let gchol = loop {
            let mut shifted = hess.clone();
            if tau > 0.0 {
                shifted.add_diagonal(tau);
            }
            match shifted.symmetrized().cholesky() {
                Some(c) => break c,
                None => {
                    tau = if tau == 0.0 { 1e-8 * scale } else { tau * 10.0 };
                    if tau > 1e12 * scale {
                        // Cannot happen for finite Hessians; bail out safely.
                        return SqpResult {
                            z,
                            objective: e.obj,
                            eq_multipliers: lam,
                            ineq_multipliers: mu,
                            kkt_residual: stat.max(p_eq).max(p_in),
                            iterations,
                            status: SqpStatus::MaxIter,
                        };
                    }
                }
            }
        };

        // QP data: equality rows from the linearized defects, inequality rows
        // from linearized constraints plus the variable bounds.
        let eq_rhs: Vec<f64> = e.ceq.iter().map(|c| -c).collect();
        let total_in = mi + 2 * n;
        let mut amat = Mat::zeros(total_in, n);
        let mut bvec = vec![0.0; total_in];
        for k in 0..mi {
            amat.row_mut(k).copy_from_slice(e.jin.row(k));
            bvec[k] = -e.cin[k];
        }
        for i in 0..n {
            amat.set(mi + i, i, 1.0);
            bvec[mi + i] = ub[i] - z[i];
            amat.set(mi + n + i, i, -1.0);
            bvec[mi + n + i] = z[i] - lb[i];
        }

        let qp_sol = match qp::solve_qp(
            &gchol,
            &e.grad,
            if me > 0 { Some((&e.jeq, &eq_rhs)) } else { None },
            Some((&amat, &bvec)),
            200 + 10 * (n + total_in),
        ) {
            Ok(s) => s,
            Err(QpError::Infeasible) => {
                status = SqpStatus::QpInfeasible;
                break;
            }
            Err(_) => {
                status = SqpStatus::MaxIter;
                break;
            }
        };

        let d = qp_sol.d;
        let new_lam = qp_sol.eq_multipliers;
        let new_mu: Vec<f64> = qp_sol.ineq_multipliers[..mi].to_vec();
        let new_mu_ub: Vec<f64> = qp_sol.ineq_multipliers[mi..mi + n].to_vec();
        let new_mu_lb: Vec<f64> = qp_sol.ineq_multipliers[mi + n..].to_vec();

        let mult_max = norm_inf(&new_lam)
            .max(norm_inf(&new_mu))
            .max(norm_inf(&new_mu_lb))
            .max(norm_inf(&new_mu_ub));
        penalty = penalty.max(1.5 * mult_max + 1.0);

        let infeas0 = infeasibility(&e.ceq, &e.cin);
        let merit0 = merit(e.obj, infeas0, penalty);
        // Upper bound on the merit directional derivative.
        let ddir = dot(&e.grad, &d) - penalty * infeas0;

        let step_norm = norm_inf(&d);
        if step_norm <= 1e-14 * (1.0 + norm_inf(&z)) {
            // Stationary to numerical precision; adopt multipliers and let the
            // convergence test decide next iteration.
            lam = new_lam;
            mu = new_mu;
            mu_lb = new_mu_lb;
            mu_ub = new_mu_ub;
            let (stat2, p_eq2, p_in2, comp2) = kkt_residual(&e, &lam, &mu, &mu_lb, &mu_ub);
            if stat2 <= opts.kkt_tol
                && p_eq2 <= opts.eq_tol
                && p_in2 <= opts.kkt_tol
                && comp2 <= opts.kkt_tol * 10.0
            {
                status = SqpStatus::Solved;
            } else {
                status = SqpStatus::MaxIter;
            }
            break;
        }

        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let zt: Vec<f64> = z
                .iter()
                .zip(&d)
                .enumerate()
                .map(|(i, (zi, di))| (zi + alpha * di).clamp(lb[i], ub[i]))
                .collect();
            let obj_t = p.objective(&zt);
            let mut ceq_t = vec![0.0; me];
            let mut cin_t = vec![0.0; mi];
            p.eq_constraints(&zt, &mut ceq_t);
            p.ineq_constraints(&zt, &mut cin_t);
            let merit_t = merit(obj_t, infeasibility(&ceq_t, &cin_t), penalty);
            if merit_t <= merit0 + 1e-4 * alpha * ddir || merit_t < merit0 - 1e-14 * merit0.abs() {
                z = zt;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            status = SqpStatus::LineSearchFailure;
            break;
        }

        lam = new_lam;
        mu = new_mu;
        mu_lb = new_mu_lb;
        mu_ub = new_mu_ub;
        e = evaluate(p, &z);
    }

    let (stat, p_eq, p_in, _) = kkt_residual(&e, &lam, &mu, &mu_lb, &mu_ub);
    SqpResult {
        z,
        objective: e.obj,
        eq_multipliers: lam,
        ineq_multipliers: mu,
        kkt_residual: stat.max(p_eq).max(p_in),
        iterations,
        status,
    }
}
