//! Finite-horizon parametric optimal control.
//!
//! The value-function approximator is the program
//! ```text
//!     V(s)   = min  −λ(s) + T(x_N) + Σ_{k<N} ℓ̂(x_k, u_k)
//!     s.t.   x_0 = s,  x_{k+1} = f(x_k, u_k),  h(x_k, u_k) ≤ 0,
//!            x_k ∈ X,  u_k ∈ U
//! ```
//! and its action-value variant pins the first input, `u_0 = a`. The
//! transcription is direct multiple shooting: every state and input is a
//! decision variable and the dynamics enter as equality constraints, which
//! keeps KKT residuals observable and makes the fixed-primal parameter
//! gradient a plain sum of cost-term gradients along the solution.
//!
//! `Ψ` and `Λ` are the same programs without the `−λ(s)` offset; they
//! satisfy `Λ^N(s,a) = ℓ̂(s,a) + Ψ^{N−1}(f(s,a))`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::approx::ParamSet;
use crate::linalg::Mat;
use crate::nlp::{self, NlpProblem, SqpOptions, SqpStatus};
use crate::problem::ProblemDefinition;
use crate::rng;

#[derive(Clone, Debug, PartialEq)]
pub enum OcpError {
    /// No trajectory satisfies the constraints (bad initial state, pinned
    /// input outside its box, or the solver proved the program infeasible).
    Infeasible,
    /// Iteration budget exhausted before reaching the KKT tolerance.
    MaxIter { kkt_residual: f64 },
}

impl core::fmt::Display for OcpError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            OcpError::Infeasible => write!(f, "optimal-control program is infeasible"),
            OcpError::MaxIter { kkt_residual } => {
                write!(f, "solver hit the iteration cap at KKT residual {kkt_residual}")
            }
        }
    }
}

impl core::error::Error for OcpError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OcpStatus {
    Solved,
    Infeasible,
    MaxIter,
}

#[derive(Clone, Debug)]
pub struct OcpConfig {
    pub horizon: usize,
    pub kkt_tol: f64,
    pub max_iter: usize,
    /// Cold-start attempts per solve when no warm guess is supplied.
    pub multi_starts: usize,
    /// Seed for the randomized cold start (mixed with the problem data so
    /// identical solves stay bitwise identical).
    pub seed: u64,
}

impl Default for OcpConfig {
    fn default() -> Self {
        OcpConfig {
            horizon: 20,
            kkt_tol: 1e-8,
            max_iter: 200,
            multi_starts: 3,
            seed: 0,
        }
    }
}

/// Primal trajectory with objective and fixed-primal parameter gradient.
#[derive(Clone, Debug)]
pub struct OcpSolution {
    pub x_traj: Vec<Vec<f64>>,
    pub u_traj: Vec<Vec<f64>>,
    pub objective: f64,
    /// ∂(objective)/∂θ at the fixed primal minimizer.
    pub theta_gradient: Vec<f64>,
    pub kkt_residual: f64,
    pub status: OcpStatus,
    /// Whether the `−λ(s)` offset is part of the objective.
    pub includes_storage: bool,
}

/// Warm-start trajectory.
#[derive(Clone, Debug)]
pub struct InitialGuess {
    pub x: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
}

impl InitialGuess {
    pub fn from_solution(sol: &OcpSolution) -> Self {
        InitialGuess {
            x: sol.x_traj.clone(),
            u: sol.u_traj.clone(),
        }
    }

    /// Shifts the trajectory one stage forward for the successor state,
    /// repeating the final stage.
    pub fn shifted(sol: &OcpSolution, new_s0: &[f64]) -> Self {
        let n_stages = sol.u_traj.len();
        let mut x = Vec::with_capacity(sol.x_traj.len());
        x.push(new_s0.to_vec());
        for k in 2..=n_stages {
            x.push(sol.x_traj[k].clone());
        }
        x.push(sol.x_traj[n_stages].clone());
        if x.len() < sol.x_traj.len() {
            x.push(sol.x_traj[n_stages].clone());
        }
        let mut u = Vec::with_capacity(n_stages);
        for k in 1..n_stages {
            u.push(sol.u_traj[k].clone());
        }
        u.push(sol.u_traj[n_stages - 1].clone());
        InitialGuess { x, u }
    }
}

struct Transcription<'a> {
    problem: &'a ProblemDefinition,
    params: &'a ParamSet,
    horizon: usize,
    s0: &'a [f64],
    pinned: Option<&'a [f64]>,
    include_storage: bool,
    lb: Vec<f64>,
    ub: Vec<f64>,
}

impl<'a> Transcription<'a> {
    fn new(
        problem: &'a ProblemDefinition,
        params: &'a ParamSet,
        horizon: usize,
        s0: &'a [f64],
        pinned: Option<&'a [f64]>,
        include_storage: bool,
    ) -> Self {
        let n = problem.state_dim();
        let m = problem.input_dim();
        let nz = (horizon + 1) * n + horizon * m;
        let (slo, shi) = problem.state_box();
        let (ilo, ihi) = problem.input_box();
        let mut lb = vec![0.0; nz];
        let mut ub = vec![0.0; nz];
        for k in 0..=horizon {
            let off = Self::x_off(n, m, k);
            lb[off..off + n].copy_from_slice(slo);
            ub[off..off + n].copy_from_slice(shi);
        }
        for k in 0..horizon {
            let off = Self::u_off(n, m, k);
            lb[off..off + m].copy_from_slice(ilo);
            ub[off..off + m].copy_from_slice(ihi);
        }
        Transcription {
            problem,
            params,
            horizon,
            s0,
            pinned,
            include_storage,
            lb,
            ub,
        }
    }

    #[inline]
    fn x_off(n: usize, m: usize, k: usize) -> usize {
        k * (n + m)
    }

    #[inline]
    fn u_off(n: usize, m: usize, k: usize) -> usize {
        k * (n + m) + n
    }

    fn x<'b>(&self, z: &'b [f64], k: usize) -> &'b [f64] {
        let n = self.problem.state_dim();
        let off = Self::x_off(n, self.problem.input_dim(), k);
        &z[off..off + n]
    }

    fn u<'b>(&self, z: &'b [f64], k: usize) -> &'b [f64] {
        let n = self.problem.state_dim();
        let m = self.problem.input_dim();
        let off = Self::u_off(n, m, k);
        &z[off..off + m]
    }

    fn storage_offset(&self) -> f64 {
        if self.include_storage {
            -self.params.storage_value(self.s0)
        } else {
            0.0
        }
    }
}

impl<'a> NlpProblem for Transcription<'a> {
    fn num_vars(&self) -> usize {
        let n = self.problem.state_dim();
        let m = self.problem.input_dim();
        (self.horizon + 1) * n + self.horizon * m
    }

    fn num_eq(&self) -> usize {
        let n = self.problem.state_dim();
        let m = self.problem.input_dim();
        n + self.horizon * n + if self.pinned.is_some() { m } else { 0 }
    }

    fn num_ineq(&self) -> usize {
        self.horizon * self.problem.num_constraints()
    }

    fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lb, &self.ub)
    }

    fn objective(&self, z: &[f64]) -> f64 {
        let mut total = self.storage_offset();
        for k in 0..self.horizon {
            total += self.params.stage_value(self.x(z, k), self.u(z, k));
        }
        total + self.params.terminal_value(self.x(z, self.horizon))
    }

    fn gradient(&self, z: &[f64], out: &mut [f64]) {
        let n = self.problem.state_dim();
        let m = self.problem.input_dim();
        for v in out.iter_mut() {
            *v = 0.0;
        }
        for k in 0..self.horizon {
            let g = self.params.stage_sa_gradient(self.x(z, k), self.u(z, k));
            let off = Self::x_off(n, m, k);
            for (i, gi) in g.iter().enumerate() {
                out[off + i] += gi;
            }
        }
        let gt = self.params.terminal_state_gradient(self.x(z, self.horizon));
        let off = Self::x_off(n, m, self.horizon);
        for (i, gi) in gt.iter().enumerate() {
            out[off + i] += gi;
        }
    }

    fn eq_constraints(&self, z: &[f64], out: &mut [f64]) {
        let n = self.problem.state_dim();
        let m = self.problem.input_dim();
        for i in 0..n {
            out[i] = self.x(z, 0)[i] - self.s0[i];
        }
        for k in 0..self.horizon {
            let next = self.problem.dynamics(self.x(z, k), self.u(z, k));
            let row = n + k * n;
            for i in 0..n {
                out[row + i] = self.x(z, k + 1)[i] - next[i];
            }
        }
        if let Some(a) = self.pinned {
            let row = n + self.horizon * n;
            for j in 0..m {
                out[row + j] = self.u(z, 0)[j] - a[j];
            }
        }
    }

    fn ineq_constraints(&self, z: &[f64], out: &mut [f64]) {
        let nh = self.problem.num_constraints();
        for k in 0..self.horizon {
            let h = self.problem.constraint_values(self.x(z, k), self.u(z, k));
            out[k * nh..(k + 1) * nh].copy_from_slice(&h);
        }
    }

    fn eq_jacobian(&self, z: &[f64], out: &mut Mat) {
        let n = self.problem.state_dim();
        let m = self.problem.input_dim();
        out.fill(0.0);
        for i in 0..n {
            out.set(i, Self::x_off(n, m, 0) + i, 1.0);
        }
        for k in 0..self.horizon {
            let jac = self.problem.dynamics_jacobian(self.x(z, k), self.u(z, k));
            let row = n + k * n;
            let xoff = Self::x_off(n, m, k);
            let xoff_next = Self::x_off(n, m, k + 1);
            for i in 0..n {
                out.set(row + i, xoff_next + i, 1.0);
                for c in 0..n + m {
                    out.set(row + i, xoff + c, -jac.get(i, c));
                }
            }
        }
        if self.pinned.is_some() {
            let row = n + self.horizon * n;
            for j in 0..m {
                out.set(row + j, Self::u_off(n, m, 0) + j, 1.0);
            }
        }
    }

    fn ineq_jacobian(&self, z: &[f64], out: &mut Mat) {
        let n = self.problem.state_dim();
        let m = self.problem.input_dim();
        let nh = self.problem.num_constraints();
        out.fill(0.0);
        for k in 0..self.horizon {
            let jac = self.problem.constraint_jacobian(self.x(z, k), self.u(z, k));
            let xoff = Self::x_off(n, m, k);
            for i in 0..nh {
                for c in 0..n + m {
                    out.set(k * nh + i, xoff + c, jac.get(i, c));
                }
            }
        }
    }

    fn lagrangian_hessian(&self, z: &[f64], eq_mult: &[f64], ineq_mult: &[f64], out: &mut Mat) {
        let n = self.problem.state_dim();
        let m = self.problem.input_dim();
        let nh = self.problem.num_constraints();
        out.fill(0.0);
        for k in 0..self.horizon {
            let s = self.x(z, k);
            let a = self.u(z, k);
            let mut block = self.params.stage_sa_hessian(s, a);
            // Dynamics defect rows enter as x_{k+1} − f, so the curvature of
            // f is weighted by the negated multipliers.
            let lam = &eq_mult[n + k * n..n + (k + 1) * n];
            let neg: Vec<f64> = lam.iter().map(|v| -v).collect();
            if let Some(curv) = self.problem.dynamics_curvature(s, a, &neg) {
                block = block.add(&curv);
            }
            if nh > 0 {
                let mu = &ineq_mult[k * nh..(k + 1) * nh];
                if let Some(curv) = self.problem.constraint_curvature(s, a, mu) {
                    block = block.add(&curv);
                }
            }
            let off = Self::x_off(n, m, k);
            for i in 0..n + m {
                for j in 0..n + m {
                    out.add_to(off + i, off + j, block.get(i, j));
                }
            }
        }
        let ht = self.params.terminal_state_hessian();
        let off = Self::x_off(n, m, self.horizon);
        for i in 0..n {
            for j in 0..n {
                out.add_to(off + i, off + j, ht.get(i, j));
            }
        }
    }
}

/// Gradient of the total cost with respect to every parameter at a fixed
/// primal trajectory: the constraints do not depend on θ, so this is the
/// envelope gradient of the program value.
pub fn theta_sensitivity(params: &ParamSet, sol: &OcpSolution) -> Vec<f64> {
    let mut grad = vec![0.0; params.dim()];
    if sol.includes_storage {
        let gs = params.storage_theta_gradient(&sol.x_traj[0]);
        for (g, v) in grad.iter_mut().zip(&gs) {
            *g -= v;
        }
    }
    for (k, u) in sol.u_traj.iter().enumerate() {
        let gk = params.stage_theta_gradient(&sol.x_traj[k], u);
        for (g, v) in grad.iter_mut().zip(&gk) {
            *g += v;
        }
    }
    let gt = params.terminal_theta_gradient(&sol.x_traj[sol.u_traj.len()]);
    for (g, v) in grad.iter_mut().zip(&gt) {
        *g += v;
    }
    grad
}

/// Stateless solver front end bound to one problem and one configuration.
pub struct OcpSolver {
    problem: Arc<ProblemDefinition>,
    config: OcpConfig,
}

impl OcpSolver {
    pub fn new(problem: Arc<ProblemDefinition>, config: OcpConfig) -> Self {
        OcpSolver { problem, config }
    }

    pub fn problem(&self) -> &Arc<ProblemDefinition> {
        &self.problem
    }

    pub fn config(&self) -> &OcpConfig {
        &self.config
    }

    /// `V(s)`: storage-inclusive value program.
    pub fn solve_v(&self, params: &ParamSet, s: &[f64]) -> Result<OcpSolution, OcpError> {
        self.solve_v_warm(params, s, None)
    }

    pub fn solve_v_warm(
        &self,
        params: &ParamSet,
        s: &[f64],
        guess: Option<&InitialGuess>,
    ) -> Result<OcpSolution, OcpError> {
        self.solve(params, s, None, true, self.config.horizon, guess)
    }

    /// `Q(s, a)`: first input pinned to `a`.
    pub fn solve_q(&self, params: &ParamSet, s: &[f64], a: &[f64]) -> Result<OcpSolution, OcpError> {
        self.solve_q_warm(params, s, a, None)
    }

    pub fn solve_q_warm(
        &self,
        params: &ParamSet,
        s: &[f64],
        a: &[f64],
        guess: Option<&InitialGuess>,
    ) -> Result<OcpSolution, OcpError> {
        self.solve(params, s, Some(a), true, self.config.horizon, guess)
    }

    /// First input of the value program's minimizer.
    pub fn policy(&self, params: &ParamSet, s: &[f64]) -> Result<Vec<f64>, OcpError> {
        Ok(self.solve_v(params, s)?.u_traj[0].clone())
    }

    /// `Ψ^N(s)`: value program without the storage offset. `Ψ^0` is the
    /// bare terminal cost.
    pub fn psi(&self, params: &ParamSet, s: &[f64], horizon: usize) -> Result<f64, OcpError> {
        if !self.problem.state_in_box(s) {
            return Err(OcpError::Infeasible);
        }
        if horizon == 0 {
            return Ok(params.terminal_value(s));
        }
        Ok(self.solve(params, s, None, false, horizon, None)?.objective)
    }

    /// `Λ^N(s, a)`: action-value program without the storage offset.
    pub fn lambda_big(
        &self,
        params: &ParamSet,
        s: &[f64],
        a: &[f64],
        horizon: usize,
    ) -> Result<f64, OcpError> {
        assert!(horizon >= 1);
        Ok(self.solve(params, s, Some(a), false, horizon, None)?.objective)
    }

    fn solve(
        &self,
        params: &ParamSet,
        s: &[f64],
        pinned: Option<&[f64]>,
        include_storage: bool,
        horizon: usize,
        guess: Option<&InitialGuess>,
    ) -> Result<OcpSolution, OcpError> {
        assert!(horizon >= 1);
        if !self.problem.state_in_box(s) {
            return Err(OcpError::Infeasible);
        }
        if let Some(a) = pinned {
            if !self.problem.input_in_box(a) {
                return Err(OcpError::Infeasible);
            }
            if self
                .problem
                .constraint_values(s, a)
                .iter()
                .any(|v| *v > self.config.kkt_tol)
            {
                return Err(OcpError::Infeasible);
            }
        }

        let nlp = Transcription::new(&self.problem, params, horizon, s, pinned, include_storage);
        let opts = SqpOptions {
            kkt_tol: self.config.kkt_tol,
            eq_tol: (self.config.kkt_tol * 1e-2).min(1e-10),
            max_iter: self.config.max_iter,
        };

        let mut best: Option<nlp::SqpResult> = None;
        let mut saw_infeasible = false;
        let mut saw_maxiter_kkt = f64::INFINITY;
        let starts = self.cold_starts(s, pinned, horizon, guess);
        for z0 in &starts {
            let r = nlp::solve_sqp(&nlp, z0, &opts);
            match r.status {
                SqpStatus::Solved => {
                    let better = match &best {
                        None => true,
                        Some(b) => r.objective < b.objective,
                    };
                    if better {
                        best = Some(r);
                    }
                    if guess.is_some() {
                        break; // warm start succeeded, no need for more
                    }
                }
                SqpStatus::QpInfeasible => saw_infeasible = true,
                _ => saw_maxiter_kkt = saw_maxiter_kkt.min(r.kkt_residual),
            }
        }

        let r = match best {
            Some(r) => r,
            None if saw_infeasible => return Err(OcpError::Infeasible),
            None => {
                return Err(OcpError::MaxIter {
                    kkt_residual: saw_maxiter_kkt,
                })
            }
        };

        let n = self.problem.state_dim();
        let m = self.problem.input_dim();
        let mut x_traj = Vec::with_capacity(horizon + 1);
        let mut u_traj = Vec::with_capacity(horizon);
        for k in 0..=horizon {
            let off = Transcription::x_off(n, m, k);
            x_traj.push(r.z[off..off + n].to_vec());
        }
        for k in 0..horizon {
            let off = Transcription::u_off(n, m, k);
            u_traj.push(r.z[off..off + m].to_vec());
        }
        let mut sol = OcpSolution {
            x_traj,
            u_traj,
            objective: r.objective,
            theta_gradient: Vec::new(),
            kkt_residual: r.kkt_residual,
            status: OcpStatus::Solved,
            includes_storage: include_storage,
        };
        sol.theta_gradient = theta_sensitivity(params, &sol);
        Ok(sol)
    }

    /// Cold-start list: the warm guess first when present, then a
    /// steady-input rollout, a box-midpoint rollout, and seeded random
    /// rollouts. Rollout states are clamped into the state box.
    fn cold_starts(
        &self,
        s: &[f64],
        pinned: Option<&[f64]>,
        horizon: usize,
        guess: Option<&InitialGuess>,
    ) -> Vec<Vec<f64>> {
        let n = self.problem.state_dim();
        let m = self.problem.input_dim();
        let nlp_dims = (horizon + 1) * n + horizon * m;
        let mut starts: Vec<Vec<f64>> = Vec::new();

        let pack = |x: &[Vec<f64>], u: &[Vec<f64>]| -> Vec<f64> {
            let mut z = vec![0.0; nlp_dims];
            for k in 0..=horizon {
                let off = Transcription::x_off(n, m, k);
                z[off..off + n].copy_from_slice(&x[k]);
            }
            for k in 0..horizon {
                let off = Transcription::u_off(n, m, k);
                z[off..off + m].copy_from_slice(&u[k]);
            }
            z
        };

        if let Some(g) = guess {
            if g.x.len() == horizon + 1 && g.u.len() == horizon {
                starts.push(pack(&g.x, &g.u));
            }
        }

        let (slo, shi) = self.problem.state_box();
        let (ilo, ihi) = self.problem.input_box();
        let (seed_s, seed_a) = self.problem.feasible_seed();
        let _ = seed_s;

        let rollout = |inputs: &dyn Fn(usize) -> Vec<f64>| -> Vec<f64> {
            let mut x = vec![s.to_vec()];
            let mut u = Vec::with_capacity(horizon);
            for k in 0..horizon {
                let mut a = if k == 0 {
                    pinned.map(|p| p.to_vec()).unwrap_or_else(|| inputs(k))
                } else {
                    inputs(k)
                };
                for (j, v) in a.iter_mut().enumerate() {
                    *v = v.clamp(ilo[j], ihi[j]);
                }
                let mut next = self.problem.dynamics(&x[k], &a);
                for (j, v) in next.iter_mut().enumerate() {
                    *v = if v.is_finite() {
                        v.clamp(slo[j], shi[j])
                    } else {
                        seed_a.first().copied().unwrap_or(0.0)
                    };
                }
                u.push(a);
                x.push(next);
            }
            pack(&x, &u)
        };

        let steady_input = seed_a.to_vec();
        starts.push(rollout(&|_k| steady_input.clone()));

        let remaining = self.config.multi_starts.saturating_sub(1);
        if remaining >= 1 {
            let mid: Vec<f64> = ilo.iter().zip(ihi).map(|(l, h)| 0.5 * (l + h)).collect();
            starts.push(rollout(&|_k| mid.clone()));
        }
        if remaining >= 2 {
            let mut mix = Vec::with_capacity(s.len() + 2);
            mix.extend_from_slice(s);
            mix.push(horizon as f64);
            if let Some(a) = pinned {
                mix.extend_from_slice(a);
            }
            let seed = rng::hash_f64s(self.config.seed, &mix);
            let mut r = rng::DeterministicRng::new(seed);
            for _extra in 0..remaining - 1 {
                let lo = ilo.to_vec();
                let hi = ihi.to_vec();
                let draws: Vec<Vec<f64>> = (0..horizon)
                    .map(|_| {
                        lo.iter()
                            .zip(&hi)
                            .map(|(l, h)| r.uniform(*l, *h))
                            .collect()
                    })
                    .collect();
                starts.push(rollout(&move |k| draws[k].clone()));
            }
        }
        starts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench;
    use crate::problem::steady_state;
    use crate::rng::DeterministicRng;

    fn lqr_setup() -> (OcpSolver, ParamSet) {
        let problem = Arc::new(bench::lqr_problem());
        let solver = OcpSolver::new(
            problem,
            OcpConfig {
                horizon: 20,
                ..OcpConfig::default()
            },
        );
        let params = bench::construct_lqr_fixed_point(-0.4456).unwrap();
        (solver, params)
    }

    #[test]
    fn value_matches_riccati_on_interval() {
        let (solver, params) = lqr_setup();
        for k in 0..=20 {
            let s = [-5.0 + 10.0 * k as f64 / 20.0];
            let sol = solver.solve_v(&params, &s).unwrap();
            let expect = 11.7446 * s[0] * s[0];
            assert!(
                (sol.objective - expect).abs() < 1e-4,
                "V({}) = {} vs {expect}",
                s[0],
                sol.objective
            );
        }
    }

    #[test]
    fn steady_consistent_params_give_zero_value() {
        let (solver, params) = lqr_setup();
        let sol = solver.solve_v(&params, &[0.0]).unwrap();
        assert!(sol.objective.abs() < 1e-9);
    }

    #[test]
    fn bellman_consistency_on_random_states() {
        let (solver, params) = lqr_setup();
        let mut rng = DeterministicRng::new(2);
        for _ in 0..100 {
            let s = [rng.uniform(-3.0, 3.0)];
            let v = solver.solve_v(&params, &s).unwrap();
            let pi = v.u_traj[0].clone();
            let q = solver.solve_q(&params, &s, &pi).unwrap();
            assert!(
                (q.objective - v.objective).abs() < 1e-8,
                "Q(s, pi(s)) - V(s) = {}",
                q.objective - v.objective
            );
        }
    }

    #[test]
    fn action_value_matches_riccati_formula_on_grid() {
        let (solver, params) = lqr_setup();
        let problem = solver.problem().clone();
        for i in 0..21 {
            for j in 0..21 {
                let s = [-3.0 + 6.0 * i as f64 / 20.0];
                let a = [-3.0 + 6.0 * j as f64 / 20.0];
                let q = solver.solve_q(&params, &s, &a).unwrap().objective;
                let ell = problem.economic_cost(&s, &a);
                let next = 2.0 * s[0] - a[0];
                let expect = ell + 11.7446 * next * next;
                assert!(
                    (q - expect).abs() < 1e-4,
                    "Q({}, {}) = {q} vs {expect}",
                    s[0],
                    a[0]
                );
            }
        }
    }

    #[test]
    fn infeasible_pin_is_rejected() {
        let problem = Arc::new(bench::investment_problem());
        let solver = OcpSolver::new(
            problem.clone(),
            OcpConfig {
                horizon: 10,
                ..OcpConfig::default()
            },
        );
        let steady = steady_state(&problem).unwrap();
        let params = ParamSet::rotated_economic(
            &problem,
            &steady.s_e,
            &steady.a_e,
            steady.l_e,
            &[0.2305],
        )
        .unwrap();
        assert_eq!(
            solver.solve_q(&params, &[0.5], &[0.005]).unwrap_err(),
            OcpError::Infeasible
        );
    }

    #[test]
    fn policy_matches_riccati_gain() {
        let (solver, params) = lqr_setup();
        for s0 in [-3.0, -1.2, 0.7, 2.5] {
            let pi = solver.policy(&params, &[s0]).unwrap();
            assert!(
                (pi[0] - 1.6861 * s0).abs() < 1e-3,
                "pi({s0}) = {} vs {}",
                pi[0],
                1.6861 * s0
            );
        }
    }

    #[test]
    fn policy_at_steady_state_returns_steady_input() {
        let (solver, params) = lqr_setup();
        let pi = solver.policy(&params, &[0.0]).unwrap();
        assert!(pi[0].abs() < 1e-6);
    }

    #[test]
    fn storage_term_sensitivity_components() {
        let (solver, params) = lqr_setup();
        let s = [1.7];
        let sol = solver.solve_v(&params, &s).unwrap();
        let grad = theta_sensitivity(&params, &sol);
        // Storage block: d(−θ₁ s²)/dθ₁ = −s².
        assert!((grad[0] + s[0] * s[0]).abs() < 1e-12);
        // Terminal block: x_N².
        let xn = sol.x_traj.last().unwrap()[0];
        assert!((grad[1] - xn * xn).abs() < 1e-12);
    }

    #[test]
    fn theta_sensitivity_matches_finite_differences() {
        let problem = Arc::new(bench::lqr_problem());
        let solver = OcpSolver::new(
            problem,
            OcpConfig {
                horizon: 8,
                kkt_tol: 1e-12,
                ..OcpConfig::default()
            },
        );
        let mut rng = DeterministicRng::new(13);
        for _case in 0..20 {
            // Positive-definite random stage keeps the program smooth.
            let th: Vec<f64> = alloc::vec![
                rng.uniform(-0.5, 0.5),
                rng.uniform(0.5, 2.0),
                rng.uniform(-1.0, 1.0),
                rng.uniform(-1.0, 1.0),
                rng.uniform(-1.0, 1.0),
                rng.uniform(-1.0, 1.0),
            ];
            let params = ParamSet::factored_psd(1, 1, &[0.0], &[0.0], &th, 1e-3).unwrap();
            let s = [rng.uniform(-2.0, 2.0)];
            let a = [rng.uniform(-2.0, 2.0)];
            let sol = match solver.solve_q(&params, &s, &a) {
                Ok(sol) => sol,
                Err(_) => continue,
            };
            let grad = &sol.theta_gradient;
            let theta = params.theta();
            let h = 1e-5;
            for k in 0..theta.len() {
                let mut tp = theta.clone();
                tp[k] += h;
                let mut tm = theta.clone();
                tm[k] -= h;
                let op = solver
                    .solve_q(&params.with_theta(&tp).unwrap(), &s, &a)
                    .unwrap()
                    .objective;
                let om = solver
                    .solve_q(&params.with_theta(&tm).unwrap(), &s, &a)
                    .unwrap()
                    .objective;
                let fd = (op - om) / (2.0 * h);
                let scale = 1.0 + grad[k].abs().max(fd.abs());
                assert!(
                    (grad[k] - fd).abs() / scale < 1e-5,
                    "component {k}: analytic {} vs fd {fd}",
                    grad[k]
                );
            }
        }
    }

    #[test]
    fn psi_lambda_identity() {
        let (solver, params) = lqr_setup();
        let problem = solver.problem().clone();
        let mut rng = DeterministicRng::new(19);
        for _ in 0..50 {
            let s = [rng.uniform(-2.5, 2.5)];
            let a = [rng.uniform(-2.5, 2.5)];
            let lam = solver.lambda_big(&params, &s, &a, 12).unwrap();
            let next = problem.dynamics(&s, &a);
            let psi = solver.psi(&params, &next, 11).unwrap();
            let stage = params.stage_value(&s, &a);
            assert!(
                (lam - stage - psi).abs() < 1e-8,
                "identity residual {}",
                lam - stage - psi
            );
        }
    }

    #[test]
    fn psi_matches_rotated_riccati_value() {
        let (solver, params) = lqr_setup();
        // With the rotated-Riccati terminal the fixed point is exact at any
        // horizon; also check a detuned terminal converging by N = 30.
        for s0 in [-2.0, 1.0, 3.0] {
            let v = solver.psi(&params, &[s0], 30).unwrap();
            assert!((v - 11.2990 * s0 * s0).abs() < 1e-3, "psi = {v}");
            let v_short = solver.psi(&params, &[s0], 3).unwrap();
            assert!((v_short - 11.2990 * s0 * s0).abs() < 1e-6);
        }
        let mut theta = params.theta();
        theta[1] *= 2.0; // double the terminal coefficient
        let detuned = params.with_theta(&theta).unwrap();
        for s0 in [-2.0, 1.0, 3.0] {
            let v = solver.psi(&detuned, &[s0], 30).unwrap();
            assert!((v - 11.2990 * s0 * s0).abs() < 1e-3, "detuned psi = {v}");
        }
    }

    #[test]
    fn psi_monotone_under_terminal_decrease_condition() {
        // Lemma-style monotonicity: once some feasible input makes the
        // terminal cost decrease by at least the stage cost at every grid
        // state, the horizon extension cannot increase the value.
        let (solver, params) = lqr_setup();
        let certified = terminal_decrease_holds(&solver, &params, &[-3.0, -1.0, 0.5, 2.0, 3.0]);
        assert!(certified);
        for &s0 in &[-3.0, -1.0, 0.5, 2.0, 3.0] {
            let mut prev = solver.psi(&params, &[s0], 1).unwrap();
            for n in 2..=21 {
                let cur = solver.psi(&params, &[s0], n).unwrap();
                assert!(cur <= prev + 1e-8, "psi^{n}({s0}) = {cur} > {prev}");
                prev = cur;
            }
        }
        // A strictly larger terminal still satisfies the condition and must
        // give a strictly decreasing tail.
        let mut theta = params.theta();
        theta[1] *= 1.5;
        let larger = params.with_theta(&theta).unwrap();
        assert!(terminal_decrease_holds(&solver, &larger, &[-2.0, 1.0, 2.0]));
        for &s0 in &[-2.0, 1.0, 2.0] {
            let mut prev = solver.psi(&larger, &[s0], 1).unwrap();
            for n in 2..=21 {
                let cur = solver.psi(&larger, &[s0], n).unwrap();
                assert!(cur <= prev + 1e-8);
                prev = cur;
            }
        }
    }

    /// Grid witness for the terminal-decrease condition: for every listed
    /// state some feasible input satisfies
    /// `T(f(s,a)) − T(s) ≤ −stage(s,a)`.
    fn terminal_decrease_holds(solver: &OcpSolver, params: &ParamSet, states: &[f64]) -> bool {
        let problem = solver.problem();
        states.iter().all(|&s0| {
            let s = [s0];
            (0..=400).any(|k| {
                let a = [-20.0 + 40.0 * k as f64 / 400.0];
                if !crate::problem::is_feasible(problem, &s, &a) {
                    return false;
                }
                let next = problem.dynamics(&s, &a);
                params.terminal_value(&next) - params.terminal_value(&s)
                    <= -params.stage_value(&s, &a) + 1e-12
            })
        })
    }

    #[test]
    fn dynamic_programming_consistency_dense_input_oracle() {
        let (solver, params) = lqr_setup();
        let problem = solver.problem().clone();
        for &s0 in &[-2.0, -0.7, 1.3, 2.9] {
            let s = [s0];
            let v = solver.solve_v(&params, &s).unwrap().objective;
            // Coarse sweep, then a fine window around the best candidate.
            let mut best = f64::INFINITY;
            let mut best_a = 0.0;
            for k in 0..=200 {
                let a = -10.0 + 20.0 * k as f64 / 200.0;
                let next = problem.dynamics(&s, &[a]);
                if !problem.state_in_box(&next) {
                    continue;
                }
                let val = params.stage_value(&s, &[a]) + solver.psi(&params, &next, 19).unwrap();
                if val < best {
                    best = val;
                    best_a = a;
                }
            }
            for k in 0..=80 {
                let a = best_a - 0.04 + 0.08 * k as f64 / 80.0;
                let next = problem.dynamics(&s, &[a]);
                if !problem.state_in_box(&next) {
                    continue;
                }
                let val = params.stage_value(&s, &[a]) + solver.psi(&params, &next, 19).unwrap();
                best = best.min(val);
            }
            let v_oracle = -params.storage_value(&s) + best;
            assert!(
                (v - v_oracle).abs() < 1e-5,
                "V({s0}) = {v} vs oracle {v_oracle}"
            );
        }
    }

    #[test]
    fn repeated_solves_are_bitwise_identical() {
        let (solver, params) = lqr_setup();
        let s = [1.234567];
        let a = solver.solve_v(&params, &s).unwrap();
        let b = solver.solve_v(&params, &s).unwrap();
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert_eq!(a.u_traj[0][0].to_bits(), b.u_traj[0][0].to_bits());
    }

    #[test]
    fn solution_trajectories_satisfy_dynamics_tightly() {
        let (solver, params) = lqr_setup();
        let problem = solver.problem().clone();
        let sol = solver.solve_v(&params, &[2.3]).unwrap();
        assert_eq!(sol.x_traj[0][0], 2.3);
        for k in 0..sol.u_traj.len() {
            let next = problem.dynamics(&sol.x_traj[k], &sol.u_traj[k]);
            assert!((next[0] - sol.x_traj[k + 1][0]).abs() <= 1e-10);
        }
        assert!(sol.kkt_residual <= 1e-8);
    }

    #[test]
    fn investment_value_bounded_below_by_storage_offset() {
        let problem = Arc::new(bench::investment_problem());
        let steady = steady_state(&problem).unwrap();
        let theta = 0.2305;
        let params = ParamSet::rotated_economic(
            &problem,
            &steady.s_e,
            &steady.a_e,
            steady.l_e,
            &[theta],
        )
        .unwrap();
        let solver = OcpSolver::new(
            problem,
            OcpConfig {
                horizon: 100,
                ..OcpConfig::default()
            },
        );
        for &s0 in &[0.5, 1.0, 2.2344, 4.0, 6.5, 9.0] {
            let sol = solver.solve_v(&params, &[s0]).unwrap();
            let floor = -params.storage_value(&[s0]);
            assert!(
                sol.objective >= floor - 1e-7,
                "V({s0}) = {} below -lambda = {floor}",
                sol.objective
            );
        }
    }

    #[test]
    fn investment_policy_matches_dense_grid_search() {
        let problem = Arc::new(bench::investment_problem());
        let steady = steady_state(&problem).unwrap();
        let params = ParamSet::rotated_economic(
            &problem,
            &steady.s_e,
            &steady.a_e,
            steady.l_e,
            &[0.2305],
        )
        .unwrap();
        let solver = OcpSolver::new(
            problem.clone(),
            OcpConfig {
                horizon: 100,
                ..OcpConfig::default()
            },
        );
        let s = [5.0];
        let pi = solver.policy(&params, &s).unwrap();
        assert!(pi[0] >= 0.01 && pi[0] <= 10.0);
        // Coarse-to-fine search over the first input with exact tail values.
        let mut best = f64::INFINITY;
        let mut best_a = 0.0;
        for k in 0..=120 {
            let a = 0.01 + (10.0 - 0.01) * k as f64 / 120.0;
            if !crate::problem::is_feasible(&problem, &s, &[a]) {
                continue;
            }
            let tail = solver.psi(&params, &[a], 99).unwrap();
            let val = params.stage_value(&s, &[a]) + tail;
            if val < best {
                best = val;
                best_a = a;
            }
        }
        let mut refined = best_a;
        for k in 0..=100 {
            let a = best_a - 0.05 + 0.1 * k as f64 / 100.0;
            if a < 0.01 || !crate::problem::is_feasible(&problem, &s, &[a]) {
                continue;
            }
            let tail = solver.psi(&params, &[a], 99).unwrap();
            let val = params.stage_value(&s, &[a]) + tail;
            if val < best {
                best = val;
                refined = a;
            }
        }
        assert!(
            (pi[0] - refined).abs() < 5e-3,
            "policy {} vs grid argmin {refined}",
            pi[0]
        );
    }
}
