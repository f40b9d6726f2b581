//! Economic optimal-control problem definitions: dynamics, constraints,
//! economic stage cost, and the optimal steady state.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{norm_inf, sub, Mat};
use crate::nlp::{self, NlpProblem, SqpOptions, SqpStatus};
use crate::rng;

/// State transition `(s, a) → s'`.
pub type DynamicsFn = dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync;
/// Jacobian `(s, a) → [∂f/∂s  ∂f/∂a]` as an `n × (n+m)` matrix (or
/// `nh × (n+m)` for constraints).
pub type JacobianFn = dyn Fn(&[f64], &[f64]) -> Mat + Send + Sync;
/// Scalar map `(s, a) → value`.
pub type ScalarFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;
/// Gradient `(s, a) → (n+m)`-vector.
pub type GradientFn = dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync;
/// Multiplier-weighted Hessian `(s, a, w) → Σᵢ wᵢ ∇² gᵢ(s,a)`.
pub type WeightedHessianFn = dyn Fn(&[f64], &[f64], &[f64]) -> Mat + Send + Sync;

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemError {
    BadDimensions(String),
    /// No feasible state-input pair was found on the construction grid.
    EmptyFeasibleSet,
    /// A callback returned a non-finite value on a feasible grid sample.
    NonFiniteEvaluation { state: Vec<f64>, input: Vec<f64> },
}

impl core::fmt::Display for ProblemError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ProblemError::BadDimensions(msg) => write!(f, "bad dimensions: {msg}"),
            ProblemError::EmptyFeasibleSet => {
                write!(f, "no feasible state-input pair found on the sample grid")
            }
            ProblemError::NonFiniteEvaluation { state, input } => write!(
                f,
                "non-finite evaluation at feasible sample ({state:?}, {input:?})"
            ),
        }
    }
}

impl core::error::Error for ProblemError {}

#[derive(Clone, Debug, PartialEq)]
pub enum SteadyStateError {
    /// The steady-state program has no feasible point.
    NoFeasibleSteadyState,
    /// The inner solver ran out of iterations on every start.
    NonConvergence,
}

impl core::fmt::Display for SteadyStateError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SteadyStateError::NoFeasibleSteadyState => {
                write!(f, "steady-state program is infeasible")
            }
            SteadyStateError::NonConvergence => {
                write!(f, "steady-state solver exceeded its iteration budget")
            }
        }
    }
}

impl core::error::Error for SteadyStateError {}

/// Immutable problem data: dynamics `f`, mixed constraints `h`, economic
/// cost `L`, and the state/input boxes. Safe to share across threads; all
/// evaluations are pure.
pub struct ProblemDefinition {
    n: usize,
    m: usize,
    state_lo: Vec<f64>,
    state_hi: Vec<f64>,
    input_lo: Vec<f64>,
    input_hi: Vec<f64>,
    f: Box<DynamicsFn>,
    f_jac: Box<JacobianFn>,
    f_hess_weighted: Option<Box<WeightedHessianFn>>,
    h: Option<Box<DynamicsFn>>,
    h_jac: Option<Box<JacobianFn>>,
    h_hess_weighted: Option<Box<WeightedHessianFn>>,
    nh: usize,
    cost: Box<ScalarFn>,
    cost_grad: Box<GradientFn>,
    cost_hess: Box<JacobianFn>,
    feasible_seed: (Vec<f64>, Vec<f64>),
}

impl core::fmt::Debug for ProblemDefinition {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ProblemDefinition")
            .field("n", &self.n)
            .field("m", &self.m)
            .field("nh", &self.nh)
            .field("state_box", &(&self.state_lo, &self.state_hi))
            .field("input_box", &(&self.input_lo, &self.input_hi))
            .finish_non_exhaustive()
    }
}

pub struct ProblemBuilder {
    n: usize,
    m: usize,
    state_lo: Vec<f64>,
    state_hi: Vec<f64>,
    input_lo: Vec<f64>,
    input_hi: Vec<f64>,
    f: Option<Box<DynamicsFn>>,
    f_jac: Option<Box<JacobianFn>>,
    f_hess_weighted: Option<Box<WeightedHessianFn>>,
    h: Option<Box<DynamicsFn>>,
    h_jac: Option<Box<JacobianFn>>,
    h_hess_weighted: Option<Box<WeightedHessianFn>>,
    nh: usize,
    cost: Option<Box<ScalarFn>>,
    cost_grad: Option<Box<GradientFn>>,
    cost_hess: Option<Box<JacobianFn>>,
}

impl ProblemBuilder {
    pub fn new(n: usize, m: usize) -> Self {
        ProblemBuilder {
            n,
            m,
            state_lo: vec![-1.0; n],
            state_hi: vec![1.0; n],
            input_lo: vec![-1.0; m],
            input_hi: vec![1.0; m],
            f: None,
            f_jac: None,
            f_hess_weighted: None,
            h: None,
            h_jac: None,
            h_hess_weighted: None,
            nh: 0,
            cost: None,
            cost_grad: None,
            cost_hess: None,
        }
    }

    pub fn state_box(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        self.state_lo = lo;
        self.state_hi = hi;
        self
    }

    pub fn input_box(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        self.input_lo = lo;
        self.input_hi = hi;
        self
    }

    pub fn dynamics(
        mut self,
        f: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        jac: impl Fn(&[f64], &[f64]) -> Mat + Send + Sync + 'static,
    ) -> Self {
        self.f = Some(Box::new(f));
        self.f_jac = Some(Box::new(jac));
        self
    }

    pub fn constraints(
        mut self,
        nh: usize,
        h: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        jac: impl Fn(&[f64], &[f64]) -> Mat + Send + Sync + 'static,
    ) -> Self {
        self.nh = nh;
        self.h = Some(Box::new(h));
        self.h_jac = Some(Box::new(jac));
        self
    }

    pub fn constraint_curvature(
        mut self,
        hess: impl Fn(&[f64], &[f64], &[f64]) -> Mat + Send + Sync + 'static,
    ) -> Self {
        self.h_hess_weighted = Some(Box::new(hess));
        self
    }

    pub fn cost(
        mut self,
        l: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        hess: impl Fn(&[f64], &[f64]) -> Mat + Send + Sync + 'static,
    ) -> Self {
        self.cost = Some(Box::new(l));
        self.cost_grad = Some(Box::new(grad));
        self.cost_hess = Some(Box::new(hess));
        self
    }

    /// Validates dimensions, locates one feasible pair on a coarse grid, and
    /// checks that `f`, `h`, `L` evaluate finitely on every feasible grid
    /// sample.
    pub fn build(self) -> Result<ProblemDefinition, ProblemError> {
        if self.state_lo.len() != self.n || self.state_hi.len() != self.n {
            return Err(ProblemError::BadDimensions(String::from("state box length")));
        }
        if self.input_lo.len() != self.m || self.input_hi.len() != self.m {
            return Err(ProblemError::BadDimensions(String::from("input box length")));
        }
        let pd = ProblemDefinition {
            n: self.n,
            m: self.m,
            state_lo: self.state_lo,
            state_hi: self.state_hi,
            input_lo: self.input_lo,
            input_hi: self.input_hi,
            f: self.f.ok_or_else(|| ProblemError::BadDimensions(String::from("dynamics missing")))?,
            f_jac: self
                .f_jac
                .ok_or_else(|| ProblemError::BadDimensions(String::from("dynamics jacobian missing")))?,
            f_hess_weighted: self.f_hess_weighted,
            h: self.h,
            h_jac: self.h_jac,
            h_hess_weighted: self.h_hess_weighted,
            nh: self.nh,
            cost: self.cost.ok_or_else(|| ProblemError::BadDimensions(String::from("cost missing")))?,
            cost_grad: self
                .cost_grad
                .ok_or_else(|| ProblemError::BadDimensions(String::from("cost gradient missing")))?,
            cost_hess: self
                .cost_hess
                .ok_or_else(|| ProblemError::BadDimensions(String::from("cost hessian missing")))?,
            feasible_seed: (Vec::new(), Vec::new()),
        };
        pd.validate_on_grid()
    }
}

const GRID_PER_DIM: usize = 13;

impl ProblemDefinition {
    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn input_dim(&self) -> usize {
        self.m
    }

    pub fn state_box(&self) -> (&[f64], &[f64]) {
        (&self.state_lo, &self.state_hi)
    }

    pub fn input_box(&self) -> (&[f64], &[f64]) {
        (&self.input_lo, &self.input_hi)
    }

    pub fn num_constraints(&self) -> usize {
        self.nh
    }

    /// One feasible pair found at construction; used to seed solvers.
    pub fn feasible_seed(&self) -> (&[f64], &[f64]) {
        (&self.feasible_seed.0, &self.feasible_seed.1)
    }

    pub fn dynamics(&self, s: &[f64], a: &[f64]) -> Vec<f64> {
        (self.f)(s, a)
    }

    pub fn dynamics_jacobian(&self, s: &[f64], a: &[f64]) -> Mat {
        (self.f_jac)(s, a)
    }

    pub fn dynamics_curvature(&self, s: &[f64], a: &[f64], w: &[f64]) -> Option<Mat> {
        self.f_hess_weighted.as_ref().map(|f| f(s, a, w))
    }

    pub fn constraint_values(&self, s: &[f64], a: &[f64]) -> Vec<f64> {
        match &self.h {
            Some(h) => h(s, a),
            None => Vec::new(),
        }
    }

    pub fn constraint_jacobian(&self, s: &[f64], a: &[f64]) -> Mat {
        match &self.h_jac {
            Some(j) => j(s, a),
            None => Mat::zeros(0, self.n + self.m),
        }
    }

    pub fn constraint_curvature(&self, s: &[f64], a: &[f64], w: &[f64]) -> Option<Mat> {
        self.h_hess_weighted.as_ref().map(|f| f(s, a, w))
    }

    pub fn economic_cost(&self, s: &[f64], a: &[f64]) -> f64 {
        (self.cost)(s, a)
    }

    pub fn cost_gradient(&self, s: &[f64], a: &[f64]) -> Vec<f64> {
        (self.cost_grad)(s, a)
    }

    pub fn cost_hessian(&self, s: &[f64], a: &[f64]) -> Mat {
        (self.cost_hess)(s, a)
    }

    pub fn state_in_box(&self, s: &[f64]) -> bool {
        s.iter()
            .zip(self.state_lo.iter().zip(&self.state_hi))
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn input_in_box(&self, a: &[f64]) -> bool {
        a.iter()
            .zip(self.input_lo.iter().zip(&self.input_hi))
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    fn validate_on_grid(mut self) -> Result<Self, ProblemError> {
        let dims = self.n + self.m;
        let mut counters = vec![0usize; dims];
        let mut seed: Option<(Vec<f64>, Vec<f64>)> = None;
        loop {
            let mut s = vec![0.0; self.n];
            let mut a = vec![0.0; self.m];
            for d in 0..dims {
                let t = counters[d] as f64 / (GRID_PER_DIM - 1) as f64;
                if d < self.n {
                    s[d] = self.state_lo[d] + t * (self.state_hi[d] - self.state_lo[d]);
                } else {
                    let j = d - self.n;
                    a[j] = self.input_lo[j] + t * (self.input_hi[j] - self.input_lo[j]);
                }
            }
            if is_feasible(&self, &s, &a) {
                let finite = self.economic_cost(&s, &a).is_finite()
                    && self.dynamics(&s, &a).iter().all(|v| v.is_finite())
                    && self.constraint_values(&s, &a).iter().all(|v| v.is_finite());
                if !finite {
                    return Err(ProblemError::NonFiniteEvaluation { state: s, input: a });
                }
                if seed.is_none() {
                    seed = Some((s, a));
                }
            }
            // odometer
            let mut d = 0;
            loop {
                counters[d] += 1;
                if counters[d] < GRID_PER_DIM {
                    break;
                }
                counters[d] = 0;
                d += 1;
                if d == dims {
                    match seed {
                        Some(sd) => {
                            self.feasible_seed = sd;
                            return Ok(self);
                        }
                        None => return Err(ProblemError::EmptyFeasibleSet),
                    }
                }
            }
        }
    }
}

/// Optimal steady state of the economic problem together with the equality
/// multiplier of the steady-state program and the steady cost value.
#[derive(Clone, Debug)]
pub struct SteadyState {
    pub s_e: Vec<f64>,
    pub a_e: Vec<f64>,
    /// Multiplier of `f(s, a) − s = 0` in the Lagrangian `L + νᵀ(f − s)`.
    pub nu: Vec<f64>,
    pub l_e: f64,
}

/// Membership in the feasible set: both boxes, `h ≤ 0`, and `f(s,a)` back
/// inside the state box.
pub fn is_feasible(problem: &ProblemDefinition, s: &[f64], a: &[f64]) -> bool {
    if !problem.state_in_box(s) || !problem.input_in_box(a) {
        return false;
    }
    if problem.constraint_values(s, a).iter().any(|v| !(*v <= 0.0)) {
        return false;
    }
    let next = problem.dynamics(s, a);
    next.iter().all(|v| v.is_finite()) && problem.state_in_box(&next)
}

/// Economic cost shifted by its optimal steady-state value; zero at
/// `(s_e, a_e)` by construction.
pub fn shifted_cost(problem: &ProblemDefinition, ss: &SteadyState, s: &[f64], a: &[f64]) -> f64 {
    problem.economic_cost(s, a) - ss.l_e
}

struct SteadyStateNlp<'a> {
    problem: &'a ProblemDefinition,
    lb: Vec<f64>,
    ub: Vec<f64>,
}

impl<'a> SteadyStateNlp<'a> {
    fn split<'b>(&self, z: &'b [f64]) -> (&'b [f64], &'b [f64]) {
        z.split_at(self.problem.n)
    }
}

impl<'a> NlpProblem for SteadyStateNlp<'a> {
    fn num_vars(&self) -> usize {
        self.problem.n + self.problem.m
    }
    fn num_eq(&self) -> usize {
        self.problem.n
    }
    fn num_ineq(&self) -> usize {
        self.problem.nh
    }
    fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lb, &self.ub)
    }
    fn objective(&self, z: &[f64]) -> f64 {
        let (s, a) = self.split(z);
        self.problem.economic_cost(s, a)
    }
    fn gradient(&self, z: &[f64], out: &mut [f64]) {
        let (s, a) = self.split(z);
        out.copy_from_slice(&self.problem.cost_gradient(s, a));
    }
    fn eq_constraints(&self, z: &[f64], out: &mut [f64]) {
        let (s, a) = self.split(z);
        let next = self.problem.dynamics(s, a);
        for i in 0..self.problem.n {
            out[i] = next[i] - s[i];
        }
    }
    fn ineq_constraints(&self, z: &[f64], out: &mut [f64]) {
        let (s, a) = self.split(z);
        out.copy_from_slice(&self.problem.constraint_values(s, a));
    }
    fn eq_jacobian(&self, z: &[f64], out: &mut Mat) {
        let (s, a) = self.split(z);
        let jac = self.problem.dynamics_jacobian(s, a);
        for i in 0..self.problem.n {
            out.row_mut(i).copy_from_slice(jac.row(i));
            out.add_to(i, i, -1.0);
        }
    }
    fn ineq_jacobian(&self, z: &[f64], out: &mut Mat) {
        let (s, a) = self.split(z);
        let jac = self.problem.constraint_jacobian(s, a);
        for i in 0..self.problem.nh {
            out.row_mut(i).copy_from_slice(jac.row(i));
        }
    }
    fn lagrangian_hessian(&self, z: &[f64], eq_mult: &[f64], ineq_mult: &[f64], out: &mut Mat) {
        let (s, a) = self.split(z);
        let mut hess = self.problem.cost_hessian(s, a);
        if let Some(curv) = self.problem.dynamics_curvature(s, a, eq_mult) {
            hess = hess.add(&curv);
        }
        if self.problem.nh > 0 {
            if let Some(curv) = self.problem.constraint_curvature(s, a, ineq_mult) {
                hess = hess.add(&curv);
            }
        }
        *out = hess;
    }
}

const STEADY_MULTI_STARTS: u64 = 16;

/// Optimal steady state by multi-start SQP on
/// `min L(s,a)  s.t.  f(s,a) = s,  h(s,a) ≤ 0,  (s,a) in the boxes`.
///
/// Deterministic: starts are the construction-time feasible seed followed by
/// a low-discrepancy sweep of the boxes.
pub fn steady_state(problem: &ProblemDefinition) -> Result<SteadyState, SteadyStateError> {
    let n = problem.n;
    let m = problem.m;
    let mut lb = problem.state_lo.clone();
    lb.extend_from_slice(&problem.input_lo);
    let mut ub = problem.state_hi.clone();
    ub.extend_from_slice(&problem.input_hi);
    let nlp = SteadyStateNlp {
        problem,
        lb: lb.clone(),
        ub: ub.clone(),
    };
    let opts = SqpOptions {
        kkt_tol: 1e-10,
        eq_tol: 1e-10,
        max_iter: 200,
    };

    let mut starts: Vec<Vec<f64>> = Vec::new();
    let (seed_s, seed_a) = problem.feasible_seed();
    let mut z0 = seed_s.to_vec();
    z0.extend_from_slice(seed_a);
    starts.push(z0);
    for k in 1..STEADY_MULTI_STARTS {
        starts.push(rng::halton_point(k, &lb, &ub));
    }

    let mut best: Option<nlp::SqpResult> = None;
    let mut saw_maxiter = false;
    for start in &starts {
        let r = nlp::solve_sqp(&nlp, start, &opts);
        match r.status {
            SqpStatus::Solved => {
                let better = match &best {
                    None => true,
                    Some(b) => r.objective < b.objective,
                };
                if better {
                    best = Some(r);
                }
            }
            SqpStatus::MaxIter => saw_maxiter = true,
            _ => {}
        }
    }

    let best = match best {
        Some(b) => b,
        None if saw_maxiter => return Err(SteadyStateError::NonConvergence),
        None => return Err(SteadyStateError::NoFeasibleSteadyState),
    };

    let (s_e, a_e) = best.z.split_at(n);
    let next = problem.dynamics(s_e, a_e);
    let residual = norm_inf(&sub(&next, s_e));
    if residual > 1e-9 {
        return Err(SteadyStateError::NonConvergence);
    }
    debug_assert_eq!(best.eq_multipliers.len(), n);
    let _ = m;
    Ok(SteadyState {
        s_e: s_e.to_vec(),
        a_e: a_e.to_vec(),
        nu: best.eq_multipliers,
        l_e: best.objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench;

    #[test]
    fn lqr_steady_state_is_origin() {
        let p = bench::lqr_problem();
        let ss = steady_state(&p).unwrap();
        assert!(norm_inf(&ss.s_e) < 1e-9, "{:?}", ss.s_e);
        assert!(norm_inf(&ss.a_e) < 1e-9);
        assert!(ss.l_e.abs() < 1e-12);
        assert!(norm_inf(&ss.nu) < 1e-7);
    }

    #[test]
    fn nondissipative_steady_state_is_origin() {
        let p = bench::nondissipative_problem();
        let ss = steady_state(&p).unwrap();
        assert!(norm_inf(&ss.s_e) < 1e-6, "{:?}", ss.s_e);
        assert!(norm_inf(&ss.a_e) < 1e-6);
    }

    #[test]
    fn investment_steady_state_matches_reported_value() {
        let p = bench::investment_problem();
        let ss = steady_state(&p).unwrap();
        assert!((ss.s_e[0] - 2.2344).abs() < 1e-3, "s_e = {:?}", ss.s_e);
        assert!((ss.a_e[0] - ss.s_e[0]).abs() < 1e-9);
        // Multiplier of f(s,a) - s: nu = -1/(5 s_e^0.34 - s_e).
        let c = 5.0 * crate::fmath::powf(ss.s_e[0], 0.34) - ss.s_e[0];
        assert!((ss.nu[0] + 1.0 / c).abs() < 1e-6, "nu = {:?}", ss.nu);
        assert!((ss.nu[0].abs() - 0.2305).abs() < 1e-3);
        assert!((ss.l_e - (-crate::fmath::ln(4.3377))).abs() < 1e-3);
    }

    #[test]
    fn steady_state_multiplier_reproduces_kkt_stationarity() {
        // Finite-difference gradient of L + nuᵀ(f - id) at (s_e, a_e).
        let p = bench::investment_problem();
        let ss = steady_state(&p).unwrap();
        let lagr = |s: &[f64], a: &[f64]| {
            let f = p.dynamics(s, a);
            p.economic_cost(s, a)
                + ss.nu
                    .iter()
                    .enumerate()
                    .map(|(i, nu)| nu * (f[i] - s[i]))
                    .sum::<f64>()
        };
        let h = 1e-6;
        let mut grad = [0.0; 2];
        for d in 0..2 {
            let mut sp = ss.s_e.clone();
            let mut sm = ss.s_e.clone();
            let mut ap = ss.a_e.clone();
            let mut am = ss.a_e.clone();
            if d == 0 {
                sp[0] += h;
                sm[0] -= h;
            } else {
                ap[0] += h;
                am[0] -= h;
            }
            grad[d] = (lagr(&sp, &ap) - lagr(&sm, &am)) / (2.0 * h);
        }
        assert!(norm_inf(&grad) <= 1e-6, "stationarity residual {grad:?}");
    }

    #[test]
    fn feasibility_examples() {
        let inv = bench::investment_problem();
        assert!(!is_feasible(&inv, &[0.5], &[0.005])); // below the input box
        assert!(is_feasible(&inv, &[2.2344], &[2.2344]));
        let lqr = bench::lqr_problem();
        assert!(is_feasible(&lqr, &[0.0], &[0.0]));
    }

    #[test]
    fn shifted_cost_examples() {
        let lqr = bench::lqr_problem();
        let ss = steady_state(&lqr).unwrap();
        assert_eq!(shifted_cost(&lqr, &ss, &ss.s_e, &ss.a_e), 0.0);
        assert!((shifted_cost(&lqr, &ss, &[1.0], &[0.0]) - 1.0).abs() < 1e-12);

        let inv = bench::investment_problem();
        let ssi = steady_state(&inv).unwrap();
        assert!(shifted_cost(&inv, &ssi, &[2.2344], &[2.2344]).abs() < 1e-6);
    }

    #[test]
    fn steady_manifold_has_nonnegative_shifted_cost() {
        // All three benchmarks have the manifold a = s; sample it directly.
        for (p, lo, hi) in [
            (bench::lqr_problem(), -10.0, 10.0),
            (bench::nondissipative_problem(), -5.0, 5.0),
            (bench::investment_problem(), 0.1, 9.9),
        ] {
            let ss = steady_state(&p).unwrap();
            for k in 0..=200 {
                let v = lo + (hi - lo) * k as f64 / 200.0;
                let s = [v];
                if !is_feasible(&p, &s, &s) {
                    continue;
                }
                let shifted = shifted_cost(&p, &ss, &s, &s);
                assert!(shifted >= -1e-8, "shifted cost {shifted} at s = {v}");
            }
        }
    }

    #[test]
    fn builder_rejects_empty_feasible_set() {
        // Constraint h = 1 > 0 everywhere.
        let err = ProblemBuilder::new(1, 1)
            .state_box(vec![-1.0], vec![1.0])
            .input_box(vec![-1.0], vec![1.0])
            .dynamics(|s, _a| vec![s[0]], |_s, _a| Mat::from_rows(&[&[1.0, 0.0]]))
            .constraints(1, |_s, _a| vec![1.0], |_s, _a| Mat::from_rows(&[&[0.0, 0.0]]))
            .cost(|_s, _a| 0.0, |_s, _a| vec![0.0, 0.0], |_s, _a| Mat::zeros(2, 2))
            .build()
            .unwrap_err();
        assert_eq!(err, ProblemError::EmptyFeasibleSet);
    }
}
