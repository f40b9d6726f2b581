//! Undiscounted Q-learning over the parametric MPC approximator.
//!
//! Each step solves the value program at the current state to obtain the
//! parametric policy, perturbs it with clipped exploration noise, solves the
//! pinned action-value program, and forms the one-step temporal-difference
//! error
//! `δ = ℓ(s,a) + V(f(s,a)) − Q(s,a)` with the shifted economic cost ℓ.
//! Parameters then move along `α δ ∇θQ`, either freely (with the terminal
//! coefficient floored at its positivity margin) or through a projection
//! that keeps the stage-cost coefficient matrix positive definite.

use alloc::collections::VecDeque;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::approx::ParamSet;
use crate::fmath;
use crate::ocp::{InitialGuess, OcpError, OcpSolver};
use crate::problem::{is_feasible, shifted_cost, ProblemDefinition, SteadyState};
use crate::rng::DeterministicRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateMode {
    Plain,
    Constrained,
}

#[derive(Clone, Debug)]
pub struct LearnerConfig {
    /// Learning step size.
    pub alpha: f64,
    pub episodes: usize,
    pub steps_per_episode: usize,
    /// Exploration noise standard deviation (absolute, per input dimension).
    pub sigma: f64,
    /// Convergence threshold on the moving average of |δ|.
    pub eps_delta: f64,
    /// Moving-average window length.
    pub delta_window: usize,
    pub mode: UpdateMode,
    pub seed: u64,
    /// Episode initial states are drawn uniformly from this sub-box.
    pub init_lo: Vec<f64>,
    pub init_hi: Vec<f64>,
    /// Per-episode geometric decay of α and σ (1.0 disables).
    pub alpha_decay: f64,
    pub sigma_decay: f64,
}

impl LearnerConfig {
    /// Baseline configuration for a problem: σ at a tenth of the input-box
    /// span, episode starts across the middle half of the state box.
    pub fn default_for(problem: &ProblemDefinition) -> Self {
        let (ilo, ihi) = problem.input_box();
        let span = ihi
            .iter()
            .zip(ilo)
            .map(|(h, l)| h - l)
            .fold(f64::INFINITY, f64::min);
        let (slo, shi) = problem.state_box();
        let init_lo: Vec<f64> = slo
            .iter()
            .zip(shi)
            .map(|(l, h)| l + 0.25 * (h - l))
            .collect();
        let init_hi: Vec<f64> = slo
            .iter()
            .zip(shi)
            .map(|(l, h)| h - 0.25 * (h - l))
            .collect();
        LearnerConfig {
            alpha: 1e-2,
            episodes: 50,
            steps_per_episode: 20,
            sigma: 0.1 * span,
            eps_delta: 1e-4,
            delta_window: 100,
            mode: UpdateMode::Plain,
            seed: 0,
            init_lo,
            init_hi,
            alpha_decay: 1.0,
            sigma_decay: 1.0,
        }
    }
}

/// One learning transition.
#[derive(Clone, Debug)]
pub struct TdRecord {
    pub state: Vec<f64>,
    pub input: Vec<f64>,
    /// Shifted stage cost ℓ(s, a).
    pub stage_cost: f64,
    pub next_state: Vec<f64>,
    pub delta: f64,
    pub q_gradient: Vec<f64>,
    pub theta_before: Vec<f64>,
    pub theta_after: Vec<f64>,
    /// Whether the update was altered by a positivity projection.
    pub projected: bool,
}

#[derive(Clone, Debug)]
pub struct TrainingOutcome {
    pub params: ParamSet,
    pub trace: Vec<TdRecord>,
    pub converged: bool,
    pub skipped_steps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LearnError {
    /// The positivity projection could not restore a feasible step.
    ProjectionFailure,
    /// Constrained mode requires a stage family with a coefficient matrix.
    WrongFamily,
    /// More than a tenth of the attempted steps lost their inner solve.
    TooManySolverFailures { skipped: usize, attempted: usize },
}

impl core::fmt::Display for LearnError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            LearnError::ProjectionFailure => write!(f, "positivity projection failed"),
            LearnError::WrongFamily => {
                write!(f, "constrained updates need a stage family with a coefficient matrix")
            }
            LearnError::TooManySolverFailures { skipped, attempted } => {
                write!(f, "{skipped} of {attempted} steps lost their inner solve")
            }
        }
    }
}

impl core::error::Error for LearnError {}

/// One-step undiscounted TD error and action-value parameter gradient at
/// `(s, a)`.
pub fn td_error(
    solver: &OcpSolver,
    ss: &SteadyState,
    params: &ParamSet,
    s: &[f64],
    a: &[f64],
) -> Result<(f64, Vec<f64>), OcpError> {
    let q = solver.solve_q(params, s, a)?;
    let next = solver.problem().dynamics(s, a);
    let v_next = solver.solve_v_warm(params, &next, Some(&InitialGuess::shifted(&q, &next)))?;
    let ell = shifted_cost(solver.problem(), ss, s, a);
    Ok((ell + v_next.objective - q.objective, q.theta_gradient))
}

/// Plain gradient step `θ ← θ + α δ ∇θQ`, with the terminal coefficient
/// floored afterwards. Returns the new parameters and whether the floor
/// engaged.
pub fn plain_step(params: &ParamSet, delta: f64, grad: &[f64], alpha: f64) -> (ParamSet, bool) {
    let mut theta = params.theta();
    for (t, g) in theta.iter_mut().zip(grad) {
        *t += alpha * delta * g;
    }
    let mut out = params.with_theta(&theta).expect("same layout");
    let projected = out.project_terminal();
    (out, projected)
}

/// Positivity-constrained step: the unconstrained update is taken when the
/// stage coefficient matrix keeps its eigenvalue floor, otherwise the step
/// is shrunk along its own direction to the largest feasible fraction.
/// This is a conservative feasible treatment of the exact semidefinite
/// projection program, adequate for the small matrices used here.
pub fn constrained_step(
    params: &ParamSet,
    delta: f64,
    grad: &[f64],
    alpha: f64,
) -> Result<(ParamSet, bool), LearnError> {
    let floor = match params.stage_eigenvalue_floor() {
        Some(f) => f,
        None => return Err(LearnError::WrongFamily),
    };
    let current = params.min_stage_eigenvalue().map_err(|_| LearnError::WrongFamily)?;
    if current < floor - 1e-12 {
        return Err(LearnError::ProjectionFailure);
    }

    let (full, term_clip) = plain_step(params, delta, grad, alpha);
    let full_eig = full.min_stage_eigenvalue().map_err(|_| LearnError::WrongFamily)?;
    if full_eig >= floor {
        return Ok((full, term_clip));
    }

    let theta0 = params.theta();
    let step: Vec<f64> = grad.iter().map(|g| alpha * delta * g).collect();
    let eig_at = |t: f64| -> f64 {
        let theta: Vec<f64> = theta0.iter().zip(&step).map(|(a, b)| a + t * b).collect();
        let mut p = params.with_theta(&theta).expect("same layout");
        p.project_terminal();
        p.min_stage_eigenvalue().expect("family checked")
    };

    let mut lo = 0.0;
    let mut hi = 1.0;
    if eig_at(lo) < floor {
        return Err(LearnError::ProjectionFailure);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if eig_at(mid) >= floor {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta: Vec<f64> = theta0.iter().zip(&step).map(|(a, b)| a + lo * b).collect();
    let mut out = params.with_theta(&theta).expect("same layout");
    out.project_terminal();
    Ok((out, true))
}

fn apply_update(
    params: &ParamSet,
    delta: f64,
    grad: &[f64],
    alpha: f64,
    mode: UpdateMode,
) -> Result<(ParamSet, bool), LearnError> {
    match mode {
        UpdateMode::Plain => Ok(plain_step(params, delta, grad, alpha)),
        UpdateMode::Constrained => constrained_step(params, delta, grad, alpha),
    }
}

/// Exploration around the policy input: additive Gaussian noise, clipped to
/// the input box, then shrunk toward the (feasible) policy until the pair
/// passes the feasibility test.
fn explore(
    problem: &ProblemDefinition,
    rng: &mut DeterministicRng,
    s: &[f64],
    policy: &[f64],
    sigma: f64,
) -> Vec<f64> {
    let (ilo, ihi) = problem.input_box();
    let mut cand: Vec<f64> = policy
        .iter()
        .enumerate()
        .map(|(j, p)| (p + sigma * rng.normal()).clamp(ilo[j], ihi[j]))
        .collect();
    for _ in 0..40 {
        if is_feasible(problem, s, &cand) {
            return cand;
        }
        for (c, p) in cand.iter_mut().zip(policy) {
            *c = 0.5 * (*c + p);
        }
    }
    policy.to_vec()
}

/// Episode-based training driver. States evolve under the learned policy
/// plus exploration noise; episodes reset to a random state from the
/// configured sub-box. Stops early once the moving average of |δ| over the
/// configured window falls below the threshold.
pub fn run_training(
    solver: &OcpSolver,
    ss: &SteadyState,
    params0: &ParamSet,
    cfg: &LearnerConfig,
) -> Result<TrainingOutcome, LearnError> {
    if cfg.mode == UpdateMode::Constrained && params0.stage_eigenvalue_floor().is_none() {
        return Err(LearnError::WrongFamily);
    }
    let problem: &Arc<ProblemDefinition> = solver.problem();
    let mut rng = DeterministicRng::new(cfg.seed);
    let mut params = params0.clone();
    let mut trace: Vec<TdRecord> = Vec::new();
    let mut window: VecDeque<f64> = VecDeque::with_capacity(cfg.delta_window);
    let mut window_sum = 0.0;
    let mut converged = false;
    let mut skipped = 0usize;
    let mut attempted = 0usize;

    'episodes: for episode in 0..cfg.episodes {
        let alpha = cfg.alpha * fmath::powi(cfg.alpha_decay, episode as i32);
        let sigma = cfg.sigma * fmath::powi(cfg.sigma_decay, episode as i32);
        let mut s = rng.uniform_box(&cfg.init_lo, &cfg.init_hi);
        let mut guess: Option<InitialGuess> = None;

        for _step in 0..cfg.steps_per_episode {
            attempted += 1;
            let vsol = match solver.solve_v_warm(&params, &s, guess.as_ref()) {
                Ok(v) => v,
                Err(_) => {
                    skipped += 1;
                    guess = None;
                    s = rng.uniform_box(&cfg.init_lo, &cfg.init_hi);
                    continue;
                }
            };
            let policy = vsol.u_traj[0].clone();
            let a = explore(problem, &mut rng, &s, &policy, sigma);

            let mut qguess = InitialGuess::from_solution(&vsol);
            qguess.u[0] = a.clone();
            qguess.x[1] = problem.dynamics(&s, &a);
            let qsol = match solver.solve_q_warm(&params, &s, &a, Some(&qguess)) {
                Ok(q) => q,
                Err(_) => {
                    skipped += 1;
                    s = problem.dynamics(&s, &policy);
                    guess = Some(InitialGuess::shifted(&vsol, &s));
                    continue;
                }
            };
            let s_next = problem.dynamics(&s, &a);
            let vnext = match solver.solve_v_warm(
                &params,
                &s_next,
                Some(&InitialGuess::shifted(&qsol, &s_next)),
            ) {
                Ok(v) => v,
                Err(_) => {
                    skipped += 1;
                    s = s_next;
                    guess = None;
                    continue;
                }
            };

            let ell = shifted_cost(problem, ss, &s, &a);
            let delta = ell + vnext.objective - qsol.objective;
            let grad = qsol.theta_gradient.clone();
            let theta_before = params.theta();
            let (next_params, projected) = apply_update(&params, delta, &grad, alpha, cfg.mode)?;

            trace.push(TdRecord {
                state: s.clone(),
                input: a.clone(),
                stage_cost: ell,
                next_state: s_next.clone(),
                delta,
                q_gradient: grad,
                theta_before,
                theta_after: next_params.theta(),
                projected,
            });
            params = next_params;

            if window.len() == cfg.delta_window {
                window_sum -= window.pop_front().expect("non-empty");
            }
            let abs_delta = fmath::abs(delta);
            window.push_back(abs_delta);
            window_sum += abs_delta;
            if window.len() == cfg.delta_window
                && window_sum / (cfg.delta_window as f64) < cfg.eps_delta
            {
                converged = true;
                break 'episodes;
            }

            guess = Some(InitialGuess::from_solution(&vnext));
            s = s_next;
        }

        if attempted >= 30 && skipped * 10 > attempted {
            return Err(LearnError::TooManySolverFailures { skipped, attempted });
        }
    }

    if attempted >= 30 && skipped * 10 > attempted {
        return Err(LearnError::TooManySolverFailures { skipped, attempted });
    }

    Ok(TrainingOutcome {
        params,
        trace,
        converged,
        skipped_steps: skipped,
    })
}
