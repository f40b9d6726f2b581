//! Rotated-cost construction and grid-based dissipativity certification.
//!
//! Given a candidate storage function λ, the rotated stage cost
//! `ℓ̄(s,a) = ℓ(s,a) + λ(s) − λ(f(s,a))` is evaluated over a grid of the
//! feasible set. The problem is certified strictly dissipative when the
//! ratio `ℓ̄ / ‖s−s_e‖²` stays above a positive threshold everywhere on the
//! grid; otherwise the result is inconclusive. The certificate is a grid
//! statement, not a symbolic proof, and is labeled as such.

use alloc::vec;
use alloc::vec::Vec;

use crate::fmath;
use crate::problem::{is_feasible, shifted_cost, ProblemDefinition, SteadyState};

/// Candidate storage function λ(s), normalized to λ(s_e) = 0 by the caller.
pub trait StorageFunction {
    fn value(&self, s: &[f64]) -> f64;
}

impl StorageFunction for crate::approx::ParamSet {
    fn value(&self, s: &[f64]) -> f64 {
        self.storage_value(s)
    }
}

/// Adapter for ad-hoc storage candidates.
pub struct FnStorage<F: Fn(&[f64]) -> f64>(pub F);

impl<F: Fn(&[f64]) -> f64> StorageFunction for FnStorage<F> {
    fn value(&self, s: &[f64]) -> f64 {
        (self.0)(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DissipError {
    /// No feasible grid point outside the exclusion ball.
    EmptyGrid,
    /// The quadratic tightening needs a positive input-quadratic coefficient.
    NonPositiveCaa,
    /// Trajectory states do not satisfy the dynamics.
    InconsistentTrajectory { step: usize, defect: f64 },
}

impl core::fmt::Display for DissipError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DissipError::EmptyGrid => write!(f, "verification grid contains no feasible points"),
            DissipError::NonPositiveCaa => write!(f, "input-quadratic coefficient must be positive"),
            DissipError::InconsistentTrajectory { step, defect } => {
                write!(f, "trajectory defect {defect} at step {step}")
            }
        }
    }
}

impl core::error::Error for DissipError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Dissipative,
    Inconclusive,
}

impl core::fmt::Display for Verdict {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Verdict::Dissipative => write!(f, "dissipative"),
            Verdict::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

/// Rectangular evaluation grid over states and inputs.
#[derive(Clone, Debug)]
pub struct GridSpec {
    pub state_lo: Vec<f64>,
    pub state_hi: Vec<f64>,
    pub input_lo: Vec<f64>,
    pub input_hi: Vec<f64>,
    /// Points per dimension.
    pub points: usize,
}

impl GridSpec {
    pub fn new(
        state_lo: Vec<f64>,
        state_hi: Vec<f64>,
        input_lo: Vec<f64>,
        input_hi: Vec<f64>,
        points: usize,
    ) -> Self {
        assert!(points >= 2);
        GridSpec {
            state_lo,
            state_hi,
            input_lo,
            input_hi,
            points,
        }
    }

    fn coords(&self, lo: &[f64], hi: &[f64], idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .enumerate()
            .map(|(d, k)| lo[d] + (hi[d] - lo[d]) * *k as f64 / (self.points - 1) as f64)
            .collect()
    }

    /// Visits every grid pair; the callback receives (s, a).
    pub fn for_each(&self, mut visit: impl FnMut(&[f64], &[f64])) {
        let ns = self.state_lo.len();
        let na = self.input_lo.len();
        let dims = ns + na;
        let mut idx = vec![0usize; dims];
        loop {
            let s = self.coords(&self.state_lo, &self.state_hi, &idx[..ns]);
            let a = self.coords(&self.input_lo, &self.input_hi, &idx[ns..]);
            visit(&s, &a);
            let mut d = 0;
            loop {
                idx[d] += 1;
                if idx[d] < self.points {
                    break;
                }
                idx[d] = 0;
                d += 1;
                if d == dims {
                    return;
                }
            }
        }
    }
}

/// Radius of the ball around `s_e` excluded from the ρ computation.
pub const EXCLUSION_RADIUS: f64 = 1e-6;
/// Default positivity threshold of the certification test.
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct DissipativityCertificate {
    pub verdict: Verdict,
    /// Largest ρ with `ℓ̄(s,a) ≥ ρ‖s−s_e‖²` on the grid (minimum ratio).
    pub rho_max: f64,
    /// Grid point attaining the minimum margin.
    pub worst_point: (Vec<f64>, Vec<f64>),
    pub grid: GridSpec,
    pub epsilon: f64,
    pub feasible_samples: usize,
    pub total_samples: usize,
}

/// `ℓ̄(s,a) = ℓ(s,a) + λ(s) − λ(f(s,a))` with the shifted economic cost ℓ.
pub fn rotated_cost(
    problem: &ProblemDefinition,
    ss: &SteadyState,
    storage: &dyn StorageFunction,
    s: &[f64],
    a: &[f64],
) -> f64 {
    let next = problem.dynamics(s, a);
    shifted_cost(problem, ss, s, a) + storage.value(s) - storage.value(&next)
}

/// Grid certification of strict dissipativity for a candidate storage.
pub fn verify(
    problem: &ProblemDefinition,
    ss: &SteadyState,
    storage: &dyn StorageFunction,
    grid: &GridSpec,
    epsilon: f64,
) -> Result<DissipativityCertificate, DissipError> {
    let mut rho = f64::INFINITY;
    let mut worst: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut feasible = 0usize;
    let mut total = 0usize;
    grid.for_each(|s, a| {
        total += 1;
        if !is_feasible(problem, s, a) {
            return;
        }
        feasible += 1;
        let dist2 = s
            .iter()
            .zip(&ss.s_e)
            .map(|(x, e)| (x - e) * (x - e))
            .sum::<f64>();
        if dist2 <= EXCLUSION_RADIUS * EXCLUSION_RADIUS {
            return;
        }
        let ratio = rotated_cost(problem, ss, storage, s, a) / dist2;
        if ratio < rho {
            rho = ratio;
            worst = Some((s.to_vec(), a.to_vec()));
        }
    });
    let worst = worst.ok_or(DissipError::EmptyGrid)?;
    let verdict = if rho > epsilon {
        Verdict::Dissipative
    } else {
        Verdict::Inconclusive
    };
    Ok(DissipativityCertificate {
        verdict,
        rho_max: rho,
        worst_point: worst,
        grid: grid.clone(),
        epsilon,
        feasible_samples: feasible,
        total_samples: total,
    })
}

/// Closed-form tightest ρ for a scalar quadratic rotated cost
/// `c_ss s² + c_sa s a + c_aa a²`: minimizing over `a` gives
/// `c_ss − c_sa²/(4 c_aa)`.
pub fn max_rho_quadratic(c_ss: f64, c_aa: f64, c_sa: f64) -> Result<f64, DissipError> {
    if c_aa <= 0.0 {
        return Err(DissipError::NonPositiveCaa);
    }
    Ok(c_ss - c_sa * c_sa / (4.0 * c_aa))
}

/// Finite-horizon telescoping identity:
/// `Σ ℓ = −λ(x_0) + λ(x_T) + Σ ℓ̄` for any storage and any trajectory
/// consistent with the dynamics. Returns the absolute residual.
pub fn telescoping_check(
    problem: &ProblemDefinition,
    ss: &SteadyState,
    storage: &dyn StorageFunction,
    x_traj: &[Vec<f64>],
    u_traj: &[Vec<f64>],
) -> Result<f64, DissipError> {
    assert_eq!(x_traj.len(), u_traj.len() + 1);
    for (k, u) in u_traj.iter().enumerate() {
        let next = problem.dynamics(&x_traj[k], u);
        let defect = crate::linalg::norm_inf(&crate::linalg::sub(&next, &x_traj[k + 1]));
        if defect > 1e-8 {
            return Err(DissipError::InconsistentTrajectory { step: k, defect });
        }
    }
    let mut lhs = 0.0;
    let mut rot = 0.0;
    for (k, u) in u_traj.iter().enumerate() {
        lhs += shifted_cost(problem, ss, &x_traj[k], u);
        rot += rotated_cost(problem, ss, storage, &x_traj[k], u);
    }
    let rhs = -storage.value(&x_traj[0]) + storage.value(&x_traj[u_traj.len()]) + rot;
    Ok(fmath::abs(lhs - rhs))
}

/// Open interval of quadratic storage coefficients `p` for which the rotated
/// cost of the linear-quadratic benchmark (`s' = 2s − a`,
/// `L = s² + a² + 4sa`) is positive definite. The definiteness boundary
/// `c_sa² = 4 c_ss c_aa` expands to `p² + 12p + 3 = 0`, so the interval is
/// `(−6 − √33, −6 + √33)`.
pub fn lqr_storage_interval() -> (f64, f64) {
    let root = fmath::sqrt(33.0);
    (-6.0 - root, -6.0 + root)
}
