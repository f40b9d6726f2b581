//! Built-in case studies and their independent oracles.
//!
//! Three benchmark problems exercise the whole pipeline: a scalar
//! linear-quadratic regulator with an indefinite economic cost, a scalar
//! problem that provably admits no storage function, and a scalar optimal
//! investment problem with a logarithmic utility. The oracles here (Riccati
//! value iteration with a cross term, the constructed fixed-point parameter
//! set, the quadratic-storage feasibility scan, the analytic investment
//! multiplier) are what the test suites check the learned quantities
//! against.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::approx::ParamSet;
use crate::dissip::{self, FnStorage, GridSpec, Verdict};
use crate::fmath;
use crate::learner::{LearnerConfig, UpdateMode};
use crate::linalg::Mat;
use crate::ocp::OcpConfig;
use crate::problem::{steady_state, ProblemBuilder, ProblemDefinition, SteadyState};

#[derive(Clone, Debug, PartialEq)]
pub enum BenchError {
    /// Riccati value iteration failed to converge (blow-up or sign loss).
    Divergence,
    /// Storage coefficient outside the positive-definite rotated-cost
    /// interval.
    InvalidStorage { p: f64 },
}

impl core::fmt::Display for BenchError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            BenchError::Divergence => write!(f, "riccati value iteration diverged"),
            BenchError::InvalidStorage { p } => {
                write!(f, "storage coefficient {p} outside the valid interval")
            }
        }
    }
}

impl core::error::Error for BenchError {}

/// Fixed point of the discrete-time dynamic-programming recursion for
/// linear dynamics and quadratic cost with a cross term.
#[derive(Clone, Debug)]
pub struct RiccatiResult {
    /// Value-function coefficient: `V(s) = sᵀ P s`.
    pub p: Mat,
    /// Feedback gain in the form `a = K s`.
    pub k: Mat,
    pub iterations: usize,
}

/// Value iteration on
/// `P ← Q + AᵀPA − (S + AᵀPB)(R + BᵀPB)⁻¹(Sᵀ + BᵀPA)`
/// for the stage cost `sᵀQs + aᵀRa + 2 sᵀS a`.
///
/// Starts from a large multiple of the identity because the indefinite
/// economic costs here do not satisfy the usual positive-semidefinite
/// assumptions; convergence is monitored rather than assumed.
pub fn riccati(a: &Mat, b: &Mat, q: &Mat, r: &Mat, s_cross: &Mat) -> Result<RiccatiResult, BenchError> {
    let n = a.rows();
    let mut p = Mat::identity(n).scaled(1e3);
    let a_t = a.transpose();
    let b_t = b.transpose();
    let s_t = s_cross.transpose();
    for iter in 0..200_000 {
        // R + BᵀPB must stay positive definite for the minimization step.
        let inner = r.add(&b_t.matmul(&p).matmul(b));
        let chol = match inner.symmetrized().cholesky() {
            Some(c) => c,
            None => return Err(BenchError::Divergence),
        };
        // (Sᵀ + BᵀPA), solved column by column.
        let rhs = s_t.add(&b_t.matmul(&p).matmul(a));
        let m = rhs.cols();
        let mut solved = Mat::zeros(rhs.rows(), m);
        for j in 0..m {
            let col: Vec<f64> = (0..rhs.rows()).map(|i| rhs.get(i, j)).collect();
            let x = chol.solve(&col);
            for i in 0..rhs.rows() {
                solved.set(i, j, x[i]);
            }
        }
        let gain_term = s_cross.add(&a_t.matmul(&p).matmul(b)).matmul(&solved);
        let next = q.add(&a_t.matmul(&p).matmul(a)).sub(&gain_term).symmetrized();
        if next.max_abs() > 1e12 {
            return Err(BenchError::Divergence);
        }
        let diff = next.sub(&p).max_abs();
        p = next;
        if diff <= 1e-12 {
            let inner = r.add(&b_t.matmul(&p).matmul(b));
            let chol = inner.symmetrized().cholesky().ok_or(BenchError::Divergence)?;
            let rhs = s_t.add(&b_t.matmul(&p).matmul(a));
            let mut kmat = Mat::zeros(rhs.rows(), rhs.cols());
            for j in 0..rhs.cols() {
                let col: Vec<f64> = (0..rhs.rows()).map(|i| rhs.get(i, j)).collect();
                let x = chol.solve(&col);
                for i in 0..rhs.rows() {
                    // a = -(R + BᵀPB)⁻¹(Sᵀ + BᵀPA) s, reported as a = K s.
                    kmat.set(i, j, -x[i]);
                }
            }
            return Ok(RiccatiResult { p, k: kmat, iterations: iter + 1 });
        }
    }
    Err(BenchError::Divergence)
}

/// Scalar shortcut for the benchmark problems.
pub fn riccati_scalar(a: f64, b: f64, q: f64, r: f64, s: f64) -> Result<(f64, f64), BenchError> {
    let res = riccati(
        &Mat::from_rows(&[&[a]]),
        &Mat::from_rows(&[&[b]]),
        &Mat::from_rows(&[&[q]]),
        &Mat::from_rows(&[&[r]]),
        &Mat::from_rows(&[&[s]]),
    )?;
    Ok((res.p.get(0, 0), res.k.get(0, 0)))
}

// ----- benchmark problems -----

/// Scalar regulator `s' = 2s − a` with the indefinite economic cost
/// `L = s² + a² + 4sa`.
///
/// The boxes are an implementation choice (the problem is naturally
/// unconstrained); they are wide enough that the optimal policy never
/// saturates on the test ranges, which keeps the Riccati references exact.
pub fn lqr_problem() -> ProblemDefinition {
    ProblemBuilder::new(1, 1)
        .state_box(vec![-20.0], vec![20.0])
        .input_box(vec![-20.0], vec![20.0])
        .dynamics(
            |s, a| vec![2.0 * s[0] - a[0]],
            |_s, _a| Mat::from_rows(&[&[2.0, -1.0]]),
        )
        .cost(
            |s, a| s[0] * s[0] + a[0] * a[0] + 4.0 * s[0] * a[0],
            |s, a| vec![2.0 * s[0] + 4.0 * a[0], 2.0 * a[0] + 4.0 * s[0]],
            |_s, _a| Mat::from_rows(&[&[2.0, 4.0], &[4.0, 2.0]]),
        )
        .build()
        .expect("benchmark problem is well-formed")
}

/// Scalar problem `s' = a`, `L = −2s² + a² + sa + s²a²`, which admits no
/// storage function: necessary conditions at `s = 0` and `a = 0` contradict
/// each other (see [`appendix_scan`]).
pub fn nondissipative_problem() -> ProblemDefinition {
    ProblemBuilder::new(1, 1)
        .state_box(vec![-10.0], vec![10.0])
        .input_box(vec![-10.0], vec![10.0])
        .dynamics(|_s, a| vec![a[0]], |_s, _a| Mat::from_rows(&[&[0.0, 1.0]]))
        .cost(
            |s, a| -2.0 * s[0] * s[0] + a[0] * a[0] + s[0] * a[0] + s[0] * s[0] * a[0] * a[0],
            |s, a| {
                vec![
                    -4.0 * s[0] + a[0] + 2.0 * s[0] * a[0] * a[0],
                    2.0 * a[0] + s[0] + 2.0 * s[0] * s[0] * a[0],
                ]
            },
            |s, a| {
                Mat::from_rows(&[
                    &[-4.0 + 2.0 * a[0] * a[0], 1.0 + 4.0 * s[0] * a[0]],
                    &[1.0 + 4.0 * s[0] * a[0], 2.0 + 2.0 * s[0] * s[0]],
                ])
            },
        )
        .build()
        .expect("benchmark problem is well-formed")
}

/// Guard margin keeping the investment log argument positive.
pub const INVESTMENT_LOG_GUARD: f64 = 1e-6;

fn inv_pow(s: f64, e: f64) -> f64 {
    fmath::powf(s.max(1e-12), e)
}

/// Optimal investment benchmark: `s' = a`, `L = −ln(5 s^0.34 − a)`,
/// `X = [0, 10]`, `U = [0.01, 10]`. The log argument is kept positive by an
/// extra inequality constraint `a + guard − 5 s^0.34 ≤ 0`.
pub fn investment_problem() -> ProblemDefinition {
    ProblemBuilder::new(1, 1)
        .state_box(vec![0.0], vec![10.0])
        .input_box(vec![0.01], vec![10.0])
        .dynamics(|_s, a| vec![a[0]], |_s, _a| Mat::from_rows(&[&[0.0, 1.0]]))
        .constraints(
            1,
            |s, a| vec![a[0] + INVESTMENT_LOG_GUARD - 5.0 * inv_pow(s[0], 0.34)],
            |s, _a| Mat::from_rows(&[&[-1.7 * inv_pow(s[0], -0.66), 1.0]]),
        )
        .constraint_curvature(|s, _a, w| {
            // ∂²h/∂s² = +1.122 s^(−1.66); only the state-state entry is nonzero.
            let mut m = Mat::zeros(2, 2);
            m.set(0, 0, w[0] * 1.122 * inv_pow(s[0], -1.66));
            m
        })
        .cost(
            |s, a| {
                let c = 5.0 * inv_pow(s[0], 0.34) - a[0];
                if c <= 0.0 {
                    f64::INFINITY
                } else {
                    -fmath::ln(c)
                }
            },
            |s, a| {
                let c = (5.0 * inv_pow(s[0], 0.34) - a[0]).max(1e-9);
                vec![-1.7 * inv_pow(s[0], -0.66) / c, 1.0 / c]
            },
            |s, a| {
                let c = (5.0 * inv_pow(s[0], 0.34) - a[0]).max(1e-9);
                let cs = 1.7 * inv_pow(s[0], -0.66);
                Mat::from_rows(&[
                    &[cs * cs / (c * c) + 1.122 * inv_pow(s[0], -1.66) / c, -cs / (c * c)],
                    &[-cs / (c * c), 1.0 / (c * c)],
                ])
            },
        )
        .build()
        .expect("benchmark problem is well-formed")
}

/// Rotated-cost quadratic coefficients for the regulator benchmark under the
/// storage `λ(s) = p s²`: full coefficients of `c_ss s² + c_sa sa + c_aa a²`.
pub fn lqr_rotated_coefficients(p: f64) -> (f64, f64, f64) {
    (1.0 - 3.0 * p, 4.0 + 4.0 * p, 1.0 - p)
}

/// Parameter set that reproduces the optimal value and policy of the
/// regulator benchmark exactly: storage `p s²`, stage cost equal to the
/// rotated cost for that storage, and the terminal coefficient set to the
/// Riccati value of the rotated problem.
pub fn construct_lqr_fixed_point(p: f64) -> Result<ParamSet, BenchError> {
    let (lo, hi) = dissip::lqr_storage_interval();
    if !(p > lo && p < hi) {
        return Err(BenchError::InvalidStorage { p });
    }
    let (c_ss, c_sa, c_aa) = lqr_rotated_coefficients(p);
    let (p_bar, _k) = riccati_scalar(2.0, -1.0, c_ss, c_aa, c_sa / 2.0)?;
    let half = c_sa / 2.0;
    let theta = [p, p_bar, c_ss, half, half, c_aa];
    Ok(ParamSet::free_quadratic(1, 1, &[0.0], &[0.0], &theta).expect("layout fixed"))
}

// ----- appendix scan -----

#[derive(Clone, Debug)]
pub struct ScanEntry {
    pub theta: f64,
    /// Necessary condition from `s = 0`: `λ(a) ≤ a²` on the grid.
    pub storage_bound_holds: bool,
    /// Necessary condition from `a = 0`: `λ(s) > 2 s²` on the grid.
    pub growth_bound_holds: bool,
    pub verifier_verdict: Verdict,
}

#[derive(Clone, Debug)]
pub struct ScanReport {
    pub entries: Vec<ScanEntry>,
    /// Candidates passing both necessary conditions (empty for this problem).
    pub feasible: Vec<f64>,
}

impl ScanReport {
    pub fn total(&self) -> usize {
        self.entries.len()
    }

    pub fn feasible_count(&self) -> usize {
        self.feasible.len()
    }
}

/// Evaluates, for each candidate quadratic storage `λ(s) = θ s²` of the
/// non-dissipative benchmark, the two necessary conditions obtained by
/// restricting the dissipation inequality to `s = 0` and to `a = 0`, and
/// additionally runs the grid verifier. The two conditions force `θ ≤ 1`
/// and `θ > 2` simultaneously, so no candidate passes.
pub fn appendix_scan(theta_grid: &[f64], verify_grid: &GridSpec) -> ScanReport {
    let problem = nondissipative_problem();
    let ss = steady_state(&problem).expect("benchmark steady state");
    let mut entries = Vec::with_capacity(theta_grid.len());
    let mut feasible = Vec::new();
    let samples = 81;
    for &theta in theta_grid {
        // s = 0 slice: λ(a) ≤ ℓ(0, a) = a² for all a ⇔ (θ − 1)a² ≤ 0.
        let mut storage_bound = true;
        // a = 0 slice: −λ(s) ≤ −2s² − ρ s² for some ρ > 0 ⇔ λ(s) > 2s².
        let mut growth_bound = true;
        for k in 0..samples {
            let v = -2.0 + 4.0 * k as f64 / (samples - 1) as f64;
            if theta * v * v > v * v + 1e-12 {
                storage_bound = false;
            }
            if v * v > 1e-12 && theta * v * v <= 2.0 * v * v + 1e-12 {
                growth_bound = false;
            }
        }
        let storage = FnStorage(move |s: &[f64]| theta * s[0] * s[0]);
        let cert = dissip::verify(&problem, &ss, &storage, verify_grid, dissip::DEFAULT_EPSILON)
            .expect("grid non-empty");
        if storage_bound && growth_bound {
            feasible.push(theta);
        }
        entries.push(ScanEntry {
            theta,
            storage_bound_holds: storage_bound,
            growth_bound_holds: growth_bound,
            verifier_verdict: cert.verdict,
        });
    }
    ScanReport { entries, feasible }
}

/// Uniform candidate grid for [`appendix_scan`].
pub fn theta_scan_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut t = lo;
    while t <= hi + step * 0.5 {
        out.push(t);
        t += step;
    }
    out
}

/// Analytic storage coefficient for the investment benchmark.
///
/// The steady-state multiplier gives the magnitude `1/(5 s_e^0.34 − s_e)`;
/// both signs are screened on a rotated-cost grid and the sign that keeps
/// the rotated cost nonnegative is returned.
pub fn investment_analytic_theta() -> f64 {
    let problem = investment_problem();
    let ss = steady_state(&problem).expect("benchmark steady state");
    let magnitude = ss.nu[0].abs();
    let grid = GridSpec::new(vec![0.2], vec![9.8], vec![0.01], vec![9.8], 40);
    let mut best = magnitude;
    let mut best_min = f64::NEG_INFINITY;
    for candidate in [magnitude, -magnitude] {
        let se = ss.s_e[0];
        let storage = FnStorage(move |s: &[f64]| candidate * (s[0] - se));
        let mut min_val = f64::INFINITY;
        grid.for_each(|s, a| {
            if crate::problem::is_feasible(&problem, s, a) {
                min_val = min_val.min(dissip::rotated_cost(&problem, &ss, &storage, s, a));
            }
        });
        if min_val > best_min {
            best_min = min_val;
            best = candidate;
        }
    }
    best
}

// ----- presets -----

/// Benchmark identifiers used by the command-line front end.
pub const BENCHMARK_NAMES: [&str; 3] = ["lqr", "nondissipative", "investment"];

/// Everything the experiment runner needs to reproduce a case study.
pub struct BenchmarkPreset {
    pub name: &'static str,
    pub problem: Arc<ProblemDefinition>,
    pub steady: SteadyState,
    pub params0: ParamSet,
    pub ocp: OcpConfig,
    pub learner: LearnerConfig,
    pub verify_grid: GridSpec,
    /// State range for value/policy snapshots.
    pub snapshot_lo: f64,
    pub snapshot_hi: f64,
}

/// Learning initialization for the regulator benchmark.
pub const LQR_THETA0: [f64; 6] = [0.1, 1.0, 1.0, 0.0, 0.0, 0.0];

pub fn lqr_preset() -> BenchmarkPreset {
    let problem = Arc::new(lqr_problem());
    let steady = steady_state(&problem).expect("benchmark steady state");
    let params0 = ParamSet::free_quadratic(1, 1, &steady.s_e, &steady.a_e, &LQR_THETA0)
        .expect("layout fixed");
    BenchmarkPreset {
        name: "lqr",
        problem,
        steady,
        params0,
        ocp: OcpConfig {
            horizon: 20,
            ..OcpConfig::default()
        },
        learner: LearnerConfig {
            alpha: 5e-3,
            episodes: 50,
            steps_per_episode: 60,
            sigma: 0.5,
            eps_delta: 1e-4,
            delta_window: 100,
            mode: UpdateMode::Plain,
            seed: 1,
            init_lo: vec![-2.0],
            init_hi: vec![2.0],
            alpha_decay: 0.94,
            sigma_decay: 0.94,
        },
        verify_grid: GridSpec::new(vec![-3.0], vec![3.0], vec![-3.0], vec![3.0], 101),
        snapshot_lo: -3.0,
        snapshot_hi: 3.0,
    }
}

/// Constrained-mode variant of the regulator preset over the monomial-basis
/// family (storage, terminal, packed symmetric stage matrix).
pub fn lqr_sos_params0(steady: &SteadyState) -> ParamSet {
    ParamSet::sos_monomial(1, 1, &steady.s_e, &steady.a_e, &[0.1, 1.0, 1.0, 0.0, 1.0], crate::approx::EPS_PD)
        .expect("layout fixed")
}

pub fn nondissipative_preset() -> BenchmarkPreset {
    let problem = Arc::new(nondissipative_problem());
    let steady = steady_state(&problem).expect("benchmark steady state");
    let theta0 = [0.1, 1.0, 1.0, 0.0, 0.0, 1.0];
    let params0 = ParamSet::free_quadratic(1, 1, &steady.s_e, &steady.a_e, &theta0)
        .expect("layout fixed");
    BenchmarkPreset {
        name: "nondissipative",
        problem,
        steady,
        params0,
        ocp: OcpConfig {
            horizon: 20,
            ..OcpConfig::default()
        },
        learner: LearnerConfig {
            alpha: 1e-3,
            episodes: 30,
            steps_per_episode: 40,
            sigma: 0.3,
            eps_delta: 1e-4,
            delta_window: 100,
            mode: UpdateMode::Plain,
            seed: 1,
            init_lo: vec![-1.5],
            init_hi: vec![1.5],
            alpha_decay: 0.97,
            sigma_decay: 0.97,
        },
        verify_grid: GridSpec::new(vec![-2.0], vec![2.0], vec![-2.0], vec![2.0], 101),
        snapshot_lo: -2.0,
        snapshot_hi: 2.0,
    }
}

pub fn investment_preset() -> BenchmarkPreset {
    let problem = Arc::new(investment_problem());
    let steady = steady_state(&problem).expect("benchmark steady state");
    // Storage initialized at the sum-of-squares approximation reported for
    // this problem; the stage cost is the rotated economic cost itself and
    // the scheme runs a long horizon with no terminal term.
    let params0 = ParamSet::rotated_economic(
        &problem,
        &steady.s_e,
        &steady.a_e,
        steady.l_e,
        &[0.23],
    )
    .expect("layout fixed");
    BenchmarkPreset {
        name: "investment",
        problem,
        steady,
        params0,
        ocp: OcpConfig {
            horizon: 100,
            ..OcpConfig::default()
        },
        learner: LearnerConfig {
            alpha: 2e-3,
            episodes: 100,
            steps_per_episode: 20,
            sigma: 0.5,
            eps_delta: 1e-4,
            delta_window: 100,
            mode: UpdateMode::Plain,
            seed: 1,
            init_lo: vec![0.5],
            init_hi: vec![8.0],
            alpha_decay: 1.0,
            sigma_decay: 1.0,
        },
        verify_grid: GridSpec::new(vec![0.1], vec![10.0], vec![0.01], vec![10.0], 101),
        snapshot_lo: 0.5,
        snapshot_hi: 8.0,
    }
}

pub fn preset_by_name(name: &str) -> Option<BenchmarkPreset> {
    match name {
        "lqr" => Some(lqr_preset()),
        "nondissipative" => Some(nondissipative_preset()),
        "investment" => Some(investment_preset()),
        _ => None,
    }
}
