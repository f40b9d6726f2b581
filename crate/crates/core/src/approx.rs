//! Parametric families for the storage function, terminal cost, and MPC
//! stage cost, with exact parameter gradients and positivity structure.
//!
//! A [`ParamSet`] is an immutable snapshot of every learnable coefficient:
//! the learner produces a fresh snapshot per update. All families are
//! anchored at the optimal steady state so that the storage vanishes at
//! `s_e` and the stage cost vanishes at `(s_e, a_e)` for every parameter
//! value.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Mat;
use crate::problem::ProblemDefinition;

/// Ridge added to `M Mᵀ` in the factored positive-definite family.
pub const DEFAULT_FACTORED_EPSILON: f64 = 1e-3;
/// Eigenvalue floor kept on the quadratic-form coefficient matrix during
/// constrained learning.
pub const EPS_PD: f64 = 1e-6;
/// Floor on the terminal-cost coefficient.
pub const EPS_TERM: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub enum ApproxError {
    /// The operation needs a stage family that exposes a coefficient matrix.
    WrongFamily,
    BadLength { expected: usize, got: usize },
}

impl core::fmt::Display for ApproxError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ApproxError::WrongFamily => write!(f, "stage family exposes no coefficient matrix"),
            ApproxError::BadLength { expected, got } => {
                write!(f, "parameter vector length {got}, expected {expected}")
            }
        }
    }
}

impl core::error::Error for ApproxError {}

/// Storage function shape; always zero at the anchor state.
#[derive(Clone, Debug)]
pub enum StorageForm {
    /// `λ(s) = Σ_{i<=j} w_ij (s−s_e)_i (s−s_e)_j`, packed upper triangle.
    Quadratic { coeffs: Vec<f64> },
    /// `λ(s) = cᵀ (s−s_e)`.
    Linear { coeffs: Vec<f64> },
}

/// Stage-cost family.
#[derive(Clone, Debug)]
pub enum StageForm {
    /// Full coefficient matrix on `v = (s−s_e, a−a_e)`: `vᵀ M v`, entries
    /// stored row-major and learned independently.
    FreeQuadratic { entries: Vec<f64> },
    /// `vᵀ (M Mᵀ + εI) v`, positive definite by construction.
    FactoredPsd { factor: Vec<f64>, epsilon: f64 },
    /// Quadratic form over degree-1 monomials with a symmetric coefficient
    /// matrix kept positive definite by the constrained learner: `mᵀ R m`,
    /// packed upper triangle.
    SosMonomial { coeffs: Vec<f64>, eps_pd: f64 },
    /// Shifted economic cost plus storage difference,
    /// `L(s,a) − L_e + λ(s) − λ(f(s,a))`; the stage has no parameters of
    /// its own, it follows the storage coefficients.
    RotatedEconomic,
}

#[derive(Clone)]
pub struct ParamSet {
    n: usize,
    m: usize,
    anchor_s: Vec<f64>,
    anchor_a: Vec<f64>,
    /// Steady economic cost, used by the rotated-economic stage family.
    l_e: f64,
    problem: Option<Arc<ProblemDefinition>>,
    storage: StorageForm,
    terminal: Option<f64>,
    stage: StageForm,
}

impl core::fmt::Debug for ParamSet {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ParamSet")
            .field("storage", &self.storage)
            .field("terminal", &self.terminal)
            .field("stage", &self.stage)
            .finish()
    }
}

fn packed_len(q: usize) -> usize {
    q * (q + 1) / 2
}

fn packed_index(q: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < q);
    i * (2 * q - i + 1) / 2 + (j - i)
}

/// Expands packed polynomial coefficients into the symmetric matrix of the
/// quadratic form (off-diagonal coefficients split in half).
fn packed_to_sym(q: usize, coeffs: &[f64]) -> Mat {
    let mut w = Mat::zeros(q, q);
    for i in 0..q {
        for j in i..q {
            let c = coeffs[packed_index(q, i, j)];
            if i == j {
                w.set(i, i, c);
            } else {
                w.set(i, j, 0.5 * c);
                w.set(j, i, 0.5 * c);
            }
        }
    }
    w
}

impl ParamSet {
    /// Free quadratic family: storage quadratic, scalar terminal
    /// coefficient, unconstrained full stage matrix. Parameter layout
    /// `[storage packed, terminal, stage row-major]`.
    pub fn free_quadratic(
        n: usize,
        m: usize,
        anchor_s: &[f64],
        anchor_a: &[f64],
        theta: &[f64],
    ) -> Result<Self, ApproxError> {
        let d = packed_len(n) + 1 + (n + m) * (n + m);
        if theta.len() != d {
            return Err(ApproxError::BadLength { expected: d, got: theta.len() });
        }
        let storage_len = packed_len(n);
        Ok(ParamSet {
            n,
            m,
            anchor_s: anchor_s.to_vec(),
            anchor_a: anchor_a.to_vec(),
            l_e: 0.0,
            problem: None,
            storage: StorageForm::Quadratic { coeffs: theta[..storage_len].to_vec() },
            terminal: Some(theta[storage_len]),
            stage: StageForm::FreeQuadratic { entries: theta[storage_len + 1..].to_vec() },
        })
    }

    /// Factored positive-definite family `vᵀ(MMᵀ + εI)v`.
    pub fn factored_psd(
        n: usize,
        m: usize,
        anchor_s: &[f64],
        anchor_a: &[f64],
        theta: &[f64],
        epsilon: f64,
    ) -> Result<Self, ApproxError> {
        let d = packed_len(n) + 1 + (n + m) * (n + m);
        if theta.len() != d {
            return Err(ApproxError::BadLength { expected: d, got: theta.len() });
        }
        let storage_len = packed_len(n);
        Ok(ParamSet {
            n,
            m,
            anchor_s: anchor_s.to_vec(),
            anchor_a: anchor_a.to_vec(),
            l_e: 0.0,
            problem: None,
            storage: StorageForm::Quadratic { coeffs: theta[..storage_len].to_vec() },
            terminal: Some(theta[storage_len]),
            stage: StageForm::FactoredPsd {
                factor: theta[storage_len + 1..].to_vec(),
                epsilon,
            },
        })
    }

    /// Monomial-basis quadratic form with a positivity-constrained symmetric
    /// coefficient matrix (degree-1 monomials of the anchored variables).
    pub fn sos_monomial(
        n: usize,
        m: usize,
        anchor_s: &[f64],
        anchor_a: &[f64],
        theta: &[f64],
        eps_pd: f64,
    ) -> Result<Self, ApproxError> {
        let d = packed_len(n) + 1 + packed_len(n + m);
        if theta.len() != d {
            return Err(ApproxError::BadLength { expected: d, got: theta.len() });
        }
        let storage_len = packed_len(n);
        Ok(ParamSet {
            n,
            m,
            anchor_s: anchor_s.to_vec(),
            anchor_a: anchor_a.to_vec(),
            l_e: 0.0,
            problem: None,
            storage: StorageForm::Quadratic { coeffs: theta[..storage_len].to_vec() },
            terminal: Some(theta[storage_len]),
            stage: StageForm::SosMonomial {
                coeffs: theta[storage_len + 1..].to_vec(),
                eps_pd,
            },
        })
    }

    /// Linear storage with the stage cost equal to the rotated economic
    /// cost and no terminal term; `theta` holds the storage coefficients.
    pub fn rotated_economic(
        problem: &Arc<ProblemDefinition>,
        anchor_s: &[f64],
        anchor_a: &[f64],
        l_e: f64,
        theta: &[f64],
    ) -> Result<Self, ApproxError> {
        let n = problem.state_dim();
        let m = problem.input_dim();
        if theta.len() != n {
            return Err(ApproxError::BadLength { expected: n, got: theta.len() });
        }
        Ok(ParamSet {
            n,
            m,
            anchor_s: anchor_s.to_vec(),
            anchor_a: anchor_a.to_vec(),
            l_e,
            problem: Some(Arc::clone(problem)),
            storage: StorageForm::Linear { coeffs: theta.to_vec() },
            terminal: None,
            stage: StageForm::RotatedEconomic,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn input_dim(&self) -> usize {
        self.m
    }

    pub fn anchor(&self) -> (&[f64], &[f64]) {
        (&self.anchor_s, &self.anchor_a)
    }

    pub fn storage_form(&self) -> &StorageForm {
        &self.storage
    }

    pub fn stage_form(&self) -> &StageForm {
        &self.stage
    }

    pub fn terminal_coefficient(&self) -> Option<f64> {
        self.terminal
    }

    /// Total parameter count.
    pub fn dim(&self) -> usize {
        let storage = match &self.storage {
            StorageForm::Quadratic { coeffs } | StorageForm::Linear { coeffs } => coeffs.len(),
        };
        let terminal = usize::from(self.terminal.is_some());
        let stage = match &self.stage {
            StageForm::FreeQuadratic { entries } => entries.len(),
            StageForm::FactoredPsd { factor, .. } => factor.len(),
            StageForm::SosMonomial { coeffs, .. } => coeffs.len(),
            StageForm::RotatedEconomic => 0,
        };
        storage + terminal + stage
    }

    /// Flat parameter vector `[storage, terminal?, stage]`.
    pub fn theta(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        match &self.storage {
            StorageForm::Quadratic { coeffs } | StorageForm::Linear { coeffs } => {
                out.extend_from_slice(coeffs)
            }
        }
        if let Some(t) = self.terminal {
            out.push(t);
        }
        match &self.stage {
            StageForm::FreeQuadratic { entries } => out.extend_from_slice(entries),
            StageForm::FactoredPsd { factor, .. } => out.extend_from_slice(factor),
            StageForm::SosMonomial { coeffs, .. } => out.extend_from_slice(coeffs),
            StageForm::RotatedEconomic => {}
        }
        out
    }

    /// Same family and anchors, new parameter values.
    pub fn with_theta(&self, theta: &[f64]) -> Result<Self, ApproxError> {
        let d = self.dim();
        if theta.len() != d {
            return Err(ApproxError::BadLength { expected: d, got: theta.len() });
        }
        let mut out = self.clone();
        let storage_len = match &self.storage {
            StorageForm::Quadratic { coeffs } | StorageForm::Linear { coeffs } => coeffs.len(),
        };
        match &mut out.storage {
            StorageForm::Quadratic { coeffs } | StorageForm::Linear { coeffs } => {
                coeffs.copy_from_slice(&theta[..storage_len])
            }
        }
        let mut offset = storage_len;
        if out.terminal.is_some() {
            out.terminal = Some(theta[offset]);
            offset += 1;
        }
        match &mut out.stage {
            StageForm::FreeQuadratic { entries } => entries.copy_from_slice(&theta[offset..]),
            StageForm::FactoredPsd { factor, .. } => factor.copy_from_slice(&theta[offset..]),
            StageForm::SosMonomial { coeffs, .. } => coeffs.copy_from_slice(&theta[offset..]),
            StageForm::RotatedEconomic => {}
        }
        Ok(out)
    }

    /// Clamps the terminal coefficient to its positivity floor; returns
    /// whether anything changed.
    pub fn project_terminal(&mut self) -> bool {
        if let Some(t) = self.terminal {
            if t < EPS_TERM {
                self.terminal = Some(EPS_TERM);
                return true;
            }
        }
        false
    }

    fn state_offset(&self, s: &[f64]) -> Vec<f64> {
        s.iter().zip(&self.anchor_s).map(|(v, e)| v - e).collect()
    }

    fn pair_offset(&self, s: &[f64], a: &[f64]) -> Vec<f64> {
        let mut v = self.state_offset(s);
        v.extend(a.iter().zip(&self.anchor_a).map(|(v, e)| v - e));
        v
    }

    // ----- storage -----

    pub fn storage_value(&self, s: &[f64]) -> f64 {
        let d = self.state_offset(s);
        match &self.storage {
            StorageForm::Quadratic { coeffs } => {
                let mut v = 0.0;
                for i in 0..self.n {
                    for j in i..self.n {
                        v += coeffs[packed_index(self.n, i, j)] * d[i] * d[j];
                    }
                }
                v
            }
            StorageForm::Linear { coeffs } => crate::linalg::dot(coeffs, &d),
        }
    }

    /// `∂λ/∂s`.
    pub fn storage_state_gradient(&self, s: &[f64]) -> Vec<f64> {
        let d = self.state_offset(s);
        match &self.storage {
            StorageForm::Quadratic { coeffs } => {
                let w = packed_to_sym(self.n, coeffs);
                let mut g = w.matvec(&d);
                for v in &mut g {
                    *v *= 2.0;
                }
                g
            }
            StorageForm::Linear { coeffs } => coeffs.clone(),
        }
    }

    /// `∂²λ/∂s²`.
    pub fn storage_state_hessian(&self) -> Mat {
        match &self.storage {
            StorageForm::Quadratic { coeffs } => packed_to_sym(self.n, coeffs).scaled(2.0),
            StorageForm::Linear { .. } => Mat::zeros(self.n, self.n),
        }
    }

    /// `∂λ/∂θ` embedded in a full-length parameter vector.
    pub fn storage_theta_gradient(&self, s: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        let d = self.state_offset(s);
        match &self.storage {
            StorageForm::Quadratic { coeffs } => {
                for i in 0..self.n {
                    for j in i..self.n {
                        out[packed_index(self.n, i, j)] = d[i] * d[j];
                    }
                }
                let _ = coeffs;
            }
            StorageForm::Linear { coeffs } => {
                out[..coeffs.len()].copy_from_slice(&d);
            }
        }
        out
    }

    // ----- terminal -----

    pub fn terminal_value(&self, s: &[f64]) -> f64 {
        match self.terminal {
            Some(t) => {
                let d = self.state_offset(s);
                t * crate::linalg::dot(&d, &d)
            }
            None => 0.0,
        }
    }

    pub fn terminal_state_gradient(&self, s: &[f64]) -> Vec<f64> {
        match self.terminal {
            Some(t) => {
                let mut d = self.state_offset(s);
                for v in &mut d {
                    *v *= 2.0 * t;
                }
                d
            }
            None => vec![0.0; self.n],
        }
    }

    pub fn terminal_state_hessian(&self) -> Mat {
        let mut h = Mat::zeros(self.n, self.n);
        if let Some(t) = self.terminal {
            h.add_diagonal(2.0 * t);
        }
        h
    }

    pub fn terminal_theta_gradient(&self, s: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        if self.terminal.is_some() {
            let d = self.state_offset(s);
            let idx = match &self.storage {
                StorageForm::Quadratic { coeffs } | StorageForm::Linear { coeffs } => coeffs.len(),
            };
            out[idx] = crate::linalg::dot(&d, &d);
        }
        out
    }

    // ----- stage -----

    /// Symmetric quadratic-form matrix on `(s−s_e, a−a_e)` when the family
    /// has one.
    pub fn stage_matrix(&self) -> Option<Mat> {
        let q = self.n + self.m;
        match &self.stage {
            StageForm::FreeQuadratic { entries } => {
                Some(Mat::from_vec(q, q, entries.clone()).symmetrized())
            }
            StageForm::SosMonomial { coeffs, .. } => {
                // R itself, not the polynomial-coefficient split: the packed
                // entries are the matrix upper triangle verbatim.
                let mut r = Mat::zeros(q, q);
                for i in 0..q {
                    for j in i..q {
                        let c = coeffs[packed_index(q, i, j)];
                        r.set(i, j, c);
                        r.set(j, i, c);
                    }
                }
                Some(r)
            }
            _ => None,
        }
    }

    pub fn stage_value(&self, s: &[f64], a: &[f64]) -> f64 {
        let v = self.pair_offset(s, a);
        match &self.stage {
            StageForm::FreeQuadratic { entries } => {
                let q = self.n + self.m;
                let mmat = Mat::from_vec(q, q, entries.clone());
                crate::linalg::dot(&v, &mmat.matvec(&v))
            }
            StageForm::FactoredPsd { factor, epsilon } => {
                let q = self.n + self.m;
                let mmat = Mat::from_vec(q, q, factor.clone());
                let w = mmat.tr_matvec(&v);
                crate::linalg::dot(&w, &w) + epsilon * crate::linalg::dot(&v, &v)
            }
            StageForm::SosMonomial { .. } => {
                let r = self.stage_matrix().expect("sos exposes matrix");
                crate::linalg::dot(&v, &r.matvec(&v))
            }
            StageForm::RotatedEconomic => {
                let p = self.problem.as_ref().expect("problem captured");
                let next = p.dynamics(s, a);
                p.economic_cost(s, a) - self.l_e + self.storage_value(s)
                    - self.storage_value(&next)
            }
        }
    }

    /// `∂ℓ̂/∂(s,a)`.
    pub fn stage_sa_gradient(&self, s: &[f64], a: &[f64]) -> Vec<f64> {
        let v = self.pair_offset(s, a);
        let q = self.n + self.m;
        match &self.stage {
            StageForm::FreeQuadratic { entries } => {
                let sym = Mat::from_vec(q, q, entries.clone()).symmetrized();
                let mut g = sym.matvec(&v);
                for x in &mut g {
                    *x *= 2.0;
                }
                g
            }
            StageForm::FactoredPsd { factor, epsilon } => {
                let mmat = Mat::from_vec(q, q, factor.clone());
                let w = mmat.tr_matvec(&v);
                let mut g = mmat.matvec(&w);
                for (gi, vi) in g.iter_mut().zip(&v) {
                    *gi = 2.0 * *gi + 2.0 * epsilon * vi;
                }
                g
            }
            StageForm::SosMonomial { .. } => {
                let r = self.stage_matrix().expect("sos exposes matrix");
                let mut g = r.matvec(&v);
                for x in &mut g {
                    *x *= 2.0;
                }
                g
            }
            StageForm::RotatedEconomic => {
                let p = self.problem.as_ref().expect("problem captured");
                let next = p.dynamics(s, a);
                let mut g = p.cost_gradient(s, a);
                let gs = self.storage_state_gradient(s);
                for i in 0..self.n {
                    g[i] += gs[i];
                }
                let gnext = self.storage_state_gradient(&next);
                let jac = p.dynamics_jacobian(s, a); // n × (n+m)
                let pullback = jac.tr_matvec(&gnext);
                for i in 0..q {
                    g[i] -= pullback[i];
                }
                g
            }
        }
    }

    /// `∂²ℓ̂/∂(s,a)²`.
    pub fn stage_sa_hessian(&self, s: &[f64], a: &[f64]) -> Mat {
        let q = self.n + self.m;
        match &self.stage {
            StageForm::FreeQuadratic { entries } => {
                Mat::from_vec(q, q, entries.clone()).symmetrized().scaled(2.0)
            }
            StageForm::FactoredPsd { factor, epsilon } => {
                let mmat = Mat::from_vec(q, q, factor.clone());
                let mut h = mmat.matmul(&mmat.transpose()).scaled(2.0);
                h.add_diagonal(2.0 * epsilon);
                h
            }
            StageForm::SosMonomial { .. } => {
                self.stage_matrix().expect("sos exposes matrix").scaled(2.0)
            }
            StageForm::RotatedEconomic => {
                let p = self.problem.as_ref().expect("problem captured");
                let mut h = p.cost_hessian(s, a);
                let hs = self.storage_state_hessian();
                for i in 0..self.n {
                    for j in 0..self.n {
                        h.add_to(i, j, hs.get(i, j));
                    }
                }
                // -λ(f(s,a)) second order: Jᵀ ∇²λ J plus the weighted
                // dynamics curvature against -∇λ(f).
                let next = p.dynamics(s, a);
                let hnext = self.storage_state_hessian();
                if hnext.max_abs() > 0.0 {
                    let jac = p.dynamics_jacobian(s, a);
                    let jt_h_j = jac.transpose().matmul(&hnext).matmul(&jac);
                    for i in 0..q {
                        for j in 0..q {
                            h.add_to(i, j, -jt_h_j.get(i, j));
                        }
                    }
                }
                let gnext = self.storage_state_gradient(&next);
                let weights: Vec<f64> = gnext.iter().map(|g| -g).collect();
                if let Some(curv) = p.dynamics_curvature(s, a, &weights) {
                    h = h.add(&curv);
                }
                h
            }
        }
    }

    /// `∂ℓ̂/∂θ` embedded in a full-length parameter vector.
    pub fn stage_theta_gradient(&self, s: &[f64], a: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        let v = self.pair_offset(s, a);
        let q = self.n + self.m;
        let stage_offset = self.dim()
            - match &self.stage {
                StageForm::FreeQuadratic { entries } => entries.len(),
                StageForm::FactoredPsd { factor, .. } => factor.len(),
                StageForm::SosMonomial { coeffs, .. } => coeffs.len(),
                StageForm::RotatedEconomic => 0,
            };
        match &self.stage {
            StageForm::FreeQuadratic { .. } => {
                for i in 0..q {
                    for j in 0..q {
                        out[stage_offset + i * q + j] = v[i] * v[j];
                    }
                }
            }
            StageForm::FactoredPsd { factor, .. } => {
                let mmat = Mat::from_vec(q, q, factor.clone());
                let w = mmat.tr_matvec(&v); // Mᵀv
                for i in 0..q {
                    for j in 0..q {
                        out[stage_offset + i * q + j] = 2.0 * v[i] * w[j];
                    }
                }
            }
            StageForm::SosMonomial { .. } => {
                for i in 0..q {
                    for j in i..q {
                        let idx = stage_offset + packed_index(q, i, j);
                        out[idx] = if i == j { v[i] * v[i] } else { 2.0 * v[i] * v[j] };
                    }
                }
            }
            StageForm::RotatedEconomic => {
                // Stage follows the storage block: ∂ℓ̂/∂θ = ∂λ(s)/∂θ − ∂λ(f)/∂θ.
                let p = self.problem.as_ref().expect("problem captured");
                let next = p.dynamics(s, a);
                let gs = self.storage_theta_gradient(s);
                let gn = self.storage_theta_gradient(&next);
                for (o, (x, y)) in out.iter_mut().zip(gs.iter().zip(&gn)) {
                    *o = x - y;
                }
            }
        }
        out
    }

    /// Smallest eigenvalue of the exposed stage coefficient matrix.
    pub fn min_stage_eigenvalue(&self) -> Result<f64, ApproxError> {
        match self.stage_matrix() {
            Some(m) => Ok(m.sym_eigenvalues()[0]),
            None => Err(ApproxError::WrongFamily),
        }
    }

    /// Positivity floor used by the constrained learner for this family.
    pub fn stage_eigenvalue_floor(&self) -> Option<f64> {
        match &self.stage {
            StageForm::SosMonomial { eps_pd, .. } => Some(*eps_pd),
            StageForm::FreeQuadratic { .. } => Some(EPS_PD),
            _ => None,
        }
    }
}

// Free functions mirroring the operation names of the public contract.

pub fn eval_storage(params: &ParamSet, s: &[f64]) -> f64 {
    params.storage_value(s)
}

pub fn gradient_storage(params: &ParamSet, s: &[f64]) -> Vec<f64> {
    params.storage_theta_gradient(s)
}

pub fn eval_stage(params: &ParamSet, s: &[f64], a: &[f64]) -> f64 {
    params.stage_value(s, a)
}

pub fn gradient_stage(params: &ParamSet, s: &[f64], a: &[f64]) -> Vec<f64> {
    params.stage_theta_gradient(s, a)
}

pub fn eval_terminal(params: &ParamSet, s: &[f64]) -> f64 {
    params.terminal_value(s)
}

pub fn gradient_terminal(params: &ParamSet, s: &[f64]) -> Vec<f64> {
    params.terminal_theta_gradient(s)
}

pub fn min_eig_stage(params: &ParamSet) -> Result<f64, ApproxError> {
    params.min_stage_eigenvalue()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench;
    use crate::rng::DeterministicRng;

    fn lqr_params(theta: &[f64]) -> ParamSet {
        ParamSet::free_quadratic(1, 1, &[0.0], &[0.0], theta).unwrap()
    }

    #[test]
    fn storage_examples() {
        let p = lqr_params(&[-0.4456, 1.0, 1.0, 0.0, 0.0, 0.0]);
        assert!((p.storage_value(&[2.0]) + 1.7824).abs() < 1e-12);
        assert_eq!(p.storage_value(&[0.0]), 0.0);

        let prob = Arc::new(bench::investment_problem());
        let inv = ParamSet::rotated_economic(&prob, &[2.2344], &[2.2344], -1.4673, &[0.23]).unwrap();
        assert!((inv.storage_value(&[3.2344]) - 0.23).abs() < 1e-12);
        assert_eq!(inv.storage_value(&[2.2344]), 0.0);
    }

    #[test]
    fn stage_value_examples() {
        let psd = ParamSet::factored_psd(1, 1, &[0.0], &[0.0], &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 1e-3)
            .unwrap();
        assert!((psd.stage_value(&[1.0], &[1.0]) - 2e-3).abs() < 1e-15);

        let free = lqr_params(&[0.0, 0.0, 1.0, 2.0, 2.0, 1.0]);
        assert!((free.stage_value(&[1.0], &[1.0]) - 6.0).abs() < 1e-12);

        let sos = ParamSet::sos_monomial(1, 1, &[0.0], &[0.0], &[0.0, 0.0, 1.0, 0.0, 1.0], EPS_PD)
            .unwrap();
        assert!((sos.stage_value(&[2.0], &[-1.0]) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn terminal_examples() {
        let p = lqr_params(&[0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!((p.terminal_value(&[3.0]) - 9.0).abs() < 1e-12);

        let mut clipped = lqr_params(&[0.0, -0.5, 0.0, 0.0, 0.0, 0.0]);
        assert!(clipped.project_terminal());
        assert_eq!(clipped.terminal_coefficient(), Some(EPS_TERM));
    }

    #[test]
    fn min_eig_examples() {
        let ident = lqr_params(&[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        assert!((ident.min_stage_eigenvalue().unwrap() - 1.0).abs() < 1e-12);
        let indef = lqr_params(&[0.0, 0.0, 1.0, 2.0, 2.0, 1.0]);
        assert!((indef.min_stage_eigenvalue().unwrap() + 1.0).abs() < 1e-12);
        let psd =
            ParamSet::factored_psd(1, 1, &[0.0], &[0.0], &[0.0; 6], 1e-3).unwrap();
        assert_eq!(psd.min_stage_eigenvalue().unwrap_err(), ApproxError::WrongFamily);
    }

    #[test]
    fn anchoring_is_exact_for_all_families() {
        let mut rng = DeterministicRng::new(3);
        let prob = Arc::new(bench::investment_problem());
        for _ in 0..20 {
            let th6: Vec<f64> = (0..6).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let th5: Vec<f64> = (0..5).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let se = [1.3];
            let ae = [-0.4];
            let fams = [
                ParamSet::free_quadratic(1, 1, &se, &ae, &th6).unwrap(),
                ParamSet::factored_psd(1, 1, &se, &ae, &th6, 1e-3).unwrap(),
                ParamSet::sos_monomial(1, 1, &se, &ae, &th5, EPS_PD).unwrap(),
            ];
            for f in &fams {
                assert_eq!(f.storage_value(&se), 0.0);
                assert_eq!(f.stage_value(&se, &ae), 0.0);
            }
            let th1 = [rng.uniform(-1.0, 1.0)];
            let inv = ParamSet::rotated_economic(&prob, &[2.2344], &[2.2344], -1.4673, &th1).unwrap();
            assert_eq!(inv.storage_value(&[2.2344]), 0.0);
        }
    }

    #[test]
    fn theta_gradients_match_finite_differences() {
        let mut rng = DeterministicRng::new(11);
        let prob = Arc::new(bench::investment_problem());
        let l_e = prob.economic_cost(&[2.2344], &[2.2344]);
        for case in 0..100 {
            let se = [rng.uniform(-1.0, 1.0)];
            let ae = [rng.uniform(-1.0, 1.0)];
            let params: ParamSet = match case % 4 {
                0 => {
                    let th: Vec<f64> = (0..6).map(|_| rng.uniform(-2.0, 2.0)).collect();
                    ParamSet::free_quadratic(1, 1, &se, &ae, &th).unwrap()
                }
                1 => {
                    let th: Vec<f64> = (0..6).map(|_| rng.uniform(-2.0, 2.0)).collect();
                    ParamSet::factored_psd(1, 1, &se, &ae, &th, 1e-3).unwrap()
                }
                2 => {
                    let th: Vec<f64> = (0..5).map(|_| rng.uniform(-2.0, 2.0)).collect();
                    ParamSet::sos_monomial(1, 1, &se, &ae, &th, EPS_PD).unwrap()
                }
                _ => {
                    let th = [rng.uniform(-1.0, 1.0)];
                    ParamSet::rotated_economic(&prob, &[2.2344], &[2.2344], l_e, &th).unwrap()
                }
            };
            let (s, a) = if case % 4 == 3 {
                ([rng.uniform(0.5, 8.0)], [rng.uniform(0.5, 5.0)])
            } else {
                ([rng.uniform(-2.0, 2.0)], [rng.uniform(-2.0, 2.0)])
            };

            let theta = params.theta();
            let step = 1e-6;
            for (label, analytic, eval) in [
                (
                    "storage",
                    params.storage_theta_gradient(&s),
                    (&|p: &ParamSet| p.storage_value(&s)) as &dyn Fn(&ParamSet) -> f64,
                ),
                (
                    "stage",
                    params.stage_theta_gradient(&s, &a),
                    &|p: &ParamSet| p.stage_value(&s, &a),
                ),
                (
                    "terminal",
                    params.terminal_theta_gradient(&s),
                    &|p: &ParamSet| p.terminal_value(&s),
                ),
            ] {
                for k in 0..theta.len() {
                    let mut tp = theta.clone();
                    tp[k] += step;
                    let mut tm = theta.clone();
                    tm[k] -= step;
                    let fd = (eval(&params.with_theta(&tp).unwrap())
                        - eval(&params.with_theta(&tm).unwrap()))
                        / (2.0 * step);
                    let scale = 1.0 + analytic[k].abs().max(fd.abs());
                    assert!(
                        (analytic[k] - fd).abs() / scale < 1e-7,
                        "{label} grad[{k}]: analytic {} vs fd {fd}",
                        analytic[k]
                    );
                }
            }
        }
    }

    #[test]
    fn sa_gradients_match_finite_differences() {
        let mut rng = DeterministicRng::new(17);
        let prob = Arc::new(bench::investment_problem());
        let l_e = prob.economic_cost(&[2.2344], &[2.2344]);
        for case in 0..40 {
            let params: ParamSet = match case % 4 {
                0 => {
                    let th: Vec<f64> = (0..6).map(|_| rng.uniform(-2.0, 2.0)).collect();
                    ParamSet::free_quadratic(1, 1, &[0.1], &[-0.2], &th).unwrap()
                }
                1 => {
                    let th: Vec<f64> = (0..6).map(|_| rng.uniform(-2.0, 2.0)).collect();
                    ParamSet::factored_psd(1, 1, &[0.1], &[-0.2], &th, 1e-3).unwrap()
                }
                2 => {
                    let th: Vec<f64> = (0..5).map(|_| rng.uniform(-2.0, 2.0)).collect();
                    ParamSet::sos_monomial(1, 1, &[0.1], &[-0.2], &th, EPS_PD).unwrap()
                }
                _ => {
                    let th = [rng.uniform(-0.5, 0.5)];
                    ParamSet::rotated_economic(&prob, &[2.2344], &[2.2344], l_e, &th).unwrap()
                }
            };
            let (s, a) = if case % 4 == 3 {
                ([rng.uniform(1.0, 7.0)], [rng.uniform(1.0, 5.0)])
            } else {
                ([rng.uniform(-2.0, 2.0)], [rng.uniform(-2.0, 2.0)])
            };
            let g = params.stage_sa_gradient(&s, &a);
            let h = params.stage_sa_hessian(&s, &a);
            let step = 1e-6;
            let eval = |s: &[f64], a: &[f64]| params.stage_value(s, a);
            for d in 0..2 {
                let (mut sp, mut ap) = (s.to_vec(), a.to_vec());
                let (mut sm, mut am) = (s.to_vec(), a.to_vec());
                if d == 0 {
                    sp[0] += step;
                    sm[0] -= step;
                } else {
                    ap[0] += step;
                    am[0] -= step;
                }
                let fd = (eval(&sp, &ap) - eval(&sm, &am)) / (2.0 * step);
                assert!(
                    (g[d] - fd).abs() / (1.0 + fd.abs()) < 1e-6,
                    "sa grad[{d}]: {} vs {fd}",
                    g[d]
                );
                // Hessian column by forward difference of the gradient.
                let gp = params.stage_sa_gradient(&sp, &ap);
                let gm = params.stage_sa_gradient(&sm, &am);
                for r in 0..2 {
                    let fd2 = (gp[r] - gm[r]) / (2.0 * step);
                    assert!(
                        (h.get(r, d) - fd2).abs() / (1.0 + fd2.abs()) < 1e-5,
                        "sa hess[{r},{d}]: {} vs {fd2}",
                        h.get(r, d)
                    );
                }
            }
        }
    }

    #[test]
    fn factored_psd_stays_above_ridge() {
        let mut rng = DeterministicRng::new(23);
        let th: Vec<f64> = (0..6).map(|_| rng.uniform(-3.0, 3.0)).collect();
        let p = ParamSet::factored_psd(1, 1, &[0.0], &[0.0], &th, 1e-3).unwrap();
        for _ in 0..10_000 {
            let s = [rng.uniform(-5.0, 5.0)];
            let a = [rng.uniform(-5.0, 5.0)];
            let d2 = s[0] * s[0] + a[0] * a[0];
            if d2 < 1e-12 {
                continue;
            }
            assert!(p.stage_value(&s, &a) / d2 >= 1e-3 - 1e-12);
        }
    }
}
