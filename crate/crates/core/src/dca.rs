//! DC algorithm for the DCEN objective.
//!
//! Each outer step linearizes `h` at `x_k` and minimizes the strongly convex
//! surrogate `g(x) − λ⟨x, d(x_k)⟩` with an ADMM that splits off the `ℓ1` term:
//!
//! ```text
//! x ← (AᵀA + ηI)⁻¹(Aᵀb + λd − y + ρz),   η = 3λ(1−γ) + ρ
//! z ← S_{λγ/ρ}(x + y/ρ)
//! y ← y + ρ(x − z)
//! ```
//!
//! The outer loop stops when `‖x_{k+1} − x_k‖ ≤ ε(1 + ‖x_k‖)` or after `K` steps.

use nalgebra::DVector;

use crate::error::{DcenError, Result};
use crate::linsolve::LinearSolveCache;
use crate::objective::{concave_gradient, eval_objective, norm2};
use crate::params::DcenParams;
use crate::problem::Problem;
use crate::prox::shrink;
use crate::report::{SolveReport, Termination};

/// Outer iterate and its linearization `λ·d(x_k)` (absent at `x_k = 0`).
#[derive(Debug, Clone)]
pub struct DcaState {
    pub x_k: DVector<f64>,
    pub d_vec: Option<DVector<f64>>,
    pub k: usize,
}

/// Inner ADMM iterate. `r = x − z` and `s = ρ(z − z_prev)` are kept so the
/// stopping rule can be evaluated from the state alone.
#[derive(Debug, Clone)]
pub struct InnerAdmmState {
    pub x: DVector<f64>,
    pub z: DVector<f64>,
    pub y: DVector<f64>,
    pub eta: f64,
    pub r_vec: DVector<f64>,
    pub s_vec: DVector<f64>,
}

impl InnerAdmmState {
    pub fn zeros(n: usize, params: &DcenParams) -> Self {
        Self {
            x: DVector::zeros(n),
            z: DVector::zeros(n),
            y: DVector::zeros(n),
            eta: inner_eta(params, params.rho),
            r_vec: DVector::zeros(n),
            s_vec: DVector::zeros(n),
        }
    }

    /// Start with `x = z = x0` and a zero multiplier.
    pub fn from_point(x0: &DVector<f64>, params: &DcenParams) -> Self {
        let mut st = Self::zeros(x0.len(), params);
        st.x.copy_from(x0);
        st.z.copy_from(x0);
        st
    }

    fn is_finite(&self) -> bool {
        self.z.iter().chain(self.y.iter()).all(|v| v.is_finite())
    }
}

fn inner_eta(params: &DcenParams, rho: f64) -> f64 {
    3.0 * params.lambda * (1.0 - params.gamma) + rho
}

/// Stopping rule of the inner ADMM: `‖r‖ ≤ √n·ε_abs + ε_rel·max(‖x‖, ‖z‖)`,
/// `‖s‖ ≤ √n·ε_abs + ε_rel·‖y‖` and `‖x − z‖ / max(‖x‖, ‖z‖, ε) < ε_rel`.
pub fn check_admm_stop(state: &InnerAdmmState, params: &DcenParams, n: usize) -> bool {
    stop_rule(&state.x, &state.z, &state.y, state.r_vec.norm(), state.s_vec.norm(), params, n)
}

pub(crate) fn stop_rule(
    x: &DVector<f64>,
    z: &DVector<f64>,
    y: &DVector<f64>,
    r_norm: f64,
    s_norm: f64,
    params: &DcenParams,
    n: usize,
) -> bool {
    let base = (n as f64).sqrt() * params.eps_abs;
    let (nx, nz) = (norm2(x.as_slice()), norm2(z.as_slice()));
    let eps_pri = base + params.eps_rel * nx.max(nz);
    let eps_dual = base + params.eps_rel * norm2(y.as_slice());
    let relerr = r_norm / nx.max(nz).max(params.eps_machine);
    r_norm <= eps_pri && s_norm <= eps_dual && relerr < params.eps_rel
}

/// Result of one inner solve.
#[derive(Debug, Clone)]
pub struct InnerOutcome {
    pub x: DVector<f64>,
    pub state: InnerAdmmState,
    pub iterations: usize,
    pub converged: bool,
    pub primal_residuals: Vec<f64>,
    pub dual_residuals: Vec<f64>,
}

/// Stateful DCA solver owning the factorization of `AᵀA + ηI`.
pub struct DcaSolver<'a> {
    problem: &'a Problem,
    params: DcenParams,
    rho: f64,
    atb: DVector<f64>,
    cache: LinearSolveCache,
}

impl<'a> DcaSolver<'a> {
    pub fn new(problem: &'a Problem, params: DcenParams) -> Result<Self> {
        params.validate()?;
        Self::build(problem, params)
    }

    /// Same as [`new`](Self::new) but admits `γ = 1` (the `ℓ1 − αℓ2` DCA).
    pub fn new_degenerate(problem: &'a Problem, params: DcenParams) -> Result<Self> {
        params.validate_degenerate()?;
        Self::build(problem, params)
    }

    fn build(problem: &'a Problem, params: DcenParams) -> Result<Self> {
        let cache = LinearSolveCache::new(&problem.a, inner_eta(&params, params.rho))?;
        Ok(Self {
            problem,
            params,
            rho: params.rho,
            atb: problem.a.tr_mul(&problem.b),
            cache,
        })
    }

    /// Runs the inner ADMM for the surrogate with linearization `d_vec`
    /// (already multiplied by λ), starting from `warm`.
    pub fn subproblem(&mut self, d_vec: &DVector<f64>, warm: InnerAdmmState) -> Result<InnerOutcome> {
        let n = self.problem.cols();
        if d_vec.len() != n || warm.x.len() != n || warm.z.len() != n || warm.y.len() != n {
            return Err(DcenError::Shape("inner ADMM vectors must have length n".into()));
        }
        let p = self.params;
        let mut st = if warm.is_finite() { warm } else { InnerAdmmState::zeros(n, &p) };
        let cap = p.inner_cap(n);
        let mut pri = Vec::new();
        let mut dual = Vec::new();
        let mut converged = false;
        let mut iterations = 0;
        let mut rhs = DVector::zeros(n);
        for t in 0..cap {
            let eta = inner_eta(&p, self.rho);
            st.eta = eta;
            // R = Aᵀb + λd − y + ρz
            rhs.copy_from(&self.atb);
            rhs += d_vec;
            rhs -= &st.y;
            rhs.axpy(self.rho, &st.z, 1.0);
            st.x = self.cache.solve(&self.problem.a, eta, &rhs).map_err(|e| at_iteration(e, t))?;

            let kappa = p.lambda * p.gamma / self.rho;
            let mut r_sq = 0.0;
            let mut s_sq = 0.0;
            for i in 0..n {
                let z_new = shrink(st.x[i] + st.y[i] / self.rho, kappa);
                let r = st.x[i] - z_new;
                let s = self.rho * (z_new - st.z[i]);
                st.y[i] += self.rho * r;
                st.z[i] = z_new;
                st.r_vec[i] = r;
                st.s_vec[i] = s;
                r_sq += r * r;
                s_sq += s * s;
            }
            let (r_norm, s_norm) = (r_sq.sqrt(), s_sq.sqrt());
            if !(r_norm.is_finite() && s_norm.is_finite()) {
                return Err(DcenError::Numerical {
                    iteration: t,
                    detail: "inner ADMM diverged".into(),
                });
            }
            pri.push(r_norm);
            dual.push(s_norm);
            iterations = t + 1;
            if stop_rule(&st.x, &st.z, &st.y, r_norm, s_norm, &p, n) {
                converged = true;
                break;
            }
            if p.adaptive_rho {
                self.balance_rho(r_norm, s_norm)?;
            }
        }
        Ok(InnerOutcome {
            x: st.x.clone(),
            state: st,
            iterations,
            converged,
            primal_residuals: pri,
            dual_residuals: dual,
        })
    }

    fn balance_rho(&mut self, r_norm: f64, s_norm: f64) -> Result<()> {
        let new_rho = if r_norm > 10.0 * s_norm {
            self.rho * 2.0
        } else if s_norm > 10.0 * r_norm {
            self.rho / 2.0
        } else {
            return Ok(());
        };
        self.rho = new_rho;
        self.cache = LinearSolveCache::new(&self.problem.a, inner_eta(&self.params, new_rho))?;
        Ok(())
    }

    /// Runs the outer DCA loop from `x0`.
    pub fn solve(&mut self, x0: &DVector<f64>) -> Result<SolveReport> {
        self.run(x0, None)
    }

    /// Like [`solve`](Self::solve), also returning `x_0, x_1, …` (one entry per
    /// objective-trace entry).
    pub fn solve_with_iterates(&mut self, x0: &DVector<f64>) -> Result<(SolveReport, Vec<DVector<f64>>)> {
        let mut iterates = vec![x0.clone()];
        let report = self.run(x0, Some(&mut iterates))?;
        Ok((report, iterates))
    }

    fn run(&mut self, x0: &DVector<f64>, mut iterates: Option<&mut Vec<DVector<f64>>>) -> Result<SolveReport> {
        let problem = self.problem;
        let p = self.params;
        problem.check_vector(x0, "initial point")?;
        if !x0.iter().all(|v| v.is_finite()) {
            return Err(DcenError::Domain("initial point has non-finite entries".into()));
        }
        let n = problem.cols();
        let mut state = DcaState {
            x_k: x0.clone(),
            d_vec: None,
            k: 0,
        };
        let mut inner = InnerAdmmState::from_point(x0, &p);
        let mut report = SolveReport {
            x: Vec::new(),
            objective_trace: vec![eval_objective(x0, problem, &p)?],
            primal_residuals: Vec::new(),
            dual_residuals: Vec::new(),
            outer_iters: 0,
            inner_iters_total: 0,
            termination: Termination::MaxIterations,
        };
        let zero = DVector::zeros(n);
        while state.k < p.max_outer {
            state.d_vec = match concave_gradient(&state.x_k, &p) {
                Ok(d) => Some(d * p.lambda),
                Err(DcenError::ZeroIterate) => None,
                Err(e) => return Err(at_iteration(e, state.k)),
            };
            let out = self
                .subproblem(state.d_vec.as_ref().unwrap_or(&zero), inner)
                .map_err(|e| at_iteration(e, state.k))?;
            inner = out.state;
            report.inner_iters_total += out.iterations;
            report.primal_residuals.extend(out.primal_residuals);
            report.dual_residuals.extend(out.dual_residuals);

            let x_next = out.x;
            if !x_next.iter().all(|v| v.is_finite()) {
                return Err(DcenError::Numerical {
                    iteration: state.k,
                    detail: "non-finite outer iterate".into(),
                });
            }
            let step = (&x_next - &state.x_k).norm();
            let scale = 1.0 + state.x_k.norm();
            report
                .objective_trace
                .push(eval_objective(&x_next, problem, &p).map_err(|e| at_iteration(e, state.k))?);
            if let Some(it) = iterates.as_deref_mut() {
                it.push(x_next.clone());
            }
            state.x_k = x_next;
            state.k += 1;
            if step <= p.dca_eps * scale {
                report.termination = Termination::Converged;
                break;
            }
        }
        report.outer_iters = state.k;
        report.x = state.x_k.as_slice().to_vec();
        Ok(report)
    }
}

fn at_iteration(e: DcenError, iteration: usize) -> DcenError {
    match e {
        DcenError::Numerical { detail, .. } => DcenError::Numerical { iteration, detail },
        other => other,
    }
}

/// DCEN-DCA from the initial point `x0`.
///
/// `objective_trace[0]` is `H(x0)`; entry `k` is the objective after `k` outer steps.
pub fn solve_dca(problem: &Problem, params: &DcenParams, x0: &DVector<f64>) -> Result<SolveReport> {
    DcaSolver::new(problem, *params)?.solve(x0)
}

/// DCA for the `γ = 1` boundary, i.e. `ℓ1 − αℓ2` with the same DC split.
pub fn solve_dca_degenerate(problem: &Problem, params: &DcenParams, x0: &DVector<f64>) -> Result<SolveReport> {
    DcaSolver::new_degenerate(problem, *params)?.solve(x0)
}

/// One inner solve with a fresh factorization.
pub fn solve_subproblem_admm(
    problem: &Problem,
    params: &DcenParams,
    d_vec: &DVector<f64>,
    warm: InnerAdmmState,
) -> Result<(DVector<f64>, InnerAdmmState)> {
    let out = DcaSolver::new_degenerate(problem, *params)?.subproblem(d_vec, warm)?;
    Ok((out.x, out.state))
}
