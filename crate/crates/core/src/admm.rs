//! ADMM applied directly to the DCEN objective, with the `z`-step given by the
//! closed-form prox:
//!
//! ```text
//! x ← (AᵀA + ρI)⁻¹(Aᵀb + ρ(z − u))
//! z ← prox_{(λ/ρ) r}(x + u)
//! u ← u + x − z
//! ```
//!
//! With `α = 0, γ = 1` this is the textbook LASSO ADMM, with `α = 0` the
//! Elastic Net ADMM and with `γ = 1` the `ℓ1 − αℓ2` ADMM.

use nalgebra::{DMatrix, DVector};

use crate::dca::stop_rule;
use crate::error::{DcenError, Result};
use crate::linsolve::LinearSolveCache;
use crate::objective::eval_objective;
use crate::params::DcenParams;
use crate::problem::Problem;
use crate::prox::prox_unchecked;
use crate::report::{SolveReport, Termination};

/// Iterate in scaled dual form, `u = y/ρ`.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub x: DVector<f64>,
    pub z: DVector<f64>,
    pub u: DVector<f64>,
    /// `b̃ = Aᵀb + ρ(z − u)` from the latest x-update.
    pub b_tilde: DVector<f64>,
}

/// `x = (AᵀA + ρI)⁻¹ b̃` through a cache built for `(a, rho)`.
pub fn admm_x_update(
    cache: &mut LinearSolveCache,
    a: &DMatrix<f64>,
    rho: f64,
    b_tilde: &DVector<f64>,
) -> Result<DVector<f64>> {
    cache.solve(a, rho, b_tilde)
}

/// Direct ADMM on `H`. Accepts `γ = 1` so it doubles as the baseline engine.
///
/// The iteration cap is `params.inner_cap(n)`, `5n` by default. `x0` seeds
/// both `x` and `z`; the scaled dual starts at zero. The reported solution is
/// the prox output `z`, which carries the exact zeros of the penalty.
pub fn solve_admm(problem: &Problem, params: &DcenParams, x0: &DVector<f64>) -> Result<SolveReport> {
    params.validate_degenerate()?;
    problem.check_vector(x0, "initial point")?;
    if !x0.iter().all(|v| v.is_finite()) {
        return Err(DcenError::Domain("initial point has non-finite entries".into()));
    }
    let p = *params;
    let n = problem.cols();
    let a = &problem.a;
    let atb = a.tr_mul(&problem.b);
    let mut rho = p.rho;
    let mut cache = LinearSolveCache::new(a, rho)?;
    let mut st = AdmmState {
        x: x0.clone(),
        z: x0.clone(),
        u: DVector::zeros(n),
        b_tilde: DVector::zeros(n),
    };
    let mut report = SolveReport {
        x: Vec::new(),
        objective_trace: vec![eval_objective(x0, problem, &p)?],
        primal_residuals: Vec::new(),
        dual_residuals: Vec::new(),
        outer_iters: 0,
        inner_iters_total: 0,
        termination: Termination::MaxIterations,
    };
    let cap = p.inner_cap(n);
    for k in 0..cap {
        st.b_tilde.copy_from(&atb);
        st.b_tilde.axpy(rho, &st.z, 1.0);
        st.b_tilde.axpy(-rho, &st.u, 1.0);
        st.x = admm_x_update(&mut cache, a, rho, &st.b_tilde).map_err(|e| at(e, k))?;

        let v = &st.x + &st.u;
        let (z_new, _) = prox_unchecked(&v, p.lambda / rho, p.gamma, p.alpha);
        let r = &st.x - &z_new;
        let s_norm = rho * (&z_new - &st.z).norm();
        let r_norm = r.norm();
        st.u += &r;
        st.z = z_new;
        if !(r_norm.is_finite() && s_norm.is_finite()) {
            return Err(DcenError::Numerical {
                iteration: k,
                detail: "ADMM diverged".into(),
            });
        }
        report.primal_residuals.push(r_norm);
        report.dual_residuals.push(s_norm);
        report.outer_iters = k + 1;
        let y = &st.u * rho;
        if stop_rule(&st.x, &st.z, &y, r_norm, s_norm, &p, n) {
            report.termination = Termination::Converged;
            break;
        }
        if p.adaptive_rho {
            let new_rho = if r_norm > 10.0 * s_norm {
                rho * 2.0
            } else if s_norm > 10.0 * r_norm {
                rho / 2.0
            } else {
                rho
            };
            if new_rho != rho {
                st.u *= rho / new_rho;
                rho = new_rho;
                cache = LinearSolveCache::new(a, rho)?;
            }
        }
    }
    report.inner_iters_total = report.outer_iters;
    report.objective_trace.push(eval_objective(&st.z, problem, &p)?);
    report.x = st.z.as_slice().to_vec();
    Ok(report)
}

fn at(e: DcenError, iteration: usize) -> DcenError {
    match e {
        DcenError::Numerical { detail, .. } => DcenError::Numerical { iteration, detail },
        other => other,
    }
}
