//! Objective `H(x) = ½‖Ax − b‖² + λ r(x)`, its DC split `H = g − h` and the
//! gradient of the concave part used to linearize `h`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{DcenError, Result};
use crate::params::DcenParams;
use crate::problem::Problem;

/// Above this length the norms switch to compensated summation.
const COMPENSATED_LEN: usize = 100_000;

fn sum_with<F: Fn(f64) -> f64>(x: &[f64], f: F) -> f64 {
    if x.len() <= COMPENSATED_LEN {
        return x.iter().map(|&v| f(v)).sum();
    }
    // Neumaier
    let mut sum = 0.0;
    let mut c = 0.0;
    for &v in x {
        let t = f(v);
        let s = sum + t;
        if sum.abs() >= t.abs() {
            c += (sum - s) + t;
        } else {
            c += (t - s) + sum;
        }
        sum = s;
    }
    sum + c
}

pub fn norm1(x: &[f64]) -> f64 {
    sum_with(x, f64::abs)
}

pub fn norm2_sq(x: &[f64]) -> f64 {
    sum_with(x, |v| v * v)
}

pub fn norm2(x: &[f64]) -> f64 {
    norm2_sq(x).sqrt()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn check_finite(x: &[f64], what: &str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(DcenError::Domain(format!("{what} has non-finite entries")))
    }
}

/// `r(x) = γ(‖x‖₁ − α‖x‖₂) + (1−γ)‖x‖₂²`.
pub fn eval_regularizer(x: &DVector<f64>, params: &DcenParams) -> Result<f64> {
    check_finite(x.as_slice(), "x")?;
    Ok(regularizer(x.as_slice(), params.gamma, params.alpha))
}

pub(crate) fn regularizer(x: &[f64], gamma: f64, alpha: f64) -> f64 {
    let l2sq = norm2_sq(x);
    gamma * (norm1(x) - alpha * l2sq.sqrt()) + (1.0 - gamma) * l2sq
}

fn half_residual_sq(x: &DVector<f64>, problem: &Problem) -> Result<f64> {
    problem.check_vector(x, "x")?;
    check_finite(x.as_slice(), "x")?;
    let r = &problem.a * x - &problem.b;
    Ok(0.5 * norm2_sq(r.as_slice()))
}

/// `H(x) = ½‖Ax − b‖² + λ r(x)`.
pub fn eval_objective(x: &DVector<f64>, problem: &Problem, params: &DcenParams) -> Result<f64> {
    let fid = half_residual_sq(x, problem)?;
    Ok(fid + params.lambda * regularizer(x.as_slice(), params.gamma, params.alpha))
}

/// The DC split `(g(x), h(x))` with
/// `g = ½‖Ax−b‖² + λ(γ‖x‖₁ + 3(1−γ)/2 ‖x‖²)` and `h = λ(αγ‖x‖₂ + (1−γ)/2 ‖x‖²)`.
pub fn eval_dc_parts(x: &DVector<f64>, problem: &Problem, params: &DcenParams) -> Result<(f64, f64)> {
    let fid = half_residual_sq(x, problem)?;
    let (lam, gam, alp) = (params.lambda, params.gamma, params.alpha);
    let l2sq = norm2_sq(x.as_slice());
    let g = fid + lam * (gam * norm1(x.as_slice()) + 1.5 * (1.0 - gam) * l2sq);
    let h = lam * (alp * gam * l2sq.sqrt() + 0.5 * (1.0 - gam) * l2sq);
    Ok((g, h))
}

/// `d(x) = (αγ/‖x‖₂ + 1 − γ) x`, so that `λ d(x) = ∇h(x)` for `x ≠ 0`.
pub fn concave_gradient(x: &DVector<f64>, params: &DcenParams) -> Result<DVector<f64>> {
    check_finite(x.as_slice(), "x")?;
    let nrm = norm2(x.as_slice());
    if nrm == 0.0 {
        return Err(DcenError::ZeroIterate);
    }
    let scale = params.alpha * params.gamma / nrm + 1.0 - params.gamma;
    Ok(x * scale)
}

/// Smallest eigenvalue of `AᵀA`.
///
/// Zero whenever `A` has fewer rows than columns. Otherwise a symmetric eigen
/// decomposition for `n ≤ 2048` and 50 steps of inverse iteration beyond that.
pub fn lambda_min_gram(a: &DMatrix<f64>) -> f64 {
    let (m, n) = a.shape();
    if m < n {
        return 0.0;
    }
    let gram = a.tr_mul(a);
    if n <= 2048 {
        let eig = SymmetricEigen::new(gram);
        return eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0);
    }
    let Some(chol) = gram.clone().cholesky() else {
        return 0.0;
    };
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    for _ in 0..50 {
        let w = chol.solve(&v);
        let nrm = w.norm();
        if nrm == 0.0 || !nrm.is_finite() {
            return 0.0;
        }
        v = w / nrm;
    }
    (&gram * &v).dot(&v).max(0.0)
}

/// Strong-convexity modulus of `g`: `λ_min(AᵀA) + 3λ(1−γ)`.
pub fn mu_g(problem: &Problem, params: &DcenParams) -> f64 {
    lambda_min_gram(&problem.a) + 3.0 * params.lambda * (1.0 - params.gamma)
}
