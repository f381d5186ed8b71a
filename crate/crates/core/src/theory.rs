//! Recovery-condition constants and the norm inequalities behind them.
//!
//! Nothing here gates a solver. These calculators feed the condition report
//! of the command-line tool and the property tests.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::Serialize;

use crate::error::{DcenError, Result};
use crate::objective::{mu_g, norm1, norm2};
use crate::params::DcenParams;
use crate::problem::Problem;

/// `H_{n,p} = Σ_{i=1}^{n} i^{−p}`.
pub fn harmonic_sum(n: usize, p: f64) -> f64 {
    (1..=n).map(|i| (i as f64).powf(-p)).sum()
}

fn support_stats(x: &DVector<f64>) -> Result<(usize, f64)> {
    if !x.iter().all(|v| v.is_finite()) {
        return Err(DcenError::Domain("vector has non-finite entries".into()));
    }
    let mut s = 0;
    let mut xmin = f64::INFINITY;
    for v in x.iter().filter(|v| **v != 0.0) {
        s += 1;
        xmin = xmin.min(v.abs());
    }
    if s == 0 {
        return Err(DcenError::Domain("bound is undefined at x = 0".into()));
    }
    Ok((s, xmin))
}

/// Sandwich `lower ≤ ‖x‖₁ − α‖x‖₂ ≤ upper` on the support of `x`, where
/// `lower = (s − α√s)·x_min + (1−α)(‖x‖₁ − s·x_min)` and `upper = (√s − α)‖x‖₂`.
pub fn bound_l1_minus_al2(x: &DVector<f64>, alpha: f64) -> Result<(f64, f64)> {
    let (s, xmin) = support_stats(x)?;
    let sf = s as f64;
    let l1 = norm1(x.as_slice());
    let lower = (sf - alpha * sf.sqrt()) * xmin + (1.0 - alpha) * (l1 - sf * xmin);
    let upper = (sf.sqrt() - alpha) * norm2(x.as_slice());
    Ok((lower, upper))
}

/// Whether the sorted support magnitudes satisfy `|x_(i)| ≥ C·i^{−p}·x_min`.
pub fn satisfies_decay(x: &DVector<f64>, c: f64, p: f64) -> bool {
    let mut mags: Vec<f64> = x.iter().filter(|v| **v != 0.0).map(|v| v.abs()).collect();
    if mags.is_empty() {
        return false;
    }
    mags.sort_by(|a, b| b.total_cmp(a));
    let xmin = *mags.last().unwrap();
    mags.iter()
        .enumerate()
        .all(|(i, &m)| m >= c * ((i + 1) as f64).powf(-p) * xmin)
}

/// Lower bound `C·x_min(α s^{1/2−p}(s^{1/2} − 1) + (1−α)H_{s,p})` on
/// `‖x‖₁ − α‖x‖₂` for vectors with power-law decay. Valid for `1 ≤ C ≤ s^p`.
pub fn decay_lower_bound(x: &DVector<f64>, alpha: f64, c: f64, p: f64) -> Result<f64> {
    let (s, xmin) = support_stats(x)?;
    let sf = s as f64;
    Ok(c * xmin * (alpha * sf.powf(0.5 - p) * (sf.sqrt() - 1.0) + (1.0 - alpha) * harmonic_sum(s, p)))
}

/// Smallest DCEN penalty value over all vectors with `‖x‖₂ = r`; attained by
/// 1-sparse vectors: `γ(1−α)r + (1−γ)r²`.
pub fn sphere_floor(r: f64, gamma: f64, alpha: f64) -> f64 {
    gamma * (1.0 - alpha) * r + (1.0 - gamma) * r * r
}

/// `a(s, γ, α, p) = (γ(α√(3s) − α + (1−α)(3s)^p H_{3s,p}/√(3s)) / (γ√s + γα + 2(1−γ)M))²`.
pub fn a_factor(s: usize, gamma: f64, alpha: f64, p: f64, big_m: f64) -> f64 {
    let s3 = 3.0 * s as f64;
    let num = gamma * (alpha * s3.sqrt() - alpha + (1.0 - alpha) * s3.powf(p) * harmonic_sum(3 * s, p) / s3.sqrt());
    let den = gamma * (s as f64).sqrt() + gamma * alpha + 2.0 * (1.0 - gamma) * big_m;
    (num / den).powi(2)
}

/// `δ_{3s} + a·δ_{4s} < a − 1` together with `a > 1`.
pub fn rip_exact_recovery_check(delta_3s: f64, delta_4s: f64, a: f64) -> bool {
    a > 1.0 && delta_3s + a * delta_4s < a - 1.0
}

/// `C_s = 2√(1+a) / (√(a(1−δ_{4s})) − √(1+δ_{3s}))`.
pub fn stability_constant(a: f64, delta_3s: f64, delta_4s: f64) -> Result<f64> {
    let den = (a * (1.0 - delta_4s)).sqrt() - (1.0 + delta_3s).sqrt();
    if !(den > 0.0) {
        return Err(DcenError::ConditionViolated(format!(
            "stability denominator is {den}; the RIP condition fails"
        )));
    }
    Ok(2.0 * (1.0 + a).sqrt() / den)
}

/// `κ(r) = γ(1−α) / (γ(1+α) + 2(1−γ)r)`.
pub fn nsp_kappa(gamma: f64, alpha: f64, r: f64) -> f64 {
    gamma * (1.0 - alpha) / (gamma * (1.0 + alpha) + 2.0 * (1.0 - gamma) * r)
}

/// `‖Aᵀb‖₂ > λγ(√n + α)`, which certifies that `0` is not a stationary point.
pub fn zero_not_stationary(problem: &Problem, params: &DcenParams) -> bool {
    let n = problem.cols() as f64;
    let atb = problem.a.tr_mul(&problem.b);
    norm2(atb.as_slice()) > params.lambda * params.gamma * (n.sqrt() + params.alpha)
}

/// Lower bound on the RIP constant `δ_s` from `trials` random supports: the
/// largest deviation of an eigenvalue of `A_Sᵀ A_S` from 1. Only a lower bound;
/// the true constant maximizes over all supports.
pub fn rip_lower_bound(a: &DMatrix<f64>, s: usize, trials: usize, seed: u64) -> Result<f64> {
    let n = a.ncols();
    if s == 0 || s > n {
        return Err(DcenError::Parameter(format!("support size {s} outside 1..={n}")));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut delta: f64 = 0.0;
    for _ in 0..trials {
        let mut idx = sample(&mut rng, n, s).into_vec();
        idx.sort_unstable();
        let sub = a.select_columns(idx.iter());
        let eig = SymmetricEigen::new(sub.tr_mul(&sub)).eigenvalues;
        for e in eig.iter() {
            delta = delta.max((e - 1.0).abs());
        }
    }
    Ok(delta)
}

#[derive(Debug, Clone, Serialize)]
pub struct RecoveryConstants {
    pub a_factor: f64,
    /// `None` when the RIP condition fails and the constant is undefined.
    pub c_s: Option<f64>,
    pub kappa_r: f64,
    pub mu_g: f64,
    /// `H_{3s,p}`, the harmonic sum entering `a`.
    pub h_np: f64,
    pub big_m: f64,
    pub p_exp: f64,
    /// Decay constant `C = (3s)^p`.
    pub c_decay: f64,
    pub delta_3s: f64,
    pub delta_4s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub s: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub r: f64,
    pub constants: RecoveryConstants,
    pub exact_recovery_condition: bool,
    pub zero_not_stationary: bool,
}

/// Inputs of [`condition_report`] that are not part of the problem or params.
#[derive(Debug, Clone, Copy)]
pub struct ConditionInputs {
    pub s: usize,
    pub p: f64,
    /// Signal bound `M`; `None` falls back to `‖truth‖₂`, then to 1.
    pub big_m: Option<f64>,
    pub delta_3s: f64,
    pub delta_4s: f64,
    /// Radius entering `κ(r)`.
    pub r: f64,
}

pub fn condition_report(problem: &Problem, params: &DcenParams, inputs: &ConditionInputs) -> Result<ConditionReport> {
    if inputs.s == 0 {
        return Err(DcenError::Parameter("sparsity must be at least 1".into()));
    }
    for d in [inputs.delta_3s, inputs.delta_4s] {
        if !(0.0..1.0).contains(&d) {
            return Err(DcenError::Parameter(format!("RIP constants must lie in [0, 1), got {d}")));
        }
    }
    if !(inputs.p >= 0.0) || !(inputs.r >= 0.0) {
        return Err(DcenError::Parameter("p and r must be nonnegative".into()));
    }
    let big_m = inputs
        .big_m
        .or_else(|| problem.truth.as_ref().map(|t| t.norm()))
        .unwrap_or(1.0);
    if !(big_m > 0.0) {
        return Err(DcenError::Parameter(format!("signal bound must be positive, got {big_m}")));
    }
    let (g, al) = (params.gamma, params.alpha);
    let a = a_factor(inputs.s, g, al, inputs.p, big_m);
    let ok = rip_exact_recovery_check(inputs.delta_3s, inputs.delta_4s, a);
    let c_s = stability_constant(a, inputs.delta_3s, inputs.delta_4s).ok();
    Ok(ConditionReport {
        s: inputs.s,
        gamma: g,
        alpha: al,
        lambda: params.lambda,
        r: inputs.r,
        constants: RecoveryConstants {
            a_factor: a,
            c_s,
            kappa_r: nsp_kappa(g, al, inputs.r),
            mu_g: mu_g(problem, params),
            h_np: harmonic_sum(3 * inputs.s, inputs.p),
            big_m,
            p_exp: inputs.p,
            c_decay: (3.0 * inputs.s as f64).powf(inputs.p),
            delta_3s: inputs.delta_3s,
            delta_4s: inputs.delta_4s,
        },
        exact_recovery_condition: ok,
        zero_not_stationary: zero_not_stationary(problem, params),
    })
}
