//! Closed-form proximal operator of the DCEN penalty.
//!
//! For a step `t` the prox minimizes
//! `γ(‖x‖₁ − α‖x‖₂) + (1−γ)‖x‖₂² + ‖x − y‖₂²/(2t)`.
//! Completing the square in the ridge term turns this into the `ℓ1 − αℓ2`
//! prox with threshold `λ̃ = tγ/c` at the point `ỹ = y/c`, `c = 1 + 2t(1−γ)`,
//! which has four regimes depending on where `‖ỹ‖∞` sits relative to `λ̃`.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{DcenError, Result};
use crate::objective::{norm2, norm_inf, regularizer};
use crate::params::DcenParams;

/// Relative slack used when comparing `‖ỹ‖∞` against the case thresholds.
const TIE_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProxTag {
    /// `‖ỹ‖∞ > λ̃`: shrink then stretch along the soft-thresholded direction.
    Interior,
    /// `‖ỹ‖∞ = λ̃`: a 1-sparse minimizer of norm `αλ̃`.
    BoundaryTie,
    /// `(1−α)λ̃ < ‖ỹ‖∞ < λ̃`: a 1-sparse minimizer.
    OneSparse,
    /// `‖ỹ‖∞ ≤ (1−α)λ̃`.
    Zero,
}

/// Which branch produced a prox output. `chosen_index` is set exactly for the
/// 1-sparse branches; ties are broken towards the smallest index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProxCase {
    pub tag: ProxTag,
    pub chosen_index: Option<usize>,
}

impl ProxCase {
    fn plain(tag: ProxTag) -> Self {
        Self {
            tag,
            chosen_index: None,
        }
    }
}

#[inline]
pub fn shrink(v: f64, kappa: f64) -> f64 {
    if v > kappa {
        v - kappa
    } else if v < -kappa {
        v + kappa
    } else {
        0.0
    }
}

/// Componentwise `sign(v)·max(|v| − κ, 0)`.
pub fn soft_threshold(v: &DVector<f64>, kappa: f64) -> DVector<f64> {
    v.map(|x| shrink(x, kappa))
}

fn check_inputs(y: &DVector<f64>, step: f64, params: &DcenParams) -> Result<()> {
    if !(step.is_finite() && step > 0.0) {
        return Err(DcenError::Parameter(format!(
            "prox step must be positive, got {step}"
        )));
    }
    if !y.iter().all(|v| v.is_finite()) {
        return Err(DcenError::Domain("prox input has non-finite entries".into()));
    }
    params.validate_degenerate()
}

/// Smallest index attaining `max |v_i|`.
fn argmax_abs(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

/// Prox of `λ(‖x‖₁ − α‖x‖₂)` at `y`.
fn prox_l1_minus_alpha_l2(y: &DVector<f64>, lambda: f64, alpha: f64) -> (DVector<f64>, ProxCase) {
    let n = y.len();
    let ymax = norm_inf(y.as_slice());
    if ymax <= (1.0 - alpha) * lambda * (1.0 + TIE_REL) {
        return (DVector::zeros(n), ProxCase::plain(ProxTag::Zero));
    }
    if (ymax - lambda).abs() <= TIE_REL * lambda {
        let i = argmax_abs(y.as_slice());
        let mut x = DVector::zeros(n);
        x[i] = y[i].signum() * alpha * lambda;
        return (
            x,
            ProxCase {
                tag: ProxTag::BoundaryTie,
                chosen_index: Some(i),
            },
        );
    }
    if ymax > lambda {
        let s = soft_threshold(y, lambda);
        let ns = norm2(s.as_slice());
        let x = &s * ((ns + alpha * lambda) / ns);
        return (x, ProxCase::plain(ProxTag::Interior));
    }
    let i = argmax_abs(y.as_slice());
    let mut x = DVector::zeros(n);
    x[i] = y[i].signum() * (y[i].abs() - (1.0 - alpha) * lambda);
    (
        x,
        ProxCase {
            tag: ProxTag::OneSparse,
            chosen_index: Some(i),
        },
    )
}

/// Minimizer of `γ(‖x‖₁ − α‖x‖₂) + (1−γ)‖x‖₂² + ‖x − y‖₂²/(2·step)`.
///
/// `params.lambda` is not used; the caller folds any regularization weight
/// into `step`. `γ = 1` is accepted so the LASSO and `ℓ1 − αℓ2` degenerations
/// can share this routine.
pub fn prox_dcen(y: &DVector<f64>, step: f64, params: &DcenParams) -> Result<(DVector<f64>, ProxCase)> {
    check_inputs(y, step, params)?;
    Ok(prox_unchecked(y, step, params.gamma, params.alpha))
}

pub(crate) fn prox_unchecked(y: &DVector<f64>, step: f64, gamma: f64, alpha: f64) -> (DVector<f64>, ProxCase) {
    let c = 1.0 + 2.0 * step * (1.0 - gamma);
    let lambda_t = step * gamma / c;
    let y_t = y / c;
    prox_l1_minus_alpha_l2(&y_t, lambda_t, alpha)
}

/// Interior-branch formula written directly in terms of `(y, step)`:
/// `S_{γt}(y)·(‖S‖ + αγt) / ((1 + 2t(1−γ))‖S‖)`. `None` when `S_{γt}(y) = 0`.
pub fn prox_interior_direct(y: &DVector<f64>, step: f64, params: &DcenParams) -> Option<DVector<f64>> {
    let (g, a) = (params.gamma, params.alpha);
    let s = soft_threshold(y, g * step);
    let ns = norm2(s.as_slice());
    if ns == 0.0 {
        return None;
    }
    let scale = (ns + a * g * step) / ((1.0 + 2.0 * step * (1.0 - g)) * ns);
    Some(s * scale)
}

/// The prox objective `γ(‖x‖₁ − α‖x‖₂) + (1−γ)‖x‖₂² + ‖x − y‖₂²/(2·step)`.
pub fn prox_objective(x: &DVector<f64>, y: &DVector<f64>, step: f64, params: &DcenParams) -> f64 {
    regularizer(x.as_slice(), params.gamma, params.alpha) + (x - y).norm_squared() / (2.0 * step)
}

/// Objective gap of a prox output against another point, with its certified
/// upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxGap {
    /// `f(x*) − f(x)`.
    pub gap: f64,
    /// `min(½(γα/‖x*‖₂ − 1/step − (1−γ)), 0)·‖x* − x‖₂²`.
    pub bound: f64,
}

/// Quadratic upper bound on how much better `x*` is than any other point.
/// `γα/‖x*‖₂` is read as `0` when `α = 0` and as `+∞` when `α > 0` and `x* = 0`.
pub fn prox_objective_gap(
    x_star: &DVector<f64>,
    x: &DVector<f64>,
    y: &DVector<f64>,
    step: f64,
    params: &DcenParams,
) -> Result<ProxGap> {
    check_inputs(y, step, params)?;
    if x_star.len() != y.len() || x.len() != y.len() {
        return Err(DcenError::Shape("prox gap vectors differ in length".into()));
    }
    if !x.iter().chain(x_star.iter()).all(|v| v.is_finite()) {
        return Err(DcenError::Domain("prox gap input has non-finite entries".into()));
    }
    let gap = prox_objective(x_star, y, step, params) - prox_objective(x, y, step, params);
    let (g, a) = (params.gamma, params.alpha);
    let nx = norm2(x_star.as_slice());
    let ratio = if a == 0.0 {
        0.0
    } else if nx == 0.0 {
        f64::INFINITY
    } else {
        g * a / nx
    };
    let coef = (0.5 * (ratio - 1.0 / step - (1.0 - g))).min(0.0);
    let dist = (x_star - x).norm_squared();
    let bound = if dist == 0.0 { 0.0 } else { coef * dist };
    Ok(ProxGap { gap, bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn params(gamma: f64, alpha: f64) -> DcenParams {
        DcenParams {
            gamma,
            alpha,
            ..DcenParams::default()
        }
    }

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn zero_case_below_threshold() {
        let p = params(0.6, 0.5);
        // (1−α)γt = 0.3·2 = 0.6 and the zero test on ỹ is equivalent
        let (x, case) = prox_dcen(&v(&[0.6, -0.2, 0.0]), 2.0, &p).unwrap();
        assert_eq!(case.tag, ProxTag::Zero);
        assert_eq!(case.chosen_index, None);
        assert!(x.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn lasso_degeneration_is_soft_threshold() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
        let p = params(1.0, 0.0);
        for _ in 0..200 {
            let y = DVector::from_fn(5, |_, _| rng.random_range(-3.0..3.0));
            let t = rng.random_range(0.1..2.0);
            let (x, _) = prox_dcen(&y, t, &p).unwrap();
            for i in 0..5 {
                let expect = y[i].signum() * (y[i].abs() - t).max(0.0);
                assert!((x[i] - expect).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn elastic_net_degeneration() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(2);
        for _ in 0..200 {
            let g = rng.random_range(0.05..0.95);
            let p = params(g, 0.0);
            let y = DVector::from_fn(4, |_, _| rng.random_range(-3.0..3.0));
            let t = rng.random_range(0.1..3.0);
            let (x, _) = prox_dcen(&y, t, &p).unwrap();
            for i in 0..4 {
                let expect = y[i].signum() * (y[i].abs() - g * t).max(0.0) / (1.0 + 2.0 * t * (1.0 - g));
                assert!((x[i] - expect).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn grid_oracle_two_dims() {
        let p = params(0.5, 0.5);
        let y = v(&[3.0, 0.1]);
        let (x, case) = prox_dcen(&y, 1.0, &p).unwrap();
        assert_eq!(case.tag, ProxTag::Interior);
        let fx = prox_objective(&x, &y, 1.0, &p);
        for i in 0..=400 {
            for j in 0..=400 {
                let g = v(&[-4.0 + 0.02 * i as f64, -4.0 + 0.02 * j as f64]);
                assert!(fx <= prox_objective(&g, &y, 1.0, &p) + 1e-12);
            }
        }
    }

    #[test]
    fn interior_matches_direct_formula() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
        let mut checked = 0;
        for _ in 0..2000 {
            let p = params(rng.random_range(0.05..0.95), rng.random_range(0.0..0.95));
            let n = rng.random_range(1..8);
            let y = DVector::from_fn(n, |_, _| rng.random_range(-5.0..5.0));
            let t = rng.random_range(0.1..5.0);
            let (x, case) = prox_dcen(&y, t, &p).unwrap();
            if case.tag != ProxTag::Interior {
                continue;
            }
            let direct = prox_interior_direct(&y, t, &p).unwrap();
            assert!((&x - &direct).amax() < 1e-12);
            checked += 1;
        }
        assert!(checked > 500);
    }

    #[test]
    fn tie_and_one_sparse_pick_smallest_index() {
        let p = params(0.5, 0.5);
        // c = 1 + 2·1·0.5 = 2, λ̃ = 0.25; ỹ = y/2
        let (x, case) = prox_dcen(&v(&[0.4, -0.4, 0.1]), 1.0, &p).unwrap();
        assert_eq!(case.tag, ProxTag::OneSparse);
        assert_eq!(case.chosen_index, Some(0));
        assert!((x[0] - (0.2 - 0.125)).abs() < 1e-15 && x[1] == 0.0 && x[2] == 0.0);

        let (x, case) = prox_dcen(&v(&[0.1, -0.5, 0.5]), 1.0, &p).unwrap();
        assert_eq!(case.tag, ProxTag::BoundaryTie);
        assert_eq!(case.chosen_index, Some(1));
        assert!((x[1] + 0.125).abs() < 1e-15 && x[0] == 0.0 && x[2] == 0.0);
    }

    #[test]
    fn sign_and_support_preserved() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(4);
        for _ in 0..1000 {
            let p = params(rng.random_range(0.05..0.95), rng.random_range(0.0..0.95));
            let y = DVector::from_fn(6, |i, _| if i % 3 == 0 { 0.0 } else { rng.random_range(-5.0..5.0) });
            let (x, _) = prox_dcen(&y, rng.random_range(0.1..5.0), &p).unwrap();
            for i in 0..6 {
                assert!(x[i] * y[i] >= 0.0);
                if y[i] == 0.0 {
                    assert_eq!(x[i], 0.0);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = params(0.5, 0.5);
        assert!(matches!(prox_dcen(&v(&[1.0]), 0.0, &p), Err(DcenError::Parameter(_))));
        assert!(matches!(prox_dcen(&v(&[f64::INFINITY]), 1.0, &p), Err(DcenError::Domain(_))));
    }

    #[test]
    fn gap_examples() {
        let p = params(0.7, 0.4);
        let y = v(&[2.0, -1.0]);
        let (xs, _) = prox_dcen(&y, 0.8, &p).unwrap();
        let g = prox_objective_gap(&xs, &xs, &y, 0.8, &p).unwrap();
        assert_eq!((g.gap, g.bound), (0.0, 0.0));

        // α = 0 with x* = 0: f(0) − f(x) ≤ −(1−γ+1/(2t))‖x‖²
        let p = params(0.7, 0.0);
        let y = v(&[0.1, -0.2]);
        let (xs, case) = prox_dcen(&y, 0.8, &p).unwrap();
        assert_eq!(case.tag, ProxTag::Zero);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
        for _ in 0..1000 {
            let x = DVector::from_fn(2, |_, _| rng.random_range(-2.0..2.0));
            let g = prox_objective_gap(&xs, &x, &y, 0.8, &p).unwrap();
            assert!(g.gap <= -(0.3 + 1.0 / 1.6) * x.norm_squared() + 1e-12);
            assert!(g.gap <= g.bound + 1e-12);
        }
    }
}
