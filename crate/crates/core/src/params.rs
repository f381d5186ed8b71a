use serde::{Deserialize, Serialize};

use crate::error::{DcenError, Result};

/// Regularization and solver hyperparameters shared by every solver.
///
/// Defaults follow the reference experimental setup: all tolerances `1e-6`,
/// at most 50 outer DCA iterations and `5n` inner ADMM iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DcenParams {
    /// Regularization weight λ.
    pub lambda: f64,
    /// Mixing weight γ between the `ℓ1 − αℓ2` part and the ridge part.
    pub gamma: f64,
    /// Strength α of the subtracted `ℓ2` norm.
    pub alpha: f64,
    /// ADMM penalty ρ.
    pub rho: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    /// Floor of the denominator in the relative consistency measure.
    pub eps_machine: f64,
    /// Outer DCA tolerance on `‖x_{k+1} − x_k‖ ≤ ε(1 + ‖x_k‖)`.
    pub dca_eps: f64,
    /// Outer iteration cap K.
    pub max_outer: usize,
    /// Inner iteration cap T; `None` means `5n`.
    pub max_inner: Option<usize>,
    /// Residual-balancing penalty adaptation in the inner ADMM. Off by default.
    pub adaptive_rho: bool,
}

impl Default for DcenParams {
    fn default() -> Self {
        Self {
            lambda: 1e-7,
            gamma: 0.8,
            alpha: 0.7,
            rho: 1.0,
            eps_abs: 1e-6,
            eps_rel: 1e-6,
            eps_machine: 1e-6,
            dca_eps: 1e-6,
            max_outer: 50,
            max_inner: None,
            adaptive_rho: false,
        }
    }
}

impl DcenParams {
    pub fn new(lambda: f64, gamma: f64, alpha: f64) -> Result<Self> {
        let p = Self {
            lambda,
            gamma,
            alpha,
            ..Self::default()
        };
        p.validate()?;
        Ok(p)
    }

    /// Checks the DCEN parameter domain: `0 < γ < 1`, `0 ≤ α < 1`, positive λ, ρ,
    /// tolerances and iteration caps.
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(DcenError::Parameter(format!(
                "gamma must lie in the open interval (0, 1), got {}",
                self.gamma
            )));
        }
        self.validate_common()
    }

    /// Like [`validate`](Self::validate) but admits `γ = 1`, the boundary at which
    /// the penalty degenerates to LASSO or `ℓ1 − αℓ2`.
    pub fn validate_degenerate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(DcenError::Parameter(format!(
                "gamma must lie in (0, 1], got {}",
                self.gamma
            )));
        }
        self.validate_common()
    }

    fn validate_common(&self) -> Result<()> {
        let positive = [
            ("lambda", self.lambda),
            ("rho", self.rho),
            ("eps_abs", self.eps_abs),
            ("eps_rel", self.eps_rel),
            ("eps_machine", self.eps_machine),
            ("dca_eps", self.dca_eps),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(DcenError::Parameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.alpha >= 0.0 && self.alpha < 1.0) {
            return Err(DcenError::Parameter(format!(
                "alpha must lie in [0, 1), got {}",
                self.alpha
            )));
        }
        if self.max_outer == 0 || self.max_inner == Some(0) {
            return Err(DcenError::Parameter(
                "iteration caps must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Inner iteration cap for a problem with `n` unknowns.
    pub fn inner_cap(&self, n: usize) -> usize {
        self.max_inner.unwrap_or(5 * n).max(1)
    }

    /// LASSO degeneration (`γ = 1`, `α = 0`).
    pub fn lasso(&self) -> Self {
        Self {
            gamma: 1.0,
            alpha: 0.0,
            ..*self
        }
    }

    /// Elastic Net degeneration (`α = 0`).
    pub fn elastic_net(&self) -> Self {
        Self { alpha: 0.0, ..*self }
    }

    /// `ℓ1 − αℓ2` degeneration (`γ = 1`).
    pub fn l1_minus_alpha_l2(&self) -> Self {
        Self { gamma: 1.0, ..*self }
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    pub fn with_rho(self, rho: f64) -> Self {
        Self { rho, ..self }
    }

    pub fn with_tolerances(self, eps_abs: f64, eps_rel: f64) -> Self {
        Self {
            eps_abs,
            eps_rel,
            ..self
        }
    }
}
