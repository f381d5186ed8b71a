//! Solves of the shifted normal equations `(AᵀA + ηI)x = rhs`.
//!
//! Three paths share one cache type:
//! * `CholeskyGram` factors the `n×n` matrix `AᵀA + ηI` (tall or square `A`, `n ≤ 1500`);
//! * `SmwFactor` factors the `m×m` matrix `M = AAᵀ + ηI` and applies the
//!   Woodbury identity `x = (rhs − AᵀM⁻¹A·rhs)/η` (wide `A`);
//! * `ConjugateGradient` runs CG warm-started at the previous solution.
//!
//! Direct solves are followed by up to three rounds of iterative refinement so
//! that small shifts still meet a `1e-10` relative residual.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{DcenError, Result};

/// Above this many columns a square or tall system goes to CG.
pub const CHOLESKY_MAX_COLS: usize = 1500;

const REFINE_TOL: f64 = 1e-12;
const REFINE_STEPS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveMode {
    CholeskyGram,
    SmwFactor,
    ConjugateGradient,
}

/// Default path for an `m×n` matrix.
pub fn select_mode(m: usize, n: usize) -> SolveMode {
    if m < n {
        SolveMode::SmwFactor
    } else if n <= CHOLESKY_MAX_COLS {
        SolveMode::CholeskyGram
    } else {
        SolveMode::ConjugateGradient
    }
}

enum Factor {
    Gram {
        gram: DMatrix<f64>,
        chol: Cholesky<f64, Dyn>,
    },
    Smw {
        chol: Cholesky<f64, Dyn>,
    },
    Cg {
        warm: Option<DVector<f64>>,
    },
}

/// Factorization of `AᵀA + ηI` for one `(A, η)` pair.
pub struct LinearSolveCache {
    mode: SolveMode,
    shift: f64,
    shape: (usize, usize),
    fingerprint: u64,
    factor: Factor,
}

/// FNV-1a over the dimensions and a strided sample of entries. Cheap enough to
/// run on every solve, and catches the common misuse of a cache built for a
/// different matrix.
fn fingerprint(a: &DMatrix<f64>) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    let mut mix = |v: u64| {
        for byte in v.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    mix(a.nrows() as u64);
    mix(a.ncols() as u64);
    let data = a.as_slice();
    let samples = data.len().min(97);
    for k in 0..samples {
        let idx = if samples == 1 { 0 } else { k * (data.len() - 1) / (samples - 1) };
        mix(data[idx].to_bits());
    }
    h
}

impl LinearSolveCache {
    /// Builds the cache on the default path for the shape of `a`.
    pub fn new(a: &DMatrix<f64>, shift: f64) -> Result<Self> {
        Self::with_mode(a, shift, select_mode(a.nrows(), a.ncols()))
    }

    pub fn with_mode(a: &DMatrix<f64>, shift: f64, mode: SolveMode) -> Result<Self> {
        if !(shift.is_finite() && shift > 0.0) {
            return Err(DcenError::Parameter(format!("shift must be positive, got {shift}")));
        }
        let factor = match mode {
            SolveMode::CholeskyGram => {
                let gram = a.tr_mul(a);
                let mut shifted = gram.clone();
                for i in 0..shifted.nrows() {
                    shifted[(i, i)] += shift;
                }
                let chol = Cholesky::new(shifted).ok_or_else(|| numerical("Cholesky of AᵀA + ηI failed"))?;
                Factor::Gram { gram, chol }
            }
            SolveMode::SmwFactor => {
                let mut m = a * a.transpose();
                for i in 0..m.nrows() {
                    m[(i, i)] += shift;
                }
                let chol = Cholesky::new(m).ok_or_else(|| numerical("Cholesky of AAᵀ + ηI failed"))?;
                Factor::Smw { chol }
            }
            SolveMode::ConjugateGradient => Factor::Cg { warm: None },
        };
        Ok(Self {
            mode,
            shift,
            shape: a.shape(),
            fingerprint: fingerprint(a),
            factor,
        })
    }

    pub fn mode(&self) -> SolveMode {
        self.mode
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    fn check(&self, a: &DMatrix<f64>, shift: f64, rhs: &DVector<f64>) -> Result<()> {
        if a.shape() != self.shape || shift.to_bits() != self.shift.to_bits() || fingerprint(a) != self.fingerprint {
            return Err(DcenError::StaleCache(format!(
                "cache built for a {}x{} matrix with shift {}, used with {}x{} and shift {}",
                self.shape.0,
                self.shape.1,
                self.shift,
                a.nrows(),
                a.ncols(),
                shift
            )));
        }
        if rhs.len() != self.shape.1 {
            return Err(DcenError::Shape(format!(
                "right-hand side has length {}, expected {}",
                rhs.len(),
                self.shape.1
            )));
        }
        Ok(())
    }

    /// Solves `(AᵀA + ηI)x = rhs` for the `(A, η)` this cache was built for.
    pub fn solve(&mut self, a: &DMatrix<f64>, shift: f64, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        self.check(a, shift, rhs)?;
        let x = match &mut self.factor {
            Factor::Cg { warm } => {
                let x = conjugate_gradient(a, shift, rhs, warm.as_ref())?;
                *warm = Some(x.clone());
                x
            }
            _ => {
                let rhs_norm = rhs.norm();
                let mut x = self.direct(a, rhs);
                if rhs_norm > 0.0 {
                    let mut last = f64::INFINITY;
                    for _ in 0..REFINE_STEPS {
                        let r = rhs - self.apply(a, &x);
                        let rn = r.norm();
                        // stop at tolerance, or once rounding in the residual itself dominates
                        if rn <= REFINE_TOL * rhs_norm || rn > 0.5 * last {
                            break;
                        }
                        last = rn;
                        x += self.direct(a, &r);
                    }
                }
                x
            }
        };
        if !x.iter().all(|v| v.is_finite()) {
            return Err(numerical("linear solve produced non-finite values"));
        }
        Ok(x)
    }

    fn direct(&self, a: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
        match &self.factor {
            Factor::Gram { chol, .. } => chol.solve(rhs),
            Factor::Smw { chol } => {
                let w = chol.solve(&(a * rhs));
                let mut x = rhs.clone();
                x.gemv_tr(-1.0, a, &w, 1.0);
                x / self.shift
            }
            Factor::Cg { .. } => unreachable!("CG has no direct factor"),
        }
    }

    fn apply(&self, a: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
        match &self.factor {
            Factor::Gram { gram, .. } => gram * x + x * self.shift,
            _ => shifted_normal_apply(a, self.shift, x),
        }
    }
}

fn numerical(detail: &str) -> DcenError {
    DcenError::Numerical {
        iteration: 0,
        detail: detail.into(),
    }
}

/// `(AᵀA + ηI)x` without forming `AᵀA`.
pub fn shifted_normal_apply(a: &DMatrix<f64>, shift: f64, x: &DVector<f64>) -> DVector<f64> {
    let ax = a * x;
    let mut out = x * shift;
    out.gemv_tr(1.0, a, &ax, 1.0);
    out
}

/// `‖(AᵀA + ηI)x − rhs‖ / ‖rhs‖` (absolute when `rhs = 0`).
pub fn normal_residual(a: &DMatrix<f64>, shift: f64, x: &DVector<f64>, rhs: &DVector<f64>) -> f64 {
    let r = (shifted_normal_apply(a, shift, x) - rhs).norm();
    let nr = rhs.norm();
    if nr > 0.0 {
        r / nr
    } else {
        r
    }
}

fn conjugate_gradient(
    a: &DMatrix<f64>,
    shift: f64,
    rhs: &DVector<f64>,
    warm: Option<&DVector<f64>>,
) -> Result<DVector<f64>> {
    let n = rhs.len();
    let rhs_norm = rhs.norm();
    if rhs_norm == 0.0 {
        return Ok(DVector::zeros(n));
    }
    let tol = REFINE_TOL * rhs_norm;
    let mut x = warm.cloned().unwrap_or_else(|| DVector::zeros(n));
    let mut r = rhs - shifted_normal_apply(a, shift, &x);
    let mut p = r.clone();
    let mut rr = r.norm_squared();
    let cap = 10 * n + 100;
    for _ in 0..cap {
        if rr.sqrt() <= tol {
            return Ok(x);
        }
        let ap = shifted_normal_apply(a, shift, &p);
        let step = rr / p.dot(&ap);
        x.axpy(step, &p, 1.0);
        r.axpy(-step, &ap, 1.0);
        let rr_new = r.norm_squared();
        p = &r + &p * (rr_new / rr);
        rr = rr_new;
    }
    // CG recurrences drift; judge on the true residual
    if normal_residual(a, shift, &x, rhs) < 1e-10 {
        Ok(x)
    } else {
        Err(numerical("conjugate gradient did not converge"))
    }
}

/// Woodbury solve with a cache built for `(a, eta)`; fails on a stale cache.
pub fn smw_apply(cache: &mut LinearSolveCache, a: &DMatrix<f64>, eta: f64, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    cache.solve(a, eta, rhs)
}
