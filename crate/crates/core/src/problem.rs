use nalgebra::{DMatrix, DVector};

use crate::error::{DcenError, Result};

/// Least-squares data `(A, b)` with optional ground truth `x♯` for metrics.
#[derive(Debug, Clone)]
pub struct Problem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub truth: Option<DVector<f64>>,
}

impl Problem {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        Self::with_truth(a, b, None)
    }

    pub fn with_truth(a: DMatrix<f64>, b: DVector<f64>, truth: Option<DVector<f64>>) -> Result<Self> {
        let (m, n) = a.shape();
        if m == 0 || n == 0 {
            return Err(DcenError::Shape(format!("sensing matrix is {m}x{n}")));
        }
        if b.len() != m {
            return Err(DcenError::Shape(format!(
                "observation has length {}, matrix has {m} rows",
                b.len()
            )));
        }
        if let Some(t) = &truth {
            if t.len() != n {
                return Err(DcenError::Shape(format!(
                    "ground truth has length {}, matrix has {n} columns",
                    t.len()
                )));
            }
        }
        Ok(Self { a, b, truth })
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn cols(&self) -> usize {
        self.a.ncols()
    }

    pub(crate) fn check_vector(&self, x: &DVector<f64>, what: &str) -> Result<()> {
        if x.len() != self.cols() {
            return Err(DcenError::Shape(format!(
                "{what} has length {}, expected {}",
                x.len(),
                self.cols()
            )));
        }
        Ok(())
    }
}
