use serde::{Deserialize, Serialize};

/// Why a solver stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Converged,
    MaxIterations,
}

/// Output of [`solve_dca`](crate::dca::solve_dca) and [`solve_admm`](crate::admm::solve_admm).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub x: Vec<f64>,
    /// Objective `H(x_k)` at the start point and after every outer iteration.
    pub objective_trace: Vec<f64>,
    /// `‖r_t‖₂` per recorded ADMM iteration.
    pub primal_residuals: Vec<f64>,
    /// `‖s_t‖₂` per recorded ADMM iteration.
    pub dual_residuals: Vec<f64>,
    pub outer_iters: usize,
    pub inner_iters_total: usize,
    pub termination: Termination,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn x_vector(&self) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_column_slice(&self.x)
    }
}
