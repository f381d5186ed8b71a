//! Sparse recovery with the difference-of-convex Elastic Net (DCEN) penalty
//!
//! `r(x) = γ(‖x‖₁ − α‖x‖₂) + (1−γ)‖x‖₂²`
//!
//! The crate provides the closed-form proximal operator of `r`, a DC-programming
//! solver with an inner ADMM, a direct ADMM solver, a split Bregman TV reconstructor
//! for undersampled Fourier data, recovery-condition calculators, seeded data
//! generators and the Monte-Carlo experiment harness built on top of them.
//!
//! LASSO, Elastic Net and `ℓ1 − αℓ2` are obtained by degenerating `γ` and `α`
//! (see [`DcenParams::lasso`] and friends).

pub mod admm;
pub mod bench;
pub mod datagen;
pub mod dca;
pub mod error;
pub mod io;
pub mod linsolve;
pub mod objective;
pub mod params;
pub mod problem;
pub mod prox;
pub mod report;
pub mod theory;
pub mod tv;

pub use error::{DcenError, Result};
pub use params::DcenParams;
pub use problem::Problem;
pub use report::{SolveReport, Termination};

pub use nalgebra::{DMatrix, DVector};
