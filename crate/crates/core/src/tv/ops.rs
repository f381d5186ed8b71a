//! Periodic forward differences on an `N×N` row-major grid. `x` runs along a
//! row (column index `j`), `y` down a column (row index `i`).

use std::f64::consts::PI;

/// `(D_x u)[i,j] = u[i,j+1] − u[i,j]`.
pub fn dx(u: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = u[i * n + (j + 1) % n] - u[i * n + j];
        }
    }
    out
}

/// `(D_y u)[i,j] = u[i+1,j] − u[i,j]`.
pub fn dy(u: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        let down = ((i + 1) % n) * n;
        for j in 0..n {
            out[i * n + j] = u[down + j] - u[i * n + j];
        }
    }
    out
}

/// `(D_xᵀ v)[i,j] = v[i,j−1] − v[i,j]`.
pub fn dx_t(v: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = v[i * n + (j + n - 1) % n] - v[i * n + j];
        }
    }
    out
}

/// `(D_yᵀ v)[i,j] = v[i−1,j] − v[i,j]`.
pub fn dy_t(v: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        let up = ((i + n - 1) % n) * n;
        for j in 0..n {
            out[i * n + j] = v[up + j] - v[i * n + j];
        }
    }
    out
}

/// Eigenvalues of `D_xᵀD_x + D_yᵀD_y = −Δ` in the DFT basis:
/// `L(k,l) = 4 − 2cos(2πk/N) − 2cos(2πl/N)`.
pub fn laplacian_eigenvalues(n: usize) -> Vec<f64> {
    let c: Vec<f64> = (0..n).map(|k| 2.0 * (2.0 * PI * k as f64 / n as f64).cos()).collect();
    let mut out = vec![0.0; n * n];
    for k in 0..n {
        for l in 0..n {
            out[k * n + l] = 4.0 - c[k] - c[l];
        }
    }
    out
}
