//! DCEN-TV reconstruction from undersampled Fourier data.
//!
//! Solves `min γ(‖∇u‖₁ − α‖∇u‖₂) + (1−γ)‖∇u‖₂²  s.t.  R·F u = f` by DCA on the
//! `−αγ‖∇u‖₂` term (pointwise gradient direction `t`), with each convex
//! subproblem handled by split Bregman sweeps:
//!
//! ```text
//! u  ← (μR − βΔ)⁻¹(μFᴴRz + βD_xᵀ(d_x − b_x) + βD_yᵀ(d_y − b_y))   (diagonal in Fourier)
//! d  ← shrink((γα·t + β(Du + b)) / (β + 2(1−γ)),  γ / (β + 2(1−γ)))
//! b  ← b + Du − d
//! ```
//!
//! and the data multiplier `z ← z + f − RFu` once per outer step.
//!
//! `F` is the unitary 2-D DFT, differences are forward and periodic. The mask
//! is expected to be symmetric under `(k, l) → (−k, −l)`, in which case the
//! normal operator maps real images to real images and the iterate is kept real.

pub mod fft;
pub mod ops;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DcenError, Result};
use crate::params::DcenParams;
use crate::prox::shrink;
use fft::Fft2;
use ops::{dx, dx_t, dy, dy_t, laplacian_eigenvalues};

/// Square real image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image2D {
    n_side: usize,
    data: Vec<f64>,
}

impl Image2D {
    pub fn new(n_side: usize, data: Vec<f64>) -> Result<Self> {
        if n_side == 0 || data.len() != n_side * n_side {
            return Err(DcenError::Shape(format!(
                "image of side {n_side} needs {} values, got {}",
                n_side * n_side,
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(DcenError::Domain("image has non-finite pixels".into()));
        }
        Ok(Self { n_side, data })
    }

    pub fn zeros(n_side: usize) -> Self {
        Self {
            n_side,
            data: vec![0.0; n_side * n_side],
        }
    }

    pub fn n_side(&self) -> usize {
        self.n_side
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_side + j]
    }

    /// `‖self − truth‖₂ / ‖truth‖₂`.
    pub fn rel_err(&self, truth: &Image2D) -> Result<f64> {
        if truth.n_side != self.n_side {
            return Err(DcenError::Shape("images differ in size".into()));
        }
        let num: f64 = self.data.iter().zip(&truth.data).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = truth.data.iter().map(|b| b * b).sum();
        if den == 0.0 {
            return Err(DcenError::Domain("reference image is zero".into()));
        }
        Ok((num / den).sqrt())
    }
}

/// Fourier samples on a binary mask; entries off the mask are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct KSpaceData {
    n_side: usize,
    samples: Vec<Complex64>,
    mask: Vec<bool>,
}

impl KSpaceData {
    pub fn new(n_side: usize, samples: Vec<Complex64>, mask: Vec<bool>) -> Result<Self> {
        let len = n_side * n_side;
        if n_side == 0 || samples.len() != len || mask.len() != len {
            return Err(DcenError::Shape(format!("k-space grids must have {len} entries")));
        }
        if !samples.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            return Err(DcenError::Domain("k-space samples are not finite".into()));
        }
        if samples.iter().zip(&mask).any(|(c, &m)| !m && c.norm_sqr() != 0.0) {
            return Err(DcenError::Domain("k-space samples must vanish off the mask".into()));
        }
        Ok(Self { n_side, samples, mask })
    }

    /// `f = R·F(image)`.
    pub fn sample(image: &Image2D, mask: Vec<bool>) -> Result<Self> {
        let n = image.n_side;
        if mask.len() != n * n {
            return Err(DcenError::Shape("mask and image differ in size".into()));
        }
        let mut f = Fft2::new(n).forward_real(&image.data);
        for (c, &m) in f.iter_mut().zip(&mask) {
            if !m {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        Self::new(n, f, mask)
    }

    pub fn n_side(&self) -> usize {
        self.n_side
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Default data weight `μ = 100·mean|f|` over the sampled bins.
    pub fn default_mu(&self) -> f64 {
        let (sum, count) = self
            .samples
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .fold((0.0, 0usize), |(s, c), (v, _)| (s + v.norm(), c + 1));
        if count == 0 || sum == 0.0 {
            1.0
        } else {
            100.0 * sum / count as f64
        }
    }
}

/// Split Bregman variables and the current gradient direction.
#[derive(Debug, Clone)]
pub struct BregmanState {
    pub n_side: usize,
    pub d_x: Vec<f64>,
    pub d_y: Vec<f64>,
    pub b_x: Vec<f64>,
    pub b_y: Vec<f64>,
    pub z: Vec<Complex64>,
    pub t_x: Vec<f64>,
    pub t_y: Vec<f64>,
}

impl BregmanState {
    /// Zero splits and multipliers, `z = f`.
    pub fn new(kspace: &KSpaceData) -> Self {
        let len = kspace.n_side * kspace.n_side;
        Self {
            n_side: kspace.n_side,
            d_x: vec![0.0; len],
            d_y: vec![0.0; len],
            b_x: vec![0.0; len],
            b_y: vec![0.0; len],
            z: kspace.samples.clone(),
            t_x: vec![0.0; len],
            t_y: vec![0.0; len],
        }
    }
}

/// Pointwise unit gradient direction `∇u/|∇u|`, `(0, 0)` where the gradient vanishes.
pub fn gradient_direction(u: &Image2D) -> (Vec<f64>, Vec<f64>) {
    let n = u.n_side;
    let mut gx = dx(&u.data, n);
    let mut gy = dy(&u.data, n);
    for (a, b) in gx.iter_mut().zip(gy.iter_mut()) {
        let mag = a.hypot(*b);
        if mag > 0.0 {
            *a /= mag;
            *b /= mag;
        } else {
            *a = 0.0;
            *b = 0.0;
        }
    }
    (gx, gy)
}

/// Reusable FFT plan and Laplacian symbol for one grid size.
pub struct TvWorkspace {
    fft: Fft2,
    lap: Vec<f64>,
}

impl TvWorkspace {
    pub fn new(n_side: usize) -> Self {
        Self {
            fft: Fft2::new(n_side),
            lap: laplacian_eigenvalues(n_side),
        }
    }

    /// Exact Fourier-domain solve of the `u` normal equations. A zero
    /// denominator (DC unsampled with `μ` or `β` vanishing) sets that
    /// coefficient to zero.
    pub fn u_update(&mut self, state: &BregmanState, kspace: &KSpaceData, mu: f64, beta: f64) -> Image2D {
        let n = state.n_side;
        let vx: Vec<f64> = state.d_x.iter().zip(&state.b_x).map(|(d, b)| d - b).collect();
        let vy: Vec<f64> = state.d_y.iter().zip(&state.b_y).map(|(d, b)| d - b).collect();
        let gx = dx_t(&vx, n);
        let gy = dy_t(&vy, n);
        let grad_term: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| a + b).collect();
        let mut hat = self.fft.forward_real(&grad_term);
        for k in 0..n * n {
            let m = if kspace.mask[k] { 1.0 } else { 0.0 };
            let den = mu * m + beta * self.lap[k];
            hat[k] = if den == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                (state.z[k] * (mu * m) + hat[k] * beta) / den
            };
        }
        self.fft.inverse(&mut hat);
        Image2D {
            n_side: n,
            data: hat.iter().map(|c| c.re).collect(),
        }
    }

    /// `z ← z + f − R F u`.
    pub fn data_consistency_update(&mut self, state: &mut BregmanState, u: &Image2D, kspace: &KSpaceData) {
        let fu = self.fft.forward_real(&u.data);
        for k in 0..fu.len() {
            if kspace.mask[k] {
                state.z[k] += kspace.samples[k] - fu[k];
            }
        }
    }

    /// `‖R F u − f‖₂`.
    pub fn data_misfit(&mut self, u: &Image2D, kspace: &KSpaceData) -> f64 {
        let fu = self.fft.forward_real(&u.data);
        fu.iter()
            .zip(&kspace.samples)
            .zip(&kspace.mask)
            .filter(|(_, &m)| m)
            .map(|((a, b), _)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Frequency-domain `u` solve with a one-off workspace.
pub fn u_update(state: &BregmanState, kspace: &KSpaceData, mu: f64, beta: f64) -> Image2D {
    TvWorkspace::new(state.n_side).u_update(state, kspace, mu, beta)
}

/// Shrinkage of the gradient splits followed by the Bregman multiplier step.
pub fn shrink_update(state: &mut BregmanState, u: &Image2D, params: &DcenParams, beta: f64) {
    let n = state.n_side;
    let (g, a) = (params.gamma, params.alpha);
    let den = beta + 2.0 * (1.0 - g);
    let kappa = g / den;
    let ux = dx(&u.data, n);
    let uy = dy(&u.data, n);
    for k in 0..n * n {
        state.d_x[k] = shrink((g * a * state.t_x[k] + beta * (ux[k] + state.b_x[k])) / den, kappa);
        state.d_y[k] = shrink((g * a * state.t_y[k] + beta * (uy[k] + state.b_y[k])) / den, kappa);
        state.b_x[k] += ux[k] - state.d_x[k];
        state.b_y[k] += uy[k] - state.d_y[k];
    }
}

/// `z ← z + f − R F u` with a one-off FFT plan.
pub fn data_consistency_update(state: &mut BregmanState, u: &Image2D, kspace: &KSpaceData) {
    TvWorkspace::new(state.n_side).data_consistency_update(state, u, kspace)
}

/// Budget and weights of a DCEN-TV run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TvOptions {
    /// Data weight; `None` means [`KSpaceData::default_mu`].
    pub mu: Option<f64>,
    pub beta: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for TvOptions {
    fn default() -> Self {
        Self {
            mu: None,
            beta: 1.0,
            max_outer: 50,
            max_inner: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TvOutcome {
    pub image: Image2D,
    /// `‖R F u − f‖` after each outer step.
    pub misfit: Vec<f64>,
}

/// DCEN-TV with the data multiplier updated once per outer step. `γ = 1,
/// α = 0` is the classical split Bregman TV reconstruction.
pub fn reconstruct_dcen_tv(
    kspace: &KSpaceData,
    params: &DcenParams,
    mu: f64,
    beta: f64,
    max_outer: usize,
    max_inner: usize,
) -> Result<Image2D> {
    let opts = TvOptions {
        mu: Some(mu),
        beta,
        max_outer,
        max_inner,
    };
    Ok(reconstruct_dcen_tv_traced(kspace, params, &opts)?.image)
}

pub fn reconstruct_dcen_tv_traced(kspace: &KSpaceData, params: &DcenParams, opts: &TvOptions) -> Result<TvOutcome> {
    params.validate_degenerate()?;
    if !kspace.mask.iter().any(|&m| m) {
        return Err(DcenError::Domain("sampling mask is empty".into()));
    }
    let mu = opts.mu.unwrap_or_else(|| kspace.default_mu());
    if !(mu.is_finite() && mu > 0.0 && opts.beta.is_finite() && opts.beta > 0.0) {
        return Err(DcenError::Parameter("mu and beta must be positive".into()));
    }
    if opts.max_outer == 0 || opts.max_inner == 0 {
        return Err(DcenError::Parameter("iteration counts must be at least 1".into()));
    }
    let n = kspace.n_side;
    let mut ws = TvWorkspace::new(n);
    let mut state = BregmanState::new(kspace);
    let mut u = Image2D::zeros(n);
    let mut misfit = Vec::with_capacity(opts.max_outer);
    for outer in 0..opts.max_outer {
        let (tx, ty) = gradient_direction(&u);
        state.t_x = tx;
        state.t_y = ty;
        for _ in 0..opts.max_inner {
            u = ws.u_update(&state, kspace, mu, opts.beta);
            shrink_update(&mut state, &u, params, opts.beta);
        }
        if !u.data.iter().all(|v| v.is_finite()) {
            return Err(DcenError::Numerical {
                iteration: outer,
                detail: "TV iterate is not finite".into(),
            });
        }
        ws.data_consistency_update(&mut state, &u, kspace);
        misfit.push(ws.data_misfit(&u, kspace));
    }
    Ok(TvOutcome { image: u, misfit })
}
