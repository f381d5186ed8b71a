//! Seeded generators for every experimental input.
//!
//! All randomness comes from `Xoshiro256PlusPlus` seeded through
//! `seed_from_u64`. Objects built from one experiment seed draw from child
//! streams `child_seed(seed, k)`, a SplitMix64 finalizer applied to
//! `seed + (k+1)·0x9E3779B97F4A7C15`. Uniform floats are the 53-bit
//! `rand` conversion and normals use the Box–Muller pair below, so the byte
//! stream depends only on those two documented transforms.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::admm::solve_admm;
use crate::error::{DcenError, Result};
use crate::params::DcenParams;
use crate::problem::Problem;
use crate::tv::Image2D;

pub type Rng64 = Xoshiro256PlusPlus;

pub fn rng_from_seed(seed: u64) -> Rng64 {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Seed of child stream `stream` derived from `seed`.
pub fn child_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E3779B97F4A7C15)))
}

/// Uniform in `[0, 1)` with 53 random bits.
fn uniform<R: RngCore>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

/// Box–Muller standard normal sampler that hands out both values of a pair.
#[derive(Debug, Default, Clone)]
pub struct Normal {
    spare: Option<f64>,
}

impl Normal {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sample<R: RngCore>(&mut self, rng: &mut R) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        // 1 − u lies in (0, 1], so the logarithm is finite
        let u1 = 1.0 - uniform(rng);
        let u2 = uniform(rng);
        let rad = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        self.spare = Some(rad * s);
        rad * c
    }
}

/// Oversampled DCT matrix: entry `(i, j)` is `cos(2π·w_i·(j+1)/F)/√m` with
/// `w ∈ [0,1)^m` drawn once.
pub fn gen_dct_matrix(m: usize, n: usize, f_factor: f64, seed: u64) -> Result<DMatrix<f64>> {
    if m == 0 || n == 0 {
        return Err(DcenError::Parameter("matrix dimensions must be positive".into()));
    }
    if !(f_factor.is_finite() && f_factor > 0.0) {
        return Err(DcenError::Parameter(format!("oversampling factor must be positive, got {f_factor}")));
    }
    let mut rng = rng_from_seed(seed);
    let w: Vec<f64> = (0..m).map(|_| uniform(&mut rng)).collect();
    let scale = 1.0 / (m as f64).sqrt();
    Ok(DMatrix::from_fn(m, n, |i, j| {
        (2.0 * PI * w[i] * (j + 1) as f64 / f_factor).cos() * scale
    }))
}

/// Rows i.i.d. `N(0, Σ)` with `Σ = (1−r)I + r·𝟙𝟙ᵀ`, sampled through the factor
/// `L = [√(1−r)·I | √r·𝟙]` (so `LLᵀ = Σ`): `row = √(1−r)·g + √r·c·𝟙`.
pub fn gen_gaussian_matrix(m: usize, n: usize, r: f64, seed: u64) -> Result<DMatrix<f64>> {
    if m == 0 || n == 0 {
        return Err(DcenError::Parameter("matrix dimensions must be positive".into()));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(DcenError::Parameter(format!("correlation must lie in [0, 1), got {r}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut normal = Normal::new();
    let (a, b) = ((1.0 - r).sqrt(), r.sqrt());
    let mut out = DMatrix::zeros(m, n);
    for i in 0..m {
        let common = normal.sample(&mut rng);
        for j in 0..n {
            out[(i, j)] = a * normal.sample(&mut rng) + b * common;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueDist {
    #[default]
    StandardNormal,
    /// `±scale` with equiprobable signs.
    RademacherScaled(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparseSignalSpec {
    pub n: usize,
    pub s: usize,
    pub min_sep: usize,
    pub value_dist: ValueDist,
}

impl SparseSignalSpec {
    pub fn new(n: usize, s: usize, min_sep: usize) -> Self {
        Self {
            n,
            s,
            min_sep,
            value_dist: ValueDist::StandardNormal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.s == 0 || self.min_sep == 0 {
            return Err(DcenError::Parameter("sparsity and separation must be at least 1".into()));
        }
        if self.s.saturating_mul(self.min_sep) > self.n {
            return Err(DcenError::Parameter(format!(
                "cannot place {} nonzeros {} apart in length {}",
                self.s, self.min_sep, self.n
            )));
        }
        Ok(())
    }
}

/// `s`-sparse vector whose support indices are pairwise at least `min_sep`
/// apart. Supports are uniform over all admissible placements: choose `s`
/// slots out of `n − (s−1)(min_sep−1)` and spread them out.
pub fn gen_sparse_signal(spec: &SparseSignalSpec, seed: u64) -> Result<DVector<f64>> {
    spec.validate()?;
    let mut rng = rng_from_seed(seed);
    let slots = spec.n - (spec.s - 1) * (spec.min_sep - 1);
    let mut idx = sample(&mut rng, slots, spec.s).into_vec();
    idx.sort_unstable();
    let mut normal = Normal::new();
    let mut x = DVector::zeros(spec.n);
    for (k, &slot) in idx.iter().enumerate() {
        let pos = slot + k * (spec.min_sep - 1);
        let v = match spec.value_dist {
            ValueDist::StandardNormal => loop {
                let v = normal.sample(&mut rng);
                if v != 0.0 {
                    break v;
                }
            },
            ValueDist::RademacherScaled(c) => {
                if uniform(&mut rng) < 0.5 {
                    -c
                } else {
                    c
                }
            }
        };
        x[pos] = v;
    }
    Ok(x)
}

/// Adds white Gaussian noise with power `(‖b‖²/m)·10^(−snr/10)`.
pub fn add_awgn(b: &DVector<f64>, snr_db: f64, seed: u64) -> Result<DVector<f64>> {
    let power = b.norm_squared() / b.len().max(1) as f64;
    if power == 0.0 {
        return Err(DcenError::Domain("SNR is undefined for a zero signal".into()));
    }
    if snr_db.is_nan() {
        return Err(DcenError::Parameter("SNR must not be NaN".into()));
    }
    let sigma = (power * 10f64.powf(-snr_db / 10.0)).sqrt();
    let mut rng = rng_from_seed(seed);
    let mut normal = Normal::new();
    Ok(b.map(|v| v + sigma * normal.sample(&mut rng)))
}

/// `(A, a, b, x0, y0, φ°)` of the modified Shepp–Logan phantom.
const SHEPP_LOGAN: [[f64; 6]; 10] = [
    [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
    [-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0],
    [-0.2, 0.11, 0.31, 0.22, 0.0, -18.0],
    [-0.2, 0.16, 0.41, -0.22, 0.0, 18.0],
    [0.1, 0.21, 0.25, 0.0, 0.35, 0.0],
    [0.1, 0.046, 0.046, 0.0, 0.1, 0.0],
    [0.1, 0.046, 0.046, 0.0, -0.1, 0.0],
    [0.1, 0.046, 0.023, -0.08, -0.605, 0.0],
    [0.1, 0.023, 0.023, 0.0, -0.606, 0.0],
    [0.1, 0.023, 0.046, 0.06, -0.605, 0.0],
];

/// Modified (high-contrast) Shepp–Logan phantom on `[−1,1]²`. Row 0 is the top
/// (`y = 1`); pixel centres sit at `x = (j − c)/c`, `y = (c − i)/c`, `c = (N−1)/2`.
pub fn shepp_logan(n_side: usize) -> Result<Image2D> {
    if n_side < 16 {
        return Err(DcenError::Parameter(format!("phantom needs at least 16 pixels per side, got {n_side}")));
    }
    let c = (n_side as f64 - 1.0) / 2.0;
    let mut data = vec![0.0; n_side * n_side];
    for i in 0..n_side {
        let y = (c - i as f64) / c;
        for j in 0..n_side {
            let x = (j as f64 - c) / c;
            let mut v = 0.0;
            for [amp, a, b, x0, y0, phi] in SHEPP_LOGAN {
                let (s, co) = phi.to_radians().sin_cos();
                let (dx, dy) = (x - x0, y - y0);
                let xr = dx * co + dy * s;
                let yr = -dx * s + dy * co;
                if (xr / a).powi(2) + (yr / b).powi(2) <= 1.0 {
                    v += amp;
                }
            }
            data[i * n_side + j] = v;
        }
    }
    Image2D::new(n_side, data)
}

/// Union of `n_lines` diameters through the DC bin at angles `ℓπ/L`, in the
/// unshifted FFT layout (frequency `(k, l)` at `k·N + l`, negative frequencies
/// wrapped mod `N`). Each line steps its dominant coordinate over
/// `−N/2..=N/2` and rounds the other (half away from zero), so a line covers
/// about `N` bins and the mask is symmetric under `(k, l) → (−k, −l)`.
pub fn radial_mask(n_side: usize, n_lines: usize) -> Result<Vec<bool>> {
    if n_lines == 0 || n_side == 0 {
        return Err(DcenError::Parameter("radial mask needs at least one line and one pixel".into()));
    }
    let n = n_side as i64;
    let half = n / 2;
    let mut mask = vec![false; n_side * n_side];
    for l in 0..n_lines {
        let theta = l as f64 * PI / n_lines as f64;
        let (s, c) = theta.sin_cos();
        for t in -half..=half {
            let (row, col) = if c.abs() >= s.abs() {
                ((t as f64 * s / c).round() as i64, t)
            } else {
                (t, (t as f64 * c / s).round() as i64)
            };
            let (k, q) = (row.rem_euclid(n) as usize, col.rem_euclid(n) as usize);
            mask[k * n_side + q] = true;
        }
    }
    mask[0] = true;
    Ok(mask)
}

pub fn mask_fraction(mask: &[bool]) -> f64 {
    mask.iter().filter(|m| **m).count() as f64 / mask.len().max(1) as f64
}

/// Correlated regression design: the first `block` predictors share pairwise
/// correlation `rho`, the rest are i.i.d. standard normal, and
/// `y = Xβ + ε` with `β` equal to `coef` on the block and `ε ~ N(0, noise_sd²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrelatedDesign {
    pub samples: usize,
    pub predictors: usize,
    pub block: usize,
    pub rho: f64,
    pub coef: f64,
    pub noise_sd: f64,
}

impl Default for CorrelatedDesign {
    fn default() -> Self {
        Self {
            samples: 20,
            predictors: 100,
            block: 3,
            rho: 0.99,
            coef: 3.0,
            noise_sd: 1.2,
        }
    }
}

pub struct Design {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub beta: DVector<f64>,
}

impl CorrelatedDesign {
    pub fn generate(&self, seed: u64) -> Result<Design> {
        if self.samples == 0 || self.block == 0 || self.block > self.predictors {
            return Err(DcenError::Parameter("invalid correlated design dimensions".into()));
        }
        if !(0.0..1.0).contains(&self.rho) || !(self.noise_sd >= 0.0) {
            return Err(DcenError::Parameter("invalid correlated design parameters".into()));
        }
        let mut rng = rng_from_seed(seed);
        let mut normal = Normal::new();
        let (a, b) = ((1.0 - self.rho).sqrt(), self.rho.sqrt());
        let mut x = DMatrix::zeros(self.samples, self.predictors);
        for i in 0..self.samples {
            let common = normal.sample(&mut rng);
            for j in 0..self.predictors {
                let g = normal.sample(&mut rng);
                x[(i, j)] = if j < self.block { a * g + b * common } else { g };
            }
        }
        let beta = DVector::from_fn(self.predictors, |j, _| if j < self.block { self.coef } else { 0.0 });
        let mut y = &x * &beta;
        for v in y.iter_mut() {
            *v += self.noise_sd * normal.sample(&mut rng);
        }
        Ok(Design { x, y, beta })
    }
}

/// The default 20×100 design with a ρ = 0.99 block of three predictors.
pub fn gen_correlated_design(seed: u64) -> Result<(DMatrix<f64>, DVector<f64>, DVector<f64>)> {
    let d = CorrelatedDesign::default().generate(seed)?;
    Ok((d.x, d.y, d.beta))
}

/// LASSO-ADMM solution (same λ, ρ and tolerances) used to initialize the
/// nonconvex solvers.
pub fn warm_start(problem: &Problem, params: &DcenParams) -> Result<DVector<f64>> {
    let rep = solve_admm(problem, &params.lasso(), &DVector::zeros(problem.cols()))?;
    Ok(rep.x_vector())
}
