//! Monte-Carlo experiment harness: recovery metrics, success-rate sweeps over
//! sparsity, noisy sweeps with a per-method λ grid, and variable selection on
//! the correlated design.
//!
//! Every trial derives its own seed with [`child_seed`] from the run seed and
//! the trial index, so results do not depend on the number of worker threads.
//! Within a trial, stream 0 draws the matrix, stream 1 the signal and stream
//! `2 + l` the noise at level `l`.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admm::solve_admm;
use crate::datagen::{
    add_awgn, child_seed, gen_dct_matrix, gen_gaussian_matrix, gen_sparse_signal, warm_start, CorrelatedDesign,
    SparseSignalSpec, ValueDist,
};
use crate::dca::{solve_dca, solve_dca_degenerate};
use crate::error::{DcenError, Result};
use crate::params::DcenParams;
use crate::problem::Problem;
use crate::report::SolveReport;

/// A trial succeeds when the relative error is below this.
pub const SUCCESS_TOL: f64 = 1e-3;
pub const DEFAULT_SELECT_TOL: f64 = 1e-4;

/// `‖x* − x♯‖₂ / ‖x♯‖₂`.
pub fn relative_error(x_star: &DVector<f64>, x_truth: &DVector<f64>) -> Result<f64> {
    if x_star.len() != x_truth.len() {
        return Err(DcenError::Shape(format!(
            "estimate has length {}, truth has length {}",
            x_star.len(),
            x_truth.len()
        )));
    }
    let t = x_truth.norm();
    if t == 0.0 {
        return Err(DcenError::Domain("relative error undefined for a zero truth".into()));
    }
    Ok((x_star - x_truth).norm() / t)
}

/// `10·log10(‖x♯‖² / ‖x* − x♯‖²)` in dB; `+∞` for an exact estimate.
pub fn reconstruction_snr(x_star: &DVector<f64>, x_truth: &DVector<f64>) -> Result<f64> {
    Ok(snr_from_rel_err(relative_error(x_star, x_truth)?))
}

pub fn snr_from_rel_err(rel_err: f64) -> f64 {
    -20.0 * rel_err.log10()
}

/// Outcome of one solve against a known truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub rel_err: f64,
    pub success: bool,
    pub recon_snr_db: f64,
    pub selected: Vec<bool>,
    pub wall_time_ms: f64,
}

impl TrialStats {
    pub fn evaluate(x: &DVector<f64>, truth: &DVector<f64>, select_tol: f64, wall_time_ms: f64) -> Result<Self> {
        let rel_err = relative_error(x, truth)?;
        Ok(Self {
            rel_err,
            success: rel_err < SUCCESS_TOL,
            recon_snr_db: snr_from_rel_err(rel_err),
            selected: x.iter().map(|v| v.abs() > select_tol).collect(),
            wall_time_ms,
        })
    }
}

/// Selection frequencies over trials for a design whose true support is the
/// first `per_true_var_prob.len()` predictors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub per_true_var_prob: Vec<f64>,
    /// Mean number of selected predictors per trial.
    pub avg_total: f64,
    /// Mean number of selected predictors outside the true support.
    pub avg_false: f64,
    /// `avg_false` divided by the number of noise predictors.
    pub noise_sel_rate: f64,
}

impl SelectionSummary {
    pub fn from_selections(selected: &[Vec<bool>], n_true: usize) -> Self {
        let trials = selected.len();
        if trials == 0 {
            return Self {
                per_true_var_prob: vec![0.0; n_true],
                avg_total: 0.0,
                avg_false: 0.0,
                noise_sel_rate: 0.0,
            };
        }
        let p = selected[0].len();
        let mut hits = vec![0usize; n_true];
        let mut total = 0usize;
        let mut false_sel = 0usize;
        for sel in selected {
            for (j, &s) in sel.iter().enumerate() {
                if s {
                    total += 1;
                    if j < n_true {
                        hits[j] += 1;
                    } else {
                        false_sel += 1;
                    }
                }
            }
        }
        let t = trials as f64;
        let avg_false = false_sel as f64 / t;
        Self {
            per_true_var_prob: hits.iter().map(|&h| h as f64 / t).collect(),
            avg_total: total as f64 / t,
            avg_false,
            noise_sel_rate: if p > n_true { avg_false / (p - n_true) as f64 } else { 0.0 },
        }
    }

    pub fn mean_true_prob(&self) -> f64 {
        if self.per_true_var_prob.is_empty() {
            return 0.0;
        }
        self.per_true_var_prob.iter().sum::<f64>() / self.per_true_var_prob.len() as f64
    }
}

/// Solver and penalty combination. The baselines are degenerations of the
/// shared parameters: LASSO sets `γ = 1, α = 0`, Elastic Net `α = 0` and
/// `ℓ1 − αℓ2` sets `γ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    DcenDca,
    DcenAdmm,
    LassoAdmm,
    ElasticNetAdmm,
    L1AlphaL2Dca,
    L1AlphaL2Admm,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::DcenDca,
        Method::DcenAdmm,
        Method::LassoAdmm,
        Method::ElasticNetAdmm,
        Method::L1AlphaL2Dca,
        Method::L1AlphaL2Admm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::DcenDca => "dcen-dca",
            Method::DcenAdmm => "dcen-admm",
            Method::LassoAdmm => "lasso-admm",
            Method::ElasticNetAdmm => "elastic-net-admm",
            Method::L1AlphaL2Dca => "l1-alpha-l2-dca",
            Method::L1AlphaL2Admm => "l1-alpha-l2-admm",
        }
    }

    pub fn is_dca(self) -> bool {
        matches!(self, Method::DcenDca | Method::L1AlphaL2Dca)
    }

    /// The parameters this method actually runs with.
    pub fn params(self, base: &DcenParams) -> DcenParams {
        match self {
            Method::DcenDca | Method::DcenAdmm => *base,
            Method::LassoAdmm => base.lasso(),
            Method::ElasticNetAdmm => base.elastic_net(),
            Method::L1AlphaL2Dca | Method::L1AlphaL2Admm => base.l1_minus_alpha_l2(),
        }
    }

    /// Solves from `x0` with the method's degenerated parameters.
    pub fn solve(self, problem: &Problem, base: &DcenParams, x0: &DVector<f64>) -> Result<SolveReport> {
        let p = self.params(base);
        match self {
            Method::DcenDca => solve_dca(problem, &p, x0),
            Method::L1AlphaL2Dca => solve_dca_degenerate(problem, &p, x0),
            _ => solve_admm(problem, &p, x0),
        }
    }

    /// Starting point: DCA methods start from the LASSO-ADMM solution when
    /// `warm` is set, everything else from zero.
    pub fn initial_point(self, problem: &Problem, base: &DcenParams, warm: bool) -> Result<DVector<f64>> {
        if warm && self.is_dca() {
            warm_start(problem, base)
        } else {
            Ok(DVector::zeros(problem.cols()))
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = DcenError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| DcenError::Parameter(format!("unknown method {s:?}")))
    }
}

/// Sensing matrix family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum MatrixKind {
    /// Oversampled DCT with oversampling factor `f`.
    DctOversampled { f: f64 },
    /// Gaussian rows with pairwise column correlation `r`.
    GaussianCorrelated { r: f64 },
}

impl Default for MatrixKind {
    fn default() -> Self {
        MatrixKind::DctOversampled { f: 20.0 }
    }
}

impl MatrixKind {
    pub fn generate(&self, m: usize, n: usize, seed: u64) -> Result<DMatrix<f64>> {
        match *self {
            MatrixKind::DctOversampled { f } => gen_dct_matrix(m, n, f, seed),
            MatrixKind::GaussianCorrelated { r } => gen_gaussian_matrix(m, n, r, seed),
        }
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Success-rate sweep over sparsity levels (noiseless data).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuccessSweepConfig {
    pub m: usize,
    pub n: usize,
    pub matrix: MatrixKind,
    pub sparsity: Vec<usize>,
    pub min_sep: usize,
    #[serde(default)]
    pub value_dist: ValueDist,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub params: DcenParams,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub warm_start: bool,
}

fn default_true() -> bool {
    true
}

/// One row per (s, method).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessRow {
    pub s: usize,
    pub method: Method,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_rel_err: f64,
    pub median_rel_err: f64,
    pub q25_rel_err: f64,
    pub q75_rel_err: f64,
}

pub fn run_success_sweep(cfg: &SuccessSweepConfig) -> Result<Vec<SuccessRow>> {
    if cfg.sparsity.is_empty() {
        return Err(DcenError::Parameter("sparsity grid is empty".into()));
    }
    if cfg.methods.is_empty() {
        return Err(DcenError::Parameter("method list is empty".into()));
    }
    for m in &cfg.methods {
        validate_for(*m, &cfg.params)?;
    }
    let mut rows = Vec::new();
    if cfg.trials == 0 {
        return Ok(rows);
    }
    for (si, &s) in cfg.sparsity.iter().enumerate() {
        let spec = SparseSignalSpec {
            value_dist: cfg.value_dist,
            ..SparseSignalSpec::new(cfg.n, s, cfg.min_sep)
        };
        spec.validate()?;
        let level_seed = child_seed(cfg.seed, si as u64);
        let per_trial: Vec<Vec<TrialStats>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let ts = child_seed(level_seed, t as u64);
                let a = cfg.matrix.generate(cfg.m, cfg.n, child_seed(ts, 0))?;
                let x = gen_sparse_signal(&spec, child_seed(ts, 1))?;
                let b = &a * &x;
                let problem = Problem::with_truth(a, b, Some(x.clone()))?;
                run_methods(&problem, &x, &cfg.methods, &cfg.params, cfg.warm_start, DEFAULT_SELECT_TOL)
            })
            .collect::<Result<_>>()?;
        for (k, &method) in cfg.methods.iter().enumerate() {
            let stats: Vec<&TrialStats> = per_trial.iter().map(|t| &t[k]).collect();
            let mut errs: Vec<f64> = stats.iter().map(|s| s.rel_err).collect();
            errs.sort_by(f64::total_cmp);
            let successes = stats.iter().filter(|s| s.success).count();
            rows.push(SuccessRow {
                s,
                method,
                trials: cfg.trials,
                successes,
                success_rate: successes as f64 / cfg.trials as f64,
                mean_rel_err: errs.iter().sum::<f64>() / errs.len() as f64,
                median_rel_err: quantile(&errs, 0.5),
                q25_rel_err: quantile(&errs, 0.25),
                q75_rel_err: quantile(&errs, 0.75),
            });
        }
    }
    Ok(rows)
}

fn validate_for(method: Method, base: &DcenParams) -> Result<()> {
    let p = method.params(base);
    if method == Method::DcenDca || method == Method::DcenAdmm {
        p.validate()
    } else {
        p.validate_degenerate()
    }
}

/// Runs every method on one problem, sharing the warm start among DCA methods.
fn run_methods(
    problem: &Problem,
    truth: &DVector<f64>,
    methods: &[Method],
    params: &DcenParams,
    warm: bool,
    select_tol: f64,
) -> Result<Vec<TrialStats>> {
    let mut warm_x: Option<DVector<f64>> = None;
    let zero = DVector::zeros(problem.cols());
    methods
        .iter()
        .map(|&m| {
            let t0 = Instant::now();
            let x0 = if warm && m.is_dca() {
                if warm_x.is_none() {
                    warm_x = Some(warm_start(problem, params)?);
                }
                warm_x.as_ref().unwrap()
            } else {
                &zero
            };
            let rep = m.solve(problem, params, x0)?;
            TrialStats::evaluate(&rep.x_vector(), truth, select_tol, elapsed_ms(t0))
        })
        .collect()
}

/// Noisy sweep: for every noise level and method, the λ grid is run on the
/// same trials and the λ with the best mean SNR is reported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSweepConfig {
    pub m: usize,
    pub n: usize,
    pub matrix: MatrixKind,
    pub s: usize,
    pub min_sep: usize,
    #[serde(default)]
    pub value_dist: ValueDist,
    pub snr_levels: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub lambdas: Vec<f64>,
    /// When set, each grid point runs with `ρ = rho_per_lambda · λ`; otherwise
    /// with `params.rho`.
    #[serde(default)]
    pub rho_per_lambda: Option<f64>,
    pub params: DcenParams,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub warm_start: bool,
}

impl NoiseSweepConfig {
    fn params_at(&self, lambda: f64) -> DcenParams {
        let rho = self.rho_per_lambda.map_or(self.params.rho, |c| c * lambda);
        DcenParams {
            lambda,
            rho,
            ..self.params
        }
    }
}

/// Mean reconstruction SNR of one (level, method, λ) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub snr_db: f64,
    pub method: Method,
    pub lambda: f64,
    pub rho: f64,
    pub trials: usize,
    pub mean_recon_snr_db: f64,
    pub mean_rel_err: f64,
    /// Whether this λ gives the best mean SNR for the (level, method) pair.
    pub best: bool,
}

pub fn run_noise_sweep(cfg: &NoiseSweepConfig) -> Result<Vec<NoiseRow>> {
    if cfg.snr_levels.is_empty() {
        return Err(DcenError::Parameter("noise level list is empty".into()));
    }
    if cfg.lambdas.is_empty() || cfg.methods.is_empty() {
        return Err(DcenError::Parameter("lambda grid and method list must be nonempty".into()));
    }
    for &lambda in &cfg.lambdas {
        for m in &cfg.methods {
            validate_for(*m, &cfg.params_at(lambda))?;
        }
    }
    let spec = SparseSignalSpec {
        value_dist: cfg.value_dist,
        ..SparseSignalSpec::new(cfg.n, cfg.s, cfg.min_sep)
    };
    spec.validate()?;
    let mut rows = Vec::new();
    if cfg.trials == 0 {
        return Ok(rows);
    }
    // per_trial[t][level][lambda][method]
    let per_trial: Vec<Vec<Vec<Vec<TrialStats>>>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let ts = child_seed(cfg.seed, t as u64);
            let a = cfg.matrix.generate(cfg.m, cfg.n, child_seed(ts, 0))?;
            let x = gen_sparse_signal(&spec, child_seed(ts, 1))?;
            let clean = &a * &x;
            cfg.snr_levels
                .iter()
                .enumerate()
                .map(|(l, &snr)| {
                    let b = add_awgn(&clean, snr, child_seed(ts, 2 + l as u64))?;
                    let problem = Problem::with_truth(a.clone(), b, Some(x.clone()))?;
                    cfg.lambdas
                        .iter()
                        .map(|&lambda| {
                            run_methods(
                                &problem,
                                &x,
                                &cfg.methods,
                                &cfg.params_at(lambda),
                                cfg.warm_start,
                                DEFAULT_SELECT_TOL,
                            )
                        })
                        .collect()
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let tn = cfg.trials as f64;
    for (l, &snr) in cfg.snr_levels.iter().enumerate() {
        for (k, &method) in cfg.methods.iter().enumerate() {
            let start = rows.len();
            for (g, &lambda) in cfg.lambdas.iter().enumerate() {
                let (snr_sum, err_sum) = per_trial.iter().fold((0.0, 0.0), |(a, b), t| {
                    let st = &t[l][g][k];
                    (a + st.recon_snr_db, b + st.rel_err)
                });
                rows.push(NoiseRow {
                    snr_db: snr,
                    method,
                    lambda,
                    rho: cfg.params_at(lambda).rho,
                    trials: cfg.trials,
                    mean_recon_snr_db: snr_sum / tn,
                    mean_rel_err: err_sum / tn,
                    best: false,
                });
            }
            // first maximum wins ties
            let best = (start..rows.len())
                .fold(start, |b, i| if rows[i].mean_recon_snr_db > rows[b].mean_recon_snr_db { i } else { b });
            rows[best].best = true;
        }
    }
    Ok(rows)
}

/// The best-λ rows of a noise sweep.
pub fn best_rows(rows: &[NoiseRow]) -> Vec<&NoiseRow> {
    rows.iter().filter(|r| r.best).collect()
}

/// Variable selection on the correlated design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionConfig {
    #[serde(default)]
    pub design: CorrelatedDesign,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub params: DcenParams,
    #[serde(default = "default_select_tol")]
    pub select_tol: f64,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub warm_start: bool,
}

fn default_select_tol() -> f64 {
    DEFAULT_SELECT_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub method: Method,
    pub trials: usize,
    pub select_tol: f64,
    pub summary: SelectionSummary,
}

pub fn run_variable_selection(cfg: &SelectionConfig) -> Result<Vec<SelectionRow>> {
    if !(cfg.select_tol > 0.0) {
        return Err(DcenError::Parameter("select_tol must be positive".into()));
    }
    if cfg.methods.is_empty() {
        return Err(DcenError::Parameter("method list is empty".into()));
    }
    for m in &cfg.methods {
        validate_for(*m, &cfg.params)?;
    }
    let per_trial: Vec<Vec<TrialStats>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let d = cfg.design.generate(child_seed(cfg.seed, t as u64))?;
            let problem = Problem::with_truth(d.x, d.y, Some(d.beta.clone()))?;
            run_methods(&problem, &d.beta, &cfg.methods, &cfg.params, cfg.warm_start, cfg.select_tol)
        })
        .collect::<Result<_>>()?;
    Ok(cfg
        .methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let sel: Vec<Vec<bool>> = per_trial.iter().map(|t| t[k].selected.clone()).collect();
            SelectionRow {
                method,
                trials: cfg.trials,
                select_tol: cfg.select_tol,
                summary: SelectionSummary::from_selections(&sel, cfg.design.block),
            }
        })
        .collect())
}

/// Flat CSV view of a selection row: `var1..varK` probabilities then totals.
pub fn write_selection_csv<W: Write>(writer: W, rows: &[SelectionRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let k = rows.first().map_or(0, |r| r.summary.per_true_var_prob.len());
    let mut header = vec!["method".to_string(), "trials".into(), "select_tol".into()];
    header.extend((1..=k).map(|j| format!("var{j}")));
    header.extend(["avg_total".into(), "avg_false".into(), "noise_sel_rate".into()]);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.method.name().to_string(), r.trials.to_string(), format!("{}", r.select_tol)];
        rec.extend(r.summary.per_true_var_prob.iter().map(|p| format!("{p}")));
        rec.extend([
            format!("{}", r.summary.avg_total),
            format!("{}", r.summary.avg_false),
            format!("{}", r.summary.noise_sel_rate),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// CSV with a header row from the field names of `T`.
pub fn write_rows_csv<W: Write, T: Serialize>(writer: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rows_csv_file<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    write_rows_csv(std::fs::File::create(path)?, rows)
}
