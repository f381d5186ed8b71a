use std::path::Path;

use dcen::bench::{
    run_noise_sweep, run_success_sweep, run_variable_selection, write_rows_csv_file,
    write_selection_csv,
};
use dcen::datagen::{add_awgn, gen_sparse_signal, mask_fraction, radial_mask, shepp_logan, warm_start, SparseSignalSpec};
use dcen::io::{
    read_image_csv, read_matrix, read_vector, write_image_csv, write_mask_csv, write_matrix_bin, write_matrix_csv,
    write_pgm, write_vector_csv,
};
use dcen::prox::{prox_dcen, prox_objective, ProxTag};
use dcen::theory::{condition_report, ConditionInputs};
use dcen::tv::{reconstruct_dcen_tv_traced, KSpaceData, TvOptions};
use dcen::{DVector, DcenError, DcenParams, Problem, Result};
use serde::Serialize;

use crate::config::*;

/// Files written by a command and the exit code it asks for.
pub struct Outcome {
    pub outputs: Vec<String>,
    pub exit_code: u8,
}

impl Outcome {
    fn ok(outputs: Vec<String>) -> Self {
        Self { outputs, exit_code: 0 }
    }
}

pub fn execute(run: &RunConfig, out: &Path) -> Result<Outcome> {
    std::fs::create_dir_all(out)?;
    match run {
        RunConfig::Solve(c) => solve(c, out),
        RunConfig::Bench(c) => bench(c, out),
        RunConfig::Mri(c) => mri(c, out),
        RunConfig::Gen(c) => gen(c, out),
        RunConfig::ProxCheck(c) => prox_check(c, out),
        RunConfig::ReportConditions(c) => report_conditions(c, out),
    }
}

fn require(path: &Path, what: &str) -> Result<()> {
    if path.as_os_str().is_empty() {
        return Err(DcenError::Parameter(format!("missing {what} path")));
    }
    Ok(())
}

fn solve(c: &SolveConfig, out: &Path) -> Result<Outcome> {
    require(&c.a, "matrix")?;
    require(&c.b, "observation")?;
    let problem = Problem::new(read_matrix(&c.a)?, read_vector(&c.b)?)?;
    let p = c.method.params(&c.params);
    if matches!(c.method, dcen::bench::Method::DcenDca | dcen::bench::Method::DcenAdmm) {
        p.validate()?;
    } else {
        p.validate_degenerate()?;
    }
    let x0 = match &c.x0 {
        Some(path) => read_vector(path)?,
        None if c.warm_start && c.method.is_dca() => warm_start(&problem, &c.params)?,
        None => DVector::zeros(problem.cols()),
    };
    let report = c.method.solve(&problem, &c.params, &x0)?;
    let solution = match c.format {
        OutputFormat::Csv => {
            write_vector_csv(&out.join("solution.csv"), &report.x)?;
            "solution.csv"
        }
        OutputFormat::Json => {
            write_json(&out.join("solution.json"), &report.x)?;
            "solution.json"
        }
    };
    write_json(&out.join("report.json"), &report)?;
    Ok(Outcome {
        outputs: vec![solution.into(), "report.json".into()],
        exit_code: if report.converged() { 0 } else { 2 },
    })
}

fn write_table<T: Serialize>(out: &Path, rows: &[T], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => {
            write_rows_csv_file(&out.join("table.csv"), rows)?;
            Ok("table.csv".into())
        }
        OutputFormat::Json => {
            write_json(&out.join("table.json"), &rows)?;
            Ok("table.json".into())
        }
    }
}

fn bench(c: &BenchConfig, out: &Path) -> Result<Outcome> {
    let name = match &c.experiment {
        Experiment::Success(cfg) => write_table(out, &run_success_sweep(cfg)?, c.format)?,
        Experiment::Noise(cfg) => write_table(out, &run_noise_sweep(cfg)?, c.format)?,
        Experiment::Selection(cfg) => {
            let rows = run_variable_selection(cfg)?;
            match c.format {
                OutputFormat::Csv => {
                    write_selection_csv(std::fs::File::create(out.join("table.csv"))?, &rows)?;
                    "table.csv".into()
                }
                OutputFormat::Json => write_table(out, &rows, c.format)?,
            }
        }
    };
    Ok(Outcome::ok(vec![name]))
}

#[derive(Serialize)]
struct MriMetrics {
    rel_err: f64,
    mask_fraction: f64,
    mu: f64,
    misfit: Vec<f64>,
}

fn mri(c: &MriConfig, out: &Path) -> Result<Outcome> {
    let params = DcenParams {
        gamma: c.gamma,
        alpha: c.alpha,
        ..DcenParams::default()
    };
    params.validate_degenerate()?;
    if c.lines == 0 {
        return Err(DcenError::Parameter("number of radial lines must be at least 1".into()));
    }
    let truth = match &c.image {
        Some(path) => read_image_csv(path)?,
        None => shepp_logan(c.n_side)?,
    };
    let n = truth.n_side();
    let mask = radial_mask(n, c.lines)?;
    let frac = mask_fraction(&mask);
    let kspace = KSpaceData::sample(&truth, mask)?;
    let opts = TvOptions {
        mu: c.mu,
        beta: c.beta,
        max_outer: c.max_outer,
        max_inner: c.max_inner,
    };
    let mu = c.mu.unwrap_or_else(|| kspace.default_mu());
    let res = reconstruct_dcen_tv_traced(&kspace, &params, &opts)?;
    write_image_csv(&out.join("recon.csv"), &res.image)?;
    write_pgm(&out.join("recon.pgm"), &res.image)?;
    write_mask_csv(&out.join("mask.csv"), kspace.mask(), n)?;
    let metrics = MriMetrics {
        rel_err: res.image.rel_err(&truth)?,
        mask_fraction: frac,
        mu,
        misfit: res.misfit,
    };
    write_json(&out.join("metrics.json"), &metrics)?;
    println!("{}", serde_json::to_string(&metrics.rel_err).unwrap_or_default());
    Ok(Outcome::ok(vec![
        "recon.csv".into(),
        "recon.pgm".into(),
        "mask.csv".into(),
        "metrics.json".into(),
    ]))
}

fn gen(c: &GenConfig, out: &Path) -> Result<Outcome> {
    use dcen::datagen::child_seed;
    let mut files = Vec::new();
    match c.kind {
        GenKind::Problem => {
            let a = c.matrix.generate(c.m, c.n, child_seed(c.seed, 0))?;
            let spec = SparseSignalSpec {
                value_dist: c.value_dist,
                ..SparseSignalSpec::new(c.n, c.s, c.min_sep)
            };
            let x = gen_sparse_signal(&spec, child_seed(c.seed, 1))?;
            let clean = &a * &x;
            let b = match c.snr_db {
                Some(snr) => add_awgn(&clean, snr, child_seed(c.seed, 2))?,
                None => clean,
            };
            if c.binary {
                write_matrix_bin(&out.join("A.bin"), &a)?;
                files.push("A.bin".to_string());
            } else {
                write_matrix_csv(&out.join("A.csv"), &a)?;
                files.push("A.csv".to_string());
            }
            write_vector_csv(&out.join("b.csv"), b.as_slice())?;
            write_vector_csv(&out.join("x_true.csv"), x.as_slice())?;
            files.extend(["b.csv".to_string(), "x_true.csv".to_string()]);
        }
        GenKind::Phantom => {
            let img = shepp_logan(c.n_side)?;
            write_image_csv(&out.join("phantom.csv"), &img)?;
            write_pgm(&out.join("phantom.pgm"), &img)?;
            files.extend(["phantom.csv".to_string(), "phantom.pgm".to_string()]);
        }
        GenKind::Mask => {
            let mask = radial_mask(c.n_side, c.lines)?;
            write_mask_csv(&out.join("mask.csv"), &mask, c.n_side)?;
            files.push("mask.csv".to_string());
        }
        GenKind::Design => {
            let d = c.design.generate(c.seed)?;
            write_matrix_csv(&out.join("X.csv"), &d.x)?;
            write_vector_csv(&out.join("y.csv"), d.y.as_slice())?;
            write_vector_csv(&out.join("beta.csv"), d.beta.as_slice())?;
            files.extend(["X.csv".to_string(), "y.csv".to_string(), "beta.csv".to_string()]);
        }
    }
    Ok(Outcome::ok(files))
}

#[derive(Serialize)]
struct ProxResult {
    x: Vec<f64>,
    case: ProxTag,
    chosen_index: Option<usize>,
    objective: f64,
}

fn prox_check(c: &ProxConfig, out: &Path) -> Result<Outcome> {
    if c.y.is_empty() {
        return Err(DcenError::Parameter("prox input vector is empty".into()));
    }
    let params = DcenParams {
        gamma: c.gamma,
        alpha: c.alpha,
        ..DcenParams::default()
    };
    let y = DVector::from_column_slice(&c.y);
    let (x, case) = prox_dcen(&y, c.step, &params)?;
    let res = ProxResult {
        objective: prox_objective(&x, &y, c.step, &params),
        x: x.as_slice().to_vec(),
        case: case.tag,
        chosen_index: case.chosen_index,
    };
    write_json(&out.join("prox.json"), &res)?;
    println!("{}", serde_json::to_string(&res).map_err(|e| DcenError::Parse(e.to_string()))?);
    Ok(Outcome::ok(vec!["prox.json".into()]))
}

fn report_conditions(c: &ConditionsConfig, out: &Path) -> Result<Outcome> {
    require(&c.a, "matrix")?;
    let a = read_matrix(&c.a)?;
    let b = match &c.b {
        Some(p) => read_vector(p)?,
        None => DVector::zeros(a.nrows()),
    };
    let truth = c.truth.as_deref().map(read_vector).transpose()?;
    let problem = Problem::with_truth(a, b, truth)?;
    c.params.validate()?;
    let inputs = ConditionInputs {
        s: c.s,
        p: c.p,
        big_m: c.big_m,
        delta_3s: c.delta_3s,
        delta_4s: c.delta_4s,
        r: c.r,
    };
    let report = condition_report(&problem, &c.params, &inputs)?;
    write_json(&out.join("conditions.json"), &report)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).map_err(|e| DcenError::Parse(e.to_string()))?
    );
    Ok(Outcome::ok(vec!["conditions.json".into()]))
}
