//! Command implementations. Every function writes a run report to stdout,
//! success or not, listing every file it produced.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use fluidq::compare::{cascading_sweep, compare_variants, density_error_curves};
use fluidq::density::{stationary_density, DensityPipeline};
use fluidq::doubling::{default_tol, solve_riccati, Variant};
use fluidq::matrix::Matrix;
use fluidq::model::{format_model, DoublingParameters, Scheme};
use fluidq::oracle::relative_error_matrix;
use fluidq::{parse_model, FluidQueueModel};

use crate::points::parse_points;
use crate::report::{fingerprint, RunReport};
use crate::SolverOptions;

/// Command-level error carrying the exit code: 2 for usage and input
/// problems, 3 for numeric failures.
pub struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { message: message.into(), code: 2 }
    }

    pub fn exit_code(&self) -> u8 {
        self.code
    }
}

impl From<fluidq::Error> for CliError {
    fn from(e: fluidq::Error) -> Self {
        use fluidq::Error::*;
        let code = match e {
            Parse { .. } | InvalidModel(_) | InvalidParameters(_) | ShapeMismatch(_) => 2,
            _ => 3,
        };
        CliError { message: e.to_string(), code }
    }
}

type CmdResult = Result<(), CliError>;

fn fail(report: RunReport, err: CliError) -> CmdResult {
    report.finish_err(&err.message);
    Err(err)
}

fn load_model(path: &Path, report: &mut RunReport) -> Result<FluidQueueModel, CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {}", path.display(), e)))?;
    report.field("model", path.display());
    report.field("fingerprint", fingerprint(&bytes));
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::usage(format!("{} is not UTF-8", path.display())))?;
    Ok(parse_model(&text)?)
}

fn solver_config(
    model: &FluidQueueModel,
    opts: &SolverOptions,
    report: &mut RunReport,
) -> Result<(DoublingParameters, Variant, f64), CliError> {
    let variant: Variant = opts.variant.parse()?;
    let params = if opts.subtraction_free {
        DoublingParameters::subtraction_free(model)?
    } else {
        let scheme: Scheme = opts.scheme.parse()?;
        DoublingParameters::new(model, scheme, opts.eta)?
    };
    let tol = opts.tol.unwrap_or_else(|| default_tol(model));
    report.field("variant", variant.name());
    report.field("scheme", params.scheme.name());
    report.field("eta", params.eta);
    report.field("alpha", format!("{:.16e}", params.alpha));
    report.field("beta", format!("{:.16e}", params.beta));
    report.field("tol", format!("{:.3e}", tol));
    Ok((params, variant, tol))
}

fn write_file(path: &Path, data: &str, report: &mut RunReport) -> Result<(), CliError> {
    fs::write(path, data)
        .map_err(|e| CliError::usage(format!("cannot write {}: {}", path.display(), e)))?;
    report.output(path);
    Ok(())
}

fn matrix_csv(m: &Matrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

fn vector_csv(v: &[f64]) -> String {
    let row: Vec<String> = v.iter().map(|x| format!("{:.16e}", x)).collect();
    format!("{}\n", row.join(","))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{}_{}.{}", stem, suffix, ext))
}

pub fn solve(
    model_path: &Path,
    opts: &SolverOptions,
    output: &Path,
    emit_psi_hat: bool,
) -> CmdResult {
    let mut report = RunReport::new("solve");
    let result = (|report: &mut RunReport| -> Result<(), CliError> {
        let model = load_model(model_path, report)?;
        let (params, variant, tol) = solver_config(&model, opts, report)?;
        let sol = solve_riccati(&model, &params, variant, tol, opts.max_iter)?;
        let d = &sol.diagnostics;
        report.field("iterations", d.iterations);
        report.field("drift", format!("{:.6e}", d.drift));
        report.field("positive_recurrent", d.positive_recurrent);
        if let (Some(l), Some(del)) = (d.lambda, d.delta) {
            report.field("lambda", format!("{:.6e}", l));
            report.field("delta", format!("{:.6e}", del));
        } else {
            report.field("lambda", "unknown");
        }
        report.field(
            "final_increment_ratio",
            format!("{:.3e}", d.convergence_history.last().copied().unwrap_or(0.0)),
        );
        write_file(output, &matrix_csv(&sol.psi), report)?;
        if emit_psi_hat {
            write_file(&sibling(output, "hat"), &matrix_csv(&sol.psi_hat), report)?;
        }
        Ok(())
    })(&mut report);
    match result {
        Ok(()) => {
            report.finish_ok();
            Ok(())
        }
        Err(e) => fail(report, e),
    }
}

pub fn density(
    model_path: &Path,
    points_spec: &str,
    opts: &SolverOptions,
    output: &Path,
    errors: bool,
    digits: usize,
) -> CmdResult {
    let mut report = RunReport::new("density");
    let result = (|report: &mut RunReport| -> Result<(), CliError> {
        let model = load_model(model_path, report)?;
        let levels = parse_points(points_spec).map_err(CliError::usage)?;
        report.field("levels", levels.len());
        let (params, variant, tol) = solver_config(&model, opts, report)?;
        let sol = solve_riccati(&model, &params, variant, tol, opts.max_iter)?;
        report.field("iterations", sol.diagnostics.iterations);
        let pipeline = DensityPipeline::new(&model, &sol)?;
        let rows = stationary_density(&model, &sol, &levels)?;

        let mut csv = String::from("x");
        for j in 0..model.n() {
            let _ = write!(csv, ",f{}", j + 1);
        }
        csv.push_str(",total\n");
        for (x, row) in rows.levels.iter().zip(&rows.rows) {
            let _ = write!(csv, "{:.16e}", x);
            for v in row {
                let _ = write!(csv, ",{:.16e}", v);
            }
            let _ = writeln!(csv, ",{:.16e}", row.iter().sum::<f64>());
        }
        write_file(output, &csv, report)?;
        write_file(&sibling(output, "pminus"), &vector_csv(&pipeline.boundary.p_minus), report)?;

        if errors {
            let curves = density_error_curves(&model, &params, digits, &levels)?;
            let mut ecsv = String::from(
                "x,glx_enorm,glx_ecw,xxl_enorm,xxl_ecw,comp_enorm,comp_ecw,density_mass\n",
            );
            for r in &curves {
                let _ = writeln!(
                    ecsv,
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    r.x,
                    r.glx_norm,
                    r.glx_cw,
                    r.xxl_norm,
                    r.xxl_cw,
                    r.comp_norm,
                    r.comp_cw,
                    r.density_mass
                );
            }
            write_file(&sibling(output, "errors"), &ecsv, report)?;
        }
        Ok(())
    })(&mut report);
    match result {
        Ok(()) => {
            report.finish_ok();
            Ok(())
        }
        Err(e) => fail(report, e),
    }
}

pub fn compare(
    model_path: &Path,
    digits: usize,
    opts: &SolverOptions,
    output: &Path,
    error_matrix: bool,
) -> CmdResult {
    let mut report = RunReport::new("compare");
    let result = (|report: &mut RunReport| -> Result<(), CliError> {
        let model = load_model(model_path, report)?;
        let (params, _, tol) = solver_config(&model, opts, report)?;
        report.field("digits", digits);
        let outcome = compare_variants(&model, &params, digits, tol, opts.max_iter)?;
        let mut csv = String::from("variant,e_norm,e_cw,iterations\n");
        for r in &outcome.reports {
            let _ = writeln!(
                csv,
                "{},{:.16e},{:.16e},{}",
                r.variant.name(),
                r.e_norm,
                r.e_cw,
                r.iterations
            );
            report.field(
                &format!("{}_errors", r.variant.name()),
                format!("e_norm {:.3e}, e_cw {:.3e}", r.e_norm, r.e_cw),
            );
        }
        write_file(output, &csv, report)?;
        if error_matrix {
            for (variant, sol) in &outcome.solutions {
                let err = relative_error_matrix(&sol.psi, &outcome.reference.psi);
                write_file(&sibling(output, &format!("errmat_{}", variant.name())), &matrix_csv(&err), report)?;
            }
        }
        Ok(())
    })(&mut report);
    match result {
        Ok(()) => {
            report.finish_ok();
            Ok(())
        }
        Err(e) => fail(report, e),
    }
}

pub fn example(
    name: &str,
    kappa: f64,
    output: Option<&Path>,
    sweep: bool,
    digits: usize,
    sweep_output: &Path,
) -> CmdResult {
    let mut report = RunReport::new("example");
    let result = (|report: &mut RunReport| -> Result<(), CliError> {
        report.field("name", name);
        let (model, default_name, comment) = match name {
            "weakly-connected" => (
                fluidq::builtin::weakly_connected(),
                "ex61.fq",
                "six-phase queue with two weakly connected state clusters".to_string(),
            ),
            "cascading" => {
                report.field("kappa", format!("{:e}", kappa));
                (
                    fluidq::builtin::cascading(kappa)?,
                    "ex62.fq",
                    format!("eight-phase cascading queue, rare-state rate {:e}", kappa),
                )
            }
            other => {
                return Err(CliError::usage(format!(
                    "unknown example '{}'; use weakly-connected or cascading",
                    other
                )))
            }
        };
        let path = output.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(default_name));
        write_file(&path, &format_model(&model, &comment), report)?;

        if sweep {
            if name != "cascading" {
                return Err(CliError::usage("--sweep only applies to the cascading example"));
            }
            let kappas: Vec<f64> = (0..=8).map(|k| 10f64.powi(k)).collect();
            report.field("sweep_points", kappas.len());
            report.field("digits", digits);
            let rows = cascading_sweep(&kappas, 0.5, digits)?;
            let mut csv =
                String::from("kappa,glx_enorm,glx_ecw,xxl_enorm,xxl_ecw,comp_enorm,comp_ecw\n");
            for r in &rows {
                let _ = writeln!(
                    csv,
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    r.kappa, r.glx_norm, r.glx_cw, r.xxl_norm, r.xxl_cw, r.comp_norm, r.comp_cw
                );
            }
            write_file(sweep_output, &csv, report)?;
        }
        Ok(())
    })(&mut report);
    match result {
        Ok(()) => {
            report.finish_ok();
            Ok(())
        }
        Err(e) => fail(report, e),
    }
}
