//! Side-by-side accuracy comparison of the three solver variants against the
//! extended-precision reference, plus the rate-parameter sweep and the
//! per-level density error curves used for reporting.

use crate::builtin;
use crate::density::DensityPipeline;
use crate::doubling::{solve_riccati, RiccatiSolution, Variant};
use crate::error::Result;
use crate::model::{DoublingParameters, FluidQueueModel};
use crate::oracle::{
    build_extended_density, error_metrics, error_metrics_vec, solve_riccati_extended_with,
    ExtendedSolution,
};
use crate::parallel;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct VariantReport {
    pub variant: Variant,
    pub e_norm: f64,
    pub e_cw: f64,
    pub cw_infinite: bool,
    pub iterations: usize,
}

pub struct CompareOutcome {
    pub reports: Vec<VariantReport>,
    pub solutions: Vec<(Variant, RiccatiSolution)>,
    pub reference: ExtendedSolution,
}

/// Runs all three variants and scores each against a shared reference solve.
pub fn compare_variants(
    model: &FluidQueueModel,
    params: &DoublingParameters,
    digits: usize,
    tol: f64,
    max_iter: usize,
) -> Result<CompareOutcome> {
    let reference = solve_riccati_extended_with(model, params, digits)?;
    let solutions: Vec<(Variant, RiccatiSolution)> = parallel::try_map(Variant::ALL, |variant| {
        Ok((variant, solve_riccati(model, params, variant, tol, max_iter)?))
    })?;
    let mut reports = Vec::with_capacity(solutions.len());
    for (variant, sol) in &solutions {
        let m = error_metrics(&sol.psi, &reference.psi)?;
        reports.push(VariantReport {
            variant: *variant,
            e_norm: m.e_norm,
            e_cw: m.e_cw,
            cw_infinite: m.cw_infinite,
            iterations: sol.diagnostics.iterations,
        });
    }
    Ok(CompareOutcome { reports, solutions, reference })
}

/// One row of the cascading-rate sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub kappa: f64,
    pub glx_norm: f64,
    pub glx_cw: f64,
    pub xxl_norm: f64,
    pub xxl_cw: f64,
    pub comp_norm: f64,
    pub comp_cw: f64,
}

/// Accuracy of the three variants on the cascading model at one rate value.
pub fn sweep_row(kappa: f64, eta: f64, digits: usize) -> Result<SweepRow> {
    let model = builtin::cascading(kappa)?;
    let params = DoublingParameters::new(&model, crate::model::Scheme::Sda, eta)?;
    let outcome = compare_variants(&model, &params, digits, 1e-15, 100)?;
    let pick = |v: Variant| -> (f64, f64) {
        outcome
            .reports
            .iter()
            .find(|r| r.variant == v)
            .map(|r| (r.e_norm, r.e_cw))
            .unwrap_or((f64::NAN, f64::NAN))
    };
    let (glx_norm, glx_cw) = pick(Variant::Glx);
    let (xxl_norm, xxl_cw) = pick(Variant::Xxl);
    let (comp_norm, comp_cw) = pick(Variant::Comp);
    Ok(SweepRow { kappa, glx_norm, glx_cw, xxl_norm, xxl_cw, comp_norm, comp_cw })
}

/// Sweeps the cascading model over the given rate values; rows come back in
/// input order regardless of scheduling.
pub fn cascading_sweep(kappas: &[f64], eta: f64, digits: usize) -> Result<Vec<SweepRow>> {
    parallel::try_map(kappas.iter().copied(), |kappa| sweep_row(kappa, eta, digits))
}

/// Per-level density errors of the three variants against the extended
/// reference pipeline.
#[derive(Debug, Clone, Copy)]
pub struct DensityErrorRow {
    pub x: f64,
    pub glx_norm: f64,
    pub glx_cw: f64,
    pub xxl_norm: f64,
    pub xxl_cw: f64,
    pub comp_norm: f64,
    pub comp_cw: f64,
    /// Total reference density mass at this level.
    pub density_mass: f64,
}

pub fn density_error_curves(
    model: &FluidQueueModel,
    params: &DoublingParameters,
    digits: usize,
    levels: &[f64],
) -> Result<Vec<DensityErrorRow>> {
    let reference = build_extended_density(model, params, digits)?;
    let pipelines: Vec<(Variant, DensityPipeline)> = Variant::ALL
        .iter()
        .map(|&variant| {
            let sol = solve_riccati(model, params, variant, 1e-15, 100)?;
            Ok((variant, DensityPipeline::new(model, &sol)?))
        })
        .collect::<Result<_>>()?;
    parallel::try_map(levels.iter().copied(), |x| {
        let f_ref = reference.density_at(x)?;
        let mut row = DensityErrorRow {
            x,
            glx_norm: f64::NAN,
            glx_cw: f64::NAN,
            xxl_norm: f64::NAN,
            xxl_cw: f64::NAN,
            comp_norm: f64::NAN,
            comp_cw: f64::NAN,
            density_mass: f_ref.iter().fold(0.0, |acc, v| acc + v.to_f64()),
        };
        for (variant, pipeline) in &pipelines {
            let f = pipeline.density_at(x)?;
            let m = error_metrics_vec(&f, &f_ref)?;
            match variant {
                Variant::Glx => {
                    row.glx_norm = m.e_norm;
                    row.glx_cw = m.e_cw;
                }
                Variant::Xxl => {
                    row.xxl_norm = m.e_norm;
                    row.xxl_cw = m.e_cw;
                }
                Variant::Comp => {
                    row.comp_norm = m.e_norm;
                    row.comp_cw = m.e_cw;
                }
            }
        }
        Ok(row)
    })
}
