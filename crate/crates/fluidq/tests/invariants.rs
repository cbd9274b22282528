//! Module-level invariants beyond the acceptance criteria: certificate
//! reconstruction, stationary-distribution quality, weighted invariance of
//! the iterates, scheme consistency, and the extended-precision cross-checks.

mod common;

use common::{random_dense_triplet, random_model, random_positive_recurrent, SplitMix64};
use fluidq::builtin;
use fluidq::density::expm_nonneg;
use fluidq::doubling::{initialize, solve_riccati, Variant};
use fluidq::matrix::Matrix;
use fluidq::model::{
    optimal_parameters, stationary_phase_distribution, subtraction_free_parameters,
    DoublingParameters, Scheme,
};
use fluidq::oracle::{ext_proto, solve_riccati_extended, to_ext, Ext};
use fluidq::scalar::Scalar;
use proptest::prelude::*;

#[test]
fn generator_row_sums_vanish() {
    let mut rng = SplitMix64::new(11);
    for _ in 0..100 {
        let model = random_model(&mut rng, 2, 10);
        let t = model.t_matrix();
        let max_row: f64 = (0..model.n())
            .map(|i| model.exit_rate(i))
            .fold(0.0, f64::max);
        for sum in t.row_sums() {
            assert!(sum.abs() <= model.n() as f64 * f64::EPSILON * max_row);
        }
    }
}

#[test]
fn subtraction_free_parameters_stay_in_band() {
    let mut rng = SplitMix64::new(12);
    for _ in 0..100 {
        let model = random_model(&mut rng, 2, 10);
        let (alpha_opt, beta_opt) = optimal_parameters(&model);
        let (alpha, beta) = subtraction_free_parameters(&model);
        let slack = 1.0 + 8.0 * f64::EPSILON;
        assert!(alpha <= alpha_opt * slack && alpha * slack >= alpha_opt / model.n_minus() as f64);
        assert!(beta <= beta_opt * slack && beta * slack >= beta_opt / model.n_plus() as f64);
    }
}

#[test]
fn stationary_distribution_quality() {
    let mut rng = SplitMix64::new(13);
    for _ in 0..60 {
        let model = random_model(&mut rng, 2, 10);
        let pd = stationary_phase_distribution(&model).unwrap();
        assert!(pd.xi.iter().all(|&x| x >= 0.0));
        let total: f64 = pd.xi.iter().sum();
        assert!((total - 1.0).abs() <= 8.0 * f64::EPSILON);
        // componentwise residual of xi T = 0 against |xi| |T|
        let t = model.t_matrix();
        let residual = t.vecmat(&pd.xi);
        for (j, r) in residual.iter().enumerate() {
            let scale: f64 = (0..model.n()).map(|i| (pd.xi[i] * t[(i, j)]).abs()).sum();
            assert!(r.abs() <= 1e3 * f64::EPSILON * scale.max(f64::MIN_POSITIVE));
        }
    }
}

#[test]
fn weakly_connected_distribution_matches_extended_kernel() {
    let model = builtin::weakly_connected();
    let pd = stationary_phase_distribution(&model).unwrap();
    let xi_ext = fluidq::oracle::ext_stationary_distribution(&model, 50).unwrap();
    for (a, b) in pd.xi.iter().zip(&xi_ext) {
        let rel = (a - b.to_f64()).abs() / b.to_f64();
        assert!(rel <= 1e3 * f64::EPSILON, "relative deviation {:e}", rel);
    }
    assert!(pd.drift < 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// LU factors from the certificate reproduce the implied matrix.
    #[test]
    fn elimination_reconstructs_certificate_matrix(seed in any::<u64>(), m in 2usize..8) {
        let mut rng = SplitMix64::new(seed);
        let rep = random_dense_triplet(&mut rng, m, 1.0);
        let factors = rep.factor().unwrap();
        let product = factors.l().mul(factors.u());
        let implied = rep.to_matrix();
        for i in 0..m {
            for j in 0..m {
                let denom = implied[(i, j)].abs().max(f64::MIN_POSITIVE);
                prop_assert!(
                    (product[(i, j)] - implied[(i, j)]).abs()
                        <= 4.0 * m as f64 * f64::EPSILON * denom
                );
            }
        }
    }

    /// Solving against the certificate's own right-hand side returns `v`.
    #[test]
    fn solve_of_w_returns_v(seed in any::<u64>(), m in 2usize..8) {
        let mut rng = SplitMix64::new(seed);
        let rep = random_dense_triplet(&mut rng, m, 4.0);
        let x = rep.factor().unwrap().solve(rep.w()).unwrap();
        for (xi, vi) in x.iter().zip(rep.v()) {
            prop_assert!((xi - vi).abs() <= 4.0 * m as f64 * f64::EPSILON * vi);
        }
    }

    /// Parse/format round-trips are bit-exact.
    #[test]
    fn model_text_round_trip(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let model = random_model(&mut rng, 2, 8);
        let text = fluidq::model::format_model(&model, "prop");
        let again = fluidq::parse_model(&text).unwrap();
        prop_assert_eq!(model, again);
    }
}

#[test]
fn elimination_reconstruction_on_200_matrices() {
    let mut rng = SplitMix64::new(14);
    for _ in 0..200 {
        let m = 2 + rng.below(7);
        let rep = random_dense_triplet(&mut rng, m, 1.0);
        let factors = rep.factor().unwrap();
        let product = factors.l().mul(factors.u());
        let implied = rep.to_matrix();
        for i in 0..m {
            for j in 0..m {
                let denom = implied[(i, j)].abs().max(f64::MIN_POSITIVE);
                assert!(
                    (product[(i, j)] - implied[(i, j)]).abs()
                        <= 4.0 * m as f64 * f64::EPSILON * denom
                );
            }
        }
    }
}

#[test]
fn weighted_row_vector_is_invariant_along_iterates() {
    // xi |C| P_k = xi |C| for every iterate
    let mut rng = SplitMix64::new(15);
    let mut models = vec![builtin::weakly_connected()];
    for _ in 0..20 {
        models.push(random_positive_recurrent(&mut rng, 2, 8));
    }
    for model in &models {
        let pd = stationary_phase_distribution(model).unwrap();
        let weighted: Vec<f64> =
            (0..model.n()).map(|i| pd.xi[i] * model.c_abs(i)).collect();
        let scale: f64 = weighted.iter().sum();
        let params = DoublingParameters::default_for(model).unwrap();
        let mut state = initialize(model, &params, Variant::Comp).unwrap();
        for _ in 0..8 {
            let mapped = state.assemble().vecmat(&weighted);
            for (a, b) in mapped.iter().zip(&weighted) {
                assert!((a - b).abs() <= 1e-11 * scale, "defect {:e}", (a - b).abs());
            }
            state = fluidq::doubling::doubling_step(&state, Variant::Comp).unwrap();
            if state.increment_ratio() <= 1e-15 {
                break;
            }
        }
    }
}

#[test]
fn up_block_vanishes_at_convergence() {
    let mut rng = SplitMix64::new(16);
    let mut models = vec![builtin::weakly_connected()];
    for _ in 0..10 {
        models.push(random_positive_recurrent(&mut rng, 2, 8));
    }
    for model in &models {
        let params = DoublingParameters::default_for(model).unwrap();
        let tol = fluidq::doubling::default_tol(model);
        let e0 = initialize(model, &params, Variant::Comp).unwrap().e.max_abs();
        let sol = solve_riccati(model, &params, Variant::Comp, tol, 100).unwrap();
        // recover the converged E block by replaying the iteration
        let mut state = initialize(model, &params, Variant::Comp).unwrap();
        for _ in 0..sol.diagnostics.iterations {
            state = fluidq::doubling::doubling_step(&state, Variant::Comp).unwrap();
        }
        assert!(
            state.e.max_abs() <= tol * e0,
            "residual up-block {:e} vs {:e}",
            state.e.max_abs(),
            tol * e0
        );
    }
}

#[test]
fn schemes_agree_on_the_limit() {
    let model = builtin::weakly_connected();
    let solve = |scheme: Scheme| {
        let params = DoublingParameters::new(&model, scheme, 0.5).unwrap();
        solve_riccati(&model, &params, Variant::Comp, 1e-15, 100).unwrap().psi
    };
    let sda = solve(Scheme::Sda);
    let ss = solve(Scheme::SdaSs);
    let adda = solve(Scheme::Adda);
    for other in [&ss, &adda] {
        for i in 0..sda.rows() {
            for j in 0..sda.cols() {
                let rel = (sda[(i, j)] - other[(i, j)]).abs() / sda[(i, j)];
                assert!(rel <= 1e-13, "schemes disagree by {:e} at ({}, {})", rel, i, j);
            }
        }
    }
}

#[test]
fn quadratic_decay_on_random_models() {
    let mut rng = SplitMix64::new(17);
    for _ in 0..10 {
        let model = random_positive_recurrent(&mut rng, 2, 8);
        let params = DoublingParameters::default_for(&model).unwrap();
        let sol = solve_riccati(&model, &params, Variant::Comp, 1e-15, 100).unwrap();
        for pair in sol.diagnostics.increment_ratios.windows(2) {
            if pair[0] < 1e-2 && pair[1] > 0.0 {
                assert!(
                    pair[1].ln() <= 1.5 * pair[0].ln(),
                    "decay sequence not quadratic: {:e} -> {:e}",
                    pair[0],
                    pair[1]
                );
            }
        }
    }
}

#[test]
fn exponential_matches_extended_reference() {
    let mut rng = SplitMix64::new(18);
    let proto = ext_proto(50);
    for _ in 0..50 {
        let n = 6;
        let mut a = Matrix::zeros(n, n, &1.0);
        let mut max_row = 0.0f64;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                if i != j {
                    a[(i, j)] = rng.magnitude(8.0);
                    row += a[(i, j)];
                }
            }
            a[(i, i)] = -rng.magnitude(8.0);
            max_row = max_row.max(row + a[(i, i)].abs());
        }
        let t = 3.0 / max_row;
        let e = expm_nonneg(&a, t).unwrap();
        let a_ext = Matrix::from_f64_matrix(&a, &proto);
        let e_ref = expm_nonneg(&a_ext, t).unwrap();
        for i in 0..n {
            for j in 0..n {
                let r = &e_ref[(i, j)];
                let rel = to_ext(e[(i, j)], &proto).sub(r).abs().div(&r.abs()).to_f64();
                assert!(rel <= 1e-12, "entry ({}, {}) deviates by {:e}", i, j, rel);
            }
        }
    }
}

#[test]
fn subspace_identity_on_random_models() {
    let mut rng = SplitMix64::new(19);
    for _ in 0..10 {
        let model = random_positive_recurrent(&mut rng, 2, 8);
        let params = DoublingParameters::default_for(&model).unwrap();
        let sol = solve_riccati(&model, &params, Variant::Comp, 1e-15, 100).unwrap();
        let ops = fluidq::density::build_return_operators(&model, &sol).unwrap();
        let t = model.t_matrix();
        let c = Matrix::from_fn(model.n(), model.n(), |i, j| {
            if i == j {
                model.c(i)
            } else {
                0.0
            }
        });
        let lhs = ops.v.mul(&t);
        let rhs = ops.k.mul(&ops.v).mul(&c);
        let scale = ops
            .k
            .map(|x| x.abs())
            .mul(&ops.v.map(|x| x.abs()))
            .mul(&c.map(|x| x.abs()));
        assert!(lhs.sub(&rhs).max_abs() <= 1e-11 * scale.max_abs());
    }
}

/// Block of `T` with the diagonal re-derived at extended precision; the f64
/// diagonal carries a rounded row sum, which would dominate the residual.
fn t_block_ext(
    model: &fluidq::FluidQueueModel,
    row_up: bool,
    col_up: bool,
    proto: &Ext,
) -> Matrix<Ext> {
    let (r0, nr) = if row_up { (0, model.n_plus()) } else { (model.n_plus(), model.n_minus()) };
    let (c0, nc) = if col_up { (0, model.n_plus()) } else { (model.n_plus(), model.n_minus()) };
    Matrix::from_fn(nr, nc, |i, j| {
        let (gi, gj) = (r0 + i, c0 + j);
        if gi != gj {
            return to_ext(model.rate(gi, gj), proto);
        }
        let mut acc = proto.zero_like();
        for l in 0..model.n() {
            if l != gi {
                acc = acc.add(&to_ext(model.rate(gi, l), proto));
            }
        }
        acc.neg()
    })
}

#[test]
fn extended_solution_residual_is_tiny() {
    // Riccati residual of the 50-digit reference on the weakly connected
    // model, componentwise against the contributing terms
    let model = builtin::weakly_connected();
    let digits = 50;
    let sol = solve_riccati_extended(&model, digits).unwrap();
    let proto = ext_proto(digits);
    let np = model.n_plus();
    let nm = model.n_minus();
    let t_mp = t_block_ext(&model, false, true, &proto);
    let t_mm = t_block_ext(&model, false, false, &proto);
    let t_pp = t_block_ext(&model, true, true, &proto);
    let t_pm = t_block_ext(&model, true, false, &proto);
    let scaled_psi = Matrix::from_fn(np, nm, |i, l| {
        sol.psi[(i, l)].div(&to_ext(model.c_abs(np + l), &proto))
    });
    let row_scaled = |m: &Matrix<Ext>| {
        Matrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)].div(&to_ext(model.c(i), &proto)))
    };
    let t1 = scaled_psi.mul(&t_mp).mul(&sol.psi);
    let t2 = row_scaled(&t_pp).mul(&sol.psi);
    let t3 = scaled_psi.mul(&t_mm);
    let t4 = row_scaled(&t_pm);
    let bound = to_ext(10f64.powi(-((digits - 15) as i32)), &proto);
    for i in 0..np {
        for j in 0..nm {
            let resid = t1[(i, j)].add(&t2[(i, j)]).add(&t3[(i, j)]).add(&t4[(i, j)]);
            let scale = t1[(i, j)]
                .abs()
                .add(&t2[(i, j)].abs())
                .add(&t3[(i, j)].abs())
                .add(&t4[(i, j)].abs());
            assert!(
                resid.abs() <= bound.mul(&scale),
                "residual {:e} at ({}, {})",
                resid.abs().to_f64(),
                i,
                j
            );
        }
    }
}

#[test]
fn componentwise_error_grows_with_perturbation() {
    let proto = ext_proto(50);
    let reference = Matrix::from_fn(3, 3, |i, j| to_ext((1 + i + 3 * j) as f64, &proto));
    let base = reference.to_f64();
    let m0 = fluidq::oracle::error_metrics(&base, &reference).unwrap();
    let mut previous = m0.e_cw;
    for step in 1..6 {
        let mut perturbed = base.clone();
        perturbed[(1, 2)] += step as f64 * 1e-8;
        let m = fluidq::oracle::error_metrics(&perturbed, &reference).unwrap();
        assert!(m.e_cw >= previous);
        previous = m.e_cw;
    }
}

#[test]
fn density_error_curves_keep_variant_ordering() {
    // per-level errors order comp <= xxl <= glx, up to 10x at single points
    let model = builtin::weakly_connected();
    let params = DoublingParameters::new(&model, Scheme::Sda, 0.5).unwrap();
    let levels: Vec<f64> = (0..8).map(|i| 10f64.powf(-2.0 + 6.0 * i as f64 / 7.0)).collect();
    let rows = fluidq::compare::density_error_curves(&model, &params, 50, &levels).unwrap();
    assert_eq!(rows.len(), levels.len());
    for r in &rows {
        assert!(r.comp_cw.is_finite() && r.xxl_cw.is_finite() && r.glx_cw.is_finite());
        assert!(
            r.comp_cw <= 10.0 * r.xxl_cw.max(f64::MIN_POSITIVE),
            "comp {:e} above xxl {:e} at x = {:e}",
            r.comp_cw,
            r.xxl_cw,
            r.x
        );
        assert!(
            r.xxl_cw <= 10.0 * r.glx_cw.max(f64::MIN_POSITIVE),
            "xxl {:e} above glx {:e} at x = {:e}",
            r.xxl_cw,
            r.glx_cw,
            r.x
        );
        assert!(r.density_mass > 0.0);
    }
}
