//! Brute-force censoring references for the doubling iteration.
//!
//! `k` doubling steps applied to a stochastic iterate coincide with censoring
//! the top block of a block-circulant blow-up of that iterate, and the
//! initial pencil itself is the censoring of a small stochastic embedding.
//! Both facts are turned into dense, pivoted-LU Schur-complement computations
//! here and used as independent test oracles for the iteration. Nothing in
//! the solver path calls this module.

use crate::doubling::{DoublingState, InitialPencil};
use crate::error::{Error, Result};
use crate::matrix::{Matrix, PlainLu};
use crate::model::FluidQueueModel;
use crate::scalar::Scalar;

/// Largest supported blow-up, a pure test-scale guard.
const MAX_BLOWUP_DIM: usize = 64;

/// Censors (stochastically complements) the leading `m x m` block:
/// `P' = P22 + P21 (I - P11)^(-1) P12`.
pub fn censor_top<T: Scalar>(p: &Matrix<T>, m: usize) -> Result<Matrix<T>> {
    if !p.is_square() || m >= p.rows() {
        return Err(Error::ShapeMismatch("censored block must be a proper leading block".into()));
    }
    if m == 0 {
        return Ok(p.clone());
    }
    let n = p.rows() - m;
    let p11 = p.block(0, 0, m, m);
    let p12 = p.block(0, m, m, n);
    let p21 = p.block(m, 0, n, m);
    let p22 = p.block(m, m, n, n);
    let eye = Matrix::identity(m, p.proto());
    let lu = PlainLu::factor(&eye.sub(&p11))
        .map_err(|_| Error::Singular("censored block leaves a singular complement".into()))?;
    Ok(p22.add(&p21.mul(&lu.solve_matrix(&p12)?)))
}

/// The `2^k n x 2^k n` block-circulant blow-up of the iterate `[E G; H F]`:
/// diagonal blocks carry `[0 G; H 0]`, the superdiagonal (cyclically) carries
/// `[E 0; 0 0]` and the subdiagonal `[0 0; 0 F]`.
pub fn blowup<T: Scalar>(state: &DoublingState<T>, k: u32) -> Result<Matrix<T>> {
    let np = state.n_plus();
    let nm = state.n_minus();
    let n = np + nm;
    let blocks = 1usize << k;
    if k > 4 || blocks * n > MAX_BLOWUP_DIM {
        return Err(Error::ShapeMismatch(format!(
            "blow-up of {} blocks of size {} exceeds the supported test scale",
            blocks, n
        )));
    }
    let proto = state.e.proto();
    let mut a_plus = Matrix::zeros(n, n, proto);
    a_plus.set_block(0, 0, &state.e);
    let mut a_mid = Matrix::zeros(n, n, proto);
    a_mid.set_block(0, np, &state.g);
    a_mid.set_block(np, 0, &state.h);
    let mut a_minus = Matrix::zeros(n, n, proto);
    a_minus.set_block(np, np, &state.f);

    let mut big = Matrix::zeros(blocks * n, blocks * n, proto);
    for b in 0..blocks {
        big.set_block(b * n, b * n, &a_mid);
        let up = (b + 1) % blocks;
        let down = (b + blocks - 1) % blocks;
        // for a single block the three contributions share one slot
        if up == b {
            big.set_block(b * n, b * n, &a_mid.add(&a_plus).add(&a_minus));
        } else if up == down {
            big.set_block(b * n, up * n, &a_plus.add(&a_minus));
        } else {
            big.set_block(b * n, up * n, &a_plus);
            big.set_block(b * n, down * n, &a_minus);
        }
    }
    Ok(big)
}

/// Reference value of `k` doubling steps: censor the top `(2^k - 1) n` block
/// of the blow-up and return the resulting stochastic matrix `[E G; H F]`.
pub fn censored_reference_step<T: Scalar>(
    state: &DoublingState<T>,
    k: u32,
) -> Result<Matrix<T>> {
    let n = state.n_plus() + state.n_minus();
    let big = blowup(state, k)?;
    censor_top(&big, big.rows() - n)
}

/// The stochastic embedding of the initial pencil:
/// `S = [I - gamma Q, gamma R; I, 0]`, valid for
/// `gamma <= 1 / max_i Q_ii`.
pub fn initial_embedding(pencil: &InitialPencil, gamma: f64) -> Result<Matrix<f64>> {
    if !(gamma > 0.0 && gamma <= pencil.gamma_max()) {
        return Err(Error::InvalidParameters(format!(
            "gamma = {:e} outside (0, {:e}]",
            gamma,
            pencil.gamma_max()
        )));
    }
    let n = pencil.q.rows();
    let mut s = Matrix::zeros(2 * n, 2 * n, &1.0);
    for i in 0..n {
        for j in 0..n {
            let q_scaled = gamma * pencil.q[(i, j)];
            s[(i, j)] = if i == j { 1.0 - q_scaled } else { -q_scaled };
            s[(i, j + n)] = gamma * pencil.r[(i, j)];
        }
        s[(i + n, i)] = 1.0;
    }
    Ok(s)
}

/// Reference value of the initialization: censor the first `n` states of the
/// embedding, which reduces to `Q^(-1) R` in exact arithmetic.
pub fn initial_censoring_reference(
    model: &FluidQueueModel,
    pencil: &InitialPencil,
    gamma: f64,
) -> Result<Matrix<f64>> {
    let s = initial_embedding(pencil, gamma)?;
    censor_top(&s, model.n())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doubling::{build_initial_pencil, doubling_step, initialize, Variant};
    use crate::model::{parse_model, DoublingParameters, Scheme};

    fn m2_adda() -> (crate::model::FluidQueueModel, DoublingParameters) {
        let m = parse_model("nplus 1\nnminus 1\nc 1 -2\n-1 1\n1 -1\n").unwrap();
        let p = DoublingParameters::new(&m, Scheme::Adda, 0.5).unwrap();
        (m, p)
    }

    #[test]
    fn single_step_matches_hand_value() {
        let (m, p) = m2_adda();
        let s0 = initialize(&m, &p, Variant::Comp).unwrap();
        let censored = censored_reference_step(&s0, 1).unwrap();
        assert!((censored[(0, 0)] - 1.0 / 7.0).abs() < 1e-15);
        assert!((censored[(0, 1)] - 6.0 / 7.0).abs() < 1e-15);
        assert!((censored[(1, 0)] - 3.0 / 7.0).abs() < 1e-15);
        assert!((censored[(1, 1)] - 4.0 / 7.0).abs() < 1e-15);
        let stepped = doubling_step(&s0, Variant::Comp).unwrap().assemble();
        assert!(stepped.sub(&censored).max_abs() < 1e-15);
    }

    #[test]
    fn zero_steps_is_identity_censoring() {
        let (m, p) = m2_adda();
        let s0 = initialize(&m, &p, Variant::Comp).unwrap();
        let same = censored_reference_step(&s0, 0).unwrap();
        assert!(same.sub(&s0.assemble()).max_abs() == 0.0);
    }

    #[test]
    fn embedding_is_stochastic_and_reproduces_p0() {
        let (m, p) = m2_adda();
        let pencil = build_initial_pencil(&m, &p).unwrap();
        let gamma = 0.5 * pencil.gamma_max();
        let s = initial_embedding(&pencil, gamma).unwrap();
        for sum in s.row_sums() {
            assert!((sum - 1.0).abs() < 1e-15);
        }
        let reference = initial_censoring_reference(&m, &pencil, gamma).unwrap();
        let p0 = initialize(&m, &p, Variant::Comp).unwrap().assemble();
        assert!(reference.sub(&p0).max_abs() < 1e-13);
    }

    #[test]
    fn embedding_fixed_row_vector() {
        // (xi, gamma * xi |C|) is invariant under S
        let (m, p) = m2_adda();
        let pencil = build_initial_pencil(&m, &p).unwrap();
        let gamma = 0.5 * pencil.gamma_max();
        let s = initial_embedding(&pencil, gamma).unwrap();
        let row = vec![0.5, 0.5, gamma * 0.5, gamma * 1.0];
        let mapped = s.vecmat(&row);
        for (a, b) in mapped.iter().zip(&row) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn blowup_rejects_oversize() {
        let (m, p) = m2_adda();
        let s0 = initialize(&m, &p, Variant::Comp).unwrap();
        assert!(blowup(&s0, 5).is_err());
    }
}
