//! The doubling iteration for the fluid-queue Riccati equation.
//!
//! Starting from a stochastic pencil `P_0 = Q^(-1) R`, each step applies the
//! quadratically convergent doubling map to the four blocks
//! `P_k = [E_k G_k; H_k F_k]`. The `G` block increases monotonically to the
//! first-return probability matrix `Psi`, `H` to its dual, `E` vanishes and
//! `F` converges.
//!
//! Three accuracy variants share the iteration skeleton and differ only in
//! how the Gram factors `I - G H` and `I - H G` are inverted:
//!
//! * [`Variant::Comp`]: GTH elimination driven by certificates that are
//!   updated in closed form (`(I - G H) 1 = G F 1 + E 1` and its mirror), so
//!   no subtraction ever enters the factorization;
//! * [`Variant::Xxl`]: GTH elimination, but with the certificate rebuilt
//!   from computed entries (`w = 1 - (G H) 1`), which reintroduces one
//!   cancellation-prone subtraction per row;
//! * [`Variant::Glx`]: ordinary LU with partial pivoting on the explicitly
//!   formed matrices, the standard normwise-stable baseline.
//!
//! When the two phase classes have different sizes, the step switches to the
//! algebraically equivalent update that inverts only the smaller Gram factor.

use crate::error::{Error, Result};
use crate::gth::{GthFactors, Side, TripletRepresentation};
use crate::matrix::{Matrix, PlainLu};
use crate::model::{
    stationary_phase_distribution, DoublingParameters, FluidQueueModel, PhaseDistribution, Scheme,
};
use crate::scalar::Scalar;

/// Accuracy variant of the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Ordinary LU with partial pivoting (normwise-accurate baseline).
    Glx,
    /// GTH with certificates recomputed from matrix entries.
    Xxl,
    /// GTH with certificates carried in closed form (componentwise accurate).
    Comp,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Glx => "glx",
            Variant::Xxl => "xxl",
            Variant::Comp => "comp",
        }
    }

    pub const ALL: [Variant; 3] = [Variant::Glx, Variant::Xxl, Variant::Comp];
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "glx" => Ok(Variant::Glx),
            "xxl" => Ok(Variant::Xxl),
            "comp" => Ok(Variant::Comp),
            other => Err(Error::InvalidParameters(format!("unknown variant '{}'", other))),
        }
    }
}

/// The initial pencil `(Q, R)` with the data needed to factor `Q` without
/// reading its diagonal.
#[derive(Debug, Clone)]
pub struct InitialPencil {
    pub q: Matrix<f64>,
    pub r: Matrix<f64>,
    q_row_sums: Vec<f64>,
}

impl InitialPencil {
    /// Right triplet certificate of `Q`. For `alpha = beta` the row sums are
    /// exactly `|C| 1`; in general they carry one extra benign term per row.
    pub fn q_triplet(&self) -> Result<TripletRepresentation> {
        TripletRepresentation::from_z_matrix(
            &self.q,
            vec![1.0; self.q.rows()],
            self.q_row_sums.clone(),
            Side::Right,
        )
    }

    /// Largest censoring scale admissible for the stochastic embedding of
    /// `P_0`, the reciprocal of the largest diagonal entry of `Q`.
    pub fn gamma_max(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.q.rows() {
            d = d.max(self.q[(i, i)]);
        }
        d.recip()
    }
}

/// Builds `Q = |C| - T S_q` and `R = |C| + T S_r`, where `S_q` scales the
/// up-phase columns by `alpha` and the down-phase columns by `beta`, and
/// `S_r` swaps the two. Returns the matrices and the row sums of `Q`.
fn pencil_parts<T: Scalar>(
    model: &FluidQueueModel,
    params: &DoublingParameters,
    proto: &T,
) -> Result<(Matrix<T>, Matrix<T>, Vec<T>)> {
    let n = model.n();
    let n_plus = model.n_plus();
    let alpha = T::from_f64(params.alpha, proto);
    let beta = T::from_f64(params.beta, proto);
    let zero = proto.zero_like();

    let mut q = Matrix::zeros(n, n, proto);
    let mut r = Matrix::zeros(n, n, proto);
    for i in 0..n {
        let c_abs = T::from_f64(model.c_abs(i), proto);
        // off-diagonal row sum of T in T-precision, reused for both diagonals
        let mut exit = zero.clone();
        for j in 0..n {
            if j == i {
                continue;
            }
            let rate = T::from_f64(model.rate(i, j), proto);
            let (sq, sr) = if j < n_plus { (&alpha, &beta) } else { (&beta, &alpha) };
            q[(i, j)] = rate.mul(sq).neg();
            r[(i, j)] = rate.mul(sr);
            exit = exit.add(&rate);
        }
        let (sq, sr) = if i < n_plus { (&alpha, &beta) } else { (&beta, &alpha) };
        q[(i, i)] = c_abs.add(&sq.mul(&exit));
        // the one subtraction of the initialization; eta <= 1/2 keeps the
        // subtrahend at most half the minuend
        let r_diag = c_abs.sub(&sr.mul(&exit));
        if r_diag.is_negative() {
            return Err(Error::InvalidParameters(format!(
                "R has a negative diagonal entry at phase {}; alpha/beta exceed their bounds",
                i + 1
            )));
        }
        r[(i, i)] = r_diag;
    }

    // Row sums of Q without forming them from the signed entries:
    // c_i + (alpha - beta) * (mass toward the other class), per class.
    let diff = alpha.sub(&beta);
    let mut w = Vec::with_capacity(n);
    for i in 0..n {
        let mut cross = zero.clone();
        let range = if i < n_plus { n_plus..n } else { 0..n_plus };
        for j in range {
            if j != i {
                cross = cross.add(&T::from_f64(model.rate(i, j), proto));
            }
        }
        let c_abs = T::from_f64(model.c_abs(i), proto);
        let wi = if i < n_plus {
            c_abs.add(&diff.mul(&cross))
        } else {
            c_abs.sub(&diff.mul(&cross))
        };
        if wi.is_negative() {
            return Err(Error::InvalidParameters(format!(
                "Q row sum {} came out negative; alpha/beta too close to their bounds",
                i + 1
            )));
        }
        w.push(wi);
    }
    Ok((q, r, w))
}

pub fn build_initial_pencil(
    model: &FluidQueueModel,
    params: &DoublingParameters,
) -> Result<InitialPencil> {
    let (q, r, w) = pencil_parts::<f64>(model, params, &1.0)?;
    Ok(InitialPencil { q, r, q_row_sums: w })
}

/// Blocks of the iterate `P_k` plus iteration metadata.
#[derive(Debug, Clone)]
pub struct DoublingState<T = f64> {
    pub e: Matrix<T>,
    pub f: Matrix<T>,
    pub g: Matrix<T>,
    pub h: Matrix<T>,
    pub k: usize,
    /// The nonnegative additive term of the latest `G` update, kept verbatim
    /// so the stopping test needs no subtraction.
    pub last_increment: Matrix<T>,
}

impl<T: Scalar> DoublingState<T> {
    pub fn n_plus(&self) -> usize {
        self.e.rows()
    }

    pub fn n_minus(&self) -> usize {
        self.f.rows()
    }

    /// The full iterate `[E G; H F]`.
    pub fn assemble(&self) -> Matrix<T> {
        let (np, nm) = (self.n_plus(), self.n_minus());
        let mut p = Matrix::zeros(np + nm, np + nm, self.e.proto());
        p.set_block(0, 0, &self.e);
        p.set_block(0, np, &self.g);
        p.set_block(np, 0, &self.h);
        p.set_block(np, np, &self.f);
        p
    }

    pub fn all_finite(&self) -> bool {
        self.e.all_finite() && self.f.all_finite() && self.g.all_finite() && self.h.all_finite()
    }

    /// Largest componentwise increment ratio of the last step, skipping
    /// entries where `G` is still zero.
    pub fn increment_ratio(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.g.rows() {
            for j in 0..self.g.cols() {
                let g = &self.g[(i, j)];
                if g.is_positive() {
                    let r = self.last_increment[(i, j)].div(g).to_f64();
                    worst = worst.max(r);
                }
            }
        }
        worst
    }
}

/// `P_0 = Q^(-1) R`, solved column-block-wise. COMP factors `Q` from its
/// certificate; the baselines use plain LU on the explicit entries.
pub fn initialize_in<T: Scalar>(
    model: &FluidQueueModel,
    params: &DoublingParameters,
    variant: Variant,
    proto: &T,
) -> Result<DoublingState<T>> {
    let (q, r, w) = pencil_parts(model, params, proto)?;
    let p0 = match variant {
        Variant::Comp => {
            let ones = vec![proto.one_like(); model.n()];
            let rep = TripletRepresentation::from_z_matrix(&q, ones, w, Side::Right)?;
            rep.factor()?.solve_matrix(&r)?
        }
        Variant::Glx | Variant::Xxl => PlainLu::factor(&q)?.solve_matrix(&r)?,
    };
    let np = model.n_plus();
    let nm = model.n_minus();
    Ok(DoublingState {
        e: p0.block(0, 0, np, np),
        g: p0.block(0, np, np, nm),
        h: p0.block(np, 0, nm, np),
        f: p0.block(np, np, nm, nm),
        k: 0,
        last_increment: Matrix::zeros(np, nm, proto),
    })
}

pub fn initialize(
    model: &FluidQueueModel,
    params: &DoublingParameters,
    variant: Variant,
) -> Result<DoublingState> {
    initialize_in(model, params, variant, &1.0)
}

/// How one Gram factor `I - P` (for a nonnegative product `P`) gets inverted.
enum GramSolver<T> {
    Gth(GthFactors<T>),
    Lu(PlainLu<T>),
}

impl<T: Scalar> GramSolver<T> {
    fn solve_matrix(&self, b: &Matrix<T>) -> Result<Matrix<T>> {
        match self {
            GramSolver::Gth(f) => f.solve_matrix(b),
            GramSolver::Lu(f) => f.solve_matrix(b),
        }
    }
}

/// Factors `I - P` where `P = left * right` is a product of nonnegative
/// blocks and `certificate` is the closed-form value of `(I - P) 1`.
fn factor_gram<T: Scalar>(
    left: &Matrix<T>,
    right: &Matrix<T>,
    certificate: Vec<T>,
    variant: Variant,
) -> Result<GramSolver<T>> {
    let p = left.mul(right);
    let m = p.rows();
    let proto = p.proto().clone();
    let zero = proto.zero_like();
    match variant {
        Variant::Comp => {
            // The diagonal of I - P is never materialized; the certificate
            // supplies the pivots.
            let mut offdiag = Vec::with_capacity(m * m - m);
            for i in 0..m {
                for j in 0..m {
                    if i != j {
                        offdiag.push(p[(i, j)].neg());
                    }
                }
            }
            let rep = TripletRepresentation::new(
                m,
                offdiag,
                vec![proto.one_like(); m],
                certificate,
                Side::Right,
            )?;
            Ok(GramSolver::Gth(rep.factor()?))
        }
        Variant::Xxl => {
            // Certificate rebuilt from entries: w = 1 - (P 1). Rounding can
            // push a row marginally outside [0, 1]; clamp so the certificate
            // stays admissible. The accuracy loss of this route is the point
            // of keeping the variant around.
            let one = proto.one_like();
            let mut offdiag = Vec::with_capacity(m * m - m);
            for i in 0..m {
                for j in 0..m {
                    if i != j {
                        let x = p[(i, j)].neg();
                        offdiag.push(if x.is_positive() { zero.clone() } else { x });
                    }
                }
            }
            let w: Vec<T> = p
                .row_sums()
                .into_iter()
                .map(|s| {
                    let wi = one.sub(&s);
                    if wi.is_negative() {
                        zero.clone()
                    } else {
                        wi
                    }
                })
                .collect();
            let rep =
                TripletRepresentation::new(m, offdiag, vec![proto.one_like(); m], w, Side::Right)?;
            Ok(GramSolver::Gth(rep.factor()?))
        }
        Variant::Glx => {
            let one = proto.one_like();
            let gram = Matrix::from_fn(m, m, |i, j| {
                if i == j {
                    one.sub(&p[(i, j)])
                } else {
                    p[(i, j)].neg()
                }
            });
            Ok(GramSolver::Lu(PlainLu::factor(&gram)?))
        }
    }
}

/// Closed-form certificate `(I - left*right) 1 = left * (other 1) + own 1`,
/// evaluated right-to-left so every partial sum stays nonnegative.
fn gram_certificate<T: Scalar>(left: &Matrix<T>, other: &Matrix<T>, own: &Matrix<T>) -> Vec<T> {
    let prop = left.matvec(&other.row_sums());
    let own1 = own.row_sums();
    prop.iter().zip(&own1).map(|(a, b)| a.add(b)).collect()
}

/// One application of the doubling map.
pub fn doubling_step_in<T: Scalar>(
    state: &DoublingState<T>,
    variant: Variant,
) -> Result<DoublingState<T>> {
    let (e, f, g, h) = (&state.e, &state.f, &state.g, &state.h);
    let np = state.n_plus();
    let nm = state.n_minus();

    let (e_next, f_next, increment, h_next) = if np < nm {
        // invert only the n_plus-sized factor I - G H
        let solver = factor_gram(g, h, gram_certificate(g, f, e), variant)?;
        let x_e = solver.solve_matrix(e)?;
        let zf = solver.solve_matrix(g)?.mul(f);
        let e_next = e.mul(&x_e);
        let increment = e.mul(&zf);
        let f_next = f.mul(&f.add(&h.mul(&zf)));
        let h_next = h.add(&f.mul(h).mul(&x_e));
        (e_next, f_next, increment, h_next)
    } else if nm < np {
        // mirror: invert only the n_minus-sized factor I - H G
        let solver = factor_gram(h, g, gram_certificate(h, e, f), variant)?;
        let y_f = solver.solve_matrix(f)?;
        let ze = solver.solve_matrix(h)?.mul(e);
        let f_next = f.mul(&y_f);
        let h_next = h.add(&f.mul(&ze));
        let e_next = e.mul(&e.add(&g.mul(&ze)));
        let increment = e.mul(g).mul(&y_f);
        (e_next, f_next, increment, h_next)
    } else {
        let solver_gh = factor_gram(g, h, gram_certificate(g, f, e), variant)?;
        let solver_hg = factor_gram(h, g, gram_certificate(h, e, f), variant)?;
        let x_e = solver_gh.solve_matrix(e)?;
        let zf = solver_gh.solve_matrix(g)?.mul(f);
        let y_f = solver_hg.solve_matrix(f)?;
        let ze = solver_hg.solve_matrix(h)?.mul(e);
        let e_next = e.mul(&x_e);
        let increment = e.mul(&zf);
        let f_next = f.mul(&y_f);
        let h_next = h.add(&f.mul(&ze));
        (e_next, f_next, increment, h_next)
    };

    Ok(DoublingState {
        e: e_next,
        f: f_next,
        g: g.add(&increment),
        h: h_next,
        k: state.k + 1,
        last_increment: increment,
    })
}

pub fn doubling_step(state: &DoublingState, variant: Variant) -> Result<DoublingState> {
    doubling_step_in(state, variant)
}

/// Converged solution of the Riccati equation together with run diagnostics.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    /// First-return probability matrix (stochastic for positive recurrent
    /// models), the `G` limit.
    pub psi: Matrix<f64>,
    /// Dual return matrix, the `H` limit.
    pub psi_hat: Matrix<f64>,
    /// Limit of the `F` block.
    pub f_infinity: Matrix<f64>,
    pub diagnostics: ConvergenceDiagnostics,
}

#[derive(Debug, Clone)]
pub struct ConvergenceDiagnostics {
    pub iterations: usize,
    /// Max componentwise ratio of successive `G` increments. Quadratic
    /// convergence shows up here directly: each entry of the sequence is
    /// roughly the square of its predecessor.
    pub increment_ratios: Vec<f64>,
    /// Max componentwise increment relative to the iterate, the stopping
    /// metric, one value per step.
    pub convergence_history: Vec<f64>,
    /// Estimated decay eigenvalue of the return generator, if the post-hoc
    /// estimate converged.
    pub lambda: Option<f64>,
    /// Estimated contraction factor `(1 - beta*lambda) / (1 + alpha*lambda)`.
    pub delta: Option<f64>,
    pub variant: Variant,
    pub scheme: Scheme,
    pub drift: f64,
    pub positive_recurrent: bool,
}

/// Per-step convergence measurements of one solve.
#[derive(Debug, Clone, Default)]
pub struct IterationTrace {
    /// Stopping metric per step: max componentwise `J / G`.
    pub stopping: Vec<f64>,
    /// Max componentwise ratio of successive increments, starting at the
    /// second step.
    pub decay: Vec<f64>,
}

/// Runs the doubling iteration until the componentwise increment drops below
/// `tol` (entries with `G = 0` are skipped; they can only occur
/// pre-asymptotically).
///
/// Generic in the scalar so the extended-precision reference can reuse it.
pub fn iterate_to_convergence<T: Scalar>(
    mut state: DoublingState<T>,
    variant: Variant,
    tol: f64,
    max_iter: usize,
) -> Result<(DoublingState<T>, IterationTrace)> {
    let mut trace = IterationTrace::default();
    let mut prev_increment: Option<Matrix<T>> = None;
    loop {
        state = doubling_step_in(&state, variant)?;
        if !state.all_finite() {
            return Err(Error::NonFinite(format!("doubling iterate {}", state.k)));
        }
        let ratio = state.increment_ratio();
        trace.stopping.push(ratio);
        if let Some(prev) = &prev_increment {
            let mut worst = 0.0f64;
            for i in 0..prev.rows() {
                for j in 0..prev.cols() {
                    if prev[(i, j)].is_positive() {
                        let r = state.last_increment[(i, j)].div(&prev[(i, j)]).to_f64();
                        worst = worst.max(r);
                    }
                }
            }
            trace.decay.push(worst);
        }
        prev_increment = Some(state.last_increment.clone());
        if ratio <= tol {
            return Ok((state, trace));
        }
        if state.k >= max_iter {
            return Err(Error::MaxIterationsExceeded { iterations: state.k, last_ratio: ratio });
        }
    }
}

/// Default stopping tolerance, `n` units of roundoff.
pub fn default_tol(model: &FluidQueueModel) -> f64 {
    model.n() as f64 * f64::EPSILON
}

pub const DEFAULT_MAX_ITER: usize = 100;

/// End-to-end solve: initialize, iterate, attach diagnostics.
///
/// Positive recurrence is *not* required here (the solution exists either
/// way), but the drift is reported so downstream consumers can refuse.
pub fn solve_riccati(
    model: &FluidQueueModel,
    params: &DoublingParameters,
    variant: Variant,
    tol: f64,
    max_iter: usize,
) -> Result<RiccatiSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameters(format!("tolerance {:e} must be positive", tol)));
    }
    let phase = stationary_phase_distribution(model)?;
    let state = initialize(model, params, variant)?;
    let (state, trace) = iterate_to_convergence(state, variant, tol, max_iter)?;
    let (lambda, delta) = match estimate_decay(model, &phase, &state.g, &state.f, params) {
        Some((l, d)) => (Some(l), Some(d)),
        None => (None, None),
    };
    Ok(RiccatiSolution {
        psi: state.g,
        psi_hat: state.h,
        f_infinity: state.f,
        diagnostics: ConvergenceDiagnostics {
            iterations: state.k,
            increment_ratios: trace.decay,
            convergence_history: trace.stopping,
            lambda,
            delta,
            variant,
            scheme: params.scheme,
            drift: phase.drift,
            positive_recurrent: phase.is_positive_recurrent(),
        },
    })
}

/// Post-hoc estimate of the decay eigenvalue: power iteration on the
/// resolvent `(I + c * (-K))^(-1)` through a GTH factorization built from the
/// certificate of `-K`. Best effort; `None` on non-convergence.
fn estimate_decay(
    model: &FluidQueueModel,
    phase: &PhaseDistribution,
    psi: &Matrix<f64>,
    f_infinity: &Matrix<f64>,
    params: &DoublingParameters,
) -> Option<(f64, f64)> {
    // SDA-ss has alpha = 0; any positive scale works equally for the estimate
    let c = if params.alpha > 0.0 { params.alpha } else { params.beta };
    let rep = crate::density::resolvent_left_triplet(model, phase, psi, f_infinity, c).ok()?;
    let factors = rep.factor().ok()?;
    let np = model.n_plus();
    let mut x = vec![1.0 / np as f64; np];
    let mut lambda_prev = f64::NAN;
    // weakly coupled phase clusters make the resolvent's two dominant
    // eigenvalues nearly degenerate, so the budget is generous; one pass is
    // a single small triangular solve
    for _ in 0..5_000 {
        // factors hold the transpose; solve_transposed applies the resolvent
        let y = factors.solve_transposed(&x).ok()?;
        let mass: f64 = y.iter().sum();
        if !(mass > 0.0 && mass.is_finite()) {
            return None;
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / mass;
        }
        // mass estimates 1 / (1 + c*lambda)
        let lambda = (1.0 / mass - 1.0) / c;
        if lambda > 0.0
            && lambda.is_finite()
            && (lambda - lambda_prev).abs() <= 1e-10 * lambda
        {
            let delta = (1.0 - params.beta * lambda) / (1.0 + params.alpha * lambda);
            return Some((lambda, delta));
        }
        lambda_prev = lambda;
    }
    None
}
