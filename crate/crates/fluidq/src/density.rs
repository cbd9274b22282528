//! Stationary density of the queue: return generators, boundary mass, the
//! subtraction-free matrix exponential, and the density rows themselves.
//!
//! Everything downstream of the Riccati solution is arranged so that the
//! componentwise accuracy of `Psi` survives: the return generators come with
//! explicit certificates, the boundary normalization is rearranged into a
//! pure sum (the resolvent of `-K` is entrywise nonpositive, so the sign
//! flip is free), and the exponential is evaluated through a nonnegative
//! Taylor form.

use crate::error::{Error, Result};
use crate::gth::{off_index, Side, TripletRepresentation};
use crate::matrix::Matrix;
use crate::model::{stationary_phase_distribution, FluidQueueModel, PhaseDistribution};
use crate::scalar::Scalar;

/// The four return generators, the density factor `V`, and their
/// certificates.
///
/// `W` and `W_hat` govern first return to the boundary from below and above;
/// `K` and `K_hat` are the spatial decay generators. All four are negated
/// M-matrices. The matrices stored here have their off-diagonals formed as
/// sums of nonnegative terms; `K`'s diagonal is recovered from its
/// certificate rather than by the cancellation-prone direct formula, since
/// the exponential consumes it.
#[derive(Debug, Clone)]
pub struct ReturnOperators {
    pub w: Matrix<f64>,
    pub w_hat: Matrix<f64>,
    pub k: Matrix<f64>,
    pub k_hat: Matrix<f64>,
    /// `V = [C_+^(-1)  Psi |C_-|^(-1)]`, the `n_plus x n` density factor.
    pub v: Matrix<f64>,
    pub w_triplet: TripletRepresentation,
    pub w_hat_triplet: TripletRepresentation,
    pub k_triplet: TripletRepresentation,
    pub k_hat_triplet: TripletRepresentation,
    pub phase: PhaseDistribution,
}

/// Off-diagonal of `-K` where `K = C_+^(-1) T_++ + Psi |C_-|^(-1) T_-+`.
fn neg_k_offdiag(model: &FluidQueueModel, psi: &Matrix<f64>) -> Vec<f64> {
    let np = model.n_plus();
    let t_mp = model.t_block(false, true);
    let scaled_psi = Matrix::from_fn(np, model.n_minus(), |i, l| {
        psi[(i, l)] / model.c_abs(model.n_plus() + l)
    });
    let s = scaled_psi.mul(&t_mp);
    let mut out = Vec::with_capacity(np * np - np);
    for i in 0..np {
        for j in 0..np {
            if i != j {
                // baseline-variant solutions can carry parasitic tiny
                // negatives; clamp so the certificate stays admissible
                out.push(-(model.rate(i, j) / model.c(i) + s[(i, j)]).max(0.0));
            }
        }
    }
    out
}

/// Left certificate vectors of `-K`: `v = xi_+ C_+` and
/// `w = xi_- |C_-| F_inf |C_-|^(-1) T_-+`, evaluated right to left.
fn neg_k_left_vectors(
    model: &FluidQueueModel,
    phase: &PhaseDistribution,
    f_infinity: &Matrix<f64>,
) -> (Vec<f64>, Vec<f64>) {
    let np = model.n_plus();
    let v: Vec<f64> = (0..np).map(|i| phase.xi[i] * model.c(i)).collect();
    let weighted: Vec<f64> =
        (0..model.n_minus()).map(|l| phase.xi[np + l] * model.c_abs(np + l)).collect();
    let through = f_infinity.vecmat(&weighted);
    let rescaled: Vec<f64> =
        through.iter().enumerate().map(|(l, x)| x / model.c_abs(np + l)).collect();
    let w =
        model.t_block(false, true).vecmat(&rescaled).into_iter().map(|x| x.max(0.0)).collect();
    (v, w)
}

/// Left triplet certificate of `-K`.
pub fn neg_k_triplet(
    model: &FluidQueueModel,
    phase: &PhaseDistribution,
    psi: &Matrix<f64>,
    f_infinity: &Matrix<f64>,
) -> Result<TripletRepresentation> {
    let (v, w) = neg_k_left_vectors(model, phase, f_infinity);
    TripletRepresentation::new(model.n_plus(), neg_k_offdiag(model, psi), v, w, Side::Left)
}

/// Left triplet certificate of the resolvent factor `I + c * (-K)`, used by
/// the decay-rate estimate.
pub fn resolvent_left_triplet(
    model: &FluidQueueModel,
    phase: &PhaseDistribution,
    psi: &Matrix<f64>,
    f_infinity: &Matrix<f64>,
    c: f64,
) -> Result<TripletRepresentation> {
    let (v, w) = neg_k_left_vectors(model, phase, f_infinity);
    let offdiag: Vec<f64> = neg_k_offdiag(model, psi).into_iter().map(|x| c * x).collect();
    let w_res: Vec<f64> = v.iter().zip(&w).map(|(vi, wi)| vi + c * wi).collect();
    TripletRepresentation::new(model.n_plus(), offdiag, v, w_res, Side::Left)
}

/// Builds the return generators and their certificates from a converged
/// Riccati solution. Requires a positive recurrent model.
pub fn build_return_operators(
    model: &FluidQueueModel,
    solution: &crate::doubling::RiccatiSolution,
) -> Result<ReturnOperators> {
    let phase = stationary_phase_distribution(model)?;
    if !phase.is_positive_recurrent() {
        return Err(Error::NotPositiveRecurrent { drift: phase.drift });
    }
    let np = model.n_plus();
    let nm = model.n_minus();
    let psi = &solution.psi;
    let psi_hat = &solution.psi_hat;
    let f_inf = &solution.f_infinity;

    // W = T_-- + T_-+ Psi, diagonal formed directly (diagnostic value only)
    let w_prod = model.t_block(false, true).mul(psi);
    let w = Matrix::from_fn(nm, nm, |i, j| {
        let t = if i == j { model.t_diag(np + i) } else { model.rate(np + i, np + j) };
        t + w_prod[(i, j)]
    });
    // W_hat = T_++ + T_+- Psi_hat
    let w_hat_prod = model.t_block(true, false).mul(psi_hat);
    let w_hat = Matrix::from_fn(np, np, |i, j| {
        let t = if i == j { model.t_diag(i) } else { model.rate(i, j) };
        t + w_hat_prod[(i, j)]
    });

    let w_triplet =
        TripletRepresentation::new(nm, offdiag_negated(&w), vec![1.0; nm], vec![0.0; nm], Side::Right)?;
    // row sums of -W_hat equal T_+- (F_inf 1): the mass not returning above
    let w_hat_cert: Vec<f64> = model
        .t_block(true, false)
        .matvec(&f_inf.row_sums())
        .into_iter()
        .map(|x| x.max(0.0))
        .collect();
    let w_hat_triplet = TripletRepresentation::new(
        np,
        offdiag_negated(&w_hat),
        vec![1.0; np],
        w_hat_cert,
        Side::Right,
    )?;

    let k_triplet = neg_k_triplet(model, &phase, psi, f_inf)?;
    let k_diag = k_triplet.implied_diagonal();
    let k_off = neg_k_offdiag(model, psi);
    let k = Matrix::from_fn(np, np, |i, j| {
        if i == j {
            -k_diag[i]
        } else {
            -k_off[off_index(i, j, np)]
        }
    });

    // K_hat = |C_-|^(-1) T_-- + Psi_hat C_+^(-1) T_+-
    let scaled_psi_hat =
        Matrix::from_fn(nm, np, |i, l| psi_hat[(i, l)] / model.c(l));
    let s_hat = scaled_psi_hat.mul(&model.t_block(true, false));
    let mut k_hat_off = Vec::with_capacity(nm * nm - nm);
    for i in 0..nm {
        for j in 0..nm {
            if i != j {
                let x = model.rate(np + i, np + j) / model.c_abs(np + i) + s_hat[(i, j)];
                k_hat_off.push(-x.max(0.0));
            }
        }
    }
    let xi_c_minus: Vec<f64> =
        (0..nm).map(|l| phase.xi[np + l] * model.c_abs(np + l)).collect();
    let k_hat_triplet =
        TripletRepresentation::new(nm, k_hat_off.clone(), xi_c_minus, vec![0.0; nm], Side::Left)?;
    let k_hat_diag = k_hat_triplet.implied_diagonal();
    let k_hat = Matrix::from_fn(nm, nm, |i, j| {
        if i == j {
            -k_hat_diag[i]
        } else {
            -k_hat_off[off_index(i, j, nm)]
        }
    });

    // V = [C_+^(-1) | Psi |C_-|^(-1)]
    let v = Matrix::from_fn(np, np + nm, |i, j| {
        if j < np {
            if i == j {
                1.0 / model.c(i)
            } else {
                0.0
            }
        } else {
            psi[(i, j - np)] / model.c_abs(j)
        }
    });

    Ok(ReturnOperators {
        w,
        w_hat,
        k,
        k_hat,
        v,
        w_triplet,
        w_hat_triplet,
        k_triplet,
        k_hat_triplet,
        phase,
    })
}

/// Off-diagonal of `-A`, clamping the parasitic sign noise of entries that
/// are nonnegative by construction.
fn offdiag_negated(a: &Matrix<f64>) -> Vec<f64> {
    let m = a.rows();
    let mut out = Vec::with_capacity(m * m - m);
    for i in 0..m {
        for j in 0..m {
            if i != j {
                out.push(-(a[(i, j)].max(0.0)));
            }
        }
    }
    out
}

/// Boundary probability mass of the queue.
#[derive(Debug, Clone)]
pub struct BoundaryMass {
    pub p_minus: Vec<f64>,
    /// The scalar `q (1 - T_-+ K^(-1) V 1)`, evaluated as a pure sum.
    pub normalizer: f64,
}

/// Solves `q W = 0` through the kernel of the `-W` certificate, then
/// normalizes with `q 1 + q T_-+ (-K)^(-1) V 1`; since `K^(-1) <= 0`, the
/// rearranged form needs no subtraction.
pub fn boundary_mass(model: &FluidQueueModel, ops: &ReturnOperators) -> Result<BoundaryMass> {
    let q = ops.w_triplet.left_kernel()?;
    let factors = ops.k_triplet.factor()?;
    let v1 = ops.v.row_sums();
    // the factors hold (-K)^T, so the transposed solve applies (-K)^(-1)
    let y = factors.solve_transposed(&v1)?;
    let z = model.t_block(false, true).matvec(&y);
    let mut normalizer = 0.0;
    for qi in &q {
        normalizer += qi;
    }
    for (qi, zi) in q.iter().zip(&z) {
        normalizer += qi * zi;
    }
    if !(normalizer > 0.0 && normalizer.is_finite()) {
        return Err(Error::NonFinite("boundary mass normalizer".into()));
    }
    Ok(BoundaryMass { p_minus: q.iter().map(|qi| qi / normalizer).collect(), normalizer })
}

/// `e^(A t)` for an essentially nonnegative `A` (nonnegative off-diagonal),
/// by nonnegative Taylor evaluation of the shifted matrix plus repeated
/// squaring: `e^(At) = e^(-zt) T_m(2^(-s) (A + zI) t)^(2^s)`.
///
/// Aside from the shift itself, every operation combines nonnegative
/// quantities. The scalar factor is folded in before squaring to keep
/// intermediate magnitudes near those of the partial exponentials.
pub fn expm_nonneg<T: Scalar>(a: &Matrix<T>, t: f64) -> Result<Matrix<T>> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch("exponential needs a square matrix".into()));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameters(format!("time scale {:e} must be finite and >= 0", t)));
    }
    let n = a.rows();
    let proto = a.proto().clone();
    let zero = proto.zero_like();
    let one = proto.one_like();
    for i in 0..n {
        for j in 0..n {
            if i != j && a[(i, j)].is_negative() {
                return Err(Error::InvalidParameters(
                    "matrix must have nonnegative off-diagonal entries".into(),
                ));
            }
        }
    }

    // shift: z = max |A_ii|, so A + zI >= 0
    let mut z = zero.clone();
    for i in 0..n {
        let d = a[(i, i)].abs();
        if d > z {
            z = d;
        }
    }
    let shifted = Matrix::from_fn(n, n, |i, j| {
        if i == j {
            a[(i, i)].add(&z)
        } else {
            a[(i, j)].clone()
        }
    });

    // scaling: halve until max row sum times t is at most one
    let t_scalar = T::from_f64(t, &proto);
    let mut reach = zero.clone();
    for r in shifted.row_sums() {
        if r > reach {
            reach = r;
        }
    }
    let two = one.add(&one);
    let mut x = reach.mul(&t_scalar);
    let mut s = 0u32;
    while x > one {
        x = x.div(&two);
        s += 1;
        if s > 2_200 {
            return Err(Error::Overflow(
                "exponential argument too large to scale; split the time interval".into(),
            ));
        }
    }

    // Taylor order: smallest m with (m+1)! >= 4 / eps for this precision
    let quarter_eps = proto.eps_like().div(&T::from_f64(4.0, &proto));
    let mut m = 1usize;
    let mut factorial = two.clone();
    while factorial.mul(&quarter_eps) < one {
        m += 1;
        factorial = factorial.mul(&T::from_f64((m + 1) as f64, &proto));
        if m > 500 {
            return Err(Error::Overflow("Taylor order did not stabilize".into()));
        }
    }

    let mut scale = t_scalar;
    for _ in 0..s {
        scale = scale.div(&two);
    }
    let b = shifted.scale(&scale);
    let mut sum = Matrix::identity(n, &proto);
    let mut term = Matrix::identity(n, &proto);
    for i in 1..=m {
        term = term.mul(&b).scale(&one.div(&T::from_f64(i as f64, &proto)));
        sum = sum.add(&term);
    }
    // fold e^(-z t 2^(-s)) into the base before squaring
    sum = sum.scale(&z.mul(&scale).neg().exp());
    for _ in 0..s {
        sum = sum.mul(&sum);
    }
    if !sum.all_finite() {
        return Err(Error::Overflow("exponential overflowed; split the time interval".into()));
    }
    Ok(sum)
}

/// Density rows at the requested fluid levels.
#[derive(Debug, Clone)]
pub struct DensityResult {
    pub levels: Vec<f64>,
    /// `rows[j]` is the density row vector at `levels[j]`.
    pub rows: Vec<Vec<f64>>,
}

impl DensityResult {
    pub fn row_sums(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().sum()).collect()
    }
}

/// Precomputed factors for evaluating the density at many levels.
pub struct DensityPipeline {
    pub ops: ReturnOperators,
    pub boundary: BoundaryMass,
    /// `p_- T_-+`, the row vector pushed through the exponential.
    front: Vec<f64>,
}

impl DensityPipeline {
    pub fn new(
        model: &FluidQueueModel,
        solution: &crate::doubling::RiccatiSolution,
    ) -> Result<Self> {
        let ops = build_return_operators(model, solution)?;
        let boundary = boundary_mass(model, &ops)?;
        let front = model.t_block(false, true).vecmat(&boundary.p_minus);
        Ok(DensityPipeline { ops, boundary, front })
    }

    /// `f(x) = p_- T_-+ e^(Kx) V`; accepts `x = 0` for quadrature use.
    pub fn density_at(&self, x: f64) -> Result<Vec<f64>> {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "level {:e} must be finite and nonnegative",
                x
            )));
        }
        let em = expm_nonneg(&self.ops.k, x)?;
        let through = em.vecmat(&self.front);
        Ok(self.ops.v.vecmat(&through))
    }

    /// Total probability mass `p_- 1 + integral of f(x) 1 over [0, x_max]`
    /// by composite Simpson quadrature with `panels` panels.
    pub fn total_mass_simpson(&self, x_max: f64, panels: usize) -> Result<f64> {
        if !(x_max > 0.0 && x_max.is_finite()) || panels == 0 {
            return Err(Error::InvalidParameters("quadrature range must be positive".into()));
        }
        let panels = panels + panels % 2;
        let h = x_max / panels as f64;
        let values = crate::parallel::try_map(0..=panels, |j| {
            let row = self.density_at(j as f64 * h)?;
            Ok(row.iter().sum::<f64>())
        })?;
        let mut integral = values[0] + values[panels];
        for (j, v) in values.iter().enumerate().skip(1).take(panels - 1) {
            integral += if j % 2 == 1 { 4.0 * v } else { 2.0 * v };
        }
        integral *= h / 3.0;
        let boundary: f64 = self.boundary.p_minus.iter().sum();
        Ok(boundary + integral)
    }
}

/// Evaluates the stationary density at strictly positive levels. Levels are
/// processed independently (and in parallel when the feature is enabled).
pub fn stationary_density(
    model: &FluidQueueModel,
    solution: &crate::doubling::RiccatiSolution,
    levels: &[f64],
) -> Result<DensityResult> {
    for &x in levels {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "level {:e} must be finite and positive",
                x
            )));
        }
    }
    let pipeline = DensityPipeline::new(model, solution)?;
    let rows = crate::parallel::try_map(levels.iter().copied(), |x| pipeline.density_at(x))?;
    Ok(DensityResult { levels: levels.to_vec(), rows })
}
