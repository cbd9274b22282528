//! Extended-precision reference solutions and the two error measures.
//!
//! The reference path reruns the certificate-carrying doubling iteration in
//! software floating point with a caller-chosen number of decimal digits
//! (at least 50), far past binary64. Against it, an approximation is scored
//! by the normwise relative error (Frobenius) and the componentwise relative
//! error: the maximum entrywise relative deviation, which is the measure
//! the whole solver design targets.

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;

use crate::density::expm_nonneg;
use crate::doubling::{initialize_in, iterate_to_convergence, Variant};
use crate::error::{Error, Result};
use crate::gth::{Side, TripletRepresentation};
use crate::matrix::{Matrix, PlainLu};
use crate::model::{DoublingParameters, FluidQueueModel};
use crate::scalar::Scalar;

type Raw = FBig<HalfEven, 2>;

/// Arbitrary-precision binary float with correctly rounded basic operations.
/// The mantissa length travels with each value; constants are minted from a
/// prototype so a computation never silently loses precision.
#[derive(Debug, Clone, PartialEq, PartialOrd)]
pub struct Ext(Raw);

impl Ext {
    pub fn precision_bits(&self) -> usize {
        self.0.precision()
    }

    pub fn raw(&self) -> &Raw {
        &self.0
    }
}

/// Mantissa length for a decimal digit count, with guard bits.
pub fn precision_bits(decimal_digits: usize) -> usize {
    (decimal_digits as f64 * std::f64::consts::LOG2_10).ceil() as usize + 32
}

/// Zero at the precision corresponding to `decimal_digits`.
pub fn ext_proto(decimal_digits: usize) -> Ext {
    let bits = precision_bits(decimal_digits);
    Ext(Raw::ZERO.with_precision(bits).value())
}

pub fn to_ext(x: f64, proto: &Ext) -> Ext {
    Ext::from_f64(x, proto)
}

pub fn matrix_to_ext(m: &Matrix<f64>, proto: &Ext) -> Matrix<Ext> {
    Matrix::from_f64_matrix(m, proto)
}

impl Scalar for Ext {
    fn zero_like(&self) -> Self {
        Ext(Raw::ZERO.with_precision(self.0.precision()).value())
    }

    fn one_like(&self) -> Self {
        Ext(Raw::ONE.with_precision(self.0.precision()).value())
    }

    fn from_f64(x: f64, proto: &Self) -> Self {
        assert!(x.is_finite(), "extended value from non-finite f64");
        Ext(Raw::try_from(x).expect("finite f64").with_precision(proto.0.precision()).value())
    }

    fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }

    fn eps_like(&self) -> Self {
        let p = self.0.precision().max(53);
        let two = Raw::from(2).with_precision(p).value();
        let mut eps = Raw::ONE.with_precision(p).value();
        for _ in 0..p - 1 {
            eps = eps / &two;
        }
        Ext(eps)
    }

    fn add(&self, rhs: &Self) -> Self {
        Ext(&self.0 + &rhs.0)
    }

    fn sub(&self, rhs: &Self) -> Self {
        Ext(&self.0 - &rhs.0)
    }

    fn mul(&self, rhs: &Self) -> Self {
        Ext(&self.0 * &rhs.0)
    }

    fn div(&self, rhs: &Self) -> Self {
        Ext(&self.0 / &rhs.0)
    }

    fn neg(&self) -> Self {
        Ext(-self.0.clone())
    }

    fn abs(&self) -> Self {
        if self.0 < Raw::ZERO {
            self.neg()
        } else {
            self.clone()
        }
    }

    fn exp(&self) -> Self {
        Ext(self.0.exp())
    }

    fn is_finite(&self) -> bool {
        !self.0.repr().is_infinite()
    }
}

/// High-precision Riccati solution.
#[derive(Debug, Clone)]
pub struct ExtendedSolution {
    pub psi: Matrix<Ext>,
    pub psi_hat: Matrix<Ext>,
    pub f_infinity: Matrix<Ext>,
    pub iterations: usize,
    pub digits: usize,
}

fn check_digits(digits: usize) -> Result<()> {
    if !(50..=300).contains(&digits) {
        return Err(Error::Oracle(format!(
            "reference precision must be between 50 and 300 decimal digits, got {}",
            digits
        )));
    }
    Ok(())
}

/// Certificate-carrying doubling at `digits` decimal digits, iterated until
/// the componentwise increment falls below `10^-(digits-10)`. Non-convergence
/// is an error; the result is never silently rounded.
pub fn solve_riccati_extended_with(
    model: &FluidQueueModel,
    params: &DoublingParameters,
    digits: usize,
) -> Result<ExtendedSolution> {
    check_digits(digits)?;
    let proto = ext_proto(digits);
    let tol = 10f64.powi(-((digits - 10) as i32));
    let state = initialize_in(model, params, Variant::Comp, &proto)?;
    let (state, _) = iterate_to_convergence(state, Variant::Comp, tol, 200)
        .map_err(|e| Error::Oracle(format!("extended doubling failed: {}", e)))?;
    Ok(ExtendedSolution {
        psi: state.g,
        psi_hat: state.h,
        f_infinity: state.f,
        iterations: state.k,
        digits,
    })
}

/// As [`solve_riccati_extended_with`] under the default parameterization.
pub fn solve_riccati_extended(model: &FluidQueueModel, digits: usize) -> Result<ExtendedSolution> {
    let params = DoublingParameters::default_for(model)?;
    solve_riccati_extended_with(model, &params, digits)
}

/// Stationary phase distribution at extended precision.
pub fn ext_stationary_distribution(model: &FluidQueueModel, digits: usize) -> Result<Vec<Ext>> {
    check_digits(digits)?;
    let proto = ext_proto(digits);
    let n = model.n();
    let offdiag: Vec<Ext> =
        model.t_offdiag().iter().map(|r| Ext::from_f64(*r, &proto).neg()).collect();
    let rep = TripletRepresentation::new(
        n,
        offdiag,
        vec![proto.one_like(); n],
        vec![proto.zero_like(); n],
        Side::Right,
    )?;
    rep.left_kernel()
}

/// The two error measures of an approximation against a reference held in
/// extended precision until the final conversions.
#[derive(Debug, Clone, Copy)]
pub struct ErrorMetrics {
    /// Frobenius-relative error.
    pub e_norm: f64,
    /// Max componentwise relative error.
    pub e_cw: f64,
    /// Set when some reference entry is exactly zero but the approximation
    /// is not; `e_cw` is then reported as infinity.
    pub cw_infinite: bool,
}

pub fn error_metrics(approx: &Matrix<f64>, reference: &Matrix<Ext>) -> Result<ErrorMetrics> {
    if approx.rows() != reference.rows() || approx.cols() != reference.cols() {
        return Err(Error::ShapeMismatch(format!(
            "approximation is {}x{}, reference {}x{}",
            approx.rows(),
            approx.cols(),
            reference.rows(),
            reference.cols()
        )));
    }
    let proto = reference.proto().clone();
    let mut num2 = proto.zero_like();
    let mut den2 = proto.zero_like();
    let mut e_cw = 0.0f64;
    let mut cw_infinite = false;
    for i in 0..approx.rows() {
        for j in 0..approx.cols() {
            let r = &reference[(i, j)];
            let d = Ext::from_f64(approx[(i, j)], &proto).sub(r);
            num2 = num2.mul_add_acc(&d, &d);
            den2 = den2.mul_add_acc(r, r);
            if r.is_zero() {
                if approx[(i, j)] != 0.0 {
                    cw_infinite = true;
                }
            } else {
                e_cw = e_cw.max(d.abs().div(&r.abs()).to_f64());
            }
        }
    }
    let e_norm = if den2.is_zero() {
        if num2.is_zero() {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num2.div(&den2).to_f64().sqrt()
    };
    let e_cw = if cw_infinite { f64::INFINITY } else { e_cw };
    Ok(ErrorMetrics { e_norm, e_cw, cw_infinite })
}

pub fn error_metrics_vec(approx: &[f64], reference: &[Ext]) -> Result<ErrorMetrics> {
    let a = Matrix::from_fn(1, approx.len(), |_, j| approx[j]);
    let r = Matrix::from_fn(1, reference.len(), |_, j| reference[j].clone());
    error_metrics(&a, &r)
}

/// Signed entrywise relative errors `(approx - ref) / ref`; entries with a
/// zero reference report zero when exact and infinity otherwise.
pub fn relative_error_matrix(approx: &Matrix<f64>, reference: &Matrix<Ext>) -> Matrix<f64> {
    let proto = reference.proto().clone();
    Matrix::from_fn(approx.rows(), approx.cols(), |i, j| {
        let r = &reference[(i, j)];
        if r.is_zero() {
            if approx[(i, j)] == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            Ext::from_f64(approx[(i, j)], &proto).sub(r).div(r).to_f64()
        }
    })
}

/// The full density pipeline at extended precision, the reference for the
/// per-level error curves. With 50+ digits to spend, the generators are
/// formed directly; the handful of digits lost to cancellation is irrelevant
/// at this precision.
pub struct ExtendedDensity {
    pub digits: usize,
    pub p_minus: Vec<Ext>,
    k: Matrix<Ext>,
    v: Matrix<Ext>,
    front: Vec<Ext>,
}

pub fn build_extended_density(
    model: &FluidQueueModel,
    params: &DoublingParameters,
    digits: usize,
) -> Result<ExtendedDensity> {
    let proto = ext_proto(digits);
    let sol = solve_riccati_extended_with(model, params, digits)?;
    let xi = ext_stationary_distribution(model, digits)?;
    let np = model.n_plus();
    let nm = model.n_minus();

    let mut drift = proto.zero_like();
    for (i, x) in xi.iter().enumerate() {
        drift = drift.add(&x.mul(&Ext::from_f64(model.c(i), &proto)));
    }
    if !drift.is_negative() {
        return Err(Error::NotPositiveRecurrent { drift: drift.to_f64() });
    }

    let t_mp = matrix_to_ext(&model.t_block(false, true), &proto);
    let t_mm = matrix_to_ext(&model.t_block(false, false), &proto);
    let t_pp = matrix_to_ext(&model.t_block(true, true), &proto);

    // q W = 0 through the certificate of -W
    let w_prod = t_mp.mul(&sol.psi);
    let mut neg_w_off = Vec::with_capacity(nm * nm - nm);
    for i in 0..nm {
        for j in 0..nm {
            if i != j {
                neg_w_off.push(t_mm[(i, j)].add(&w_prod[(i, j)]).neg());
            }
        }
    }
    let w_rep = TripletRepresentation::new(
        nm,
        neg_w_off,
        vec![proto.one_like(); nm],
        vec![proto.zero_like(); nm],
        Side::Right,
    )?;
    let q = w_rep.left_kernel()?;

    // K and V, formed directly
    let scaled_psi = Matrix::from_fn(np, nm, |i, l| {
        sol.psi[(i, l)].div(&Ext::from_f64(model.c_abs(np + l), &proto))
    });
    let s = scaled_psi.mul(&t_mp);
    let k = Matrix::from_fn(np, np, |i, j| {
        t_pp[(i, j)].div(&Ext::from_f64(model.c(i), &proto)).add(&s[(i, j)])
    });
    let v = Matrix::from_fn(np, np + nm, |i, j| {
        if j < np {
            if i == j {
                proto.one_like().div(&Ext::from_f64(model.c(i), &proto))
            } else {
                proto.zero_like()
            }
        } else {
            sol.psi[(i, j - np)].div(&Ext::from_f64(model.c_abs(j), &proto))
        }
    });

    let neg_k = k.scale(&proto.one_like().neg());
    let y = PlainLu::factor(&neg_k)?.solve(&v.row_sums())?;
    let z = t_mp.matvec(&y);
    let mut normalizer = proto.zero_like();
    for qi in &q {
        normalizer = normalizer.add(qi);
    }
    for (qi, zi) in q.iter().zip(&z) {
        normalizer = normalizer.mul_add_acc(qi, zi);
    }
    let p_minus: Vec<Ext> = q.iter().map(|qi| qi.div(&normalizer)).collect();
    let front = t_mp.vecmat(&p_minus);
    Ok(ExtendedDensity { digits, p_minus, k, v, front })
}

impl ExtendedDensity {
    pub fn density_at(&self, x: f64) -> Result<Vec<Ext>> {
        let em = expm_nonneg(&self.k, x)?;
        let through = em.vecmat(&self.front);
        Ok(self.v.vecmat(&through))
    }
}
