//! Cancellation-free linear algebra on M-matrices given by triplet
//! representations.
//!
//! A *triplet representation* `(offdiag(A), v, w)` with `offdiag(A) <= 0`,
//! `v > 0`, `w >= 0` and `A v = w` pins down an M-matrix without ever storing
//! its diagonal: `A_ii = (w_i - sum_{j != i} A_ij v_j) / v_i`, a quotient of
//! nonnegative quantities. GTH-style elimination consumes the certificate
//! directly and computes every pivot as a sum of products of nonnegative
//! numbers, so the componentwise accuracy of the factorization does not
//! depend on the conditioning of `A`. That property is what the whole solver
//! is built on.
//!
//! No pivoting happens anywhere here: stability comes from the certificate,
//! not from pivot-growth control.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Which side of `A` the certificate constrains: `Av = w` or `v^T A = w^T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Right,
    Left,
}

/// Index of `(i, j)`, `i != j`, into row-major-without-diagonal storage.
///
/// The elimination itself does not care about the order of the off-diagonal
/// entries; a fixed order keeps results bit-reproducible.
#[inline]
pub fn off_index(i: usize, j: usize, m: usize) -> usize {
    debug_assert!(i != j && i < m && j < m);
    i * (m - 1) + if j < i { j } else { j - 1 }
}

/// Extracts the off-diagonal of a square matrix in the storage order used by
/// [`TripletRepresentation`].
pub fn offdiag_of<T: Scalar>(a: &Matrix<T>) -> Vec<T> {
    assert!(a.is_square());
    let m = a.rows();
    let mut out = Vec::with_capacity(m * m - m);
    for i in 0..m {
        for j in 0..m {
            if i != j {
                out.push(a[(i, j)].clone());
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct TripletRepresentation<T = f64> {
    m: usize,
    offdiag: Vec<T>,
    v: Vec<T>,
    w: Vec<T>,
    side: Side,
}

impl<T: Scalar> TripletRepresentation<T> {
    pub fn new(m: usize, offdiag: Vec<T>, v: Vec<T>, w: Vec<T>, side: Side) -> Result<Self> {
        if offdiag.len() != m * m - m || v.len() != m || w.len() != m {
            return Err(Error::ShapeMismatch(format!(
                "triplet of dimension {} needs {} off-diagonal entries and vectors of length {}",
                m,
                m * m - m,
                m
            )));
        }
        if offdiag.iter().any(|x| x.is_positive() || !x.is_finite()) {
            return Err(Error::InvalidTriplet("off-diagonal entries must be <= 0 and finite".into()));
        }
        if v.iter().any(|x| !x.is_positive() || !x.is_finite()) {
            return Err(Error::InvalidTriplet("v must be > 0 entrywise and finite".into()));
        }
        if w.iter().any(|x| x.is_negative() || !x.is_finite()) {
            return Err(Error::InvalidTriplet("w must be >= 0 entrywise and finite".into()));
        }
        Ok(TripletRepresentation { m, offdiag, v, w, side })
    }

    /// Builds the triplet of the Z-matrix `a`, taking only its off-diagonal;
    /// the stored diagonal of `a` is ignored.
    pub fn from_z_matrix(a: &Matrix<T>, v: Vec<T>, w: Vec<T>, side: Side) -> Result<Self> {
        Self::new(a.rows(), offdiag_of(a), v, w, side)
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn off(&self, i: usize, j: usize) -> &T {
        &self.offdiag[off_index(i, j, self.m)]
    }

    pub fn offdiag(&self) -> &[T] {
        &self.offdiag
    }

    pub fn v(&self) -> &[T] {
        &self.v
    }

    pub fn w(&self) -> &[T] {
        &self.w
    }

    /// The diagonal the certificate implies: `(w_i + sum |A_ij| v_j) / v_i`
    /// for a right certificate, the column-based mirror for a left one.
    /// Every term is nonnegative, so no cancellation occurs.
    pub fn implied_diagonal(&self) -> Vec<T> {
        (0..self.m)
            .map(|i| {
                let mut acc = self.w[i].clone();
                for j in 0..self.m {
                    if j != i {
                        let a = match self.side {
                            Side::Right => self.off(i, j),
                            Side::Left => self.off(j, i),
                        };
                        acc = acc.mul_add_acc(&a.abs(), &self.v[j]);
                    }
                }
                acc.div(&self.v[i])
            })
            .collect()
    }

    /// The full matrix the certificate describes, diagonal included. Test and
    /// reference use only; the solver paths never materialize it.
    pub fn to_matrix(&self) -> Matrix<T> {
        let d = self.implied_diagonal();
        Matrix::from_fn(self.m, self.m, |i, j| {
            if i == j {
                d[i].clone()
            } else {
                self.off(i, j).clone()
            }
        })
    }

    /// Rewrites a LEFT certificate as the RIGHT certificate of the transpose.
    /// There is a single elimination code path; left systems go through here.
    fn to_right(&self) -> TripletRepresentation<T> {
        match self.side {
            Side::Right => self.clone(),
            Side::Left => {
                let m = self.m;
                let mut off = self.offdiag.clone();
                for i in 0..m {
                    for j in 0..i {
                        off.swap(off_index(i, j, m), off_index(j, i, m));
                    }
                }
                TripletRepresentation {
                    m,
                    offdiag: off,
                    v: self.v.clone(),
                    w: self.w.clone(),
                    side: Side::Right,
                }
            }
        }
    }

    /// GTH-style LU factorization driven by the certificate.
    ///
    /// Each pivot is computed from the current `w` and the trailing
    /// off-diagonal entries only, never by subtracting accumulated diagonal
    /// updates. A pivot of exactly zero is legal only at the last step, where
    /// it flags a singular M-matrix (the kernel case).
    pub fn factor(&self) -> Result<GthFactors<T>> {
        let rep = self.to_right();
        let m = rep.m;
        let proto = rep.v[0].clone();
        let zero = proto.zero_like();
        let mut u = Matrix::zeros(m, m, &proto);
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    u[(i, j)] = rep.off(i, j).clone();
                }
            }
        }
        let mut l = Matrix::identity(m, &proto);
        let mut w = rep.w.clone();
        let mut singular = false;
        for k in 0..m {
            // pivot = (w_k + sum_{j>k} |U_kj| v_j) / v_k: nonnegative terms only
            let mut piv = w[k].clone();
            for j in k + 1..m {
                piv = piv.mul_add_acc(&u[(k, j)].abs(), &rep.v[j]);
            }
            piv = piv.div(&rep.v[k]);
            if !piv.is_finite() {
                return Err(Error::NonFinite(format!("pivot at elimination step {}", k)));
            }
            if piv < zero {
                return Err(Error::NegativePivot { index: k, value: piv.to_f64() });
            }
            if piv.is_zero() {
                if k + 1 < m {
                    return Err(Error::PrematureZeroPivot { index: k });
                }
                singular = true;
                u[(k, k)] = piv;
                break;
            }
            u[(k, k)] = piv.clone();
            for i in k + 1..m {
                let mult = u[(i, k)].div(&piv); // <= 0
                l[(i, k)] = mult.clone();
                u[(i, k)] = zero.clone();
                // w_i - mult * w_k adds a nonnegative quantity since mult <= 0
                w[i] = w[i].sub(&mult.mul(&w[k]));
                for j in k + 1..m {
                    if j != i {
                        // both factors are <= 0, so the update only grows |U_ij|
                        u[(i, j)] = u[(i, j)].sub(&mult.mul(&u[(k, j)]));
                    }
                }
            }
        }
        Ok(GthFactors { m, l, u, singular })
    }

    /// Left kernel of a singular irreducible M-matrix certified with `w = 0`.
    ///
    /// With `w = 0` the eliminated `w` stays exactly zero, so the final pivot
    /// is zero by construction rather than by cancellation. Fixing the last
    /// component to one, the remaining components come out of the unit lower
    /// factor as sums of nonnegative products; the result is normalized to
    /// sum one.
    pub fn left_kernel(&self) -> Result<Vec<T>> {
        if self.w.iter().any(|x| !x.is_zero()) {
            return Err(Error::InvalidTriplet("kernel computation requires w = 0".into()));
        }
        let factors = self.to_right().factor()?;
        if !factors.singular {
            return Err(Error::InvalidTriplet(
                "matrix is nonsingular; no one-dimensional kernel".into(),
            ));
        }
        let m = self.m;
        let mut q = vec![self.v[0].zero_like(); m];
        q[m - 1] = self.v[0].one_like();
        for j in (0..m.saturating_sub(1)).rev() {
            let mut acc = q[j].zero_like();
            for i in j + 1..m {
                acc = acc.mul_add_acc(&q[i], &factors.l[(i, j)].abs());
            }
            q[j] = acc;
        }
        let mut total = q[0].zero_like();
        for qi in &q {
            total = total.add(qi);
        }
        if !total.is_positive() {
            return Err(Error::Singular("kernel vector has zero mass".into()));
        }
        Ok(q.into_iter().map(|x| x.div(&total)).collect())
    }
}

/// Unit lower and upper triangular factors from GTH elimination.
///
/// `L` keeps its true signs (off-diagonal entries <= 0), `U` has nonnegative
/// diagonal and nonpositive off-diagonal. The sign structure is what makes
/// both substitution sweeps accumulation-only.
#[derive(Debug, Clone)]
pub struct GthFactors<T = f64> {
    m: usize,
    l: Matrix<T>,
    u: Matrix<T>,
    singular: bool,
}

impl<T: Scalar> GthFactors<T> {
    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn l(&self) -> &Matrix<T> {
        &self.l
    }

    pub fn u(&self) -> &Matrix<T> {
        &self.u
    }

    fn check_rhs(&self, b: &[T]) -> Result<()> {
        if b.len() != self.m {
            return Err(Error::ShapeMismatch("RHS length".into()));
        }
        if self.singular {
            return Err(Error::Singular("factors are singular; solve is undefined".into()));
        }
        if b.iter().any(|x| x.is_negative() || !x.is_finite()) {
            return Err(Error::InvalidTriplet("RHS must be >= 0 entrywise".into()));
        }
        Ok(())
    }

    /// `x = A^(-1) b` for `b >= 0`; the result is nonnegative and accurate
    /// entry by entry.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        self.check_rhs(b)?;
        let m = self.m;
        let mut y = b.to_vec();
        for i in 1..m {
            for j in 0..i {
                // L_ij <= 0: accumulate |L_ij| y_j
                let t = self.l[(i, j)].mul(&y[j]);
                y[i] = y[i].sub(&t);
            }
        }
        for i in (0..m).rev() {
            for j in i + 1..m {
                let t = self.u[(i, j)].mul(&y[j]);
                y[i] = y[i].sub(&t);
            }
            y[i] = y[i].div(&self.u[(i, i)]);
        }
        Ok(y)
    }

    /// `x = A^(-T) b`: forward sweep through `U^T`, backward through `L^T`.
    pub fn solve_transposed(&self, b: &[T]) -> Result<Vec<T>> {
        self.check_rhs(b)?;
        let m = self.m;
        let mut y = b.to_vec();
        for i in 0..m {
            for j in 0..i {
                let t = self.u[(j, i)].mul(&y[j]);
                y[i] = y[i].sub(&t);
            }
            y[i] = y[i].div(&self.u[(i, i)]);
        }
        for i in (0..m).rev() {
            for j in i + 1..m {
                let t = self.l[(j, i)].mul(&y[j]);
                y[i] = y[i].sub(&t);
            }
        }
        Ok(y)
    }

    /// Column-by-column solve over a nonnegative right-hand-side matrix.
    pub fn solve_matrix(&self, b: &Matrix<T>) -> Result<Matrix<T>> {
        if b.rows() != self.m {
            return Err(Error::ShapeMismatch("RHS row count".into()));
        }
        let mut out = Matrix::zeros(b.rows(), b.cols(), b.proto());
        for j in 0..b.cols() {
            out.set_column(j, &self.solve(&b.column(j))?);
        }
        Ok(out)
    }
}
