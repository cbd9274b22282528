//! Problem instances: an irreducible CTMC generator together with per-phase
//! fluid rates, plus the derived quantities every solver run starts from.
//!
//! The generator's diagonal is never an input. It is always reconstructed as
//! the negated sum of the nonnegative off-diagonal rates, which keeps every
//! downstream certificate subtraction-safe and makes `T 1 = 0` hold by
//! construction.

use crate::error::{Error, Result};
use crate::gth::{off_index, Side, TripletRepresentation};
use crate::matrix::Matrix;

/// A Markov-modulated fluid queue: generator `T`, diagonal rate matrix `C`,
/// and the phase partition into net-inflow and net-outflow states.
///
/// Phases are ordered so that the `n_plus` states with `c_i > 0` come first.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidQueueModel {
    n_plus: usize,
    n_minus: usize,
    /// Off-diagonal transition rates, row-major without the diagonal.
    t_off: Vec<f64>,
    /// Derived diagonal: negated off-diagonal row sums.
    t_diag: Vec<f64>,
    /// Fluid rates; positive for the first `n_plus` phases, negative after.
    c: Vec<f64>,
}

impl FluidQueueModel {
    pub fn new(n_plus: usize, n_minus: usize, t_off: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if n_plus == 0 || n_minus == 0 {
            return Err(Error::InvalidModel(
                "both phase classes must be nonempty (nplus, nminus >= 1)".into(),
            ));
        }
        let n = n_plus + n_minus;
        if t_off.len() != n * n - n {
            return Err(Error::ShapeMismatch(format!(
                "expected {} off-diagonal rates for n = {}, got {}",
                n * n - n,
                n,
                t_off.len()
            )));
        }
        if c.len() != n {
            return Err(Error::ShapeMismatch(format!("expected {} rates, got {}", n, c.len())));
        }
        for (idx, r) in t_off.iter().enumerate() {
            if !r.is_finite() || *r < 0.0 {
                return Err(Error::InvalidModel(format!(
                    "off-diagonal rate #{} is {:e}; rates must be finite and >= 0",
                    idx, r
                )));
            }
        }
        for (i, &ci) in c.iter().enumerate() {
            if !ci.is_finite() {
                return Err(Error::InvalidModel(format!("rate c_{} is not finite", i + 1)));
            }
            if ci == 0.0 {
                return Err(Error::InvalidModel(format!("zero rate: c_{} = 0", i + 1)));
            }
            if i < n_plus && ci < 0.0 {
                return Err(Error::InvalidModel(format!(
                    "c_{} = {:e} must be > 0 in the up-phase block",
                    i + 1,
                    ci
                )));
            }
            if i >= n_plus && ci > 0.0 {
                return Err(Error::InvalidModel(format!(
                    "c_{} = {:e} must be < 0 in the down-phase block",
                    i + 1,
                    ci
                )));
            }
        }
        let t_diag: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = 0.0;
                for j in 0..n {
                    if j != i {
                        s += t_off[off_index(i, j, n)];
                    }
                }
                -s
            })
            .collect();
        let model = FluidQueueModel { n_plus, n_minus, t_off, t_diag, c };
        if !model.is_irreducible() {
            return Err(Error::InvalidModel(
                "generator is reducible: transition graph is not strongly connected".into(),
            ));
        }
        Ok(model)
    }

    pub fn n(&self) -> usize {
        self.n_plus + self.n_minus
    }

    pub fn n_plus(&self) -> usize {
        self.n_plus
    }

    pub fn n_minus(&self) -> usize {
        self.n_minus
    }

    /// Transition rate `T_ij` for `i != j`.
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.t_off[off_index(i, j, self.n())]
    }

    /// Derived diagonal entry `T_ii`.
    pub fn t_diag(&self, i: usize) -> f64 {
        self.t_diag[i]
    }

    /// Off-diagonal row sum, i.e. `|T_ii|` without a signed diagonal read.
    pub fn exit_rate(&self, i: usize) -> f64 {
        let n = self.n();
        let mut s = 0.0;
        for j in 0..n {
            if j != i {
                s += self.t_off[off_index(i, j, n)];
            }
        }
        s
    }

    pub fn c(&self, i: usize) -> f64 {
        self.c[i]
    }

    pub fn c_abs(&self, i: usize) -> f64 {
        self.c[i].abs()
    }

    pub fn rates(&self) -> &[f64] {
        &self.c
    }

    pub fn t_offdiag(&self) -> &[f64] {
        &self.t_off
    }

    /// Full generator with the derived diagonal filled in.
    pub fn t_matrix(&self) -> Matrix<f64> {
        let n = self.n();
        Matrix::from_fn(n, n, |i, j| if i == j { self.t_diag[i] } else { self.rate(i, j) })
    }

    /// Block of `T` with rows in one phase class and columns in another.
    /// `up` selects the class: `true` for rows/cols `0..n_plus`.
    pub fn t_block(&self, row_up: bool, col_up: bool) -> Matrix<f64> {
        let (r0, nr) = if row_up { (0, self.n_plus) } else { (self.n_plus, self.n_minus) };
        let (c0, nc) = if col_up { (0, self.n_plus) } else { (self.n_plus, self.n_minus) };
        Matrix::from_fn(nr, nc, |i, j| {
            let (gi, gj) = (r0 + i, c0 + j);
            if gi == gj {
                self.t_diag[gi]
            } else {
                self.rate(gi, gj)
            }
        })
    }

    pub fn c_plus(&self) -> Vec<f64> {
        self.c[..self.n_plus].to_vec()
    }

    pub fn c_minus_abs(&self) -> Vec<f64> {
        self.c[self.n_plus..].iter().map(|x| x.abs()).collect()
    }

    /// `|C| 1`, the vector of absolute rates.
    pub fn c_abs_vec(&self) -> Vec<f64> {
        self.c.iter().map(|x| x.abs()).collect()
    }

    /// Strong connectivity of the sparsity pattern: one BFS forward, one
    /// backward.
    fn is_irreducible(&self) -> bool {
        let n = self.n();
        let reaches_all = |transpose: bool| {
            let mut seen = vec![false; n];
            let mut queue = vec![0usize];
            seen[0] = true;
            while let Some(i) = queue.pop() {
                for j in 0..n {
                    if i == j || seen[j] {
                        continue;
                    }
                    let rate = if transpose { self.rate(j, i) } else { self.rate(i, j) };
                    if rate > 0.0 {
                        seen[j] = true;
                        queue.push(j);
                    }
                }
            }
            seen.iter().all(|&s| s)
        };
        reaches_all(false) && reaches_all(true)
    }

    /// Right triplet certificate of `-T`: off-diagonal `-T_ij`, `v = 1`,
    /// `w = 0` (row sums of the generator vanish by construction).
    pub fn neg_t_triplet(&self) -> TripletRepresentation {
        let n = self.n();
        let offdiag: Vec<f64> = self.t_off.iter().map(|r| -r).collect();
        TripletRepresentation::new(n, offdiag, vec![1.0; n], vec![0.0; n], Side::Right)
            .expect("model data forms a valid certificate")
    }
}

/// Stationary distribution of the phase process and the mean drift.
#[derive(Debug, Clone)]
pub struct PhaseDistribution {
    pub xi: Vec<f64>,
    /// Mean net fluid rate `xi * C * 1`; negative iff the queue is positive
    /// recurrent.
    pub drift: f64,
}

impl PhaseDistribution {
    pub fn is_positive_recurrent(&self) -> bool {
        self.drift < 0.0
    }
}

/// Solves `xi T = 0`, `xi 1 = 1` through the GTH kernel of `-T`, then forms
/// the drift as one subtraction of two separately accumulated sums.
pub fn stationary_phase_distribution(model: &FluidQueueModel) -> Result<PhaseDistribution> {
    let xi = model.neg_t_triplet().left_kernel()?;
    let mut inflow = 0.0;
    let mut outflow = 0.0;
    for (i, &x) in xi.iter().enumerate() {
        if i < model.n_plus() {
            inflow += x * model.c(i);
        } else {
            outflow += x * model.c_abs(i);
        }
    }
    Ok(PhaseDistribution { xi, drift: inflow - outflow })
}

/// Largest admissible initialization parameters: `alpha_opt` over the
/// down phases and `beta_opt` over the up phases, with `|T_ii|` evaluated as
/// the off-diagonal row sum.
pub fn optimal_parameters(model: &FluidQueueModel) -> (f64, f64) {
    let mut alpha_opt = f64::INFINITY;
    for i in model.n_plus()..model.n() {
        alpha_opt = alpha_opt.min(model.c_abs(i) / model.exit_rate(i));
    }
    let mut beta_opt = f64::INFINITY;
    for i in 0..model.n_plus() {
        beta_opt = beta_opt.min(model.c(i) / model.exit_rate(i));
    }
    (alpha_opt, beta_opt)
}

/// Parameter choice that avoids even the benign diagonal subtractions:
/// harmonic-style sums of exit rates over each phase class. Guaranteed to
/// lie within a factor of the class size of the optimal values.
pub fn subtraction_free_parameters(model: &FluidQueueModel) -> (f64, f64) {
    let mut alpha_inv = 0.0;
    for i in model.n_plus()..model.n() {
        alpha_inv += model.exit_rate(i) / model.c_abs(i);
    }
    let mut beta_inv = 0.0;
    for i in 0..model.n_plus() {
        beta_inv += model.exit_rate(i) / model.c(i);
    }
    (alpha_inv.recip(), beta_inv.recip())
}

/// Initialization scheme: how the two parameters relate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// `alpha = beta = eta * min(alpha_opt, beta_opt)`.
    Sda,
    /// `alpha = 0`, `beta = eta * beta_opt`.
    SdaSs,
    /// `alpha = eta * alpha_opt`, `beta = eta * beta_opt` independently.
    Adda,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Sda => "sda",
            Scheme::SdaSs => "sda-ss",
            Scheme::Adda => "adda",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sda" => Ok(Scheme::Sda),
            "sda-ss" | "sdass" | "ss" => Ok(Scheme::SdaSs),
            "adda" => Ok(Scheme::Adda),
            other => Err(Error::InvalidParameters(format!("unknown scheme '{}'", other))),
        }
    }
}

/// Validated initialization parameters for the doubling iteration.
#[derive(Debug, Clone)]
pub struct DoublingParameters {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_opt: f64,
    pub beta_opt: f64,
    pub eta: f64,
    pub scheme: Scheme,
}

pub const DEFAULT_ETA: f64 = 0.5;

impl DoublingParameters {
    pub fn new(model: &FluidQueueModel, scheme: Scheme, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidParameters(format!("eta = {:e} must lie in (0, 1]", eta)));
        }
        let (alpha_opt, beta_opt) = optimal_parameters(model);
        let (alpha, beta) = match scheme {
            Scheme::Sda => {
                let v = eta * alpha_opt.min(beta_opt);
                (v, v)
            }
            Scheme::SdaSs => (0.0, eta * beta_opt),
            Scheme::Adda => (eta * alpha_opt, eta * beta_opt),
        };
        Self::with_values(model, scheme, eta, alpha, beta)
    }

    /// Default configuration: plain SDA with `eta = 0.5`.
    pub fn default_for(model: &FluidQueueModel) -> Result<Self> {
        Self::new(model, Scheme::Sda, DEFAULT_ETA)
    }

    /// The fully subtraction-free choice, with independent parameters.
    pub fn subtraction_free(model: &FluidQueueModel) -> Result<Self> {
        let (alpha, beta) = subtraction_free_parameters(model);
        Self::with_values(model, Scheme::Adda, 1.0, alpha, beta)
    }

    pub fn with_values(
        model: &FluidQueueModel,
        scheme: Scheme,
        eta: f64,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        let (alpha_opt, beta_opt) = optimal_parameters(model);
        if !(alpha.is_finite() && beta.is_finite()) || alpha < 0.0 || beta < 0.0 {
            return Err(Error::InvalidParameters("alpha and beta must be finite and >= 0".into()));
        }
        if alpha == 0.0 && beta == 0.0 {
            return Err(Error::InvalidParameters("alpha and beta must not both be zero".into()));
        }
        if alpha > alpha_opt || beta > beta_opt {
            return Err(Error::InvalidParameters(format!(
                "alpha <= {:e} and beta <= {:e} required (got alpha = {:e}, beta = {:e})",
                alpha_opt, beta_opt, alpha, beta
            )));
        }
        match scheme {
            Scheme::Sda if alpha != beta => {
                return Err(Error::InvalidParameters("SDA requires alpha = beta".into()))
            }
            Scheme::SdaSs if alpha != 0.0 => {
                return Err(Error::InvalidParameters("SDA-ss requires alpha = 0".into()))
            }
            _ => {}
        }
        Ok(DoublingParameters { alpha, beta, alpha_opt, beta_opt, eta, scheme })
    }
}

/// Parses the model file format: `nplus`, `nminus`, the rate line `c`, then
/// `n` rows of `n` generator entries. `#` starts a comment; diagonal entries
/// in the matrix body are ignored and recomputed from the off-diagonals.
pub fn parse_model(text: &str) -> Result<FluidQueueModel> {
    let mut tokens: Vec<(usize, &str)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        for tok in line.split_whitespace() {
            tokens.push((lineno + 1, tok));
        }
    }
    let mut pos = 0usize;
    let mut next = |what: &str| -> Result<(usize, &str)> {
        let t = tokens.get(pos).copied().ok_or_else(|| Error::Parse {
            line: tokens.last().map_or(0, |t| t.0),
            message: format!("unexpected end of file, expected {}", what),
        })?;
        pos += 1;
        Ok(t)
    };

    let expect_keyword = |t: (usize, &str), kw: &str| -> Result<()> {
        if t.1.eq_ignore_ascii_case(kw) {
            Ok(())
        } else {
            Err(Error::Parse { line: t.0, message: format!("expected '{}', found '{}'", kw, t.1) })
        }
    };
    let parse_usize = |t: (usize, &str)| -> Result<usize> {
        t.1.parse::<usize>()
            .map_err(|_| Error::Parse { line: t.0, message: format!("expected an integer, found '{}'", t.1) })
    };
    let parse_real = |t: (usize, &str)| -> Result<f64> {
        t.1.parse::<f64>()
            .map_err(|_| Error::Parse { line: t.0, message: format!("expected a real number, found '{}'", t.1) })
    };

    expect_keyword(next("'nplus'")?, "nplus")?;
    let n_plus = parse_usize(next("the up-phase count")?)?;
    expect_keyword(next("'nminus'")?, "nminus")?;
    let n_minus = parse_usize(next("the down-phase count")?)?;
    if n_plus == 0 || n_minus == 0 {
        return Err(Error::InvalidModel("nplus and nminus must be positive".into()));
    }
    let n = n_plus + n_minus;
    expect_keyword(next("'c'")?, "c")?;
    let mut c = Vec::with_capacity(n);
    for _ in 0..n {
        c.push(parse_real(next("a fluid rate")?)?);
    }
    let mut t_off = vec![0.0; n * n - n];
    for i in 0..n {
        for j in 0..n {
            let t = next("a generator entry")?;
            let val = parse_real(t)?;
            if i != j {
                if val < 0.0 {
                    return Err(Error::Parse {
                        line: t.0,
                        message: format!("negative off-diagonal rate T[{},{}] = {:e}", i + 1, j + 1, val),
                    });
                }
                t_off[off_index(i, j, n)] = val;
            }
        }
    }
    if let Some(&(line, tok)) = tokens.get(pos) {
        return Err(Error::Parse { line, message: format!("trailing input '{}'", tok) });
    }
    FluidQueueModel::new(n_plus, n_minus, t_off, c)
}

/// Renders a model in the file format, 17 significant digits throughout so
/// the values round-trip bit-exactly. The diagonal is written for human
/// readers; parsers ignore it.
pub fn format_model(model: &FluidQueueModel, comment: &str) -> String {
    let n = model.n();
    let mut out = String::new();
    if !comment.is_empty() {
        for line in comment.lines() {
            out.push_str(&format!("# {}\n", line));
        }
    }
    out.push_str(&format!("nplus {}\n", model.n_plus()));
    out.push_str(&format!("nminus {}\n", model.n_minus()));
    out.push('c');
    for i in 0..n {
        out.push_str(&format!(" {:.16e}", model.c(i)));
    }
    out.push('\n');
    for i in 0..n {
        let mut row = String::new();
        for j in 0..n {
            if j > 0 {
                row.push(' ');
            }
            let v = if i == j { model.t_diag(i) } else { model.rate(i, j) };
            row.push_str(&format!("{:.16e}", v));
        }
        out.push_str(&row);
        out.push('\n');
    }
    out
}
