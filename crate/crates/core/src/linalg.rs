//! Small complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

pub type CVec = DVector<Complex64>;
pub type CMat = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Cholesky factor of a Hermitian positive-definite matrix.
///
/// When the plain factorization fails, a single diagonal jitter of
/// `1e-12 * trace / n` is added and the factorization is retried.
#[derive(Clone, Debug)]
pub struct HermitianFactor {
    chol: Cholesky<Complex64, Dyn>,
    jitter: f64,
}

impl HermitianFactor {
    pub fn new(matrix: &CMat) -> Option<Self> {
        if let Some(chol) = Cholesky::new(matrix.clone()) {
            return Some(Self { chol, jitter: 0.0 });
        }
        let n = matrix.nrows().max(1);
        let jitter = 1e-12 * matrix.trace().re.abs() / n as f64;
        if jitter <= 0.0 || !jitter.is_finite() {
            return None;
        }
        let mut shifted = matrix.clone();
        for k in 0..matrix.nrows() {
            shifted[(k, k)] += Complex64::new(jitter, 0.0);
        }
        Cholesky::new(shifted).map(|chol| Self { chol, jitter })
    }

    /// Jitter that had to be added to obtain the factorization (0 when none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn solve(&self, rhs: &CVec) -> CVec {
        self.chol.solve(rhs)
    }

    pub fn solve_mat(&self, rhs: &CMat) -> CMat {
        self.chol.solve(rhs)
    }

    /// Lower-triangular factor `L` with `A = L Lᴴ`.
    pub fn l(&self) -> CMat {
        self.chol.l()
    }
}

/// Replaces `m` by `(m + mᴴ) / 2`.
pub fn hermitize(m: &mut CMat) {
    let n = m.nrows();
    for r in 0..n {
        m[(r, r)] = Complex64::new(m[(r, r)].re, 0.0);
        for c in (r + 1)..n {
            let avg = (m[(r, c)] + m[(c, r)].conj()) * 0.5;
            m[(r, c)] = avg;
            m[(c, r)] = avg.conj();
        }
    }
}

/// Largest `|m - mᴴ|` entry relative to the largest entry of `m`.
pub fn hermitian_defect(m: &CMat) -> f64 {
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let n = m.nrows();
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in r..n {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst / scale
}

/// `xᴴ A x`, real part (A assumed Hermitian).
pub fn quad_form(a: &CMat, x: &CVec) -> f64 {
    x.dotc(&(a * x)).re
}

pub fn norm_sqr(x: &CVec) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}
