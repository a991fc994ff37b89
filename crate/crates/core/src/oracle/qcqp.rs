//! Single-constraint complex QCQP by a scalar dual search.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};

/// `q(x) = xᴴAx − 2·Re(bᴴx) + c` with Hermitian `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct Quadratic {
    pub a: CMat,
    pub b: CVec,
    pub c: f64,
}

impl Quadratic {
    pub fn new(a: CMat, b: CVec, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn eval(&self, x: &CVec) -> f64 {
        (x.dotc(&(&self.a * x))).re - 2.0 * self.b.dotc(x).re + self.c
    }

    /// `2(Ax − b)`, the gradient with respect to `conj(x)` doubled.
    pub fn gradient(&self, x: &CVec) -> CVec {
        (&self.a * x - &self.b) * Complex64::new(2.0, 0.0)
    }
}

/// Result of an oracle solve.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexSolveReport {
    pub value: f64,
    pub solution: Vec<CVec>,
    /// Largest constraint value at the solution (positive means violated).
    pub max_violation: f64,
    pub iterations: usize,
    /// Constraint multipliers, one per constraint.
    pub multipliers: Vec<f64>,
    /// Norm of the Lagrangian gradient at the solution.
    pub stationarity: f64,
}

fn lu_solve(m: &CMat, rhs: &CVec) -> Option<CVec> {
    let lu = m.clone().lu();
    lu.solve(rhs)
}

/// `argmin q₀(x) + ν·q₁(x)`, a linear solve.
fn inner_minimizer(objective: &Quadratic, constraint: &Quadratic, nu: f64) -> Option<CVec> {
    let m = &objective.a + &constraint.a * Complex64::new(nu, 0.0);
    let rhs = &objective.b + &constraint.b * Complex64::new(nu, 0.0);
    lu_solve(&m, &rhs)
}

const STATIONARITY_TOL: f64 = 1e-9;

/// Minimizes `objective` subject to `constraint(x) ≤ 0`.
///
/// The dual function is concave in the multiplier and its derivative is the constraint value
/// at the inner minimizer, so the multiplier is found by bisection on that value.
pub fn oracle_qcqp1(objective: &Quadratic, constraint: &Quadratic) -> Result<ConvexSolveReport> {
    let n = objective.dim();
    if constraint.dim() != n || objective.a.shape() != (n, n) || constraint.a.shape() != (n, n) {
        return Err(Error::Oracle("dimension mismatch".into()));
    }
    let solve = |nu: f64| {
        inner_minimizer(objective, constraint, nu).ok_or_else(|| Error::Oracle("singular Lagrangian Hessian".into()))
    };
    let report = |x: CVec, nu: f64, iterations: usize| {
        let g = objective.gradient(&x) + constraint.gradient(&x) * Complex64::new(nu, 0.0);
        ConvexSolveReport {
            value: objective.eval(&x),
            max_violation: constraint.eval(&x),
            iterations,
            multipliers: vec![nu],
            stationarity: g.norm(),
            solution: vec![x],
        }
    };
    let scale = constraint.c.abs().max(constraint.b.norm()).max(1.0);
    let x0 = solve(0.0)?;
    if constraint.eval(&x0) <= 0.0 {
        return Ok(report(x0, 0.0, 1));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut iterations = 1;
    loop {
        iterations += 1;
        if constraint.eval(&solve(hi)?) <= 0.0 {
            break;
        }
        lo = hi;
        hi *= 4.0;
        if hi > 1e300 {
            return Err(Error::Oracle("constraint set appears empty".into()));
        }
    }
    for _ in 0..400 {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let g = constraint.eval(&solve(mid)?);
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if g.abs() <= STATIONARITY_TOL * scale * 1e-3 || hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(report(solve(hi)?, hi, iterations))
}

/// Real symmetric `2n × 2n` form of a Hermitian matrix acting on `[Re x; Im x]`.
pub(crate) fn realify(a: &CMat) -> DMatrix<f64> {
    let n = a.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            let z = a[(r, c)];
            out[(r, c)] = z.re;
            out[(r + n, c + n)] = z.re;
            out[(r, c + n)] = -z.im;
            out[(r + n, c)] = z.im;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn identity(n: usize) -> CMat {
        CMat::identity(n, n)
    }

    #[test]
    fn inactive_constraint_gives_the_linear_solve() {
        let b = CVec::from_vec(vec![Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.0)]);
        let obj = Quadratic::new(identity(2) * Complex64::new(2.0, 0.0), b.clone(), 0.0);
        // ‖x‖² ≤ 10 does not bind at x = b/2.
        let con = Quadratic::new(identity(2), CVec::zeros(2), -10.0);
        let r = oracle_qcqp1(&obj, &con).unwrap();
        assert_eq!(r.multipliers[0], 0.0);
        assert_relative_eq!((&r.solution[0] - &b * Complex64::new(0.5, 0.0)).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn projection_onto_a_ball() {
        let b = CVec::from_vec(vec![Complex64::new(3.0, 4.0)]);
        let obj = Quadratic::new(identity(1), b, 0.0);
        let con = Quadratic::new(identity(1), CVec::zeros(1), -1.0);
        let r = oracle_qcqp1(&obj, &con).unwrap();
        assert!(r.multipliers[0] > 0.0);
        assert!(r.max_violation.abs() <= 1e-9);
        assert_relative_eq!(r.solution[0][0].re, 0.6, epsilon = 1e-9);
        assert_relative_eq!(r.solution[0][0].im, 0.8, epsilon = 1e-9);
        assert!(r.stationarity <= 1e-8);
    }

    #[test]
    fn grid_search_agrees_in_one_complex_dimension() {
        let obj = Quadratic::new(
            CMat::from_element(1, 1, Complex64::new(1.5, 0.0)),
            CVec::from_element(1, Complex64::new(2.0, -1.0)),
            0.3,
        );
        // Half-plane-like disc: 2|x|² − 2Re((1+i)*x) + 0.5 ≤ 0.
        let con = Quadratic::new(
            CMat::from_element(1, 1, Complex64::new(2.0, 0.0)),
            CVec::from_element(1, Complex64::new(1.0, 1.0)),
            0.5,
        );
        let r = oracle_qcqp1(&obj, &con).unwrap();
        let mut best = f64::INFINITY;
        let steps = 1200;
        for i in 0..=steps {
            for j in 0..=steps {
                let x = CVec::from_element(
                    1,
                    Complex64::new(-0.5 + 2.0 * i as f64 / steps as f64, -0.5 + 2.0 * j as f64 / steps as f64),
                );
                if con.eval(&x) <= 0.0 {
                    best = best.min(obj.eval(&x));
                }
            }
        }
        assert!(r.value <= best + 1e-9);
        assert!((r.value - best).abs() <= 1e-3 * best.abs().max(1.0));
    }

    #[test]
    fn empty_constraint_set_is_reported() {
        let obj = Quadratic::new(identity(1), CVec::zeros(1), 0.0);
        let con = Quadratic::new(CMat::zeros(1, 1), CVec::zeros(1), 1.0);
        assert!(oracle_qcqp1(&obj, &con).is_err());
    }

    #[test]
    fn realify_preserves_quadratic_forms() {
        let a = CMat::from_row_slice(
            2,
            2,
            &[
                Complex64::new(2.0, 0.0),
                Complex64::new(0.5, -1.0),
                Complex64::new(0.5, 1.0),
                Complex64::new(3.0, 0.0),
            ],
        );
        let x = CVec::from_vec(vec![Complex64::new(0.3, -0.7), Complex64::new(1.1, 0.4)]);
        let xr = nalgebra::DVector::from_vec(vec![0.3, 1.1, -0.7, 0.4]);
        let lhs = x.dotc(&(&a * &x)).re;
        let rhs = xr.dot(&(realify(&a) * &xr));
        assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
    }
}
