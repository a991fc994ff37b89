//! Log-barrier interior method for `min t` under convex quadratic constraints in real variables.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `xᵀQx + gᵀx + h + τ·t ≤ 0` with `Q` symmetric PSD.
#[derive(Clone, Debug)]
pub struct RealConstraint {
    pub q: DMatrix<f64>,
    pub g: DVector<f64>,
    pub h: f64,
    pub t_coef: f64,
}

impl RealConstraint {
    pub fn eval(&self, x: &DVector<f64>, t: f64) -> f64 {
        x.dot(&(&self.q * x)) + self.g.dot(x) + self.h + self.t_coef * t
    }

    fn grad_x(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.q * x * 2.0 + &self.g
    }
}

#[derive(Clone, Debug)]
pub struct BarrierResult {
    pub x: DVector<f64>,
    pub t: f64,
    pub multipliers: Vec<f64>,
    pub stationarity: f64,
    pub newton_steps: usize,
}

const MAX_NEWTON: usize = 200;

/// Minimizes `t` from a strictly feasible `(x0, t0)`; stops once the barrier gap `m/τ` is at
/// most `tol·max(|t|, floor)`.
pub fn minimize_epigraph(
    constraints: &[RealConstraint],
    x0: DVector<f64>,
    t0: f64,
    tol: f64,
    floor: f64,
) -> Result<BarrierResult> {
    let n = x0.len();
    let m = constraints.len() as f64;
    if constraints.iter().any(|c| !(c.eval(&x0, t0) < 0.0)) {
        return Err(Error::Oracle("barrier start is not strictly feasible".into()));
    }
    let mut x = x0;
    let mut t = t0;
    let mut tau = m / t0.abs().max(floor);
    let mut steps = 0;
    let phi = |x: &DVector<f64>, t: f64, tau: f64| -> f64 {
        let mut v = tau * t;
        for c in constraints {
            let s = -c.eval(x, t);
            if s <= 0.0 {
                return f64::INFINITY;
            }
            v -= s.ln();
        }
        v
    };
    loop {
        for _ in 0..MAX_NEWTON {
            let mut grad = DVector::zeros(n + 1);
            let mut hess = DMatrix::zeros(n + 1, n + 1);
            grad[n] = tau;
            for c in constraints {
                let s = -c.eval(&x, t);
                let mut dc = DVector::zeros(n + 1);
                dc.rows_mut(0, n).copy_from(&c.grad_x(&x));
                dc[n] = c.t_coef;
                grad.axpy(1.0 / s, &dc, 1.0);
                hess.ger(1.0 / (s * s), &dc, &dc, 1.0);
                let mut block = hess.view_mut((0, 0), (n, n));
                block += &c.q * (2.0 / s);
            }
            let step = match hess.clone().cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => hess
                    .clone()
                    .lu()
                    .solve(&(-&grad))
                    .ok_or_else(|| Error::Oracle("singular barrier Hessian".into()))?,
            };
            let decrement = -grad.dot(&step);
            steps += 1;
            if decrement / 2.0 <= 1e-12 {
                break;
            }
            let current = phi(&x, t, tau);
            let dx = step.rows(0, n).into_owned();
            let dt = step[n];
            let mut s = 1.0;
            loop {
                let xn = &x + &dx * s;
                let tn = t + dt * s;
                if phi(&xn, tn, tau) <= current - 0.25 * s * decrement {
                    x = xn;
                    t = tn;
                    break;
                }
                s *= 0.5;
                if s < 1e-20 {
                    break;
                }
            }
            if s < 1e-20 {
                break;
            }
        }
        if m / tau <= tol * t.abs().max(floor) {
            break;
        }
        tau *= 8.0;
        if !tau.is_finite() {
            return Err(Error::Oracle("barrier parameter overflow".into()));
        }
    }
    let multipliers: Vec<f64> = constraints.iter().map(|c| 1.0 / (tau * -c.eval(&x, t))).collect();
    let mut residual = DVector::zeros(n + 1);
    residual[n] = 1.0;
    for (c, l) in constraints.iter().zip(&multipliers) {
        residual.rows_mut(0, n).axpy(*l, &c.grad_x(&x), 1.0);
        residual[n] += l * c.t_coef;
    }
    Ok(BarrierResult {
        x,
        t,
        multipliers,
        stationarity: residual.norm(),
        newton_steps: steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn smallest_enclosing_bound_of_two_discs() {
        // min t s.t. (x−1)² ≤ t and (x+3)² ≤ t: optimum at x = −1, t = 4.
        let c1 = RealConstraint {
            q: DMatrix::from_element(1, 1, 1.0),
            g: DVector::from_element(1, -2.0),
            h: 1.0,
            t_coef: -1.0,
        };
        let c2 = RealConstraint {
            q: DMatrix::from_element(1, 1, 1.0),
            g: DVector::from_element(1, 6.0),
            h: 9.0,
            t_coef: -1.0,
        };
        let r = minimize_epigraph(&[c1, c2], DVector::from_element(1, 0.5), 20.0, 1e-10, 1e-12).unwrap();
        assert_relative_eq!(r.t, 4.0, epsilon = 1e-8);
        assert_relative_eq!(r.x[0], -1.0, epsilon = 1e-4);
        assert_relative_eq!(r.multipliers.iter().sum::<f64>(), 1.0, epsilon = 1e-6);
        assert!(r.stationarity <= 1e-6);
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let c = RealConstraint {
            q: DMatrix::from_element(1, 1, 1.0),
            g: DVector::zeros(1),
            h: 0.0,
            t_coef: -1.0,
        };
        assert!(minimize_epigraph(&[c], DVector::from_element(1, 2.0), 1.0, 1e-9, 1e-12).is_err());
    }
}
