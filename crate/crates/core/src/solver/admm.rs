//! Inner ADMM layer: solves the convexified reduced problem around an expansion point `u`.
//!
//! Splitting: `d_{u,s} = a_sᴴf_{s,u}` (scaled duals `q`) and `v = t` (scaled dual `z`).
//! The first block updates `(d, t)`, the second block updates `(a, v)` jointly under the
//! per-BS power constraints, then the duals ascend.

use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;

use super::reduced::{ReducedProblem, Weights};
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, HermitianFactor};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmmSettings {
    pub rho: f64,
    /// Stop once the largest relative change of any `a_s` is at most `tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative accuracy of the power-vs-`v` match in the multiplier searches.
    pub tol_bisect: f64,
    /// Price `κ` of a nonnegative slack on each convexified SINR constraint; infinite means
    /// no slack. Only the feasible-start search uses a finite value.
    pub slack_penalty: f64,
}

impl Default for AdmmSettings {
    fn default() -> Self {
        Self {
            rho: 0.01,
            tol: 1e-3,
            max_iter: 2000,
            tol_bisect: 1e-8,
            slack_penalty: f64::INFINITY,
        }
    }
}

/// Iterates of the inner ADMM.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmmState {
    pub a: Weights,
    /// Expansion point of the convexified constraints.
    pub u: Weights,
    /// `d[user][stream]`.
    pub d: Vec<CVec>,
    pub q: Vec<CVec>,
    pub v: f64,
    pub t: f64,
    pub z: f64,
    pub rho: f64,
}

impl AdmmState {
    /// Warm start at the expansion point: `a = u`, zero `q`, `z = 1/ρ`, `v = t = ` power of `u`.
    pub fn new(problem: &ReducedProblem, u: &[CVec], rho: f64) -> Self {
        let t = problem.max_power_margin(u);
        let d = problem.projections(u);
        let q = d.iter().map(|x| CVec::zeros(x.len())).collect();
        Self {
            a: u.to_vec(),
            u: u.to_vec(),
            d,
            q,
            v: t,
            t,
            z: 1.0 / rho,
            rho,
        }
    }
}

/// Minimizer of the `d`-subproblem for one user and its multiplier.
#[derive(Clone, Debug, PartialEq)]
pub struct DUpdate {
    pub d: CVec,
    pub nu: f64,
    /// Constraint value at the returned multiplier (≤ 0 up to roundoff).
    pub constraint: f64,
}

/// Scalars defining one user's `d`-subproblem.
#[derive(Clone, Debug, PartialEq)]
pub struct DProblem {
    /// Projections of `a` minus `q`: the unconstrained minimizer. Every entry other than
    /// `serving` counts as interference.
    pub e1: CVec,
    /// `|u_sᴴf|² + γσ²`.
    pub e2: f64,
    /// `u_sᴴf_{s,u}` for the serving stream.
    pub e3: Complex64,
    pub serving: usize,
    pub gamma: f64,
    /// Upper bound on the multiplier; a finite cap turns the constraint into a priced slack.
    pub nu_cap: f64,
}

impl DProblem {
    pub fn new(state: &AdmmState, problem: &ReducedProblem, user: usize) -> Self {
        let s = problem.serving[user];
        let f = &problem.streams[s].f[user];
        let e3 = state.u[s].dotc(f);
        let gamma = problem.sinr_target[user];
        let e1 = problem.user_projections(&state.a, user) - &state.q[user];
        Self {
            e1,
            e2: e3.norm_sqr() + gamma * problem.noise[user],
            e3,
            serving: s,
            gamma,
            nu_cap: f64::INFINITY,
        }
    }

    /// Prices violations at `κ` per unit instead of forbidding them (`ν ≤ 2κ/ρ`).
    pub fn with_slack(mut self, penalty: f64, rho: f64) -> Self {
        self.nu_cap = 2.0 * penalty / rho;
        self
    }

    fn interference(&self) -> f64 {
        self.e1
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != self.serving)
            .map(|(_, z)| z.norm_sqr())
            .sum()
    }

    /// Constraint value at the minimizer for multiplier `nu`; strictly decreasing.
    pub fn constraint(&self, nu: f64) -> f64 {
        let g = self.gamma;
        let scale = 1.0 + nu * g;
        self.e2 + g * self.interference() / (scale * scale)
            - 2.0 * (self.e1[self.serving] * self.e3.conj()).re
            - 2.0 * nu * self.e3.norm_sqr()
    }

    fn derivative(&self, nu: f64) -> f64 {
        let g = self.gamma;
        let scale = 1.0 + nu * g;
        -2.0 * g * g * self.interference() / (scale * scale * scale) - 2.0 * self.e3.norm_sqr()
    }

    pub fn minimizer(&self, nu: f64) -> CVec {
        let mut d = self.e1.map(|z| z / (1.0 + nu * self.gamma));
        d[self.serving] = self.e1[self.serving] + self.e3 * nu;
        d
    }

    /// `Σ|d − e1|²`, the subproblem objective.
    pub fn objective(&self, d: &CVec) -> f64 {
        (d - &self.e1).norm_squared()
    }

    /// Multiplier root by safeguarded Newton on a bracket grown from `[0, 1]`.
    pub fn solve(&self, user: usize) -> Result<DUpdate> {
        let f0 = self.constraint(0.0);
        if f0 <= 0.0 {
            return Ok(DUpdate {
                d: self.e1.clone(),
                nu: 0.0,
                constraint: f0,
            });
        }
        if self.nu_cap.is_finite() && self.constraint(self.nu_cap) >= 0.0 {
            return Ok(DUpdate {
                d: self.minimizer(self.nu_cap),
                nu: self.nu_cap,
                constraint: self.constraint(self.nu_cap),
            });
        }
        let mut lo = 0.0;
        let mut hi = 1.0f64.min(self.nu_cap);
        let mut grown = 0;
        while self.constraint(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            grown += 1;
            if grown > 1100 || !hi.is_finite() {
                return Err(Error::RootNotBracketed { user });
            }
        }
        let mut nu = 0.5 * (lo + hi);
        for _ in 0..200 {
            let f = self.constraint(nu);
            if f > 0.0 {
                lo = nu;
            } else {
                hi = nu;
            }
            if hi - lo <= 1e-15 * hi.max(1e-300) || f.abs() <= 1e-14 * self.e2 {
                break;
            }
            let step = nu - f / self.derivative(nu);
            nu = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        }
        // Newton approaches the root from the infeasible side; accept roundoff-level
        // violations and otherwise fall back to the feasible end of the bracket.
        let f = self.constraint(nu);
        let nu = if f > 1e-13 * self.e2.max(1.0) { hi } else { nu };
        Ok(DUpdate {
            d: self.minimizer(nu),
            nu,
            constraint: self.constraint(nu),
        })
    }
}

/// `d`-update for one user: projection of `aᴴf − q` onto the user's convexified SINR set.
pub fn d_update(state: &AdmmState, problem: &ReducedProblem, user: usize) -> Result<DUpdate> {
    DProblem::new(state, problem, user).solve(user)
}

/// `v = max(max_i power_i(a), t − z)`.
pub fn v_update(state: &AdmmState, problem: &ReducedProblem) -> f64 {
    problem.max_power_margin(&state.a).max(state.t - state.z)
}

/// `t = v + z − 1/ρ`.
pub fn t_update(state: &AdmmState) -> f64 {
    state.v + state.z - 1.0 / state.rho
}

/// Scaled dual ascent on `d = aᴴf` and `v = t`.
pub fn dual_update(state: &mut AdmmState, problem: &ReducedProblem) {
    let proj = problem.projections(&state.a);
    for (u, p) in proj.iter().enumerate() {
        state.q[u] += &state.d[u] - p;
    }
    state.z += state.v - state.t;
}

/// Primal residuals `max|d − aᴴf|` and `|v − t|`.
pub fn primal_residuals(state: &AdmmState, problem: &ReducedProblem) -> (f64, f64) {
    let proj = problem.projections(&state.a);
    let rd = proj
        .iter()
        .zip(&state.d)
        .flat_map(|(p, d)| (d - p).iter().map(|z| z.norm()).collect::<Vec<_>>())
        .fold(0.0, f64::max);
    (rd, (state.v - state.t).abs())
}

/// Per-stream factorization reused by every `a`-update:
/// `F = Σ_u f_uf_uᴴ = LLᴴ`, `L⁻¹·gram·L⁻ᴴ = VΛVᴴ`.
#[derive(Clone, Debug)]
pub struct StreamSystem {
    l: CMat,
    factor: HermitianFactor,
    basis: CMat,
    eig: DVector<f64>,
}

impl StreamSystem {
    pub fn new(problem: &ReducedProblem, stream: usize) -> Result<Self> {
        let st = &problem.streams[stream];
        let n = st.dim();
        let mut f_sum = CMat::zeros(n, n);
        let one = Complex64::new(1.0, 0.0);
        for (u, f) in st.f.iter().enumerate() {
            f_sum.gerc(one, f, f, one);
            for v in st.error_directions(u) {
                f_sum.gerc(one, v, v, one);
            }
        }
        crate::linalg::hermitize(&mut f_sum);
        let factor = HermitianFactor::new(&f_sum).ok_or(Error::SingularWeights { bs: st.cell })?;
        let l = factor.l();
        let linv_gram = l.solve_lower_triangular(&st.gram).ok_or(Error::SingularWeights { bs: st.cell })?;
        let mut c = l
            .solve_lower_triangular(&linv_gram.adjoint())
            .ok_or(Error::SingularWeights { bs: st.cell })?
            .adjoint();
        crate::linalg::hermitize(&mut c);
        let se = SymmetricEigen::new(c);
        let eig = se.eigenvalues.map(|x| x.max(0.0));
        Ok(Self {
            l,
            factor,
            basis: se.eigenvectors,
            eig,
        })
    }

    /// Coordinates `c = VᴴL⁻¹b` of a right-hand side.
    fn coords(&self, b: &CVec) -> CVec {
        let y = self.l.solve_lower_triangular(b).expect("factor is nonsingular");
        self.basis.adjoint() * y
    }

    /// `aᴴ·gram·a` at multiplier `lt` (power budget `p`).
    fn gram_energy(&self, c: &CVec, lt: f64, p: f64) -> f64 {
        c.iter()
            .zip(self.eig.iter())
            .map(|(ck, &lk)| {
                let den = 1.0 + lt * lk / p;
                ck.norm_sqr() * lk / (den * den)
            })
            .sum()
    }

    fn weights(&self, c: &CVec, lt: f64, p: f64) -> CVec {
        let scaled = CVec::from_iterator(
            c.len(),
            c.iter().zip(self.eig.iter()).map(|(ck, &lk)| ck / (1.0 + lt * lk / p)),
        );
        let y = &self.basis * scaled;
        self.l.adjoint().solve_upper_triangular(&y).expect("factor is nonsingular")
    }

    /// Direct solve of `F a = b` (the λ̃ = 0 case).
    pub fn unconstrained(&self, b: &CVec) -> CVec {
        self.factor.solve(b)
    }
}

/// Factorizations for every stream of a problem.
#[derive(Clone, Debug)]
pub struct PreparedProblem {
    pub systems: Vec<StreamSystem>,
}

impl PreparedProblem {
    pub fn new(problem: &ReducedProblem) -> Result<Self> {
        let systems = (0..problem.num_streams())
            .map(|s| StreamSystem::new(problem, s))
            .collect::<Result<_>>()?;
        Ok(Self { systems })
    }
}

/// Right-hand side `Σ_u conj(d_{u,s} + q_{u,s})·f_{s,u}` of a stream's normal equations,
/// plus the same terms for the error directions.
fn rhs(state: &AdmmState, problem: &ReducedProblem, stream: usize) -> CVec {
    let st = &problem.streams[stream];
    let one = Complex64::new(1.0, 0.0);
    let mut b = CVec::zeros(st.dim());
    for u in 0..problem.num_users() {
        let y = |k: usize| (state.d[u][k] + state.q[u][k]).conj();
        b.axpy(y(stream), &st.f[u], one);
        let counts = problem.error_counts(u);
        let offset = problem.num_streams() + counts[..stream].iter().sum::<usize>();
        for (k, v) in st.error_directions(u).iter().enumerate() {
            b.axpy(y(offset + k), v, one);
        }
    }
    b
}

/// Result of one BS's `a`-update.
#[derive(Clone, Debug, PartialEq)]
pub struct AUpdate {
    /// New weights for the BS's streams, in stream order.
    pub a: Vec<CVec>,
    /// Power multiplier λ̃ (0 when the power cap is inactive, ∞ when `v ≤ 0`).
    pub lambda_tilde: f64,
    /// `(1/p)·Σ aᴴ·gram·a` at the returned weights.
    pub power: f64,
}

struct BsCoords {
    streams: Vec<usize>,
    coords: Vec<CVec>,
    budget: f64,
}

impl BsCoords {
    fn power(&self, prepared: &PreparedProblem, lt: f64) -> f64 {
        self.streams
            .iter()
            .zip(&self.coords)
            .map(|(&s, c)| prepared.systems[s].gram_energy(c, lt, self.budget))
            .sum::<f64>()
            / self.budget
    }

    /// Smallest λ̃ ≥ 0 with power(λ̃) ≤ v.
    fn multiplier(&self, prepared: &PreparedProblem, v: f64, tol: f64) -> f64 {
        if v <= 0.0 {
            return f64::INFINITY;
        }
        if self.power(prepared, 0.0) <= v {
            return 0.0;
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.power(prepared, hi) > v {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return f64::INFINITY;
            }
        }
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            let p = self.power(prepared, mid);
            if p > v {
                lo = mid;
            } else {
                hi = mid;
                if v - p <= tol * v {
                    break;
                }
            }
            if hi - lo <= 1e-16 * hi {
                break;
            }
        }
        hi
    }

    fn weights(&self, prepared: &PreparedProblem, lt: f64) -> Vec<CVec> {
        self.streams
            .iter()
            .zip(&self.coords)
            .map(|(&s, c)| {
                if lt.is_infinite() {
                    CVec::zeros(c.len())
                } else {
                    prepared.systems[s].weights(c, lt, self.budget)
                }
            })
            .collect()
    }
}

fn bs_coords(state: &AdmmState, problem: &ReducedProblem, prepared: &PreparedProblem, bs: usize) -> BsCoords {
    let streams: Vec<usize> = problem.cell_streams(bs).collect();
    let coords = streams
        .iter()
        .map(|&s| prepared.systems[s].coords(&rhs(state, problem, s)))
        .collect();
    BsCoords {
        streams,
        coords,
        budget: problem.power_budget[bs],
    }
}

/// `a`-update of one BS at the current `v`, reusing prepared factorizations.
pub fn a_update_prepared(
    state: &AdmmState,
    problem: &ReducedProblem,
    prepared: &PreparedProblem,
    bs: usize,
    tol_bisect: f64,
) -> AUpdate {
    let coords = bs_coords(state, problem, prepared, bs);
    let lt = coords.multiplier(prepared, state.v, tol_bisect);
    let a = coords.weights(prepared, lt);
    let power = if lt.is_infinite() { 0.0 } else { coords.power(prepared, lt) };
    AUpdate {
        a,
        lambda_tilde: lt,
        power,
    }
}

/// `a_i = ((λ̃/p_i)·gram + Σ ffᴴ)⁻¹ Σ conj(d + q)·f` with λ̃ chosen so that the power cap `v` holds.
pub fn a_update(state: &AdmmState, problem: &ReducedProblem, bs: usize, tol_bisect: f64) -> Result<AUpdate> {
    let prepared = PreparedProblem::new(problem)?;
    Ok(a_update_prepared(state, problem, &prepared, bs, tol_bisect))
}

/// Joint minimization over `(a, v)` given `d`, `q`, `t`, `z`.
///
/// When `t − z` already covers the unconstrained powers, `v = t − z`; otherwise `v` solves
/// `(v − t + z) = ½·Σ_i λ̃_i(v)` by bisection.
pub fn av_update(state: &mut AdmmState, problem: &ReducedProblem, prepared: &PreparedProblem, tol_bisect: f64) {
    let coords: Vec<BsCoords> = (0..problem.num_cells)
        .map(|bs| bs_coords(state, problem, prepared, bs))
        .collect();
    let free_max = coords.iter().map(|c| c.power(prepared, 0.0)).fold(0.0, f64::max);
    let target = state.t - state.z;
    let v = if target >= free_max {
        target
    } else {
        let gap = |v: f64| {
            let pull: f64 = coords.iter().map(|c| c.multiplier(prepared, v, tol_bisect * 1e-3)).sum();
            (v - target) - 0.5 * pull
        };
        let mut lo = 0.0;
        let mut hi = free_max;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if gap(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-14 * hi {
                break;
            }
        }
        hi
    };
    state.v = v;
    let mut a = vec![CVec::zeros(0); problem.num_streams()];
    for c in &coords {
        let lt = c.multiplier(prepared, v, tol_bisect);
        for (s, w) in c.streams.iter().zip(c.weights(prepared, lt)) {
            a[*s] = w;
        }
    }
    state.a = a;
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdmmTrace {
    /// `max_s ‖a_s^(l+1) − a_s^(l)‖/‖a_s^(l)‖`.
    pub rel_diff: Vec<f64>,
    pub residual_d: Vec<f64>,
    pub residual_v: Vec<f64>,
    pub objective: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct AdmmOutcome {
    pub state: AdmmState,
    pub trace: AdmmTrace,
    pub converged: bool,
}

impl AdmmOutcome {
    pub fn iterations(&self) -> usize {
        self.trace.rel_diff.len()
    }
}

fn relative_change(new: &[CVec], old: &[CVec]) -> f64 {
    new.iter()
        .zip(old)
        .map(|(n, o)| {
            let base = o.norm();
            let diff = (n - o).norm();
            if base > 0.0 {
                diff / base
            } else if diff > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// One full ADMM sweep: `(d, t)`, then `(a, v)`, then the duals.
pub fn admm_step(state: &mut AdmmState, problem: &ReducedProblem, prepared: &PreparedProblem, settings: &AdmmSettings) -> Result<()> {
    let d: Vec<CVec> = (0..problem.num_users())
        .map(|u| {
            let mut dp = DProblem::new(state, problem, u);
            if settings.slack_penalty.is_finite() {
                dp = dp.with_slack(settings.slack_penalty, state.rho);
            }
            dp.solve(u).map(|r| r.d)
        })
        .collect::<Result<_>>()?;
    state.d = d;
    state.t = t_update(state);
    av_update(state, problem, prepared, settings.tol_bisect);
    dual_update(state, problem);
    Ok(())
}

/// Solves the convexified problem around `u` with the given (noise-normalized) problem.
pub fn admm_solve_prepared(
    problem: &ReducedProblem,
    prepared: &PreparedProblem,
    u: &[CVec],
    settings: &AdmmSettings,
) -> Result<AdmmOutcome> {
    let mut state = AdmmState::new(problem, u, settings.rho);
    let mut trace = AdmmTrace::default();
    let mut converged = false;
    for _ in 0..settings.max_iter {
        let prev = state.a.clone();
        admm_step(&mut state, problem, prepared, settings)?;
        let diff = relative_change(&state.a, &prev);
        let (rd, rv) = primal_residuals(&state, problem);
        trace.rel_diff.push(diff);
        trace.residual_d.push(rd);
        trace.residual_v.push(rv);
        trace.objective.push(state.t);
        if diff <= settings.tol && rd <= 10.0 * settings.tol && rv <= 10.0 * settings.tol * state.v.abs().min(1.0) {
            converged = true;
            break;
        }
    }
    Ok(AdmmOutcome { state, trace, converged })
}

/// Copy of `problem` whose power margins are divided by `scale`.
pub fn with_objective_scale(problem: &ReducedProblem, scale: f64) -> ReducedProblem {
    let mut out = problem.clone();
    for p in &mut out.power_budget {
        *p *= scale;
    }
    out
}

/// Solves the convexified reduced problem around `u`.
///
/// ADMM is not scale invariant, so the solve runs on a copy with unit noise and with the
/// objective measured relative to the power margin of `u`. The returned state is mapped back
/// to the units of `problem`.
pub fn admm_solve_subproblem(problem: &ReducedProblem, u: &[CVec], settings: &AdmmSettings) -> Result<AdmmOutcome> {
    let scale = problem.max_power_margin(u);
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Infeasible {
            best_slack: problem.min_sinr_slack(u),
        });
    }
    let normalized = with_objective_scale(&problem.normalized(), scale);
    let prepared = PreparedProblem::new(&normalized)?;
    let mut out = admm_solve_prepared(&normalized, &prepared, u, settings)?;
    for (user, (d, q)) in out.state.d.iter_mut().zip(out.state.q.iter_mut()).enumerate() {
        let s = Complex64::new(problem.noise[user].sqrt(), 0.0);
        *d *= s;
        *q *= s;
    }
    out.state.t *= scale;
    out.state.v *= scale;
    out.state.z *= scale;
    for x in out.trace.objective.iter_mut().chain(out.trace.residual_v.iter_mut()) {
        *x *= scale;
    }
    Ok(out)
}

/// Objective and worst constraint value of the convexified problem at `a`.
pub fn convexified_violation(problem: &ReducedProblem, u: &[CVec], a: &[CVec]) -> f64 {
    let proj = problem.projections(a);
    let mut worst = f64::NEG_INFINITY;
    for (user, p) in proj.iter().enumerate() {
        let s = problem.serving[user];
        let gamma = problem.sinr_target[user];
        let e3 = u[s].dotc(&problem.streams[s].f[user]);
        let interference: f64 = p.iter().enumerate().filter(|(j, _)| *j != s).map(|(_, z)| z.norm_sqr()).sum();
        let value = gamma * interference - 2.0 * (p[s] * e3.conj()).re + e3.norm_sqr() + gamma * problem.noise[user];
        worst = worst.max(value / (gamma * problem.noise[user]));
    }
    worst
}
