//! Convexified max-power-margin subproblems solved by the barrier method, and a
//! full-dimension SCA loop built on them.

use nalgebra::DVector;
use num_complex::Complex64;

use super::barrier::{minimize_epigraph, RealConstraint};
use super::qcqp::{realify, ConvexSolveReport};
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};
use crate::network::{ChannelSet, NetworkConfig};
use crate::solver::{BeamformerSet, ReducedProblem};

/// Expansion point: one complex vector per stream.
pub type SurrogatePoint = Vec<CVec>;

#[derive(Clone, Debug, PartialEq)]
pub struct SurrogateStream {
    pub cell: usize,
    /// Power is `xᴴ·gram·x`.
    pub gram: CMat,
    /// Effective channel per user; the received amplitude is `xᴴf`.
    pub f: Vec<CVec>,
    /// Per user, extra interference directions (estimation error); may be empty.
    pub err: Vec<Vec<CVec>>,
}

impl SurrogateStream {
    fn errors(&self, user: usize) -> &[CVec] {
        self.err.get(user).map_or(&[], |v| v.as_slice())
    }
}

/// Generic multicast max-power-margin problem.
#[derive(Clone, Debug, PartialEq)]
pub struct SurrogateProblem {
    pub num_cells: usize,
    pub streams: Vec<SurrogateStream>,
    pub power_budget: Vec<f64>,
    pub sinr_target: Vec<f64>,
    pub noise: Vec<f64>,
    pub serving: Vec<usize>,
}

impl SurrogateProblem {
    /// Variables are the reduced weights.
    pub fn from_reduced(problem: &ReducedProblem) -> Self {
        Self {
            num_cells: problem.num_cells,
            streams: problem
                .streams
                .iter()
                .map(|s| SurrogateStream {
                    cell: s.cell,
                    gram: s.gram.clone(),
                    f: s.f.clone(),
                    err: s.err.clone(),
                })
                .collect(),
            power_budget: problem.power_budget.clone(),
            sinr_target: problem.sinr_target.clone(),
            noise: problem.noise.clone(),
            serving: problem.serving.clone(),
        }
    }

    /// Variables are the `M`-dimensional beamformers themselves (perfect CSI).
    pub fn full_dimension(channels: &ChannelSet, config: &NetworkConfig) -> Self {
        let m = channels.antennas;
        let streams = (0..config.num_streams())
            .map(|s| {
                let cell = config.stream_cell(s);
                SurrogateStream {
                    cell,
                    gram: CMat::identity(m, m),
                    f: channels.h[cell].clone(),
                    err: Vec::new(),
                }
            })
            .collect();
        Self {
            num_cells: config.num_cells,
            streams,
            power_budget: config.power_budget.clone(),
            sinr_target: config.sinr_target.clone(),
            noise: channels.background.iter().map(|b| config.noise_power + b).collect(),
            serving: (0..config.num_users()).map(|u| config.serving_stream(u)).collect(),
        }
    }

    pub fn num_users(&self) -> usize {
        self.serving.len()
    }

    fn offsets(&self) -> (Vec<usize>, usize) {
        let mut offsets = Vec::with_capacity(self.streams.len());
        let mut n = 0;
        for s in &self.streams {
            offsets.push(n);
            n += s.gram.nrows();
        }
        (offsets, n)
    }

    pub fn max_power_margin(&self, x: &[CVec]) -> f64 {
        let mut power = vec![0.0; self.num_cells];
        for (s, xs) in self.streams.iter().zip(x) {
            power[s.cell] += xs.dotc(&(&s.gram * xs)).re;
        }
        power
            .iter()
            .zip(&self.power_budget)
            .map(|(p, b)| p / b)
            .fold(0.0, f64::max)
    }

    /// `(signal, interference)` per user.
    fn budget(&self, x: &[CVec]) -> (Vec<f64>, Vec<f64>) {
        let mut signal = vec![0.0; self.num_users()];
        let mut interference = vec![0.0; self.num_users()];
        for u in 0..self.num_users() {
            for (j, (s, xs)) in self.streams.iter().zip(x).enumerate() {
                let p = xs.dotc(&s.f[u]).norm_sqr();
                if j == self.serving[u] {
                    signal[u] = p;
                } else {
                    interference[u] += p;
                }
                interference[u] += s.errors(u).iter().map(|v| xs.dotc(v).norm_sqr()).sum::<f64>();
            }
        }
        (signal, interference)
    }

    pub fn sinr(&self, x: &[CVec]) -> Vec<f64> {
        let (s, i) = self.budget(x);
        (0..self.num_users()).map(|u| s[u] / (i[u] + self.noise[u])).collect()
    }

    /// Common scaling that makes the tightest SINR constraint hold with equality.
    pub fn scale_to_feasible(&self, x: &[CVec]) -> Option<SurrogatePoint> {
        let (s, i) = self.budget(x);
        let mut c2 = 0.0f64;
        for u in 0..self.num_users() {
            let g = self.sinr_target[u];
            let margin = s[u] - g * i[u];
            if !(margin > 0.0) {
                return None;
            }
            c2 = c2.max(g * self.noise[u] / margin);
        }
        let c = Complex64::new(c2.sqrt(), 0.0);
        Some(x.iter().map(|v| v * c).collect())
    }

    /// Convexified SINR constraints around `point`, each divided by `γ·noise`, as complex
    /// quadratics over the stacked variable `[x_1; …; x_S]`.
    fn sinr_quadratics(&self, point: &[CVec]) -> Vec<(CMat, CVec, f64)> {
        let (offsets, n) = self.offsets();
        (0..self.num_users())
            .map(|u| {
                let g = self.sinr_target[u];
                let norm = g * self.noise[u];
                let mut a = CMat::zeros(n, n);
                let mut b = CVec::zeros(n);
                let serving = self.serving[u];
                for (j, s) in self.streams.iter().enumerate() {
                    let dim = s.gram.nrows();
                    let f = &s.f[u];
                    let mut block = CMat::zeros(dim, dim);
                    if j == serving {
                        let x0 = point[j].dotc(f);
                        b.rows_mut(offsets[j], dim).copy_from(&(f * (x0.conj() / norm)));
                    } else {
                        block += f * f.adjoint();
                    }
                    for v in s.errors(u) {
                        block += v * v.adjoint();
                    }
                    a.view_mut((offsets[j], offsets[j]), (dim, dim))
                        .copy_from(&(block * Complex64::new(g / norm, 0.0)));
                }
                let x0 = point[serving].dotc(&self.streams[serving].f[u]);
                (a, b, (x0.norm_sqr() + norm) / norm)
            })
            .collect()
    }

    /// Per-BS power constraints `xᴴPx/p_i − t ≤ 0`.
    fn power_quadratics(&self) -> Vec<CMat> {
        let (offsets, n) = self.offsets();
        (0..self.num_cells)
            .map(|cell| {
                let mut a = CMat::zeros(n, n);
                for (j, s) in self.streams.iter().enumerate() {
                    if s.cell == cell {
                        let dim = s.gram.nrows();
                        a.view_mut((offsets[j], offsets[j]), (dim, dim))
                            .copy_from(&(&s.gram / Complex64::new(self.power_budget[cell], 0.0)));
                    }
                }
                a
            })
            .collect()
    }
}

fn stack(x: &[CVec]) -> DVector<f64> {
    let n: usize = x.iter().map(|v| v.len()).sum();
    let mut out = DVector::zeros(2 * n);
    let mut k = 0;
    for v in x {
        for z in v.iter() {
            out[k] = z.re;
            out[k + n] = z.im;
            k += 1;
        }
    }
    out
}

fn unstack(x: &DVector<f64>, dims: &[usize]) -> Vec<CVec> {
    let n = x.len() / 2;
    let mut k = 0;
    dims.iter()
        .map(|&d| {
            let v = CVec::from_iterator(d, (0..d).map(|i| Complex64::new(x[k + i], x[k + i + n])));
            k += d;
            v
        })
        .collect()
}

fn to_real(a: &CMat, b: &CVec, c: f64, t_coef: f64) -> RealConstraint {
    let n = b.len();
    let mut g = DVector::zeros(2 * n);
    for i in 0..n {
        g[i] = -2.0 * b[i].re;
        g[i + n] = -2.0 * b[i].im;
    }
    RealConstraint {
        q: realify(a),
        g,
        h: c,
        t_coef,
    }
}

const BARRIER_TOL: f64 = 1e-9;
const START_SCALES: [f64; 8] = [1.01, 1.03, 1.1, 1.2, 1.5, 2.0, 3.0, 5.0];

/// Solves the convexified problem around `point` (which must meet every SINR target).
pub fn oracle_sca_subproblem(problem: &SurrogateProblem, point: &[CVec]) -> Result<ConvexSolveReport> {
    if point.len() != problem.streams.len()
        || point.iter().zip(&problem.streams).any(|(x, s)| x.len() != s.gram.nrows())
    {
        return Err(Error::Oracle("expansion point shape mismatch".into()));
    }
    let sinr = problem.sinr_quadratics(point);
    let power = problem.power_quadratics();
    let mut constraints: Vec<RealConstraint> = sinr.iter().map(|(a, b, c)| to_real(a, b, *c, 0.0)).collect();
    let n = constraints[0].g.len() / 2;
    constraints.extend(power.iter().map(|a| to_real(a, &CVec::zeros(n), 0.0, -1.0)));
    let num_sinr = sinr.len();

    // Inflating a feasible point moves it into the interior of every convexified SINR set.
    let base = stack(point);
    let mut best: Option<(f64, DVector<f64>)> = None;
    for c in START_SCALES {
        let x = &base * c;
        let worst = constraints[..num_sinr].iter().map(|k| k.eval(&x, 0.0)).fold(f64::NEG_INFINITY, f64::max);
        if best.as_ref().is_none_or(|(w, _)| worst < *w) {
            best = Some((worst, x));
        }
    }
    let (worst, x0) = best.expect("at least one start scale");
    if !(worst < 0.0) {
        return Err(Error::Infeasible { best_slack: -worst });
    }
    let dims: Vec<usize> = problem.streams.iter().map(|s| s.gram.nrows()).collect();
    let start = unstack(&x0, &dims);
    let t0 = 1.5 * problem.max_power_margin(&start) + 1e-300;
    let floor = 1e-12 * t0;
    let r = minimize_epigraph(&constraints, x0, t0, BARRIER_TOL, floor)?;
    let solution = unstack(&r.x, &dims);
    let max_violation = constraints
        .iter()
        .map(|k| k.eval(&r.x, r.t))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ConvexSolveReport {
        value: r.t,
        solution,
        max_violation,
        iterations: r.newton_steps,
        multipliers: r.multipliers,
        stationarity: r.stationarity,
    })
}

/// Zero-forcing start: each stream's beamformer is the sum of its users' channels projected
/// onto the null space of every other user's channel from that BS, scaled to feasibility.
pub fn zero_forcing_init(channels: &ChannelSet, config: &NetworkConfig) -> Result<SurrogatePoint> {
    let m = channels.antennas;
    let users = config.num_users();
    let mut w = Vec::with_capacity(config.num_streams());
    for s in 0..config.num_streams() {
        let cell = config.stream_cell(s);
        let own = config.stream_users(s);
        let others: Vec<&CVec> = (0..users).filter(|u| !own.contains(u)).map(|u| &channels.h[cell][u]).collect();
        if others.len() >= m {
            return Err(Error::Oracle("zero forcing needs more antennas than interfered users".into()));
        }
        let mut target = CVec::zeros(m);
        for u in own {
            target += &channels.h[cell][u];
        }
        if !others.is_empty() {
            let mut h = CMat::zeros(m, others.len());
            for (c, v) in others.iter().enumerate() {
                h.set_column(c, v);
            }
            let gram = h.adjoint() * &h;
            let coeff = gram
                .lu()
                .solve(&(h.adjoint() * &target))
                .ok_or_else(|| Error::Oracle("interfered channels are linearly dependent".into()))?;
            target -= &h * coeff;
        }
        w.push(target);
    }
    SurrogateProblem::full_dimension(channels, config)
        .scale_to_feasible(&w)
        .ok_or_else(|| Error::Oracle("zero-forcing start has a null stream".into()))
}

/// Full-dimension SCA from a feasible `init`; returns the beamformers and their max power margin.
pub fn oracle_direct_sca(
    channels: &ChannelSet,
    config: &NetworkConfig,
    init: &[CVec],
    tol: f64,
) -> Result<(BeamformerSet, f64)> {
    const MAX_OUTER: usize = 100;
    let problem = SurrogateProblem::full_dimension(channels, config);
    let mut z = problem
        .scale_to_feasible(init)
        .ok_or(Error::Infeasible { best_slack: f64::NEG_INFINITY })?;
    let mut objective = problem.max_power_margin(&z);
    for _ in 0..MAX_OUTER {
        let r = oracle_sca_subproblem(&problem, &z)?;
        let Some(next) = problem.scale_to_feasible(&r.solution) else {
            break;
        };
        let value = problem.max_power_margin(&next);
        let change = next
            .iter()
            .zip(&z)
            .map(|(a, b)| (a - b).norm() / b.norm().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        let decrease = objective - value;
        z = next;
        objective = value;
        if change <= tol || decrease <= tol * objective {
            break;
        }
    }
    let stream_cell = (0..config.num_streams()).map(|s| config.stream_cell(s)).collect();
    Ok((BeamformerSet { w: z, stream_cell }, objective))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{generate_channels, generate_layout};
    use approx::assert_relative_eq;

    #[test]
    fn single_user_matches_the_closed_form() {
        for seed in 0..5 {
            let cfg = NetworkConfig::uniform(1, 1, 4);
            let ch = generate_channels(&cfg, &generate_layout(&cfg, seed), seed).unwrap();
            let problem = SurrogateProblem::full_dimension(&ch, &cfg);
            let h = &ch.h[0][0];
            let start = problem.scale_to_feasible(std::slice::from_ref(h)).unwrap();
            let r = oracle_sca_subproblem(&problem, &start).unwrap();
            let exact = cfg.sinr_target[0] * problem.noise[0] / (h.norm_squared() * cfg.power_budget[0]);
            assert_relative_eq!(r.value, exact, max_relative = 1e-6);
            assert!(r.max_violation <= 1e-9);
        }
    }

    #[test]
    fn zero_forcing_start_is_feasible_and_interference_free() {
        let cfg = NetworkConfig::uniform(2, 2, 8);
        let ch = generate_channels(&cfg, &generate_layout(&cfg, 3), 3).unwrap();
        let w = zero_forcing_init(&ch, &cfg).unwrap();
        let problem = SurrogateProblem::full_dimension(&ch, &cfg);
        let sinr = problem.sinr(&w);
        assert!(sinr.iter().zip(&cfg.sinr_target).all(|(s, g)| *s >= g * (1.0 - 1e-9)));
        for s in 0..cfg.num_streams() {
            let cell = cfg.stream_cell(s);
            for u in (0..cfg.num_users()).filter(|u| !cfg.stream_users(s).contains(u)) {
                assert!(w[s].dotc(&ch.h[cell][u]).norm() <= 1e-9 * w[s].norm() * ch.h[cell][u].norm());
            }
        }
    }

    #[test]
    fn subproblem_improves_on_its_expansion_point() {
        let cfg = NetworkConfig::uniform(2, 2, 8);
        let ch = generate_channels(&cfg, &generate_layout(&cfg, 5), 5).unwrap();
        let problem = SurrogateProblem::full_dimension(&ch, &cfg);
        let z = zero_forcing_init(&ch, &cfg).unwrap();
        let r = oracle_sca_subproblem(&problem, &z).unwrap();
        assert!(r.value <= problem.max_power_margin(&z) * (1.0 + 1e-9));
        assert!(r.max_violation <= 1e-9);
        // The convexified set is inside the true one.
        let sinr = problem.sinr(&r.solution);
        assert!(sinr.iter().zip(&cfg.sinr_target).all(|(s, g)| *s >= g * (1.0 - 1e-6)));
    }
}
