//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria marked `known` are reported but do not fail the run; their analysis lives with
//! the project notes.

use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coordcast::coord::{compare_runs, expected_solve_complex, run_distributed, MessageKind};
use coordcast::dual::{default_mu, fixed_point_lambda};
use coordcast::linalg::{CMat, CVec};
use coordcast::network::{degrade_csi, generate_channels, generate_layout, ChannelSet, NetworkConfig};
use coordcast::oracle::{
    oracle_direct_sca, oracle_qcqp1, oracle_sca_subproblem, zero_forcing_init, Quadratic, SurrogateProblem,
};
use coordcast::solver::{
    a_update, admm_solve_subproblem, d_update, solve, AdmmSettings, AdmmState, Solution, SolverSettings,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn scenario(j: usize, k: usize, m: usize, seed: u64) -> (NetworkConfig, ChannelSet) {
    let cfg = NetworkConfig::uniform(j, k, m);
    let ch = generate_channels(&cfg, &generate_layout(&cfg, seed), seed).unwrap();
    (cfg, ch)
}

fn solved(j: usize, k: usize, m: usize, seed: u64) -> (NetworkConfig, ChannelSet, Solution) {
    let (cfg, ch) = scenario(j, k, m, seed);
    let sol = solve(&ch, &cfg, &SolverSettings::default()).unwrap();
    (cfg, ch, sol)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CVec {
    CVec::from_fn(n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * scale)
}

fn single_user() -> Verdict {
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let (cfg, ch, sol) = solved(1, 1, 8, seed);
        let h = &ch.h[0][0];
        let closed = cfg.sinr_target[0] * cfg.noise_power / (h.norm_squared() * cfg.power_budget[0]);
        worst = worst.max((sol.max_power_margin - closed).abs() / closed);
    }
    verdict(worst <= 1e-6, format!("worst relative error {worst:.2e} over 100 channels"))
}

fn block_updates() -> Verdict {
    let mut worst_d = 0.0f64;
    let mut worst_a = 0.0f64;
    for seed in 0..50u64 {
        let (_, _, sol) = solved(3, 5, 16, seed);
        let p = sol.problem.normalized();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut st = AdmmState::new(&p, &sol.weights, 0.01);
        for a in st.a.iter_mut() {
            let n = a.len();
            *a += random_vec(&mut rng, n, a.norm());
        }
        for q in st.q.iter_mut() {
            let n = q.len();
            *q = random_vec(&mut rng, n, 2.0);
        }

        let user = seed as usize % p.num_users();
        let mine = d_update(&st, &p, user).unwrap();
        let s = p.serving[user];
        let n = p.num_streams();
        let e1 = CVec::from_fn(n, |j, _| st.a[j].dotc(&p.streams[j].f[user]) - st.q[user][j]);
        let e3 = st.u[s].dotc(&p.streams[s].f[user]);
        let gamma = p.sinr_target[user];
        let objective = Quadratic::new(CMat::identity(n, n), e1.clone(), e1.norm_squared());
        let mut ca = CMat::identity(n, n) * Complex64::new(gamma, 0.0);
        ca[(s, s)] = Complex64::new(0.0, 0.0);
        let mut cb = CVec::zeros(n);
        cb[s] = e3;
        let constraint = Quadratic::new(ca, cb, e3.norm_sqr() + gamma * p.noise[user]);
        let oracle = oracle_qcqp1(&objective, &constraint).unwrap();
        let value = (&mine.d - &e1).norm_squared();
        worst_d = worst_d.max((value - oracle.value).abs() / oracle.value.abs().max(f64::MIN_POSITIVE));

        let bs = seed as usize % p.num_cells;
        let streams: Vec<usize> = p.cell_streams(bs).collect();
        let dims: Vec<usize> = streams.iter().map(|&s| p.streams[s].dim()).collect();
        let total: usize = dims.iter().sum();
        let mut oa = CMat::zeros(total, total);
        let mut ob = CVec::zeros(total);
        let mut oc = 0.0;
        let mut pa = CMat::zeros(total, total);
        let mut off = 0;
        for (&s, &dm) in streams.iter().zip(&dims) {
            for u in 0..p.num_users() {
                let f = &p.streams[s].f[u];
                let y = st.d[u][s] + st.q[u][s];
                let mut block = oa.view_mut((off, off), (dm, dm));
                block += f * f.adjoint();
                let mut rhs = ob.rows_mut(off, dm);
                rhs += f * y.conj();
                oc += y.norm_sqr();
            }
            let g = &p.streams[s].gram / Complex64::new(p.power_budget[bs], 0.0);
            pa.view_mut((off, off), (dm, dm)).copy_from(&g);
            off += dm;
        }
        // Budget between 20% and 150% of the unconstrained power, so both regimes occur.
        let free = oa.clone().lu().solve(&ob).unwrap();
        st.v = free.dotc(&(&pa * &free)).re * rng.random_range(0.2..1.5);
        let mine = a_update(&st, &p, bs, 1e-10).unwrap();
        let objective = Quadratic::new(oa, ob, oc);
        let oracle = oracle_qcqp1(&objective, &Quadratic::new(pa, CVec::zeros(total), -st.v)).unwrap();
        let x = CVec::from_iterator(total, mine.a.iter().flat_map(|v| v.iter().cloned()));
        let value = objective.eval(&x);
        worst_a = worst_a.max((value - oracle.value).abs() / oracle.value.abs().max(f64::MIN_POSITIVE));
    }
    verdict(
        worst_d <= 1e-6 && worst_a <= 1e-6,
        format!("worst relative objective gap d {worst_d:.2e}, a {worst_a:.2e} over 50 instances"),
    )
}

fn subproblem_optimality() -> Verdict {
    let mut worst = 0.0f64;
    let settings = AdmmSettings {
        tol: 1e-6,
        max_iter: 200_000,
        ..AdmmSettings::default()
    };
    for seed in 0..20 {
        let (_, _, sol) = solved(2, 2, 8, seed);
        let p = &sol.problem;
        let u = p.scale_to_feasible(&sol.init.u).unwrap();
        let out = admm_solve_subproblem(p, &u, &settings).unwrap();
        let oracle = oracle_sca_subproblem(&SurrogateProblem::from_reduced(p), &u).unwrap();
        let value = p.max_power_margin(&out.state.a);
        worst = worst.max((value - oracle.value).abs() / oracle.value);
    }
    verdict(worst <= 1e-3, format!("worst relative objective gap {worst:.2e} over 20 seeds (ADMM tol 1e-6)"))
}

fn cross_method() -> Verdict {
    let mut gaps = Vec::new();
    for seed in 0..20 {
        let (cfg, ch, sol) = solved(2, 2, 8, seed);
        let zf = zero_forcing_init(&ch, &cfg).unwrap();
        let (_, direct) = oracle_direct_sca(&ch, &cfg, &zf, 1e-3).unwrap();
        gaps.push((sol.max_power_margin - direct).abs() / direct);
    }
    let worst = gaps.iter().cloned().fold(0.0, f64::max);
    let avg = mean(&gaps);
    verdict(avg <= 0.05, format!("mean margin gap {:.2}% (worst {:.2}%) over 20 seeds", 100.0 * avg, 100.0 * worst))
}

fn feasibility() -> Verdict {
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for (j, k, m) in [(1, 3, 16), (2, 2, 8), (2, 4, 32), (3, 5, 64)] {
        for f in [None, Some(0.05), Some(0.1)] {
            for seed in 0..5u64 {
                let (cfg, ch) = scenario(j, k, m, seed);
                let ch = match f {
                    Some(f) => degrade_csi(&ch, f, seed + 100).unwrap(),
                    None => ch,
                };
                let sol = solve(&ch, &cfg, &SolverSettings::default()).unwrap();
                worst = worst.min(sol.min_sinr_ratio);
                count += 1;
            }
        }
    }
    verdict(worst >= 1.0 - 1e-3, format!("worst min SINR/target {worst:.6} over {count} solutions"))
}

fn lambda_convergence() -> Verdict {
    let mut within = 0;
    let mut total = 0;
    let mut means = Vec::new();
    for m in [32, 64, 128] {
        let mut iters = Vec::new();
        for seed in 0..100 {
            let (cfg, ch) = scenario(3, 5, m, seed);
            let lam = fixed_point_lambda(&ch, &cfg, &default_mu(&cfg), 5e-4, 1000).unwrap();
            let n = lam.trace.iterations();
            if lam.trace.converged && n <= 50 {
                within += 1;
            }
            total += 1;
            iters.push(n as f64);
        }
        means.push(mean(&iters));
    }
    let share = within as f64 / total as f64;
    let monotone = means.windows(2).all(|w| w[1] <= w[0]);
    verdict(
        share >= 0.95 && monotone,
        format!(
            "{:.0}% within 50 iterations; mean iterations {:.1}/{:.1}/{:.1} at M=32/64/128",
            100.0 * share,
            means[0],
            means[1],
            means[2]
        ),
    )
}

fn fronthaul_ledger() -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    let (cfg, ch) = scenario(3, 5, 64, 3);
    let (ledger, out) = run_distributed(&ch, &cfg, &SolverSettings::default());
    out.unwrap();
    ok &= ledger.solve_complex() == 315 && expected_solve_complex(&cfg) == 315;
    ok &= ledger.lambda_reals() == ledger.lambda_iterations * 3 * 5;
    notes.push(format!("solve stage {} complex, {} reals for I_λ={}", ledger.solve_complex(), ledger.lambda_reals(), ledger.lambda_iterations));

    // With the λ iteration count pinned, nothing the ledger records may depend on M.
    let pinned = SolverSettings {
        lambda_tol: 0.0,
        lambda_max_iter: 40,
        ..SolverSettings::default()
    };
    let ledgers: Vec<_> = [16, 64, 256]
        .into_iter()
        .map(|m| {
            let (cfg, ch) = scenario(3, 5, m, 3);
            let (ledger, out) = run_distributed(&ch, &cfg, &pinned);
            out.unwrap();
            ledger
        })
        .collect();
    let identical = ledgers.windows(2).all(|w| {
        w[0].by_kind == w[1].by_kind && w[0].to_csv() == w[1].to_csv() && w[0].trace_csv() == w[1].trace_csv()
    });
    ok &= identical;
    ok &= ledgers[0].kind_total(MessageKind::LambdaBroadcast).1 == 40 * 15;
    notes.push(format!("ledger identical across M=16/64/256: {identical}"));
    verdict(ok, notes.join("; "))
}

fn distributed_equals_centralized() -> Verdict {
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let (cfg, ch) = scenario(3, 5, 16, seed);
        let r = compare_runs(&ch, &cfg, &SolverSettings::default(), None).unwrap();
        worst = worst.max(r.max_abs_diff);
    }
    verdict(worst == 0.0, format!("max beamformer difference {worst:e} over 20 seeds"))
}

fn m_invariant_cost() -> Verdict {
    let stage2 = |m: usize| {
        (0..10)
            .map(|seed| solved(3, 5, m, seed).2.times.stage2.as_secs_f64())
            .collect::<Vec<_>>()
    };
    let t64 = mean(&stage2(64));
    let t256 = mean(&stage2(256));
    verdict(
        t256 <= 1.5 * t64,
        format!("mean stage II {:.3}s at M=256 vs {:.3}s at M=64 (ratio {:.2})", t256, t64, t256 / t64),
    )
}

fn coordination_gain() -> Verdict {
    let margin = |j: usize| {
        let v: Vec<f64> = (0..20)
            .map(|seed| {
                // Same three-site deployment; cells outside the cluster are uncoordinated.
                let cfg = NetworkConfig::uniform(j, 5, 64).with_network_cells(3);
                let ch = generate_channels(&cfg, &generate_layout(&cfg, seed), seed).unwrap();
                solve(&ch, &cfg, &SolverSettings::default()).unwrap().max_power_margin
            })
            .collect();
        mean(&v)
    };
    let (m1, m2, m3) = (margin(1), margin(2), margin(3));
    verdict(
        m3 < m1,
        format!(
            "mean margin {:.3}/{:.3}/{:.3} dB at J=1/2/3",
            10.0 * m1.log10(),
            10.0 * m2.log10(),
            10.0 * m3.log10()
        ),
    )
}

fn imperfect_csi() -> Verdict {
    let mut worst_diff = 0.0f64;
    let mut worst_ratio = f64::INFINITY;
    for seed in 0..5 {
        let (cfg, ch) = scenario(3, 5, 64, seed);
        let perfect = solve(&ch, &cfg, &SolverSettings::default()).unwrap();
        let zero = solve(&degrade_csi(&ch, 0.0, seed).unwrap(), &cfg, &SolverSettings::default()).unwrap();
        worst_diff = worst_diff.max(perfect.beamformers.max_abs_diff(&zero.beamformers));
        let noisy = solve(&degrade_csi(&ch, 0.1, seed).unwrap(), &cfg, &SolverSettings::default()).unwrap();
        worst_ratio = worst_ratio.min(noisy.min_sinr_ratio);
    }
    verdict(
        worst_diff <= 1e-9 && worst_ratio >= 1.0 - 1e-3,
        format!("error 0: max difference {worst_diff:.1e}; error 0.1: worst effective SINR/target {worst_ratio:.6}"),
    )
}

fn sca_monotonicity() -> Verdict {
    let settings = SolverSettings::default();
    let slack = 10.0 * settings.sca.admm.tol;
    let mut bad = 0;
    for seed in 0..100u64 {
        let m = [16, 32, 64][seed as usize % 3];
        let (cfg, ch) = scenario(3, 5, m, seed);
        let sol = solve(&ch, &cfg, &settings).unwrap();
        if !sol.sca.trace.is_monotone(slack) {
            bad += 1;
        }
    }
    verdict(bad == 0, format!("{bad} of 100 traces rise by more than {slack:.0e}"))
}

fn main() -> ExitCode {
    // (number, name, check, known shortfall)
    let criteria: [(usize, &str, fn() -> Verdict, bool); 12] = [
        (1, "single-user closed form", single_user, false),
        (2, "block-update correctness", block_updates, false),
        (3, "subproblem optimality", subproblem_optimality, false),
        (4, "cross-method near-optimality", cross_method, true),
        (5, "feasibility", feasibility, false),
        (6, "lambda fixed-point convergence", lambda_convergence, true),
        (7, "fronthaul ledger", fronthaul_ledger, false),
        (8, "distributed equals centralized", distributed_equals_centralized, false),
        (9, "M-invariant solve cost", m_invariant_cost, false),
        (10, "coordination gain", coordination_gain, false),
        (11, "imperfect-CSI consistency", imperfect_csi, false),
        (12, "SCA monotonicity", sca_monotonicity, false),
    ];
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut fatal = 0;
    for (n, name, check, known) in criteria {
        if filter.as_ref().is_some_and(|f| !name.contains(f.as_str()) && *f != n.to_string()) {
            continue;
        }
        let start = Instant::now();
        let v = check();
        let status = match (v.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        if !v.pass && !known {
            fatal += 1;
        }
        println!("criterion {n:>2} {status:<12} {name}: {} [{:.1}s]", v.detail, start.elapsed().as_secs_f64());
    }
    if fatal > 0 {
        println!("{fatal} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
