//! One convex SCA subproblem solved by ADMM and by the interior-point oracle.

use coordcast::network::{generate_channels, generate_layout, NetworkConfig};
use coordcast::oracle::{oracle_sca_subproblem, SurrogateProblem};
use coordcast::solver::{admm_solve_subproblem, solve, AdmmSettings, SolverSettings};

fn main() -> coordcast::Result<()> {
    let config = NetworkConfig::uniform(2, 2, 8);
    let channels = generate_channels(&config, &generate_layout(&config, 3), 3)?;
    let sol = solve(&channels, &config, &SolverSettings::default())?;
    let problem = &sol.problem;
    let u = problem.scale_to_feasible(&sol.init.u).expect("feasible start");
    let oracle = oracle_sca_subproblem(&SurrogateProblem::from_reduced(problem), &u)?;
    println!("oracle: {:.8} after {} Newton steps", oracle.value, oracle.iterations);
    for tol in [1e-3, 1e-4, 1e-5, 1e-6] {
        let settings = AdmmSettings {
            tol,
            max_iter: 200_000,
            ..AdmmSettings::default()
        };
        let out = admm_solve_subproblem(problem, &u, &settings)?;
        let value = problem.max_power_margin(&out.state.a);
        println!(
            "ADMM tol {tol:.0e}: {value:.8} after {:5} iterations, relative gap {:.2e}",
            out.iterations(),
            (value - oracle.value).abs() / oracle.value
        );
    }
    Ok(())
}
