//! Solves one coordinated multicast instance end to end and reports the result.

use coordcast::network::{generate_channels, generate_layout, linear_to_db, NetworkConfig};
use coordcast::solver::{evaluate_sinr, solve, SolverSettings};

fn main() -> coordcast::Result<()> {
    let config = NetworkConfig::uniform(3, 5, 64);
    let channels = generate_channels(&config, &generate_layout(&config, 7), 7)?;
    let sol = solve(&channels, &config, &SolverSettings::default())?;
    println!("max power margin {:.3} dB", linear_to_db(sol.max_power_margin));
    for (bs, p) in sol.beamformers.power_margins(&config).iter().enumerate() {
        println!("  BS {bs}: {:.3} dB", linear_to_db(*p));
    }
    let sinr = evaluate_sinr(&sol.beamformers, &channels, &config);
    let worst = sinr.iter().cloned().fold(f64::INFINITY, f64::min);
    println!("worst SINR {:.3} dB against a {:.1} dB target", linear_to_db(worst), linear_to_db(config.sinr_target[0]));
    println!(
        "λ iterations {}, SCA outer {}, ADMM inner {}, reduced dimension per stream {}",
        sol.lambda_trace.iterations(),
        sol.sca.trace.outer_iterations(),
        sol.sca.trace.inner_iterations(),
        sol.problem.streams[0].dim()
    );
    println!(
        "stage times: {:.2?} / {:.2?} / {:.2?}",
        sol.times.stage1, sol.times.stage2, sol.times.stage3
    );
    Ok(())
}
