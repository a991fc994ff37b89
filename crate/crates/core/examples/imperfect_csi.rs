//! Solves on estimated channels and checks the effective SINR under the error statistics.

use coordcast::network::{degrade_csi, generate_channels, generate_layout, linear_to_db, NetworkConfig};
use coordcast::solver::{evaluate_effective_sinr, solve, SolverSettings};

fn main() -> coordcast::Result<()> {
    let config = NetworkConfig::uniform(3, 5, 64);
    let channels = generate_channels(&config, &generate_layout(&config, 4), 4)?;
    for f in [0.0, 0.02, 0.05, 0.1, 0.2] {
        let estimated = degrade_csi(&channels, f, 40)?;
        match solve(&estimated, &config, &SolverSettings::default()) {
            Ok(sol) => {
                let sinr = evaluate_effective_sinr(&sol.beamformers, &estimated, &config)?;
                let worst = sinr.iter().zip(&config.sinr_target).map(|(s, g)| s / g).fold(f64::INFINITY, f64::min);
                println!(
                    "error fraction {f:.2}: margin {:7.3} dB, worst effective SINR/target {worst:.6}",
                    linear_to_db(sol.max_power_margin)
                );
            }
            Err(e) => println!("error fraction {f:.2}: {e}"),
        }
    }
    Ok(())
}
