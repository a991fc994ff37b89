//! Several multicast groups per cell, each with its own stream.

use coordcast::network::{generate_channels, generate_layout, linear_to_db, NetworkConfig};
use coordcast::solver::{evaluate_sinr, solve, SolverSettings};

fn main() -> coordcast::Result<()> {
    let config = NetworkConfig::uniform(2, 1, 32).with_groups(vec![2, 3]).with_sinr_db(6.0);
    let channels = generate_channels(&config, &generate_layout(&config, 5), 5)?;
    let sol = solve(&channels, &config, &SolverSettings::default())?;
    let sinr = evaluate_sinr(&sol.beamformers, &channels, &config);
    for s in 0..config.num_streams() {
        let users = config.stream_users(s);
        let worst = sinr[users.clone()].iter().cloned().fold(f64::INFINITY, f64::min);
        println!(
            "stream {s} (cell {}, group {}): {} users, power {:.3} W, worst SINR {:.2} dB",
            config.stream_cell(s),
            config.stream_group(s),
            users.len(),
            sol.beamformers.w[s].norm_squared(),
            linear_to_db(worst)
        );
    }
    println!("max power margin {:.3} dB", linear_to_db(sol.max_power_margin));
    Ok(())
}
