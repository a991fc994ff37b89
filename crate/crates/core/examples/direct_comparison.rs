//! Structured solver against SCA over the full beamformers from a zero-forcing start.

use coordcast::network::{generate_channels, generate_layout, linear_to_db, NetworkConfig};
use coordcast::oracle::{oracle_direct_sca, zero_forcing_init};
use coordcast::solver::{solve, SolverSettings};

fn main() -> coordcast::Result<()> {
    let config = NetworkConfig::uniform(2, 2, 8);
    for seed in 0..5 {
        let channels = generate_channels(&config, &generate_layout(&config, seed), seed)?;
        let structured = solve(&channels, &config, &SolverSettings::default())?;
        let zf = zero_forcing_init(&channels, &config)?;
        let (_, direct) = oracle_direct_sca(&channels, &config, &zf, 1e-3)?;
        println!(
            "seed {seed}: structured {:7.3} dB, direct {:7.3} dB",
            linear_to_db(structured.max_power_margin),
            linear_to_db(direct)
        );
    }
    Ok(())
}
