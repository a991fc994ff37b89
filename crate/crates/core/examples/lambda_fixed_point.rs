//! Runs the λ fixed point for several antenna counts and prints its convergence.

use coordcast::dual::{default_mu, fixed_point_lambda};
use coordcast::network::{generate_channels, generate_layout, NetworkConfig};

fn main() -> coordcast::Result<()> {
    for m in [16, 32, 64, 128] {
        let config = NetworkConfig::uniform(3, 5, m);
        let channels = generate_channels(&config, &generate_layout(&config, 1), 1)?;
        let lam = fixed_point_lambda(&channels, &config, &default_mu(&config), 5e-4, 200)?;
        let t = &lam.trace;
        println!(
            "M={m:4}: {} iterations, converged {}, last max-diff {:.2e}, off-diagonal residual {:.2e}",
            t.iterations(),
            t.converged,
            t.max_diff.last().copied().unwrap_or(0.0),
            t.off_diagonal_residual
        );
    }
    let config = NetworkConfig::uniform(3, 5, 64);
    let channels = generate_channels(&config, &generate_layout(&config, 1), 1)?;
    let lam = fixed_point_lambda(&channels, &config, &default_mu(&config), 5e-4, 200)?;
    print!("{}", lam.trace.to_csv());
    Ok(())
}
