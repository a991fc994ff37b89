//! Message-level run of the three-stage protocol with its fronthaul ledger.

use coordcast::coord::{centralized_overhead, compare_runs, run_distributed};
use coordcast::network::{generate_channels, generate_layout, NetworkConfig};
use coordcast::solver::SolverSettings;

fn main() -> coordcast::Result<()> {
    let config = NetworkConfig::uniform(3, 5, 64);
    let channels = generate_channels(&config, &generate_layout(&config, 2), 2)?;
    let settings = SolverSettings::default();
    let (ledger, out) = run_distributed(&channels, &config, &settings);
    let out = out?;
    print!("{}", ledger.to_csv());
    println!(
        "λ rounds {}, solve-stage complex {}, centralized {}, margin {:.4}",
        ledger.lambda_iterations,
        ledger.solve_complex(),
        centralized_overhead(&config),
        out.max_power_margin
    );
    let report = compare_runs(&channels, &config, &settings, None)?;
    println!("max difference to the in-process solve: {:e}", report.max_abs_diff);
    for line in ledger.trace_csv().lines().take(6) {
        println!("{line}");
    }
    Ok(())
}
