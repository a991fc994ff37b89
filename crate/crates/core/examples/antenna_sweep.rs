//! Small Monte Carlo sweep over the antenna count, written as CSV under a temp directory.

use coordcast::experiments::{run_experiment, ExperimentSpec};
use coordcast::network::Scenario;

fn main() -> coordcast::Result<()> {
    let out = std::env::temp_dir().join("coordcast_antenna_sweep");
    let mut spec = ExperimentSpec::new(Scenario::desk_default(), &out);
    spec.sweep = Some("antennas=16,32,64".parse()?);
    spec.layout_seeds = 2;
    spec.channel_seeds = 2;
    let result = run_experiment(&spec)?;
    for row in &result.aggregate {
        println!(
            "M={:>3}: mean margin {:7.3} dB, {} failed, I_λ {:.1}, overhead {:.1}%",
            row.sweep_value.unwrap_or(0),
            row.mean_margin_db.unwrap_or(f64::NAN),
            row.failed,
            row.mean_lambda_iterations,
            row.mean_overhead_pct
        );
    }
    println!("files in {}", out.display());
    Ok(())
}
