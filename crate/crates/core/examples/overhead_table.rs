//! Fronthaul overhead against full CSI centralization, over M and over K.

use coordcast::experiments::{emit_overhead_table, OverheadSpec};
use coordcast::network::Scenario;
use coordcast::solver::SolverSettings;

fn main() -> coordcast::Result<()> {
    let mut scenario = Scenario::desk_default();
    scenario.antennas = 100;
    let spec = OverheadSpec {
        scenario,
        antennas: vec![16, 32, 64, 100, 128, 256],
        users: vec![2, 3, 5, 7],
        seeds: 3,
        settings: SolverSettings::default(),
    };
    print!("{}", emit_overhead_table(&spec)?);
    Ok(())
}
