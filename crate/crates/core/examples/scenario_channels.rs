//! Loads a scenario file and draws one layout and channel realization.
//!
//!   cargo run --example scenario_channels -- scenarios/desk.toml

use coordcast::network::{generate_channels, generate_layout, linear_to_db, Scenario};

fn main() -> coordcast::Result<()> {
    let scenario = match std::env::args().nth(1) {
        Some(path) => Scenario::load(path)?,
        None => Scenario::desk_default(),
    };
    let config = scenario.config()?;
    let layout = generate_layout(&config, scenario.seeds.layout);
    let channels = generate_channels(&config, &layout, scenario.seeds.channel)?;
    println!(
        "{} cells, groups {:?}, {} antennas, {} users",
        config.num_cells,
        config.groups,
        config.antennas,
        config.num_users()
    );
    for u in 0..config.num_users() {
        let id = config.user_id(u);
        let gains: Vec<String> = (0..config.num_cells)
            .map(|bs| format!("{:7.2}", linear_to_db(channels.gain[bs][u])))
            .collect();
        println!("user {u:2} (cell {}, group {}): gain dB per BS [{}]", id.cell, id.group, gains.join(" "));
    }
    print!("{}", scenario.to_toml_string());
    Ok(())
}
