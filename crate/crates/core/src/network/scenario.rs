use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{db_to_linear, NetworkConfig, Pathloss};
use crate::error::{Error, Result};

/// A scalar applied to every entry or an explicit list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn expand(&self, n: usize) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![*x; n],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Seeds that fix a scenario's random draws.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    #[serde(default)]
    pub layout: u64,
    #[serde(default)]
    pub channel: u64,
    #[serde(default)]
    pub csi: u64,
    #[serde(default)]
    pub init: u64,
}

/// On-disk scenario description (TOML).
///
/// ```toml
/// num_cells = 3
/// groups = [5]
/// antennas = 64
/// power_budget_dbw = 10.0
/// sinr_target_db = 10.0
/// noise_power = 1.0
/// pathloss_exponent = 3.5
/// boundary_snr_db = -5.0
/// cell_radius = 1.0
///
/// [seeds]
/// layout = 1
/// channel = 2
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub num_cells: usize,
    pub groups: Vec<usize>,
    pub antennas: usize,
    #[serde(default = "default_power")]
    pub power_budget_dbw: OneOrMany,
    #[serde(default = "default_sinr")]
    pub sinr_target_db: OneOrMany,
    #[serde(default = "default_noise")]
    pub noise_power: f64,
    #[serde(default = "default_kappa")]
    pub pathloss_exponent: f64,
    /// Gives ξ0 from the boundary SNR. Ignored when `pathloss_constant` is set.
    #[serde(default = "default_boundary")]
    pub boundary_snr_db: f64,
    #[serde(default)]
    pub pathloss_constant: Option<f64>,
    #[serde(default = "default_radius")]
    pub cell_radius: f64,
    #[serde(default)]
    pub network_cells: Option<usize>,
    #[serde(default)]
    pub background_power: Option<f64>,
    /// Fraction of each link's gain moved into the estimation error (0 = perfect CSI).
    #[serde(default)]
    pub csi_error: Option<f64>,
    #[serde(default)]
    pub seeds: Seeds,
}

fn default_power() -> OneOrMany {
    OneOrMany::One(10.0)
}
fn default_sinr() -> OneOrMany {
    OneOrMany::One(10.0)
}
fn default_noise() -> f64 {
    1.0
}
fn default_kappa() -> f64 {
    3.5
}
fn default_boundary() -> f64 {
    -5.0
}
fn default_radius() -> f64 {
    1.0
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        scenario.config()?;
        if let Some(f) = scenario.csi_error {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::InvalidConfig {
                    field: "csi_error",
                    reason: "must lie in [0, 1]".into(),
                });
            }
        }
        Ok(scenario)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario is always serializable")
    }

    /// Validated network configuration.
    pub fn config(&self) -> Result<NetworkConfig> {
        let users = self.num_cells * self.groups.iter().sum::<usize>();
        let cfg = NetworkConfig {
            num_cells: self.num_cells,
            groups: self.groups.clone(),
            antennas: self.antennas,
            power_budget: self.power_budget_dbw.expand(self.num_cells).into_iter().map(db_to_linear).collect(),
            sinr_target: self.sinr_target_db.expand(users).into_iter().map(db_to_linear).collect(),
            noise_power: self.noise_power,
            pathloss_exponent: self.pathloss_exponent,
            pathloss: match self.pathloss_constant {
                Some(xi0) => Pathloss::Constant(xi0),
                None => Pathloss::BoundarySnrDb(self.boundary_snr_db),
            },
            cell_radius: self.cell_radius,
            network_cells: self.network_cells.unwrap_or(self.num_cells),
            background_power: self.background_power,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Default three-cell desk-scale scenario.
    pub fn desk_default() -> Self {
        Self {
            num_cells: 3,
            groups: vec![5],
            antennas: 64,
            power_budget_dbw: default_power(),
            sinr_target_db: default_sinr(),
            noise_power: 1.0,
            pathloss_exponent: 3.5,
            boundary_snr_db: -5.0,
            pathloss_constant: None,
            cell_radius: 1.0,
            network_cells: None,
            background_power: None,
            csi_error: None,
            seeds: Seeds::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_doc_example() {
        let text = r#"
num_cells = 3
groups = [5]
antennas = 64
power_budget_dbw = 10.0
sinr_target_db = 10.0
noise_power = 1.0
pathloss_exponent = 3.5
boundary_snr_db = -5.0
cell_radius = 1.0

[seeds]
layout = 1
channel = 2
"#;
        let s = Scenario::from_toml_str(text).unwrap();
        let cfg = s.config().unwrap();
        assert_eq!(cfg.num_users(), 15);
        assert!((cfg.power_budget[2] - 10.0).abs() < 1e-12);
        assert_eq!(s.seeds.channel, 2);
    }

    #[test]
    fn round_trips_through_toml() {
        let mut s = Scenario::desk_default();
        s.power_budget_dbw = OneOrMany::Many(vec![10.0, 12.0, 8.0]);
        s.csi_error = Some(0.1);
        let back = Scenario::from_toml_str(&s.to_toml_string()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn reports_offending_field() {
        let text = "num_cells = 2\ngroups = [2]\nantennas = 4\npathloss_exponent = 1.5\n";
        assert!(matches!(
            Scenario::from_toml_str(text),
            Err(Error::InvalidConfig { field: "pathloss_exponent", .. })
        ));
        let text = "num_cells = 2\ngroups = [2]\nantennas = 4\nsinr_target_db = [1.0, 2.0]\n";
        assert!(matches!(
            Scenario::from_toml_str(text),
            Err(Error::InvalidConfig { field: "sinr_target", .. })
        ));
        let text = "num_cells = 2\ngroups = [2]\nantenas = 4\n";
        assert!(matches!(Scenario::from_toml_str(text), Err(Error::Scenario(_))));
    }
}
