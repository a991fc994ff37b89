use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the pathloss constant ξ0 is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pathloss {
    /// ξ0 given directly (channel gain at unit distance).
    Constant(f64),
    /// ξ0 solved so that a unit-power transmission reaches the cell boundary
    /// with this SNR (dB) over the receiver noise.
    BoundarySnrDb(f64),
}

/// Position of a user inside the flattened (cell, group, member) index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct UserId {
    pub cell: usize,
    pub group: usize,
    pub member: usize,
}

/// Static description of a coordinated multi-cell multicast scenario.
///
/// Users are indexed globally in (cell, group, member) order. Every cell carries the
/// same group structure `groups`; a single-entry list is the one-group-per-cell case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Number of coordinating cells (one BS each).
    pub num_cells: usize,
    /// Group sizes inside every cell.
    pub groups: Vec<usize>,
    /// BS antennas.
    pub antennas: usize,
    /// Per-BS power budget in watts.
    pub power_budget: Vec<f64>,
    /// Per-user SINR targets (linear), global user order.
    pub sinr_target: Vec<f64>,
    /// Receiver noise power in watts.
    pub noise_power: f64,
    pub pathloss_exponent: f64,
    pub pathloss: Pathloss,
    pub cell_radius: f64,
    /// Cells in the deployment. Cells beyond `num_cells` are not coordinated; their BSs
    /// act as isotropic interferers transmitting at `background_power`.
    pub network_cells: usize,
    /// Transmit power of uncoordinated BSs (defaults to the mean budget).
    pub background_power: Option<f64>,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

impl NetworkConfig {
    /// One group of `k` users per cell with the desk-scale defaults: γ = 10 dB,
    /// p = 10 dBW, σ² = 1, κ = 3.5, −5 dB boundary SNR, unit radius.
    pub fn uniform(num_cells: usize, k: usize, antennas: usize) -> Self {
        Self {
            num_cells,
            groups: vec![k],
            antennas,
            power_budget: vec![db_to_linear(10.0); num_cells],
            sinr_target: vec![db_to_linear(10.0); num_cells * k],
            noise_power: 1.0,
            pathloss_exponent: 3.5,
            pathloss: Pathloss::BoundarySnrDb(-5.0),
            cell_radius: 1.0,
            network_cells: num_cells,
            background_power: None,
        }
    }

    pub fn with_groups(mut self, groups: Vec<usize>) -> Self {
        let users: usize = groups.iter().sum::<usize>() * self.num_cells;
        let gamma = self.sinr_target.first().copied().unwrap_or(db_to_linear(10.0));
        self.groups = groups;
        self.sinr_target = vec![gamma; users];
        self
    }

    pub fn with_sinr_db(mut self, db: f64) -> Self {
        self.sinr_target = vec![db_to_linear(db); self.num_users()];
        self
    }

    pub fn with_antennas(mut self, antennas: usize) -> Self {
        self.antennas = antennas;
        self
    }

    pub fn with_network_cells(mut self, cells: usize) -> Self {
        self.network_cells = cells;
        self
    }

    pub fn users_per_cell(&self) -> usize {
        self.groups.iter().sum()
    }

    pub fn num_users(&self) -> usize {
        self.num_cells * self.users_per_cell()
    }

    pub fn groups_per_cell(&self) -> usize {
        self.groups.len()
    }

    /// Streams are (cell, group) pairs, one beamformer each.
    pub fn num_streams(&self) -> usize {
        self.num_cells * self.groups.len()
    }

    pub fn stream_index(&self, cell: usize, group: usize) -> usize {
        cell * self.groups.len() + group
    }

    pub fn stream_cell(&self, stream: usize) -> usize {
        stream / self.groups.len()
    }

    pub fn stream_group(&self, stream: usize) -> usize {
        stream % self.groups.len()
    }

    /// Offset of group `group` inside a cell's user block.
    pub fn group_offset(&self, group: usize) -> usize {
        self.groups[..group].iter().sum()
    }

    pub fn user_index(&self, id: UserId) -> usize {
        id.cell * self.users_per_cell() + self.group_offset(id.group) + id.member
    }

    pub fn user_id(&self, index: usize) -> UserId {
        let per_cell = self.users_per_cell();
        let cell = index / per_cell;
        let mut rest = index % per_cell;
        let mut group = 0;
        while rest >= self.groups[group] {
            rest -= self.groups[group];
            group += 1;
        }
        UserId {
            cell,
            group,
            member: rest,
        }
    }

    /// Global indices of the users served by `stream`.
    pub fn stream_users(&self, stream: usize) -> std::ops::Range<usize> {
        let cell = self.stream_cell(stream);
        let group = self.stream_group(stream);
        let start = cell * self.users_per_cell() + self.group_offset(group);
        start..start + self.groups[group]
    }

    pub fn serving_stream(&self, user: usize) -> usize {
        let id = self.user_id(user);
        self.stream_index(id.cell, id.group)
    }

    pub fn cell_users(&self, cell: usize) -> std::ops::Range<usize> {
        let per_cell = self.users_per_cell();
        cell * per_cell..(cell + 1) * per_cell
    }

    /// ξ0, either given or calibrated from the boundary SNR.
    pub fn pathloss_constant(&self) -> f64 {
        match self.pathloss {
            Pathloss::Constant(xi0) => xi0,
            Pathloss::BoundarySnrDb(db) => {
                self.noise_power * db_to_linear(db) * self.cell_radius.powf(self.pathloss_exponent)
            }
        }
    }

    pub fn background_power(&self) -> f64 {
        self.background_power.unwrap_or_else(|| {
            self.power_budget.iter().sum::<f64>() / self.power_budget.len().max(1) as f64
        })
    }

    pub fn validate(&self) -> Result<()> {
        fn bad(field: &'static str, reason: impl Into<String>) -> Result<()> {
            Err(Error::InvalidConfig {
                field,
                reason: reason.into(),
            })
        }
        if self.num_cells == 0 {
            return bad("num_cells", "must be at least 1");
        }
        if self.groups.is_empty() || self.groups.contains(&0) {
            return bad("groups", "every cell needs at least one non-empty group");
        }
        if self.antennas == 0 {
            return bad("antennas", "must be at least 1");
        }
        if self.power_budget.len() != self.num_cells {
            return bad(
                "power_budget",
                format!("expected {} entries, got {}", self.num_cells, self.power_budget.len()),
            );
        }
        if self.power_budget.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return bad("power_budget", "budgets must be positive and finite");
        }
        if self.sinr_target.len() != self.num_users() {
            return bad(
                "sinr_target",
                format!("expected {} entries, got {}", self.num_users(), self.sinr_target.len()),
            );
        }
        if self.sinr_target.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
            return bad("sinr_target", "targets must be positive and finite");
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return bad("noise_power", "must be positive");
        }
        if !(self.pathloss_exponent > 2.0) {
            return bad("pathloss_exponent", "must exceed 2");
        }
        if let Pathloss::Constant(xi0) = self.pathloss {
            if !(xi0 > 0.0 && xi0.is_finite()) {
                return bad("pathloss", "constant must be positive");
            }
        }
        if !(self.cell_radius > 0.0 && self.cell_radius.is_finite()) {
            return bad("cell_radius", "must be positive");
        }
        if self.network_cells < self.num_cells {
            return bad("network_cells", "must be at least num_cells");
        }
        if let Some(p) = self.background_power {
            if !(p >= 0.0 && p.is_finite()) {
                return bad("background_power", "must be non-negative");
            }
        }
        Ok(())
    }
}
