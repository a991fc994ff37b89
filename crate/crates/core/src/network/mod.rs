//! Scenario generation: geometry, pathloss, channels and imperfect-CSI statistics.

pub mod channels;
pub mod config;
pub mod layout;
pub mod scenario;

pub use channels::{
    degrade_csi, generate_channels, link_gain, ChannelSet, ErrorCovariance, Estimates, LocalCsi,
    OwnedLocalCsi,
};
pub use config::{db_to_linear, linear_to_db, NetworkConfig, Pathloss, UserId};
pub use layout::{generate_layout, hex_sites, Point, UserLayout};
pub use scenario::{OneOrMany, Scenario, Seeds};
