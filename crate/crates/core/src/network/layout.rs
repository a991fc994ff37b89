//! BS placement on a hexagonal lattice and uniform user drops.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::NetworkConfig;

pub type Point = [f64; 2];

/// BS and user coordinates. `positions[j]` holds the users of coordinating cell `j`
/// in global user order; `bs_positions` covers every cell of the deployment.
#[derive(Clone, Debug, PartialEq)]
pub struct UserLayout {
    pub bs_positions: Vec<Point>,
    pub positions: Vec<Vec<Point>>,
}

impl UserLayout {
    /// Users flattened into global order.
    pub fn users(&self) -> impl Iterator<Item = &Point> {
        self.positions.iter().flatten()
    }

    pub fn num_users(&self) -> usize {
        self.positions.iter().map(Vec::len).sum()
    }
}

pub fn distance(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Smallest admitted BS–user distance as a fraction of the cell radius.
pub const MIN_DISTANCE_FRACTION: f64 = 1e-3;

/// Sites of a hexagonal lattice with inter-site distance `√3·radius`, ordered by
/// ring, then by angle. The first 1, 7 and 19 sites are the centre cell and its
/// one- and two-tier neighbourhoods; the first 3 are three mutually adjacent cells.
pub fn hex_sites(count: usize, radius: f64) -> Vec<Point> {
    let spacing = 3f64.sqrt() * radius;
    let mut rings = 0i64;
    // ring r of a hex lattice holds 6r sites
    while 1 + 3 * rings * (rings + 1) < count as i64 {
        rings += 1;
    }
    let e1 = [spacing, 0.0];
    let e2 = [spacing * 0.5, spacing * 3f64.sqrt() / 2.0];
    let mut sites: Vec<(i64, f64, Point)> = Vec::new();
    for a in -rings..=rings {
        for b in -rings..=rings {
            let ring = a.abs().max(b.abs()).max((a + b).abs());
            if ring > rings {
                continue;
            }
            let p = [a as f64 * e1[0] + b as f64 * e2[0], a as f64 * e1[1] + b as f64 * e2[1]];
            let mut angle = p[1].atan2(p[0]);
            if angle < -1e-12 {
                angle += 2.0 * std::f64::consts::PI;
            }
            sites.push((ring, angle, p));
        }
    }
    // within a ring, start at 30° so that three sites form a mutually adjacent triple
    let offset = std::f64::consts::PI / 6.0 - 1e-9;
    sites.sort_by(|x, y| {
        let ax = (x.1 - offset).rem_euclid(2.0 * std::f64::consts::PI);
        let ay = (y.1 - offset).rem_euclid(2.0 * std::f64::consts::PI);
        x.0.cmp(&y.0).then(ax.total_cmp(&ay))
    });
    sites.into_iter().take(count).map(|s| s.2).collect()
}

/// Drops every user uniformly in the disk of its serving BS. Deterministic in `seed`.
pub fn generate_layout(config: &NetworkConfig, seed: u64) -> UserLayout {
    let radius = config.cell_radius;
    let bs_positions = hex_sites(config.network_cells, radius);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions = (0..config.num_cells)
        .map(|cell| {
            let centre = bs_positions[cell];
            (0..config.users_per_cell())
                .map(|_| {
                    let r = (radius * rng.random::<f64>().sqrt()).max(MIN_DISTANCE_FRACTION * radius);
                    let theta = 2.0 * std::f64::consts::PI * rng.random::<f64>();
                    [centre[0] + r * theta.cos(), centre[1] + r * theta.sin()]
                })
                .collect()
        })
        .collect();
    UserLayout {
        bs_positions,
        positions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_user_stays_in_cell() {
        let cfg = NetworkConfig::uniform(1, 1, 4);
        for seed in 0..50 {
            let layout = generate_layout(&cfg, seed);
            let d = distance(&layout.positions[0][0], &layout.bs_positions[0]);
            assert!(d <= cfg.cell_radius);
        }
    }

    #[test]
    fn layout_is_deterministic() {
        let cfg = NetworkConfig::uniform(3, 5, 4);
        assert_eq!(generate_layout(&cfg, 42), generate_layout(&cfg, 42));
        assert_ne!(generate_layout(&cfg, 42), generate_layout(&cfg, 43));
    }

    #[test]
    fn mean_distance_matches_uniform_disk() {
        // E[r] = 2R/3 for a uniform point in a disk of radius R
        let cfg = NetworkConfig::uniform(3, 5, 4);
        let mut total = 0.0;
        let mut count = 0usize;
        for seed in 0..10_000u64 {
            let layout = generate_layout(&cfg, seed);
            for (cell, users) in layout.positions.iter().enumerate() {
                for p in users {
                    total += distance(p, &layout.bs_positions[cell]);
                    count += 1;
                }
            }
        }
        let mean = total / count as f64;
        assert!((mean / (2.0 / 3.0) - 1.0).abs() < 0.02, "mean distance {mean}");
    }

    #[test]
    fn hex_templates() {
        let s = 3f64.sqrt();
        let three = hex_sites(3, 1.0);
        for a in 0..3 {
            for b in (a + 1)..3 {
                assert!((distance(&three[a], &three[b]) - s).abs() < 1e-12);
            }
        }
        let seven = hex_sites(7, 1.0);
        assert_eq!(seven[0], [0.0, 0.0]);
        for p in &seven[1..] {
            assert!((distance(p, &[0.0, 0.0]) - s).abs() < 1e-12);
        }
        let nineteen = hex_sites(19, 1.0);
        let mut far: Vec<f64> = nineteen[7..].iter().map(|p| distance(p, &[0.0, 0.0])).collect();
        far.sort_by(f64::total_cmp);
        assert!((far[0] - 3.0).abs() < 1e-12);
        assert!((far[11] - 2.0 * s).abs() < 1e-12);
        // arbitrary counts fall back to the same ring packing
        assert_eq!(hex_sites(5, 1.0)[..3], three[..]);
    }
}
