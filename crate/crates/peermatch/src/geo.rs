//! Positions, distances and the Δ-bounded neighbor graph between prosumers
//! and consumers.
//!
//! Canonical coordinates are planar meters. Latitude/longitude input is
//! projected once through a local equirectangular projection; at search radii
//! of a few tens of kilometers the projection error is negligible and keeps
//! distance evaluation cheap inside neighborhood construction.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{Household, HouseholdId};

/// Mean Earth radius in meters, used by the equirectangular projection.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// A planar position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct GeoPoint {
    pub x_m: f64,
    pub y_m: f64,
}

impl GeoPoint {
    pub fn new(x_m: f64, y_m: f64) -> Self {
        Self { x_m, y_m }
    }
}

/// Planar Euclidean distance in meters.
pub fn distance(a: GeoPoint, b: GeoPoint) -> f64 {
    (a.x_m - b.x_m).hypot(a.y_m - b.y_m)
}

/// Distance metric used when building neighborhoods.
///
/// The torus wraps both axes of an `L × L` square; it exists for statistical
/// experiments where every node should see the same expected neighborhood
/// size, not for realistic scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum Metric {
    #[default]
    Plane,
    Torus {
        length_m: f64,
    },
}

impl Metric {
    pub fn distance(&self, a: GeoPoint, b: GeoPoint) -> f64 {
        match *self {
            Metric::Plane => distance(a, b),
            Metric::Torus { length_m } => {
                let dx = wrap_delta(a.x_m - b.x_m, length_m);
                let dy = wrap_delta(a.y_m - b.y_m, length_m);
                dx.hypot(dy)
            }
        }
    }
}

fn wrap_delta(d: f64, length: f64) -> f64 {
    let d = d.abs() % length;
    d.min(length - d)
}

/// Local equirectangular projection about a fixed origin.
#[derive(Debug, Clone, Copy)]
pub struct LocalProjection {
    pub origin_lat_deg: f64,
    pub origin_lon_deg: f64,
}

impl LocalProjection {
    pub fn new(origin_lat_deg: f64, origin_lon_deg: f64) -> Self {
        Self {
            origin_lat_deg,
            origin_lon_deg,
        }
    }

    /// Projection centered on the centroid of the given coordinates.
    pub fn about_centroid(lat_lon_deg: &[(f64, f64)]) -> Self {
        let n = lat_lon_deg.len().max(1) as f64;
        let (lat, lon) = lat_lon_deg
            .iter()
            .fold((0.0, 0.0), |(a, b), &(lat, lon)| (a + lat, b + lon));
        Self::new(lat / n, lon / n)
    }

    pub fn project(&self, lat_deg: f64, lon_deg: f64) -> GeoPoint {
        let lat0 = self.origin_lat_deg.to_radians();
        GeoPoint {
            x_m: EARTH_RADIUS_M * lat0.cos() * (lon_deg - self.origin_lon_deg).to_radians(),
            y_m: EARTH_RADIUS_M * (lat_deg - self.origin_lat_deg).to_radians(),
        }
    }
}

/// The bipartite graph of (prosumer, consumer) pairs within distance Δ.
///
/// Adjacency lists are sorted by consumer id so that identical inputs always
/// produce identical graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    pub delta_m: f64,
    /// `(prosumer, consumers within Δ)`, sorted by prosumer id.
    pub adjacency: Vec<(HouseholdId, Vec<HouseholdId>)>,
}

impl NeighborGraph {
    pub fn prosumers(&self) -> impl Iterator<Item = HouseholdId> + '_ {
        self.adjacency.iter().map(|(p, _)| *p)
    }

    pub fn neighbors(&self, prosumer: HouseholdId) -> &[HouseholdId] {
        self.adjacency
            .binary_search_by_key(&prosumer, |(p, _)| *p)
            .map(|i| self.adjacency[i].1.as_slice())
            .unwrap_or(&[])
    }

    pub fn has_edge(&self, prosumer: HouseholdId, consumer: HouseholdId) -> bool {
        self.neighbors(prosumer).binary_search(&consumer).is_ok()
    }

    /// Number of edges `m = |E_Δ|`.
    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(|(_, n)| n.len()).sum()
    }

    /// Average neighborhood size over prosumers.
    pub fn mean_degree(&self) -> f64 {
        if self.adjacency.is_empty() {
            return 0.0;
        }
        self.edge_count() as f64 / self.adjacency.len() as f64
    }

    /// Largest neighborhood size δ.
    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(|(_, n)| n.len()).max().unwrap_or(0)
    }

    /// Writes the edge list as CSV `prosumer_id,consumer_id,distance_m`.
    pub fn write_edge_csv<W: Write>(&self, households: &[Household], mut out: W) -> Result<()> {
        let pos: HashMap<HouseholdId, GeoPoint> =
            households.iter().map(|h| (h.id, h.position)).collect();
        writeln!(out, "prosumer_id,consumer_id,distance_m")?;
        for (p, neighbors) in &self.adjacency {
            for c in neighbors {
                writeln!(out, "{},{},{}", p, c, distance(pos[p], pos[c]))?;
            }
        }
        Ok(())
    }
}

/// Builds the neighbor graph with planar distances.
pub fn build_neighborhoods(households: &[Household], delta_m: f64) -> NeighborGraph {
    build_neighborhoods_with_metric(households, delta_m, Metric::Plane)
}

/// Builds the neighbor graph under the chosen metric. Pairs at exactly Δ are
/// included.
pub fn build_neighborhoods_with_metric(
    households: &[Household],
    delta_m: f64,
    metric: Metric,
) -> NeighborGraph {
    let mut prosumers: Vec<&Household> = households.iter().filter(|h| h.is_prosumer()).collect();
    let mut consumers: Vec<&Household> = households.iter().filter(|h| h.is_consumer()).collect();
    prosumers.sort_by_key(|h| h.id);
    consumers.sort_by_key(|h| h.id);

    let adjacency = match metric {
        Metric::Plane => {
            let index = GridIndex::build(&consumers, delta_m);
            prosumers
                .iter()
                .map(|p| {
                    let mut near = index.within(p.position, delta_m, &consumers);
                    near.sort();
                    (p.id, near)
                })
                .collect()
        }
        Metric::Torus { .. } => prosumers
            .iter()
            .map(|p| {
                let near: Vec<HouseholdId> = consumers
                    .iter()
                    .filter(|c| metric.distance(p.position, c.position) <= delta_m)
                    .map(|c| c.id)
                    .collect();
                (p.id, near)
            })
            .collect(),
    };

    NeighborGraph { delta_m, adjacency }
}

/// Uniform grid bucket index with cell size Δ; radius queries visit the 3×3
/// cell block around the query point and check exact distances.
struct GridIndex {
    cell_m: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl GridIndex {
    fn build(consumers: &[&Household], delta_m: f64) -> Self {
        let cell_m = delta_m.max(1e-9);
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, c) in consumers.iter().enumerate() {
            cells.entry(Self::key(c.position, cell_m)).or_default().push(i);
        }
        Self { cell_m, cells }
    }

    fn key(p: GeoPoint, cell_m: f64) -> (i64, i64) {
        ((p.x_m / cell_m).floor() as i64, (p.y_m / cell_m).floor() as i64)
    }

    fn within(&self, center: GeoPoint, radius_m: f64, consumers: &[&Household]) -> Vec<HouseholdId> {
        let (cx, cy) = Self::key(center, self.cell_m);
        let mut found = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(bucket) = self.cells.get(&(cx + dx, cy + dy)) {
                    for &i in bucket {
                        if distance(center, consumers[i].position) <= radius_m {
                            found.push(consumers[i].id);
                        }
                    }
                }
            }
        }
        found
    }
}

/// Neighborhood sizes over *all* nodes (counting every other node within Δ),
/// used for the geometric degree statistics of scenario summaries.
pub fn neighborhood_sizes(points: &[GeoPoint], delta_m: f64, metric: Metric) -> Vec<usize> {
    let n = points.len();
    let mut sizes = vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            if metric.distance(points[i], points[j]) <= delta_m {
                sizes[i] += 1;
                sizes[j] += 1;
            }
        }
    }
    sizes
}

/// Neighborhood pre-sampling strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sampling {
    /// Keep `s` neighbors picked uniformly at random.
    Random,
    /// Keep the `s` neighbors with the largest total consumption.
    Greedy,
}

impl Sampling {
    pub fn name(&self) -> &'static str {
        match self {
            Sampling::Random => "random",
            Sampling::Greedy => "greedy",
        }
    }
}

/// Reduces every adjacency list larger than `s` to exactly `s` consumers.
///
/// Lists of size ≤ `s` are left untouched and consume no randomness, so
/// sampling an already-sampled graph with the same `s` is a no-op. Greedy
/// ties are broken by lower consumer id; the random strategy is fully
/// determined by `seed`.
pub fn sample_neighborhood(
    graph: &NeighborGraph,
    s: usize,
    strategy: Sampling,
    seed: u64,
    households: &[Household],
) -> NeighborGraph {
    use rand::SeedableRng;

    assert!(s >= 1, "sample size must be at least 1");
    let consumption: HashMap<HouseholdId, f64> = households
        .iter()
        .map(|h| (h.id, h.consumption.total()))
        .collect();
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);

    let adjacency = graph
        .adjacency
        .iter()
        .map(|(p, neighbors)| {
            if neighbors.len() <= s {
                return (*p, neighbors.clone());
            }
            let mut kept: Vec<HouseholdId> = match strategy {
                Sampling::Random => rand::seq::index::sample(&mut rng, neighbors.len(), s)
                    .into_iter()
                    .map(|i| neighbors[i])
                    .collect(),
                Sampling::Greedy => {
                    let mut ranked = neighbors.clone();
                    // highest consumption first, lower id on ties
                    ranked.sort_by(|a, b| {
                        consumption[b]
                            .total_cmp(&consumption[a])
                            .then(a.cmp(b))
                    });
                    ranked.truncate(s);
                    ranked
                }
            };
            kept.sort();
            (*p, kept)
        })
        .collect();

    NeighborGraph {
        delta_m: graph.delta_m,
        adjacency,
    }
}
