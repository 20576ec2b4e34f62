//! Domain types shared by every module: households, time series, tariffs,
//! communities and matchings.
//!
//! All types here are plain immutable data. Construction validates the
//! invariants; afterwards values can be shared freely across threads.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::geo::{GeoPoint, NeighborGraph};

/// Identifier of a household, unique within a scenario.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
pub struct HouseholdId(pub u32);

impl fmt::Display for HouseholdId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An hourly series of nonnegative values (kWh, €/kWh or kWh-per-kWp
/// depending on context), starting at `start_hour`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub start_hour: usize,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(start_hour: usize, values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "time series must hold at least one value");
        Self { start_hour, values }
    }

    /// Series covering `0..len` filled with a constant.
    pub fn constant(len: usize, value: f64) -> Self {
        Self::new(0, vec![value; len])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Hours covered, as an absolute range.
    pub fn range(&self) -> Range<usize> {
        self.start_hour..self.start_hour + self.values.len()
    }

    /// Slice of the values for an absolute hour window.
    pub fn slice(&self, window: &Range<usize>) -> Result<&[f64]> {
        let r = self.range();
        if window.start < r.start || window.end > r.end || window.start >= window.end {
            return Err(Error::WindowOutOfRange {
                start: window.start,
                end: window.end,
                lo: r.start,
                hi: r.end,
            });
        }
        Ok(&self.values[window.start - self.start_hour..window.end - self.start_hour])
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.total() / self.values.len() as f64
    }

    /// Element-wise sum; both series must cover the same hours.
    pub fn checked_add(&self, other: &TimeSeries) -> Result<TimeSeries> {
        if self.start_hour != other.start_hour || self.len() != other.len() {
            return Err(Error::HorizonMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(TimeSeries::new(self.start_hour, values))
    }
}

/// Grid tariff: a relative tax on the market price, a fixed per-kWh tax on
/// purchases and a small per-kWh payment for feeding in.
///
/// `el_net < el_tax` together with nonnegative prices keeps the effective
/// buy price strictly above the sell price, so optimal schedules never buy
/// and sell in the same hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tariff {
    /// Relative tax level on the market price (fraction, e.g. 0.25).
    pub tax: f64,
    /// Fixed electricity tax on purchases, €/kWh.
    pub el_tax: f64,
    /// Payment for selling to the grid, €/kWh.
    pub el_net: f64,
}

impl Tariff {
    pub fn new(tax: f64, el_tax: f64, el_net: f64) -> Result<Self> {
        if !(tax >= 0.0) {
            return Err(Error::InvalidTariff(format!("tax {tax} must be ≥ 0")));
        }
        if !(el_tax >= 0.0) || !(el_net >= 0.0) {
            return Err(Error::InvalidTariff(format!(
                "el_tax {el_tax} and el_net {el_net} must be ≥ 0"
            )));
        }
        if !(el_net < el_tax) {
            return Err(Error::InvalidTariff(format!(
                "el_net {el_net} must be below el_tax {el_tax}"
            )));
        }
        Ok(Self { tax, el_tax, el_net })
    }
}

impl Default for Tariff {
    /// tax 25%, el_tax 6.9 ¢/kWh, el_net 0.58 ¢/kWh.
    fn default() -> Self {
        Self {
            tax: 0.25,
            el_tax: 0.069,
            el_net: 0.0058,
        }
    }
}

/// A household: consumption trace, energy resources and a position.
#[derive(Debug, Clone, PartialEq)]
pub struct Household {
    pub id: HouseholdId,
    pub position: GeoPoint,
    /// Hourly electricity demand, kWh.
    pub consumption: TimeSeries,
    /// Installed PV capacity, kWp. Hourly generation is `pv_kwp * sun(t)`.
    pub pv_kwp: f64,
    /// Battery capacity, kWh.
    pub battery_kwh: f64,
}

impl Household {
    /// A prosumer owns PV capacity.
    pub fn is_prosumer(&self) -> bool {
        self.pv_kwp > 0.0
    }

    /// A consumer owns no energy resources at all.
    pub fn is_consumer(&self) -> bool {
        self.pv_kwp == 0.0 && self.battery_kwh == 0.0
    }
}

/// One energy community: a prosumer plus the consumers assigned to it.
///
/// `formation_weights` optionally records, for audit, the weight each
/// consumer had when the matching algorithm picked it (`None` when the
/// algorithm took the candidate without computing a weight).
#[derive(Debug, Clone, PartialEq)]
pub struct Community {
    pub prosumer: HouseholdId,
    pub consumers: BTreeSet<HouseholdId>,
    pub formation_weights: Vec<(HouseholdId, Option<f64>)>,
}

impl Community {
    pub fn new(prosumer: HouseholdId, consumers: impl IntoIterator<Item = HouseholdId>) -> Self {
        Self {
            prosumer,
            consumers: consumers.into_iter().collect(),
            formation_weights: Vec::new(),
        }
    }

    /// Members including the prosumer.
    pub fn size(&self) -> usize {
        self.consumers.len() + 1
    }

    pub fn members(&self) -> impl Iterator<Item = HouseholdId> + '_ {
        std::iter::once(self.prosumer).chain(self.consumers.iter().copied())
    }
}

/// Provenance of a matching run, carried along with the communities.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MatchMeta {
    pub algorithm: String,
    pub weights: String,
    pub order: String,
    pub k: usize,
    pub delta_m: f64,
    pub seed: Option<u64>,
    /// Number of cache-miss weight evaluations spent building the matching.
    pub computed_weights: u64,
}

/// A set of disjoint communities, each with exactly one prosumer.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Matching {
    pub communities: Vec<Community>,
    pub meta: MatchMeta,
}

impl Matching {
    pub fn new(communities: Vec<Community>, meta: MatchMeta) -> Self {
        Self { communities, meta }
    }

    pub fn is_empty(&self) -> bool {
        self.communities.is_empty()
    }

    /// Total number of matched households.
    pub fn matched_households(&self) -> usize {
        self.communities.iter().map(|c| c.size()).sum()
    }
}

/// Checks a matching against the structural invariants: known households,
/// disjoint communities, one real prosumer each, the `k` size bound and
/// Δ-feasibility of every (prosumer, consumer) pair.
///
/// Returns the first violated invariant; an unknown household id is a
/// malformed-input error rather than a verdict.
pub fn validate_matching(
    matching: &Matching,
    graph: &NeighborGraph,
    k: usize,
    households: &[Household],
) -> Result<()> {
    let known: BTreeSet<HouseholdId> = households.iter().map(|h| h.id).collect();
    let by_id: std::collections::BTreeMap<HouseholdId, &Household> =
        households.iter().map(|h| (h.id, h)).collect();

    let mut seen: BTreeSet<HouseholdId> = BTreeSet::new();
    for community in &matching.communities {
        for id in community.members() {
            if !known.contains(&id) {
                return Err(Error::UnknownHousehold(id));
            }
        }
        if community.size() > k {
            return Err(Violation::SizeBound {
                prosumer: community.prosumer,
                size: community.size(),
                k,
            }
            .into());
        }
        if !by_id[&community.prosumer].is_prosumer() {
            return Err(Violation::ProsumerRole(community.prosumer).into());
        }
        if community.consumers.contains(&community.prosumer) {
            return Err(Violation::SelfMembership(community.prosumer).into());
        }
        for id in community.members() {
            if !seen.insert(id) {
                return Err(Violation::Disjointness(id).into());
            }
        }
        for &consumer in &community.consumers {
            if !graph.has_edge(community.prosumer, consumer) {
                return Err(Violation::DeltaFeasibility {
                    prosumer: community.prosumer,
                    consumer,
                }
                .into());
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::build_neighborhoods;

    fn household(id: u32, x: f64, y: f64, pv: f64, batt: f64) -> Household {
        Household {
            id: HouseholdId(id),
            position: GeoPoint { x_m: x, y_m: y },
            consumption: TimeSeries::constant(4, 1.0),
            pv_kwp: pv,
            battery_kwh: batt,
        }
    }

    #[test]
    fn tariff_rejects_el_net_above_el_tax() {
        assert!(Tariff::new(0.25, 0.069, 0.07).is_err());
        assert!(Tariff::new(-0.1, 0.069, 0.0058).is_err());
        assert!(Tariff::new(0.25, 0.069, 0.0058).is_ok());
    }

    #[test]
    fn slice_checks_window() {
        let s = TimeSeries::new(2, vec![1.0, 2.0, 3.0]);
        assert_eq!(s.slice(&(2..5)).unwrap(), &[1.0, 2.0, 3.0]);
        assert_eq!(s.slice(&(3..4)).unwrap(), &[2.0]);
        assert!(s.slice(&(1..4)).is_err());
        assert!(s.slice(&(3..6)).is_err());
        assert!(s.slice(&(3..3)).is_err());
    }

    #[test]
    fn empty_matching_is_valid() {
        let hs = vec![household(0, 0.0, 0.0, 1.0, 0.0), household(1, 10.0, 0.0, 0.0, 0.0)];
        let g = build_neighborhoods(&hs, 100.0);
        let m = Matching::default();
        assert!(validate_matching(&m, &g, 3, &hs).is_ok());
    }

    #[test]
    fn size_bound_named() {
        let hs = vec![
            household(0, 0.0, 0.0, 1.0, 0.0),
            household(1, 1.0, 0.0, 0.0, 0.0),
            household(2, 2.0, 0.0, 0.0, 0.0),
        ];
        let g = build_neighborhoods(&hs, 100.0);
        let m = Matching::new(
            vec![Community::new(HouseholdId(0), [HouseholdId(1), HouseholdId(2)])],
            MatchMeta::default(),
        );
        // community of size 3 with k = 2 violates the size bound
        match validate_matching(&m, &g, 2, &hs) {
            Err(Error::InvalidMatching(Violation::SizeBound { size: 3, k: 2, .. })) => {}
            other => panic!("expected size bound violation, got {other:?}"),
        }
        assert!(validate_matching(&m, &g, 3, &hs).is_ok());
    }

    #[test]
    fn out_of_radius_pair_rejected() {
        // consumer sits at Δ + 1 m from the prosumer
        let hs = vec![household(0, 0.0, 0.0, 1.0, 0.0), household(1, 101.0, 0.0, 0.0, 0.0)];
        let g = build_neighborhoods(&hs, 100.0);
        let m = Matching::new(
            vec![Community::new(HouseholdId(0), [HouseholdId(1)])],
            MatchMeta::default(),
        );
        match validate_matching(&m, &g, 2, &hs) {
            Err(Error::InvalidMatching(Violation::DeltaFeasibility { .. })) => {}
            other => panic!("expected Δ-feasibility violation, got {other:?}"),
        }
    }

    #[test]
    fn unknown_household_is_malformed_input() {
        let hs = vec![household(0, 0.0, 0.0, 1.0, 0.0)];
        let g = build_neighborhoods(&hs, 100.0);
        let m = Matching::new(
            vec![Community::new(HouseholdId(0), [HouseholdId(9)])],
            MatchMeta::default(),
        );
        match validate_matching(&m, &g, 2, &hs) {
            Err(Error::UnknownHousehold(HouseholdId(9))) => {}
            other => panic!("expected unknown household, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_membership_rejected() {
        let hs = vec![
            household(0, 0.0, 0.0, 1.0, 0.0),
            household(1, 1.0, 0.0, 1.0, 0.0),
            household(2, 2.0, 0.0, 0.0, 0.0),
        ];
        let g = build_neighborhoods(&hs, 100.0);
        let m = Matching::new(
            vec![
                Community::new(HouseholdId(0), [HouseholdId(2)]),
                Community::new(HouseholdId(1), [HouseholdId(2)]),
            ],
            MatchMeta::default(),
        );
        match validate_matching(&m, &g, 3, &hs) {
            Err(Error::InvalidMatching(Violation::Disjointness(HouseholdId(2)))) => {}
            other => panic!("expected disjointness violation, got {other:?}"),
        }
    }
}
