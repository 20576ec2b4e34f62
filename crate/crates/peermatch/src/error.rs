use thiserror::Error;

use crate::model::HouseholdId;

/// Errors reported by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("negative energy flow: {0} kWh")]
    NegativeFlow(f64),

    #[error("window {start}..{end} outside series range {lo}..{hi}")]
    WindowOutOfRange {
        start: usize,
        end: usize,
        lo: usize,
        hi: usize,
    },

    #[error("mismatched horizons: {left} h vs {right} h")]
    HorizonMismatch { left: usize, right: usize },

    #[error("household {0} has a battery; use the battery dispatch bill")]
    BatteryNeedsDispatch(HouseholdId),

    #[error("initial state of charge {soc} kWh outside [0, {capacity}] kWh")]
    InitialSocOutOfRange { soc: f64, capacity: f64 },

    #[error("dispatch produced a non-finite bill; input data is likely corrupt")]
    NonFiniteBill,

    #[error("unknown household id {0}")]
    UnknownHousehold(HouseholdId),

    #[error("empty member set")]
    EmptyCommunity,

    #[error("invalid matching: {0}")]
    InvalidMatching(#[from] Violation),

    #[error("{algorithm} requires a memoryless weight function, got {weights}")]
    MemoryfulNotSupported {
        algorithm: &'static str,
        weights: &'static str,
    },

    #[error("instance too large for exhaustive search: {vertices} vertices (limit {limit})")]
    InstanceTooLarge { vertices: usize, limit: usize },

    #[error("invalid tariff: {0}")]
    InvalidTariff(String),

    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A violated matching invariant, named after the constraint it breaks.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("size bound: community of prosumer {prosumer} has {size} members, limit k = {k}")]
    SizeBound {
        prosumer: HouseholdId,
        size: usize,
        k: usize,
    },

    #[error("disjointness: household {0} appears in more than one community")]
    Disjointness(HouseholdId),

    #[error("prosumer role: household {0} has no PV capacity")]
    ProsumerRole(HouseholdId),

    #[error("consumer role: household {0} cannot be its own consumer")]
    SelfMembership(HouseholdId),

    #[error("Δ-feasibility: pair ({prosumer}, {consumer}) is not an edge of the neighbor graph")]
    DeltaFeasibility {
        prosumer: HouseholdId,
        consumer: HouseholdId,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
