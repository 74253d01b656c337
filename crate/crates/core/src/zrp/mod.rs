//! Zero range process on the discrete torus with site-dependent speeds.

mod config;
mod equilibrium;
mod kernel;
mod process;
mod rate_index;

pub use config::Configuration;
pub use equilibrium::{EquilibriumError, EquilibriumTables, SiteMoments, DEFAULT_CAP};
pub use kernel::JumpKernel;
pub use process::{
    profile_at_sites, sample_product_measure, LatticeModel, StepOutcome, ZrpProcess, REBUILD_EVERY,
};
pub use rate_index::RateIndex;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZrpError {
    #[error("invalid jump kernel: {0}")]
    InvalidKernel(String),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error("density {rho} at site {site} has no equilibrium fugacity: {source}")]
    ProfileRange {
        site: usize,
        rho: f64,
        source: EquilibriumError,
    },
    #[error("event budget exhausted after {events} events at time {time}")]
    EventBudget { events: u64, time: f64 },
    #[error("configuration has {found} sites, model has {expected}")]
    LatticeMismatch { expected: usize, found: usize },
    #[error("{0}")]
    Invalid(String),
}
