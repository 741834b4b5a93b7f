//! Coalescing boundary/opinion dynamics on the two-sublattice diagonal grid.
//!
//! A single field of West/South choices on the half-integer sublattice drives
//! two coupled pictures at once: boundaries flowing forward (up-diagonal) that
//! merge on contact, and opinion lineages flowing backward that coalesce. The
//! crate computes empty-interval probabilities and point correlations of the
//! boundary process three independent ways and checks them against each other:
//!
//! * exact rational enumeration and lineage dynamic programming ([`exact`]),
//! * closed-form crossing kernels and Pfaffian point-process formulas
//!   ([`kernels`], [`pfaffian`], [`pointprocess`]),
//! * direct Monte Carlo over sampled choice fields ([`montecarlo`]).

pub mod error;
pub mod exact;
pub mod forests;
pub mod kernels;
pub mod lattice;
pub mod montecarlo;
pub mod pfaffian;
pub mod pointprocess;
mod rng;
pub mod special;

pub use error::{Error, Result};
pub use exact::{enumerate_all_events, enumerate_event_probability, lineage_dp, RationalProbability};
pub use forests::{EventKind, IntervalSpec};
pub use kernels::KernelSpec;
pub use lattice::{Coord, LatticeVertex, Rect, WeightField};
pub use montecarlo::{estimate_correlation, estimate_event, EstimatorResult};
pub use pfaffian::{empty_interval_probability, empty_interval_probability_kernel};
pub use pointprocess::{correlation_mobius, correlation_pfaffian, gap_probability, SiteSet};

/// A probability carried either exactly or in floating point, depending on
/// the route that produced it.
#[derive(Clone, Debug, PartialEq)]
pub enum ProbabilityValue {
    Exact(RationalProbability),
    Float(f64),
}

impl ProbabilityValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            ProbabilityValue::Exact(r) => r.to_f64(),
            ProbabilityValue::Float(x) => *x,
        }
    }

    /// The exact value, when this route has one.
    pub fn exact(&self) -> Option<&RationalProbability> {
        match self {
            ProbabilityValue::Exact(r) => Some(r),
            ProbabilityValue::Float(_) => None,
        }
    }
}

impl std::fmt::Display for ProbabilityValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProbabilityValue::Exact(r) => write!(f, "{r}"),
            ProbabilityValue::Float(x) => write!(f, "{x:.16e}"),
        }
    }
}
