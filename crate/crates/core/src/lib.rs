//! Covariant representations of finite-dimensional C*-correspondences and
//! partial-isometry criteria for their lifts, products, powers and roots.

// explicit indices read closer to the matrix formulas
#![allow(clippy::needless_range_loop)]

pub mod correspondence;
pub mod covrep;
pub mod error;
pub mod harness;
pub mod io;
pub mod numerics;
pub mod powers;
pub mod products;
pub mod shifts;
pub mod wold;

use serde::{Deserialize, Serialize};

pub use correspondence::{Algebra, Correspondence, StarRepresentation, TensorSpace};
pub use covrep::{ClassificationReport, CovariantRep};
pub use error::{Error, Result};
pub use numerics::{CMatrix, Subspace, Tolerance, C64};

/// Whether the hypotheses of a criterion hold for the given input.
///
/// A criterion whose hypotheses fail reports `NotApplicable` instead of a
/// verdict, so hypothesis failure is never confused with a false conclusion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum Applicability {
    Applicable,
    NotApplicable(String),
}

impl Applicability {
    pub fn is_applicable(&self) -> bool {
        matches!(self, Applicability::Applicable)
    }
}
