//! Classical simulations of the singlet correlations of two maximally
//! entangled qubits.
//!
//! Three protocols are provided:
//!
//! * [`single_world`]: one shared pair of random directions, one bit from
//!   Alice to Bob, one outcome per party.
//! * [`two_instance`]: each party holds two unweighted instances with opposite
//!   outcomes and sends one bit to a meeting point, where the instances are
//!   paired by a local PR-box rule. Purely local, finite information.
//! * [`branching`]: the weighted-branch baseline, computed exactly, which
//!   needs real parameters at the meeting point.
//!
//! [`framework`] holds the generic multi-instance bookkeeping and
//! [`analytics`] the oracles, estimators and audits.

pub mod analytics;
pub mod branching;
pub mod error;
pub mod framework;
pub mod geometry;
pub mod ledger;
pub mod rng;
pub mod single_world;
pub mod two_instance;

pub use error::{Error, Result};
pub use geometry::{sgn, Sign, UnitVector3, Vec3};
pub use ledger::CommLedger;
pub use rng::{derive_substream, sample_unit_vector, RngStream};
