//! Lattice statistical-mechanics engine for the spin O(n) model on tori and the
//! loop O(n) model on hexagonal-lattice domains.

pub mod error;
pub mod lattice;
pub mod loop_core;
pub mod loop_samplers;
pub mod loop_structure;
pub mod oracle;
pub mod representations;
pub mod rng;
pub mod saw;
pub mod snapshot;
pub mod spin_core;
pub mod spin_observables;
pub mod spin_samplers;
pub mod stats;

pub use error::{Error, Result};
