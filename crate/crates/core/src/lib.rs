//! Truncated free models of cellular globular theories.
//!
//! The crate computes, at desk scale, the objects of the algebraic
//! injectivity approach to weak ω-categories and ω-groupoids:
//!
//! * [`globset`], [`map`], [`colimit`], [`shapes`], [`contract`]: finite
//!   dimension-truncated globular sets, their maps, pushouts, disks and
//!   spheres, parallel pairs and contractibility.
//! * [`theta`]: tables of dimensions, their realizations as globular sums,
//!   and Θ₀ hom-sets.
//! * [`engine`]: a generic algebraic-injectivity engine — semifinal lifting
//!   chains of pushouts, free algebraic injectives, provenance and ledgers —
//!   over any [`engine::ComputableBase`].
//! * [`tower`]: towers of levels of liftings over globular sets, truncated
//!   free models, coherator saturation and theory hom-sets.
//! * [`verify`]: three-valued checks of monomorphy, cellularity,
//!   contractibility and faithfulness.
//! * [`variety`]: the Set-level instance — finitary signatures with
//!   equations, free algebras, and an independent term oracle.
//!
//! Everything is deterministic: cells are named by provenance [`term::Term`]s
//! and every truncation is recorded in a [`ledger::Ledger`].

pub mod colimit;
pub mod contract;
pub mod engine;
pub mod globset;
pub mod ledger;
pub mod map;
pub mod shapes;
pub mod term;
pub mod theta;
pub mod tower;
pub mod variety;
pub mod verify;

pub use globset::{Cell, GlobularSet};
pub use map::GlobularMap;
pub use term::Term;
