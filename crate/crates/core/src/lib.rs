//! Enumeration and counting of directed binary perfect phylogenies for
//! incomplete binary character data.
//!
//! An instance gives, for every character `i`, a lower bound `L_i` and an
//! upper bound `U_i` on the set of species that carry the character. A
//! solution picks `L_i ⊆ S_i ⊆ U_i` for every character so that the sets
//! form a laminar sequence (any two are nested or disjoint).
//!
//! Two exact solvers are provided:
//!
//! * [`zdd_enum`] compiles every solution into a zero-suppressed decision
//!   diagram ([`zdd`]) and counts or lists its members.
//! * [`bnb`] is a branch-and-bound search bounded by the polynomial
//!   decision procedure in [`feasibility`].
//!
//! [`feasibility::brute_force_solutions`] and
//! [`reductions::brute_force_matching_count`] serve as independent oracles.

pub mod bench;
pub mod bnb;
pub mod datagen;
mod error;
pub mod feasibility;
pub mod format;
pub mod instance;
pub mod reductions;
mod set;
pub mod zdd;
pub mod zdd_enum;

pub use error::{Error, Result};
pub use instance::{canonical_key, is_laminar, is_sandwiched, validate_instance, Instance, Phylogeny, Violation};
pub use set::ElementSet;
