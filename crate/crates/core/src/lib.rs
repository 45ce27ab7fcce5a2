//! Exact computer algebra for Bunce-Deddens algebras `C(Z/SZ) ⋊ Z`.

pub mod bd_algebra;
pub mod cyclotomic;
pub mod derivations;
pub mod error;
pub mod homalg;
pub mod k_invariants;
pub mod laurent;
pub mod numtheory;
pub mod odometer_fn;
pub mod profinite;
pub mod supernatural;
pub mod verify;

pub use error::{Error, Result};
