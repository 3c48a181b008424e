//! Schreier graphs of group actions, coupling families and the measures built
//! from them, with exact arithmetic throughout.

pub mod constructions;
pub mod error;
pub mod groups;
pub mod liouville;
pub mod measures;
pub mod numerics;
pub mod schreier;
pub mod thompson;

pub use error::{Error, Result};
