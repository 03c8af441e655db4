//! Workbench for CCS with rollback: syntax, forward and rollback reduction,
//! the labelled transition system, trace zipping, and bounded decision
//! procedures for the safety and liveness preorders.

pub mod error;
pub mod gen;
pub mod lts;
pub mod preorders;
pub mod reduction;
pub mod syntax;
pub mod testing;
pub mod traces;
pub mod verify;

pub use error::{Error, Result};
