//! Grammar-driven synthesis of planning queries for tool-using agents, with
//! constraint oracles, a mock-tool harness and root-cause dissection.

pub mod campaign;
pub mod dissect;
pub mod endpoint;
pub mod grammar;
pub mod harness;
pub mod lexicon;
pub mod model;
pub mod solver;
pub mod synthesis;

pub use model::{ActionId, ActionSpec, Direction, Hour, Mode};
