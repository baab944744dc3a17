pub mod attack;
pub mod dc;
pub mod dcopf;
pub mod evaluator;
pub mod grid;
pub mod history;
pub mod regression;
pub mod rng;
pub mod solver;

pub use grid::{Branch, Bus, Generator, GridError, Network, Partition};
