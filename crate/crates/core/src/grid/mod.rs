//! Grid case data: parsing, validation, rating transforms, and the
//! attacker's sub-network partition.

mod network;
mod parse;
mod partition;

pub use network::{Branch, Bus, Generator, GridError, Network};
pub use parse::parse_case;
pub use partition::{derive_attack_subgraph, make_partition, AttackSubgraph, Partition};
