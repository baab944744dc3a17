use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use super::network::{GridError, Network};

/// The attacker's knowledge split of the grid. All bus ids are external ids;
/// sets are kept sorted so construction is deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    /// Local buses (perfect attacker knowledge).
    pub local: Vec<usize>,
    /// Boundary buses: local buses adjacent to at least one external bus.
    pub boundary: Vec<usize>,
    /// Internal buses: local minus boundary.
    pub internal: Vec<usize>,
    /// External buses.
    pub external: Vec<usize>,
    /// Branch ids with both endpoints local.
    pub local_lines: Vec<usize>,
    /// Per boundary bus (aligned with `boundary`): incident local line ids.
    pub boundary_local_lines: Vec<Vec<usize>>,
    /// Per boundary bus: incident non-local (tie) line ids.
    pub boundary_external_lines: Vec<Vec<usize>>,
    /// Per local bus (aligned with `local`): generator positions in the
    /// network's generator list.
    pub gens_at_local_bus: Vec<Vec<usize>>,
}

impl Partition {
    pub fn n_local(&self) -> usize {
        self.local.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary.len()
    }

    pub fn is_local(&self, bus: usize) -> bool {
        self.local.binary_search(&bus).is_ok()
    }

    pub fn is_boundary(&self, bus: usize) -> bool {
        self.boundary.binary_search(&bus).is_ok()
    }

    /// Position of external bus id `bus` within `local`, if local.
    pub fn local_pos(&self, bus: usize) -> Option<usize> {
        self.local.binary_search(&bus).ok()
    }

    pub fn boundary_pos(&self, bus: usize) -> Option<usize> {
        self.boundary.binary_search(&bus).ok()
    }

    /// Generator positions (into the network list) for all local generators,
    /// in network order.
    pub fn local_gens(&self, net: &Network) -> Vec<usize> {
        net.generators
            .iter()
            .enumerate()
            .filter(|(_, g)| self.is_local(g.bus))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Derives the attacker's partition from a local bus set. Boundary buses
/// must carry load (the sub-network is bounded by load buses).
pub fn make_partition(net: &Network, local_buses: &[usize]) -> Result<Partition, GridError> {
    let local: BTreeSet<usize> = local_buses.iter().copied().collect();
    if local.is_empty() {
        return Err(GridError::Partition("local bus set is empty".into()));
    }
    for &b in &local {
        if net.bus_index(b).is_none() {
            return Err(GridError::Partition(format!("local bus {b} is not in the network")));
        }
    }
    if local.len() == net.n_buses() {
        return Err(GridError::Partition(
            "local set covers the whole network; the external set must be non-empty".into(),
        ));
    }

    let mut boundary = BTreeSet::new();
    for br in &net.branches {
        match (local.contains(&br.from), local.contains(&br.to)) {
            (true, false) => {
                boundary.insert(br.from);
            }
            (false, true) => {
                boundary.insert(br.to);
            }
            _ => {}
        }
    }
    for &b in &boundary {
        let load = net.buses[net.bus_index(b).unwrap()].load;
        if load <= 0.0 {
            return Err(GridError::Partition(format!(
                "boundary bus {b} carries no load; the sub-network must be bounded by load buses"
            )));
        }
    }

    let local: Vec<usize> = local.into_iter().collect();
    let boundary: Vec<usize> = boundary.into_iter().collect();
    let internal: Vec<usize> = local.iter().copied().filter(|b| boundary.binary_search(b).is_err()).collect();
    let external: Vec<usize> = net
        .buses
        .iter()
        .map(|b| b.id)
        .filter(|id| local.binary_search(id).is_err())
        .collect();

    let local_lines: Vec<usize> = net
        .branches
        .iter()
        .filter(|br| local.binary_search(&br.from).is_ok() && local.binary_search(&br.to).is_ok())
        .map(|br| br.id)
        .collect();

    let mut boundary_local_lines = vec![Vec::new(); boundary.len()];
    let mut boundary_external_lines = vec![Vec::new(); boundary.len()];
    for br in &net.branches {
        let is_local_line = local_lines.binary_search(&br.id).is_ok();
        for &end in &[br.from, br.to] {
            if let Ok(pos) = boundary.binary_search(&end) {
                if is_local_line {
                    boundary_local_lines[pos].push(br.id);
                } else {
                    boundary_external_lines[pos].push(br.id);
                }
            }
        }
    }

    let mut gens_at_local_bus = vec![Vec::new(); local.len()];
    for (gi, g) in net.generators.iter().enumerate() {
        if let Ok(pos) = local.binary_search(&g.bus) {
            gens_at_local_bus[pos].push(gi);
        }
    }

    Ok(Partition {
        local,
        boundary,
        internal,
        external,
        local_lines,
        boundary_local_lines,
        boundary_external_lines,
        gens_at_local_bus,
    })
}

/// The measurement-tampering region: buses whose states the attack shifts
/// (centers) plus every neighbor, and all lines incident to a center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSubgraph {
    pub centers: Vec<usize>,
    pub members: Vec<usize>,
    pub member_lines: Vec<usize>,
}

impl AttackSubgraph {
    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }
}

/// Support threshold for calling an attack entry non-zero.
pub const SUPPORT_EPS: f64 = 1e-9;

/// Builds the attack sub-graph from a local attack vector indexed over the
/// partition's `local` ordering. Entries on boundary buses must be zero.
pub fn derive_attack_subgraph(
    net: &Network,
    part: &Partition,
    local_attack: &[f64],
) -> Result<AttackSubgraph, GridError> {
    if local_attack.len() != part.n_local() {
        return Err(GridError::Attack(format!(
            "attack vector has {} entries for {} local buses",
            local_attack.len(),
            part.n_local()
        )));
    }
    let mut centers = BTreeSet::new();
    for (i, &c) in local_attack.iter().enumerate() {
        if c.abs() > SUPPORT_EPS {
            let bus = part.local[i];
            if part.is_boundary(bus) {
                return Err(GridError::Attack(format!(
                    "attack vector is non-zero at boundary bus {bus}; the attack must stay inside the sub-network"
                )));
            }
            centers.insert(bus);
        }
    }
    let mut members = centers.clone();
    let mut member_lines = BTreeSet::new();
    for br in &net.branches {
        let f_center = centers.contains(&br.from);
        let t_center = centers.contains(&br.to);
        if f_center || t_center {
            member_lines.insert(br.id);
            members.insert(br.from);
            members.insert(br.to);
        }
    }
    Ok(AttackSubgraph {
        centers: centers.into_iter().collect(),
        members: members.into_iter().collect(),
        member_lines: member_lines.into_iter().collect(),
    })
}
