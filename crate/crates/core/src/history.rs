//! Synthetic historical data: load perturbations, replayed dispatches, the
//! attacker-visible records, and the congestion/variability sets that the
//! perfect-prediction certificate needs.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dc::DcOperators;
use crate::dcopf::{solve_global_opf_instance, Dispatch, OpfError};
use crate::grid::{Network, Partition};
use crate::rng::{mix, Rng};

pub const DEFAULT_HISTORY_COUNT: usize = 200;
pub const LOAD_STD_DEV: f64 = 0.10;
pub const REDRAW_LIMIT: usize = 50;
/// Max-min spread below which an external injection counts as constant.
pub const CONSTANT_INJECTION_TOL: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum HistoryError {
    #[error("count must be at least 1")]
    EmptyCount,
    #[error("instance {instance}: no feasible load draw in {limit} attempts")]
    RetryBudget { instance: usize, limit: usize },
    #[error("dispatch failed: {0}")]
    Opf(#[from] OpfError),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed dataset file: {0}")]
    Parse(String),
    #[error("dataset fingerprint {found} does not match the network ({expected})")]
    Fingerprint { found: String, expected: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// Only loads inside the local region vary.
    LocalOnly,
    /// All loads vary.
    All,
}

impl Scenario {
    pub fn tag(self) -> u8 {
        match self {
            Scenario::LocalOnly => 1,
            Scenario::All => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            1 => Some(Scenario::LocalOnly),
            2 => Some(Scenario::All),
            _ => None,
        }
    }
}

/// What the attacker sees for one historical instance, all restricted to
/// the local region and ordered by the partition's sorted id lists.
#[derive(Debug, Clone)]
pub struct HistoricalRecord {
    pub instance: usize,
    /// Loads at local buses (p.u.).
    pub local_loads: DVector<f64>,
    /// Local generator outputs, in `Partition::local_gens` order (p.u.).
    pub local_dispatch: DVector<f64>,
    /// Flows on local lines, in `local_lines` order (p.u.).
    pub local_flows: DVector<f64>,
    /// Pseudo-boundary injections, boundary order (p.u.).
    pub pseudo_injections: DVector<f64>,
    /// LMPs at boundary buses ($/p.u.-h).
    pub boundary_lmp: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct HistoricalDataset {
    pub records: Vec<HistoricalRecord>,
    pub scenario: Scenario,
    pub seed: u64,
    /// Fingerprint of the case text the dataset was generated from.
    pub fingerprint: String,
}

/// Congestion and injection-variability structure of a dataset, derived
/// with omniscient access (test-harness role; the attacker never sees it).
#[derive(Debug, Clone)]
pub struct VariabilitySets {
    /// Branch indices congested (same direction) in every instance.
    pub congested: Vec<usize>,
    /// +1/-1 per entry of `congested`.
    pub signs: Vec<f64>,
    /// External bus ids whose injection is constant across instances.
    pub z_buses: Vec<usize>,
    /// External bus ids with varying injection (𝓔 minus the constant set).
    pub y_buses: Vec<usize>,
    /// Constant injections, aligned with `z_buses` (p.u.).
    pub v_z: DVector<f64>,
}

/// One feasible perturbed instance: the full load vector and its dispatch.
/// Redraws continue the same per-instance stream, so reconstruction from
/// (seed, instance) is exact.
pub fn draw_instance(
    net: &Network,
    ops: &DcOperators,
    part: &Partition,
    scenario: Scenario,
    seed: u64,
    instance: usize,
    std_dev: f64,
) -> Result<(DVector<f64>, Dispatch), HistoryError> {
    let base = net.load_vector();
    let mut rng = Rng::new(mix(seed, instance as u64));
    for _ in 0..REDRAW_LIMIT {
        let mut load = base.clone();
        for (b, bus) in net.buses.iter().enumerate() {
            let perturb = match scenario {
                Scenario::LocalOnly => part.is_local(bus.id),
                Scenario::All => true,
            };
            if perturb && bus.load != 0.0 {
                load[b] = bus.load * (1.0 + rng.next_normal(0.0, std_dev));
            }
        }
        match solve_global_opf_instance(net, ops, &load, None) {
            Ok(d) => return Ok((load, d)),
            Err(OpfError::Infeasible) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Err(HistoryError::RetryBudget { instance, limit: REDRAW_LIMIT })
}

/// Eq.-16 route: pseudo-boundary injection from local data only
/// (generation at the bus, minus its load, minus oriented local-line flows).
pub fn pseudo_boundary_injections(
    net: &Network,
    part: &Partition,
    local_loads: &DVector<f64>,
    local_dispatch: &DVector<f64>,
    local_flows: &DVector<f64>,
) -> DVector<f64> {
    let local_gens = part.local_gens(net);
    DVector::from_fn(part.n_boundary(), |t, _| {
        let bus = part.boundary[t];
        let lpos = part.local_pos(bus).unwrap();
        let mut v = -local_loads[lpos];
        for &g in &part.gens_at_local_bus[lpos] {
            let slot = local_gens.iter().position(|&x| x == g).unwrap();
            v += local_dispatch[slot];
        }
        for &line in &part.boundary_local_lines[t] {
            let br = &net.branches[net.branch_index(line).unwrap()];
            let slot = part.local_lines.binary_search(&line).unwrap();
            v -= if br.from == bus { local_flows[slot] } else { -local_flows[slot] };
        }
        v
    })
}

/// Definition route: sum of tie-line flows leaving the local region at each
/// boundary bus, computed from full-network flows (omniscient cross-check).
pub fn pseudo_injections_from_external_flows(
    net: &Network,
    part: &Partition,
    flows: &DVector<f64>,
) -> DVector<f64> {
    DVector::from_fn(part.n_boundary(), |t, _| {
        let bus = part.boundary[t];
        part.boundary_external_lines[t]
            .iter()
            .map(|&line| {
                let idx = net.branch_index(line).unwrap();
                if net.branches[idx].from == bus { flows[idx] } else { -flows[idx] }
            })
            .sum()
    })
}

fn record_from(
    net: &Network,
    part: &Partition,
    instance: usize,
    load: &DVector<f64>,
    d: &Dispatch,
) -> HistoricalRecord {
    let local_loads = DVector::from_iterator(
        part.n_local(),
        part.local.iter().map(|&b| load[net.bus_index(b).unwrap()]),
    );
    let local_gens = part.local_gens(net);
    let local_dispatch =
        DVector::from_iterator(local_gens.len(), local_gens.iter().map(|&g| d.p_g[g]));
    let local_flows = DVector::from_iterator(
        part.local_lines.len(),
        part.local_lines.iter().map(|&l| d.flows[net.branch_index(l).unwrap()]),
    );
    let pseudo_injections =
        pseudo_boundary_injections(net, part, &local_loads, &local_dispatch, &local_flows);
    let boundary_lmp = DVector::from_iterator(
        part.n_boundary(),
        part.boundary.iter().map(|&b| d.lmp[net.bus_index(b).unwrap()]),
    );
    HistoricalRecord {
        instance,
        local_loads,
        local_dispatch,
        local_flows,
        pseudo_injections,
        boundary_lmp,
    }
}

pub fn generate_dataset(
    net: &Network,
    ops: &DcOperators,
    part: &Partition,
    scenario: Scenario,
    count: usize,
    seed: u64,
) -> Result<HistoricalDataset, HistoryError> {
    generate_dataset_with_std(net, ops, part, scenario, count, seed, LOAD_STD_DEV)
}

pub fn generate_dataset_with_std(
    net: &Network,
    ops: &DcOperators,
    part: &Partition,
    scenario: Scenario,
    count: usize,
    seed: u64,
    std_dev: f64,
) -> Result<HistoricalDataset, HistoryError> {
    if count < 1 {
        return Err(HistoryError::EmptyCount);
    }
    let mut records = Vec::with_capacity(count);
    for i in 0..count {
        let (load, d) = draw_instance(net, ops, part, scenario, seed, i, std_dev)?;
        records.push(record_from(net, part, i, &load, &d));
    }
    Ok(HistoricalDataset {
        records,
        scenario,
        seed,
        fingerprint: net.fingerprint.clone(),
    })
}

/// Re-derives each instance's full solution (same seed, same stream) and
/// intersects congestion while measuring external-injection spreads.
pub fn derive_variability_sets(
    ds: &HistoricalDataset,
    net: &Network,
    ops: &DcOperators,
    part: &Partition,
    std_dev: f64,
) -> Result<VariabilitySets, HistoryError> {
    if ds.records.is_empty() {
        return Err(HistoryError::EmptyDataset);
    }
    let n_br = net.n_branches();
    let gen_bus: Vec<usize> = net.generators.iter().map(|g| net.bus_index(g.bus).unwrap()).collect();
    // sign per branch: 0 unknown, +-1 congested so far, NaN knocked out
    let mut sign = vec![0.0f64; n_br];
    let mut ext_min: Vec<f64> = Vec::new();
    let mut ext_max: Vec<f64> = Vec::new();
    let ext_idx: Vec<usize> = part.external.iter().map(|&b| net.bus_index(b).unwrap()).collect();

    for (i, rec) in ds.records.iter().enumerate() {
        let (load, d) = draw_instance(net, ops, part, ds.scenario, ds.seed, rec.instance, std_dev)?;
        let mut this = vec![0.0f64; n_br];
        for &k in &d.congested_pos {
            this[k] = 1.0;
        }
        for &k in &d.congested_neg {
            this[k] = -1.0;
        }
        for k in 0..n_br {
            if i == 0 {
                sign[k] = this[k];
            } else if sign[k] != this[k] {
                sign[k] = f64::NAN;
            }
        }
        let mut inj: DVector<f64> = -load.clone();
        for (g, &b) in gen_bus.iter().enumerate() {
            inj[b] += d.p_g[g];
        }
        if i == 0 {
            ext_min = ext_idx.iter().map(|&b| inj[b]).collect();
            ext_max = ext_min.clone();
        } else {
            for (t, &b) in ext_idx.iter().enumerate() {
                ext_min[t] = ext_min[t].min(inj[b]);
                ext_max[t] = ext_max[t].max(inj[b]);
            }
        }
    }

    let mut congested = Vec::new();
    let mut signs = Vec::new();
    for k in 0..n_br {
        if sign[k] == 1.0 || sign[k] == -1.0 {
            congested.push(k);
            signs.push(sign[k]);
        }
    }
    let mut z_buses = Vec::new();
    let mut y_buses = Vec::new();
    let mut v_z = Vec::new();
    for (t, &bus) in part.external.iter().enumerate() {
        if ext_max[t] - ext_min[t] <= CONSTANT_INJECTION_TOL {
            z_buses.push(bus);
            v_z.push(0.5 * (ext_max[t] + ext_min[t]));
        } else {
            y_buses.push(bus);
        }
    }
    Ok(VariabilitySets { congested, signs, z_buses, y_buses, v_z: DVector::from_vec(v_z) })
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    scenario: u8,
    seed: u64,
    fingerprint: String,
    count: usize,
}

fn fmt(v: f64) -> String {
    // Shortest round-trip text keeps reloads bit-exact.
    format!("{v}")
}

/// Writes `<path>` as CSV plus `<path>.json` with generation metadata.
pub fn save_dataset(
    ds: &HistoricalDataset,
    net: &Network,
    part: &Partition,
    path: &Path,
) -> Result<(), HistoryError> {
    let mut out = String::new();
    out.push_str("instance");
    for &b in &part.local {
        out.push_str(&format!(",load_b{b}"));
    }
    for &g in &part.local_gens(net) {
        out.push_str(&format!(",pg_g{}", net.generators[g].id));
    }
    for &l in &part.local_lines {
        out.push_str(&format!(",flow_l{l}"));
    }
    for &b in &part.boundary {
        out.push_str(&format!(",pi_b{b}"));
    }
    for &b in &part.boundary {
        out.push_str(&format!(",lmp_b{b}"));
    }
    out.push('\n');
    for r in &ds.records {
        out.push_str(&r.instance.to_string());
        for v in r
            .local_loads
            .iter()
            .chain(r.local_dispatch.iter())
            .chain(r.local_flows.iter())
            .chain(r.pseudo_injections.iter())
            .chain(r.boundary_lmp.iter())
        {
            out.push(',');
            out.push_str(&fmt(*v));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    let sidecar = Sidecar {
        scenario: ds.scenario.tag(),
        seed: ds.seed,
        fingerprint: ds.fingerprint.clone(),
        count: ds.records.len(),
    };
    let json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| HistoryError::Parse(e.to_string()))?;
    std::fs::write(sidecar_path(path), json)?;
    Ok(())
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    std::path::PathBuf::from(p)
}

/// Loads a dataset written by `save_dataset`, validating the sidecar
/// fingerprint against the supplied network.
pub fn load_dataset(
    net: &Network,
    part: &Partition,
    path: &Path,
) -> Result<HistoricalDataset, HistoryError> {
    let sidecar: Sidecar = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)
        .map_err(|e| HistoryError::Parse(format!("sidecar: {e}")))?;
    if sidecar.fingerprint != net.fingerprint {
        return Err(HistoryError::Fingerprint {
            found: sidecar.fingerprint,
            expected: net.fingerprint.clone(),
        });
    }
    let scenario = Scenario::from_tag(sidecar.scenario)
        .ok_or_else(|| HistoryError::Parse(format!("unknown scenario {}", sidecar.scenario)))?;
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| HistoryError::Parse("empty file".into()))?;
    let n_l = part.n_local();
    let n_g = part.local_gens(net).len();
    let n_ll = part.local_lines.len();
    let n_bd = part.n_boundary();
    let expected_cols = 1 + n_l + n_g + n_ll + 2 * n_bd;
    if header.split(',').count() != expected_cols {
        return Err(HistoryError::Parse(format!(
            "header has {} columns, partition implies {expected_cols}",
            header.split(',').count()
        )));
    }
    let mut records = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != expected_cols {
            return Err(HistoryError::Parse(format!("row {}: wrong column count", ln + 2)));
        }
        let instance: usize = cells[0]
            .parse()
            .map_err(|_| HistoryError::Parse(format!("row {}: bad instance", ln + 2)))?;
        let nums: Vec<f64> = cells[1..]
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| HistoryError::Parse(format!("row {}: bad number", ln + 2)))?;
        let mut at = 0usize;
        let mut take = |n: usize| {
            let v = DVector::from_column_slice(&nums[at..at + n]);
            at += n;
            v
        };
        records.push(HistoricalRecord {
            instance,
            local_loads: take(n_l),
            local_dispatch: take(n_g),
            local_flows: take(n_ll),
            pseudo_injections: take(n_bd),
            boundary_lmp: take(n_bd),
        });
    }
    if records.len() != sidecar.count {
        return Err(HistoryError::Parse(format!(
            "sidecar promises {} records, file has {}",
            sidecar.count,
            records.len()
        )));
    }
    Ok(HistoricalDataset { records, scenario, seed: sidecar.seed, fingerprint: net.fingerprint.clone() })
}
