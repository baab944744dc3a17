//! Dense DC linear operators: nodal susceptance matrix H, branch-flow matrix
//! Γ, PTDF matrix K, and the noise-free WLS residual check.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::grid::{Network, Partition};

/// Relative singular-value cutoff shared by rank tests and pseudoinverses.
pub const RANK_REL_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum DcError {
    #[error("reduced susceptance matrix is singular; the network is electrically disconnected")]
    SingularReduced,
    #[error("PTDF construction self-check failed: max |K - Gamma H^+| = {0:e}")]
    PtdfMismatch(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("measurement set is unobservable: rank {rank} < {need} after pinning the slack angle")]
    Unobservable { rank: usize, need: usize },
}

/// The DC model operators for one network. Immutable and shareable.
#[derive(Debug, Clone)]
pub struct DcOperators {
    /// n_b x n_b injection-to-angle susceptance matrix.
    pub h: DMatrix<f64>,
    /// n_br x n_b branch-flow matrix; row l holds +-1/x_l at the endpoints.
    pub gamma: DMatrix<f64>,
    /// n_br x n_b PTDF matrix, normalized so every row sums to zero.
    pub k: DMatrix<f64>,
    /// Internal index of the slack bus.
    pub slack: usize,
}

/// Builds H, Γ, and K for a connected network. K is computed by factorizing
/// the slack-reduced H and is verified against the Γ·H⁺ pseudoinverse route.
pub fn build_operators(net: &Network) -> Result<DcOperators, DcError> {
    let n_b = net.n_buses();
    let n_br = net.n_branches();
    let slack = net.slack_index();

    let mut gamma = DMatrix::zeros(n_br, n_b);
    let mut h = DMatrix::zeros(n_b, n_b);
    for (l, br) in net.branches.iter().enumerate() {
        let f = net.bus_index(br.from).unwrap();
        let t = net.bus_index(br.to).unwrap();
        let b = 1.0 / br.reactance;
        gamma[(l, f)] = b;
        gamma[(l, t)] = -b;
        h[(f, f)] += b;
        h[(t, t)] += b;
        h[(f, t)] -= b;
        h[(t, f)] -= b;
    }

    // Slack-reduced solve: delete the slack row/column, invert, re-insert a
    // zero column at the slack position.
    let keep: Vec<usize> = (0..n_b).filter(|&i| i != slack).collect();
    let mut h_red = DMatrix::zeros(n_b - 1, n_b - 1);
    for (ri, &i) in keep.iter().enumerate() {
        for (rj, &j) in keep.iter().enumerate() {
            h_red[(ri, rj)] = h[(i, j)];
        }
    }
    let lu = h_red.lu();
    let mut gamma_red_t = DMatrix::zeros(n_b - 1, n_br);
    for (ri, &i) in keep.iter().enumerate() {
        for l in 0..n_br {
            gamma_red_t[(ri, l)] = gamma[(l, i)];
        }
    }
    let theta = lu.solve(&gamma_red_t).ok_or(DcError::SingularReduced)?;
    let mut k = DMatrix::zeros(n_br, n_b);
    for (ri, &i) in keep.iter().enumerate() {
        for l in 0..n_br {
            k[(l, i)] = theta[(ri, l)];
        }
    }

    // Cross-check against the pseudoinverse construction (Moore-Penrose via
    // SVD). The two routes differ by a rank-one reference shift that the
    // K·1 = 0 normalization removes, so compare after removing row means.
    let h_pinv = pseudo_inverse(&h, RANK_REL_TOL);
    let k_alt = &gamma * &h_pinv;
    let mut max_diff: f64 = 0.0;
    for l in 0..n_br {
        let row_mean = k.row(l).sum() / n_b as f64;
        let alt_mean = k_alt.row(l).sum() / n_b as f64;
        for i in 0..n_b {
            let d = ((k[(l, i)] - row_mean) - (k_alt[(l, i)] - alt_mean)).abs();
            max_diff = max_diff.max(d);
        }
    }
    if max_diff > 1e-7 {
        return Err(DcError::PtdfMismatch(max_diff));
    }
    // Normalize K so that K·1 = 0 (uniform injection produces no flow),
    // matching the pseudoinverse route exactly.
    for l in 0..n_br {
        let row_mean = k.row(l).sum() / n_b as f64;
        for i in 0..n_b {
            k[(l, i)] -= row_mean;
        }
    }

    Ok(DcOperators { h, gamma, k, slack })
}

/// Branch flows from a bus injection vector: P = K v.
pub fn flows(k: &DMatrix<f64>, injections: &DVector<f64>) -> Result<DVector<f64>, DcError> {
    if k.ncols() != injections.len() {
        return Err(DcError::Dimension(format!(
            "K has {} columns, injection vector has {} entries",
            k.ncols(),
            injections.len()
        )));
    }
    Ok(k * injections)
}

/// Number of singular values above `rel_tol` times the largest.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let svals = m.clone().singular_values();
    let max = svals.max();
    if max <= 0.0 {
        return 0;
    }
    svals.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Moore-Penrose pseudoinverse via SVD with a relative cutoff.
pub fn pseudo_inverse(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let max = svd.singular_values.max();
    let eps = rel_tol * max;
    let u = svd.u.as_ref().unwrap();
    let v_t = svd.v_t.as_ref().unwrap();
    let mut sigma_inv = DMatrix::zeros(v_t.nrows(), u.ncols());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > eps {
            sigma_inv[(i, i)] = 1.0 / s;
        }
    }
    v_t.transpose() * sigma_inv * u.transpose()
}

/// The full noise-free measurement stack: all bus injections then all branch
/// flows, z = [H; Γ] x.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    /// (n_b + n_br) x n_b stacked measurement matrix.
    pub matrix: DMatrix<f64>,
    pub z: DVector<f64>,
    pub slack: usize,
}

impl MeasurementSet {
    /// Synthesizes exact measurements from an angle state.
    pub fn from_state(ops: &DcOperators, x: &DVector<f64>) -> Self {
        let matrix = stack_measurement_matrix(ops);
        let z = &matrix * x;
        MeasurementSet { matrix, z, slack: ops.slack }
    }

    pub fn n_measurements(&self) -> usize {
        self.z.len()
    }

    /// Returns a copy with `delta` added to measurement row `row`.
    pub fn with_corruption(&self, row: usize, delta: f64) -> Self {
        let mut out = self.clone();
        out.z[row] += delta;
        out
    }
}

pub fn stack_measurement_matrix(ops: &DcOperators) -> DMatrix<f64> {
    let n_b = ops.h.nrows();
    let n_br = ops.gamma.nrows();
    let mut m = DMatrix::zeros(n_b + n_br, n_b);
    m.view_mut((0, 0), (n_b, n_b)).copy_from(&ops.h);
    m.view_mut((n_b, 0), (n_br, n_b)).copy_from(&ops.gamma);
    m
}

/// WLS residual norm with unit weights: ||z - A x_hat|| where x_hat is the
/// least-squares state estimate with the slack angle pinned to zero.
pub fn wls_residual(meas: &MeasurementSet) -> Result<f64, DcError> {
    let n_b = meas.matrix.ncols();
    let keep: Vec<usize> = (0..n_b).filter(|&i| i != meas.slack).collect();
    let reduced = meas.matrix.select_columns(keep.iter());
    let rank = numerical_rank(&reduced, RANK_REL_TOL);
    if rank < n_b - 1 {
        return Err(DcError::Unobservable { rank, need: n_b - 1 });
    }
    let svd = reduced.clone().svd(true, true);
    let x_hat = svd.solve(&meas.z, RANK_REL_TOL).map_err(|e| DcError::Dimension(e.to_string()))?;
    let residual = &meas.z - reduced * x_hat;
    Ok(residual.norm())
}

/// Builds the restriction of a network to the partition's local buses and
/// lines (the attacker's view). The slack is the global slack when local,
/// otherwise the lowest local bus id.
pub fn local_network(net: &Network, part: &Partition) -> Result<Network, crate::grid::GridError> {
    let buses = net
        .buses
        .iter()
        .filter(|b| part.is_local(b.id))
        .cloned()
        .collect::<Vec<_>>();
    let branches = net
        .branches
        .iter()
        .filter(|br| part.local_lines.binary_search(&br.id).is_ok())
        .cloned()
        .collect::<Vec<_>>();
    let generators = net
        .generators
        .iter()
        .filter(|g| part.is_local(g.bus))
        .cloned()
        .collect::<Vec<_>>();
    let slack = if part.is_local(net.slack) { net.slack } else { part.local[0] };
    let loc = Network {
        name: format!("{}_local", net.name),
        buses,
        branches,
        generators,
        slack,
        fingerprint: net.fingerprint.clone(),
        warnings: Vec::new(),
    };
    loc.validate()?;
    Ok(loc)
}
