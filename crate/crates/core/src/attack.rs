//! Bi-level attack construction: the follower dispatch is replaced by its
//! KKT conditions, complementarity is linearized with big-M binaries, and
//! the resulting MILP maximizes physical flow on a target line under an
//! l1 budget on the injected state error.

use std::path::Path;

use nalgebra::{DMatrix, DVector, RowDVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dc::DcOperators;
use crate::dcopf::{gen_incidence, solve_global_opf, LocalProblem, OpfError};
use crate::grid::{derive_attack_subgraph, AttackSubgraph, GridError, Network};
use crate::solver::{
    solve_milp, LinearProgram, MixedIntegerProgram, Sense, SolveResult, SolveStatus, SolverError,
};

/// Complementarity rows whose primal slack provably exceeds this margin
/// over the whole variable box are dropped from the binary set.
pub const PRESOLVE_MARGIN: f64 = 1e-6;
/// Escalation rounds for the big-M constant before giving up.
pub const BIG_M_ROUNDS: usize = 3;
const BIG_M_FACTOR: f64 = 10.0;

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("target line {0} not found")]
    NoSuchLine(usize),
    #[error("attack problem infeasible")]
    Infeasible,
    #[error("attack problem unbounded")]
    Unbounded,
    #[error("big-M audit still binding after {0} escalations")]
    BigMExhausted(usize),
    #[error("node or iteration limit hit (gap {0:.3e})")]
    Limit(f64),
    #[error("bad parameters: {0}")]
    Params(String),
    #[error("base dispatch failed: {0}")]
    Opf(#[from] OpfError),
    #[error("solver failure: {0}")]
    Solver(#[from] SolverError),
    #[error("subgraph: {0}")]
    Grid(#[from] GridError),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed solution file: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttackParams {
    /// Branch id of the line whose physical flow is maximized.
    pub target_line: usize,
    /// l1 budget on the state-error magnitudes (radians).
    pub n1: f64,
    /// Load-shift fraction.
    pub tau: f64,
    /// Sparsity weight on the l1 slack ($/rad).
    pub zeta: f64,
    /// Big-M override; picked from problem data when absent.
    pub big_m: Option<f64>,
    /// Branch-and-bound node cap.
    pub node_limit: Option<usize>,
    /// Original l0 budget, recorded for provenance only.
    pub n0: Option<f64>,
}

impl AttackParams {
    pub fn new(target_line: usize, n1: f64, tau: f64, zeta: f64) -> Self {
        AttackParams { target_line, n1, tau, zeta, big_m: None, node_limit: None, n0: None }
    }

    fn validate(&self) -> Result<(), AttackError> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(AttackError::Params(format!("tau {} outside (0,1)", self.tau)));
        }
        if self.n1 <= 0.0 {
            return Err(AttackError::Params(format!("n1 {} must be positive", self.n1)));
        }
        if self.zeta < 0.0 {
            return Err(AttackError::Params("zeta must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttackScope {
    Global,
    Local,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    pub nodes: usize,
    pub gap: f64,
    pub big_m_used: f64,
    pub escalations: usize,
    pub binaries: usize,
    pub presolved_rows: usize,
}

#[derive(Debug, Clone)]
pub struct AttackSolution {
    pub scope: AttackScope,
    pub params: AttackParams,
    /// State error per bus of the attacked index set (global: every bus,
    /// local: the local set with zeros on the boundary).
    pub c: DVector<f64>,
    pub u: DVector<f64>,
    /// +1 when the base-case target flow is positive, -1 otherwise; flows
    /// below are reported in this direction.
    pub sign: f64,
    /// Target-line flow the operator will see post-attack.
    pub cyber_flow: f64,
    /// Target-line flow the attacker computes to actually materialize.
    pub physical_flow: f64,
    /// Predicted pseudo-boundary injections post-attack (local only).
    pub predicted_p_i: Option<DVector<f64>>,
    /// Closed-form flow cap implied by the attack vector alone.
    pub upper_bound: f64,
    /// MILP objective: sign-corrected physical flow minus the l1 penalty.
    pub objective: f64,
    pub diagnostics: SolverDiagnostics,
    /// Measurement region the attacker must control (local only).
    pub subgraph: Option<AttackSubgraph>,
}

/// Follower problem in the shape the KKT embedder consumes:
/// min 0.5 xᵀdiag(q)x + linᵀx
/// s.t. a_eq x = b_eq0 + g_eq w,  a_in x ≤ b_in0 + g_in w,
/// where w is the leader's counterfeit injection vector.
struct LowerLevel {
    q: DVector<f64>,
    lin: DVector<f64>,
    a_eq: DMatrix<f64>,
    g_eq: DMatrix<f64>,
    b_eq0: DVector<f64>,
    a_in: DMatrix<f64>,
    g_in: DMatrix<f64>,
    b_in0: DVector<f64>,
    /// True variable bounds where they exist (also encoded as a_in rows).
    x_lo: DVector<f64>,
    x_hi: DVector<f64>,
    /// Finite interval hints for the presolve (implied by constraints).
    presolve_lo: DVector<f64>,
    presolve_hi: DVector<f64>,
    /// Inequality-row pairs that cannot both be active.
    pairs: Vec<(usize, usize)>,
}

struct Layout {
    off_c: usize,
    off_u: usize,
    off_w: usize,
    off_x: usize,
    off_mu: usize,
    n_c: usize,
    n_w: usize,
    n_x: usize,
    n_in: usize,
    /// Inequality row -> binary variable index, None when presolved slack.
    delta_of: Vec<Option<usize>>,
}

/// Interval maximum of rowᵀv over the box [lo, hi].
fn row_interval_max(row: &RowDVector<f64>, lo: &DVector<f64>, hi: &DVector<f64>) -> f64 {
    (0..row.len())
        .map(|j| if row[j] >= 0.0 { row[j] * hi[j] } else { row[j] * lo[j] })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn build_milp(
    ll: &LowerLevel,
    h_map: &DMatrix<f64>,
    w_lo: &DVector<f64>,
    w_hi: &DVector<f64>,
    fixed_c: &[usize],
    params: &AttackParams,
    obj_x: &DVector<f64>,
    big_m: f64,
    node_limit: Option<usize>,
    warm_rows: Option<&[bool]>,
) -> (MixedIntegerProgram, Layout) {
    let n_c = h_map.ncols();
    let n_w = h_map.nrows();
    let n_x = ll.q.len();
    let n_eq = ll.b_eq0.len();
    let n_in = ll.b_in0.len();

    // Presolve: rows that can never be tight keep mu = 0 and no binary.
    let neg_w_lo = -w_hi;
    let neg_w_hi = -w_lo;
    let mut delta_of: Vec<Option<usize>> = vec![None; n_in];
    let mut candidates = Vec::new();
    for k in 0..n_in {
        let ax = row_interval_max(&ll.a_in.row(k).into_owned(), &ll.presolve_lo, &ll.presolve_hi);
        let gw = row_interval_max(&(-ll.g_in.row(k)).into_owned(), &neg_w_hi, &neg_w_lo);
        // max(a x - g w); g w enters with a minus sign.
        let row_max = ax - (-gw);
        if row_max > ll.b_in0[k] - PRESOLVE_MARGIN {
            candidates.push(k);
        }
    }

    let off_c = 0;
    let off_u = off_c + n_c;
    let off_w = off_u + n_c;
    let off_x = off_w + n_w;
    let off_nu = off_x + n_x;
    let off_mu = off_nu + n_eq;
    let off_delta = off_mu + n_in;
    let n_vars = off_delta + candidates.len();
    for (slot, &k) in candidates.iter().enumerate() {
        delta_of[k] = Some(off_delta + slot);
    }

    let mut lp = LinearProgram::new(n_vars);
    lp.sense = Sense::Maximize;
    for j in 0..n_c {
        lp.lower[off_c + j] = -params.n1;
        lp.upper[off_c + j] = params.n1;
        lp.lower[off_u + j] = 0.0;
        lp.upper[off_u + j] = params.n1;
        lp.c[off_u + j] = -params.zeta;
    }
    for &j in fixed_c {
        lp.lower[off_c + j] = 0.0;
        lp.upper[off_c + j] = 0.0;
        lp.upper[off_u + j] = 0.0;
    }
    for t in 0..n_w {
        lp.lower[off_w + t] = w_lo[t];
        lp.upper[off_w + t] = w_hi[t];
    }
    for j in 0..n_x {
        lp.lower[off_x + j] = if ll.x_lo[j].is_finite() { ll.x_lo[j] } else { f64::NEG_INFINITY };
        lp.upper[off_x + j] = if ll.x_hi[j].is_finite() { ll.x_hi[j] } else { f64::INFINITY };
        lp.c[off_x + j] = obj_x[j];
    }
    for i in 0..n_eq {
        lp.lower[off_nu + i] = f64::NEG_INFINITY;
        lp.upper[off_nu + i] = f64::INFINITY;
    }
    for k in 0..n_in {
        lp.lower[off_mu + k] = 0.0;
        lp.upper[off_mu + k] = if delta_of[k].is_some() { big_m } else { 0.0 };
    }
    for slot in 0..candidates.len() {
        lp.lower[off_delta + slot] = 0.0;
        lp.upper[off_delta + slot] = 1.0;
    }

    // Equalities: w = H c, follower primal, follower stationarity.
    let n_eq_rows = n_w + n_eq + n_x;
    let mut a_eq = DMatrix::zeros(n_eq_rows, n_vars);
    let mut b_eq = DVector::zeros(n_eq_rows);
    for t in 0..n_w {
        a_eq[(t, off_w + t)] = 1.0;
        for j in 0..n_c {
            a_eq[(t, off_c + j)] = -h_map[(t, j)];
        }
    }
    for i in 0..n_eq {
        let r = n_w + i;
        for j in 0..n_x {
            a_eq[(r, off_x + j)] = ll.a_eq[(i, j)];
        }
        for t in 0..n_w {
            a_eq[(r, off_w + t)] = -ll.g_eq[(i, t)];
        }
        b_eq[r] = ll.b_eq0[i];
    }
    for j in 0..n_x {
        let r = n_w + n_eq + j;
        a_eq[(r, off_x + j)] = ll.q[j];
        for i in 0..n_eq {
            a_eq[(r, off_nu + i)] = ll.a_eq[(i, j)];
        }
        for k in 0..n_in {
            a_eq[(r, off_mu + k)] = ll.a_in[(k, j)];
        }
        b_eq[r] = -ll.lin[j];
    }
    lp.a_eq = a_eq;
    lp.b_eq = b_eq;

    // Inequalities: l1 envelope, budget, follower rows, complementarity.
    let n_in_rows = 2 * n_c + 1 + n_in + 2 * candidates.len() + ll.pairs.len();
    let mut a_in = DMatrix::zeros(n_in_rows, n_vars);
    let mut b_in = DVector::zeros(n_in_rows);
    let mut r = 0;
    for j in 0..n_c {
        a_in[(r, off_c + j)] = 1.0;
        a_in[(r, off_u + j)] = -1.0;
        a_in[(r + 1, off_c + j)] = -1.0;
        a_in[(r + 1, off_u + j)] = -1.0;
        r += 2;
    }
    for j in 0..n_c {
        a_in[(r, off_u + j)] = 1.0;
    }
    b_in[r] = params.n1;
    r += 1;
    for k in 0..n_in {
        for j in 0..n_x {
            a_in[(r, off_x + j)] = ll.a_in[(k, j)];
        }
        for t in 0..n_w {
            a_in[(r, off_w + t)] = -ll.g_in[(k, t)];
        }
        b_in[r] = ll.b_in0[k];
        r += 1;
    }
    for &k in &candidates {
        // Slack cap uses the interval range, never looser than big_m.
        let ax_min = -row_interval_max(
            &(-ll.a_in.row(k)).into_owned(),
            &ll.presolve_lo,
            &ll.presolve_hi,
        );
        let gw_max = row_interval_max(&ll.g_in.row(k).into_owned(), w_lo, w_hi);
        let slack_cap = (ll.b_in0[k] + gw_max - ax_min).max(0.0).min(big_m);
        let d = delta_of[k].unwrap();
        // slack <= cap (1 - delta)
        for j in 0..n_x {
            a_in[(r, off_x + j)] = -ll.a_in[(k, j)];
        }
        for t in 0..n_w {
            a_in[(r, off_w + t)] = ll.g_in[(k, t)];
        }
        a_in[(r, d)] = slack_cap;
        b_in[r] = slack_cap - ll.b_in0[k];
        r += 1;
        // mu <= M delta
        a_in[(r, off_mu + k)] = 1.0;
        a_in[(r, d)] = -big_m;
        r += 1;
    }
    for &(ka, kb) in &ll.pairs {
        if let (Some(da), Some(db)) = (delta_of[ka], delta_of[kb]) {
            a_in[(r, da)] = 1.0;
            a_in[(r, db)] = 1.0;
            b_in[r] = 1.0;
        } else {
            // Row retired by presolve; nothing to exclude.
            b_in[r] = 2.0;
        }
        r += 1;
    }
    lp.a_in = a_in;
    lp.b_in = b_in;

    let binaries: Vec<usize> = (0..candidates.len()).map(|s| off_delta + s).collect();
    // Rows tight in the unattacked dispatch seed the branch and bound with
    // a strong starting incumbent and steer its plunge direction.
    let warm =
        warm_rows.map(|rows| candidates.iter().map(|&k| rows[k] as u8).collect::<Vec<u8>>());
    let milp = MixedIntegerProgram { lp, binaries, big_m, node_limit, warm };
    let layout = Layout {
        off_c,
        off_u,
        off_w,
        off_x,
        off_mu,
        n_c,
        n_w,
        n_x,
        n_in,
        delta_of,
    };
    (milp, layout)
}

fn default_big_m(ll: &LowerLevel, params: &AttackParams, ratings_max: f64) -> f64 {
    let mut scale: f64 = 1.0;
    for j in 0..ll.q.len() {
        let hi = if ll.presolve_hi[j].is_finite() { ll.presolve_hi[j].abs() } else { 0.0 };
        let lo = if ll.presolve_lo[j].is_finite() { ll.presolve_lo[j].abs() } else { 0.0 };
        scale = scale.max(ll.q[j].abs() * hi.max(lo) + ll.lin[j].abs());
    }
    scale = scale.max(ratings_max).max(params.n1);
    BIG_M_FACTOR * scale
}

/// Solves the assembled MILP, escalating M while any dual sits at its cap.
fn solve_with_escalation(
    ll: &LowerLevel,
    h_map: &DMatrix<f64>,
    w_lo: &DVector<f64>,
    w_hi: &DVector<f64>,
    fixed_c: &[usize],
    params: &AttackParams,
    obj_x: &DVector<f64>,
    ratings_max: f64,
    warm_rows: Option<&[bool]>,
) -> Result<(SolveResult, Layout, SolverDiagnostics), AttackError> {
    let mut big_m = params.big_m.unwrap_or_else(|| default_big_m(ll, params, ratings_max));
    let mut last_err = AttackError::BigMExhausted(BIG_M_ROUNDS);
    for round in 0..=BIG_M_ROUNDS {
        let (milp, layout) = build_milp(
            ll,
            h_map,
            w_lo,
            w_hi,
            fixed_c,
            params,
            obj_x,
            big_m,
            params.node_limit,
            warm_rows,
        );
        if std::env::var("FDI_MILP_DEBUG").is_ok() {
            eprintln!(
                "milp: vars {} eq {} in {} binaries {} big_m {:.3e}",
                milp.lp.n_vars(),
                milp.lp.b_eq.len(),
                milp.lp.b_in.len(),
                milp.binaries.len(),
                big_m
            );
        }
        let res = solve_milp(&milp)?;
        match res.status {
            SolveStatus::Optimal => {
                let mut binding = false;
                for k in 0..layout.n_in {
                    if layout.delta_of[k].is_some() && res.x[layout.off_mu + k] >= 0.99 * big_m {
                        binding = true;
                    }
                }
                if !binding {
                    let diag = SolverDiagnostics {
                        iterations: res.iterations,
                        nodes: res.nodes,
                        gap: res.gap,
                        big_m_used: big_m,
                        escalations: round,
                        binaries: milp.binaries.len(),
                        presolved_rows: layout.delta_of.iter().filter(|d| d.is_none()).count(),
                    };
                    return Ok((res, layout, diag));
                }
                last_err = AttackError::BigMExhausted(round);
            }
            // A too-small M can strangle the duals into infeasibility.
            SolveStatus::Infeasible => last_err = AttackError::Infeasible,
            SolveStatus::Unbounded => return Err(AttackError::Unbounded),
            SolveStatus::Limit => return Err(AttackError::Limit(res.gap)),
        }
        big_m *= BIG_M_FACTOR;
    }
    Err(last_err)
}

/// Theorem-2 style cap: the cyber flow is held at the rating, so the
/// physical flow can exceed it by at most the counterfeit component.
pub fn upper_bound(
    ops: &DcOperators,
    net: &Network,
    target_idx: usize,
    sign: f64,
    c: &DVector<f64>,
) -> f64 {
    let k_l = ops.k.row(target_idx);
    let shift = (k_l * &ops.h * c)[0];
    net.branches[target_idx].rating - sign * shift
}

pub fn build_and_solve_global_attack(
    net: &Network,
    ops: &DcOperators,
    params: &AttackParams,
) -> Result<AttackSolution, AttackError> {
    params.validate()?;
    let target = net.branch_index(params.target_line).ok_or(AttackError::NoSuchLine(params.target_line))?;
    let base = solve_global_opf(net, ops)?;
    let sign = if base.flows[target] >= 0.0 { 1.0 } else { -1.0 };

    let n_b = net.n_buses();
    let n_g = net.n_gens();
    let n_br = net.n_branches();
    let g_inc = gen_incidence(net);
    let kg = &ops.k * &g_inc;
    let load = net.load_vector();
    let k_load = &ops.k * &load;
    let ratings = DVector::from_iterator(n_br, net.branches.iter().map(|b| b.rating));

    // Follower vars: generator outputs. Rows: thermal +/- then bounds +/-.
    let n_in = 2 * n_br + 2 * n_g;
    let mut a_in = DMatrix::zeros(n_in, n_g);
    let mut g_in = DMatrix::zeros(n_in, n_b);
    let mut b_in0 = DVector::zeros(n_in);
    a_in.view_mut((0, 0), (n_br, n_g)).copy_from(&kg);
    g_in.view_mut((0, 0), (n_br, n_b)).copy_from(&(-&ops.k));
    b_in0.rows_mut(0, n_br).copy_from(&(&ratings + &k_load));
    a_in.view_mut((n_br, 0), (n_br, n_g)).copy_from(&(-&kg));
    g_in.view_mut((n_br, 0), (n_br, n_b)).copy_from(&ops.k.clone());
    b_in0.rows_mut(n_br, n_br).copy_from(&(&ratings - &k_load));
    let mut pairs: Vec<(usize, usize)> = (0..n_br).map(|k| (k, n_br + k)).collect();
    let mut x_lo = DVector::zeros(n_g);
    let mut x_hi = DVector::zeros(n_g);
    for (j, gen) in net.generators.iter().enumerate() {
        let up = 2 * n_br + j;
        let dn = 2 * n_br + n_g + j;
        a_in[(up, j)] = 1.0;
        b_in0[up] = gen.p_max;
        a_in[(dn, j)] = -1.0;
        b_in0[dn] = -gen.p_min;
        x_lo[j] = gen.p_min;
        x_hi[j] = gen.p_max;
        if gen.p_max > gen.p_min + 1e-9 {
            pairs.push((up, dn));
        }
    }

    let mut a_eq = DMatrix::zeros(1, n_g);
    for j in 0..n_g {
        a_eq[(0, j)] = 1.0;
    }
    let ll = LowerLevel {
        q: DVector::from_iterator(n_g, net.generators.iter().map(|g| 2.0 * g.cost_a)),
        lin: DVector::from_iterator(n_g, net.generators.iter().map(|g| g.cost_b)),
        a_eq,
        g_eq: DMatrix::zeros(1, n_b),
        b_eq0: DVector::from_element(1, load.sum()),
        a_in,
        g_in,
        b_in0,
        x_lo: x_lo.clone(),
        x_hi: x_hi.clone(),
        presolve_lo: x_lo,
        presolve_hi: x_hi,
        pairs,
    };

    // Load-shift box on w = Hc; zero-load buses admit no counterfeit.
    let w_hi = DVector::from_iterator(n_b, load.iter().map(|&d| params.tau * d.abs()));
    let w_lo = -&w_hi;
    // Objective: sign-corrected physical target flow (constant added back).
    let obj_x = DVector::from_iterator(n_g, (0..n_g).map(|j| sign * kg[(target, j)]));
    let fixed_c = vec![ops.slack];
    let ratings_max = ratings.max();

    // Active set of the unattacked dispatch, used as the warm pattern.
    let mut warm_rows = vec![false; n_in];
    for &k in &base.congested_pos {
        warm_rows[k] = true;
    }
    for &k in &base.congested_neg {
        warm_rows[n_br + k] = true;
    }
    for (j, gen) in net.generators.iter().enumerate() {
        if base.p_g[j] >= gen.p_max - 1e-7 {
            warm_rows[2 * n_br + j] = true;
        }
        if base.p_g[j] <= gen.p_min + 1e-7 {
            warm_rows[2 * n_br + n_g + j] = true;
        }
    }

    let (res, layout, diag) = solve_with_escalation(
        &ll,
        &ops.h,
        &w_lo,
        &w_hi,
        &fixed_c,
        params,
        &obj_x,
        ratings_max,
        Some(&warm_rows),
    )?;

    let c = res.x.rows(layout.off_c, layout.n_c).into_owned();
    let u = res.x.rows(layout.off_u, layout.n_c).into_owned();
    let w = res.x.rows(layout.off_w, layout.n_w).into_owned();
    let p_g = res.x.rows(layout.off_x, layout.n_x).into_owned();
    let physical = (ops.k.row(target) * (&g_inc * &p_g - &load))[0];
    let cyber = physical + (ops.k.row(target) * &w)[0];
    let objective = sign * physical - params.zeta * u.sum();
    Ok(AttackSolution {
        scope: AttackScope::Global,
        params: params.clone(),
        c,
        u,
        sign,
        cyber_flow: cyber,
        physical_flow: physical,
        predicted_p_i: None,
        upper_bound: upper_bound(ops, net, target, sign, &res.x.rows(layout.off_c, layout.n_c).into_owned()),
        objective,
        diagnostics: diag,
        subgraph: None,
    })
}

pub fn build_and_solve_local_attack(
    p: &LocalProblem,
    params: &AttackParams,
) -> Result<AttackSolution, AttackError> {
    params.validate()?;
    let net = p.net;
    let target =
        net.branch_index(params.target_line).ok_or(AttackError::NoSuchLine(params.target_line))?;
    let n_l = net.n_buses();
    let n_g = net.n_gens();
    let n_lines = net.n_branches();
    let n_bd = p.part.n_boundary();
    let g_inc = gen_incidence(net);
    let kg = &p.ops.k * &g_inc;
    let kb = crate::dcopf::boundary_columns(p.ops, net, p.part);
    let fg = p.f * &g_inc;
    let k_load = &p.ops.k * &p.load;
    let ratings = DVector::from_iterator(n_lines, net.branches.iter().map(|b| b.rating));

    // Base direction from the unattacked local dispatch.
    let zero = DVector::zeros(n_l);
    let base = crate::dcopf::solve_local_opf(p, &zero)?;
    let sign = if base.flows[target] >= 0.0 { 1.0 } else { -1.0 };

    // Follower vars: [P_G | P_I]. Equalities: prediction rows, balance.
    let n_x = n_g + n_bd;
    let n_eq = n_bd + 1;
    let mut a_eq = DMatrix::zeros(n_eq, n_x);
    let mut g_eq = DMatrix::zeros(n_eq, n_l);
    let mut b_eq0 = DVector::zeros(n_eq);
    a_eq.view_mut((0, 0), (n_bd, n_g)).copy_from(&(-&fg));
    for t in 0..n_bd {
        a_eq[(t, n_g + t)] = 1.0;
    }
    g_eq.view_mut((0, 0), (n_bd, n_l)).copy_from(p.f);
    b_eq0.rows_mut(0, n_bd).copy_from(&(p.f * (-&p.load) + p.f0));
    for j in 0..n_g {
        a_eq[(n_bd, j)] = 1.0;
    }
    for t in 0..n_bd {
        a_eq[(n_bd, n_g + t)] = -1.0;
    }
    b_eq0[n_eq - 1] = p.load.sum();

    // Inequalities: thermal +/- then generator bounds +/-.
    let n_in = 2 * n_lines + 2 * n_g;
    let mut a_in = DMatrix::zeros(n_in, n_x);
    let mut g_in = DMatrix::zeros(n_in, n_l);
    let mut b_in0 = DVector::zeros(n_in);
    a_in.view_mut((0, 0), (n_lines, n_g)).copy_from(&kg);
    a_in.view_mut((0, n_g), (n_lines, n_bd)).copy_from(&(-&kb));
    g_in.view_mut((0, 0), (n_lines, n_l)).copy_from(&(-&p.ops.k));
    b_in0.rows_mut(0, n_lines).copy_from(&(&ratings + &k_load));
    a_in.view_mut((n_lines, 0), (n_lines, n_g)).copy_from(&(-&kg));
    a_in.view_mut((n_lines, n_g), (n_lines, n_bd)).copy_from(&kb.clone());
    g_in.view_mut((n_lines, 0), (n_lines, n_l)).copy_from(&p.ops.k.clone());
    b_in0.rows_mut(n_lines, n_lines).copy_from(&(&ratings - &k_load));
    let mut pairs: Vec<(usize, usize)> = (0..n_lines).map(|k| (k, n_lines + k)).collect();
    let mut x_lo = DVector::from_element(n_x, f64::NEG_INFINITY);
    let mut x_hi = DVector::from_element(n_x, f64::INFINITY);
    for (j, gen) in net.generators.iter().enumerate() {
        let up = 2 * n_lines + j;
        let dn = 2 * n_lines + n_g + j;
        a_in[(up, j)] = 1.0;
        b_in0[up] = gen.p_max;
        a_in[(dn, j)] = -1.0;
        b_in0[dn] = -gen.p_min;
        x_lo[j] = gen.p_min;
        x_hi[j] = gen.p_max;
        if gen.p_max > gen.p_min + 1e-9 {
            pairs.push((up, dn));
        }
    }

    // Interval hints for P_I come from the prediction equality.
    let w_hi = DVector::from_iterator(n_l, p.load.iter().map(|&d| params.tau * d.abs()));
    let w_lo = -&w_hi;
    let mut presolve_lo = x_lo.clone();
    let mut presolve_hi = x_hi.clone();
    for t in 0..n_bd {
        let base_t = b_eq0[t];
        let gen_row = fg.row(t).into_owned();
        let gen_hi = row_interval_max(&gen_row, &x_lo.rows(0, n_g).into_owned(), &x_hi.rows(0, n_g).into_owned());
        let gen_lo =
            -row_interval_max(&(-&gen_row), &x_lo.rows(0, n_g).into_owned(), &x_hi.rows(0, n_g).into_owned());
        let w_row = p.f.row(t).into_owned();
        let ww_hi = row_interval_max(&w_row, &w_lo, &w_hi);
        let ww_lo = -row_interval_max(&(-&w_row), &w_lo, &w_hi);
        presolve_lo[n_g + t] = base_t + gen_lo + ww_lo - 1e-9;
        presolve_hi[n_g + t] = base_t + gen_hi + ww_hi + 1e-9;
    }

    let ll = LowerLevel {
        q: {
            let mut q = DVector::zeros(n_x);
            for (j, gen) in net.generators.iter().enumerate() {
                q[j] = 2.0 * gen.cost_a;
            }
            q
        },
        lin: {
            let mut lin = DVector::zeros(n_x);
            for (j, gen) in net.generators.iter().enumerate() {
                lin[j] = gen.cost_b;
            }
            for t in 0..n_bd {
                lin[n_g + t] = -p.lambda_b[t];
            }
            lin
        },
        a_eq,
        g_eq,
        b_eq0,
        a_in,
        g_in,
        b_in0,
        x_lo,
        x_hi,
        presolve_lo,
        presolve_hi,
        pairs,
    };

    // Attacker-computed physical flow on the target:
    // K_l(G P_G - P_D) - K_l^B P_I, independent of w.
    let mut obj_x = DVector::zeros(n_x);
    for j in 0..n_g {
        obj_x[j] = sign * kg[(target, j)];
    }
    for t in 0..n_bd {
        obj_x[n_g + t] = -sign * kb[(target, t)];
    }
    let fixed_c: Vec<usize> =
        p.part.boundary.iter().map(|&b| net.bus_index(b).unwrap()).collect();
    let ratings_max = ratings.max();

    // Active set of the unattacked local dispatch, used as the warm pattern.
    let mut warm_rows = vec![false; n_in];
    for k in 0..n_lines {
        if base.flows[k] >= net.branches[k].rating - 1e-7 {
            warm_rows[k] = true;
        }
        if base.flows[k] <= -net.branches[k].rating + 1e-7 {
            warm_rows[n_lines + k] = true;
        }
    }
    for (j, gen) in net.generators.iter().enumerate() {
        if base.p_g[j] >= gen.p_max - 1e-7 {
            warm_rows[2 * n_lines + j] = true;
        }
        if base.p_g[j] <= gen.p_min + 1e-7 {
            warm_rows[2 * n_lines + n_g + j] = true;
        }
    }

    let (res, layout, diag) = solve_with_escalation(
        &ll,
        &p.ops.h,
        &w_lo,
        &w_hi,
        &fixed_c,
        params,
        &obj_x,
        ratings_max,
        Some(&warm_rows),
    )?;

    let c = res.x.rows(layout.off_c, layout.n_c).into_owned();
    let u = res.x.rows(layout.off_u, layout.n_c).into_owned();
    let w = res.x.rows(layout.off_w, layout.n_w).into_owned();
    let p_g = res.x.rows(layout.off_x, n_g).into_owned();
    let p_i = res.x.rows(layout.off_x + n_g, n_bd).into_owned();
    let physical =
        (p.ops.k.row(target) * (&g_inc * &p_g - &p.load))[0] - (kb.row(target) * &p_i)[0];
    let cyber = physical + (p.ops.k.row(target) * &w)[0];
    let objective = sign * physical - params.zeta * u.sum();
    // The attack ordering follows the partition's local list.
    let c_local: Vec<f64> =
        p.part.local.iter().map(|&b| c[net.bus_index(b).unwrap()]).collect();
    let subgraph = derive_attack_subgraph(p.net, p.part, &c_local)?;
    let ub = upper_bound(p.ops, net, target, sign, &c);
    Ok(AttackSolution {
        scope: AttackScope::Local,
        params: params.clone(),
        c,
        u,
        sign,
        cyber_flow: cyber,
        physical_flow: physical,
        predicted_p_i: Some(p_i),
        upper_bound: ub,
        objective,
        diagnostics: diag,
        subgraph: Some(subgraph),
    })
}

#[derive(Serialize, Deserialize)]
struct SolutionFile {
    scope: AttackScope,
    params: AttackParams,
    c: Vec<f64>,
    u: Vec<f64>,
    sign: f64,
    cyber_flow: f64,
    physical_flow: f64,
    predicted_p_i: Option<Vec<f64>>,
    upper_bound: f64,
    objective: f64,
    diagnostics: SolverDiagnostics,
    subgraph_centers: Option<Vec<usize>>,
    subgraph_members: Option<Vec<usize>>,
    subgraph_lines: Option<Vec<usize>>,
}

pub fn save_solution(sol: &AttackSolution, path: &Path) -> Result<(), AttackError> {
    let file = SolutionFile {
        scope: sol.scope,
        params: sol.params.clone(),
        c: sol.c.as_slice().to_vec(),
        u: sol.u.as_slice().to_vec(),
        sign: sol.sign,
        cyber_flow: sol.cyber_flow,
        physical_flow: sol.physical_flow,
        predicted_p_i: sol.predicted_p_i.as_ref().map(|v| v.as_slice().to_vec()),
        upper_bound: sol.upper_bound,
        objective: sol.objective,
        diagnostics: sol.diagnostics.clone(),
        subgraph_centers: sol.subgraph.as_ref().map(|s| s.centers.clone()),
        subgraph_members: sol.subgraph.as_ref().map(|s| s.members.clone()),
        subgraph_lines: sol.subgraph.as_ref().map(|s| s.member_lines.clone()),
    };
    let json =
        serde_json::to_string_pretty(&file).map_err(|e| AttackError::Parse(e.to_string()))?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_solution(path: &Path) -> Result<AttackSolution, AttackError> {
    let file: SolutionFile = serde_json::from_str(&std::fs::read_to_string(path)?)
        .map_err(|e| AttackError::Parse(e.to_string()))?;
    let subgraph = match (file.subgraph_centers, file.subgraph_members, file.subgraph_lines) {
        (Some(centers), Some(members), Some(member_lines)) => {
            Some(AttackSubgraph { centers, members, member_lines })
        }
        _ => None,
    };
    Ok(AttackSolution {
        scope: file.scope,
        params: file.params,
        c: DVector::from_vec(file.c),
        u: DVector::from_vec(file.u),
        sign: file.sign,
        cyber_flow: file.cyber_flow,
        physical_flow: file.physical_flow,
        predicted_p_i: file.predicted_p_i.map(DVector::from_vec),
        upper_bound: file.upper_bound,
        objective: file.objective,
        diagnostics: file.diagnostics,
        subgraph,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dc::{build_operators, local_network};
    use crate::grid::{make_partition, parse_case, Partition};
    use crate::solver::solve_lp;
    use approx::assert_abs_diff_eq;

    // Triangle: cheap gen at 1, expensive at 3, load at 2; rating on 1-2
    // binds in the base case.
    const TRI: &str = "\
function mpc = tri
mpc.baseMVA = 100;
mpc.bus = [
 1 3 0 0 0 0 1 1 0 230 1 1.1 0.9;
 2 1 70 0 0 0 1 1 0 230 1 1.1 0.9;
 3 1 30 0 0 0 1 1 0 230 1 1.1 0.9;
];
mpc.gen = [
 1 0 0 999 -999 1 100 1 100 0;
 3 0 0 999 -999 1 100 1 100 0;
];
mpc.branch = [
 1 2 0 0.1 0 50 0 0 0 0 1 -360 360;
 1 3 0 0.1 0 250 0 0 0 0 1 -360 360;
 2 3 0 0.1 0 250 0 0 0 0 1 -360 360;
];
mpc.gencost = [
 2 0 0 2 10 0;
 2 0 0 2 30 0;
];
";

    // Chain 1-2-3-4-5 with an internal attackable region {1,2,3},
    // boundary {3}; line 2-3 nearly loaded in the base case.
    const CHAIN5: &str = "\
function mpc = chain5
mpc.baseMVA = 100;
mpc.bus = [
 1 3 20 0 0 0 1 1 0 230 1 1.1 0.9;
 2 1 30 0 0 0 1 1 0 230 1 1.1 0.9;
 3 1 30 0 0 0 1 1 0 230 1 1.1 0.9;
 4 1 40 0 0 0 1 1 0 230 1 1.1 0.9;
 5 1 40 0 0 0 1 1 0 230 1 1.1 0.9;
];
mpc.gen = [
 1 0 0 999 -999 1 100 1 100 0;
 5 0 0 999 -999 1 100 1 150 0;
];
mpc.branch = [
 1 2 0 0.1 0 140 0 0 0 0 1 -360 360;
 2 3 0 0.1 0 92 0 0 0 0 1 -360 360;
 3 4 0 0.1 0 250 0 0 0 0 1 -360 360;
 4 5 0 0.1 0 250 0 0 0 0 1 -360 360;
];
mpc.gencost = [
 2 0 0 2 10 0;
 2 0 0 2 30 0;
];
";

    fn tri_setup() -> (Network, DcOperators) {
        let net = parse_case(TRI).unwrap();
        let ops = build_operators(&net).unwrap();
        (net, ops)
    }

    #[test]
    fn tiny_budget_recovers_base_flow() {
        let (net, ops) = tri_setup();
        let base = solve_global_opf(&net, &ops).unwrap();
        let params = AttackParams::new(1, 1e-9, 0.1, 0.0);
        let sol = build_and_solve_global_attack(&net, &ops, &params).unwrap();
        assert!(sol.c.amax() <= 1e-9);
        assert_abs_diff_eq!(sol.physical_flow, base.flows[0], epsilon = 1e-6);
        assert_abs_diff_eq!(sol.cyber_flow, sol.physical_flow, epsilon = 1e-6);
    }

    #[test]
    fn global_attack_respects_first_level_constraints() {
        let (net, ops) = tri_setup();
        let params = AttackParams::new(1, 0.05, 0.1, 0.01);
        let sol = build_and_solve_global_attack(&net, &ops, &params).unwrap();
        // l1 envelope and budget
        for j in 0..sol.c.len() {
            assert!(sol.c[j].abs() <= sol.u[j] + 1e-7);
        }
        assert!(sol.u.sum() <= params.n1 + 1e-7);
        // load shift cap, with zero rows at zero-load buses
        let hc = &ops.h * &sol.c;
        let load = net.load_vector();
        for i in 0..net.n_buses() {
            assert!(hc[i].abs() <= params.tau * load[i] + 1e-7, "bus {i}: {}", hc[i]);
        }
        // physical vs cyber gap identity
        let gap = (ops.k.row(0) * &ops.h * &sol.c)[0];
        assert_abs_diff_eq!(sol.physical_flow - sol.cyber_flow, -gap, epsilon = 1e-7);
        // Theorem-2 bound in the congestion direction
        assert!(sol.sign * sol.physical_flow <= sol.upper_bound + 1e-6);
        // the attack actually moves the flow beyond the rating
        assert!(sol.sign * sol.physical_flow > net.branches[0].rating + 1e-6);
    }

    #[test]
    fn global_milp_matches_enumeration_oracle() {
        let (net, ops) = tri_setup();
        let params = AttackParams::new(1, 0.05, 0.1, 0.01);
        let sol = build_and_solve_global_attack(&net, &ops, &params).unwrap();

        // Rebuild the same MILP and brute-force every binary pattern.
        let target = 0usize;
        let base = solve_global_opf(&net, &ops).unwrap();
        let sign: f64 = if base.flows[target] >= 0.0 { 1.0 } else { -1.0 };
        let n_g = net.n_gens();
        let g_inc = gen_incidence(&net);
        let kg = &ops.k * &g_inc;
        let obj_x =
            DVector::from_iterator(n_g, (0..n_g).map(|j| sign * kg[(target, j)]));
        let _ = obj_x;
        // Brute force through the public path: fix binaries via bounds.
        let load = net.load_vector();
        let n_br = net.n_branches();
        let ratings = DVector::from_iterator(n_br, net.branches.iter().map(|b| b.rating));
        let k_load = &ops.k * &load;
        let mut a_in = DMatrix::zeros(2 * n_br + 2 * n_g, n_g);
        let mut g_in = DMatrix::zeros(2 * n_br + 2 * n_g, net.n_buses());
        let mut b_in0 = DVector::zeros(2 * n_br + 2 * n_g);
        a_in.view_mut((0, 0), (n_br, n_g)).copy_from(&kg);
        g_in.view_mut((0, 0), (n_br, net.n_buses())).copy_from(&(-&ops.k));
        b_in0.rows_mut(0, n_br).copy_from(&(&ratings + &k_load));
        a_in.view_mut((n_br, 0), (n_br, n_g)).copy_from(&(-&kg));
        g_in.view_mut((n_br, 0), (n_br, net.n_buses())).copy_from(&ops.k.clone());
        b_in0.rows_mut(n_br, n_br).copy_from(&(&ratings - &k_load));
        let mut pairs: Vec<(usize, usize)> = (0..n_br).map(|k| (k, n_br + k)).collect();
        let mut x_lo = DVector::zeros(n_g);
        let mut x_hi = DVector::zeros(n_g);
        for (j, gen) in net.generators.iter().enumerate() {
            let up = 2 * n_br + j;
            let dn = 2 * n_br + n_g + j;
            a_in[(up, j)] = 1.0;
            b_in0[up] = gen.p_max;
            a_in[(dn, j)] = -1.0;
            b_in0[dn] = -gen.p_min;
            x_lo[j] = gen.p_min;
            x_hi[j] = gen.p_max;
            pairs.push((up, dn));
        }
        let mut a_eq = DMatrix::zeros(1, n_g);
        for j in 0..n_g {
            a_eq[(0, j)] = 1.0;
        }
        let ll = LowerLevel {
            q: DVector::from_iterator(n_g, net.generators.iter().map(|g| 2.0 * g.cost_a)),
            lin: DVector::from_iterator(n_g, net.generators.iter().map(|g| g.cost_b)),
            a_eq,
            g_eq: DMatrix::zeros(1, net.n_buses()),
            b_eq0: DVector::from_element(1, load.sum()),
            a_in,
            g_in,
            b_in0,
            x_lo: x_lo.clone(),
            x_hi: x_hi.clone(),
            presolve_lo: x_lo,
            presolve_hi: x_hi,
            pairs,
        };
        let w_hi = DVector::from_iterator(
            net.n_buses(),
            load.iter().map(|&d| params.tau * d.abs()),
        );
        let w_lo = -&w_hi;
        let obj_x =
            DVector::from_iterator(n_g, (0..n_g).map(|j| sign * kg[(target, j)]));
        let big_m = default_big_m(&ll, &params, ratings.max());
        let (milp, _layout) = build_milp(
            &ll,
            &ops.h,
            &w_lo,
            &w_hi,
            &[ops.slack],
            &params,
            &obj_x,
            big_m,
            None,
            None,
        );
        let n_bin = milp.binaries.len();
        assert!(n_bin <= 12, "{n_bin} binaries is too many to enumerate");
        let mut best = f64::NEG_INFINITY;
        for pattern in 0..(1usize << n_bin) {
            let mut lp = milp.lp.clone();
            for (s, &j) in milp.binaries.iter().enumerate() {
                let v = ((pattern >> s) & 1) as f64;
                lp.lower[j] = v;
                lp.upper[j] = v;
            }
            if let Ok(r) = solve_lp(&lp) {
                if r.status == SolveStatus::Optimal {
                    best = best.max(r.objective);
                }
            }
        }
        let milp_obj = sol.objective - sign * (ops.k.row(target) * &load)[0] * (-1.0);
        // sol.objective already includes the -K_l P_D constant; the raw
        // MILP objective omits it, so compare against the shifted value.
        let constant = -sign * (ops.k.row(target) * &load)[0];
        assert_abs_diff_eq!(sol.objective - constant, best, epsilon = 1e-6);
        let _ = milp_obj;
    }

    #[test]
    fn kkt_embedding_is_self_consistent() {
        let (net, ops) = tri_setup();
        let params = AttackParams::new(1, 0.05, 0.1, 0.01);
        let sol = build_and_solve_global_attack(&net, &ops, &params).unwrap();
        // Re-dispatch with the attack fixed; the embedded follower primal
        // must be reproduced.
        let d = crate::dcopf::solve_global_opf_with_attack(&net, &ops, &sol.c).unwrap();
        let g_inc = gen_incidence(&net);
        let load = net.load_vector();
        let physical = (ops.k.row(0) * (&g_inc * &d.p_g - &load))[0];
        assert_abs_diff_eq!(physical, sol.physical_flow, epsilon = 1e-6);
    }

    #[test]
    fn budget_monotonicity() {
        let (net, ops) = tri_setup();
        let mut last = f64::NEG_INFINITY;
        for n1 in [0.005, 0.01, 0.02, 0.05, 0.1] {
            let params = AttackParams::new(1, n1, 0.1, 0.0);
            let sol = build_and_solve_global_attack(&net, &ops, &params).unwrap();
            assert!(
                sol.objective >= last - 1e-7,
                "objective fell from {last} to {} at n1={n1}",
                sol.objective
            );
            last = sol.objective;
        }
    }

    fn chain_local() -> (Network, DcOperators, Partition, Network, DcOperators) {
        let net = parse_case(CHAIN5).unwrap();
        let ops = build_operators(&net).unwrap();
        let part = make_partition(&net, &[1, 2, 3]).unwrap();
        let lnet = local_network(&net, &part).unwrap();
        let lops = build_operators(&lnet).unwrap();
        (net, ops, part, lnet, lops)
    }

    #[test]
    fn local_attack_stays_inside_subnetwork() {
        let (net, ops, part, lnet, lops) = chain_local();
        // Perfect predictor from Scenario-1 structure on this chain.
        let ds = crate::history::generate_dataset(
            &net,
            &ops,
            &part,
            crate::history::Scenario::LocalOnly,
            25,
            5,
        )
        .unwrap();
        let model = crate::regression::fit(&ds, &net, &part).unwrap();
        let lambda_b = ds.records[0].boundary_lmp.clone();
        let load =
            DVector::from_iterator(part.n_local(), part.local.iter().map(|&b| {
                net.buses[net.bus_index(b).unwrap()].load
            }));
        let p = LocalProblem {
            net: &lnet,
            ops: &lops,
            part: &part,
            f: &model.f,
            f0: &model.f0,
            lambda_b: &lambda_b,
            load,
        };
        let target_line = 2; // branch id of line 2-3 inside the region
        let params = AttackParams::new(target_line, 0.05, 0.1, 0.01);
        let sol = build_and_solve_local_attack(&p, &params).unwrap();
        // boundary entries pinned to zero
        for &b in &part.boundary {
            let j = lnet.bus_index(b).unwrap();
            assert_abs_diff_eq!(sol.c[j], 0.0, epsilon = 1e-12);
        }
        // load-shift cap inside the region
        let hc = &lops.h * &sol.c;
        for i in 0..lnet.n_buses() {
            assert!(hc[i].abs() <= params.tau * p.load[i] + 1e-7);
        }
        // flow-gap identity and Theorem-2 bound
        let tidx = lnet.branch_index(target_line).unwrap();
        let gap = (lops.k.row(tidx) * &hc)[0];
        assert_abs_diff_eq!(sol.physical_flow - sol.cyber_flow, -gap, epsilon = 1e-7);
        assert!(sol.sign * sol.physical_flow <= sol.upper_bound + 1e-6);
        // the zero vector is feasible, so the optimum can't be worse
        let base = crate::dcopf::solve_local_opf(&p, &DVector::zeros(lnet.n_buses())).unwrap();
        assert!(sol.objective >= sol.sign * base.flows[tidx] - 1e-6);
        assert!(sol.subgraph.is_some());
        // re-dispatching the follower with c fixed reproduces the embedded primal
        let redo = crate::dcopf::solve_local_opf(&p, &sol.c).unwrap();
        let phys_redo =
            (lops.k.row(tidx) * (&gen_incidence(&lnet) * &redo.p_g - &p.load))[0]
                - (crate::dcopf::boundary_columns(&lops, &lnet, &part).row(tidx) * &redo.p_i)[0];
        assert_abs_diff_eq!(phys_redo, sol.physical_flow, epsilon = 1e-6);
    }

    #[test]
    fn ptdf_times_h_equals_branch_matrix() {
        let (net, ops) = tri_setup();
        let mut rng = crate::rng::Rng::new(17);
        for _ in 0..50 {
            let c = DVector::from_fn(net.n_buses(), |_, _| rng.next_normal(0.0, 1.0));
            let lhs = &ops.k * &ops.h * &c;
            let rhs = &ops.gamma * &c;
            for l in 0..net.n_branches() {
                assert_abs_diff_eq!(lhs[l], rhs[l], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn upper_bound_with_zero_attack_is_rating() {
        let (net, ops) = tri_setup();
        let c = DVector::zeros(net.n_buses());
        assert_abs_diff_eq!(upper_bound(&ops, &net, 0, 1.0, &c), net.branches[0].rating);
    }

    #[test]
    fn solution_json_round_trip() {
        let (net, ops) = tri_setup();
        let params = AttackParams::new(1, 0.05, 0.1, 0.01);
        let sol = build_and_solve_global_attack(&net, &ops, &params).unwrap();
        let dir = std::env::temp_dir().join("fdi_attack_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("sol.json");
        save_solution(&sol, &path).unwrap();
        let back = load_solution(&path).unwrap();
        assert_eq!(sol.c, back.c);
        assert_eq!(sol.objective, back.objective);
        assert_eq!(sol.scope, back.scope);
    }

    #[test]
    fn bad_params_rejected() {
        let (net, ops) = tri_setup();
        assert!(matches!(
            build_and_solve_global_attack(&net, &ops, &AttackParams::new(1, 0.05, 1.5, 0.0)),
            Err(AttackError::Params(_))
        ));
        assert!(matches!(
            build_and_solve_global_attack(&net, &ops, &AttackParams::new(99, 0.05, 0.1, 0.0)),
            Err(AttackError::NoSuchLine(99))
        ));
    }
}
