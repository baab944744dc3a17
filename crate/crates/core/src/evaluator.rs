//! Ground-truth judge: applies an attack to the full network, recomputes
//! the spoofed dispatch, and scores what actually happens on the wires.

use nalgebra::DVector;
use thiserror::Error;

use crate::attack::{build_and_solve_local_attack, AttackError, AttackParams, AttackSolution};
use crate::dc::{build_operators, local_network, DcError, DcOperators, MeasurementSet};
use crate::dcopf::{gen_incidence, solve_global_opf, solve_global_opf_with_attack, LocalProblem, OpfError};
use crate::grid::{GridError, Network, Partition};
use crate::history::pseudo_injections_from_external_flows;

/// A line counts as overloaded when its physical flow exceeds the rating
/// by more than this.
pub const OVERFLOW_EPS: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("attack vector length {got} does not fit the network ({expected})")]
    Dimension { expected: usize, got: usize },
    #[error("target line {0} not found")]
    NoSuchLine(usize),
    #[error("attack support escapes the declared sub-graph at {0}")]
    SupportEscape(String),
    #[error("dispatch failed: {0}")]
    Opf(#[from] OpfError),
    #[error("operator build failed: {0}")]
    Dc(#[from] DcError),
    #[error("grid error: {0}")]
    Grid(#[from] GridError),
    #[error("attack re-solve failed: {0}")]
    Attack(#[from] AttackError),
}

#[derive(Debug, Clone)]
pub struct EvaluationReport {
    pub target_line: usize,
    /// Flow the operator's (spoofed) state estimate shows on the target.
    pub cyber_flow: f64,
    /// Flow actually materializing on the target.
    pub physical_flow: f64,
    pub rating: f64,
    /// 100 * sign * physical / rating.
    pub overflow_percent: f64,
    /// Flow the attacker expected to materialize.
    pub attacker_physical: f64,
    pub upper_bound: f64,
    /// Actual minus predicted pseudo-boundary injection, boundary order
    /// (local attacks only).
    pub pseudo_errors: Option<DVector<f64>>,
    /// True when the spoofed dispatch problem was solvable at all.
    pub feasible: bool,
}

impl EvaluationReport {
    pub fn overflows(&self, sign: f64) -> bool {
        self.feasible && sign * self.physical_flow > self.rating + OVERFLOW_EPS
    }

    pub fn max_pseudo_error(&self) -> f64 {
        self.pseudo_errors.as_ref().map(|e| e.abs().max()).unwrap_or(0.0)
    }

    fn infeasible(target_line: usize, rating: f64, sol: &AttackSolution) -> Self {
        EvaluationReport {
            target_line,
            cyber_flow: f64::NAN,
            physical_flow: f64::NAN,
            rating,
            overflow_percent: f64::NAN,
            attacker_physical: sol.physical_flow,
            upper_bound: sol.upper_bound,
            pseudo_errors: None,
            feasible: false,
        }
    }
}

/// Expands a local attack vector (local-network bus order) to full-network
/// length, zero outside the region; global vectors pass through.
pub fn embed_attack(net: &Network, part: &Partition, sol: &AttackSolution) -> Result<DVector<f64>, EvalError> {
    if sol.c.len() == net.n_buses() && sol.scope == crate::attack::AttackScope::Global {
        return Ok(sol.c.clone());
    }
    let lnet = local_network(net, part)?;
    if sol.c.len() != lnet.n_buses() {
        return Err(EvalError::Dimension { expected: lnet.n_buses(), got: sol.c.len() });
    }
    let mut c = DVector::zeros(net.n_buses());
    for (j, bus) in lnet.buses.iter().enumerate() {
        c[net.bus_index(bus.id).unwrap()] = sol.c[j];
    }
    Ok(c)
}

pub fn evaluate(
    net: &Network,
    ops: &DcOperators,
    part: &Partition,
    sol: &AttackSolution,
) -> Result<EvaluationReport, EvalError> {
    let target = net
        .branch_index(sol.params.target_line)
        .ok_or(EvalError::NoSuchLine(sol.params.target_line))?;
    let rating = net.branches[target].rating;
    let c = embed_attack(net, part, sol)?;
    let d = match solve_global_opf_with_attack(net, ops, &c) {
        Ok(d) => d,
        Err(OpfError::Infeasible) => {
            return Ok(EvaluationReport::infeasible(sol.params.target_line, rating, sol))
        }
        Err(e) => return Err(e.into()),
    };
    let load = net.load_vector();
    let physical_flows = &ops.k * (&gen_incidence(net) * &d.p_g - &load);
    let physical_flow = physical_flows[target];
    let cyber_flow = d.flows[target];
    let pseudo_errors = sol.predicted_p_i.as_ref().map(|pred| {
        let actual = pseudo_injections_from_external_flows(net, part, &physical_flows);
        // Compare by bus id so an outage-shrunk boundary still lines up.
        DVector::from_fn(pred.len(), |t, _| {
            if t < part.n_boundary() { actual[t] - pred[t] } else { f64::NAN }
        })
    });
    Ok(EvaluationReport {
        target_line: sol.params.target_line,
        cyber_flow,
        physical_flow,
        rating,
        overflow_percent: 100.0 * sol.sign * physical_flow / rating,
        attacker_physical: sol.physical_flow,
        upper_bound: sol.upper_bound,
        pseudo_errors,
        feasible: true,
    })
}

/// Builds spoofed measurements per the attack and returns the estimation
/// residual; an unobservable attack leaves it at the clean-data value.
pub fn check_unobservability(
    net: &Network,
    ops: &DcOperators,
    part: &Partition,
    x_base: &DVector<f64>,
    sol: &AttackSolution,
) -> Result<f64, EvalError> {
    let c = embed_attack(net, part, sol)?;
    let meas = MeasurementSet::from_state(ops, x_base);
    let delta = &meas.matrix * &c;
    if let Some(sg) = &sol.subgraph {
        let n_b = net.n_buses();
        for (i, bus) in net.buses.iter().enumerate() {
            if delta[i].abs() > 1e-9 && sg.members.binary_search(&bus.id).is_err() {
                return Err(EvalError::SupportEscape(format!("injection at bus {}", bus.id)));
            }
        }
        for (l, br) in net.branches.iter().enumerate() {
            if delta[n_b + l].abs() > 1e-9 && sg.member_lines.binary_search(&br.id).is_err() {
                return Err(EvalError::SupportEscape(format!("flow on line {}", br.id)));
            }
        }
    }
    let spoofed = MeasurementSet { matrix: meas.matrix.clone(), z: &meas.z + delta, slack: meas.slack };
    Ok(crate::dc::wls_residual(&spoofed)?)
}

#[derive(Debug, Clone)]
pub struct SensitivityRow {
    pub outaged_line: usize,
    pub connected: bool,
    pub pre_attack_feasible: bool,
    pub post_attack_feasible: bool,
    pub overflow: bool,
    pub physical_flow: f64,
    pub max_pseudo_error: f64,
}

#[derive(Debug, Clone)]
pub struct SensitivityReport {
    pub rows: Vec<SensitivityRow>,
    pub intact_overflow: bool,
    pub intact_max_error: f64,
    pub evaluated: usize,
    pub skipped_disconnected: usize,
    pub skipped_infeasible: usize,
    pub overflow_persists: usize,
    pub overflow_lost: usize,
    pub prediction_error_increased: usize,
}

impl SensitivityReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "outaged_line,connected,pre_attack_feasible,post_attack_feasible,overflow,physical_flow,max_pseudo_error\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.outaged_line,
                r.connected,
                r.pre_attack_feasible,
                r.post_attack_feasible,
                r.overflow,
                r.physical_flow,
                r.max_pseudo_error
            ));
        }
        out
    }
}

fn is_connected(net: &Network, skip_branch: usize) -> bool {
    let n = net.n_buses();
    if n == 0 {
        return true;
    }
    let mut adj = vec![Vec::new(); n];
    for br in &net.branches {
        if br.id == skip_branch {
            continue;
        }
        let a = net.bus_index(br.from).unwrap();
        let b = net.bus_index(br.to).unwrap();
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    count == n
}

fn without_branch(net: &Network, branch_id: usize) -> Network {
    let mut out = net.clone();
    out.branches.retain(|b| b.id != branch_id);
    out.name = format!("{}-out{}", net.name, branch_id);
    out.fingerprint = format!("{}-out{}", net.fingerprint, branch_id);
    out
}

/// One-line-outage study over the external lines: the attacker's model is
/// stale (trained on the intact grid), so the attack vector is solved once
/// and judged against every changed reality.
pub fn topology_sensitivity(
    net: &Network,
    part: &Partition,
    local: &LocalProblem,
    params: &AttackParams,
) -> Result<SensitivityReport, EvalError> {
    let ops = build_operators(net)?;
    let sol = build_and_solve_local_attack(local, params)?;
    let intact = evaluate(net, &ops, part, &sol)?;
    let intact_overflow = intact.overflows(sol.sign);
    let intact_max_error = intact.max_pseudo_error();

    let mut report = SensitivityReport {
        rows: Vec::new(),
        intact_overflow,
        intact_max_error,
        evaluated: 0,
        skipped_disconnected: 0,
        skipped_infeasible: 0,
        overflow_persists: 0,
        overflow_lost: 0,
        prediction_error_increased: 0,
    };
    let external_lines: Vec<usize> = net
        .branches
        .iter()
        .filter(|b| part.local_lines.binary_search(&b.id).is_err())
        .map(|b| b.id)
        .collect();
    for line in external_lines {
        let mut row = SensitivityRow {
            outaged_line: line,
            connected: is_connected(net, line),
            pre_attack_feasible: false,
            post_attack_feasible: false,
            overflow: false,
            physical_flow: f64::NAN,
            max_pseudo_error: f64::NAN,
        };
        if !row.connected {
            report.skipped_disconnected += 1;
            report.rows.push(row);
            continue;
        }
        let onet = without_branch(net, line);
        let oops = build_operators(&onet)?;
        match solve_global_opf(&onet, &oops) {
            Ok(_) => row.pre_attack_feasible = true,
            Err(OpfError::Infeasible) => {
                report.skipped_infeasible += 1;
                report.rows.push(row);
                continue;
            }
            Err(e) => return Err(e.into()),
        }
        let opart = crate::grid::make_partition(&onet, &part.local)?;
        let rep = evaluate(&onet, &oops, &opart, &sol)?;
        row.post_attack_feasible = rep.feasible;
        row.overflow = rep.overflows(sol.sign);
        row.physical_flow = rep.physical_flow;
        row.max_pseudo_error = rep.max_pseudo_error();
        report.evaluated += 1;
        if intact_overflow {
            if row.overflow {
                report.overflow_persists += 1;
            } else {
                report.overflow_lost += 1;
            }
        }
        if row.max_pseudo_error > intact_max_error + 1e-6 {
            report.prediction_error_increased += 1;
        }
        report.rows.push(row);
    }
    Ok(report)
}
