//! DC optimal power flow: the system operator's global dispatch problem and
//! the attacker's local dispatch problem with pseudo-boundary injections.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::dc::DcOperators;
use crate::grid::{Network, Partition};
use crate::solver::{solve_qp, ConvexQp, LinearProgram, SolveStatus, SolverError};

/// A line is congested when its flow is within this margin of the rating.
pub const CONGESTION_EPS: f64 = 1e-4;
/// A generator is marginal when strictly inside its limits by this margin.
pub const MARGINAL_EPS: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum OpfError {
    #[error("optimal power flow is infeasible")]
    Infeasible,
    #[error("optimal power flow is unbounded (malformed costs)")]
    Unbounded,
    #[error("solver failure: {0}")]
    Solver(#[from] SolverError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Solved global dispatch. After an attack, `flows` are the cyber flows the
/// operator believes in; physical flows are recomputed by the evaluator.
#[derive(Debug, Clone)]
pub struct Dispatch {
    /// Generator outputs, network order (p.u.).
    pub p_g: DVector<f64>,
    /// Branch flows seen by the operator (p.u.).
    pub flows: DVector<f64>,
    /// Locational marginal price per bus ($/p.u.-h).
    pub lmp: DVector<f64>,
    /// System balance price ($/p.u.-h).
    pub balance_price: f64,
    /// Upper/lower thermal-limit duals per branch.
    pub mu_plus: DVector<f64>,
    pub mu_minus: DVector<f64>,
    /// Branch indices congested in the positive / negative direction.
    pub congested_pos: Vec<usize>,
    pub congested_neg: Vec<usize>,
    /// Generator indices strictly inside their limits.
    pub marginal_gens: Vec<usize>,
    /// Buses (external ids) hosting at least one marginal generator.
    pub marginal_buses: Vec<usize>,
    /// Total generation cost, including cost-curve constants ($/h).
    pub cost: f64,
}

impl Dispatch {
    pub fn congested(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self
            .congested_pos
            .iter()
            .chain(self.congested_neg.iter())
            .copied()
            .collect();
        all.sort_unstable();
        all
    }

    /// +1 / −1 per congested line by flow direction, in `congested()` order.
    pub fn congestion_signs(&self) -> Vec<f64> {
        self.congested()
            .iter()
            .map(|k| if self.congested_pos.contains(k) { 1.0 } else { -1.0 })
            .collect()
    }
}

/// Bus-by-generator incidence: column g has a 1 at the generator's bus.
pub fn gen_incidence(net: &Network) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(net.n_buses(), net.n_gens());
    for (j, gen) in net.generators.iter().enumerate() {
        g[(net.bus_index(gen.bus).unwrap(), j)] = 1.0;
    }
    g
}

pub fn solve_global_opf(net: &Network, ops: &DcOperators) -> Result<Dispatch, OpfError> {
    solve_global_opf_instance(net, ops, &net.load_vector(), None)
}

pub fn solve_global_opf_with_attack(
    net: &Network,
    ops: &DcOperators,
    c: &DVector<f64>,
) -> Result<Dispatch, OpfError> {
    solve_global_opf_instance(net, ops, &net.load_vector(), Some(c))
}

/// Global DC OPF with explicit loads and an optional attack vector c. The
/// thermal constraints see the cyber injections G·P_G − P_D + H·c; balance
/// is unaffected because H·c sums to zero.
pub fn solve_global_opf_instance(
    net: &Network,
    ops: &DcOperators,
    load: &DVector<f64>,
    c: Option<&DVector<f64>>,
) -> Result<Dispatch, OpfError> {
    let n_b = net.n_buses();
    let n_br = net.n_branches();
    let n_g = net.n_gens();
    if load.len() != n_b {
        return Err(OpfError::Dimension(format!(
            "load vector has {} entries for {n_b} buses",
            load.len()
        )));
    }
    let hc: DVector<f64> = match c {
        Some(c) => {
            if c.len() != n_b {
                return Err(OpfError::Dimension(format!(
                    "attack vector has {} entries for {n_b} buses",
                    c.len()
                )));
            }
            &ops.h * c
        }
        None => DVector::zeros(n_b),
    };

    let g_inc = gen_incidence(net);
    let kg = &ops.k * &g_inc; // n_br x n_g
    let k_shift = &ops.k * (load - &hc); // rating offset from loads and attack
    let ratings = DVector::from_iterator(n_br, net.branches.iter().map(|b| b.rating));

    let mut lp = LinearProgram::new(n_g);
    lp.c = DVector::from_iterator(n_g, net.generators.iter().map(|g| g.cost_b));
    lp.a_eq = DMatrix::from_element(1, n_g, 1.0);
    lp.b_eq = DVector::from_element(1, load.sum());
    let mut a_in = DMatrix::zeros(2 * n_br, n_g);
    a_in.view_mut((0, 0), (n_br, n_g)).copy_from(&kg);
    a_in.view_mut((n_br, 0), (n_br, n_g)).copy_from(&(-&kg));
    let mut b_in = DVector::zeros(2 * n_br);
    b_in.rows_mut(0, n_br).copy_from(&(&ratings + &k_shift));
    b_in.rows_mut(n_br, n_br).copy_from(&(&ratings - &k_shift));
    lp.a_in = a_in;
    lp.b_in = b_in;
    lp.lower = DVector::from_iterator(n_g, net.generators.iter().map(|g| g.p_min));
    lp.upper = DVector::from_iterator(n_g, net.generators.iter().map(|g| g.p_max));
    let qp = ConvexQp {
        lp,
        q_diag: DVector::from_iterator(n_g, net.generators.iter().map(|g| 2.0 * g.cost_a)),
    };

    let r = solve_qp(&qp)?;
    match r.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Err(OpfError::Infeasible),
        SolveStatus::Unbounded => return Err(OpfError::Unbounded),
        SolveStatus::Limit => {
            return Err(OpfError::Solver(SolverError::Numerical(
                "iteration limit in global dispatch".into(),
            )))
        }
    }

    let p_g = r.x.clone();
    let injections = &g_inc * &p_g - load + &hc;
    let flows = &ops.k * &injections;
    let mu_plus = r.dual_in.rows(0, n_br).into_owned();
    let mu_minus = r.dual_in.rows(n_br, n_br).into_owned();
    let balance_price = -r.dual_eq[0];
    // λ_i = balance price − Σ_k K_{k,i}(μ⁺_k − μ⁻_k)
    let mu_net = &mu_plus - &mu_minus;
    let lmp = DVector::from_fn(n_b, |i, _| {
        balance_price - ops.k.column(i).dot(&mu_net)
    });

    let mut congested_pos = Vec::new();
    let mut congested_neg = Vec::new();
    for k in 0..n_br {
        if flows[k] >= ratings[k] - CONGESTION_EPS {
            congested_pos.push(k);
        } else if flows[k] <= -ratings[k] + CONGESTION_EPS {
            congested_neg.push(k);
        }
    }
    let mut marginal_gens = Vec::new();
    let mut marginal_buses = Vec::new();
    for (j, gen) in net.generators.iter().enumerate() {
        if p_g[j] > gen.p_min + MARGINAL_EPS && p_g[j] < gen.p_max - MARGINAL_EPS {
            marginal_gens.push(j);
            if !marginal_buses.contains(&gen.bus) {
                marginal_buses.push(gen.bus);
            }
        }
    }
    marginal_buses.sort_unstable();

    Ok(Dispatch {
        cost: net.total_gen_cost(&p_g),
        p_g,
        flows,
        lmp,
        balance_price,
        mu_plus,
        mu_minus,
        congested_pos,
        congested_neg,
        marginal_gens,
        marginal_buses,
    })
}

/// Inputs for the attacker's local dispatch problem, all restricted to the
/// local region 𝓛: the local network and operators from `local_network` /
/// `build_operators`, the fitted predictor (F, f0), and boundary prices.
pub struct LocalProblem<'a> {
    pub net: &'a Network,
    pub ops: &'a DcOperators,
    pub part: &'a Partition,
    /// n_B x n_L predictor matrix mapping local injections to
    /// pseudo-boundary injections.
    pub f: &'a DMatrix<f64>,
    pub f0: &'a DVector<f64>,
    /// Boundary LMPs, boundary order ($/p.u.-h).
    pub lambda_b: &'a DVector<f64>,
    /// Local loads (p.u.), local bus order.
    pub load: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct LocalOpfResult {
    /// Local generator outputs, local-network order (p.u.).
    pub p_g: DVector<f64>,
    /// Pseudo-boundary injections, boundary order; positive exports power
    /// from the local region.
    pub p_i: DVector<f64>,
    /// Attacker-computed cyber flows on local lines (p.u.).
    pub flows: DVector<f64>,
    /// Local generation cost minus the LMP revenue of boundary exports.
    pub objective: f64,
}

/// Columns of the local PTDF restricted to boundary buses (n_lines x n_B).
pub fn boundary_columns(ops: &DcOperators, net: &Network, part: &Partition) -> DMatrix<f64> {
    let n_bd = part.n_boundary();
    let mut kb = DMatrix::zeros(ops.k.nrows(), n_bd);
    for (t, &bus) in part.boundary.iter().enumerate() {
        let col = net.bus_index(bus).expect("boundary bus in local network");
        kb.set_column(t, &ops.k.column(col));
    }
    kb
}

/// Attacker's second-level problem: minimize local generation cost net of
/// the LMP-priced boundary exports, subject to the regression prediction,
/// local balance, and local thermal limits, all under the counterfeit
/// injections H̄·c̄. Exports earn the boundary price: that is the cost
/// decomposition of the full dispatch restricted to the region, and it is
/// what makes the modeled re-dispatch track the real one.
pub fn solve_local_opf(p: &LocalProblem, c_bar: &DVector<f64>) -> Result<LocalOpfResult, OpfError> {
    let net = p.net;
    let n_l = net.n_buses();
    let n_lines = net.n_branches();
    let n_g = net.n_gens();
    let n_bd = p.part.n_boundary();
    if c_bar.len() != n_l {
        return Err(OpfError::Dimension(format!(
            "local attack vector has {} entries for {n_l} local buses",
            c_bar.len()
        )));
    }
    if p.f.nrows() != n_bd || p.f.ncols() != n_l || p.f0.len() != n_bd || p.lambda_b.len() != n_bd
    {
        return Err(OpfError::Dimension("predictor or price dimensions".into()));
    }
    let hc = &p.ops.h * c_bar;
    let g_inc = gen_incidence(net);
    let kb = boundary_columns(p.ops, net, p.part);
    let kg = &p.ops.k * &g_inc;
    let fg = p.f * &g_inc; // n_bd x n_g
    let ratings = DVector::from_iterator(n_lines, net.branches.iter().map(|b| b.rating));

    // Variables: [P̄_G (n_g) | P̄_I (n_bd)].
    let nv = n_g + n_bd;
    let mut lp = LinearProgram::new(nv);
    for (j, gen) in net.generators.iter().enumerate() {
        lp.c[j] = gen.cost_b;
        lp.lower[j] = gen.p_min;
        lp.upper[j] = gen.p_max;
    }
    for t in 0..n_bd {
        lp.c[n_g + t] = -p.lambda_b[t];
    }

    // Prediction rows: P̄_I − F·Ḡ·P̄_G = F·(H̄c̄ − P̄_D) + f0; then balance.
    let mut a_eq = DMatrix::zeros(n_bd + 1, nv);
    let mut b_eq = DVector::zeros(n_bd + 1);
    a_eq.view_mut((0, 0), (n_bd, n_g)).copy_from(&(-&fg));
    for t in 0..n_bd {
        a_eq[(t, n_g + t)] = 1.0;
    }
    let pred_rhs = p.f * (&hc - &p.load) + p.f0;
    b_eq.rows_mut(0, n_bd).copy_from(&pred_rhs);
    for j in 0..n_g {
        a_eq[(n_bd, j)] = 1.0;
    }
    for t in 0..n_bd {
        a_eq[(n_bd, n_g + t)] = -1.0;
    }
    b_eq[n_bd] = p.load.sum();
    lp.a_eq = a_eq;
    lp.b_eq = b_eq;

    // Thermal: ±(K̄Ḡ·P̄_G − K̄^𝓑·P̄_I) ≤ r̄ ∓ K̄(H̄c̄ − P̄_D).
    let k_shift = &p.ops.k * (&hc - &p.load);
    let mut a_in = DMatrix::zeros(2 * n_lines, nv);
    a_in.view_mut((0, 0), (n_lines, n_g)).copy_from(&kg);
    a_in.view_mut((0, n_g), (n_lines, n_bd)).copy_from(&(-&kb));
    a_in.view_mut((n_lines, 0), (n_lines, n_g)).copy_from(&(-&kg));
    a_in.view_mut((n_lines, n_g), (n_lines, n_bd)).copy_from(&kb);
    let mut b_in = DVector::zeros(2 * n_lines);
    b_in.rows_mut(0, n_lines).copy_from(&(&ratings - &k_shift));
    b_in.rows_mut(n_lines, n_lines).copy_from(&(&ratings + &k_shift));
    lp.a_in = a_in;
    lp.b_in = b_in;

    let qp = ConvexQp {
        lp,
        q_diag: {
            let mut q = DVector::zeros(nv);
            for (j, gen) in net.generators.iter().enumerate() {
                q[j] = 2.0 * gen.cost_a;
            }
            q
        },
    };
    let r = solve_qp(&qp)?;
    match r.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Err(OpfError::Infeasible),
        SolveStatus::Unbounded => return Err(OpfError::Unbounded),
        SolveStatus::Limit => {
            return Err(OpfError::Solver(SolverError::Numerical(
                "iteration limit in local dispatch".into(),
            )))
        }
    }
    let p_g = r.x.rows(0, n_g).into_owned();
    let p_i = r.x.rows(n_g, n_bd).into_owned();
    let flows = &kg * &p_g + &k_shift - &kb * &p_i;
    let objective = net.total_gen_cost(&p_g) - p.lambda_b.dot(&p_i);
    Ok(LocalOpfResult { p_g, p_i, flows, objective })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dc::{build_operators, local_network};
    use crate::grid::{make_partition, parse_case};
    use approx::assert_abs_diff_eq;

    // Equal reactances; cheap gen at bus 1, expensive at bus 3, load at 2.
    const TRIANGLE_OPF: &str = "\
function mpc = tri_opf
mpc.baseMVA = 100;
mpc.bus = [
 1 3 0   0 0 0 1 1 0 230 1 1.1 0.9;
 2 1 100 0 0 0 1 1 0 230 1 1.1 0.9;
 3 2 0   0 0 0 1 1 0 230 1 1.1 0.9;
];
mpc.gen = [
 1 0 0 999 -999 1 100 1 200 0;
 3 0 0 999 -999 1 100 1 200 0;
];
mpc.branch = [
 1 2 0 1 0 RATE12 0 0 0 0 1 -360 360;
 1 3 0 1 0 300 0 0 0 0 1 -360 360;
 2 3 0 1 0 300 0 0 0 0 1 -360 360;
];
mpc.gencost = [
 2 0 0 2 10 0;
 2 0 0 2 30 0;
];
";

    fn triangle(rate12: &str) -> Network {
        parse_case(&TRIANGLE_OPF.replace("RATE12", rate12)).unwrap()
    }

    #[test]
    fn uncongested_all_on_cheap_gen_uniform_lmp() {
        let net = triangle("300");
        let ops = build_operators(&net).unwrap();
        let d = solve_global_opf(&net, &ops).unwrap();
        assert_abs_diff_eq!(d.p_g[0], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(d.p_g[1], 0.0, epsilon = 1e-8);
        for i in 0..3 {
            assert_abs_diff_eq!(d.lmp[i], 1000.0, epsilon = 1e-6); // 10 $/MWh = 1000 $/p.u.
        }
        assert!(d.congested().is_empty());
        assert_abs_diff_eq!(d.cost, 1000.0, epsilon = 1e-6);
    }

    #[test]
    fn congested_split_matches_hand_kkt() {
        // Rating 55 MW on line 1-2 forces (2/3)p1 + (1/3)p3 = 0.55 with
        // p1 + p3 = 1: p1 = 0.65, p3 = 0.35, and the hand-derived KKT gives
        // LMPs (10, 50, 30) $/MWh with μ = 60 $/MWh on line 1-2.
        let net = triangle("55");
        let ops = build_operators(&net).unwrap();
        let d = solve_global_opf(&net, &ops).unwrap();
        assert_abs_diff_eq!(d.p_g[0], 0.65, epsilon = 1e-7);
        assert_abs_diff_eq!(d.p_g[1], 0.35, epsilon = 1e-7);
        assert_abs_diff_eq!(d.flows[0], 0.55, epsilon = 1e-8);
        assert_abs_diff_eq!(d.lmp[0], 1000.0, epsilon = 1e-5);
        assert_abs_diff_eq!(d.lmp[1], 5000.0, epsilon = 1e-5);
        assert_abs_diff_eq!(d.lmp[2], 3000.0, epsilon = 1e-5);
        assert_eq!(d.congested_pos, vec![0]);
        assert!(d.congested_neg.is_empty());
        assert!(d.mu_plus[0] > 1e-6);
        assert_abs_diff_eq!(d.cost, 1700.0, epsilon = 1e-4);
        // Both generators are marginal and priced at their slopes.
        assert_eq!(d.marginal_gens, vec![0, 1]);
        assert_eq!(d.marginal_buses, vec![1, 3]);
    }

    #[test]
    fn zero_attack_is_identical_and_null_space_attack_is_harmless() {
        let net = triangle("55");
        let ops = build_operators(&net).unwrap();
        let base = solve_global_opf(&net, &ops).unwrap();
        let zero = solve_global_opf_with_attack(&net, &ops, &DVector::zeros(3)).unwrap();
        assert_eq!(base.p_g, zero.p_g);
        assert_eq!(base.flows, zero.flows);
        assert_eq!(base.lmp, zero.lmp);
        let ones = solve_global_opf_with_attack(&net, &ops, &DVector::from_element(3, 0.7)).unwrap();
        for j in 0..2 {
            assert_abs_diff_eq!(ones.p_g[j], base.p_g[j], epsilon = 1e-9);
        }
    }

    #[test]
    fn attack_shifts_cyber_flows() {
        let net = triangle("55");
        let ops = build_operators(&net).unwrap();
        // A counterfeit angle bump at bus 2 changes what the operator
        // believes the flows are, and the redispatch moves with it.
        let mut c = DVector::zeros(3);
        c[1] = 0.05;
        let d = solve_global_opf_with_attack(&net, &ops, &c).unwrap();
        let base = solve_global_opf(&net, &ops).unwrap();
        assert!((d.p_g[0] - base.p_g[0]).abs() > 1e-4);
        // Cyber flow still respects the rating.
        assert!(d.flows[0] <= 0.55 + 1e-7);
    }

    #[test]
    fn infeasible_opf_reported() {
        // Load exceeds total generation capability.
        let net = parse_case(
            &TRIANGLE_OPF
                .replace("RATE12", "300")
                .replace("1 0 0 999 -999 1 100 1 200 0;", "1 0 0 999 -999 1 100 1 0.3 0;")
                .replace("3 0 0 999 -999 1 100 1 200 0;", "3 0 0 999 -999 1 100 1 0.3 0;"),
        )
        .unwrap();
        let ops = build_operators(&net).unwrap();
        match solve_global_opf(&net, &ops) {
            Err(OpfError::Infeasible) => {}
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    // Path 1-2-3-4 with 𝓛 = {1,2}: one local line 1-2, boundary bus 2.
    const PATH4: &str = "\
function mpc = path4
mpc.baseMVA = 100;
mpc.bus = [
 1 3 20 0 0 0 1 1 0 230 1 1.1 0.9;
 2 1 40 0 0 0 1 1 0 230 1 1.1 0.9;
 3 1 30 0 0 0 1 1 0 230 1 1.1 0.9;
 4 1 50 0 0 0 1 1 0 230 1 1.1 0.9;
];
mpc.gen = [
 1 0 0 999 -999 1 100 1 150 0;
 4 0 0 999 -999 1 100 1 150 0;
];
mpc.branch = [
 1 2 0 0.1 0 250 0 0 0 0 1 -360 360;
 2 3 0 0.1 0 250 0 0 0 0 1 -360 360;
 3 4 0 0.1 0 250 0 0 0 0 1 -360 360;
];
mpc.gencost = [
 2 0 0 2 10 0;
 2 0 0 2 20 0;
];
";

    #[test]
    fn local_opf_with_pinned_prediction() {
        let net = parse_case(PATH4).unwrap();
        let part = make_partition(&net, &[1, 2]).unwrap();
        let lnet = local_network(&net, &part).unwrap();
        let lops = build_operators(&lnet).unwrap();
        // F = 0, f0 = 0.3: the prediction pins the export at 0.3 p.u., so
        // balance forces P̄_G = local load + export = 0.6 + 0.3.
        let f = DMatrix::zeros(1, 2);
        let f0 = DVector::from_element(1, 0.3);
        let lambda_b = DVector::from_element(1, 2000.0);
        let prob = LocalProblem {
            net: &lnet,
            ops: &lops,
            part: &part,
            f: &f,
            f0: &f0,
            lambda_b: &lambda_b,
            load: lnet.load_vector(),
        };
        let r = solve_local_opf(&prob, &DVector::zeros(2)).unwrap();
        assert_abs_diff_eq!(r.p_g[0], 0.9, epsilon = 1e-7);
        assert_abs_diff_eq!(r.p_i[0], 0.3, epsilon = 1e-9);
        // Local balance invariant.
        assert_abs_diff_eq!(r.p_g.sum() - r.p_i.sum(), 0.6, epsilon = 1e-7);
        // Thermal limits hold.
        for (k, br) in lnet.branches.iter().enumerate() {
            assert!(r.flows[k].abs() <= br.rating + 1e-7);
        }
        assert_abs_diff_eq!(r.objective, 0.9 * 1000.0 - 0.3 * 2000.0, epsilon = 1e-5);
    }

    #[test]
    fn free_generation_with_export_revenue_maxes_injection() {
        let net = parse_case(&PATH4.replace("2 0 0 2 10 0;", "2 0 0 2 0 0;")).unwrap();
        let part = make_partition(&net, &[1, 2]).unwrap();
        let lnet = local_network(&net, &part).unwrap();
        let lops = build_operators(&lnet).unwrap();
        // F sums local injections, which equals the export for this
        // topology; exports earn the boundary price, so the free local
        // generator runs flat out: P̄_I = P_max − load = 1.5 − 0.6.
        let f = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let f0 = DVector::zeros(1);
        let lambda_b = DVector::from_element(1, 1000.0);
        let prob = LocalProblem {
            net: &lnet,
            ops: &lops,
            part: &part,
            f: &f,
            f0: &f0,
            lambda_b: &lambda_b,
            load: lnet.load_vector(),
        };
        let r = solve_local_opf(&prob, &DVector::zeros(2)).unwrap();
        assert_abs_diff_eq!(r.p_g[0], 1.5, epsilon = 1e-6);
        assert_abs_diff_eq!(r.p_i[0], 0.9, epsilon = 1e-6);
    }

    #[test]
    fn local_attack_shifts_thermal_room() {
        let net = parse_case(PATH4).unwrap();
        let part = make_partition(&net, &[1, 2]).unwrap();
        let lnet = local_network(&net, &part).unwrap();
        let lops = build_operators(&lnet).unwrap();
        let f = DMatrix::zeros(1, 2);
        let f0 = DVector::from_element(1, 0.3);
        let lambda_b = DVector::from_element(1, 2000.0);
        let prob = LocalProblem {
            net: &lnet,
            ops: &lops,
            part: &part,
            f: &f,
            f0: &f0,
            lambda_b: &lambda_b,
            load: lnet.load_vector(),
        };
        let mut c_bar = DVector::zeros(2);
        c_bar[0] = 0.02; // counterfeit angle at internal bus 1
        let base = solve_local_opf(&prob, &DVector::zeros(2)).unwrap();
        let atk = solve_local_opf(&prob, &c_bar).unwrap();
        // Same pinned export, same dispatch, but the cyber flow moves by
        // the counterfeit line-1 injection H̄c̄.
        assert_abs_diff_eq!(atk.p_g[0], base.p_g[0], epsilon = 1e-7);
        assert!((atk.flows[0] - base.flows[0]).abs() > 1e-4);
    }
}
