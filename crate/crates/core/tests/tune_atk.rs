// Scratch probe for end-to-end attacks on the benchmark cases. Not part of the suite.
#![allow(dead_code)]

use fdi_core::attack::{build_and_solve_global_attack, build_and_solve_local_attack, AttackParams};
use fdi_core::dc::{build_operators, local_network};
use fdi_core::dcopf::{solve_global_opf, LocalProblem};
use fdi_core::evaluator::evaluate;
use fdi_core::grid::{make_partition, parse_case};
use fdi_core::history::{generate_dataset, Scenario};
use fdi_core::regression::fit;
use nalgebra::DVector;

#[test]
#[ignore]
fn probe_attack24() {
    let text = std::fs::read_to_string("../../cases/case24_ieee_rts.m").unwrap();
    let net = parse_case(&text).unwrap().scale_ratings(0.5).unwrap();
    let ops = build_operators(&net).unwrap();
    let part = make_partition(&net, &[15, 16, 17, 18, 19, 20, 21, 22]).unwrap();
    let base = solve_global_opf(&net, &ops).unwrap();
    let target = net.branch_index(28).unwrap();
    let zeta = 0.01 * base.flows[target].abs();
    println!("base flow {:.4} zeta {:.5}", base.flows[target], zeta);

    let ds = generate_dataset(&net, &ops, &part, Scenario::LocalOnly, 200, 7).unwrap();
    let model = fit(&ds, &net, &part).unwrap();
    println!("fit rms {:?}", model.residual_rms.as_slice());

    let lnet = local_network(&net, &part).unwrap();
    let lops = build_operators(&lnet).unwrap();
    let lambda_b = DVector::from_iterator(
        part.n_boundary(),
        part.boundary.iter().map(|&b| base.lmp[net.bus_index(b).unwrap()]),
    );
    let load = DVector::from_iterator(
        lnet.n_buses(),
        lnet.buses.iter().map(|b| b.load),
    );
    let lp = LocalProblem {
        net: &lnet,
        ops: &lops,
        part: &part,
        f: &model.f,
        f0: &model.f0,
        lambda_b: &lambda_b,
        load,
    };
    for &n1 in &[0.02, 0.04, 0.06, 0.08, 0.10] {
        let params = AttackParams::new(28, n1, 0.10, zeta);
        let g = build_and_solve_global_attack(&net, &ops, &params).unwrap();
        let ge = evaluate(&net, &ops, &part, &g).unwrap();
        let l = build_and_solve_local_attack(&lp, &params).unwrap();
        let le = evaluate(&net, &ops, &part, &l).unwrap();
        println!(
            "n1 {:.2}: global obj {:.5} ovf {:.2}% | local obj {:.5} ovf {:.2}% ub {:.5} attacker {:.5} actual {:.5} err {:.2e} nodes {}/{}",
            n1, g.objective, ge.overflow_percent, l.objective, le.overflow_percent,
            l.upper_bound, l.physical_flow, le.physical_flow,
            le.max_pseudo_error(), g.diagnostics.nodes, l.diagnostics.nodes
        );
    }
}
