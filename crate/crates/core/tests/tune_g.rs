// Scratch probe of the global attack MILP on the 24-bus case.
#![allow(dead_code)]

use fdi_core::attack::{build_and_solve_global_attack, AttackParams};
use fdi_core::dc::build_operators;
use fdi_core::grid::parse_case;
use std::time::Instant;

#[test]
#[ignore]
fn probe_global24() {
    let text = std::fs::read_to_string("../../cases/case24_ieee_rts.m").unwrap();
    let net = parse_case(&text).unwrap().scale_ratings(0.5).unwrap();
    let ops = build_operators(&net).unwrap();
    for (n1, nodes) in [(0.02, 2_000usize), (0.02, 20_000), (0.10, 20_000)] {
        let mut params = AttackParams::new(28, n1, 0.10, 0.001);
        params.node_limit = Some(nodes);
        let t = Instant::now();
        match build_and_solve_global_attack(&net, &ops, &params) {
            Ok(sol) => println!(
                "n1 {} nodes<={}: obj {:.5} phys {:.4} nodes {} iters {} esc {} in {:?}",
                n1, nodes, sol.objective, sol.physical_flow, sol.diagnostics.nodes,
                sol.diagnostics.iterations, sol.diagnostics.escalations, t.elapsed()
            ),
            Err(e) => println!("n1 {} nodes<={}: ERR {:?} in {:?}", n1, nodes, e, t.elapsed()),
        }
    }
}
