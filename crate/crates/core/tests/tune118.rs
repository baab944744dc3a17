// Scratch probe for 118-bus case tuning. Not part of the test suite.
#![allow(dead_code)]

use fdi_core::dc::build_operators;
use fdi_core::dcopf::solve_global_opf;
use fdi_core::grid::{make_partition, parse_case};

const L118: [usize; 47] = [
    1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 16, 17, 23, 25, 26, 27, 30, 33, 34, 35, 37,
    38, 39, 40, 47, 49, 59, 60, 61, 62, 63, 64, 65, 66, 68, 69, 70, 75, 77, 80, 81, 116, 117,
];

#[test]
#[ignore]
fn probe118() {
    let text = std::fs::read_to_string("../../cases/case118.m").unwrap();
    let net = parse_case(&text).unwrap().scale_ratings(0.55).unwrap();
    let ops = build_operators(&net).unwrap();
    let d = solve_global_opf(&net, &ops).unwrap();
    println!("cost {:.2} congested {:?}", d.cost, d.congested());
    for &k in &d.congested() {
        let br = &net.branches[k];
        println!("  line {} {}-{} flow {:.4} rating {:.4}", br.id, br.from, br.to, d.flows[k], br.rating);
    }
    println!("marginal buses {:?}", d.marginal_buses);
    let part = make_partition(&net, &L118).unwrap();
    println!("n_local_lines {} boundary({}) {:?}", part.local_lines.len(), part.boundary.len(), part.boundary);
    let k = net.branch_index(5).unwrap();
    println!("target line 5 flow {:.4} rating {:.4}", d.flows[k], net.branches[k].rating);
    let ext_lines: Vec<usize> = net
        .branches
        .iter()
        .filter(|b| !part.local_lines.contains(&b.id))
        .map(|b| b.id)
        .collect();
    println!("external lines {}", ext_lines.len());
    let mut island = vec![];
    let mut infeas = vec![];
    let mut ok = 0;
    for &id in &ext_lines {
        let k = net.branch_index(id).unwrap();
        let mut sub = net.clone();
        sub.branches.remove(k);
        sub.name = format!("{}-out{}", net.name, id);
        match build_operators(&sub) {
            Err(_) => island.push(id),
            Ok(o2) => match sub.validate() {
                Err(_) => island.push(id),
                Ok(()) => match solve_global_opf(&sub, &o2) {
                    Ok(_) => ok += 1,
                    Err(_) => infeas.push(id),
                },
            },
        }
    }
    println!("evaluable {ok} island {island:?} infeasible {infeas:?}");
}
