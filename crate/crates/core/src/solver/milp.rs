//! Best-first branch and bound over binary variables. Each node re-solves
//! its LP with the dual simplex warm-started from the parent basis, since
//! children differ from the parent only in one binary's bounds.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::lp::{default_iter_limit, Basis, Simplex, SimplexStatus};
use super::{MixedIntegerProgram, Sense, SolveResult, SolveStatus, SolverError};

const INT_TOL: f64 = 1e-6;
const BOUND_TOL: f64 = 1e-9;
const DEFAULT_NODE_LIMIT: usize = 500_000;

struct Node {
    /// Parent LP value in minimize space: a lower bound for the subtree.
    bound: f64,
    seq: u64,
    fixes: Vec<(usize, u8)>,
    basis: Basis,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.seq == other.seq
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap; invert so the lowest bound pops first,
    // with the oldest node breaking ties for determinism.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .partial_cmp(&self.bound)
            .unwrap_or(Ordering::Equal)
            .then(other.seq.cmp(&self.seq))
    }
}

pub fn solve_milp(mip: &MixedIntegerProgram) -> Result<SolveResult, SolverError> {
    let lp = &mip.lp;
    lp.validate()?;
    let n = lp.n_vars();
    for &j in &mip.binaries {
        if j >= n {
            return Err(SolverError::BadBinaryIndex(j));
        }
    }
    let node_limit = mip.node_limit.unwrap_or(DEFAULT_NODE_LIMIT);
    let iter_limit = default_iter_limit(lp);

    // Binaries live in [0,1] intersected with any caller-fixed bounds.
    let mut relaxed = lp.clone();
    for &j in &mip.binaries {
        relaxed.lower[j] = relaxed.lower[j].max(0.0);
        relaxed.upper[j] = relaxed.upper[j].min(1.0);
        if relaxed.lower[j] > relaxed.upper[j] {
            return Ok(SolveResult::empty(
                SolveStatus::Infeasible,
                n,
                lp.b_eq.len(),
                lp.b_in.len(),
            ));
        }
    }
    let root_lower = relaxed.lower.clone();
    let root_upper = relaxed.upper.clone();

    let mut res = SolveResult::empty(SolveStatus::Optimal, n, lp.b_eq.len(), lp.b_in.len());
    let mut incumbent: Option<(f64, nalgebra::DVector<f64>)> = None; // minimize space
    let mut total_iters = 0usize;

    // An LP solve with the suggested pattern fixed gives an immediate
    // incumbent, so pruning works from the first branch-and-bound node.
    let mut toward_of: Vec<u8> = vec![1; n];
    if std::env::var("FDI_MILP_DEBUG").is_ok() {
        eprintln!("warm present: {}", mip.warm.is_some());
    }
    if let Some(pattern) = &mip.warm {
        if pattern.len() == mip.binaries.len() {
            let mut fixed = relaxed.clone();
            for (slot, &j) in mip.binaries.iter().enumerate() {
                let v = (pattern[slot].min(1)) as f64;
                if v >= fixed.lower[j] - 1e-12 && v <= fixed.upper[j] + 1e-12 {
                    fixed.lower[j] = v;
                    fixed.upper[j] = v;
                }
                toward_of[j] = pattern[slot].min(1);
            }
            let mut ws = Simplex::new(&fixed)?;
            match ws.solve_primal(iter_limit) {
                Ok(SimplexStatus::Optimal) => {
                    incumbent = Some((ws.objective_internal(), ws.structural_solution()));
                    if std::env::var("FDI_MILP_DEBUG").is_ok() {
                        eprintln!("warm lp optimal, value {}", ws.objective_internal());
                    }
                }
                Ok(st) => {
                    if std::env::var("FDI_MILP_DEBUG").is_ok() {
                        eprintln!("warm lp status {st:?}");
                    }
                }
                Err(SolverError::Numerical(msg)) => {
                    if std::env::var("FDI_MILP_DEBUG").is_ok() {
                        eprintln!("warm lp numerical: {msg}");
                    }
                }
                Err(e) => return Err(e),
            }
            total_iters += ws.iterations;
        }
    }

    let mut s = Simplex::new(&relaxed)?;
    let root_status = s.solve_primal(iter_limit)?;
    match root_status {
        SimplexStatus::Infeasible => {
            res.status = SolveStatus::Infeasible;
            res.iterations = s.iterations;
            return Ok(res);
        }
        SimplexStatus::Unbounded => {
            res.status = SolveStatus::Unbounded;
            res.iterations = s.iterations;
            return Ok(res);
        }
        SimplexStatus::IterLimit => {
            res.status = SolveStatus::Limit;
            res.iterations = s.iterations;
            return Ok(res);
        }
        SimplexStatus::Optimal => {}
    }

    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut seq = 0u64;
    let mut nodes = 0usize;
    total_iters += s.iterations;
    let mut best_open_bound = f64::NEG_INFINITY;
    let mut hit_limit = false;

    // Records an integral incumbent, replacing on an exact tie only with a
    // lexicographically smaller binary pattern, for run-to-run stability.
    let record = |x: nalgebra::DVector<f64>,
                  value: f64,
                  incumbent: &mut Option<(f64, nalgebra::DVector<f64>)>| {
        match incumbent {
            None => *incumbent = Some((value, x)),
            Some((best, old)) => {
                if value < *best - BOUND_TOL {
                    *incumbent = Some((value, x));
                } else if (value - *best).abs() <= BOUND_TOL {
                    for &j in &mip.binaries {
                        let a = x[j].round() as i64;
                        let b = old[j].round() as i64;
                        if a < b {
                            *incumbent = Some((value, x));
                            break;
                        }
                        if a > b {
                            break;
                        }
                    }
                }
            }
        }
    };

    // Most fractional binary, ties to the lowest index.
    let pick_branch = |x: &nalgebra::DVector<f64>| -> Option<usize> {
        let mut branch: Option<(usize, f64)> = None;
        for &j in &mip.binaries {
            let frac = (x[j] - x[j].round()).abs();
            if frac > INT_TOL {
                let score = (x[j] - x[j].floor() - 0.5).abs();
                if branch.map_or(true, |(_, b)| score < b - 1e-12) {
                    branch = Some((j, score));
                }
            }
        }
        branch.map(|(j, _)| j)
    };

    // Seed the search with the root relaxation, then run best-first with a
    // depth-first plunge at every node: fix the branch binary toward its
    // fractional value and re-solve in place, queueing the sibling. The
    // plunge reaches integral leaves quickly, so pruning starts early.
    let mut pending: Option<Vec<(usize, u8)>> = Some(Vec::new());
    let mut pending_solved = true; // the root relaxation is already in `s`
    'search: loop {
        let (mut fixes, basis, mut solved) = match pending.take() {
            Some(f) => {
                let b = s.snapshot();
                (f, b, pending_solved)
            }
            None => match heap.pop() {
                None => break,
                Some(node) => {
                    if let Some((best, _)) = &incumbent {
                        if node.bound >= *best - BOUND_TOL {
                            continue;
                        }
                    }
                    (node.fixes, node.basis, false)
                }
            },
        };
        pending_solved = false;
        // Plunge: each pass solves the LP at `fixes` (unless already solved),
        // then either records an incumbent or fixes one more binary.
        loop {
            if !solved {
                if nodes >= node_limit {
                    hit_limit = true;
                    best_open_bound =
                        heap.peek().map(|n| n.bound).unwrap_or(f64::NEG_INFINITY);
                    break 'search;
                }
                nodes += 1;
                for j in 0..n {
                    s.set_bounds(j, root_lower[j], root_upper[j]);
                }
                for &(j, v) in &fixes {
                    s.set_bounds(j, v as f64, v as f64);
                }
                // Warm-started dual solve; if it stalls or breaks down
                // numerically, fall back to a cold primal solve.
                let t0 = std::time::Instant::now();
                let dual_res = s.solve_dual_from(&basis, iter_limit);
                if std::env::var("FDI_MILP_DEBUG").is_ok() {
                    eprintln!(
                        "node {nodes} depth {} dual {:?} iters {} in {:?}",
                        fixes.len(),
                        dual_res.as_ref().map_err(|e| format!("{e:?}")),
                        s.iterations,
                        t0.elapsed()
                    );
                }
                let status = match dual_res {
                    Ok(SimplexStatus::IterLimit) | Err(SolverError::Numerical(_)) => {
                        total_iters += s.iterations;
                        match s.solve_primal(iter_limit) {
                            Ok(st) => st,
                            Err(SolverError::Numerical(msg)) => {
                                if std::env::var("FDI_MILP_DEBUG").is_ok() {
                                    eprintln!(
                                        "node {} cold primal numerical: {msg}, depth {}",
                                        nodes,
                                        fixes.len()
                                    );
                                }
                                return Err(SolverError::Numerical(msg));
                            }
                            Err(e) => return Err(e),
                        }
                    }
                    Ok(st) => st,
                    Err(e) => return Err(e),
                };
                total_iters += s.iterations;
                match status {
                    SimplexStatus::Infeasible => continue 'search,
                    SimplexStatus::Optimal => {}
                    SimplexStatus::Unbounded => {
                        res.status = SolveStatus::Unbounded;
                        res.nodes = nodes;
                        return Ok(res);
                    }
                    SimplexStatus::IterLimit => {
                        hit_limit = true;
                        best_open_bound = f64::NEG_INFINITY;
                        break 'search;
                    }
                }
            }
            solved = false;
            let value = s.objective_internal();
            let x = s.structural_solution();
            let integral =
                mip.binaries.iter().all(|&j| (x[j] - x[j].round()).abs() <= INT_TOL);
            if let Some((best, _)) = &incumbent {
                if value >= *best - BOUND_TOL {
                    if integral {
                        record(x, value, &mut incumbent);
                    }
                    continue 'search;
                }
            }
            match pick_branch(&x) {
                None => {
                    record(x, value, &mut incumbent);
                    continue 'search;
                }
                Some(j) => {
                    // Relaxations lean on tiny fractional binaries (mu = M delta), so
                    // without a suggested pattern probe the tight-row side first.
                    let toward = toward_of[j];
                    let snap = s.snapshot();
                    let mut sibling = fixes.clone();
                    sibling.push((j, 1 - toward));
                    heap.push(Node { bound: value, seq, fixes: sibling, basis: snap });
                    seq += 1;
                    fixes.push((j, toward));
                }
            }
        }
    }

    res.nodes = nodes;
    res.iterations = total_iters;
    let sense_flip = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    match incumbent {
        Some((value, x)) => {
            res.x = x;
            res.objective = sense_flip * value;
            if hit_limit {
                res.status = SolveStatus::Limit;
                res.gap = (value - best_open_bound).max(0.0);
            }
        }
        None => {
            res.status = if hit_limit { SolveStatus::Limit } else { SolveStatus::Infeasible };
            res.gap = f64::INFINITY;
        }
    }
    Ok(res)
}
