//! Primal active-set method for convex QPs with a diagonal Hessian.
//! A feasible vertex comes from the LP solver; the working set then moves
//! along equality-constrained Newton steps until the KKT conditions hold.

use nalgebra::{DMatrix, DVector};

use super::{solve_lp, ConvexQp, LinearProgram, Sense, SolveResult, SolveStatus, SolverError};

/// Added to zero Hessian diagonals so every KKT system is nonsingular.
/// Small enough (absolute, in objective units per unit²) that dual prices
/// shift by well under any tolerance used downstream.
const CURVATURE_FLOOR: f64 = 1e-7;
const ACTIVE_TOL: f64 = 1e-8;
const STEP_TOL: f64 = 1e-10;

#[derive(Clone, Copy, PartialEq, Eq)]
enum RowKind {
    Eq(usize),
    Ineq(usize),
    LowerBound(usize),
    UpperBound(usize),
}

struct Row {
    a: DVector<f64>,
    b: f64,
    kind: RowKind,
}

pub fn solve_qp(qp: &ConvexQp) -> Result<SolveResult, SolverError> {
    let lp = &qp.lp;
    lp.validate()?;
    let n = lp.n_vars();
    if qp.q_diag.len() != n {
        return Err(SolverError::Dimension("q_diag length".into()));
    }
    for (j, &q) in qp.q_diag.iter().enumerate() {
        if !q.is_finite() || q < 0.0 {
            return Err(SolverError::IndefiniteQuadratic { index: j, value: q });
        }
    }
    if qp.q_diag.iter().all(|&q| q == 0.0) {
        return solve_lp(lp);
    }
    if lp.sense == Sense::Maximize {
        return Err(SolverError::Numerical(
            "maximization with a quadratic objective is concave".into(),
        ));
    }
    let q: DVector<f64> =
        qp.q_diag.map(|v| if v == 0.0 { CURVATURE_FLOOR } else { v });

    // Feasible start: vertex of the constraint set under the linear cost.
    let start = {
        let r = solve_lp(lp)?;
        match r.status {
            SolveStatus::Optimal => r.x,
            SolveStatus::Unbounded => {
                let mut feas = lp.clone();
                feas.c = DVector::zeros(n);
                feas.sense = Sense::Minimize;
                let r2 = solve_lp(&feas)?;
                if r2.status != SolveStatus::Optimal {
                    return Ok(SolveResult::empty(
                        r2.status,
                        n,
                        lp.b_eq.len(),
                        lp.b_in.len(),
                    ));
                }
                r2.x
            }
            s => return Ok(SolveResult::empty(s, n, lp.b_eq.len(), lp.b_in.len())),
        }
    };

    // All constraints as aᵀx ≤ b rows (equalities flagged).
    let mut rows: Vec<Row> = Vec::new();
    for i in 0..lp.b_eq.len() {
        rows.push(Row { a: lp.a_eq.row(i).transpose(), b: lp.b_eq[i], kind: RowKind::Eq(i) });
    }
    for i in 0..lp.b_in.len() {
        rows.push(Row { a: lp.a_in.row(i).transpose(), b: lp.b_in[i], kind: RowKind::Ineq(i) });
    }
    for j in 0..n {
        let mut e = DVector::zeros(n);
        if lp.lower[j].is_finite() && lp.lower[j] < lp.upper[j] {
            e[j] = -1.0;
            rows.push(Row { a: e.clone(), b: -lp.lower[j], kind: RowKind::LowerBound(j) });
            e[j] = 0.0;
        }
        if lp.upper[j].is_finite() {
            e[j] = 1.0;
            rows.push(Row { a: e.clone(), b: lp.upper[j], kind: RowKind::UpperBound(j) });
            e[j] = 0.0;
        }
        // Fixed variables (lower == upper) enter as a single upper-bound row
        // kept permanently active below.
    }
    for j in 0..n {
        if lp.lower[j].is_finite() && lp.lower[j] == lp.upper[j] {
            let mut e = DVector::zeros(n);
            e[j] = -1.0;
            rows.push(Row { a: e, b: -lp.lower[j], kind: RowKind::LowerBound(j) });
        }
    }

    let mut x = start;
    // Working set: indices into `rows`. Equalities and fixed-variable pairs
    // stay in permanently; active inequalities come and go.
    let mut working: Vec<usize> = Vec::new();
    let mut span: Vec<DVector<f64>> = Vec::new(); // orthonormal row-space basis
    let try_add = |idx: usize, rows: &[Row], working: &mut Vec<usize>, span: &mut Vec<DVector<f64>>| -> bool {
        let mut v = rows[idx].a.clone();
        for u in span.iter() {
            let p = u.dot(&v);
            v -= u * p;
        }
        let norm = v.norm();
        if norm > 1e-8 * rows[idx].a.norm().max(1.0) {
            span.push(v / norm);
            working.push(idx);
            true
        } else {
            false
        }
    };
    let permanent = |kind: RowKind, lp: &LinearProgram| match kind {
        RowKind::Eq(_) => true,
        RowKind::LowerBound(j) | RowKind::UpperBound(j) => lp.lower[j] == lp.upper[j],
        RowKind::Ineq(_) => false,
    };
    for idx in 0..rows.len() {
        if permanent(rows[idx].kind, lp) {
            try_add(idx, &rows, &mut working, &mut span);
        }
    }
    for idx in 0..rows.len() {
        if !permanent(rows[idx].kind, lp)
            && (rows[idx].a.dot(&x) - rows[idx].b).abs() <= ACTIVE_TOL
        {
            try_add(idx, &rows, &mut working, &mut span);
        }
    }

    let max_iters = 100 * (n + rows.len()) + 500;
    let mut iterations = 0usize;
    // Degenerate vertices (duplicate generators, parallel lines) can cycle
    // the working set through zero-length steps. After a run of them, switch
    // the drop rule from most-negative multiplier to least row index, the
    // QP analogue of Bland's rule.
    let mut zero_steps = 0usize;
    // After a full Newton step with no blocking row the next point is
    // stationary on the working set by construction; the recomputed step is
    // pure KKT round-off, so skip the norm test once.
    let mut at_newton_point = false;
    loop {
        if iterations >= max_iters {
            let mut res = SolveResult::empty(SolveStatus::Limit, n, lp.b_eq.len(), lp.b_in.len());
            res.x = x;
            res.iterations = iterations;
            return Ok(res);
        }
        iterations += 1;
        let bland = zero_steps > 20;
        let g = &lp.c + x.component_mul(&q);
        let (p, lambda) = eqp_step(&q, &g, &rows, &working)?;
        if at_newton_point || p.norm() <= STEP_TOL * (1.0 + x.norm()) {
            at_newton_point = false;
            // Stationary on the working set; check multiplier signs.
            let mut drop: Option<(usize, f64)> = None;
            for (k, &idx) in working.iter().enumerate() {
                if permanent(rows[idx].kind, lp) {
                    continue;
                }
                let m = lambda[k];
                let better = match drop {
                    None => true,
                    Some((kb, worst)) => {
                        if bland {
                            working[kb] > idx
                        } else {
                            m < worst
                        }
                    }
                };
                if m < -1e-9 && better {
                    drop = Some((k, m));
                }
            }
            match drop {
                None => {
                    return Ok(finish(lp, qp, x, &rows, &working, &lambda, iterations));
                }
                Some((k, _)) => {
                    working.remove(k);
                    span = rebuild_span(&rows, &working);
                }
            }
            continue;
        }
        // Ratio test against inactive inequality rows; ties keep the lowest
        // row index, which together with the Bland drop rule breaks cycles.
        let mut alpha = 1.0f64;
        let mut blocker: Option<usize> = None;
        for (idx, row) in rows.iter().enumerate() {
            if working.contains(&idx) {
                continue;
            }
            let ap = row.a.dot(&p);
            if ap > ACTIVE_TOL {
                let slack = row.b - row.a.dot(&x);
                let limit = (slack / ap).max(0.0);
                if limit < alpha - 1e-12 {
                    alpha = limit;
                    blocker = Some(idx);
                }
            }
        }
        if alpha <= 1e-12 && blocker.is_some() {
            zero_steps += 1;
        } else {
            zero_steps = 0;
        }
        x += &p * alpha;
        match blocker {
            Some(idx) => {
                try_add(idx, &rows, &mut working, &mut span);
            }
            None => at_newton_point = true,
        }
    }
}

fn rebuild_span(rows: &[Row], working: &[usize]) -> Vec<DVector<f64>> {
    let mut span: Vec<DVector<f64>> = Vec::new();
    for &idx in working {
        let mut v = rows[idx].a.clone();
        for u in span.iter() {
            let pr = u.dot(&v);
            v -= u * pr;
        }
        let norm = v.norm();
        if norm > 1e-12 {
            span.push(v / norm);
        }
    }
    span
}

/// Solves the equality QP: min ½pᵀQp + gᵀp s.t. A_W p = 0; returns the step
/// and the working-set multipliers from Qp + g + A_Wᵀλ = 0.
fn eqp_step(
    q: &DVector<f64>,
    g: &DVector<f64>,
    rows: &[Row],
    working: &[usize],
) -> Result<(DVector<f64>, DVector<f64>), SolverError> {
    let n = q.len();
    let k = working.len();
    let dim = n + k;
    let mut kkt = DMatrix::zeros(dim, dim);
    for j in 0..n {
        kkt[(j, j)] = q[j];
    }
    for (t, &idx) in working.iter().enumerate() {
        for j in 0..n {
            kkt[(j, n + t)] = rows[idx].a[j];
            kkt[(n + t, j)] = rows[idx].a[j];
        }
    }
    let mut rhs = DVector::zeros(dim);
    for j in 0..n {
        rhs[j] = -g[j];
    }
    let lu = kkt.clone().full_piv_lu();
    let mut sol = lu
        .solve(&rhs)
        .ok_or_else(|| SolverError::Numerical("singular KKT system".into()))?;
    // One step of iterative refinement for the wide dynamic range between
    // the curvature floor and real cost curvatures.
    let resid = &rhs - &kkt * &sol;
    if let Some(corr) = lu.solve(&resid) {
        sol += corr;
    }
    Ok((sol.rows(0, n).into_owned(), sol.rows(n, k).into_owned()))
}

fn finish(
    lp: &LinearProgram,
    qp: &ConvexQp,
    x: DVector<f64>,
    rows: &[Row],
    working: &[usize],
    lambda: &DVector<f64>,
    iterations: usize,
) -> SolveResult {
    let n = lp.n_vars();
    let mut res = SolveResult::empty(SolveStatus::Optimal, n, lp.b_eq.len(), lp.b_in.len());
    for (k, &idx) in working.iter().enumerate() {
        match rows[idx].kind {
            RowKind::Eq(i) => res.dual_eq[i] = lambda[k],
            RowKind::Ineq(i) => res.dual_in[i] = lambda[k].max(0.0),
            // Bound duals appear as reduced costs: positive at a lower
            // bound, negative at an upper bound.
            RowKind::LowerBound(j) => res.reduced_costs[j] += lambda[k],
            RowKind::UpperBound(j) => res.reduced_costs[j] -= lambda[k],
        }
    }
    res.objective = lp.c.dot(&x) + 0.5 * x.component_mul(&qp.q_diag).dot(&x);
    res.x = x;
    res.iterations = iterations;
    res
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{dmatrix, dvector};

    fn qp(
        c: DVector<f64>,
        q: DVector<f64>,
        a_eq: DMatrix<f64>,
        b_eq: DVector<f64>,
        a_in: DMatrix<f64>,
        b_in: DVector<f64>,
        lower: DVector<f64>,
        upper: DVector<f64>,
    ) -> ConvexQp {
        ConvexQp {
            lp: LinearProgram { sense: Sense::Minimize, c, a_eq, b_eq, a_in, b_in, lower, upper },
            q_diag: q,
        }
    }

    #[test]
    fn interior_minimum() {
        // min (x−3)² + (y+1)² inside a wide box.
        let p = qp(
            dvector![-6.0, 2.0],
            dvector![2.0, 2.0],
            DMatrix::zeros(0, 2),
            dvector![],
            DMatrix::zeros(0, 2),
            dvector![],
            dvector![-10.0, -10.0],
            dvector![10.0, 10.0],
        );
        let r = solve_qp(&p).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(r.x[0], 3.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.x[1], -1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.objective, -10.0, epsilon = 1e-6);
    }

    #[test]
    fn equality_constrained_kkt() {
        // min ½(x²+y²) s.t. x + y = 2 → x = y = 1, dual = −1.
        let p = qp(
            dvector![0.0, 0.0],
            dvector![1.0, 1.0],
            dmatrix![1.0, 1.0],
            dvector![2.0],
            DMatrix::zeros(0, 2),
            dvector![],
            dvector![f64::NEG_INFINITY, f64::NEG_INFINITY],
            dvector![f64::INFINITY, f64::INFINITY],
        );
        let r = solve_qp(&p).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(r.x[0], 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!(r.x[1], 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!(r.dual_eq[0], -1.0, epsilon = 1e-6);
    }

    #[test]
    fn active_inequality_multiplier() {
        // min (x−2)² s.t. x ≤ 1 → x = 1, multiplier 2 on the row.
        let p = qp(
            dvector![-4.0],
            dvector![2.0],
            DMatrix::zeros(0, 1),
            dvector![],
            dmatrix![1.0],
            dvector![1.0],
            dvector![f64::NEG_INFINITY],
            dvector![f64::INFINITY],
        );
        let r = solve_qp(&p).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(r.x[0], 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!(r.dual_in[0], 2.0, epsilon = 1e-6);
    }

    #[test]
    fn inequality_becomes_inactive() {
        // min x²+y² s.t. x + y ≥ 4 → (2,2) with multiplier 4.
        let p = qp(
            dvector![0.0, 0.0],
            dvector![2.0, 2.0],
            DMatrix::zeros(0, 2),
            dvector![],
            dmatrix![-1.0, -1.0],
            dvector![-4.0],
            dvector![0.0, 0.0],
            dvector![10.0, 10.0],
        );
        let r = solve_qp(&p).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(r.x[0], 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.x[1], 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.dual_in[0], 4.0, epsilon = 1e-5);
    }

    #[test]
    fn infeasible_reported() {
        let p = qp(
            dvector![0.0],
            dvector![1.0],
            DMatrix::zeros(0, 1),
            dvector![],
            dmatrix![1.0; -1.0],
            dvector![1.0, -3.0],
            dvector![f64::NEG_INFINITY],
            dvector![f64::INFINITY],
        );
        let r = solve_qp(&p).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
    }

    #[test]
    fn all_zero_curvature_delegates_to_lp() {
        let p = qp(
            dvector![1.0, 2.0],
            dvector![0.0, 0.0],
            dmatrix![1.0, 1.0],
            dvector![3.0],
            DMatrix::zeros(0, 2),
            dvector![],
            dvector![0.0, 0.0],
            dvector![10.0, 10.0],
        );
        let r = solve_qp(&p).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(r.objective, 3.0, epsilon = 1e-8);
    }

    /// Independent oracle for economic dispatch: bisection on the shared
    /// marginal price (each unit sets 2aP + b = λ, clipped to its bounds).
    fn dispatch_oracle(
        a: &[f64],
        b: &[f64],
        pmin: &[f64],
        pmax: &[f64],
        demand: f64,
    ) -> (Vec<f64>, f64) {
        let output = |lam: f64| -> Vec<f64> {
            a.iter()
                .zip(b)
                .zip(pmin.iter().zip(pmax))
                .map(|((&ai, &bi), (&lo, &hi))| {
                    if ai > 0.0 {
                        ((lam - bi) / (2.0 * ai)).clamp(lo, hi)
                    } else if lam > bi {
                        hi
                    } else if lam < bi {
                        lo
                    } else {
                        lo // resolved by the caller choosing demand off ties
                    }
                })
                .collect()
        };
        let (mut lo, mut hi) = (-1e5, 1e5);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if output(mid).iter().sum::<f64>() < demand {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let lam = 0.5 * (lo + hi);
        let mut p = output(lam);
        // Distribute any residual across units that are marginal at lam
        // (interior quadratic units, or linear units priced exactly at lam),
        // clipping at their bounds.
        let mut resid = demand - p.iter().sum::<f64>();
        for (i, pi) in p.iter_mut().enumerate() {
            if resid.abs() < 1e-9 {
                break;
            }
            let marginal = if a[i] > 0.0 {
                *pi > pmin[i] + 1e-7 && *pi < pmax[i] - 1e-7
            } else {
                (b[i] - lam).abs() < 1e-4
            };
            if marginal {
                let step = resid.clamp(pmin[i] - *pi, pmax[i] - *pi);
                *pi += step;
                resid -= step;
            }
        }
        (p, lam)
    }

    #[test]
    fn economic_dispatch_matches_bisection_oracle() {
        // Deterministic pseudo-random instances, some with zero curvature.
        let mut seed = 0x2545f4914f6cdd1du64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for case in 0..25 {
            let ng = 3 + case % 4;
            let mut a = vec![0.0; ng];
            let mut b = vec![0.0; ng];
            let mut pmin = vec![0.0; ng];
            let mut pmax = vec![0.0; ng];
            for g in 0..ng {
                a[g] = if case % 5 == 0 && g == 0 { 0.0 } else { 0.5 + next() * 3.0 };
                b[g] = 5.0 + next() * 20.0;
                pmin[g] = next();
                pmax[g] = pmin[g] + 1.0 + next() * 4.0;
            }
            let total_min: f64 = pmin.iter().sum();
            let total_max: f64 = pmax.iter().sum();
            let demand = total_min + (total_max - total_min) * (0.2 + 0.6 * next());

            let p = qp(
                DVector::from_vec(b.clone()),
                DVector::from_vec(a.iter().map(|v| 2.0 * v).collect()),
                DMatrix::from_fn(1, ng, |_, _| 1.0),
                DVector::from_element(1, demand),
                DMatrix::zeros(0, ng),
                DVector::zeros(0),
                DVector::from_vec(pmin.clone()),
                DVector::from_vec(pmax.clone()),
            );
            let r = solve_qp(&p).unwrap();
            assert_eq!(r.status, SolveStatus::Optimal, "case {case}");
            let (px, lam) = dispatch_oracle(&a, &b, &pmin, &pmax, demand);
            let cost = |p: &[f64]| -> f64 {
                p.iter()
                    .enumerate()
                    .map(|(i, &v)| a[i] * v * v + b[i] * v)
                    .sum()
            };
            assert_abs_diff_eq!(r.objective, cost(&px), epsilon = 1e-5);
            for g in 0..ng {
                assert_abs_diff_eq!(r.x[g], px[g], epsilon = 1e-4);
            }
            // Balance dual equals the marginal price: with the convention
            // L = f + λ(Σp − d) the multiplier is −λ_price.
            assert_abs_diff_eq!(-r.dual_eq[0], lam, epsilon = 1e-4);
            assert!(r.feasibility_residual(&p.lp) < 1e-7);
        }
    }
}
