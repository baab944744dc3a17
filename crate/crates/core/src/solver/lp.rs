//! Bounded-variable revised simplex with an explicit basis inverse.
//! Primal two-phase solve for cold starts; dual simplex for warm starts
//! after bound changes (used by branch and bound).

use nalgebra::{DMatrix, DVector};

use super::{LinearProgram, Sense, SolveResult, SolveStatus, SolverError};

const FEAS_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;
const DEGENERATE_LIMIT: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum VarState {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    Free,
}

/// Basis snapshot for warm starts: which variable sits in each basis slot
/// plus the nonbasic states.
#[derive(Debug, Clone)]
pub(crate) struct Basis {
    pub basic: Vec<usize>,
    pub state: Vec<VarState>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SimplexStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
}

pub(crate) struct Simplex {
    m: usize,
    /// Structural + slack count; artificials live in columns ≥ n.
    n: usize,
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    lb: DVector<f64>,
    ub: DVector<f64>,
    n_structural: usize,
    n_eq: usize,
    pub state: Vec<VarState>,
    pub basic: Vec<usize>,
    binv: DMatrix<f64>,
    xb: DVector<f64>,
    pub iterations: usize,
    since_refactor: usize,
    bland: bool,
    degenerate_run: usize,
    /// Power-of-two equilibration factors; internal data is scaled, the
    /// accessors translate back to the caller's units exactly.
    row_scale: DVector<f64>,
    col_scale: DVector<f64>,
}

/// Nearest power of two to 1/x, clamped away from degenerate extremes.
fn pow2_recip(x: f64) -> f64 {
    if !(x.is_finite() && x > 0.0) {
        return 1.0;
    }
    (-x.log2()).round().clamp(-40.0, 40.0).exp2()
}

impl Simplex {
    /// Normalizes to minimize cᵀx over [A_eq; A_in | I_slack] with one slack
    /// per inequality row. The caller's sense is handled by its wrapper.
    pub fn new(lp: &LinearProgram) -> Result<Self, SolverError> {
        lp.validate()?;
        let n_structural = lp.n_vars();
        let m_eq = lp.b_eq.len();
        let m_in = lp.b_in.len();
        let m = m_eq + m_in;
        let n = n_structural + m_in;
        let mut a = DMatrix::zeros(m, n);
        a.view_mut((0, 0), (m_eq, n_structural)).copy_from(&lp.a_eq);
        a.view_mut((m_eq, 0), (m_in, n_structural)).copy_from(&lp.a_in);
        for i in 0..m_in {
            a[(m_eq + i, n_structural + i)] = 1.0;
        }
        let mut b = DVector::zeros(m);
        b.rows_mut(0, m_eq).copy_from(&lp.b_eq);
        b.rows_mut(m_eq, m_in).copy_from(&lp.b_in);
        let mut c = DVector::zeros(n);
        let sign = match lp.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        c.rows_mut(0, n_structural).copy_from(&(&lp.c * sign));
        let mut lb = DVector::from_element(n, 0.0);
        let mut ub = DVector::from_element(n, f64::INFINITY);
        lb.rows_mut(0, n_structural).copy_from(&lp.lower);
        ub.rows_mut(0, n_structural).copy_from(&lp.upper);
        // Equilibrate rows then columns to unit max magnitude. Mixed scales
        // (big-M rows next to unit rows) otherwise wreck basis conditioning.
        let mut row_scale = DVector::from_element(m, 1.0);
        for i in 0..m {
            row_scale[i] = pow2_recip(a.row(i).amax());
            if row_scale[i] != 1.0 {
                let s = row_scale[i];
                a.row_mut(i).scale_mut(s);
                b[i] *= s;
            }
        }
        let mut col_scale = DVector::from_element(n, 1.0);
        for j in 0..n {
            col_scale[j] = pow2_recip(a.column(j).amax());
            if col_scale[j] != 1.0 {
                let s = col_scale[j];
                a.column_mut(j).scale_mut(s);
                c[j] *= s;
                lb[j] /= s;
                ub[j] /= s;
            }
        }
        let state = (0..n)
            .map(|j| initial_state(lb[j], ub[j]))
            .collect();
        Ok(Simplex {
            m,
            n,
            a,
            b,
            c,
            lb,
            ub,
            n_structural,
            n_eq: m_eq,
            state,
            basic: Vec::new(),
            binv: DMatrix::identity(m, m),
            xb: DVector::zeros(m),
            iterations: 0,
            since_refactor: 0,
            bland: false,
            degenerate_run: 0,
            row_scale,
            col_scale,
        })
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::AtLower => self.lb[j],
            VarState::AtUpper => self.ub[j],
            VarState::Free => 0.0,
            VarState::Basic => unreachable!(),
        }
    }

    /// b minus the contribution of every nonbasic variable.
    fn effective_rhs(&self) -> DVector<f64> {
        let mut r = self.b.clone();
        for j in 0..self.a.ncols() {
            if self.state[j] != VarState::Basic {
                let v = self.nonbasic_value(j);
                if v != 0.0 {
                    r -= self.a.column(j) * v;
                }
            }
        }
        r
    }

    fn refactor(&mut self) -> Result<(), SolverError> {
        let mut bmat = DMatrix::zeros(self.m, self.m);
        for (i, &j) in self.basic.iter().enumerate() {
            bmat.set_column(i, &self.a.column(j));
        }
        self.binv = bmat.try_inverse().ok_or_else(|| {
            if std::env::var("FDI_MILP_DEBUG").is_ok() {
                let mut sorted = self.basic.clone();
                sorted.sort_unstable();
                sorted.dedup();
                eprintln!(
                    "singular basis: m {} unique {} since_refactor {}",
                    self.m,
                    sorted.len(),
                    self.since_refactor
                );
            }
            SolverError::Numerical("singular basis".into())
        })?;
        self.xb = &self.binv * self.effective_rhs();
        self.since_refactor = 0;
        Ok(())
    }

    fn duals(&self) -> DVector<f64> {
        let cb = DVector::from_iterator(self.m, self.basic.iter().map(|&j| self.c[j]));
        self.binv.tr_mul(&cb)
    }

    fn reduced_cost(&self, y: &DVector<f64>, j: usize) -> f64 {
        self.c[j] - y.dot(&self.a.column(j).into_owned())
    }

    /// Replaces basis slot `r` with variable `q`; `w` is binv·a_q.
    fn pivot(&mut self, r: usize, q: usize, w: &DVector<f64>) {
        let piv = w[r];
        let mut row_r = self.binv.row(r).into_owned();
        row_r /= piv;
        for i in 0..self.m {
            if i != r {
                let f = w[i];
                if f != 0.0 {
                    for k in 0..self.m {
                        self.binv[(i, k)] -= f * row_r[k];
                    }
                }
            }
        }
        self.binv.row_mut(r).copy_from(&row_r);
        self.basic[r] = q;
        self.state[q] = VarState::Basic;
        self.since_refactor += 1;
    }

    /// One primal simplex run with the current costs; assumes a primal
    /// feasible basis. Returns Optimal or Unbounded (or IterLimit).
    fn primal_loop(&mut self, max_iters: usize) -> Result<SimplexStatus, SolverError> {
        // Rows whose ratio-test coefficient stayed negligible even after a
        // fresh refactor; their basics do not really move with the entering
        // variable, so they must not be chosen as blocking rows.
        let mut banned = vec![false; self.m];
        loop {
            if self.iterations >= max_iters {
                return Ok(SimplexStatus::IterLimit);
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            let y = self.duals();
            // Entering variable: most negative price move (Dantzig), or the
            // lowest eligible index under Bland's rule when cycling.
            let mut best: Option<(usize, f64, f64)> = None; // (var, |d|, direction)
            for j in 0..self.n {
                let (can_up, can_down) = match self.state[j] {
                    VarState::Basic => continue,
                    VarState::AtLower => (self.ub[j] > self.lb[j], false),
                    VarState::AtUpper => (false, true),
                    VarState::Free => (true, true),
                };
                if !can_up && !can_down {
                    continue;
                }
                let d = self.reduced_cost(&y, j);
                let dir = if can_up && d < -DUAL_TOL {
                    1.0
                } else if can_down && d > DUAL_TOL {
                    -1.0
                } else {
                    continue;
                };
                if self.bland {
                    best = Some((j, d.abs(), dir));
                    break;
                }
                if best.map_or(true, |(_, score, _)| d.abs() > score) {
                    best = Some((j, d.abs(), dir));
                }
            }
            let Some((q, _, dir)) = best else {
                return Ok(SimplexStatus::Optimal);
            };
            let w = &self.binv * self.a.column(q).into_owned();
            // Ratio test: step t ≥ 0 moves x_q by dir·t and x_B by −dir·t·w.
            let own_range = self.ub[q] - self.lb[q];
            let mut t_max = if own_range.is_finite() { own_range } else { f64::INFINITY };
            let mut leave: Option<(usize, VarState)> = None;
            for i in 0..self.m {
                let delta = -dir * w[i];
                if delta.abs() <= PIVOT_TOL || banned[i] {
                    continue;
                }
                let bj = self.basic[i];
                let (limit, bound_state) = if delta < 0.0 {
                    if self.lb[bj].is_finite() {
                        ((self.xb[i] - self.lb[bj]) / -delta, VarState::AtLower)
                    } else {
                        continue;
                    }
                } else if self.ub[bj].is_finite() {
                    ((self.ub[bj] - self.xb[i]) / delta, VarState::AtUpper)
                } else {
                    continue;
                };
                let limit = limit.max(0.0);
                // Among near-minimal ratios prefer the largest pivot.
                let better = match leave {
                    None => limit < t_max - FEAS_TOL || limit <= t_max,
                    Some((r, _)) => {
                        limit < t_max - FEAS_TOL
                            || (limit <= t_max + FEAS_TOL && w[i].abs() > w[r].abs())
                    }
                };
                if better && limit <= t_max + FEAS_TOL {
                    t_max = t_max.min(limit);
                    leave = Some((i, bound_state));
                }
            }
            if !t_max.is_finite() {
                return Ok(SimplexStatus::Unbounded);
            }
            // A pivot tiny relative to the column degrades the running
            // inverse; refresh it in case the column was stale, and if the
            // coefficient is still negligible afterwards exclude that row
            // rather than pivot the basis toward singularity.
            if let Some((r, _)) = leave {
                if w[r].abs() < 1e-7 * w.amax() {
                    if self.since_refactor > 0 {
                        self.refactor()?;
                    } else {
                        banned[r] = true;
                    }
                    continue;
                }
            }
            self.iterations += 1;
            if t_max <= FEAS_TOL {
                self.degenerate_run += 1;
                if self.degenerate_run > DEGENERATE_LIMIT {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
                self.bland = false;
            }
            match leave {
                Some((r, bound_state)) => {
                    let old = self.basic[r];
                    for i in 0..self.m {
                        self.xb[i] -= dir * t_max * w[i];
                    }
                    let entering_value = self.nonbasic_value(q) + dir * t_max;
                    self.state[old] = bound_state;
                    self.pivot(r, q, &w);
                    self.xb[r] = entering_value;
                }
                None => {
                    // Bound flip: x_q traverses its whole range.
                    for i in 0..self.m {
                        self.xb[i] -= dir * t_max * w[i];
                    }
                    self.state[q] = match self.state[q] {
                        VarState::AtLower => VarState::AtUpper,
                        VarState::AtUpper => VarState::AtLower,
                        s => s,
                    };
                }
            }
            banned.fill(false);
        }
    }

    /// Two-phase primal solve from scratch.
    pub fn solve_primal(&mut self, max_iters: usize) -> Result<SimplexStatus, SolverError> {
        self.iterations = 0;
        // Drop artificials left over from a previous solve on this instance.
        if self.a.ncols() > self.n {
            self.a = self.a.columns(0, self.n).into_owned();
            self.c = self.c.rows(0, self.n).into_owned();
            self.lb = self.lb.rows(0, self.n).into_owned();
            self.ub = self.ub.rows(0, self.n).into_owned();
            self.state.truncate(self.n);
        }
        // Phase 1: one artificial per row, signed so it starts feasible.
        let n = self.n;
        let m = self.m;
        let mut residual = self.b.clone();
        for j in 0..n {
            let v = match initial_state(self.lb[j], self.ub[j]) {
                VarState::AtLower => self.lb[j],
                VarState::AtUpper => self.ub[j],
                _ => 0.0,
            };
            self.state[j] = initial_state(self.lb[j], self.ub[j]);
            if v != 0.0 {
                residual -= self.a.column(j) * v;
            }
        }
        let mut a = DMatrix::zeros(m, n + m);
        a.view_mut((0, 0), (m, n)).copy_from(&self.a);
        for i in 0..m {
            a[(i, n + i)] = if residual[i] >= 0.0 { 1.0 } else { -1.0 };
        }
        self.a = a;
        let saved_c = self.c.clone();
        self.c = DVector::zeros(n + m);
        for i in 0..m {
            self.c[n + i] = 1.0;
        }
        self.lb = self.lb.clone().resize_vertically(n + m, 0.0);
        self.ub = self.ub.clone().resize_vertically(n + m, f64::INFINITY);
        self.state.resize(n + m, VarState::Basic);
        self.basic = (n..n + m).collect();
        self.refactor()?;
        self.bland = false;
        self.degenerate_run = 0;

        match self.primal_loop(max_iters)? {
            SimplexStatus::IterLimit => return Ok(SimplexStatus::IterLimit),
            SimplexStatus::Unbounded => {
                return Err(SolverError::Numerical("phase 1 unbounded".into()))
            }
            _ => {}
        }
        let phase1_obj: f64 = self
            .basic
            .iter()
            .enumerate()
            .filter(|(_, &j)| j >= n)
            .map(|(i, _)| self.xb[i].abs())
            .sum();
        if phase1_obj > 1e-7 {
            return Ok(SimplexStatus::Infeasible);
        }
        self.drive_out_artificials(n)?;
        // Phase 2: real costs; artificials pinned to zero.
        self.c = DVector::zeros(n + m);
        self.c.rows_mut(0, n).copy_from(&saved_c);
        for j in n..n + m {
            self.ub[j] = 0.0;
            if self.state[j] == VarState::Free {
                self.state[j] = VarState::AtLower;
            }
        }
        self.bland = false;
        self.degenerate_run = 0;
        self.refactor()?;
        self.primal_loop(max_iters)
    }

    /// Pivots basic artificials (all at value ~0) onto structural columns
    /// where possible; rows that admit no pivot are redundant and keep a
    /// zero-fixed artificial.
    fn drive_out_artificials(&mut self, n: usize) -> Result<(), SolverError> {
        for r in 0..self.m {
            if self.basic[r] < n {
                continue;
            }
            let row = self.binv.row(r).transpose();
            let mut choice: Option<(usize, f64)> = None;
            for j in 0..n {
                if self.state[j] == VarState::Basic || self.lb[j] == self.ub[j] {
                    continue;
                }
                let alpha = row.dot(&self.a.column(j).into_owned());
                if alpha.abs() > 1e-7 && choice.map_or(true, |(_, a0)| alpha.abs() > a0.abs()) {
                    choice = Some((j, alpha));
                }
            }
            if let Some((q, _)) = choice {
                let old = self.basic[r];
                let w = &self.binv * self.a.column(q).into_owned();
                let entering_value = self.nonbasic_value(q);
                self.state[old] = VarState::AtLower;
                self.pivot(r, q, &w);
                self.xb[r] = entering_value;
            }
        }
        self.refactor()
    }

    /// Dual simplex from a warm basis after bound changes. Requires the
    /// basis to be dual feasible (true when only bounds changed since the
    /// last optimal solve). Returns Optimal or Infeasible.
    pub fn solve_dual_from(&mut self, basis: &Basis, max_iters: usize) -> Result<SimplexStatus, SolverError> {
        self.iterations = 0;
        self.basic = basis.basic.clone();
        self.state = basis.state.clone();
        // Bound tightening may strand a nonbasic variable on a bound that
        // moved; snap it to the surviving bound.
        for j in 0..self.state.len() {
            match self.state[j] {
                VarState::AtLower if !self.lb[j].is_finite() => {
                    self.state[j] = if self.ub[j].is_finite() { VarState::AtUpper } else { VarState::Free };
                }
                VarState::AtUpper if !self.ub[j].is_finite() => {
                    self.state[j] = if self.lb[j].is_finite() { VarState::AtLower } else { VarState::Free };
                }
                _ => {}
            }
        }
        self.refactor()?;
        self.bland = false;
        self.degenerate_run = 0;
        loop {
            if self.iterations >= max_iters {
                return Ok(SimplexStatus::IterLimit);
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            // Leaving variable: worst bound violation among basics, or the
            // lowest violated basic index under Bland's rule when cycling.
            let mut leave: Option<(usize, f64, bool)> = None; // (row, violation, below_lower)
            for i in 0..self.m {
                let j = self.basic[i];
                let below = self.lb[j] - self.xb[i];
                let above = self.xb[i] - self.ub[j];
                let (viol, is_below) = if below >= above { (below, true) } else { (above, false) };
                if viol > FEAS_TOL * 10.0 {
                    if self.bland {
                        let better = leave.map_or(true, |(r, _, _)| j < self.basic[r]);
                        if better {
                            leave = Some((i, viol, is_below));
                        }
                    } else if leave.map_or(true, |(_, v, _)| viol > v) {
                        leave = Some((i, viol, is_below));
                    }
                }
            }
            let Some((r, _, below_lower)) = leave else {
                return Ok(SimplexStatus::Optimal);
            };
            let y = self.duals();
            let rho = self.binv.row(r).transpose();
            // Entering variable by the dual ratio test: the nonbasic column
            // that restores primal feasibility at minimal dual cost.
            let mut enter: Option<(usize, f64, f64)> = None; // (var, ratio, alpha)
            for j in 0..self.n {
                if self.state[j] == VarState::Basic || self.lb[j] == self.ub[j] {
                    continue;
                }
                let alpha = rho.dot(&self.a.column(j).into_owned());
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                // xb[r] moves by −alpha per unit increase of x_j.
                let eligible = match (self.state[j], below_lower) {
                    (VarState::AtLower, true) => alpha < 0.0,
                    (VarState::AtLower, false) => alpha > 0.0,
                    (VarState::AtUpper, true) => alpha > 0.0,
                    (VarState::AtUpper, false) => alpha < 0.0,
                    (VarState::Free, _) => true,
                    _ => false,
                };
                if !eligible {
                    continue;
                }
                let d = self.reduced_cost(&y, j);
                let ratio = d.abs() / alpha.abs();
                let better = match enter {
                    None => true,
                    Some((je, re, ae)) => {
                        if self.bland {
                            // Bland: lowest index among minimal-ratio columns.
                            ratio < re - DUAL_TOL || (ratio < re + DUAL_TOL && j < je)
                        } else {
                            ratio < re - DUAL_TOL
                                || (ratio < re + DUAL_TOL
                                    && (alpha.abs() > ae.abs() + PIVOT_TOL
                                        || (alpha.abs() >= ae.abs() - PIVOT_TOL && j < je)))
                        }
                    }
                };
                if better {
                    enter = Some((j, ratio, alpha));
                }
            }
            let Some((q, ratio, _)) = enter else {
                return Ok(SimplexStatus::Infeasible);
            };
            // Zero-ratio pivots do not move the dual objective; a long run
            // of them means cycling, so switch to Bland's rule.
            if ratio <= DUAL_TOL {
                self.degenerate_run += 1;
                if self.degenerate_run > DEGENERATE_LIMIT {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
                self.bland = false;
            }
            let w = &self.binv * self.a.column(q).into_owned();
            // Tiny relative pivots degrade the running inverse; refresh it
            // first in case the column was stale.
            if w[r].abs() < 1e-7 * w.amax() && self.since_refactor > 0 {
                self.refactor()?;
                continue;
            }
            self.iterations += 1;
            let old = self.basic[r];
            let target = if below_lower { self.lb[old] } else { self.ub[old] };
            // Step chosen so the leaving variable lands exactly on `target`.
            let t = (self.xb[r] - target) / w[r];
            for i in 0..self.m {
                self.xb[i] -= t * w[i];
            }
            let entering_value = self.nonbasic_value(q) + t;
            self.state[old] = if below_lower { VarState::AtLower } else { VarState::AtUpper };
            self.pivot(r, q, &w);
            self.xb[r] = entering_value;
        }
    }

    pub fn snapshot(&self) -> Basis {
        Basis { basic: self.basic.clone(), state: self.state.clone() }
    }

    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lb[j] = lo / self.col_scale[j];
        self.ub[j] = hi / self.col_scale[j];
        if self.state[j] == VarState::AtLower {
            // value tracks lb automatically via nonbasic_value
        }
    }

    /// Full primal solution (structural + slack variables).
    pub fn solution(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.n);
        for j in 0..self.n {
            if self.state[j] != VarState::Basic {
                x[j] = self.nonbasic_value(j);
            }
        }
        for (i, &j) in self.basic.iter().enumerate() {
            if j < self.n {
                x[j] = self.xb[i];
            }
        }
        x
    }

    pub fn structural_solution(&self) -> DVector<f64> {
        let mut x = self.solution().rows(0, self.n_structural).into_owned();
        for j in 0..self.n_structural {
            x[j] *= self.col_scale[j];
        }
        x
    }

    /// Packs duals and reduced costs into `res` using the minimization
    /// convention described on SolveResult, undoing the equilibration.
    pub fn fill_duals(&self, res: &mut SolveResult) {
        let y = self.duals();
        for i in 0..self.n_eq {
            res.dual_eq[i] = -y[i] * self.row_scale[i];
        }
        for i in self.n_eq..self.m {
            res.dual_in[i - self.n_eq] = (-y[i] * self.row_scale[i]).max(0.0);
        }
        for j in 0..self.n_structural {
            res.reduced_costs[j] = self.reduced_cost(&y, j) / self.col_scale[j];
        }
    }

    pub fn objective_internal(&self) -> f64 {
        let x = self.solution();
        self.c.rows(0, self.n).dot(&x)
    }
}

fn initial_state(lb: f64, ub: f64) -> VarState {
    if lb.is_finite() {
        VarState::AtLower
    } else if ub.is_finite() {
        VarState::AtUpper
    } else {
        VarState::Free
    }
}

pub(crate) fn default_iter_limit(lp: &LinearProgram) -> usize {
    50 * (lp.n_vars() + lp.b_eq.len() + lp.b_in.len()) + 1000
}

pub fn solve_lp(lp: &LinearProgram) -> Result<SolveResult, SolverError> {
    let mut s = Simplex::new(lp)?;
    let status = s.solve_primal(default_iter_limit(lp))?;
    let mut res = SolveResult::empty(
        map_status(status),
        lp.n_vars(),
        lp.b_eq.len(),
        lp.b_in.len(),
    );
    res.iterations = s.iterations;
    if status == SimplexStatus::Optimal {
        res.x = s.structural_solution();
        s.fill_duals(&mut res);
        let raw = s.objective_internal();
        res.objective = match lp.sense {
            Sense::Minimize => raw,
            Sense::Maximize => -raw,
        };
    }
    Ok(res)
}

pub(crate) fn map_status(s: SimplexStatus) -> SolveStatus {
    match s {
        SimplexStatus::Optimal => SolveStatus::Optimal,
        SimplexStatus::Infeasible => SolveStatus::Infeasible,
        SimplexStatus::Unbounded => SolveStatus::Unbounded,
        SimplexStatus::IterLimit => SolveStatus::Limit,
    }
}
