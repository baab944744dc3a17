//! Self-contained dense solvers: LP (revised simplex with exact duals),
//! convex QP (active set over a diagonal Hessian), and MILP (best-first
//! branch and bound over binary variables with warm-started dual simplex).

mod lp;
mod milp;
mod qp;

pub use lp::solve_lp;
pub use milp::solve_milp;
pub use qp::solve_qp;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("inconsistent problem dimensions: {0}")]
    Dimension(String),
    #[error("non-finite coefficient in problem data: {0}")]
    NonFinite(String),
    #[error("quadratic term must be non-negative (diagonal entry {index} = {value})")]
    IndefiniteQuadratic { index: usize, value: f64 },
    #[error("binary index {0} out of range")]
    BadBinaryIndex(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// min/max cᵀx subject to a_eq·x = b_eq, a_in·x ≤ b_in, lower ≤ x ≤ upper.
/// Infinite bounds are expressed with ±f64::INFINITY.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub sense: Sense,
    pub c: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    pub a_in: DMatrix<f64>,
    pub b_in: DVector<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl LinearProgram {
    /// A minimization problem with no constraints yet.
    pub fn new(n: usize) -> Self {
        LinearProgram {
            sense: Sense::Minimize,
            c: DVector::zeros(n),
            a_eq: DMatrix::zeros(0, n),
            b_eq: DVector::zeros(0),
            a_in: DMatrix::zeros(0, n),
            b_in: DVector::zeros(0),
            lower: DVector::from_element(n, f64::NEG_INFINITY),
            upper: DVector::from_element(n, f64::INFINITY),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.c.len()
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let n = self.n_vars();
        for (name, mat, rhs) in [("a_eq", &self.a_eq, &self.b_eq), ("a_in", &self.a_in, &self.b_in)] {
            if mat.ncols() != n {
                return Err(SolverError::Dimension(format!(
                    "{name} has {} columns for {n} variables",
                    mat.ncols()
                )));
            }
            if mat.nrows() != rhs.len() {
                return Err(SolverError::Dimension(format!(
                    "{name} has {} rows but rhs has {}",
                    mat.nrows(),
                    rhs.len()
                )));
            }
            if mat.iter().any(|v| !v.is_finite()) || rhs.iter().any(|v| !v.is_finite()) {
                return Err(SolverError::NonFinite(name.into()));
            }
        }
        if self.c.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::NonFinite("objective".into()));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(SolverError::Dimension("bound vectors".into()));
        }
        for j in 0..n {
            if self.lower[j] > self.upper[j] {
                return Err(SolverError::Dimension(format!(
                    "variable {j} has lower bound {} > upper bound {}",
                    self.lower[j], self.upper[j]
                )));
            }
        }
        Ok(())
    }
}

/// LinearProgram plus a diagonal positive-semidefinite quadratic term:
/// objective cᵀx + ½ xᵀ diag(q) x (so a generator with cost aP²+bP carries
/// q = 2a).
#[derive(Debug, Clone)]
pub struct ConvexQp {
    pub lp: LinearProgram,
    pub q_diag: DVector<f64>,
}

/// LinearProgram plus declared binary variables and the big-M constant used
/// by the caller's complementarity rows (recorded for diagnostics).
#[derive(Debug, Clone)]
pub struct MixedIntegerProgram {
    pub lp: LinearProgram,
    pub binaries: Vec<usize>,
    pub big_m: f64,
    /// Branch-and-bound node cap; None uses the built-in default.
    pub node_limit: Option<usize>,
    /// Suggested binary pattern, aligned with `binaries`. Solved as an LP
    /// up front for a starting incumbent and used as the plunge direction.
    pub warm: Option<Vec<u8>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Iteration or node limit hit; best incumbent reported when present.
    Limit,
}

/// Result of an LP/QP/MILP solve. Duals follow the minimization convention
/// L = cᵀx + dual_eqᵀ(A_eq x − b_eq) + dual_inᵀ(A_in x − b_in) with
/// dual_in ≥ 0, regardless of the requested sense (a maximize problem is
/// solved as the negated minimize problem).
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub x: DVector<f64>,
    pub dual_eq: DVector<f64>,
    pub dual_in: DVector<f64>,
    /// Reduced costs of the structural variables (minimize convention);
    /// the duals of active bounds.
    pub reduced_costs: DVector<f64>,
    /// Objective value in the caller's sense.
    pub objective: f64,
    pub iterations: usize,
    /// Branch-and-bound nodes processed (zero for LP/QP).
    pub nodes: usize,
    /// Remaining MILP optimality gap (zero unless status is Limit).
    pub gap: f64,
}

impl SolveResult {
    pub(crate) fn empty(status: SolveStatus, n: usize, m_eq: usize, m_in: usize) -> Self {
        SolveResult {
            status,
            x: DVector::zeros(n),
            dual_eq: DVector::zeros(m_eq),
            dual_in: DVector::zeros(m_in),
            reduced_costs: DVector::zeros(n),
            objective: f64::NAN,
            iterations: 0,
            nodes: 0,
            gap: 0.0,
        }
    }

    /// Max violation of the original constraints and bounds at `self.x`.
    pub fn feasibility_residual(&self, lp: &LinearProgram) -> f64 {
        let mut worst: f64 = 0.0;
        let r_eq = &lp.a_eq * &self.x - &lp.b_eq;
        for v in r_eq.iter() {
            worst = worst.max(v.abs());
        }
        let r_in = &lp.a_in * &self.x - &lp.b_in;
        for v in r_in.iter() {
            worst = worst.max(v.max(0.0));
        }
        for j in 0..lp.n_vars() {
            worst = worst.max(lp.lower[j] - self.x[j]).max(self.x[j] - lp.upper[j]);
        }
        worst
    }
}

/// Writes a problem as LP-format-like text for external cross-checking.
pub fn dump_lp_text(lp: &LinearProgram, binaries: &[usize]) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let sense = match lp.sense {
        Sense::Minimize => "Minimize",
        Sense::Maximize => "Maximize",
    };
    writeln!(s, "\\ {} variables, {} eq, {} ineq", lp.n_vars(), lp.b_eq.len(), lp.b_in.len()).unwrap();
    writeln!(s, "{sense}\n obj:{}", linear_expr(&lp.c)).unwrap();
    writeln!(s, "Subject To").unwrap();
    for i in 0..lp.b_eq.len() {
        writeln!(s, " e{i}:{} = {}", linear_expr(&lp.a_eq.row(i).transpose()), lp.b_eq[i]).unwrap();
    }
    for i in 0..lp.b_in.len() {
        writeln!(s, " i{i}:{} <= {}", linear_expr(&lp.a_in.row(i).transpose()), lp.b_in[i]).unwrap();
    }
    writeln!(s, "Bounds").unwrap();
    for j in 0..lp.n_vars() {
        writeln!(s, " {} <= x{j} <= {}", lp.lower[j], lp.upper[j]).unwrap();
    }
    if !binaries.is_empty() {
        writeln!(s, "Binary").unwrap();
        for &j in binaries {
            writeln!(s, " x{j}").unwrap();
        }
    }
    writeln!(s, "End").unwrap();
    s
}

fn linear_expr(c: &DVector<f64>) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    for (j, &v) in c.iter().enumerate() {
        if v != 0.0 {
            write!(s, " {} x{j}", if v >= 0.0 { format!("+{v}") } else { format!("{v}") }).unwrap();
        }
    }
    if s.is_empty() {
        s.push_str(" 0");
    }
    s
}
