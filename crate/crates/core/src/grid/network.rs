use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Per-unit power base in MVA. All case quantities are normalized onto it.
pub const MVA_BASE: f64 = 100.0;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("invalid case data: {0}")]
    Validation(String),
    #[error("invalid partition: {0}")]
    Partition(String),
    #[error("invalid attack vector: {0}")]
    Attack(String),
}

/// A bus with its real-power load in p.u. on a 100 MVA base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    /// External (case file) bus id.
    pub id: usize,
    pub load: f64,
}

/// A transmission line in the DC model: series reactance and thermal rating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    /// 1-based line number in case file order.
    pub id: usize,
    /// External id of the from bus.
    pub from: usize,
    /// External id of the to bus.
    pub to: usize,
    /// Series reactance in p.u.
    pub reactance: f64,
    /// Thermal rating in p.u.
    pub rating: f64,
}

/// A dispatchable generator with quadratic cost a*P^2 + b*P + c, P in p.u.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    /// 1-based unit number in case file order.
    pub id: usize,
    /// External id of the host bus.
    pub bus: usize,
    pub cost_a: f64,
    pub cost_b: f64,
    pub cost_c: f64,
    pub p_min: f64,
    pub p_max: f64,
}

/// A validated, in-service-only view of a grid case. Immutable after
/// construction; out-of-service branches and generators are dropped at
/// parse time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub name: String,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
    /// External id of the slack bus.
    pub slack: usize,
    /// SHA-256 of the source case text; identifies the topology snapshot.
    pub fingerprint: String,
    /// Ignored-field notes emitted by the parser.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Network {
    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_branches(&self) -> usize {
        self.branches.len()
    }

    pub fn n_gens(&self) -> usize {
        self.generators.len()
    }

    /// Internal (0-based) index of an external bus id.
    pub fn bus_index(&self, id: usize) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    /// Internal index of the slack bus.
    pub fn branch_index(&self, id: usize) -> Option<usize> {
        self.branches.iter().position(|b| b.id == id)
    }

    pub fn slack_index(&self) -> usize {
        self.bus_index(self.slack).expect("slack bus validated at construction")
    }

    /// Load vector in p.u., indexed by internal bus order.
    pub fn load_vector(&self) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_iterator(self.buses.len(), self.buses.iter().map(|b| b.load))
    }

    pub fn total_load(&self) -> f64 {
        self.buses.iter().map(|b| b.load).sum()
    }

    /// Generator cost at dispatch p (p.u.).
    pub fn gen_cost(&self, g: usize, p: f64) -> f64 {
        let gen = &self.generators[g];
        gen.cost_a * p * p + gen.cost_b * p + gen.cost_c
    }

    /// Total cost of a dispatch vector in network generator order ($/h).
    pub fn total_gen_cost(&self, p_g: &nalgebra::DVector<f64>) -> f64 {
        (0..self.generators.len()).map(|g| self.gen_cost(g, p_g[g])).sum()
    }

    /// Returns a copy with every branch rating multiplied by `factor`.
    pub fn scale_ratings(&self, factor: f64) -> Result<Network, GridError> {
        if !(factor > 0.0 && factor <= 1.0) {
            return Err(GridError::Validation(format!(
                "rating scale factor must lie in (0, 1], got {factor}"
            )));
        }
        let mut net = self.clone();
        for br in &mut net.branches {
            br.rating *= factor;
        }
        Ok(net)
    }

    /// Returns a copy with branch `line` (1-based id) removed. Fails if the
    /// remaining graph is disconnected.
    pub fn without_branch(&self, line: usize) -> Result<Network, GridError> {
        let pos = self
            .branches
            .iter()
            .position(|b| b.id == line)
            .ok_or_else(|| GridError::Validation(format!("no branch with id {line}")))?;
        let mut net = self.clone();
        net.branches.remove(pos);
        net.validate()?;
        Ok(net)
    }

    /// Checks every structural invariant; called by the parser and after
    /// topology edits.
    pub fn validate(&self) -> Result<(), GridError> {
        if self.buses.is_empty() {
            return Err(GridError::Validation("case has no buses".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for b in &self.buses {
            if !seen.insert(b.id) {
                return Err(GridError::Validation(format!("duplicate bus id {}", b.id)));
            }
        }
        if self.bus_index(self.slack).is_none() {
            return Err(GridError::Validation(format!("slack bus {} not present", self.slack)));
        }
        for br in &self.branches {
            if br.reactance <= 0.0 {
                return Err(GridError::Validation(format!(
                    "branch {} ({}-{}) has non-positive reactance {}",
                    br.id, br.from, br.to, br.reactance
                )));
            }
            if br.rating <= 0.0 {
                return Err(GridError::Validation(format!(
                    "branch {} ({}-{}) has non-positive rating {}",
                    br.id, br.from, br.to, br.rating
                )));
            }
            if self.bus_index(br.from).is_none() || self.bus_index(br.to).is_none() {
                return Err(GridError::Validation(format!(
                    "branch {} references unknown bus",
                    br.id
                )));
            }
        }
        for g in &self.generators {
            if g.p_min > g.p_max {
                return Err(GridError::Validation(format!(
                    "generator {} has p_min {} > p_max {}",
                    g.id, g.p_min, g.p_max
                )));
            }
            if self.bus_index(g.bus).is_none() {
                return Err(GridError::Validation(format!(
                    "generator {} references unknown bus {}",
                    g.id, g.bus
                )));
            }
        }
        // Connectivity over in-service branches.
        let n = self.buses.len();
        let mut adj = vec![Vec::new(); n];
        for br in &self.branches {
            let f = self.bus_index(br.from).unwrap();
            let t = self.bus_index(br.to).unwrap();
            adj[f].push(t);
            adj[t].push(f);
        }
        let mut visited = vec![false; n];
        let mut stack = vec![0usize];
        visited[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !visited[w] {
                    visited[w] = true;
                    stack.push(w);
                }
            }
        }
        if let Some(i) = visited.iter().position(|v| !v) {
            return Err(GridError::Validation(format!(
                "bus {} is disconnected from the rest of the network",
                self.buses[i].id
            )));
        }
        Ok(())
    }

    /// Serializes back into the documented case grammar. Per-unit values are
    /// written back in case-file units by shifting the decimal point of their
    /// shortest representation, so re-parsing the output recovers the exact
    /// same doubles (round-trip invariant).
    pub fn to_case_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        writeln!(s, "function mpc = {}", self.name).unwrap();
        writeln!(s, "mpc.version = '2';").unwrap();
        writeln!(s, "mpc.baseMVA = {};", MVA_BASE).unwrap();
        writeln!(s, "mpc.bus = [").unwrap();
        for b in &self.buses {
            let bus_type = if b.id == self.slack { 3 } else { 1 };
            writeln!(
                s,
                "\t{}\t{}\t{}\t0\t0\t0\t1\t1\t0\t1\t1\t1.1\t0.9;",
                b.id,
                bus_type,
                shift_decimal(b.load, 2)
            )
            .unwrap();
        }
        writeln!(s, "];").unwrap();
        writeln!(s, "mpc.gen = [").unwrap();
        for g in &self.generators {
            writeln!(
                s,
                "\t{}\t0\t0\t0\t0\t1\t{}\t1\t{}\t{};",
                g.bus,
                MVA_BASE,
                shift_decimal(g.p_max, 2),
                shift_decimal(g.p_min, 2)
            )
            .unwrap();
        }
        writeln!(s, "];").unwrap();
        writeln!(s, "mpc.branch = [").unwrap();
        for br in &self.branches {
            writeln!(
                s,
                "\t{}\t{}\t0\t{}\t0\t{}\t0\t0\t0\t0\t1\t-360\t360;",
                br.from,
                br.to,
                br.reactance,
                shift_decimal(br.rating, 2)
            )
            .unwrap();
        }
        writeln!(s, "];").unwrap();
        writeln!(s, "mpc.gencost = [").unwrap();
        for g in &self.generators {
            writeln!(
                s,
                "\t2\t0\t0\t3\t{}\t{}\t{};",
                shift_decimal(g.cost_a, -4),
                shift_decimal(g.cost_b, -2),
                g.cost_c
            )
            .unwrap();
        }
        writeln!(s, "];").unwrap();
        s
    }
}

/// Multiplies `x` by 10^shift exactly, operating on the decimal text of its
/// shortest round-trip representation. Parsing the result and undoing the
/// unit conversion recovers `x` bit-for-bit for ordinary magnitudes.
pub(crate) fn shift_decimal(x: f64, shift: i32) -> String {
    let text = format!("{x}");
    if text.contains('e') || text.contains('E') || !x.is_finite() {
        // Extreme magnitudes: exactness not attempted.
        return format!("{:e}", x * 10f64.powi(shift));
    }
    let (sign, body) = match text.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", text.as_str()),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i.to_string(), f.to_string()),
        None => (body.to_string(), String::new()),
    };
    let digits: Vec<u8> = int_part.bytes().chain(frac_part.bytes()).collect();
    // Decimal point position counted from the left of `digits`.
    let point = int_part.len() as i32 + shift;
    let mut out = String::from(sign);
    if point <= 0 {
        out.push_str("0.");
        for _ in 0..(-point) {
            out.push('0');
        }
        out.extend(digits.iter().map(|&d| d as char));
    } else if (point as usize) >= digits.len() {
        out.extend(digits.iter().map(|&d| d as char));
        for _ in 0..(point as usize - digits.len()) {
            out.push('0');
        }
    } else {
        let (a, b) = digits.split_at(point as usize);
        out.extend(a.iter().map(|&d| d as char));
        out.push('.');
        out.extend(b.iter().map(|&d| d as char));
    }
    // Trim trailing fraction zeros and a trailing ".".
    if out.contains('.') {
        while out.ends_with('0') {
            out.pop();
        }
    }
    if out.ends_with('.') {
        out.pop();
    }
    // Strip redundant leading zeros ("000.05" → "0.05").
    let neg = out.starts_with('-');
    let body = if neg { &out[1..] } else { &out[..] };
    let trimmed = body.trim_start_matches('0');
    let kept = if trimmed.is_empty() || trimmed.starts_with('.') {
        format!("0{trimmed}")
    } else {
        trimmed.to_string()
    };
    out = if neg { format!("-{kept}") } else { kept };
    if out.is_empty() || out == "-" {
        out.push('0');
    }
    out
}

