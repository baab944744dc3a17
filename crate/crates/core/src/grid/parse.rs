//! Parser for a MATPOWER-compatible case subset: `baseMVA`, `bus`, `gen`,
//! `branch`, and `gencost` tables with whitespace-separated numeric columns.
//! Only the fields used by the DC model are read; everything else is ignored
//! with a warning. Out-of-service branches and generators are dropped.

use sha2::{Digest, Sha256};
use std::collections::HashMap;

use super::network::{Branch, Bus, Generator, GridError, Network, MVA_BASE};

struct Table {
    rows: Vec<Vec<f64>>,
    line: usize,
}

pub fn parse_case(text: &str) -> Result<Network, GridError> {
    let fingerprint = hex::encode(Sha256::digest(text.as_bytes()));
    let mut warnings = Vec::new();
    let mut name = String::from("case");
    let mut base_mva = MVA_BASE;
    let mut tables: HashMap<String, Table> = HashMap::new();

    let mut lines = text.lines().enumerate().peekable();
    while let Some((lineno, raw)) = lines.next() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("function") {
            if let Some((_, n)) = rest.split_once('=') {
                name = n.trim().trim_end_matches(';').to_string();
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("mpc.") {
            let (key, value) = rest.split_once('=').ok_or_else(|| GridError::Syntax {
                line: lineno + 1,
                col: 1,
                msg: format!("expected assignment, got {line:?}"),
            })?;
            let key = key.trim().to_string();
            let value = value.trim();
            if value.starts_with('[') {
                let mut rows = Vec::new();
                let mut rest = value[1..].to_string();
                let start = lineno + 1;
                loop {
                    let (done, body) = match rest.split_once(']') {
                        Some((body, _)) => (true, body.to_string()),
                        None => (false, rest.clone()),
                    };
                    for row_text in body.split(';') {
                        let row_text = row_text.trim();
                        if row_text.is_empty() {
                            continue;
                        }
                        let mut row = Vec::new();
                        for (col, tok) in row_text.split_whitespace().enumerate() {
                            let v: f64 = tok.parse().map_err(|_| GridError::Syntax {
                                line: start,
                                col: col + 1,
                                msg: format!("not a number: {tok:?} in table {key}"),
                            })?;
                            row.push(v);
                        }
                        rows.push(row);
                    }
                    if done {
                        break;
                    }
                    match lines.next() {
                        Some((_, raw)) => rest = strip_comment(raw).trim().to_string(),
                        None => {
                            return Err(GridError::Syntax {
                                line: start,
                                col: 1,
                                msg: format!("unterminated table {key}"),
                            })
                        }
                    }
                }
                if matches!(key.as_str(), "bus" | "gen" | "branch" | "gencost") {
                    tables.insert(key, Table { rows, line: start });
                } else {
                    warnings.push(format!("ignored table mpc.{key}"));
                }
            } else {
                let value = value.trim_end_matches(';').trim();
                match key.as_str() {
                    "baseMVA" => {
                        base_mva = value.parse().map_err(|_| GridError::Syntax {
                            line: lineno + 1,
                            col: 1,
                            msg: format!("bad baseMVA value {value:?}"),
                        })?;
                        if base_mva <= 0.0 {
                            return Err(GridError::Validation(format!(
                                "baseMVA must be positive, got {base_mva}"
                            )));
                        }
                    }
                    "version" => {}
                    other => warnings.push(format!("ignored scalar field mpc.{other}")),
                }
            }
        }
        // Any other matlab statement is ignored silently (e.g. comments kept
        // by strip_comment, return statements).
    }

    let bus_tab = tables.remove("bus").ok_or_else(|| GridError::Syntax {
        line: 1,
        col: 1,
        msg: "missing mpc.bus table".into(),
    })?;
    let branch_tab = tables.remove("branch").ok_or_else(|| GridError::Syntax {
        line: 1,
        col: 1,
        msg: "missing mpc.branch table".into(),
    })?;
    let gen_tab = tables.remove("gen").ok_or_else(|| GridError::Syntax {
        line: 1,
        col: 1,
        msg: "missing mpc.gen table".into(),
    })?;
    let gencost_tab = tables.remove("gencost");

    let mut buses = Vec::new();
    let mut slack = None;
    for (i, row) in bus_tab.rows.iter().enumerate() {
        if row.len() < 3 {
            return Err(GridError::Syntax {
                line: bus_tab.line,
                col: 1,
                msg: format!("bus row {} has {} columns, need >= 3", i + 1, row.len()),
            });
        }
        let id = row[0] as usize;
        if row[1] as usize == 3 {
            if slack.replace(id).is_some() {
                return Err(GridError::Validation("more than one slack bus (type 3)".into()));
            }
        }
        buses.push(Bus { id, load: row[2] / base_mva });
    }
    let slack = slack.ok_or_else(|| GridError::Validation("no slack bus (type 3) declared".into()))?;

    let mut branches = Vec::new();
    for (i, row) in branch_tab.rows.iter().enumerate() {
        if row.len() < 6 {
            return Err(GridError::Syntax {
                line: branch_tab.line,
                col: 1,
                msg: format!("branch row {} has {} columns, need >= 6", i + 1, row.len()),
            });
        }
        // Column 11 is the in-service flag when present.
        if row.len() > 10 && row[10] == 0.0 {
            continue;
        }
        branches.push(Branch {
            id: i + 1,
            from: row[0] as usize,
            to: row[1] as usize,
            reactance: row[3],
            rating: row[5] / base_mva,
        });
    }

    let mut generators = Vec::new();
    let mut in_service_rows = Vec::new();
    for (i, row) in gen_tab.rows.iter().enumerate() {
        if row.len() < 10 {
            return Err(GridError::Syntax {
                line: gen_tab.line,
                col: 1,
                msg: format!("gen row {} has {} columns, need >= 10", i + 1, row.len()),
            });
        }
        // Column 8 is the in-service status.
        if row[7] == 0.0 {
            continue;
        }
        in_service_rows.push(i);
        generators.push(Generator {
            id: i + 1,
            bus: row[0] as usize,
            cost_a: 0.0,
            cost_b: 0.0,
            cost_c: 0.0,
            p_min: row[9] / base_mva,
            p_max: row[8] / base_mva,
        });
    }

    if let Some(tab) = gencost_tab {
        if tab.rows.len() != gen_tab.rows.len() {
            return Err(GridError::Validation(format!(
                "gencost has {} rows but gen has {}",
                tab.rows.len(),
                gen_tab.rows.len()
            )));
        }
        for (g, &row_idx) in in_service_rows.iter().enumerate() {
            let row = &tab.rows[row_idx];
            if row.len() < 4 || row[0] as usize != 2 {
                return Err(GridError::Validation(format!(
                    "gencost row {}: only polynomial cost model (type 2) is supported",
                    row_idx + 1
                )));
            }
            let n = row[3] as usize;
            if row.len() < 4 + n {
                return Err(GridError::Syntax {
                    line: tab.line,
                    col: 1,
                    msg: format!("gencost row {} truncated", row_idx + 1),
                });
            }
            let coeffs = &row[4..4 + n];
            // Polynomial coefficients arrive highest order first, in MW
            // units; convert to p.u. on the MVA base.
            let (a, b, c) = match n {
                0 => (0.0, 0.0, 0.0),
                1 => (0.0, 0.0, coeffs[0]),
                2 => (0.0, coeffs[0] * base_mva, coeffs[1]),
                3 => (coeffs[0] * base_mva * base_mva, coeffs[1] * base_mva, coeffs[2]),
                _ => {
                    return Err(GridError::Validation(format!(
                        "gencost row {}: polynomial degree {} > 2 unsupported",
                        row_idx + 1,
                        n - 1
                    )))
                }
            };
            generators[g].cost_a = a;
            generators[g].cost_b = b;
            generators[g].cost_c = c;
        }
    } else {
        warnings.push("no gencost table; all generators priced at zero".into());
    }

    let net = Network {
        name,
        buses,
        branches,
        generators,
        slack,
        fingerprint,
        warnings,
    };
    net.validate()?;
    Ok(net)
}

fn strip_comment(line: &str) -> &str {
    match line.find('%') {
        Some(pos) => &line[..pos],
        None => line,
    }
}
