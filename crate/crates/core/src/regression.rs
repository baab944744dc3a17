//! Boundary-injection predictor: affine least-squares fit from historical
//! records, plus the rank certificate that says when the fit is exact.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dc::{numerical_rank, pseudo_inverse, DcOperators, RANK_REL_TOL};
use crate::grid::{Network, Partition};
use crate::history::{HistoricalDataset, HistoricalRecord, VariabilitySets};

/// Input columns whose sample variance falls below this are treated as
/// constant and absorbed into the intercept.
pub const CONSTANT_COLUMN_VAR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum RegressionError {
    #[error("need at least {need} records for {n_l} inputs, got {got}")]
    TooFewRecords { need: usize, got: usize, n_l: usize },
    #[error("design matrix is rank deficient: rank {rank} of {cols} kept columns (varying local buses {hint:?})")]
    RankDeficient { rank: usize, cols: usize, hint: Vec<usize> },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("certificate does not pin a unique predictor (rank {rank} < {need})")]
    NotUnique { rank: usize, need: usize },
    #[error("variability sets inconsistent: {0}")]
    Inconsistent(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed model file: {0}")]
    Parse(String),
}

/// Affine map from local injections to pseudo-boundary injections.
#[derive(Debug, Clone)]
pub struct RegressionModel {
    /// n_boundary x n_local coefficients.
    pub f: DMatrix<f64>,
    /// n_boundary intercepts.
    pub f0: DVector<f64>,
    /// Per-boundary-bus training residual RMS.
    pub residual_rms: DVector<f64>,
    pub fingerprint: String,
}

/// Structural test for exact predictability, with the closed-form
/// predictor when the external injections are pinned by congestion.
#[derive(Debug, Clone)]
pub struct TheoremOneCertificate {
    /// (n_c + 1) x n_local.
    pub a: DMatrix<f64>,
    /// (n_c + 1) x n_varying_external.
    pub b: DMatrix<f64>,
    pub d: DVector<f64>,
    pub rank_b: usize,
    pub full_column_rank: bool,
    /// Closed-form (F, f0); meaningful only when `full_column_rank`.
    pub f: DMatrix<f64>,
    pub f0: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct PredictorComparison {
    pub max_f_error: f64,
    pub max_f0_error: f64,
    pub matched: bool,
}

/// Local net injection (generation minus load) per local bus for a record.
pub fn local_injections(net: &Network, part: &Partition, rec: &HistoricalRecord) -> DVector<f64> {
    let local_gens = part.local_gens(net);
    DVector::from_fn(part.n_local(), |t, _| {
        let mut v = -rec.local_loads[t];
        for &g in &part.gens_at_local_bus[t] {
            let slot = local_gens.iter().position(|&x| x == g).unwrap();
            v += rec.local_dispatch[slot];
        }
        v
    })
}

pub fn fit(
    ds: &HistoricalDataset,
    net: &Network,
    part: &Partition,
) -> Result<RegressionModel, RegressionError> {
    let m = ds.records.len();
    let n_l = part.n_local();
    let n_b = part.n_boundary();
    if m < n_l + 1 {
        return Err(RegressionError::TooFewRecords { need: n_l + 1, got: m, n_l });
    }
    let inputs: Vec<DVector<f64>> =
        ds.records.iter().map(|r| local_injections(net, part, r)).collect();

    // Column means and variances decide which inputs carry information.
    let mean = DVector::from_fn(n_l, |j, _| inputs.iter().map(|v| v[j]).sum::<f64>() / m as f64);
    let varying: Vec<usize> = (0..n_l)
        .filter(|&j| {
            inputs.iter().map(|v| (v[j] - mean[j]).powi(2)).sum::<f64>() / m as f64
                > CONSTANT_COLUMN_VAR
        })
        .collect();

    // Noise-free dispatch data can tie varying columns together exactly
    // (pinned congested flows plus power balance leave fewer degrees of
    // freedom than inputs), so keep a greedy maximal independent subset;
    // dropped columns get zero coefficients like the constant ones.
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let intercept = DVector::from_element(m, 1.0 / (m as f64).sqrt());
    basis.push(intercept);
    let mut kept: Vec<usize> = Vec::new();
    for &j in &varying {
        let col = DVector::from_fn(m, |t, _| inputs[t][j]);
        let norm0 = col.norm();
        let mut r = col;
        for q in &basis {
            let proj = q.dot(&r);
            r -= q * proj;
        }
        // second pass stabilizes the projection
        for q in &basis {
            let proj = q.dot(&r);
            r -= q * proj;
        }
        if r.norm() > RANK_REL_TOL.sqrt() * norm0 {
            basis.push(&r / r.norm());
            kept.push(j);
        }
    }

    let cols = kept.len() + 1;
    let mut x = DMatrix::zeros(m, cols);
    for (t, v) in inputs.iter().enumerate() {
        x[(t, 0)] = 1.0;
        for (c, &j) in kept.iter().enumerate() {
            x[(t, c + 1)] = v[j];
        }
    }
    let rank = numerical_rank(&x, RANK_REL_TOL);
    if rank < cols {
        return Err(RegressionError::RankDeficient {
            rank,
            cols,
            hint: kept.iter().map(|&j| part.local[j]).collect(),
        });
    }

    let svd = x.clone().svd(true, true);
    let mut f = DMatrix::zeros(n_b, n_l);
    let mut f0 = DVector::zeros(n_b);
    let mut rms = DVector::zeros(n_b);
    for i in 0..n_b {
        let y = DVector::from_fn(m, |t, _| ds.records[t].pseudo_injections[i]);
        let beta = svd
            .solve(&y, RANK_REL_TOL * svd.singular_values.max())
            .map_err(|e| RegressionError::Parse(e.to_string()))?;
        // Constant columns keep zero coefficients; their effect lives in
        // the intercept at the dropped columns' mean values.
        f0[i] = beta[0];
        for (c, &j) in kept.iter().enumerate() {
            f[(i, j)] = beta[c + 1];
        }
        let resid = &y - &x * &beta;
        rms[i] = (resid.norm_squared() / m as f64).sqrt();
    }
    Ok(RegressionModel { f, f0, residual_rms: rms, fingerprint: ds.fingerprint.clone() })
}

pub fn predict(
    model: &RegressionModel,
    v_local: &DVector<f64>,
) -> Result<DVector<f64>, RegressionError> {
    if v_local.len() != model.f.ncols() {
        return Err(RegressionError::Dimension { expected: model.f.ncols(), got: v_local.len() });
    }
    Ok(&model.f * v_local + &model.f0)
}

pub fn theorem1_certificate(
    net: &Network,
    ops: &DcOperators,
    part: &Partition,
    sets: &VariabilitySets,
) -> Result<TheoremOneCertificate, RegressionError> {
    if sets.z_buses.len() != sets.v_z.len() {
        return Err(RegressionError::Inconsistent(format!(
            "{} constant buses but {} pinned values",
            sets.z_buses.len(),
            sets.v_z.len()
        )));
    }
    if sets.congested.len() != sets.signs.len() {
        return Err(RegressionError::Inconsistent("congestion sign count mismatch".into()));
    }
    let lcols: Vec<usize> = part.local.iter().map(|&b| net.bus_index(b).unwrap()).collect();
    let ycols: Vec<usize> = sets.y_buses.iter().map(|&b| net.bus_index(b).unwrap()).collect();
    let zcols: Vec<usize> = sets.z_buses.iter().map(|&b| net.bus_index(b).unwrap()).collect();
    let n_c = sets.congested.len();
    let n_y = ycols.len();

    // Congested rows carry K at limit; the last row is power balance.
    let mut a = DMatrix::zeros(n_c + 1, lcols.len());
    let mut b = DMatrix::zeros(n_c + 1, n_y);
    let mut d = DVector::zeros(n_c + 1);
    for (r, &k) in sets.congested.iter().enumerate() {
        for (c, &j) in lcols.iter().enumerate() {
            a[(r, c)] = ops.k[(k, j)];
        }
        for (c, &j) in ycols.iter().enumerate() {
            b[(r, c)] = ops.k[(k, j)];
        }
        let rate = net.branches[k].rating;
        d[r] = sets.signs[r] * rate
            - zcols.iter().enumerate().map(|(t, &j)| ops.k[(k, j)] * sets.v_z[t]).sum::<f64>();
    }
    let r = n_c;
    for c in 0..lcols.len() {
        a[(r, c)] = 1.0;
    }
    for c in 0..n_y {
        b[(r, c)] = 1.0;
    }
    d[r] = -sets.v_z.sum();

    let rank_b = numerical_rank(&b, RANK_REL_TOL);
    let full = rank_b == n_y;
    let n_bd = part.n_boundary();
    let mut f = DMatrix::zeros(n_bd, lcols.len());
    let mut f0 = DVector::zeros(n_bd);
    if full {
        let b_pinv = pseudo_inverse(&b, RANK_REL_TOL);
        for i in 0..n_bd {
            // J_i: tie-line flow sensitivity of boundary bus i to injections.
            let bus = part.boundary[i];
            let mut j_row = nalgebra::RowDVector::zeros(net.n_buses());
            for &line in &part.boundary_external_lines[i] {
                let k = net.branch_index(line).unwrap();
                let sgn = if net.branches[k].from == bus { 1.0 } else { -1.0 };
                j_row += ops.k.row(k) * sgn;
            }
            let j_l = nalgebra::RowDVector::from_fn(lcols.len(), |_, c| j_row[lcols[c]]);
            let j_y = nalgebra::RowDVector::from_fn(n_y, |_, c| j_row[ycols[c]]);
            let j_z = nalgebra::RowDVector::from_fn(zcols.len(), |_, c| j_row[zcols[c]]);
            let row = &j_l - &j_y * &b_pinv * &a;
            for c in 0..lcols.len() {
                f[(i, c)] = row[c];
            }
            f0[i] = (&j_y * &b_pinv * &d)[0] + (&j_z * &sets.v_z)[0];
        }
    }
    Ok(TheoremOneCertificate { a, b, d, rank_b, full_column_rank: full, f, f0 })
}

pub fn compare_predictors(
    model: &RegressionModel,
    cert: &TheoremOneCertificate,
) -> Result<PredictorComparison, RegressionError> {
    if !cert.full_column_rank {
        return Err(RegressionError::NotUnique { rank: cert.rank_b, need: cert.b.ncols() });
    }
    let max_f_error = (&model.f - &cert.f).abs().max();
    let max_f0_error = (&model.f0 - &cert.f0).abs().max();
    Ok(PredictorComparison {
        max_f_error,
        max_f0_error,
        matched: max_f_error <= 1e-5 && max_f0_error <= 1e-5,
    })
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    n_boundary: usize,
    n_local: usize,
    f_row_major: Vec<f64>,
    f0: Vec<f64>,
    residual_rms: Vec<f64>,
    fingerprint: String,
}

pub fn save_model(model: &RegressionModel, path: &Path) -> Result<(), RegressionError> {
    let file = ModelFile {
        n_boundary: model.f.nrows(),
        n_local: model.f.ncols(),
        f_row_major: model.f.transpose().as_slice().to_vec(),
        f0: model.f0.as_slice().to_vec(),
        residual_rms: model.residual_rms.as_slice().to_vec(),
        fingerprint: model.fingerprint.clone(),
    };
    let json =
        serde_json::to_string_pretty(&file).map_err(|e| RegressionError::Parse(e.to_string()))?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<RegressionModel, RegressionError> {
    let file: ModelFile = serde_json::from_str(&std::fs::read_to_string(path)?)
        .map_err(|e| RegressionError::Parse(e.to_string()))?;
    if file.f_row_major.len() != file.n_boundary * file.n_local
        || file.f0.len() != file.n_boundary
        || file.residual_rms.len() != file.n_boundary
    {
        return Err(RegressionError::Parse("dimension fields disagree with data".into()));
    }
    let f =
        DMatrix::from_row_slice(file.n_boundary, file.n_local, &file.f_row_major);
    Ok(RegressionModel {
        f,
        f0: DVector::from_vec(file.f0),
        residual_rms: DVector::from_vec(file.residual_rms),
        fingerprint: file.fingerprint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dc::build_operators;
    use crate::grid::{make_partition, parse_case};
    use crate::history::{
        derive_variability_sets, generate_dataset, pseudo_boundary_injections, Scenario,
        LOAD_STD_DEV,
    };
    use crate::rng::Rng;
    use approx::assert_abs_diff_eq;

    const PATH4R: &str = "\
function mpc = path4r
mpc.baseMVA = 100;
mpc.bus = [
 1 3 20 0 0 0 1 1 0 230 1 1.1 0.9;
 2 1 40 0 0 0 1 1 0 230 1 1.1 0.9;
 3 1 30 0 0 0 1 1 0 230 1 1.1 0.9;
 4 1 50 0 0 0 1 1 0 230 1 1.1 0.9;
];
mpc.gen = [
 1 0 0 999 -999 1 100 1 100 0;
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

    // Ring 1-2-4-3-1 with both local buses on tie lines: the split of the
    // local export between the two ties depends on the external load
    // distribution, so prediction from local data alone can fail.
    const RING4: &str = "\
function mpc = ring4
mpc.baseMVA = 100;
mpc.bus = [
 1 3 30 0 0 0 1 1 0 230 1 1.1 0.9;
 2 1 30 0 0 0 1 1 0 230 1 1.1 0.9;
 3 1 40 0 0 0 1 1 0 230 1 1.1 0.9;
 4 1 40 0 0 0 1 1 0 230 1 1.1 0.9;
];
mpc.gen = [
 1 0 0 999 -999 1 100 1 100 0;
 3 0 0 999 -999 1 100 1 150 0;
 4 0 0 999 -999 1 100 1 150 0;
];
mpc.branch = [
 1 2 0 0.1 0 250 0 0 0 0 1 -360 360;
 1 3 0 0.1 0 250 0 0 0 0 1 -360 360;
 2 4 0 0.1 0 250 0 0 0 0 1 -360 360;
 3 4 0 0.1 0 250 0 0 0 0 1 -360 360;
];
mpc.gencost = [
 2 0 0 2 10 0;
 2 0 0 2 20 0;
 2 0 0 2 25 0;
];
";

    fn setup() -> (Network, crate::dc::DcOperators, Partition) {
        let net = parse_case(PATH4R).unwrap();
        let ops = build_operators(&net).unwrap();
        let part = make_partition(&net, &[1, 2]).unwrap();
        (net, ops, part)
    }

    fn planted_dataset(
        net: &Network,
        part: &Partition,
        f_true: &DMatrix<f64>,
        f0_true: &DVector<f64>,
        m: usize,
    ) -> HistoricalDataset {
        let mut rng = Rng::new(7);
        let records = (0..m)
            .map(|i| {
                let v = DVector::from_fn(part.n_local(), |_, _| rng.next_normal(0.0, 1.0));
                // Loads carry the injections (no local generation drawn).
                crate::history::HistoricalRecord {
                    instance: i,
                    local_loads: -v.clone(),
                    local_dispatch: DVector::zeros(part.local_gens(net).len()),
                    local_flows: DVector::zeros(part.local_lines.len()),
                    pseudo_injections: f_true * &v + f0_true,
                    boundary_lmp: DVector::zeros(part.n_boundary()),
                }
            })
            .collect();
        HistoricalDataset {
            records,
            scenario: Scenario::All,
            seed: 7,
            fingerprint: net.fingerprint.clone(),
        }
    }

    #[test]
    fn recovers_planted_affine_map() {
        let (net, _, part) = setup();
        let f_true = DMatrix::from_row_slice(1, 2, &[0.7, -0.4]);
        let f0_true = DVector::from_vec(vec![0.25]);
        let ds = planted_dataset(&net, &part, &f_true, &f0_true, 30);
        let model = fit(&ds, &net, &part).unwrap();
        assert_abs_diff_eq!(model.f[(0, 0)], 0.7, epsilon = 1e-8);
        assert_abs_diff_eq!(model.f[(0, 1)], -0.4, epsilon = 1e-8);
        assert_abs_diff_eq!(model.f0[0], 0.25, epsilon = 1e-8);
        assert!(model.residual_rms[0] < 1e-10);
        // Normal-equation orthogonality on the training data.
        for rec in &ds.records {
            let v = local_injections(&net, &part, rec);
            let p = predict(&model, &v).unwrap();
            assert_abs_diff_eq!(p[0], rec.pseudo_injections[0], epsilon = 1e-8);
        }
    }

    #[test]
    fn constant_target_gives_zero_coefficients() {
        let (net, _, part) = setup();
        let f_true = DMatrix::zeros(1, 2);
        let f0_true = DVector::from_vec(vec![0.9]);
        let ds = planted_dataset(&net, &part, &f_true, &f0_true, 12);
        let model = fit(&ds, &net, &part).unwrap();
        assert_abs_diff_eq!(model.f.abs().max(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(model.f0[0], 0.9, epsilon = 1e-9);
    }

    #[test]
    fn predict_is_affine_and_checks_dimensions() {
        let (net, _, part) = setup();
        let f_true = DMatrix::from_row_slice(1, 2, &[1.5, 2.5]);
        let f0_true = DVector::from_vec(vec![-0.5]);
        let ds = planted_dataset(&net, &part, &f_true, &f0_true, 10);
        let model = fit(&ds, &net, &part).unwrap();
        let zero = DVector::zeros(2);
        assert_abs_diff_eq!(predict(&model, &zero).unwrap()[0], model.f0[0], epsilon = 1e-12);
        let mut rng = Rng::new(99);
        for _ in 0..20 {
            let v1 = DVector::from_fn(2, |_, _| rng.next_normal(0.0, 1.0));
            let v2 = DVector::from_fn(2, |_, _| rng.next_normal(0.0, 1.0));
            let lhs = predict(&model, &v1).unwrap() + predict(&model, &v2).unwrap()
                - predict(&model, &zero).unwrap();
            let rhs = predict(&model, &(&v1 + &v2)).unwrap();
            assert_abs_diff_eq!(lhs[0], rhs[0], epsilon = 1e-9);
        }
        assert!(matches!(
            predict(&model, &DVector::zeros(5)),
            Err(RegressionError::Dimension { .. })
        ));
    }

    #[test]
    fn too_few_records_rejected() {
        let (net, _, part) = setup();
        let ds = planted_dataset(&net, &part, &DMatrix::zeros(1, 2), &DVector::zeros(1), 2);
        assert!(matches!(fit(&ds, &net, &part), Err(RegressionError::TooFewRecords { .. })));
    }

    #[test]
    fn certificate_matches_fit_when_external_pinned() {
        // Scenario 1 on the path network: external loads fixed, the single
        // external generator is marginal, so its bus varies with rank(B)=1
        // and prediction is exact.
        let (net, ops, part) = setup();
        let ds = generate_dataset(&net, &ops, &part, Scenario::LocalOnly, 25, 3).unwrap();
        let sets = derive_variability_sets(&ds, &net, &ops, &part, LOAD_STD_DEV).unwrap();
        let cert = theorem1_certificate(&net, &ops, &part, &sets).unwrap();
        assert!(cert.full_column_rank, "rank {} of {}", cert.rank_b, cert.b.ncols());
        let model = fit(&ds, &net, &part).unwrap();
        assert!(model.residual_rms.max() < 1e-6, "rms {}", model.residual_rms.max());
        let cmp = compare_predictors(&model, &cert).unwrap();
        assert!(cmp.matched, "F err {} f0 err {}", cmp.max_f_error, cmp.max_f0_error);
        // Closed form reproduces each training record directly.
        for rec in &ds.records {
            let v = local_injections(&net, &part, rec);
            let p = &cert.f * &v + &cert.f0;
            for t in 0..part.n_boundary() {
                assert_abs_diff_eq!(p[t], rec.pseudo_injections[t], epsilon = 1e-6);
            }
        }
        let _ = pseudo_boundary_injections; // silence unused-import lint path
    }

    #[test]
    fn rank_deficient_b_reported_not_matched() {
        // All loads vary and no line is congested, so B is the 1 x 2
        // balance row: rank 1 < 2 and the tie split is unpredictable.
        let net = parse_case(RING4).unwrap();
        let ops = build_operators(&net).unwrap();
        let part = make_partition(&net, &[1, 2]).unwrap();
        let ds = generate_dataset(&net, &ops, &part, Scenario::All, 25, 3).unwrap();
        let sets = derive_variability_sets(&ds, &net, &ops, &part, LOAD_STD_DEV).unwrap();
        let cert = theorem1_certificate(&net, &ops, &part, &sets).unwrap();
        assert!(!cert.full_column_rank);
        let model = fit(&ds, &net, &part).unwrap();
        assert!(model.residual_rms.max() > 1e-4, "rms {}", model.residual_rms.max());
        assert!(matches!(
            compare_predictors(&model, &cert),
            Err(RegressionError::NotUnique { .. })
        ));
    }

    #[test]
    fn more_data_same_verdict() {
        let (net, ops, part) = setup();
        let sets = {
            let ds = generate_dataset(&net, &ops, &part, Scenario::LocalOnly, 25, 3).unwrap();
            derive_variability_sets(&ds, &net, &ops, &part, LOAD_STD_DEV).unwrap()
        };
        let cert = theorem1_certificate(&net, &ops, &part, &sets).unwrap();
        for count in [25usize, 250] {
            let ds = generate_dataset(&net, &ops, &part, Scenario::LocalOnly, count, 3).unwrap();
            let model = fit(&ds, &net, &part).unwrap();
            assert!(compare_predictors(&model, &cert).unwrap().matched);
        }
    }

    #[test]
    fn model_json_round_trip() {
        let (net, _, part) = setup();
        let f_true = DMatrix::from_row_slice(1, 2, &[0.3, 0.6]);
        let f0_true = DVector::from_vec(vec![1.1]);
        let ds = planted_dataset(&net, &part, &f_true, &f0_true, 15);
        let model = fit(&ds, &net, &part).unwrap();
        let dir = std::env::temp_dir().join("fdi_regression_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.json");
        save_model(&model, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(model.f, back.f);
        assert_eq!(model.f0, back.f0);
        assert_eq!(model.fingerprint, back.fingerprint);
    }
}
