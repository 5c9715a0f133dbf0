//! Fit diagnostics: R² per equation, sign (monotonicity) shares, the
//! convexity check on the price-response matrix, and actual/predicted export.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::industry::{IndustryId, IndustrySpec, NetputRole};
use crate::netput::predict_all;
use crate::output::NumberFormat;
use crate::panel::FarmPanel;
use crate::params::ParameterSet;

pub const R_SQUARED_DEFINITION: &str = "1 - SS_res/SS_tot per equation, unweighted, about the mean of actual";

/// 1 − SS_res/SS_tot about the mean of `actual`.
pub fn r_squared(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    if actual.len() != predicted.len() {
        return Err(Error::dim("predicted", actual.len(), predicted.len()));
    }
    if actual.len() < 2 {
        return Err(Error::TooFewObservations {
            observations: actual.len(),
            parameters: 1,
        });
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::ConstantActual);
    }
    let ss_res: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Share of netput predictions with the sign their role implies: outputs
/// positive, inputs negative. Zero counts as a violation.
pub fn monotonicity_share(netputs: &[f64], role: NetputRole) -> Result<f64> {
    if netputs.is_empty() {
        return Err(Error::Empty("predictions".into()));
    }
    let ok = netputs
        .iter()
        .filter(|&&v| match role {
            NetputRole::Output => v > 0.0,
            NetputRole::Input => v < 0.0,
        })
        .count();
    Ok(ok as f64 / netputs.len() as f64)
}

/// Shares for every netput equation; `predictions` holds one row of netputs
/// per observation in spec order.
pub fn monotonicity_shares(predictions: &[Vec<f64>], spec: &IndustrySpec) -> Result<Vec<f64>> {
    let n = spec.n_netputs();
    if let Some(r) = predictions.iter().find(|r| r.len() != n) {
        return Err(Error::dim("prediction row", n, r.len()));
    }
    (0..n)
        .map(|i| {
            let col: Vec<f64> = predictions.iter().map(|r| r[i]).collect();
            monotonicity_share(&col, spec.role(i))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityVerdict {
    pub psd: bool,
    pub min_eigenvalue: f64,
    pub eigenvalues: Vec<f64>,
    pub tolerance: f64,
    /// Unit eigenvector of the minimum eigenvalue when the check fails.
    pub failing_direction: Option<Vec<f64>>,
    pub cholesky_psd: bool,
    pub criteria_agree: bool,
    pub matrix: Vec<Vec<f64>>,
}

/// Pivoted Cholesky test for positive semidefiniteness: factorisation stops
/// once the largest remaining pivot is within `tol` and the residual block
/// is negligible.
pub fn pivoted_cholesky_psd(m: &DMatrix<f64>, tol: f64) -> bool {
    let n = m.nrows();
    let mut a = m.clone();
    let mut active: Vec<usize> = (0..n).collect();
    while !active.is_empty() {
        let (pos, &k) = active
            .iter()
            .enumerate()
            .max_by(|x, y| a[(*x.1, *x.1)].total_cmp(&a[(*y.1, *y.1)]))
            .unwrap();
        let piv = a[(k, k)];
        if piv <= tol {
            return piv >= -tol && active.iter().all(|&i| active.iter().all(|&j| a[(i, j)].abs() <= tol));
        }
        active.swap_remove(pos);
        let l: Vec<f64> = active.iter().map(|&i| a[(i, k)] / piv.sqrt()).collect();
        for (x, &i) in active.iter().enumerate() {
            for (y, &j) in active.iter().enumerate() {
                a[(i, j)] -= l[x] * l[y];
            }
        }
    }
    true
}

/// PSD check by minimum eigenvalue, cross-checked by pivoted Cholesky.
/// `tolerance` defaults to 1e-8 times the spectral norm.
pub fn convexity_check(c: &DMatrix<f64>, tolerance: Option<f64>) -> Result<ConvexityVerdict> {
    if !c.is_square() || c.nrows() == 0 {
        return Err(Error::dim("square matrix", c.nrows(), c.ncols()));
    }
    let scale = c.amax().max(1.0);
    let asym = (c - c.transpose()).amax();
    if asym > 1e-10 * scale {
        return Err(Error::Asymmetric(asym));
    }
    let sym = (c + c.transpose()) * 0.5;
    let eig = sym.clone().symmetric_eigen();
    let (imin, &min) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let norm = eig.eigenvalues.amax();
    let tol = tolerance.unwrap_or(1e-8 * norm);
    let psd = min >= -tol;
    let cholesky_psd = pivoted_cholesky_psd(&sym, tol);
    let failing_direction = (!psd).then(|| {
        let v = eig.eigenvectors.column(imin);
        // Sign fixed so the largest component is positive.
        let big = v
            .iter()
            .copied()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(1.0);
        v.iter().map(|x| x * big.signum()).collect()
    });
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    Ok(ConvexityVerdict {
        psd,
        min_eigenvalue: min,
        eigenvalues,
        tolerance: tol,
        failing_direction,
        cholesky_psd,
        criteria_agree: psd == cholesky_psd,
        matrix: (0..c.nrows()).map(|i| c.row(i).iter().copied().collect()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub farm_id: String,
    pub equation: String,
    pub actual: f64,
    pub predicted: f64,
}

/// CSV of (farm_id, equation, actual, predicted).
pub fn fit_export(
    labels: &[(String, String)],
    actual: &[f64],
    predicted: &[f64],
    format: NumberFormat,
) -> Result<String> {
    if actual.len() != labels.len() {
        return Err(Error::dim("actual", labels.len(), actual.len()));
    }
    if predicted.len() != labels.len() {
        return Err(Error::dim("predicted", labels.len(), predicted.len()));
    }
    let mut out = String::from("farm_id,equation,actual,predicted\n");
    for (((f, e), a), p) in labels.iter().zip(actual).zip(predicted) {
        out.push_str(&format!("{f},{e},{},{}\n", format.fmt(*a), format.fmt(*p)));
    }
    Ok(out)
}

pub fn fit_rows_csv(rows: &[FitRow], format: NumberFormat) -> String {
    let labels: Vec<(String, String)> = rows.iter().map(|r| (r.farm_id.clone(), r.equation.clone())).collect();
    let a: Vec<f64> = rows.iter().map(|r| r.actual).collect();
    let p: Vec<f64> = rows.iter().map(|r| r.predicted).collect();
    fit_export(&labels, &a, &p, format).expect("aligned by construction")
}

pub fn read_fit_export(text: &str) -> Result<Vec<FitRow>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquationFit {
    pub equation: String,
    pub observations: usize,
    /// Only for per-hectare industries; None also when actual is constant.
    #[serde(with = "crate::output::undefined_opt")]
    pub r_squared_per_ha: Option<f64>,
    #[serde(with = "crate::output::undefined_opt")]
    pub r_squared_level: Option<f64>,
    pub monotonicity_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub industry: IndustryId,
    pub r_squared_definition: String,
    pub equations: Vec<EquationFit>,
    pub convexity: ConvexityVerdict,
    #[serde(default)]
    pub fit_exports: Vec<String>,
}

fn optional_r2(actual: &[f64], predicted: &[f64]) -> Result<Option<f64>> {
    match r_squared(actual, predicted) {
        Ok(v) => Ok(Some(v)),
        Err(Error::ConstantActual) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Diagnostics for one industry's records. Equations are the netputs then
/// the numeraire (sign tested as an input). Fit rows are at level scale.
pub fn validate(params: &ParameterSet, panel: &FarmPanel, id: IndustryId) -> Result<(ValidationReport, Vec<FitRow>)> {
    let spec = panel.spec(id)?;
    params.check_matches(spec)?;
    let recs = panel.industry_records(id);
    if recs.is_empty() {
        return Err(Error::MissingIndustry(id.to_string()));
    }
    let n = spec.n_netputs();
    let mut names = spec.netput_names();
    names.push(spec.numeraire_name.clone());
    let mut actual = vec![Vec::with_capacity(recs.len()); n + 1];
    let mut predicted = vec![Vec::with_capacity(recs.len()); n + 1];
    let mut areas = Vec::with_capacity(recs.len());
    for r in &recs {
        let pred = predict_all(params, &r.prices, &r.exogenous())?;
        let act = r.model_netputs(spec)?;
        for i in 0..n {
            actual[i].push(act[i]);
            predicted[i].push(pred.netputs[i]);
        }
        // Numeraire equation in netput convention.
        actual[n].push(-r.model_numeraire(spec)?);
        predicted[n].push(-pred.numeraire.unwrap_or(0.0));
        areas.push(r.area_divisor(spec)?);
    }
    let per_ha = spec.per_hectare;
    let mut equations = Vec::with_capacity(n + 1);
    let mut rows = Vec::new();
    for e in 0..=n {
        let role = if e < n { spec.role(e) } else { NetputRole::Input };
        let la: Vec<f64> = actual[e].iter().zip(&areas).map(|(v, a)| v * a).collect();
        let lp: Vec<f64> = predicted[e].iter().zip(&areas).map(|(v, a)| v * a).collect();
        equations.push(EquationFit {
            equation: names[e].clone(),
            observations: recs.len(),
            r_squared_per_ha: if per_ha {
                optional_r2(&actual[e], &predicted[e])?
            } else {
                None
            },
            r_squared_level: optional_r2(&la, &lp)?,
            monotonicity_share: monotonicity_share(&predicted[e], role)?,
        });
        for (k, r) in recs.iter().enumerate() {
            rows.push(FitRow {
                farm_id: r.farm_id.clone(),
                equation: names[e].clone(),
                actual: la[k],
                predicted: lp[k],
            });
        }
    }
    let report = ValidationReport {
        industry: id,
        r_squared_definition: R_SQUARED_DEFINITION.to_string(),
        equations,
        convexity: convexity_check(&params.c_matrix(), None)?,
        fit_exports: Vec::new(),
    };
    Ok((report, rows))
}

/// Per-hectare and level R² per equation.
pub fn r_squared_csv(reports: &[ValidationReport], format: NumberFormat) -> String {
    let mut out = String::from("industry,equation,per_ha_r2,level_r2\n");
    for r in reports {
        for e in &r.equations {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.industry,
                e.equation,
                format.fmt_opt(e.r_squared_per_ha),
                format.fmt_opt(e.r_squared_level)
            ));
        }
    }
    out
}

pub fn monotonicity_csv(reports: &[ValidationReport], format: NumberFormat) -> String {
    let mut out = String::from("industry,equation,monotonicity_share\n");
    for r in reports {
        for e in &r.equations {
            out.push_str(&format!(
                "{},{},{}\n",
                r.industry,
                e.equation,
                format.fmt(e.monotonicity_share)
            ));
        }
    }
    out
}
