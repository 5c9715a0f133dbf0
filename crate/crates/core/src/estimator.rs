//! System estimation of the netput equations.
//!
//! Every equation shares the regressors (1, p, z, w), so three-stage least
//! squares with the regressors as their own instruments is the same
//! estimator as iterated restricted SUR; the latter is what is implemented.
//! Symmetry of C and the exclusion of planted-area shares from foreign
//! equations are imposed by solving in the free-parameter basis
//! `vec(B) = R θ`. Homogeneity is structural: prices enter normalised.
//!
//! The numeraire equation does not share the netput regressors. It is
//! estimated afterwards by least squares of `−x_m + ½ p'Ĉp` on
//! (1, z, z_l z_f, w), which identifies a_m, b, D and the control shifters.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result, RowError};
use crate::industry::{IndustryId, IndustrySpec};
use crate::output::NumberFormat;
use crate::panel::{mean_prices, FarmPanel};
use crate::params::{Covariance, NumeraireEffects, ParameterSet};
use crate::prices::PriceVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    /// Weight observations by their survey weight.
    pub weighted: bool,
    /// Estimate a_m, b, D from the numeraire equation (otherwise zero).
    pub numeraire_equation: bool,
    pub max_iterations: usize,
    /// Relative parameter change below which iteration stops.
    pub tolerance: f64,
    /// Singular values below this fraction of the largest mark rank loss.
    pub rank_tolerance: f64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            weighted: false,
            numeraire_equation: true,
            max_iterations: 100,
            tolerance: 1e-8,
            rank_tolerance: 1e-10,
        }
    }
}

/// Regressors and dependent values of the numeraire equation.
#[derive(Debug, Clone, PartialEq)]
pub struct NumeraireDesign {
    /// −x_m on the model scale.
    pub neg_quantity: DVector<f64>,
    /// Normalised prices, one row per observation.
    pub prices: DMatrix<f64>,
    pub x: DMatrix<f64>,
    pub columns: Vec<String>,
    pub parameter_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemDesign {
    pub spec: Option<IndustrySpec>,
    pub equations: Vec<String>,
    /// Regressor labels, shared by every equation.
    pub columns: Vec<String>,
    /// T × N dependent netputs.
    pub y: DMatrix<f64>,
    /// T × K regressors.
    pub x: DMatrix<f64>,
    /// NK × P map from free parameters to `vec(B)`, B being K × N.
    pub restriction: DMatrix<f64>,
    pub parameter_names: Vec<String>,
    pub weights: Option<Vec<f64>>,
    /// (farm_id, year) per row.
    pub observations: Vec<(String, i32)>,
    /// Survey weights per row (also used for evaluation points).
    pub survey_weights: Vec<f64>,
    /// Area divisor per row (1 for level models).
    pub divisors: Vec<f64>,
    pub numeraire: Option<NumeraireDesign>,
    /// Survey-weighted mean raw prices and numeraire price.
    pub mean_prices: Option<PriceVector>,
}

impl SystemDesign {
    /// A bare system without numeraire equation or industry context.
    pub fn new(
        equations: Vec<String>,
        columns: Vec<String>,
        y: DMatrix<f64>,
        x: DMatrix<f64>,
        restriction: DMatrix<f64>,
        parameter_names: Vec<String>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        let t = y.nrows();
        if x.nrows() != t {
            return Err(Error::dim("regressor rows", t, x.nrows()));
        }
        if y.ncols() != equations.len() {
            return Err(Error::dim("equations", y.ncols(), equations.len()));
        }
        if x.ncols() != columns.len() {
            return Err(Error::dim("columns", x.ncols(), columns.len()));
        }
        if restriction.nrows() != x.ncols() * y.ncols() {
            return Err(Error::dim(
                "restriction rows",
                x.ncols() * y.ncols(),
                restriction.nrows(),
            ));
        }
        if restriction.ncols() != parameter_names.len() {
            return Err(Error::dim(
                "parameter names",
                restriction.ncols(),
                parameter_names.len(),
            ));
        }
        if let Some(w) = &weights {
            if w.len() != t {
                return Err(Error::dim("weights", t, w.len()));
            }
        }
        Ok(SystemDesign {
            spec: None,
            equations,
            columns,
            y,
            x,
            restriction,
            parameter_names,
            weights,
            observations: (0..t).map(|i| (i.to_string(), 0)).collect(),
            survey_weights: vec![1.0; t],
            divisors: vec![1.0; t],
            numeraire: None,
            mean_prices: None,
        })
    }

    pub fn n_observations(&self) -> usize {
        self.y.nrows()
    }

    pub fn n_parameters(&self) -> usize {
        self.restriction.ncols()
    }

    /// Regressor column carrying each free parameter (first occurrence).
    fn parameter_columns(&self) -> Vec<usize> {
        let k = self.x.ncols();
        (0..self.n_parameters())
            .map(|p| {
                (0..self.restriction.nrows())
                    .find(|&r| self.restriction[(r, p)] != 0.0)
                    .map(|r| r % k)
                    .unwrap_or(0)
            })
            .collect()
    }

    pub fn with_weights(mut self, weights: Option<Vec<f64>>) -> Self {
        self.weights = weights;
        self
    }
}

/// Builds the stacked system for one industry. Quantities are divided by the
/// area divisor for per-hectare industries; inputs enter as negative netputs.
pub fn build_design(panel: &FarmPanel, spec: &IndustrySpec, weighted: bool) -> Result<SystemDesign> {
    spec.validate()?;
    let recs = panel.industry_records(spec.industry_id);
    if recs.is_empty() {
        return Err(Error::Empty(format!("panel for industry {}", spec.industry_id)));
    }
    let t = recs.len();
    let n = spec.n_netputs();
    let kf = spec.n_fixed();
    let nc = spec.n_controls();
    let k = 1 + n + kf + nc;
    let mut y = DMatrix::zeros(t, n);
    let mut x = DMatrix::zeros(t, k);
    let mut neg_xm = DVector::zeros(t);
    let mut pmat = DMatrix::zeros(t, n);
    let mut divisors = Vec::with_capacity(t);
    let mut errors = Vec::new();
    for (row, r) in recs.iter().enumerate() {
        let row_err = |column: &str, message: String| RowError {
            line: row + 2,
            farm_id: Some(r.farm_id.clone()),
            column: Some(column.to_string()),
            message,
        };
        if r.quantities.len() != n || r.fixed.len() != kf || r.controls.len() != nc {
            errors.push(row_err("*", "record does not match the industry spec".into()));
            continue;
        }
        let d = match r.area_divisor(spec) {
            Ok(d) => d,
            Err(e) => {
                errors.push(row_err("area", e.to_string()));
                continue;
            }
        };
        divisors.push(d);
        let p = r.prices.normalized();
        for i in 0..n {
            y[(row, i)] = spec.quantity_sign(i) * r.quantities[i] / d;
            pmat[(row, i)] = p[i];
        }
        neg_xm[row] = -r.numeraire_quantity / d;
        x[(row, 0)] = 1.0;
        for i in 0..n {
            x[(row, 1 + i)] = p[i];
        }
        for f in 0..kf {
            x[(row, 1 + n + f)] = r.fixed[f];
        }
        for c in 0..nc {
            x[(row, 1 + n + kf + c)] = r.controls[c];
        }
    }
    if !errors.is_empty() {
        return Err(Error::PanelValidation(errors));
    }

    let nets = spec.netput_names();
    let mut columns = vec!["const".to_string()];
    columns.extend(nets.iter().map(|n| format!("p_{n}")));
    columns.extend(spec.fixed_input_names.iter().map(|f| format!("z_{f}")));
    columns.extend(spec.control_names.iter().cloned());

    let parameter_names = ParameterSet::system_parameter_names(spec);
    let mut restriction = DMatrix::zeros(n * k, parameter_names.len());
    let mut p = 0;
    for i in 0..n {
        restriction[(i * k, p)] = 1.0;
        p += 1;
    }
    for i in 0..n {
        for j in i..n {
            restriction[(i * k + 1 + j, p)] = 1.0;
            restriction[(j * k + 1 + i, p)] = 1.0;
            p += 1;
        }
    }
    for i in 0..n {
        for f in 0..kf {
            if spec.alpha_included(i, f) {
                restriction[(i * k + 1 + n + f, p)] = 1.0;
                p += 1;
            }
        }
    }
    for i in 0..n {
        for c in 0..nc {
            restriction[(i * k + 1 + n + kf + c, p)] = 1.0;
            p += 1;
        }
    }
    debug_assert_eq!(p, parameter_names.len());

    // numeraire equation regressors
    let nf = spec.numeraire_fixed();
    let mut ncols = vec!["const".to_string()];
    ncols.extend(nf.iter().map(|&f| format!("z_{}", spec.fixed_input_names[f])));
    for (a, &l) in nf.iter().enumerate() {
        for &f in &nf[a..] {
            ncols.push(format!(
                "z_{}*z_{}",
                spec.fixed_input_names[l], spec.fixed_input_names[f]
            ));
        }
    }
    ncols.extend(spec.control_names.iter().cloned());
    let q = ncols.len();
    let mut xm = DMatrix::zeros(t, q);
    for (row, r) in recs.iter().enumerate() {
        let mut c = 0;
        xm[(row, c)] = 1.0;
        c += 1;
        for &f in &nf {
            xm[(row, c)] = r.fixed[f];
            c += 1;
        }
        for (a, &l) in nf.iter().enumerate() {
            for &f in &nf[a..] {
                let half = if l == f { 0.5 } else { 1.0 };
                xm[(row, c)] = half * r.fixed[l] * r.fixed[f];
                c += 1;
            }
        }
        for v in &r.controls {
            xm[(row, c)] = *v;
            c += 1;
        }
    }

    let survey_weights: Vec<f64> = recs.iter().map(|r| r.weight).collect();
    let mean_prices = mean_prices(&recs)?;

    Ok(SystemDesign {
        spec: Some(spec.clone()),
        equations: nets,
        columns,
        y,
        x,
        restriction,
        parameter_names,
        weights: weighted.then(|| survey_weights.clone()),
        observations: recs.iter().map(|r| (r.farm_id.clone(), r.year)).collect(),
        survey_weights,
        divisors,
        numeraire: Some(NumeraireDesign {
            neg_quantity: neg_xm,
            prices: pmat,
            x: xm,
            columns: ncols,
            parameter_names: ParameterSet::numeraire_parameter_names(spec),
        }),
        mean_prices: Some(mean_prices),
    })
}

/// Iteration history of the feasible-GLS loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLog {
    pub iterations: usize,
    /// Relative parameter change after each GLS step.
    pub changes: Vec<f64>,
    pub converged: bool,
}

/// Matrix-level result of the system fit.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemFit {
    pub theta: DVector<f64>,
    pub covariance: DMatrix<f64>,
    /// Residual covariance across equations (dof corrected).
    pub sigma: DMatrix<f64>,
    pub log: ConvergenceLog,
}

fn row_scaled(m: &DMatrix<f64>, s: &Option<Vec<f64>>) -> DMatrix<f64> {
    match s {
        None => m.clone(),
        Some(s) => {
            let mut out = m.clone();
            for (r, v) in s.iter().enumerate() {
                out.row_mut(r).scale_mut(*v);
            }
            out
        }
    }
}

/// Square roots of weights normalised to mean one.
fn sqrt_weights(w: &Option<Vec<f64>>) -> Result<Option<Vec<f64>>> {
    match w {
        None => Ok(None),
        Some(w) => {
            if w.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::InvalidParameters("estimation weights must be positive".into()));
            }
            let mean = w.iter().sum::<f64>() / w.len() as f64;
            Ok(Some(w.iter().map(|v| (v / mean).sqrt()).collect()))
        }
    }
}

/// Symmetric inverse square root with eigenvalues floored at
/// `1e-10 · λ_max`. A zero matrix yields `None`.
fn inverse_sqrt(sigma: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let eig = SymmetricEigen::new(sigma.clone());
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return None;
    }
    let floor = 1e-10 * max;
    let d = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|l| 1.0 / l.max(floor).sqrt()),
    );
    let v = &eig.eigenvectors;
    Some(v * DMatrix::from_diagonal(&d) * v.transpose())
}

/// (L' ⊗ R_x) R, built without forming the Kronecker product.
fn gls_matrix(rx: &DMatrix<f64>, l: &DMatrix<f64>, restriction: &DMatrix<f64>) -> DMatrix<f64> {
    let k = rx.nrows();
    let n = l.nrows();
    let p = restriction.ncols();
    // R_x B_p for each parameter column, B_p = reshape(R[:,p], K, N)
    let mut out = DMatrix::zeros(n * k, p);
    for c in 0..p {
        let b = DMatrix::from_column_slice(k, n, restriction.column(c).as_slice());
        let m = rx * b * l;
        out.column_mut(c).copy_from_slice(m.as_slice());
    }
    out
}

struct LsSolution {
    theta: DVector<f64>,
    /// (M'M)^{-1}
    inverse_information: DMatrix<f64>,
    scale: DVector<f64>,
}

/// Least squares via column-equilibrated SVD. With `check_rank`, columns
/// involved in numerically null directions are reported by name.
fn solve_ls(
    m: &DMatrix<f64>,
    b: &DVector<f64>,
    names: &[String],
    rank_tol: f64,
    check_rank: bool,
) -> Result<LsSolution> {
    let p = m.ncols();
    let scale = DVector::from_iterator(
        p,
        (0..p).map(|c| {
            let n = m.column(c).norm();
            if n > 0.0 {
                n
            } else {
                1.0
            }
        }),
    );
    let mut me = m.clone();
    for c in 0..p {
        me.column_mut(c).unscale_mut(scale[c]);
    }
    let svd = me.svd(true, true);
    let u = svd.u.as_ref().expect("u computed");
    let vt = svd.v_t.as_ref().expect("v computed");
    let s = &svd.singular_values;
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let cutoff = rank_tol * smax;
    let null: Vec<usize> = (0..s.len()).filter(|&i| !(s[i] > cutoff)).collect();
    if check_rank && (!null.is_empty() || m.nrows() < p || !(smax > 0.0)) {
        let mut flagged = vec![false; p];
        for &i in &null {
            let v = vt.row(i);
            let vmax = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            for c in 0..p {
                if v[c].abs() > 0.1 * vmax {
                    flagged[c] = true;
                }
            }
        }
        if null.is_empty() {
            flagged = vec![true; p];
        }
        let columns = (0..p).filter(|&c| flagged[c]).map(|c| names[c].clone()).collect();
        return Err(Error::RankDeficient { columns });
    }
    let mut inv_s = DVector::zeros(s.len());
    for i in 0..s.len() {
        if s[i] > f64::EPSILON * smax {
            inv_s[i] = 1.0 / s[i];
        }
    }
    let utb = u.transpose() * b;
    let coef = vt.transpose() * DVector::from_iterator(s.len(), (0..s.len()).map(|i| inv_s[i] * utb[i]));
    let theta = coef.component_div(&scale);
    let v = vt.transpose();
    let mut vs = v.clone();
    for i in 0..s.len() {
        vs.column_mut(i).scale_mut(inv_s[i]);
    }
    let mut inv = &vs * vs.transpose();
    for r in 0..p {
        for c in 0..p {
            inv[(r, c)] /= scale[r] * scale[c];
        }
    }
    Ok(LsSolution {
        theta,
        inverse_information: inv,
        scale,
    })
}

fn unvec(restriction: &DMatrix<f64>, theta: &DVector<f64>, k: usize, n: usize) -> DMatrix<f64> {
    let v = restriction * theta;
    DMatrix::from_column_slice(k, n, v.as_slice())
}

/// Names the regressor columns behind a rank failure reported in terms of
/// free parameters.
fn regressor_names(design: &SystemDesign, e: Error) -> Error {
    match e {
        Error::RankDeficient { columns } => {
            let pc = design.parameter_columns();
            let mut cols: Vec<usize> = columns
                .iter()
                .filter_map(|c| design.parameter_names.iter().position(|p| p == c))
                .map(|p| pc[p])
                .collect();
            cols.sort_unstable();
            cols.dedup();
            Error::RankDeficient {
                columns: cols.into_iter().map(|c| design.columns[c].clone()).collect(),
            }
        }
        other => other,
    }
}

/// Subtracts the (weighted) mean from every column except the leading
/// constant. Returns the centred matrix and the means, 0 for the constant.
fn center_columns(x: &DMatrix<f64>, weights: Option<&[f64]>) -> (DMatrix<f64>, Vec<f64>) {
    let (t, k) = x.shape();
    let total: f64 = weights.map_or(t as f64, |w| w.iter().sum());
    let mut means = vec![0.0; k];
    let mut out = x.clone();
    for c in 1..k {
        let sum: f64 = match weights {
            Some(w) => (0..t).map(|r| w[r] * x[(r, c)]).sum(),
            None => x.column(c).sum(),
        };
        means[c] = sum / total;
        out.column_mut(c).add_scalar_mut(-means[c]);
    }
    (out, means)
}

/// Maps free parameters estimated on centred regressors back to the
/// original ones: only the intercepts change, a_i = a_i^c − Σ_k x̄_k B_ki.
fn uncentering(restriction: &DMatrix<f64>, means: &[f64], k: usize, n: usize) -> DMatrix<f64> {
    let p = restriction.ncols();
    let mut t = DMatrix::identity(p, p);
    for i in 0..n {
        let Some(a) = (0..p).find(|&q| restriction[(i * k, q)] != 0.0) else {
            continue;
        };
        for q in 0..p {
            let shift: f64 = (1..k).map(|c| means[c] * restriction[(i * k + c, q)]).sum();
            t[(a, q)] -= shift;
        }
    }
    t
}

/// Iterated feasible GLS of the restricted system.
pub fn fit_system(design: &SystemDesign, opts: &EstimateOptions) -> Result<SystemFit> {
    let t = design.n_observations();
    let n = design.y.ncols();
    let k = design.x.ncols();
    let p = design.n_parameters();
    if t <= k || t * n <= p {
        return Err(Error::TooFewObservations {
            observations: t,
            parameters: p,
        });
    }
    let sw = sqrt_weights(&design.weights)?;
    let (xc, means) = center_columns(&design.x, design.weights.as_deref());
    let xw = row_scaled(&xc, &sw);
    let yw = row_scaled(&design.y, &sw);
    let qr = xw.clone().qr();
    let q = qr.q();
    let rx = qr.r();
    let yt = q.transpose() * &yw;
    let dof = (t - k) as f64;

    let residual_cov = |theta: &DVector<f64>| -> DMatrix<f64> {
        let b = unvec(&design.restriction, theta, k, n);
        let u = &yw - &xw * b;
        u.transpose() * u / dof
    };
    let gls = |l: &DMatrix<f64>, check: bool| -> Result<LsSolution> {
        let m = gls_matrix(&rx, l, &design.restriction);
        let target = &yt * l;
        let b = DVector::from_column_slice(target.as_slice());
        solve_ls(&m, &b, &design.parameter_names, opts.rank_tolerance, check).map_err(|e| regressor_names(design, e))
    };

    let identity = DMatrix::identity(n, n);
    let first = gls(&identity, true)?;
    let scale = first.scale.clone();
    let mut theta = first.theta;
    let mut sigma = residual_cov(&theta);
    let mut changes = Vec::new();
    let mut converged = false;
    let mut solution_inv = None;
    for _ in 0..opts.max_iterations {
        let (l, zero) = match inverse_sqrt(&sigma) {
            Some(l) => (l, false),
            None => (identity.clone(), true),
        };
        let sol = gls(&l, false)?;
        let diff = (&sol.theta - &theta).component_mul(&scale).norm();
        let size = sol.theta.component_mul(&scale).norm();
        let change = if size > 0.0 { diff / size } else { diff };
        changes.push(change);
        theta = sol.theta;
        sigma = residual_cov(&theta);
        if zero {
            solution_inv = Some(DMatrix::zeros(p, p));
            converged = true;
            break;
        }
        if change < opts.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations: changes.len(),
            last_change: changes.last().copied().unwrap_or(f64::NAN),
            trace: changes,
        });
    }
    let covariance = match solution_inv {
        Some(z) => z,
        None => match inverse_sqrt(&sigma) {
            None => DMatrix::zeros(p, p),
            Some(l) => gls(&l, false)?.inverse_information,
        },
    };
    let back = uncentering(&design.restriction, &means, k, n);
    let theta = &back * theta;
    let covariance = &back * covariance * back.transpose();
    Ok(SystemFit {
        theta,
        covariance,
        sigma,
        log: ConvergenceLog {
            iterations: changes.len(),
            changes,
            converged,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterEstimate {
    pub name: String,
    pub value: f64,
    pub se: f64,
    /// Two-sided normal p-value.
    pub p_value: f64,
}

/// Two-sided p-value of `value / se` under the standard normal.
pub fn p_value(value: f64, se: f64) -> f64 {
    if se > 0.0 {
        erfc((value / se).abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
    } else if value == 0.0 {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub industry: IndustryId,
    pub method: String,
    pub observations: usize,
    pub equations: Vec<String>,
    pub params: ParameterSet,
    pub estimates: Vec<ParameterEstimate>,
    pub residual_covariance: Vec<Vec<f64>>,
    pub numeraire_residual_variance: Option<f64>,
    pub convergence: ConvergenceLog,
    pub options: EstimateOptions,
}

pub const METHOD: &str = "iterated restricted SUR (equivalent to 3SLS with the regressors as their own instruments)";

struct NumeraireFit {
    theta: DVector<f64>,
    covariance: DMatrix<f64>,
    variance: f64,
}

fn numeraire_dependent(nd: &NumeraireDesign, params: &ParameterSet) -> DVector<f64> {
    let c = params.c_matrix();
    let mut d = nd.neg_quantity.clone();
    for r in 0..d.len() {
        let p = nd.prices.row(r).transpose();
        d[r] += 0.5 * (p.transpose() * &c * &p)[(0, 0)];
    }
    d
}

fn fit_numeraire(
    nd: &NumeraireDesign,
    params: &ParameterSet,
    weights: &Option<Vec<f64>>,
    rank_tol: f64,
) -> Result<NumeraireFit> {
    let t = nd.x.nrows();
    let q = nd.x.ncols();
    if t <= q {
        return Err(Error::TooFewObservations {
            observations: t,
            parameters: q,
        });
    }
    let sw = sqrt_weights(weights)?;
    let xw = row_scaled(&nd.x, &sw);
    let dep = numeraire_dependent(nd, params);
    let dw = match &sw {
        None => dep,
        Some(s) => dep.component_mul(&DVector::from_column_slice(s)),
    };
    let sol = solve_ls(&xw, &dw, &nd.columns, rank_tol, true)?;
    let resid = &dw - &xw * &sol.theta;
    let variance = resid.norm_squared() / (t - q) as f64;
    Ok(NumeraireFit {
        covariance: sol.inverse_information * variance,
        theta: sol.theta,
        variance,
    })
}

fn assemble(spec: &IndustrySpec, theta: &DVector<f64>, numeraire: Option<&DVector<f64>>) -> ParameterSet {
    let n = spec.n_netputs();
    let kf = spec.n_fixed();
    let nc = spec.n_controls();
    let mut ps = ParameterSet::zeros(spec);
    let mut p = 0;
    for i in 0..n {
        ps.a[i] = theta[p];
        p += 1;
    }
    for i in 0..n {
        for j in i..n {
            ps.set_c(i, j, theta[p]);
            p += 1;
        }
    }
    for i in 0..n {
        for f in 0..kf {
            if spec.alpha_included(i, f) {
                ps.alpha[i][f] = theta[p];
                p += 1;
            }
        }
    }
    for i in 0..n {
        for c in 0..nc {
            ps.gamma[i][c] = theta[p];
            p += 1;
        }
    }
    if let Some(m) = numeraire {
        let nf = spec.numeraire_fixed();
        let mut x = 0;
        ps.a_m = m[x];
        x += 1;
        for &f in &nf {
            ps.b[f] = m[x];
            x += 1;
        }
        for (a, &l) in nf.iter().enumerate() {
            for &f in &nf[a..] {
                ps.set_d(l, f, m[x]);
                x += 1;
            }
        }
        for c in 0..nc {
            ps.gamma_m[c] = m[x];
            x += 1;
        }
    }
    ps
}

/// Full estimation: system fit, numeraire equation, derived numeraire
/// effects at the survey-weighted mean prices, and standard errors.
pub fn estimate(design: &SystemDesign, opts: &EstimateOptions) -> Result<EstimateReport> {
    let spec = design
        .spec
        .as_ref()
        .ok_or_else(|| Error::InvalidSpec("design carries no industry spec".into()))?;
    let fit = fit_system(design, opts)?;
    let mut params = assemble(spec, &fit.theta, None);
    let mut names = design.parameter_names.clone();
    let mut values: Vec<f64> = fit.theta.iter().copied().collect();
    let mut cov = fit.covariance.clone();
    let mut numeraire_variance = None;
    if opts.numeraire_equation {
        let nd = design
            .numeraire
            .as_ref()
            .ok_or_else(|| Error::InvalidSpec("design has no numeraire equation".into()))?;
        let nfit = fit_numeraire(nd, &params, &design.weights, opts.rank_tolerance)?;
        params = assemble(spec, &fit.theta, Some(&nfit.theta));
        names.extend(nd.parameter_names.iter().cloned());
        values.extend(nfit.theta.iter().copied());
        let (p, q) = (cov.nrows(), nfit.covariance.nrows());
        let mut full = DMatrix::zeros(p + q, p + q);
        full.view_mut((0, 0), (p, p)).copy_from(&cov);
        full.view_mut((p, p), (q, q)).copy_from(&nfit.covariance);
        cov = full;
        numeraire_variance = Some(nfit.variance);
    }
    let covariance = Covariance {
        names: names.clone(),
        matrix: (0..cov.nrows()).map(|r| cov.row(r).iter().copied().collect()).collect(),
    };
    params.covariance = Some(covariance);
    if let Some(mp) = &design.mean_prices {
        params = recover_numeraire_effects(&params, mp)?;
    }
    let estimates = names
        .iter()
        .zip(&values)
        .enumerate()
        .map(|(i, (name, &value))| {
            let se = cov[(i, i)].max(0.0).sqrt();
            ParameterEstimate {
                name: name.clone(),
                value,
                se,
                p_value: p_value(value, se),
            }
        })
        .collect();
    Ok(EstimateReport {
        industry: spec.industry_id,
        method: METHOD.to_string(),
        observations: design.n_observations(),
        equations: design.equations.clone(),
        params,
        estimates,
        residual_covariance: (0..fit.sigma.nrows())
            .map(|r| fit.sigma.row(r).iter().copied().collect())
            .collect(),
        numeraire_residual_variance: numeraire_variance,
        convergence: fit.log,
        options: opts.clone(),
    })
}

/// Builds the design for `spec` from `panel` and estimates it.
pub fn estimate_panel(panel: &FarmPanel, spec: &IndustrySpec, opts: &EstimateOptions) -> Result<EstimateReport> {
    let design = build_design(panel, spec, opts.weighted)?;
    estimate(&design, opts)
}

/// Asymptotic covariance of the restricted GLS estimator evaluated at
/// `params` (residual covariance taken from `params`' own residuals).
pub fn standard_errors(
    design: &SystemDesign,
    params: &ParameterSet,
    opts: &EstimateOptions,
) -> Result<Vec<ParameterEstimate>> {
    let spec = design
        .spec
        .as_ref()
        .ok_or_else(|| Error::InvalidSpec("design carries no industry spec".into()))?;
    params.check_matches(spec)?;
    let free = params.free_parameters(spec);
    let np = design.n_parameters();
    let theta = DVector::from_iterator(np, free.iter().take(np).map(|f| f.1));
    let t = design.n_observations();
    let n = design.y.ncols();
    let k = design.x.ncols();
    let sw = sqrt_weights(&design.weights)?;
    let xw = row_scaled(&design.x, &sw);
    let yw = row_scaled(&design.y, &sw);
    let b = unvec(&design.restriction, &theta, k, n);
    let u = &yw - &xw * b;
    let sigma = u.transpose() * u / (t - k) as f64;
    let rx = xw.qr().r();
    let cov = match inverse_sqrt(&sigma) {
        None => DMatrix::zeros(np, np),
        Some(l) => {
            let m = gls_matrix(&rx, &l, &design.restriction);
            let rhs = DVector::zeros(m.nrows());
            solve_ls(&m, &rhs, &design.parameter_names, opts.rank_tolerance, true)
                .map_err(|e| match e {
                    Error::RankDeficient { .. } => Error::SingularInformation,
                    other => other,
                })?
                .inverse_information
        }
    };
    let mut out: Vec<ParameterEstimate> = (0..np)
        .map(|i| {
            let se = cov[(i, i)].max(0.0).sqrt();
            ParameterEstimate {
                name: free[i].0.clone(),
                value: free[i].1,
                se,
                p_value: p_value(free[i].1, se),
            }
        })
        .collect();
    if opts.numeraire_equation {
        if let Some(nd) = &design.numeraire {
            let q = nd.x.ncols();
            let m = DVector::from_iterator(q, free[np..].iter().map(|f| f.1));
            let xw = row_scaled(&nd.x, &sw);
            let dep = numeraire_dependent(nd, params);
            let dw = match &sw {
                None => dep,
                Some(s) => dep.component_mul(&DVector::from_column_slice(s)),
            };
            let inv = solve_ls(&xw, &dw, &nd.columns, opts.rank_tolerance, true)
                .map_err(|e| match e {
                    Error::RankDeficient { .. } => Error::SingularInformation,
                    other => other,
                })?
                .inverse_information;
            let resid = &dw - &xw * &m;
            let var = resid.norm_squared() / (t - q) as f64;
            for (x, f) in free[np..].iter().enumerate() {
                let se = (inv[(x, x)] * var).max(0.0).sqrt();
                out.push(ParameterEstimate {
                    name: f.0.clone(),
                    value: f.1,
                    se,
                    p_value: p_value(f.1, se),
                });
            }
        }
    }
    Ok(out)
}

/// Fills the numeraire-price effects of `params` at `mean_prices`.
pub fn recover_numeraire_effects(params: &ParameterSet, mean_prices: &PriceVector) -> Result<ParameterSet> {
    let n = params.n_netputs();
    if mean_prices.len() != n {
        return Err(Error::dim("mean prices", n, mean_prices.len()));
    }
    let pm = mean_prices.numeraire();
    let p = mean_prices.normalized();
    let s: Vec<f64> = (0..n).map(|i| (0..n).map(|j| params.C[i][j] * p[j]).sum()).collect();
    let quad: f64 = (0..n).map(|i| p[i] * s[i]).sum();
    let mut out = params.clone();
    out.numeraire_effects = Some(NumeraireEffects {
        eval_prices: p,
        numeraire_price: pm,
        netput_wrt_numeraire: s.iter().map(|v| -v / pm).collect(),
        numeraire_wrt_netput: s,
        numeraire_own: -quad / pm,
    });
    Ok(out)
}

impl EstimateReport {
    pub fn estimate(&self, name: &str) -> Option<&ParameterEstimate> {
        self.estimates.iter().find(|e| e.name == name)
    }

    /// `name,value,se,p_value` rows.
    pub fn to_csv(&self, format: NumberFormat) -> String {
        let mut s = String::from("parameter,value,se,p_value\n");
        for e in &self.estimates {
            s.push_str(&format!(
                "{},{},{},{}\n",
                e.name,
                format.fmt(e.value),
                format.fmt(e.se),
                format.fmt(e.p_value)
            ));
        }
        s
    }
}
