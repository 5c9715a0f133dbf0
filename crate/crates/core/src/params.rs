//! Coefficient blocks of the restricted normalised-quadratic profit function.
//!
//! All blocks are stored in netput convention (inputs negative). The JSON
//! layout uses the field names `a`, `b`, `C`, `D`, `alpha`, `a_m`,
//! `numeraire_effects`, `covariance`, `industry_id`, `per_hectare`; control
//! shifters live in `gamma` / `gamma_m` and the ordering of every block is
//! recorded under `names`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::industry::{IndustryId, IndustrySpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockNames {
    pub netputs: Vec<String>,
    pub fixed_inputs: Vec<String>,
    pub controls: Vec<String>,
}

/// Derivatives involving the numeraire price, evaluated at one price point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumeraireEffects {
    /// Normalised netput prices at which the effects were evaluated.
    pub eval_prices: Vec<f64>,
    /// Raw numeraire price P_m at the evaluation point.
    pub numeraire_price: f64,
    /// ∂netput_i/∂P_m = −(1/P_m) Σ_j c_ij p_j. For outputs this is c_im; for
    /// inputs the quantity effect c_hm is its negation.
    pub netput_wrt_numeraire: Vec<f64>,
    /// c_mi = ∂x_m/∂p_i = Σ_j c_ij p_j.
    pub numeraire_wrt_netput: Vec<f64>,
    /// c_mm = ∂x_m/∂P_m = −(1/P_m) Σ_i Σ_j c_ij p_i p_j.
    pub numeraire_own: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covariance {
    /// Free-parameter labels, aligned with the rows of `matrix`.
    pub names: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
}

impl Covariance {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn variance(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.matrix[i][i])
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.names.len();
        DMatrix::from_fn(n, n, |i, j| self.matrix[i][j])
    }
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub industry_id: IndustryId,
    pub per_hectare: bool,
    pub names: BlockNames,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub C: Vec<Vec<f64>>,
    pub D: Vec<Vec<f64>>,
    pub alpha: Vec<Vec<f64>>,
    #[serde(default)]
    pub gamma: Vec<Vec<f64>>,
    #[serde(default)]
    pub gamma_m: Vec<f64>,
    pub a_m: f64,
    #[serde(default)]
    pub numeraire_effects: Option<NumeraireEffects>,
    #[serde(default)]
    pub covariance: Option<Covariance>,
}

fn zeros(r: usize, c: usize) -> Vec<Vec<f64>> {
    vec![vec![0.0; c]; r]
}

impl ParameterSet {
    /// All-zero parameter set shaped for `spec`.
    pub fn zeros(spec: &IndustrySpec) -> Self {
        let n = spec.n_netputs();
        let k = spec.n_fixed();
        let c = spec.n_controls();
        ParameterSet {
            industry_id: spec.industry_id,
            per_hectare: spec.per_hectare,
            names: BlockNames {
                netputs: spec.netput_names(),
                fixed_inputs: spec.fixed_input_names.clone(),
                controls: spec.control_names.clone(),
            },
            a: vec![0.0; n],
            b: vec![0.0; k],
            C: zeros(n, n),
            D: zeros(k, k),
            alpha: zeros(n, k),
            gamma: zeros(n, c),
            gamma_m: vec![0.0; c],
            a_m: 0.0,
            numeraire_effects: None,
            covariance: None,
        }
    }

    pub fn n_netputs(&self) -> usize {
        self.a.len()
    }

    pub fn n_fixed(&self) -> usize {
        self.b.len()
    }

    pub fn n_controls(&self) -> usize {
        self.gamma_m.len()
    }

    /// Shape and symmetry checks. Symmetry of C and D must be exact.
    pub fn validate(&self) -> Result<()> {
        let n = self.a.len();
        let k = self.b.len();
        let c = self.gamma_m.len();
        let shape = |what: &str, m: &Vec<Vec<f64>>, r: usize, cols: usize| -> Result<()> {
            if m.len() != r {
                return Err(Error::dim(format!("{what} rows"), r, m.len()));
            }
            for row in m {
                if row.len() != cols {
                    return Err(Error::dim(format!("{what} columns"), cols, row.len()));
                }
            }
            Ok(())
        };
        shape("C", &self.C, n, n)?;
        shape("D", &self.D, k, k)?;
        shape("alpha", &self.alpha, n, k)?;
        shape("gamma", &self.gamma, n, c)?;
        if self.names.netputs.len() != n {
            return Err(Error::dim("netput names", n, self.names.netputs.len()));
        }
        if self.names.fixed_inputs.len() != k {
            return Err(Error::dim("fixed input names", k, self.names.fixed_inputs.len()));
        }
        if self.names.controls.len() != c {
            return Err(Error::dim("control names", c, self.names.controls.len()));
        }
        for i in 0..n {
            for j in 0..i {
                if self.C[i][j] != self.C[j][i] {
                    return Err(Error::InvalidParameters(format!("C not symmetric at ({i},{j})")));
                }
            }
        }
        for i in 0..k {
            for j in 0..i {
                if self.D[i][j] != self.D[j][i] {
                    return Err(Error::InvalidParameters(format!("D not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(())
    }

    /// Checks that this parameter set was estimated for `spec`.
    pub fn check_matches(&self, spec: &IndustrySpec) -> Result<()> {
        if self.industry_id != spec.industry_id {
            return Err(Error::IndustryMismatch {
                expected: spec.industry_id.to_string(),
                got: self.industry_id.to_string(),
            });
        }
        if self.names.netputs != spec.netput_names()
            || self.names.fixed_inputs != spec.fixed_input_names
            || self.names.controls != spec.control_names
        {
            return Err(Error::InvalidParameters(
                "block names differ from the industry spec".into(),
            ));
        }
        Ok(())
    }

    pub fn c_matrix(&self) -> DMatrix<f64> {
        let n = self.a.len();
        DMatrix::from_fn(n, n, |i, j| self.C[i][j])
    }

    pub fn d_matrix(&self) -> DMatrix<f64> {
        let k = self.b.len();
        DMatrix::from_fn(k, k, |i, j| self.D[i][j])
    }

    pub fn alpha_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.a.len(), self.b.len(), |i, j| self.alpha[i][j])
    }

    pub fn gamma_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.a.len(), self.gamma_m.len(), |i, j| self.gamma[i][j])
    }

    pub fn a_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.a)
    }

    /// Sets C[i][j] and C[j][i] together.
    pub fn set_c(&mut self, i: usize, j: usize, v: f64) {
        self.C[i][j] = v;
        self.C[j][i] = v;
    }

    pub fn set_d(&mut self, i: usize, j: usize, v: f64) {
        self.D[i][j] = v;
        self.D[j][i] = v;
    }

    /// Copy with every block that scales with quantities multiplied by
    /// `factor` (a, b, C, D, alpha, gamma, a_m). Used to move between
    /// per-hectare and farm-level responses.
    pub fn scaled(&self, factor: f64) -> ParameterSet {
        let sm =
            |m: &Vec<Vec<f64>>| -> Vec<Vec<f64>> { m.iter().map(|r| r.iter().map(|v| v * factor).collect()).collect() };
        let sv = |v: &Vec<f64>| -> Vec<f64> { v.iter().map(|x| x * factor).collect() };
        ParameterSet {
            industry_id: self.industry_id,
            per_hectare: self.per_hectare,
            names: self.names.clone(),
            a: sv(&self.a),
            b: sv(&self.b),
            C: sm(&self.C),
            D: sm(&self.D),
            alpha: sm(&self.alpha),
            gamma: sm(&self.gamma),
            gamma_m: sv(&self.gamma_m),
            a_m: self.a_m * factor,
            numeraire_effects: None,
            covariance: None,
        }
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let p: ParameterSet = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()?).map_err(|e| Error::io(path, e))
    }

    /// Labels of the free parameters of the netput system, in the order used
    /// by the estimator: a, upper triangle of C, included alpha cells, gamma.
    pub fn system_parameter_names(spec: &IndustrySpec) -> Vec<String> {
        let nets = spec.netput_names();
        let mut out = Vec::new();
        for n in &nets {
            out.push(format!("a[{n}]"));
        }
        for i in 0..nets.len() {
            for j in i..nets.len() {
                out.push(format!("C[{},{}]", nets[i], nets[j]));
            }
        }
        for (i, n) in nets.iter().enumerate() {
            for (f, z) in spec.fixed_input_names.iter().enumerate() {
                if spec.alpha_included(i, f) {
                    out.push(format!("alpha[{n},{z}]"));
                }
            }
        }
        for n in &nets {
            for w in &spec.control_names {
                out.push(format!("gamma[{n},{w}]"));
            }
        }
        out
    }

    /// Labels of the numeraire-equation parameters: a_m, b, upper D, gamma_m.
    pub fn numeraire_parameter_names(spec: &IndustrySpec) -> Vec<String> {
        let fixed = spec.numeraire_fixed();
        let mut out = vec!["a_m".to_string()];
        for &f in &fixed {
            out.push(format!("b[{}]", spec.fixed_input_names[f]));
        }
        for (x, &l) in fixed.iter().enumerate() {
            for &f in &fixed[x..] {
                out.push(format!(
                    "D[{},{}]",
                    spec.fixed_input_names[l], spec.fixed_input_names[f]
                ));
            }
        }
        for w in &spec.control_names {
            out.push(format!("gamma_m[{w}]"));
        }
        out
    }

    /// Free-parameter values aligned with [`Self::system_parameter_names`]
    /// followed by [`Self::numeraire_parameter_names`].
    pub fn free_parameters(&self, spec: &IndustrySpec) -> Vec<(String, f64)> {
        let n = spec.n_netputs();
        let nets = spec.netput_names();
        let mut out = Vec::new();
        for i in 0..n {
            out.push((format!("a[{}]", nets[i]), self.a[i]));
        }
        for i in 0..n {
            for j in i..n {
                out.push((format!("C[{},{}]", nets[i], nets[j]), self.C[i][j]));
            }
        }
        for i in 0..n {
            for (f, z) in spec.fixed_input_names.iter().enumerate() {
                if spec.alpha_included(i, f) {
                    out.push((format!("alpha[{},{z}]", nets[i]), self.alpha[i][f]));
                }
            }
        }
        for i in 0..n {
            for (c, w) in spec.control_names.iter().enumerate() {
                out.push((format!("gamma[{},{w}]", nets[i]), self.gamma[i][c]));
            }
        }
        let fixed = spec.numeraire_fixed();
        out.push(("a_m".to_string(), self.a_m));
        for &f in &fixed {
            out.push((format!("b[{}]", spec.fixed_input_names[f]), self.b[f]));
        }
        for (x, &l) in fixed.iter().enumerate() {
            for &f in &fixed[x..] {
                out.push((
                    format!("D[{},{}]", spec.fixed_input_names[l], spec.fixed_input_names[f]),
                    self.D[l][f],
                ));
            }
        }
        for (c, w) in spec.control_names.iter().enumerate() {
            out.push((format!("gamma_m[{w}]"), self.gamma_m[c]));
        }
        out
    }

    /// Standard error of a labelled free parameter, when a covariance is held.
    pub fn standard_error(&self, name: &str) -> Option<f64> {
        self.covariance
            .as_ref()
            .and_then(|c| c.variance(name))
            .map(|v| v.max(0.0).sqrt())
    }
}
