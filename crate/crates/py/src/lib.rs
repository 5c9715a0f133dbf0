use nalgebra::DMatrix;
use netputsim_core::estimator::{estimate_panel, EstimateOptions, EstimateReport};
use netputsim_core::fixtures;
use netputsim_core::netput::predict_all;
use netputsim_core::output::{NumberFormat, TOOL_VERSION};
use netputsim_core::panel::{load_panel, read_panel, save_panel, synth_panel, write_panel};
use netputsim_core::response::{
    elasticities as elasticity_matrix, marginal_effects_at, quartile_profiles, water_demand_curve,
};
use netputsim_core::shock::{simulate as run_scenario, PctDenominator, Scenario};
use netputsim_core::validator::{convexity_check, monotonicity_share, r_squared, validate as run_validation};
use netputsim_core::{
    Error, Exogenous, FarmPanel, IndustryId, IndustrySpec, NetputRole, PanelSchema, ParameterSet, PriceVector,
};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

create_exception!(
    netputsim,
    NetputsimError,
    PyValueError,
    "Raised with (code, message) for any library error."
);

fn err(e: Error) -> PyErr {
    NetputsimError::new_err((e.code(), e.to_string()))
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| err(e.into()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Accepts a JSON string or any JSON-compatible Python object.
fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = match obj.extract::<String>() {
        Ok(s) => s,
        Err(_) => obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?,
    };
    serde_json::from_str(&text).map_err(|e| err(e.into()))
}

fn industry(name: &str) -> PyResult<IndustryId> {
    name.parse().map_err(err)
}

#[pyclass(name = "ParameterSet", module = "netputsim")]
pub struct PyParameterSet {
    inner: ParameterSet,
}

impl PyParameterSet {
    fn price_vector(&self, prices: Vec<f64>, numeraire_price: f64) -> PyResult<PriceVector> {
        PriceVector::new(prices, numeraire_price).map_err(err)
    }
}

#[pymethods]
impl PyParameterSet {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyParameterSet {
            inner: ParameterSet::from_json_str(text).map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyParameterSet {
            inner: ParameterSet::load(path).map_err(err)?,
        })
    }

    /// Parameters transcribed from the published tables.
    #[staticmethod]
    fn published(industry_name: &str) -> PyResult<Self> {
        Ok(PyParameterSet {
            inner: fixtures::published_parameters(industry(industry_name)?),
        })
    }

    /// Ground truth calibrated to the published means.
    #[staticmethod]
    fn calibrated(industry_name: &str) -> PyResult<Self> {
        Ok(PyParameterSet {
            inner: fixtures::calibrated_parameters(industry(industry_name)?),
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json_string().map_err(err)
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(err)
    }

    #[getter]
    fn industry(&self) -> &'static str {
        self.inner.industry_id.as_str()
    }

    #[getter]
    fn netput_names(&self) -> Vec<String> {
        self.inner.names.netputs.clone()
    }

    #[getter]
    fn fixed_input_names(&self) -> Vec<String> {
        self.inner.names.fixed_inputs.clone()
    }

    #[getter]
    fn control_names(&self) -> Vec<String> {
        self.inner.names.controls.clone()
    }

    /// Price response block C (symmetric).
    #[getter]
    fn c(&self) -> Vec<Vec<f64>> {
        self.inner.C.clone()
    }

    #[getter]
    fn a(&self) -> Vec<f64> {
        self.inner.a.clone()
    }

    #[getter]
    fn a_m(&self) -> f64 {
        self.inner.a_m
    }

    /// Model-scale netputs, numeraire and restricted profit at raw prices.
    #[pyo3(signature = (prices, numeraire_price, fixed, controls = Vec::new()))]
    fn predict(
        &self,
        py: Python<'_>,
        prices: Vec<f64>,
        numeraire_price: f64,
        fixed: Vec<f64>,
        controls: Vec<f64>,
    ) -> PyResult<Py<PyAny>> {
        let pv = self.price_vector(prices, numeraire_price)?;
        let exog = Exogenous::new(fixed, controls);
        let v = predict_all(&self.inner, &pv, &exog).map_err(err)?;
        let profit = netputsim_core::netput::restricted_profit(&self.inner, &pv, &exog).map_err(err)?;
        to_py(
            py,
            &serde_json::json!({ "netputs": v.netputs, "numeraire": v.numeraire, "profit": profit }),
        )
    }

    #[pyo3(signature = (prices, numeraire_price, area = 1.0))]
    fn marginal_effects(
        &self,
        py: Python<'_>,
        prices: Vec<f64>,
        numeraire_price: f64,
        area: f64,
    ) -> PyResult<Py<PyAny>> {
        let pv = self.price_vector(prices, numeraire_price)?;
        to_py(py, &marginal_effects_at(&self.inner, &pv, area).map_err(err)?)
    }

    /// Elasticities at raw prices and farm-level quantities (netputs, then
    /// the numeraire; inputs positive).
    #[pyo3(signature = (prices, numeraire_price, quantities, area = 1.0))]
    fn elasticities(
        &self,
        py: Python<'_>,
        prices: Vec<f64>,
        numeraire_price: f64,
        quantities: Vec<f64>,
        area: f64,
    ) -> PyResult<Py<PyAny>> {
        let pv = self.price_vector(prices, numeraire_price)?;
        let m = marginal_effects_at(&self.inner, &pv, area).map_err(err)?;
        to_py(py, &elasticity_matrix(&m, &pv, &quantities).map_err(err)?)
    }

    #[pyo3(signature = (tolerance = None))]
    fn convexity(&self, py: Python<'_>, tolerance: Option<f64>) -> PyResult<Py<PyAny>> {
        to_py(py, &convexity_check(&self.inner.c_matrix(), tolerance).map_err(err)?)
    }

    fn __repr__(&self) -> String {
        format!(
            "ParameterSet(industry='{}', netputs={})",
            self.inner.industry_id,
            self.inner.names.netputs.len()
        )
    }
}

#[pyclass(name = "Panel", module = "netputsim")]
pub struct PyPanel {
    inner: FarmPanel,
}

#[pymethods]
impl PyPanel {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyPanel {
            inner: load_panel(path, &PanelSchema::standard()).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        Ok(PyPanel {
            inner: read_panel(text.as_bytes(), &PanelSchema::standard()).map_err(err)?,
        })
    }

    /// Synthetic panel around the calibrated truth (or `params`), noise sd
    /// a fraction `noise` of each equation's mean quantity.
    #[staticmethod]
    #[pyo3(signature = (industry_name, farms = None, seed = 0, noise = 0.0, params = None))]
    fn synth(
        industry_name: &str,
        farms: Option<usize>,
        seed: u64,
        noise: f64,
        params: Option<PyRef<'_, PyParameterSet>>,
    ) -> PyResult<Self> {
        let id = industry(industry_name)?;
        let truth = match params {
            Some(p) => p.inner.clone(),
            None => fixtures::calibrated_parameters(id),
        };
        if truth.industry_id != id {
            return Err(err(Error::IndustryMismatch {
                expected: id.to_string(),
                got: truth.industry_id.to_string(),
            }));
        }
        let mut cfg = fixtures::synth_config(truth, farms.unwrap_or_else(|| fixtures::farms_for(id, 10)), seed);
        if noise > 0.0 {
            cfg.noise_sd = fixtures::relative_noise_sd(id, noise);
        }
        Ok(PyPanel {
            inner: synth_panel(&cfg).map_err(err)?,
        })
    }

    #[pyo3(signature = (path, pretty = false))]
    fn save(&self, path: &str, pretty: bool) -> PyResult<()> {
        save_panel(&self.inner, path, NumberFormat::from_pretty(pretty), None).map_err(err)
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        write_panel(&self.inner, &mut buf, NumberFormat::Exact, None).map_err(err)?;
        Ok(String::from_utf8(buf).expect("panel CSV is UTF-8"))
    }

    fn industries(&self) -> Vec<&'static str> {
        self.inner.industries().into_iter().map(|id| id.as_str()).collect()
    }

    fn records(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.records())
    }

    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Panel(records={}, industries={:?})",
            self.inner.len(),
            self.industries()
        )
    }
}

#[pyclass(name = "EstimateReport", module = "netputsim")]
pub struct PyEstimateReport {
    inner: EstimateReport,
}

#[pymethods]
impl PyEstimateReport {
    #[getter]
    fn params(&self) -> PyParameterSet {
        PyParameterSet {
            inner: self.inner.params.clone(),
        }
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.convergence.iterations
    }

    #[getter]
    fn observations(&self) -> usize {
        self.inner.observations
    }

    /// `(name, value, se, p_value)` per free parameter.
    fn estimates(&self) -> Vec<(String, f64, f64, f64)> {
        self.inner
            .estimates
            .iter()
            .map(|e| (e.name.clone(), e.value, e.se, e.p_value))
            .collect()
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv(NumberFormat::Exact)
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner)
    }
}

#[pyfunction]
#[pyo3(signature = (panel, industry_name, weighted = false, numeraire_equation = true))]
fn estimate(
    py: Python<'_>,
    panel: PyRef<'_, PyPanel>,
    industry_name: &str,
    weighted: bool,
    numeraire_equation: bool,
) -> PyResult<PyEstimateReport> {
    let id = industry(industry_name)?;
    if !panel.inner.industries().contains(&id) {
        return Err(err(Error::MissingIndustry(id.to_string())));
    }
    let spec = panel.inner.spec(id).map_err(err)?.clone();
    let opts = EstimateOptions {
        weighted,
        numeraire_equation,
        ..EstimateOptions::default()
    };
    let data = &panel.inner;
    let report = py.detach(|| estimate_panel(data, &spec, &opts)).map_err(err)?;
    Ok(PyEstimateReport { inner: report })
}

#[pyfunction]
#[pyo3(signature = (params, panel, scenario, pct_denominator = "scenario"))]
fn simulate(
    py: Python<'_>,
    params: Vec<PyRef<'_, PyParameterSet>>,
    panel: PyRef<'_, PyPanel>,
    scenario: &Bound<'_, PyAny>,
    pct_denominator: &str,
) -> PyResult<Py<PyAny>> {
    let scenario: Scenario = from_py(scenario)?;
    let denom: PctDenominator = pct_denominator.parse().map_err(err)?;
    let sets: Vec<ParameterSet> = params.iter().map(|p| p.inner.clone()).collect();
    let data = &panel.inner;
    let result = py.detach(|| run_scenario(&sets, data, &scenario, denom)).map_err(err)?;
    to_py(py, &result)
}

#[pyfunction]
fn validate(py: Python<'_>, params: PyRef<'_, PyParameterSet>, panel: PyRef<'_, PyPanel>) -> PyResult<Py<PyAny>> {
    let (report, rows) = run_validation(&params.inner, &panel.inner, params.inner.industry_id).map_err(err)?;
    to_py(py, &serde_json::json!({ "report": report, "fit": rows }))
}

/// Water demand curves of the four area quartiles over a raw price grid.
#[pyfunction]
fn demand_curves(
    py: Python<'_>,
    params: PyRef<'_, PyParameterSet>,
    panel: PyRef<'_, PyPanel>,
    grid: Vec<f64>,
) -> PyResult<Py<PyAny>> {
    let profiles = quartile_profiles(&panel.inner, params.inner.industry_id).map_err(err)?;
    let curves = profiles
        .iter()
        .map(|p| water_demand_curve(&params.inner, p, &grid))
        .collect::<Result<Vec<_>, Error>>()
        .map_err(err)?;
    to_py(py, &curves)
}

#[pyfunction]
#[pyo3(name = "convexity_check", signature = (matrix, tolerance = None))]
fn py_convexity_check(py: Python<'_>, matrix: Vec<Vec<f64>>, tolerance: Option<f64>) -> PyResult<Py<PyAny>> {
    let n = matrix.len();
    if let Some(row) = matrix.iter().find(|r| r.len() != n) {
        return Err(err(Error::Dimension {
            what: "matrix row".into(),
            expected: n,
            got: row.len(),
        }));
    }
    let m = DMatrix::from_fn(n, n, |i, j| matrix[i][j]);
    to_py(py, &convexity_check(&m, tolerance).map_err(err)?)
}

#[pyfunction]
#[pyo3(name = "r_squared")]
fn py_r_squared(actual: Vec<f64>, predicted: Vec<f64>) -> PyResult<f64> {
    r_squared(&actual, &predicted).map_err(err)
}

/// Share of predictions with the sign of `role` ("output" or "input").
#[pyfunction]
#[pyo3(name = "monotonicity_share")]
fn py_monotonicity_share(values: Vec<f64>, role: &str) -> PyResult<f64> {
    let role = match role {
        "output" => NetputRole::Output,
        "input" => NetputRole::Input,
        other => {
            return Err(PyValueError::new_err(format!(
                "role must be 'output' or 'input', got '{other}'"
            )))
        }
    };
    monotonicity_share(&values, role).map_err(err)
}

/// Evaluation point (raw prices, farm-level quantities, area) matching the
/// published own-price water elasticity of an industry.
#[pyfunction]
fn evaluation_point(py: Python<'_>, industry_name: &str) -> PyResult<Py<PyAny>> {
    to_py(py, &fixtures::evaluation_point(industry(industry_name)?))
}

/// Netput names of an industry in model order.
#[pyfunction]
fn netput_names(industry_name: &str) -> PyResult<Vec<String>> {
    Ok(IndustrySpec::standard(industry(industry_name)?).netput_names())
}

#[pymodule]
fn netputsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", TOOL_VERSION)?;
    m.add("NetputsimError", m.py().get_type::<NetputsimError>())?;
    m.add("INDUSTRIES", IndustryId::ALL.map(|id| id.as_str()).to_vec())?;
    m.add_class::<PyParameterSet>()?;
    m.add_class::<PyPanel>()?;
    m.add_class::<PyEstimateReport>()?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(demand_curves, m)?)?;
    m.add_function(wrap_pyfunction!(py_convexity_check, m)?)?;
    m.add_function(wrap_pyfunction!(py_r_squared, m)?)?;
    m.add_function(wrap_pyfunction!(py_monotonicity_share, m)?)?;
    m.add_function(wrap_pyfunction!(netput_names, m)?)?;
    m.add_function(wrap_pyfunction!(evaluation_point, m)?)?;
    Ok(())
}
