//! Evaluation of the restricted profit function and its netput system.
//!
//! With normalised prices `p`, fixed inputs `z` and controls `w`:
//!
//! ```text
//! π*(p,z)  = a_m + a'p + b'z + ½ p'Cp + ½ z'Dz + p'αz + p'Γw + γ_m'w
//! netput   = ∂π*/∂p = a + Cp + αz + Γw
//! −x_m     = π* − netput'p = a_m + b'z + γ_m'w − ½ p'Cp + ½ z'Dz
//! ```
//!
//! Outputs are positive netputs and variable inputs negative ones; the
//! numeraire quantity `x_m` is returned separately as a positive quantity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ParameterSet;
use crate::prices::PriceVector;

/// Fixed inputs and controls of one farm (or one evaluation profile).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exogenous {
    pub fixed: Vec<f64>,
    /// Empty means "all controls at zero".
    #[serde(default)]
    pub controls: Vec<f64>,
}

impl Exogenous {
    pub fn new(fixed: Vec<f64>, controls: Vec<f64>) -> Self {
        Exogenous { fixed, controls }
    }

    pub fn fixed_only(fixed: Vec<f64>) -> Self {
        Exogenous {
            fixed,
            controls: Vec::new(),
        }
    }

    fn check(&self, params: &ParameterSet) -> Result<()> {
        if self.fixed.len() != params.n_fixed() {
            return Err(Error::dim("fixed inputs", params.n_fixed(), self.fixed.len()));
        }
        if !self.controls.is_empty() && self.controls.len() != params.n_controls() {
            return Err(Error::dim("controls", params.n_controls(), self.controls.len()));
        }
        Ok(())
    }

    fn control(&self, c: usize) -> f64 {
        self.controls.get(c).copied().unwrap_or(0.0)
    }
}

/// Signed netput quantities, optionally with the numeraire quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetputVector {
    pub netputs: Vec<f64>,
    pub numeraire: Option<f64>,
}

impl NetputVector {
    pub fn new(netputs: Vec<f64>, numeraire: Option<f64>) -> Self {
        NetputVector { netputs, numeraire }
    }
}

fn check_prices(params: &ParameterSet, p: &[f64]) -> Result<()> {
    if p.len() != params.n_netputs() {
        return Err(Error::dim("prices", params.n_netputs(), p.len()));
    }
    Ok(())
}

fn quad_c(params: &ParameterSet, p: &[f64]) -> f64 {
    let mut s = 0.0;
    for (i, row) in params.C.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            s += c * p[i] * p[j];
        }
    }
    s
}

fn quad_d(params: &ParameterSet, z: &[f64]) -> f64 {
    let mut s = 0.0;
    for (l, row) in params.D.iter().enumerate() {
        for (f, d) in row.iter().enumerate() {
            s += d * z[l] * z[f];
        }
    }
    s
}

/// Netputs at normalised prices `p` (no positivity check, so `p = 0` is
/// allowed). Result is on the model scale (per hectare where applicable).
pub fn predict_netputs_normalized(params: &ParameterSet, p: &[f64], exog: &Exogenous) -> Result<Vec<f64>> {
    check_prices(params, p)?;
    exog.check(params)?;
    let n = params.n_netputs();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = params.a[i];
        for (c, pj) in params.C[i].iter().zip(p) {
            v += c * pj;
        }
        for (al, zf) in params.alpha[i].iter().zip(&exog.fixed) {
            v += al * zf;
        }
        for (c, g) in params.gamma[i].iter().enumerate() {
            v += g * exog.control(c);
        }
        out.push(v);
    }
    Ok(out)
}

/// Numeraire quantity x_m at normalised prices `p`.
pub fn predict_numeraire_normalized(params: &ParameterSet, p: &[f64], exog: &Exogenous) -> Result<f64> {
    check_prices(params, p)?;
    exog.check(params)?;
    let z = &exog.fixed;
    let mut neg_xm = params.a_m;
    for (b, zf) in params.b.iter().zip(z) {
        neg_xm += b * zf;
    }
    for (c, g) in params.gamma_m.iter().enumerate() {
        neg_xm += g * exog.control(c);
    }
    neg_xm += -0.5 * quad_c(params, p) + 0.5 * quad_d(params, z);
    Ok(-neg_xm)
}

/// Normalised restricted profit π* at normalised prices `p`.
pub fn restricted_profit_normalized(params: &ParameterSet, p: &[f64], exog: &Exogenous) -> Result<f64> {
    check_prices(params, p)?;
    exog.check(params)?;
    let z = &exog.fixed;
    let mut v = params.a_m;
    for (a, pi) in params.a.iter().zip(p) {
        v += a * pi;
    }
    for (b, zf) in params.b.iter().zip(z) {
        v += b * zf;
    }
    v += 0.5 * quad_c(params, p) + 0.5 * quad_d(params, z);
    for (i, pi) in p.iter().enumerate() {
        for (al, zf) in params.alpha[i].iter().zip(z) {
            v += al * pi * zf;
        }
        for (c, g) in params.gamma[i].iter().enumerate() {
            v += g * pi * exog.control(c);
        }
    }
    for (c, g) in params.gamma_m.iter().enumerate() {
        v += g * exog.control(c);
    }
    Ok(v)
}

pub fn predict_netputs(params: &ParameterSet, prices: &PriceVector, exog: &Exogenous) -> Result<NetputVector> {
    let v = predict_netputs_normalized(params, &prices.normalized(), exog)?;
    Ok(NetputVector::new(v, None))
}

pub fn predict_numeraire(params: &ParameterSet, prices: &PriceVector, exog: &Exogenous) -> Result<f64> {
    predict_numeraire_normalized(params, &prices.normalized(), exog)
}

pub fn restricted_profit(params: &ParameterSet, prices: &PriceVector, exog: &Exogenous) -> Result<f64> {
    restricted_profit_normalized(params, &prices.normalized(), exog)
}

/// Netputs and numeraire together.
pub fn predict_all(params: &ParameterSet, prices: &PriceVector, exog: &Exogenous) -> Result<NetputVector> {
    let p = prices.normalized();
    let v = predict_netputs_normalized(params, &p, exog)?;
    let xm = predict_numeraire_normalized(params, &p, exog)?;
    Ok(NetputVector::new(v, Some(xm)))
}

/// Multiplies a per-hectare vector by the farm's area divisor. Level-scale
/// (broadacre) vectors pass through untouched.
pub fn scale_to_level(v: &NetputVector, area: f64, per_hectare: bool) -> Result<NetputVector> {
    if !per_hectare {
        return Ok(v.clone());
    }
    if !(area > 0.0 && area.is_finite()) {
        return Err(Error::NonPositiveArea(area));
    }
    Ok(NetputVector {
        netputs: v.netputs.iter().map(|x| x * area).collect(),
        numeraire: v.numeraire.map(|x| x * area),
    })
}
