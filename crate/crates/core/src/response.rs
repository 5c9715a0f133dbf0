//! Price responses derived from a parameter set: marginal-effect and
//! elasticity matrices in quantity convention, and water demand curves.
//!
//! Marginal effects are taken with respect to normalised netput prices and
//! the raw numeraire price, so with P_m = 1 every entry is a quantity change
//! per dollar. Per-hectare coefficients are scaled to farm level.

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::estimator::p_value;
use crate::industry::{IndustryId, IndustrySpec};
use crate::netput::{predict_netputs, predict_netputs_normalized, Exogenous};
use crate::output::{NumberFormat, UNDEFINED};
use crate::panel::{mean_prices, weighted_mean, FarmPanel, FarmRecord};
use crate::params::ParameterSet;
use crate::prices::PriceVector;

/// How per-hectare effects are brought to farm level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    /// Scale by the unweighted sample mean area divisor.
    MeanArea,
    /// Scale each farm by its own divisor, then take the survey-weighted mean.
    #[default]
    PerFarmWeighted,
}

impl std::str::FromStr for Reduction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean_area" | "mean-area" | "mean" => Ok(Reduction::MeanArea),
            "per_farm_weighted" | "per-farm-weighted" | "per-farm" => Ok(Reduction::PerFarmWeighted),
            _ => Err(Error::InvalidSpec(format!("unknown reduction '{s}'"))),
        }
    }
}

/// Prices, mean quantities and area at which responses are evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationPoint {
    pub industry: IndustryId,
    /// Raw netput prices.
    pub prices: Vec<f64>,
    pub numeraire_price: f64,
    /// Farm-level quantities (inputs positive): netputs, then the numeraire.
    pub quantities: Vec<f64>,
    /// Factor taking per-hectare coefficients to farm level; 1 for level
    /// models.
    pub area: f64,
}

impl EvaluationPoint {
    pub fn price_vector(&self) -> Result<PriceVector> {
        PriceVector::new(self.prices.clone(), self.numeraire_price)
    }

    /// Survey-weighted mean prices, quantities and area divisor of one
    /// industry's records.
    pub fn from_panel(panel: &FarmPanel, id: IndustryId, reduction: Reduction) -> Result<Self> {
        let spec = panel.spec(id)?;
        let recs = panel.industry_records(id);
        if recs.is_empty() {
            return Err(Error::MissingIndustry(id.to_string()));
        }
        let prices = mean_prices(&recs)?;
        let w: Vec<f64> = recs.iter().map(|r| r.weight).collect();
        let mut quantities = Vec::with_capacity(spec.n_netputs() + 1);
        for i in 0..spec.n_netputs() {
            let v: Vec<f64> = recs.iter().map(|r| r.quantities[i]).collect();
            quantities.push(weighted_mean(&v, &w)?);
        }
        let m: Vec<f64> = recs.iter().map(|r| r.numeraire_quantity).collect();
        quantities.push(weighted_mean(&m, &w)?);
        Ok(EvaluationPoint {
            industry: id,
            prices: prices.raw().to_vec(),
            numeraire_price: prices.numeraire(),
            quantities,
            area: reduce_area(spec, &recs, reduction)?,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let e: EvaluationPoint = serde_json::from_str(&s)?;
        e.price_vector()?;
        Ok(e)
    }
}

fn reduce_area(spec: &IndustrySpec, recs: &[&FarmRecord], reduction: Reduction) -> Result<f64> {
    if !spec.per_hectare {
        return Ok(1.0);
    }
    let d = recs
        .iter()
        .map(|r| r.area_divisor(spec))
        .collect::<Result<Vec<f64>>>()?;
    match reduction {
        Reduction::MeanArea => weighted_mean(&d, &vec![1.0; d.len()]),
        Reduction::PerFarmWeighted => {
            let w: Vec<f64> = recs.iter().map(|r| r.weight).collect();
            weighted_mean(&d, &w)
        }
    }
}

/// Serialises undefined cells as the string `"undefined"`.
mod cells {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Cell {
        Value(f64),
        Marker(String),
    }

    pub fn serialize<S: Serializer>(m: &[Vec<Option<f64>>], s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<Cell>> = m
            .iter()
            .map(|r| {
                r.iter()
                    .map(|c| match c {
                        Some(v) => Cell::Value(*v),
                        None => Cell::Marker(UNDEFINED.to_string()),
                    })
                    .collect()
            })
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<Option<f64>>>, D::Error> {
        let rows: Vec<Vec<Cell>> = Vec::deserialize(d)?;
        Ok(rows
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|c| match c {
                        Cell::Value(v) => Some(v),
                        Cell::Marker(_) => None,
                    })
                    .collect()
            })
            .collect())
    }

    pub mod opt {
        use super::*;

        pub fn serialize<S: Serializer>(
            m: &Option<Vec<Vec<Option<f64>>>>,
            s: S,
        ) -> std::result::Result<S::Ok, S::Error> {
            match m {
                Some(m) => super::serialize(m, s),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<Option<Vec<Vec<Option<f64>>>>, D::Error> {
            #[derive(Deserialize)]
            struct W(#[serde(with = "super")] Vec<Vec<Option<f64>>>);
            Ok(Option::<W>::deserialize(d)?.map(|w| w.0))
        }
    }
}

/// Farm-level quantity responses: rows are quantities, columns prices, both
/// over the netputs followed by the numeraire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalEffectMatrix {
    pub industry: IndustryId,
    pub names: Vec<String>,
    pub effect: Vec<Vec<f64>>,
    pub se: Option<Vec<Vec<f64>>>,
    pub p_value: Option<Vec<Vec<f64>>>,
    /// Raw netput prices at the evaluation point.
    pub prices: Vec<f64>,
    pub numeraire_price: f64,
    pub area: f64,
    pub reduction: Option<Reduction>,
}

/// Weights `W` such that a cell equals Σ_kl W_kl C_kl.
fn cell_weights(spec: &IndustrySpec, p: &[f64], pm: f64, area: f64, i: usize, j: usize) -> Vec<Vec<f64>> {
    let n = p.len();
    let mut w = vec![vec![0.0; n]; n];
    match (i < n, j < n) {
        (true, true) => w[i][j] = spec.quantity_sign(i) * area,
        (true, false) => {
            for k in 0..n {
                w[i][k] = -spec.quantity_sign(i) * area * p[k] / pm;
            }
        }
        (false, true) => {
            for k in 0..n {
                w[j][k] = area * p[k];
            }
        }
        (false, false) => {
            for k in 0..n {
                for l in 0..n {
                    w[k][l] = -area * p[k] * p[l] / pm;
                }
            }
        }
    }
    w
}

/// Delta-method standard error of Σ W∘C from the covariance of the free
/// upper-triangle parameters. None when any needed variance is unavailable.
fn cell_se(params: &ParameterSet, w: &[Vec<f64>]) -> Option<f64> {
    let cov = params.covariance.as_ref()?;
    let names = &params.names.netputs;
    let n = names.len();
    let mut grad: Vec<(usize, f64)> = Vec::new();
    for k in 0..n {
        for l in k..n {
            let g = if k == l { w[k][k] } else { w[k][l] + w[l][k] };
            if g != 0.0 {
                grad.push((cov.index(&format!("C[{},{}]", names[k], names[l]))?, g));
            }
        }
    }
    let mut v = 0.0;
    for &(a, ga) in &grad {
        for &(b, gb) in &grad {
            v += ga * gb * cov.matrix[a][b];
        }
    }
    Some(v.max(0.0).sqrt())
}

/// Marginal-effect matrix of `params` at `prices`, scaled by `area`.
pub fn marginal_effects_at(params: &ParameterSet, prices: &PriceVector, area: f64) -> Result<MarginalEffectMatrix> {
    params.validate()?;
    let spec = IndustrySpec::standard(params.industry_id);
    params.check_matches(&spec)?;
    let n = params.n_netputs();
    if prices.len() != n {
        return Err(Error::dim("prices", n, prices.len()));
    }
    if !(area > 0.0 && area.is_finite()) {
        return Err(Error::NonPositiveArea(area));
    }
    let p = prices.normalized();
    let pm = prices.numeraire();
    let mut names = params.names.netputs.clone();
    names.push(spec.numeraire_name.clone());
    let mut effect = vec![vec![0.0; n + 1]; n + 1];
    let mut se = Some(vec![vec![0.0; n + 1]; n + 1]);
    for i in 0..=n {
        for j in 0..=n {
            let w = cell_weights(&spec, &p, pm, area, i, j);
            let mut v = 0.0;
            for k in 0..n {
                for l in 0..n {
                    v += w[k][l] * params.C[k][l];
                }
            }
            effect[i][j] = v;
            match (cell_se(params, &w), se.as_mut()) {
                (Some(s), Some(m)) => m[i][j] = s,
                _ => se = None,
            }
        }
    }
    let p_value = se.as_ref().map(|s| {
        (0..=n)
            .map(|i| (0..=n).map(|j| p_value(effect[i][j], s[i][j])).collect())
            .collect()
    });
    Ok(MarginalEffectMatrix {
        industry: params.industry_id,
        names,
        effect,
        se,
        p_value,
        prices: prices.raw().to_vec(),
        numeraire_price: pm,
        area,
        reduction: None,
    })
}

/// Marginal-effect matrix at the survey-weighted mean prices of `panel`.
pub fn marginal_effects(
    params: &ParameterSet,
    panel: &FarmPanel,
    reduction: Reduction,
) -> Result<MarginalEffectMatrix> {
    let id = params.industry_id;
    let recs = panel.industry_records(id);
    if recs.is_empty() {
        return Err(Error::IndustryMismatch {
            expected: id.to_string(),
            got: panel
                .industries()
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(","),
        });
    }
    let spec = panel.spec(id)?;
    let prices = mean_prices(&recs)?;
    let area = reduce_area(spec, &recs, reduction)?;
    let mut m = marginal_effects_at(params, &prices, area)?;
    m.reduction = Some(reduction);
    Ok(m)
}

fn triplet_csv(
    names: &[String],
    value: impl Fn(usize, usize) -> Option<f64>,
    se: impl Fn(usize, usize) -> Option<f64>,
    p: impl Fn(usize, usize) -> Option<f64>,
    format: NumberFormat,
) -> String {
    let mut out = String::from("quantity");
    for c in names {
        out.push_str(&format!(",{c},{c}_se,{c}_p"));
    }
    out.push('\n');
    for (i, r) in names.iter().enumerate() {
        out.push_str(r);
        for j in 0..names.len() {
            for v in [value(i, j), se(i, j), p(i, j)] {
                out.push(',');
                out.push_str(&format.fmt_opt(v));
            }
        }
        out.push('\n');
    }
    out
}

impl MarginalEffectMatrix {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn cell(&self, row: &str, col: &str) -> Option<f64> {
        Some(self.effect[self.index(row)?][self.index(col)?])
    }

    /// One row per quantity; effect, se and p columns per price.
    pub fn to_csv(&self, format: NumberFormat) -> String {
        triplet_csv(
            &self.names,
            |i, j| Some(self.effect[i][j]),
            |i, j| self.se.as_ref().map(|s| s[i][j]),
            |i, j| self.p_value.as_ref().map(|s| s[i][j]),
            format,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticityMatrix {
    pub industry: IndustryId,
    pub names: Vec<String>,
    #[serde(with = "cells")]
    pub elasticity: Vec<Vec<Option<f64>>>,
    #[serde(with = "cells::opt")]
    pub se: Option<Vec<Vec<Option<f64>>>>,
    #[serde(with = "cells::opt")]
    pub p_value: Option<Vec<Vec<Option<f64>>>>,
    /// Price used per column: normalised netput prices, then the raw
    /// numeraire price.
    pub prices: Vec<f64>,
    pub quantities: Vec<f64>,
}

/// ε_ij = m_ij · p_j / q_i. Rows whose mean quantity is not positive are
/// undefined.
pub fn elasticities(m: &MarginalEffectMatrix, mean_p: &PriceVector, mean_q: &[f64]) -> Result<ElasticityMatrix> {
    let k = m.names.len();
    if mean_p.len() + 1 != k {
        return Err(Error::dim("mean prices", k - 1, mean_p.len()));
    }
    if mean_q.len() != k {
        return Err(Error::dim("mean quantities", k, mean_q.len()));
    }
    let mut prices = mean_p.normalized();
    prices.push(mean_p.numeraire());
    let defined = |i: usize| mean_q[i] > 0.0;
    let grid = |f: &dyn Fn(usize, usize) -> f64| -> Vec<Vec<Option<f64>>> {
        (0..k)
            .map(|i| (0..k).map(|j| defined(i).then(|| f(i, j))).collect())
            .collect()
    };
    let elasticity = grid(&|i, j| m.effect[i][j] * prices[j] / mean_q[i]);
    let se =
        m.se.as_ref()
            .map(|se| grid(&|i, j| se[i][j] * prices[j].abs() / mean_q[i]));
    let p_value = m.p_value.as_ref().map(|p| grid(&|i, j| p[i][j]));
    Ok(ElasticityMatrix {
        industry: m.industry,
        names: m.names.clone(),
        elasticity,
        se,
        p_value,
        prices,
        quantities: mean_q.to_vec(),
    })
}

impl ElasticityMatrix {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn cell(&self, row: &str, col: &str) -> Option<f64> {
        self.elasticity[self.index(row)?][self.index(col)?]
    }

    pub fn to_csv(&self, format: NumberFormat) -> String {
        triplet_csv(
            &self.names,
            |i, j| self.elasticity[i][j],
            |i, j| self.se.as_ref().and_then(|s| s[i][j]),
            |i, j| self.p_value.as_ref().and_then(|s| s[i][j]),
            format,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaterElasticityRow {
    pub industry: IndustryId,
    pub elasticity: Option<f64>,
    pub se: Option<f64>,
    pub p_value: Option<f64>,
    /// p < 0.05; None without a p-value.
    pub significant: Option<bool>,
}

/// Own-price water elasticity of each industry, in standard industry order.
pub fn own_price_water_table(matrices: &[ElasticityMatrix]) -> Result<Vec<WaterElasticityRow>> {
    let mut rows = Vec::new();
    for id in IndustryId::ALL {
        let m = matrices
            .iter()
            .find(|m| m.industry == id)
            .ok_or_else(|| Error::MissingIndustry(id.to_string()))?;
        let w = m.index("water").ok_or_else(|| Error::UnknownNetput("water".into()))?;
        let p = m.p_value.as_ref().and_then(|p| p[w][w]);
        rows.push(WaterElasticityRow {
            industry: id,
            elasticity: m.elasticity[w][w],
            se: m.se.as_ref().and_then(|s| s[w][w]),
            p_value: p,
            significant: p.map(|p| p < 0.05),
        });
    }
    Ok(rows)
}

pub fn water_table_csv(rows: &[WaterElasticityRow], format: NumberFormat) -> String {
    let mut out = String::from("industry,own_price_elasticity,se,p_value,significant\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.industry,
            format.fmt_opt(r.elasticity),
            format.fmt_opt(r.se),
            format.fmt_opt(r.p_value),
            r.significant.map_or(UNDEFINED.to_string(), |b| b.to_string())
        ));
    }
    out
}

/// A representative farm at which a demand curve is traced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarmProfile {
    pub label: String,
    pub industry: IndustryId,
    pub area_operated: f64,
    /// Multiplier from model scale to farm level (1 for level models).
    pub divisor: f64,
    pub prices: PriceVector,
    pub fixed: Vec<f64>,
    pub controls: Vec<f64>,
    pub farms: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandPoint {
    pub price: f64,
    pub quantity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandCurve {
    pub netput: String,
    pub label: String,
    /// Farm-level quantities, unclipped.
    pub points: Vec<DemandPoint>,
    /// Raw price at which quantity reaches zero; None for flat demand or a
    /// crossing at a non-positive price.
    pub choke_price: Option<f64>,
    /// dq/dP at farm level.
    pub slope: f64,
    pub profile: FarmProfile,
}

/// Water demand of `profile` over raw water prices in `grid`, other prices
/// and exogenous variables held at the profile's values.
pub fn water_demand_curve(params: &ParameterSet, profile: &FarmProfile, grid: &[f64]) -> Result<DemandCurve> {
    let spec = IndustrySpec::standard(params.industry_id);
    params.check_matches(&spec)?;
    if profile.industry != params.industry_id {
        return Err(Error::IndustryMismatch {
            expected: params.industry_id.to_string(),
            got: profile.industry.to_string(),
        });
    }
    if grid.is_empty() {
        return Err(Error::InvalidGrid("price grid is empty".into()));
    }
    if grid.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
        return Err(Error::InvalidGrid("grid prices must be positive".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("grid must be strictly ascending".into()));
    }
    if !(profile.divisor > 0.0) {
        return Err(Error::NonPositiveArea(profile.divisor));
    }
    let w = spec.water_index().ok_or_else(|| Error::UnknownNetput("water".into()))?;
    let sign = spec.quantity_sign(w);
    let exog = Exogenous::new(profile.fixed.clone(), profile.controls.clone());
    let mut points = Vec::with_capacity(grid.len());
    for &price in grid {
        let prices = profile.prices.with_raw(w, price)?;
        let v = predict_netputs(params, &prices, &exog)?;
        points.push(DemandPoint {
            price,
            quantity: sign * v.netputs[w] * profile.divisor,
        });
    }
    let p0 = profile.prices.numeraire();
    let mut p = profile.prices.normalized();
    p[w] = 0.0;
    let base = predict_netputs_normalized(params, &p, &exog)?[w];
    let cww = params.C[w][w];
    let slope = sign * cww * profile.divisor / p0;
    let choke_price = if cww != 0.0 {
        let c = -base * p0 / cww;
        (c > 0.0).then_some(c)
    } else {
        None
    };
    Ok(DemandCurve {
        netput: "water".into(),
        label: profile.label.clone(),
        points,
        choke_price,
        slope,
        profile: profile.clone(),
    })
}

/// `quartile,price,quantity` rows; negative quantities are clipped to zero
/// when `clip` is set.
pub fn demand_curves_csv(curves: &[DemandCurve], format: NumberFormat, clip: bool) -> String {
    let mut out = String::from("quartile,price,quantity\n");
    for c in curves {
        for pt in &c.points {
            let q = if clip { pt.quantity.max(0.0) } else { pt.quantity };
            out.push_str(&format!("{},{},{}\n", c.label, format.fmt(pt.price), format.fmt(q)));
        }
    }
    out
}

pub fn choke_prices_csv(curves: &[DemandCurve], format: NumberFormat) -> String {
    let mut out = String::from("quartile,choke_price,slope\n");
    for c in curves {
        out.push_str(&format!(
            "{},{},{}\n",
            c.label,
            format.fmt_opt(c.choke_price),
            format.fmt(c.slope)
        ));
    }
    out
}

/// Quartile (0–3) of each record by cumulative survey weight of area
/// operated: a record falls in the quartile holding the midpoint of its
/// weight. Returned in the input order.
pub fn area_quartiles(records: &[&FarmRecord]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| {
        records[a]
            .area_operated
            .total_cmp(&records[b].area_operated)
            .then_with(|| records[a].farm_id.cmp(&records[b].farm_id))
            .then_with(|| records[a].year.cmp(&records[b].year))
    });
    let total: f64 = records.iter().map(|r| r.weight).sum();
    let mut out = vec![0; records.len()];
    let mut cum = 0.0;
    for &i in &order {
        let w = records[i].weight;
        let mid = (cum + 0.5 * w) / total;
        out[i] = ((4.0 * mid).floor() as usize).min(3);
        cum += w;
    }
    out
}

/// Survey-weighted mean profile of each area-operated quartile, smallest
/// farms first.
pub fn quartile_profiles(panel: &FarmPanel, id: IndustryId) -> Result<Vec<FarmProfile>> {
    let spec = panel.spec(id)?;
    let recs = panel.industry_records(id);
    if recs.len() < 4 {
        return Err(Error::TooFewFarms {
            needed: 4,
            got: recs.len(),
        });
    }
    let q = area_quartiles(&recs);
    let mut out = Vec::with_capacity(4);
    for quartile in 0..4 {
        let members: Vec<&FarmRecord> = recs
            .iter()
            .zip(&q)
            .filter(|(_, &k)| k == quartile)
            .map(|(r, _)| *r)
            .collect();
        if members.is_empty() {
            return Err(Error::Empty(format!("area quartile {}", quartile + 1)));
        }
        let w: Vec<f64> = members.iter().map(|r| r.weight).collect();
        let mean_of = |f: &dyn Fn(&FarmRecord) -> f64| -> Result<f64> {
            let v: Vec<f64> = members.iter().map(|r| f(r)).collect();
            weighted_mean(&v, &w)
        };
        let divisors = members
            .iter()
            .map(|r| r.area_divisor(spec))
            .collect::<Result<Vec<f64>>>()?;
        let fixed = (0..spec.n_fixed())
            .map(|f| mean_of(&|r| r.fixed[f]))
            .collect::<Result<Vec<f64>>>()?;
        let controls = (0..spec.n_controls())
            .map(|c| mean_of(&|r| r.controls.get(c).copied().unwrap_or(0.0)))
            .collect::<Result<Vec<f64>>>()?;
        out.push(FarmProfile {
            label: format!("q{}", quartile + 1),
            industry: id,
            area_operated: mean_of(&|r| r.area_operated)?,
            divisor: weighted_mean(&divisors, &w)?,
            prices: mean_prices(&members)?,
            fixed,
            controls,
            farms: members.len(),
            weight: w.iter().sum(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn toy(id: IndustryId) -> ParameterSet {
        ParameterSet::zeros(&IndustrySpec::standard(id))
    }

    fn profile(id: IndustryId, divisor: f64, fixed: Vec<f64>) -> FarmProfile {
        let spec = IndustrySpec::standard(id);
        FarmProfile {
            label: format!("area {divisor}"),
            industry: id,
            area_operated: divisor,
            divisor,
            prices: PriceVector::new(vec![100.0; spec.n_netputs()], 1.0).unwrap(),
            fixed,
            controls: vec![0.0; spec.n_controls()],
            farms: 1,
            weight: 1.0,
        }
    }

    #[test]
    fn identity_price_block_scales_with_area() {
        let id = IndustryId::Dairy;
        let spec = IndustrySpec::standard(id);
        let mut p = toy(id);
        for i in 0..5 {
            p.set_c(i, i, 1.0);
        }
        let prices = PriceVector::new(vec![1.0; 5], 1.0).unwrap();
        let m = marginal_effects_at(&p, &prices, 7.0).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { 7.0 * spec.quantity_sign(i) } else { 0.0 };
                assert_eq!(m.effect[i][j], want);
            }
        }
    }

    #[test]
    fn published_rice_cells_round_trip() {
        let p = fixtures::published_parameters(IndustryId::BroadacreRice);
        let e = fixtures::evaluation_point(IndustryId::BroadacreRice);
        let m = marginal_effects_at(&p, &e.price_vector().unwrap(), e.area).unwrap();
        assert_eq!(m.cell("rice", "water"), Some(-1.83));
        assert_eq!(m.cell("water", "rice"), Some(1.83));
        let d = fixtures::published_parameters(IndustryId::Dairy);
        let e = fixtures::evaluation_point(IndustryId::Dairy);
        let m = marginal_effects_at(&d, &e.price_vector().unwrap(), e.area).unwrap();
        assert!((m.cell("fodder", "water").unwrap() - 179.0).abs() < 1e-9);
        assert!((m.cell("water", "fodder").unwrap() - 179.0).abs() < 1e-9);
    }

    #[test]
    fn numeraire_cells_add_up() {
        let p = fixtures::oracle_parameters(IndustryId::BroadacreNonrice);
        let prices = PriceVector::new(vec![260.0, 110.0, 950.0, 120.0], 1.1).unwrap();
        let m = marginal_effects_at(&p, &prices, 1.0).unwrap();
        let n = 4;
        let pn = prices.normalized();
        let s: f64 = (0..n).map(|i| m.effect[n][i] * pn[i]).sum();
        assert!((s + 1.1 * m.effect[n][n]).abs() <= 1e-12 * s.abs());
    }

    #[test]
    fn rice_elasticity_from_implied_price() {
        let params = fixtures::published_parameters(IndustryId::BroadacreRice);
        let mut raw = fixtures::reference_prices(IndustryId::BroadacreRice);
        raw[4] = fixtures::rice_water_price_from_elasticity();
        let prices = PriceVector::new(raw, 1.0).unwrap();
        let m = marginal_effects_at(&params, &prices, 1.0).unwrap();
        let e = elasticities(&m, &prices, &fixtures::mean_quantities(IndustryId::BroadacreRice)).unwrap();
        assert!((e.cell("rice", "water").unwrap() + 1.51).abs() < 1e-12);
    }

    #[test]
    fn zero_quantity_rows_are_undefined() {
        let params = fixtures::oracle_parameters(IndustryId::BroadacreRice);
        let prices = PriceVector::new(fixtures::reference_prices(IndustryId::BroadacreRice), 1.0).unwrap();
        let m = marginal_effects_at(&params, &prices, 1.0).unwrap();
        let mut q = fixtures::mean_quantities(IndustryId::BroadacreRice);
        q[0] = 0.0;
        let e = elasticities(&m, &prices, &q).unwrap();
        assert!(e.elasticity[0].iter().all(|c| c.is_none()));
        assert!(e.elasticity[1].iter().all(|c| c.is_some()));
        let csv = e.to_csv(NumberFormat::Exact);
        assert!(csv.lines().nth(1).unwrap().contains(UNDEFINED));
        let json = serde_json::to_string(&e).unwrap();
        let back: ElasticityMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn zero_effect_gives_zero_elasticity() {
        let params = toy(IndustryId::BroadacreNonrice);
        let prices = PriceVector::new(vec![3.0, 4.0, 5.0, 6.0], 1.0).unwrap();
        let m = marginal_effects_at(&params, &prices, 1.0).unwrap();
        let e = elasticities(&m, &prices, &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!(e.elasticity.iter().flatten().all(|c| *c == Some(0.0)));
    }

    #[test]
    fn water_table_needs_every_industry() {
        let params = fixtures::published_parameters(IndustryId::Dairy);
        let e = fixtures::evaluation_point(IndustryId::Dairy);
        let pv = e.price_vector().unwrap();
        let m = marginal_effects_at(&params, &pv, e.area).unwrap();
        let el = elasticities(&m, &pv, &e.quantities).unwrap();
        assert!(matches!(own_price_water_table(&[el]), Err(Error::MissingIndustry(_))));
    }

    #[test]
    fn toy_demand_curves_share_choke_price() {
        // per hectare: q = 10 − 0.02 P, i.e. netput −10 + 0.02 p
        let id = IndustryId::Dairy;
        let mut p = toy(id);
        p.a[4] = -10.0;
        p.set_c(4, 4, 0.02);
        let grid: Vec<f64> = (1..=12).map(|k| 50.0 * k as f64).collect();
        let small = water_demand_curve(&p, &profile(id, 50.0, vec![0.0; 4]), &grid).unwrap();
        let large = water_demand_curve(&p, &profile(id, 100.0, vec![0.0; 4]), &grid).unwrap();
        assert!((small.choke_price.unwrap() - 500.0).abs() < 1e-9);
        assert!((large.choke_price.unwrap() - 500.0).abs() < 1e-9);
        for (a, b) in small.points.iter().zip(&large.points) {
            assert!((2.0 * a.quantity - b.quantity).abs() < 1e-9);
        }
        let clipped = demand_curves_csv(std::slice::from_ref(&small), NumberFormat::Exact, true);
        assert!(!clipped.contains(",-"));
        assert!(small.points.last().unwrap().quantity < 0.0);
    }

    #[test]
    fn flat_demand_has_no_choke_price() {
        let id = IndustryId::Horticulture;
        let mut p = toy(id);
        p.a[8] = -4.0;
        let spec = IndustrySpec::standard(id);
        let c = water_demand_curve(&p, &profile(id, 20.0, vec![0.0; spec.n_fixed()]), &[50.0, 100.0, 200.0]).unwrap();
        assert_eq!(c.choke_price, None);
        assert!(c.points.iter().all(|pt| pt.quantity == 80.0));
    }

    #[test]
    fn broadacre_area_shifts_intercept_only() {
        let id = IndustryId::BroadacreRice;
        let mut p = toy(id);
        p.a[4] = -100.0;
        p.set_c(4, 4, 0.5);
        p.alpha[4][0] = -0.2;
        let grid = [10.0, 50.0, 90.0];
        let mut z = vec![0.0; 6];
        z[0] = 100.0;
        let a = water_demand_curve(&p, &profile(id, 1.0, z.clone()), &grid).unwrap();
        z[0] = 300.0;
        let b = water_demand_curve(&p, &profile(id, 1.0, z), &grid).unwrap();
        assert_eq!(a.slope, b.slope);
        let shift = b.points[0].quantity - a.points[0].quantity;
        assert!((shift - 40.0).abs() < 1e-9);
        for (x, y) in a.points.iter().zip(&b.points) {
            assert!((y.quantity - x.quantity - shift).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        let id = IndustryId::Dairy;
        let p = toy(id);
        let pr = profile(id, 1.0, vec![0.0; 4]);
        for g in [vec![], vec![10.0, 5.0], vec![0.0, 1.0]] {
            assert!(matches!(water_demand_curve(&p, &pr, &g), Err(Error::InvalidGrid(_))));
        }
    }
}
