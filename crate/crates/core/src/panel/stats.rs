//! Price construction, capital imputation and survey-weighted statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::industry::IndustryId;

use super::{FarmPanel, FarmRecord};
use crate::prices::PriceVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapitalImputation {
    pub value: f64,
    /// The recorded value was zero and the residual rule was applied.
    pub imputed: bool,
    /// The residual was negative and clamped to zero.
    pub floored: bool,
}

/// Capital net of land and water entitlements, used when a farm records no
/// capital of its own. Non-zero recorded capital passes through.
pub fn impute_capital(
    recorded: f64,
    total_capital: f64,
    land_value: f64,
    entitlement_value: f64,
) -> Result<CapitalImputation> {
    if recorded != 0.0 {
        return Ok(CapitalImputation {
            value: recorded,
            imputed: false,
            floored: false,
        });
    }
    for (name, v) in [
        ("total_capital", total_capital),
        ("land_value", land_value),
        ("entitlement_value", entitlement_value),
    ] {
        if !(v >= 0.0) {
            return Err(Error::NegativeComponent {
                name: name.to_string(),
                value: v,
            });
        }
    }
    let residual = total_capital - land_value - entitlement_value;
    Ok(CapitalImputation {
        value: residual.max(0.0),
        imputed: true,
        floored: residual < 0.0,
    })
}

/// Expenditure-share weighted average of component price indices.
pub fn materials_price_index(
    component_indices: &BTreeMap<String, f64>,
    expenditure_shares: &BTreeMap<String, f64>,
) -> Result<f64> {
    if expenditure_shares.is_empty() {
        return Err(Error::Empty("expenditure shares".into()));
    }
    let mut total = 0.0;
    let mut index = 0.0;
    for (name, &share) in expenditure_shares {
        if !(share >= 0.0) {
            return Err(Error::NegativeComponent {
                name: name.clone(),
                value: share,
            });
        }
        let i = component_indices
            .get(name)
            .ok_or_else(|| Error::Empty(format!("price index for component '{name}'")))?;
        total += share;
        index += share * i;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::SharesNotUnit(total));
    }
    Ok(index)
}

/// Median; an even count takes the mean of the two middle values.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("sample".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Median hired-labour price (wages paid per week worked) over records with
/// positive hired labour.
pub fn labour_price(panel: &FarmPanel) -> Result<f64> {
    let mut ratios = Vec::new();
    for r in panel.records() {
        let spec = panel.spec(r.industry)?;
        let Some(l) = spec.netput_index("labour") else {
            continue;
        };
        let weeks = r.quantities[l];
        if let Some(w) = r.wages_paid {
            if weeks > 0.0 {
                ratios.push(w / weeks);
            }
        }
    }
    if ratios.is_empty() {
        return Err(Error::NoLabourRecords);
    }
    median(&ratios)
}

fn check_weighted(values: &[f64], weights: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("sample".into()));
    }
    if values.len() != weights.len() {
        return Err(Error::dim("weights", values.len(), weights.len()));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Empty("total weight".into()));
    }
    Ok(total)
}

pub fn weighted_mean(values: &[f64], weights: &[f64]) -> Result<f64> {
    let total = check_weighted(values, weights)?;
    let s: f64 = values.iter().zip(weights).map(|(v, w)| v * w).sum();
    Ok(s / total)
}

/// Weighted standard deviation about the weighted mean, normalised by the
/// total weight.
pub fn weighted_sd(values: &[f64], weights: &[f64]) -> Result<f64> {
    let total = check_weighted(values, weights)?;
    let m = weighted_mean(values, weights)?;
    let s: f64 = values.iter().zip(weights).map(|(v, w)| w * (v - m) * (v - m)).sum();
    Ok((s / total).sqrt())
}

/// Weighted median by cumulative weight. Values are sorted and their weights
/// accumulated; the first value whose cumulative weight reaches half the
/// total is the median, except when the cumulative weight lands exactly on
/// the half, where the midpoint between it and the next value is taken. With
/// integer weights this equals the ordinary median of the expanded sample.
pub fn weighted_median(values: &[f64], weights: &[f64]) -> Result<f64> {
    let total = check_weighted(values, weights)?;
    let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(weights.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let half = 0.5 * total;
    let tol = 1e-12 * total;
    let mut cum = 0.0;
    for (i, &(v, w)) in pairs.iter().enumerate() {
        cum += w;
        if cum >= half - tol {
            if (cum - half).abs() <= tol {
                if let Some(&(next, _)) = pairs[i + 1..].iter().find(|p| p.1 > 0.0) {
                    return Ok(0.5 * (v + next));
                }
            }
            return Ok(v);
        }
    }
    Ok(pairs[pairs.len() - 1].0)
}

/// Survey-weighted mean raw prices and numeraire price over `records`.
pub fn mean_prices(records: &[&FarmRecord]) -> Result<PriceVector> {
    let first = records.first().ok_or_else(|| Error::Empty("records".into()))?;
    let weights: Vec<f64> = records.iter().map(|r| r.weight).collect();
    let raw = (0..first.prices.len())
        .map(|i| {
            let v: Vec<f64> = records.iter().map(|r| r.prices.raw()[i]).collect();
            weighted_mean(&v, &weights)
        })
        .collect::<Result<Vec<f64>>>()?;
    let p0: Vec<f64> = records.iter().map(|r| r.prices.numeraire()).collect();
    PriceVector::new(raw, weighted_mean(&p0, &weights)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Mean,
    Median,
    Sd,
}

/// Weighted statistic of every numeric panel column for one industry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub industry: IndustryId,
    pub statistic: Statistic,
    pub records: usize,
    pub total_weight: f64,
    pub columns: Vec<String>,
    pub values: Vec<f64>,
}

/// One table per industry present in `panel`.
pub fn weighted_summary(panel: &FarmPanel, statistic: Statistic) -> Result<Vec<SummaryTable>> {
    if panel.is_empty() {
        return Err(Error::Empty("panel".into()));
    }
    let mut out = Vec::new();
    for id in panel.industries() {
        let spec = panel.spec(id)?;
        let recs = panel.industry_records(id);
        let weights: Vec<f64> = recs.iter().map(|r| r.weight).collect();
        let mut columns = vec!["area_operated".to_string()];
        let mut data: Vec<Vec<f64>> = vec![recs.iter().map(|r| r.area_operated).collect()];
        for (o, u) in spec.outputs.iter().enumerate() {
            if recs.iter().all(|r| r.output_areas.len() > o) {
                columns.push(format!("area_{}", u.name));
                data.push(recs.iter().map(|r| r.output_areas[o]).collect());
            }
        }
        for (i, n) in spec.netput_names().iter().enumerate() {
            columns.push(format!("q_{n}"));
            data.push(recs.iter().map(|r| r.quantities[i]).collect());
        }
        columns.push(super::NUMERAIRE_QUANTITY_COLUMN.to_string());
        data.push(recs.iter().map(|r| r.numeraire_quantity).collect());
        for (i, n) in spec.netput_names().iter().enumerate() {
            columns.push(format!("praw_{n}"));
            data.push(recs.iter().map(|r| r.prices.raw()[i]).collect());
        }
        columns.push(super::NUMERAIRE_PRICE_COLUMN.to_string());
        data.push(recs.iter().map(|r| r.prices.numeraire()).collect());
        for (f, n) in spec.fixed_input_names.iter().enumerate() {
            columns.push(format!("z_{n}"));
            data.push(recs.iter().map(|r| r.fixed[f]).collect());
        }
        for (c, n) in spec.control_names.iter().enumerate() {
            columns.push(n.clone());
            data.push(recs.iter().map(|r| r.controls[c]).collect());
        }
        let values = data
            .iter()
            .map(|col| match statistic {
                Statistic::Mean => weighted_mean(col, &weights),
                Statistic::Median => weighted_median(col, &weights),
                Statistic::Sd => weighted_sd(col, &weights),
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(SummaryTable {
            industry: id,
            statistic,
            records: recs.len(),
            total_weight: weights.iter().sum(),
            columns,
            values,
        });
    }
    Ok(out)
}
