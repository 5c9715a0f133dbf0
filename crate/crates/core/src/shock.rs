//! Price-shock simulation: scenario prices per farm, farm-level quantity and
//! profit changes, and weighted aggregates with a cost/revenue/profit
//! decomposition.
//!
//! Netput changes are exact for the linear netput equations. The numeraire
//! change uses the numeraire-price effects c_mi evaluated at the baseline
//! survey-weighted mean prices, so it is linear in the normalised price
//! change. Profit is revenue minus the cost of every input, water and
//! materials included, at raw prices.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::recover_numeraire_effects;
use crate::industry::{IndustryId, IndustrySpec, NetputRole};
use crate::netput::{predict_netputs, predict_numeraire, Exogenous};
use crate::output::NumberFormat;
use crate::panel::{mean_prices, FarmPanel, FarmRecord};
use crate::params::ParameterSet;
use crate::prices::PriceVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceOverride {
    pub netput: String,
    /// Region or water-price group; absent means every farm.
    #[serde(default)]
    pub scope: Option<String>,
    #[serde(default)]
    pub factor: Option<f64>,
    #[serde(default)]
    pub absolute: Option<f64>,
}

/// Override of a fixed input or control, by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExogenousOverride {
    pub name: String,
    #[serde(default)]
    pub scope: Option<String>,
    #[serde(default)]
    pub factor: Option<f64>,
    #[serde(default)]
    pub absolute: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Year whose records form the baseline; the panel's last year if absent.
    #[serde(default)]
    pub baseline_year: Option<i32>,
    #[serde(default)]
    pub overrides: Vec<PriceOverride>,
    #[serde(default)]
    pub exogenous: Vec<ExogenousOverride>,
}

fn check_value(label: &str, factor: Option<f64>, absolute: Option<f64>, allow_zero: bool) -> Result<()> {
    let bad = |m: String| Err(Error::InvalidScenario(m));
    match (factor, absolute) {
        (Some(f), None) if f > 0.0 && f.is_finite() => Ok(()),
        (Some(f), None) => bad(format!("factor for '{label}' must be positive, got {f}")),
        (None, Some(a)) if a.is_finite() && (a > 0.0 || (allow_zero && a >= 0.0)) => Ok(()),
        (None, Some(a)) => bad(format!("absolute value for '{label}' is invalid: {a}")),
        _ => bad(format!(
            "override for '{label}' needs exactly one of factor or absolute"
        )),
    }
}

impl Scenario {
    /// A scenario scaling one netput price everywhere.
    pub fn price_factor(name: &str, netput: &str, factor: f64) -> Self {
        Scenario {
            name: name.to_string(),
            baseline_year: None,
            overrides: vec![PriceOverride {
                netput: netput.to_string(),
                scope: None,
                factor: Some(factor),
                absolute: None,
            }],
            exogenous: Vec::new(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let sc: Scenario = serde_json::from_str(&s)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for o in &self.overrides {
            check_value(&o.netput, o.factor, o.absolute, false)?;
            if !seen.insert((o.netput.clone(), o.scope.clone())) {
                return Err(Error::InvalidScenario(format!(
                    "more than one override for '{}' in scope '{}'",
                    o.netput,
                    o.scope.as_deref().unwrap_or("all")
                )));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for o in &self.exogenous {
            check_value(&o.name, o.factor, o.absolute, true)?;
            if !seen.insert((o.name.clone(), o.scope.clone())) {
                return Err(Error::InvalidScenario(format!(
                    "more than one override for '{}' in scope '{}'",
                    o.name,
                    o.scope.as_deref().unwrap_or("all")
                )));
            }
        }
        Ok(())
    }
}

/// How closely a scope matches a farm: 2 region, 1 price group, 0 global.
fn scope_rank(scope: &Option<String>, spec: &IndustrySpec, region: &str) -> Option<u8> {
    match scope {
        None => Some(0),
        Some(s) if s == region => Some(2),
        Some(s) if spec.price_group(region) == Some(s.as_str()) => Some(1),
        Some(_) => None,
    }
}

fn known_scope(scope: &str, panel: &FarmPanel) -> bool {
    panel.industries().iter().any(|&id| {
        panel.spec(id).is_ok_and(|s| {
            s.region_price_groups.contains_key(scope) || s.region_price_groups.values().any(|g| g == scope)
        })
    })
}

fn apply(value: f64, factor: Option<f64>, absolute: Option<f64>) -> f64 {
    match (factor, absolute) {
        (Some(f), _) => value * f,
        (_, Some(a)) => a,
        _ => value,
    }
}

/// Most specific override matching (name, farm); ties cannot occur since a
/// scope appears once per name.
fn pick<'a, T>(
    items: &'a [T],
    name: &str,
    spec: &IndustrySpec,
    region: &str,
    key: impl Fn(&T) -> (&str, &Option<String>),
) -> Option<&'a T> {
    items
        .iter()
        .filter_map(|o| {
            let (n, s) = key(o);
            if n != name {
                return None;
            }
            scope_rank(s, spec, region).map(|r| (r, o))
        })
        .max_by_key(|(r, _)| *r)
        .map(|(_, o)| o)
}

/// Scenario prices and exogenous values for each record, in record order.
/// A region-scoped override beats a group-scoped one, which beats a global
/// one. Overriding `materials_services` changes the numeraire price.
pub fn apply_scenario(
    panel: &FarmPanel,
    records: &[&FarmRecord],
    scenario: &Scenario,
) -> Result<Vec<(PriceVector, Exogenous)>> {
    scenario.validate()?;
    for o in &scenario.overrides {
        let known = panel.industries().iter().any(|&id| {
            panel
                .spec(id)
                .is_ok_and(|s| s.netput_index(&o.netput).is_some() || s.numeraire_name == o.netput)
        });
        if !known {
            return Err(Error::UnknownNetput(o.netput.clone()));
        }
    }
    for o in &scenario.exogenous {
        let known = panel.industries().iter().any(|&id| {
            panel
                .spec(id)
                .is_ok_and(|s| s.fixed_input_names.contains(&o.name) || s.control_names.contains(&o.name))
        });
        if !known {
            return Err(Error::UnknownExogenous(o.name.clone()));
        }
    }
    let scopes = scenario
        .overrides
        .iter()
        .map(|o| &o.scope)
        .chain(scenario.exogenous.iter().map(|o| &o.scope));
    for s in scopes.flatten() {
        if !known_scope(s, panel) {
            return Err(Error::UnknownRegion(s.clone()));
        }
    }

    let mut used_prices = vec![false; scenario.overrides.len()];
    let mut used_exog = vec![false; scenario.exogenous.len()];
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        let spec = panel.spec(r.industry)?;
        let mut raw = r.prices.raw().to_vec();
        for (i, name) in spec.netput_names().iter().enumerate() {
            if let Some(o) = pick(&scenario.overrides, name, spec, &r.region, |o| (&o.netput, &o.scope)) {
                raw[i] = apply(raw[i], o.factor, o.absolute);
                mark(&scenario.overrides, o, &mut used_prices);
            }
        }
        let mut p0 = r.prices.numeraire();
        if let Some(o) = pick(&scenario.overrides, &spec.numeraire_name, spec, &r.region, |o| {
            (&o.netput, &o.scope)
        }) {
            p0 = apply(p0, o.factor, o.absolute);
            mark(&scenario.overrides, o, &mut used_prices);
        }
        let mut fixed = r.fixed.clone();
        for (f, name) in spec.fixed_input_names.iter().enumerate() {
            if let Some(o) = pick(&scenario.exogenous, name, spec, &r.region, |o| (&o.name, &o.scope)) {
                fixed[f] = apply(fixed[f], o.factor, o.absolute);
                mark(&scenario.exogenous, o, &mut used_exog);
            }
        }
        let mut controls = r.controls.clone();
        for (c, name) in spec.control_names.iter().enumerate() {
            if let Some(o) = pick(&scenario.exogenous, name, spec, &r.region, |o| (&o.name, &o.scope)) {
                if c < controls.len() {
                    controls[c] = apply(controls[c], o.factor, o.absolute);
                }
                mark(&scenario.exogenous, o, &mut used_exog);
            }
        }
        out.push((PriceVector::new(raw, p0)?, Exogenous::new(fixed, controls)));
    }
    if let Some(i) = used_prices.iter().position(|u| !u) {
        let o = &scenario.overrides[i];
        return Err(Error::UnresolvedOverride {
            netput: o.netput.clone(),
            scope: o.scope.clone().unwrap_or_else(|| "all".into()),
        });
    }
    if let Some(i) = used_exog.iter().position(|u| !u) {
        let o = &scenario.exogenous[i];
        return Err(Error::UnresolvedOverride {
            netput: o.name.clone(),
            scope: o.scope.clone().unwrap_or_else(|| "all".into()),
        });
    }
    Ok(out)
}

fn mark<T>(items: &[T], o: &T, used: &mut [bool]) {
    if let Some(i) = items.iter().position(|x| std::ptr::eq(x, o)) {
        used[i] = true;
    }
}

/// Quantity, price and value changes of one farm, farm level, quantity
/// convention (inputs positive). Slots are the netputs then the numeraire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarmDelta {
    pub farm_id: String,
    pub year: i32,
    pub industry: IndustryId,
    pub region: String,
    pub weight: f64,
    pub names: Vec<String>,
    /// Whether each slot is an output (revenue) rather than a cost.
    pub is_output: Vec<bool>,
    pub q_baseline: Vec<f64>,
    pub q_scenario: Vec<f64>,
    pub dq: Vec<f64>,
    /// Raw prices, numeraire last.
    pub p_baseline: Vec<f64>,
    pub p_scenario: Vec<f64>,
    pub profit: Option<ProfitDelta>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfitDelta {
    /// Change from the first-order-plus-shock decomposition.
    pub delta: f64,
    pub baseline: f64,
    pub scenario: f64,
}

impl FarmDelta {
    pub fn value_baseline(&self, i: usize) -> f64 {
        self.q_baseline[i] * self.p_baseline[i]
    }

    pub fn value_scenario(&self, i: usize) -> f64 {
        self.q_scenario[i] * self.p_scenario[i]
    }
}

/// Inputs to a farm's delta: the model, its baseline and scenario exogenous
/// state, and the numeraire effects c_mi used for the numeraire change.
pub struct DeltaContext<'a> {
    pub params: &'a ParameterSet,
    pub spec: &'a IndustrySpec,
    /// c_mi = Σ_j c_ij p̄_j at the baseline mean normalised prices.
    pub numeraire_effects: &'a [f64],
}

/// Numeraire effects of `params` at the survey-weighted mean prices of
/// `records`.
pub fn baseline_numeraire_effects(params: &ParameterSet, records: &[&FarmRecord]) -> Result<Vec<f64>> {
    let mp = mean_prices(records)?;
    let p = recover_numeraire_effects(params, &mp)?;
    Ok(p.numeraire_effects.map(|e| e.numeraire_wrt_netput).unwrap_or_default())
}

/// Baseline model-predicted quantities and their changes between
/// (p0, exog0) and (p1, exog1).
pub fn farm_deltas(
    ctx: &DeltaContext,
    farm: &FarmRecord,
    p0: &PriceVector,
    exog0: &Exogenous,
    p1: &PriceVector,
    exog1: &Exogenous,
) -> Result<FarmDelta> {
    let spec = ctx.spec;
    let params = ctx.params;
    if farm.industry != params.industry_id {
        return Err(Error::IndustryMismatch {
            expected: params.industry_id.to_string(),
            got: farm.industry.to_string(),
        });
    }
    let n = spec.n_netputs();
    if p0.len() != n || p1.len() != n {
        return Err(Error::dim("prices", n, p0.len().min(p1.len())));
    }
    if ctx.numeraire_effects.len() != n {
        return Err(Error::dim("numeraire effects", n, ctx.numeraire_effects.len()));
    }
    let area = farm.area_divisor(spec)?;
    let base = predict_netputs(params, p0, exog0)?.netputs;
    let xm0 = predict_numeraire(params, p0, exog0)?;

    let pn0 = p0.normalized();
    let pn1 = p1.normalized();
    let dp: Vec<f64> = (0..n).map(|j| pn1[j] - pn0[j]).collect();
    let z0 = exog0.fixed.as_slice();
    let z1 = exog1.fixed.as_slice();
    let w0 = exog0.controls.as_slice();
    let w1 = exog1.controls.as_slice();
    let dz: Vec<f64> = z1.iter().zip(z0).map(|(a, b)| a - b).collect();
    let dw: Vec<f64> = (0..params.n_controls())
        .map(|c| w1.get(c).copied().unwrap_or(0.0) - w0.get(c).copied().unwrap_or(0.0))
        .collect();

    let mut dnet = vec![0.0; n];
    for i in 0..n {
        let mut v = 0.0;
        for j in 0..n {
            v += params.C[i][j] * dp[j];
        }
        for f in 0..dz.len() {
            v += params.alpha[i][f] * dz[f];
        }
        for c in 0..dw.len() {
            v += params.gamma[i][c] * dw[c];
        }
        dnet[i] = v;
    }
    let mut dneg_xm = 0.0;
    for i in 0..n {
        dneg_xm -= ctx.numeraire_effects[i] * dp[i];
    }
    if dz.iter().any(|v| *v != 0.0) || dw.iter().any(|v| *v != 0.0) {
        let k = z0.len();
        for f in 0..k {
            dneg_xm += params.b[f] * dz[f];
            for l in 0..k {
                dneg_xm += 0.5 * params.D[l][f] * (z1[l] * z1[f] - z0[l] * z0[f]);
            }
        }
        for c in 0..dw.len() {
            dneg_xm += params.gamma_m[c] * dw[c];
        }
    }

    let mut names = spec.netput_names();
    names.push(spec.numeraire_name.clone());
    let mut is_output: Vec<bool> = (0..n).map(|i| spec.role(i) == NetputRole::Output).collect();
    is_output.push(false);
    let mut q_baseline: Vec<f64> = (0..n).map(|i| spec.quantity_sign(i) * base[i] * area).collect();
    q_baseline.push(xm0 * area);
    let mut dq: Vec<f64> = (0..n).map(|i| spec.quantity_sign(i) * dnet[i] * area).collect();
    dq.push(-dneg_xm * area);
    let q_scenario = q_baseline.iter().zip(&dq).map(|(a, d)| a + d).collect();
    let mut p_baseline = p0.raw().to_vec();
    p_baseline.push(p0.numeraire());
    let mut p_scenario = p1.raw().to_vec();
    p_scenario.push(p1.numeraire());
    Ok(FarmDelta {
        farm_id: farm.farm_id.clone(),
        year: farm.year,
        industry: farm.industry,
        region: farm.region.clone(),
        weight: farm.weight,
        names,
        is_output,
        q_baseline,
        q_scenario,
        dq,
        p_baseline,
        p_scenario,
        profit: None,
    })
}

/// Profit change by the first-order-plus-shock decomposition
/// Δπ = Σ_out Δy·P_0 − Σ_in Δx·P_0 + Σ_out y_1·ΔP − Σ_in x_1·ΔP, every
/// shocked price contributing its scenario-quantity term. Baseline profit is
/// revenue minus the cost of every input including water and materials.
pub fn profit_delta(delta: &FarmDelta, p0: &PriceVector, p1: &PriceVector) -> Result<ProfitDelta> {
    let matches = |stored: &[f64], p: &PriceVector| {
        stored.len() == p.len() + 1 && stored[..p.len()] == *p.raw() && stored[p.len()] == p.numeraire()
    };
    if !matches(&delta.p_baseline, p0) || !matches(&delta.p_scenario, p1) {
        return Err(Error::ProvenanceMismatch);
    }
    let mut baseline = 0.0;
    let mut d = 0.0;
    for i in 0..delta.names.len() {
        let s = if delta.is_output[i] { 1.0 } else { -1.0 };
        let dp = delta.p_scenario[i] - delta.p_baseline[i];
        baseline += s * delta.q_baseline[i] * delta.p_baseline[i];
        d += s * (delta.dq[i] * delta.p_baseline[i] + delta.q_scenario[i] * dp);
    }
    Ok(ProfitDelta {
        delta: d,
        baseline,
        scenario: baseline + d,
    })
}

/// Profit recomputed directly from scenario quantities and prices.
pub fn direct_profit(q: &[f64], p: &[f64], is_output: &[bool]) -> f64 {
    q.iter()
        .zip(p)
        .zip(is_output)
        .map(|((q, p), &o)| if o { q * p } else { -q * p })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PctDenominator {
    /// Δ·100 / scenario level.
    #[default]
    Scenario,
    /// Δ·100 / baseline level.
    Baseline,
}

impl std::str::FromStr for PctDenominator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scenario" => Ok(PctDenominator::Scenario),
            "baseline" => Ok(PctDenominator::Baseline),
            _ => Err(Error::InvalidScenario(format!("unknown percentage denominator '{s}'"))),
        }
    }
}

pub fn pct_change(change: f64, baseline: f64, scenario: f64, denom: PctDenominator) -> Option<f64> {
    let d = match denom {
        PctDenominator::Scenario => scenario,
        PctDenominator::Baseline => baseline,
    };
    (d != 0.0).then(|| change * 100.0 / d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    Industry,
    Region,
    Total,
}

impl Grouping {
    fn key(self, d: &FarmDelta) -> String {
        match self {
            Grouping::Industry => d.industry.to_string(),
            Grouping::Region => d.region.clone(),
            Grouping::Total => "all".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateLine {
    pub name: String,
    pub baseline: f64,
    pub scenario: f64,
    pub change: f64,
    pub pct_change: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub grouping: Grouping,
    pub key: String,
    pub farms: usize,
    pub total_weight: f64,
    pub pct_denominator: PctDenominator,
    /// Weighted sums of quantities.
    pub quantities: Vec<AggregateLine>,
    /// Weighted sum of farm profit.
    pub profit: AggregateLine,
    /// Weighted-average cost, revenue and profit lines.
    pub decomposition: Vec<AggregateLine>,
}

/// Ordered accumulator keyed by name, preserving first-seen order.
#[derive(Default)]
struct Lines {
    order: Vec<String>,
    sums: BTreeMap<String, [f64; 3]>,
}

impl Lines {
    fn add(&mut self, name: &str, b: f64, s: f64, c: f64) {
        let e = self.sums.entry(name.to_string()).or_insert_with(|| {
            self.order.push(name.to_string());
            [0.0; 3]
        });
        e[0] += b;
        e[1] += s;
        e[2] += c;
    }

    fn finish(self, scale: f64, denom: PctDenominator) -> Vec<AggregateLine> {
        self.order
            .into_iter()
            .map(|n| {
                let [b, s, c] = self.sums[&n];
                line(&n, b * scale, s * scale, c * scale, denom)
            })
            .collect()
    }
}

fn line(name: &str, baseline: f64, scenario: f64, change: f64, denom: PctDenominator) -> AggregateLine {
    AggregateLine {
        name: name.to_string(),
        baseline,
        scenario,
        change,
        pct_change: pct_change(change, baseline, scenario, denom),
    }
}

fn farm_profit(d: &FarmDelta) -> Result<ProfitDelta> {
    d.profit
        .ok_or_else(|| Error::InvalidScenario(format!("farm {} has no profit delta", d.farm_id)))
}

/// Cost, revenue and profit lines as survey-weighted averages over `deltas`.
/// Changes are averages of farm-level changes.
pub fn decompose(deltas: &[&FarmDelta], denom: PctDenominator) -> Result<Vec<AggregateLine>> {
    if deltas.is_empty() {
        return Err(Error::Empty("aggregation group".into()));
    }
    let total: f64 = deltas.iter().map(|d| d.weight).sum();
    let mut costs = Lines::default();
    let (mut cb, mut cs, mut cc) = (0.0, 0.0, 0.0);
    let (mut rb, mut rs, mut rc) = (0.0, 0.0, 0.0);
    for d in deltas {
        let w = d.weight;
        for i in 0..d.names.len() {
            let (b, s) = (d.value_baseline(i), d.value_scenario(i));
            if d.is_output[i] {
                rb += w * b;
                rs += w * s;
                rc += w * (s - b);
            } else {
                costs.add(&format!("{} cost", d.names[i]), w * b, w * s, w * (s - b));
                cb += w * b;
                cs += w * s;
                cc += w * (s - b);
            }
        }
    }
    let mut out = costs.finish(1.0 / total, denom);
    let scale = 1.0 / total;
    out.push(line("total cost", cb * scale, cs * scale, cc * scale, denom));
    out.push(line("total revenue", rb * scale, rs * scale, rc * scale, denom));
    out.push(line(
        "profit",
        (rb - cb) * scale,
        (rs - cs) * scale,
        (rc - cc) * scale,
        denom,
    ));
    Ok(out)
}

/// Weighted sums of quantity and profit changes per group, groups in sorted
/// key order.
pub fn aggregate(deltas: &[FarmDelta], grouping: Grouping, denom: PctDenominator) -> Result<Vec<AggregateResult>> {
    if deltas.is_empty() {
        return Err(Error::Empty("farm deltas".into()));
    }
    let mut groups: BTreeMap<String, Vec<&FarmDelta>> = BTreeMap::new();
    for d in deltas {
        groups.entry(grouping.key(d)).or_default().push(d);
    }
    let mut out = Vec::with_capacity(groups.len());
    for (key, members) in groups {
        let mut q = Lines::default();
        let (mut pb, mut ps, mut pc) = (0.0, 0.0, 0.0);
        for d in &members {
            let w = d.weight;
            for i in 0..d.names.len() {
                q.add(&d.names[i], w * d.q_baseline[i], w * d.q_scenario[i], w * d.dq[i]);
            }
            let p = farm_profit(d)?;
            pb += w * p.baseline;
            ps += w * p.scenario;
            pc += w * p.delta;
        }
        out.push(AggregateResult {
            grouping,
            key,
            farms: members.len(),
            total_weight: members.iter().map(|d| d.weight).sum(),
            pct_denominator: denom,
            quantities: q.finish(1.0, denom),
            profit: line("profit", pb, ps, pc, denom),
            decomposition: decompose(&members, denom)?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub scenario: String,
    pub baseline_year: i32,
    pub pct_denominator: PctDenominator,
    pub farms: Vec<FarmDelta>,
    pub by_industry: Vec<AggregateResult>,
    pub by_region: Vec<AggregateResult>,
    pub total: AggregateResult,
}

/// Runs `scenario` against the baseline-year records of every industry in
/// `panel` that has parameters in `params`. Baseline quantities are model
/// predictions at the recorded prices and exogenous values.
pub fn simulate(
    params: &[ParameterSet],
    panel: &FarmPanel,
    scenario: &Scenario,
    denom: PctDenominator,
) -> Result<SimulationResult> {
    let year = match scenario.baseline_year {
        Some(y) => y,
        None => panel.last_year().ok_or_else(|| Error::Empty("panel".into()))?,
    };
    let base = panel.year(year)?;
    let mut industries = Vec::new();
    for id in base.industries() {
        match params.iter().find(|p| p.industry_id == id) {
            Some(p) => industries.push((id, p)),
            None => log::warn!("no parameters for {id}; its farms are skipped"),
        }
    }
    if industries.is_empty() {
        return Err(Error::MissingIndustry(
            base.industries()
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(","),
        ));
    }
    let mut farms = Vec::new();
    for (id, p) in industries {
        let spec = base.spec(id)?;
        p.check_matches(spec)?;
        let recs = base.industry_records(id);
        let effects = baseline_numeraire_effects(p, &recs)?;
        let shocked = apply_scenario_lenient(&base, &recs, scenario)?;
        let ctx = DeltaContext {
            params: p,
            spec,
            numeraire_effects: &effects,
        };
        let mut part = recs
            .par_iter()
            .zip(shocked.par_iter())
            .map(|(r, (p1, exog1))| {
                let mut d = farm_deltas(&ctx, r, &r.prices, &r.exogenous(), p1, exog1)?;
                d.profit = Some(profit_delta(&d, &r.prices, p1)?);
                Ok(d)
            })
            .collect::<Result<Vec<FarmDelta>>>()?;
        farms.append(&mut part);
    }
    check_resolved(&base, scenario)?;
    let total = aggregate(&farms, Grouping::Total, denom)?.remove(0);
    Ok(SimulationResult {
        scenario: scenario.name.clone(),
        baseline_year: year,
        pct_denominator: denom,
        by_industry: aggregate(&farms, Grouping::Industry, denom)?,
        by_region: aggregate(&farms, Grouping::Region, denom)?,
        total,
        farms,
    })
}

/// Scenario values for one industry's records; overrides that only apply to
/// other industries are checked once across the whole panel afterwards.
fn apply_scenario_lenient(
    panel: &FarmPanel,
    recs: &[&FarmRecord],
    scenario: &Scenario,
) -> Result<Vec<(PriceVector, Exogenous)>> {
    let all: Vec<&FarmRecord> = panel.records().iter().collect();
    let id = recs.first().map(|r| r.industry);
    let full = apply_scenario(panel, &all, scenario)?;
    Ok(all
        .iter()
        .zip(full)
        .filter(|(r, _)| Some(r.industry) == id)
        .map(|(_, v)| v)
        .collect())
}

fn check_resolved(panel: &FarmPanel, scenario: &Scenario) -> Result<()> {
    let all: Vec<&FarmRecord> = panel.records().iter().collect();
    apply_scenario(panel, &all, scenario).map(|_| ())
}

/// Long-format per-farm quantities and values.
pub fn farm_csv(result: &SimulationResult, format: NumberFormat) -> String {
    let mut out = String::from(
        "farm_id,year,industry,region,weight,quantity,q_baseline,q_scenario,dq,price_baseline,price_scenario,value_baseline,value_scenario\n",
    );
    for d in &result.farms {
        for i in 0..d.names.len() {
            let f = |x: f64| format.fmt(x);
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                d.farm_id,
                d.year,
                d.industry,
                d.region,
                f(d.weight),
                d.names[i],
                f(d.q_baseline[i]),
                f(d.q_scenario[i]),
                f(d.dq[i]),
                f(d.p_baseline[i]),
                f(d.p_scenario[i]),
                f(d.value_baseline(i)),
                f(d.value_scenario(i)),
            ));
        }
    }
    out
}

pub fn farm_profit_csv(result: &SimulationResult, format: NumberFormat) -> String {
    let mut out = String::from("farm_id,year,industry,region,weight,profit_baseline,profit_scenario,profit_change\n");
    for d in &result.farms {
        let (b, s, c) = d
            .profit
            .map(|p| (p.baseline, p.scenario, p.delta))
            .unwrap_or((f64::NAN, f64::NAN, f64::NAN));
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            d.farm_id,
            d.year,
            d.industry,
            d.region,
            format.fmt(d.weight),
            format.fmt(b),
            format.fmt(s),
            format.fmt(c)
        ));
    }
    out
}

/// Weighted profit change per region.
pub fn region_profit_csv(result: &SimulationResult, format: NumberFormat) -> String {
    let mut out =
        String::from("region,farms,total_weight,profit_baseline,profit_scenario,profit_change,profit_pct_change\n");
    for a in &result.by_region {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            a.key,
            a.farms,
            format.fmt(a.total_weight),
            format.fmt(a.profit.baseline),
            format.fmt(a.profit.scenario),
            format.fmt(a.profit.change),
            format.fmt_opt(a.profit.pct_change)
        ));
    }
    out
}

/// Cost/revenue/profit table for each industry and the whole sample.
pub fn decomposition_csv(result: &SimulationResult, format: NumberFormat) -> String {
    let mut out = String::from("group,line,baseline,scenario,change,pct_change\n");
    for a in result.by_industry.iter().chain(std::iter::once(&result.total)) {
        for l in &a.decomposition {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                a.key,
                l.name,
                format.fmt(l.baseline),
                format.fmt(l.scenario),
                format.fmt(l.change),
                format.fmt_opt(l.pct_change)
            ));
        }
    }
    out
}
