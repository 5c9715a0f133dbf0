use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use netputsim_core::estimator::{estimate_panel, EstimateOptions, EstimateReport};
use netputsim_core::fixtures;
use netputsim_core::output::{Metadata, NumberFormat};
use netputsim_core::panel::{load_panel, synth_panel, write_panel, SynthConfig};
use netputsim_core::response::{
    choke_prices_csv, demand_curves_csv, elasticities as elasticity_matrix, marginal_effects_at, own_price_water_table,
    quartile_profiles, water_demand_curve, water_table_csv, EvaluationPoint,
};
use netputsim_core::shock::{
    decomposition_csv, farm_csv, farm_profit_csv, region_profit_csv, simulate as run_scenario, PctDenominator, Scenario,
};
use netputsim_core::validator::{fit_rows_csv, monotonicity_csv, r_squared_csv, validate as run_validation};
use netputsim_core::{Error, FarmPanel, IndustryId, IndustrySpec, PanelSchema, ParameterSet};
use rayon::prelude::*;
use serde_json::Value;

use crate::error::CliError;
use crate::{DemandCurveArgs, ElasticitiesArgs, EstimateArgs, SimulateArgs, SynthArgs, ValidateArgs};

pub struct Context {
    pub format: NumberFormat,
    pub pretty: bool,
}

impl Context {
    fn metadata(&self, command: &str) -> Metadata {
        Metadata::new(command).option("number_format", if self.pretty { "pretty" } else { "exact" })
    }
}

type CliResult<T> = Result<T, CliError>;

/// Collects output files under one directory.
struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn create(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn text(&mut self, name: &str, body: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        log::info!("wrote {}", path.display());
        self.written.push(path);
        Ok(())
    }

    fn csv(&mut self, name: &str, meta: &Metadata, body: &str) -> CliResult<()> {
        self.text(name, &format!("{}{}", meta.csv_comment(), body))
    }

    fn json<T: serde::Serialize>(&mut self, name: &str, meta: &Metadata, value: &T) -> CliResult<()> {
        let v = with_metadata(serde_json::to_value(value)?, meta)?;
        self.text(name, &(serde_json::to_string_pretty(&v)? + "\n"))
    }

    fn finish(self) -> Vec<PathBuf> {
        self.written
    }
}

fn with_metadata(v: Value, meta: &Metadata) -> CliResult<Value> {
    let m = serde_json::to_value(meta)?;
    Ok(match v {
        Value::Object(mut map) => {
            map.insert("metadata".into(), m);
            Value::Object(map)
        }
        other => serde_json::json!({ "metadata": m, "data": other }),
    })
}

fn value_name(v: impl clap::ValueEnum) -> String {
    v.to_possible_value()
        .map(|p| p.get_name().to_string())
        .unwrap_or_default()
}

fn industry_list(ids: &[IndustryId]) -> String {
    ids.iter().map(|id| id.as_str()).collect::<Vec<_>>().join(",")
}

/// `wanted` in canonical order, or everything available when empty.
fn select(available: &[IndustryId], wanted: &[IndustryId]) -> CliResult<Vec<IndustryId>> {
    if wanted.is_empty() {
        return Ok(available.to_vec());
    }
    if let Some(id) = wanted.iter().find(|id| !available.contains(id)) {
        return Err(Error::MissingIndustry(id.to_string()).into());
    }
    Ok(IndustryId::ALL.into_iter().filter(|id| wanted.contains(id)).collect())
}

fn load_params(paths: &[PathBuf]) -> CliResult<BTreeMap<IndustryId, (PathBuf, ParameterSet)>> {
    let mut out = BTreeMap::new();
    for path in paths {
        let p = ParameterSet::load(path)?;
        if let Some((prev, _)) = out.insert(p.industry_id, (path.clone(), p)) {
            return Err(CliError::usage(format!(
                "two parameter files for one industry: {}",
                prev.display()
            )));
        }
    }
    Ok(out)
}

fn selected_params(
    paths: &[PathBuf],
    wanted: &[IndustryId],
) -> CliResult<BTreeMap<IndustryId, (PathBuf, ParameterSet)>> {
    let all = load_params(paths)?;
    let ids = select(&all.keys().copied().collect::<Vec<_>>(), wanted)?;
    Ok(all.into_iter().filter(|(id, _)| ids.contains(id)).collect())
}

fn add_param_inputs(mut meta: Metadata, params: &BTreeMap<IndustryId, (PathBuf, ParameterSet)>) -> CliResult<Metadata> {
    for (id, (path, _)) in params {
        meta = meta.input_file(&format!("params.{id}"), path)?;
    }
    Ok(meta)
}

fn standard_panel(path: &Path) -> CliResult<FarmPanel> {
    Ok(load_panel(path, &PanelSchema::standard())?)
}

pub fn estimate(ctx: &Context, a: &EstimateArgs) -> CliResult<Vec<PathBuf>> {
    if !(a.tolerance > 0.0 && a.tolerance.is_finite()) {
        return Err(CliError::usage("--tolerance must be positive"));
    }
    if a.max_iterations == 0 {
        return Err(CliError::usage("--max-iterations must be at least 1"));
    }
    let panel = standard_panel(&a.panel)?;
    let ids = select(&panel.industries(), &a.industry)?;
    let opts = EstimateOptions {
        weighted: a.weighted_estimation,
        numeraire_equation: !a.no_numeraire_equation,
        max_iterations: a.max_iterations,
        tolerance: a.tolerance,
        ..EstimateOptions::default()
    };
    let meta = ctx
        .metadata("estimate")
        .option("industries", industry_list(&ids))
        .option("weighted_estimation", opts.weighted)
        .option("numeraire_equation", opts.numeraire_equation)
        .option("max_iterations", opts.max_iterations)
        .option("tolerance", format!("{:e}", opts.tolerance))
        .input_file("panel", &a.panel)?;

    let reports: Vec<EstimateReport> = ids
        .par_iter()
        .map(|&id| estimate_panel(&panel, panel.spec(id)?, &opts))
        .collect::<Result<_, Error>>()?;

    let mut out = Outputs::create(&a.out)?;
    for r in &reports {
        let id = r.industry;
        out.json(&format!("params_{id}.json"), &meta, &r.params)?;
        out.csv(&format!("estimates_{id}.csv"), &meta, &r.to_csv(ctx.format))?;
        out.json(&format!("report_{id}.json"), &meta, r)?;
    }
    Ok(out.finish())
}

pub fn simulate(ctx: &Context, a: &SimulateArgs) -> CliResult<Vec<PathBuf>> {
    let params = selected_params(&a.params, &a.industry)?;
    let scenario = Scenario::load(&a.scenario)?;
    let panel = standard_panel(&a.panel)?;
    let denom: PctDenominator = a.pct_denominator.into();
    let ids: Vec<IndustryId> = params.keys().copied().collect();
    let meta = ctx
        .metadata("simulate")
        .option("industries", industry_list(&ids))
        .option("pct_denominator", value_name(a.pct_denominator))
        .input_file("panel", &a.panel)?
        .input_file("scenario", &a.scenario)?;
    let meta = add_param_inputs(meta, &params)?;

    let sets: Vec<ParameterSet> = params.into_values().map(|(_, p)| p).collect();
    let result = run_scenario(&sets, &panel, &scenario, denom)?;

    let mut out = Outputs::create(&a.out)?;
    out.csv("farms.csv", &meta, &farm_csv(&result, ctx.format))?;
    out.csv("farm_profit.csv", &meta, &farm_profit_csv(&result, ctx.format))?;
    out.csv("region_profit.csv", &meta, &region_profit_csv(&result, ctx.format))?;
    out.csv("decomposition.csv", &meta, &decomposition_csv(&result, ctx.format))?;
    let mut agg = serde_json::to_value(&result)?;
    if let Value::Object(m) = &mut agg {
        m.remove("farms");
    }
    out.json("aggregate.json", &meta, &agg)?;
    Ok(out.finish())
}

pub fn elasticities(ctx: &Context, a: &ElasticitiesArgs) -> CliResult<Vec<PathBuf>> {
    let params = selected_params(&a.params, &a.industry)?;
    let mut meta = ctx
        .metadata("elasticities")
        .option("industries", industry_list(&params.keys().copied().collect::<Vec<_>>()));

    let mut points: BTreeMap<IndustryId, EvaluationPoint> = BTreeMap::new();
    for path in &a.eval_point {
        let e = EvaluationPoint::load(path)?;
        meta = meta.input_file(&format!("eval_point.{}", e.industry), path)?;
        if points.insert(e.industry, e).is_some() {
            return Err(CliError::usage(format!(
                "two evaluation points for one industry: {}",
                path.display()
            )));
        }
    }
    let panel = match &a.panel {
        Some(p) => {
            meta = meta.input_file("panel", p)?;
            Some(standard_panel(p)?)
        }
        None => None,
    };
    if let Some(id) = params.keys().find(|id| !points.contains_key(id)) {
        if panel.is_none() {
            return Err(CliError::usage(format!(
                "no evaluation point for {id}; pass --eval-point or --panel"
            )));
        }
        meta = meta.option("reduction", value_name(a.reduction));
    }
    let meta = add_param_inputs(meta, &params)?;

    let mut out = Outputs::create(&a.out)?;
    let mut matrices = Vec::new();
    for (id, (_, p)) in &params {
        let point = match points.remove(id) {
            Some(e) => e,
            None => {
                let panel = panel.as_ref().expect("checked above");
                EvaluationPoint::from_panel(panel, *id, a.reduction.into())?
            }
        };
        let prices = point.price_vector()?;
        let m = marginal_effects_at(p, &prices, point.area)?;
        let e = elasticity_matrix(&m, &prices, &point.quantities)?;
        out.json(&format!("evaluation_point_{id}.json"), &meta, &point)?;
        out.csv(&format!("marginal_effects_{id}.csv"), &meta, &m.to_csv(ctx.format))?;
        out.csv(&format!("elasticities_{id}.csv"), &meta, &e.to_csv(ctx.format))?;
        matrices.push(e);
    }
    if matrices.len() == IndustryId::ALL.len() {
        let table = own_price_water_table(&matrices)?;
        out.csv("water_elasticities.csv", &meta, &water_table_csv(&table, ctx.format))?;
    } else {
        log::info!("water elasticity table needs all four industries; skipped");
    }
    Ok(out.finish())
}

fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let bad = || {
        CliError::usage(format!(
            "--grid expects min:max:points with 0 < min < max and points >= 2, got '{s}'"
        ))
    };
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(bad());
    };
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || n < 2 {
        return Err(bad());
    }
    Ok(linspace(lo, hi, n))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + step * i as f64 })
        .collect()
}

pub fn demand_curve(ctx: &Context, a: &DemandCurveArgs) -> CliResult<Vec<PathBuf>> {
    let fixed_grid = a.grid.as_deref().map(parse_grid).transpose()?;
    if fixed_grid.is_none() && a.grid_points < 2 {
        return Err(CliError::usage("--grid-points must be at least 2"));
    }
    let params = selected_params(&a.params, &a.industry)?;
    let panel = standard_panel(&a.panel)?;
    let mut meta = ctx
        .metadata("demand-curve")
        .option("industries", industry_list(&params.keys().copied().collect::<Vec<_>>()))
        .input_file("panel", &a.panel)?;
    meta = match &a.grid {
        Some(g) => meta.option("grid", g),
        None => meta.option("grid_points", a.grid_points),
    };
    let meta = add_param_inputs(meta, &params)?;

    let mut out = Outputs::create(&a.out)?;
    for (id, (_, p)) in &params {
        let profiles = quartile_profiles(&panel, *id)?;
        let grid = match &fixed_grid {
            Some(g) => g.clone(),
            None => default_grid(p, &profiles, a.grid_points)?,
        };
        let curves = profiles
            .iter()
            .map(|prof| water_demand_curve(p, prof, &grid))
            .collect::<Result<Vec<_>, Error>>()?;
        out.csv(
            &format!("demand_curves_{id}.csv"),
            &meta,
            &demand_curves_csv(&curves, ctx.format, true),
        )?;
        out.csv(
            &format!("choke_prices_{id}.csv"),
            &meta,
            &choke_prices_csv(&curves, ctx.format),
        )?;
        out.json(&format!("demand_curves_{id}.json"), &meta, &curves)?;
    }
    Ok(out.finish())
}

/// From near zero to past the largest choke price, or to twice the highest
/// observed water price when demand never reaches zero.
fn default_grid(
    params: &ParameterSet,
    profiles: &[netputsim_core::response::FarmProfile],
    points: usize,
) -> CliResult<Vec<f64>> {
    let spec = IndustrySpec::standard(params.industry_id);
    let w = spec.water_index().ok_or_else(|| Error::UnknownNetput("water".into()))?;
    let mut upper: f64 = 0.0;
    for prof in profiles {
        let pw = prof.prices.raw()[w];
        upper = upper.max(2.0 * pw);
        if let Some(c) = water_demand_curve(params, prof, &[pw])?.choke_price {
            upper = upper.max(1.1 * c);
        }
    }
    Ok(linspace(upper / points as f64, upper, points))
}

pub fn validate(ctx: &Context, a: &ValidateArgs) -> CliResult<Vec<PathBuf>> {
    let params = selected_params(&a.params, &a.industry)?;
    let panel = standard_panel(&a.panel)?;
    let meta = ctx
        .metadata("validate")
        .option("industries", industry_list(&params.keys().copied().collect::<Vec<_>>()))
        .input_file("panel", &a.panel)?;
    let meta = add_param_inputs(meta, &params)?;

    let results = params
        .iter()
        .map(|(id, (_, p))| run_validation(p, &panel, *id))
        .collect::<Result<Vec<_>, Error>>()?;

    let mut out = Outputs::create(&a.out)?;
    let mut reports = Vec::new();
    for (mut report, rows) in results {
        let id = report.industry;
        let fit = format!("fit_{id}.csv");
        out.csv(&fit, &meta, &fit_rows_csv(&rows, ctx.format))?;
        report.fit_exports = vec![fit];
        out.json(&format!("validation_{id}.json"), &meta, &report)?;
        reports.push(report);
    }
    out.csv("r_squared.csv", &meta, &r_squared_csv(&reports, ctx.format))?;
    out.csv("monotonicity.csv", &meta, &monotonicity_csv(&reports, ctx.format))?;
    Ok(out.finish())
}

pub fn synth(ctx: &Context, a: &SynthArgs) -> CliResult<Vec<PathBuf>> {
    let mut meta = ctx.metadata("synth");
    let configs: Vec<SynthConfig> = if let Some(path) = &a.config {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: SynthConfig = serde_json::from_str(&text)?;
        if let Some(seed) = a.seed {
            cfg.seed = seed;
        }
        meta = meta.input_bytes("config", text.as_bytes()).option("seed", cfg.seed);
        vec![cfg]
    } else {
        if a.industry.is_empty() {
            return Err(CliError::usage("synth needs --config or --industry"));
        }
        let noise = a.noise.unwrap_or(0.0);
        if !(noise >= 0.0 && noise.is_finite()) {
            return Err(CliError::usage("--noise must be a non-negative number"));
        }
        if a.farms == Some(0) {
            return Err(CliError::usage("--farms must be at least 1"));
        }
        let ids = select(&IndustryId::ALL, &a.industry)?;
        let truths = load_params(&a.params)?;
        if let Some(id) = truths.keys().find(|id| !ids.contains(id)) {
            return Err(CliError::usage(format!(
                "--params given for {id}, which is not in --industry"
            )));
        }
        let seed = a.seed.unwrap_or(0);
        meta = add_param_inputs(meta, &truths)?
            .option("industries", industry_list(&ids))
            .option("seed", seed)
            .option("noise", noise);
        if let Some(f) = a.farms {
            meta = meta.option("farms", f);
        }
        ids.iter()
            .enumerate()
            .map(|(k, &id)| {
                let truth = truths
                    .get(&id)
                    .map(|(_, p)| p.clone())
                    .unwrap_or_else(|| fixtures::calibrated_parameters(id));
                let farms = a.farms.unwrap_or_else(|| fixtures::farms_for(id, 10));
                let mut cfg = fixtures::synth_config(truth, farms, seed.wrapping_add(k as u64));
                if noise > 0.0 {
                    cfg.noise_sd = fixtures::relative_noise_sd(id, noise);
                }
                cfg
            })
            .collect()
    };

    let panels = configs.par_iter().map(synth_panel).collect::<Result<Vec<_>, Error>>()?;
    let panel = if panels.len() == 1 {
        panels.into_iter().next().expect("one panel")
    } else {
        let records = panels.into_iter().flat_map(|p| p.into_records()).collect();
        FarmPanel::new(records, PanelSchema::standard())?
    };

    let mut out = Outputs::create(&a.out)?;
    let mut buf = Vec::new();
    write_panel(&panel, &mut buf, ctx.format, Some(&meta))?;
    out.text("panel.csv", &String::from_utf8(buf).expect("panel CSV is UTF-8"))?;
    for cfg in &configs {
        let id = cfg.truth.industry_id;
        out.json(&format!("truth_{id}.json"), &meta, &cfg.truth)?;
        out.json(&format!("synth_config_{id}.json"), &meta, cfg)?;
    }
    Ok(out.finish())
}
