//! Farm panels: CSV ingestion and export, validation, summary statistics and
//! the synthetic-panel generator.

pub mod stats;
pub mod synth;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, RowError};
use crate::industry::{AreaRule, IndustryId, IndustrySpec, AREA_SHARE_PREFIX};
use crate::netput::Exogenous;
use crate::output::{sha256_hex, Metadata, NumberFormat};
use crate::prices::PriceVector;

pub use stats::{
    impute_capital, labour_price, materials_price_index, mean_prices, median, weighted_mean, weighted_median,
    weighted_sd, weighted_summary, CapitalImputation, Statistic, SummaryTable,
};
pub use synth::{synth_panel, SynthConfig};

pub const NUMERAIRE_QUANTITY_COLUMN: &str = "q_materials_services";
pub const NUMERAIRE_PRICE_COLUMN: &str = "p0_materials";
const ID_COLUMNS: [&str; 6] = ["farm_id", "year", "industry", "weight", "region", "area_operated"];
const OPTIONAL_COLUMNS: [&str; 3] = ["wages_paid", "total_capital", "land_value"];

/// One farm-year observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarmRecord {
    pub farm_id: String,
    pub year: i32,
    pub industry: IndustryId,
    pub weight: f64,
    pub region: String,
    /// Hectares.
    pub area_operated: f64,
    /// Planted hectares per output (horticulture only, otherwise empty).
    pub output_areas: Vec<f64>,
    /// Natural-unit quantities in netput order; inputs are stored positive.
    pub quantities: Vec<f64>,
    pub numeraire_quantity: f64,
    pub prices: PriceVector,
    /// Fixed inputs in spec order, including derived planted-area shares.
    pub fixed: Vec<f64>,
    pub controls: Vec<f64>,
    pub wages_paid: Option<f64>,
    pub total_capital: Option<f64>,
    pub land_value: Option<f64>,
}

impl FarmRecord {
    /// Divisor applied to quantities before estimation (1 for level models).
    pub fn area_divisor(&self, spec: &IndustrySpec) -> Result<f64> {
        let area = match spec.area_rule {
            AreaRule::None => return Ok(1.0),
            AreaRule::TotalAreaOperated => self.area_operated,
            AreaRule::TotalHorticulturalArea => self.output_areas.iter().sum(),
        };
        if area > 0.0 && area.is_finite() {
            Ok(area)
        } else {
            Err(Error::NonPositiveArea(area))
        }
    }

    /// Signed farm-level netputs (outputs positive, inputs negative).
    pub fn netputs(&self, spec: &IndustrySpec) -> Vec<f64> {
        self.quantities
            .iter()
            .enumerate()
            .map(|(i, q)| spec.quantity_sign(i) * q)
            .collect()
    }

    /// Signed netputs on the model scale (per hectare where applicable).
    pub fn model_netputs(&self, spec: &IndustrySpec) -> Result<Vec<f64>> {
        let d = self.area_divisor(spec)?;
        Ok(self.netputs(spec).into_iter().map(|v| v / d).collect())
    }

    pub fn model_numeraire(&self, spec: &IndustrySpec) -> Result<f64> {
        Ok(self.numeraire_quantity / self.area_divisor(spec)?)
    }

    pub fn exogenous(&self) -> Exogenous {
        Exogenous::new(self.fixed.clone(), self.controls.clone())
    }
}

/// Column layout of panel files: one [`IndustrySpec`] per industry that may
/// appear in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelSchema {
    pub specs: BTreeMap<IndustryId, IndustrySpec>,
}

impl PanelSchema {
    pub fn standard() -> Self {
        PanelSchema {
            specs: IndustryId::ALL
                .into_iter()
                .map(|id| (id, IndustrySpec::standard(id)))
                .collect(),
        }
    }

    pub fn single(spec: IndustrySpec) -> Self {
        PanelSchema {
            specs: [(spec.industry_id, spec)].into_iter().collect(),
        }
    }

    pub fn spec(&self, id: IndustryId) -> Result<&IndustrySpec> {
        self.specs
            .get(&id)
            .ok_or_else(|| Error::UnknownIndustry(id.to_string()))
    }

    /// Columns a file must carry when it contains rows of industry `id`.
    pub fn required_columns(&self, id: IndustryId) -> Result<Vec<String>> {
        let spec = self.spec(id)?;
        let mut cols: Vec<String> = ID_COLUMNS.iter().map(|s| s.to_string()).collect();
        if spec.area_rule == AreaRule::TotalHorticulturalArea {
            cols.extend(spec.outputs.iter().map(|o| format!("area_{}", o.name)));
        }
        cols.extend(spec.netput_names().iter().map(|n| format!("q_{n}")));
        cols.push(NUMERAIRE_QUANTITY_COLUMN.to_string());
        cols.extend(spec.netput_names().iter().map(|n| format!("praw_{n}")));
        cols.push(NUMERAIRE_PRICE_COLUMN.to_string());
        for f in stored_fixed(spec) {
            cols.push(format!("z_{}", spec.fixed_input_names[f]));
        }
        cols.extend(spec.control_names.iter().cloned());
        Ok(cols)
    }

    /// (column, unit) pairs for every column of industry `id`.
    pub fn units(&self, id: IndustryId) -> Result<Vec<(String, String)>> {
        let spec = self.spec(id)?;
        let mut out = vec![
            ("weight".to_string(), "farms".to_string()),
            ("area_operated".to_string(), "ha".to_string()),
        ];
        if spec.area_rule == AreaRule::TotalHorticulturalArea {
            for o in &spec.outputs {
                out.push((format!("area_{}", o.name), "ha".to_string()));
            }
        }
        for u in spec.outputs.iter().chain(&spec.inputs) {
            out.push((format!("q_{}", u.name), u.unit.clone()));
            out.push((format!("praw_{}", u.name), format!("$/{}", u.unit)));
        }
        out.push((NUMERAIRE_QUANTITY_COLUMN.to_string(), "$ (index-deflated)".to_string()));
        out.push((NUMERAIRE_PRICE_COLUMN.to_string(), "index".to_string()));
        for f in stored_fixed(spec) {
            let name = &spec.fixed_input_names[f];
            let unit = match name.as_str() {
                "family_labour" => "persons",
                "capital" | "other_capital" | "entitlement_value" => "$",
                _ => "number",
            };
            out.push((format!("z_{name}"), unit.to_string()));
        }
        for c in &spec.control_names {
            let unit = match c.as_str() {
                "rainfall_mm" => "mm",
                "education" => "0/1",
                "age" => "years",
                _ => "",
            };
            out.push((c.clone(), unit.to_string()));
        }
        Ok(out)
    }

    /// Digest of the required column sets of every industry.
    pub fn fingerprint(&self) -> String {
        let mut s = String::new();
        for id in self.specs.keys() {
            s.push_str(id.as_str());
            s.push(':');
            s.push_str(&self.required_columns(*id).unwrap_or_default().join(","));
            s.push('\n');
        }
        sha256_hex(s.as_bytes())
    }
}

/// Fixed inputs read from `z_` columns: everything except the area operated
/// (taken from its own column) and the derived planted-area shares.
fn stored_fixed(spec: &IndustrySpec) -> Vec<usize> {
    (0..spec.n_fixed())
        .filter(|&f| {
            let n = &spec.fixed_input_names[f];
            n != "area_operated" && !n.starts_with(AREA_SHARE_PREFIX)
        })
        .collect()
}

/// A validated collection of farm records, partitioned by industry.
#[derive(Debug, Clone, PartialEq)]
pub struct FarmPanel {
    records: Vec<FarmRecord>,
    schema: PanelSchema,
    index: BTreeMap<IndustryId, Vec<usize>>,
}

impl FarmPanel {
    pub fn new(records: Vec<FarmRecord>, schema: PanelSchema) -> Result<Self> {
        let mut errors = Vec::new();
        let mut seen = BTreeSet::new();
        let mut index: BTreeMap<IndustryId, Vec<usize>> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            let line = i + 2;
            let err = |m: String| RowError {
                line,
                farm_id: Some(r.farm_id.clone()),
                column: None,
                message: m,
            };
            let spec = match schema.spec(r.industry) {
                Ok(s) => s,
                Err(e) => {
                    errors.push(err(e.to_string()));
                    continue;
                }
            };
            if !seen.insert((r.farm_id.clone(), r.year)) {
                errors.push(err(format!("duplicate (farm_id, year) = ({}, {})", r.farm_id, r.year)));
            }
            if !(r.weight > 0.0 && r.weight.is_finite()) {
                errors.push(err(format!("weight must be positive, got {}", r.weight)));
            }
            if r.quantities.len() != spec.n_netputs()
                || r.prices.len() != spec.n_netputs()
                || r.fixed.len() != spec.n_fixed()
                || r.controls.len() != spec.n_controls()
            {
                errors.push(err("record dimensions do not match the industry spec".into()));
                continue;
            }
            if let Some(q) = r
                .quantities
                .iter()
                .chain([&r.numeraire_quantity])
                .find(|q| !(**q >= 0.0))
            {
                errors.push(err(format!("quantities must be non-negative, got {q}")));
            }
            if spec.per_hectare {
                if let Err(e) = r.area_divisor(spec) {
                    errors.push(err(e.to_string()));
                }
            }
            index.entry(r.industry).or_default().push(i);
        }
        if !errors.is_empty() {
            return Err(Error::PanelValidation(errors));
        }
        Ok(FarmPanel { records, schema, index })
    }

    pub fn records(&self) -> &[FarmRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<FarmRecord> {
        self.records
    }

    pub fn schema(&self) -> &PanelSchema {
        &self.schema
    }

    pub fn fingerprint(&self) -> String {
        self.schema.fingerprint()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn industries(&self) -> Vec<IndustryId> {
        self.index.keys().copied().collect()
    }

    pub fn spec(&self, id: IndustryId) -> Result<&IndustrySpec> {
        self.schema.spec(id)
    }

    pub fn industry_records(&self, id: IndustryId) -> Vec<&FarmRecord> {
        self.index
            .get(&id)
            .map(|ix| ix.iter().map(|&i| &self.records[i]).collect())
            .unwrap_or_default()
    }

    /// Panel restricted to one industry.
    pub fn subset(&self, id: IndustryId) -> Result<FarmPanel> {
        let recs: Vec<FarmRecord> = self.industry_records(id).into_iter().cloned().collect();
        if recs.is_empty() {
            return Err(Error::Empty(format!("panel for industry {id}")));
        }
        FarmPanel::new(recs, PanelSchema::single(self.schema.spec(id)?.clone()))
    }

    /// The only industry of a single-industry panel.
    pub fn single_industry(&self) -> Result<IndustryId> {
        match self.industries().as_slice() {
            [id] => Ok(*id),
            [] => Err(Error::Empty("panel".into())),
            ids => Err(Error::IndustryMismatch {
                expected: "a single industry".into(),
                got: ids.iter().map(|i| i.as_str()).collect::<Vec<_>>().join(","),
            }),
        }
    }

    /// Records restricted to one year.
    pub fn year(&self, year: i32) -> Result<FarmPanel> {
        let recs: Vec<FarmRecord> = self.records.iter().filter(|r| r.year == year).cloned().collect();
        if recs.is_empty() {
            return Err(Error::Empty(format!("panel for year {year}")));
        }
        FarmPanel::new(recs, self.schema.clone())
    }

    pub fn last_year(&self) -> Option<i32> {
        self.records.iter().map(|r| r.year).max()
    }
}

pub fn load_panel(path: impl AsRef<Path>, schema: &PanelSchema) -> Result<FarmPanel> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_panel(file, schema)
}

struct Row {
    line: usize,
    cells: csv::StringRecord,
}

pub fn read_panel<R: Read>(reader: R, schema: &PanelSchema) -> Result<FarmPanel> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|s| s.to_string()).collect();
    let col: BTreeMap<&str, usize> = header.iter().enumerate().map(|(i, h)| (h.as_str(), i)).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        rows.push(Row { line, cells: rec });
    }

    let mut missing: BTreeSet<String> = ID_COLUMNS
        .iter()
        .filter(|c| !col.contains_key(**c))
        .map(|c| c.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingColumns(missing.into_iter().collect()));
    }
    let industry_col = col["industry"];
    let mut present = BTreeSet::new();
    for r in &rows {
        if let Ok(id) = r.cells.get(industry_col).unwrap_or("").parse::<IndustryId>() {
            present.insert(id);
        }
    }
    for id in &present {
        if let Ok(req) = schema.required_columns(*id) {
            missing.extend(req.into_iter().filter(|c| !col.contains_key(c.as_str())));
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingColumns(missing.into_iter().collect()));
    }

    let mut errors = Vec::new();
    let mut parsed: Vec<(usize, PartialRecord)> = Vec::new();
    for row in &rows {
        match parse_row(row, &col, schema) {
            Ok(p) => parsed.push((row.line, p)),
            Err(mut e) => errors.append(&mut e),
        }
    }

    // Fill blank water prices from the farm's price group in the same year.
    let mut group_prices: BTreeMap<(String, i32), Vec<f64>> = BTreeMap::new();
    for (_, p) in &parsed {
        if let (Some(w), Some(g)) = (p.water_price(), p.price_group.as_ref()) {
            group_prices.entry((g.clone(), p.record.year)).or_default().push(w);
        }
    }
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for (line, mut p) in parsed {
        let fid = Some(p.record.farm_id.clone());
        if let Some(w) = p.water_slot {
            if p.raw[w].is_none() {
                let key = (p.price_group.clone().unwrap_or_default(), p.record.year);
                match group_prices.get(&key).and_then(|v| median(v).ok()) {
                    Some(v) => p.raw[w] = Some(v),
                    None => {
                        errors.push(RowError {
                            line,
                            farm_id: fid.clone(),
                            column: Some("praw_water".into()),
                            message: format!("no water price for group '{}' in {}", key.0, key.1),
                        });
                        continue;
                    }
                }
            }
        }
        if !seen.insert((p.record.farm_id.clone(), p.record.year)) {
            errors.push(RowError {
                line,
                farm_id: fid,
                column: None,
                message: format!("duplicate (farm_id, year) = ({}, {})", p.record.farm_id, p.record.year),
            });
            continue;
        }
        let raw: Vec<f64> = p.raw.iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        match PriceVector::new(raw, p.numeraire_price) {
            Ok(pv) => {
                p.record.prices = pv;
                records.push(p.record);
            }
            Err(e) => errors.push(RowError {
                line,
                farm_id: fid,
                column: None,
                message: e.to_string(),
            }),
        }
    }
    if !errors.is_empty() {
        errors.sort_by_key(|e| e.line);
        return Err(Error::PanelValidation(errors));
    }
    if records.is_empty() {
        return Err(Error::Empty("panel".into()));
    }
    FarmPanel::new(records, schema.clone())
}

struct PartialRecord {
    record: FarmRecord,
    raw: Vec<Option<f64>>,
    numeraire_price: f64,
    water_slot: Option<usize>,
    price_group: Option<String>,
}

impl PartialRecord {
    fn water_price(&self) -> Option<f64> {
        self.water_slot.and_then(|w| self.raw[w])
    }
}

fn parse_row(
    row: &Row,
    col: &BTreeMap<&str, usize>,
    schema: &PanelSchema,
) -> std::result::Result<PartialRecord, Vec<RowError>> {
    let mut errors = Vec::new();
    let cell = |name: &str| -> &str { col.get(name).and_then(|&i| row.cells.get(i)).unwrap_or("") };
    let farm_id = cell("farm_id").to_string();
    let fid = if farm_id.is_empty() {
        None
    } else {
        Some(farm_id.clone())
    };
    let mut err = |column: &str, message: String| {
        errors.push(RowError {
            line: row.line,
            farm_id: fid.clone(),
            column: Some(column.to_string()),
            message,
        })
    };
    if farm_id.is_empty() {
        err("farm_id", "empty farm_id".into());
    }
    let industry = match cell("industry").parse::<IndustryId>() {
        Ok(id) => id,
        Err(e) => {
            err("industry", e.to_string());
            return Err(errors);
        }
    };
    let spec = match schema.spec(industry) {
        Ok(s) => s,
        Err(e) => {
            err("industry", e.to_string());
            return Err(errors);
        }
    };
    let year = match cell("year").parse::<i32>() {
        Ok(y) => y,
        Err(_) => {
            err("year", format!("not an integer: '{}'", cell("year")));
            0
        }
    };
    let mut num = |name: &str, rule: Rule| -> f64 {
        let s = cell(name);
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                let ok = match rule {
                    Rule::Any => true,
                    Rule::NonNegative => v >= 0.0,
                    Rule::Positive => v > 0.0,
                };
                if !ok {
                    let what = if rule == Rule::Positive {
                        "positive"
                    } else {
                        "non-negative"
                    };
                    err(name, format!("must be {what}, got {v}"));
                }
                v
            }
            _ if s.is_empty() => {
                err(name, "missing value".into());
                f64::NAN
            }
            _ => {
                err(name, format!("not a number: '{s}'"));
                f64::NAN
            }
        }
    };
    let weight = num("weight", Rule::Positive);
    let area_operated = num("area_operated", Rule::NonNegative);
    let output_areas: Vec<f64> = if spec.area_rule == AreaRule::TotalHorticulturalArea {
        spec.outputs
            .iter()
            .map(|o| num(&format!("area_{}", o.name), Rule::NonNegative))
            .collect()
    } else {
        Vec::new()
    };
    let quantities: Vec<f64> = spec
        .netput_names()
        .iter()
        .map(|n| num(&format!("q_{n}"), Rule::NonNegative))
        .collect();
    let numeraire_quantity = num(NUMERAIRE_QUANTITY_COLUMN, Rule::NonNegative);
    let water_slot = spec.water_index();
    let mut raw = Vec::new();
    for (i, n) in spec.netput_names().iter().enumerate() {
        let name = format!("praw_{n}");
        if Some(i) == water_slot && cell(&name).is_empty() {
            raw.push(None);
        } else {
            raw.push(Some(num(&name, Rule::Positive)));
        }
    }
    let numeraire_price = num(NUMERAIRE_PRICE_COLUMN, Rule::Positive);
    let stored = stored_fixed(spec);
    let mut fixed = vec![0.0; spec.n_fixed()];
    for &f in &stored {
        fixed[f] = num(&format!("z_{}", spec.fixed_input_names[f]), Rule::NonNegative);
    }
    let controls: Vec<f64> = spec.control_names.iter().map(|c| num(c, Rule::Any)).collect();
    let optional = |name: &str| -> Option<f64> {
        if col.contains_key(name) && !cell(name).is_empty() {
            Some(num(name, Rule::NonNegative))
        } else {
            None
        }
    };
    let [wages_paid, total_capital, land_value] = OPTIONAL_COLUMNS.map(optional);

    let region = cell("region").to_string();
    let price_group = spec.price_group(&region).map(|s| s.to_string());
    if price_group.is_none() {
        err("region", Error::UnknownRegion(region.clone()).to_string());
    }
    let total_hort: f64 = output_areas.iter().sum();
    for f in 0..spec.n_fixed() {
        let name = &spec.fixed_input_names[f];
        if name == "area_operated" {
            fixed[f] = area_operated;
        } else if let Some(o) = spec.area_input_output(f) {
            fixed[f] = if total_hort > 0.0 {
                output_areas[o] / total_hort
            } else {
                0.0
            };
        }
    }
    if let Some(cap) = spec.fixed_input_names.iter().position(|n| n == "capital") {
        if fixed[cap] == 0.0 {
            if let (Some(total), Some(land)) = (total_capital, land_value) {
                let ent = spec
                    .fixed_input_names
                    .iter()
                    .position(|n| n == "entitlement_value")
                    .map(|e| fixed[e])
                    .unwrap_or(0.0);
                match impute_capital(fixed[cap], total, land, ent) {
                    Ok(c) => fixed[cap] = c.value,
                    Err(e) => err("total_capital", e.to_string()),
                }
            }
        }
    }
    if spec.per_hectare {
        let divisor = match spec.area_rule {
            AreaRule::TotalHorticulturalArea => total_hort,
            _ => area_operated,
        };
        if !(divisor > 0.0) {
            let column = if spec.area_rule == AreaRule::TotalHorticulturalArea {
                "area_<output>"
            } else {
                "area_operated"
            };
            err(column, format!("area divisor must be positive, got {divisor}"));
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    let n = spec.n_netputs();
    Ok(PartialRecord {
        record: FarmRecord {
            farm_id,
            year,
            industry,
            weight,
            region,
            area_operated,
            output_areas,
            quantities,
            numeraire_quantity,
            // replaced once the water price is resolved
            prices: PriceVector::new(vec![1.0; n], 1.0).expect("unit prices"),
            fixed,
            controls,
            wages_paid,
            total_capital,
            land_value,
        },
        raw,
        numeraire_price,
        water_slot,
        price_group,
    })
}

#[derive(Clone, Copy, PartialEq)]
enum Rule {
    Any,
    NonNegative,
    Positive,
}

/// Header used when writing `panel`: identifier columns, then each present
/// industry's columns in a fixed order, then optional columns in use.
pub fn panel_columns(panel: &FarmPanel) -> Vec<String> {
    let mut cols: Vec<String> = Vec::new();
    for id in panel.industries() {
        for c in panel.schema.required_columns(id).unwrap_or_default() {
            if !cols.contains(&c) {
                cols.push(c);
            }
        }
    }
    let recs = panel.records();
    let used = [
        recs.iter().any(|r| r.wages_paid.is_some()),
        recs.iter().any(|r| r.total_capital.is_some()),
        recs.iter().any(|r| r.land_value.is_some()),
    ];
    for (c, u) in OPTIONAL_COLUMNS.iter().zip(used) {
        if u {
            cols.push(c.to_string());
        }
    }
    cols
}

pub fn write_panel<W: Write>(
    panel: &FarmPanel,
    mut out: W,
    format: NumberFormat,
    metadata: Option<&Metadata>,
) -> Result<()> {
    if let Some(m) = metadata {
        out.write_all(m.csv_comment().as_bytes())
            .map_err(|e| Error::io("<panel output>", e))?;
    }
    let cols = panel_columns(panel);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&cols)?;
    for r in panel.records() {
        let spec = panel.schema.spec(r.industry)?;
        let mut cells: BTreeMap<String, String> = BTreeMap::new();
        cells.insert("farm_id".into(), r.farm_id.clone());
        cells.insert("year".into(), r.year.to_string());
        cells.insert("industry".into(), r.industry.to_string());
        cells.insert("weight".into(), format.fmt(r.weight));
        cells.insert("region".into(), r.region.clone());
        cells.insert("area_operated".into(), format.fmt(r.area_operated));
        for (o, a) in spec.outputs.iter().zip(&r.output_areas) {
            cells.insert(format!("area_{}", o.name), format.fmt(*a));
        }
        for (n, q) in spec.netput_names().iter().zip(&r.quantities) {
            cells.insert(format!("q_{n}"), format.fmt(*q));
        }
        cells.insert(NUMERAIRE_QUANTITY_COLUMN.into(), format.fmt(r.numeraire_quantity));
        for (n, p) in spec.netput_names().iter().zip(r.prices.raw()) {
            cells.insert(format!("praw_{n}"), format.fmt(*p));
        }
        cells.insert(NUMERAIRE_PRICE_COLUMN.into(), format.fmt(r.prices.numeraire()));
        for f in stored_fixed(spec) {
            cells.insert(format!("z_{}", spec.fixed_input_names[f]), format.fmt(r.fixed[f]));
        }
        for (c, v) in spec.control_names.iter().zip(&r.controls) {
            cells.insert(c.clone(), format.fmt(*v));
        }
        for (c, v) in OPTIONAL_COLUMNS
            .iter()
            .zip([r.wages_paid, r.total_capital, r.land_value])
        {
            if let Some(v) = v {
                cells.insert(c.to_string(), format.fmt(v));
            }
        }
        let row: Vec<&str> = cols
            .iter()
            .map(|c| cells.get(c).map(|s| s.as_str()).unwrap_or(""))
            .collect();
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<panel output>", e))?;
    Ok(())
}

pub fn save_panel(
    panel: &FarmPanel,
    path: impl AsRef<Path>,
    format: NumberFormat,
    metadata: Option<&Metadata>,
) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_panel(panel, std::io::BufWriter::new(file), format, metadata)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DAIRY_HEADER: &str = "farm_id,year,industry,weight,region,area_operated,q_milk,q_dairy_cattle,q_labour,q_fodder,q_water,q_materials_services,praw_milk,praw_dairy_cattle,praw_labour,praw_fodder,praw_water,p0_materials,z_family_labour,z_dairy_cattle_opening,z_capital,z_entitlement_value,rainfall_mm,education,age";

    fn dairy_row(id: &str, weight: &str, water_price: &str) -> String {
        format!("{id},2014,dairy,{weight},goulburn,100,1000000,150,20,120,400,300000,0.45,800,1000,1.1,{water_price},1.02,1.5,280,2500000,900000,420,0,52")
    }

    fn read(text: &str) -> Result<FarmPanel> {
        read_panel(text.as_bytes(), &PanelSchema::standard())
    }

    #[test]
    fn well_formed_dairy_file() {
        let text = format!(
            "{DAIRY_HEADER}\n{}\n{}\n{}\n",
            dairy_row("a", "10", "120"),
            dairy_row("b", "12", "130"),
            dairy_row("c", "14", "125")
        );
        let panel = read(&text).unwrap();
        assert_eq!(panel.len(), 3);
        let spec = panel.spec(IndustryId::Dairy).unwrap().clone();
        let r = &panel.records()[0];
        assert_eq!(r.model_netputs(&spec).unwrap()[0], 10_000.0);
        assert_eq!(r.netputs(&spec)[4], -400.0);
        assert!((r.prices.normalized()[4] - 120.0 / 1.02).abs() < 1e-12);
    }

    #[test]
    fn missing_column_is_named() {
        let header = DAIRY_HEADER.replace(",q_water", "");
        let row = dairy_row("a", "10", "120").replacen(",400,", ",", 1);
        match read(&format!("{header}\n{row}\n")) {
            Err(Error::MissingColumns(cols)) => assert_eq!(cols, vec!["q_water".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_weight_row_is_cited() {
        let text = format!(
            "{DAIRY_HEADER}\n{}\n{}\n",
            dairy_row("a", "10", "120"),
            dairy_row("b", "0", "120")
        );
        match read(&text) {
            Err(Error::PanelValidation(rows)) => {
                assert_eq!(rows.len(), 1);
                assert_eq!(rows[0].line, 3);
                assert_eq!(rows[0].column.as_deref(), Some("weight"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn every_bad_row_is_reported() {
        let text = format!(
            "{DAIRY_HEADER}\n{}\n{}\n{}\n",
            dairy_row("a", "-1", "120"),
            dairy_row("b", "10", "abc"),
            dairy_row("c", "10", "120").replace("goulburn", "atlantis"),
        );
        match read(&text) {
            Err(Error::PanelValidation(rows)) => {
                let lines: Vec<usize> = rows.iter().map(|r| r.line).collect();
                assert_eq!(lines, vec![2, 3, 4]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn blank_water_price_resolves_through_price_group() {
        let loddon = dairy_row("b", "10", "").replace("goulburn", "loddon");
        let text = format!("{DAIRY_HEADER}\n{}\n{loddon}\n", dairy_row("a", "10", "120"));
        let panel = read(&text).unwrap();
        assert_eq!(panel.records()[1].prices.raw()[4], 120.0);

        let lonely = dairy_row("c", "10", "").replace("goulburn", "campaspe");
        let text = format!("{DAIRY_HEADER}\n{}\n{lonely}\n", dairy_row("a", "10", "120"));
        assert!(matches!(read(&text), Err(Error::PanelValidation(_))));
    }

    #[test]
    fn duplicate_farm_year_is_rejected() {
        let text = format!(
            "{DAIRY_HEADER}\n{}\n{}\n",
            dairy_row("a", "10", "120"),
            dairy_row("a", "11", "120")
        );
        assert!(matches!(read(&text), Err(Error::PanelValidation(_))));
    }

    #[test]
    fn comment_lines_are_skipped_and_round_trip_is_exact() {
        let text = format!(
            "# tool: x\n{DAIRY_HEADER}\n{}\n{}\n",
            dairy_row("a", "10.125", "120.3"),
            dairy_row("b", "12", "130")
        );
        let panel = read(&text).unwrap();
        let mut buf = Vec::new();
        write_panel(&panel, &mut buf, NumberFormat::Exact, Some(&Metadata::new("test"))).unwrap();
        let back = read(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, panel);
    }

    #[test]
    fn horticulture_area_shares_are_derived() {
        let spec = IndustrySpec::standard(IndustryId::Horticulture);
        let cols = PanelSchema::standard()
            .required_columns(IndustryId::Horticulture)
            .unwrap();
        let mut vals = Vec::new();
        for c in &cols {
            let v = match c.as_str() {
                "farm_id" => "h1".to_string(),
                "year" => "2014".to_string(),
                "industry" => "horticulture".to_string(),
                "region" => "sa_murray".to_string(),
                "area_pome" => "30".to_string(),
                "area_citrus" => "10".to_string(),
                c if c.starts_with("area_") && c != "area_operated" => "0".to_string(),
                _ => "5".to_string(),
            };
            vals.push(v);
        }
        let text = format!("{}\n{}\n", cols.join(","), vals.join(","));
        let panel = read(&text).unwrap();
        let r = &panel.records()[0];
        assert_eq!(r.area_divisor(&spec).unwrap(), 40.0);
        let pome = spec
            .fixed_input_names
            .iter()
            .position(|n| n == "area_share_pome")
            .unwrap();
        assert_eq!(r.fixed[pome], 0.75);
    }
}
