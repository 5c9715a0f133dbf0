//! Declarative industry descriptions.
//!
//! An [`IndustrySpec`] fixes the ordering of netputs (outputs first, then the
//! non-numeraire variable inputs), the fixed inputs and controls that shift
//! them, and how farm quantities are normalised by area before estimation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the numeraire input for every industry.
pub const NUMERAIRE: &str = "materials_services";

/// Prefix of the derived per-output planted-area fixed inputs (horticulture).
pub const AREA_SHARE_PREFIX: &str = "area_share_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndustryId {
    Dairy,
    BroadacreRice,
    BroadacreNonrice,
    Horticulture,
}

impl IndustryId {
    pub const ALL: [IndustryId; 4] = [
        IndustryId::Dairy,
        IndustryId::BroadacreRice,
        IndustryId::BroadacreNonrice,
        IndustryId::Horticulture,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IndustryId::Dairy => "dairy",
            IndustryId::BroadacreRice => "broadacre_rice",
            IndustryId::BroadacreNonrice => "broadacre_nonrice",
            IndustryId::Horticulture => "horticulture",
        }
    }

    pub fn is_broadacre(self) -> bool {
        matches!(self, IndustryId::BroadacreRice | IndustryId::BroadacreNonrice)
    }
}

impl fmt::Display for IndustryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IndustryId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IndustryId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::UnknownIndustry(s.to_string()))
    }
}

/// How the per-hectare divisor is obtained from a farm record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AreaRule {
    TotalAreaOperated,
    TotalHorticulturalArea,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedUnit {
    pub name: String,
    pub unit: String,
}

impl NamedUnit {
    fn new(name: &str, unit: &str) -> Self {
        NamedUnit {
            name: name.to_string(),
            unit: unit.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetputRole {
    Output,
    Input,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndustrySpec {
    pub industry_id: IndustryId,
    pub outputs: Vec<NamedUnit>,
    pub inputs: Vec<NamedUnit>,
    pub numeraire_name: String,
    pub per_hectare: bool,
    pub area_rule: AreaRule,
    pub fixed_input_names: Vec<String>,
    pub control_names: Vec<String>,
    /// region -> water-price group
    pub region_price_groups: BTreeMap<String, String>,
}

/// Regions of the southern basin and the water-price group each belongs to.
pub fn standard_region_groups() -> BTreeMap<String, String> {
    let pairs = [
        ("murrumbidgee", "murrumbidgee"),
        ("lachlan", "lachlan"),
        ("nsw_murray", "lower_murray"),
        ("vic_murray", "lower_murray"),
        ("adelaide_mt_lofty", "lower_murray"),
        ("sa_murray", "sa_murray"),
        ("goulburn", "goulburn_loddon"),
        ("loddon", "goulburn_loddon"),
        ("campaspe", "campaspe"),
        ("ovens_kiewa", "ovens_kiewa"),
    ];
    pairs.iter().map(|(r, g)| (r.to_string(), g.to_string())).collect()
}

const HORT_OUTPUTS: [&str; 7] = [
    "pome",
    "citrus",
    "stone_fruit",
    "table_grapes",
    "wine_grapes",
    "vegetables",
    "other_horticulture",
];

impl IndustrySpec {
    /// Built-in model layout for one of the four irrigation industries.
    pub fn standard(id: IndustryId) -> Self {
        let labour = NamedUnit::new("labour", "weeks");
        let water = NamedUnit::new("water", "ML");
        let controls = vec!["rainfall_mm".to_string(), "education".to_string(), "age".to_string()];
        let broadacre_fixed = vec![
            "area_operated".to_string(),
            "family_labour".to_string(),
            "beef_opening".to_string(),
            "sheep_opening".to_string(),
            "capital".to_string(),
            "entitlement_value".to_string(),
        ];
        let (outputs, inputs, per_hectare, area_rule, fixed) = match id {
            IndustryId::Dairy => (
                vec![NamedUnit::new("milk", "L"), NamedUnit::new("dairy_cattle", "number")],
                vec![labour, NamedUnit::new("fodder", "index"), water],
                true,
                AreaRule::TotalAreaOperated,
                vec![
                    "family_labour".to_string(),
                    "dairy_cattle_opening".to_string(),
                    "capital".to_string(),
                    "entitlement_value".to_string(),
                ],
            ),
            IndustryId::BroadacreRice => (
                vec![
                    NamedUnit::new("rice", "t"),
                    NamedUnit::new("other_broadacre", "t"),
                    NamedUnit::new("livestock", "number"),
                ],
                vec![labour, water],
                false,
                AreaRule::None,
                broadacre_fixed,
            ),
            IndustryId::BroadacreNonrice => (
                vec![
                    NamedUnit::new("other_broadacre", "t"),
                    NamedUnit::new("livestock", "number"),
                ],
                vec![labour, water],
                false,
                AreaRule::None,
                broadacre_fixed,
            ),
            IndustryId::Horticulture => {
                let mut fixed = vec![
                    "family_labour".to_string(),
                    "beef_opening".to_string(),
                    "sheep_opening".to_string(),
                    "capital".to_string(),
                    "other_capital".to_string(),
                    "entitlement_value".to_string(),
                ];
                fixed.extend(HORT_OUTPUTS.iter().map(|o| format!("{AREA_SHARE_PREFIX}{o}")));
                (
                    HORT_OUTPUTS.iter().map(|o| NamedUnit::new(o, "t")).collect(),
                    vec![labour, water],
                    true,
                    AreaRule::TotalHorticulturalArea,
                    fixed,
                )
            }
        };
        let spec = IndustrySpec {
            industry_id: id,
            outputs,
            inputs,
            numeraire_name: NUMERAIRE.to_string(),
            per_hectare,
            area_rule,
            fixed_input_names: fixed,
            control_names: controls,
            region_price_groups: standard_region_groups(),
        };
        debug_assert!(spec.validate().is_ok());
        spec
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidSpec(m));
        if self.outputs.is_empty() {
            return fail("at least one output required".into());
        }
        if self.inputs.is_empty() {
            return fail("at least one non-numeraire input required".into());
        }
        if self.fixed_input_names.is_empty() {
            return fail("at least one fixed input required".into());
        }
        let mut seen = BTreeSet::new();
        for name in self
            .netput_names()
            .iter()
            .chain(&self.fixed_input_names)
            .chain(&self.control_names)
        {
            if !seen.insert(name.clone()) {
                return fail(format!("duplicate name '{name}'"));
            }
        }
        if seen.contains(&self.numeraire_name) {
            return fail("numeraire listed among netputs".into());
        }
        let broadacre = self.industry_id.is_broadacre();
        if self.per_hectare == broadacre {
            return fail("per_hectare must be false exactly for broadacre industries".into());
        }
        if self.per_hectare == (self.area_rule == AreaRule::None) {
            return fail("area_rule inconsistent with per_hectare".into());
        }
        for f in &self.fixed_input_names {
            if let Some(out) = f.strip_prefix(AREA_SHARE_PREFIX) {
                if self.output_index(out).is_none() {
                    return fail(format!("area input '{f}' names no output"));
                }
            }
        }
        Ok(())
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Number of netputs carried by the price-response system (n + m − 1).
    pub fn n_netputs(&self) -> usize {
        self.outputs.len() + self.inputs.len()
    }

    pub fn n_fixed(&self) -> usize {
        self.fixed_input_names.len()
    }

    pub fn n_controls(&self) -> usize {
        self.control_names.len()
    }

    pub fn netput_names(&self) -> Vec<String> {
        self.outputs
            .iter()
            .chain(&self.inputs)
            .map(|u| u.name.clone())
            .collect()
    }

    pub fn role(&self, netput: usize) -> NetputRole {
        if netput < self.outputs.len() {
            NetputRole::Output
        } else {
            NetputRole::Input
        }
    }

    /// +1 for outputs, −1 for inputs: maps netputs to quantities and back.
    pub fn quantity_sign(&self, netput: usize) -> f64 {
        match self.role(netput) {
            NetputRole::Output => 1.0,
            NetputRole::Input => -1.0,
        }
    }

    pub fn netput_index(&self, name: &str) -> Option<usize> {
        self.outputs.iter().chain(&self.inputs).position(|u| u.name == name)
    }

    pub fn output_index(&self, name: &str) -> Option<usize> {
        self.outputs.iter().position(|u| u.name == name)
    }

    pub fn water_index(&self) -> Option<usize> {
        self.netput_index("water")
    }

    /// For a derived planted-area input, the output whose equation carries it.
    pub fn area_input_output(&self, fixed: usize) -> Option<usize> {
        self.fixed_input_names[fixed]
            .strip_prefix(AREA_SHARE_PREFIX)
            .and_then(|o| self.output_index(o))
    }

    /// Whether the price×fixed-input coefficient (netput, fixed) is free.
    /// Planted-area inputs enter only their own output's equation.
    pub fn alpha_included(&self, netput: usize, fixed: usize) -> bool {
        match self.area_input_output(fixed) {
            Some(out) => out == netput,
            None => true,
        }
    }

    /// Fixed inputs entering the numeraire equation (b and D blocks).
    /// Planted-area shares sum to one and are left out to keep the
    /// numeraire regression identified.
    pub fn numeraire_fixed(&self) -> Vec<usize> {
        (0..self.n_fixed())
            .filter(|&f| self.area_input_output(f).is_none())
            .collect()
    }

    pub fn price_group(&self, region: &str) -> Option<&str> {
        self.region_price_groups.get(region).map(|s| s.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_specs_validate() {
        for id in IndustryId::ALL {
            let spec = IndustrySpec::standard(id);
            spec.validate().unwrap();
            assert_eq!(spec.per_hectare, !id.is_broadacre());
            assert!(!spec.netput_names().contains(&NUMERAIRE.to_string()));
        }
    }

    #[test]
    fn broadacre_per_hectare_is_rejected() {
        let mut spec = IndustrySpec::standard(IndustryId::BroadacreRice);
        spec.per_hectare = true;
        spec.area_rule = AreaRule::TotalAreaOperated;
        assert!(matches!(spec.validate(), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let mut spec = IndustrySpec::standard(IndustryId::Dairy);
        spec.control_names.push("milk".into());
        assert!(spec.validate().is_err());
    }

    #[test]
    fn lower_murray_regions_share_a_price_group() {
        let spec = IndustrySpec::standard(IndustryId::Horticulture);
        assert_eq!(spec.price_group("nsw_murray"), spec.price_group("vic_murray"));
        assert_eq!(spec.price_group("adelaide_mt_lofty"), Some("lower_murray"));
        assert_eq!(spec.price_group("goulburn"), spec.price_group("loddon"));
        assert_ne!(spec.price_group("murrumbidgee"), spec.price_group("goulburn"));
    }

    #[test]
    fn horticulture_area_inputs_enter_own_equation_only() {
        let spec = IndustrySpec::standard(IndustryId::Horticulture);
        let pome = spec.output_index("pome").unwrap();
        let f = spec
            .fixed_input_names
            .iter()
            .position(|n| n == "area_share_pome")
            .unwrap();
        assert!(spec.alpha_included(pome, f));
        assert!(!spec.alpha_included(pome + 1, f));
        assert!(!spec.alpha_included(spec.water_index().unwrap(), f));
        assert_eq!(spec.numeraire_fixed().len(), 6);
    }

    #[test]
    fn industry_ids_round_trip_through_strings() {
        for id in IndustryId::ALL {
            assert_eq!(id.as_str().parse::<IndustryId>().unwrap(), id);
        }
        assert!("orchard".parse::<IndustryId>().is_err());
    }
}
