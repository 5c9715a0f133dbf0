//! Synthetic farm panels generated from a known parameter set.
//!
//! Quantities are the model's own predictions at sampled prices, fixed inputs
//! and controls, plus optional Gaussian noise per equation, so estimation on
//! a noiseless panel must recover the generating parameters.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::industry::{AreaRule, IndustrySpec};
use crate::netput::{predict_netputs_normalized, predict_numeraire_normalized, Exogenous};
use crate::params::ParameterSet;
use crate::prices::PriceVector;

use super::{stored_fixed, FarmPanel, FarmRecord, PanelSchema};

fn default_years() -> [i32; 2] {
    [2006, 2014]
}
fn default_price_spread() -> f64 {
    0.3
}
fn default_half() -> f64 {
    0.5
}
fn default_p0() -> [f64; 2] {
    [0.95, 1.05]
}
fn default_weights() -> [f64; 2] {
    [5.0, 50.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Generating parameters; their industry selects the standard spec unless
    /// `spec` is given.
    pub truth: ParameterSet,
    #[serde(default)]
    pub spec: Option<IndustrySpec>,
    /// Farms; each is observed once per year in `years`.
    pub farms: usize,
    /// First and last year, inclusive.
    #[serde(default = "default_years")]
    pub years: [i32; 2],
    /// Mean raw price per netput.
    pub mean_prices: Vec<f64>,
    /// Prices are drawn uniformly within ±spread of their mean.
    #[serde(default = "default_price_spread")]
    pub price_spread: f64,
    /// Mean water price per water-price group, overriding `mean_prices`.
    #[serde(default)]
    pub region_water_prices: BTreeMap<String, f64>,
    #[serde(default = "default_p0")]
    pub numeraire_price_range: [f64; 2],
    /// Means of the fixed inputs stored in `z_` columns, in spec order.
    pub fixed_means: Vec<f64>,
    #[serde(default = "default_half")]
    pub fixed_spread: f64,
    /// Mean area operated (ha); areas are lognormal around it.
    pub mean_area: f64,
    #[serde(default = "default_half")]
    pub area_sigma: f64,
    /// Regions to draw from; empty means every region of the industry.
    #[serde(default)]
    pub regions: Vec<String>,
    #[serde(default = "default_weights")]
    pub weight_range: [f64; 2],
    /// Noise standard deviation per netput equation followed by the numeraire
    /// equation, on the model scale. Empty means noiseless.
    #[serde(default)]
    pub noise_sd: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl SynthConfig {
    pub fn spec(&self) -> IndustrySpec {
        self.spec
            .clone()
            .unwrap_or_else(|| IndustrySpec::standard(self.truth.industry_id))
    }

    fn validate(&self, spec: &IndustrySpec) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSynthConfig(m));
        spec.validate()?;
        self.truth.validate()?;
        self.truth.check_matches(spec)?;
        if self.farms == 0 {
            return bad("farms must be positive".into());
        }
        if self.years[0] > self.years[1] {
            return bad("years must be ordered".into());
        }
        if self.mean_prices.len() != spec.n_netputs() {
            return Err(Error::dim("mean_prices", spec.n_netputs(), self.mean_prices.len()));
        }
        if self.mean_prices.iter().any(|p| !(*p > 0.0)) {
            return bad("mean prices must be positive".into());
        }
        if !(0.0..1.0).contains(&self.price_spread) || !(0.0..1.0).contains(&self.fixed_spread) {
            return bad("spreads must lie in [0, 1)".into());
        }
        let [lo, hi] = self.numeraire_price_range;
        if !(lo > 0.0 && hi >= lo) {
            return bad("numeraire price range must be positive and ordered".into());
        }
        let stored = stored_fixed(spec).len();
        if self.fixed_means.len() != stored {
            return Err(Error::dim("fixed_means", stored, self.fixed_means.len()));
        }
        if !(self.mean_area > 0.0) || !(self.area_sigma >= 0.0) {
            return bad("area distribution must have positive mean".into());
        }
        let [wl, wh] = self.weight_range;
        if !(wl > 0.0 && wh >= wl) {
            return bad("weight range must be positive and ordered".into());
        }
        if !self.noise_sd.is_empty() && self.noise_sd.len() != spec.n_netputs() + 1 {
            return Err(Error::dim("noise_sd", spec.n_netputs() + 1, self.noise_sd.len()));
        }
        if self.noise_sd.iter().any(|s| !(*s >= 0.0)) {
            return bad("noise standard deviations must be non-negative".into());
        }
        for r in &self.regions {
            if spec.price_group(r).is_none() {
                return Err(Error::UnknownRegion(r.clone()));
            }
        }
        for (g, p) in &self.region_water_prices {
            if !spec.region_price_groups.values().any(|v| v == g) {
                return Err(Error::UnknownRegion(g.clone()));
            }
            if !(*p > 0.0) {
                return bad(format!("water price for '{g}' must be positive"));
            }
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

struct Farm {
    region: String,
    area: f64,
    hort_fraction: f64,
    shares: Vec<f64>,
    weight: f64,
    z: Vec<f64>,
    education: f64,
    age: f64,
}

/// Generates a panel of `farms × years` records. Deterministic in the seed.
///
/// Noise-free quantities that come out negative mean the generating
/// parameters are not monotone on the sampled domain and are reported as a
/// config error; noisy draws below zero are censored at zero.
pub fn synth_panel(cfg: &SynthConfig) -> Result<FarmPanel> {
    let spec = cfg.spec();
    cfg.validate(&spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let regions: Vec<String> = if cfg.regions.is_empty() {
        spec.region_price_groups.keys().cloned().collect()
    } else {
        cfg.regions.clone()
    };
    let stored = stored_fixed(&spec);
    let n = spec.n_netputs();
    let hort = spec.area_rule == AreaRule::TotalHorticulturalArea;

    let mut farms = Vec::with_capacity(cfg.farms);
    for _ in 0..cfg.farms {
        let region = regions[rng.random_range(0..regions.len())].clone();
        let g: f64 = rng.sample(StandardNormal);
        let s = cfg.area_sigma;
        let area = cfg.mean_area * (s * g - 0.5 * s * s).exp();
        let hort_fraction = uniform(&mut rng, 0.4, 0.9);
        let shares = if hort {
            let u: Vec<f64> = (0..spec.n_outputs()).map(|_| uniform(&mut rng, 0.05, 1.0)).collect();
            let t: f64 = u.iter().sum();
            u.into_iter().map(|x| x / t).collect()
        } else {
            Vec::new()
        };
        let weight = uniform(&mut rng, cfg.weight_range[0], cfg.weight_range[1]);
        let z = cfg
            .fixed_means
            .iter()
            .map(|m| m * uniform(&mut rng, 1.0 - cfg.fixed_spread, 1.0 + cfg.fixed_spread))
            .collect();
        let education = if rng.random_bool(0.2) { 1.0 } else { 0.0 };
        let age = uniform(&mut rng, 30.0, 75.0);
        farms.push(Farm {
            region,
            area,
            hort_fraction,
            shares,
            weight,
            z,
            education,
            age,
        });
    }

    let water = spec.water_index();
    let mut records = Vec::new();
    for year in cfg.years[0]..=cfg.years[1] {
        for (fi, farm) in farms.iter().enumerate() {
            let group = spec.price_group(&farm.region).unwrap_or_default();
            let ps = cfg.price_spread;
            let raw: Vec<f64> = (0..n)
                .map(|i| {
                    let mean = match (Some(i) == water, cfg.region_water_prices.get(group)) {
                        (true, Some(p)) => *p,
                        _ => cfg.mean_prices[i],
                    };
                    mean * uniform(&mut rng, 1.0 - ps, 1.0 + ps)
                })
                .collect();
            let [lo, hi] = cfg.numeraire_price_range;
            let p0 = uniform(&mut rng, lo, hi);
            let prices = PriceVector::new(raw, p0)?;

            let output_areas: Vec<f64> = farm.shares.iter().map(|s| s * farm.area * farm.hort_fraction).collect();
            let mut fixed = vec![0.0; spec.n_fixed()];
            for (x, &f) in stored.iter().enumerate() {
                fixed[f] = farm.z[x] * uniform(&mut rng, 0.95, 1.05);
            }
            for f in 0..spec.n_fixed() {
                if spec.fixed_input_names[f] == "area_operated" {
                    fixed[f] = farm.area;
                } else if let Some(o) = spec.area_input_output(f) {
                    fixed[f] = farm.shares[o];
                }
            }
            let mut controls = Vec::with_capacity(spec.n_controls());
            for c in &spec.control_names {
                controls.push(match c.as_str() {
                    "rainfall_mm" => uniform(&mut rng, 200.0, 600.0),
                    "education" => farm.education,
                    "age" => farm.age + f64::from(year - cfg.years[0]),
                    _ => uniform(&mut rng, 0.0, 1.0),
                });
            }

            let exog = Exogenous::new(fixed.clone(), controls.clone());
            let p = prices.normalized();
            let model = predict_netputs_normalized(&cfg.truth, &p, &exog)?;
            let xm = predict_numeraire_normalized(&cfg.truth, &p, &exog)?;
            let divisor = match spec.area_rule {
                AreaRule::None => 1.0,
                AreaRule::TotalAreaOperated => farm.area,
                AreaRule::TotalHorticulturalArea => output_areas.iter().sum(),
            };
            let mut quantities = Vec::with_capacity(n);
            for (i, v) in model.iter().enumerate() {
                let q = spec.quantity_sign(i) * v;
                if q < 0.0 {
                    return Err(Error::InvalidSynthConfig(format!(
                        "noise-free {} is negative ({q}); parameters are not monotone on the sampled domain",
                        spec.netput_names()[i]
                    )));
                }
                let e = noise(cfg, i, &mut rng);
                quantities.push(((v + e) * spec.quantity_sign(i)).max(0.0) * divisor);
            }
            if xm < 0.0 {
                return Err(Error::InvalidSynthConfig(format!(
                    "noise-free numeraire quantity is negative ({xm})"
                )));
            }
            let e = noise(cfg, n, &mut rng);
            let numeraire_quantity = (xm + e).max(0.0) * divisor;

            records.push(FarmRecord {
                farm_id: format!("{}-{:05}", spec.industry_id, fi + 1),
                year,
                industry: spec.industry_id,
                weight: farm.weight,
                region: farm.region.clone(),
                area_operated: farm.area,
                output_areas,
                quantities,
                numeraire_quantity,
                prices,
                fixed,
                controls,
                wages_paid: None,
                total_capital: None,
                land_value: None,
            });
        }
    }
    FarmPanel::new(records, PanelSchema::single(spec))
}

fn noise(cfg: &SynthConfig, eq: usize, rng: &mut ChaCha8Rng) -> f64 {
    match cfg.noise_sd.get(eq) {
        Some(&s) if s > 0.0 => {
            let g: f64 = rng.sample(StandardNormal);
            s * g
        }
        _ => 0.0,
    }
}
