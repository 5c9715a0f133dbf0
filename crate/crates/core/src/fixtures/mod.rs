//! Reference data: published response matrices, sample means, and calibrated
//! ground-truth parameter sets for the synthetic-panel oracle.
//!
//! Published marginal effects are farm-level quantity effects. Converting
//! them to a netput parameter set flips the sign of input rows and, for the
//! per-hectare industries, divides by the mean area the effects were scaled
//! by.

mod tables;

use std::collections::BTreeMap;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::industry::{IndustryId, IndustrySpec, AREA_SHARE_PREFIX};
use crate::panel::SynthConfig;
use crate::params::{Covariance, ParameterSet};
use crate::response::EvaluationPoint;

use tables::*;

pub const INDUSTRIES: [IndustryId; 4] = IndustryId::ALL;

/// A published square matrix over the netputs plus the numeraire.
#[derive(Debug, Clone, PartialEq)]
pub struct PublishedMatrix {
    pub industry: IndustryId,
    pub names: Vec<String>,
    pub effect: Vec<Vec<f64>>,
    pub se: Vec<Vec<f64>>,
    pub p_value: Vec<Vec<f64>>,
}

impl PublishedMatrix {
    fn from_raw(industry: IndustryId, raw: &RawTable) -> Self {
        let spec = IndustrySpec::standard(industry);
        let mut names = spec.netput_names();
        names.push(spec.numeraire_name.clone());
        assert_eq!(names.len(), raw.n);
        let rows = |v: &[f64]| v.chunks(raw.n).map(|r| r.to_vec()).collect();
        PublishedMatrix {
            industry,
            names,
            effect: rows(raw.effect),
            se: rows(raw.se),
            p_value: rows(raw.p),
        }
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn cell(&self, row: &str, col: &str) -> Option<f64> {
        Some(self.effect[self.index(row)?][self.index(col)?])
    }
}

/// Mean marginal effects, quantity convention, farm level.
pub fn published_marginal_effects(id: IndustryId) -> PublishedMatrix {
    let raw = match id {
        IndustryId::Dairy => &DAIRY_EFFECTS,
        IndustryId::BroadacreRice => &RICE_EFFECTS,
        IndustryId::BroadacreNonrice => &NONRICE_EFFECTS,
        IndustryId::Horticulture => &HORT_EFFECTS,
    };
    PublishedMatrix::from_raw(id, raw)
}

/// Price elasticities at mean prices and quantities.
pub fn published_elasticities(id: IndustryId) -> PublishedMatrix {
    let raw = match id {
        IndustryId::Dairy => &DAIRY_ELASTICITIES,
        IndustryId::BroadacreRice => &RICE_ELASTICITIES,
        IndustryId::BroadacreNonrice => &NONRICE_ELASTICITIES,
        IndustryId::Horticulture => &HORT_ELASTICITIES,
    };
    PublishedMatrix::from_raw(id, raw)
}

/// Published own-price elasticity of water and its p-value, per industry.
pub fn published_water_elasticities() -> Vec<(IndustryId, f64, f64)> {
    vec![
        (IndustryId::Dairy, -0.49, 0.0),
        (IndustryId::BroadacreRice, -2.23, 0.0),
        (IndustryId::BroadacreNonrice, -1.18, 0.0),
        (IndustryId::Horticulture, 0.01, 0.9),
    ]
}

/// Sample mean quantities per farm: netputs in spec order, then materials
/// and services.
pub fn mean_quantities(id: IndustryId) -> Vec<f64> {
    match id {
        IndustryId::Dairy => vec![2_001_957.0, 264.0, 100.0, 352_380.0, 530.0, 796_116.0],
        IndustryId::BroadacreRice => vec![1158.0, 1281.0, 1102.0, 78.0, 1363.0, 542_933.0],
        IndustryId::BroadacreNonrice => vec![1695.0, 1270.0, 80.0, 1013.0, 496_239.0],
        IndustryId::Horticulture => vec![
            1082.0, 833.0, 369.0, 312.0, 1008.0, 3508.0, 361.0, 265.0, 488.0, 704_020.0,
        ],
    }
}

/// Sample mean area operated (ha).
pub fn mean_area(id: IndustryId) -> f64 {
    match id {
        IndustryId::Dairy => 357.0,
        IndustryId::BroadacreRice => 1343.0,
        IndustryId::BroadacreNonrice => 1932.0,
        IndustryId::Horticulture => 123.0,
    }
}

/// Area the published per-hectare effects were scaled by; none for the
/// broadacre industries, which are modelled in levels.
pub fn effect_area(id: IndustryId) -> Option<f64> {
    if id.is_broadacre() {
        None
    } else {
        Some(mean_area(id))
    }
}

/// Sample means of the fixed inputs held in `z_` columns, in spec order.
pub fn mean_stored_fixed(id: IndustryId) -> Vec<f64> {
    match id {
        IndustryId::Dairy => vec![3.0, 436.0, 565_512.0, 1_068_682.0],
        IndustryId::BroadacreRice => vec![3.0, 77.0, 1019.0, 617_277.0, 1_864_854.0],
        IndustryId::BroadacreNonrice => vec![3.0, 79.0, 1288.0, 605_719.0, 1_246_499.0],
        IndustryId::Horticulture => vec![2.0, 5.0, 25.0, 121_154.0, 117_469.0, 591_804.0],
    }
}

/// Representative raw prices ($ per natural unit) used for calibration and
/// evaluation points. Water is a basin-wide allocation price.
pub fn reference_prices(id: IndustryId) -> Vec<f64> {
    match id {
        IndustryId::Dairy => vec![0.45, 800.0, 1000.0, 1.0, 100.0],
        IndustryId::BroadacreRice => vec![350.0, 250.0, 120.0, 1000.0, 100.0],
        IndustryId::BroadacreNonrice => vec![250.0, 120.0, 1000.0, 100.0],
        IndustryId::Horticulture => vec![1200.0, 600.0, 1500.0, 2000.0, 500.0, 800.0, 1500.0, 1000.0, 100.0],
    }
}

/// Mean allocation price per water-price group ($/ML).
pub fn reference_water_prices() -> BTreeMap<String, f64> {
    [
        ("murrumbidgee", 95.0),
        ("lachlan", 80.0),
        ("lower_murray", 110.0),
        ("sa_murray", 115.0),
        ("goulburn_loddon", 105.0),
        ("campaspe", 100.0),
        ("ovens_kiewa", 90.0),
    ]
    .iter()
    .map(|(g, p)| (g.to_string(), *p))
    .collect()
}

/// Horticulture's own-price water effect is printed as 0.00. Its magnitude is
/// recovered from the printed standard error and p-value (|t| = Φ⁻¹(1 − p/2))
/// and its sign from the published elasticity.
pub fn horticulture_water_effect() -> f64 {
    let m = published_marginal_effects(IndustryId::Horticulture);
    let w = m.index("water").unwrap_or(8);
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let t = normal.inverse_cdf(1.0 - m.p_value[w][w] / 2.0);
    let e = published_elasticities(IndustryId::Horticulture);
    t * m.se[w][w] * e.effect[w][w].signum()
}

/// Netput parameter set holding only the published price block: C from the
/// netput rows of the marginal-effect table, per hectare where applicable.
/// The upper triangle is authoritative; every other block is zero. The
/// covariance is diagonal in the printed standard errors.
pub fn published_parameters(id: IndustryId) -> ParameterSet {
    let spec = IndustrySpec::standard(id);
    let m = published_marginal_effects(id);
    let scale = effect_area(id).unwrap_or(1.0);
    let n = spec.n_netputs();
    let nets = spec.netput_names();
    let mut params = ParameterSet::zeros(&spec);
    let mut names = Vec::new();
    let mut variances = Vec::new();
    for i in 0..n {
        for j in i..n {
            let mut q = m.effect[i][j];
            if id == IndustryId::Horticulture && Some(i) == spec.water_index() && i == j {
                q = horticulture_water_effect();
            }
            params.set_c(i, j, spec.quantity_sign(i) * q / scale);
            names.push(format!("C[{},{}]", nets[i], nets[j]));
            variances.push((m.se[i][j] / scale).powi(2));
        }
    }
    let k = names.len();
    params.covariance = Some(Covariance {
        names,
        matrix: (0..k)
            .map(|r| (0..k).map(|c| if r == c { variances[r] } else { 0.0 }).collect())
            .collect(),
    });
    params
}

/// Evaluation point at which an elasticity computation on
/// [`published_parameters`] returns the published own-price water
/// elasticity: the water price is ε·q/m for the published ε, q and m.
pub fn evaluation_point(id: IndustryId) -> EvaluationPoint {
    let spec = IndustrySpec::standard(id);
    let w = spec.water_index().expect("every industry uses water");
    let q = mean_quantities(id);
    let params = published_parameters(id);
    let area = effect_area(id).unwrap_or(1.0);
    let m_ww = spec.quantity_sign(w) * params.C[w][w] * area;
    let eps = published_water_elasticities()
        .into_iter()
        .find(|e| e.0 == id)
        .map(|e| e.1)
        .expect("all industries listed");
    let mut raw = reference_prices(id);
    raw[w] = eps * q[w] / m_ww;
    EvaluationPoint {
        industry: id,
        prices: raw,
        numeraire_price: 1.0,
        quantities: q,
        area,
    }
}

/// Mean normalised price of water implied by the published rice–water
/// effect, rice output and rice–water elasticity.
pub fn rice_water_price_from_elasticity() -> f64 {
    let m = published_marginal_effects(IndustryId::BroadacreRice);
    let e = published_elasticities(IndustryId::BroadacreRice);
    let q = mean_quantities(IndustryId::BroadacreRice);
    e.cell("rice", "water").unwrap() * q[0] / m.cell("rice", "water").unwrap()
}

/// Model-scale divisor used to place calibration targets: the mean planted
/// area for horticulture, mean area operated for dairy, 1 for broadacre.
fn calibration_divisor(id: IndustryId) -> f64 {
    effect_area(id).unwrap_or(1.0)
}

/// Mean area operated fed to the synthetic generator. Horticultural land is
/// drawn as 40–90% of area operated, so the generator's mean is raised to
/// put mean planted area at the published horticulture mean.
fn synth_mean_area(id: IndustryId) -> f64 {
    match id {
        IndustryId::Horticulture => mean_area(id) / 0.65,
        _ => mean_area(id),
    }
}

fn mean_controls(years: [i32; 2]) -> Vec<f64> {
    let age = 52.5 + 0.5 * f64::from(years[1] - years[0]);
    vec![400.0, 0.2, age]
}

/// Model-scale means of every fixed input in spec order.
fn mean_fixed(spec: &IndustrySpec) -> Vec<f64> {
    let stored = mean_stored_fixed(spec.industry_id);
    let shares = spec.n_outputs() as f64;
    let mut it = stored.into_iter();
    spec.fixed_input_names
        .iter()
        .map(|f| {
            if f == "area_operated" {
                synth_mean_area(spec.industry_id)
            } else if f.starts_with(AREA_SHARE_PREFIX) {
                1.0 / shares
            } else {
                it.next().expect("stored fixed means cover every fixed input")
            }
        })
        .collect()
}

fn alternating(i: usize, j: usize) -> f64 {
    if (i + j).is_multiple_of(2) {
        1.0
    } else {
        -0.5
    }
}

fn calibrate(id: IndustryId, flat_horticulture_water: bool) -> ParameterSet {
    let spec = IndustrySpec::standard(id);
    let n = spec.n_netputs();
    let k = spec.n_fixed();
    let years = [2006, 2014];
    let div = calibration_divisor(id);
    let q = mean_quantities(id);
    let target: Vec<f64> = (0..n).map(|i| spec.quantity_sign(i) * q[i] / div).collect();
    let xm = q[n] / div;
    let p = reference_prices(id);
    let z = mean_fixed(&spec);
    let w = mean_controls(years);
    let water = spec.water_index();

    let mut params = published_parameters(id);
    for i in 0..n {
        for j in i..n {
            let keep_flat = flat_horticulture_water && id == IndustryId::Horticulture && Some(i) == water && i == j;
            if keep_flat {
                params.set_c(i, j, 0.0);
            } else if params.C[i][j] == 0.0 {
                let size = 0.02 * (target[i].abs() / p[j]).min(target[j].abs() / p[i]);
                let sign = if i == j { 1.0 } else { alternating(i, j).signum() };
                params.set_c(i, j, sign * size);
            }
        }
    }

    let nonshare: Vec<usize> = spec.numeraire_fixed();
    for i in 0..n {
        for f in 0..k {
            if !spec.alpha_included(i, f) {
                continue;
            }
            params.alpha[i][f] = if spec.area_input_output(f).is_some() {
                0.3 * target[i] / z[f]
            } else {
                0.1 * alternating(i, f) * target[i] / (z[f] * nonshare.len() as f64)
            };
        }
        for c in 0..w.len() {
            params.gamma[i][c] = 0.02 * alternating(i, c + 1) * target[i] / (w[c] * w.len() as f64);
        }
    }
    for i in 0..n {
        let mut a = target[i];
        for j in 0..n {
            a -= params.C[i][j] * p[j];
        }
        for f in 0..k {
            a -= params.alpha[i][f] * z[f];
        }
        for c in 0..w.len() {
            a -= params.gamma[i][c] * w[c];
        }
        params.a[i] = a;
    }

    let pairs = (nonshare.len() * (nonshare.len() + 1) / 2) as f64;
    for (x, &l) in nonshare.iter().enumerate() {
        params.b[l] = -0.1 * alternating(x, 0) * xm / (z[l] * nonshare.len() as f64);
        for (y, &f) in nonshare.iter().enumerate().skip(x) {
            params.set_d(l, f, -0.02 * alternating(x, y) * xm / (z[l] * z[f] * pairs));
        }
    }
    for c in 0..w.len() {
        params.gamma_m[c] = -0.02 * alternating(c, 0) * xm / (w[c] * w.len() as f64);
    }
    let mut neg_xm = -xm;
    for &l in &nonshare {
        neg_xm -= params.b[l] * z[l];
        for &f in &nonshare {
            neg_xm -= 0.5 * params.D[l][f] * z[l] * z[f];
        }
    }
    for c in 0..w.len() {
        neg_xm -= params.gamma_m[c] * w[c];
    }
    for i in 0..n {
        for j in 0..n {
            neg_xm += 0.5 * params.C[i][j] * p[i] * p[j];
        }
    }
    params.a_m = neg_xm;
    params
}

/// Ground truth with the published price block, calibrated so that mean
/// quantities match the published means. Horticulture keeps a zero own-price
/// water coefficient; printed zeros elsewhere are replaced by small values
/// with the same magnitude rule as the oracle truth.
pub fn calibrated_parameters(id: IndustryId) -> ParameterSet {
    calibrate(id, true)
}

/// Like [`calibrated_parameters`] but with every free parameter nonzero, so
/// that relative recovery error is defined for each of them.
pub fn oracle_parameters(id: IndustryId) -> ParameterSet {
    calibrate(id, false)
}

/// Generator settings around a calibrated truth: published fixed-input
/// means, reference prices and regional water prices.
pub fn synth_config(truth: ParameterSet, farms: usize, seed: u64) -> SynthConfig {
    let id = truth.industry_id;
    SynthConfig {
        truth,
        spec: None,
        farms,
        years: [2006, 2014],
        mean_prices: reference_prices(id),
        price_spread: 0.3,
        region_water_prices: reference_water_prices(),
        numeraire_price_range: [0.95, 1.05],
        fixed_means: mean_stored_fixed(id),
        fixed_spread: 0.5,
        mean_area: synth_mean_area(id),
        area_sigma: 0.5,
        regions: Vec::new(),
        weight_range: [5.0, 50.0],
        noise_sd: Vec::new(),
        seed,
    }
}

/// Noise sd per equation (netputs, then the numeraire) equal to `fraction`
/// of the mean quantity on the model scale, floored at `fraction`.
pub fn relative_noise_sd(id: IndustryId, fraction: f64) -> Vec<f64> {
    let scale = effect_area(id).unwrap_or(1.0);
    mean_quantities(id)
        .iter()
        .map(|q| fraction * (q.abs() / scale).max(1.0))
        .collect()
}

/// Farms needed for at least `factor` observations per free parameter over
/// the nine default years.
pub fn farms_for(id: IndustryId, factor: usize) -> usize {
    let spec = IndustrySpec::standard(id);
    let free = ParameterSet::system_parameter_names(&spec).len() + ParameterSet::numeraire_parameter_names(&spec).len();
    (factor * free).div_ceil(9)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_matrices_are_square() {
        for id in INDUSTRIES {
            for m in [published_marginal_effects(id), published_elasticities(id)] {
                let n = m.names.len();
                assert_eq!(m.effect.len(), n);
                assert!(m.effect.iter().chain(&m.se).chain(&m.p_value).all(|r| r.len() == n));
            }
        }
    }

    #[test]
    fn published_effects_are_netput_symmetric() {
        for id in INDUSTRIES {
            let spec = IndustrySpec::standard(id);
            let m = published_marginal_effects(id);
            for i in 0..spec.n_netputs() {
                for j in 0..spec.n_netputs() {
                    let a = spec.quantity_sign(i) * m.effect[i][j];
                    let b = spec.quantity_sign(j) * m.effect[j][i];
                    assert_eq!(a, b, "{id} {} {}", m.names[i], m.names[j]);
                }
            }
        }
    }

    #[test]
    fn rice_water_cells_flip_sign() {
        let m = published_marginal_effects(IndustryId::BroadacreRice);
        assert_eq!(m.cell("rice", "water"), Some(-1.83));
        assert_eq!(m.cell("water", "rice"), Some(1.83));
        let d = published_marginal_effects(IndustryId::Dairy);
        assert_eq!(d.cell("fodder", "water"), Some(179.0));
        assert_eq!(d.cell("water", "fodder"), Some(179.0));
    }

    #[test]
    fn horticulture_water_effect_is_small_and_positive() {
        let m = horticulture_water_effect();
        assert!(m > 0.0 && m < 0.005, "{m}");
        // |t| = m / se reproduces the printed p-value
        let t = m / 0.02;
        let p = statrs::function::erf::erfc(t / std::f64::consts::SQRT_2);
        assert!((p - 0.93).abs() < 1e-9);
    }

    #[test]
    fn published_parameters_are_symmetric() {
        for id in INDUSTRIES {
            let p = published_parameters(id);
            p.validate().unwrap();
        }
        let dairy = published_parameters(IndustryId::Dairy);
        assert_eq!(dairy.C[4][4], 1.0 / 357.0);
    }

    #[test]
    fn evaluation_points_are_positive() {
        for id in INDUSTRIES {
            let e = evaluation_point(id);
            assert!(e.prices.iter().all(|p| *p > 0.0));
        }
        let rice = evaluation_point(IndustryId::BroadacreRice);
        assert!((rice.prices[4] - 2.23 * 1363.0 / 6.59).abs() < 1e-9);
    }

    #[test]
    fn implied_rice_water_price() {
        let p = rice_water_price_from_elasticity();
        assert!((p - 955.5).abs() < 0.1, "{p}");
    }

    #[test]
    fn calibration_hits_mean_quantities() {
        for id in INDUSTRIES {
            let spec = IndustrySpec::standard(id);
            let truth = oracle_parameters(id);
            truth.validate().unwrap();
            let p = crate::PriceVector::new(reference_prices(id), 1.0).unwrap();
            let z = mean_fixed(&spec);
            let ex = crate::netput::Exogenous::new(z, mean_controls([2006, 2014]));
            let v = crate::netput::predict_netputs(&truth, &p, &ex).unwrap().netputs;
            let xm = crate::netput::predict_numeraire(&truth, &p, &ex).unwrap();
            let q = mean_quantities(id);
            let div = calibration_divisor(id);
            for i in 0..v.len() {
                let want = spec.quantity_sign(i) * q[i] / div;
                assert!((v[i] - want).abs() < 1e-9 * want.abs(), "{id} {i}");
            }
            assert!((xm - q[v.len()] / div).abs() < 1e-9 * xm);
        }
    }

    #[test]
    fn oracle_truth_has_no_zero_parameter() {
        for id in INDUSTRIES {
            let spec = IndustrySpec::standard(id);
            for (name, v) in oracle_parameters(id).free_parameters(&spec) {
                assert!(v != 0.0, "{id} {name}");
            }
        }
        let h = calibrated_parameters(IndustryId::Horticulture);
        assert_eq!(h.C[8][8], 0.0);
    }

    #[test]
    fn calibrated_panels_generate() {
        for id in INDUSTRIES {
            for truth in [oracle_parameters(id), calibrated_parameters(id)] {
                let cfg = synth_config(truth, farms_for(id, 10), 3);
                crate::panel::synth_panel(&cfg).unwrap();
            }
        }
    }
}
