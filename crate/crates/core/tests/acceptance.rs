//! Acceptance battery. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::DMatrix;
use netputsim_core::estimator::{estimate_panel, recover_numeraire_effects, EstimateOptions};
use netputsim_core::fixtures::{
    calibrated_parameters, evaluation_point, farms_for, mean_quantities, oracle_parameters, published_elasticities,
    published_parameters, published_water_elasticities, synth_config, INDUSTRIES,
};
use netputsim_core::netput::{predict_netputs, predict_numeraire, restricted_profit};
use netputsim_core::panel::{synth_panel, FarmPanel, FarmRecord};
use netputsim_core::response::{
    elasticities, marginal_effects_at, own_price_water_table, water_demand_curve, ElasticityMatrix, FarmProfile,
};
use netputsim_core::shock::{direct_profit, simulate, PctDenominator, Scenario, SimulationResult};
use netputsim_core::validator::{convexity_check, monotonicity_share};
use netputsim_core::{IndustryId, IndustrySpec, NetputRole, ParameterSet, PriceVector};

mod common;

use common::{random_params, random_point};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    let d = a.abs().max(b.abs());
    if d == 0.0 {
        0.0
    } else {
        (a - b).abs() / d
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for id in INDUSTRIES {
        let spec = IndustrySpec::standard(id);
        let truth = oracle_parameters(id);
        let want = truth.free_parameters(&spec);
        for seed in 0..5 {
            let farms = farms_for(id, 10);
            let panel = synth_panel(&synth_config(truth.clone(), farms, seed)).map_err(|e| e.to_string())?;
            ensure(panel.len() >= 10 * want.len(), || {
                format!("{id}: only {} rows", panel.len())
            })?;
            let got = estimate_panel(&panel, &spec, &EstimateOptions::default())
                .map_err(|e| e.to_string())?
                .params
                .free_parameters(&spec);
            for ((name, t), (_, e)) in want.iter().zip(&got) {
                let r = (e - t).abs() / t.abs();
                worst = worst.max(r);
                ensure(r <= 1e-6, || format!("{id} seed {seed} {name}: relative error {r:e}"))?;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 30.0, || format!("took {secs:.1} s"))?;
    Ok(format!("worst relative error {worst:.2e}, {secs:.2} s"))
}

fn map_prices(panel: &FarmPanel, f: impl Fn(f64) -> f64) -> FarmPanel {
    let recs: Vec<FarmRecord> = panel
        .records()
        .iter()
        .map(|r| {
            let mut r = r.clone();
            let raw = r.prices.raw().iter().map(|p| f(*p)).collect();
            r.prices = PriceVector::new(raw, f(r.prices.numeraire())).unwrap();
            r
        })
        .collect();
    FarmPanel::new(recs, panel.schema().clone()).unwrap()
}

/// Prices on a 2^-20 grid, so that multiplying by 7 is exact.
fn dyadic(p: f64) -> f64 {
    let g = (1u64 << 20) as f64;
    (p * g).round() / g
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_se = 0.0f64;
    for id in INDUSTRIES {
        let spec = IndustrySpec::standard(id);
        let mut cfg = synth_config(calibrated_parameters(id), farms_for(id, 10), 2);
        cfg.noise_sd = mean_quantities(id).iter().map(|q| 0.05 * q.abs().max(1.0)).collect();
        let raw = synth_panel(&cfg).map_err(|e| e.to_string())?;
        let opts = EstimateOptions::default();

        let panel = map_prices(&raw, dyadic);
        let a = estimate_panel(&panel, &spec, &opts).map_err(|e| e.to_string())?;
        let c = a.params.c_matrix();
        ensure(c == c.transpose(), || {
            format!("{id}: estimated C not exactly symmetric")
        })?;
        let b = estimate_panel(&map_prices(&panel, |p| 7.0 * p), &spec, &opts).map_err(|e| e.to_string())?;
        for ((name, x), (_, y)) in a
            .params
            .free_parameters(&spec)
            .iter()
            .zip(&b.params.free_parameters(&spec))
        {
            let r = rel(*x, *y);
            worst = worst.max(r);
            ensure(r <= 1e-12, || format!("{id} {name}: {x} vs {y} after scaling"))?;
        }

        // Full-precision prices: 7·P rounds, so only agreement in units of
        // the standard error is reported.
        let a = estimate_panel(&raw, &spec, &opts).map_err(|e| e.to_string())?;
        let b = estimate_panel(&map_prices(&raw, |p| 7.0 * p), &spec, &opts).map_err(|e| e.to_string())?;
        for (x, y) in a.estimates.iter().zip(&b.estimates) {
            if x.se > 0.0 {
                worst_se = worst_se.max((x.value - y.value).abs() / x.se);
            }
        }
    }
    Ok(format!(
        "C symmetric; worst relative change under exact price scaling {worst:.1e}; \
         with rounded scaling {worst_se:.1e} standard errors"
    ))
}

fn criterion_3() -> Outcome {
    let mut worst = [0.0f64; 3];
    for draw in 0..1000u64 {
        let id = INDUSTRIES[(draw % 4) as usize];
        let p = random_params(id, draw);
        let (prices, exog) = random_point(&p, draw);
        let pn = prices.normalized();
        let y = predict_netputs(&p, &prices, &exog).map_err(|e| e.to_string())?.netputs;
        let xm = predict_numeraire(&p, &prices, &exog).map_err(|e| e.to_string())?;
        let pi = restricted_profit(&p, &prices, &exog).map_err(|e| e.to_string())?;
        let direct = pn.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() - xm;
        let r = rel(pi, direct);
        worst[0] = worst[0].max(r);
        ensure(r <= 1e-9, || format!("draw {draw}: profit identity off by {r:e}"))?;

        let p0 = prices.numeraire();
        let fd_tol = |fd: f64, exact: f64| (fd - exact).abs() / exact.abs().max(1.0);
        for i in 0..p.n_netputs() {
            let h = 1e-4 * prices.raw()[i];
            let up = prices.with_raw(i, prices.raw()[i] + h).unwrap();
            let dn = prices.with_raw(i, prices.raw()[i] - h).unwrap();
            let fd = (restricted_profit(&p, &up, &exog).unwrap() - restricted_profit(&p, &dn, &exog).unwrap())
                / (2.0 * h / p0);
            let r = fd_tol(fd, y[i]);
            worst[1] = worst[1].max(r);
            ensure(r <= 1e-6, || format!("draw {draw}: gradient {i} off by {r:e}"))?;
        }

        let eff = recover_numeraire_effects(&p, &prices)
            .unwrap()
            .numeraire_effects
            .unwrap();
        let h0 = 1e-5 * p0;
        let up = prices.with_numeraire(p0 + h0).unwrap();
        let dn = prices.with_numeraire(p0 - h0).unwrap();
        let yu = predict_netputs(&p, &up, &exog).unwrap().netputs;
        let yd = predict_netputs(&p, &dn, &exog).unwrap().netputs;
        for i in 0..p.n_netputs() {
            let r = fd_tol((yu[i] - yd[i]) / (2.0 * h0), eff.netput_wrt_numeraire[i]);
            worst[2] = worst[2].max(r);
            ensure(r <= 1e-6, || {
                format!("draw {draw}: netput {i} numeraire effect off by {r:e}")
            })?;
            let h = 1e-5 * prices.raw()[i];
            let xu = predict_numeraire(&p, &prices.with_raw(i, prices.raw()[i] + h).unwrap(), &exog).unwrap();
            let xd = predict_numeraire(&p, &prices.with_raw(i, prices.raw()[i] - h).unwrap(), &exog).unwrap();
            let r = fd_tol((xu - xd) / (2.0 * h / p0), eff.numeraire_wrt_netput[i]);
            worst[2] = worst[2].max(r);
            ensure(r <= 1e-6, || format!("draw {draw}: numeraire effect {i} off by {r:e}"))?;
        }
        let fd = (predict_numeraire(&p, &up, &exog).unwrap() - predict_numeraire(&p, &dn, &exog).unwrap()) / (2.0 * h0);
        let r = fd_tol(fd, eff.numeraire_own);
        worst[2] = worst[2].max(r);
        ensure(r <= 1e-6, || format!("draw {draw}: numeraire own effect off by {r:e}"))?;
    }
    Ok(format!(
        "1000 draws; worst duality {:.1e}, gradient {:.1e}, numeraire {:.1e}",
        worst[0], worst[1], worst[2]
    ))
}

fn elasticity_matrix(id: IndustryId) -> Result<ElasticityMatrix, String> {
    let params = published_parameters(id);
    let point = evaluation_point(id);
    let prices = point.price_vector().map_err(|e| e.to_string())?;
    let m = marginal_effects_at(&params, &prices, point.area).map_err(|e| e.to_string())?;
    elasticities(&m, &prices, &point.quantities).map_err(|e| e.to_string())
}

fn criterion_4() -> Outcome {
    let id = IndustryId::BroadacreRice;
    let params = published_parameters(id);
    let point = evaluation_point(id);
    let prices = point.price_vector().map_err(|e| e.to_string())?;
    let m = marginal_effects_at(&params, &prices, point.area).map_err(|e| e.to_string())?;
    let e = elasticities(&m, &prices, &point.quantities).map_err(|e| e.to_string())?;
    let mut col_p = prices.normalized();
    col_p.push(prices.numeraire());
    let q = &point.quantities;
    let mut worst_ulps = 0.0f64;
    for i in 0..q.len() {
        for j in 0..q.len() {
            let rhs = m.effect[i][j] * col_p[j];
            match e.elasticity[i][j] {
                Some(eps) => {
                    ensure(eps == rhs / q[i], || format!("cell ({i},{j}) is not m·p/q"))?;
                    let ulps = (eps * q[i] - rhs).abs() / (f64::EPSILON * rhs.abs()).max(f64::MIN_POSITIVE);
                    worst_ulps = worst_ulps.max(ulps);
                    ensure(ulps <= 1.0, || {
                        format!("cell ({i},{j}): ε·q differs from m·p by {ulps} ulp")
                    })?;
                }
                None => ensure(q[i] <= 0.0, || format!("row {i} undefined with q > 0"))?,
            }
        }
    }
    let matrices: Vec<ElasticityMatrix> = INDUSTRIES
        .iter()
        .map(|&id| elasticity_matrix(id))
        .collect::<Result<_, _>>()?;
    let rows = own_price_water_table(&matrices).map_err(|e| e.to_string())?;
    let mut got = Vec::new();
    for ((id, want, _), row) in published_water_elasticities().iter().zip(&rows) {
        ensure(row.industry == *id, || "industry order".into())?;
        let v = row
            .elasticity
            .ok_or_else(|| format!("{id}: undefined water elasticity"))?;
        ensure((v - want).abs() <= 0.005, || format!("{id}: {v} vs {want}"))?;
        let published = published_elasticities(*id).cell("water", "water").unwrap();
        ensure((published - want).abs() <= 0.005, || {
            format!("{id}: published {published} vs {want}")
        })?;
        got.push(format!("{v:.4}"));
    }
    Ok(format!(
        "ε·q = m·p within {worst_ulps:.0} ulp; water diagonal [{}]",
        got.join(", ")
    ))
}

fn water_scenario(factor: f64) -> Scenario {
    Scenario::price_factor("water", "water", factor)
}

fn run(id: IndustryId, factor: f64, seed: u64) -> Result<SimulationResult, String> {
    let params = calibrated_parameters(id);
    let panel = synth_panel(&synth_config(params.clone(), 60, seed)).map_err(|e| e.to_string())?;
    simulate(&[params], &panel, &water_scenario(factor), PctDenominator::Scenario).map_err(|e| e.to_string())
}

fn criterion_5() -> Outcome {
    let mut worst = [0.0f64; 2];
    let mut farms = 0;
    for id in INDUSTRIES {
        let res = run(id, 1.3, 4)?;
        for d in &res.farms {
            let p = d.profit.ok_or("missing profit")?;
            let direct = direct_profit(&d.q_scenario, &d.p_scenario, &d.is_output)
                - direct_profit(&d.q_baseline, &d.p_baseline, &d.is_output);
            let r = rel(p.delta, direct);
            worst[0] = worst[0].max(r);
            ensure(r <= 1e-9, || {
                format!("{id} farm {}: {} vs {direct}", d.farm_id, p.delta)
            })?;
        }
        farms += res.farms.len();
        let sum: f64 = res.farms.iter().map(|d| d.weight * d.profit.unwrap().delta).sum();
        let r = rel(res.total.profit.change, sum);
        worst[1] = worst[1].max(r);
        ensure(r <= 1e-12, || {
            format!("{id}: aggregate {} vs {sum}", res.total.profit.change)
        })?;
        for line in &res.total.quantities {
            let k = res.farms[0].names.iter().position(|n| *n == line.name).unwrap();
            let sum: f64 = res.farms.iter().map(|d| d.weight * d.dq[k]).sum();
            let r = rel(line.change, sum);
            worst[1] = worst[1].max(r);
            ensure(r <= 1e-12, || {
                format!("{id} {}: aggregate {} vs {sum}", line.name, line.change)
            })?;
        }

        let zero = run(id, 1.0, 4)?;
        for d in &zero.farms {
            ensure(d.dq.iter().all(|v| *v == 0.0), || {
                format!("{id}: nonzero dq under zero shock")
            })?;
            ensure(d.profit.unwrap().delta == 0.0, || {
                format!("{id}: nonzero profit change")
            })?;
        }
        let aggs = zero
            .by_industry
            .iter()
            .chain(&zero.by_region)
            .chain(std::iter::once(&zero.total));
        for a in aggs {
            let lines = a
                .quantities
                .iter()
                .chain(&a.decomposition)
                .chain(std::iter::once(&a.profit));
            for l in lines {
                ensure(l.change == 0.0, || {
                    format!("{id} {}: {} under zero shock", l.name, l.change)
                })?;
            }
        }
    }
    Ok(format!(
        "{farms} farms; worst Δπ mismatch {:.1e}, worst aggregate mismatch {:.1e}; zero shock exact",
        worst[0], worst[1]
    ))
}

fn change(res: &SimulationResult, name: &str) -> Result<f64, String> {
    res.total
        .quantities
        .iter()
        .find(|l| l.name == name)
        .map(|l| l.change)
        .ok_or_else(|| format!("no aggregate line {name}"))
}

fn decomposition_change(res: &SimulationResult, name: &str) -> Result<f64, String> {
    res.total
        .decomposition
        .iter()
        .find(|l| l.name == name)
        .map(|l| l.change)
        .ok_or_else(|| format!("no decomposition line {name}"))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    for id in INDUSTRIES {
        let res = run(id, 1.3, 9)?;
        let water = change(&res, "water")?;
        if id == IndustryId::Horticulture {
            ensure(water == 0.0, || format!("{id}: water changed by {water}"))?;
            notes.push(format!("{id} water 0"));
            continue;
        }
        ensure(water < 0.0, || format!("{id}: water change {water}"))?;
        let cost = decomposition_change(&res, "water cost")?;
        ensure(cost > 0.0, || format!("{id}: water cost change {cost}"))?;
        let profit = res.total.profit.change;
        ensure(profit < 0.0, || format!("{id}: profit change {profit}"))?;
        if id == IndustryId::Dairy {
            let fodder = change(&res, "fodder")?;
            ensure(fodder > 0.0, || format!("dairy fodder change {fodder}"))?;
            let e = published_elasticities(id).cell("fodder", "water").unwrap();
            ensure(e > 0.0, || format!("published fodder-water elasticity {e}"))?;
        }
        notes.push(format!(
            "{id} water {:+.2}%",
            res.total
                .quantities
                .iter()
                .find(|l| l.name == "water")
                .unwrap()
                .pct_change
                .unwrap()
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.1} s"))?;
    Ok(format!("{}; {secs:.2} s", notes.join(", ")))
}

fn criterion_7() -> Outcome {
    let share = |v: &[f64], r| monotonicity_share(v, r).map_err(|e| e.to_string());
    ensure(share(&[1.0, 2.0, 3.0], NetputRole::Output)? == 1.0, || {
        "all positive".into()
    })?;
    ensure(share(&[1.0, -1.0, 1.0, 1.0], NetputRole::Output)? == 0.75, || {
        "0.75 case".into()
    })?;
    ensure(share(&[0.0, 1.0], NetputRole::Output)? == 0.5, || "zero tie".into())?;
    ensure(share(&[0.0, -1.0], NetputRole::Input)? == 0.5, || {
        "input zero tie".into()
    })?;

    let check = |m: &DMatrix<f64>| convexity_check(m, None).map_err(|e| e.to_string());
    let v = check(&DMatrix::identity(3, 3))?;
    ensure(
        v.psd && v.cholesky_psd && (v.min_eigenvalue - 1.0).abs() < 1e-14,
        || "identity".into(),
    )?;
    let v = check(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]))?;
    let dir = v.failing_direction.clone().unwrap_or_default();
    ensure(
        !v.psd
            && !v.cholesky_psd
            && (v.min_eigenvalue + 0.5).abs() < 1e-14
            && dir.len() == 2
            && dir[0].abs() < 1e-14
            && (dir[1] - 1.0).abs() < 1e-14,
        || format!("diag(1, -0.5): {v:?}"),
    )?;
    let u = nalgebra::DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
    let v = check(&(&u * u.transpose()))?;
    ensure(v.psd && v.cholesky_psd && v.min_eigenvalue.abs() <= v.tolerance, || {
        "rank one".into()
    })?;

    // Symmetric, one negative eigenvalue of −0.3.
    let q = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.5, 1.0, 3.0, -0.5, 0.0, 1.0, 2.0])
        .qr()
        .q();
    let c = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 1.5, -0.3])) * q.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let v = check(&c)?;
    ensure(
        !v.psd && !v.cholesky_psd && (v.min_eigenvalue + 0.3).abs() < 1e-12,
        || format!("non-PSD fixture: {v:?}"),
    )?;
    let negatives = v.eigenvalues.iter().filter(|e| **e < 0.0).count();
    ensure(negatives == 1, || format!("{negatives} negative eigenvalues"))?;
    Ok("sign shares, identity, diag(1,-0.5), rank one and non-PSD fixture as expected".into())
}

fn profile(id: IndustryId, params: &ParameterSet, divisor: f64, fixed: Vec<f64>) -> FarmProfile {
    let spec = IndustrySpec::standard(id);
    FarmProfile {
        label: format!("area {divisor}"),
        industry: id,
        area_operated: divisor,
        divisor,
        prices: PriceVector::new(netputsim_core::fixtures::reference_prices(id), 1.0).unwrap(),
        fixed,
        controls: vec![0.0; params.n_controls().max(spec.n_controls())],
        farms: 1,
        weight: 1.0,
    }
}

fn criterion_8() -> Outcome {
    let grid: Vec<f64> = (1..=40).map(|k| 25.0 * k as f64).collect();
    let mut notes = Vec::new();
    for id in [IndustryId::Dairy, IndustryId::Horticulture] {
        let mut params = ParameterSet::zeros(&IndustrySpec::standard(id));
        let spec = IndustrySpec::standard(id);
        let w = spec.water_index().unwrap();
        params.a[w] = -8.0;
        params.set_c(w, w, 0.016);
        let fixed = vec![1.0; spec.n_fixed()];
        params.alpha[w][0] = -0.5;
        let small = water_demand_curve(&params, &profile(id, &params, 40.0, fixed.clone()), &grid)
            .map_err(|e| e.to_string())?;
        let large =
            water_demand_curve(&params, &profile(id, &params, 100.0, fixed), &grid).map_err(|e| e.to_string())?;
        let (cs, cl) = (
            small.choke_price.ok_or("no choke")?,
            large.choke_price.ok_or("no choke")?,
        );
        ensure(rel(cs, cl) <= 1e-9, || format!("{id}: choke {cs} vs {cl}"))?;
        for (a, b) in small.points.iter().zip(&large.points) {
            ensure(
                (2.5 * a.quantity - b.quantity).abs() <= 1e-9 * b.quantity.abs().max(1.0),
                || format!("{id}: {} vs {} at {}", a.quantity, b.quantity, a.price),
            )?;
        }
        notes.push(format!("{id} choke {cs:.3}"));
    }
    let id = IndustryId::BroadacreRice;
    let spec = IndustrySpec::standard(id);
    let w = spec.water_index().unwrap();
    let area = spec
        .fixed_input_names
        .iter()
        .position(|n| n == "area_operated")
        .ok_or("no area input")?;
    let mut params = ParameterSet::zeros(&spec);
    params.a[w] = -50.0;
    params.set_c(w, w, 0.08);
    params.alpha[w][area] = -0.9;
    let mut z = vec![0.0; spec.n_fixed()];
    z[area] = 200.0;
    let a = water_demand_curve(&params, &profile(id, &params, 1.0, z.clone()), &grid).map_err(|e| e.to_string())?;
    z[area] = 500.0;
    let b = water_demand_curve(&params, &profile(id, &params, 1.0, z), &grid).map_err(|e| e.to_string())?;
    ensure(rel(a.slope, b.slope) <= 1e-9, || {
        format!("slopes {} vs {}", a.slope, b.slope)
    })?;
    let shift = b.points[0].quantity - a.points[0].quantity;
    ensure((shift - 270.0).abs() <= 1e-9 * 270.0, || {
        format!("intercept shift {shift}")
    })?;
    for (x, y) in a.points.iter().zip(&b.points) {
        ensure((y.quantity - x.quantity - shift).abs() <= 1e-9 * shift.abs(), || {
            format!("shift varies at {}", x.price)
        })?;
    }
    ensure(a.choke_price != b.choke_price, || {
        "broadacre choke prices should differ".into()
    })?;
    notes.push(format!("broadacre shift {shift:.3}, slope {:.5}", a.slope));
    Ok(notes.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("oracle parameter recovery", criterion_1),
        ("symmetry and price homogeneity", criterion_2),
        ("duality and gradient checks", criterion_3),
        ("elasticity fidelity", criterion_4),
        ("simulation accounting", criterion_5),
        ("water shock directionality", criterion_6),
        ("validator correctness", criterion_7),
        ("demand-curve geometry", criterion_8),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name} ({detail})", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name} ({detail})", k + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
