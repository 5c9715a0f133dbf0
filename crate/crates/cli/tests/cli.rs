use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use netputsim_core::fixtures::{evaluation_point, published_parameters, published_water_elasticities};
use netputsim_core::{IndustryId, IndustrySpec, ParameterSet};
use serde_json::Value;
use tempfile::TempDir;

fn netputsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netputsim"))
        .args(args)
        .env_remove("NETPUTSIM_LOG")
        .output()
        .expect("spawn netputsim")
}

fn run_ok(args: &[&str]) -> Vec<PathBuf> {
    let out = netputsim(args);
    assert!(
        out.status.success(),
        "netputsim {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: Value = serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    v["written"]
        .as_array()
        .expect("written list")
        .iter()
        .map(|p| PathBuf::from(p.as_str().unwrap()))
        .collect()
}

fn run_err(args: &[&str]) -> (i32, Value) {
    let out = netputsim(args);
    assert!(!out.status.success(), "netputsim {args:?} unexpectedly succeeded");
    let stderr = String::from_utf8_lossy(&out.stderr);
    let last = stderr.lines().last().expect("stderr has an error line");
    (
        out.status.code().unwrap(),
        serde_json::from_str(last).expect("error is JSON"),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Data rows of a CSV written by the tool, keyed by header name.
fn read_csv(path: &Path) -> Vec<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| header.iter().cloned().zip(l.split(',').map(String::from)).collect())
        .collect()
}

fn num(row: &BTreeMap<String, String>, col: &str) -> f64 {
    row[col].parse().unwrap_or_else(|_| panic!("{col} = {}", row[col]))
}

fn assert_metadata(files: &[PathBuf]) {
    for f in files {
        let text = fs::read_to_string(f).unwrap();
        match f.extension().and_then(|e| e.to_str()) {
            Some("csv") => assert!(text.starts_with("# tool: netputsim "), "{} lacks metadata", f.display()),
            Some("json") => {
                let v: Value = serde_json::from_str(&text).unwrap();
                assert_eq!(v["metadata"]["tool"], "netputsim", "{}", f.display());
                assert!(v["metadata"]["version"].is_string());
            }
            _ => panic!("unexpected output {}", f.display()),
        }
    }
}

fn synth(dir: &Path, industries: &str, noise: &str, seed: &str) -> PathBuf {
    let out = dir.join("synth");
    let files = run_ok(&[
        "synth",
        "--industry",
        industries,
        "--noise",
        noise,
        "--seed",
        seed,
        "--out",
        s(&out),
    ]);
    assert_metadata(&files);
    out
}

fn write_scenario(path: &Path, overrides: &str) {
    fs::write(path, format!(r#"{{"name": "test", "overrides": [{overrides}]}}"#)).unwrap();
}

#[test]
fn synth_twice_gives_identical_files() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let da = synth(a.path(), "dairy,horticulture", "0.05", "11");
    let db = synth(b.path(), "dairy,horticulture", "0.05", "11");
    let names: Vec<_> = fs::read_dir(&da).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 5);
    for n in names {
        assert_eq!(fs::read(da.join(&n)).unwrap(), fs::read(db.join(&n)).unwrap(), "{n:?}");
    }
    let c = TempDir::new().unwrap();
    let dc = synth(c.path(), "dairy,horticulture", "0.05", "12");
    assert_ne!(
        fs::read(da.join("panel.csv")).unwrap(),
        fs::read(dc.join("panel.csv")).unwrap()
    );
}

#[test]
fn estimate_on_noiseless_panel_recovers_truth() {
    let dir = TempDir::new().unwrap();
    let syn = synth(dir.path(), "dairy", "0", "5");
    let panel = syn.join("panel.csv");
    let before = fs::read(&panel).unwrap();
    let out = dir.path().join("est");
    let files = run_ok(&["estimate", "--panel", s(&panel), "--out", s(&out)]);
    assert_metadata(&files);
    assert_eq!(fs::read(&panel).unwrap(), before);

    let est = ParameterSet::load(out.join("params_dairy.json")).unwrap();
    let truth = ParameterSet::load(syn.join("truth_dairy.json")).unwrap();
    let spec = IndustrySpec::standard(IndustryId::Dairy);
    let c = est.c_matrix();
    assert_eq!(c, c.transpose());
    let e: BTreeMap<_, _> = est.free_parameters(&spec).into_iter().collect();
    for (name, t) in truth.free_parameters(&spec) {
        let rel = (e[&name] - t).abs() / t.abs().max(1e-300);
        assert!(rel < 1e-6, "{name}: estimate {} truth {t} (rel {rel:e})", e[&name]);
    }

    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report_dairy.json")).unwrap()).unwrap();
    assert_eq!(report["metadata"]["options"]["weighted_estimation"], "false");
    assert!(report["metadata"]["inputs"]["panel"].as_str().unwrap().len() == 64);
}

#[test]
fn rank_deficient_panel_error_names_columns() {
    let dir = TempDir::new().unwrap();
    let syn = synth(dir.path(), "dairy", "0.05", "3");
    let text = fs::read_to_string(syn.join("panel.csv")).unwrap();
    let mut out = String::new();
    let mut col = None;
    for line in text.lines() {
        if line.starts_with('#') {
            out.push_str(line);
        } else if col.is_none() {
            col = line.split(',').position(|c| c == "z_capital");
            out.push_str(line);
        } else {
            let mut f: Vec<&str> = line.split(',').collect();
            f[col.unwrap()] = "1000";
            out.push_str(&f.join(","));
        }
        out.push('\n');
    }
    let bad = dir.path().join("rank.csv");
    fs::write(&bad, out).unwrap();
    let (code, err) = run_err(&["estimate", "--panel", s(&bad), "--out", s(&dir.path().join("est"))]);
    assert_eq!(code, 1);
    assert_eq!(err["error"]["code"], "rank_deficient");
    let cols: Vec<&str> = err["error"]["details"]["columns"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_str().unwrap())
        .collect();
    assert!(cols.contains(&"z_capital"), "{cols:?}");
    assert!(err["error"]["message"].as_str().unwrap().contains("z_capital"));
    assert!(!dir.path().join("est").exists());
}

#[test]
fn usage_and_input_errors_are_json() {
    let dir = TempDir::new().unwrap();
    let (code, err) = run_err(&["estimate", "--panel", "p.csv", "--industry", "cows", "--out", "x"]);
    assert_eq!(code, 2);
    assert_eq!(err["error"]["code"], "usage");

    let missing = dir.path().join("missing.csv");
    let (code, err) = run_err(&["estimate", "--panel", s(&missing), "--out", s(&dir.path().join("o"))]);
    assert_eq!(code, 1);
    assert_eq!(err["error"]["code"], "io");

    let (_, err) = run_err(&["synth", "--out", s(&dir.path().join("o"))]);
    assert_eq!(err["error"]["code"], "usage");
}

struct SimSetup {
    _dir: TempDir,
    root: PathBuf,
    panel: PathBuf,
    params: Vec<PathBuf>,
}

fn sim_setup() -> SimSetup {
    let dir = TempDir::new().unwrap();
    let root = dir.path().to_path_buf();
    let syn = synth(&root, "dairy,broadacre_rice", "0", "8");
    SimSetup {
        panel: syn.join("panel.csv"),
        params: vec![syn.join("truth_dairy.json"), syn.join("truth_broadacre_rice.json")],
        root,
        _dir: dir,
    }
}

fn simulate(setup: &SimSetup, panel: &Path, scenario: &Path, out: &str, extra: &[&str]) -> (PathBuf, Vec<PathBuf>) {
    let out = setup.root.join(out);
    let mut args = vec![
        "simulate",
        "--panel",
        s(panel),
        "--scenario",
        s(scenario),
        "--out",
        s(&out),
    ];
    for p in &setup.params {
        args.extend(["--params", s(p)]);
    }
    args.extend(extra);
    let files = run_ok(&args);
    (out, files)
}

#[test]
fn identity_scenario_changes_nothing() {
    let setup = sim_setup();
    let sc = setup.root.join("identity.json");
    write_scenario(&sc, r#"{"netput": "water", "factor": 1.0}"#);
    let (out, files) = simulate(&setup, &setup.panel, &sc, "sim", &[]);
    assert_metadata(&files);
    let farms = read_csv(&out.join("farms.csv"));
    assert!(!farms.is_empty());
    for r in &farms {
        assert_eq!(num(r, "dq"), 0.0);
        assert_eq!(num(r, "q_baseline"), num(r, "q_scenario"));
    }
    for r in read_csv(&out.join("farm_profit.csv")) {
        assert_eq!(num(&r, "profit_change"), 0.0);
    }
    for r in read_csv(&out.join("decomposition.csv")) {
        assert_eq!(num(&r, "change"), 0.0, "{r:?}");
    }
}

#[test]
fn dearer_water_cuts_use_and_profit() {
    let setup = sim_setup();
    let sc = setup.root.join("water30.json");
    write_scenario(&sc, r#"{"netput": "water", "factor": 1.3}"#);
    let (out, _) = simulate(&setup, &setup.panel, &sc, "sim", &[]);
    let agg: Value = serde_json::from_str(&fs::read_to_string(out.join("aggregate.json")).unwrap()).unwrap();
    let groups = agg["by_industry"].as_array().unwrap();
    assert_eq!(groups.len(), 2);
    for g in groups {
        let line = |list: &str, name: &str| -> f64 {
            g[list]
                .as_array()
                .unwrap()
                .iter()
                .find(|l| l["name"] == name)
                .unwrap_or_else(|| panic!("{name} missing from {list}"))["change"]
                .as_f64()
                .unwrap()
        };
        assert!(line("quantities", "water") < 0.0, "{}", g["key"]);
        assert!(line("decomposition", "water cost") > 0.0, "{}", g["key"]);
        assert!(line("decomposition", "profit") < 0.0, "{}", g["key"]);
    }
    assert!(read_csv(&out.join("region_profit.csv"))
        .iter()
        .all(|r| num(r, "profit_change") < 0.0));
}

#[test]
fn two_half_shocks_reach_the_full_shock_netput_levels() {
    let setup = sim_setup();
    let full = setup.root.join("full.json");
    write_scenario(&full, r#"{"netput": "water", "factor": 1.3}"#);
    let (full_out, _) = simulate(&setup, &setup.panel, &full, "full", &[]);

    let half = 1.15;
    let first = setup.root.join("first.json");
    write_scenario(&first, &format!(r#"{{"netput": "water", "factor": {half}}}"#));
    let (first_out, _) = simulate(&setup, &setup.panel, &first, "first", &[]);

    // Second leg starts from a panel whose recorded water prices are the
    // first leg's scenario prices.
    let text = fs::read_to_string(&setup.panel).unwrap();
    let mut moved = String::new();
    let mut col = None;
    for line in text.lines() {
        if line.starts_with('#') {
            continue;
        }
        match col {
            None => {
                col = line.split(',').position(|c| c == "praw_water");
                moved.push_str(line);
            }
            Some(c) => {
                let mut f: Vec<String> = line.split(',').map(String::from).collect();
                f[c] = format!("{:.16e}", f[c].parse::<f64>().unwrap() * half);
                moved.push_str(&f.join(","));
            }
        }
        moved.push('\n');
    }
    let moved_panel = setup.root.join("moved.csv");
    fs::write(&moved_panel, moved).unwrap();
    let second = setup.root.join("second.json");
    write_scenario(&second, &format!(r#"{{"netput": "water", "factor": {}}}"#, 1.3 / half));
    let (second_out, _) = simulate(&setup, &moved_panel, &second, "second", &[]);

    let key = |r: &BTreeMap<String, String>| (r["farm_id"].clone(), r["quantity"].clone());
    let full_rows: BTreeMap<_, _> = read_csv(&full_out.join("farms.csv"))
        .into_iter()
        .map(|r| (key(&r), r))
        .collect();
    let first_rows: BTreeMap<_, _> = read_csv(&first_out.join("farms.csv"))
        .into_iter()
        .map(|r| (key(&r), r))
        .collect();
    let second_rows = read_csv(&second_out.join("farms.csv"));
    let mut checked = 0;
    for r in &second_rows {
        if r["quantity"] == "materials_services" {
            continue;
        }
        let k = key(r);
        let f = &full_rows[&k];
        let scale = num(f, "q_scenario").abs().max(1.0);
        assert!(
            (num(&first_rows[&k], "q_scenario") - num(r, "q_baseline")).abs() < 1e-9 * scale,
            "{k:?}"
        );
        assert!(
            (num(f, "q_scenario") - num(r, "q_scenario")).abs() < 1e-9 * scale,
            "{k:?}"
        );
        let path_dq = num(&first_rows[&k], "dq") + num(r, "dq");
        assert!((num(f, "dq") - path_dq).abs() < 1e-9 * scale, "{k:?}");
        checked += 1;
    }
    assert!(checked > 0);
}

#[test]
fn thread_count_and_pct_denominator_choices() {
    let setup = sim_setup();
    let sc = setup.root.join("water30.json");
    write_scenario(&sc, r#"{"netput": "water", "factor": 1.3}"#);
    let (a, _) = simulate(&setup, &setup.panel, &sc, "a", &["--threads", "1"]);
    let (b, _) = simulate(&setup, &setup.panel, &sc, "b", &["--threads", "4"]);
    for f in [
        "farms.csv",
        "farm_profit.csv",
        "region_profit.csv",
        "decomposition.csv",
        "aggregate.json",
    ] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let (c, _) = simulate(&setup, &setup.panel, &sc, "c", &["--pct-denominator", "baseline"]);
    for (rs, rb) in read_csv(&a.join("region_profit.csv"))
        .iter()
        .zip(read_csv(&c.join("region_profit.csv")))
    {
        let change = num(rs, "profit_change");
        let by_scenario = 100.0 * change / num(rs, "profit_scenario");
        let by_baseline = 100.0 * change / num(&rb, "profit_baseline");
        assert!((num(rs, "profit_pct_change") - by_scenario).abs() <= 1e-12 * by_scenario.abs());
        assert!((num(&rb, "profit_pct_change") - by_baseline).abs() <= 1e-12 * by_baseline.abs());
    }
}

#[test]
fn validate_on_true_parameters_reports_unit_r_squared() {
    let dir = TempDir::new().unwrap();
    let syn = synth(dir.path(), "dairy,broadacre_nonrice", "0", "2");
    let out = dir.path().join("val");
    let files = run_ok(&[
        "validate",
        "--panel",
        s(&syn.join("panel.csv")),
        "--params",
        s(&syn.join("truth_dairy.json")),
        "--params",
        s(&syn.join("truth_broadacre_nonrice.json")),
        "--out",
        s(&out),
    ]);
    assert_metadata(&files);
    let rows = read_csv(&out.join("r_squared.csv"));
    assert_eq!(rows.len(), 6 + 5);
    for r in &rows {
        assert!((num(r, "level_r2") - 1.0).abs() < 1e-9, "{r:?}");
        if r["industry"] == "dairy" {
            assert!((num(r, "per_ha_r2") - 1.0).abs() < 1e-9, "{r:?}");
        } else {
            assert_eq!(r["per_ha_r2"], "undefined");
        }
    }
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("validation_dairy.json")).unwrap()).unwrap();
    assert_eq!(report["fit_exports"][0], "fit_dairy.csv");
    assert!(report["convexity"]["psd"].is_boolean());
}

#[test]
fn elasticities_reproduce_water_table_from_fixture_points() {
    let dir = TempDir::new().unwrap();
    let mut args = vec!["elasticities".to_string()];
    for id in IndustryId::ALL {
        let p = dir.path().join(format!("params_{id}.json"));
        published_parameters(id).save(&p).unwrap();
        let e = dir.path().join(format!("point_{id}.json"));
        fs::write(&e, serde_json::to_string(&evaluation_point(id)).unwrap()).unwrap();
        args.extend(["--params".into(), s(&p).into(), "--eval-point".into(), s(&e).into()]);
    }
    let out = dir.path().join("el");
    args.extend(["--out".into(), s(&out).into()]);
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let files = run_ok(&argv);
    assert_metadata(&files);

    let rows = read_csv(&out.join("water_elasticities.csv"));
    let published = published_water_elasticities();
    assert_eq!(rows.len(), published.len());
    for (r, (id, value, _)) in rows.iter().zip(published) {
        assert_eq!(r["industry"], id.as_str());
        let e = num(r, "own_price_elasticity");
        assert_eq!(format!("{e:.2}"), format!("{value:.2}"), "{id}");
    }
    let dairy = read_csv(&out.join("elasticities_dairy.csv"));
    let water = dairy.iter().find(|r| r["quantity"] == "water").unwrap();
    assert_eq!(format!("{:.2}", num(water, "water")), "-0.49");
}

#[test]
fn demand_curves_clip_at_zero_and_report_choke_prices() {
    let dir = TempDir::new().unwrap();
    let syn = synth(dir.path(), "dairy", "0", "4");
    let out = dir.path().join("dc");
    let files = run_ok(&[
        "demand-curve",
        "--panel",
        s(&syn.join("panel.csv")),
        "--params",
        s(&syn.join("truth_dairy.json")),
        "--out",
        s(&out),
        "--grid-points",
        "40",
    ]);
    assert_metadata(&files);
    let chokes = read_csv(&out.join("choke_prices_dairy.csv"));
    assert_eq!(chokes.len(), 4);
    let curves = read_csv(&out.join("demand_curves_dairy.csv"));
    assert_eq!(curves.len(), 4 * 40);
    for c in &chokes {
        let choke = num(c, "choke_price");
        assert!(num(c, "slope") < 0.0);
        let pts: Vec<_> = curves.iter().filter(|r| r["quartile"] == c["quartile"]).collect();
        assert!(pts.iter().all(|r| num(r, "quantity") >= 0.0));
        assert!(pts.iter().any(|r| num(r, "price") > choke && num(r, "quantity") == 0.0));
        assert!(pts.iter().any(|r| num(r, "price") < choke && num(r, "quantity") > 0.0));
    }
    let raw: Value = serde_json::from_str(&fs::read_to_string(out.join("demand_curves_dairy.json")).unwrap()).unwrap();
    let last = raw["data"][0]["points"].as_array().unwrap().last().unwrap()["quantity"]
        .as_f64()
        .unwrap();
    assert!(last < 0.0);

    let (code, err) = run_err(&[
        "demand-curve",
        "--panel",
        s(&syn.join("panel.csv")),
        "--params",
        s(&syn.join("truth_dairy.json")),
        "--out",
        s(&out),
        "--grid",
        "5:1:10",
    ]);
    assert_eq!(code, 2);
    assert_eq!(err["error"]["code"], "usage");
}
