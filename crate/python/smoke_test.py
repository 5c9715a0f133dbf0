"""Smoke test for the netputsim Python extension.

Build and install first:

    pip install --no-build-isolation ./crates/py
    python python/smoke_test.py
"""

import math

import netputsim as ns


def close(a, b, rel):
    return abs(a - b) <= rel * max(abs(b), 1e-300)


def check_estimation():
    truth = ns.ParameterSet.calibrated("dairy")
    panel = ns.Panel.synth("dairy", seed=3)
    assert len(panel) > 0 and panel.industries() == ["dairy"]
    report = ns.estimate(panel, "dairy")
    est = report.params
    for row_e, row_t in zip(est.c, truth.c):
        for e, t in zip(row_e, row_t):
            assert close(e, t, 1e-6), (e, t)
    c = est.c
    assert all(c[i][j] == c[j][i] for i in range(len(c)) for j in range(len(c)))
    assert report.iterations >= 1
    assert all(se >= 0 and 0 <= p <= 1 for _, _, se, p in report.estimates())
    roundtrip = ns.ParameterSet.from_json(est.to_json())
    assert roundtrip.c == est.c


def check_water_elasticities():
    expected = {"dairy": -0.49, "broadacre_rice": -2.23, "broadacre_nonrice": -1.18, "horticulture": 0.01}
    for industry, value in expected.items():
        params = ns.ParameterSet.published(industry)
        point = ns.evaluation_point(industry)
        e = params.elasticities(point["prices"], point["numeraire_price"], point["quantities"], point["area"])
        w = e["names"].index("water")
        assert round(e["elasticity"][w][w], 2) == value, (industry, e["elasticity"][w][w])


def check_simulation():
    params = ns.ParameterSet.calibrated("dairy")
    panel = ns.Panel.synth("dairy", seed=4)
    same = ns.simulate([params], panel, {"name": "identity", "overrides": [{"netput": "water", "factor": 1.0}]})
    assert all(d == 0.0 for farm in same["farms"] for d in farm["dq"])
    shock = ns.simulate([params], panel, {"name": "water30", "overrides": [{"netput": "water", "factor": 1.3}]})
    group = shock["by_industry"][0]
    water = next(l for l in group["quantities"] if l["name"] == "water")
    profit = next(l for l in group["decomposition"] if l["name"] == "profit")
    assert water["change"] < 0 and profit["change"] < 0
    pct = 100 * profit["change"] / profit["scenario"]
    assert close(profit["pct_change"], pct, 1e-12)


def check_validator():
    params = ns.ParameterSet.calibrated("broadacre_rice")
    panel = ns.Panel.synth("broadacre_rice", seed=5)
    out = ns.validate(params, panel)
    for eq in out["report"]["equations"]:
        assert abs(eq["r_squared_level"] - 1) < 1e-9, eq
    v = ns.convexity_check([[1.0, 0.0], [0.0, -1.0]])
    assert v["psd"] is False and v["min_eigenvalue"] == -1.0
    assert ns.monotonicity_share([1.0, 2.0, -1.0, 0.0], "output") == 0.5
    assert math.isclose(ns.r_squared([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]), 1.0)


def check_errors():
    panel = ns.Panel.synth("dairy", farms=20, seed=1)
    try:
        ns.estimate(panel, "horticulture")
    except ns.NetputsimError as e:
        assert e.args[0] == "missing_industry", e.args
    else:
        raise AssertionError("estimating an absent industry should fail")
    try:
        ns.ParameterSet.published("cows")
    except ns.NetputsimError as e:
        assert e.args[0] == "unknown_industry"
    else:
        raise AssertionError("unknown industry accepted")


if __name__ == "__main__":
    for check in (check_estimation, check_water_elasticities, check_simulation, check_validator, check_errors):
        check()
        print(f"ok {check.__name__}")
    print(f"netputsim {ns.__version__} smoke test passed")
