"""Smoke tests for the python bindings."""

import math
import random

import pytest

import addtrend


def _columns(n, d, seed):
    rng = random.Random(seed)
    cols = []
    for _ in range(d):
        vals = sorted(rng.uniform(0, 1) for _ in range(n))
        rng.shuffle(vals)
        cols.append(vals)
    return cols


def test_dp_and_admm_agree():
    rng = random.Random(3)
    n = 60
    y = [(1.0 if i % 10 < 5 else -1.0) + 0.3 * rng.gauss(0, 1) for i in range(n)]
    x = [i / n for i in range(n)]
    lam = 0.2
    dp = addtrend.tf_dp_k0(y, lam)
    fit = addtrend.tf_admm(y, x, 0, lam)
    assert fit["converged"]
    assert max(abs(a - b) for a, b in zip(dp, fit["theta"])) < 1e-6


def test_additive_fit_and_predict():
    n, d = 80, 2
    cols = _columns(n, d, seed=11)
    rng = random.Random(5)
    y = [
        math.sin(6 * cols[0][i]) + cols[1][i] ** 2 + 0.2 * rng.gauss(0, 1)
        for i in range(n)
    ]
    lmax = max(addtrend.lambda_max([y[i] - sum(y) / n for i in range(n)], sorted(c), 1)
               for c in [cols[0]])
    model = addtrend.fit_additive(cols, y, k=1, lambdas=[0.1 * lmax])
    assert model.converged
    assert model.kkt_gap <= 1e-6
    cert = addtrend.certify(model, y)
    assert cert["gap"] <= 1e-5

    pm = model.to_predictive()
    fitted = model.fitted()
    preds = pm.predict(cols)
    assert max(abs(a - b) for a, b in zip(fitted, preds)) < 1e-7


def test_parallel_matches_cyclic():
    cols = _columns(60, 3, seed=21)
    rng = random.Random(7)
    y = [sum(math.cos(4 * c[i]) for c in cols) + 0.3 * rng.gauss(0, 1) for i in range(60)]
    a = addtrend.fit_additive(cols, y, k=1, lambdas=[0.05])
    b = addtrend.fit_additive(cols, y, k=1, lambdas=[0.05], algorithm="parallel",
                              threads=2)
    assert abs(a.criterion - b.criterion) <= 1e-6 * (1 + abs(a.criterion))


def test_model_round_trip(tmp_path):
    cols = _columns(40, 2, seed=31)
    rng = random.Random(9)
    y = [math.sin(5 * cols[0][i]) + 0.2 * rng.gauss(0, 1) for i in range(40)]
    model = addtrend.fit_additive(cols, y, k=1, lambdas=[0.02])
    pm = model.to_predictive()
    path = str(tmp_path / "model.txt")
    addtrend.write_model(pm, path)
    loaded = addtrend.read_model(path)
    pts = [[0.1, 0.5], [0.9, 0.2]]
    for pt in pts:
        assert pm.predict_row(pt) == loaded.predict_row(pt)


def test_scenarios_and_cv():
    data = addtrend.gen_scenario("doppler", n=120, d=3, snr=4.0, seed=2)
    for f in data["f0"]:
        norm2 = sum(v * v for v in f) / len(f)
        assert abs(norm2 - 1.0) < 1e-9
    grid = addtrend.default_lambda_grid(data["x"], data["y"], 2, size=6)
    res = addtrend.cv_single_lambda(data["x"], data["y"], 2, grid, folds=3, seed=4)
    assert res["selected_lambda"] in res["lambda_grid"]

    rank = addtrend.check_ptilde_rank(data["x"], 2)
    assert rank["full_rank"]


def test_spline_baseline():
    cols = _columns(50, 2, seed=41)
    y = [2.0 * cols[0][i] - cols[1][i] + 1.0 for i in range(50)]
    fit = addtrend.fit_additive_splines(cols, y, [1e-3])
    fitted = [fit["ybar"] + sum(comp[i] for comp in fit["components"]) for i in range(50)]
    assert max(abs(a - b) for a, b in zip(fitted, y)) < 1e-6


def test_duplicate_inputs_raise():
    cols = [[0.1, 0.1, 0.5, 0.9]]
    with pytest.raises(addtrend.AddtrendError):
        addtrend.fit_additive(cols, [1.0, 2.0, 3.0, 4.0], k=0, lambdas=[0.1])
