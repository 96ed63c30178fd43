import math
import os

import numpy as np
import pytest

import deepritz as dr


def test_catalog():
    ids = {p["id"] for p in dr.list_problems()}
    assert {"slit_poisson", "slit_harmonic", "hd_poisson_10", "well_5", "transfer_target"} <= ids
    hd = next(p for p in dr.list_problems() if p["id"] == "hd_poisson_10")
    assert hd["dim"] == 10 and hd["params"] == 671


def test_exact_solution():
    x = np.array([[0.5, 0.5] + [0.0] * 8, [1.0] * 10])
    np.testing.assert_allclose(dr.exact_solution("hd_poisson_10", x), [0.25, 5.0])


def test_fdm_harmonic():
    out = dr.fdm_solve(25, "slit_harmonic")
    assert out["u"].shape == (25, 25)
    assert 0.006 <= out["report"]["rel_l2"] <= 0.025
    assert out["residual"] <= 1e-10


def test_grad_check():
    rep = dr.grad_check(dr.config("slit_harmonic", seed=3))
    assert rep["passed"] and rep["checked"] > 0


def test_short_run_and_checkpoint(tmp_path):
    res = dr.run("slit_harmonic", iters=20, log_every=10, seed=2, output_dir=str(tmp_path))
    assert list(res["curve"]["step"]) == [10, 20]
    assert np.all(np.isfinite(res["curve"]["loss_total"]))
    assert math.isfinite(res["report"]["rel_l2"])
    with open(tmp_path / "curve.csv") as f:
        assert f.readline().strip() == dr.CURVE_HEADER
    ck = dr.load_checkpoint(tmp_path / "final.drz")
    assert ck["problem"] == "slit_harmonic" and ck["step"] == 20
    np.testing.assert_array_equal(ck["values"], res["params"])
    rep = dr.evaluate_checkpoint(tmp_path / "final.drz")
    assert rep["rel_l2"] == pytest.approx(res["report"]["rel_l2"], rel=0, abs=0)


def test_determinism():
    a = dr.run("well_1", iters=30, log_every=10, seed=5)
    b = dr.run("well_1", iters=30, log_every=10, seed=5)
    np.testing.assert_array_equal(a["params"], b["params"])
    assert not math.isnan(a["curve"]["lambda_est"][-1])


def test_errors():
    with pytest.raises(dr.UnknownProblemError):
        dr.run("no_such_problem", iters=1)
    with pytest.raises(dr.ConfigError):
        dr.run("well_1", iters=1, blocks=2)
    with pytest.raises(TypeError):
        dr.config("well_1", bogus=1)
