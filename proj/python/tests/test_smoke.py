import math

import numpy as np
import pytest

import likstab


def test_model_handle():
    m = likstab.model("normal-mv")
    assert m.name == "normal-mv"
    assert m.dim == 2
    with pytest.raises(likstab.ValidationError):
        likstab.model("weibull")


def test_fit_exponential():
    res = likstab.fit("exponential", np.array([0.2, 0.5, 0.9, 0.4]))
    assert res["converged"]
    assert res["theta_hat"][0] == pytest.approx(2.0)


def test_signed_root_on_three_points():
    vals = likstab.pivots("normal-mv", np.array([1.0, 2.0, 3.0]), 0.0, ["r", "wo", "we"])
    assert vals["r"] == pytest.approx(math.sqrt(3 * math.log(7)), rel=1e-12)
    # v_hat = 2/3, so WO = WE = 2 / sqrt(2/9) = 3 sqrt(2).
    assert vals["wo"] == pytest.approx(3 * math.sqrt(2), rel=1e-10)
    assert vals["we"] == pytest.approx(vals["wo"], rel=1e-10)


def test_numerical_error_maps_to_arithmetic_error():
    with pytest.raises(ArithmeticError):
        likstab.pivots("normal-mv", np.array([1.0, 2.0, 3.0]), 0.0, ["woc"])


def test_simulate_is_deterministic():
    a = likstab.simulate("gamma", np.array([3.0, 1.5]), 25, 7)
    b = likstab.simulate("gamma", np.array([3.0, 1.5]), 25, 7)
    assert a.shape == (25, 1)
    assert np.array_equal(a, b)
    assert np.all(a > 0)


def test_conditions():
    c1, c2 = likstab.equivalence_check("gamma", np.array([3.0, 1.5]), 30, "r", "wo")
    assert c1["passed"] and c2["passed"]
    c1, _ = likstab.equivalence_check("gamma", np.array([3.0, 1.5]), 30, "r", "we")
    assert not c1["passed"]
    assert likstab.stability_check("gamma", np.array([3.0, 1.5]), 30, "r")["passed"]
    assert not likstab.stability_check("gamma", np.array([3.0, 1.5]), 30, "we")["passed"]


def test_cli_report():
    rep = likstab.report("equiv-check", "--model", "normal-mv", "--theta", "0,1", "--n", 50, "--pair", "r,wo",
                         "--seed", 1)
    assert rep["version"] == likstab.REPORT_VERSION
    assert rep["results"]["pass"] is True
    with pytest.raises(likstab.ValidationError, match="seed"):
        likstab.report("fit", "--model", "normal-mv", "--n", 10, "--theta", "0,1")
