import math
import time
from fractions import Fraction

import numpy as np
import pytest

from qerc.analysis import (
    FIG2_HEADER,
    FIG2_P_VALUES,
    BoundParams,
    advantage_interval,
    comparison_report,
    curve_csv,
    diff_tables,
    e0,
    e0_from_epsilon,
    ec,
    ec_from_epsilon,
    ec_prime,
    eta_from_epsilon,
    fig2_dataset,
    format_report,
    lambda2,
    lambda3,
    lambda_ratio,
)


def test_eta_from_epsilon_exact():
    assert eta_from_epsilon(Fraction(1, 9)) == Fraction(1, 10)
    assert eta_from_epsilon(0.0) == 0.0
    with pytest.raises(ValueError):
        eta_from_epsilon(-1)


def test_epsilon_forms():
    for eps in (1 / 99, 1 / 9, 1 / 3):
        eta = eps / (1 + eps)
        assert ec_from_epsilon(eps) == pytest.approx(ec(eta), abs=1e-15)
        assert e0_from_epsilon(eps) == pytest.approx(e0(eta), abs=1e-15)


def test_known_values():
    assert ec(0.1) == pytest.approx(1 / 123)
    assert ec(0.1, "four-state") == pytest.approx(1 / 164)
    assert e0(0.1) == pytest.approx(1 / 15)


def test_lambdas():
    bp = BoundParams(0.002, 0.5, 0.1)
    assert lambda2(bp) == pytest.approx(0.5 ** 4 * 0.01 * 0.002 ** 2 / 16)
    assert lambda3(bp) / lambda2(bp) == pytest.approx(lambda_ratio(0.002, 0.1))
    with pytest.raises(ValueError):
        lambda_ratio(0.002, 0.0)
    with pytest.raises(ValueError):
        BoundParams(1.0, 0.5, 0.1)


def test_ec_prime_xi_invariant_and_spot_value():
    vals = [ec_prime(BoundParams(0.002, xi, 0.1), "bloch") for xi in (0.1, 0.5, 1.0)]
    assert max(vals) - min(vals) < 1e-14
    assert vals[0] == pytest.approx(0.014968, abs=1e-6)
    assert vals[0] < e0(0.1)


def test_ec_prime_bounds_ec_from_above():
    for eta in np.linspace(0.01, 0.49, 25):
        assert ec_prime(BoundParams(0.002, 1, eta)) >= ec(eta, "four-state")


def test_fig2_dataset():
    pts = fig2_dataset(0.002)
    assert len(pts) == 100
    assert all(p.ec_prime < p.e0_fourstate for p in pts if 0.05 <= p.eta <= 0.45)
    text = curve_csv(pts)
    assert text.splitlines()[0] == ",".join(FIG2_HEADER)
    assert text == curve_csv(fig2_dataset(0.002))
    with pytest.raises(ValueError):
        fig2_dataset(1.0)


def test_fig2_speed():
    t0 = time.perf_counter()
    for p in FIG2_P_VALUES:
        curve_csv(fig2_dataset(p))
    assert time.perf_counter() - t0 < 5


def test_advantage_interval():
    lo, hi = advantage_interval(0.002)
    f = lambda eta: ec_prime(BoundParams(0.002, 1, eta)) - e0(eta, "four-state") / 3
    assert f(lo) == pytest.approx(0, abs=1e-12) and f(hi) == pytest.approx(0, abs=1e-12)
    assert f((lo + hi) / 2) < 0
    assert advantage_interval(0.01) is None


def test_diff_tables():
    assert diff_tables({"a": Fraction(1, 3)}, {"a": 1 / 3}) == []
    rows = diff_tables({"a": 1, "b": 2}, {"a": 1})
    assert [r.item for r in rows] == ["b"]


def test_comparison_report_flags():
    rows = {r.item: r for r in comparison_report()}
    assert rows["r0(1,1) term 1 [termwise]"].note.startswith("printed as xi^2")
    avg = rows["r0 average vs mean of its stated inputs"]
    assert (avg.paper, avg.oracle, avg.match) == ("3/16", "3/32", False)
    both = rows["lambda3 both-flip bracket [published table sum]"]
    assert (both.paper, both.oracle, both.match) == ("17/48", "37/96", False)
    assert rows["lambda2 constant vs both-flip accepted probability"].match
    assert not rows["lambda2 constant vs both-flip C4 probability (four-state)"].match
    assert "MISMATCH" in format_report(list(rows.values()))
