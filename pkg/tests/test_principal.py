import warnings

import numpy as np
import pytest

from curvedblowup.renorm.grid import lobatto_nodes
from curvedblowup.renorm.principal import (design_matrix, extract_principal_part, least_squares,
                                           split_leading)
from curvedblowup.renorm.residual import evaluate_residual

NU = 0.75
T = np.geomspace(0.2, 0.0125, 10)


def test_split_without_b_dependence():
    a = 0.4
    R = a * T ** -NU
    vals = 1.3 * R - 0.7 + 0.2 * np.log(R)
    e0, e1, fit = split_leading(vals, T, a, NU)
    assert np.max(np.abs(e1)) < 1e-6 * np.max(np.abs(vals))
    assert np.allclose(e0, vals, rtol=1e-8)


def test_split_recovers_planted_coefficients():
    a = 0.3
    R = a * T ** -NU
    b = T ** NU
    c1, c2 = 2.5, -1.25
    vals = c1 * R + c2 * b * R
    _, _, fit = split_leading(vals, T, a, NU)
    assert fit["R"] == pytest.approx(c1, abs=1e-8)
    # b R = a at fixed a, so c2 lands in the constant channel
    assert fit["1"] / a == pytest.approx(c2, abs=1e-8)


def test_split_constant_input_uses_constant_channel_only():
    _, _, fit = split_leading(np.full(T.size, 3.0), T, 0.5, NU)
    others = [abs(fit[n]) for n in fit.names if n != "1"]
    assert fit["1"] == pytest.approx(3.0, abs=1e-9)
    assert max(others) < 1e-8


def test_split_needs_six_samples():
    with pytest.raises(ValueError):
        split_leading(np.ones(5), T[:5], 0.5, NU)


def test_least_squares_reports_condition():
    X = design_matrix(("R", "1"), T, 0.5, NU)
    fit = least_squares(X @ np.array([1.0, 2.0]), X, ("R", "1"))
    assert fit.condition >= 1.0 and fit.residual < 1e-12


A_NODES = lobatto_nodes(60, 0.0, 0.999)


def _manufactured(t, r):
    a = r / t
    R = a * t ** -NU
    b = t ** NU
    q0 = a ** 3 * (1 - a)
    return (q0 * R + np.cos(a) + 0.5 * a * np.log(R) + a ** 2 * b * (1 + np.log(R))
            + (1 + a) * b * b)


def test_principal_part_recovers_manufactured_q():
    pp = extract_principal_part(_manufactured, A_NODES, NU)
    a = pp.a_effective
    assert np.max(np.abs(pp.q[0] - a ** 3 * (1 - a))) < 1e-6
    assert np.max(np.abs(pp.c[0] - np.cos(a))) < 1e-6
    assert np.max(np.abs(pp.c[1] - 0.5 * a)) < 1e-6
    assert np.max(np.abs(pp.d[0] - a ** 2)) < 1e-6
    assert abs(pp.tail[0]) < 1e-6 and abs(pp.tail[1]) < 1e-6
    assert pp.smoothing_error() < 1e-6


def test_principal_part_of_zero():
    pp = extract_principal_part(lambda t, r: np.zeros_like(t), A_NODES, NU)
    assert pp.is_zero
    assert np.all(pp.tail == 0)


def test_window_doubling_shrinks_remainder(flat_rounds):
    p = flat_rounds.profile_up_to(1)
    beta = p.layers[1].exponent(NU)
    f = lambda t, r: t ** (2 - beta) * evaluate_residual(p, t, r)
    a = lobatto_nodes(20, 0.05, 0.95)
    res = []
    for w in ((50, 3000), (100, 6000), (200, 12000)):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res.append(np.median(extract_principal_part(f, a, NU, window=w).fit_residual))
    assert res[0] > 1.5 * res[1] > 1.5 * 1.5 * res[2] * 0.999
