import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curvedblowup.metric import WarpedMetric
from curvedblowup.soliton import (D2W, DW, SOLITON_ENERGY_EXACT, SelfSimilarFrame, W, d2W, dDW,
                                  d2DW, dW, e0, e0_scaled, rescaled_soliton, scaling_generator,
                                  soliton_energy, soliton_integrals)


def test_values():
    assert W(0.0) == 1.0
    assert W(np.sqrt(3.0)) == pytest.approx(1 / np.sqrt(2), abs=1e-15)


@pytest.mark.parametrize("R", [0.1, 1.0, 10.0])
def test_static_equation_points(R):
    assert abs(d2W(R) + 2 / R * dW(R) + W(R) ** 5) < 1e-12


def test_static_equation_sup():
    R = np.linspace(1e-3, 100, 20001)
    assert np.max(np.abs(d2W(R) + 2 / R * dW(R) + W(R) ** 5)) < 1e-12
    # origin: W'' (0) * 3 + 1 = 0
    assert abs(3 * d2W(0.0) + 1.0) < 1e-15


def test_derivatives_against_differences():
    R = np.linspace(0.2, 20, 50)
    h = 1e-5
    for f, df in ((W, dW), (dW, d2W), (DW, dDW), (dDW, d2DW)):
        fd = (f(R + h) - f(R - h)) / (2 * h)
        assert np.allclose(df(R), fd, atol=1e-9)


def test_scaling_generator():
    assert DW(0.0) == pytest.approx(0.5, abs=1e-15)
    assert abs(DW(np.sqrt(3.0))) < 1e-15
    assert D2W(0.0) == pytest.approx(0.25, abs=1e-15)
    R = np.linspace(0, 100, 5001)
    closed = 0.5 * (1 - R ** 2 / 3) * (1 + R ** 2 / 3) ** -1.5
    assert np.max(np.abs(scaling_generator(R, W(R), dW(R)) - closed)) < 1e-12
    second = scaling_generator(R, W(R), dW(R), d2W(R), order=2)
    assert np.max(np.abs(second - D2W(R))) < 1e-12


def test_rescaled_soliton():
    u, ut = rescaled_soliton(SelfSimilarFrame(1.0, 0.1, 0.0))
    assert u == pytest.approx(10.0, rel=1e-14)
    u, _ = rescaled_soliton(SelfSimilarFrame(0.5, 1.0, 0.0))
    assert u == pytest.approx(1.0)
    _, ut = rescaled_soliton(SelfSimilarFrame(1.0, 1.0, 0.0))
    assert ut == pytest.approx(-1.0, rel=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(1e-3, 1.0), st.floats(0.0, 0.999))
def test_frame_identities(nu, t, a):
    f = SelfSimilarFrame(nu, t, a * t)
    assert f.b1 * f.R == pytest.approx(f.a, rel=1e-13, abs=1e-300)
    assert f.b2 == pytest.approx(f.b3 * f.a ** 2, rel=1e-13, abs=1e-300)
    assert f.lam == pytest.approx(t ** (-1 - nu), rel=1e-14)
    assert bool(f.inside_cone)


def test_frame_rejects_bad_input():
    with pytest.raises(ValueError):
        SelfSimilarFrame(0.5, -1.0, 0.0)
    with pytest.raises(ValueError):
        SelfSimilarFrame(0.5, 1.0, -0.1)


def test_e0_closed_form_points():
    flat = WarpedMetric.flat()
    f = SelfSimilarFrame(1.0, 0.3, 0.0)
    assert e0_scaled(f, flat) == pytest.approx(-2.0, rel=1e-14)
    nu, t = 0.6, 0.2
    lam = t ** (-1 - nu)
    f = SelfSimilarFrame(nu, t, np.sqrt(3.0) / lam)
    expect = lam ** 0.5 * t ** -2 * (-(1 + nu) ** 2 * D2W(np.sqrt(3.0)))
    assert e0(f, flat) == pytest.approx(expect, rel=1e-12)


def test_e0_sphere_minus_flat():
    f = SelfSimilarFrame(0.75, 0.05, 0.02)
    s = WarpedMetric.sphere()
    diff = e0(f, s) - e0(f, WarpedMetric.flat())
    expect = f.lam ** 0.5 * s.kappa(0.02) * f.R * dW(f.R)
    assert abs(diff - expect) < 1e-8 * abs(expect)


def _fd_e0(nu, t, r, metric):
    # sixth-order central differences applied to u0 = lambda^(1/2) W(lambda r)
    u = lambda tt, rr: tt ** (-(1 + nu) / 2) * W(tt ** (-1 - nu) * rr)
    c2 = np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90])
    c1 = np.array([-1 / 60, 3 / 20, -3 / 4, 0, 3 / 4, -3 / 20, 1 / 60])
    k = np.arange(-3, 4)
    ht, hr = 1e-3 * t, 2e-3 * t
    utt = sum(c * u(t + j * ht, r) for c, j in zip(c2, k)) / ht ** 2
    urr = sum(c * u(t, abs(r + j * hr)) for c, j in zip(c2, k)) / hr ** 2
    ur = sum(c * u(t, abs(r + j * hr)) for c, j in zip(c1, k)) / hr
    return -utt + urr + metric.dg_ratio(r) * ur + u(t, r) ** 5


@pytest.mark.parametrize("nu", [0.6, 0.75, 1.0])
@pytest.mark.parametrize("metric", [WarpedMetric.flat(), WarpedMetric.sphere()], ids=["flat", "sphere"])
def test_e0_against_finite_differences(nu, metric):
    for t in (0.05, 0.1, 0.2):
        for a in (0.1, 0.4, 0.8):
            r = a * t
            f = SelfSimilarFrame(nu, t, r)
            exact = e0(f, metric)
            assert abs(_fd_e0(nu, t, r, metric) - exact) < 1e-5 * abs(exact)


def test_pohozaev_and_energy():
    grad, sext = soliton_integrals()
    assert abs(grad - sext) < 1e-8 * grad
    E = soliton_energy()
    assert abs(E - grad / 3) < 1e-8 * grad
    assert E == pytest.approx(SOLITON_ENERGY_EXACT, rel=1e-8)
    for lam in (2.0, 10.0):
        assert soliton_energy(lam) == pytest.approx(E, rel=1e-8)
