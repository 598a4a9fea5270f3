import numpy as np
import pytest

from curvedblowup.metric import WarpedMetric
from curvedblowup.renorm.odd import (WRONSKIAN, dpsi, homogeneous_basis, integrate_singular_solution,
                                     psi, solve_odd_step, solve_radial, theta)
from curvedblowup.soliton import DW, SelfSimilarFrame, d2DW, dDW, e0_scaled, potential


def test_theta_is_zero_mode():
    R = np.linspace(1e-3, 50, 5001)
    residual = d2DW(R) + 2 / R * dDW(R) + potential(R) * DW(R)
    assert np.max(np.abs(residual)) < 1e-10
    assert np.allclose(potential(R), 5 * (1 + R ** 2 / 3) ** -2, rtol=1e-14)


def test_wronskian_constant():
    b = homogeneous_basis(np.geomspace(0.1, 50, 300))
    assert np.max(np.abs(b.wronskian / WRONSKIAN - 1)) < 1e-8


def test_singular_solution_limit_and_crosscheck():
    # R psi(R) = c0 + c2 R^2 + ...; the fitted limit must not depend on the window
    fits = []
    for lo in (1e-3, 2e-3):
        R = np.linspace(lo, 10 * lo, 20)
        fits.append(np.polyfit(R ** 2, R * psi(R), 2)[-1])
    assert abs(fits[0] - fits[1]) < 1e-6
    assert fits[0] == pytest.approx(1.0, abs=1e-6)
    # integrated from the Frobenius start 1/R - (5/2) R + ...
    sol = integrate_singular_solution(R_end=50.0)
    Rs = np.linspace(0.5, 50, 200)
    scale = 1.0
    assert np.max(np.abs(scale * sol.sol(Rs)[0] - psi(Rs))) < 1e-8
    assert np.max(np.abs(scale * sol.sol(Rs)[1] - dpsi(Rs))) < 1e-8


def test_zero_rhs():
    R, v, dv, d2v = solve_odd_step(lambda R: np.zeros_like(R), 0.1, 0.75)
    assert np.all(v == 0) and np.all(dv == 0) and np.all(d2v == 0)


def _manufactured(nu, t):
    tl = t ** (-nu)
    v = lambda R: R ** 2 * np.exp(-R)
    dv = lambda R: (2 * R - R ** 2) * np.exp(-R)
    d2v = lambda R: (2 - 4 * R + R ** 2) * np.exp(-R)
    rhs = lambda R: tl ** 2 * -(d2v(R) + 2 * dv(R) / np.where(R > 0, R, 1) * (R > 0)
                                + 2 * 2 * (R == 0) + potential(R) * v(R))
    return v, dv, rhs


@pytest.mark.parametrize("nu,t", [(0.75, 0.1), (1.0, 0.05), (0.6, 0.2)])
def test_manufactured_solution(nu, t):
    v_exact, dv_exact, rhs = _manufactured(nu, t)
    R, v, dv, d2v = solve_odd_step(rhs, t, nu)
    assert np.max(np.abs(v - v_exact(R))) < 1e-7
    assert np.max(np.abs(dv - dv_exact(R))) < 1e-7


def test_resubstitution_with_step_zero_source():
    nu, t = 1.0, 0.1
    flat = WarpedMetric.flat()
    lam = t ** (-1 - nu)
    rhs = lambda R: e0_scaled(SelfSimilarFrame(nu, t, np.asarray(R) / lam), flat)
    tl = t ** (-nu)
    # re-differentiate with 6th-order differences on a uniform grid away from 0
    h = 1e-2
    R = np.arange(0.5, 0.9 * tl, 0.5)
    offs = np.arange(-3, 4)
    pts = (R[:, None] + h * offs[None, :]).ravel()
    _, v, _, _ = solve_odd_step(rhs, t, nu, R_eval=pts)
    V = v.reshape(R.size, 7)
    c2 = np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90]) / h ** 2
    c1 = np.array([-1 / 60, 3 / 20, -3 / 4, 0, 3 / 4, -3 / 20, 1 / 60]) / h
    vrr, vr, v0 = V @ c2, V @ c1, V[:, 3]
    residual = tl ** 2 * -(vrr + 2 / R * vr + potential(R) * v0) - rhs(R)
    assert np.max(np.abs(residual)) < 1e-7 * max(1.0, np.max(np.abs(rhs(R))))


def test_odd_solution_vanishes_quadratically():
    _, _, rhs = _manufactured(0.75, 0.1)
    R = np.array([1e-3, 2e-3, 4e-3])
    v, _ = solve_radial(lambda s: 0.1 ** 1.5 * rhs(s), R)
    order = np.polyfit(np.log(R), np.log(np.abs(v)), 1)[0]
    assert order >= 2 - 0.1


def test_rejects_singular_source():
    with pytest.raises(ValueError):
        solve_odd_step(lambda R: 1 / R, 0.1, 0.75)
