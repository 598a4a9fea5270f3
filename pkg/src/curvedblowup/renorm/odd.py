"""Interior correction: the radial ODE ``-(v'' + 2v'/R + 5W^4 v) = g`` with
``v = O(R^2)`` at the origin, solved by variation of parameters.

``theta = DW`` is the scaling zero mode (regular at 0). The singular
solution ``psi ~ 1/R`` has the closed form

    psi(R) = (R^4 - 18 R^2 + 9) / (sqrt(3) R (R^2 + 3)^(3/2)),

so that ``R^2 (theta psi' - psi theta') = -1/2`` everywhere.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from ..soliton import DW, dDW, potential

WRONSKIAN = -0.5
_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def theta(R):
    return DW(R)


def dtheta(R):
    return dDW(R)


def psi(R):
    R = np.asarray(R, dtype=float)
    R2 = R * R
    return (R2 * R2 - 18.0 * R2 + 9.0) / (np.sqrt(3.0) * R * (R2 + 3.0) ** 1.5)


def dpsi(R):
    R = np.asarray(R, dtype=float)
    R2 = R * R
    N = R2 * R2 - 18.0 * R2 + 9.0
    dN = 4.0 * R * R2 - 36.0 * R
    s = (R2 + 3.0) ** 1.5
    return (dN / (R * s) - N / (R2 * s) - 3.0 * N / ((R2 + 3.0) * s)) / np.sqrt(3.0)


@dataclass
class HomogeneousBasis:
    R: np.ndarray
    theta: np.ndarray
    dtheta: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray

    @property
    def wronskian(self):
        """``R^2 (theta psi' - psi theta')``; constant by Abel's identity."""
        return self.R ** 2 * (self.theta * self.dpsi - self.psi * self.dtheta)


def homogeneous_basis(R=None) -> HomogeneousBasis:
    """``(theta, psi)`` sampled on ``R`` (default: a grid on ``[0.1, 50]``)."""
    R = np.geomspace(0.1, 50.0, 400) if R is None else np.asarray(R, dtype=float)
    return HomogeneousBasis(R, theta(R), dtheta(R), psi(R), dpsi(R))


def integrate_singular_solution(R_end: float = 50.0, eps: float = 1e-3, rtol: float = 1e-12):
    """Integrate ``psi`` outward from its Frobenius start ``1/R - (5/2) R + ...``.

    Independent of the closed form; used as a cross-check.
    """
    # odd Frobenius series: (n+2)(n+3) c_{n+2} = -sum_k V_k c_{n-2k},
    # with 45/(3+R^2)^2 = 5 - (10/3) R^2 + (5/3) R^4 - (20/27) R^6 + ...
    V = [5.0, -10.0 / 3.0, 5.0 / 3.0, -20.0 / 27.0]
    coeffs = {-1: 1.0}
    for n in range(-1, 8, 2):
        acc = sum(vk * coeffs.get(n - 2 * k, 0.0) for k, vk in enumerate(V))
        coeffs[n + 2] = -acc / ((n + 2) * (n + 3))
    c = coeffs
    y0 = sum(cn * eps ** n for n, cn in c.items())
    dy0 = sum(n * cn * eps ** (n - 1) for n, cn in c.items())

    def rhs(R, y):
        return [y[1], -2.0 / R * y[1] - potential(R) * y[0]]

    sol = solve_ivp(rhs, (eps, R_end), [y0, dy0], method="DOP853", rtol=rtol, atol=1e-14,
                    dense_output=True)
    if not sol.success:
        raise RuntimeError(f"integrator failure: {sol.message}")
    return sol


def _panel_grid(R_eval: np.ndarray) -> np.ndarray:
    top = float(np.max(R_eval)) if R_eval.size else 0.0
    base = np.arange(0.0, min(top, 2.0) + 1e-12, 0.05)
    if top > 2.0:
        n = int(np.ceil(np.log(top / 2.0) / np.log(1.05)))
        base = np.concatenate([base, 2.0 * 1.05 ** np.arange(1, n + 1)])
    return np.unique(np.concatenate([[0.0], base[base < top], R_eval]))


def solve_radial(g: Callable, R_eval) -> tuple[np.ndarray, np.ndarray]:
    """Solve ``-(v'' + (2/R) v' + 5W^4 v) = g`` with ``v = O(R^2)``.

    Returns ``(v, v')`` at ``R_eval``. Both particular integrals start at
    ``R = 0``; they are accumulated panel by panel with 10-point
    Gauss-Legendre on a grid that contains every requested point.
    """
    R_eval = np.asarray(R_eval, dtype=float)
    flat = R_eval.ravel()
    if np.any(flat < 0):
        raise ValueError("R must be non-negative")
    nodes = _panel_grid(flat)
    lo, hi = nodes[:-1], nodes[1:]
    half = 0.5 * (hi - lo)
    s = 0.5 * (hi + lo)[:, None] + half[:, None] * _GL_X[None, :]
    gs = np.asarray(g(s), dtype=float)
    if not np.all(np.isfinite(gs)):
        raise ValueError("source is not finite on the quadrature nodes")
    w = half[:, None] * _GL_W[None, :]
    k = -s * s * gs / WRONSKIAN
    I_theta = np.concatenate([[0.0], np.cumsum(np.sum(w * k * theta(s), axis=1))])
    I_psi = np.concatenate([[0.0], np.cumsum(np.sum(w * k * psi(s), axis=1))])
    idx = np.searchsorted(nodes, flat)
    Rn = nodes[idx]
    It, Ip = I_theta[idx], I_psi[idx]
    v = np.zeros_like(flat)
    dv = np.zeros_like(flat)
    pos = Rn > 0
    v[pos] = psi(Rn[pos]) * It[pos] - theta(Rn[pos]) * Ip[pos]
    dv[pos] = dpsi(Rn[pos]) * It[pos] - dtheta(Rn[pos]) * Ip[pos]
    return v.reshape(R_eval.shape), dv.reshape(R_eval.shape)


def second_derivative(R, v, dv, g_at_R):
    """``v''`` recovered from the ODE itself (exact for the computed ``v, v'``)."""
    R = np.asarray(R, dtype=float)
    out = np.empty_like(np.asarray(v, dtype=float))
    pos = R > 0
    out[pos] = -2.0 / R[pos] * dv[pos] - potential(R[pos]) * v[pos] - g_at_R[pos]
    out[~pos] = -np.asarray(g_at_R)[~pos] / 3.0
    return out


def solve_odd_step(rhs_slice: Callable, t: float, nu: float, R_eval=None):
    """Solve ``(t lambda)^2 (-d_R^2 - (2/R) d_R - 45/(3+R^2)^2) v = rhs_slice``.

    ``R_eval`` defaults to 800 points graded toward the origin on
    ``[0, lambda t]``. Returns ``(R, v, v', v'')``.
    """
    tl = t ** (-nu)
    if R_eval is None:
        R_eval = tl * np.linspace(0.0, 1.0, 800) ** 2
    R_eval = np.asarray(R_eval, dtype=float)
    scale = tl ** -2
    g = lambda R: scale * np.asarray(rhs_slice(R), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        g_eval = g(R_eval)
        g_origin = g(np.array([0.0]))
    if not (np.all(np.isfinite(g_eval)) and np.all(np.isfinite(g_origin))):
        raise ValueError("source is singular (not finite at R = 0 or on the grid)")
    v, dv = solve_radial(g, R_eval)
    d2v = second_derivative(R_eval, v, dv, g_eval)
    return R_eval, v, dv, d2v
