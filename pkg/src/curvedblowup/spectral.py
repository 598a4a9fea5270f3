"""Half-line Schrodinger operator ``L = -d_R^2 - 5 W^4`` with ``f(0) = 0``.

This is the linearization around the soliton after the substitution
``f = R v``. It has one negative eigenvalue and a zero-energy resonance
``R DW`` inherited from the scaling symmetry.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, linalg, optimize
from scipy.integrate import solve_ivp

from .soliton import DW, d2DW, dDW


def potential(R):
    """``-5 W^4 = -45/(3 + R^2)^2``."""
    R = np.asarray(R, dtype=float)
    return -45.0 / (3.0 + R * R) ** 2


class NoSignChangeError(RuntimeError):
    def __init__(self, message, scan):
        super().__init__(message)
        self.scan = scan


class WindowTooShortError(ValueError):
    def __init__(self, message, crossings):
        super().__init__(message)
        self.crossings = crossings


@dataclass
class SpectralData:
    xi_minus: float
    R: np.ndarray
    ground_state: np.ndarray
    method: dict = field(default_factory=dict)

    @property
    def decay_rate(self) -> float:
        return float(np.sqrt(-self.xi_minus))


def _rhs(xi):
    def f(R, y):
        return [y[1], (potential(R) - xi) * y[0]]
    return f


_IVP = dict(method="DOP853", rtol=1e-12, atol=1e-14)


def _left(xi, R_match, dense=False):
    return solve_ivp(_rhs(xi), (0.0, R_match), [0.0, 1.0], dense_output=dense, **_IVP)


def _right(xi, R_match, R_max, dense=False):
    k = np.sqrt(-xi)
    # decaying solution, normalized to 1 at R_max
    return solve_ivp(_rhs(xi), (R_max, R_match), [1.0, -k], dense_output=dense, **_IVP)


def matching_wronskian(xi: float, R_match: float = 10.0, R_max: float = 60.0) -> float:
    """Normalized Wronskian of the two shooting solutions at ``R_match``."""
    L = _left(xi, R_match).y[:, -1]
    Rr = _right(xi, R_match, R_max).y[:, -1]
    return float((L[0] * Rr[1] - L[1] * Rr[0]) / (np.hypot(*L) * np.hypot(*Rr)))


def count_nodes(values) -> int:
    v = np.asarray(values, dtype=float)
    v = v[np.abs(v) > 1e-300]
    return int(np.sum(np.signbit(v[1:]) != np.signbit(v[:-1])))


def zero_energy_nodes(R_end: float = 200.0) -> int:
    """Interior zeros of the Dirichlet solution at ``xi = 0`` (Sturm count of negative eigenvalues)."""
    sol = solve_ivp(_rhs(0.0), (0.0, R_end), [0.0, 1.0], dense_output=True, **_IVP)
    R = np.linspace(1e-6, R_end, 20001)
    return count_nodes(sol.sol(R)[0])


def negative_eigenvalue(tol: float = 1e-12, R_match: float = 10.0, R_max: float = 60.0,
                        n_scan: int = 200, n_grid: int = 6001) -> SpectralData:
    """Locate the eigenvalue in ``(-5, 0)`` by shooting and matching.

    The scan must show exactly one sign change of the matching Wronskian.
    """
    lo, hi = -5.0 + 1e-9, -1e-4
    xs = -np.geomspace(-lo, -hi, n_scan)
    ws = np.array([matching_wronskian(x, R_match, R_max) for x in xs])
    flips = np.nonzero(np.signbit(ws[1:]) != np.signbit(ws[:-1]))[0]
    if flips.size == 0:
        raise NoSignChangeError("matching Wronskian has no sign change in (-5, 0)",
                                np.column_stack([xs, ws]))
    if flips.size > 1:
        raise NoSignChangeError("more than one sign change: eigenvalue not unique",
                                np.column_stack([xs, ws]))
    j = flips[0]
    xi = optimize.brentq(matching_wronskian, xs[j], xs[j + 1], args=(R_match, R_max),
                         xtol=tol, rtol=4 * np.finfo(float).eps)
    R = np.linspace(0.0, R_max, n_grid)
    left = _left(xi, R_match, dense=True)
    right = _right(xi, R_match, R_max, dense=True)
    inner, outer = R <= R_match, R > R_match
    phi = np.empty_like(R)
    phi[inner] = left.sol(R[inner])[0]
    scale = left.sol(R_match)[0] / right.sol(R_match)[0]
    phi[outer] = scale * right.sol(R[outer])[0]
    phi /= np.sqrt(integrate.simpson(phi * phi, x=R))
    if phi[np.argmax(np.abs(phi))] < 0:
        phi = -phi
    nodes = count_nodes(phi[1:-1])
    return SpectralData(float(xi), R, phi, {
        "R_match": R_match, "R_max": R_max, "nodes": nodes, "scan_points": n_scan,
        "sign_changes": int(flips.size),
    })


def matrix_eigenvalue(R_max: float = 60.0, n: int = 6000, order: int = 4) -> float:
    """Lowest Dirichlet eigenvalue of a finite-difference discretization.

    Uses the 5-point stencil with odd reflection at both ends (``order=4``)
    or the 3-point stencil (``order=2``); both matrices are symmetric banded.
    """
    h = R_max / (n + 1)
    R = h * np.arange(1, n + 1)
    V = potential(R)
    if order == 2:
        diag = 2.0 / h ** 2 + V
        off = -np.ones(n - 1) / h ** 2
        w = linalg.eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))[0]
        return float(w[0])
    if order != 4:
        raise ValueError("order must be 2 or 4")
    c = 1.0 / (12.0 * h * h)
    diag = 30.0 * c + V
    diag[0] -= c  # f(-h) = -f(h)
    diag[-1] -= c
    bands = np.zeros((3, n))
    bands[0] = diag
    bands[1, :-1] = -16.0 * c
    bands[2, :-2] = c
    w = linalg.eig_banded(bands, lower=True, select="i", select_range=(0, 0),
                          eigvals_only=True)
    return float(w[0])


def decay_fit(data: SpectralData, window=(30.0, 50.0)) -> float:
    """Slope of ``log |phi|`` on ``window``."""
    keep = (data.R >= window[0]) & (data.R <= window[1])
    return float(np.polyfit(data.R[keep], np.log(np.abs(data.ground_state[keep])), 1)[0])


def resonance_profile(R):
    """``R DW(R)`` and its second derivative, both in closed form."""
    R = np.asarray(R, dtype=float)
    f = R * DW(R)
    f2 = 2.0 * dDW(R) + R * d2DW(R)
    return f, f2


def resonance_check(R_max: float = 50.0, n: int = 5001) -> float:
    """``sup |L (R DW)|`` on ``[0, R_max]``."""
    R = np.linspace(0.0, R_max, n)
    f, f2 = resonance_profile(R)
    return float(np.max(np.abs(-f2 + potential(R) * f)))


@dataclass
class OscillationFit:
    xi: float
    wavenumber: float
    crossings: np.ndarray
    window: tuple


def oscillation_check(xi: float, window=(50.0, 80.0), min_half_periods: int = 5) -> OscillationFit:
    """Local wavenumber of the Dirichlet solution of ``L f = xi f`` on ``window``.

    Zero crossings are located to integrator precision and their positions
    regressed against their index; the slope is ``pi / k``.
    """
    if xi <= 0:
        raise ValueError("xi must be positive")
    lo, hi = window
    sol = solve_ivp(_rhs(xi), (0.0, hi), [0.0, 1.0], dense_output=True, **_IVP)
    R = np.linspace(lo, hi, int(200 * (hi - lo) * max(1.0, np.sqrt(xi))) + 2)
    f = sol.sol(R)[0]
    idx = np.nonzero(np.signbit(f[1:]) != np.signbit(f[:-1]))[0]
    g = lambda x: sol.sol(x)[0]
    zeros = np.array([optimize.brentq(g, R[i], R[i + 1], xtol=1e-13) for i in idx])
    if zeros.size < min_half_periods + 1:
        raise WindowTooShortError(
            f"only {zeros.size} zero crossings in [{lo}, {hi}] for xi={xi:g}; "
            f"need {min_half_periods + 1} (expected spacing pi/sqrt(xi) = {np.pi / np.sqrt(xi):.3g})",
            zeros.size,
        )
    spacing = np.polyfit(np.arange(zeros.size), zeros, 1)[0]
    return OscillationFit(xi, float(np.pi / spacing), zeros, tuple(window))


def apply_operator(f, df2, R):
    """``L f`` from samples of ``f`` and ``f''``."""
    return -np.asarray(df2) + potential(R) * np.asarray(f)


def symmetry_defect(f_poly: np.polynomial.Polynomial, g_poly: np.polynomial.Polynomial,
                    support: float) -> float:
    """``|<Lf, g> - <f, Lg>|`` for polynomials vanishing to second order at both ends of ``[0, support]``."""
    f2, g2 = f_poly.deriv(2), g_poly.deriv(2)
    lf_g = lambda R: apply_operator(f_poly(R), f2(R), R) * g_poly(R)
    f_lg = lambda R: f_poly(R) * apply_operator(g_poly(R), g2(R), R)
    opts = dict(epsabs=0, epsrel=1e-13, limit=200)
    a = integrate.quad(lf_g, 0.0, support, **opts)[0]
    b = integrate.quad(f_lg, 0.0, support, **opts)[0]
    return abs(a - b) / max(abs(a), abs(b), 1e-300)
