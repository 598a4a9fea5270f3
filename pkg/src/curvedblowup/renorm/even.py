"""Cone-variable corrections: the degenerate ODE

    L_beta W = (1 - a^2) W'' + 2 (1/a + beta a - a) W' + (beta - beta^2) W = f

on ``[0, 1)`` with zero Cauchy data at ``a = 0``, the triangular systems
produced by powers of ``log R``, and assembly of the even layer.

Writing ``s = log t``, the operator ``t^2 (-d_t^2 + d_r^2 + (2/r) d_r)`` acts
on ``t^beta W(a) (log R)^i`` as

    t^beta [ (log R)^i L_beta W + i (log R)^(i-1) C1[W] + i(i-1) (log R)^(i-2) C2[W] ]

with ``C1, C2`` given by :func:`log_coupling`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.integrate import solve_ivp

from ..jets import Jet
from .grid import Exponent

SERIES_ORDER = 8
EPS_SERIES = 1e-3


class SeriesError(ValueError):
    pass


class StepSizeCollapse(RuntimeError):
    def __init__(self, message, a_reached):
        super().__init__(message)
        self.a_reached = a_reached


def lbeta_apply(beta: float, a, W, dW, d2W):
    """``L_beta`` on sampled ``W, W', W''``."""
    a = np.asarray(a, dtype=float)
    return (1.0 - a * a) * d2W + 2.0 * (1.0 / a + beta * a - a) * dW + (beta - beta * beta) * W


def log_coupling(beta: float, nu: float, a, W, dW):
    """``(C1[W], C2[W])`` for ``t^beta W(a) (log R)^i``, ``R = a t^(-nu)``."""
    a = np.asarray(a, dtype=float)
    C1 = 2.0 * ((1.0 - a * a) / a - nu * a) * dW \
        + ((1.0 + (2.0 * beta - 1.0) * a * a) / (a * a) + (2.0 * beta - 1.0) * nu) * W
    C2 = ((1.0 - a * a) / (a * a) - nu * (2.0 + nu)) * W
    return C1, C2


def _series_coefficients(fn: Callable, order: int, delta: float) -> np.ndarray:
    """Taylor coefficients ``r_{-1}, r_0, ..., r_order`` of ``fn`` near 0 (``a fn`` is fitted)."""
    x = np.cos(np.pi * (np.arange(40) + 0.5) / 40)
    a = 0.5 * delta * (x + 1.0)
    y = a * np.asarray(fn(a), dtype=float)
    if not np.all(np.isfinite(y)):
        raise SeriesError("right-hand side not finite near a = 0")
    cheb = C.chebfit(x, y, order + 2)
    misfit = np.max(np.abs(C.chebval(x, cheb) - y))
    if misfit > 1e-6 * max(1.0, np.max(np.abs(y))):
        raise SeriesError(f"a * rhs is not smooth at a = 0 (series misfit {misfit:.2e})")
    mono = C.cheb2poly(cheb)
    # rescale x = 2a/delta - 1 into powers of a
    poly = np.polynomial.Polynomial(mono)(np.polynomial.Polynomial([-1.0, 2.0 / delta]))
    coefs = np.zeros(order + 2)
    n = min(poly.coef.size, order + 2)
    coefs[:n] = poly.coef[:n]
    return coefs  # coefs[m + 1] = r_m


def _series_solution(beta: float, r, order: int) -> np.ndarray:
    """``w_n`` (n = 0..order+1) solving ``L_beta w = sum r_m a^m`` with ``w_0 = 0``."""
    w = np.zeros(order + 3)
    # a^m coefficient: (m+2)(m+3) w_{m+2} - (m-beta)(m+1-beta) w_m = r_m
    w[1] = r[0] / 2.0
    for m in range(0, order + 1):
        rm = r[m + 1] if m + 1 < r.size else 0.0
        w[m + 2] = (rm + (m - beta) * (m + 1 - beta) * w[m]) / ((m + 2) * (m + 3))
    return w


def _coupling_series(beta: float, nu: float, w: np.ndarray):
    """Taylor coefficients (indexed from a^-1) of ``C1[W]`` and ``C2[W]`` for series ``w``."""
    n = w.size
    c1 = np.zeros(n)
    c2 = np.zeros(n)
    ext = lambda k: w[k] if 0 <= k < n else 0.0
    for m in range(-1, n - 1):
        c1[m + 1] = (2 * m + 5) * ext(m + 2) + (1.0 + nu) * (2.0 * beta - 1.0 - 2.0 * m) * ext(m)
        c2[m + 1] = ext(m + 2) - (1.0 + nu) ** 2 * ext(m)
    return c1, c2


@dataclass
class LbetaSystemSolution:
    """Solutions ``W^0..W^p`` of a triangular log system, callable in ``a``."""

    beta: float
    nu: float
    series: np.ndarray  # (levels, order + 3) Taylor coefficients
    dense: object
    a_start: float
    a_end: float
    rhs: List[Callable]
    diagnostics: dict = field(default_factory=dict)

    @property
    def levels(self) -> int:
        return self.series.shape[0]

    def _series_eval(self, i, a, der=0):
        w = self.series[i]
        n = np.arange(w.size, dtype=float)
        a = np.asarray(a, dtype=float)[..., None]
        if der == 0:
            return np.sum(w * a ** n, axis=-1)
        if der == 1:
            return np.sum(w[1:] * n[1:] * a ** (n[1:] - 1), axis=-1)
        return np.sum(w[2:] * n[2:] * (n[2:] - 1) * a ** (n[2:] - 2), axis=-1)

    def __call__(self, a, i: int = 0):
        """``(W^i, W^i', W^i'')`` at ``a``; the endpoint slab beyond ``a_end`` is frozen."""
        a = np.asarray(a, dtype=float)
        flat = np.clip(a.ravel(), 0.0, self.a_end)
        W = np.empty_like(flat)
        dW = np.empty_like(flat)
        d2W = np.empty_like(flat)
        near = flat < self.a_start
        if np.any(near):
            W[near] = self._series_eval(i, flat[near])
            dW[near] = self._series_eval(i, flat[near], 1)
            d2W[near] = self._series_eval(i, flat[near], 2)
        far = ~near
        if np.any(far):
            y = self.dense(flat[far])
            W[far] = y[2 * i]
            dW[far] = y[2 * i + 1]
            d2W[far] = self._second_derivative(flat[far], y, i)
        return W.reshape(a.shape), dW.reshape(a.shape), d2W.reshape(a.shape)

    def _second_derivative(self, a, y, i):
        f = self._level_rhs(a, y, i)
        return (f - 2.0 * (1.0 / a + self.beta * a - a) * y[2 * i + 1]
                - (self.beta - self.beta ** 2) * y[2 * i]) / (1.0 - a * a)

    def _level_rhs(self, a, y, i):
        f = np.asarray(self.rhs[i](a), dtype=float)
        p = self.levels - 1
        if i + 1 <= p:
            c1, _ = log_coupling(self.beta, self.nu, a, y[2 * i + 2], y[2 * i + 3])
            f = f - (i + 1) * c1
        if i + 2 <= p:
            _, c2 = log_coupling(self.beta, self.nu, a, y[2 * i + 4], y[2 * i + 5])
            f = f - (i + 1) * (i + 2) * c2
        return f

    def over_a(self, a, i: int = 0):
        """``(W/a, (W/a)', (W/a)'')``, regular at 0 when ``W = O(a)``."""
        a = np.asarray(a, dtype=float)
        W, dW, d2W = self(a, i)
        small = a < self.a_start
        x = np.where(small, 1.0, a)
        g0 = W / x
        g1 = dW / x - W / x ** 2
        g2 = d2W / x - 2.0 * dW / x ** 2 + 2.0 * W / x ** 3
        if np.any(small):
            # series of W/a: shift the Taylor coefficients down by one
            w = self.series[i][1:]
            n = np.arange(w.size, dtype=float)
            y = a[small][..., None]
            g0[small] = np.sum(w * y ** n, axis=-1)
            g1[small] = np.sum(w[1:] * n[1:] * y ** (n[1:] - 1), axis=-1)
            g2[small] = np.sum(w[2:] * n[2:] * (n[2:] - 1) * y ** (n[2:] - 2), axis=-1)
        return g0, g1, g2

    def vanishing_order(self, i: int = 0, a_lo: float = 1e-4, a_hi: float = 1e-3) -> float:
        """Log-log slope of ``|W^i|`` on ``[a_lo, a_hi]``."""
        a = np.geomspace(a_lo, a_hi, 20)
        W = np.abs(self(a, i)[0])
        if np.all(W == 0):
            return np.inf
        return float(np.polyfit(np.log(a), np.log(W), 1)[0])


def solve_lbeta_system(beta: float, rhs: Sequence[Callable], nu: float = 0.0,
                       eps_series: float = EPS_SERIES, eps_a: float = 1e-3,
                       order: int = SERIES_ORDER, rtol: float = 1e-11,
                       atol: float = 1e-13) -> LbetaSystemSolution:
    """Solve the log system top-down with zero Cauchy data at ``a = 0``.

    ``rhs[i]`` is the forcing of the ``(log R)^i`` level before coupling;
    level ``i`` additionally receives ``-(i+1) C1[W^(i+1)] - (i+1)(i+2) C2[W^(i+2)]``.
    """
    rhs = list(rhs)
    p = len(rhs) - 1
    series = np.zeros((p + 1, order + 3))
    delta = max(50.0 * eps_series, 0.05)
    for i in range(p, -1, -1):
        r = _series_coefficients(rhs[i], order, delta)
        if i + 1 <= p:
            c1, _ = _coupling_series(beta, nu, series[i + 1])
            r = r - (i + 1) * c1[: r.size]
        if i + 2 <= p:
            _, c2 = _coupling_series(beta, nu, series[i + 2])
            r = r - (i + 1) * (i + 2) * c2[: r.size]
        series[i] = _series_solution(beta, r, order)

    def at(i, a, der):
        w = series[i]
        n = np.arange(w.size, dtype=float)
        if der == 0:
            return float(np.sum(w * a ** n))
        return float(np.sum(w[1:] * n[1:] * a ** (n[1:] - 1)))

    y0 = []
    for i in range(p + 1):
        y0 += [at(i, eps_series, 0), at(i, eps_series, 1)]

    sol = LbetaSystemSolution(beta, nu, series, None, eps_series, 1.0 - eps_a, rhs)

    def ode(a, y):
        out = np.empty_like(y)
        for i in range(p + 1):
            out[2 * i] = y[2 * i + 1]
            out[2 * i + 1] = sol._second_derivative(np.array(a), y, i)
        return out

    res = solve_ivp(ode, (eps_series, 1.0 - eps_a), np.array(y0), method="DOP853",
                    rtol=rtol, atol=atol, dense_output=True)
    if not res.success:
        a_reached = float(res.t[-1]) if res.t.size else eps_series
        raise StepSizeCollapse(f"L_beta integration stopped at a={a_reached:.6f}: {res.message}",
                               a_reached)
    sol.dense = res.sol
    sol.diagnostics = {"nfev": int(res.nfev), "steps": int(res.t.size)}
    return sol


def solve_Lbeta(beta: float, rhs: Callable, **kw) -> LbetaSystemSolution:
    """Single equation ``L_beta W = rhs`` with ``W(0) = 0``; see :func:`solve_lbeta_system`."""
    return solve_lbeta_system(beta, [rhs], **kw)


# -- assembly ------------------------------------------------------------


def _bracket(R):
    """``R^2 / sqrt(1 + R^2)`` and its first two derivatives."""
    s = 1.0 + R * R
    f = R * R / np.sqrt(s)
    f1 = R * (R * R + 2.0) / s ** 1.5
    f2 = (2.0 - R * R) / s ** 2.5
    return f, f1, f2


def _half_log(R):
    s = 1.0 + R * R
    return 0.5 * np.log(s), R / s, (1.0 - R * R) / (s * s)


class EvenLayer:
    """``v = t^beta [ <R>^-1 R^2 a^-1 sum W^i l^i + sum Wt^i l^i + b sum Wtt^i l^i ]``

    with ``l = log(1 + R^2)/2`` and ``b = t^nu``. Replacing ``R`` by
    ``R^2/<R>`` and ``log R`` by ``l`` keeps the layer smooth and even at
    ``R = 0`` without changing its large-``R`` behaviour.
    """

    def __init__(self, nu: float, exponent: Exponent, r_channel: Optional[LbetaSystemSolution],
                 c_channel: Optional[LbetaSystemSolution], b_channel: Optional[LbetaSystemSolution],
                 name: str = "v2"):
        self.nu = nu
        self.exponent = exponent
        self.r_channel = r_channel
        self.c_channel = c_channel
        self.b_channel = b_channel
        self.name = name

    def jet(self, t, r) -> Jet:
        t, r = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r, dtype=float))
        nu = self.nu
        p = -1.0 - nu
        lam = t ** p
        R = Jet(lam * r, p * r * t ** (p - 1), p * (p - 1) * r * t ** (p - 2), lam, np.zeros_like(r))
        A = Jet(r / t, -r / t ** 2, 2.0 * r / t ** 3, 1.0 / t, np.zeros_like(r))
        ell = R.compose(*_half_log(R.v))
        total = Jet.constant(0.0, t.shape)

        def log_sum(system, over_a=False):
            acc = Jet.constant(0.0, t.shape)
            power = Jet.constant(1.0, t.shape)
            for i in range(system.levels):
                f = system.over_a(A.v, i) if over_a else system(A.v, i)
                acc = acc + A.compose(*f) * power
                power = power * ell
            return acc

        if self.r_channel is not None:
            total = total + R.compose(*_bracket(R.v)) * log_sum(self.r_channel, over_a=True)
        if self.c_channel is not None:
            total = total + log_sum(self.c_channel)
        if self.b_channel is not None:
            b = Jet.power_of_time(t, nu)
            total = total + b * log_sum(self.b_channel)
        return Jet.power_of_time(t, self.exponent(nu)) * total


def assemble_even(pp, nu: float, exponent: Exponent, eps_a: float = 1e-3,
                  channels=("R", "1", "b"), name: str = "v2") -> EvenLayer:
    """Solve the three cone equations for a principal part and build the layer.

    The targets carry a minus sign: the layer must cancel the principal part.
    """
    beta = exponent(nu)
    systems = {}
    if "R" in channels and np.any(pp.q):
        rhs = [(lambda a, i=i: -a * pp.q_fn(i)(a)) for i in range(pp.q.shape[0])]
        systems["R"] = solve_lbeta_system(beta - nu, rhs, nu=nu, eps_a=eps_a)
    if "1" in channels and np.any(pp.c):
        rhs = [(lambda a, i=i: -pp.c_fn(i)(a)) for i in range(pp.c.shape[0])]
        systems["1"] = solve_lbeta_system(beta, rhs, nu=nu, eps_a=eps_a)
    if "b" in channels and any(np.any(pp.d_fn(i).coef) for i in range(pp.d.shape[0])):
        rhs = [(lambda a, i=i: -pp.d_fn(i)(a)) for i in range(pp.d.shape[0])]
        systems["b"] = solve_lbeta_system(beta + nu, rhs, nu=nu, eps_a=eps_a)
    return EvenLayer(nu, exponent, systems.get("R"), systems.get("1"), systems.get("b"), name)
