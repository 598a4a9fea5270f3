"""Layered approximate solutions ``u_k = u0 + v_1 + v_2 + ...``.

Every layer is a callable of ``(t, r)`` returning a :class:`Jet`, so the
residual can be evaluated anywhere in the cone with exact derivatives.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from ..jets import Jet
from ..metric import WarpedMetric
from ..soliton import SelfSimilarFrame, W, e0_scaled, soliton_jet
from .grid import NU, SOLITON_AMPLITUDE, Exponent
from .odd import second_derivative, solve_radial


def _broadcast(t, r):
    t, r = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r, dtype=float))
    return np.array(t), np.array(r)


class SolitonLayer:
    name = "u0"

    def __init__(self, nu: float):
        self.nu = nu
        self.exponent = SOLITON_AMPLITUDE

    def jet(self, t, r) -> Jet:
        return soliton_jet(t, r, self.nu)

    def values(self, t, r):
        t, r = _broadcast(t, r)
        return t ** (-0.5 * (1.0 + self.nu)) * W(t ** (-1.0 - self.nu) * r)


@dataclass
class OddSource:
    """Right-hand side ``t^2 e = t^exponent F(t, R)`` of an interior solve."""

    exponent: Exponent
    shape: Callable[[float, np.ndarray], np.ndarray]
    time_dependent: bool = False
    label: str = ""


def step_zero_source(nu: float, metric: WarpedMetric) -> OddSource:
    """``t^2 e0 = lambda^(1/2) [-(1+nu) DW - (1+nu)^2 D^2 W + t^2 kappa R W']``."""

    def shape(t, R):
        R = np.asarray(R, dtype=float)
        frame = SelfSimilarFrame(nu, t, R * t ** (1.0 + nu))
        return e0_scaled(frame, metric)

    return OddSource(SOLITON_AMPLITUDE, shape, time_dependent=not metric.is_flat, label="e0")


class OddLayer:
    """``v(t, r) = t^beta w(R; t)`` with ``-(w'' + 2w'/R + 5W^4 w) = F(t, .)``.

    The prefactor is ``beta = exponent(source) + 2 nu`` because the interior
    operator carries ``(t lambda)^2 = t^(-2 nu)``. When ``F`` depends on ``t``
    at fixed ``R`` the time derivatives of ``w`` are obtained by solving the
    same problem for ``F_t`` and ``F_tt`` (fourth-order differences).
    """

    def __init__(self, nu: float, source: OddSource, name: str = "v1", fd_step: float = 1e-3):
        self.nu = nu
        self.source = source
        self.name = name
        self.fd_step = fd_step
        self.exponent = source.exponent + NU + NU

    def _time_derivatives(self, t: float):
        F = self.source.shape
        h = self.fd_step * t
        def Ft(R):
            return (-F(t + 2 * h, R) + 8 * F(t + h, R) - 8 * F(t - h, R) + F(t - 2 * h, R)) / (12 * h)
        def Ftt(R):
            return (-F(t + 2 * h, R) + 16 * F(t + h, R) - 30 * F(t, R) + 16 * F(t - h, R)
                    - F(t - 2 * h, R)) / (12 * h * h)
        return Ft, Ftt

    def profile_slice(self, t: float, R):
        """``w, w_R, w_RR, w_t, w_tR, w_tt`` at fixed ``t``."""
        R = np.asarray(R, dtype=float)
        F = lambda x: self.source.shape(t, x)
        w, wR = solve_radial(F, R)
        wRR = second_derivative(R, w, wR, F(R))
        if self.source.time_dependent:
            Ft, Ftt = self._time_derivatives(t)
            wt, wtR = solve_radial(Ft, R)
            wtt, _ = solve_radial(Ftt, R)
        else:
            wt = wtR = wtt = np.zeros_like(R)
        return w, wR, wRR, wt, wtR, wtt

    def jet(self, t, r) -> Jet:
        t, r = _broadcast(t, r)
        nu = self.nu
        out = [np.empty(t.shape) for _ in range(5)]
        for tv in np.unique(t):
            idx = t == tv
            lam = tv ** (-1.0 - nu)
            R = lam * r[idx]
            w, wR, wRR, wt, wtR, wtt = self.profile_slice(float(tv), R)
            Rt = -(1.0 + nu) * R / tv
            Rtt = (1.0 + nu) * (2.0 + nu) * R / tv ** 2
            out[0][idx] = w
            out[1][idx] = wR * Rt + wt
            out[2][idx] = wRR * Rt ** 2 + wR * Rtt + 2.0 * wtR * Rt + wtt
            out[3][idx] = wR * lam
            out[4][idx] = wRR * lam ** 2
        return Jet.power_of_time(t, self.exponent(nu)) * Jet(*out)

    def radial_image(self, t, r, jet: Optional[Jet] = None):
        """``(d_r^2 + (2/r) d_r + 5 u0^4) v``, which is exactly ``-e_source``."""
        t, r = _broadcast(t, r)
        nu = self.nu
        out = np.empty(t.shape)
        for tv in np.unique(t):
            idx = t == tv
            R = tv ** (-1.0 - nu) * r[idx]
            out[idx] = -tv ** (self.source.exponent(nu) - 2.0) * self.source.shape(float(tv), R)
        return out


def flat_radial_image(jet: Jet, r, u0_4):
    """``v_rr + (2/r) v_r + 5 u0^4 v`` with the regular limit ``3 v_rr`` at ``r = 0``."""
    r = np.asarray(r, dtype=float)
    safe = np.where(r > 0, r, 1.0)
    lap = np.where(r > 0, jet.rr + 2.0 * jet.r / safe, 3.0 * jet.rr)
    return lap + 5.0 * u0_4 * jet.v


@dataclass
class Profile:
    nu: float
    metric: WarpedMetric
    layers: List = field(default_factory=list)
    k: int = 0

    def __post_init__(self):
        if not self.layers:
            self.layers = [SolitonLayer(self.nu)]

    @property
    def soliton(self) -> SolitonLayer:
        return self.layers[0]

    @property
    def corrections(self):
        return self.layers[1:]

    def with_layer(self, layer, k: Optional[int] = None) -> "Profile":
        return Profile(self.nu, self.metric, self.layers + [layer], self.k if k is None else k)

    def jet(self, t, r) -> Jet:
        total = self.layers[0].jet(t, r)
        for layer in self.corrections:
            total = total + layer.jet(t, r)
        return total

    def values(self, t, r):
        return self.jet(t, r).v

    def exponents(self):
        return [(layer.name, str(layer.exponent)) for layer in self.layers]
