"""Second-order jets in ``(t, r)`` for exact derivatives of layered profiles.

A :class:`Jet` carries a field together with ``d_t``, ``d_t^2``, ``d_r`` and
``d_r^2``. The wave operator never needs the mixed derivative of a composite,
so the two directions propagate independently through products and
compositions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Jet:
    v: np.ndarray
    t: np.ndarray
    tt: np.ndarray
    r: np.ndarray
    rr: np.ndarray

    @classmethod
    def constant(cls, c, shape=()):
        c = np.broadcast_to(np.asarray(c, dtype=float), shape)
        z = np.zeros(np.shape(c))
        return cls(np.array(c, dtype=float), z, z.copy(), z.copy(), z.copy())

    @classmethod
    def time(cls, t, shape=None):
        t = np.asarray(t, dtype=float)
        if shape is not None:
            t = np.broadcast_to(t, shape)
        z = np.zeros(t.shape)
        return cls(np.array(t), np.ones(t.shape), z, z.copy(), z.copy())

    @classmethod
    def radius(cls, r, shape=None):
        r = np.asarray(r, dtype=float)
        if shape is not None:
            r = np.broadcast_to(r, shape)
        z = np.zeros(r.shape)
        return cls(np.array(r), z, z.copy(), np.ones(r.shape), z.copy())

    @classmethod
    def power_of_time(cls, t, p: float):
        """``t^p`` as a jet (no ``r`` dependence)."""
        t = np.asarray(t, dtype=float)
        z = np.zeros(t.shape)
        return cls(t ** p, p * t ** (p - 1), p * (p - 1) * t ** (p - 2), z, z.copy())

    def _coerce(self, other):
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, np.shape(self.v))

    def __add__(self, other):
        o = self._coerce(other)
        return Jet(self.v + o.v, self.t + o.t, self.tt + o.tt, self.r + o.r, self.rr + o.rr)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.v, -self.t, -self.tt, -self.r, -self.rr)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            c = np.asarray(other, dtype=float)
            return Jet(self.v * c, self.t * c, self.tt * c, self.r * c, self.rr * c)
        o = other
        return Jet(
            self.v * o.v,
            self.t * o.v + self.v * o.t,
            self.tt * o.v + 2.0 * self.t * o.t + self.v * o.tt,
            self.r * o.v + self.v * o.r,
            self.rr * o.v + 2.0 * self.r * o.r + self.v * o.rr,
        )

    __rmul__ = __mul__

    def compose(self, f0, f1, f2):
        """Chain rule for ``f(self)`` given ``f, f', f''`` evaluated at ``self.v``."""
        return Jet(
            np.asarray(f0, dtype=float),
            f1 * self.t,
            f2 * self.t ** 2 + f1 * self.tt,
            f1 * self.r,
            f2 * self.r ** 2 + f1 * self.rr,
        )

    def __pow__(self, p):
        v = self.v
        if isinstance(p, int) and p >= 0:
            f1 = p * v ** (p - 1) if p >= 1 else np.zeros_like(v)
            f2 = p * (p - 1) * v ** (p - 2) if p >= 2 else np.zeros_like(v)
            return self.compose(v ** p, f1, f2)
        return self.compose(v ** p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2))

    def reciprocal(self):
        v = self.v
        return self.compose(1.0 / v, -1.0 / v ** 2, 2.0 / v ** 3)

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return self * (1.0 / np.asarray(other, dtype=float))
        return self * other.reciprocal()

    def log(self):
        v = self.v
        return self.compose(np.log(v), 1.0 / v, -1.0 / v ** 2)

    def sqrt(self):
        s = np.sqrt(self.v)
        return self.compose(s, 0.5 / s, -0.25 / (s * self.v))


def wave_residual(u: Jet, dg_ratio: np.ndarray, power: int = 5) -> np.ndarray:
    """``-u_tt + u_rr + (g'/g) u_r + u^power`` from a jet."""
    return -u.tt + u.rr + dg_ratio * u.r + u.v ** power
