"""Sampling of the backward light cone ``0 <= r < t`` and quadrature on it."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np


def lobatto_nodes(n: int, lo: float, hi: float) -> np.ndarray:
    """``n`` Chebyshev-Lobatto points on ``[lo, hi]``, increasing."""
    if n < 2:
        raise ValueError("need at least two nodes")
    x = -np.cos(np.pi * np.arange(n) / (n - 1))
    return lo + 0.5 * (hi - lo) * (x + 1.0)


def clenshaw_curtis_weights(n: int, lo: float, hi: float) -> np.ndarray:
    """Weights matching :func:`lobatto_nodes` (exact for polynomials of degree ``n - 1``)."""
    N = n - 1
    theta = np.pi * np.arange(n) / N
    w = np.zeros(n)
    v = np.ones(N - 1)
    inner = slice(1, N)
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N * N - 1)
        for k in range(1, N // 2):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
        v -= np.cos(N * theta[inner]) / (N * N - 1)
    else:
        w[0] = w[N] = 1.0 / (N * N)
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
    w[inner] = 2.0 * v / N
    return 0.5 * (hi - lo) * w


def barycentric_matrix(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Interpolation matrix from Chebyshev-Lobatto ``nodes`` to points ``x``."""
    n = nodes.size
    wts = (-1.0) ** np.arange(n)
    wts[0] *= 0.5
    wts[-1] *= 0.5
    x = np.atleast_1d(np.asarray(x, dtype=float))
    diff = x[:, None] - nodes[None, :]
    exact = diff == 0
    diff[exact] = 1.0
    M = wts[None, :] / diff
    M /= M.sum(axis=1, keepdims=True)
    rows = np.any(exact, axis=1)
    M[rows] = exact[rows].astype(float)
    return M


@dataclass(frozen=True)
class Exponent:
    """A power of ``t`` of the form ``const + nu_coeff * nu``, kept exact."""

    const: Fraction = Fraction(0)
    nu_coeff: Fraction = Fraction(0)

    def __call__(self, nu: float) -> float:
        return float(self.const) + float(self.nu_coeff) * nu

    def __add__(self, other: "Exponent") -> "Exponent":
        return Exponent(self.const + other.const, self.nu_coeff + other.nu_coeff)

    def __sub__(self, other: "Exponent") -> "Exponent":
        return Exponent(self.const - other.const, self.nu_coeff - other.nu_coeff)

    def __str__(self):
        return f"{self.const}{'+' if self.nu_coeff >= 0 else '-'}{abs(self.nu_coeff)}nu"

    @classmethod
    def of(cls, const, nu_coeff) -> "Exponent":
        return cls(Fraction(const), Fraction(nu_coeff))

    @classmethod
    def odd_layer(cls, k: int, j: int = 0) -> "Exponent":
        """Prefactor of the ``k``-th odd correction: ``lambda^(1/2) t^(2j) (t lambda)^(-2(k-j))``."""
        return cls.of(Fraction(-1, 2) + 2 * j, Fraction(-1, 2) + 2 * (k - j))


NU = Exponent.of(0, 1)
SOLITON_AMPLITUDE = Exponent.of(Fraction(-1, 2), Fraction(-1, 2))


@dataclass(frozen=True)
class ConeGrid:
    t_nodes: np.ndarray
    a_nodes: np.ndarray
    a_weights: np.ndarray
    interior_nodes: np.ndarray
    interior_weights: np.ndarray
    eps_a: float = 1e-3

    def __post_init__(self):
        if np.any(np.diff(self.t_nodes) >= 0) or self.t_nodes[-1] <= 0:
            raise ValueError("t_nodes must decrease strictly toward a positive t_min")
        if np.any(np.diff(self.a_nodes) <= 0) or self.a_nodes[-1] >= 1.0:
            raise ValueError("a_nodes must increase strictly inside [0, 1)")

    @classmethod
    def default(cls, t0: float = 0.2, t_min=None, n_t: int = 24, n_a: int = 160,
                eps_a: float = 1e-3, interior_a: float = 0.5, n_interior: int = 81) -> "ConeGrid":
        t_min = t0 / 16.0 if t_min is None else t_min
        if not 0 < t_min < t0:
            raise ValueError("need 0 < t_min < t0")
        t = np.geomspace(t0, t_min, n_t)
        hi = 1.0 - eps_a
        return cls(
            t_nodes=t,
            a_nodes=lobatto_nodes(n_a, 0.0, hi),
            a_weights=clenshaw_curtis_weights(n_a, 0.0, hi),
            interior_nodes=lobatto_nodes(n_interior, 0.0, interior_a),
            interior_weights=clenshaw_curtis_weights(n_interior, 0.0, interior_a),
            eps_a=eps_a,
        )

    @property
    def a_max(self) -> float:
        return float(self.a_nodes[-1])

    @property
    def interior_a(self) -> float:
        return float(self.interior_nodes[-1])

    def r_nodes(self, t: float) -> np.ndarray:
        return self.a_nodes * t

    def R_nodes(self, t: float, nu: float) -> np.ndarray:
        return t ** (-1.0 - nu) * self.a_nodes * t

    def mesh(self, interior: bool = False):
        """``(t, r)`` arrays of shape ``(n_t, n_a)``."""
        a = self.interior_nodes if interior else self.a_nodes
        t = self.t_nodes[:, None] * np.ones_like(a)[None, :]
        return t, t * a[None, :]
