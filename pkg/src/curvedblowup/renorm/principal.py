"""Near-cone structure of a residual, by regression in ``t`` at fixed ``a``.

At fixed ``a`` the variables are dependent (``b R = a`` with ``b = t^nu``),
so the functions ``R, 1, log R, b, b log R, ...`` become explicit functions
of ``t`` and their coefficients are obtained by least squares.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


RIDGE = 1e-10


def _column(name: str, t, a, nu):
    R = a * t ** (-nu)
    b = t ** nu
    L = np.log(R)
    table = {
        "R": R,
        "RL": R * L,
        "1": np.ones_like(t),
        "L": L,
        "L2": L * L,
        "b": b,
        "bL": b * L,
        "bL2": b * L * L,
        "b2": b * b,
        "b2L": b * b * L,
        "b3": b ** 3,
    }
    return table[name]


def design_matrix(names: Sequence[str], t, a: float, nu: float) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return np.column_stack([_column(n, t, a, nu) for n in names])


@dataclass
class Fit:
    names: tuple
    coef: np.ndarray
    residual: float
    condition: float

    def __getitem__(self, name):
        return self.coef[self.names.index(name)]


def least_squares(y, X, names, ridge: float = RIDGE) -> Fit:
    """Column-scaled least squares with a ridge floor; reports the scaled condition number.

    The penalty rows are ``ridge * sigma_max * I``: they only act on directions
    whose singular values fall below ``ridge`` relative to the largest one.
    """
    y = np.asarray(y, dtype=float)
    if X.shape[0] < X.shape[1]:
        raise ValueError("fewer samples than basis functions")
    scale = np.linalg.norm(X, axis=0)
    scale[scale == 0] = 1.0
    Xs = X / scale
    sv = np.linalg.svd(Xs, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    A = np.vstack([Xs, ridge * sv[0] * np.eye(X.shape[1])])
    rhs = np.concatenate([y, np.zeros(X.shape[1])])
    sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    coef = sol / scale
    res = y - X @ coef
    ref = max(np.linalg.norm(y), 1e-300)
    return Fit(tuple(names), coef, float(np.linalg.norm(res) / ref), cond)


LEADING = ("R", "1", "L")
SPLIT_BASIS = ("R", "1", "L", "b", "bL", "b2")


def split_leading(values, t, a: float, nu: float, max_condition: float = 1e12):
    """Split ``t^2 e t^(-beta)`` sampled at fixed ``a`` into ``(e0, e1, fit)``.

    ``e0`` collects the channels without a positive power of ``b = t^nu``;
    ``e1 = values - e0`` keeps the rest, including the fit remainder.
    """
    t = np.asarray(t, dtype=float)
    if t.size < 6:
        raise ValueError("need at least six time samples")
    X = design_matrix(SPLIT_BASIS, t, a, nu)
    fit = least_squares(values, X, SPLIT_BASIS)
    if fit.condition > max_condition:
        raise np.linalg.LinAlgError(f"ill-conditioned split (cond={fit.condition:.3e})")
    e0 = X[:, :3] @ fit.coef[:3]
    return e0, np.asarray(values, dtype=float) - e0, fit


def principal_basis(p: int):
    """R-channel ``R L^i`` (i <= p), constant channel ``L^i`` (i <= p+1), b-channel ``b L^i``."""
    logs = ["", "L", "L2"]
    r_ch = ["R" if i == 0 else "R" + logs[i] for i in range(p + 1)]
    c_ch = ["1" if i == 0 else logs[i] for i in range(p + 2)]
    b_ch = ["b" + logs[i] for i in range(p + 2)]
    return r_ch, c_ch, b_ch


NUISANCE = ("b2", "b2L", "b3")


def _smooth_fit(a, y, degree, a_max):
    return np.polynomial.Chebyshev.fit(a, y, degree, domain=[0.0, a_max])


def _tail_split(a, ad, degree, a_max):
    """Fit ``a d(a) = h0 + a P(a)``; returns ``(h0, P)``."""
    x = 2.0 * a / a_max - 1.0
    V = np.polynomial.chebyshev.chebvander(x, degree)
    X = np.column_stack([np.ones_like(a), a[:, None] * V])
    coef, *_ = np.linalg.lstsq(X, ad, rcond=None)
    return float(coef[0]), np.polynomial.Chebyshev(coef[1:], domain=[0.0, a_max])


@dataclass
class PrincipalPart:
    """Coefficient curves on ``a_nodes``.

    ``q[i]`` multiplies ``R (log R)^i``, ``c[i]`` multiplies ``(log R)^i``
    (this lumps the ``b R = a`` channel into the constant one) and ``d[i]``
    multiplies ``b (log R)^i``. Since ``b = a / R``, the ``b`` channel
    also absorbs ``R^-1`` tails, which show up as ``h0 / a``; those decay
    like ``R^-1`` and are not part of the principal part, so ``tail[i] = h0``
    is split off and only the regular remainder drives the ``b`` correction.
    """

    a_nodes: np.ndarray
    p: int
    q: np.ndarray
    c: np.ndarray
    d: np.ndarray
    fit_residual: np.ndarray
    condition: np.ndarray
    window: tuple = ()
    a_effective: np.ndarray = None
    degree: int = 12
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        a_eff = self.a_nodes if self.a_effective is None else self.a_effective
        self.a_effective = np.asarray(a_eff, dtype=float)
        keep = self.a_nodes >= self.a_effective
        a = self.a_nodes[keep]
        hi = float(self.a_nodes[-1])
        self._q = [_smooth_fit(a, row[keep], self.degree, hi) for row in self.q]
        self._c = [_smooth_fit(a, row[keep], self.degree, hi) for row in self.c]
        split = [_tail_split(a, (row * self.a_effective)[keep], self.degree, hi) for row in self.d]
        self.tail = np.array([h for h, _ in split])
        self._d = [P for _, P in split]

    def q_fn(self, i) -> Callable:
        return self._q[i]

    def c_fn(self, i) -> Callable:
        return self._c[i]

    def d_fn(self, i) -> Callable:
        """Regular part of the ``b (log R)^i`` coefficient."""
        return self._d[i]

    def smoothing_error(self) -> float:
        """Largest deviation of the smoothed curves from the raw fits (nodes above the floor)."""
        keep = self.a_nodes >= self.a_effective
        a = self.a_nodes[keep]
        errs = [np.max(np.abs(f(a) - row[keep])) for f, row in zip(self._q + self._c, list(self.q) + list(self.c))]
        errs += [np.max(np.abs(self.tail[i] + a * self._d[i](a) - a * row[keep]))
                 for i, row in enumerate(self.d)]
        return float(max(errs)) if errs else 0.0

    @property
    def is_zero(self) -> bool:
        return not (np.any(self.q) or np.any(self.c) or np.any(self.d))


def _window_times(a: float, nu: float, window, n: int):
    R = np.geomspace(window[0], window[1], n)
    return (a / R) ** (1.0 / nu)


def extract_principal_part(scaled_residual: Callable, a_nodes, nu: float, p: int = 0,
                           window=(50.0, 3000.0), samples: int = 16,
                           a_floor: float = 1e-3) -> PrincipalPart:
    """Fit the near-cone basis at every ``a`` node.

    ``scaled_residual(t, r)`` must return ``t^2 e(t, r) t^(-beta)``. At node
    ``a`` the times are chosen so that ``R = a t^(-nu)`` spans ``window``,
    which isolates the large-``R`` structure. Nodes below ``a_floor`` reuse
    the times of ``a_floor`` (the implied ``R`` is then smaller).
    """
    a_nodes = np.asarray(a_nodes, dtype=float)
    r_ch, c_ch, b_ch = principal_basis(p)
    names = tuple(r_ch + c_ch + b_ch) + NUISANCE
    nq, nc = len(r_ch), len(c_ch)
    q = np.zeros((nq, a_nodes.size))
    c = np.zeros((nc, a_nodes.size))
    d = np.zeros((len(b_ch), a_nodes.size))
    res = np.zeros(a_nodes.size)
    cond = np.zeros(a_nodes.size)
    for k, a in enumerate(a_nodes):
        a_eff = max(a, a_floor)
        t = _window_times(a_eff, nu, window, samples)
        y = np.asarray(scaled_residual(t, a_eff * t), dtype=float)
        fit = least_squares(y, design_matrix(names, t, a_eff, nu), names)
        q[:, k] = fit.coef[:nq]
        c[:, k] = fit.coef[nq:nq + nc]
        d[:, k] = fit.coef[nq + nc:nq + nc + len(b_ch)]
        res[k], cond[k] = fit.residual, fit.condition
    return PrincipalPart(a_nodes, p, q, c, d, res, cond, tuple(window),
                         np.maximum(a_nodes, a_floor))
