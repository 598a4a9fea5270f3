"""Residual ``e = -d_t^2 u + Delta_g u + u^5`` of a layered profile on the cone."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..metric import WarpedMetric
from ..soliton import SelfSimilarFrame, e0
from .grid import ConeGrid
from ..jets import wave_residual
from .layers import Profile, flat_radial_image


def _nonlinear_excess(u0, V):
    """``(u0 + V)^5 - u0^5 - 5 u0^4 V`` without cancellation."""
    return V * V * (10.0 * u0 ** 3 + V * (10.0 * u0 ** 2 + V * (5.0 * u0 + V)))


def evaluate_residual(profile: Profile, t, r, metric: WarpedMetric = None):
    """Pointwise residual.

    ``e = e0 + sum_layers Lin(v) + N(V)``, where ``e0`` is the closed-form
    error of the soliton, ``Lin`` the linearization at ``u0`` and ``N`` the
    purely nonlinear remainder in ``V = sum v``.
    """
    metric = profile.metric if metric is None else metric
    t, r = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r, dtype=float))
    nu = profile.nu
    e = np.array(e0(SelfSimilarFrame(nu, t, r), metric), dtype=float)
    if not profile.corrections:
        return e
    u0 = profile.soliton.values(t, r)
    u0_4 = u0 ** 4
    kr = 0.0 if metric.is_flat else metric.kappa_r_times(r)
    V = np.zeros_like(e)
    for layer in profile.corrections:
        jet = layer.jet(t, r)
        if hasattr(layer, "radial_image"):
            core = layer.radial_image(t, r, jet)
        else:
            core = flat_radial_image(jet, r, u0_4)
        e = e - jet.tt + kr * jet.r + core
        V = V + jet.v
    return e + _nonlinear_excess(u0, V)


def direct_residual(profile: Profile, t, r, metric: WarpedMetric = None):
    """Residual assembled straight from the jet of the full profile.

    Uses ``g'/g`` from the metric rather than the cutoff form and no closed-form
    cancellation, so it serves as an independent check of
    :func:`evaluate_residual` (``r > 0`` only).
    """
    metric = profile.metric if metric is None else metric
    t, r = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r, dtype=float))
    if np.any(r <= 0):
        raise ValueError("direct residual needs r > 0")
    return wave_residual(profile.jet(t, r), metric.dg_ratio(r))


def error_norm(values, a_nodes, a_weights, t):
    """``n(t) = int_0^{a_max t} |e|^2 r^2 dr = t^3 int |e|^2 a^2 da``."""
    values = np.asarray(values, dtype=float)
    return t ** 3 * np.sum(a_weights * a_nodes ** 2 * values ** 2, axis=-1)


def decay_slope(t, n, window=None):
    """Least-squares slope of ``log n`` against ``log t``."""
    t = np.asarray(t, dtype=float)
    n = np.asarray(n, dtype=float)
    if window is not None:
        keep = (t >= min(window)) & (t <= max(window))
        t, n = t[keep], n[keep]
    if t.size < 4:
        raise ValueError("need at least four slices for a slope")
    if np.any(n <= 0):
        raise ValueError("norms must be positive for a log-log fit")
    return float(np.polyfit(np.log(t), np.log(n), 1)[0])


@dataclass
class Residual:
    label: str
    t: np.ndarray
    samples: np.ndarray
    interior_samples: np.ndarray
    norms: np.ndarray
    interior_norms: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def slope(self) -> float:
        return decay_slope(self.t, self.norms)

    @property
    def interior_slope(self) -> float:
        return decay_slope(self.t, self.interior_norms)


def compute_residual(profile: Profile, grid: ConeGrid, label: str = "",
                     metric: WarpedMetric = None) -> Residual:
    metric = profile.metric if metric is None else metric
    t, r = grid.mesh()
    ti, ri = grid.mesh(interior=True)
    e = evaluate_residual(profile, t, r, metric)
    ei = evaluate_residual(profile, ti, ri, metric)
    if not (np.all(np.isfinite(e)) and np.all(np.isfinite(ei))):
        raise FloatingPointError(f"non-finite residual ({label})")
    n = error_norm(e, grid.a_nodes, grid.a_weights, grid.t_nodes)
    ni = error_norm(ei, grid.interior_nodes, grid.interior_weights, grid.t_nodes)
    return Residual(label, grid.t_nodes.copy(), e, ei, n, ni)
