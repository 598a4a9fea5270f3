"""Driver for the alternating interior / cone corrections."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..metric import WarpedMetric
from .even import assemble_even
from .grid import ConeGrid
from .layers import OddLayer, Profile, step_zero_source
from .principal import PrincipalPart, extract_principal_part
from .residual import Residual, compute_residual, evaluate_residual

log = logging.getLogger(__name__)


@dataclass
class RoundsResult:
    profile: Profile
    residuals: List[Residual]
    principal: List[PrincipalPart] = field(default_factory=list)
    steps: List[dict] = field(default_factory=list)

    def residual(self, label: str) -> Residual:
        for r in self.residuals:
            if r.label == label:
                return r
        raise KeyError(label)

    def profile_up_to(self, n_layers: int) -> Profile:
        return Profile(self.profile.nu, self.profile.metric, self.profile.layers[:n_layers + 1])


def _step_record(res: Residual, **extra) -> dict:
    rec = {"step": res.label, "slope": res.slope, "interior_slope": res.interior_slope}
    rec.update(extra)
    return rec


def run_rounds(nu: float, metric: WarpedMetric, k_max: int = 1, grid: Optional[ConeGrid] = None,
               p: int = 0, window=(50.0, 3000.0), channels=("R", "1", "b"),
               even: bool = True) -> RoundsResult:
    """Build ``u0 + v1 (+ v2)`` and the residual sequence ``e0, e1, e2``.

    ``k_max = 0`` keeps the soliton alone. ``k_max = 1`` adds the interior
    correction driven by ``e0`` and, when ``even`` is set, the cone
    correction cancelling the near-cone principal part of ``e1``.
    """
    if not 0.0 < nu <= 1.0:
        raise ValueError("nu must lie in (0, 1]")
    if k_max not in (0, 1):
        raise NotImplementedError("only k_max in {0, 1} is implemented")
    grid = ConeGrid.default() if grid is None else grid
    profile = Profile(nu, metric)
    e0 = compute_residual(profile, grid, "e0")
    out = RoundsResult(profile, [e0])
    out.steps.append(_step_record(e0))
    log.info("e0: slope %.4f interior %.4f", e0.slope, e0.interior_slope)
    if k_max == 0:
        return out

    odd = OddLayer(nu, step_zero_source(nu, metric), name="v1")
    profile = profile.with_layer(odd, k=1)
    e1 = compute_residual(profile, grid, "e1")
    out.profile = profile
    out.residuals.append(e1)
    out.steps.append(_step_record(e1, exponent=str(odd.exponent)))
    log.info("e1: slope %.4f interior %.4f", e1.slope, e1.interior_slope)
    if not even:
        return out

    beta = odd.exponent(nu)
    current = profile

    def scaled(t, r):
        return t ** (2.0 - beta) * evaluate_residual(current, t, r)

    pp = extract_principal_part(scaled, grid.a_nodes, nu, p=p, window=window)
    out.principal.append(pp)
    layer = assemble_even(pp, nu, odd.exponent, eps_a=grid.eps_a, channels=channels, name="v2")
    profile = profile.with_layer(layer, k=2)
    e2 = compute_residual(profile, grid, "e2")
    out.profile = profile
    out.residuals.append(e2)
    orders = {}
    for key, system in (("R", layer.r_channel), ("1", layer.c_channel), ("b", layer.b_channel)):
        if system is not None:
            orders[key] = [system.vanishing_order(i) for i in range(system.levels)]
    out.steps.append(_step_record(
        e2, exponent=str(odd.exponent), fit_residual=float(np.max(pp.fit_residual)),
        condition=float(np.max(pp.condition)), smoothing=pp.smoothing_error(),
        tail=pp.tail.tolist(), vanishing_orders=orders))
    log.info("e2: slope %.4f interior %.4f (max cond %.3e)", e2.slope, e2.interior_slope,
             np.max(pp.condition))
    return out
