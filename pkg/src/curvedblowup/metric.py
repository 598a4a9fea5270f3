"""Radial warped-product backgrounds ``g = dr^2 + g_OmegaOmega(r) dOmega^2``.

Only the angular profile ``g_OmegaOmega`` and its logarithmic derivative
enter the radial Laplacian ``d_r^2 + (g'/g) d_r``, so that is all a
:class:`WarpedMetric` carries, together with the cutoff radius ``r0`` that
localizes the curvature correction.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .expr import parse_expression


class Family(str, enum.Enum):
    FLAT = "flat"
    SPHERE = "sphere"
    HYPERBOLIC = "hyperbolic"
    CUSTOM = "custom"


class MetricError(ValueError):
    pass


class NotAdmissibleError(MetricError):
    """The defect ``g'/g - 2/r`` is not ``O(r)`` near the origin."""

    def __init__(self, message: str, r: float):
        super().__init__(message)
        self.r = r


# Taylor coefficients in powers r^2, r^4, r^6, r^8 for g_OmegaOmega and in
# powers r, r^3, r^5, r^7 for the defect g'/g - 2/r.
_G_SERIES = {
    Family.FLAT: (1.0, 0.0, 0.0, 0.0),
    Family.SPHERE: (1.0, -1.0 / 3.0, 2.0 / 45.0, -1.0 / 315.0),
    Family.HYPERBOLIC: (1.0, 1.0 / 3.0, 2.0 / 45.0, 1.0 / 315.0),
}
_DEFECT_SERIES = {
    Family.FLAT: (0.0, 0.0, 0.0, 0.0),
    Family.SPHERE: (-2.0 / 3.0, -2.0 / 45.0, -4.0 / 945.0, -2.0 / 4725.0),
    Family.HYPERBOLIC: (2.0 / 3.0, -2.0 / 45.0, 4.0 / 945.0, -2.0 / 4725.0),
}


def _bump(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_cutoff(r, r0: float) -> np.ndarray:
    """C-infinity cutoff equal to 1 on ``[0, r0]`` and 0 on ``[2 r0, inf)``."""
    x = (np.asarray(r, dtype=float) - r0) / r0
    a, b = _bump(1.0 - x), _bump(x)
    return a / (a + b)


@dataclass(frozen=True)
class WarpedMetric:
    family: Family = Family.FLAT
    r0: float = 0.5
    cutoff_width: Optional[float] = None
    profile: Union[str, Callable, None] = None
    _g: Optional[Callable] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.r0 <= 0:
            raise MetricError("r0 must be positive")
        if self.cutoff_width is None:
            object.__setattr__(self, "cutoff_width", self.r0)
        if self.cutoff_width != self.r0:
            # the cutoff is parameterized by (r0, 2 r0) only
            raise MetricError("cutoff_width must equal r0 (transition on [r0, 2 r0])")
        if self.family is Family.SPHERE and self.r0 >= np.pi / 2:
            raise MetricError("sphere chart requires r0 < pi/2")
        if self.family is Family.CUSTOM:
            if self.profile is None:
                raise MetricError("custom metric needs a profile expression or callable")
            g = parse_expression(self.profile) if isinstance(self.profile, str) else self.profile
            object.__setattr__(self, "_g", g)
            warnings.warn(
                "custom profiles are only required to be C^2; analyticity is not checked",
                stacklevel=2,
            )

    @classmethod
    def flat(cls, r0: float = 0.5) -> "WarpedMetric":
        return cls(Family.FLAT, r0)

    @classmethod
    def sphere(cls, r0: float = 0.5) -> "WarpedMetric":
        return cls(Family.SPHERE, r0)

    @classmethod
    def hyperbolic(cls, r0: float = 0.5) -> "WarpedMetric":
        return cls(Family.HYPERBOLIC, r0)

    @classmethod
    def custom(cls, profile, r0: float = 0.5) -> "WarpedMetric":
        return cls(Family.CUSTOM, r0, profile=profile)

    @property
    def name(self) -> str:
        if self.family is Family.CUSTOM:
            return f"custom[{getattr(self._g, 'source', 'callable')}]"
        return self.family.value

    @property
    def is_flat(self) -> bool:
        return self.family is Family.FLAT

    @property
    def series_threshold(self) -> float:
        return 1e-2 * self.r0

    def _check_domain(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise MetricError("radius must be non-negative")
        if self.family is Family.SPHERE and np.any(r >= np.pi):
            raise MetricError("sphere profile sin^2 r vanishes at r = pi")
        return r

    # -- profile and its derivative -------------------------------------

    def g_omega(self, r):
        """Angular profile ``g_OmegaOmega(r)``."""
        r = self._check_domain(r)
        if self.family is Family.CUSTOM:
            out = np.asarray(self._g(r), dtype=float)
            if np.any(~np.isfinite(out)):
                raise MetricError("custom profile is not finite on the requested radii")
            return out
        c = _G_SERIES[self.family]
        r2 = r * r
        series = r2 * (c[0] + r2 * (c[1] + r2 * (c[2] + r2 * c[3])))
        if self.family is Family.FLAT:
            return r2
        direct = np.sin(r) ** 2 if self.family is Family.SPHERE else np.sinh(r) ** 2
        return np.where(r < self.series_threshold, series, direct)

    def _custom_defect(self, r):
        # defect = d/dr log(g / r^2); differentiate the ratio, which is 1 + O(r^2),
        # so the 2/r cancellation happens analytically.
        h = np.minimum(1e-5 * np.maximum(r, self.r0), 0.5 * r)
        ratio = lambda x: np.asarray(self._g(x), dtype=float) / (x * x)
        rp, rm = ratio(r + h), ratio(r - h)
        return (rp - rm) / (2.0 * h) / ratio(r)

    def dg_ratio_defect(self, r):
        """``D(r) = g'/g - 2/r``; zero for flat space, ``O(r)`` when admissible."""
        r = self._check_domain(r)
        if np.any(r <= 0):
            raise MetricError("defect is defined for r > 0")
        if self.family is Family.FLAT:
            return np.zeros_like(r)
        if self.family is Family.CUSTOM:
            return self._custom_defect(r)
        c = _DEFECT_SERIES[self.family]
        r2 = r * r
        series = r * (c[0] + r2 * (c[1] + r2 * (c[2] + r2 * c[3])))
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.family is Family.SPHERE:
                direct = 2.0 / np.tan(r) - 2.0 / r
            else:
                direct = 2.0 / np.tanh(r) - 2.0 / r
        return np.where(r < self.series_threshold, series, direct)

    def dg_ratio(self, r):
        """The full ratio ``g'/g``."""
        r = np.asarray(r, dtype=float)
        return self.dg_ratio_defect(r) + 2.0 / r

    def cutoff(self, r):
        return smooth_cutoff(r, self.r0)

    def defect_over_r(self, r):
        """``D(r)/r`` with the removable singularity at the origin filled in."""
        r = self._check_domain(r)
        if self.family is Family.FLAT:
            return np.zeros_like(r)
        if self.family is Family.CUSTOM:
            rs = self.series_threshold
            safe = np.maximum(r, rs)
            direct = self._custom_defect(safe) / safe
            k1 = self._custom_defect(np.array(rs)) / rs
            k2 = self._custom_defect(np.array(2 * rs)) / (2 * rs)
            k0 = (4.0 * k1 - k2) / 3.0
            small = k0 + (k1 - k0) * (r / rs) ** 2
            return np.where(r < rs, small, direct)
        c = _DEFECT_SERIES[self.family]
        r2 = r * r
        series = c[0] + r2 * (c[1] + r2 * (c[2] + r2 * c[3]))
        safe = np.maximum(r, self.series_threshold)
        direct = self.dg_ratio_defect(safe) / safe
        return np.where(r < self.series_threshold, series, direct)

    def kappa(self, r):
        """Cutoff curvature correction ``kappa(r) = phi(r) D(r) / r``."""
        r = self._check_domain(r)
        phi = self.cutoff(r)
        out = np.zeros_like(r)
        inside = r < 2.0 * self.r0
        if np.any(inside):
            out[inside] = phi[inside] * self.defect_over_r(r[inside])
        return out

    def kappa_r_times(self, r):
        """``kappa(r) r`` = ``phi(r) D(r)``, the coefficient of ``d_r`` in the curved term."""
        r = np.asarray(r, dtype=float)
        return self.kappa(r) * r

    # -- diagnostics -----------------------------------------------------

    def verify_admissibility(self, r_max: Optional[float] = None, samples: int = 400) -> float:
        """Return ``C = sup |D(r)|/r`` over ``(0, r_max)``.

        Raises :class:`NotAdmissibleError` when ``|D|/r`` grows as ``r -> 0``
        on a geometric sample reaching six decades below ``r_max``.
        """
        r_max = 2.0 * self.r0 if r_max is None else r_max
        if not 0 < r_max <= 2.0 * self.r0 + 1e-12:
            raise MetricError("need 0 < r_max <= 2 r0")
        r = np.geomspace(1e-6 * r_max, r_max, samples)
        q = np.abs(self.dg_ratio_defect(r)) / r
        if not np.all(np.isfinite(q)):
            bad = r[~np.isfinite(q)][0]
            raise NotAdmissibleError(f"defect not finite at r={bad:.3e}", float(bad))
        small = r < 1e-4 * r_max
        scale = max(np.max(q), 1e-300)
        if np.max(q[small]) > 1e-8 * scale:
            slope = np.polyfit(np.log(r[small]), np.log(q[small] + 1e-300), 1)[0]
            if slope < -0.5:
                raise NotAdmissibleError(
                    f"|D(r)|/r grows like r^{slope:.2f} as r -> 0; offending r={r[0]:.3e}",
                    float(r[0]),
                )
        return float(np.max(q))

    def curvature_coefficient(self, r_start: Optional[float] = None, levels: int = 5,
                              tol: float = 1e-7) -> float:
        """``R_rrrr(0) = 3 lim (r^2 - g)/r^4`` by Richardson extrapolation in ``r^2``."""
        r_start = 0.2 * self.r0 if r_start is None else r_start
        rs = r_start * 0.5 ** np.arange(levels)
        f = (rs ** 2 - self.g_omega(rs)) / rs ** 4
        table = [np.array(f, dtype=float)]
        for k in range(1, levels):
            prev = table[-1]
            fac = 4.0 ** k
            table.append((fac * prev[1:] - prev[:-1]) / (fac - 1.0))
        best, second = table[-1][0], table[-2][-1]
        if not np.isfinite(best) or abs(best - second) > tol * max(1.0, abs(best)):
            raise MetricError(
                f"curvature extrapolation did not converge ({second:.3e} vs {best:.3e})"
            )
        return float(3.0 * best)


def metric_from_name(name: str, r0: float = 0.5, profile: Optional[str] = None) -> WarpedMetric:
    fam = Family(name)
    if fam is Family.CUSTOM:
        return WarpedMetric.custom(profile, r0)
    return WarpedMetric(fam, r0)
