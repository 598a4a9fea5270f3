"""Ground state ``W(R) = (1 + R^2/3)^(-1/2)``, the self-similar frame and the
step-zero error of the rescaled soliton.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .jets import Jet
from .metric import WarpedMetric


def W(R):
    R = np.asarray(R, dtype=float)
    return (1.0 + R * R / 3.0) ** -0.5


def dW(R):
    R = np.asarray(R, dtype=float)
    return -(R / 3.0) * (1.0 + R * R / 3.0) ** -1.5


def d2W(R):
    R = np.asarray(R, dtype=float)
    s = 1.0 + R * R / 3.0
    return -s ** -1.5 / 3.0 + (R * R / 3.0) * s ** -2.5


def W_derivs(R):
    return W(R), dW(R), d2W(R)


def scaling_generator(R, f, df, d2f=None, order: int = 1):
    """Apply ``D = 1/2 + R d_R`` once or twice to sampled ``f``.

    ``D^2 f = f/4 + 2 R f' + R^2 f''``.
    """
    R = np.asarray(R, dtype=float)
    if order == 1:
        return 0.5 * f + R * df
    if order == 2:
        if d2f is None:
            raise ValueError("second derivative required for D^2")
        return 0.25 * f + 2.0 * R * df + R * R * d2f
    raise ValueError("order must be 1 or 2")


def DW(R):
    """Closed form ``(1/2)(1 - R^2/3)(1 + R^2/3)^(-3/2)``."""
    R = np.asarray(R, dtype=float)
    return 0.5 * (1.0 - R * R / 3.0) * (1.0 + R * R / 3.0) ** -1.5


def dDW(R):
    R = np.asarray(R, dtype=float)
    s = 1.0 + R * R / 3.0
    return -(R / 3.0) * s ** -1.5 - 0.5 * R * (1.0 - R * R / 3.0) * s ** -2.5


def d2DW(R):
    """Closed form ``-sqrt(3) (2R^4 - 69R^2 + 45) / (2 (R^2 + 3)^(7/2))``."""
    R = np.asarray(R, dtype=float)
    R2 = R * R
    return -np.sqrt(3.0) * (2.0 * R2 * R2 - 69.0 * R2 + 45.0) / (2.0 * (R2 + 3.0) ** 3.5)


def D2W(R):
    """Closed form ``(9 - 30 R^2 + R^4) / (36 (1 + R^2/3)^(5/2))``."""
    R = np.asarray(R, dtype=float)
    R2 = R * R
    return (9.0 - 30.0 * R2 + R2 * R2) / 36.0 * (1.0 + R2 / 3.0) ** -2.5


def potential(R):
    """``5 W^4 = 45/(3 + R^2)^2``."""
    R = np.asarray(R, dtype=float)
    return 45.0 / (3.0 + R * R) ** 2


@dataclass(frozen=True)
class SelfSimilarFrame:
    nu: float
    t: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        r = np.asarray(self.r, dtype=float)
        if np.any(t <= 0):
            raise ValueError("t must be positive")
        if np.any(r < 0):
            raise ValueError("r must be non-negative")
        t, r = np.broadcast_arrays(t, r)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "r", r)

    @property
    def lam(self):
        return self.t ** (-1.0 - self.nu)

    @property
    def R(self):
        return self.lam * self.r

    @property
    def a(self):
        return self.r / self.t

    @property
    def b1(self):
        return self.t ** self.nu

    @property
    def b2(self):
        return self.r ** 2

    @property
    def b3(self):
        return self.t ** 2

    @property
    def log_lambda_rate(self):
        """``lambda'/lambda = -(1 + nu)/t``."""
        return -(1.0 + self.nu) / self.t

    @property
    def inside_cone(self):
        return self.r < self.t


def lam(t, nu):
    return np.asarray(t, dtype=float) ** (-1.0 - nu)


def rescaled_soliton(frame: SelfSimilarFrame):
    """``u0 = lambda^(1/2) W(R)`` and ``d_t u0 = lambda^(1/2) (lambda'/lambda) DW(R)``."""
    amp = frame.lam ** 0.5
    R = frame.R
    return amp * W(R), amp * frame.log_lambda_rate * DW(R)


def soliton_jet(t, r, nu: float) -> Jet:
    """``u0`` with exact first and second derivatives in ``t`` and ``r``."""
    t, r = np.broadcast_arrays(np.asarray(t, float), np.asarray(r, float))
    p = -1.0 - nu
    lam_ = t ** p
    R = Jet(lam_ * r, p * r * t ** (p - 1), p * (p - 1) * r * t ** (p - 2), lam_, np.zeros_like(r))
    core = R.compose(*W_derivs(R.v))
    return Jet.power_of_time(t, 0.5 * p) * core


def e0_scaled(frame: SelfSimilarFrame, metric: WarpedMetric):
    """``t^2 e0 / lambda^(1/2)`` as a function of the frame."""
    nu = frame.nu
    R = frame.R
    kap = metric.kappa(frame.r) if not metric.is_flat else 0.0
    return (-(1.0 + nu) * DW(R) - (1.0 + nu) ** 2 * D2W(R)
            + frame.t ** 2 * kap * R * dW(R))


def e0(frame: SelfSimilarFrame, metric: WarpedMetric):
    """Residual of the rescaled soliton, ``-d_t^2 u0 + Delta_g u0 + u0^5``."""
    return frame.lam ** 0.5 * frame.t ** -2.0 * e0_scaled(frame, metric)


# -- energy ------------------------------------------------------------

_QUAD_CUT = 1e3


def _tail_gradient(X):
    # int_X^inf x^4/(1+x^2)^3 dx, x = R/sqrt(3), expanded in 1/X
    return 1.0 / X - 1.0 / X ** 3 + 6.0 / (5.0 * X ** 5) - 10.0 / (7.0 * X ** 7)


def _tail_sextic(X):
    # int_X^inf x^2/(1+x^2)^3 dx
    return 1.0 / (3.0 * X ** 3) - 3.0 / (5.0 * X ** 5) + 6.0 / (7.0 * X ** 7)


def soliton_integrals(scale: float = 1.0, tol: float = 1e-12):
    """Return ``(int W_r^2 r^2 dr, int W^6 r^2 dr)`` for ``lambda^(1/2) W(lambda r)``.

    Gauss-Kronrod on ``[0, 10^3/lambda]`` plus the analytic tail of the
    algebraically decaying integrands.
    """
    lamb = float(scale)
    cut = _QUAD_CUT / lamb
    grad = lambda r: (lamb ** 1.5 * dW(lamb * r)) ** 2 * r * r
    sext = lambda r: (lamb ** 0.5 * W(lamb * r)) ** 6 * r * r
    pts = [x / lamb for x in (1.0, 10.0, 100.0)]
    g_in, g_err = integrate.quad(grad, 0.0, cut, points=pts, epsabs=0, epsrel=tol, limit=400)
    s_in, s_err = integrate.quad(sext, 0.0, cut, points=pts, epsabs=0, epsrel=tol, limit=400)
    if g_err > 1e-9 * abs(g_in) or s_err > 1e-9 * abs(s_in):
        raise RuntimeError("soliton energy quadrature did not converge")
    X = _QUAD_CUT / np.sqrt(3.0)
    # both integrands are scale invariant; the tails are in units of x = R/sqrt(3)
    g_tail = np.sqrt(3.0) * _tail_gradient(X)
    s_tail = 3.0 * np.sqrt(3.0) * _tail_sextic(X)
    return g_in + g_tail, s_in + s_tail


def soliton_energy(scale: float = 1.0) -> float:
    """``E(W) = int (W_r^2/2 - W^6/6) r^2 dr`` (radial, no 4 pi)."""
    grad, sext = soliton_integrals(scale)
    return 0.5 * grad - sext / 6.0


SOLITON_ENERGY_EXACT = np.sqrt(3.0) * np.pi / 16.0
