"""Radial evolution of ``u_tt = u_rr + (2/r) u_r + kappa r u_r + u^5``.

The field is carried as ``w = r u`` so that the flat radial Laplacian
becomes ``w_rr / r`` and ``w(0) = 0`` is a Dirichlet condition. Space is
discretized with fourth-order central differences (odd reflection of ``w``
at the origin) and time with classical RK4. The outer boundary carries an
outgoing condition ``w_t = -s w_r`` where ``s`` is the direction of
integration, so runs toward ``t -> 0`` are handled by negative steps.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .metric import WarpedMetric, smooth_cutoff

log = logging.getLogger(__name__)


class CFLError(ValueError):
    pass


class ExteriorEnergyError(RuntimeError):
    def __init__(self, message, outside):
        super().__init__(message)
        self.outside = outside


class ResolutionError(ValueError):
    pass


@dataclass
class WaveState:
    t: float
    r: np.ndarray
    w: np.ndarray
    wt: np.ndarray

    @classmethod
    def from_u(cls, t, r, u, ut) -> "WaveState":
        r = np.asarray(r, dtype=float)
        if abs(r[0]) > 0:
            raise ValueError("grid must start at r = 0")
        return cls(float(t), r, r * np.asarray(u, dtype=float), r * np.asarray(ut, dtype=float))

    @property
    def h(self) -> float:
        return float(self.r[1] - self.r[0])

    @property
    def L(self) -> float:
        return float(self.r[-1])

    @property
    def u(self) -> np.ndarray:
        return recover(self.w, self.r)

    @property
    def ut(self) -> np.ndarray:
        return recover(self.wt, self.r)

    def copy(self) -> "WaveState":
        return WaveState(self.t, self.r, self.w.copy(), self.wt.copy())


def uniform_grid(L: float, n: int) -> np.ndarray:
    """``n + 1`` nodes on ``[0, L]``."""
    return np.linspace(0.0, L, n + 1)


def recover(w, r):
    """``u = w / r`` with the fourth-order odd-extension value at the origin."""
    w = np.asarray(w, dtype=float)
    u = np.empty_like(w)
    u[1:] = w[1:] / r[1:]
    h = r[1] - r[0]
    u[0] = (8.0 * w[1] - w[2]) / (6.0 * h)
    return u


def _d2_odd(w, h):
    """``w_rr`` with odd reflection at 0; 5-point interior, 3-point next to the outer end."""
    n = w.size
    ext = np.concatenate([-w[2:0:-1], w])  # w_{-2}, w_{-1}, w_0, ...
    out = np.empty(n)
    c = ext
    out[: n - 2] = (-c[0:n - 2] + 16 * c[1:n - 1] - 30 * c[2:n] + 16 * c[3:n + 1] - c[4:n + 2]) \
        / (12 * h * h)
    out[n - 2] = (w[n - 3] - 2 * w[n - 2] + w[n - 1]) / (h * h)
    out[n - 1] = 0.0  # replaced by the boundary condition
    return out


def _d1_odd(w, h):
    """``w_r`` with odd reflection at 0 (fourth order), backward second order at the end."""
    n = w.size
    c = np.concatenate([-w[2:0:-1], w])
    out = np.empty(n)
    out[: n - 2] = (c[0:n - 2] - 8 * c[1:n - 1] + 8 * c[3:n + 1] - c[4:n + 2]) / (12 * h)
    out[n - 2] = (w[n - 1] - w[n - 3]) / (2 * h)
    out[n - 1] = (3 * w[n - 1] - 4 * w[n - 2] + w[n - 3]) / (2 * h)
    return out


def _curvature_factor(r, metric: Optional[WarpedMetric]):
    if metric is None or metric.is_flat:
        return None
    return metric.kappa(r)


def w_acceleration(w, r, kappa=None, nonlinear: bool = True):
    """``w_tt`` at every node except the outer one."""
    h = r[1] - r[0]
    acc = _d2_odd(w, h)
    if kappa is not None:
        acc = acc + kappa * (r * _d1_odd(w, h) - w)
    if nonlinear:
        u = recover(w, r)
        acc = acc + r * u ** 5
    acc[0] = 0.0
    return acc


def spatial_operator(state: WaveState, metric: Optional[WarpedMetric] = None,
                     nonlinear: bool = True) -> np.ndarray:
    """``u_rr + (2/r) u_r + kappa r u_r + u^5`` on the grid (last node excluded, set to nan)."""
    r = state.r
    if state.r.size < 8:
        raise ResolutionError("grid too coarse near the origin")
    h = state.h
    kappa = _curvature_factor(r, metric)
    acc = w_acceleration(state.w, r, kappa, nonlinear=False)
    out = np.empty_like(acc)
    out[1:] = acc[1:] / r[1:]
    u = state.u
    w = state.w
    # Laplacian at the origin is w'''(0), odd-extended 4th-order stencil
    out[0] = (-2.0 * w[3] + 16.0 * w[2] - 26.0 * w[1]) / (8.0 * h ** 3)
    if nonlinear:
        out = out + u ** 5
    out[-1] = np.nan
    return out


def _rhs(w, wt, r, kappa, nonlinear, direction):
    h = r[1] - r[0]
    acc = w_acceleration(w, r, kappa, nonlinear)
    # outgoing: w_t = -s w_r at the outer node, hence w_tt = -s d_r w_t
    d = (3 * wt[-1] - 4 * wt[-2] + wt[-3]) / (2 * h)
    acc[-1] = -direction * d
    return wt, acc


def step(state: WaveState, dt: float, metric: Optional[WarpedMetric] = None,
         nonlinear: bool = True, cfl: float = 0.5) -> WaveState:
    """One RK4 step of size ``dt`` (either sign)."""
    h = state.h
    if abs(dt) > cfl * h * (1 + 1e-12):
        raise CFLError(f"|dt|={abs(dt):.3e} exceeds CFL*h={cfl * h:.3e}")
    r = state.r
    kappa = _curvature_factor(r, metric)
    s = 1.0 if dt >= 0 else -1.0
    w0, v0 = state.w, state.wt
    k1w, k1v = _rhs(w0, v0, r, kappa, nonlinear, s)
    k2w, k2v = _rhs(w0 + 0.5 * dt * k1w, v0 + 0.5 * dt * k1v, r, kappa, nonlinear, s)
    k3w, k3v = _rhs(w0 + 0.5 * dt * k2w, v0 + 0.5 * dt * k2v, r, kappa, nonlinear, s)
    k4w, k4v = _rhs(w0 + dt * k3w, v0 + dt * k3v, r, kappa, nonlinear, s)
    w = w0 + dt / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
    v = v0 + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    w[0] = 0.0
    v[0] = 0.0
    return WaveState(state.t + dt, r, w, v)


# -- energy ------------------------------------------------------------


@dataclass
class EnergyReport:
    total: float
    inside: float
    outside: float
    gradient: float
    kinetic: float
    nonlinear: float
    split_radius: float
    positive: bool = False


def _radial_derivative(state: WaveState):
    h = state.h
    u = state.u
    du = np.empty_like(u)
    du[1:] = (_d1_odd(state.w, h)[1:] - u[1:]) / state.r[1:]
    du[0] = 0.0
    return du


def _weight(r, metric: Optional[WarpedMetric]):
    if metric is None or metric.is_flat:
        return r * r
    return metric.g_omega(r)


def _cumulative(density, r):
    out = np.zeros_like(density)
    out[1:] = np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(r))
    return out


def energy_density(state: WaveState, metric: Optional[WarpedMetric] = None,
                   positive: bool = False):
    """``(kinetic, gradient, potential)`` densities with the ``g_OmegaOmega`` weight."""
    g = _weight(state.r, metric)
    ut = state.ut
    ur = _radial_derivative(state)
    u = state.u
    sign = 1.0 if positive else -1.0
    return 0.5 * ut * ut * g, 0.5 * ur * ur * g, sign * u ** 6 / 6.0 * g


def energy(state: WaveState, metric: Optional[WarpedMetric] = None, split: Optional[float] = None,
           positive: bool = False) -> EnergyReport:
    """Energy on ``[0, L]`` split at ``r = split`` (default ``r = t``).

    The cumulative trapezoid integral is interpolated at the split radius,
    so ``inside + outside = total`` holds to rounding.
    """
    kin, grad, pot = energy_density(state, metric, positive)
    r = state.r
    dens = kin + grad + pot
    C = _cumulative(dens, r)
    split = state.t if split is None else split
    split = float(np.clip(split, 0.0, r[-1]))
    j = min(int(np.searchsorted(r, split, side="right")) - 1, r.size - 2)
    frac = (split - r[j]) / (r[j + 1] - r[j])
    mid = dens[j] + frac * (dens[j + 1] - dens[j])
    inside = C[j] + 0.5 * (dens[j] + mid) * (split - r[j])
    total = C[-1]
    return EnergyReport(
        total=float(total), inside=float(inside), outside=float(total - inside),
        gradient=float(_cumulative(grad, r)[-1]), kinetic=float(_cumulative(kin, r)[-1]),
        nonlinear=float(_cumulative(pot, r)[-1]), split_radius=split, positive=positive,
    )


def cone_energy_split(state: WaveState, metric: Optional[WarpedMetric] = None,
                      t: Optional[float] = None, positive: bool = True):
    rep = energy(state, metric, split=state.t if t is None else t, positive=positive)
    return rep.inside, rep.outside


# -- data --------------------------------------------------------------


def _matched_tail(r, r_match, value, slope):
    """``A (r_m/r) + B (r_m/r)^2`` matching value and slope at ``r_m``."""
    B = -(value + r_match * slope)
    A = value - B
    x = r_match / r
    return A * x + B * x * x


def glue(r, values, slopes, r_match):
    """Keep ``values`` for ``r <= r_match``; beyond, a decaying tail cut off by ``2 r_match``."""
    r = np.asarray(r, dtype=float)
    out = np.array(values, dtype=float)
    outer = r > r_match
    if np.any(outer):
        tail = _matched_tail(r[outer], r_match, slopes[0], slopes[1])
        out[outer] = tail * smooth_cutoff(r[outer], r_match)
    return out


def prepare_data(profile, t0: float, metric: WarpedMetric, delta: Optional[float] = None,
                 L: Optional[float] = None, n: int = 4096) -> WaveState:
    """Sample a profile at ``t = t0`` and extend it beyond the cone.

    Inside ``r <= t0`` the data are the profile and its time derivative;
    beyond, each is continued by a tail matching value and slope at ``t0``
    and cut off smoothly by ``r = 2 t0``.
    """
    L = 3.0 * t0 if L is None else L
    if L < 2.0 * t0:
        raise ValueError("domain must contain the glued support r <= 2 t0")
    if 3.0 * t0 >= metric.r0 and not metric.is_flat:
        raise ValueError("need 3 t0 < r0 so that the curved region covers the data")
    r = uniform_grid(L, n)
    inside = r <= t0
    jet = profile.jet(np.full(inside.sum(), t0), r[inside])
    edge = profile.jet(np.array([t0]), np.array([t0]))
    u = np.zeros_like(r)
    ut = np.zeros_like(r)
    u[inside], ut[inside] = jet.v, jet.t
    # the slope of u_t in r is not carried by the jet; difference the edge
    eps = 1e-6 * t0
    pair = profile.jet(np.array([t0, t0]), np.array([t0 - eps, t0 + eps]))
    ut_r = (pair.t[1] - pair.t[0]) / (2 * eps)
    u = glue(r, u, (float(edge.v[0]), float(edge.r[0])), t0) * 1.0
    u[inside] = jet.v
    ut = glue(r, ut, (float(edge.t[0]), ut_r), t0)
    ut[inside] = jet.t
    state = WaveState.from_u(t0, r, u, ut)
    if delta is not None:
        _, outside = cone_energy_split(state, metric, t0, positive=True)
        if outside > delta:
            raise ExteriorEnergyError(
                f"outside-cone energy {outside:.4e} exceeds delta={delta:.4e}; decrease t0", outside)
    return state


# -- trajectories --------------------------------------------------------


@dataclass
class EvolutionControls:
    cfl: float = 0.5
    nonlinear: bool = True
    nu: Optional[float] = None
    resolution_guard: float = 0.05
    stop_at_guard: bool = True
    blowup_factor: float = 1e3
    record_every: int = 1
    snapshot_times: tuple = ()
    monitor: Optional[Callable] = None  # called with the trajectory at record points; True stops


@dataclass
class Trajectory:
    t: List[float] = field(default_factory=list)
    u_center: List[float] = field(default_factory=list)
    energy_total: List[float] = field(default_factory=list)
    energy_inside: List[float] = field(default_factory=list)
    energy_outside: List[float] = field(default_factory=list)
    outside_positive: List[float] = field(default_factory=list)
    max_abs_u: List[float] = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    h: Optional[float] = None
    nu: Optional[float] = None
    stop_reason: str = ""
    final: Optional[WaveState] = None

    def arrays(self):
        return {k: np.asarray(getattr(self, k)) for k in (
            "t", "u_center", "energy_total", "energy_inside", "energy_outside",
            "outside_positive", "max_abs_u")}


def _record(traj: Trajectory, state: WaveState, metric):
    signed = energy(state, metric)
    pos = energy(state, metric, positive=True)
    u = state.u
    traj.t.append(state.t)
    traj.u_center.append(float(u[0]))
    traj.energy_total.append(signed.total)
    traj.energy_inside.append(signed.inside)
    traj.energy_outside.append(signed.outside)
    traj.outside_positive.append(pos.outside)
    traj.max_abs_u.append(float(np.max(np.abs(u))))


def evolve_to(state: WaveState, t_target: float, metric: Optional[WarpedMetric] = None,
              controls: Optional[EvolutionControls] = None) -> Trajectory:
    """Integrate from ``state.t`` to ``t_target`` (either direction).

    Stops early on blow-up (non-finite values or ``max|u|`` beyond
    ``blowup_factor`` times its initial value) or, when ``nu`` is given,
    once ``lambda(t) h`` exceeds the resolution guard.
    """
    ctl = EvolutionControls() if controls is None else controls
    h = state.h
    span = t_target - state.t
    n_steps = max(1, int(np.ceil(abs(span) / (ctl.cfl * h))))
    dt = span / n_steps
    traj = Trajectory(h=h, nu=ctl.nu)
    _record(traj, state, metric)
    u_ref = max(traj.max_abs_u[0], 1e-300)
    pending = sorted(ctl.snapshot_times, key=lambda x: -abs(x - state.t))
    cur = state
    traj.stop_reason = "reached target"
    for k in range(1, n_steps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            cur = step(cur, dt, metric, ctl.nonlinear, ctl.cfl)
        if not (np.all(np.isfinite(cur.w)) and np.all(np.isfinite(cur.wt))):
            traj.stop_reason = "non-finite values"
            break
        for ts in list(pending):
            if (ts - cur.t) * np.sign(dt) <= 0:
                traj.snapshots[ts] = (cur.t, cur.r.copy(), cur.u, cur.ut)
                pending.remove(ts)
        if k % ctl.record_every == 0 or k == n_steps:
            _record(traj, cur, metric)
            if traj.max_abs_u[-1] > ctl.blowup_factor * u_ref:
                traj.stop_reason = "amplitude above blow-up threshold"
                break
            if ctl.monitor is not None and ctl.monitor(traj):
                traj.stop_reason = "monitor"
                break
        if ctl.nu is not None and ctl.stop_at_guard and cur.t > 0:
            if cur.t ** (-1.0 - ctl.nu) * h > ctl.resolution_guard:
                if traj.t[-1] != cur.t:
                    _record(traj, cur, metric)
                traj.stop_reason = "resolution guard"
                break
    traj.final = cur
    return traj


def detect_blowup(traj: Trajectory, factor: float = 1e3):
    """``(flag, t)``: first time ``max|u|`` exceeds ``factor`` times its start value."""
    if traj.stop_reason == "non-finite values":
        return True, traj.t[-1]
    m = np.asarray(traj.max_abs_u)
    hit = np.nonzero(m > factor * m[0])[0]
    if hit.size:
        return True, float(traj.t[hit[0]])
    return False, None


@dataclass
class RateFit:
    window: tuple
    slope: float
    nu_hat: float
    residual: float
    samples: int


def trusted_mask(t, h: float, nu: float, guard: float = 0.05):
    return np.asarray(t) ** (-1.0 - nu) * h <= guard


def fit_rate(t, u_center, window=None, h: Optional[float] = None, nu: Optional[float] = None,
             guard: float = 0.05) -> RateFit:
    """Least squares of ``log u(t, 0)`` against ``log t``; ``nu_hat = -2 slope - 1``."""
    t = np.asarray(t, dtype=float)
    u = np.asarray(u_center, dtype=float)
    if window is not None:
        keep = (t >= min(window)) & (t <= max(window))
        t, u = t[keep], u[keep]
    if t.size < 3:
        raise ValueError("too few samples in the fit window")
    if h is not None and nu is not None and not np.all(trusted_mask(t, h, nu, guard)):
        raise ResolutionError("fit window contains under-resolved times (lambda h above guard)")
    A = np.column_stack([np.log(t), np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(A, np.log(u), rcond=None)
    res = np.log(u) - A @ coef
    win = (float(t.min()), float(t.max()))
    return RateFit(win, float(coef[0]), float(-2.0 * coef[0] - 1.0),
                   float(np.sqrt(np.mean(res ** 2))), int(t.size))


# -- self-similar tracking ---------------------------------------------


def center_ratio(traj: Trajectory, nu: float) -> np.ndarray:
    """``u(t, 0) t^((1+nu)/2)``, equal to 1 along the prescribed rate."""
    A = traj.arrays()
    return A["u_center"] * A["t"] ** (0.5 * (1.0 + nu))


def unstable_direction(r, t0: float, nu: float, spectral_data):
    """Rescaled ground state of the linearized operator, ``lambda^(1/2) phi(R) / R``."""
    lam = t0 ** (-1.0 - nu)
    R = lam * np.asarray(r, dtype=float)
    Rg, phi = spectral_data.R, spectral_data.ground_state
    out = np.zeros_like(R)
    inside = R <= Rg[-1]
    pos = inside & (R > 0)
    out[pos] = np.interp(R[pos], Rg, phi) / R[pos]
    out[R == 0] = phi[1] / Rg[1]
    return lam ** 0.5 * out


@dataclass
class TrackingResult:
    alpha: float
    trajectory: Trajectory
    history: list
    stop_t: float
    outcome: int


def _outcome(traj: Trajectory, nu: float, band: float) -> int:
    dev = center_ratio(traj, nu) - 1.0
    hit = np.nonzero(np.abs(dev) > band)[0]
    if hit.size:
        return int(np.sign(dev[hit[0]]))
    return 0


def run_perturbed(base: WaveState, direction, alpha: float, t_target: float, metric, nu: float,
                  band: float = 0.1, record_every: int = 10) -> Trajectory:
    state = WaveState.from_u(base.t, base.r, base.u + alpha * direction, base.ut)

    def monitor(traj):
        return abs(traj.u_center[-1] * traj.t[-1] ** (0.5 * (1.0 + nu)) - 1.0) > band

    ctl = EvolutionControls(nu=nu, record_every=record_every, monitor=monitor)
    return evolve_to(state, t_target, metric, ctl)


def tune_unstable_mode(base: WaveState, direction, t_target: float, metric, nu: float,
                       band: float = 0.1, bracket: float = 1e-3, iterations: int = 60,
                       record_every: int = 10) -> TrackingResult:
    """Bisect the amplitude of ``direction`` added to the data.

    Runs that leave the band ``|u(t,0) t^((1+nu)/2) - 1| <= band`` upward
    and downward bracket the amplitude for which the growing mode is
    absent; the bisection keeps the run that tracks the longest.
    """
    history = []

    def probe(alpha):
        traj = run_perturbed(base, direction, alpha, t_target, metric, nu, band, record_every)
        out = _outcome(traj, nu, band)
        history.append((alpha, traj.t[-1], out))
        return traj, out

    lo, hi = -bracket, bracket
    tlo, olo = probe(lo)
    thi, ohi = probe(hi)
    grow = 0
    while olo * ohi >= 0 and (olo != 0 or ohi != 0):
        if grow > 8:
            raise RuntimeError("could not bracket the unstable-mode amplitude")
        lo, hi = 4 * lo, 4 * hi
        tlo, olo = probe(lo)
        thi, ohi = probe(hi)
        grow += 1
    best = min((tlo, lo, olo), (thi, hi, ohi), key=lambda x: x[0].t[-1] * np.sign(base.t - t_target))
    for _ in range(iterations):
        if olo == 0 or ohi == 0:
            break
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        tm, om = probe(mid)
        if (tm.t[-1] - best[0].t[-1]) * np.sign(base.t - t_target) < 0 or om == 0:
            best = (tm, mid, om)
        if om == 0:
            break
        if om == olo:
            lo, olo = mid, om
        else:
            hi, ohi = mid, om
    traj, alpha, out = best
    return TrackingResult(float(alpha), traj, history, float(traj.t[-1]), out)
