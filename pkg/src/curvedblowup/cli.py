"""Command line entry point: ``curvedblowup <subcommand> [options]``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List

import numpy as np

from . import evolve as ev
from .config import ConfigError, RunConfig, load
from .metric import MetricError, NotAdmissibleError, metric_from_name
from .renorm.grid import ConeGrid
from .renorm.rounds import run_rounds
from . import spectral as sp

log = logging.getLogger("curvedblowup")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_ACCEPTANCE = 0, 2, 3, 4

NUMERICAL_ERRORS = (FloatingPointError, np.linalg.LinAlgError, NotAdmissibleError, MetricError,
                    sp.NoSignChangeError, ev.ExteriorEnergyError, ev.CFLError,
                    ev.ResolutionError, RuntimeError, ArithmeticError, ValueError)


class AcceptanceFailure(RuntimeError):
    pass


class MissingArtifact(ConfigError):
    pass


def write_csv(path: Path, header: List[str], columns) -> Path:
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    np.savetxt(path, data, delimiter=",", header=",".join(header), comments="", fmt="%.17g")
    return path


def read_csv(path: Path) -> Dict[str, np.ndarray]:
    if not path.exists():
        raise MissingArtifact(f"missing upstream artifact {path}")
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {h: data[:, i] for i, h in enumerate(header)}


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


class Run:
    """Shared state of one invocation: config, output directory and summary."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.out = cfg.output_dir
        self.out.mkdir(parents=True, exist_ok=True)
        self.summary: Dict[str, Dict[str, object]] = {}
        self._rounds = {}
        self.trajectory = None

    @property
    def metric(self):
        c = self.cfg
        return metric_from_name(c["metric.name"], c["metric.r0"], c["metric.profile"] or None)

    def grid(self) -> ConeGrid:
        c = self.cfg
        return ConeGrid.default(t0=c["model.t0"], t_min=c["model.t_min"], n_t=c["grid.t_nodes"],
                                n_a=c["grid.a_nodes"], eps_a=c["grid.eps_a"],
                                n_interior=c["grid.interior_nodes"])

    def rounds(self, even=None):
        c = self.cfg
        even = c["renorm.even"] if even is None else even
        key = (even,)
        if key not in self._rounds:
            self._rounds[key] = run_rounds(
                c["model.nu"], self.metric, k_max=c["renorm.rounds"], grid=self.grid(),
                p=c["renorm.p"], window=(c["renorm.window_lo"], c["renorm.window_hi"]), even=even)
        return self._rounds[key]

    def record(self, section: str, **items):
        self.summary.setdefault(section, {}).update(items)

    def finish(self):
        (self.out / "config.ini").write_text(self.cfg.dumps())
        lines = []
        for section, items in self.summary.items():
            lines.append(f"[{section}]")
            lines += [f"{k} = {_fmt(v)}" for k, v in items.items()]
            lines.append("")
        text = "\n".join(lines)
        (self.out / "summary.txt").write_text(text)
        print(text)


# -- stages --------------------------------------------------------------


def stage_metric(run: Run):
    m = run.metric
    r = np.linspace(0.0, 2.0 * m.r0, 401)[1:]
    C = m.verify_admissibility()
    run.record("metric", name=m.name, r0=m.r0, admissibility_C=C,
               curvature_R_rrrr_0=m.curvature_coefficient(), kappa_small_r=float(m.kappa(1e-4)))
    write_csv(run.out / "metric.csv", ["r", "g_omega", "kappa"], [r, m.g_omega(r), m.kappa(r)])


def stage_profile(run: Run):
    res = run.rounds()
    cols, names = [res.residuals[0].t], ["t"]
    for e in res.residuals:
        cols += [e.norms, e.interior_norms]
        names += [f"n_{e.label}", f"n_{e.label}_interior"]
    write_csv(run.out / "residual_norms.csv", names, cols)
    for e in res.residuals:
        run.record("profile", **{f"{e.label}_slope": e.slope,
                                 f"{e.label}_interior_slope": e.interior_slope})
    for step in res.steps:
        if "condition" in step:
            run.record("profile", principal_fit_residual=step["fit_residual"],
                       principal_condition=step["condition"])


def stage_residual(run: Run):
    res = run.rounds()
    g = run.grid()
    t, r = g.mesh()
    for e in res.residuals:
        write_csv(run.out / f"residual_{e.label}.csv", ["t", "a", "r", "e"],
                  [t.ravel(), (r / t).ravel(), r.ravel(), e.samples.ravel()])
        run.record("residual", **{f"{e.label}_max_abs": float(np.max(np.abs(e.samples)))})


def stage_spectral(run: Run):
    data = sp.negative_eigenvalue(n_grid=run.cfg["grid.R_points"])
    oracle = sp.matrix_eigenvalue()
    run.record("spectral", xi_minus=data.xi_minus, matrix_oracle=oracle,
               difference=abs(data.xi_minus - oracle), nodes=data.method["nodes"],
               decay_fit=sp.decay_fit(data), resonance_defect=sp.resonance_check())
    write_csv(run.out / "eigenfunction.csv", ["R", "phi"], [data.R, data.ground_state])


def _trace_columns(traj):
    A = traj.arrays()
    names = ["t", "u_center", "E_total", "E_in", "E_out", "max_abs_u", "E_out_positive"]
    keys = ["t", "u_center", "energy_total", "energy_inside", "energy_outside", "max_abs_u",
            "outside_positive"]
    return names, [A[k] for k in keys]


def tracking_check(t, u_center, nu, h, guard, band, outside, growth, t_required=None):
    """Ratio band and exterior-energy growth on the trusted window.

    With ``t_required`` the trajectory must also reach that time (or stop
    at the resolution guard after passing it).
    """
    t = np.asarray(t)
    ratio = np.asarray(u_center) * t ** (0.5 * (1.0 + nu))
    trusted = ev.trusted_mask(t, h, nu, guard)
    dev = float(np.max(np.abs(ratio[trusted] - 1.0)))
    out = np.asarray(outside)[trusted]
    grow = float(np.max(out) / out[0])
    reached = t_required is None or float(t.min()) <= t_required
    return dev, grow, dev <= band and grow <= growth and reached


def stage_evolve(run: Run):
    c = run.cfg
    nu, t0 = c["model.nu"], c["evolve.t0"]
    metric = run.metric
    profile = run.rounds(even=False).profile
    delta = c["evolve.delta"] or None
    base = ev.prepare_data(profile, t0, metric, delta=delta, n=c["grid.r_points"])
    ctl = ev.EvolutionControls(cfl=c["evolve.cfl"], nonlinear=c["evolve.nonlinear"], nu=nu,
                               resolution_guard=c["tolerances.resolution_guard"],
                               blowup_factor=c["tolerances.blowup_factor"],
                               record_every=c["evolve.record_every"])
    plain = ev.evolve_to(base, c["evolve.t_target"], metric, ctl)
    names, cols = _trace_columns(plain)
    write_csv(run.out / "trace_plain.csv", names, cols)
    run.record("evolve", h=base.h, plain_stop=plain.stop_reason, plain_t_end=plain.t[-1])
    # rate-fit may run alone later, after summary.txt has been rewritten
    (run.out / "trace_meta.txt").write_text(f"h = {_fmt(base.h)}\nnu = {_fmt(nu)}\n")
    traj = plain
    if c["evolve.tune"]:
        direction = ev.unstable_direction(base.r, t0, nu, sp.negative_eigenvalue(n_scan=40))
        tuned = ev.tune_unstable_mode(base, direction, c["evolve.t_target"], metric, nu,
                                      band=c["tolerances.bisection_band"],
                                      record_every=c["evolve.record_every"])
        traj = tuned.trajectory
        run.record("evolve", tuned_alpha=tuned.alpha, tuned_stop=traj.stop_reason,
                   tuned_t_end=traj.t[-1], bisection_runs=len(tuned.history))
    names, cols = _trace_columns(traj)
    write_csv(run.out / "trace.csv", names, cols)
    fin = traj.final
    write_csv(run.out / "snapshot_final.csv", ["r", "u", "ut"], [fin.r, fin.u, fin.ut])
    flag, t_flag = ev.detect_blowup(traj, c["tolerances.blowup_factor"])
    dev, grow, ok = tracking_check(traj.t, traj.u_center, nu, base.h,
                                   c["tolerances.resolution_guard"], c["tolerances.rate_band"],
                                   traj.outside_positive, c["tolerances.exterior_growth"],
                                   t_required=0.25 * t0)
    run.record("evolve", blowup_flag=flag, max_ratio_deviation=dev, exterior_growth=grow,
               tracking_ok=ok)
    run.trajectory = (traj, base.h)
    if not ok:
        raise AcceptanceFailure(f"tracking failed: deviation {dev:.3f}, exterior growth {grow:.3f}")


def stage_rate(run: Run):
    c = run.cfg
    nu = c["model.nu"]
    if run.trajectory is not None:
        traj, h = run.trajectory
        t, u = np.asarray(traj.t), np.asarray(traj.u_center)
    else:
        data = read_csv(run.out / "trace.csv")
        h = _read_h(run.out / "trace_meta.txt")
        t, u = data["t"], data["u_center"]
    trusted = ev.trusted_mask(t, h, nu, c["tolerances.resolution_guard"])
    fit = ev.fit_rate(t[trusted], u[trusted], h=h, nu=nu, guard=c["tolerances.resolution_guard"])
    run.record("rate", window_lo=fit.window[0], window_hi=fit.window[1], slope=fit.slope,
               nu_hat=fit.nu_hat, fit_residual=fit.residual, samples=fit.samples)


def _read_h(path: Path) -> float:
    if not path.exists():
        raise MissingArtifact(f"missing upstream artifact {path}")
    for line in path.read_text().splitlines():
        if line.startswith("h = "):
            return float(line.split("=", 1)[1])
    raise MissingArtifact(f"{path} does not record the grid spacing h")


STAGE_FUNCS = {"metric": stage_metric, "profile": stage_profile, "residual": stage_residual,
               "spectral": stage_spectral, "evolve": stage_evolve, "rate": stage_rate}

SUBCOMMANDS = {
    "metric-check": ["metric"],
    "profile-build": ["profile"],
    "residual-scan": ["residual"],
    "spectral": ["spectral"],
    "evolve-run": ["evolve"],
    "rate-fit": ["rate"],
    "full-pipeline": None,  # stages from the config
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="curvedblowup", description=__doc__)
    p.add_argument("command", choices=sorted(SUBCOMMANDS))
    p.add_argument("--config", help="sectioned key=value file")
    p.add_argument("--out", help="output directory (relative to $CURVEDBLOWUP_OUTPUT_ROOT)")
    p.add_argument("--metric", help="flat | sphere | hyperbolic | custom")
    p.add_argument("--profile", help="g_omega expression in r for --metric custom")
    p.add_argument("--r0", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--t0", type=float, help="evolution start time")
    p.add_argument("--rounds", type=int)
    p.add_argument("--no-tune", action="store_true", help="evolve the bare glued profile")
    p.add_argument("--linear", action="store_true", help="drop the nonlinearity in evolve-run")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def make_config(args) -> RunConfig:
    cfg = load(args.config)
    flags = {"metric.name": args.metric, "metric.profile": args.profile, "metric.r0": args.r0,
             "model.nu": args.nu, "evolve.t0": args.t0, "renorm.rounds": args.rounds,
             "output.directory": args.out}
    for key, val in flags.items():
        if val is not None:
            cfg.set(key, val)
    if args.no_tune:
        cfg.set("evolve.tune", False)
    if args.linear:
        cfg.set("evolve.nonlinear", False)
    for item in args.set:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        cfg.set(key.strip(), val)
    stages = SUBCOMMANDS[args.command]
    if stages is not None:
        cfg.set("run.stages", ",".join(stages))
    return cfg.validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    run = None
    code = EXIT_OK
    try:
        cfg = make_config(args)
        run = Run(cfg)
        for stage in cfg.stages:
            try:
                STAGE_FUNCS[stage](run)
            except AcceptanceFailure as exc:
                log.error("%s", exc)
                run.record("status", **{f"{stage}_acceptance": "fail"})
                code = EXIT_ACCEPTANCE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        code = EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = EXIT_NUMERICAL
    if run is not None:
        run.record("status", exit_code=code)
        run.finish()
    return code


if __name__ == "__main__":
    sys.exit(main())
