"""Command-line driver.

``dropletfem run`` advances a droplet to pinch-off and writes snapshot CSVs,
``run.log``, ``report.txt`` and ``effective.cfg`` into the output directory.
``dropletfem mms`` prints the manufactured-solution convergence table.

Exit codes: 0 success, 1 configuration error, 2 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import STRATEGY_ALIASES, ConfigError, Settings, build_settings, dump_settings, load_file
from .estimator import ErrorField
from .mesh import Mesh1D
from .physics import nodal_curvature
from .state import State
from .timeloop import NonConvergence, RunReport, SingularMatrix, run

log = logging.getLogger("dropletfem")

SNAPSHOT_COLUMNS = ("t", "node", "zeta", "z", "z_over_hin", "u", "h", "h_over_hin", "s", "curvature", "eta_K")
REPORT_KEYS = (
    "status", "pinch_time_s", "pinch_z_m", "droplet_volume_m3", "n_steps",
    "n_refinements", "n_elements_refined", "final_n_elements", "eta_global_final",
)
LOG_LEVELS = {"error": logging.ERROR, "warning": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def nodal_eta(err: ErrorField) -> np.ndarray:
    """Element indicators shown at nodes: the larger of the two adjacent elements."""
    eta = err.eta_per_element
    out = np.empty(eta.size + 1)
    out[0] = eta[0]
    out[-1] = eta[-1]
    out[1:-1] = np.maximum(eta[:-1], eta[1:])
    return out


def write_snapshot(path: Path, state: State, mesh: Mesh1D, err: ErrorField, h_in: float) -> None:
    z = mesh.z
    kappa = nodal_curvature(mesh, state)
    eta = nodal_eta(err)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SNAPSHOT_COLUMNS)
        for i in range(mesh.n_nodes):
            w.writerow([
                repr(float(state.t)), i, repr(float(mesh.ref_coords[i])), repr(float(z[i])),
                repr(float(z[i] / h_in)), repr(float(state.u[i])), repr(float(state.h[i])),
                repr(float(state.h[i] / h_in)), repr(float(state.s[i])), repr(float(kappa[i])),
                repr(float(eta[i])),
            ])


def _num(x) -> str:
    return "none" if x is None else repr(float(x))


def format_report(report: RunReport) -> str:
    values = {
        "status": report.status,
        "pinch_time_s": _num(report.pinch_time),
        "pinch_z_m": _num(report.pinch_z),
        "droplet_volume_m3": _num(report.droplet_volume),
        "n_steps": str(report.n_steps),
        "n_refinements": str(report.n_refinements),
        "n_elements_refined": str(report.n_elements_refined),
        "final_n_elements": str(report.final_n_elements),
        "eta_global_final": _num(report.eta_global_final),
    }
    lines = [f"{k} = {values[k]}" for k in REPORT_KEYS]
    if report.message:
        lines.append(f"message = {report.message}")
    return "\n".join(lines) + "\n"


def read_report(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def _configure_logging(logfile: Optional[Path]) -> list[logging.Handler]:
    level = LOG_LEVELS.get(os.environ.get("DROPLETFEM_LOG", "info").strip().lower(), logging.INFO)
    log.setLevel(level)
    log.propagate = False
    handlers: list[logging.Handler] = []
    fmt = logging.Formatter("%(levelname)s %(message)s")
    if logfile is not None:
        fh = logging.FileHandler(logfile, mode="w")
        fh.setFormatter(fmt)
        handlers.append(fh)
    err = logging.StreamHandler(sys.stderr)
    err.setFormatter(fmt)
    err.setLevel(max(level, logging.WARNING))
    handlers.append(err)
    for h in handlers:
        log.addHandler(h)
    return handlers


def _release_logging(handlers: list[logging.Handler]) -> None:
    for h in handlers:
        log.removeHandler(h)
        h.close()


def resolve_settings(args: argparse.Namespace) -> Settings:
    values: dict[str, object] = {}
    if args.config is not None:
        values = load_file(args.config)
    # flags override config keys
    if args.strategy is not None:
        values["amr_strategy"] = STRATEGY_ALIASES[args.strategy]
    if args.lam is not None:
        values["lam"] = args.lam
    return build_settings(values, preset=args.seed_preset)


def cmd_run(args: argparse.Namespace) -> int:
    try:
        settings = resolve_settings(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "effective.cfg").write_text(dump_settings(settings))
    handlers = _configure_logging(out / "run.log")
    h_in = settings.fluid.h_in

    def on_snapshot(step, state, mesh, err):
        write_snapshot(out / f"snap_{step:06d}.csv", state, mesh, err, h_in)

    try:
        log.info("strategy=%s param=%s n_elements=%d", settings.run.amr_strategy,
                 settings.run.marking_param, settings.run.n_elements_init)
        report = run(settings.run, settings.fluid, on_snapshot=on_snapshot)
        for step, t, dt, cause in report.dt_events:
            log.debug("dt step=%d t=%.9g dt=%.6g %s", step, t, dt, cause)
        (out / "report.txt").write_text(format_report(report))
        log.info("finished: %s", report.status)
    finally:
        _release_logging(handlers)
    return 2 if report.failed else 0


def cmd_mms(args: argparse.Namespace) -> int:
    from .mms import convergence_study, format_table

    try:
        rows = convergence_study(args.levels, args.base)
    except (NonConvergence, SingularMatrix) as exc:
        print(f"Newton solve failed: {exc}", file=sys.stderr)
        return 2
    print(format_table(rows))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dropletfem", description="Adaptive 1D droplet pinch-off simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a droplet until pinch-off")
    r.add_argument("--config", help="key = value configuration file")
    r.add_argument("--out", default="dropletfem_out", help="output directory (default: %(default)s)")
    r.add_argument("--strategy", choices=("none", "max", "doerfler"), help="refinement strategy")
    r.add_argument("--lambda", dest="lam", type=float, help="marking parameter (lambda or theta)")
    r.add_argument("--seed-preset", dest="seed_preset", help="named parameter preset, e.g. glycerol85")
    r.set_defaults(func=cmd_run)

    m = sub.add_parser("mms", help="manufactured-solution convergence table")
    m.add_argument("--levels", type=int, default=4, help="number of mesh levels (default: %(default)s)")
    m.add_argument("--base", type=int, default=16, help="elements on the coarsest level (default: %(default)s)")
    m.set_defaults(func=cmd_mms)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "mms" and args.levels < 1:
        parser.error("--levels must be >= 1")
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
