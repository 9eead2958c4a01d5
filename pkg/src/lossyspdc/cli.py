"""Command-line front end.

    lossyspdc run config.ini --out results/
    lossyspdc validate config.ini
    lossyspdc sweep config.ini --out sweep/ --workers 4

Exit status: 0 on success, 1 for configuration errors, 2 when a numerical
diagnostic fails (window too small, support reaching the window edge,
broken CF structure).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .config import WINDOW_MARGIN, ConfigError, RunConfig, load_config
from .core import cf_to_time, suggest_window
from .homodyne import TraceRow, build_quadratic_form, quadrature_spectrum
from .propagator import SupportError, convergence_check, evolve
from .singlemode import POLE_WINDOW

log = logging.getLogger("lossyspdc")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2

WINDOW_FAIL_MARGIN = 4.0
BYTES_PER_CELL = 16


class NumericalFailure(RuntimeError):
    """A diagnostic check failed; maps to exit status 2."""


def fmt(x: float) -> str:
    """Round-trip decimal text, independent of locale."""
    return format(float(x), ".17g")


def z_label(z: float) -> str:
    return format(float(z), ".6g")


# ---------------------------------------------------------------------------
# writers
# ---------------------------------------------------------------------------

def write_trace(path: Path, trace: list[TraceRow]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TraceRow.FIELDS)
        for row in trace:
            w.writerow([fmt(v) for v in row.as_tuple()])


def write_cf_grid(path: Path, matrix: np.ndarray, t_axis: np.ndarray):
    """Modulus and phase blocks of a time-domain CF.

    Header row: ``part,t``, then the ``t'`` axis.  Each following row is
    ``modulus|phase, t_i, values...`` with the modulus block first.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["part", "t"] + [fmt(t) for t in t_axis])
        for part, block in (("modulus", np.abs(matrix)), ("phase", np.angle(matrix))):
            for t, row in zip(t_axis, block):
                w.writerow([part, fmt(t)] + [fmt(v) for v in row])


def write_modes(out: Path, modes, w_axis: np.ndarray):
    with open(out / "modes.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "eigenvalue", "variance", "conj_variance"])
        for i, md in enumerate(modes):
            w.writerow([i, fmt(md.eigenvalue), fmt(md.variance), fmt(md.conj_variance)])
    for i, md in enumerate(modes):
        with open(out / f"mode_{i}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["omega", "abs_phi", "arg_phi"])
            for om, p in zip(w_axis, md.phi):
                w.writerow([fmt(om), fmt(abs(p)), fmt(np.angle(p))])


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    info: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def lines(self) -> list[str]:
        return ([f"error: {m}" for m in self.errors] + [f"warning: {m}" for m in self.warnings]
                + [f"info: {m}" for m in self.info])


def _memory_limit() -> int | None:
    try:
        return os.sysconf("SC_PAGE_SIZE") * os.sysconf("SC_PHYS_PAGES")
    except (ValueError, OSError, AttributeError):
        return None


def validate_config(cfg: RunConfig) -> ValidationReport:
    """Dry-run checks on the resolved grid, window, step and pole proximity."""
    rep = ValidationReport()
    p = cfg.params
    grid = cfg.grid()
    rep.info.append(f"grid n={grid.n} T={grid.t_window:g} dt={grid.dt:g} dw={grid.dw:g}")

    if grid.dt > p.tau_p / 2.0:
        rep.errors.append(f"dt={grid.dt:g} does not resolve the pump (need dt <= tau_p/2 = {p.tau_p / 2:g})")
    elif grid.dt > p.tau_p / 4.0:
        rep.warnings.append(f"dt={grid.dt:g} is coarse against tau_p={p.tau_p:g}; consider n >= {2 * grid.n}")

    need_fail = suggest_window(p, margin=WINDOW_FAIL_MARGIN)
    need_warn = suggest_window(p, margin=WINDOW_MARGIN)
    if grid.t_window < need_fail:
        rep.errors.append(f"window T={grid.t_window:g} too small: walk-off drift over l_total={p.l_total:g} "
                          f"exceeds the window; use T >= {need_warn:g}")
    elif grid.t_window < need_warn:
        rep.warnings.append(f"window T={grid.t_window:g} below the suggested {need_warn:g}")

    dz = cfg.step()
    finest = min(x for x in (p.l_nl, p.l_a, p.l_ov, p.l_d) if math.isfinite(x))
    if dz > finest / 20.0:
        rep.warnings.append(f"dz={dz:g} is coarse against the shortest length {finest:g}")
    rep.info.append(f"dz={dz:g}, {cfg.plan().n_steps} steps")

    if math.isfinite(p.l_a) and abs(p.l_a / (p.l_nl / 2.0) - 1.0) < POLE_WINDOW:
        rep.warnings.append(f"l_a={p.l_a!r} is within {POLE_WINDOW:g} of l_nl/2: single-mode closed forms "
                            "use the limit form")

    if p.rate_ov == 0.0 and p.rate_d == 0.0:
        rep.warnings.append("no walk-off or dispersion: every time sample is an independent mode, so "
                            "mean_photons grows with n (per-mode quantities do not)")

    mem = 2 * grid.n * grid.n * BYTES_PER_CELL
    rep.info.append(f"memory estimate {mem / 2**20:.1f} MiB for g and f")
    limit = _memory_limit()
    if limit is not None and 4 * mem > limit:
        rep.errors.append(f"memory estimate {mem / 2**20:.0f} MiB (x4 working copies) exceeds physical memory")
    return rep


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def execute(cfg: RunConfig, out: Path) -> dict:
    """Run one configuration and write all artifacts into ``out``.

    Returns the manifest.  Raises :class:`NumericalFailure` when the
    propagation cannot be trusted.
    """
    if cfg.sweep:
        raise ConfigError("config has a [sweep] section; use the sweep command")
    cfg = cfg.resolved()
    rep = validate_config(cfg)
    if not rep.ok:
        raise NumericalFailure("; ".join(rep.errors))
    for msg in rep.warnings:
        log.warning(msg)

    out.mkdir(parents=True, exist_ok=True)
    grid, plan = cfg.grid(), cfg.plan()
    t0 = time.perf_counter()
    try:
        res = evolve(cfg.params, grid, plan)
    except SupportError as exc:
        bigger = suggest_window(cfg.params, margin=2 * WINDOW_MARGIN)
        raise NumericalFailure(f"{exc} (try t_window >= {bigger:g})") from None

    write_trace(out / "trace.csv", res.trace)
    for snap in res.snapshots:
        st = cf_to_time(snap, grid)
        write_cf_grid(out / f"cf_g_{z_label(snap.z)}.csv", st.g, grid.t_axis)
        write_cf_grid(out / f"cf_f_{z_label(snap.z)}.csv", st.f, grid.t_axis)
    if cfg.n_modes > 0:
        try:
            mform = build_quadratic_form(res.final, grid)
        except ValueError as exc:
            raise NumericalFailure(str(exc)) from None
        write_modes(out, quadrature_spectrum(mform, grid, k=cfg.n_modes), grid.w_axis)

    conv = convergence_check(cfg.params, grid, plan).to_dict() if cfg.convergence else None
    manifest = {
        "version": __version__,
        "backend": kernels.BACKEND,
        "config": cfg.to_dict(),
        "grid": grid.to_dict(),
        "plan": {"dz": plan.dz, "n_steps": plan.n_steps, "trace_every": plan.trace_every,
                 "snapshots": [s.z for s in res.snapshots]},
        "diagnostics": {"max_edge_fraction": res.max_edge_fraction, "structure": res.structure},
        "convergence": conv,
        "wall_time": time.perf_counter() - t0,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def _sweep_worker(args):
    point, cfg, out = args
    logging.getLogger("lossyspdc").setLevel(logging.WARNING)
    try:
        execute(cfg, Path(out))
    except NumericalFailure as exc:
        return point, None, str(exc)
    with open(Path(out) / "trace.csv") as fh:
        last = list(csv.reader(fh))[-1]
    return point, last, None


def sweep(cfg: RunConfig, out: Path, workers: int = 1) -> list[tuple]:
    """Run every point of the sweep into ``out/run_<k>`` and write ``sweep_summary.csv``."""
    if not cfg.sweep:
        raise ConfigError("sweep needs a [sweep] section with at least one axis")
    points = cfg.expand()
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(point, c, str(out / f"run_{k:03d}")) for k, (point, c) in enumerate(points)]
    if workers <= 1:
        results = [_sweep_worker(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_worker, jobs))

    axes = list(cfg.sweep)
    with open(out / "sweep_summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run"] + axes + ["status"] + list(TraceRow.FIELDS))
        for k, (point, last, err) in enumerate(results):
            vals = [fmt(point[a]) for a in axes]
            if last is None:
                w.writerow([f"run_{k:03d}"] + vals + ["failed"] + [""] * len(TraceRow.FIELDS))
            else:
                w.writerow([f"run_{k:03d}"] + vals + ["ok"] + last)
    return results


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lossyspdc",
        description="Propagate SPDC correlation functions through a lossy, dispersive waveguide.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "propagate one configuration"),
                        ("validate", "check a configuration without running it"),
                        ("sweep", "run the cartesian product of the [sweep] axes")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config", help="INI config file or manifest.json of a previous run")
        sp.add_argument("--out", help="output directory (overrides [output] directory)")
        sp.add_argument("--workers", type=int, default=1, help="parallel runs in a sweep (default 1)")
        sp.add_argument("--seedless", action="store_true",
                        help="accepted for compatibility; the method has no random numbers, so every "
                             "run is deterministic regardless")
        sp.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = load_config(args.config)
        out = Path(args.out or cfg.directory)
        if args.command == "validate":
            bad = False
            for point, c in cfg.expand():
                rep = validate_config(c.resolved())
                prefix = f"[{', '.join(f'{k}={v:g}' for k, v in point.items())}] " if point else ""
                for line in rep.lines():
                    print(prefix + line)
                bad |= not rep.ok
            print("FAIL" if bad else "OK")
            return EXIT_NUMERIC if bad else EXIT_OK
        if args.command == "run":
            manifest = execute(cfg, out)
            log.info("wrote %s (%.1f s)", out, manifest["wall_time"])
            return EXIT_OK
        results = sweep(cfg, out, workers=max(1, args.workers))
        failed = [r for r in results if r[2] is not None]
        for point, _, err in failed:
            log.error("%s: %s", point, err)
        log.info("wrote %d runs to %s", len(results), out)
        return EXIT_NUMERIC if failed else EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
