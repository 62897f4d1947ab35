"""Command-line front end: ``bosonzeno <mode> [--config PATH] [--out DIR]``."""
import argparse
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from itertools import product

import numpy as np

from . import discrete_zeno, exact, meanfield, readout, tmin
from .config import MODES, default_config, parse_config
from .errors import BosonZenoError, ConfigError
from .frame import SweepSchedule
from .meanfield import RelaxationConfig
from .plot import line_plot
from .results import ResultTable, config_hash


def _tag(value):
    return format(value, "g").replace("+", "")


def _pool_map(fn, items, workers):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _schedule(cfg, T=None):
    return SweepSchedule(cfg.epsilon0, cfg.delta, cfg.T if T is None else T)


def _trajectory_rows(rec, with_purity=False):
    rows = []
    for i in range(len(rec)):
        row = [rec.t[i], rec.jz[i], rec.jplus[i].real, rec.jplus[i].imag, rec.p_a[i]]
        if with_purity:
            row.append(rec.extra["purity"][i])
        rows.append(row)
    return rows


class _TrajectoryJob:
    """Picklable per-grid-point job for the worker pool."""

    def __init__(self, cfg, use_exact):
        self.cfg, self.use_exact = cfg, use_exact

    def __call__(self, point):
        N, gx, gz = point
        cfg = self.cfg
        relax = RelaxationConfig(gx, gz)
        if self.use_exact:
            return exact.trajectory(_schedule(cfg), N, relax, n_samples=cfg.samples,
                                    rtol=cfg.rtol, atol=cfg.atol)
        return meanfield.integrate(_schedule(cfg), N, relax, n_samples=cfg.samples,
                                   rtol=cfg.rtol, atol=cfg.atol, closure=cfg.closure)


def _run_trajectories(cfg, workers, use_exact):
    if use_exact:
        for N in cfg.N:
            # fail fast, before spending time on smaller grid points
            exact.build_collective_operators(N)
    points = list(product(cfg.N, cfg.gamma_x, cfg.gamma_z))
    records = _pool_map(_TrajectoryJob(cfg, use_exact), points, workers)
    files, series = [], []
    for (N, gx, gz), rec in zip(points, records):
        name = f"{cfg.mode}_N{N}_gx{_tag(gx)}_gz{_tag(gz)}.csv"
        meta = {"N": N, "gamma_x": gx, "gamma_z": gz}
        files.append((name, ResultTable(cfg.mode, _trajectory_rows(rec, use_exact), meta)))
        series.append((f"N={N} gx={_tag(gx)} gz={_tag(gz)}", rec.t, rec.p_a))
    svg = line_plot(series, "t", "p_a", title=f"{cfg.mode}: per-boson probability in state a")
    return files, [(f"{cfg.mode}.svg", svg)], []


def _run_discrete(cfg, workers):
    files, series = [], []
    schedule = _schedule(cfg)
    for N in cfg.N:
        rows = discrete_zeno.convergence_table(schedule, N, cfg.n)
        files.append((f"discrete_N{N}.csv", ResultTable("discrete", rows, {"N": N})))
        series.append((f"N={N}", [r[0] for r in rows], [r[1] for r in rows]))
    svg = line_plot(series, "n", "success probability", title="discrete projective measurements",
                    logx=True, markers=True)
    return files, [("discrete.svg", svg)], []


def _run_readout(cfg, workers):
    rows = []
    for N in cfg.N:
        p = readout.required_p(N, cfg.target_pe)
        rows.append([N, p, readout.failure_probability(p, N)])
    svg = line_plot([("required p", [r[0] for r in rows], [r[1] for r in rows])], "N", "required p",
                    title=f"readout requirement for P_e <= {cfg.target_pe:g}", logx=True, markers=True)
    return [("readout.csv", ResultTable("readout", rows, {}))], [("readout.svg", svg)], []


class _TminJob:
    def __init__(self, cfg):
        self.cfg = cfg

    def __call__(self, N):
        cfg = self.cfg
        return tmin.solve_tmin(N, RelaxationConfig(cfg.gamma_x[0], cfg.gamma_z[0]),
                               tmin.default_template(cfg.epsilon0, cfg.delta), cfg.target_pe,
                               T_lo=cfg.T_lo, T_hi=cfg.T_hi, rel_precision=cfg.rel_precision,
                               closure=cfg.closure, rtol=cfg.rtol, atol=cfg.atol)


def _run_tmin(cfg, workers):
    if len(cfg.gamma_x) != 1 or len(cfg.gamma_z) != 1:
        raise ConfigError(["relaxation: tmin mode takes a single gamma_x and gamma_z"])
    entries = _pool_map(_TminJob(cfg), cfg.N, workers)
    result = tmin.TminResult(entries, target_pe=cfg.target_pe)
    rows = [[e.N, e.T_min, e.p_final, e.certificate_lo, e.certificate_hi, e.required_p]
            for e in entries]
    summary = []
    meta = {}
    if len(entries) >= 4:
        slope, residual = tmin.fit_exponent(result)
        meta = {"slope": slope, "slope_residual": residual, "fit_N": list(result.fit_N)}
        summary.append(f"slope = {slope:.6f} +/- {residual:.3g} (fit over N = {list(result.fit_N)})")
    svg = line_plot([("T_min", result.N, result.T_min)], "N", "T_min", title="minimum sweep time",
                    logx=True, logy=True, markers=True)
    return [("tmin.csv", ResultTable("tmin", rows, meta))], [("tmin.svg", svg)], summary


class _SweepJob:
    def __init__(self, cfg):
        self.cfg = cfg

    def __call__(self, point):
        N, gx, gz = point
        cfg = self.cfg
        return meanfield.final_probability(_schedule(cfg), N, RelaxationConfig(gx, gz),
                                           rtol=cfg.rtol, atol=cfg.atol, closure=cfg.closure)


def _run_sweep(cfg, workers):
    points = list(product(cfg.N, cfg.gamma_x, cfg.gamma_z))
    finals = _pool_map(_SweepJob(cfg), points, workers)
    rows = [[N, gx, gz, p, readout.failure_probability(p, N)] for (N, gx, gz), p in zip(points, finals)]
    series = []
    for N in cfg.N:
        for gz in cfg.gamma_z:
            sel = [r for r in rows if r[0] == N and r[2] == gz]
            series.append((f"N={N} gz={_tag(gz)}", [r[1] for r in sel], [r[3] for r in sel]))
    logx = all(g > 0 for g in cfg.gamma_x)
    svg = line_plot(series, "gamma_x", "final p_a", title="final probability vs relaxation",
                    logx=logx, markers=True)
    return [("sweep.csv", ResultTable("sweep", rows, {}))], [("sweep.svg", svg)], []


_RUNNERS = {
    "discrete": _run_discrete,
    "meanfield": lambda cfg, w: _run_trajectories(cfg, w, use_exact=False),
    "exact": lambda cfg, w: _run_trajectories(cfg, w, use_exact=True),
    "readout": _run_readout,
    "tmin": _run_tmin,
    "sweep": _run_sweep,
}


def run(cfg, out_dir, workers=None, seedless=False):
    """Execute ``cfg`` and write its CSV/SVG outputs to ``out_dir``.

    Returns ``(paths, summary_lines)``. With ``seedless`` the global random
    generators are checked to be untouched by the run.
    """
    workers = cfg.workers if workers is None else workers
    if seedless:
        np_state, py_state = np.random.get_state(), random.getstate()
    files, svgs, summary = _RUNNERS[cfg.mode](cfg, workers)
    if seedless:
        after = np.random.get_state()
        if random.getstate() != py_state or any(
                not np.array_equal(a, b) if isinstance(a, np.ndarray) else a != b
                for a, b in zip(np_state, after)):
            raise BosonZenoError("a random number generator was consumed during a --seedless run")

    os.makedirs(out_dir, exist_ok=True)
    # workers is an execution detail, not part of what was computed
    echo = replace(cfg, workers=1).as_dict()
    digest = config_hash(echo)
    paths = []
    for name, table in files:
        table.metadata = {**table.metadata, "config": echo, "config_sha256": digest}
        paths.append(table.write(os.path.join(out_dir, name)))
    for name, svg in svgs:
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(svg)
        paths.append(path)
    if summary:
        path = os.path.join(out_dir, f"{cfg.mode}_summary.txt")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(summary) + "\n")
        paths.append(path)
    return paths, summary


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bosonzeno",
        description="Zeno-stabilised Landau-Zener sweeps of N two-mode bosons.")
    sub = parser.add_subparsers(dest="mode", required=True)
    helps = {
        "discrete": "projective-measurement success probability vs number of measurements",
        "meanfield": "mean-field trajectories, one CSV per (N, gamma_x, gamma_z)",
        "exact": "exact Dicke-space Lindblad trajectories (N <= 64)",
        "readout": "required per-boson probability for a target failure rate",
        "tmin": "minimum sweep time per N and the fitted speedup exponent",
        "sweep": "final probability over an (N, gamma_x, gamma_z) grid",
    }
    for mode in MODES:
        p = sub.add_parser(mode, help=helps[mode])
        p.add_argument("--config", help="INI configuration file")
        p.add_argument("--out", default=".", help="output directory (default: current)")
        p.add_argument("--workers", type=int, help="worker processes for grid points")
        p.add_argument("--seedless", action="store_true",
                       help="fail if any random number generator is touched")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError([f"cannot read config: {exc}"]) from exc
            cfg = parse_config(text, mode=args.mode)
        else:
            cfg = default_config(args.mode)
        if args.workers is not None and args.workers < 1:
            raise ConfigError(["--workers must be >= 1"])
        paths, summary = run(cfg, args.out, workers=args.workers, seedless=args.seedless)
    except BosonZenoError as exc:
        print(f"bosonzeno {args.mode}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    for line in summary:
        print(line)
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
