"""Command-line front end.

Exit codes: 0 success, 1 negative analysis result or non-convergence,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from typing import Iterator

import numpy as np

from .analysis import EmptyInterval, admissible_parameter_interval, check_chen_wang, check_hypotheses
from .bounds import BoundsUnderflow, HypothesisViolated, build_rectangle
from .config import ConfigError, SystemConfig
from .dde import NonFiniteState, integrate, write_csv
from .degree import (
    AveragedMap,
    NoConvergence,
    RefinementExceeded,
    ZeroOnBoundary,
    brouwer_degree,
    find_root_g,
    miranda_check,
)
from .model import PoleError
from .periodic import NotConverged, find_periodic, periodicity_residual, verify_in_rectangle

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class Records:
    """Line-delimited JSON records, written next to the human-readable text."""

    def __init__(self, path: str | None):
        self._fh = open(path, "w") if path else None

    def emit(self, record: str, /, **fields) -> None:
        if self._fh is not None:
            self._fh.write(json.dumps({"record": record, **fields}, default=_jsonable) + "\n")

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"cannot serialize {type(v)}")


def _fmt(x: float) -> str:
    return f"{x:.15g}"


@contextmanager
def _output(path: str | None) -> Iterator:
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _parse_assignment(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep:
        raise UsageError(f"expected NAME=VALUE, got {text!r}")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise UsageError(f"not a number in {text!r}") from None


def parse_sweep(text: str) -> tuple[str, list[float]]:
    """``name=lo:hi:n`` (inclusive linspace) or ``name=v1,v2,...``."""
    name, sep, spec = text.partition("=")
    if not sep:
        raise UsageError(f"expected NAME=lo:hi:n or NAME=v1,v2, got {text!r}")
    try:
        if ":" in spec:
            lo, hi, n = spec.split(":")
            values = [float(v) for v in np.linspace(float(lo), float(hi), int(n))]
        elif spec.strip() == "":
            values = []
        else:
            values = [float(v) for v in spec.split(",")]
    except ValueError:
        raise UsageError(f"malformed sweep specification {text!r}") from None
    return name.strip(), values


def _load(args) -> SystemConfig:
    cfg = SystemConfig.load(args.config)
    overrides = dict(_parse_assignment(a) for a in (args.set or []))
    if overrides:
        cfg = cfg.with_scalars(**overrides)
    return cfg


def _print_condition(c, out=None) -> None:
    status = "pass" if c.passed else "FAIL"
    flag = "  (marginal)" if c.marginal else ""
    print(
        f"  {c.name:<10} lhs={_fmt(c.lhs):<22} rhs={_fmt(c.rhs):<22} "
        f"margin={_fmt(c.margin):<22} {status}{flag}",
        file=out,
    )


# -- commands ----------------------------------------------------------


def cmd_check(args, rec: Records) -> int:
    cfg = _load(args)
    sys_ = cfg.build()
    report = check_hypotheses(sys_)
    print("Hypotheses H1-H4:")
    for c in report.conditions:
        _print_condition(c)
        rec.emit("hypothesis", **c.as_record())
    print(f"  all pass: {report.all_pass}")
    rec.emit("hypotheses_summary", all_pass=report.all_pass)

    if sys_.n_births == (1, 1):
        cw = check_chen_wang(sys_)
        print("Chen-Wang integral conditions:")
        print("  " + "  ".join(f"{k}={_fmt(v)}" for k, v in cw.integrals().items()))
        rec.emit("chen_wang_integrals", **cw.integrals())
        for c in cw.conditions:
            _print_condition(c)
            rec.emit("chen_wang", **c.as_record())
        print(f"  all pass: {cw.all_pass}")
        rec.emit("chen_wang_summary", all_pass=cw.all_pass)

    if cfg.scalars:
        print("Admissible parameter intervals (others held fixed):")
    for name in cfg.scalars:
        try:
            lo, hi = admissible_parameter_interval(cfg.template(name))
            print(f"  {name}: ({_fmt(lo)}, {_fmt(hi)})")
            rec.emit("interval", name=name, lo=lo, hi=hi, empty=False)
        except EmptyInterval as exc:
            print(f"  {name}: empty ({exc})")
            rec.emit("interval", name=name, lo=None, hi=None, empty=True, reason=str(exc))
        except ValueError as exc:
            print(f"  {name}: not applicable ({exc})")
    return EXIT_OK if report.all_pass else EXIT_NEGATIVE


def cmd_bounds(args, rec: Records) -> int:
    cfg = _load(args)
    try:
        b = build_rectangle(cfg.build())
    except (HypothesisViolated, BoundsUnderflow) as exc:
        print(f"no bounds rectangle: {exc}")
        rec.emit("error", kind=type(exc).__name__, detail=str(exc))
        return EXIT_NEGATIVE
    print("A priori bounds:")
    for k, v in b.as_record().items():
        print(f"  {k:<16} {_fmt(v)}")
    rec.emit("bounds", **b.as_record())
    return EXIT_OK


def cmd_degree(args, rec: Records) -> int:
    cfg = _load(args)
    sys_ = cfg.build()
    try:
        b = build_rectangle(sys_)
    except (HypothesisViolated, BoundsUnderflow) as exc:
        print(f"no bounds rectangle: {exc}")
        rec.emit("error", kind=type(exc).__name__, detail=str(exc))
        return EXIT_NEGATIVE
    g = AveragedMap(sys_)
    cert = miranda_check(g, b.rect, args.samples)
    print(f"Rectangle: ({_fmt(b.rect.lo)}, {_fmt(b.rect.hi)})^2")
    print(
        f"Miranda sign pattern: {'holds' if cert.pattern_holds else 'FAILS'} "
        f"({cert.samples_per_edge} samples/edge, min |g| on edges {cert.min_abs_value_on_edges:.6e})"
    )
    rec.emit("miranda", **cert.as_record())
    if not cert.pattern_holds:
        print(f"  failed edges: {', '.join(cert.failed_edges)}")
        return EXIT_NEGATIVE
    try:
        deg = brouwer_degree(g.normalized, b.rect, args.samples)
    except (ZeroOnBoundary, RefinementExceeded) as exc:
        print(f"degree computation failed: {exc}")
        rec.emit("error", kind=type(exc).__name__, detail=str(exc))
        return EXIT_NEGATIVE
    print(f"Brouwer degree of g on the rectangle: {deg}")
    rec.emit("degree", degree=deg)
    try:
        root = find_root_g(g, b.rect)
    except NoConvergence as exc:
        print(f"root search did not converge: {exc}")
        rec.emit("error", kind="NoConvergence", detail=str(exc))
        return EXIT_NEGATIVE if deg == 0 else EXIT_OK
    residual = max(abs(v) for v in g(*root))
    print(f"Zero of g: ({_fmt(root[0])}, {_fmt(root[1])})  |g| = {residual:.3e}")
    rec.emit("root", x1=root[0], x2=root[1], residual=residual)
    return EXIT_OK if deg != 0 else EXIT_NEGATIVE


def _step(args, cfg, sys_) -> float:
    h = args.step if args.step is not None else cfg.simulation.step
    if h is None:
        h = sys_.omega / 1024
    if not 0 < h < sys_.min_delay:
        raise UsageError(f"step {h} must satisfy 0 < h < smallest delay {sys_.min_delay}")
    return h


def cmd_simulate(args, rec: Records) -> int:
    cfg = _load(args)
    sys_ = cfg.build()
    h = _step(args, cfg, sys_)
    t_final = args.t_final if args.t_final is not None else cfg.simulation.t_final
    if t_final is None:
        t_final = 20 * sys_.omega
    if not t_final > 0:
        raise UsageError("--t-final must be positive")
    history = cfg.simulation.history_segment(sys_)
    try:
        traj = integrate(sys_, history, t_final, h)
    except (PoleError, NonFiniteState) as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        rec.emit("error", kind=type(exc).__name__, detail=str(exc))
        return EXIT_NEGATIVE
    with _output(args.out) as fh:
        write_csv(fh, traj.t, traj.x, ["x1", "x2"])
    summary = {"t_final": t_final, "step": h, "nodes": len(traj.t)}
    if t_final >= 2 * sys_.omega:
        summary["residual"] = periodicity_residual(traj, sys_.omega, t_final)
    msg = f"simulated to t={_fmt(t_final)} with h={_fmt(h)} ({len(traj.t)} nodes)"
    if "residual" in summary:
        msg += f"; final periodicity residual {summary['residual']:.6e}"
    print(msg, file=sys.stderr if args.out in (None, "-") else sys.stdout)
    rec.emit("simulation", **summary)
    return EXIT_OK


def cmd_find_periodic(args, rec: Records) -> int:
    cfg = _load(args)
    sys_ = cfg.build()
    h = _step(args, cfg, sys_)
    tol = args.tol if args.tol is not None else cfg.simulation.tol
    max_periods = args.max_periods or cfg.simulation.max_periods
    try:
        orbit = find_periodic(
            sys_,
            cfg.simulation.history_segment(sys_),
            max_periods=max_periods,
            tol=tol,
            h=h,
            defect_tol=cfg.simulation.defect_tol,
        )
    except NotConverged as exc:
        print(f"not converged: {exc}")
        print("residual trace: " + " ".join(f"{r:.3e}" for r in exc.trace))
        rec.emit("error", kind="NotConverged", residual=exc.residual, trace=exc.trace)
        return EXIT_NEGATIVE
    except (PoleError, NonFiniteState) as exc:
        print(f"integration failed: {exc}")
        return EXIT_NEGATIVE
    if args.out:
        orbit.to_csv(args.out)
    summary = orbit.summary()
    print("Periodic orbit:")
    for k, v in summary.items():
        print(f"  {k:<10} {_fmt(v)}")
    try:
        rect = build_rectangle(sys_).rect
        inside = verify_in_rectangle(orbit, rect)
        print(f"  inside bounds rectangle ({_fmt(rect.lo)}, {_fmt(rect.hi)})^2: {inside}")
        summary["inside_rectangle"] = inside
    except (HypothesisViolated, BoundsUnderflow) as exc:
        print(f"  containment not checked: {exc}")
        summary["inside_rectangle"] = None
    rec.emit("orbit", **summary)
    return EXIT_OK


def sweep_point(cfg_dict: dict, assignment: dict[str, float], orbits: bool) -> dict:
    """Classify one grid point; a top-level function so it can run in worker processes."""
    cfg = SystemConfig.from_dict(cfg_dict).with_scalars(**assignment)
    sys_ = cfg.build()
    row = dict(assignment)
    row["h_pass"] = check_hypotheses(sys_).all_pass
    row["chen_wang_pass"] = (
        check_chen_wang(sys_).all_pass if sys_.n_births == (1, 1) else None
    )
    if orbits:
        try:
            find_periodic(
                sys_,
                cfg.simulation.history_segment(sys_),
                max_periods=cfg.simulation.max_periods,
                tol=cfg.simulation.tol,
                h=cfg.simulation.step,
            )
            row["orbit_found"] = True
        except (NotConverged, PoleError, NonFiniteState):
            row["orbit_found"] = False
    return row


def run_sweep(cfg: SystemConfig, grids: list[tuple[str, list[float]]], orbits=False, jobs=1) -> list[dict]:
    for name, _ in grids:
        if name not in cfg.scalars:
            raise UsageError(f"unknown scalar {name!r}; declared: {', '.join(cfg.scalars) or 'none'}")
    names = [n for n, _ in grids]
    points = [dict(zip(names, combo)) for combo in itertools.product(*(v for _, v in grids))]
    if not grids:
        points = []
    cfg_dict = cfg.to_dict()
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(sweep_point, [cfg_dict] * len(points), points, [orbits] * len(points)))
    return [sweep_point(cfg_dict, p, orbits) for p in points]


def cmd_sweep(args, rec: Records) -> int:
    cfg = _load(args)
    grids = [parse_sweep(s) for s in (args.sweep or [])]
    rows = run_sweep(cfg, grids, orbits=args.orbits, jobs=args.jobs)
    columns = [n for n, _ in grids] + ["h_pass", "chen_wang_pass"] + (["orbit_found"] if args.orbits else [])
    with _output(args.out) as fh:
        w = csv.DictWriter(fh, fieldnames=columns)
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    for row in rows:
        rec.emit("sweep_point", **row)
    n_h = sum(r["h_pass"] for r in rows)
    n_cw = sum(bool(r["chen_wang_pass"]) for r in rows)
    print(
        f"{len(rows)} grid points: {n_h} satisfy H1-H4, {n_cw} satisfy the Chen-Wang conditions",
        file=sys.stderr if args.out in (None, "-") else sys.stdout,
    )
    return EXIT_OK


# -- argument parsing ----------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nicholson",
        description="Periodic solutions of a two-patch Nicholson system with saturating mortality.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="YAML system configuration")
    common.add_argument(
        "--set", action="append", metavar="NAME=VALUE", help="override a declared scalar (repeatable)"
    )
    common.add_argument("--records", metavar="PATH", help="also write JSON-lines records to PATH")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("check", parents=[common], help="evaluate H1-H4, Chen-Wang conditions and intervals")
    sub.add_parser("bounds", parents=[common], help="construct the a priori bound rectangle")
    d = sub.add_parser("degree", parents=[common], help="Miranda certificate, degree and zero of g")
    d.add_argument("--samples", type=int, default=256, help="samples per rectangle edge")

    s = sub.add_parser("simulate", parents=[common], help="integrate and write a trajectory CSV")
    s.add_argument("--t-final", type=float)
    s.add_argument("--step", type=float)
    s.add_argument("--out", help="CSV path (default stdout)")

    f = sub.add_parser("find-periodic", parents=[common], help="simulate until periodic; write one period")
    f.add_argument("--tol", type=float)
    f.add_argument("--step", type=float)
    f.add_argument("--max-periods", type=int)
    f.add_argument("--out", help="orbit CSV path")

    w = sub.add_parser("sweep", parents=[common], help="classify a grid of scalar values")
    w.add_argument(
        "--sweep", action="append", metavar="NAME=lo:hi:n", help="grid for one scalar; NAME=v1,v2 also accepted"
    )
    w.add_argument("--orbits", action="store_true", help="also search for a periodic orbit at each point")
    w.add_argument("--jobs", type=int, default=1, help="worker processes")
    w.add_argument("--out", help="CSV path (default stdout)")
    return p


COMMANDS = {
    "check": cmd_check,
    "bounds": cmd_bounds,
    "degree": cmd_degree,
    "simulate": cmd_simulate,
    "find-periodic": cmd_find_periodic,
    "sweep": cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    rec = Records(args.records)
    try:
        return COMMANDS[args.command](args, rec)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        rec.close()


if __name__ == "__main__":
    sys.exit(main())
