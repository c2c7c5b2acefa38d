"""Command-line interface: ``verify``, ``spectrum`` and ``potential`` subcommands.

All output is CSV. Exit codes: 0 success, 1 a check failed (or a grid point
could not be evaluated), 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .coefficients import (couplings_from_sigma, doublewell_coefficients, massless_c2, potential_eval)
from .errors import ProfileSyntaxError
from .profiles import TimeProfile, eval_jet, parse_profile, polynomial_profile
from .spectra import SPECTRUM_COLUMNS, write_csv
from .verify import chain_spectrum, verify_all, write_reports_csv

SUITES = ("constraint", "bch", "dyson", "gauge", "spectral")
WHICH_SPECTRUM = {"h": "h", "hhat": "hhat", "htilde": "htilde", "energy-op": "energy"}
WHICH_POTENTIAL = ("anharmonic-z", "doublewell-y", "both")
CONFIG_KEYS = {"profile", "profile.poly", "poly", "c1", "c2", "t", "t-grid", "n", "omega", "levels",
               "tol", "out", "which", "range", "suites", "massless"}


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    profile: TimeProfile
    c1: float = 0.0
    c2: float = 0.0
    times: list = field(default_factory=list)
    n: int = 256
    omega: Optional[float] = None
    levels: int = 5
    tol: float = 1e-5
    out: Optional[str] = None
    which: Optional[str] = None
    coords: Optional[np.ndarray] = None
    suites: tuple = SUITES


def parse_range(text: str, what: str = "grid") -> list:
    """``start:stop:step`` with inclusive stop."""
    try:
        start, stop, step = (float(x) for x in str(text).split(":"))
    except ValueError:
        raise ConfigError(f"{what} must be start:stop:step, got {text!r}") from None
    if not step > 0 or stop < start or not all(map(math.isfinite, (start, stop, step))):
        raise ConfigError(f"empty {what} {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def read_config(path: str) -> dict:
    """``key = value`` lines; values are JSON literals or bare strings; ``#`` starts a comment."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    for num, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{num}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-") if key != "profile.poly" else key
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{num}: unknown key {key!r}")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; flags take precedence")
    common.add_argument("--profile", help='width profile sigma(t), e.g. "cosh(t)"')
    common.add_argument("--poly", help="quadratic profile k0,k1,k2")
    common.add_argument("--massless", action="store_true", default=None,
                        help="set c2 so that the mass term vanishes (quadratic profiles)")
    common.add_argument("--c1", type=float)
    common.add_argument("--c2", type=float)
    common.add_argument("--t", type=float, help="single time point")
    common.add_argument("--t-grid", dest="t_grid", help="start:stop:step (inclusive)")
    common.add_argument("--n", type=int, help="basis size (convergence compares N and 2N)")
    common.add_argument("--omega", type=float, help="basis scale (default: chosen per operator)")
    common.add_argument("--levels", type=int, help="number of levels")
    common.add_argument("--tol", type=float, help="spectral tolerance")
    common.add_argument("--out", help="output CSV path (default stdout)")

    parser = argparse.ArgumentParser(prog="dysonchain", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", parents=[common], help="run verification suites")
    v.add_argument("--suites", help="comma-separated subset of " + ",".join(SUITES))
    s = sub.add_parser("spectrum", parents=[common], help="converged levels over a time grid")
    s.add_argument("--which", choices=sorted(WHICH_SPECTRUM))
    p = sub.add_parser("potential", parents=[common], help="potential curves over a time grid")
    p.add_argument("--which", choices=WHICH_POTENTIAL)
    p.add_argument("--range", dest="range", help="coordinate range start:stop:step")
    return parser


def _profile(value, poly) -> TimeProfile:
    if poly is not None:
        if isinstance(poly, str):
            poly = [x for x in poly.split(",")]
        try:
            k = [float(x) for x in poly]
        except (TypeError, ValueError):
            raise ConfigError(f"bad polynomial coefficients {poly!r}") from None
        if len(k) != 3:
            raise ConfigError("polynomial profile needs exactly three coefficients")
        return polynomial_profile(*k)
    if value is None:
        raise ConfigError("a profile is required (--profile or --poly)")
    try:
        return parse_profile(str(value))
    except ProfileSyntaxError as exc:
        raise ConfigError(f"bad profile: {exc}") from None


def resolve(args: argparse.Namespace) -> RunConfig:
    cfg = read_config(args.config) if args.config else {}

    def pick(name, key=None, conv=lambda x: x):
        v = getattr(args, name, None)
        if v is None:
            v = cfg.get(key or name.replace("_", "-"))
        if v is None:
            return None
        try:
            return conv(v)
        except (TypeError, ValueError):
            raise ConfigError(f"bad value for {name}: {v!r}") from None

    poly = pick("poly") if args.poly is not None else cfg.get("poly", cfg.get("profile.poly"))
    prof = _profile(pick("profile"), poly)
    run = RunConfig(args.command, prof)
    run.c1 = pick("c1", conv=float) or 0.0
    run.c2 = pick("c2", conv=float) or 0.0
    if pick("massless"):
        if prof.kind != "polynomial":
            raise ConfigError("--massless needs a quadratic profile")
        run.c2 = massless_c2(*prof.payload)
    t, grid = pick("t", conv=float), pick("t_grid", conv=str)
    if t is not None and grid is not None:
        raise ConfigError("give either --t or --t-grid, not both")
    if t is None and grid is None:
        raise ConfigError("a time point (--t) or grid (--t-grid) is required")
    run.times = [t] if t is not None else parse_range(grid, "t-grid")
    run.n = pick("n", conv=int) or run.n
    if not 8 <= run.n <= 512:
        raise ConfigError("--n must lie in [8, 512] (the convergence run uses 2N <= 1024)")
    run.omega = pick("omega", conv=float)
    if run.omega is not None and not run.omega > 0:
        raise ConfigError("--omega must be positive")
    run.levels = pick("levels", conv=int) or run.levels
    if run.levels < 1:
        raise ConfigError("--levels must be >= 1")
    run.tol = pick("tol", conv=float) or run.tol
    run.out = pick("out", conv=str)
    run.which = pick("which", conv=str)
    if args.command == "verify":
        suites = pick("suites", conv=str)
        if suites:
            run.suites = tuple(s.strip() for s in suites.split(","))
            bad = [s for s in run.suites if s not in SUITES]
            if bad:
                raise ConfigError(f"unknown suite(s) {', '.join(bad)}")
    elif args.command == "spectrum":
        run.which = run.which or "htilde"
        if run.which not in WHICH_SPECTRUM:
            raise ConfigError(f"--which must be one of {', '.join(sorted(WHICH_SPECTRUM))}")
    elif args.command == "potential":
        run.which = run.which or "both"
        if run.which not in WHICH_POTENTIAL:
            raise ConfigError(f"--which must be one of {', '.join(WHICH_POTENTIAL)}")
        run.coords = np.array(parse_range(pick("range", conv=str) or "-4:4:0.01", "range"))
    return run


def workers() -> int:
    env = os.environ.get("DYSON_THREADS")
    if env is None:
        return max(1, min(4, os.cpu_count() or 1))
    try:
        n = int(env)
    except ValueError:
        raise ConfigError(f"DYSON_THREADS must be a positive integer, got {env!r}") from None
    if n < 1:
        raise ConfigError("DYSON_THREADS must be >= 1")
    return n


def _map(fn, items):
    with ThreadPoolExecutor(max_workers=workers()) as pool:
        return list(pool.map(fn, items))


def _open_out(path):
    return open(path, "w", encoding="utf-8", newline="") if path else sys.stdout


def cmd_verify(run: RunConfig) -> int:
    per_t = _map(lambda t: verify_all(run.profile, t, run.c1, run.c2, run.n, run.levels, run.tol,
                                      run.omega, run.suites), run.times)
    reports = [r for group in per_t for r in group]
    out = _open_out(run.out)
    try:
        write_reports_csv(out, reports)
    finally:
        if run.out:
            out.close()
    log = sys.stderr if not run.out else sys.stdout
    for r in reports:
        print(r.to_text(), file=log)
    return 0 if all(r.passed for r in reports) else 1


def _spectrum_rows(run: RunConfig, t):
    k = run.levels
    try:
        s = chain_spectrum(WHICH_SPECTRUM[run.which], run.profile, t, run.c1, run.c2, k=k, n=run.n,
                           tol=run.tol, omega=run.omega)
    except Exception as exc:  # reported per row; the run continues
        msg = f"t={t:g}: {type(exc).__name__}: {exc}"
        return [(t, j, math.nan, math.nan, math.nan, False) for j in range(k)], msg
    rows = s.rows(k)
    ok = s.converged_count >= k
    return rows, None if ok else f"t={t:g}: only {s.converged_count} of {k} levels converged"


def cmd_spectrum(run: RunConfig) -> int:
    results = _map(lambda t: _spectrum_rows(run, t), run.times)
    rows = sorted((r for rs, _ in results for r in rs), key=lambda r: (r[0], r[1]))
    out = _open_out(run.out)
    try:
        write_csv(out, SPECTRUM_COLUMNS, rows)
    finally:
        if run.out:
            out.close()
    problems = [m for _, m in results if m]
    for m in problems:
        print(m, file=sys.stderr)
    return 1 if problems else 0


def _potential_rows(run: RunConfig, t):
    rows, msg = [], None
    curves = ("anharmonic-z", "doublewell-y") if run.which == "both" else (run.which,)
    for curve in curves:
        try:
            jet = eval_jet(run.profile, t, 4)
            if curve == "anharmonic-z":
                vals = potential_eval(curve, run.coords, couplings_from_sigma(jet, run.c2))
            else:
                vals = potential_eval(curve, run.coords, doublewell_coefficients(jet, run.c1, run.c2))
        except Exception as exc:
            msg = f"t={t:g} {curve}: {type(exc).__name__}: {exc}"
            continue
        rows.extend((curve, t, y, v) for y, v in zip(run.coords, vals))
    return rows, msg


def cmd_potential(run: RunConfig) -> int:
    results = _map(lambda t: _potential_rows(run, t), run.times)
    order = {"anharmonic-z": 0, "doublewell-y": 1}
    rows = sorted((r for rs, _ in results for r in rs), key=lambda r: (order[r[0]], r[1]))
    out = _open_out(run.out)
    try:
        write_csv(out, ("curve", "t", "coordinate", "V"), rows)
    finally:
        if run.out:
            out.close()
    problems = [m for _, m in results if m]
    for m in problems:
        print(m, file=sys.stderr)
    return 1 if problems else 0


COMMANDS = {"verify": cmd_verify, "spectrum": cmd_spectrum, "potential": cmd_potential}


def _glue_negative_values(argv):
    # "--range -4:4:0.01" would otherwise be read as an unknown option
    out = []
    for tok in argv:
        prev = out[-1] if out else ""
        if prev.startswith("--") and "=" not in prev and prev != "--massless" and re.match(r"-[\d.]", tok):
            out[-1] = f"{prev}={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_glue_negative_values(argv))
    try:
        run = resolve(args)
        workers()
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    return COMMANDS[run.command](run)


if __name__ == "__main__":
    sys.exit(main())
