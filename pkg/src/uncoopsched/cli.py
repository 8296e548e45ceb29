"""Command line entry point: ``bounds``, ``simulate``, ``region`` and ``assign``.

Every output file starts with one ``#`` line carrying the SHA-256 of the
resolved experiment (subcommand, parameters, full config) and the seed. The
rest of the file is a pure function of that experiment, so re-running the
same command reproduces it byte for byte. Wall-clock timings go to stderr.

Exit codes: 0 success, 1 I/O error, 2 invalid config or arguments, 3 size guard.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .assignment import AssignmentSizeError, load_problem, problem_to_dict, solve_exact, solve_greedy
from .bounds import bounds_result
from .core import ConfigError, check_config, config_to_dict, load_config
from .policies import PolicyKind
from .simulator import run_simulation
from .stability import parse_axis, sweep_region

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_SIZE = 0, 1, 2, 3


class UsageError(ValueError):
    pass


def fmt(x) -> str:
    """Decimal text with 12 significant digits."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".12g")


@dataclass
class ExperimentSpec:
    subcommand: str
    params: dict
    output: str
    seed: Optional[int] = None
    jobs: int = 1
    config: Optional[dict] = None

    def digest(self) -> str:
        record = {"subcommand": self.subcommand, "params": self.params,
                  "config": self.config, "seed": self.seed}
        return hashlib.sha256(json.dumps(record, sort_keys=True, separators=(",", ":")).encode()).hexdigest()

    def header(self) -> str:
        return (f"# uncoopsched {__version__} {self.subcommand} "
                f"config_sha256={self.digest()} seed={self.seed if self.seed is not None else '-'}\n")


def _write(path: str, text: str) -> None:
    Path(path).write_text(text)


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _number(token: str) -> float:
    return float(Fraction(token.strip()))


def parse_grid(spec: str) -> list[float]:
    """``a:b:step`` (inclusive) or a comma list; tokens may be fractions like ``1/3``."""
    spec = spec.strip()
    if not spec:
        return []
    try:
        if ":" in spec:
            a, b, step = (Fraction(t.strip()) for t in spec.split(":"))
            if step <= 0:
                raise UsageError("grid step must be positive")
            values = []
            k = 0
            while a + k * step <= b:
                values.append(float(a + k * step))
                k += 1
        else:
            values = [_number(t) for t in spec.split(",") if t.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad grid {spec!r}: {exc}") from exc
    bad = [v for v in values if not 0.0 <= v <= 1.0]
    if bad:
        raise UsageError(f"grid values outside [0, 1]: {bad}")
    return values


# -- subcommands -------------------------------------------------------------------

BOUNDS_HEADER = ["lambda", "mu_lb", "p_star", "sigma_star", "y_star", "mu_ub"]


def _bounds_row(lam: float) -> list:
    r = bounds_result(lam)
    return [r.lam, r.mu_lb, r.p_star, r.sigma_star, r.y_star, r.mu_ub]


def cmd_bounds(args) -> int:
    grid = parse_grid(args.grid)
    spec = ExperimentSpec("bounds", {"grid": [fmt(g) for g in grid]}, args.out, jobs=args.jobs)
    if args.jobs > 1 and len(grid) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(args.jobs) as pool:
            rows = list(pool.map(_bounds_row, grid))
    else:
        rows = [_bounds_row(lam) for lam in grid]
    _write(args.out, spec.header() + _csv_text(BOUNDS_HEADER, rows))
    return EXIT_OK


def summary_path(out: str) -> Path:
    p = Path(out)
    return p.with_name(p.stem + ".summary.json")


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    horizon = config.horizon if args.horizon is None else args.horizon
    seed = config.seed if args.seed is None else args.seed
    config = type(config)(config.topology, config.adaptive_rates, config.uncoop_rates,
                          config.adaptive_arrival_kind, horizon, seed)
    check_config(config)
    policy = PolicyKind(args.policy)
    spec = ExperimentSpec("simulate", {"policy": policy.value, "sample_every": args.sample_every},
                          args.out, seed, config=config_to_dict(config))
    metrics = run_simulation(config, policy, sample_every=args.sample_every)
    n = config.num_adaptive
    header = ["slot", "sum_backlog"] + [f"backlog_{i + 1}" for i in range(n)] + ["cum_collisions"]
    rows = ([int(s), int(b.sum()), *map(int, b), int(c)]
            for s, b, c in zip(metrics.sample_slots, metrics.sample_backlogs, metrics.sample_collisions))
    _write(args.out, spec.header() + _csv_text(header, rows))
    summary = {"config": spec.config, "policy": policy.value, "seed": seed, **metrics.summary()}
    _write(str(summary_path(args.out)), spec.header() + json.dumps(summary, indent=2) + "\n")
    return EXIT_OK


def cmd_region(args) -> int:
    config = load_config(args.config)
    check_config(config)
    if not 0.0 < args.step <= 0.5:
        raise UsageError("step must lie in (0, 0.5]")
    coords = parse_axis(args.axis)
    spec = ExperimentSpec("region", {"axis": args.axis, "step": args.step, "symmetric": args.symmetric,
                                     "upper": args.upper}, args.out, config=config_to_dict(config))
    rows = sweep_region(config, args.axis, args.step, symmetric=args.symmetric, upper=args.upper,
                        jobs=args.jobs)
    swept_u = sorted({idx for kind, idx in coords if kind == "u"})
    header = [f"rate_{i + 1}" for i in range(config.num_adaptive)]
    header += [f"urate_{j + 1}" for j in swept_u] + ["sufficient", "necessary"]
    out_rows = ([*r.adaptive_rates, *(r.uncoop_rates[j] for j in swept_u), r.sufficient, r.necessary]
                for r in rows)
    _write(args.out, spec.header() + _csv_text(header, out_rows))
    return EXIT_OK


def cmd_assign(args) -> int:
    problem = load_problem(args.problem)
    violations = problem.validate()
    if violations:
        raise ConfigError(violations)
    spec = ExperimentSpec("assign", {"mode": args.mode, "channel_cap": args.channel_cap,
                                     "override": args.override}, args.out,
                          config=problem_to_dict(problem))
    start = time.perf_counter()
    if args.mode == "exact":
        result = solve_exact(problem, channel_cap=args.channel_cap, override=args.override)
    else:
        result = solve_greedy(problem)
    print(f"assign {args.mode}: {result.nodes_explored} nodes explored, "
          f"wall time {time.perf_counter() - start:.3f} s", file=sys.stderr)
    report = {
        "mode": args.mode,
        "feasible": result.feasible,
        "assignment": None if result.placement is None else
        {f"uncoop_user_{k + 1}": ch + 1 for k, ch in enumerate(result.placement)},
        "slack": None if result.verdict is None else float(fmt(result.verdict.slack)),
        "capacities": None if result.verdict is None else [float(fmt(c)) for c in result.verdict.capacities],
        "nodes_explored": result.nodes_explored,
    }
    _write(args.out, spec.header() + json.dumps(report, indent=2) + "\n")
    return EXIT_OK


# -- dispatch ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uncoopsched", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="throughput bounds over a grid of legacy rates")
    p.add_argument("--grid", required=True, help="a:b:step or comma list, e.g. 0.01:0.99:0.01")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("simulate", help="run one policy on a network config")
    p.add_argument("--config", required=True)
    p.add_argument("--policy", required=True, choices=[k.value for k in PolicyKind])
    p.add_argument("--horizon", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--sample-every", type=int, default=1000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("region", help="sweep the sufficient/necessary stability conditions")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", required=True, help="comma list of a<i>/u<j> (1-based), e.g. 1,2,3,4")
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--symmetric", action="store_true", help="one common rate for every axis entry")
    p.add_argument("--upper", type=float, default=1.0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("assign", help="place legacy users on channels")
    p.add_argument("--problem", required=True)
    p.add_argument("--mode", choices=["exact", "greedy"], default="exact")
    p.add_argument("--channel-cap", type=int, default=12)
    p.add_argument("--override", action="store_true", help="lift the exact solver's size guard")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_assign)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"invalid config: {v}", file=sys.stderr)
        return EXIT_CONFIG
    except AssignmentSizeError as exc:
        print(f"size guard: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except (UsageError, KeyError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
