"""Stability-region feasibility as a bipartite transportation problem.

Source -> adaptive user ``i`` (capacity = its arrival rate), user ``i`` ->
channel ``j`` for ``j`` in its access set (capacity 1), channel ``j`` -> sink
(capacity = per-channel throughput bound). The rates are supportable iff the
max flow saturates every source edge. The flow on the user-channel edges is
the ``rho`` split used by the randomized scheduler.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .bounds import lower_bound_throughput, upper_bound_throughput
from .core import NetworkConfig

FEASIBILITY_TOL = 1e-9
_RESIDUAL_EPS = 1e-15


@dataclass(frozen=True)
class FlowNetwork:
    """Directed network on nodes ``0..num_nodes-1`` with ``(u, v, capacity)`` edges."""

    num_nodes: int
    source: int
    sink: int
    edges: tuple[tuple[int, int, float], ...]


def max_flow(network: FlowNetwork) -> tuple[float, list[float]]:
    """Edmonds-Karp: augment along BFS-shortest residual paths.

    Returns the flow value and the flow on each edge, in edge order.
    """
    n = network.num_nodes
    # residual graph as arc lists; arc k and k ^ 1 are reverses of each other
    head: list[int] = []
    cap: list[float] = []
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v, c in network.edges:
        if c < 0:
            raise ValueError("capacities must be non-negative")
        adj[u].append(len(head))
        head.append(v)
        cap.append(float(c))
        adj[v].append(len(head))
        head.append(u)
        cap.append(0.0)
    original = list(cap)
    s, t = network.source, network.sink
    total = 0.0
    while True:
        parent_arc = [-1] * n
        parent_arc[s] = -2
        bfs = deque([s])
        while bfs and parent_arc[t] == -1:
            u = bfs.popleft()
            for a in adj[u]:
                v = head[a]
                if parent_arc[v] == -1 and cap[a] > _RESIDUAL_EPS:
                    parent_arc[v] = a
                    bfs.append(v)
        if parent_arc[t] == -1:
            break
        push = float("inf")
        v = t
        while v != s:
            a = parent_arc[v]
            push = min(push, cap[a])
            v = head[a ^ 1]
        v = t
        while v != s:
            a = parent_arc[v]
            cap[a] -= push
            cap[a ^ 1] += push
            v = head[a ^ 1]
        total += push
    flows = [original[2 * k] - cap[2 * k] for k in range(len(network.edges))]
    return total, flows


def min_cut_bruteforce(network: FlowNetwork) -> float:
    """Smallest s-t cut capacity by enumerating every node bipartition."""
    others = [v for v in range(network.num_nodes) if v not in (network.source, network.sink)]
    best = float("inf")
    for r in range(len(others) + 1):
        for chosen in itertools.combinations(others, r):
            side = set(chosen) | {network.source}
            cut = sum(c for u, v, c in network.edges if u in side and v not in side)
            best = min(best, cut)
    return best


def build_flow_network(adaptive_rates: Sequence[float], access_sets: Sequence[Sequence[int]],
                       capacities: Sequence[float]) -> FlowNetwork:
    n, m = len(adaptive_rates), len(capacities)
    source, sink = 0, n + m + 1
    edges = [(source, 1 + i, float(r)) for i, r in enumerate(adaptive_rates)]
    for i, js in enumerate(access_sets):
        edges.extend((1 + i, 1 + n + j, 1.0) for j in js)
    edges.extend((1 + n + j, sink, float(c)) for j, c in enumerate(capacities))
    return FlowNetwork(n + m + 2, source, sink, tuple(edges))


@dataclass(frozen=True)
class FeasibilityVerdict:
    feasible: bool
    rho: np.ndarray          # (users, channels) flow split; zero outside access sets
    slack: float             # max flow minus total adaptive demand (<= 0)
    capacities: tuple[float, ...]


def check_rates(adaptive_rates: Sequence[float], access_sets: Sequence[Sequence[int]],
                capacities: Sequence[float]) -> FeasibilityVerdict:
    n, m = len(adaptive_rates), len(capacities)
    network = build_flow_network(adaptive_rates, access_sets, capacities)
    value, flows = max_flow(network)
    rho = np.zeros((n, m))
    k = n
    for i, js in enumerate(access_sets):
        for j in js:
            rho[i, j] = flows[k]
            k += 1
    slack = value - float(sum(adaptive_rates))
    return FeasibilityVerdict(abs(slack) <= FEASIBILITY_TOL, rho, slack, tuple(float(c) for c in capacities))


def _check(config: NetworkConfig, bound: Callable[[float], float]) -> FeasibilityVerdict:
    caps = [bound(r) for r in config.uncoop_rates]
    return check_rates(config.adaptive_rates, config.topology.access_sets, caps)


def check_sufficient(config: NetworkConfig) -> FeasibilityVerdict:
    """Rates are stabilizable (randomized policy / LQF) if this is feasible."""
    return _check(config, lower_bound_throughput)


def check_necessary(config: NetworkConfig) -> FeasibilityVerdict:
    """No policy stabilizes the rates if this is infeasible."""
    return _check(config, upper_bound_throughput)


def rho_satisfies(rho: np.ndarray, adaptive_rates: Sequence[float], access_sets: Sequence[Sequence[int]],
                  capacities: Sequence[float], tol: float = FEASIBILITY_TOL) -> bool:
    """Direct substitution of ``rho`` into the per-user and per-channel inequalities."""
    rho = np.asarray(rho)
    for i, js in enumerate(access_sets):
        outside = [j for j in range(rho.shape[1]) if j not in js]
        if np.any(np.abs(rho[i, outside]) > tol):
            return False
        if np.any(rho[i] < -tol) or np.any(rho[i] > 1 + tol):
            return False
        if rho[i, list(js)].sum() < adaptive_rates[i] - tol:
            return False
    return bool(np.all(rho.sum(axis=0) <= np.asarray(capacities) + tol))


# -- sweeps -------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    adaptive_rates: tuple[float, ...]
    uncoop_rates: tuple[float, ...]
    sufficient: bool
    necessary: bool


def parse_axis(axis) -> list[tuple[str, int]]:
    """Axis entries are ``"a<i>"``/``"u<j>"`` (1-based) or bare adaptive user numbers."""
    if isinstance(axis, str):
        axis = [a for a in axis.replace(" ", "").split(",") if a]
    out = []
    for a in axis:
        if isinstance(a, (int, np.integer)):
            out.append(("a", int(a) - 1))
            continue
        a = str(a).lower()
        if a[0] in "au" and a[1:].isdigit():
            out.append((a[0], int(a[1:]) - 1))
        elif a.isdigit():
            out.append(("a", int(a) - 1))
        else:
            raise ValueError(f"bad axis entry {a!r}")
    return out


def rate_grid(step: float, upper: float = 1.0) -> list[float]:
    if not 0.0 < step <= 0.5:
        raise ValueError("step must lie in (0, 0.5]")
    count = int(np.floor(upper / step + 1e-9))
    return [round(k * step, 12) for k in range(count + 1)]


def sweep_region(config: NetworkConfig, axis, step: float, symmetric: bool = False,
                 upper: float = 1.0, jobs: int = 1) -> list[SweepRow]:
    """Evaluate both conditions on a rate grid over the coordinates named in ``axis``.

    With ``symmetric`` every named coordinate takes the same grid value;
    otherwise the full product grid is walked, last coordinate fastest.
    """
    coords = parse_axis(axis)
    for kind, idx in coords:
        limit = config.num_adaptive if kind == "a" else config.num_channels
        if not 0 <= idx < limit:
            raise ValueError(f"axis entry {kind}{idx + 1} out of range")
    grid = rate_grid(step, upper)
    points = [(g,) * len(coords) for g in grid] if symmetric else list(itertools.product(grid, repeat=len(coords)))
    configs = []
    for point in points:
        a = list(config.adaptive_rates)
        u = list(config.uncoop_rates)
        for (kind, idx), value in zip(coords, point):
            (a if kind == "a" else u)[idx] = value
        configs.append(config.with_rates(a, u))
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(jobs) as pool:
            return list(pool.map(_sweep_point, configs, chunksize=16))
    return [_sweep_point(c) for c in configs]


def _sweep_point(config: NetworkConfig) -> SweepRow:
    return SweepRow(config.adaptive_rates, config.uncoop_rates,
                    check_sufficient(config).feasible, check_necessary(config).feasible)


def boundary_brackets(rows: Sequence[SweepRow], flag: str = "sufficient",
                      key: Optional[Callable[[SweepRow], tuple]] = None,
                      value: Optional[Callable[[SweepRow], float]] = None) -> dict:
    """Largest feasible and smallest infeasible value along the last swept coordinate.

    Rows are grouped by ``key`` (default: the legacy rates), and inside each
    group ordered by ``value`` (default: the first adaptive rate). Returns
    ``{group: (last_feasible, first_infeasible)}``, either side ``None`` if absent.
    """
    key = key or (lambda r: r.uncoop_rates)
    value = value or (lambda r: r.adaptive_rates[0])
    groups: dict = {}
    for r in rows:
        groups.setdefault(key(r), []).append(r)
    out = {}
    for k, rs in groups.items():
        ok = [value(r) for r in rs if getattr(r, flag)]
        bad = [value(r) for r in rs if not getattr(r, flag)]
        out[k] = (max(ok) if ok else None, min(bad) if bad else None)
    return out
