"""Placing legacy users on channels so the sufficient stability condition holds.

The decision problem is NP-complete (set cover reduces to it), so the exact
solver is a depth-first enumeration meant for a dozen channels or so. Channels
left without a legacy user behave like a legacy user of rate 0.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Optional, Sequence

from .bounds import lower_bound_throughput
from .core import NetworkConfig, NetworkTopology, config_from_dict, config_to_dict
from .stability import FeasibilityVerdict, check_rates, check_sufficient

DEFAULT_CHANNEL_CAP = 12


class AssignmentSizeError(ValueError):
    pass


@dataclass(frozen=True)
class UncoopUser:
    rate: float
    candidates: tuple[int, ...]   # 0-based channels


@dataclass(frozen=True)
class AssignmentProblem:
    base: NetworkConfig           # its uncoop_rates are ignored
    users: tuple[UncoopUser, ...]

    @property
    def num_channels(self) -> int:
        return self.base.num_channels

    def validate(self) -> list[str]:
        problems = []
        m = self.num_channels
        if len(self.users) > m:
            problems.append(f"{len(self.users)} uncooperative users for {m} channels")
        for k, u in enumerate(self.users):
            if not u.candidates:
                problems.append(f"candidate set empty for uncooperative user {k + 1}")
            if any(not 0 <= c < m for c in u.candidates):
                problems.append(f"candidate set of uncooperative user {k + 1} names unknown channels")
            if not 0.0 <= u.rate <= 1.0:
                problems.append(f"rate out of [0,1]: uncooperative user {k + 1} has {u.rate}")
        return problems

    def config_for(self, placement: Sequence[int]) -> NetworkConfig:
        """The network obtained by putting user ``k`` on channel ``placement[k]``."""
        rates = [0.0] * self.num_channels
        for user, ch in zip(self.users, placement):
            rates[ch] = user.rate
        return self.base.with_rates(uncoop_rates=rates)


@dataclass
class AssignmentResult:
    feasible: bool
    placement: Optional[tuple[int, ...]]     # channel of each legacy user, 0-based
    verdict: Optional[FeasibilityVerdict]
    nodes_explored: int = 0
    feasible_count: Optional[int] = None
    stats: dict = field(default_factory=dict)


def _capacities(problem: AssignmentProblem, placement: dict[int, int]) -> list[float]:
    """Channel capacities for a partial placement, optimistic on open channels.

    A still-free channel may end up empty (capacity 1) when fewer users remain
    than free channels; otherwise it gets at best the mildest remaining user
    that can reach it.
    """
    m = problem.num_channels
    taken = {ch: problem.users[k].rate for k, ch in placement.items()}
    remaining = [u for k, u in enumerate(problem.users) if k not in placement]
    free = m - len(taken)
    caps = []
    for ch in range(m):
        if ch in taken:
            caps.append(lower_bound_throughput(taken[ch]))
        elif len(remaining) < free:
            caps.append(1.0)
        else:
            reach = [lower_bound_throughput(u.rate) for u in remaining if ch in u.candidates]
            caps.append(max(reach, default=0.0))
    return caps


def _feasible_caps(problem: AssignmentProblem, caps: Sequence[float]) -> FeasibilityVerdict:
    return check_rates(problem.base.adaptive_rates, problem.base.topology.access_sets, caps)


def solve_exact(problem: AssignmentProblem, prune: bool = True, count_all: bool = False,
                channel_cap: int = DEFAULT_CHANNEL_CAP, override: bool = False) -> AssignmentResult:
    """Enumerate injective placements depth first.

    With ``prune`` a branch is dropped as soon as the optimistic capacities of
    :func:`_capacities` already fail the flow check. Returns the first
    feasible placement, or with ``count_all`` the number of feasible ones.
    """
    problems = problem.validate()
    if problems:
        raise ValueError("; ".join(problems))
    if problem.num_channels > channel_cap and not override:
        raise AssignmentSizeError(
            f"{problem.num_channels} channels exceeds the enumeration cap of {channel_cap}")
    users = problem.users
    nodes = 0
    count = 0
    first: Optional[tuple[int, ...]] = None
    placement: dict[int, int] = {}
    used: set[int] = set()

    def dfs(k: int) -> bool:
        nonlocal nodes, count, first
        nodes += 1
        if k == len(users):
            verdict = _feasible_caps(problem, _capacities(problem, placement))
            if verdict.feasible:
                count += 1
                if first is None:
                    first = tuple(placement[i] for i in range(len(users)))
                return not count_all
            return False
        if prune and k > 0 and not _feasible_caps(problem, _capacities(problem, placement)).feasible:
            return False
        for ch in users[k].candidates:
            if ch in used:
                continue
            placement[k] = ch
            used.add(ch)
            done = dfs(k + 1)
            del placement[k]
            used.discard(ch)
            if done:
                return True
        return False

    dfs(0)
    verdict = check_sufficient(problem.config_for(first)) if first is not None else None
    return AssignmentResult(first is not None, first, verdict, nodes,
                            count if count_all else None)


def solve_greedy(problem: AssignmentProblem) -> AssignmentResult:
    """Place users by decreasing rate, each where the flow slack stays largest.

    Unplaced channels count as empty while choosing. Ties go to the lowest
    channel index. The final placement is re-checked, so a feasible answer
    is always genuinely feasible; an infeasible one may be a miss.
    """
    problems = problem.validate()
    if problems:
        raise ValueError("; ".join(problems))
    m = problem.num_channels
    order = sorted(range(len(problem.users)), key=lambda k: -problem.users[k].rate)
    placed: dict[int, int] = {}
    evaluated = 0
    for k in order:
        best_ch, best_slack = None, None
        for ch in sorted(problem.users[k].candidates):
            if ch in placed.values():
                continue
            caps = [1.0] * m
            for kk, cc in placed.items():
                caps[cc] = lower_bound_throughput(problem.users[kk].rate)
            caps[ch] = lower_bound_throughput(problem.users[k].rate)
            slack = _feasible_caps(problem, caps).slack
            evaluated += 1
            if best_slack is None or slack > best_slack + 1e-12:
                best_ch, best_slack = ch, slack
        if best_ch is None:
            return AssignmentResult(False, None, None, evaluated,
                                    stats={"stuck_user": k + 1})
        placed[k] = best_ch
    placement = tuple(placed[k] for k in range(len(problem.users)))
    verdict = check_sufficient(problem.config_for(placement))
    return AssignmentResult(verdict.feasible, placement, verdict, evaluated)


# -- set cover -------------------------------------------------------------------

@dataclass(frozen=True)
class SetCoverInstance:
    elements: tuple[Hashable, ...]
    subsets: tuple[frozenset, ...]
    k: int

    def validate(self) -> list[str]:
        problems = []
        union = frozenset().union(*self.subsets) if self.subsets else frozenset()
        if union != frozenset(self.elements):
            problems.append("union of subsets differs from the element set")
        if not 0 <= self.k <= len(self.subsets):
            problems.append(f"k={self.k} outside 0..{len(self.subsets)}")
        return problems


def set_cover_exists(instance: SetCoverInstance) -> bool:
    """Brute-force decision: do at most k subsets cover every element?"""
    target = frozenset(instance.elements)
    for r in range(instance.k + 1):
        for combo in itertools.combinations(instance.subsets, r):
            if frozenset().union(*combo) >= target:
                return True
    return False


def reduce_set_cover(instance: SetCoverInstance) -> AssignmentProblem:
    """Build the legacy-assignment problem that is feasible iff the cover exists.

    One adaptive user per element at rate 1/|E|, one channel per subset, and
    |S| - k always-busy plus k silent legacy users allowed on any channel.
    """
    problems = instance.validate()
    if problems:
        raise ValueError("; ".join(problems))
    elements = list(instance.elements)
    m = len(instance.subsets)
    access = tuple(tuple(j for j, s in enumerate(instance.subsets) if e in s) for e in elements)
    rate = 1.0 / len(elements) if elements else 0.0
    base = NetworkConfig(NetworkTopology(len(elements), m, access), (rate,) * len(elements), (0.0,) * m)
    everywhere = tuple(range(m))
    users = tuple([UncoopUser(1.0, everywhere)] * (m - instance.k) + [UncoopUser(0.0, everywhere)] * instance.k)
    return AssignmentProblem(base, users)


# -- text form -------------------------------------------------------------------

def problem_to_dict(problem: AssignmentProblem) -> dict:
    base = config_to_dict(problem.base)
    base.pop("uncoop_rates")
    return {
        "base": base,
        "uncoop_users": [{"rate": u.rate, "candidates": [c + 1 for c in u.candidates]} for u in problem.users],
    }


def problem_from_dict(data: dict) -> AssignmentProblem:
    if "set_cover" in data:
        return reduce_set_cover(set_cover_from_dict(data["set_cover"]))
    base = dict(data["base"])
    base["uncoop_rates"] = [0.0] * int(base["topology"]["num_channels"])
    users = tuple(UncoopUser(float(u["rate"]), tuple(sorted(int(c) - 1 for c in u["candidates"])))
                  for u in data["uncoop_users"])
    return AssignmentProblem(config_from_dict(base), users)


def set_cover_to_dict(instance: SetCoverInstance) -> dict:
    return {
        "elements": list(instance.elements),
        "subsets": [sorted(s, key=instance.elements.index) for s in instance.subsets],
        "k": instance.k,
    }


def set_cover_from_dict(data: dict) -> SetCoverInstance:
    return SetCoverInstance(tuple(data["elements"]), tuple(frozenset(s) for s in data["subsets"]), int(data["k"]))


def load_problem(path) -> AssignmentProblem:
    return problem_from_dict(json.loads(Path(path).read_text()))


def dumps_problem(problem: AssignmentProblem) -> str:
    return json.dumps(problem_to_dict(problem), indent=2) + "\n"
