"""Per-channel access gate and the multi-user schedulers.

Schedulers see only the adaptive backlogs, the topology and which channel
gates are open this slot. Legacy backlogs are never passed in.

Each scheduler has a numba kernel (``_lqf_kernel`` etc.) that the simulator
calls in its slot loop, plus a thin Python wrapper returning a
:class:`ScheduleAssignment`. Both go through the same kernel.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .bounds import optimal_transmit_prob
from .core import Action, NetworkConfig, NetworkTopology, TernaryFeedback

NO_USER = -1


class PolicyKind(str, enum.Enum):
    PI_LB = "pi_lb"
    RANDOMIZED = "randomized"
    LQF = "lqf"
    PRIORITY = "priority"

    @property
    def code(self) -> int:
        return _POLICY_CODES[self]


_POLICY_CODES = {PolicyKind.PI_LB: 0, PolicyKind.RANDOMIZED: 1, PolicyKind.LQF: 2, PolicyKind.PRIORITY: 3}


# -- gate ---------------------------------------------------------------------

@dataclass(frozen=True)
class ChannelGateState:
    transmit_prob: float
    backing_off: bool = False


@njit(cache=True)
def _gate_kernel(backing_off, p, u):
    return (not backing_off) and u < p


def gate_decide(state: ChannelGateState, last_feedback: Optional[TernaryFeedback],
                rng: np.random.Generator) -> tuple[Action, ChannelGateState]:
    """Back off for one slot after a collision, otherwise transmit with probability p.

    One uniform is drawn on every call, backing off or not, so the gate's
    random stream stays aligned across policies.
    """
    backing_off = last_feedback == TernaryFeedback.COLLISION
    u = rng.random()
    go = bool(_gate_kernel(backing_off, state.transmit_prob, u))
    action = Action.TRANSMIT if go else Action.NO_TRANSMIT
    return action, ChannelGateState(state.transmit_prob, backing_off)


def gate_probabilities(uncoop_rates: Sequence[float]) -> np.ndarray:
    return np.array([optimal_transmit_prob(r) for r in uncoop_rates], dtype=np.float64)


# -- assignments --------------------------------------------------------------

@dataclass(frozen=True)
class ScheduleAssignment:
    # users[j] is the 0-based adaptive user sent on channel j, or None
    users: tuple[Optional[int], ...]

    @classmethod
    def from_array(cls, arr) -> "ScheduleAssignment":
        return cls(tuple(None if int(i) < 0 else int(i) for i in arr))

    def channels_of(self, user: int) -> list[int]:
        return [j for j, i in enumerate(self.users) if i == user]


def _open_mask(gates_open, num_channels: int) -> np.ndarray:
    mask = np.zeros(num_channels, dtype=np.bool_)
    for j in gates_open:
        mask[j] = True
    return mask


@njit(cache=True)
def _lqf_kernel(queues, eligible, gates_open, out):
    n, m = eligible.shape
    for j in range(m):
        out[j] = -1
        if not gates_open[j]:
            continue
        best = -1
        for i in range(n):
            if eligible[i, j] and (best < 0 or queues[i] > queues[best]):
                best = i
        out[j] = best


@njit(cache=True)
def _priority_kernel(queues, eligible, gates_open, out):
    n, m = eligible.shape
    remaining = queues.copy()
    for j in range(m):
        out[j] = -1
        if not gates_open[j]:
            continue
        for i in range(n):
            if eligible[i, j] and remaining[i] > 0:
                out[j] = i
                remaining[i] -= 1
                break


@njit(cache=True)
def _randomized_kernel(rho, gates_open, u, out):
    n, m = rho.shape
    for j in range(m):
        out[j] = -1
        if not gates_open[j]:
            continue
        total = 0.0
        for i in range(n):
            total += rho[i, j]
        if total <= 0.0:
            continue
        target = u[j] * total
        acc = 0.0
        for i in range(n):
            if rho[i, j] > 0.0:
                acc += rho[i, j]
                out[j] = i
                if target < acc:
                    break


@njit(cache=True)
def _single_user_kernel(eligible, gates_open, out):
    n, m = eligible.shape
    for j in range(m):
        out[j] = -1
        if not gates_open[j]:
            continue
        for i in range(n):
            if eligible[i, j]:
                out[j] = i
                break


def schedule_lqf(adaptive_queues: Sequence[int], topology: NetworkTopology,
                 gates_open) -> ScheduleAssignment:
    """Give each open channel to the eligible user with the largest backlog.

    Ties go to the lowest user index. Backlogs are read once at slot start,
    so one user may win more channels than it has packets.
    """
    out = np.empty(topology.num_channels, dtype=np.int64)
    _lqf_kernel(np.asarray(adaptive_queues, dtype=np.int64), topology.eligibility_matrix(),
                _open_mask(gates_open, topology.num_channels), out)
    return ScheduleAssignment.from_array(out)


def schedule_priority(adaptive_queues: Sequence[int], topology: NetworkTopology,
                      gates_open) -> ScheduleAssignment:
    """Fixed-order baseline: lowest-index eligible user that still has an unsent packet."""
    out = np.empty(topology.num_channels, dtype=np.int64)
    _priority_kernel(np.asarray(adaptive_queues, dtype=np.int64), topology.eligibility_matrix(),
                     _open_mask(gates_open, topology.num_channels), out)
    return ScheduleAssignment.from_array(out)


def schedule_randomized(rho: np.ndarray, gates_open, rng: np.random.Generator) -> ScheduleAssignment:
    """Pick user i on open channel j with probability rho[i, j] / sum_i rho[i, j].

    Channels whose rho column sums to zero are never scheduled.
    """
    rho = np.asarray(rho, dtype=np.float64)
    m = rho.shape[1]
    u = rng.random(m)
    out = np.empty(m, dtype=np.int64)
    _randomized_kernel(rho, _open_mask(gates_open, m), u, out)
    return ScheduleAssignment.from_array(out)


def compute_rho(config: NetworkConfig) -> Optional[np.ndarray]:
    """A feasible rho matrix (users x channels) for the randomized policy, or None."""
    from .stability import check_sufficient

    verdict = check_sufficient(config)
    return verdict.rho if verdict.feasible else None
