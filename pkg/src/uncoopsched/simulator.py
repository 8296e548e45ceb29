"""Slotted-time simulation of adaptive and legacy users on collision channels.

Order of events inside slot ``t``:

1. arrivals join every queue,
2. each channel gate decides from the feedback of slot ``t - 1``,
   and the scheduler maps open channels to adaptive users,
3. each channel resolves (success / collision / idle),
4. successful real packets leave their queues,
5. feedback is stored for the next slot's gates.

Random streams
--------------
Every stochastic source owns a PCG64 generator seeded with
``SeedSequence(seed, spawn_key=(role, index))``, with roles

* ``0`` adaptive arrivals of user ``index``,
* ``1`` legacy arrivals on channel ``index``,
* ``2`` gate uniforms of channel ``index``,
* ``3`` scheduler uniforms (``index`` 0, one draw per channel per slot).

Every stream draws the same number of values each slot whatever the policy,
so two policies run with one seed see the same arrivals and gate decisions.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .core import (ConfigError, NetworkConfig, SlotOutcome, TernaryFeedback, check_config,
                   two_user_config)
from .policies import (PolicyKind, _gate_kernel, _lqf_kernel, _priority_kernel,
                       _randomized_kernel, _single_user_kernel, gate_probabilities)

log = logging.getLogger(__name__)

ROLE_ADAPTIVE, ROLE_UNCOOP, ROLE_GATE, ROLE_SCHEDULER = 0, 1, 2, 3
CHUNK = 1 << 16
DEFAULT_SAMPLE_EVERY = 1000

FB_SUCCESS = int(TernaryFeedback.SUCCESS)
FB_COLLISION = int(TernaryFeedback.COLLISION)
FB_IDLE = int(TernaryFeedback.IDLE)


def stream(seed: int, role: int, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(role, index))))


class ContractViolation(ValueError):
    pass


# -- slot resolution ------------------------------------------------------------

@njit(cache=True)
def _resolve_kernel(uncoop_nonempty, adaptive_queues, assign, fb, winner, dummy,
                    departures, uncoop_dep, used):
    m = assign.shape[0]
    departures[:] = 0
    used[:] = 0
    for j in range(m):
        i = assign[j]
        uncoop_dep[j] = 0
        winner[j] = -1
        dummy[j] = False
        if i < 0:
            if uncoop_nonempty[j]:
                fb[j] = 0
                uncoop_dep[j] = 1
            else:
                fb[j] = 2
            continue
        # the first Q_i assigned channels (ascending) carry real packets
        real = used[i] < adaptive_queues[i]
        used[i] += 1
        dummy[j] = not real
        if uncoop_nonempty[j]:
            fb[j] = 1
        else:
            fb[j] = 0
            winner[j] = i
            if real:
                departures[i] += 1


def resolve_slot(uncoop_nonempty: Sequence[bool], adaptive_tx: Sequence,
                 adaptive_queues: Sequence[int]) -> SlotOutcome:
    """Resolve one slot of every channel.

    ``adaptive_tx[j]`` is ``None``, a user index, or a collection of user
    indices; more than one adaptive user on a channel is a contract violation.
    """
    m = len(uncoop_nonempty)
    if len(adaptive_tx) != m:
        raise ContractViolation("adaptive_tx needs one entry per channel")
    assign = np.full(m, -1, dtype=np.int64)
    for j, tx in enumerate(adaptive_tx):
        if tx is None:
            continue
        if not isinstance(tx, (int, np.integer)):
            users = list(tx)
            if len(users) > 1:
                raise ContractViolation(f"{len(users)} adaptive users assigned to channel {j + 1}")
            if not users:
                continue
            tx = users[0]
        assign[j] = int(tx)
    queues = np.asarray(adaptive_queues, dtype=np.int64)
    n = len(queues)
    if np.any(assign >= n):
        raise ContractViolation("assignment names an unknown adaptive user")
    fb = np.empty(m, dtype=np.int64)
    winner = np.empty(m, dtype=np.int64)
    dummy = np.empty(m, dtype=np.bool_)
    dep = np.empty(n, dtype=np.int64)
    udep = np.empty(m, dtype=np.int64)
    used = np.empty(n, dtype=np.int64)
    _resolve_kernel(np.asarray(uncoop_nonempty, dtype=np.bool_), queues, assign, fb, winner,
                    dummy, dep, udep, used)
    return SlotOutcome(
        feedback=tuple(TernaryFeedback(int(f)) for f in fb),
        successful_adaptive_user=tuple(None if w < 0 else int(w) for w in winner),
        dummy=tuple(bool(d) for d in dummy),
        departures=tuple(int(d) for d in dep),
        uncoop_departures=tuple(int(d) for d in udep),
    )


# -- metrics --------------------------------------------------------------------

@dataclass
class SimMetrics:
    horizon: int
    sample_every: int
    real_departures: np.ndarray       # per adaptive user
    arrivals: np.ndarray              # per adaptive user
    adaptive_successes: np.ndarray    # per channel, dummies included
    dummy_successes: np.ndarray       # per channel
    uncoop_successes: np.ndarray      # per channel
    collisions: np.ndarray            # per channel
    idles: np.ndarray                 # per channel
    final_adaptive_queues: np.ndarray
    final_uncoop_queues: np.ndarray
    uncoop_arrivals: np.ndarray
    sample_slots: np.ndarray          # completed-slot counts at each sample
    sample_backlogs: np.ndarray       # (samples, users), backlog after the slot
    sample_arrivals: np.ndarray       # (samples, users), cumulative
    sample_departures: np.ndarray     # (samples, users), cumulative real departures
    sample_collisions: np.ndarray     # cumulative over all channels

    @property
    def sum_backlog(self) -> np.ndarray:
        return self.sample_backlogs.sum(axis=1)

    @property
    def throughput(self) -> np.ndarray:
        return self.real_departures / self.horizon

    @property
    def channel_success_rate(self) -> np.ndarray:
        return self.adaptive_successes / self.horizon

    @property
    def backlog_growth(self) -> np.ndarray:
        """Q_i(T) / T per adaptive user."""
        return self.final_adaptive_queues / self.horizon

    @property
    def uncoop_backlog_growth(self) -> np.ndarray:
        return self.final_uncoop_queues / self.horizon

    def summary(self) -> dict:
        growth = self.backlog_growth
        m = len(self.collisions)
        return {
            "horizon": int(self.horizon),
            "throughput": [float(x) for x in self.throughput],
            "arrival_rate": [float(x) for x in self.arrivals / self.horizon],
            "adaptive_success_rate": [float(x) for x in self.channel_success_rate],
            "final_backlog": [int(x) for x in self.final_adaptive_queues],
            "max_backlog_growth": float(growth.max()) if len(growth) else 0.0,
            "uncoop_backlog_growth": [float(x) for x in self.uncoop_backlog_growth],
            "collision_fraction": float(self.collisions.sum() / (self.horizon * m)),
            "dummy_successes": int(self.dummy_successes.sum()),
            "collisions": int(self.collisions.sum()),
        }

    def __eq__(self, other) -> bool:
        if not isinstance(other, SimMetrics):
            return NotImplemented
        return all(np.array_equal(getattr(self, f), getattr(other, f))
                   for f in self.__dataclass_fields__)


# -- engine -----------------------------------------------------------------------

@njit(cache=True)
def _run_chunk(t0, n_slots, policy, eligible, rho, gate_p, arr_a, arr_u, gate_u, sched_u,
               q_a, q_u, backing_off, cum_arr, cum_dep, uncoop_cum_arr,
               adaptive_succ, dummy_succ, uncoop_succ, collisions, idles,
               sample_every, samp_idx, s_slots, s_backlog, s_arr, s_dep, s_coll, check):
    n, m = eligible.shape
    gates_open = np.zeros(m, dtype=np.bool_)
    assign = np.empty(m, dtype=np.int64)
    nonempty = np.zeros(m, dtype=np.bool_)
    fb = np.empty(m, dtype=np.int64)
    winner = np.empty(m, dtype=np.int64)
    dummy = np.empty(m, dtype=np.bool_)
    dep = np.empty(n, dtype=np.int64)
    udep = np.empty(m, dtype=np.int64)
    used = np.empty(n, dtype=np.int64)
    total_coll = 0
    for j in range(m):
        total_coll += collisions[j]
    for k in range(n_slots):
        for i in range(n):
            q_a[i] += arr_a[k, i]
            cum_arr[i] += arr_a[k, i]
        for j in range(m):
            if arr_u[k, j]:
                q_u[j] += 1
                uncoop_cum_arr[j] += 1
            nonempty[j] = q_u[j] > 0
            gates_open[j] = _gate_kernel(backing_off[j], gate_p[j], gate_u[k, j])
        if policy == 0:
            _single_user_kernel(eligible, gates_open, assign)
        elif policy == 1:
            _randomized_kernel(rho, gates_open, sched_u[k], assign)
        elif policy == 2:
            _lqf_kernel(q_a, eligible, gates_open, assign)
        else:
            _priority_kernel(q_a, eligible, gates_open, assign)
        _resolve_kernel(nonempty, q_a, assign, fb, winner, dummy, dep, udep, used)
        for j in range(m):
            f = fb[j]
            backing_off[j] = f == 1
            if f == 1:
                collisions[j] += 1
                total_coll += 1
            elif f == 2:
                idles[j] += 1
            elif winner[j] >= 0:
                adaptive_succ[j] += 1
                if dummy[j]:
                    dummy_succ[j] += 1
            else:
                uncoop_succ[j] += 1
            q_u[j] -= udep[j]
        for i in range(n):
            q_a[i] -= dep[i]
            cum_dep[i] += dep[i]
            if check and q_a[i] != cum_arr[i] - cum_dep[i]:
                raise AssertionError("adaptive queue violates arrivals - departures")
        t = t0 + k + 1
        if t % sample_every == 0:
            s = samp_idx[0]
            s_slots[s] = t
            for i in range(n):
                s_backlog[s, i] = q_a[i]
                s_arr[s, i] = cum_arr[i]
                s_dep[s, i] = cum_dep[i]
            s_coll[s] = total_coll
            samp_idx[0] = s + 1


def _draw_adaptive(gen: np.random.Generator, rate: float, kind: str, a_max: int, size: int) -> np.ndarray:
    if kind == "binomial":
        return gen.binomial(a_max, rate / a_max, size).astype(np.int64)
    return (gen.random(size) < rate).astype(np.int64)


def _policy_inputs(config: NetworkConfig, policy: PolicyKind):
    eligible = config.topology.eligibility_matrix()
    rho = np.zeros(eligible.shape)
    if policy == PolicyKind.PI_LB:
        crowded = [j + 1 for j in range(config.num_channels) if eligible[:, j].sum() > 1]
        if crowded:
            raise ConfigError([f"pi_lb needs at most one eligible adaptive user per channel; "
                               f"channels {crowded} have more"])
    elif policy == PolicyKind.RANDOMIZED:
        from .stability import check_sufficient

        verdict = check_sufficient(config)
        if not verdict.feasible:
            log.warning("rates violate the sufficient condition (slack %.3g); "
                        "randomized policy uses the max-flow split", verdict.slack)
        rho = verdict.rho
    return eligible, rho


def run_simulation(config: NetworkConfig, policy, horizon: Optional[int] = None,
                   seed: Optional[int] = None, sample_every: int = DEFAULT_SAMPLE_EVERY,
                   gate_probs: Optional[Sequence[float]] = None, check: bool = False) -> SimMetrics:
    """Simulate ``config`` under ``policy`` for ``horizon`` slots.

    ``horizon`` and ``seed`` default to the values stored in the config.
    ``gate_probs`` overrides the per-channel transmit probability, which is
    otherwise the optimal one for each legacy rate. ``check`` verifies the
    queue conservation identity on every slot.
    """
    policy = PolicyKind(policy)
    horizon = config.horizon if horizon is None else horizon
    seed = config.seed if seed is None else seed
    check_config(NetworkConfig(config.topology, config.adaptive_rates, config.uncoop_rates,
                               config.adaptive_arrival_kind, horizon, seed))
    if sample_every < 1:
        raise ValueError("sample_every must be positive")
    n, m = config.num_adaptive, config.num_channels
    eligible, rho = _policy_inputs(config, policy)
    if gate_probs is None:
        gate_p = gate_probabilities(config.uncoop_rates)
    else:
        gate_p = np.asarray(gate_probs, dtype=np.float64)
        if gate_p.shape != (m,) or np.any((gate_p < 0) | (gate_p > 1)):
            raise ValueError("gate_probs needs one probability in [0, 1] per channel")

    g_a = [stream(seed, ROLE_ADAPTIVE, i) for i in range(n)]
    g_u = [stream(seed, ROLE_UNCOOP, j) for j in range(m)]
    g_gate = [stream(seed, ROLE_GATE, j) for j in range(m)]
    g_sched = stream(seed, ROLE_SCHEDULER, 0)

    q_a = np.zeros(n, dtype=np.int64)
    q_u = np.zeros(m, dtype=np.int64)
    backing_off = np.zeros(m, dtype=np.bool_)
    cum_arr = np.zeros(n, dtype=np.int64)
    cum_dep = np.zeros(n, dtype=np.int64)
    u_arr = np.zeros(m, dtype=np.int64)
    counters = [np.zeros(m, dtype=np.int64) for _ in range(5)]
    n_samples = horizon // sample_every
    s_slots = np.zeros(n_samples, dtype=np.int64)
    s_backlog = np.zeros((n_samples, n), dtype=np.int64)
    s_arr = np.zeros((n_samples, n), dtype=np.int64)
    s_dep = np.zeros((n_samples, n), dtype=np.int64)
    s_coll = np.zeros(n_samples, dtype=np.int64)
    samp_idx = np.zeros(1, dtype=np.int64)
    kind = config.adaptive_arrival_kind

    t = 0
    while t < horizon:
        c = min(CHUNK, horizon - t)
        arr_a = np.empty((c, n), dtype=np.int64)
        for i in range(n):
            arr_a[:, i] = _draw_adaptive(g_a[i], config.adaptive_rates[i], kind.kind, kind.a_max, c)
        arr_u = np.empty((c, m), dtype=np.bool_)
        gate_u = np.empty((c, m))
        for j in range(m):
            arr_u[:, j] = g_u[j].random(c) < config.uncoop_rates[j]
            gate_u[:, j] = g_gate[j].random(c)
        sched_u = g_sched.random((c, m))
        _run_chunk(t, c, policy.code, eligible, rho, gate_p, arr_a, arr_u, gate_u, sched_u,
                   q_a, q_u, backing_off, cum_arr, cum_dep, u_arr, *counters,
                   sample_every, samp_idx, s_slots, s_backlog, s_arr, s_dep, s_coll, check)
        t += c

    adaptive_succ, dummy_succ, uncoop_succ, collisions, idles = counters
    return SimMetrics(
        horizon=horizon, sample_every=sample_every,
        real_departures=cum_dep, arrivals=cum_arr,
        adaptive_successes=adaptive_succ, dummy_successes=dummy_succ,
        uncoop_successes=uncoop_succ, collisions=collisions, idles=idles,
        final_adaptive_queues=q_a, final_uncoop_queues=q_u, uncoop_arrivals=u_arr,
        sample_slots=s_slots, sample_backlogs=s_backlog, sample_arrivals=s_arr,
        sample_departures=s_dep, sample_collisions=s_coll,
    )


def estimate_saturated_throughput(lambda_u: float, p: float, horizon: int, seed: int) -> float:
    """Empirical success rate of an always-backlogged adaptive user under ``pi_lb``.

    The adaptive user has no arrivals of its own and sends a dummy packet
    every time the gate opens, which is the saturated regime.
    """
    if not 0.0 < lambda_u < 1.0:
        raise ValueError("lambda_u must lie in (0, 1)")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    config = two_user_config(lambda_u, 0.0, horizon=horizon, seed=seed)
    metrics = run_simulation(config, PolicyKind.PI_LB, gate_probs=[p],
                             sample_every=max(horizon, 1))
    return float(metrics.adaptive_successes[0] / horizon)
