"""Domain types, config validation and slot-level semantics.

Channel and user indices are 0-based in memory. The text form written by
:func:`dumps_config` and every human-facing message use 1-based numbers.
"""
from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence


class TernaryFeedback(enum.IntEnum):
    SUCCESS = 0
    COLLISION = 1
    IDLE = 2


class Action(enum.IntEnum):
    NO_TRANSMIT = 0
    TRANSMIT = 1


def feedback(queue_nonempty: bool, action: Action) -> TernaryFeedback:
    """Channel observation given the hidden uncooperative queue state."""
    if action == Action.TRANSMIT:
        return TernaryFeedback.COLLISION if queue_nonempty else TernaryFeedback.SUCCESS
    return TernaryFeedback.SUCCESS if queue_nonempty else TernaryFeedback.IDLE


@dataclass(frozen=True)
class NetworkTopology:
    num_adaptive: int
    num_channels: int
    # access_sets[i] lists the 0-based channels adaptive user i may use
    access_sets: tuple[tuple[int, ...], ...]

    @classmethod
    def from_one_based(cls, num_channels: int, access_sets: Sequence[Sequence[int]]) -> "NetworkTopology":
        sets = tuple(tuple(sorted(j - 1 for j in s)) for s in access_sets)
        return cls(len(sets), num_channels, sets)

    def eligible_users(self, channel: int) -> list[int]:
        return [i for i, s in enumerate(self.access_sets) if channel in s]

    def eligibility_matrix(self):
        import numpy as np

        mat = np.zeros((self.num_adaptive, self.num_channels), dtype=np.bool_)
        for i, s in enumerate(self.access_sets):
            for j in s:
                if 0 <= j < self.num_channels:
                    mat[i, j] = True
        return mat


@dataclass(frozen=True)
class ArrivalKind:
    """Per-slot arrival law of the adaptive users.

    ``bernoulli`` draws one packet with probability equal to the rate.
    ``binomial`` draws Binomial(a_max, rate / a_max), so at most ``a_max``
    packets arrive per slot while the mean stays equal to the rate.
    """

    kind: str = "bernoulli"
    a_max: int = 1


@dataclass(frozen=True)
class NetworkConfig:
    topology: NetworkTopology
    adaptive_rates: tuple[float, ...]
    uncoop_rates: tuple[float, ...]
    adaptive_arrival_kind: ArrivalKind = field(default_factory=ArrivalKind)
    horizon: int = 1_000_000
    seed: int = 0

    @property
    def num_adaptive(self) -> int:
        return self.topology.num_adaptive

    @property
    def num_channels(self) -> int:
        return self.topology.num_channels

    def with_rates(self, adaptive_rates=None, uncoop_rates=None) -> "NetworkConfig":
        return NetworkConfig(
            self.topology,
            tuple(float(r) for r in adaptive_rates) if adaptive_rates is not None else self.adaptive_rates,
            tuple(float(r) for r in uncoop_rates) if uncoop_rates is not None else self.uncoop_rates,
            self.adaptive_arrival_kind,
            self.horizon,
            self.seed,
        )


@dataclass(frozen=True)
class SlotOutcome:
    feedback: tuple[TernaryFeedback, ...]
    successful_adaptive_user: tuple[Optional[int], ...]
    dummy: tuple[bool, ...]
    departures: tuple[int, ...]
    uncoop_departures: tuple[int, ...]


def _bad_rate(r) -> bool:
    try:
        return not (0.0 <= float(r) <= 1.0)
    except (TypeError, ValueError):
        return True


def validate_config(config: NetworkConfig) -> list[str]:
    """Return every violated invariant of ``config``; an empty list means valid."""
    problems: list[str] = []
    topo = config.topology
    if topo.num_adaptive < 0:
        problems.append("num_adaptive must be non-negative")
    if topo.num_channels < 1:
        problems.append("num_channels must be at least 1")
    if len(topo.access_sets) != topo.num_adaptive:
        problems.append(
            f"access_sets has {len(topo.access_sets)} entries for {topo.num_adaptive} adaptive users"
        )
    for i, s in enumerate(topo.access_sets):
        if len(s) == 0:
            problems.append(f"access set empty for user {i + 1}")
        bad = [j + 1 for j in s if not 0 <= j < topo.num_channels]
        if bad:
            problems.append(f"access set of user {i + 1} names unknown channels {bad}")
        if len(set(s)) != len(s):
            problems.append(f"access set of user {i + 1} repeats a channel")
    if len(config.adaptive_rates) != topo.num_adaptive:
        problems.append(
            f"adaptive_rates has {len(config.adaptive_rates)} entries for {topo.num_adaptive} users"
        )
    if len(config.uncoop_rates) != topo.num_channels:
        problems.append(
            f"uncoop_rates has {len(config.uncoop_rates)} entries for {topo.num_channels} channels"
        )
    for i, r in enumerate(config.adaptive_rates):
        if _bad_rate(r):
            problems.append(f"rate out of [0,1]: adaptive user {i + 1} has {r!r}")
    for j, r in enumerate(config.uncoop_rates):
        if _bad_rate(r):
            problems.append(f"rate out of [0,1]: uncooperative user on channel {j + 1} has {r!r}")
    kind = config.adaptive_arrival_kind
    if kind.kind not in ("bernoulli", "binomial"):
        problems.append(f"unknown adaptive_arrival_kind {kind.kind!r}")
    elif kind.kind == "bernoulli" and kind.a_max != 1:
        problems.append("bernoulli arrivals require a_max = 1")
    if not isinstance(kind.a_max, int) or kind.a_max < 1:
        problems.append("a_max must be a finite integer >= 1")
    if not isinstance(config.horizon, int) or config.horizon < 1:
        problems.append(f"horizon must be a positive slot count, got {config.horizon!r}")
    if not isinstance(config.seed, int) or not 0 <= config.seed < 2**64:
        problems.append(f"seed must be a 64-bit unsigned integer, got {config.seed!r}")
    return problems


class ConfigError(ValueError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


def check_config(config: NetworkConfig) -> None:
    violations = validate_config(config)
    if violations:
        raise ConfigError(violations)


# -- text form ---------------------------------------------------------------

def config_to_dict(config: NetworkConfig) -> dict:
    topo = config.topology
    return {
        "topology": {
            "num_adaptive": topo.num_adaptive,
            "num_channels": topo.num_channels,
            "access_sets": [[j + 1 for j in s] for s in topo.access_sets],
        },
        "adaptive_rates": list(config.adaptive_rates),
        "uncoop_rates": list(config.uncoop_rates),
        "adaptive_arrival_kind": {
            "kind": config.adaptive_arrival_kind.kind,
            "a_max": config.adaptive_arrival_kind.a_max,
        },
        "horizon": config.horizon,
        "seed": config.seed,
    }


def config_from_dict(data: dict) -> NetworkConfig:
    topo = data["topology"]
    access = [tuple(sorted(int(j) - 1 for j in s)) for s in topo["access_sets"]]
    kind = data.get("adaptive_arrival_kind", {"kind": "bernoulli", "a_max": 1})
    if isinstance(kind, str):
        kind = {"kind": kind, "a_max": 1}
    return NetworkConfig(
        topology=NetworkTopology(int(topo["num_adaptive"]), int(topo["num_channels"]), tuple(access)),
        adaptive_rates=tuple(float(r) for r in data["adaptive_rates"]),
        uncoop_rates=tuple(float(r) for r in data["uncoop_rates"]),
        adaptive_arrival_kind=ArrivalKind(str(kind.get("kind", "bernoulli")), int(kind.get("a_max", 1))),
        horizon=int(data.get("horizon", 1_000_000)),
        seed=int(data.get("seed", 0)),
    )


def dumps_config(config: NetworkConfig) -> str:
    return json.dumps(config_to_dict(config), indent=2) + "\n"


def loads_config(text: str) -> NetworkConfig:
    return config_from_dict(json.loads(text))


def load_config(path) -> NetworkConfig:
    return loads_config(Path(path).read_text())


def save_config(config: NetworkConfig, path) -> None:
    Path(path).write_text(dumps_config(config))


def config_hash(config: NetworkConfig) -> str:
    canonical = json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


# -- reference networks -------------------------------------------------------

def two_user_config(uncoop_rate: float, adaptive_rate: float = 0.0, horizon: int = 1_000_000,
                    seed: int = 0) -> NetworkConfig:
    """One adaptive and one uncooperative user sharing a single channel."""
    return NetworkConfig(
        NetworkTopology(1, 1, ((0,),)), (float(adaptive_rate),), (float(uncoop_rate),),
        horizon=horizon, seed=seed,
    )


def four_user_config(adaptive_rate: float, uncoop_rate: float = 0.2, horizon: int = 2_000_000,
                     seed: int = 1) -> NetworkConfig:
    """Four adaptive users over two channels; users 1-3 reach both, user 4 only channel 2."""
    topo = NetworkTopology.from_one_based(2, [[1, 2], [1, 2], [1, 2], [2]])
    return NetworkConfig(topo, (float(adaptive_rate),) * 4, (float(uncoop_rate),) * 2,
                         horizon=horizon, seed=seed)
