"""Minislot contention and relay selection strategies."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .netmodel import Topology, db_to_linear, distance


class Strategy(str, enum.Enum):
    ID = "ID"
    ID_CSI_1 = "ID_CSI_1"
    BEST_GAIN = "BEST_GAIN"
    NEAREST_DECODER = "NEAREST_DECODER"
    SOURCE_ONLY = "SOURCE_ONLY"

    @property
    def contends(self) -> bool:
        return self in (Strategy.ID, Strategy.ID_CSI_1)


# codes shared with the episode kernels
STRATEGY_CODES = {s: i for i, s in enumerate(Strategy)}


@dataclass(frozen=True)
class ContentionConfig:
    minislots: int = 10
    contention_prob: tuple[float, ...] = ()
    eta_opp_db: float = -math.inf
    strategy: Strategy = Strategy.ID
    beta_opp_db: float = math.inf
    winner_bias: float = 0.75
    slot_weighted: bool = True

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        object.__setattr__(self, "contention_prob", tuple(float(p) for p in self.contention_prob))
        if self.strategy.contends and self.minislots < 1:
            raise ValueError("minislots must be >= 1 for contention strategies")
        for i, p in enumerate(self.contention_prob):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"contention probability p[{i}] = {p} outside [0, 1]")
        if self.strategy is Strategy.ID_CSI_1:
            if not 0.5 < self.winner_bias <= 1.0:
                raise ValueError("winner bias q must satisfy 0.5 < q <= 1")
            if not self.beta_opp_db > self.eta_opp_db:
                raise ValueError("beta_opp must exceed eta_opp")

    @property
    def eta_opp(self) -> float:
        return db_to_linear(self.eta_opp_db)

    @property
    def beta_opp(self) -> float:
        return db_to_linear(self.beta_opp_db)


@dataclass(frozen=True)
class RelayState:
    relay_id: int
    decoded: bool
    gain_to_destination: float

    def __post_init__(self):
        if self.gain_to_destination < 0:
            raise ValueError("gain_to_destination must be >= 0")


@dataclass(frozen=True)
class Winner:
    relay_id: int
    flag_bit: bool | None = None


class _Marker:
    def __init__(self, name):
        self.name = name

    def __repr__(self):
        return self.name


EMPTY = _Marker("Empty")
COLLISION = _Marker("Collision")

MinislotResult = Union[Winner, _Marker]


@dataclass(frozen=True)
class Source:
    def __repr__(self):
        return "Source"


@dataclass(frozen=True)
class Relay:
    relay_id: int


SOURCE = Source()
SelectionResult = Union[Source, Relay]


def eligible_set(states: Sequence[RelayState], eta_opp: float) -> set[int]:
    """Decoded relays whose gain to the destination is strictly above `eta_opp` (linear)."""
    return {s.relay_id for s in states if s.decoded and s.gain_to_destination > eta_opp}


def run_contention(
    rng: np.random.Generator,
    eligible: set[int],
    config: ContentionConfig,
    gains: dict[int, float] | None = None,
) -> list[MinislotResult]:
    """Play K minislots; `gains` (linear |h|^2) is needed only for ID-CSI-1 flag bits."""
    if not config.strategy.contends:
        raise ValueError(f"{config.strategy.value} does not use contention")
    members = sorted(eligible)
    p = np.array([config.contention_prob[i] for i in members], dtype=float)
    outcome: list[MinislotResult] = []
    for _ in range(config.minislots):
        sends = rng.random(len(members)) < p
        n = int(sends.sum())
        if n == 0:
            outcome.append(EMPTY)
        elif n > 1:
            outcome.append(COLLISION)
        else:
            rid = members[int(np.flatnonzero(sends)[0])]
            flag = None
            if config.strategy is Strategy.ID_CSI_1:
                if gains is None:
                    raise ValueError("ID-CSI-1 needs relay gains for the flag bit")
                flag = bool(gains[rid] > config.beta_opp)
            outcome.append(Winner(rid, flag))
    return outcome


def _pick(rng: np.random.Generator, winners: list[Winner], slot_weighted: bool) -> Relay:
    if slot_weighted:
        pool = [w.relay_id for w in winners]
    else:
        pool = sorted({w.relay_id for w in winners})
    return Relay(pool[int(rng.random() * len(pool))])


def select_transmitter(
    rng: np.random.Generator, outcome: Sequence[MinislotResult], config: ContentionConfig
) -> SelectionResult:
    winners = [o for o in outcome if isinstance(o, Winner)]
    if not winners:
        return SOURCE
    if config.strategy is Strategy.ID_CSI_1:
        ones = [w for w in winners if w.flag_bit]
        zeros = [w for w in winners if not w.flag_bit]
        if ones and zeros:
            group = ones if rng.random() < config.winner_bias else zeros
            return _pick(rng, group, config.slot_weighted)
    return _pick(rng, winners, config.slot_weighted)


def select_baseline(
    states: Sequence[RelayState], topology: Topology | None, strategy: Strategy
) -> SelectionResult:
    strategy = Strategy(strategy)
    decoded = [s for s in states if s.decoded]
    if strategy is Strategy.SOURCE_ONLY or not decoded:
        return SOURCE
    if strategy is Strategy.BEST_GAIN:
        # max() keeps the first maximum, i.e. the lowest id after sorting
        best = max(sorted(decoded, key=lambda s: s.relay_id), key=lambda s: s.gain_to_destination)
        return Relay(best.relay_id)
    if strategy is Strategy.NEAREST_DECODER:
        if topology is None:
            raise ValueError("NEAREST_DECODER needs the topology")
        dest = topology.destination
        near = min(
            sorted(decoded, key=lambda s: s.relay_id),
            key=lambda s: distance(topology.relays[s.relay_id], dest),
        )
        return Relay(near.relay_id)
    raise ValueError(f"{strategy.value} is not a baseline strategy")
