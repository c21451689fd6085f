"""Transmission modes, SNR-threshold decoding, Chase combining and RCPC schedules.

Decoding is abstracted to a deterministic threshold test on received SNR;
no bit-level coding is performed.  All SNR values here are linear unless a
name says ``_db``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

from .netmodel import db_to_linear


@dataclass(frozen=True)
class TransmissionMode:
    mode_id: int
    label: str
    code_rate: float
    bits_per_symbol: int
    decode_threshold_db: float

    def __post_init__(self):
        if not 0 < self.code_rate < 1:
            raise ValueError(f"mode {self.mode_id}: code_rate must lie in (0, 1)")
        if self.bits_per_symbol < 1:
            raise ValueError(f"mode {self.mode_id}: bits_per_symbol must be >= 1")
        if not math.isfinite(self.decode_threshold_db):
            raise ValueError(f"mode {self.mode_id}: decode threshold must be finite")

    @property
    def threshold(self) -> float:
        return db_to_linear(self.decode_threshold_db)

    def coded_bits(self, info_bits: float) -> float:
        return info_bits / self.code_rate


@dataclass(frozen=True)
class AmcPolicy:
    """Modes ordered from most robust to fastest; switch thresholds in dB SNR."""

    modes: tuple[TransmissionMode, ...]
    switch_thresholds_db: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "switch_thresholds_db", tuple(self.switch_thresholds_db))
        if not self.modes:
            raise ValueError("at least one transmission mode is required")
        if len(self.modes) != len(self.switch_thresholds_db) + 1:
            raise ValueError("need exactly one switch threshold between consecutive modes")
        t = self.switch_thresholds_db
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError("switch thresholds must be strictly increasing")
        lam = [m.decode_threshold_db for m in self.modes]
        if any(b < a for a, b in zip(lam, lam[1:])):
            raise ValueError("decode thresholds must be nondecreasing with mode index")

    @property
    def switch_thresholds(self) -> tuple[float, ...]:
        return tuple(db_to_linear(x) for x in self.switch_thresholds_db)

    @classmethod
    def single(cls, mode: TransmissionMode) -> "AmcPolicy":
        return cls((mode,), ())


# Mode tables used throughout the worked examples.
MODE_BPSK_R13 = TransmissionMode(1, "BPSK r=1/3", 1 / 3, 1, 3.0)
MODE_QPSK_R23 = TransmissionMode(2, "QPSK r=2/3", 2 / 3, 2, 9.0)
MODE_16QAM_R12 = TransmissionMode(1, "16-QAM r=1/2", 1 / 2, 4, 13.0)


@dataclass(frozen=True)
class RcpcSchedule:
    rates: tuple[Fraction, ...]
    decode_thresholds_db: tuple[float, ...]
    mother_memory: int = 6
    puncture_period: int = 8
    info_bits: int = 1912

    def __post_init__(self):
        rates = tuple(Fraction(r) for r in self.rates)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "decode_thresholds_db", tuple(self.decode_thresholds_db))
        if len(rates) != len(self.decode_thresholds_db) or not rates:
            raise ValueError("one decode threshold per code rate is required")
        if any(b >= a for a, b in zip(rates, rates[1:])):
            raise ValueError("code rates must be strictly decreasing")
        th = self.decode_thresholds_db
        if any(b >= a for a, b in zip(th, th[1:])):
            raise ValueError("decode thresholds must increase with code rate")
        if not all(0 < r <= 1 for r in rates):
            raise ValueError("code rates must lie in (0, 1]")
        if self.puncture_period < 1 or self.mother_memory < 0 or self.info_bits < 1:
            raise ValueError("puncture period, memory and info bits must be positive")

    @property
    def mother_rate(self) -> Fraction:
        return self.rates[-1]

    @property
    def mother_codeword_bits(self) -> Fraction:
        return self.info_bits / self.mother_rate

    @property
    def thresholds(self) -> tuple[float, ...]:
        return tuple(db_to_linear(x) for x in self.decode_thresholds_db)

    def cumulative_bits(self, stage: int) -> Fraction:
        """Coded bits sent once the rate of `stage` (1-based) is reached."""
        return self.info_bits / self.rates[stage - 1]

    def stage_bits(self) -> list[Fraction]:
        """Incremental coded bits sent in each stage."""
        out, prev = [], Fraction(0)
        for j in range(1, len(self.rates) + 1):
            c = self.cumulative_bits(j)
            out.append(c - prev)
            prev = c
        return out


@dataclass(frozen=True)
class ChaseAccumulator:
    discard_threshold: float
    slot_limit: int
    combined_snr: float = 0.0
    slots_used: int = 0
    modes_used: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.combined_snr < 0:
            raise ValueError("combined SNR cannot be negative")
        if self.slots_used > self.slot_limit:
            raise ValueError("slots_used exceeds slot_limit")


def mode_for_gain(policy: AmcPolicy, gain: float) -> TransmissionMode:
    """Highest mode whose lower switch threshold is <= `gain` (linear, same scale as the thresholds)."""
    idx = 0
    for j, th in enumerate(policy.switch_thresholds):
        if gain >= th:
            idx = j + 1
    return policy.modes[idx]


def chase_update(acc: ChaseAccumulator, slot_snr: float, mode: TransmissionMode) -> ChaseAccumulator:
    if acc.slots_used >= acc.slot_limit:
        raise ValueError("slot limit reached; no further transmissions allowed")
    if slot_snr < acc.discard_threshold:
        return replace(acc, slots_used=acc.slots_used + 1)
    return replace(
        acc,
        combined_snr=acc.combined_snr + slot_snr,
        slots_used=acc.slots_used + 1,
        modes_used=acc.modes_used | {mode.mode_id},
    )


def governing_threshold(modes_used: Iterable[int], policy: AmcPolicy) -> float:
    """Threshold for the combined packet: a single employed mode keeps its own
    threshold; any mixture decodes against the mother code (the first mode)."""
    used = set(modes_used)
    if len(used) == 1:
        (mid,) = used
        for m in policy.modes:
            if m.mode_id == mid:
                return m.threshold
        raise KeyError(mid)
    return policy.modes[0].threshold


def decode_success_amc(acc: ChaseAccumulator, policy: AmcPolicy) -> bool:
    if not acc.modes_used:
        return False
    return acc.combined_snr >= governing_threshold(acc.modes_used, policy)


def rcpc_decode_success(
    per_slot: Sequence[tuple[float, float]],
    schedule: RcpcSchedule,
    stage: int,
    discard_threshold: float = 0.0,
) -> bool:
    """Bits-weighted mean SNR over kept slots against the threshold of `stage` (1-based)."""
    if not 1 <= stage <= len(schedule.rates):
        raise ValueError(f"stage {stage} outside 1..{len(schedule.rates)}")
    if len(per_slot) != stage:
        raise ValueError("per_slot must hold one entry per stage sent")
    num = den = 0.0
    for snr, bits in per_slot:
        if snr >= discard_threshold:
            num += snr * bits
            den += bits
    if den == 0.0:
        return False
    return num / den >= schedule.thresholds[stage - 1]


def realized_rate_amc(
    history: Sequence[tuple[TransmissionMode, float]], success: bool, f: float, k: float
) -> float:
    """f*k / total coded bits on success, else 0.  `history` holds (mode, coded_bits) per slot."""
    if not success:
        return 0.0
    total = sum(bits for _, bits in history)
    return f * k / total


def hagenauer_rate(k: float, n: float, memory: int, period: int, l_av: float) -> float:
    return (k / (n + memory)) * (period / (period + l_av))


def rcpc_effective_rate(
    records: Sequence[tuple[bool, Sequence[float]]], schedule: RcpcSchedule
) -> float:
    """Aggregate effective code rate over packet records.

    Each record is ``(success, bits_per_stage)``.  ``l_AV`` averages, per
    ``P`` information bits, the coded bits sent after the first stage over
    every attempted packet; lost packets add their bits but deliver nothing,
    so the rate is scaled by the delivered fraction.
    """
    if not records:
        raise ValueError("no packet records")
    k = schedule.info_bits
    extra = [sum(bits[1:]) for _, bits in records]
    l_av = (sum(extra) / len(records)) * schedule.puncture_period / k
    delivered = sum(1 for ok, _ in records if ok) / len(records)
    n = float(schedule.mother_codeword_bits)
    return delivered * hagenauer_rate(k, n, schedule.mother_memory, schedule.puncture_period, l_av)
