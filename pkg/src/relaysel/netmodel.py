"""Node geometry, log-distance path loss and Rayleigh block fading."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 3.0e8


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    if value <= 0.0:
        return -math.inf
    return 10.0 * math.log10(value)


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinates ({self.x}, {self.y})")


@dataclass(frozen=True)
class Topology:
    destination: Position
    relays: tuple[Position, ...] = ()
    source: Position = Position(0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "relays", tuple(self.relays))
        d_sd = distance(self.source, self.destination)
        for i, r in enumerate(self.relays):
            if not distance(r, self.destination) < d_sd:
                raise ValueError(
                    f"relay {i} at ({r.x}, {r.y}) is not closer to the destination than the source"
                )

    @property
    def k_r(self) -> int:
        return len(self.relays)

    @property
    def d_sd(self) -> float:
        return distance(self.source, self.destination)


@dataclass(frozen=True)
class ChannelParams:
    carrier_frequency: float = 2.4e9
    reference_distance: float = 1.0
    path_loss_exponent: float = 3.0
    noise_power_db: float = -134.0
    tx_power_above_noise_db: float = 110.0
    bandwidth: float = 9e6

    def __post_init__(self):
        if self.path_loss_exponent <= 0:
            raise ValueError("path_loss_exponent must be > 0")
        if self.reference_distance <= 0:
            raise ValueError("reference_distance must be > 0")
        if self.carrier_frequency <= 0:
            raise ValueError("carrier_frequency must be > 0")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be > 0")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def noise_linear(self) -> float:
        return db_to_linear(self.noise_power_db)

    @property
    def tx_energy_linear(self) -> float:
        return db_to_linear(self.noise_power_db + self.tx_power_above_noise_db)

    def with_average_snr(self, snr_db: float, d_sd: float) -> "ChannelParams":
        """Return params whose transmit energy yields mean SNR `snr_db` over distance `d_sd`."""
        excess = snr_db - linear_to_db(average_gain(self, d_sd))
        return ChannelParams(
            self.carrier_frequency,
            self.reference_distance,
            self.path_loss_exponent,
            self.noise_power_db,
            excess,
            self.bandwidth,
        )


@dataclass(frozen=True)
class FadingSample:
    gain: float
    slot_index: int = 0
    link: tuple = field(default=(0, 0))


def distance(a: Position, b: Position) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def average_gain(params: ChannelParams, d: float) -> float:
    """Mean channel power E|h|^2 at distance `d`, path loss included."""
    d0 = params.reference_distance
    if d < d0:
        raise ValueError(f"distance {d} m is inside the reference distance {d0} m")
    return (params.wavelength / (4.0 * math.pi * d0)) ** 2 * (d / d0) ** (-params.path_loss_exponent)


def received_power(params: ChannelParams, d: float) -> float:
    """Average received power |G|^2 = tx energy * E|h|^2."""
    return params.tx_energy_linear * average_gain(params, d)


def link_rng(seed: int, link: tuple[int, int], slot_index: int) -> np.random.Generator:
    """Generator owned by one (link, slot) pair of an experiment seed."""
    a, b = link
    ss = np.random.SeedSequence(seed, spawn_key=(a + 1, b + 1, slot_index))
    return np.random.default_rng(ss)


def sample_block_fading(
    rng: np.random.Generator, mean_gain: float, slot_index: int = 0, link: tuple = (0, 0)
) -> FadingSample:
    if not mean_gain > 0:
        raise ValueError("mean_gain must be > 0")
    return FadingSample(float(rng.exponential(mean_gain)), slot_index, link)


def received_snr(gain: float, params: ChannelParams, tx_energy: float | None = None) -> tuple[float, float]:
    """(dB, linear) SNR of a transmission whose channel power is `gain`."""
    if gain < 0:
        raise ValueError("gain must be >= 0")
    energy = params.tx_energy_linear if tx_energy is None else tx_energy
    snr = energy * gain / params.noise_linear
    return linear_to_db(snr), snr


def place_relays_uniform(
    rng: np.random.Generator, k_r: int, d_sd: float, min_separation: float = 1.0
) -> Topology:
    """Uniform relays in the strip [0, d_sd] x [-d_sd/4, d_sd/4].

    Candidates are rejected unless they are closer to the destination than
    the source is and at least `min_separation` from every other node, so
    that every link stays outside the path-loss reference distance.
    """
    if k_r < 0:
        raise ValueError("k_r must be >= 0")
    src = Position(0.0, 0.0)
    dest = Position(d_sd, 0.0)
    relays: list[Position] = []
    while len(relays) < k_r:
        x = rng.uniform(0.0, d_sd)
        y = rng.uniform(-d_sd / 4.0, d_sd / 4.0)
        p = Position(float(x), float(y))
        if not distance(p, dest) < d_sd:
            continue
        if any(distance(p, o) < min_separation for o in (src, dest, *relays)):
            continue
        relays.append(p)
    return Topology(dest, tuple(relays))
