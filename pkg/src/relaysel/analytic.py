"""Closed-form throughput approximations for two-slot relay-assisted hybrid-ARQ.

Every power-like quantity in :class:`AnalyticScenario` (mean received powers
and decoding thresholds) lives on one absolute scale: a threshold quoted in
dB SNR is multiplied by the linear noise power before it gets here.

Mode arguments: ``1`` and ``2`` select the AMC mode thresholds (alpha and
beta); ``"sm"`` selects the single-mode threshold gamma.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

_exp = math.exp


@dataclass(frozen=True)
class AnalyticScenario:
    g_sd: float
    g_sa: tuple[float, ...] = ()
    g_ad: tuple[float, ...] = ()
    alpha: float | None = None
    beta: float | None = None
    phi: float = 0.0
    gamma: float | None = None
    gamma_swp: float | None = None
    f: float = 1.0
    minislots: int = 1
    contention_prob: tuple[float, ...] = ()

    def __post_init__(self):
        for name in ("g_sa", "g_ad", "contention_prob"):
            object.__setattr__(self, name, tuple(float(x) for x in getattr(self, name)))
        k = len(self.g_sa)
        if len(self.g_ad) != k or len(self.contention_prob) != k:
            raise ValueError("g_sa, g_ad and contention_prob need one entry per relay")
        if not self.g_sd > 0 or any(not g > 0 for g in self.g_sa + self.g_ad):
            raise ValueError("mean received powers must be > 0")
        for name in ("alpha", "beta", "gamma", "gamma_swp"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be > 0")
        if self.phi < 0:
            raise ValueError("phi must be >= 0")
        if not 0 < self.f <= 1:
            raise ValueError("f must lie in (0, 1]")
        if self.minislots < 1:
            raise ValueError("minislots must be >= 1")
        for a, p in enumerate(self.contention_prob):
            if not 0 <= p <= 1:
                raise ValueError(f"contention_prob[{a}] = {p} outside [0, 1]")

    @property
    def k_r(self) -> int:
        return len(self.g_sa)

    def with_p(self, p: Sequence[float]) -> "AnalyticScenario":
        return replace(self, contention_prob=tuple(p))

    def threshold(self, mode) -> float:
        name = {1: "alpha", 2: "beta", "sm": "gamma"}[mode]
        v = getattr(self, name)
        if v is None:
            raise ValueError(f"scenario has no {name} threshold")
        return v


@dataclass(frozen=True)
class SelectionProbs:
    q_by_relay: tuple[float, ...]
    q_none: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "q_by_relay", tuple(self.q_by_relay))
        object.__setattr__(self, "q_none", 1.0 - math.fsum(self.q_by_relay))


def tail(x: float, mean: float) -> float:
    """P(X >= x) for an exponential received power with the given mean."""
    return _exp(-x / mean)


def rho(a: int, mode, s: AnalyticScenario) -> float:
    """Probability that relay `a` decodes the source's slot-1 transmission."""
    return tail(s.threshold(mode), s.g_sa[a])


def _rhos(mode, s: AnalyticScenario) -> list[float]:
    th = s.threshold(mode)
    return [tail(th, g) for g in s.g_sa]


def _u_from(p: Sequence[float], r: Sequence[float]) -> list[float]:
    active = [pa * ra for pa, ra in zip(p, r)]
    out = []
    for a, x in enumerate(active):
        rest = 1.0
        for c, y in enumerate(active):
            if c != a:
                rest *= 1.0 - y
        out.append(x * rest)
    return out


def u(a: int, mode, s: AnalyticScenario) -> float:
    """Probability that relay `a` alone transmits in a given minislot.

    The other relays are either undecoded or decoded and silent, which
    collapses to prod_{c != a} (1 - p_c rho_c).
    """
    return _u_from(s.contention_prob, _rhos(mode, s))[a]


def _q_from_u(uu: Sequence[float], K: int) -> list[float]:
    # Minislots are identically distributed, so the subset sums reduce to
    # binomial counts: j slots won by `a`, m slots with no winner, the rest
    # won by other relays; `a` is picked with probability j / (K - m).
    total = math.fsum(uu)
    none = 1.0 - total
    out = []
    for ua in uu:
        others = total - ua
        q = 0.0
        for j in range(1, K + 1):
            inner = 0.0
            for m in range(0, K - j + 1):
                inner += (j / (K - m)) * math.comb(K - j, m) * none**m * others ** (K - j - m)
            q += math.comb(K, j) * ua**j * inner
        out.append(q)
    return out


def selection_probs(s: AnalyticScenario, mode) -> SelectionProbs:
    uu = _u_from(s.contention_prob, _rhos(mode, s))
    return SelectionProbs(tuple(_q_from_u(uu, s.minislots)))


def q_selected(a: int, mode, s: AnalyticScenario) -> float:
    return selection_probs(s, mode).q_by_relay[a]


MAX_ENUM_RELAYS = 10
MAX_ENUM_MINISLOTS = 6
MAX_ENUM_WORK = 5_000_000


def enumerate_selection_probs(
    s: AnalyticScenario, mode, shared_decode: bool = False, slot_weighted: bool = True
) -> SelectionProbs:
    """Exact selection probabilities by brute-force enumeration.

    With ``shared_decode=False`` each relay's state (undecoded, decoded and
    silent, decoded and transmitting) is drawn independently per minislot,
    which is the model behind the closed form.  ``shared_decode=True`` fixes
    the decoded set once for all K minislots, as in the actual protocol.
    """
    K, kr = s.minislots, s.k_r
    if kr > MAX_ENUM_RELAYS or K > MAX_ENUM_MINISLOTS:
        raise ValueError(f"enumeration limited to K_r <= {MAX_ENUM_RELAYS}, K <= {MAX_ENUM_MINISLOTS}")
    r = _rhos(mode, s)
    p = s.contention_prob
    q = [0.0] * kr

    def accumulate(slot_dist: dict[int, float], weight: float):
        # slot_dist maps outcome (relay index, or -1 for no winner) -> prob
        outcomes = list(slot_dist.items())
        for seq in itertools.product(outcomes, repeat=K):
            prob = weight
            for _, pr in seq:
                prob *= pr
            if prob == 0.0:
                continue
            wins = [o for o, _ in seq if o >= 0]
            if not wins:
                continue
            if slot_weighted:
                for o in wins:
                    q[o] += prob / len(wins)
            else:
                distinct = set(wins)
                for o in distinct:
                    q[o] += prob / len(distinct)

    if not shared_decode:
        if 3**kr + (kr + 1) ** K > MAX_ENUM_WORK:
            raise ValueError("instance too large to enumerate")
        dist: dict[int, float] = {}
        states = [(1.0 - r[a], r[a] * (1.0 - p[a]), r[a] * p[a]) for a in range(kr)]
        for combo in itertools.product(range(3), repeat=kr):
            prob = 1.0
            for a, st in enumerate(combo):
                prob *= states[a][st]
            senders = [a for a, st in enumerate(combo) if st == 2]
            key = senders[0] if len(senders) == 1 else -1
            dist[key] = dist.get(key, 0.0) + prob
        accumulate(dist, 1.0)
        return SelectionProbs(tuple(q))

    work = sum(math.comb(kr, d) * (2**d + (d + 1) ** K) for d in range(kr + 1))
    if work > MAX_ENUM_WORK:
        raise ValueError("instance too large to enumerate")
    for decoded in itertools.product((False, True), repeat=kr):
        w = 1.0
        for a, dflag in enumerate(decoded):
            w *= r[a] if dflag else 1.0 - r[a]
        if w == 0.0:
            continue
        members = [a for a in range(kr) if decoded[a]]
        dist = {}
        for pattern in itertools.product((False, True), repeat=len(members)):
            prob = 1.0
            for a, sends in zip(members, pattern):
                prob *= p[a] if sends else 1.0 - p[a]
            senders = [a for a, sends in zip(members, pattern) if sends]
            key = senders[0] if len(senders) == 1 else -1
            dist[key] = dist.get(key, 0.0) + prob
        accumulate(dist, w)
    return SelectionProbs(tuple(q))


def _mixture(q: SelectionProbs, s: AnalyticScenario, lo: float, hi: float) -> float:
    """P(lo <= X < hi) where X is the slot-2 received power of the selected transmitter."""

    def band(g):
        if hi <= lo:
            return 0.0
        upper = 0.0 if math.isinf(hi) else tail(hi, g)
        return tail(lo, g) - upper

    return math.fsum(qa * band(g) for qa, g in zip(q.q_by_relay, s.g_ad)) + q.q_none * band(s.g_sd)


def _check_amc(s: AnalyticScenario):
    if s.alpha is None or s.beta is None or s.gamma_swp is None:
        raise ValueError("AMC evaluation needs alpha, beta and gamma_swp")
    if s.alpha > s.gamma_swp:
        raise ValueError("switching point must not lie below alpha")


def decode_probs_amc(s: AnalyticScenario) -> tuple[float, float, float, float]:
    """(p11, p21, p12, p22) exactly as the textbook expressions define them."""
    _check_amc(s)
    g = s.g_sd
    p11 = tail(s.alpha, g) - tail(s.gamma_swp, g)
    p21 = tail(s.beta, g)
    q1 = selection_probs(s, 1)
    q2 = selection_probs(s, 2)
    p12 = _mixture(q1, s, s.phi, s.gamma_swp)
    p22 = _mixture(q2, s, s.gamma_swp, math.inf)
    return p11, p21, p12, p22


def _amc_sum(f, p11, p21, w1, w2, m12, m22, m21_2, m22_1):
    # Six success paths; coefficients are f*k / coded bits of the path
    # (Mode 1 sends 3k coded bits, Mode 2 sends 1.5k).
    return (
        f / 3 * p11
        + 2 * f / 3 * p21
        + f / 3 * w2 * m22
        + f / 6 * w1 * m12
        + 2 * f / 9 * w1 * m22_1
        + 2 * f / 9 * w2 * m21_2
    )


def r_app_amc(s: AnalyticScenario, form: str = "paths") -> float:
    """Two-slot AMC throughput approximation.

    ``form="printed"`` evaluates the textbook six-term expression literally:
    slot-2 terms are weighted by ``1 - p11`` and ``1 - p21`` and each slot-2
    probability uses the selection probabilities of its own mode.

    ``form="paths"`` (default) weights each slot-2 term by the probability
    that slot 1 used the given mode *and* failed, and computes the slot-2
    probabilities from the relay decode states left by that slot-1 mode.
    Mode 2 in slot 1 succeeds only above both beta and the switching point.
    This is the exact expected throughput when every kept slot-2
    transmission completes decoding.
    """
    _check_amc(s)
    g, f = s.g_sd, s.f
    if form == "printed":
        p11, p21, p12, p22 = decode_probs_amc(s)
        return _amc_sum(f, p11, p21, 1 - p11, 1 - p21, p12, p22, p12, p22)
    if form != "paths":
        raise ValueError(f"unknown form {form!r}")
    sw = s.gamma_swp
    m2_floor = max(s.beta, sw)
    ok1 = tail(s.alpha, g) - tail(sw, g)
    ok2 = tail(m2_floor, g)
    fail1 = 1.0 - tail(s.alpha, g)
    fail2 = tail(sw, g) - tail(m2_floor, g)
    q1 = selection_probs(s, 1)
    q2 = selection_probs(s, 2)
    lo2 = max(sw, s.phi)
    m12 = _mixture(q1, s, s.phi, sw)
    m22_1 = _mixture(q1, s, lo2, math.inf)
    m21_2 = _mixture(q2, s, s.phi, sw)
    m22 = _mixture(q2, s, lo2, math.inf)
    return _amc_sum(f, ok1, ok2, fail1, fail2, m12, m22, m21_2, m22_1)


def tau_probs(s: AnalyticScenario) -> tuple[float, float]:
    if s.gamma is None:
        raise ValueError("single-mode evaluation needs gamma")
    tau1 = tail(s.gamma, s.g_sd)
    tau2 = _mixture(selection_probs(s, "sm"), s, s.phi, math.inf)
    return tau1, tau2


def r_app_sm(s: AnalyticScenario) -> float:
    """Two-slot single-mode (rate-1/2) throughput approximation."""
    tau1, tau2 = tau_probs(s)
    return s.f / 2 * tau1 + s.f / 4 * (1 - tau1) * tau2


def probability_grid(step: float) -> np.ndarray:
    if not 0 < step <= 1:
        raise ValueError("grid step must lie in (0, 1]")
    n = int(round(1.0 / step))
    if not math.isclose(n * step, 1.0, rel_tol=0, abs_tol=1e-9):
        raise ValueError("grid step must divide 1")
    return np.round(np.linspace(0.0, 1.0, n + 1), 12)


MAX_GRID_RELAYS = 4


def optimize_contention(
    s: AnalyticScenario, objective: str = "amc", grid_step: float = 0.01, form: str = "paths"
) -> tuple[tuple[float, ...], float]:
    """Exhaustive grid search over contention probabilities.

    Points are visited in lexicographic order and only a strict improvement
    replaces the incumbent, so ties resolve to the smallest p-vector.
    """
    if s.k_r > MAX_GRID_RELAYS:
        raise ValueError(f"grid search supports at most {MAX_GRID_RELAYS} relays; simulate larger cases")
    if objective == "amc":
        fn = lambda sc: r_app_amc(sc, form)  # noqa: E731
    elif objective == "sm":
        fn = r_app_sm
    else:
        raise ValueError(f"unknown objective {objective!r}")
    grid = [float(x) for x in probability_grid(grid_step)]
    best_p: tuple[float, ...] = ()
    best = -math.inf
    for p in itertools.product(grid, repeat=s.k_r):
        val = fn(s.with_p(p))
        if val > best:
            best, best_p = val, p
    return best_p, best


def switchpoint_grid(s: AnalyticScenario, step_db: float = 0.25, span_db: float | None = None) -> list[float]:
    """Switching points from alpha upward in `step_db` steps (default: up to beta)."""
    if span_db is None:
        span_db = 10 * math.log10(s.beta / s.alpha)
    n = int(math.floor(span_db / step_db + 1e-9))
    return [s.alpha * 10 ** (i * step_db / 10) for i in range(n + 1)]


def optimize_switchpoint(
    s: AnalyticScenario, grid: Sequence[float], form: str = "paths"
) -> tuple[float, float]:
    if not grid:
        raise ValueError("empty switching-point grid")
    best_sw, best = grid[0], -math.inf
    for sw in grid:
        val = r_app_amc(replace(s, gamma_swp=sw), form)
        if val > best:
            best, best_sw = val, sw
    return best_sw, best


@dataclass(frozen=True)
class OverheadInputs:
    d_sd: Fraction = Fraction(100)
    training_us: Fraction = Fraction(20)
    ofdm_symbol_us: Fraction = Fraction(4)
    data_symbol_us: Fraction = Fraction(16, 5)
    data_guard_us: Fraction = Fraction(4, 5)
    minislots: int = 3
    length_bytes: int = 2048
    bits_per_data_symbol: int = 24
    service_bits: int = 16
    tail_bits: int = 6
    guard_resolution_us: Fraction = Fraction(1, 10)
    speed_of_light: Fraction = Fraction(300_000_000)

    def __post_init__(self):
        for name in ("d_sd", "training_us", "ofdm_symbol_us", "data_symbol_us", "data_guard_us",
                     "guard_resolution_us", "speed_of_light"):
            v = Fraction(getattr(self, name))
            if v <= 0:
                raise ValueError(f"{name} must be > 0")
            object.__setattr__(self, name, v)
        if self.minislots < 1 or self.bits_per_data_symbol < 1 or self.length_bytes < 0:
            raise ValueError("minislots and bits per symbol must be positive")


@dataclass(frozen=True)
class OverheadReport:
    propagation_us: Fraction
    ack_interval_us: Fraction
    minislot_us: Fraction
    contention_us: Fraction
    announce_us: Fraction
    data_symbols: int
    data_us: Fraction
    guard_total_us: Fraction
    data_interval_ratio: Fraction
    slot_ratio: Fraction

    @property
    def data_interval_percent(self) -> float:
        return round(float(self.data_interval_ratio * 100), 2)

    @property
    def slot_percent(self) -> float:
        return round(float(self.slot_ratio * 100), 2)


def overhead_report(inputs: OverheadInputs) -> OverheadReport:
    """Per-slot signaling overhead of the four-interval frame, in exact arithmetic.

    The propagation delay is quantized to the guard-interval resolution
    (nearest multiple) before it enters any interval.
    """
    res = inputs.guard_resolution_us
    raw = inputs.d_sd / inputs.speed_of_light * 1_000_000
    prop = round(raw / res) * res
    one_symbol = inputs.training_us + inputs.ofdm_symbol_us + prop
    contention = inputs.minislots * one_symbol
    bits = inputs.service_bits + 8 * inputs.length_bytes + inputs.tail_bits
    symbols = -(-bits // inputs.bits_per_data_symbol)
    data = symbols * inputs.data_symbol_us
    guards = symbols * inputs.data_guard_us
    fourth = guards + inputs.training_us + prop
    return OverheadReport(
        propagation_us=prop,
        ack_interval_us=one_symbol,
        minislot_us=one_symbol,
        contention_us=contention,
        announce_us=one_symbol,
        data_symbols=symbols,
        data_us=data,
        guard_total_us=guards,
        data_interval_ratio=fourth / data,
        slot_ratio=(fourth + one_symbol + contention + one_symbol) / data,
    )
