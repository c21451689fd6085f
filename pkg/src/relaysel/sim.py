"""Monte Carlo engine for the full packet episode and parameter sweeps.

Every trial owns a fixed-size block of uniforms taken from a Philox stream
keyed by ``(seed, sweep index)``; trial ``t`` starts at a counter offset
proportional to ``t``.  Results therefore do not depend on how trials are
chunked or spread over worker processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from . import _episode_py, kernel
from .contention import STRATEGY_CODES, ContentionConfig, RelayState, Strategy
from .link import (
    AmcPolicy,
    ChaseAccumulator,
    RcpcSchedule,
    TransmissionMode,
    chase_update,
    decode_success_amc,
    governing_threshold,
    rcpc_decode_success,
)
from .netmodel import ChannelParams, Topology, average_gain, db_to_linear, distance

TransmissionPlan = Union[AmcPolicy, RcpcSchedule]

DECODING_MODES = {"chase": _episode_py.DECODE_CHASE, "approx": _episode_py.DECODE_APPROX}

# doubles per chunk handed to the kernel; keeps memory bounded for big relay sets
_CHUNK_DOUBLES = 1 << 22


@dataclass(frozen=True)
class ExperimentConfig:
    topology: Topology
    channel: ChannelParams
    contention: ContentionConfig
    plan: TransmissionPlan
    slot_limit: int = 2
    trials: int = 10_000
    seed: int = 0
    f: float = 1.0
    info_bits: int = 1912
    discard_threshold_db: float = -math.inf
    decoding: str = "chase"
    overhear: bool = False
    sweep: tuple[str, tuple] | None = None
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.slot_limit < 1:
            raise ValueError("slot_limit must be >= 1")
        if self.slot_limit > 127:
            raise ValueError("slot_limit must be <= 127")
        if self.decoding not in DECODING_MODES:
            raise ValueError(f"decoding must be one of {sorted(DECODING_MODES)}")
        if isinstance(self.plan, RcpcSchedule) and self.slot_limit > len(self.plan.rates):
            raise ValueError("slot_limit exceeds the number of RCPC stages")
        if not 0 < self.f <= 1:
            raise ValueError("f must lie in (0, 1]")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.overhear and self.decoding != "chase":
            raise ValueError("overheard relay decoding requires chase decoding")
        c = self.contention
        if c.strategy.contends and len(c.contention_prob) != self.topology.k_r:
            raise ValueError("need one contention probability per relay")

    @property
    def phi(self) -> float:
        return db_to_linear(self.discard_threshold_db)


@dataclass(frozen=True)
class TrialRecord:
    slots_used: int
    transmitters: tuple  # "source" or relay id, per slot
    modes: tuple  # mode_id (AMC) or 1-based RCPC stage, per slot
    slot_snr: tuple  # linear SNR at the destination, per slot
    success: bool
    coded_bits: float
    realized_rate: float

    def __post_init__(self):
        if self.slots_used > len(self.transmitters) and self.transmitters:
            raise ValueError("inconsistent record")
        if not self.success and self.realized_rate != 0:
            raise ValueError("failed trial must have zero rate")


@dataclass(frozen=True)
class ThroughputEstimate:
    mean: float
    stderr: float
    trials: int
    ci95: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "ci95", 1.96 * self.stderr)

    @classmethod
    def from_samples(cls, x: np.ndarray) -> "ThroughputEstimate":
        n = len(x)
        if n == 0:
            raise ValueError("no samples")
        se = float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(float(np.mean(x)), se, n)


@dataclass
class TrialBatch:
    """Columnar trial records; slot-indexed arrays are padded past ``slots``."""

    success: np.ndarray
    slots: np.ndarray
    bits: np.ndarray
    rate: np.ndarray
    tx: np.ndarray
    mode: np.ndarray
    snr: np.ndarray
    metric: np.ndarray
    gthr: np.ndarray

    def __len__(self):
        return len(self.success)

    def estimate(self) -> ThroughputEstimate:
        return ThroughputEstimate.from_samples(self.rate)

    @classmethod
    def concat(cls, parts: Sequence["TrialBatch"]) -> "TrialBatch":
        names = cls.__dataclass_fields__
        return cls(**{n: np.concatenate([getattr(p, n) for p in parts]) for n in names})


# kernel inputs -----------------------------------------------------------


@dataclass(frozen=True)
class _KernelSpec:
    plan: int
    mode_thr: np.ndarray
    mode_bits: np.ndarray
    switch_thr: np.ndarray
    stage_thr: np.ndarray
    stage_bits: np.ndarray
    mode_ids: tuple
    phi: float
    f_k: float
    slot_limit: int
    decoding: int
    overhear: int
    strategy: int
    minislots: int
    p: np.ndarray
    eta: float
    beta: float
    q: float
    slot_weighted: int
    mean_sd: float
    mean_sr: np.ndarray
    mean_rd: np.ndarray
    mean_rr: np.ndarray
    dist: np.ndarray

    @property
    def kr(self) -> int:
        return len(self.mean_sr)

    @property
    def stride(self) -> int:
        return _episode_py.slot_stride(self.kr, self.minislots)

    @property
    def block(self) -> int:
        return self.slot_limit * self.stride

    @property
    def padded_block(self) -> int:
        return -(-self.block // 4) * 4


def mean_snr(params: ChannelParams, d: float) -> float:
    """Average linear SNR of a link of length `d`."""
    return params.tx_energy_linear * average_gain(params, d) / params.noise_linear


def _gain_threshold_to_snr(db: float, params: ChannelParams) -> float:
    if db == -math.inf:
        return -1.0
    if db == math.inf:
        return math.inf
    return db_to_linear(db) * params.tx_energy_linear / params.noise_linear


def build_kernel_spec(config: ExperimentConfig) -> _KernelSpec:
    topo, ch, c = config.topology, config.channel, config.contention
    plan = config.plan
    k = config.info_bits
    empty = np.zeros(0)
    if isinstance(plan, AmcPolicy):
        kind = _episode_py.PLAN_MODES
        mode_thr = np.array([m.threshold for m in plan.modes])
        mode_bits = np.array([m.coded_bits(k) for m in plan.modes])
        switch_thr = np.array(plan.switch_thresholds)
        stage_thr = stage_bits = empty
        mode_ids = tuple(m.mode_id for m in plan.modes)
    else:
        if plan.info_bits != k:
            raise ValueError("RCPC schedule and experiment disagree on info bits")
        kind = _episode_py.PLAN_RCPC
        mode_thr = mode_bits = switch_thr = empty
        stage_thr = np.array(plan.thresholds)
        stage_bits = np.array([float(b) for b in plan.stage_bits()])
        mode_ids = tuple(range(1, len(plan.rates) + 1))

    dest = topo.destination
    kr = topo.k_r
    mean_sr = np.array([mean_snr(ch, distance(topo.source, r)) for r in topo.relays])
    mean_rd = np.array([mean_snr(ch, distance(r, dest)) for r in topo.relays])
    mean_rr = np.zeros(kr * kr)
    if config.overhear:
        for a, ra in enumerate(topo.relays):
            for b, rb in enumerate(topo.relays):
                if a != b:
                    mean_rr[a * kr + b] = mean_snr(ch, distance(ra, rb))
    dist = np.array([distance(r, dest) for r in topo.relays])
    p = np.array(c.contention_prob) if c.strategy.contends else np.zeros(kr)
    return _KernelSpec(
        plan=kind,
        mode_thr=mode_thr,
        mode_bits=mode_bits,
        switch_thr=switch_thr,
        stage_thr=stage_thr,
        stage_bits=stage_bits,
        mode_ids=mode_ids,
        phi=config.phi,
        f_k=config.f * k,
        slot_limit=config.slot_limit,
        decoding=DECODING_MODES[config.decoding],
        overhear=int(config.overhear),
        strategy=STRATEGY_CODES[c.strategy],
        minislots=c.minislots if c.strategy.contends else 0,
        p=p,
        eta=_gain_threshold_to_snr(c.eta_opp_db, ch),
        beta=_gain_threshold_to_snr(c.beta_opp_db, ch),
        q=c.winner_bias,
        slot_weighted=int(c.slot_weighted),
        mean_sd=mean_snr(ch, topo.d_sd),
        mean_sr=mean_sr,
        mean_rd=mean_rd,
        mean_rr=mean_rr,
        dist=dist,
    )


def _empty_batch(n: int, slot_limit: int) -> TrialBatch:
    return TrialBatch(
        success=np.zeros(n, dtype=np.int8),
        slots=np.zeros(n, dtype=np.int8),
        bits=np.zeros(n),
        rate=np.zeros(n),
        tx=np.zeros((n, slot_limit), dtype=np.intc),
        mode=np.zeros((n, slot_limit), dtype=np.int8),
        snr=np.zeros((n, slot_limit)),
        metric=np.zeros(n),
        gthr=np.zeros(n),
    )


def execute(spec: _KernelSpec, U: np.ndarray, run_batch=None) -> TrialBatch:
    """Run the episode kernel over uniform blocks `U` (one row per trial)."""
    run_batch = run_batch or kernel.run_batch
    U = np.ascontiguousarray(U[:, : spec.block], dtype=np.float64)
    out = _empty_batch(U.shape[0], spec.slot_limit)
    run_batch(
        U, out.success, out.slots, out.bits, out.rate, out.tx, out.mode, out.snr,
        out.metric, out.gthr,
        spec.plan, spec.mode_thr, spec.mode_bits, spec.switch_thr, spec.stage_thr,
        spec.stage_bits, spec.phi, spec.f_k, spec.slot_limit, spec.decoding,
        spec.overhear, spec.strategy, spec.minislots, spec.p, spec.eta, spec.beta,
        spec.q, spec.slot_weighted, spec.mean_sd, spec.mean_sr, spec.mean_rd,
        spec.mean_rr, spec.dist,
    )
    return out


# randomness ----------------------------------------------------------------


def stream_key(seed: int, sweep_index: int) -> np.ndarray:
    ss = np.random.SeedSequence(seed, spawn_key=(sweep_index,))
    return ss.generate_state(2, np.uint64)


def uniform_blocks(key: np.ndarray, padded_block: int, start: int, count: int) -> np.ndarray:
    """Uniform blocks for trials ``start .. start+count-1``."""
    per_trial = padded_block // 4
    counter = np.array([start * per_trial, 0, 0, 0], dtype=np.uint64)
    bg = np.random.Philox(counter=counter, key=key)
    return np.random.Generator(bg).random(count * padded_block).reshape(count, padded_block)


def _chunks(trials: int, padded_block: int) -> list[tuple[int, int]]:
    size = max(1, _CHUNK_DOUBLES // padded_block)
    return [(s, min(size, trials - s)) for s in range(0, trials, size)]


def _run_chunk(args):
    spec, key, start, count, use_python = args
    U = uniform_blocks(key, spec.padded_block, start, count)
    return execute(spec, U, _episode_py.run_batch if use_python else None)


def run_trials(
    config: ExperimentConfig, sweep_index: int = 0, workers: int | None = None, backend: str | None = None
) -> TrialBatch:
    """All trials of one configuration, in trial order."""
    spec = build_kernel_spec(config)
    key = stream_key(config.seed, sweep_index)
    use_python = backend == "python"
    jobs = [(spec, key, s, n, use_python) for s, n in _chunks(config.trials, spec.padded_block)]
    workers = config.workers if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    else:
        parts = [_run_chunk(j) for j in jobs]
    return TrialBatch.concat(parts)


# per-packet API ------------------------------------------------------------


def record_at(batch: TrialBatch, spec: _KernelSpec, t: int) -> TrialRecord:
    n = int(batch.slots[t])
    tx = tuple("source" if x == -1 else int(x) for x in batch.tx[t, :n])
    modes = tuple(spec.mode_ids[int(m)] for m in batch.mode[t, :n])
    return TrialRecord(
        slots_used=n,
        transmitters=tx,
        modes=modes,
        slot_snr=tuple(float(x) for x in batch.snr[t, :n]),
        success=bool(batch.success[t]),
        coded_bits=float(batch.bits[t]),
        realized_rate=float(batch.rate[t]),
    )


def simulate_packet(rng: np.random.Generator, config: ExperimentConfig) -> TrialRecord:
    """One protocol episode driven by `rng` (pure-Python kernel)."""
    spec = build_kernel_spec(config)
    U = rng.random((1, spec.block))
    batch = execute(spec, U, _episode_py.run_batch)
    return record_at(batch, spec, 0)


def relay_decode_update(
    rng: np.random.Generator,
    topology: Topology,
    params: ChannelParams,
    mode: TransmissionMode,
    states: Sequence[RelayState],
) -> list[RelayState]:
    """Relays that have not decoded yet try to decode the source's transmission.

    Each undecoded relay draws a fresh source-link fade; it decodes when its
    SNR meets the mode threshold.  Decoded relays stay decoded.
    """
    out = []
    for s in states:
        if s.decoded:
            out.append(s)
            continue
        mean = mean_snr(params, distance(topology.source, topology.relays[s.relay_id]))
        snr = rng.exponential(mean)
        out.append(replace(s, decoded=bool(snr >= mode.threshold)))
    return out


# auditing ------------------------------------------------------------------


def audit(batch: TrialBatch, config: ExperimentConfig) -> list[int]:
    """Indices of trials whose success flag disagrees with replaying the
    recorded destination SNRs through the link-layer decoding rules."""
    spec = build_kernel_spec(config)
    plan = config.plan
    phi = config.phi
    bad = []
    for t in range(len(batch)):
        rec = record_at(batch, spec, t)
        if config.decoding == "approx":
            if isinstance(plan, AmcPolicy):
                first = next(m for m in plan.modes if m.mode_id == rec.modes[0]).threshold
            else:
                first = plan.thresholds[0]
            ok = rec.slot_snr[0] >= max(first, phi) or any(x >= phi for x in rec.slot_snr[1:])
        elif isinstance(plan, AmcPolicy):
            acc = ChaseAccumulator(phi, config.slot_limit)
            ok = False
            for snr, mid in zip(rec.slot_snr, rec.modes):
                mode = next(m for m in plan.modes if m.mode_id == mid)
                acc = chase_update(acc, snr, mode)
                if decode_success_amc(acc, plan):
                    ok = acc.combined_snr >= governing_threshold(acc.modes_used, plan)
                    break
        else:
            stages = plan.stage_bits()
            ok = any(
                rcpc_decode_success(
                    [(rec.slot_snr[i], float(stages[i])) for i in range(j)], plan, j, phi
                )
                for j in range(1, rec.slots_used + 1)
            )
        if ok != rec.success:
            bad.append(t)
    return bad


def rcpc_summary(batch: TrialBatch, config: ExperimentConfig) -> float:
    """Aggregate effective code rate of an RCPC run."""
    from .link import rcpc_effective_rate

    plan = config.plan
    if not isinstance(plan, RcpcSchedule):
        raise ValueError("RCPC summary needs an RCPC plan")
    stages = [float(b) for b in plan.stage_bits()]
    records = [(bool(ok), stages[: int(n)]) for ok, n in zip(batch.success, batch.slots)]
    return rcpc_effective_rate(records, plan)


# sweeps --------------------------------------------------------------------

SWEEP_PARAMS = (
    "contention.p",
    "contention.strategy",
    "contention.beta_opp_db",
    "contention.eta_opp_db",
    "channel.snr_db",
    "link.gamma_swp_db",
    "experiment.slot_limit",
)


def apply_sweep(config: ExperimentConfig, name: str, value) -> ExperimentConfig:
    c = config.contention
    if name == "contention.p":
        return replace(config, contention=replace(c, contention_prob=(float(value),) * config.topology.k_r))
    if name == "contention.strategy":
        return replace(config, contention=replace(c, strategy=Strategy(value)))
    if name == "contention.beta_opp_db":
        return replace(config, contention=replace(c, beta_opp_db=float(value)))
    if name == "contention.eta_opp_db":
        return replace(config, contention=replace(c, eta_opp_db=float(value)))
    if name == "channel.snr_db":
        ch = config.channel.with_average_snr(float(value), config.topology.d_sd)
        return replace(config, channel=ch)
    if name == "link.gamma_swp_db":
        plan = config.plan
        if not isinstance(plan, AmcPolicy) or len(plan.modes) != 2:
            raise ValueError("switching-point sweeps need a two-mode AMC plan")
        return replace(config, plan=AmcPolicy(plan.modes, (float(value),)))
    if name == "experiment.slot_limit":
        return replace(config, slot_limit=int(value))
    raise ValueError(f"unknown sweep parameter {name!r}; choose from {', '.join(SWEEP_PARAMS)}")


def run_sweep(config: ExperimentConfig, workers: int | None = None) -> list[tuple[object, ThroughputEstimate]]:
    """One estimate per sweep value; sweep value ``i`` uses stream ``(seed, i)``."""
    if config.sweep is None:
        return [(None, run_trials(config, 0, workers).estimate())]
    name, values = config.sweep
    out = []
    for i, v in enumerate(values):
        cfg = apply_sweep(config, name, v)
        out.append((v, run_trials(cfg, i, workers).estimate()))
    return out


CSV_COLUMNS = ("sweep_param", "sweep_value", "trials", "mean_throughput", "stderr", "ci95", "seed", "strategy")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, Strategy):
        return x.value
    if isinstance(x, (float, np.floating, Fraction)):
        return f"{float(x):.6g}"
    return str(x)


def sweep_csv(config: ExperimentConfig, results: Sequence[tuple[object, ThroughputEstimate]]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    name = config.sweep[0] if config.sweep else "none"
    for v, est in results:
        strategy = config.contention.strategy
        if name == "contention.strategy":
            strategy = Strategy(v)
        row = (name, v, est.trials, est.mean, est.stderr, est.ci95, config.seed, strategy)
        lines.append(",".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"
