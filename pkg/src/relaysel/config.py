"""Line-oriented ``key = value`` experiment configuration.

Sections: ``[topology] [channel] [contention] [link] [rcpc] [experiment]
[overhead]``.  Quantities carrying a physical unit must spell it in the
key name (``_db``, ``_m``, ``_hz``, ``_us``).  Unknown keys are rejected and
every error names the offending ``section.key`` and its line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from .analytic import AnalyticScenario, OverheadInputs
from .contention import ContentionConfig, Strategy
from .link import AmcPolicy, RcpcSchedule, TransmissionMode
from .netmodel import ChannelParams, Position, Topology, db_to_linear, distance, place_relays_uniform
from .sim import SWEEP_PARAMS, ExperimentConfig, mean_snr

DEFAULT_MINISLOTS = 10
DEFAULT_WINNER_BIAS = 0.75
DEFAULT_GRID_STEP = 0.01
DEFAULT_SWITCH_STEP_DB = 0.25


class ConfigError(ValueError):
    pass


# key -> kind; kinds drive parsing
SCHEMA: dict[str, dict[str, str]] = {
    "topology": {
        "destination_m": "point",
        "relays_m": "points",
        "relay_count": "int",
        "placement_seed": "int",
        "min_separation_m": "float",
    },
    "channel": {
        "carrier_frequency_hz": "float",
        "reference_distance_m": "float",
        "path_loss_exponent": "float",
        "noise_power_db": "float",
        "tx_power_above_noise_db": "float",
        "average_snr_db": "float",
        "bandwidth_hz": "float",
    },
    "contention": {
        "strategy": "str",
        "minislots": "int",
        "p": "floats",
        "eta_opp_db": "float",
        "beta_opp_db": "float",
        "q": "float",
        "selection": "str",
    },
    "link": {
        "plan": "str",
        "mode_labels": "strs",
        "mode_rates": "fracs",
        "mode_bits_per_symbol": "ints",
        "mode_thresholds_db": "floats",
        "switch_thresholds_db": "floats",
        "discard_threshold_db": "float",
        "f": "frac",
        "info_bits": "int",
    },
    "rcpc": {
        "rates": "fracs",
        "thresholds_db": "floats",
        "mother_memory": "int",
        "puncture_period": "int",
    },
    "experiment": {
        "trials": "int",
        "seed": "int",
        "slot_limit": "int",
        "decoding": "str",
        "overhear": "bool",
        "workers": "int",
        "sweep_param": "str",
        "sweep_values": "strs",
        "grid_step": "float",
        "switch_step_db": "float",
        "switch_span_db": "float",
    },
    "overhead": {
        "d_sd_m": "frac",
        "training_us": "frac",
        "ofdm_symbol_us": "frac",
        "data_symbol_us": "frac",
        "data_guard_us": "frac",
        "minislots": "int",
        "length_bytes": "int",
        "bits_per_data_symbol": "int",
        "guard_resolution_us": "frac",
    },
}

_UNIT_SUFFIXES = ("_db", "_m", "_hz", "_us")


@dataclass(frozen=True)
class Entry:
    value: object
    line: int


@dataclass(frozen=True)
class ParsedConfig:
    experiment: ExperimentConfig | None
    scenario: AnalyticScenario | None
    overhead: OverheadInputs | None
    grid_step: float = DEFAULT_GRID_STEP
    switch_step_db: float = DEFAULT_SWITCH_STEP_DB
    switch_span_db: float | None = None
    source: str = "<string>"


def _number(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "+inf"):
        return math.inf
    if t == "-inf":
        return -math.inf
    if "/" in t:
        return float(Fraction(t))
    return float(t)


def _convert(kind: str, raw: str):
    items = [x.strip() for x in raw.replace(";", ",").split(",") if x.strip()]
    if kind == "str":
        return raw.strip()
    if kind == "strs":
        return items
    if kind == "int":
        v = _number(raw)
        if not v.is_integer():
            raise ValueError(f"expected an integer, got {raw.strip()!r}")
        return int(v)
    if kind == "ints":
        out = [_convert("int", x) for x in items]
        return out
    if kind == "float":
        return _number(raw)
    if kind == "floats":
        return [_number(x) for x in items]
    if kind == "frac":
        return Fraction(raw.strip())
    if kind == "fracs":
        return [Fraction(x) for x in items]
    if kind == "bool":
        t = raw.strip().lower()
        if t in ("1", "true", "yes", "on"):
            return True
        if t in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw.strip()!r}")
    if kind == "point":
        xs = [_number(x) for x in raw.replace(",", " ").split()]
        if len(xs) != 2:
            raise ValueError("expected 'x, y'")
        return Position(*xs)
    if kind == "points":
        pts = []
        for chunk in raw.split(";"):
            if chunk.strip():
                pts.append(_convert("point", chunk))
        return pts
    raise AssertionError(kind)


def read_entries(text: str, source: str = "<string>") -> dict[str, Entry]:
    entries: dict[str, Entry] = {}
    section = None
    for n, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if body.startswith("["):
            if not body.endswith("]"):
                raise ConfigError(f"{source}:{n}: malformed section header {body!r}")
            section = body[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"{source}:{n}: unknown section [{section}]")
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{n}: expected 'key = value', got {body!r}")
        key, raw = (x.strip() for x in body.split("=", 1))
        if section is None:
            raise ConfigError(f"{source}:{n}: key {key!r} appears before any section")
        full = f"{section}.{key}"
        kind = SCHEMA[section].get(key)
        if kind is None:
            hint = ""
            for suf in _UNIT_SUFFIXES:
                if key + suf in SCHEMA[section]:
                    hint = f" (unit suffix required: {key + suf})"
            raise ConfigError(f"{source}:{n}: unknown key {full!r}{hint}")
        if full in entries:
            raise ConfigError(f"{source}:{n}: duplicate key {full!r} (first on line {entries[full].line})")
        try:
            value = _convert(kind, raw)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{source}:{n}: malformed value for {full!r}: {exc}") from None
        entries[full] = Entry(value, n)
    return entries


class _Lookup:
    def __init__(self, entries: dict[str, Entry], source: str):
        self.entries = entries
        self.source = source
        self.missing: list[str] = []

    def get(self, key, default=None):
        e = self.entries.get(key)
        return default if e is None else e.value

    def has(self, key):
        return key in self.entries

    def need(self, key):
        if key not in self.entries:
            self.missing.append(key)
            return None
        return self.entries[key].value

    def fail(self, key, msg):
        e = self.entries.get(key)
        where = f"{self.source}:{e.line}" if e else self.source
        raise ConfigError(f"{where}: {key!r}: {msg}")

    def check_missing(self):
        if self.missing:
            raise ConfigError(f"{self.source}: missing required keys: {', '.join(self.missing)}")


def _sections(entries) -> set[str]:
    return {k.split(".", 1)[0] for k in entries}


def _topology(L: _Lookup) -> Topology | None:
    dest = L.need("topology.destination_m")
    if L.has("topology.relays_m") and L.has("topology.relay_count"):
        L.fail("topology.relay_count", "give either relays_m or relay_count, not both")
    if dest is None:
        return None
    if L.has("topology.relay_count"):
        k = L.get("topology.relay_count")
        if k < 0:
            L.fail("topology.relay_count", "must be >= 0")
        if dest.y != 0:
            L.fail("topology.destination_m", "random placement needs the destination on the x axis")
        rng = np.random.default_rng(L.get("topology.placement_seed", 0))
        sep = L.get("topology.min_separation_m", 1.0)
        return place_relays_uniform(rng, k, dest.x, sep)
    try:
        return Topology(dest, tuple(L.get("topology.relays_m", [])))
    except ValueError as exc:
        L.fail("topology.relays_m", str(exc))


def _channel(L: _Lookup, topo: Topology | None) -> ChannelParams:
    kw = {}
    for key, field in (
        ("carrier_frequency_hz", "carrier_frequency"),
        ("reference_distance_m", "reference_distance"),
        ("path_loss_exponent", "path_loss_exponent"),
        ("noise_power_db", "noise_power_db"),
        ("tx_power_above_noise_db", "tx_power_above_noise_db"),
        ("bandwidth_hz", "bandwidth"),
    ):
        if L.has(f"channel.{key}"):
            kw[field] = L.get(f"channel.{key}")
    try:
        ch = ChannelParams(**kw)
    except ValueError as exc:
        raise ConfigError(f"{L.source}: [channel]: {exc}") from None
    if L.has("channel.average_snr_db"):
        if L.has("channel.tx_power_above_noise_db"):
            L.fail("channel.average_snr_db", "conflicts with tx_power_above_noise_db")
        if topo is not None:
            ch = ch.with_average_snr(L.get("channel.average_snr_db"), topo.d_sd)
    return ch


def _plan(L: _Lookup):
    plan = L.need("link.plan")
    if plan is None:
        return None
    info_bits = L.get("link.info_bits", 1912)
    if plan in ("amc", "single"):
        rates = L.need("link.mode_rates")
        bps = L.need("link.mode_bits_per_symbol")
        thr = L.need("link.mode_thresholds_db")
        if rates is None or bps is None or thr is None:
            return None
        if not len(rates) == len(bps) == len(thr):
            L.fail("link.mode_rates", "mode_rates, mode_bits_per_symbol and mode_thresholds_db differ in length")
        labels = L.get("link.mode_labels") or [f"mode {i + 1}" for i in range(len(rates))]
        if len(labels) != len(rates):
            L.fail("link.mode_labels", "one label per mode is required")
        try:
            modes = tuple(
                TransmissionMode(i + 1, labels[i], float(rates[i]), bps[i], thr[i]) for i in range(len(rates))
            )
        except ValueError as exc:
            L.fail("link.mode_rates", str(exc))
        if plan == "single":
            if len(modes) != 1:
                L.fail("link.mode_rates", "a single-mode plan takes exactly one mode")
            if L.has("link.switch_thresholds_db"):
                L.fail("link.switch_thresholds_db", "not used by a single-mode plan")
            return AmcPolicy.single(modes[0])
        sw = L.need("link.switch_thresholds_db")
        if sw is None:
            return None
        try:
            return AmcPolicy(modes, tuple(sw))
        except ValueError as exc:
            L.fail("link.switch_thresholds_db", str(exc))
    if plan == "rcpc":
        rates = L.need("rcpc.rates")
        thr = L.need("rcpc.thresholds_db")
        if rates is None or thr is None:
            return None
        try:
            return RcpcSchedule(
                tuple(rates),
                tuple(thr),
                mother_memory=L.get("rcpc.mother_memory", 6),
                puncture_period=L.get("rcpc.puncture_period", 8),
                info_bits=info_bits,
            )
        except ValueError as exc:
            L.fail("rcpc.rates", str(exc))
    L.fail("link.plan", f"unknown plan {plan!r}; choose amc, single or rcpc")


def _contention(L: _Lookup, topo: Topology | None) -> ContentionConfig | None:
    try:
        strategy = Strategy(L.get("contention.strategy", "ID"))
    except ValueError:
        L.fail("contention.strategy", f"unknown strategy; choose from {', '.join(s.value for s in Strategy)}")
    k_r = topo.k_r if topo is not None else 0
    p = L.get("contention.p")
    if p is None:
        if strategy.contends and k_r > 0:
            L.missing.append("contention.p")
            return None
        p = [0.0] * k_r
    for x in p:
        if not 0.0 <= x <= 1.0:
            L.fail("contention.p", f"probability {x} outside [0, 1]")
    if len(p) == 1 and k_r != 1:
        p = p * k_r
    if topo is not None and len(p) != k_r:
        L.fail("contention.p", f"expected {k_r} probabilities (one per relay), got {len(p)}")
    selection = L.get("contention.selection", "slot")
    if selection not in ("slot", "relay"):
        L.fail("contention.selection", "choose slot or relay")
    q = L.get("contention.q", DEFAULT_WINNER_BIAS)
    if strategy is Strategy.ID_CSI_1:
        if not 0.5 < q <= 1.0:
            L.fail("contention.q", "must satisfy 0.5 < q <= 1")
        if not L.has("contention.beta_opp_db"):
            L.missing.append("contention.beta_opp_db")
            return None
    try:
        return ContentionConfig(
            minislots=L.get("contention.minislots", DEFAULT_MINISLOTS),
            contention_prob=tuple(p),
            eta_opp_db=L.get("contention.eta_opp_db", -math.inf),
            strategy=strategy,
            beta_opp_db=L.get("contention.beta_opp_db", math.inf),
            winner_bias=q,
            slot_weighted=selection == "slot",
        )
    except ValueError as exc:
        L.fail("contention.minislots", str(exc))


def _sweep(L: _Lookup):
    name = L.get("experiment.sweep_param")
    values = L.get("experiment.sweep_values")
    if name is None and values is None:
        return None
    if name is None or values is None:
        L.fail("experiment.sweep_param", "sweep_param and sweep_values go together")
    if name not in SWEEP_PARAMS:
        L.fail("experiment.sweep_param", f"choose from {', '.join(SWEEP_PARAMS)}")
    if name == "contention.strategy":
        try:
            vals = tuple(Strategy(v).value for v in values)
        except ValueError as exc:
            L.fail("experiment.sweep_values", str(exc))
    elif name == "experiment.slot_limit":
        vals = tuple(int(v) for v in values)
    else:
        try:
            vals = tuple(_number(v) for v in values)
        except ValueError as exc:
            L.fail("experiment.sweep_values", str(exc))
        if name == "contention.p" and any(not 0 <= v <= 1 for v in vals):
            L.fail("experiment.sweep_values", "contention probabilities must lie in [0, 1]")
    return name, vals


def scenario_from(exp: ExperimentConfig) -> AnalyticScenario | None:
    """Closed-form inputs for AMC (two modes) and single-mode plans."""
    plan = exp.plan
    if not isinstance(plan, AmcPolicy) or len(plan.modes) > 2:
        return None
    ch, topo = exp.channel, exp.topology
    n0 = ch.noise_linear
    to_power = lambda snr: snr * n0  # noqa: E731
    dest = topo.destination
    kw = dict(
        g_sd=to_power(mean_snr(ch, topo.d_sd)),
        g_sa=tuple(to_power(mean_snr(ch, distance(topo.source, r))) for r in topo.relays),
        g_ad=tuple(to_power(mean_snr(ch, distance(r, dest))) for r in topo.relays),
        phi=exp.phi * n0,
        f=exp.f,
        minislots=max(1, exp.contention.minislots),
        contention_prob=exp.contention.contention_prob or (0.0,) * topo.k_r,
    )
    if len(plan.modes) == 1:
        kw["gamma"] = plan.modes[0].threshold * n0
    else:
        kw["alpha"] = plan.modes[0].threshold * n0
        kw["beta"] = plan.modes[1].threshold * n0
        kw["gamma_swp"] = plan.switch_thresholds[0] * n0
    return AnalyticScenario(**kw)


def _overhead(L: _Lookup) -> OverheadInputs:
    kw = {}
    for key in SCHEMA["overhead"]:
        if L.has(f"overhead.{key}"):
            kw["d_sd" if key == "d_sd_m" else key] = L.get(f"overhead.{key}")
    try:
        return OverheadInputs(**kw)
    except ValueError as exc:
        raise ConfigError(f"{L.source}: [overhead]: {exc}") from None


def parse_text(text: str, source: str = "<string>") -> ParsedConfig:
    entries = read_entries(text, source)
    L = _Lookup(entries, source)
    present = _sections(entries)
    overhead = _overhead(L) if "overhead" in present else None
    grid_step = L.get("experiment.grid_step", DEFAULT_GRID_STEP)
    if not 0 < grid_step <= 1:
        L.fail("experiment.grid_step", "must lie in (0, 1]")
    switch_step = L.get("experiment.switch_step_db", DEFAULT_SWITCH_STEP_DB)
    if not switch_step > 0:
        L.fail("experiment.switch_step_db", "must be > 0")
    if present <= {"overhead"} and overhead is not None:
        return ParsedConfig(None, None, overhead, grid_step, switch_step, None, source)

    topo = _topology(L)
    ch = _channel(L, topo)
    plan = _plan(L)
    cont = _contention(L, topo)
    L.check_missing()

    decoding = L.get("experiment.decoding", "chase")
    if decoding not in ("chase", "approx"):
        L.fail("experiment.decoding", "choose chase or approx")
    f = L.get("link.f", Fraction(1))
    if not 0 < f <= 1:
        L.fail("link.f", "must lie in (0, 1]")
    for key in ("experiment.trials", "experiment.slot_limit", "experiment.workers"):
        if L.has(key) and L.get(key) < 1:
            L.fail(key, "must be >= 1")
    if isinstance(plan, RcpcSchedule) and L.get("experiment.slot_limit", 2) > len(plan.rates):
        L.fail("experiment.slot_limit", "exceeds the number of RCPC stages")
    try:
        exp = ExperimentConfig(
            topology=topo,
            channel=ch,
            contention=cont,
            plan=plan,
            slot_limit=L.get("experiment.slot_limit", 2),
            trials=L.get("experiment.trials", 10_000),
            seed=L.get("experiment.seed", 0),
            f=float(f),
            info_bits=L.get("link.info_bits", 1912),
            discard_threshold_db=L.get("link.discard_threshold_db", -math.inf),
            decoding=decoding,
            overhear=L.get("experiment.overhear", False),
            sweep=_sweep(L),
            workers=L.get("experiment.workers", 1),
        )
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    try:
        scenario = scenario_from(exp)
    except ValueError as exc:
        raise ConfigError(f"{source}: analytic scenario: {exc}") from None
    return ParsedConfig(
        exp, scenario, overhead, grid_step, switch_step, L.get("experiment.switch_span_db"), source
    )


def parse_config(path) -> ParsedConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    return parse_text(text, str(path))


def with_overrides(cfg: ParsedConfig, seed=None, trials=None, grid_step=None, workers=None) -> ParsedConfig:
    exp = cfg.experiment
    if exp is not None:
        kw = {}
        if seed is not None:
            kw["seed"] = seed
        if trials is not None:
            if trials < 1:
                raise ConfigError("--trials must be >= 1")
            kw["trials"] = trials
        if workers is not None:
            if workers < 1:
                raise ConfigError("--workers must be >= 1")
            kw["workers"] = workers
        exp = replace(exp, **kw)
    out = replace(cfg, experiment=exp)
    if grid_step is not None:
        if not 0 < grid_step <= 1:
            raise ConfigError("--grid-step must lie in (0, 1]")
        out = replace(out, grid_step=grid_step)
    return out


SHIPPED = Path(__file__).parent / "configs"


def shipped_configs() -> dict[str, Path]:
    return {p.stem: p for p in sorted(SHIPPED.glob("*.cfg"))}
