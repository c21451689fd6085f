import math

import numpy as np
import pytest

from relaysel.contention import (
    COLLISION,
    EMPTY,
    SOURCE,
    ContentionConfig,
    Relay,
    RelayState,
    Strategy,
    Winner,
    eligible_set,
    run_contention,
    select_baseline,
    select_transmitter,
)
from relaysel.netmodel import Position, Topology, db_to_linear


def cfg(**kw):
    kw.setdefault("minislots", 1)
    return ContentionConfig(**kw)


def test_config_validation():
    with pytest.raises(ValueError):
        cfg(contention_prob=(1.5,))
    with pytest.raises(ValueError):
        cfg(strategy=Strategy.ID_CSI_1, winner_bias=0.5, beta_opp_db=-80, eta_opp_db=-90)
    with pytest.raises(ValueError):
        cfg(strategy=Strategy.ID_CSI_1, beta_opp_db=-95, eta_opp_db=-90)
    with pytest.raises(ValueError):
        cfg(minislots=0)
    # minislots ignored for baselines
    cfg(minislots=0, strategy=Strategy.BEST_GAIN)


def test_eligible_set():
    eta = 1e-9
    assert eligible_set([RelayState(0, False, 1.0)], eta) == set()
    assert eligible_set([RelayState(0, True, eta)], eta) == set()
    states = [RelayState(0, True, 2 * eta), RelayState(1, True, 0.5 * eta), RelayState(2, False, 9 * eta)]
    assert eligible_set(states, eta) == {0}


def test_relay_state_validation():
    with pytest.raises(ValueError):
        RelayState(0, True, -1.0)


def test_forced_outcomes():
    rng = np.random.default_rng(0)
    assert run_contention(rng, {0}, cfg(contention_prob=(1.0,))) == [Winner(0)]
    two = cfg(minislots=2, contention_prob=(1.0, 1.0))
    assert run_contention(rng, {0, 1}, two) == [COLLISION, COLLISION]
    assert run_contention(rng, set(), cfg(minislots=3)) == [EMPTY] * 3


def test_contention_rejects_baselines():
    with pytest.raises(ValueError):
        run_contention(np.random.default_rng(0), {0}, cfg(strategy=Strategy.BEST_GAIN))


def test_minislot_outcome_frequencies():
    rng = np.random.default_rng(1)
    c = cfg(contention_prob=(0.5, 0.5))
    n = 200_000
    counts = {"w": 0, "e": 0, "c": 0}
    for _ in range(n):
        (o,) = run_contention(rng, {0, 1}, c)
        counts["w" if isinstance(o, Winner) else ("e" if o is EMPTY else "c")] += 1
    # 3 standard errors at n = 2e5 are ~0.003
    assert abs(counts["w"] / n - 0.5) < 0.004
    assert abs(counts["e"] / n - 0.25) < 0.004
    assert abs(counts["c"] / n - 0.25) < 0.004


def test_single_relay_selection_probability():
    rng = np.random.default_rng(2)
    p, K = 0.3, 3
    c = cfg(minislots=K, contention_prob=(p,))
    n = 100_000
    hits = sum(select_transmitter(rng, run_contention(rng, {0}, c), c) == Relay(0) for _ in range(n))
    assert abs(hits / n - (1 - (1 - p) ** K)) < 0.005


def test_select_transmitter_basics():
    rng = np.random.default_rng(0)
    c = cfg()
    assert select_transmitter(rng, [EMPTY, COLLISION], c) is SOURCE
    assert select_transmitter(rng, [Winner(4)], c) == Relay(4)


def test_slot_weighting_vs_relay_uniform():
    outcome = [Winner(0), Winner(0), Winner(1)]
    n = 60_000
    for weighted, expect in ((True, 2 / 3), (False, 1 / 2)):
        rng = np.random.default_rng(3)
        c = cfg(minislots=3, slot_weighted=weighted)
        hits = sum(select_transmitter(rng, outcome, c) == Relay(0) for _ in range(n))
        assert abs(hits / n - expect) < 0.01


def test_flag_bit_bias():
    rng = np.random.default_rng(4)
    c = cfg(strategy=Strategy.ID_CSI_1, minislots=2, beta_opp_db=-80, winner_bias=0.75)
    outcome = [Winner(0, True), Winner(1, False)]
    n = 200_000
    hits = sum(select_transmitter(rng, outcome, c) == Relay(0) for _ in range(n))
    assert abs(hits / n - 0.75) < 0.004


def test_flag_bit_set_by_strict_threshold():
    beta = -80.0
    c = cfg(strategy=Strategy.ID_CSI_1, contention_prob=(1.0,), beta_opp_db=beta)
    rng = np.random.default_rng(0)
    (w,) = run_contention(rng, {0}, c, gains={0: db_to_linear(beta)})
    assert w.flag_bit is False
    (w,) = run_contention(rng, {0}, c, gains={0: 1.01 * db_to_linear(beta)})
    assert w.flag_bit is True


def test_csi_with_unreachable_beta_matches_id():
    p = (0.4, 0.5, 0.6)
    gains = {0: 1.0, 1: 2.0, 2: 3.0}
    n = 100_000
    dists = []
    for strategy, beta in ((Strategy.ID, math.inf), (Strategy.ID_CSI_1, math.inf)):
        rng = np.random.default_rng(11)
        c = cfg(minislots=2, contention_prob=p, strategy=strategy, beta_opp_db=beta)
        counts = np.zeros(4)
        for _ in range(n):
            sel = select_transmitter(rng, run_contention(rng, {0, 1, 2}, c, gains), c)
            counts[3 if sel is SOURCE else sel.relay_id] += 1
        dists.append(counts / n)
    assert 0.5 * np.abs(dists[0] - dists[1]).sum() < 0.01


def test_baselines():
    topo = Topology(Position(100, 0), (Position(30, 0), Position(70, 0), Position(50, 0)))
    none = [RelayState(i, False, 1.0) for i in range(3)]
    assert select_baseline(none, topo, Strategy.BEST_GAIN) is SOURCE
    states = [RelayState(0, True, 0.1), RelayState(1, True, 0.9), RelayState(2, True, 0.4)]
    assert select_baseline(states, topo, Strategy.BEST_GAIN) == Relay(1)
    scaled = [RelayState(s.relay_id, True, 7.5 * s.gain_to_destination) for s in states]
    assert select_baseline(scaled, topo, Strategy.BEST_GAIN) == Relay(1)
    assert select_baseline(states, topo, Strategy.NEAREST_DECODER) == Relay(1)
    assert select_baseline(states, topo, Strategy.SOURCE_ONLY) is SOURCE
    tie = [RelayState(0, True, 0.5), RelayState(1, True, 0.5)]
    assert select_baseline(tie, topo, Strategy.BEST_GAIN) == Relay(0)
    with pytest.raises(ValueError):
        select_baseline(states, topo, Strategy.ID)
