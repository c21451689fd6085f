import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from relaysel.netmodel import (
    ChannelParams,
    Position,
    Topology,
    average_gain,
    db_to_linear,
    distance,
    link_rng,
    linear_to_db,
    place_relays_uniform,
    received_power,
    received_snr,
    sample_block_fading,
)


def test_distance_examples():
    assert distance(Position(0, 0), Position(25, 10)) == pytest.approx(26.926, abs=5e-4)
    assert distance(Position(25, 10), Position(100, 0)) == pytest.approx(75.664, abs=5e-4)
    assert distance(Position(0, 0), Position(0, 0)) == 0


def test_position_rejects_nonfinite():
    with pytest.raises(ValueError):
        Position(math.nan, 0)
    with pytest.raises(ValueError):
        Position(0, math.inf)


def test_topology_requires_relays_nearer_destination():
    with pytest.raises(ValueError):
        Topology(Position(100, 0), (Position(-10, 0),))
    t = Topology(Position(100, 0), (Position(25, 10),))
    assert t.k_r == 1 and t.d_sd == 100


@pytest.mark.parametrize("d, expected", [(100, 3.94e-13), (26.9, 2.02e-11)])
def test_received_power_matches_worked_example(d, expected):
    assert received_power(ChannelParams(), d) == pytest.approx(expected, rel=5e-3)


def test_average_gain_at_reference_distance():
    ch = ChannelParams()
    assert average_gain(ch, 1.0) == pytest.approx((ch.wavelength / (4 * math.pi)) ** 2)


def test_average_gain_rejects_inside_reference():
    with pytest.raises(ValueError):
        average_gain(ChannelParams(reference_distance=2.0), 1.0)


@pytest.mark.parametrize(
    "kw", [dict(path_loss_exponent=0), dict(reference_distance=0), dict(carrier_frequency=-1), dict(bandwidth=0)]
)
def test_channel_params_validation(kw):
    with pytest.raises(ValueError):
        ChannelParams(**kw)


@given(st.floats(1.0, 1e4), st.floats(1.0, 1e4), st.floats(0.5, 6))
def test_average_gain_decreasing(d1, d2, mu):
    ch = ChannelParams(path_loss_exponent=mu)
    if d1 < d2:
        assert average_gain(ch, d1) > average_gain(ch, d2)


def test_fading_moments_and_cdf():
    rng = np.random.default_rng(5)
    x = rng.exponential(1.0, 1_000_000)
    assert 0.997 <= x.mean() <= 1.003
    assert abs((x > 1).mean() - math.exp(-1)) < 0.002
    for t in (0.5, 1.0, 2.0):
        assert abs((x <= t).mean() - (1 - math.exp(-t))) < 0.003
    # independence of consecutive draws
    assert abs(np.corrcoef(x[::2], x[1::2])[0, 1]) < 0.005


def test_sample_block_fading_deterministic():
    a = sample_block_fading(link_rng(9, (0, 2), 3), 1.0, 3, (0, 2))
    b = sample_block_fading(link_rng(9, (0, 2), 3), 1.0, 3, (0, 2))
    c = sample_block_fading(link_rng(9, (0, 2), 4), 1.0, 4, (0, 2))
    assert a == b
    assert a.gain != c.gain
    assert a.gain >= 0


def test_sample_block_fading_rejects_nonpositive_mean():
    with pytest.raises(ValueError):
        sample_block_fading(np.random.default_rng(0), 0.0)


def test_received_snr():
    ch = ChannelParams()
    assert received_snr(0.0, ch)[1] == 0.0
    db, lin = received_snr(ch.noise_linear / ch.tx_energy_linear, ch)
    assert lin == pytest.approx(1.0) and db == pytest.approx(0.0, abs=1e-9)
    _, lin = received_snr(3.94e-13, ch, tx_energy=1.0)
    assert lin == pytest.approx(9.90, abs=0.01)


def test_db_conversions():
    assert db_to_linear(10) == pytest.approx(10)
    assert linear_to_db(100) == pytest.approx(20)
    assert linear_to_db(0) == -math.inf


def test_place_relays_uniform():
    assert place_relays_uniform(np.random.default_rng(1), 0, 100).relays == ()
    t1 = place_relays_uniform(np.random.default_rng(3), 20, 100)
    t2 = place_relays_uniform(np.random.default_rng(3), 20, 100)
    assert t1 == t2
    assert len(t1.relays) == 20
    for r in t1.relays:
        assert distance(r, t1.destination) < 100
        assert 0 <= r.x <= 100 and abs(r.y) <= 25


def test_with_average_snr():
    ch = ChannelParams().with_average_snr(2.0, 100)
    _, lin = received_snr(average_gain(ch, 100), ch)
    assert lin == pytest.approx(db_to_linear(2.0))
