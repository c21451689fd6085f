import math

import pytest

from relaysel.analytic import AnalyticScenario
from relaysel.config import parse_config, shipped_configs
from relaysel.netmodel import ChannelParams, db_to_linear, received_power

N0 = db_to_linear(-134)
CONFIGS = shipped_configs()


def snr_power(db):
    """dB SNR threshold on the absolute received-power scale."""
    return db_to_linear(db) * N0


def two_relay_scenario(p=(1.0, 0.0), **kw):
    ch = ChannelParams()
    d1 = math.hypot(25, 10)
    d2 = math.hypot(75, 10)
    base = dict(
        g_sd=received_power(ch, 100),
        g_sa=(received_power(ch, d1), received_power(ch, d2)),
        g_ad=(received_power(ch, d2), received_power(ch, d1)),
        alpha=snr_power(3),
        beta=snr_power(9),
        phi=snr_power(-6),
        gamma=snr_power(13),
        gamma_swp=snr_power(4),
        f=1912 / 2050,
        minislots=1,
        contention_prob=p,
    )
    base.update(kw)
    return AnalyticScenario(**base)


@pytest.fixture
def sm_scenario():
    return two_relay_scenario((1.0, 0.0))


@pytest.fixture
def amc_scenario():
    return two_relay_scenario((0.0, 1.0), f=1912 / 2044)


def load(name):
    return parse_config(CONFIGS[name])


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
