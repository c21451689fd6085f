"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (lines appear in the terminal
summary) or ``python3 tests/test_acceptance.py`` (lines go to stdout).
"""

import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import quad

sys.path.insert(0, str(Path(__file__).parent))

from relaysel import analytic as an  # noqa: E402
from relaysel import sim  # noqa: E402
from relaysel.cli import main as cli_main  # noqa: E402
from relaysel.config import parse_config, shipped_configs  # noqa: E402
from relaysel.contention import Strategy  # noqa: E402

CONFIGS = shipped_configs()
RESULTS: list[str] = []


def report(tag, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def scenario(name):
    return parse_config(CONFIGS[name]).scenario


def test_c1_single_mode_contention_optimum():
    s = scenario("example41_sm")
    t = time.perf_counter()
    p, v = an.optimize_contention(s, "sm", 0.01)
    dt = time.perf_counter() - t
    ok = p == (1.0, 0.0) and abs(v - 0.25933) <= 0.01 and dt < 1.0
    report("C1 single-mode contention optimum", ok, f"argmax={p} max={v:.5f} (target 0.25933±0.01) {dt:.2f}s")


def test_c2_amc_contention_optimum():
    s = scenario("example41_amc")
    t = time.perf_counter()
    p, v = an.optimize_contention(s, "amc", 0.01)
    dt = time.perf_counter() - t
    ok = p == (0.0, 1.0) and abs(v - 0.42882) <= 0.01 and dt < 1.0
    report("C2 AMC contention optimum", ok, f"argmax={p} max={v:.5f} (target 0.42882±0.01) {dt:.2f}s")


def test_c3_amc_switching_point_optimum():
    cfg = parse_config(CONFIGS["example42"])
    s = cfg.scenario
    n0 = cfg.experiment.channel.noise_linear
    t = time.perf_counter()
    grid = an.switchpoint_grid(s, 0.25)
    sw, v = an.optimize_switchpoint(s, grid)
    dt = time.perf_counter() - t
    sw_db = 10 * math.log10(sw / n0)
    alpha_db = 10 * math.log10(s.alpha / n0)
    at_alpha = an.r_app_amc(replace(s, gamma_swp=s.alpha))
    ok = abs(sw_db - alpha_db) <= 0.25 + 1e-9 and abs(v - 0.36752) <= 0.01 and dt < 1.0
    report(
        "C3 AMC switching-point optimum",
        ok,
        f"argmax={sw_db:.2f} dB (alpha {alpha_db:.2f} dB) max={v:.5f} value at alpha={at_alpha:.5f} "
        f"(target argmax alpha, max 0.36752±0.01) {dt:.2f}s",
    )


def test_c4_overhead_arithmetic():
    r = an.overhead_report(parse_config(CONFIGS["sec5a_overhead"]).overhead)
    ok = (
        abs(r.data_interval_percent - 25.9) <= 0.1
        and abs(r.slot_percent - 31.4) <= 0.1
        and r.ack_interval_us == an.Fraction(243, 10)
        and r.contention_us == an.Fraction(729, 10)
        and r.data_symbols == 684
    )
    report(
        "C4 overhead arithmetic",
        ok,
        f"ratios {r.data_interval_percent}% / {r.slot_percent}%, intervals {float(r.ack_interval_us)} / "
        f"{float(r.contention_us)} us, {r.data_symbols} symbols",
    )


def _random_scenario(rng, kr, K):
    g = lambda: 10 ** rng.uniform(-1, 1.5)  # noqa: E731
    th = sorted(10 ** rng.uniform(-1.5, 1.2, 3))
    return an.AnalyticScenario(
        g_sd=g(),
        g_sa=tuple(g() for _ in range(kr)),
        g_ad=tuple(g() for _ in range(kr)),
        alpha=th[0],
        gamma_swp=th[1],
        beta=th[2],
        gamma=10 ** rng.uniform(-1, 1),
        phi=th[0] * rng.uniform(0, 1),
        f=rng.uniform(0.5, 1),
        minislots=K,
        contention_prob=tuple(rng.uniform(0, 1, kr)),
    )


def test_c5_oracle_equivalence():
    rng = np.random.default_rng(2024)
    t = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        s = _random_scenario(rng, int(rng.integers(1, 4)), int(rng.integers(1, 4)))
        for mode in (1, 2, "sm"):
            exact = an.enumerate_selection_probs(s, mode)
            for a in range(s.k_r):
                worst = max(worst, abs(an.q_selected(a, mode, s) - exact.q_by_relay[a]))
    dt = time.perf_counter() - t
    ok = worst <= 1e-9 and dt < 10
    report("C5 closed-form selection vs enumeration", ok, f"max abs diff {worst:.2e} over 100 scenarios {dt:.2f}s")


def test_c6_simulation_matches_closed_forms():
    t = time.perf_counter()
    lines, ok = [], True
    for name, fn, paper in (("example41_sm", an.r_app_sm, 0.23076), ("example41_amc", an.r_app_amc, 0.4225)):
        cfg = parse_config(CONFIGS[name])
        exp = replace(cfg.experiment, trials=1_000_000, slot_limit=2, sweep=None)
        assert exp.contention.eta_opp_db == -math.inf
        est = sim.run_trials(exp).estimate()
        closed = fn(cfg.scenario)
        ok &= abs(est.mean - closed) <= 0.01 and abs(est.mean - paper) <= 0.05
        lines.append(f"{name} sim={est.mean:.5f} closed={closed:.5f} reported={paper}")
    dt = time.perf_counter() - t
    ok &= dt < 60
    report("C6 simulation vs closed form", ok, "; ".join(lines) + f" {dt:.1f}s")


def _band(lo, hi, mean):
    upper = math.inf if math.isinf(hi) else hi / mean
    return quad(lambda y: math.exp(-y), lo / mean, upper, epsabs=1e-14, epsrel=1e-12)[0]


def _mix(q, s, lo, hi):
    return sum(qa * _band(lo, hi, g) for qa, g in zip(q.q_by_relay, s.g_ad)) + q.q_none * _band(lo, hi, s.g_sd)


def test_c7_quadrature_cross_check():
    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(1000):
        s = _random_scenario(rng, int(rng.integers(0, 4)), int(rng.integers(1, 4)))
        q1, q2, qs = (an.selection_probs(s, m) for m in (1, 2, "sm"))
        pairs = [(an.rho(a, m, s), _band(s.threshold(m), math.inf, s.g_sa[a]))
                 for a in range(s.k_r) for m in (1, 2, "sm")]
        p11, p21, p12, p22 = an.decode_probs_amc(s)
        tau1, tau2 = an.tau_probs(s)
        pairs += [
            (p11, _band(s.alpha, s.gamma_swp, s.g_sd)),
            (p21, _band(s.beta, math.inf, s.g_sd)),
            (p12, _mix(q1, s, s.phi, s.gamma_swp)),
            (p22, _mix(q2, s, s.gamma_swp, math.inf)),
            (tau1, _band(s.gamma, math.inf, s.g_sd)),
            (tau2, _mix(qs, s, s.phi, math.inf)),
        ]
        worst = max(worst, max(abs(a - b) for a, b in pairs))
    report("C7 closed forms vs quadrature", worst <= 1e-8, f"max abs diff {worst:.2e} over 1000 parameter sets")


def test_c8_qualitative_shapes():
    t = time.perf_counter()
    n = 100_000
    # (a) contention probability sweep
    fig3 = replace(parse_config(CONFIGS["fig3_sweep"]).experiment, trials=n)
    ps = (0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.95)
    res = sim.run_sweep(replace(fig3, sweep=("contention.p", ps)))
    means = [e.mean for _, e in res]
    k = int(np.argmax(means))
    peak = res[k][1]

    def below(e):
        return peak.mean - e.mean >= 2 * math.hypot(peak.stderr, e.stderr)

    ok_a = 0 < k < len(ps) - 1 and below(res[0][1]) and below(res[-1][1])

    # (b) best instantaneous gain against contention over a mean-SNR sweep
    cmp = replace(parse_config(CONFIGS["fig7_compare"]).experiment, trials=n, sweep=None)
    ok_b, gaps = True, []
    for i, snr in enumerate((0.0, 2.0, 4.0, 6.0, 8.0)):
        base = sim.apply_sweep(cmp, "channel.snr_db", snr)
        e_id = sim.run_trials(base, i).estimate()
        e_best = sim.run_trials(sim.apply_sweep(base, "contention.strategy", "BEST_GAIN"), i).estimate()
        ok_b &= e_best.mean >= e_id.mean - 2 * e_id.stderr
        gaps.append(f"{snr:g}dB:{e_best.mean - e_id.mean:+.4f}")

    # (c) flag-bit threshold tuned on an independent seed, then compared
    tune = replace(cmp, seed=cmp.seed + 1000, trials=20_000)
    betas = (-90.0, -89.0, -88.0, -87.0, -86.0, -85.0, -84.0, -82.0, -80.0)
    csi = lambda c, b: replace(c, contention=replace(c.contention, strategy=Strategy.ID_CSI_1,  # noqa: E731
                                                     beta_opp_db=b))
    tuned = max(betas, key=lambda b: sim.run_trials(csi(tune, b)).estimate().mean)
    e_id = sim.run_trials(cmp).estimate()
    e_csi = sim.run_trials(csi(cmp, tuned)).estimate()
    ok_c = e_csi.mean >= e_id.mean - 2 * e_id.stderr
    dt = time.perf_counter() - t
    report(
        "C8 qualitative sweep shapes",
        ok_a and ok_b and ok_c and dt < 600,
        f"(a) peak p={ps[k]} {peak.mean:.4f}, ends {means[0]:.4f}/{means[-1]:.4f} {'ok' if ok_a else 'BAD'}; "
        f"(b) best-gain minus ID {' '.join(gaps)} {'ok' if ok_b else 'BAD'}; "
        f"(c) beta_opp={tuned:g} dB csi={e_csi.mean:.4f} id={e_id.mean:.4f} {'ok' if ok_c else 'BAD'}; {dt:.0f}s",
    )


def _simulate_bytes(path, workers, capsys):
    command = "overhead" if path.stem == "sec5a_overhead" else "simulate"
    code = cli_main([command, "--config", str(path), "--workers", str(workers)])
    out = capsys.readouterr().out
    assert code == 0
    return out.encode()


def test_c9_determinism(capsys, monkeypatch):
    ok, bad = True, []
    for name, path in CONFIGS.items():
        first = _simulate_bytes(path, 1, capsys)
        second = _simulate_bytes(path, 1, capsys)
        monkeypatch.setattr(sim, "_CHUNK_DOUBLES", 20_000)
        third = _simulate_bytes(path, 3, capsys)
        monkeypatch.undo()
        if not first == second == third:
            ok = False
            bad.append(name)
    report("C9 determinism across runs and workers", ok,
           f"{len(CONFIGS)} configs byte-identical" if ok else f"differs: {bad}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
