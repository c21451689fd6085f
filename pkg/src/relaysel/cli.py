"""Command-line entry point: ``relaysel <command> --config FILE``.

Exit status 0 on success, 1 for usage or configuration errors, 2 when a
computation fails.  Data goes to ``--out`` (``-`` for stdout); diagnostics
go to stderr.
"""

from __future__ import annotations

import argparse
import math
import sys

from . import analytic as an
from .config import ConfigError, ParsedConfig, parse_config, with_overrides
from .kernel import BACKEND
from .sim import run_sweep, sweep_csv


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _g(x) -> str:
    return f"{float(x):.6g}"


def _rows(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(str(c) for c in r) for r in rows]
    return "\n".join(lines) + "\n"


def _scenario(cfg: ParsedConfig) -> an.AnalyticScenario:
    if cfg.scenario is None:
        raise ConfigError(f"{cfg.source}: closed forms need a single-mode or two-mode AMC plan")
    return cfg.scenario


def _is_single(s: an.AnalyticScenario) -> bool:
    return s.gamma is not None


def cmd_approx(cfg: ParsedConfig, args) -> str:
    s = _scenario(cfg)
    rows = []
    if _is_single(s):
        tau1, tau2 = an.tau_probs(s)
        q = an.selection_probs(s, "sm")
        rows += [("tau1", _g(tau1)), ("tau2", _g(tau2))]
        rows += [(f"q_{a + 1}", _g(v)) for a, v in enumerate(q.q_by_relay)]
        rows += [("q_0", _g(q.q_none)), ("r_app_sm", _g(an.r_app_sm(s)))]
    else:
        p11, p21, p12, p22 = an.decode_probs_amc(s)
        rows += [("p11", _g(p11)), ("p21", _g(p21)), ("p12", _g(p12)), ("p22", _g(p22))]
        for mode in (1, 2):
            q = an.selection_probs(s, mode)
            rows += [(f"q_{a + 1}_mode{mode}", _g(v)) for a, v in enumerate(q.q_by_relay)]
            rows.append((f"q_0_mode{mode}", _g(q.q_none)))
        rows.append(("r_app_amc", _g(an.r_app_amc(s, args.form))))
    return _rows(("quantity", "value"), rows)


def cmd_simulate(cfg: ParsedConfig, args) -> str:
    exp = cfg.experiment
    if exp is None:
        raise ConfigError(f"{cfg.source}: no experiment defined")
    print(f"relaysel: kernel backend {BACKEND}", file=sys.stderr)
    return sweep_csv(exp, run_sweep(exp))


def cmd_optimize(cfg: ParsedConfig, args) -> str:
    s = _scenario(cfg)
    if args.target == "contention":
        objective = "sm" if _is_single(s) else "amc"
        best_p, best = an.optimize_contention(s, objective, cfg.grid_step, args.form)
        rows = [(f"p_{a + 1}", _g(v)) for a, v in enumerate(best_p)]
        rows.append((f"r_app_{objective}", _g(best)))
        return _rows(("quantity", "value"), rows)
    if _is_single(s):
        raise ConfigError(f"{cfg.source}: switching-point search needs a two-mode AMC plan")
    grid = an.switchpoint_grid(s, cfg.switch_step_db, cfg.switch_span_db)
    sw, best = an.optimize_switchpoint(s, grid, args.form)
    n0 = cfg.experiment.channel.noise_linear
    alpha_db = 10 * math.log10(s.alpha / n0)
    rows = [
        ("gamma_swp_db", _g(10 * math.log10(sw / n0))),
        ("alpha_db", _g(alpha_db)),
        ("r_app_amc", _g(best)),
    ]
    return _rows(("quantity", "value"), rows)


def cmd_overhead(cfg: ParsedConfig, args) -> str:
    if cfg.overhead is None:
        raise ConfigError(f"{cfg.source}: no [overhead] section")
    r = an.overhead_report(cfg.overhead)
    rows = [
        ("propagation_us", _g(r.propagation_us)),
        ("ack_interval_us", _g(r.ack_interval_us)),
        ("minislot_us", _g(r.minislot_us)),
        ("contention_us", _g(r.contention_us)),
        ("announce_us", _g(r.announce_us)),
        ("data_symbols", r.data_symbols),
        ("data_us", _g(r.data_us)),
        ("guard_total_us", _g(r.guard_total_us)),
        ("overhead_vs_data_percent", f"{r.data_interval_percent:.2f}"),
        ("overhead_vs_slot_percent", f"{r.slot_percent:.2f}"),
    ]
    return _rows(("quantity", "value"), rows)


def cmd_oracle(cfg: ParsedConfig, args) -> str:
    s = _scenario(cfg)
    modes = ("sm",) if _is_single(s) else (1, 2)
    rows = []
    for mode in modes:
        exact = an.enumerate_selection_probs(s, mode)
        closed = an.selection_probs(s, mode)
        for a in range(s.k_r):
            rows.append((mode, a + 1, _g(exact.q_by_relay[a]), _g(closed.q_by_relay[a])))
        rows.append((mode, 0, _g(exact.q_none), _g(closed.q_none)))
    return _rows(("mode", "relay", "enumerated", "closed_form"), rows)


COMMANDS = {
    "approx": cmd_approx,
    "simulate": cmd_simulate,
    "optimize": cmd_optimize,
    "overhead": cmd_overhead,
    "oracle": cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relaysel", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment configuration file")
        p.add_argument("--out", default="-", help="output path, '-' for stdout")
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--grid-step", type=float, dest="grid_step")
        p.add_argument("--workers", type=int)
        p.add_argument("--form", choices=("paths", "printed"), default="paths",
                       help="AMC approximation variant")
        if name == "optimize":
            p.add_argument("--target", choices=("contention", "switchpoint"), required=True)
    return parser


def _emit(text: str, out: str):
    if out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        cfg = with_overrides(parse_config(args.config), args.seed, args.trials, args.grid_step, args.workers)
        text = COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"relaysel: config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"relaysel: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    try:
        _emit(text, args.out)
    except OSError as exc:
        print(f"relaysel: cannot write {args.out}: {exc.strerror}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
