"""Time the compiled and pure-Python episode kernels on the same trials.

    python3 benchmarks/bench_kernel.py [--trials N] [--config NAME]
"""

import argparse
import time
from dataclasses import replace

import numpy as np

from relaysel import _episode_py, kernel, sim
from relaysel.config import parse_config, shipped_configs


def timed(fn, *args):
    t = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=20_000)
    ap.add_argument("--config", default="fig3_sweep")
    args = ap.parse_args()

    exp = parse_config(shipped_configs()[args.config]).experiment
    exp = replace(exp, trials=args.trials, sweep=None)
    spec = sim.build_kernel_spec(exp)
    U = sim.uniform_blocks(sim.stream_key(exp.seed, 0), spec.padded_block, 0, args.trials)
    print(f"config {args.config}: {args.trials} trials, {spec.block} uniforms per trial")

    py, t_py = timed(sim.execute, spec, U, _episode_py.run_batch)
    print(f"python  {t_py:8.3f} s  {args.trials / t_py:12.0f} trials/s")
    compiled = kernel.compiled_run_batch()
    if compiled is None:
        print("compiled kernel not built; skipping")
        return
    cy, t_cy = timed(sim.execute, spec, U, compiled)
    print(f"cython  {t_cy:8.3f} s  {args.trials / t_cy:12.0f} trials/s")
    print(f"speedup {t_py / t_cy:.1f}x")
    same = all(np.array_equal(getattr(py, n), getattr(cy, n)) for n in sim.TrialBatch.__dataclass_fields__)
    print(f"outputs identical: {same}")


if __name__ == "__main__":
    main()
