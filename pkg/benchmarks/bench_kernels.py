"""Compare the numpy and numba RK4 kernels.

    python benchmarks/bench_kernels.py [--steps 100000] [--repeat 5]

Reports per-RK4-step cost of each variant, the speedup, and the largest
difference between their outputs. A whole ``simulate`` run is timed in a
subprocess per variant, since the kernel choice is fixed at import.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from mlip import _kernels

SIM_SNIPPET = """
import time
from mlip.io import packaged_config
from mlip.simulator import Scenario, simulate
sc = Scenario.from_dict(packaged_config("default.json")).replace(n_steps={n})
simulate(sc.replace(n_steps=1))
t0 = time.perf_counter()
simulate(sc)
print(time.perf_counter() - t0)
"""


def time_kernel(fn, n: int, repeat: int) -> tuple[float, np.ndarray]:
    x0 = np.array([0.05, 0.3, 0.0, 0.0])
    forces = np.array([[0.01, 0.02, 1.5]])
    samples = np.empty((n, 5))
    fn(x0, 0.0, 1e-3, 10, 0.8, 0.8, 9.81, 0.0, np.inf, forces, samples[:10])
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(x0, 0.0, 1e-6, n, 0.8, 0.8, 9.81, 0.0, np.inf, forces, samples)
        best = min(best, time.perf_counter() - t0)
    return best, samples.copy()


def time_simulate(n_steps: int, disable: bool) -> float:
    env = dict(os.environ, MLIP_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run([sys.executable, "-c", SIM_SNIPPET.format(n=n_steps)], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=100_000, help="RK4 steps per kernel call")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sim-steps", type=int, default=20, help="walking steps for the end-to-end run")
    args = ap.parse_args()

    if not _kernels.HAVE_NUMBA:
        sys.exit("numba is not installed")
    # the numpy kernel is ~100x slower; keep its share of the wall time sane
    n_np = max(1, args.steps // 20)
    t_np, s_np = time_kernel(_kernels.integrate_domain_numpy, n_np, max(1, args.repeat // 2))
    t_jit, s_jit = time_kernel(_kernels.integrate_domain_jit, args.steps, args.repeat)
    per_np, per_jit = t_np / n_np, t_jit / args.steps
    diff = float(np.max(np.abs(s_np[:n_np] - s_jit[:n_np])))
    print(f"numpy kernel : {per_np * 1e6:9.3f} us/step  ({n_np} steps)")
    print(f"numba kernel : {per_jit * 1e6:9.3f} us/step  ({args.steps} steps)")
    print(f"speedup      : {per_np / per_jit:9.1f}x")
    print(f"max |diff|   : {diff:.3e}")

    sim_np = time_simulate(args.sim_steps, disable=True)
    sim_jit = time_simulate(args.sim_steps, disable=False)
    print(f"simulate({args.sim_steps} steps): numpy {sim_np:.3f} s, numba {sim_jit:.4f} s, {sim_np / sim_jit:.1f}x")


if __name__ == "__main__":
    main()
