#!/usr/bin/env python3
"""Compare the compiled kernels against the pure-numpy fallback.

Runs two layers:

  * micro: raw kernel calls (polynomial gradient, one-step residual) on the
    coupled-oscillator data, timed in-process against both backend modules;
  * end-to-end: a full implicit-midpoint run of the coupled oscillator in a
    subprocess per backend (selection happens at import, so each backend
    needs a fresh interpreter).

Usage: python benchmarks/bench_backends.py [--steps N]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from diracmech._kernels import _ref

try:
    from diracmech._kernels import _speed
except ImportError:
    _speed = None

END_TO_END = """
import time
import numpy as np
import diracmech
from diracmech.integrator import IntegratorConfig, project_initial, simulate
from diracmech.library import build_builtin

sys_ = build_builtin("mass-spring")
state = project_initial(sys_, [0.3, -0.1, -0.1, 0.2], [0.0, 0.25, 0.25, -0.1])
cfg = IntegratorConfig(h=1e-3)
t0 = time.perf_counter()
traj = simulate(sys_, state, cfg, {steps} * 1e-3)
dt = time.perf_counter() - t0
print(f"{{diracmech.BACKEND}}: {{dt:.3f}} s for {steps} steps "
      f"({{1e6 * dt / {steps}:.1f}} us/step)")
"""


def time_call(fn, *args, repeat=20000):
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def micro(args):
    rng = np.random.default_rng(0)
    n = 4
    coeffs = rng.uniform(-1, 1, 8)
    qexps = rng.integers(0, 3, size=(8, n)).astype(np.int64)
    vexps = rng.integers(0, 3, size=(8, n)).astype(np.int64)
    q, v = rng.standard_normal(n), rng.standard_normal(n)
    w = np.ascontiguousarray(rng.standard_normal((1, n)))
    z = rng.standard_normal(3 * n + 1)
    fcomp = np.zeros(0, dtype=np.int64)
    fc = np.zeros(0)
    fe = np.zeros((0, n), dtype=np.int64)
    cases = {
        "poly_grad_q": (lambda impl: impl.poly_grad_q, (coeffs, qexps, vexps, q, v)),
        "step_residual": (
            lambda impl: impl.step_residual,
            (z, q, v, q, 1e-3, 0, coeffs, qexps, vexps, fcomp, fc, fe, fe, w),
        ),
    }
    print("kernel microbenchmarks (per call):")
    for name, (pick, call_args) in cases.items():
        t_ref = time_call(pick(_ref), *call_args)
        line = f"  {name:14s} pure {1e6 * t_ref:8.2f} us"
        if _speed is not None:
            t_fast = time_call(pick(_speed), *call_args)
            line += f"   compiled {1e6 * t_fast:8.2f} us   ({t_ref / t_fast:5.1f}x)"
        print(line)


def end_to_end(args):
    print(f"\nend-to-end coupled-oscillator run ({args.steps} steps):")
    script = END_TO_END.format(steps=args.steps)
    for flag in ("", "1"):
        env = {**os.environ, "DIRACMECH_PURE_PYTHON": flag}
        out = subprocess.run([sys.executable, "-c", script], env=env,
                             capture_output=True, text=True, check=True)
        print("  " + out.stdout.strip())


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=2000,
                        help="end-to-end step count (default 2000)")
    args = parser.parse_args()
    if _speed is None:
        print("compiled backend unavailable; benchmarking the fallback only")
    micro(args)
    end_to_end(args)


if __name__ == "__main__":
    main()
