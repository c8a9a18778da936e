"""Compare the compiled and pure-Python integration kernels.

Usage::

    python3 benchmarks/bench_kernels.py [--steps N] [--repeat R]

Times the joint mean-field + covariance RK4 propagation at the standard
bidirectional preset and reports per-step cost and the speedup,
after checking that both backends agree.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from optosync._backend import compiled_kernels, python_kernels
from optosync.fluctuations import COVARIANCE_GUARD, initial_covariance, noise_model
from optosync.meanfield import DIVERGENCE_GUARD
from optosync.model import kernel_params, standard_config


def _time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    config = standard_config("fig2_bidirectional")
    params = kernel_params(config)
    D = noise_model(config).D
    C0 = initial_covariance(config)
    z0 = np.zeros(4, dtype=np.complex128)
    dt, stride = config.numerics.dt, 100

    def run(k):
        return lambda: k.propagate(params, D, z0, C0, dt, args.steps, stride, DIVERGENCE_GUARD, COVARIANCE_GUARD)

    def run_mf(k):
        return lambda: k.integrate_mean_field(params, z0, dt, args.steps, stride, DIVERGENCE_GUARD)

    rows = []
    results = {}
    for name, k in (("python", python_kernels), ("compiled", compiled_kernels)):
        if k is None:
            print(f"{name:9s} unavailable")
            continue
        t_cov, out = _time(run(k), args.repeat)
        t_mf, _ = _time(run_mf(k), args.repeat)
        results[name] = out
        rows.append((name, t_mf, t_cov))
        print(f"{name:9s} mean-field {1e6 * t_mf / args.steps:8.2f} us/step   "
              f"covariance {1e6 * t_cov / args.steps:8.2f} us/step")
    if len(rows) == 2:
        (_, mf_py, cov_py), (_, mf_c, cov_c) = rows
        diff = np.abs(results["python"][1] - results["compiled"][1]).max()
        print(f"speedup   mean-field x{mf_py / mf_c:.1f}   covariance x{cov_py / cov_c:.1f}")
        print(f"max |C_python - C_compiled| = {diff:.3g}")


if __name__ == "__main__":
    main()
