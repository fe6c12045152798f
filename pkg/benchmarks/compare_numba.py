#!/usr/bin/env python3
"""Time the jitted kernels against the interpreted fallback.

The parent process runs with numba enabled, then re-executes itself with
``FREQBIN_DISABLE_NUMBA=1`` in a subprocess (the flag is read at import
time, so the fallback needs a fresh interpreter) and prints both columns.

    python3 benchmarks/compare_numba.py [--repeats N]
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def run_cases(repeats: int) -> dict:
    from freqbin import _kernels as k
    from freqbin.biphoton import joint_spectrum, reduce_to_bins
    from freqbin.dispersion import load_sellmeier
    from freqbin.hom import HomParams, fit_homi, synthesize_scan
    from freqbin.qpm import load_crystal, solve_signal_idler

    k.warm_up()
    times = {}

    def bench(name, fn):
        fn()                                    # warm call outside the clock
        best = float("inf")
        for _ in range(repeats):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
        times[name] = best

    pack = load_sellmeier("cln_e_edwards1984")._pack
    lam = np.linspace(1.45, 1.65, 200_000)
    bench("index_n_many, 200k wavelengths",
          lambda: k.index_n_many(lam, 120.0, pack))

    tau = np.linspace(-3e-12, 3e-12, 200_000)
    args = (4000.0, 0.934, 2 * np.pi * 11.5e12, 2.40e-12, 0.0)
    bench("homi_curve, 200k delays", lambda: k.homi_curve(tau, *args))
    bench("homi_jac, 200k delays", lambda: k.homi_jac(tau, *args))

    spec = load_crystal("default")
    bench("solve_signal_idler, both segments",
          lambda: (solve_signal_idler(spec, 0), solve_signal_idler(spec, 1)))
    bench("joint_spectrum + reduce_to_bins, 4097 pts",
          lambda: reduce_to_bins(joint_spectrum(spec), spec))

    true = HomParams(N=1.0, V=0.934, delta_omega=2 * np.pi * 11.5e12,
                     tau_c=2.40e-12, tau_offset=0.0)
    scan = synthesize_scan(true, np.linspace(-3e-12, 3e-12, 241), 2000.0,
                           rng_seed=1)
    bench("fit_homi, 241-point scan", lambda: fit_homi(scan))

    return {"numba": k.USE_NUMBA, "times": times}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--inner", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args(argv)

    if args.inner:
        print(json.dumps(run_cases(args.repeats)))
        return 0

    fast = run_cases(args.repeats)
    if not fast["numba"]:
        print("warning: numba path inactive in the parent process "
              "(FREQBIN_DISABLE_NUMBA set or numba missing); comparing "
              "the fallback against itself", file=sys.stderr)

    env = dict(os.environ, FREQBIN_DISABLE_NUMBA="1")
    proc = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--inner",
         "--repeats", str(args.repeats)],
        env=env, capture_output=True, text=True, check=True)
    slow = json.loads(proc.stdout)
    assert not slow["numba"]

    width = max(len(n) for n in fast["times"])
    print(f"{'case':<{width}}  {'numba':>10}  {'numpy':>10}  {'speedup':>8}")
    print("-" * (width + 34))
    for name, tf in fast["times"].items():
        ts = slow["times"][name]
        print(f"{name:<{width}}  {tf*1e3:>8.3f}ms  {ts*1e3:>8.3f}ms  "
              f"{ts/tf:>7.1f}x")
    print("(numpy column = FREQBIN_DISABLE_NUMBA=1: the same kernels "
          "interpreted)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
