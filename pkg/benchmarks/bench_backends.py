#!/usr/bin/env python3
"""Compare the compiled and pure-Python special-function backends.

Kernel timings import both implementation modules directly, so they run in
one process; the end-to-end outage timings re-invoke this script in a child
process per backend (the backend is chosen at import time through the
``SWIPTSIM_PURE_PYTHON`` environment variable).

Run from the repository root after installing the package:

    python3 benchmarks/bench_backends.py [--quick]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def kernel_cases(impl):
    xs = np.linspace(0.05, 40.0, 2000)
    bs = np.linspace(0.05, 12.0, 2000)
    return {
        "reg_gamma_lower, a=3, 2000 pts": lambda: [impl.reg_gamma_lower(3.0, x) for x in xs],
        "bessel_i_scaled, n=4, 2000 pts": lambda: [impl.bessel_i_scaled(4, x) for x in xs],
        "marcum_q series, m=3 a=1.5, 2000 pts": lambda: [impl.marcum_q(3, 1.5, b) for b in bs],
        "marcum_q quadrature, m=3 a=8, 2000 pts": lambda: [
            impl.marcum_q(3, 8.0, b) for b in bs
        ],
        "marcum_q_many, m=3 a=1.5, 2000 pts": lambda: impl.marcum_q_many(3, 1.5, bs),
    }


def run_kernels(repeats):
    from swiptsim import _specfun_py

    impls = [_specfun_py]
    try:
        from swiptsim import _specfun_native

        impls.append(_specfun_native)
    except ImportError:
        print("note: compiled backend not importable; kernel table is pure-python only")
    results = {}
    for impl in impls:
        for name, fn in kernel_cases(impl).items():
            results.setdefault(name, {})[impl.BACKEND_NAME] = best_of(fn, repeats)
    return results


def end_to_end_child():
    """Time representative outage evaluations on the backend chosen by env."""
    from swiptsim import outage, specfun
    from swiptsim.model import SystemParams

    params = SystemParams.from_snr_db(3, 20.0)
    alpha, eta_t, eta_f, tau_f = 0.02, 0.0163, 0.003, 0.0283
    cases = {
        "data_outage_tdd (snr 20 dB)": lambda: outage.data_outage_tdd(params, alpha, eta_t, 6.0),
        "energy_shortage_fdd (snr 20 dB)": lambda: outage.energy_shortage_fdd(
            params, alpha, eta_f, tau_f
        ),
        "data_outage_fdd (snr 20 dB)": lambda: outage.data_outage_fdd(
            params, alpha, eta_f, tau_f, 6.0
        ),
    }
    timings = {name: best_of(fn, 1) for name, fn in cases.items()}
    print(json.dumps({"backend": specfun.BACKEND, "timings": timings}))


def run_end_to_end():
    results = {}
    for env_value in ("0", "1"):
        env = dict(os.environ, SWIPTSIM_PURE_PYTHON=env_value)
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--end-to-end-child"],
            env=env, capture_output=True, text=True, check=True,
        )
        payload = json.loads(out.stdout.strip().splitlines()[-1])
        for name, seconds in payload["timings"].items():
            results.setdefault(name, {})[payload["backend"]] = seconds
    return results


def print_table(title, results):
    print(f"\n{title}")
    print(f"{'case':42s} {'python':>10s} {'native':>10s} {'speedup':>8s}")
    for name, by_backend in results.items():
        py = by_backend.get("python")
        nat = by_backend.get("native")
        py_s = f"{py * 1e3:8.2f}ms" if py is not None else "-"
        nat_s = f"{nat * 1e3:8.2f}ms" if nat is not None else "-"
        speed = f"{py / nat:7.1f}x" if py and nat else "-"
        print(f"{name:42s} {py_s:>10s} {nat_s:>10s} {speed:>8s}")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=3, help="best-of repeat count")
    parser.add_argument("--quick", action="store_true", help="kernel table only")
    parser.add_argument("--end-to-end-child", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args(argv)
    if args.end_to_end_child:
        end_to_end_child()
        return 0
    print_table("scalar kernel loops (best of %d)" % args.repeats, run_kernels(args.repeats))
    if not args.quick:
        print_table("outage evaluations (one shot, child process per backend)", run_end_to_end())
    return 0


if __name__ == "__main__":
    sys.exit(main())
