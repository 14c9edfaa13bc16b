"""Timing comparison of the numba and pure-numpy kernel backends.

Runs the three hot reductions (dual_terms, coupling, logsumexp_all) on a
range of problem sizes with both backends and prints a table of per-call
times and speedups. The backend is chosen at import time via the
RVQR_NO_NUMBA environment variable, so each backend runs in a subprocess.

Usage: python benchmarks/bench_backends.py [--repeats 5]
"""

import argparse
import json
import os
import subprocess
import sys
import time

SIZES = [(20, 200, 1), (20, 2000, 1), (50, 2000, 3), (100, 5000, 3)]


def _measure(repeats):
    import numpy as np

    from rvqr import kernels

    rng = np.random.default_rng(0)
    rows = []
    for I, J, N in SIZES:
        S = rng.standard_normal((I, J))
        psi = rng.standard_normal(J)
        mu = np.full(I, 1.0 / I)
        nu = np.full(J, 1.0 / J)
        X = rng.standard_normal((J, N))
        # warm-up (jit compilation on the numba path)
        kernels.dual_terms(S, psi, mu, nu, X, 0.1)
        kernels.coupling(S, psi, mu, 0.1)
        kernels.logsumexp_all(S, psi, 0.1)
        timings = {}
        for name, call in [
            ("dual_terms", lambda: kernels.dual_terms(S, psi, mu, nu, X, 0.1)),
            ("coupling", lambda: kernels.coupling(S, psi, mu, 0.1)),
            ("logsumexp_all", lambda: kernels.logsumexp_all(S, psi, 0.1)),
        ]:
            best = min(_time_once(call) for _ in range(repeats))
            timings[name] = best
        rows.append({"I": I, "J": J, "N": N, "timings": timings})
    return {"backend": kernels.BACKEND, "rows": rows}


def _time_once(call):
    t0 = time.perf_counter()
    call()
    return time.perf_counter() - t0


def _run_child(force_numpy, repeats):
    env = dict(os.environ, RVQR_NO_NUMBA="1" if force_numpy else "0")
    out = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--child", "--repeats", str(repeats)],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(out.stdout)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.child:
        json.dump(_measure(args.repeats), sys.stdout)
        return

    numba = _run_child(False, args.repeats)
    numpy_ = _run_child(True, args.repeats)
    print(f"backends: {numba['backend']} vs {numpy_['backend']}\n")
    print(f"{'size (I,J,N)':>16} {'kernel':>14} {'numba (ms)':>12} "
          f"{'numpy (ms)':>12} {'speedup':>8}")
    for rn, rp in zip(numba["rows"], numpy_["rows"]):
        size = f"({rn['I']},{rn['J']},{rn['N']})"
        for name in rn["timings"]:
            tn, tp = rn["timings"][name], rp["timings"][name]
            print(f"{size:>16} {name:>14} {tn * 1e3:>12.3f} "
                  f"{tp * 1e3:>12.3f} {tp / tn:>8.2f}x")


if __name__ == "__main__":
    main()
