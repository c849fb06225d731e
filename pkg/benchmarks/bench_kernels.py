"""Compiled kernels against the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--size 128] [--n 2000] [--repeat 3]

Each backend runs in its own interpreter (``BOUQUET_LAB_BACKEND`` is read at
import time), timing an escape grid, a batch of inverse branches and a batch
of f evaluations.  Compile time is excluded by a warm-up call.
"""
import argparse
import json
import math
import os
import subprocess
import sys
import time


def best_of(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def measure(p, size, n, repeat):
    import numpy as np

    from bouquet_lab import kernels as kern
    from bouquet_lab._jit import BACKEND
    from bouquet_lab.family import FamilyParams
    from bouquet_lab.geometry import make_region_scheme
    from bouquet_lab.render import classify_grid

    P = FamilyParams(p)
    scheme = make_region_scheme(P)
    rng = np.random.default_rng(0)
    ws = (np.exp(rng.uniform(3, 8, n)) * np.exp(1j * rng.uniform(-3, 3, n))).tolist()
    js = rng.integers(-3, 4, n).tolist()
    zs = (rng.uniform(-20, 20, n) + 1j * rng.uniform(-20, 20, n)).tolist()
    s = math.sin(math.pi / p)

    def grid():
        classify_grid(P, scheme, (-5.0, 25.0, -15.0, 15.0), size, size, 50)

    def inverse():
        for w, j in zip(ws, js):
            kern.inverse_branch_kernel(P.omegas, P.lam, w, j, P.cot, s)

    def fvals():
        for z in zs:
            kern.f_direct(P.omegas, P.lam, z, 0)

    out = {"backend": BACKEND}
    for name, fn in (("grid", grid), ("inverse", inverse), ("f", fvals)):
        fn()  # warm-up / compile
        out[name] = best_of(fn, repeat)
    return out


def run_backend(backend, a):
    env = dict(os.environ, BOUQUET_LAB_BACKEND=backend)
    cmd = [sys.executable, __file__, "--worker", "--p", str(a.p), "--size", str(a.size),
           "--n", str(a.n), "--repeat", str(a.repeat)]
    res = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--p", type=int, default=3)
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    a = ap.parse_args()
    if a.worker:
        print(json.dumps(measure(a.p, a.size, a.n, a.repeat)))
        return
    nb = run_backend("numba", a)
    py = run_backend("numpy", a)
    if nb["backend"] != "numba":
        print("numba is not importable; only the numpy backend was timed")
    labels = {"grid": f"escape grid {a.size}x{a.size}", "inverse": f"inverse branch x{a.n}",
              "f": f"f x{a.n}"}
    print(f"{'kernel':<26}{'numba s':>10}{'numpy s':>10}{'speedup':>10}")
    for k, label in labels.items():
        print(f"{label:<26}{nb[k]:10.4f}{py[k]:10.3f}{py[k] / nb[k]:9.1f}x")


if __name__ == "__main__":
    main()
