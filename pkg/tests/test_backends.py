"""The pure-numpy fallback against the compiled kernels."""
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from bouquet_lab import kernels as kern
from bouquet_lab.family import FamilyParams
from bouquet_lab.geometry import make_region_scheme
from bouquet_lab.render import classify_grid
from bouquet_lab.symbolic import inverse_branch, periodic_point

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

SCRIPT = r"""
import json, math
import numpy as np
from bouquet_lab._jit import BACKEND, HAVE_NUMBA
from bouquet_lab.family import FamilyParams
from bouquet_lab.geometry import make_region_scheme
from bouquet_lab.render import classify_grid
from bouquet_lab.symbolic import covering_scheme, inverse_branch, periodic_point
P = FamilyParams(3); S = make_region_scheme(P)
g = classify_grid(P, S, (-5.0, 25.0, -15.0, 15.0), 40, 32, 30)
cov = covering_scheme(S, 3)
inv = [inverse_branch(cov, complex(1e7, 3e6), j) for j in range(-3, 4)]
per = periodic_point(cov, [1, -2, 3]).z
c2 = lambda z: [z.real, z.imag]
print(json.dumps({"backend": BACKEND, "numba": HAVE_NUMBA, "hash": g.content_hash(),
                  "escape_n": g.escape_n.tolist(), "digit0": g.digit0.tolist(),
                  "kind": g.kind.tolist(), "ll": np.nan_to_num(g.log_log_modulus).tolist(),
                  "inv": [c2(z) for z in inv], "per": c2(per)}))
"""


@pytest.fixture(scope="module")
def fallback():
    env = dict(os.environ, BOUQUET_LAB_BACKEND="numpy")
    out = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True,
                         text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def test_env_flag_selects_fallback(fallback):
    assert fallback["backend"] == "numpy" and fallback["numba"] is False


def test_grid_agrees(fallback, s3):
    g = classify_grid(s3.params, s3, (-5.0, 25.0, -15.0, 15.0), 40, 32, 30)
    assert np.array_equal(g.escape_n, fallback["escape_n"])
    assert np.array_equal(g.digit0, fallback["digit0"])
    assert np.array_equal(g.kind, fallback["kind"])
    np.testing.assert_allclose(np.nan_to_num(g.log_log_modulus), fallback["ll"], rtol=1e-12)


def test_in_process_numpy_grid_agrees(s3):
    a = classify_grid(s3.params, s3, (-2.0, 12.0, -9.0, 9.0), 30, 30, 30, backend="numba")
    b = classify_grid(s3.params, s3, (-2.0, 12.0, -9.0, 9.0), 30, 30, 30, backend="numpy")
    assert np.array_equal(a.escape_n, b.escape_n) and np.array_equal(a.index, b.index)
    np.testing.assert_allclose(a.tail, b.tail, rtol=1e-12)


def test_scalar_kernels_agree(fallback, cov3):
    for j, zz in zip(range(-3, 4), fallback["inv"]):
        z = inverse_branch(cov3, complex(1e7, 3e6), j)
        assert abs(z - complex(*zz)) < 1e-13 * abs(z)
    z = periodic_point(cov3, [1, -2, 3]).z
    assert abs(z - complex(*fallback["per"])) < 1e-12 * abs(z)


def test_benchmark_script_runs():
    out = subprocess.run([sys.executable, os.path.join(ROOT, "benchmarks", "bench_kernels.py"),
                          "--size", "16", "--n", "20", "--repeat", "1"],
                         capture_output=True, text=True, check=True, timeout=300)
    lines = out.stdout.strip().splitlines()
    assert lines[0].split()[:3] == ["kernel", "numba", "s"]
    assert len(lines) == 4
