"""The property suite behind ``bouquet-lab verify``.

Each check returns a dict with at least ``name`` and ``pass``; the suite
report lists them in a fixed order.
"""
from __future__ import annotations

import cmath
import math
import time

import numpy as np

from . import kernels as kern
from .critical import (calibrate_m_hat, count_zeros_winding, find_critical_points_on_ray,
                       find_zeros_on_ray, verify_rouche)
from .family import eval_f, eval_g, eval_f_prime, f_error_bound
from .geometry import (RegionScheme, check_scheme, classify_codes, d_rectangle,
                       expansion_report)
from .hairs import calibrate_hair_bounds, hair_point, trace_hair, verify_hair_properties
from .render import build_m_table, fast_escape_test
from .symbolic import covering_scheme, inverse_branch, periodic_point, verify_covering


def check_partition(scheme, rng, n=20000):
    zs = (rng.uniform(-1, 1, n) + 1j * rng.uniform(-1, 1, n)) * 6 * scheme.nu
    kinds, _ = classify_codes(scheme, zs)
    unc = int(np.sum(kinds == kern.UNCLASSIFIED))
    return {"name": "partition", "n": n, "unclassified": unc,
            "boundary": int(np.sum(kinds == kern.BOUNDARY)), "pass": unc == 0}


def check_symmetry(scheme, rng, n=1000):
    P = scheme.params
    zs = rng.uniform(-1, 1, (n, 2)) @ np.array([1, 1j]) * 20 / math.sqrt(2)
    worst = 0.0
    for z in zs:
        z = complex(z)
        fz = eval_f(P, z)
        for k in range(1, P.p):
            worst = max(worst, abs(eval_f(P, P.omegas[k] * z) - fz) / (1 + abs(fz)))
    return {"name": "rotation_symmetry", "n": n, "max_rel": worst, "pass": worst <= 1e-12}


def check_reduced(scheme, rng, n=100):
    P = scheme.params
    worst = 0.0
    for _ in range(n):
        r, a = 3 * math.sqrt(rng.uniform()), rng.uniform(0, 2 * math.pi)
        z = cmath.rect(r, a)
        fz = eval_f(P, z)
        worst = max(worst, abs(fz - eval_g(P, z ** P.p)) / (1 + abs(fz)))
    return {"name": "reduced_identity", "n": n, "max_rel": worst, "pass": worst <= 1e-9}


def check_expansion(scheme, seed):
    rep = expansion_report(scheme, 2000, seed)
    rep["name"] = "expansion"
    rep["pass"] = bool(rep["fprime_gt_2"] and rep["zfpf_gt_2"])
    return rep


def check_zeros(scheme, m_hat, span=20):
    P = scheme.params
    m_lo, m_hi = m_hat + 1, m_hat + span
    zeros = find_zeros_on_ray(scheme, 0, m_lo, m_hi)
    wind = [count_zeros_winding(P, d_rectangle(scheme, m)) for m in range(m_lo, m_hi + 1)]
    res = max(q.residual for q in zeros)
    inside = all(m * math.pi < q.z.imag < (m + 1) * math.pi for q, m in
                 zip(zeros, range(m_lo, m_hi + 1)))
    crit = find_critical_points_on_ray(scheme, 0, zeros)
    signs = [c.sign for c in crit]
    alternate = all(a == -b for a, b in zip(signs[:-1], signs[1:]))
    interlace = all(a.r < c.r < b.r for a, b, c in zip(zeros[:-1], zeros[1:], crit))
    im_rel = max(abs(eval_f(P, c.z).imag) / abs(eval_f(P, c.z)) for c in crit if c.log_abs_value < 700)
    rouche = [verify_rouche(scheme, m, 2048) for m in range(m_lo, m_hi + 1)]
    return [
        {"name": "zeros", "m_range": [m_lo, m_hi], "windings": wind, "max_residual": res,
         "in_band": inside, "pass": bool(all(w == 1 for w in wind) and res < 1e-9 and inside)},
        {"name": "rouche", "min_margin": min(r["min_margin"] for r in rouche),
         "min_side_margin": min(r["min_side_margin"] for r in rouche),
         "pass": all(r["pass"] for r in rouche)},
        {"name": "interlacing", "alternating_signs": alternate, "interlaced": interlace,
         "max_rel_imag_critical_value": im_rel,
         "pass": bool(alternate and interlace and im_rel < 1e-8)},
    ]


def check_inverse(scheme, rng, n=1000, js=range(-3, 4)):
    P = scheme.params
    worst = 0.0
    worst_d = 0.0
    c = scheme.c
    for i in range(n):
        j = list(js)[i % len(js)]
        w = cmath.rect(math.exp(rng.uniform(c, 2 * c)), rng.uniform(-math.pi / 2, math.pi / 2))
        z = inverse_branch(scheme, w, j)
        worst = max(worst, abs(eval_f(P, z) - w) / abs(w))
        worst_d = max(worst_d, 1 / abs(eval_f_prime(P, z)))
    return {"name": "inverse_branch", "n": n, "max_rel_residual": worst,
            "max_inv_derivative": worst_d, "pass": worst <= 1e-10 and worst_d < 0.5}


def check_periodic(scheme, K):
    import itertools
    P = scheme.params
    syms = [s for s in range(-K, K + 1) if s != 0]
    words = [w for n in (1, 2) for w in itertools.product(syms, repeat=n)]
    bad = []
    worst = 0.0
    for w in words:
        r = periodic_point(scheme, w)
        r2 = periodic_point(scheme, w[1:] + w[:1])
        # forward error is limited by how well f can be evaluated at z
        shift = abs(eval_f(P, r.z) - r2.z)
        allowed = 1e-8 + f_error_bound(P, r.z)
        worst = max(worst, shift / allowed)
        if not (abs(r.multiplier) > 1 and r.preimage_residual(P) < 1e-9 and shift < allowed):
            bad.append(list(w))
    return {"name": "periodic_points", "n": len(words), "max_shift_over_allowed": worst,
            "failures": bad, "pass": not bad}


def check_covering(scheme, K, m_hat, n=1000):
    lines = verify_covering(scheme, K, n, m_range=range(m_hat + 1, m_hat + 11))
    y_min = min(min(y["min_neg_re_plus"], y["min_neg_re_minus"]) for y in lines["y_lines"])
    own = verify_covering(scheme, K, n)
    at40 = verify_covering(scheme, K, n, c=40.0)
    ratio = max(a["ratio"] for a in at40["annulus"])
    out = {"name": "covering", "y_lines_min": y_min, "annulus_pass": own["pass"],
           "annulus_ratio_c40": ratio, "pass": bool(y_min > 0 and own["pass"])}
    if scheme.p == 3:
        out["pass"] = out["pass"] and ratio < 1e-3
    return out


def check_hairs(scheme, K, its=((1,), (2,), (-1,), (1, -1), (2, 3))):
    cal = calibrate_hair_bounds(scheme, K)
    reps = []
    for s in its:
        cur = trace_hair(scheme, s, 30.0, 60)
        reps.append(verify_hair_properties(cur, scheme, q_hat=cal["q_hat"], m_hat=cal["M_hat"]))
    return {"name": "hairs", "q_hat": cal["q_hat"], "M_hat": cal["M_hat"],
            "failures": [r["itinerary"] for r in reps if not r["pass"]],
            "pass": all(r["pass"] for r in reps)}


def check_fast_escape(scheme, base_scheme):
    P = scheme.params
    table = build_m_table(P, math.exp(base_scheme.c), 6)
    hs = [hair_point(scheme, s, 10.0)[0] for s in ((1,), (2,), (-3, 1))]
    res = [fast_escape_test(P, table, h, 2, 4) for h in hs]
    zero = fast_escape_test(P, table, 0.0, 2, 4)
    return {"name": "fast_escape", "hair_L": [r["L"] for r in res], "zero_qualifies": zero["qualifies"],
            "pass": all(r["qualifies"] for r in res) and not zero["qualifies"]}


def run_suite(scheme: RegionScheme, K: int = 3, seed: int = 0):
    """Run every check; returns {"pass", "checks", "failed", "seconds"}."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    check_scheme(scheme)
    checks = [check_partition(scheme, rng), check_symmetry(scheme, rng),
              check_reduced(scheme, rng), check_expansion(scheme, seed)]
    m_hat = calibrate_m_hat(scheme)
    checks.extend(check_zeros(scheme, m_hat))
    cov = covering_scheme(scheme, K)
    checks.append(check_inverse(cov, rng))
    checks.append(check_periodic(cov, K))
    checks.append(check_covering(cov, K, m_hat))
    checks.append(check_hairs(cov, K))
    checks.append(check_fast_escape(cov, scheme))
    failed = [c["name"] for c in checks if not c["pass"]]
    return {"pass": not failed, "failed": failed, "m_hat": m_hat, "covering_c": cov.c,
            "checks": checks, "seconds": time.perf_counter() - t0}
