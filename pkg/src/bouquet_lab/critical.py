"""Zeros and critical points of f on the rays V_k.

On V_0 (z = r e^{i pi/p}) f is real: pairing the terms k and p-1-k gives

    f = lam * (2 sum_{k < p/2 - 1/2} e^{r c_k} cos(r s_k) + [p odd] e^{-r}),
    c_k = cos((2k+1) pi/p),  s_k = sin((2k+1) pi/p).

Everything below works with this sum divided by e^{r c_0}, which never
overflows, so sign changes can be bracketed for any m.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .errors import (MultipleSignChanges, NoSignChange, NonIntegerWinding,
                     ParameterError, ZeroOnContour)
from .family import FamilyParams
from .geometry import RegionScheme, d_rectangle


@dataclass(frozen=True)
class ZeroRecord:
    ray_index: int
    m: int
    r: float
    z: complex
    residual: float  # |f(z)| / (lam max_k |exp(omega^k z)|)
    bracket: tuple  # (y_lo, y_hi) on V_0


@dataclass(frozen=True)
class CriticalRecord:
    ray_index: int
    r: float
    z: complex
    f_value: float  # critical value; +-inf when it overflows, see log_abs_value
    log_abs_value: float
    sign: int
    residual: float  # |f'(z)| / (lam max_k |exp(omega^k z)|)
    neighbors: tuple  # m of the zeros on either side


def _pair_table(p):
    n = p // 2
    ang = (2 * np.arange(n) + 1) * math.pi / p
    return np.cos(ang), np.sin(ang)


def _restriction_scaled(p, r, deriv=0):
    """e^{-r c_0} d^deriv/dr^deriv (f/lam)(r e^{i pi/p})."""
    ck, sk = _pair_table(p)
    e = np.exp(r * (ck - ck[0]))
    cs, sn = np.cos(r * sk), np.sin(r * sk)
    if deriv == 0:
        v = 2 * np.sum(e * cs)
    elif deriv == 1:
        v = 2 * np.sum(e * (ck * cs - sk * sn))
    else:
        v = 2 * np.sum(e * ((ck * ck - sk * sk) * cs - 2 * ck * sk * sn))
    if p % 2:
        v += (-1) ** deriv * math.exp(-r * (1 + ck[0]))
    return float(v)


def real_restriction_scaled(params: FamilyParams, r, deriv=0):
    """(sign, log|value|) of the deriv-th r-derivative of f(r e^{i pi/p})."""
    if r < 0:
        raise ParameterError("r must be >= 0")
    v = _restriction_scaled(params.p, r, deriv)
    if v == 0:
        return 0, -math.inf
    c0 = math.cos(math.pi / params.p)
    return (1 if v > 0 else -1), math.log(abs(v)) + r * c0 + params.log_lam


def real_restriction(params: FamilyParams, r, deriv=0) -> float:
    """f(r e^{i pi/p}) (deriv=0) or its r-derivative, as a float (+-inf past range)."""
    sgn, lg = real_restriction_scaled(params, r, deriv)
    if sgn == 0:
        return 0.0
    return sgn * (math.exp(lg) if lg < K.LOG_MAX else math.inf)


def ray_point(p, k, r):
    ang = (2 * k + 1) * math.pi / p
    return complex(r * math.cos(ang), r * math.sin(ang))


def _scaled_abs(params, z, deriv=0):
    """|f^(deriv)(z)| / (lam max_k |exp(omega^k z)|): the log-relative residual."""
    z = complex(z)
    lg, _ = K.f_log(params.omegas, params.log_lam, z, deriv)
    top = max((w * z).real for w in params.omegas)
    return math.exp(lg - params.log_lam - top)


def _root_1d(g, dg, a, b, ga=None):
    """Bracketed root of g on [a, b]: bisection, then clamped Newton polish."""
    ga = g(a) if ga is None else ga
    for _ in range(60):
        if b - a <= 1e-6 * max(1.0, b):
            break
        mid = 0.5 * (a + b)
        gm = g(mid)
        if gm == 0:
            return mid
        if (gm > 0) == (ga > 0):
            a, ga = mid, gm
        else:
            b = mid
    x = 0.5 * (a + b)
    for _ in range(50):
        gx = g(x)
        d = dg(x)
        if gx == 0:
            return x
        if (gx > 0) == (ga > 0):
            a = x
        else:
            b = x
        xn = x - gx / d if d != 0 else 0.5 * (a + b)
        if not (a < xn < b):
            xn = 0.5 * (a + b)  # Newton left the bracket
        if abs(xn - x) <= 2e-16 * max(1.0, abs(x)):
            return xn
        x = xn
    return x


def find_zeros_on_ray(scheme: RegionScheme, ray_index: int, m_lo: int, m_hi: int,
                      m_hat: int | None = None):
    """One zero per m in [m_lo, m_hi], bracketed by y in (m pi, (m+1) pi) on V_0."""
    p = scheme.p
    if not 0 <= ray_index < p:
        raise ParameterError(f"ray index must be in 0..{p - 1}")
    if m_hat is not None and m_lo <= m_hat:
        raise ParameterError(f"m_lo={m_lo} must exceed the calibrated M={m_hat}")
    if m_lo < 1 or m_hi < m_lo:
        raise ParameterError("need 1 <= m_lo <= m_hi")
    P = scheme.params
    s = math.sin(math.pi / p)
    out = []
    for m in range(m_lo, m_hi + 1):
        a, b = m * math.pi / s, (m + 1) * math.pi / s
        ga, gb = _restriction_scaled(p, a), _restriction_scaled(p, b)
        if ga == 0 or gb == 0 or (ga > 0) == (gb > 0):
            raise NoSignChange(f"no sign change of f on V_0 for m={m}")
        c0 = math.cos(math.pi / p)
        # d/dr of the scaled restriction = scaled derivative - c0 * scaled value
        r = _root_1d(lambda x: _restriction_scaled(p, x),
                     lambda x: _restriction_scaled(p, x, 1) - c0 * _restriction_scaled(p, x),
                     a, b, ga)
        z = ray_point(p, ray_index, r)
        out.append(ZeroRecord(ray_index, m, r, z, _scaled_abs(P, z), (m * math.pi, (m + 1) * math.pi)))
    return out


def find_critical_points_on_ray(scheme: RegionScheme, ray_index: int, zero_list, n_probe=64):
    """Exactly one critical point between consecutive zeros (sign change of d/dr f)."""
    p = scheme.p
    P = scheme.params
    zs = sorted(zero_list, key=lambda q: q.r)
    out = []
    for za, zb in zip(zs[:-1], zs[1:]):
        probe = np.linspace(za.r, zb.r, n_probe)
        d = np.array([_restriction_scaled(p, x, 1) for x in probe])
        changes = np.nonzero(np.signbit(d[:-1]) != np.signbit(d[1:]))[0]
        if len(changes) == 0:
            raise NoSignChange(f"no critical point between m={za.m} and m={zb.m}")
        if len(changes) > 1:
            raise MultipleSignChanges(f"{len(changes)} sign changes of f' between m={za.m} and m={zb.m}")
        i = int(changes[0])
        c0 = math.cos(math.pi / p)
        r = _root_1d(lambda x: _restriction_scaled(p, x, 1),
                     lambda x: _restriction_scaled(p, x, 2) - c0 * _restriction_scaled(p, x, 1),
                     probe[i], probe[i + 1])
        z = ray_point(p, ray_index, r)
        sgn, lg = real_restriction_scaled(P, r)
        val = sgn * (math.exp(lg) if lg < K.LOG_MAX else math.inf)
        out.append(CriticalRecord(ray_index, r, z, val, lg, sgn, _scaled_abs(P, z, 1), (za.m, zb.m)))
    return out


# --- argument principle ----------------------------------------------------


def _arg_f(params, z):
    return K.f_log(params.omegas, params.log_lam, complex(z), 0)[1]


def count_zeros_winding(params: FamilyParams, contour, n_samples=64, max_depth=40,
                        contour_tol=1e-6):
    """Zeros inside a closed polygon (vertices in order) by the argument principle."""
    verts = [complex(v) for v in contour]
    total = 0.0
    for a, b in zip(verts, verts[1:] + verts[:1]):
        ts = np.linspace(0.0, 1.0, n_samples + 1)
        pts = [a + (b - a) * t for t in ts]
        for z in pts:
            lf, _ = K.f_log(params.omegas, params.log_lam, z, 0)
            lfp, _ = K.f_log(params.omegas, params.log_lam, z, 1)
            # |f|/|f'| estimates the distance to the nearest zero
            if lf - lfp < math.log(contour_tol):
                raise ZeroOnContour(f"f nearly vanishes at {z!r}")
        args = [_arg_f(params, z) for z in pts]
        for i in range(n_samples):
            total += _darg(params, pts[i], pts[i + 1], args[i], args[i + 1], 0, max_depth, contour_tol)
    w = total / (2 * math.pi)
    n = round(w)
    if abs(w - n) > 1e-6:
        raise NonIntegerWinding(f"winding {w} is not an integer")
    return int(n)


def _darg(params, z0, z1, a0, a1, depth, max_depth, contour_tol):
    d = (a1 - a0 + math.pi) % (2 * math.pi) - math.pi
    if abs(d) < 0.5 * math.pi:
        return d
    if depth >= max_depth:
        raise NonIntegerWinding("subdivision limit reached")
    zm = 0.5 * (z0 + z1)
    lf, am = K.f_log(params.omegas, params.log_lam, zm, 0)
    lfp, _ = K.f_log(params.omegas, params.log_lam, zm, 1)
    if lf - lfp < math.log(contour_tol):
        raise ZeroOnContour(f"f nearly vanishes at {zm!r}")
    return (_darg(params, z0, zm, a0, am, depth + 1, max_depth, contour_tol)
            + _darg(params, zm, z1, am, a1, depth + 1, max_depth, contour_tol))


# --- Rouche check on D_m ---------------------------------------------------


def _perimeter_samples(verts, n):
    verts = [complex(v) for v in verts]
    edges = list(zip(verts, verts[1:] + verts[:1]))
    lens = np.array([abs(b - a) for a, b in edges])
    counts = np.maximum(1, np.round(n * lens / lens.sum()).astype(int))
    pts, side = [], []
    for e, ((a, b), c) in enumerate(zip(edges, counts)):
        t = np.arange(c) / c
        pts.append(a + (b - a) * t)
        side.append(np.full(c, e))
    return np.concatenate(pts), np.concatenate(side)


def verify_rouche(scheme: RegionScheme, m: int, n_samples=2048):
    """Sampled |f - phi| < |phi| on the boundary of D_m, phi = lam (e^z + e^{omega^{p-1} z}).

    Margins are reported divided by lam e^{u}, u the largest Re(omega^k z),
    so they stay O(1).  The long sides of D_m run along the strip edges; there
    the dominant single term must also beat the sum of all the others."""
    if m < 1:
        raise ParameterError("m must be >= 1")
    p = scheme.p
    om = scheme.params.omegas
    verts = d_rectangle(scheme, m)
    zs, side = _perimeter_samples(verts, n_samples)
    e = om[:, None] * zs[None, :]
    u = e.real.max(axis=0)
    t = np.exp(e - u)
    phi = t[0] + t[p - 1]
    rest = t[1:p - 1].sum(axis=0) if p > 3 else t[1]
    margin = np.abs(phi) - np.abs(rest)
    # vertices are [r0 - i tau, r1 - i tau, r1 + i tau, r0 + i tau]; edge 0 is
    # the right long side (towards T_0), edge 2 the left one (towards T_{p-1})
    mag = np.abs(t)
    right = side == 0
    left = side == 2
    side_right = mag[0, right] - (mag.sum(axis=0)[right] - mag[0, right])
    side_left = mag[p - 1, left] - (mag.sum(axis=0)[left] - mag[p - 1, left])
    side_min = float(min(side_right.min(), side_left.min()))
    mm = float(margin.min())
    return {"m": m, "n_samples": int(zs.size), "min_margin": mm,
            "min_side_margin": side_min, "pass": bool(mm > 0 and side_min > 0)}


def calibrate_m_hat(scheme: RegionScheme, m_scan=40, n_samples=512):
    """Largest m in 1..m_scan where the sampled Rouche check fails (0 if none)."""
    bad = [m for m in range(1, m_scan + 1) if not verify_rouche(scheme, m, n_samples)["pass"]]
    return max(bad) if bad else 0


# --- helper used by the half-line estimates --------------------------------


def e_da(x, d, a):
    """E_{d,a}(x) = e^x - d e^{a x}."""
    return np.exp(x) - d * np.exp(a * np.asarray(x))


def e_da_threshold(d, a):
    """x beyond which E_{d,a} is increasing and positive: x (1-a) > log+(a d), a < 1."""
    return max(0.0, math.log(a * d)) / (1 - a) if a * d > 0 else 0.0


# --- emission --------------------------------------------------------------

CSV_COLUMNS = ("ray_index", "m", "r", "re", "im", "residual", "critical_value")


def write_records_csv(path, zeros, criticals=()):
    """Zeros first (critical_value empty), then critical points (m = lower zero)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for q in zeros:
            w.writerow([q.ray_index, q.m, repr(q.r), repr(q.z.real), repr(q.z.imag),
                        repr(q.residual), ""])
        for q in criticals:
            w.writerow([q.ray_index, q.neighbors[0], repr(q.r), repr(q.z.real),
                        repr(q.z.imag), repr(q.residual), repr(q.f_value)])
