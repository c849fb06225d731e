"""Hairs h_s(t) = lim_n L_s^n(E^n(t)), E(t) = exp(t - 1).

``L_s^n = L_{s_0} o ... o L_{s_{n-1}}``.  The tower E^n(t) leaves double
range after a handful of steps; at that level the innermost branch is
replaced by its far-field form ``L_j(w) = log w + 2 pi i j`` (the correction
``log(1 + eps)`` is below e^{-300}) and the iteration saturates.
"""
from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundaryError, NonConvergence, ParameterError
from .geometry import RegionScheme, in_strip_closure, strip_index
from .symbolic import ItinerarySpec, inverse_branch, limit_point, periodic_point
from .towers import Tower

N_MAX = 24


# --- the model map ---------------------------------------------------------


def E_map(t: float) -> float:
    return math.exp(t - 1.0)


@dataclass(frozen=True)
class LogDomain:
    """E^n(t) beyond double range; carries E^{n-1}(t) (log E^n = E^{n-1} - 1)."""

    n: int
    prev: object  # float or Tower

    @property
    def log_value(self):
        return Tower.of(self.prev).add(-1.0)

    def tower(self) -> Tower:
        return self.log_value.exp()


def E_tower(t, n) -> Tower:
    x = Tower.of(float(t))
    for _ in range(n):
        x = x.add(-1.0).exp()
    return x


def E_iter(t: float, n: int):
    """E^n(t) as a float, or a LogDomain marker once it overflows."""
    if t < 1:
        raise ParameterError("t must be >= 1")
    x = Tower.of(float(t))
    prev = x
    for k in range(n):
        prev = x
        x = x.add(-1.0).exp()
    if x.height == 0:
        return x.mant
    return LogDomain(n, prev.mant if prev.height == 0 else prev)


def last_float_level(t: float, cap: int = 64) -> int:
    """Largest k with E^k(t) representable."""
    x = float(t)
    for k in range(cap):
        if x - 1.0 > 709.0:
            return k
        x = math.exp(x - 1.0)
    return cap


# --- hair points -----------------------------------------------------------


def _as_spec(s) -> ItinerarySpec:
    if isinstance(s, ItinerarySpec):
        return s
    if isinstance(s, str):
        return ItinerarySpec.parse(s)
    return ItinerarySpec((), tuple(s))


def _pull_back(P, s: ItinerarySpec, n: int, t: float):
    """G^n_s(t), plus a flag telling whether the far-field innermost step was used."""
    e = E_iter(t, n)
    if isinstance(e, LogDomain):
        if isinstance(e.prev, Tower):
            raise ParameterError("innermost level is two steps past double range")
        z = complex(e.prev - 1.0, 2.0 * math.pi * s[n - 1])
        depth = n - 1
        far = True
    else:
        z = complex(e, 0.0)
        depth = n
        far = False
    for k in range(depth - 1, -1, -1):
        z = inverse_branch(P, z, s[k])
    return z, far


def hair_point(scheme: RegionScheme, s, t: float, tol: float = 1e-12, n_max: int = N_MAX,
               strict: bool = False):
    """h_s(t) and diagnostics {n_used, gaps, far_field, saturated, eps_drop_log}."""
    s = _as_spec(s)
    if t < 1:
        raise ParameterError("t must be >= 1")
    if any(x == 0 for x in s.head(len(s.preperiod) + len(s.period))):
        raise ParameterError("hair itineraries use symbols with |s_i| >= 1")
    P = scheme.params
    kf = last_float_level(t)
    gaps = []
    prev = None
    z = None
    far = False
    n_used = 0
    saturated = False
    for n in range(1, n_max + 1):
        if n > kf + 1:
            saturated = True
            break
        z, far = _pull_back(P, s, n, t)
        n_used = n
        if prev is not None:
            gaps.append(abs(z - prev))
            if gaps[-1] < tol * max(1.0, abs(z)):
                break
        prev = z
    else:
        if strict:
            raise NonConvergence(f"hair point s={s}, t={t} not settled after {n_max} levels")
    drop = None
    gap = gaps[-1] if gaps else math.nan
    if far:
        # log|eps| at the innermost point is about (cos(2 pi/p) - 1) Re z
        x = float(E_iter(t, n_used - 1)) - 1.0
        drop = (math.cos(2 * math.pi / P.p) - 1.0) * x
        if saturated:
            # deeper levels only change the innermost point by about exp(drop)
            gap = math.exp(max(drop, -745.0))
    diag = {"n_used": n_used, "gaps": gaps, "far_field": far, "saturated": saturated,
            "eps_drop_log": drop, "cauchy_gap": gap}
    return z, diag


def G_sequence(scheme: RegionScheme, s, t: float, n_max: int = 12):
    """[G^1_s(t), ..., G^n_s(t)] up to n_max or saturation."""
    s = _as_spec(s)
    kf = last_float_level(t)
    return [_pull_back(scheme.params, s, n, t)[0] for n in range(1, min(n_max, kf + 1) + 1)]


# --- curves ----------------------------------------------------------------


@dataclass
class HairCurve:
    itinerary: ItinerarySpec
    t: np.ndarray
    z: np.ndarray
    n_used: np.ndarray
    cauchy_gap: np.ndarray
    t_max: float = 0.0
    tol: float = 1e-12
    calibration: dict = field(default_factory=dict)

    @property
    def endpoint(self) -> complex:
        return complex(self.z[0])

    @property
    def samples(self):
        return list(zip(self.t.tolist(), self.z.tolist(), self.n_used.tolist(),
                        self.cauchy_gap.tolist()))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "re", "im", "n_used", "cauchy_gap"])
            for t, z, n, g in self.samples:
                w.writerow([repr(t), repr(z.real), repr(z.imag), n, repr(g)])

    def manifest(self):
        return {"itinerary": str(self.itinerary), "t_max": self.t_max, "tol": self.tol,
                "n_samples": int(self.t.size),
                "endpoint": [self.endpoint.real, self.endpoint.imag],
                **self.calibration}

    def write_manifest(self, path):
        with open(path, "w") as fh:
            json.dump(self.manifest(), fh, indent=2, sort_keys=True)


def trace_hair(scheme: RegionScheme, s, t_max: float = 30.0, n_samples: int = 120,
               tol: float = 1e-12, step_bound: float = 1.0, max_refine: int = 12) -> HairCurve:
    """Geometric t-grid on [1, t_max], bisected until neighbours are within step_bound."""
    s = _as_spec(s)
    if not t_max > 1:
        raise ParameterError("t_max must exceed 1")
    ts = list(np.geomspace(1.0, t_max, n_samples))
    ts[0], ts[-1] = 1.0, float(t_max)
    pts = {}

    def at(t):
        if t not in pts:
            pts[t] = hair_point(scheme, s, t, tol)
        return pts[t]

    for t in ts:
        at(t)
    for _ in range(max_refine):
        new = []
        for a, b in zip(ts[:-1], ts[1:]):
            if abs(at(a)[0] - at(b)[0]) > step_bound and b - a > 1e-9:
                new.append(0.5 * (a + b))
        if not new:
            break
        for t in new:
            at(t)
        ts = sorted(set(ts) | set(new))
    zs = np.array([pts[t][0] for t in ts])
    return HairCurve(s, np.array(ts), zs,
                     np.array([pts[t][1]["n_used"] for t in ts], dtype=int),
                     np.array([pts[t][1]["cauchy_gap"] for t in ts]), float(t_max), tol)


def rotate_curve(curve: HairCurve, k: int, p: int) -> np.ndarray:
    """Points of the hair turned by exp(2 pi i k / p): f is invariant under this rotation."""
    return curve.z * np.exp(2j * math.pi * k / p)


# --- calibration -----------------------------------------------------------


def probe_itineraries(K: int = 3, max_period: int = 2):
    syms = [x for x in range(-K, K + 1) if x != 0]
    out = []
    for n in range(1, max_period + 1):
        out.extend(ItinerarySpec((), w) for w in itertools.product(syms, repeat=n))
    return out


def calibrate_hair_bounds(scheme: RegionScheme, K: int = 3, t_probe=None, t_scan=None,
                          itineraries=None):
    """(q_hat, M_hat): M_hat is 1.2 times the largest |Re G^n_s(t) - t| over the
    probe set; q_hat is the smallest scan t from which the bounds hold at every
    larger scan t."""
    if t_probe is None:
        t_probe = np.arange(5.0, 41.0, 1.0)
    if t_scan is None:
        t_scan = np.arange(1.0, 41.0, 0.5)
    its = probe_itineraries(K) if itineraries is None else [_as_spec(x) for x in itineraries]
    worst = 0.0
    for s in its:
        for t in t_probe:
            for g in G_sequence(scheme, s, float(t)):
                worst = max(worst, abs(g.real - t))
    m_hat = 1.2 * worst
    ok_from = None
    for t in sorted(t_scan, reverse=True):
        good = all(abs(g.real - t) <= m_hat for s in its for g in G_sequence(scheme, s, float(t)))
        if not good:
            break
        ok_from = float(t)
    return {"q_hat": ok_from, "M_hat": m_hat, "max_dev": worst, "n_itineraries": len(its)}


# --- verification ----------------------------------------------------------


def hair_chain(scheme: RegionScheme, s, t: float, length: int, tol: float = 1e-12):
    """Forward orbit of h_s(t) rebuilt level by level as h_{sigma^k s}(E^k t).

    A float orbit loses all digits after a few steps.  Returns (points, far)
    where points are the representable levels and ``far`` lists the strip
    digits of the remaining levels, read off the far-field form
    ``E^k(t) - 1 + 2 pi i s_k`` (Im is exact there, Re is a tower)."""
    s = _as_spec(s)
    pts, far = [], []
    for k in range(length):
        e = E_iter(t, k)
        if isinstance(e, LogDomain):
            far.append(strip_index(complex(0.0, 2.0 * math.pi * s[k])))
        else:
            pts.append(hair_point(scheme, s.shift(k), e, tol)[0])
    return pts, far


def verify_hair_properties(curve: HairCurve, scheme: RegionScheme, horizon: int = 6,
                           t_check=(2.0,), q_hat=None, m_hat=None):
    from .family import eval_f, f_error_bound

    P = scheme.params
    s = curve.itinerary
    rep = {"itinerary": str(s)}
    # 1. endpoint
    z_s = periodic_point(scheme, s.period).z if s.is_periodic else limit_point(scheme, s)
    rep["endpoint_error"] = abs(curve.endpoint - z_s)
    rep["endpoint_ok"] = rep["endpoint_error"] < 1e-8
    # endpoint orbit: the periodic cycle, one link at a time
    if s.is_periodic:
        rec = periodic_point(scheme, s.period)
        rep["endpoint_orbit_max_abs"] = max(abs(q) for q in rec.orbit)
        rep["endpoint_orbit_link_residual"] = rec.preimage_residual(P)
    # 2. itinerary through the orbit chain
    items = []
    thresh = 5.0 if q_hat is None else q_hat + 1
    for t in t_check:
        chain, far = hair_chain(scheme, s, t, horizon)
        digits = []
        for q in chain:
            try:
                digits.append(strip_index(q))
            except BoundaryError:
                digits.append(None)
        # link residual relative to what f can resolve at a
        links = [abs(eval_f(P, a) - b) / (1e-6 * (1 + abs(b)) + f_error_bound(P, a))
                 for a, b in zip(chain[:-1], chain[1:]) if b.real < 700]
        levels = [float(E_iter(t, k)) for k in range(len(chain))]
        # compare consecutive levels once they are past q_hat + 1 and far enough
        # apart that the real-part bounds cannot overlap
        gap = 0.0 if m_hat is None else 2 * m_hat
        pairs = [(chain[k].real, chain[k + 1].real) for k in range(len(chain) - 1)
                 if levels[k] >= thresh and levels[k + 1] - levels[k] > gap]
        items.append({"t": t, "digits": digits + far, "n_far_digits": len(far),
                      "expected": s.head(horizon),
                      "max_link_residual": max(links) if links else 0.0,
                      "re_increasing": all(b > a for a, b in pairs), "n_pairs": len(pairs)})
    rep["itinerary_checks"] = items
    rep["itinerary_ok"] = all(i["digits"] == i["expected"] and i["max_link_residual"] <= 1.0
                              for i in items)
    rep["escape_ok"] = all(i["re_increasing"] for i in items)
    # strip containment
    rep["strip_ok"] = bool(all(in_strip_closure(z, s[0], 1e-6) for z in curve.z))
    # 4. growth of Re along the curve
    re = curve.z.real
    rep["re_at_tmax"] = float(re[-1])
    if m_hat is not None and q_hat is not None:
        sel = curve.t >= q_hat + 1
        ts, rs = curve.t[sel], re[sel]
        rep["bounds_ok"] = bool(np.all(rs >= ts - m_hat) and np.all(rs <= ts + m_hat))
        rep["weak_monotone_ok"] = bool(np.all(rs[1:] > np.maximum.accumulate(rs)[:-1] - 2 * m_hat))
    else:
        rep["bounds_ok"] = rep["weak_monotone_ok"] = None
    rep["pass"] = bool(rep["endpoint_ok"] and rep["itinerary_ok"] and rep["strip_ok"]
                       and rep["escape_ok"] and rep["bounds_ok"] is not False
                       and rep["weak_monotone_ok"] is not False)
    return rep
