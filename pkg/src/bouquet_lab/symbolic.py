"""Itineraries, inverse branches L_j and the periodic points z(s).

``L_j(w)`` is the preimage of w in the closed half-strip
``{(2j-1) pi <= Im z <= (2j+1) pi, Re z >= cot(pi/p) |Im z|}``: the part of
R(j) to the right of the ray V_0 (or V_{p-1} for j < 0), where f is
univalent.  It contains every trapezium T_{j,c} and half-strip H_{j,c}.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels as kern
from .errors import (BoundaryError, BranchViolation, CoverageViolation, NonConvergence,
                     ParameterError)
from .family import FamilyParams
from .geometry import RegionScheme, strip_index, trapezium


# --- itineraries -----------------------------------------------------------


@dataclass(frozen=True)
class ItinerarySpec:
    """s = preperiod + period + period + ...; K bounds |s_i| when given."""

    preperiod: tuple = ()
    period: tuple = (1,)
    K: int | None = None

    def __post_init__(self):
        pre = tuple(int(x) for x in self.preperiod)
        per = tuple(int(x) for x in self.period)
        if not per:
            raise ParameterError("period must be nonempty")
        if self.K is not None and any(abs(x) > self.K for x in pre + per):
            raise ParameterError(f"symbol exceeds K={self.K}")
        object.__setattr__(self, "preperiod", pre)
        object.__setattr__(self, "period", per)

    def __getitem__(self, i: int) -> int:
        n = len(self.preperiod)
        if i < n:
            return self.preperiod[i]
        return self.period[(i - n) % len(self.period)]

    def head(self, n):
        return [self[i] for i in range(n)]

    def shift(self, k: int = 1) -> "ItinerarySpec":
        pre, per = self.preperiod, self.period
        for _ in range(k):
            if pre:
                pre = pre[1:]
            else:
                per = per[1:] + per[:1]
        return ItinerarySpec(pre, per, self.K)

    def negate(self) -> "ItinerarySpec":
        return ItinerarySpec(tuple(-x for x in self.preperiod),
                             tuple(-x for x in self.period), self.K)

    @property
    def is_periodic(self):
        return not self.preperiod

    def in_lambda_k(self):
        return all(x != 0 for x in self.preperiod + self.period)

    def __str__(self):
        per = ",".join(map(str, self.period))
        if self.preperiod:
            return ",".join(map(str, self.preperiod)) + "|" + per
        return per

    @classmethod
    def parse(cls, text: str, K: int | None = None) -> "ItinerarySpec":
        """"1,2" (pure period) or "3|1,-1" (preperiod|period)."""
        text = text.strip().strip('"')
        try:
            if "|" in text:
                a, b = text.split("|", 1)
                pre = tuple(int(x) for x in a.split(",") if x.strip())
                per = tuple(int(x) for x in b.split(",") if x.strip())
            else:
                pre, per = (), tuple(int(x) for x in text.split(",") if x.strip())
        except ValueError as e:
            raise ParameterError(f"bad itinerary {text!r}") from e
        return cls(pre, per, K)


def primitive_words(symbols, n):
    """Words of length n that are not powers of a shorter word."""
    out = []
    for w in itertools.product(symbols, repeat=n):
        if not any(n % d == 0 and w == w[:d] * (n // d) for d in range(1, n)):
            out.append(w)
    return out


# --- inverse branches ------------------------------------------------------


def inverse_branch(scheme, w, j: int, tol: float = 1e-10) -> complex:
    """L_j(w).  tol bounds |f(z) - w| / |w| where that is attainable.

    ``scheme`` may be a RegionScheme or FamilyParams (only p, lam are used)."""
    P = scheme.params if isinstance(scheme, RegionScheme) else scheme
    w = complex(w)
    if w == 0:
        raise ParameterError("w must be nonzero")
    z, st = kern.inverse_branch_kernel(P.omegas, P.lam, w, int(j), P.cot, math.sin(math.pi / P.p))
    if st == kern.NO_CONVERGENCE:
        raise NonConvergence(f"inverse branch L_{j}({w!r}) did not converge")
    if st == kern.BRANCH_VIOLATION:
        raise BranchViolation(f"L_{j}({w!r}) left the half-strip")
    if st == kern.BAD_INPUT:
        raise ParameterError(f"bad input w={w!r}")
    return z


def in_branch_domain(params: FamilyParams, z, j, slack=1e-9):
    z = complex(z)
    return kern.in_branch(z, int(j), params.cot, slack * (1 + abs(z)))


# --- itinerary of a point --------------------------------------------------


@dataclass
class ItineraryResult:
    digits: list
    status: str  # Completed, Escaped, BoundaryHit, Overflow
    n: int  # index at which the status was reached (n_max for Completed)

    def __str__(self):
        return f"{self.status}({self.n}): {self.digits}"


def itinerary_of(scheme, z, n_max: int, escape_radius: float | None = None) -> ItineraryResult:
    """Digits strip_index(f^n(z)) for n = 0, 1, ... (never raises)."""
    P = scheme.params if isinstance(scheme, RegionScheme) else scheme
    if escape_radius is None:
        escape_radius = math.exp(scheme.c) if isinstance(scheme, RegionScheme) else math.inf
    z = complex(z)
    digits = []
    for n in range(n_max + 1):
        try:
            digits.append(strip_index(z))
        except BoundaryError:
            return ItineraryResult(digits, "BoundaryHit", n)
        if abs(z) > escape_radius:
            return ItineraryResult(digits, "Escaped", n)
        if n == n_max:
            break
        v, over = kern.f_direct(P.omegas, P.lam, z, 0)
        if over or not (math.isfinite(v.real) and math.isfinite(v.imag)):
            return ItineraryResult(digits, "Overflow", n + 1)
        z = v
    return ItineraryResult(digits, "Completed", n_max)


# --- periodic points -------------------------------------------------------


@dataclass
class PeriodicPointRecord:
    itinerary: ItinerarySpec
    z: complex
    multiplier: complex
    period: int
    orbit: list = field(default_factory=list)  # z, f(z), ..., f^{n-1}(z)
    steps: list = field(default_factory=list)  # |z_{i+1} - z_i| per sweep

    def cycle_residual(self, params):
        """max_k |f(orbit_k) - orbit_{k+1}| around the cycle."""
        n = self.period
        res = 0.0
        for k in range(n):
            v, _ = kern.f_direct(params.omegas, params.lam, self.orbit[k], 0)
            res = max(res, abs(v - self.orbit[(k + 1) % n]))
        return res

    def preimage_residual(self, params):
        """max_k |orbit_k - L_{s_k}(orbit_{k+1})|: the well-conditioned cycle test.

        The forward residual above is inflated by |f'| times the rounding of
        the stored points; the backward one is not."""
        n = self.period
        digits = self.itinerary.period
        return max(abs(self.orbit[k] - inverse_branch(params, self.orbit[(k + 1) % n], digits[k]))
                   for k in range(n))

    def to_dict(self):
        return {"itinerary": str(self.itinerary), "period": self.period,
                "re": self.z.real, "im": self.z.imag,
                "multiplier_re": self.multiplier.real, "multiplier_im": self.multiplier.imag,
                "orbit": [[q.real, q.imag] for q in self.orbit]}


def _compose(P, digits, z):
    """L_{s_0} o ... o L_{s_{n-1}} (z); returns the list [y_0, ..., y_{n-1}]."""
    pts = []
    for s in reversed(digits):
        try:
            z = inverse_branch(P, z, s)
        except BranchViolation as e:
            raise CoverageViolation(str(e)) from e
        pts.append(z)
    return pts[::-1]


def periodic_point(scheme: RegionScheme, digits, tol: float = 1e-14,
                   max_iter: int = 200, K_bound: int | None = None) -> PeriodicPointRecord:
    """z(s) for the periodic itinerary s = (s_0 ... s_{n-1})^infinity."""
    if isinstance(digits, ItinerarySpec):
        if not digits.is_periodic:
            raise ParameterError("periodic_point needs a pure period; see limit_point")
        digits = list(digits.period)
    digits = [int(x) for x in digits]
    if not digits or any(x == 0 for x in digits):
        raise ParameterError("symbols must satisfy 1 <= |s_i| (<= K)")
    if K_bound is not None and any(abs(x) > K_bound for x in digits):
        raise ParameterError(f"symbols must satisfy |s_i| <= {K_bound}")
    P = scheme.params
    z = complex(scheme.c, 2 * math.pi * digits[0])
    steps = []
    for it in range(max_iter):
        pts = _compose(P, digits, z)
        step = abs(pts[0] - z)
        steps.append(step)
        z = pts[0]
        if step < tol * max(1.0, abs(z)):
            break
    else:
        raise NonConvergence(f"periodic point {digits} not settled after {max_iter} sweeps")
    # one more sweep from the limit gives a self-consistent orbit
    pts = _compose(P, digits, z)
    mult = 1.0 + 0j
    for q in pts:
        v, _ = kern.f_direct(P.omegas, P.lam, q, 1)
        mult *= v
    return PeriodicPointRecord(ItinerarySpec((), tuple(digits)), pts[0], mult,
                               len(digits), pts, steps)


def limit_point(scheme: RegionScheme, s: ItinerarySpec) -> complex:
    """z(s) for a preperiodic itinerary: L_{pre} applied to z(period)."""
    z = periodic_point(scheme, s.period).z
    for d in reversed(s.preperiod):
        z = inverse_branch(scheme, z, d)
    return z


def orbit_in_trapeziums(scheme: RegionScheme, rec: PeriodicPointRecord, c=None, tol=1e-9):
    digits = rec.itinerary.period
    return all(trapezium(scheme, d, c).contains(q, tol) for d, q in zip(digits, rec.orbit))


# --- covering --------------------------------------------------------------


def s4_halfwidth(params: FamilyParams, m: int, c: float, n=512):
    """(sampled, bound) for max |f/lam - exp| on the side x = c of T_{m,c}."""
    p = params.p
    y = np.linspace((2 * m - 1) * math.pi, (2 * m + 1) * math.pi, n)
    z = c + 1j * y
    e = params.omegas[1:, None] * z[None, :]
    sampled = float(np.abs(np.exp(e).sum(axis=0)).max())
    bound = (p - 1) * math.exp((2 * abs(m) + 1) * math.pi * math.sin(2 * math.pi / p)
                               + c * math.cos(2 * math.pi / p))
    return sampled, bound


def covering_radius(params: FamilyParams, m: int, c: float):
    """r(m, c) = e^c - max |f - exp| on S^4 (using the larger of sample and bound)."""
    sampled, bound = s4_halfwidth(params, m, c)
    return math.exp(c) - max(sampled, bound)


def covering_c(scheme: RegionScheme, K: int = 3, step: float = 0.125):
    """Smallest c (on a grid, then times safety) with all T_{j,c}, 1 <= |j| <= K,
    nondegenerate and T^K_c inside {Re z > 0} cap B(0, r(m, c)) for every m."""
    P = scheme.params
    cot = P.cot
    c = max(scheme.c, (2 * K + 1) * math.pi * cot + 1e-9)
    while True:
        far = abs(complex(c, (2 * K + 1) * math.pi))
        if all(covering_radius(P, m, c) > far for m in range(1, K + 1)):
            break
        c += step
        if c > 700:
            raise NonConvergence("no covering c below 700")
    return c * scheme.safety


def covering_scheme(scheme: RegionScheme, K: int = 3) -> RegionScheme:
    c = covering_c(scheme, K)
    return scheme.with_c(max(c, scheme.c))


def _y_line_margin(params, m, sign, n):
    """min of -Re(e^{iy}(1 + eps(z))) = -Re f / (lam e^x) along Y^{+-}_m."""
    y = (2 * m + sign) * math.pi
    x0 = params.cot * y
    xi = np.concatenate([np.geomspace(1e-9, 1.0, n // 2), np.linspace(1.0, 60.0, n - n // 2)])
    out = math.inf
    ey = complex(math.cos(y), math.sin(y))
    for d in xi:
        z = complex(x0 + d, y)
        v = ey * kern.one_plus_eps(params.omegas, z, 0)
        out = min(out, -v.real)
    return out


def calibrate_cover_m_hat(scheme: RegionScheme, m_scan=30, n=400):
    """Largest m in 1..m_scan whose half-lines Y^{+-}_m are not mapped into Re < 0."""
    P = scheme.params
    bad = [m for m in range(1, m_scan + 1)
           if min(_y_line_margin(P, m, 1, n), _y_line_margin(P, m, -1, n)) <= 0]
    return max(bad) if bad else 0


def verify_covering(scheme: RegionScheme, K: int = 3, n_samples: int = 1000,
                    m_range=None, c: float | None = None):
    """Half-lines Y^{+-}_m map into Re < 0; the right side S^4 maps into a thin annulus
    around |w| = e^c, crossing both imaginary half-axes."""
    P = scheme.params
    c = scheme.c if c is None else float(c)
    m_range = range(1, K + 1) if m_range is None else m_range
    rep = {"c": c, "K": K, "y_lines": [], "annulus": []}
    ok = True
    for m in m_range:
        mp = _y_line_margin(P, m, 1, n_samples)
        mn = _y_line_margin(P, m, -1, n_samples)
        rep["y_lines"].append({"m": m, "min_neg_re_plus": mp, "min_neg_re_minus": mn})
        ok &= mp > 0 and mn > 0
        sampled, bound = s4_halfwidth(P, m, c, n_samples)
        y = np.linspace((2 * m - 1) * math.pi, (2 * m + 1) * math.pi, n_samples)
        # f/(lam e^c) on S^4
        v = np.array([kern.one_plus_eps(P.omegas, complex(c, t), 0) for t in y]) * np.exp(1j * y)
        re_sign = np.signbit(v.real)
        idx = np.nonzero(re_sign[:-1] != re_sign[1:])[0]
        im_at = v.imag[idx]
        crosses = bool(len(idx) >= 2 and (im_at > 0).any() and (im_at < 0).any())
        ratio = sampled / math.exp(c)
        rep["annulus"].append({"m": m, "halfwidth": sampled, "bound": bound,
                               "ratio": ratio, "bound_ratio": bound / math.exp(c),
                               "re_sign_changes": int(len(idx)), "crosses_both": crosses})
        ok &= crosses and ratio < 1
    rep["pass"] = bool(ok)
    return rep
