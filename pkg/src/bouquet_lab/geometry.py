"""Plane partition and the auxiliary regions used by the other modules.

* polygon ``P(nu) = {Re(z e^{-2 pi i k/p}) < nu for all k}``
* strips ``Q_k``: ``w = z e^{-(2k+1) i pi/p}`` with ``Re w > 0`` and ``|Im w| < tau``
  (around the rays ``V_k`` at angle ``(2k+1) pi/p``)
* sectors ``T_j(nu)``: the unbounded remainder; ``T_0`` meets the positive
  real axis and ``T_{j+1}`` is ``T_j`` turned clockwise by ``2 pi/p``
* horizontal strips ``R(k) = {(2k-1) pi < Im z < (2k+1) pi}``
* rectangles ``D_m`` around ``V_0``, trapeziums ``T_{m,c}``, half-strips ``H_{m,c}``

Index conventions under ``z -> z e^{-2 pi i/p}``: sector index goes up by one,
strip index goes down by one (strips are numbered counterclockwise).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels as K
from .errors import BoundaryError, EmptyTrapezium, InvariantViolation, ParameterError
from .family import FamilyParams, log_f_array, log_max_modulus

BOUNDARY_TOL = 1e-12

_KINDS = {K.POLYGON: "Polygon", K.STRIP: "Strip", K.SECTOR: "Sector",
          K.BOUNDARY: "Boundary", K.UNCLASSIFIED: "Unclassified"}


@dataclass(frozen=True)
class RegionLabel:
    kind: str
    index: int = -1

    def __str__(self):
        return self.kind if self.index < 0 else f"{self.kind}({self.index})"


@dataclass(frozen=True)
class RegionScheme:
    params: FamilyParams
    sigma: float
    eta: float
    tau: float
    nu: float
    c: float
    safety: float = 1.05
    eps_hat: float | None = field(default=None, compare=False)

    @property
    def p(self):
        return self.params.p

    def to_dict(self):
        return {"p": self.p, "lambda": self.params.lam, "sigma": self.sigma,
                "eta": self.eta, "tau": self.tau, "nu": self.nu, "c": self.c,
                "safety": self.safety}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d, check=True):
        s = cls(FamilyParams(int(d["p"]), float(d.get("lambda", 1.0))),
                float(d["sigma"]), float(d["eta"]), float(d["tau"]),
                float(d["nu"]), float(d["c"]), float(d.get("safety", 1.05)))
        if check:
            check_scheme(s)
        return s

    @classmethod
    def from_json(cls, text, check=True):
        return cls.from_dict(json.loads(text), check)

    def with_c(self, c):
        return replace(self, c=float(c))


# --- constants -------------------------------------------------------------


def tau_bound(p, eta):
    return math.log(4 * p * eta) / (2 * math.sin(math.pi / p))


def t0_vertex_height(p, tau, nu):
    """|Im| of the two finite vertices of T_0(nu) on the line Re z = nu."""
    return (math.sin(math.pi / p) * nu - tau) / math.cos(math.pi / p)


def t0_boundary_points(p, tau, nu, n, radius=None):
    """Points on the boundary of T_0(nu) inside |z| <= radius (default 4 nu)."""
    radius = 4 * nu if radius is None else radius
    h = t0_vertex_height(p, tau, nu)
    if h <= 0:
        return np.empty(0, dtype=complex)
    a = np.exp(1j * math.pi / p)
    n_seg = max(n // 5, 8)
    seg = nu + 1j * np.linspace(-h, h, n_seg)
    # upper edge: a (r - i tau), starting at the vertex nu + i h
    r0 = (a.conjugate() * complex(nu, h)).real
    r1 = max(radius, r0 + 1.0)
    r = np.linspace(r0, r1, (n - n_seg) // 2)
    up = a * (r - 1j * tau)
    return np.concatenate([seg, up, up.conjugate()])


def in_t0(p, tau, nu, z, tol=0.0):
    z = np.asarray(z)
    a = np.exp(-1j * math.pi / p)
    return ((z.real >= nu - tol) & ((z * a).imag <= -tau + tol)
            & ((z * a.conjugate()).imag >= tau - tol))


def t0_interior_points(p, tau, nu, n, radius=None, rng=None):
    """Points of T_0(nu) with |z| <= radius, a grid or uniform draws if rng is given."""
    radius = 4 * nu if radius is None else radius
    if rng is None:
        m = int(math.sqrt(4 * n)) + 2
        x, y = np.meshgrid(np.linspace(nu, radius, m), np.linspace(-radius, radius, m))
        z = (x + 1j * y).ravel()
    else:
        z = rng.uniform(nu, radius, 4 * n) + 1j * rng.uniform(-radius, radius, 4 * n)
    z = z[in_t0(p, tau, nu, z) & (np.abs(z) <= radius)]
    return z[:n]


def eq21_margin(p, eta, zs):
    """min over samples and k >= 1 of log|e^z| - log(4 p eta |e^{omega^k z}|)."""
    if len(zs) == 0:
        return -math.inf
    om = K.root_table(p)[1:]
    d = ((1.0 - om)[:, None] * np.asarray(zs)[None, :]).real
    return float(d.min() - math.log(4 * p * eta))


def _nu_ok(p, tau, eta, nu, n):
    zs = np.concatenate([t0_boundary_points(p, tau, nu, n),
                         t0_interior_points(p, tau, nu, n // 4)])
    return eq21_margin(p, eta, zs) >= -1e-9 * math.log(4 * p * eta)


def search_nu(p, tau, eta, n=2000):
    """Doubling from tau*p, then bisection to 1%."""
    hi = tau * p
    while not _nu_ok(p, tau, eta, hi, n):
        hi *= 2
        if hi > 1e8:
            raise InvariantViolation("no nu found for (2.1)-type inequality")
    if hi == tau * p:
        return hi
    lo = hi / 2
    while hi - lo > 0.01 * hi:
        mid = 0.5 * (lo + hi)
        if _nu_ok(p, tau, eta, mid, n):
            hi = mid
        else:
            lo = mid
    return hi


def check_scheme(s: RegionScheme):
    p = s.p
    if not (0 < s.sigma < 1 / (8 * math.sqrt(2))):
        raise InvariantViolation(f"sigma={s.sigma} outside (0, 1/(8*sqrt 2))")
    if not s.eta > 4 / s.sigma:
        raise InvariantViolation(f"eta={s.eta} must exceed 4/sigma={4 / s.sigma}")
    tb = tau_bound(p, s.eta)
    if s.tau < tb * (1 - 1e-12):
        raise InvariantViolation(f"tau={s.tau} below bound {tb}")
    if not s.safety >= 1:
        raise InvariantViolation("safety must be >= 1")
    if not s.c > s.tau / math.sin(math.pi / p):
        raise InvariantViolation(f"c={s.c} must exceed tau/sin(pi/p)")
    if not _nu_ok(p, s.tau, s.eta, s.nu, 2000):
        raise InvariantViolation(f"nu={s.nu} fails the sampled (2.1)-type inequality")


def make_region_scheme(params: FamilyParams, sigma=None, eta=None, tau=None,
                       nu=None, c=None, safety=1.05) -> RegionScheme:
    """Constants with defaults; explicit values are validated, not adjusted."""
    if not isinstance(params, FamilyParams):
        raise ParameterError("params must be FamilyParams")
    p = params.p
    sigma = 1 / 16 if sigma is None else float(sigma)
    if not (0 < sigma < 1 / (8 * math.sqrt(2))):
        raise InvariantViolation(f"sigma={sigma} outside (0, 1/(8*sqrt 2))")
    eta = safety * 4 / sigma if eta is None else float(eta)
    if not eta > 4 / sigma:
        raise InvariantViolation(f"eta={eta} must exceed 4/sigma")
    tb = tau_bound(p, eta)
    tau = tb if tau is None else float(tau)
    if tau < tb * (1 - 1e-12):
        raise InvariantViolation(f"tau={tau} below bound {tb}")
    if nu is None:
        nu = safety * search_nu(p, tau, eta)
    elif not _nu_ok(p, tau, eta, float(nu), 2000):
        raise InvariantViolation(f"nu={nu} fails the sampled (2.1)-type inequality")
    cmin = safety * tau / math.sin(math.pi / p)
    c = cmin if c is None else max(float(c), cmin)
    s = RegionScheme(params, sigma, float(eta), float(tau), float(nu), float(c), float(safety))
    check_scheme(s)
    return s


# --- classification --------------------------------------------------------


def classify_point(scheme: RegionScheme, z, tol=BOUNDARY_TOL) -> RegionLabel:
    z = complex(z)
    kind, idx = K.classify_code(z.real, z.imag, scheme.p, scheme.nu, scheme.tau, tol)
    if kind == K.UNCLASSIFIED:
        raise InvariantViolation(f"{z!r} is in no region of the partition")
    return RegionLabel(_KINDS[kind], int(idx))


def classify_codes(scheme: RegionScheme, zs, tol=BOUNDARY_TOL):
    """Vectorized classification; returns (kind, index) integer arrays."""
    zs = np.asarray(zs, dtype=complex).ravel()
    kinds = np.empty(zs.size, dtype=np.int8)
    idx = np.empty(zs.size, dtype=np.int8)
    for i, z in enumerate(zs):
        kinds[i], idx[i] = K.classify_code(z.real, z.imag, scheme.p, scheme.nu, scheme.tau, tol)
    return kinds, idx


def strip_index(z, tol=BOUNDARY_TOL) -> int:
    """k with (2k-1) pi < Im z < (2k+1) pi; BoundaryError on a strip edge."""
    k, edge = K.strip_code(complex(z).imag, tol)
    if edge:
        raise BoundaryError(f"Im z = {complex(z).imag!r} lies on a strip boundary")
    return int(k)


def in_strip_closure(z, k, tol=1e-9):
    y = complex(z).imag
    return (2 * k - 1) * math.pi - tol <= y <= (2 * k + 1) * math.pi + tol


# --- rectangles, trapeziums, half-strips -----------------------------------


def d_rectangle(scheme: RegionScheme, m: int):
    """Vertices of D_m, counterclockwise.

    D_m is bounded by C_m, C_{m+1} (perpendicular to V_0 through
    (m pi cot(pi/p), m pi)) and the translates of V_0 at distance tau."""
    if m < 1:
        raise ParameterError("m must be >= 1")
    p = scheme.p
    a = complex(math.cos(math.pi / p), math.sin(math.pi / p))
    r0 = m * math.pi / math.sin(math.pi / p)
    r1 = (m + 1) * math.pi / math.sin(math.pi / p)
    t = scheme.tau
    return [a * complex(r0, -t), a * complex(r1, -t), a * complex(r1, t), a * complex(r0, t)]


@dataclass(frozen=True)
class TrapeziumSpec:
    m: int
    c: float
    vertices: tuple
    # side i joins vertices[i-1] and vertices[i]; labels follow the bounding lines:
    # S1 on V_0, S2 on y=(2m-1)pi, S3 on y=(2m+1)pi, S4 on x=c
    sides: dict

    def contains(self, z, tol=1e-9) -> bool:
        z = complex(z)
        y = z.imag if self.m > 0 else -z.imag
        mm = abs(self.m)
        cot = _cot_from_vertices(self)
        return ((2 * mm - 1) * math.pi - tol <= y <= (2 * mm + 1) * math.pi + tol
                and cot * y - tol <= z.real <= self.c + tol)


def _cot_from_vertices(t: TrapeziumSpec):
    v = t.vertices[0]
    return abs(v.real / v.imag)


def trapezium(scheme: RegionScheme, m: int, c: float | None = None) -> TrapeziumSpec:
    if m == 0:
        raise ParameterError("trapezium index must be nonzero")
    c = scheme.c if c is None else float(c)
    cot = scheme.params.cot
    mm = abs(m)
    if not c > (2 * mm + 1) * math.pi * cot:
        raise EmptyTrapezium(f"c={c} <= (2|m|+1) pi cot(pi/p) = {(2 * mm + 1) * math.pi * cot}")
    lo, hi = (2 * mm - 1) * math.pi, (2 * mm + 1) * math.pi
    v = [complex(lo * cot, lo), complex(c, lo), complex(c, hi), complex(hi * cot, hi)]
    sides = {"S2": (0, 1), "S4": (1, 2), "S3": (2, 3), "S1": (3, 0)}
    if m < 0:
        # reflect and reverse to keep counterclockwise order
        v = [w.conjugate() for w in v[::-1]]
        sides = {"S3": (0, 1), "S4": (1, 2), "S2": (2, 3), "S1": (3, 0)}
    return TrapeziumSpec(m, c, tuple(v), sides)


def half_strip(scheme: RegionScheme, m: int, c: float | None = None):
    """Predicate for the closed half-strip H_{m,c} = {x >= c} inside closure R(m)."""
    c = scheme.c if c is None else float(c)

    def pred(z, tol=1e-9):
        z = complex(z)
        return z.real >= c - tol and in_strip_closure(z, m, tol)

    return pred


def polygon_area(vertices):
    v = np.asarray(vertices, dtype=complex)
    x, y = v.real, v.imag
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


# --- sampled expansion checks ------------------------------------------------


def _log_max_modulus_table(params, r_max, n=400):
    r = np.linspace(0.0, r_max, n)
    lm = np.array([log_max_modulus(params, x, n_samples=512) for x in r])
    return r, np.maximum.accumulate(lm)


def t0_samples(scheme: RegionScheme, n=2000, seed=0, radius=None):
    rng = np.random.default_rng(seed)
    radius = 3 * scheme.nu if radius is None else radius
    zb = t0_boundary_points(scheme.p, scheme.tau, scheme.nu, n // 4, radius)
    zi = t0_interior_points(scheme.p, scheme.tau, scheme.nu, n - len(zb), radius, rng)
    return np.concatenate([zb, zi])


def expansion_report(scheme: RegionScheme, n=2000, seed=0):
    """Sampled |f'| > 2 and |z f'/f| > 2 on T_0(nu); reports minima."""
    P = scheme.params
    zs = t0_samples(scheme, n, seed)
    lf = np.empty(zs.size)
    lfp = np.empty(zs.size)
    for i, z in enumerate(zs):
        lf[i] = K.f_log(P.omegas, P.log_lam, complex(z), 0)[0]
        lfp[i] = K.f_log(P.omegas, P.log_lam, complex(z), 1)[0]
    min_fp = float(np.min(lfp))
    min_zfpf = float(np.min(np.log(np.abs(zs)) + lfp - lf))
    return {"n": int(zs.size), "min_log_abs_fprime": min_fp,
            "min_log_abs_z_fprime_over_f": min_zfpf,
            "fprime_gt_2": min_fp > math.log(2), "zfpf_gt_2": min_zfpf > math.log(2)}


def calibrate_eps_hat(scheme: RegionScheme, n=1500, seed=0, grid=None):
    """Largest eps on a grid with |f(z)| > max(e^{eps nu}, M(eps |z|)) on samples.

    Returns (eps_hat, report).  This is an empirical stand-in for the
    existential constant of the expansion estimate."""
    P = scheme.params
    zs = t0_samples(scheme, n, seed)
    lf = np.array([K.f_log(P.omegas, P.log_lam, complex(z), 0)[0] for z in zs])
    absz = np.abs(zs)
    r, lm = _log_max_modulus_table(P, float(absz.max()))
    grid = np.round(np.arange(0.01, 1.0, 0.01), 2) if grid is None else np.asarray(grid)
    best = None
    for eps in grid:
        # conservative: use the table value at the next grid radius
        idx = np.minimum(np.searchsorted(r, eps * absz, side="left"), r.size - 1)
        bound = np.maximum(eps * scheme.nu, lm[idx])
        if np.all(lf > bound):
            best = float(eps)
    if best is None:
        raise InvariantViolation("no eps on the grid satisfies the sampled expansion bound")
    return best, {"n": int(zs.size), "eps_hat": best}
