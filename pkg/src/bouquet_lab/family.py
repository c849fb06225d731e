"""The family f(z) = lam * sum_{k<p} exp(omega^k z), omega = exp(2 pi i / p).

Point evaluators, the error term eps with f = lam e^z (1 + eps), the reduced
power series g with f(z) = g(z^p), and the maximum modulus M(r).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels as K
from .errors import FamilyOverflowError, ParameterError


@dataclass(frozen=True)
class FamilyParams:
    """Member of the family: symmetry order ``p >= 3`` and scale ``lam > 0``."""

    p: int
    lam: float = 1.0

    def __post_init__(self):
        if isinstance(self.p, bool) or int(self.p) != self.p or self.p < 3:
            raise ParameterError(f"p must be an integer >= 3, got {self.p!r}")
        lam = float(self.lam)
        if not (math.isfinite(lam) and lam > 0):
            raise ParameterError(f"lambda must be finite and > 0, got {self.lam!r}")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "lam", lam)

    @cached_property
    def omegas(self) -> np.ndarray:
        return K.root_table(self.p)

    @property
    def omega(self) -> complex:
        return complex(self.omegas[1])

    @property
    def log_lam(self) -> float:
        return math.log(self.lam)

    @property
    def cot(self) -> float:
        """cot(pi/p): slope of the ray V_0 written as x = cot * y."""
        return 1.0 / math.tan(math.pi / self.p)

    def to_dict(self):
        return {"p": self.p, "lambda": self.lam}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["p"]), float(d.get("lambda", d.get("lam", 1.0))))


def eval_f(params: FamilyParams, z: complex) -> complex:
    v, over = K.f_direct(params.omegas, params.lam, complex(z), 0)
    if over:
        raise FamilyOverflowError(f"exp term overflows at z={z!r}; use eval_f_log")
    return v


def eval_f_prime(params: FamilyParams, z: complex) -> complex:
    v, over = K.f_direct(params.omegas, params.lam, complex(z), 1)
    if over:
        raise FamilyOverflowError(f"exp term overflows at z={z!r}")
    return v


def eval_f_second(params: FamilyParams, z: complex) -> complex:
    v, over = K.f_direct(params.omegas, params.lam, complex(z), 2)
    if over:
        raise FamilyOverflowError(f"exp term overflows at z={z!r}")
    return v


def eval_f_log(params: FamilyParams, z: complex, deriv: int = 0):
    """(log|f^(deriv)(z)|, arg f^(deriv)(z)) without overflow."""
    return K.f_log(params.omegas, params.log_lam, complex(z), deriv)


def f_error_bound(params: FamilyParams, z: complex, dz: float | None = None) -> float:
    """Attainable absolute accuracy of f near z in double precision.

    Rounding in the phases omega^k z costs about eps |z| per term; an input
    error ``dz`` (default a few ulps of z) adds |f'(z)| dz.  Next to zeros of
    f this dwarfs |f| itself.
    """
    z = complex(z)
    u = 2.2e-16
    if dz is None:
        dz = 8 * u * abs(z)
    mass = float(np.sum(np.abs(np.exp(params.omegas * z))))
    return params.lam * (64 * u * (1 + abs(z)) * mass) + abs(eval_f_prime(params, z)) * dz


def eval_epsilon(params: FamilyParams, z: complex) -> complex:
    """eps(z) = sum_{k>=1} exp((omega^k - 1) z), so f = lam e^z (1 + eps)."""
    z = complex(z)
    if max(((params.omegas[1:] - 1.0) * z).real) > K.LOG_MAX:
        raise FamilyOverflowError(f"eps overflows at z={z!r}")
    # summed term by term (not as (1 + eps) - 1) so small eps keeps its digits
    flip = z.imag < 0.0
    zc = z.conjugate() if flip else z
    v = K.scaled_sum(params.omegas[1:], zc, zc, 0)
    return v.conjugate() if flip else v


def eval_g(params: FamilyParams, w: complex, truncation_tol: float = 1e-17,
           max_terms: int = 10_000) -> complex:
    """lam * p * sum_j w^j / (jp)!, truncated once terms are decreasing and below
    truncation_tol * max(1, |partial sum|)."""
    if not truncation_tol > 0:
        raise ParameterError("truncation_tol must be > 0")
    p = params.p
    w = complex(w)
    aw = abs(w)
    term = 1.0 + 0j
    total = term
    for j in range(1, max_terms):
        d = 1.0
        for i in range(1, p + 1):
            d *= (j - 1) * p + i
        term = term * w / d
        total += term
        # terms decrease from here on once (jp)^p exceeds |w|
        if (j * p) ** p > aw and abs(term) <= truncation_tol * max(abs(total), 1.0):
            break
    else:
        raise FamilyOverflowError("g series did not settle")
    return params.lam * p * total


def log_f_array(params: FamilyParams, zs) -> np.ndarray:
    """Vectorized log|f| (plain sum; fine away from cancellation)."""
    zs = np.asarray(zs, dtype=complex)
    e = params.omegas[:, None] * zs.ravel()[None, :]
    u = e.real.max(axis=0)
    s = np.exp(e - u).sum(axis=0)
    with np.errstate(divide="ignore"):
        out = params.log_lam + u + np.log(np.abs(s))
    return out.reshape(zs.shape)


def log_max_modulus(params: FamilyParams, r: float, n_samples: int = 4096,
                    refine_tol: float = 1e-12) -> float:
    """log M(r), M(r) = max_{|z|=r} |f(z)|.

    By the p-fold symmetry only the arc |arg z| <= pi/p is scanned; the best
    sample is refined by golden-section search on that bracket.
    """
    r = float(r)
    if r < 0 or not math.isfinite(r):
        raise ParameterError("radius must be finite and >= 0")
    if r == 0.0:
        return params.log_lam + math.log(params.p)
    a = math.pi / params.p
    th = np.linspace(-a, a, n_samples)
    vals = log_f_array(params, r * np.exp(1j * th))
    i = int(np.argmax(vals))
    lo = th[max(i - 1, 0)]
    hi = th[min(i + 1, n_samples - 1)]

    def g(t):
        return K.f_log(params.omegas, params.log_lam, complex(r * math.cos(t), r * math.sin(t)), 0)[0]

    # angle width giving a relative value error below refine_tol
    width = math.sqrt(2.0 * refine_tol) / max(r, 1.0)
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv * (hi - lo)
    x2 = lo + inv * (hi - lo)
    g1, g2 = g(x1), g(x2)
    while hi - lo > width:
        if g1 < g2:
            lo, x1, g1 = x1, x2, g2
            x2 = lo + inv * (hi - lo)
            g2 = g(x2)
        else:
            hi, x2, g2 = x2, x1, g1
            x1 = hi - inv * (hi - lo)
            g1 = g(x1)
    return max(float(vals[i]), g1, g2)


def max_modulus(params: FamilyParams, r: float, n_samples: int = 4096,
                refine_tol: float = 1e-12) -> float:
    lm = log_max_modulus(params, r, n_samples, refine_tol)
    if lm > K.LOG_MAX:
        raise FamilyOverflowError(f"M({r}) exceeds double range; use log_max_modulus")
    # the scan can round a hair below the value on the positive axis
    return max(math.exp(lm), abs(eval_f(params, r)))
