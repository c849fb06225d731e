"""Scalar numeric kernels shared by the higher-level modules.

Everything here takes plain floats, complex numbers and numpy arrays so that
it compiles under numba; the public API lives in :mod:`family`,
:mod:`symbolic` and friends.  ``omegas`` is always the table of p-th roots of
unity ``exp(2*pi*i*k/p)``, k = 0..p-1.
"""
import cmath
import math

import numpy as np

from ._jit import jit

LOG_MAX = 709.0  # exp() overflows a double a little above this
TWO_PI = 2.0 * math.pi

# inverse-branch status codes
OK = 0
NO_CONVERGENCE = 1
BRANCH_VIOLATION = 2
BAD_INPUT = 3


def root_table(p):
    k = np.arange(p)
    return np.exp(2j * np.pi * k / p)


@jit
def cexp(w):
    """cmath.exp that returns inf instead of raising (matches compiled behaviour)."""
    if w.real > 709.78:
        return complex(math.inf, 0.0)
    return cmath.exp(w)


@jit
def scaled_sum(omegas, z, shift, deriv):
    """Compensated sum of omega_k**deriv * exp(omega_k z - shift), k ascending."""
    sr = 0.0
    cr = 0.0
    si = 0.0
    ci = 0.0
    for k in range(omegas.shape[0]):
        t = cexp(omegas[k] * z - shift)
        if deriv == 1:
            t = t * omegas[k]
        elif deriv == 2:
            t = t * omegas[k] * omegas[k]
        x = t.real
        s = sr + x
        if abs(sr) >= abs(x):
            cr += (sr - s) + x
        else:
            cr += (x - s) + sr
        sr = s
        x = t.imag
        s = si + x
        if abs(si) >= abs(x):
            ci += (si - s) + x
        else:
            ci += (x - s) + si
        si = s
    return complex(sr + cr, si + ci)


@jit
def max_exponent(omegas, z):
    u = -math.inf
    for k in range(omegas.shape[0]):
        r = (omegas[k] * z).real
        if r > u:
            u = r
    return u


@jit
def _canon(p, z, deriv):
    """Exact symmetry reduction: returns (z', conj_flag, sign)."""
    sign = 1.0
    if p % 2 == 0 and (z.real < 0.0 or (z.real == 0.0 and z.imag < 0.0)):
        z = -z
        if deriv == 1:
            sign = -1.0
    flip = z.imag < 0.0
    if flip:
        z = z.conjugate()
    return z, flip, sign


@jit
def f_direct(omegas, lam, z, deriv):
    """lam * sum_k omega_k**deriv exp(omega_k z); deriv in {0, 1, 2}.

    Returns (value, overflowed)."""
    p = omegas.shape[0]
    zc, flip, sign = _canon(p, z, deriv)
    u = max_exponent(omegas, zc)
    if u + math.log(lam * p) > LOG_MAX:
        return complex(math.inf, 0.0), True
    v = lam * sign * scaled_sum(omegas, zc, 0j, deriv)
    if flip:
        v = v.conjugate()
    return v, False


@jit
def f_log(omegas, loglam, z, deriv):
    """(log|v|, arg v) for v = lam * sum omega_k**deriv exp(omega_k z)."""
    p = omegas.shape[0]
    zc, flip, sign = _canon(p, z, deriv)
    u = max_exponent(omegas, zc)
    s = sign * scaled_sum(omegas, zc, complex(u, 0.0), deriv)
    a = abs(s)
    if a == 0.0:
        return -math.inf, 0.0
    arg = math.atan2(s.imag, s.real)
    if flip:
        arg = -arg
    return loglam + u + math.log(a), arg


@jit
def f_scaled(omegas, z, deriv):
    """(u, s) with sum omega_k**deriv exp(omega_k z) = exp(u) * s, |s| <= p."""
    p = omegas.shape[0]
    zc, flip, sign = _canon(p, z, deriv)
    u = max_exponent(omegas, zc)
    s = sign * scaled_sum(omegas, zc, complex(u, 0.0), deriv)
    if flip:
        s = s.conjugate()
    return u, s


@jit
def one_plus_eps(omegas, z, deriv):
    """sum_k omega_k**deriv exp((omega_k - 1) z); deriv=0 gives 1 + eps(z)."""
    flip = z.imag < 0.0
    zc = z.conjugate() if flip else z
    s = scaled_sum(omegas, zc, zc, deriv)
    if flip:
        s = s.conjugate()
    return s


# --- inverse branch -------------------------------------------------------


@jit
def in_branch(z, j, cotp, slack):
    """Closed half-strip {Im z in [(2j-1)pi, (2j+1)pi], Re z >= cot(pi/p)|Im z|}."""
    y = z.imag
    if y < (2 * j - 1) * math.pi - slack or y > (2 * j + 1) * math.pi + slack:
        return False
    return z.real >= cotp * abs(y) - slack


@jit
def _log_branch(omegas, z):
    """F(z) = z + Log(1 + eps(z)) (a branch of log f/lam) and F'(z)."""
    a = one_plus_eps(omegas, z, 0)
    b = one_plus_eps(omegas, z, 1)
    if a == 0:
        return complex(math.nan, 0.0), complex(math.nan, 0.0), 0.0
    return z + cmath.log(a), b / a, abs(a)


@jit
def _finite(z):
    return math.isfinite(z.real) and math.isfinite(z.imag)


@jit
def _term_mass(omegas, z):
    """sum_k |exp((omega_k - 1) z)|."""
    t = 0.0
    for k in range(omegas.shape[0]):
        t += math.exp(min(((omegas[k] - 1.0) * z).real, LOG_MAX))
    return t


@jit
def _noise(omegas, z, a):
    """Rounding level of F(z): phases (omega_k - 1) z carry about eps |z| error
    per term, amplified by 1/|1 + eps| near zeros of f."""
    return 64 * 2.2e-16 * (1.0 + abs(z)) * _term_mass(omegas, z) / max(a, 1e-300)


@jit
def _newton(omegas, z, T, j, cotp, max_step, maxit):
    """Contracting Newton for F(z) = T.  Returns (z, ok, residual).

    Next to zeros of f the residual cannot drop below the rounding level of F;
    there the iterate with the smallest residual-to-noise ratio is returned."""
    last = math.inf
    best = z
    best_ratio = math.inf
    best_res = math.inf
    for it in range(maxit + 1):
        F, Fp, a = _log_branch(omegas, z)
        if not (_finite(F) and _finite(Fp)) or Fp == 0:
            break
        res = abs(T - F)
        ratio = res / (1e-10 + _noise(omegas, z, a))
        if ratio < best_ratio:
            best, best_ratio, best_res = z, ratio, res
        if it == maxit:
            break
        dz = (T - F) / Fp
        step = abs(dz)
        if it == 0 and step > max_step:
            return z, False, math.inf
        if step <= 4e-16 * max(1.0, abs(z)):
            break
        if it > 0 and step > 0.5 * last:
            # no contraction: acceptable only at the rounding level of F
            break
        zn = z + dz
        if not in_branch(zn, j, cotp, 1e-6 * (1.0 + abs(zn))):
            break
        z = zn
        last = step
    return best, best_ratio <= 1.0, best_res


@jit
def _newton_direct(omegas, z, wl, maxit):
    """Newton on H(z) = (1 + eps(z)) - wl e^{-z}, which has no log branch and
    stays smooth through zeros of f."""
    for it in range(maxit):
        s0 = one_plus_eps(omegas, z, 0)
        s1 = one_plus_eps(omegas, z, 1)
        e = wl * cexp(-z)
        dH = s1 - s0 + e
        if dH == 0 or not _finite(dH):
            break
        dz = (s0 - e) / dH
        if not _finite(dz):
            break
        z = z - dz
        if abs(dz) <= 4e-16 * max(1.0, abs(z)):
            break
    return z


@jit
def _backward_ok(omegas, z, wl):
    """|f(z)/lam - wl| within 1e-10 |wl| plus the rounding error of f at z
    (computed as (1 + eps(z)) - wl e^{-z}, so nothing overflows)."""
    d = abs(one_plus_eps(omegas, z, 0) - wl * cexp(-z))
    tol = 1e-10 * abs(wl) * math.exp(-z.real) + 64 * 2.2e-16 * (1.0 + abs(z)) * _term_mass(omegas, z)
    return d <= tol


@jit
def _track(omegas, z, Ta, Tb, j, cotp):
    """Continuation of F(z) = Ta + s(Tb - Ta) from s=0 (z given) to s=1."""
    s = 0.0
    h = 1.0
    while s < 1.0:
        if h < 1e-10:
            return z, False
        s1 = min(1.0, s + h)
        T1 = Ta + s1 * (Tb - Ta)
        zn, ok, res = _newton(omegas, z, T1, j, cotp, 0.5, 30)
        if ok:
            z = zn
            s = s1
            h = min(2.0 * h, 1.0)
        else:
            h *= 0.5
    return z, True


@jit
def inverse_branch_kernel(omegas, lam, w, j, cotp, sinp):
    """Preimage of w under f in the closed half-strip of index j.

    Returns (z, status).  The log-domain fixed point
    z = Log w + 2 pi i j - Log(1 + eps(z)) is tried first; near the ray where
    it stops contracting, F(z) = log w is followed by continuation from a
    far-right start along a path that avoids the real slit.
    """
    if w == 0 or not _finite(w):
        return complex(math.nan, math.nan), BAD_INPUT
    wl = w / lam
    arg = math.atan2(wl.imag, wl.real)
    T = complex(math.log(abs(wl)), arg + TWO_PI * j)

    z = T
    conv = False
    for it in range(64):
        a = one_plus_eps(omegas, z, 0)
        if a == 0 or not _finite(a):
            break
        zn = T - cmath.log(a)
        # drifting far left of the half-strip: the iteration is diverging
        if not _finite(zn) or zn.real < cotp * abs(zn.imag) - TWO_PI * (abs(j) + 2):
            break
        d = abs(zn - z)
        z = zn
        if d <= 1e-14 * max(1.0, abs(z)):
            conv = True
            break
    if conv and in_branch(z, j, cotp, 1e-9 * (1.0 + abs(z))):
        zn, ok, res = _newton(omegas, z, T, j, cotp, 1.0, 8)
        if ok:
            return zn, OK
        return z, OK

    # continuation from a point where eps is negligible
    margin = max(4.0 / (sinp * sinp), 2.0)
    X0 = cotp * (2 * abs(j) + 1) * math.pi + margin
    if T.real > X0:
        X0 = T.real
    T0 = complex(X0, TWO_PI * j)
    z = T0
    conv = False
    for it in range(200):
        zn = T0 - cmath.log(one_plus_eps(omegas, z, 0))
        d = abs(zn - z)
        z = zn
        if d <= 1e-14 * max(1.0, abs(z)):
            conv = True
            break
    if not conv:
        return z, NO_CONVERGENCE
    if arg > 0:
        side = 1.0
    elif arg < 0:
        side = -1.0
    else:
        side = -1.0 if j < 0 else 1.0
    hop = complex(0.0, side * 0.25 * math.pi)
    z, ok = _track(omegas, z, T0, T0 + hop, j, cotp)
    if ok:
        z, ok = _track(omegas, z, T0 + hop, complex(T.real, T0.imag) + hop, j, cotp)
    if ok:
        z, ok = _track(omegas, z, complex(T.real, T0.imag) + hop, T, j, cotp)
    if not ok:
        # the path can graze the boundary ray (where f has zeros); polish the
        # last tracked point directly before giving up
        zn, ok, res = _newton(omegas, z, T, j, cotp, 1.0, 30)
        if ok:
            z = zn
        else:
            # within rounding of a zero of f a log-free Newton finishes the job
            # and a backward check is as good as doubles allow
            for cand in (zn, _newton_direct(omegas, zn, wl, 30)):
                if _backward_ok(omegas, cand, wl) and in_branch(cand, j, cotp, 1e-9 * (1.0 + abs(cand))):
                    return cand, OK
            return z, NO_CONVERGENCE
    zn, ok, res = _newton(omegas, z, T, j, cotp, 1.0, 8)
    if ok:
        z = zn
    if not in_branch(z, j, cotp, 1e-9 * (1.0 + abs(z))):
        return z, BRANCH_VIOLATION
    return z, OK


# --- plane partition ------------------------------------------------------

POLYGON = 0
STRIP = 1
SECTOR = 2
BOUNDARY = 3
UNCLASSIFIED = 4


@jit
def classify_code(zr, zi, p, nu, tau, tol):
    """(kind, index) for P(nu), strips Q_k, sectors T_j; see geometry.py."""
    amin = math.inf
    for k in range(p):
        ang = TWO_PI * k / p
        a = nu - (zr * math.cos(ang) + zi * math.sin(ang))
        if a < amin:
            amin = a
    if abs(amin) <= tol:
        return BOUNDARY, -1
    if amin > 0:
        return POLYGON, -1
    for k in range(p):
        ang = (2 * k + 1) * math.pi / p
        ca = math.cos(ang)
        sa = math.sin(ang)
        wr = zr * ca + zi * sa
        wi = zi * ca - zr * sa
        if wr > 0:
            b = tau - abs(wi)
            if abs(b) <= tol:
                return BOUNDARY, -1
            if b > 0:
                return STRIP, k
    cp = math.cos(math.pi / p)
    sp = math.sin(math.pi / p)
    for j in range(p):
        ang = TWO_PI * j / p
        ca = math.cos(ang)
        sa = math.sin(ang)
        xr = zr * ca - zi * sa
        xi = zr * sa + zi * ca
        m1 = xr - nu
        m2 = -tau - (xi * cp - xr * sp)
        m3 = (xi * cp + xr * sp) - tau
        lo = min(m1, min(m2, m3))
        if lo >= -tol:
            if lo <= tol:
                return BOUNDARY, -1
            return SECTOR, j
    return UNCLASSIFIED, -1


@jit
def classify_logpolar(logr, theta, p, nu, tau, tol):
    """Classification of exp(logr + i theta) when |z| may exceed double range."""
    if logr < 300.0:
        r = math.exp(logr)
        return classify_code(r * math.cos(theta), r * math.sin(theta), p, nu, tau, tol)
    # |z| is astronomically larger than nu and tau: only angles matter
    for k in range(p):
        d = theta - (2 * k + 1) * math.pi / p
        d = (d + math.pi) % TWO_PI - math.pi
        if math.cos(d) > 0:
            sd = abs(math.sin(d))
            if sd == 0.0 or logr + math.log(sd) < math.log(tau):
                return STRIP, k
    j = int(round(-theta * p / TWO_PI)) % p
    return SECTOR, j


@jit
def strip_code(y, tol):
    """(k, on_boundary) for Im z = y and R(k) = {(2k-1)pi < Im z < (2k+1)pi}."""
    k = int(math.floor((y + math.pi) / TWO_PI))
    lo = (2 * k - 1) * math.pi
    if abs(y - lo) < tol or abs(y - lo - TWO_PI) < tol:
        return k, True
    return k, False


# --- towers exp^h(m) for log-moduli past double range -----------------------
# Same canonical form as towers.Tower: h == 0 when the value fits, otherwise
# LOG_MAX < m <= exp(LOG_MAX).

_BIG = math.exp(LOG_MAX)


@jit
def tw_norm(h, m):
    while h > 0 and m <= LOG_MAX:
        m = math.exp(m)
        h -= 1
    while m > _BIG:
        m = math.log(m)
        h += 1
    return h, m


@jit
def tw_exp(h, m):
    if h == 0 and m <= LOG_MAX:
        return 0, math.exp(m)
    return tw_norm(h + 1, m)


@jit
def tw_scale(h, m, c):
    """value * c for 0 < c."""
    if h == 0:
        v = m * c
        if v <= _BIG:
            return 0, v
        return 1, math.log(m) + math.log(c)
    if h == 1:
        return tw_norm(1, m + math.log(c))
    return h, m


@jit
def tw_add(h, m, a):
    if h == 0:
        return tw_norm(0, m + a)
    if h == 1:
        return 1, m + math.log1p(a * math.exp(-m))
    return h, m


@jit
def level_index0(x):
    if x < 0.0:
        return x
    lev = 0
    while x >= 1.0:
        x = math.log(x)
        lev += 1
    return lev + x


@jit
def tw_level_index(h, m):
    return h + level_index0(m)


@jit
def reduce_angle(theta, p):
    """theta reduced mod 2 pi/p into [-pi/p, pi/p]."""
    w = TWO_PI / p
    return theta - w * math.floor(theta / w + 0.5)


@jit
def far_step(h, m, theta, arg_known, p, loglam):
    """One step of the dominant-term model on (log|z| = exp^h(m), arg z).

    log|f(z)| = log lam + |z| cos(theta*), arg f(z) = |z| sin(theta*) mod 2 pi
    where theta* is arg z reduced by the p-fold symmetry.  The new argument is
    meaningful only while |z| < 2^53; beyond that the conservative angle
    theta* = pi/p is used for every later step.
    Returns (h, m, theta, arg_known)."""
    if arg_known:
        ts = reduce_angle(theta, p)
    else:
        ts = math.pi / p
    ct = math.cos(ts)
    if h == 0 and m <= LOG_MAX:
        r = math.exp(m)
        nh, nm = tw_norm(0, loglam + r * ct)
        if arg_known and r < 9.007199254740992e15:
            nt = r * math.sin(ts)
            nt = nt - TWO_PI * math.floor(nt / TWO_PI)
            return nh, nm, nt, True
        return nh, nm, 0.0, False
    eh, em = tw_exp(h, m)
    eh, em = tw_scale(eh, em, ct)
    eh, em = tw_add(eh, em, loglam)
    return eh, em, 0.0, False
