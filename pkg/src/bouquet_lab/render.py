"""Escape-time grids, the iterated maximum modulus and the fast-escape test.

Orbits are iterated exactly while |z| stays below ``LOG_SCALE_THRESHOLD``;
past it (or on overflow) they continue on (log|z|, arg z) with the
dominant-term model of :func:`kernels.far_step`.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels as kern
from ._jit import BACKEND, jit
from .errors import ParameterError, RTooSmall
from .family import FamilyParams, log_max_modulus
from .geometry import RegionLabel, RegionScheme, _KINDS
from .towers import Tower

LOG_SCALE_THRESHOLD = 1e150
TAIL = 5
NO_DIGIT = -32768


# --- iterated maximum modulus ----------------------------------------------


@dataclass(frozen=True)
class MGrowthTable:
    R: float
    values: tuple  # log M^n(R) as Towers, n = 0..n_max

    def __len__(self):
        return len(self.values)

    def __getitem__(self, n):
        return self.values[n]


def _log_M(params: FamilyParams, x: Tower) -> Tower:
    """log M(r) for r = exp(x)."""
    if x.height == 0 and x.mant <= math.log(50.0):
        return Tower.of(log_max_modulus(params, math.exp(x.mant)))
    # max at arg z = 0 where f = lam e^r (1 + eps), |eps| < p e^{-r(1 - cos(2 pi/p))}
    return x.exp().add(params.log_lam)


def build_m_table(params: FamilyParams, R: float, n_max: int) -> MGrowthTable:
    if not (R > 0 and math.isfinite(R)):
        raise ParameterError("R must be positive and finite")
    x = Tower.of(math.log(R))
    first = _log_M(params, x)
    if not first > x:
        raise RTooSmall(f"M(R) <= R at R={R}")
    vals = [x]
    for _ in range(n_max):
        x = _log_M(params, x)
        if not x > vals[-1]:
            raise RTooSmall("iterated maximum modulus is not increasing")
        vals.append(x)
    return MGrowthTable(float(R), tuple(vals))


@dataclass
class LogOrbitPoint:
    logmod: Tower | None  # None for z = 0
    arg: float | None  # None once the argument is lost to rounding


def log_orbit(params: FamilyParams, z, n: int):
    """log|f^k(z)| for k = 0..n: exact while |z| <= LOG_SCALE_THRESHOLD, then the
    dominant-term model (which is a lower bound once the argument is lost)."""
    z = complex(z)
    out = []
    P = params
    cart = True
    h, m, th, known = 0, 0.0, 0.0, True
    for k in range(n + 1):
        if cart:
            a = abs(z)
            out.append(LogOrbitPoint(Tower.of(math.log(a)) if a > 0 else None,
                                     math.atan2(z.imag, z.real)))
            if k == n:
                break
            v, over = kern.f_direct(P.omegas, P.lam, z, 0)
            if over or abs(v) > LOG_SCALE_THRESHOLD:
                lg, th = kern.f_log(P.omegas, P.log_lam, z, 0)
                h, m = 0, lg
                known = True
                cart = False
            else:
                z = v
        else:
            out.append(LogOrbitPoint(Tower(h, m), th if known else None))
            if k == n:
                break
            h, m, th, known = kern.far_step(h, m, th, known, P.p, P.log_lam)
    return out


def fast_escape_test(params: FamilyParams, table: MGrowthTable, z, L_max: int = 2,
                     horizon: int = 4):
    """Smallest L <= L_max with log|f^{n+L}(z)| >= log M^n(R) for n = 0..horizon."""
    if horizon >= len(table):
        raise ParameterError("horizon exceeds table length")
    orbit = log_orbit(params, z, horizon + L_max)
    for L in range(L_max + 1):
        ok = True
        for n in range(horizon + 1):
            lm = orbit[n + L].logmod
            if lm is None or lm < table[n]:
                ok = False
                break
        if ok:
            return {"qualifies": True, "L": L,
                    "arg_lost": any(q.arg is None for q in orbit)}
    return {"qualifies": False, "L": None,
            "arg_lost": any(q.arg is None for q in orbit)}


# --- escape grids ----------------------------------------------------------


@jit
def _pixel(omegas, lam, loglam, p, nu, tau, z0, max_iter, radius, tail):
    """(escape_n, kind, index, loglog, digit0); fills tail with level indices."""
    dk, edge = kern.strip_code(z0.imag, 1e-12)
    digit = NO_DIGIT if edge else dk
    z = z0
    esc = -1
    logr = 0.0
    theta = 0.0
    cart = True
    for n in range(max_iter + 1):
        a = abs(z)
        if a > radius:
            esc = n
            logr = math.log(a)
            theta = math.atan2(z.imag, z.real)
            break
        if n == max_iter:
            break
        v, over = kern.f_direct(omegas, lam, z, 0)
        if over or not (abs(v) <= LOG_SCALE_THRESHOLD):
            logr, theta = kern.f_log(omegas, loglam, z, 0)
            esc = n + 1
            cart = False
            break
        z = v
    if esc < 0:
        kind, idx = kern.classify_code(z.real, z.imag, p, nu, tau, 1e-12)
        for i in range(tail.shape[0]):
            tail[i] = math.nan
        return -1, kind, idx, math.nan, digit
    kind, idx = kern.classify_logpolar(logr, theta, p, nu, tau, 1e-12)
    # tail: escape point and the next iterates, exact while small, then modelled
    h = 0
    m = logr
    known = True
    for i in range(tail.shape[0]):
        tail[i] = 1.0 + kern.tw_level_index(h, m)
        if cart and i + 1 < tail.shape[0]:
            v, over = kern.f_direct(omegas, lam, z, 0)
            if over or not (abs(v) <= LOG_SCALE_THRESHOLD):
                m, theta = kern.f_log(omegas, loglam, z, 0)
                h = 0
                cart = False
            else:
                z = v
                m = math.log(abs(v))
                theta = math.atan2(v.imag, v.real)
        else:
            h, m, theta, known = kern.far_step(h, m, theta, known, p, loglam)
    return esc, kind, idx, math.log(logr) if logr > 0 else -math.inf, digit


@jit
def _escape_row(omegas, lam, loglam, p, nu, tau, xs, y, max_iter, radius,
                o_n, o_kind, o_idx, o_ll, o_digit, o_tail):
    for j in range(xs.shape[0]):
        e, k, i, ll, d = _pixel(omegas, lam, loglam, p, nu, tau, complex(xs[j], y),
                                max_iter, radius, o_tail[j])
        o_n[j] = e
        o_kind[j] = k
        o_idx[j] = i
        o_ll[j] = ll
        o_digit[j] = d


def _escape_points_numpy(P, scheme, zs, max_iter, radius):
    """Vectorized fallback over a flat array of starting points."""
    p, nu, tau = P.p, scheme.nu, scheme.tau
    zs = np.asarray(zs, dtype=complex)
    n_pts = zs.size
    om = P.omegas[:, None]
    yk = np.floor((zs.imag + math.pi) / (2 * math.pi)).astype(np.int64)
    lo = (2 * yk - 1) * math.pi
    edge = (np.abs(zs.imag - lo) < 1e-12) | (np.abs(zs.imag - lo - 2 * math.pi) < 1e-12)
    digit = np.where(edge, NO_DIGIT, yk)
    esc = np.full(n_pts, -1, dtype=np.int32)
    logr = np.zeros(n_pts)
    theta = np.zeros(n_pts)
    z = zs.copy()
    cart = np.ones(n_pts, dtype=bool)
    active = np.ones(n_pts, dtype=bool)
    for n in range(max_iter + 1):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        a = np.abs(z[idx])
        out = a > radius
        hit = idx[out]
        esc[hit] = n
        logr[hit] = np.log(a[out])
        theta[hit] = np.angle(z[hit])
        active[hit] = False
        idx = idx[~out]
        if n == max_iter or idx.size == 0:
            break
        e = om * z[idx][None, :]
        u = e.real.max(axis=0)
        s = np.exp(e - u).sum(axis=0)
        lg = P.log_lam + u + np.log(np.abs(s))
        big = lg > math.log(LOG_SCALE_THRESHOLD)
        bi = idx[big]
        esc[bi] = n + 1
        logr[bi] = lg[big]
        theta[bi] = np.angle(s[big])
        cart[bi] = False
        active[bi] = False
        small = idx[~big]
        z[small] = P.lam * np.exp(e[:, ~big]).sum(axis=0)
    kind = np.empty(n_pts, dtype=np.int8)
    kidx = np.empty(n_pts, dtype=np.int8)
    ll = np.full(n_pts, np.nan)
    tail = np.full((n_pts, TAIL), np.nan)
    cls = kern.classify_code.py_func if hasattr(kern.classify_code, "py_func") else kern.classify_code
    clp = kern.classify_logpolar.py_func if hasattr(kern.classify_logpolar, "py_func") else kern.classify_logpolar
    fs = kern.far_step.py_func if hasattr(kern.far_step, "py_func") else kern.far_step
    tli = kern.tw_level_index.py_func if hasattr(kern.tw_level_index, "py_func") else kern.tw_level_index
    for i in range(n_pts):
        if esc[i] < 0:
            kind[i], kidx[i] = cls(z[i].real, z[i].imag, p, nu, tau, 1e-12)
            continue
        kind[i], kidx[i] = clp(logr[i], theta[i], p, nu, tau, 1e-12)
        ll[i] = math.log(logr[i]) if logr[i] > 0 else -math.inf
        h, m, th, known, zc, c = 0, logr[i], theta[i], True, z[i], bool(cart[i])
        for k in range(TAIL):
            tail[i, k] = 1.0 + tli(h, m)
            if c and k + 1 < TAIL:
                e = P.omegas * zc
                uu = e.real.max()
                ss = np.exp(e - uu).sum()
                lgv = P.log_lam + uu + math.log(abs(ss))
                if lgv > math.log(LOG_SCALE_THRESHOLD):
                    h, m, th, c = 0, lgv, float(np.angle(ss)), False
                else:
                    zc = P.lam * np.exp(e).sum()
                    m, th = math.log(abs(zc)), math.atan2(zc.imag, zc.real)
            else:
                h, m, th, known = fs(h, m, th, known, p, P.log_lam)
    return esc, kind, kidx, ll, digit.astype(np.int16), tail


@dataclass
class EscapeGrid:
    window: tuple
    width: int
    height: int
    escape_n: np.ndarray  # int32, -1 for no escape within max_iter
    kind: np.ndarray  # int8 region codes of the final orbit point
    index: np.ndarray  # int8
    log_log_modulus: np.ndarray
    digit0: np.ndarray  # int16, NO_DIGIT on strip boundaries
    tail: np.ndarray  # (h, w, TAIL) level indices of |f^n| from the escape step
    max_iter: int
    radius: float
    meta: dict = field(default_factory=dict)

    @property
    def uncertain(self):
        """Escape point inside a strip Q_k, where the far-field model is not trusted."""
        return (self.kind == kern.STRIP) & (self.escape_n >= 0)

    def cell(self, i, j):
        e = int(self.escape_n[i, j])
        d = int(self.digit0[i, j])
        return {"escape_n": None if e < 0 else e,
                "final_label": RegionLabel(_KINDS[int(self.kind[i, j])], int(self.index[i, j])),
                "log_log_modulus": float(self.log_log_modulus[i, j]),
                "digit0": None if d == NO_DIGIT else d,
                "uncertain": bool(self.uncertain[i, j])}

    @property
    def cells(self):
        return [self.cell(i, j) for i in range(self.height) for j in range(self.width)]

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(struct.pack("<4d2iid", *self.window, self.width, self.height,
                             self.max_iter, self.radius))
        for a in (self.escape_n, self.kind, self.index, self.log_log_modulus,
                  self.digit0, self.tail):
            h.update(np.ascontiguousarray(a).astype(a.dtype.newbyteorder("<")).tobytes())
        return h.hexdigest()


def pixel_coords(window, width, height):
    """Pixel centres as centre + symmetric offsets, so that point-reflected or
    conjugated windows give exactly negated or conjugated coordinates."""
    re_min, re_max, im_min, im_max = map(float, window)
    if not (re_max > re_min and im_max > im_min and width > 0 and height > 0):
        raise ParameterError("window must have positive extent and size")
    dx = (re_max - re_min) / width
    dy = (im_max - im_min) / height
    cx = 0.5 * (re_min + re_max)
    cy = 0.5 * (im_min + im_max)
    xs = cx + (np.arange(width) - (width - 1) / 2.0) * dx
    ys = cy - (np.arange(height) - (height - 1) / 2.0) * dy  # row 0 at the top
    return xs, ys


def classify_grid(params: FamilyParams, scheme: RegionScheme, window, width: int, height: int,
                  max_iter: int = 50, escape_radius: float | None = None, workers: int = 1,
                  backend: str | None = None) -> EscapeGrid:
    P = params
    radius = math.exp(scheme.c) if escape_radius is None else float(escape_radius)
    if radius < math.exp(scheme.c) * (1 - 1e-12):
        raise ParameterError("escape radius must be at least e^c")
    if radius > LOG_SCALE_THRESHOLD:
        raise ParameterError(f"escape radius must not exceed {LOG_SCALE_THRESHOLD:g}")
    if max_iter < 0:
        raise ParameterError("max_iter must be >= 0")
    xs, ys = pixel_coords(window, width, height)
    backend = backend or BACKEND
    o_n = np.empty((height, width), dtype=np.int32)
    o_kind = np.empty((height, width), dtype=np.int8)
    o_idx = np.empty((height, width), dtype=np.int8)
    o_ll = np.empty((height, width))
    o_digit = np.empty((height, width), dtype=np.int16)
    o_tail = np.empty((height, width, TAIL))

    if backend == "numba" and hasattr(_escape_row, "py_func"):
        def do_row(i):
            _escape_row(P.omegas, P.lam, P.log_lam, P.p, scheme.nu, scheme.tau, xs, float(ys[i]),
                        int(max_iter), radius, o_n[i], o_kind[i], o_idx[i], o_ll[i],
                        o_digit[i], o_tail[i])
    else:
        def do_row(i):
            zs = xs + 1j * ys[i]
            r = _escape_points_numpy(P, scheme, zs, int(max_iter), radius)
            o_n[i], o_kind[i], o_idx[i], o_ll[i], o_digit[i], o_tail[i] = r

    # rows are independent and write disjoint slices, so any schedule gives the same arrays
    if workers <= 1:
        for i in range(height):
            do_row(i)
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            list(ex.map(do_row, range(height)))
    return EscapeGrid(tuple(map(float, window)), int(width), int(height), o_n, o_kind, o_idx,
                      o_ll, o_digit, o_tail, int(max_iter), radius,
                      {"backend": backend, "p": P.p, "lambda": P.lam})


def classify_points(params: FamilyParams, scheme: RegionScheme, zs, max_iter=50,
                    escape_radius=None):
    """escape_n for an arbitrary array of points (-1 when bounded)."""
    radius = math.exp(scheme.c) if escape_radius is None else float(escape_radius)
    zs = np.asarray(zs, dtype=complex).ravel()
    if BACKEND == "numba" and hasattr(_escape_row, "py_func"):
        out = np.empty(zs.size, dtype=np.int32)
        tail = np.empty(TAIL)
        P = params
        for i, z in enumerate(zs):
            out[i] = _pixel(P.omegas, P.lam, P.log_lam, P.p, scheme.nu, scheme.tau, complex(z),
                            int(max_iter), radius, tail)[0]
        return out
    return _escape_points_numpy(params, scheme, zs, int(max_iter), radius)[0]


# --- images ----------------------------------------------------------------

_DIGIT_HUES = {-3: (70, 40, 160), -2: (40, 90, 200), -1: (30, 160, 210), 0: (240, 240, 240),
               1: (230, 170, 40), 2: (220, 90, 40), 3: (170, 30, 60)}


def palette(escape_n: int, digit0: int, cycle: int = 6):
    """RGB for a pixel: black when bounded, otherwise the digit hue with
    brightness falling along escape_n mod cycle."""
    if escape_n < 0:
        return (0, 0, 0)
    base = _DIGIT_HUES.get(digit0, (128, 128, 128))
    k = escape_n % cycle
    scale = 256 - (k * 192) // cycle
    return tuple((c * scale) >> 8 for c in base)


def grid_rgb(grid: EscapeGrid, cycle: int = 6) -> np.ndarray:
    rgb = np.zeros((grid.height, grid.width, 3), dtype=np.uint8)
    esc = grid.escape_n
    dig = grid.digit0.astype(np.int64)
    base = np.full((grid.height, grid.width, 3), 128, dtype=np.int64)
    for d, col in _DIGIT_HUES.items():
        base[dig == d] = col
    k = np.where(esc >= 0, esc, 0) % cycle
    scale = 256 - (k * 192) // cycle
    vals = (base * scale[..., None]) >> 8
    rgb[esc >= 0] = vals[esc >= 0].astype(np.uint8)
    return rgb


def write_ppm(rgb: np.ndarray, path):
    h, w, _ = rgb.shape
    try:
        with open(path, "wb") as fh:
            fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
            fh.write(np.ascontiguousarray(rgb, dtype=np.uint8).tobytes())
    except OSError as e:
        raise OSError(f"cannot write image {path}: {e}") from e


def write_png(rgb: np.ndarray, path) -> bool:
    try:
        from PIL import Image
    except ImportError:
        return False
    Image.fromarray(rgb, "RGB").save(path)
    return True


def render_image(grid: EscapeGrid, path, cycle: int = 6, png: bool = True):
    """Write <path>.ppm (and .png when Pillow is present); returns written paths."""
    base = os.fspath(path)
    if base.endswith(".ppm") or base.endswith(".png"):
        base = base[:-4]
    rgb = grid_rgb(grid, cycle)
    out = [base + ".ppm"]
    write_ppm(rgb, out[0])
    if png and write_png(rgb, base + ".png"):
        out.append(base + ".png")
    return out


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def grid_sidecar(grid: EscapeGrid, config: dict, files=()):
    return {"config": config, "window": list(grid.window), "width": grid.width,
            "height": grid.height, "max_iter": grid.max_iter, "radius": grid.radius,
            "grid_hash": grid.content_hash(), **grid.meta,
            "files": {os.path.basename(f): file_sha256(f) for f in files}}


def write_sidecar(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
