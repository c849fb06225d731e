"""``bouquet-lab``: one binary with a subcommand per module.

Exit codes: 0 ok, 1 verification failure or invariant violation, 2 usage or
parameter error, 3 numerical failure.  Every file written gets a
``<name>.sidecar.json`` next to it with the full config echo and the file's
sha256; nothing time-dependent goes into outputs.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field

from .errors import (BouquetError, BranchViolation, FamilyOverflowError, InvariantViolation,
                     NonConvergence, ParameterError)

OUT_ENV = "BOUQUET_LAB_OUT"
DEFAULT_OUT = "bouquet-out"
DEFAULT_WINDOW = (-5.0, 25.0, -15.0, 15.0)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

# flag name -> (config key, default); None defaults mean "derived later"
COMMON = {
    "p": 3, "lambda": 1.0, "K": 3, "c": None, "sigma": None, "eta": None, "tau": None,
    "nu": None, "out": None, "workers": 1, "seed": 0,
}
PER_COMMAND = {
    "zeros": {"m": None, "rays": "0"},
    "critical": {"m": None, "rays": "0"},
    "periodic": {"s": ["1"]},
    "itinerary": {"z": None, "n": 20, "radius": None},
    "hair": {"s": ["1"], "tmax": 30.0, "samples": 120},
    "render": {"window": None, "size": "512", "max_iter": 50, "radius": None},
    "verify": {},
}


@dataclass
class RunConfig:
    command: str
    p: int
    lam: float
    K: int
    scheme_overrides: dict
    options: dict
    out: str
    workers: int
    seed: int
    sources: dict = field(default_factory=dict)

    def echo(self):
        d = asdict(self)
        d.pop("sources")
        d["lambda"] = d.pop("lam")
        return d


# --- parsing ---------------------------------------------------------------


def _parse_range(text):
    """'a..b' (inclusive) -> (a, b)."""
    try:
        a, b = str(text).split("..")
        a, b = int(a), int(b)
    except ValueError:
        raise ParameterError(f"range must look like a..b, got {text!r}")
    if b < a:
        raise ParameterError(f"empty range {text!r}")
    return a, b


def _parse_window(text):
    if isinstance(text, (list, tuple)):
        vals = [float(x) for x in text]
    else:
        try:
            vals = [float(x) for x in str(text).split(",")]
        except ValueError:
            raise ParameterError(f"window must be re_min,re_max,im_min,im_max, got {text!r}")
    if len(vals) != 4:
        raise ParameterError("window needs four numbers")
    return tuple(vals)


def _parse_size(text):
    t = str(text).lower()
    try:
        w, h = (int(x) for x in t.split("x")) if "x" in t else (int(t), int(t))
    except ValueError:
        raise ParameterError(f"size must be N or WxH, got {text!r}")
    if w < 1 or h < 1:
        raise ParameterError("size must be positive")
    return w, h


def _parse_rays(text, p):
    if str(text) == "all":
        return list(range(p))
    try:
        rays = [int(x) for x in str(text).split(",")]
    except ValueError:
        raise ParameterError(f"rays must be 'all' or a comma list, got {text!r}")
    if any(not 0 <= k < p for k in rays):
        raise ParameterError(f"ray indices must lie in 0..{p - 1}")
    return rays


def _parse_complex(text):
    try:
        return complex(str(text).replace(" ", "").replace("i", "j"))
    except ValueError:
        raise ParameterError(f"cannot read a complex number from {text!r}")


def build_parser():
    ap = argparse.ArgumentParser(prog="bouquet-lab", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        g = sp.add_argument_group("family and scheme")
        g.add_argument("--p", type=int)
        g.add_argument("--lambda", dest="lambda", type=float)
        g.add_argument("--K", type=int)
        g.add_argument("--c", type=float)
        for k in ("sigma", "eta", "tau", "nu"):
            g.add_argument(f"--{k}", type=float)
        sp.add_argument("--out", help=f"output directory (fallback ${OUT_ENV}, then {DEFAULT_OUT})")
        sp.add_argument("--config", help="JSON file; explicit flags win")
        sp.add_argument("--workers", type=int)
        sp.add_argument("--seed", type=int)

    for name in ("zeros", "critical"):
        sp = sub.add_parser(name, help=f"{name} on the rays V_k")
        common(sp)
        sp.add_argument("--m", help="m range a..b (default M+1..M+20)")
        sp.add_argument("--rays", help="'all' or comma list of ray indices")
    sp = sub.add_parser("periodic", help="periodic points z(s)")
    common(sp)
    sp.add_argument("--s", action="append", help="period word, e.g. '1,-1'; repeatable")
    sp = sub.add_parser("itinerary", help="strip itinerary of a point")
    common(sp)
    sp.add_argument("--z", help="start point, e.g. '3+1j'")
    sp.add_argument("--n", type=int)
    sp.add_argument("--radius", type=float)
    sp = sub.add_parser("hair", help="trace hairs h_s on [1, tmax]")
    common(sp)
    sp.add_argument("--s", action="append", help="itinerary 'pre|per' or 'per'; repeatable")
    sp.add_argument("--tmax", type=float)
    sp.add_argument("--samples", type=int)
    sp = sub.add_parser("render", help="escape-time image")
    common(sp)
    sp.add_argument("--window", help="re_min,re_max,im_min,im_max")
    sp.add_argument("--size", help="N or WxH")
    sp.add_argument("--max-iter", dest="max_iter", type=int)
    sp.add_argument("--radius", type=float)
    sp = sub.add_parser("verify", help="run the property suite")
    common(sp)
    return ap


def make_config(ns) -> RunConfig:
    """Flags over config file over defaults; validated before any computation."""
    file_cfg = {}
    if ns.config:
        try:
            with open(ns.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, ValueError) as e:
            raise ParameterError(f"cannot read config {ns.config}: {e}")
        if not isinstance(file_cfg, dict):
            raise ParameterError("config file must hold a JSON object")
    flags = vars(ns)
    merged, sources = {}, {}
    for key, default in {**COMMON, **PER_COMMAND[ns.command]}.items():
        if flags.get(key) is not None:
            merged[key], sources[key] = flags[key], "flag"
        elif key in file_cfg:
            merged[key], sources[key] = file_cfg[key], "config"
        else:
            merged[key], sources[key] = default, "default"
    unknown = set(file_cfg) - set(COMMON) - set(PER_COMMAND[ns.command]) - {"lam"}
    if unknown:
        raise ParameterError(f"unknown config keys: {sorted(unknown)}")
    if "lam" in file_cfg and sources["lambda"] == "default":
        merged["lambda"], sources["lambda"] = file_cfg["lam"], "config"
    out = merged.pop("out") or os.environ.get(OUT_ENV) or DEFAULT_OUT
    try:
        p, lam, K = int(merged.pop("p")), float(merged.pop("lambda")), int(merged.pop("K"))
        workers, seed = int(merged.pop("workers")), int(merged.pop("seed"))
    except (TypeError, ValueError) as e:
        raise ParameterError(str(e))
    if K < 1:
        raise ParameterError("K must be >= 1")
    if workers < 1:
        raise ParameterError("workers must be >= 1")
    overrides = {k: merged.pop(k) for k in ("c", "sigma", "eta", "tau", "nu")}
    if isinstance(merged.get("s"), str):
        merged["s"] = [merged["s"]]
    return RunConfig(ns.command, p, lam, K, overrides, merged, out, workers, seed, sources)


# --- outputs ---------------------------------------------------------------


class Outputs:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.files = []
        try:
            os.makedirs(cfg.out, exist_ok=True)
        except OSError as e:
            raise ParameterError(f"cannot create output directory {cfg.out}: {e}")

    def path(self, name):
        return os.path.join(self.cfg.out, name)

    def json(self, name, obj):
        with open(self.path(name), "w") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")
        self.add(name)

    def add(self, name, extra=None):
        from .render import file_sha256

        path = self.path(name)
        side = {"file": name, "sha256": file_sha256(path), "config": self.cfg.echo()}
        if extra:
            side.update(extra)
        with open(path + ".sidecar.json", "w") as fh:
            json.dump(side, fh, indent=2, sort_keys=True)
            fh.write("\n")
        self.files.append(path)


def _schemes(cfg: RunConfig):
    """(base scheme, covering scheme for K)."""
    from .family import FamilyParams
    from .geometry import make_region_scheme
    from .symbolic import covering_scheme

    P = FamilyParams(cfg.p, cfg.lam)
    ov = cfg.scheme_overrides
    base = make_region_scheme(P, sigma=ov["sigma"], eta=ov["eta"], tau=ov["tau"], nu=ov["nu"],
                              c=ov["c"])
    cov = covering_scheme(base, cfg.K)
    if ov["c"] is not None and ov["c"] > cov.c:
        cov = cov.with_c(ov["c"])
    return base, cov


def _clean(x):
    """JSON-safe copy: complex -> [re, im], numpy scalars -> python."""
    import numpy as np

    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.generic):
        return _clean(x.item())
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


# --- subcommands -----------------------------------------------------------


def _m_range(cfg, m_hat):
    if cfg.options["m"] is None:
        return m_hat + 1, m_hat + 20
    lo, hi = _parse_range(cfg.options["m"])
    if lo <= m_hat:
        raise ParameterError(f"m range must start above the calibrated M={m_hat}")
    return lo, hi


def cmd_zeros(cfg, out, critical=False):
    from .critical import (calibrate_m_hat, count_zeros_winding, find_critical_points_on_ray,
                           find_zeros_on_ray, write_records_csv)
    from .geometry import d_rectangle

    base, _ = _schemes(cfg)
    P = base.params
    rays = _parse_rays(cfg.options["rays"], cfg.p)
    m_hat = calibrate_m_hat(base)
    lo, hi = _m_range(cfg, m_hat)
    zeros, crits, windings = [], [], []
    for k in rays:
        zs = find_zeros_on_ray(base, k, lo, hi, m_hat)
        zeros.extend(zs)
        rot = P.omegas[k]
        for m in range(lo, hi + 1):
            windings.append(count_zeros_winding(P, [rot * v for v in d_rectangle(base, m)]))
        if critical:
            crits.extend(find_critical_points_on_ray(base, k, zs))
    # zeros on V_k are the V_0 zeros turned by omega^k
    z0 = {q.m: q.z for q in zeros if q.ray_index == 0} or None
    rot_err = 0.0
    if z0:
        for q in zeros:
            rot_err = max(rot_err, abs(q.z - P.omegas[q.ray_index] * z0[q.m]) / abs(q.z))
    name = "critical" if critical else "zeros"
    write_records_csv(out.path(f"{name}.csv"), zeros, crits)
    out.add(f"{name}.csv")
    bad = [w for w in windings if w != 1]
    summary = {"m_hat": m_hat, "m_range": [lo, hi], "rays": rays, "n_zeros": len(zeros),
               "n_critical": len(crits), "winding_checks": len(windings),
               "winding_ok": len(windings) - len(bad),
               "max_residual": max(q.residual for q in zeros),
               "max_rotation_mismatch": rot_err, "pass": not bad}
    if critical:
        alt = True
        for k in rays:
            signs = [c.sign for c in crits if c.ray_index == k]
            alt = alt and all(a == -b for a, b in zip(signs[:-1], signs[1:]))
        summary["alternating_signs"] = alt
        summary["pass"] = summary["pass"] and alt
    out.json(f"{name}.json", summary)
    print(json.dumps(_clean(summary), sort_keys=True))
    return EXIT_OK if not bad else EXIT_FAIL


def cmd_periodic(cfg, out):
    from .symbolic import ItinerarySpec, periodic_point

    _, cov = _schemes(cfg)
    recs = []
    for text in cfg.options["s"]:
        s = ItinerarySpec.parse(text, cfg.K)
        r = periodic_point(cov, s, K_bound=cfg.K)
        d = r.to_dict()
        d["abs_multiplier"] = abs(r.multiplier)
        d["preimage_residual"] = r.preimage_residual(cov.params)
        recs.append(d)
    out.json("periodic.json", {"covering_c": cov.c, "points": recs})
    print(json.dumps(_clean(recs), sort_keys=True))
    return EXIT_OK


def cmd_itinerary(cfg, out):
    from .symbolic import itinerary_of

    if cfg.options["z"] is None:
        raise ParameterError("itinerary needs --z")
    base, _ = _schemes(cfg)
    z = _parse_complex(cfg.options["z"])
    n = int(cfg.options["n"])
    if n < 0:
        raise ParameterError("n must be >= 0")
    r = itinerary_of(base, z, n, cfg.options["radius"])
    res = {"z": [z.real, z.imag], "digits": r.digits, "status": r.status, "n": r.n}
    out.json("itinerary.json", res)
    print(json.dumps(res, sort_keys=True))
    return EXIT_OK


def _safe_name(text):
    return str(text).replace("|", "_").replace(",", "_").replace("-", "m")


def cmd_hair(cfg, out):
    from .hairs import calibrate_hair_bounds, trace_hair
    from .symbolic import ItinerarySpec

    _, cov = _schemes(cfg)
    tmax, n = float(cfg.options["tmax"]), int(cfg.options["samples"])
    if n < 2:
        raise ParameterError("samples must be >= 2")
    cal = _clean(calibrate_hair_bounds(cov, cfg.K))
    curves = []
    for text in cfg.options["s"]:
        s = ItinerarySpec.parse(text, cfg.K)
        cur = trace_hair(cov, s, tmax, n)
        cur.calibration = {"q_hat": cal["q_hat"], "M_hat": cal["M_hat"]}
        stem = f"hair_{_safe_name(s)}"
        cur.write_csv(out.path(stem + ".csv"))
        out.add(stem + ".csv")
        cur.write_manifest(out.path(stem + ".manifest.json"))
        out.add(stem + ".manifest.json")
        curves.append({"itinerary": str(s), "n_points": int(cur.t.size),
                       "endpoint": [cur.endpoint.real, cur.endpoint.imag], "csv": stem + ".csv"})
    summary = {"covering_c": cov.c, "calibration": cal, "curves": curves}
    out.json("hair.json", summary)
    print(json.dumps(_clean(summary), sort_keys=True))
    return EXIT_OK


def cmd_render(cfg, out):
    from .render import classify_grid, grid_sidecar, render_image

    base, _ = _schemes(cfg)
    o = cfg.options
    window = _parse_window(o["window"] if o["window"] is not None else DEFAULT_WINDOW)
    w, h = _parse_size(o["size"])
    grid = classify_grid(base.params, base, window, w, h, int(o["max_iter"]), o["radius"],
                         workers=cfg.workers)
    paths = render_image(grid, out.path("render"))
    side = grid_sidecar(grid, cfg.echo(), paths)
    side.pop("config")
    for p_ in paths:
        out.add(os.path.basename(p_), {"grid": side})
    summary = {"grid_hash": grid.content_hash(), "files": side["files"],
               "escaped_fraction": float((grid.escape_n >= 0).mean()),
               "uncertain_fraction": float(grid.uncertain.mean())}
    out.json("render.json", summary)
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_verify(cfg, out):
    from .verify import run_suite

    base, _ = _schemes(cfg)
    rep = run_suite(base, cfg.K, cfg.seed)
    rep.pop("seconds")  # keep the report reproducible
    rep = _clean(rep)
    out.json("verify.json", rep)
    for c in rep["checks"]:
        print(f"{'PASS' if c['pass'] else 'FAIL'}  {c['name']}")
    if rep["failed"]:
        print("failed: " + ", ".join(rep["failed"]))
    return EXIT_OK if rep["pass"] else EXIT_FAIL


COMMANDS = {"zeros": cmd_zeros, "critical": lambda c, o: cmd_zeros(c, o, critical=True),
            "periodic": cmd_periodic, "itinerary": cmd_itinerary, "hair": cmd_hair,
            "render": cmd_render, "verify": cmd_verify}


_NEG_OK = ("--s", "--z", "--window", "--m", "--c", "--lambda")


def _glue_negatives(argv):
    """'--s -1,1' -> '--s=-1,1': argparse would read '-1,1' as an option."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if a in _NEG_OK and nxt and len(nxt) > 1 and nxt[0] == "-" and (nxt[1].isdigit() or nxt[1] == "."):
            out.append(f"{a}={nxt}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def main(argv=None) -> int:
    ap = build_parser()
    argv = _glue_negatives(list(sys.argv[1:] if argv is None else argv))
    try:
        ns = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    try:
        cfg = make_config(ns)
        from .family import FamilyParams

        FamilyParams(cfg.p, cfg.lam)  # validate before any work
        out = Outputs(cfg)
        return COMMANDS[cfg.command](cfg, out)
    except ParameterError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as e:
        print(f"invariant violation: {e}", file=sys.stderr)
        return EXIT_FAIL
    except (NonConvergence, FamilyOverflowError, BranchViolation) as e:
        print(f"numerical failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except BouquetError as e:
        print(f"numerical failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
