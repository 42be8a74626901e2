"""Command-line front end.

Every command reads a model JSON document, runs one experiment and writes
its report atomically. Exit status: 0 all certifications pass, 1 some
certification failed (the report is still written), 2 bad configuration,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .comparison import (
    comparison_constants, fit_anderson_schoen, fit_hyperbolic_R, helper_inequalities,
    metric_containment, model_constants, recertify, riccati_containment,
)
from .compactification import (
    EssentialSubsetBoundary, boundary_limit_point, buffer_conditions, buffer_containment,
    buffer_ok, default_chart_radius, double_buffer, holder_certify,
)
from .distance import FermiPoint, geodesic_bvp_distance, sandwich_check
from .errors import ConfigError, PinchingViolationError, PinchLabError
from .integrators import jacobi_growth_check
from .metric_models import model_from_dict, model_to_dict

log = logging.getLogger("pinchlab")

COMMANDS = ("warp-solve", "verify-comparison", "verify-jacobi", "verify-riccati",
            "verify-sandwich", "boundary-map", "double-buffer", "holder-certify", "distance")

EXIT_OK, EXIT_CERT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


# -- output helpers --------------------------------------------------------------


def _atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows, meta):
    """CSV with '#' metadata lines; only the first line carries a timestamp."""
    buf = io.StringIO()
    buf.write(f"# generated {time.strftime('%Y-%m-%dT%H:%M:%SZ', time.gmtime())}\n")
    for key in sorted(meta):
        buf.write(f"# {key}: {_fmt(meta[key])}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    _atomic_write(path, buf.getvalue())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def write_json(path, doc):
    _atomic_write(path, json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n")


def _threads():
    try:
        n = int(os.environ.get("PINCHLAB_THREADS", "1"))
    except ValueError as exc:
        raise ConfigError("PINCHLAB_THREADS must be an integer") from exc
    return max(1, n)


def _pmap(fn, items):
    """Ordered map, fanned out to PINCHLAB_THREADS worker processes when > 1."""
    n = _threads()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * n))))


# -- config loading --------------------------------------------------------------


def _load_json(path, what):
    if path is None:
        raise ConfigError(f"--{what} is required for this command")
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"{what} file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} file {path} is not valid JSON: {exc}") from exc


def load_model(path):
    doc = _load_json(path, "model")
    model = model_from_dict(doc)
    model.profile.validate(model.r_max)
    return model, doc


def load_subset(path):
    return EssentialSubsetBoundary.from_dict(_load_json(path, "subset"))


def _meta(args, model_doc=None):
    meta = {"command": args.command, "version": __version__, "seed": args.seed,
            "samples": args.samples, "grid": args.grid}
    if model_doc is not None:
        meta["model"] = json.dumps(model_doc, sort_keys=True)
    return meta


def _fit_constants(model, seed):
    c = model_constants(model)
    sandwich = fit_hyperbolic_R(model, c)
    k = fit_anderson_schoen(model.profile.a, model.profile.b, sandwich.R,
                            chart_radius=default_chart_radius(model), seed=seed)
    return c, sandwich, k


# -- commands --------------------------------------------------------------------


def cmd_warp_solve(args):
    model, doc = load_model(args.model)
    r = np.linspace(0.0, model.r_max, args.grid)
    f, fp, k = model.f(r), model.f_prime(r), model.profile.k(r)
    residual = model.curvature_residual()
    meta = _meta(args, doc) | {"curvature_residual": residual}
    write_csv(args.out, ["r", "f", "f_prime", "k"], zip(r, f, fp, k), meta)
    return EXIT_OK if residual <= 1e-8 else EXIT_CERT


def cmd_verify_comparison(args):
    model, doc = load_model(args.model)
    c, sandwich, k = _fit_constants(model, args.seed)
    rows = [metric_containment(model, c, n=args.grid)]
    rows += list(k.certification)
    rows += recertify(k, n=args.samples, seed=args.seed + 1)
    rows += helper_inequalities()
    meta = _meta(args, doc) | {"R": sandwich.R} | {
        f"const_{name}": getattr(k, name) for name in
        ("c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8", "c1_h", "c2_h", "c3_h", "c4_h", "c5_h")}
    write_csv(args.out, ["inequality_id", "grid_size", "max_slack", "min_slack", "violated_count"],
              [(r.inequality_id, r.grid_size, r.max_slack, r.min_slack, r.violated_count)
               for r in rows], meta)
    return EXIT_OK if all(r.violated_count == 0 for r in rows) else EXIT_CERT


def cmd_verify_riccati(args):
    model, doc = load_model(args.model)
    p = model.profile
    Lam = float(doc.get("Lambda", max(model.f0_prime / model.f0, p.b)))
    c = comparison_constants(Lam, 0.0, p)
    rows = [riccati_containment(p, mu0, c, model.r_max, n=args.grid)
            for mu0 in sorted({0.0, p.a, Lam})]
    write_csv(args.out, ["inequality_id", "grid_size", "max_slack", "min_slack", "violated_count"],
              [(r.inequality_id, r.grid_size, r.max_slack, r.min_slack, r.violated_count)
               for r in rows], _meta(args, doc) | {"Lambda": Lam})
    return EXIT_OK if all(r.violated_count == 0 for r in rows) else EXIT_CERT


def cmd_verify_jacobi(args):
    model, doc = load_model(args.model)
    rep = jacobi_growth_check(model, n=args.samples, seed=args.seed,
                              t_end=min(20.0, 0.9 * model.r_max))
    write_json(args.out, asdict(rep) | {"passed": rep.violated_count == 0})
    return EXIT_OK if rep.violated_count == 0 else EXIT_CERT


def cmd_verify_sandwich(args):
    model, doc = load_model(args.model)
    sandwich = fit_hyperbolic_R(model, model_constants(model), n=args.grid)
    rep = sandwich_check(model, sandwich.R, n_pairs=args.samples, seed=args.seed)
    meta = _meta(args, doc) | {"R": sandwich.R, "skipped": rep.skipped,
                               "violated_count": rep.violated_count}
    write_csv(args.out, ["theta_p", "r_p", "theta_q", "r_q", "d_a", "d_bvp", "d_b"], rep.rows, meta)
    return EXIT_OK if rep.violated_count == 0 else EXIT_CERT


def _boundary_pair(job):
    model, subset, q, r_hi, r_lo = job
    hi = boundary_limit_point(model, subset, q, r_hi)
    lo = boundary_limit_point(model, subset, q, r_lo)
    agree = abs(hi.theta_inf - lo.theta_inf) <= hi.error_bound + lo.error_bound
    return (q, hi.theta_inf, hi.error_bound, lo.theta_inf, lo.error_bound, agree)


def cmd_boundary_map(args):
    model, doc = load_model(args.model)
    subset = load_subset(args.subset)
    r_hi = min(args.r_target if args.r_target is not None else 30.0, model.r_max)
    r_lo = max(subset.rho_max + 1.0, r_hi - 10.0)
    qs = np.linspace(0.0, 2.0 * math.pi, args.samples, endpoint=False)
    rows = _pmap(_boundary_pair, [(model, subset, float(q), r_hi, r_lo) for q in qs])
    meta = _meta(args, doc) | {"subset": json.dumps(subset.to_dict(), sort_keys=True),
                               "r_target": r_hi, "r_check": r_lo}
    write_csv(args.out, ["q_prime", "theta_inf", "error_bound", "theta_inf_check",
                         "error_bound_check", "agree"], rows, meta)
    return EXIT_OK if all(r[-1] for r in rows) else EXIT_CERT


def cmd_double_buffer(args):
    model, doc = load_model(args.model)
    _, sandwich, k = _fit_constants(model, args.seed)
    params = double_buffer(0.0, k, model)
    rep = buffer_containment(model, params, n_pairs=args.samples, seed=args.seed)
    ok = buffer_ok(params, k) and k.certified and rep.escapes == 0
    write_json(args.out, {
        "params": asdict(params), "conditions": buffer_conditions(params, k),
        "constants": k.to_dict(), "R": sandwich.R,
        "containment": {"n_pairs": rep.n_pairs, "escapes": rep.escapes,
                        "min_r_margin": rep.min_r_margin,
                        "max_angular_extent": rep.max_angular_extent, "clamped": rep.clamped},
        "passed": ok})
    return EXIT_OK if ok else EXIT_CERT


def cmd_holder_certify(args):
    model, doc = load_model(args.model)
    subset = load_subset(args.subset)
    cert = holder_certify(model, subset, n_samples=args.samples, seed=args.seed)
    write_json(args.out, cert.to_dict() | {"model": model_to_dict(model),
                                           "subset": subset.to_dict()})
    s = cert.samples
    rows = zip(s["theta_p"], s["r_p"], s["theta_q"], s["r_q"], s["dK1"], s["dK2"], s["ratio"])
    write_csv(Path(args.out).with_suffix(".samples.csv"),
              ["theta_p", "r_p", "theta_q", "r_q", "dK1", "dK2", "ratio"], rows,
              _meta(args, doc) | {"C_fitted": cert.C_fitted, "alpha_target": cert.alpha_target})
    return EXIT_OK if cert.passed else EXIT_CERT


def _parse_point(text, flag):
    try:
        theta, r = (float(x) for x in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"{flag} expects THETA,R") from exc
    return FermiPoint(theta, r)


def cmd_distance(args):
    model, doc = load_model(args.model)
    if args.p is None or args.q is None:
        raise ConfigError("distance needs --p THETA,R and --q THETA,R")
    p, q = _parse_point(args.p, "--p"), _parse_point(args.q, "--q")
    res = geodesic_bvp_distance(model, p, q, verify_ode=True)
    write_json(args.out, asdict(res) | {"p": asdict(p), "q": asdict(q)})
    return EXIT_OK if res.residual <= 1e-8 else EXIT_CERT


HANDLERS = {
    "warp-solve": cmd_warp_solve, "verify-comparison": cmd_verify_comparison,
    "verify-jacobi": cmd_verify_jacobi, "verify-riccati": cmd_verify_riccati,
    "verify-sandwich": cmd_verify_sandwich, "boundary-map": cmd_boundary_map,
    "double-buffer": cmd_double_buffer, "holder-certify": cmd_holder_certify,
    "distance": cmd_distance,
}

DEFAULT_SAMPLES = {"verify-jacobi": 100, "verify-sandwich": 1000, "boundary-map": 50,
                   "double-buffer": 1000, "holder-certify": 10_000, "verify-comparison": 100_000}


def build_parser():
    ap = argparse.ArgumentParser(prog="pinchlab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"pinchlab {__version__}")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--model", help="model JSON document")
    ap.add_argument("--subset", help="second essential subset JSON (boundary-map, holder-certify)")
    ap.add_argument("--out", required=True, help="report path (CSV or JSON by command)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--samples", type=int, default=None)
    ap.add_argument("--grid", type=int, default=10_000)
    ap.add_argument("--r-target", type=float, default=None, dest="r_target")
    ap.add_argument("--p", help="first point THETA,R (distance)")
    ap.add_argument("--q", help="second point THETA,R (distance)")
    ap.add_argument("--quiet", action="store_true")
    return ap


def run(args):
    if args.samples is None:
        args.samples = DEFAULT_SAMPLES.get(args.command, 100)
    if args.samples < 1 or args.grid < 2:
        raise ConfigError("--samples must be >= 1 and --grid >= 2")
    return HANDLERS[args.command](args)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(name)s: %(message)s")
    try:
        status = run(args)
    except (ConfigError, PinchingViolationError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except PinchLabError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except ValueError as exc:
        log.error("invalid input: %s", exc)
        return EXIT_CONFIG
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    log.info("%s finished with status %d, report at %s", args.command, status, args.out)
    return status


if __name__ == "__main__":
    sys.exit(main())
