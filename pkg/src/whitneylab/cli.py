"""Command-line entry point: one experiment per invocation, seeded and
reproducible, with machine-readable JSON or CSV output.

Exit codes: 0 success, 1 malformed config, 2 precondition failure,
3 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .errors import ConvergenceError, PreconditionError


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _parse_p(text):
    if text.strip().lower() in ("inf", "infinity", "oo"):
        return math.inf
    try:
        p = float(text)
    except ValueError as exc:
        raise ConfigError(f"invalid p value {text!r}") from exc
    if p <= 0:
        raise ConfigError("p must be positive")
    return p


def _load_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}:{exc.lineno}:{exc.colno}: malformed JSON ({exc.msg})") from exc


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _config_hash(args_dict):
    blob = json.dumps(args_dict, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _meta(args_dict, seed):
    return {"tool_version": __version__, "seed": seed,
            "config_hash": _config_hash(args_dict)}


def _emit(payload, out, fmt, csv_rows=None, csv_header=None):
    """Write JSON (default) or CSV; CSV uses 17 significant digits and LF."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(csv_header)
        for row in csv_rows:
            writer.writerow([_fmt(v) for v in row])
        text = buf.getvalue()
    else:
        text = json.dumps(payload, sort_keys=True, indent=2, default=str) + "\n"
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _build_parser():
    top = _Parser(prog="whitneylab", description=__doc__)
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--density", type=int, default=4096)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=["json", "csv"], default="json")

    p = sub.add_parser("basis", help="build the directionally-flat polynomial basis")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--dirs", required=True)
    common(p)

    p = sub.add_parser("modulus", help="sampled directional modulus of smoothness")
    p.add_argument("--function", required=True)
    p.add_argument("--domain", required=True)
    p.add_argument("--dirs", required=True)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--p", default="inf")
    common(p)

    p = sub.add_parser("approx", help="best L^p approximation on a sampled plan")
    p.add_argument("--function", required=True)
    p.add_argument("--domain", required=True)
    p.add_argument("--dirs", required=True)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--p", default="inf")
    common(p)

    p = sub.add_parser("whitney-estimate", help="empirical lower bound on the ratio constant")
    p.add_argument("--domain", required=True)
    p.add_argument("--dirs", required=True)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--p", default="inf")
    p.add_argument("--family", default="random_poly",
                   choices=["random_poly", "perturbed_basis"])
    p.add_argument("--budget", type=int, default=64)
    common(p)

    p = sub.add_parser("chain-bound", help="certified bound from a verified chain")
    p.add_argument("--chain", required=True)
    p.add_argument("--w0", type=float, required=True)
    p.add_argument("--p", default="inf")
    p.add_argument("--skip-verify", action="store_true",
                   help="trust the chain file without re-verifying")
    common(p)

    p = sub.add_parser("decompose", help="construct a decomposition chain")
    p.add_argument("--domain", required=True)
    p.add_argument("--method", required=True,
                   choices=["star", "planar", "lip2", "xray"])
    p.add_argument("--dirs", default=None)
    p.add_argument("--order", type=int, default=1)
    p.add_argument("--n0", type=int, default=1)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--eps", type=float, default=0.125)
    common(p)

    p = sub.add_parser("verify-chain", help="verify the shift condition by sampling")
    p.add_argument("--chain", required=True)
    common(p)

    p = sub.add_parser("counterexample", help="log-ridge divergence table on a cone body")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--n", required=True, help="comma-separated n values")
    p.add_argument("--xi", default=None, help="JSON list; default last axis")
    p.add_argument("--dirs", default=None,
                   help="direction-set JSON file; default margin-safe pair")
    common(p)
    p.set_defaults(format="csv")

    p = sub.add_parser("xray-check", help="verify illumination by +/- directions")
    p.add_argument("--domain", required=True)
    p.add_argument("--dirs", required=True)
    p.add_argument("--samples", type=int, default=256)
    common(p)

    p = sub.add_parser("report", help="lower/upper bound table over (r, p) grids")
    p.add_argument("--domain", required=True)
    p.add_argument("--dirs", required=True)
    p.add_argument("--r-list", default="1,2")
    p.add_argument("--p-list", default="1,inf")
    p.add_argument("--budget", type=int, default=32)
    p.add_argument("--chain", default=None)
    p.add_argument("--w0", type=float, default=None)
    common(p)
    p.set_defaults(format="csv")

    return top


def run(argv):
    """Execute one subcommand; returns the process exit code."""
    if os.environ.get("WHITNEY_LAB_THREADS"):
        n = os.environ["WHITNEY_LAB_THREADS"]
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, n)
    try:
        args = _build_parser().parse_args(argv)
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except PreconditionError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        if getattr(exc, "witnesses", None):
            print(f"witnesses: {exc.witnesses[:5]}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"did not converge: {exc}", file=sys.stderr)
        return 3


def _dispatch(args):
    from . import geometry as geo
    from . import polyspace, modulus, approx, decompose, whitney

    a = vars(args).copy()
    cmd = a.pop("command")
    a.pop("out", None)     # output destination and rendering are not part of
    a.pop("format", None)  # the experiment configuration
    seed = a.get("seed", 0)
    meta = _meta(a, seed)

    if cmd == "basis":
        dirs = geo.direction_set_from_spec(_load_json(args.dirs))
        basis = polyspace.build_basis(args.dim, args.order, dirs)
        payload = {"meta": meta, "n_basis": basis.n_basis, **basis.spec()}
        _emit(payload, args.out, args.format,
              csv_rows=[[args.dim, args.order, basis.n_basis]],
              csv_header=["d", "r", "n_basis"])
        return 0

    if cmd == "modulus":
        dom = geo.domain_from_spec(_load_json(args.domain))
        dirs = geo.direction_set_from_spec(_load_json(args.dirs))
        f = modulus.function_from_spec(_load_json(args.function), dim=dom.dim)
        plan = geo.sample_plan(dom, n_points=args.density, seed=seed)
        t = args.t if args.t else geo.diameter(dom, plan).value
        res = modulus.set_modulus(f, dom, plan, dirs, args.order, t, _parse_p(args.p))
        payload = {"meta": meta, "value": res.value, "argmax_u": res.argmax_u,
                   "argmax_xi": res.argmax_xi.tolist(),
                   "n_valid_points": res.n_valid_points, "reliable": res.reliable}
        _emit(payload, args.out, args.format,
              csv_rows=[[res.value, res.argmax_u, res.n_valid_points]],
              csv_header=["value", "argmax_u", "n_valid_points"])
        return 0

    if cmd == "approx":
        dom = geo.domain_from_spec(_load_json(args.domain))
        dirs = geo.direction_set_from_spec(_load_json(args.dirs))
        f = modulus.function_from_spec(_load_json(args.function), dim=dom.dim)
        plan = geo.sample_plan(dom, n_points=args.density, seed=seed)
        basis = polyspace.build_basis(dom.dim, args.order, dirs)
        res = approx.best_approx(f, dom, plan, basis, _parse_p(args.p), seed=seed)
        payload = {"meta": meta, **res.spec()}
        _emit(payload, args.out, args.format,
              csv_rows=[[res.error, res.status, res.iterations]],
              csv_header=["error", "status", "iterations"])
        return 0 if res.status != "max_iter" else 3

    if cmd == "whitney-estimate":
        dom = geo.domain_from_spec(_load_json(args.domain))
        dirs = geo.direction_set_from_spec(_load_json(args.dirs))
        plan = geo.sample_plan(dom, n_points=args.density, seed=seed)
        family = {"kind": args.family}
        est = whitney.empirical_whitney_constant(
            dom, plan, dirs, args.order, _parse_p(args.p), family,
            budget=args.budget, seed=seed)
        payload = {"meta": meta, **est.spec()}
        _emit(payload, args.out, args.format,
              csv_rows=[[est.lower_bound, est.n_defined]],
              csv_header=["lower_bound", "n_defined"])
        return 0

    if cmd == "chain-bound":
        chain = decompose.chain_from_spec(_load_json(args.chain))
        if args.skip_verify:
            chain.verified = True
        else:
            res = decompose.verify_chain(chain, samples_per_piece=args.density,
                                         seed=seed, check_coverage=False)
            if not res.ok:
                raise PreconditionError("chain failed verification",
                                        witnesses=res.witnesses)
        bound = whitney.chain_upper_bound(chain, args.w0, _parse_p(args.p))
        payload = {"meta": meta, "value": bound.value,
                   "closed_form": bound.closed_form, "theta": bound.theta,
                   "n_links": bound.n_links, "w0": args.w0}
        if args.out or args.format == "csv":
            _emit(payload, args.out, args.format,
                  csv_rows=[[bound.value, bound.closed_form, args.w0]],
                  csv_header=["value", "closed_form", "w0"])
        else:
            print(_fmt(bound.value))
        return 0

    if cmd == "decompose":
        dom = geo.domain_from_spec(_load_json(args.domain))
        dirs = geo.direction_set_from_spec(_load_json(args.dirs)) if args.dirs else None
        if args.method == "star":
            chain = decompose.star_shaped_decomposition(dom, args.order, seed=seed)
        elif args.method == "planar":
            chain, _ = decompose.planar_two_direction_chain(dom, r=args.order)
        elif args.method == "lip2":
            if dirs is None or args.delta is None:
                raise ConfigError("lip2 needs --dirs and --delta")
            chain = decompose.lip2_ball_chain(dom, dirs, args.delta, args.eps,
                                              r=args.order, seed=seed)
        else:
            if dirs is None:
                raise ConfigError("xray needs --dirs")
            chain = decompose.xray_slab_decomposition(dom, dirs, n0=args.n0,
                                                      r=args.order, seed=seed)
        res = decompose.verify_chain(chain, seed=seed)
        payload = {"meta": meta, "n_pieces": chain.n_pieces,
                   "verified": res.ok, "worst_violation": res.worst_violation,
                   "coverage_miss_rate": res.coverage_miss_rate,
                   "chain": chain.spec()}
        _emit(payload, args.out, args.format,
              csv_rows=[[chain.n_pieces, res.ok, res.worst_violation]],
              csv_header=["n_pieces", "verified", "worst_violation"])
        return 0

    if cmd == "verify-chain":
        chain = decompose.chain_from_spec(_load_json(args.chain))
        res = decompose.verify_chain(chain, samples_per_piece=args.density, seed=seed)
        payload = {"meta": meta, "ok": res.ok,
                   "worst_violation": res.worst_violation,
                   "witnesses": res.witnesses, "n_sampled": res.n_sampled,
                   "coverage_miss_rate": res.coverage_miss_rate}
        _emit(payload, args.out, args.format,
              csv_rows=[[res.ok, res.worst_violation, res.n_sampled]],
              csv_header=["ok", "worst_violation", "n_sampled"])
        return 0 if res.ok else 2

    if cmd == "counterexample":
        d = args.dim
        xi = np.asarray(json.loads(args.xi), dtype=float) if args.xi else \
            np.eye(d)[-1]
        if args.dirs:
            dirs = geo.direction_set_from_spec(_load_json(args.dirs))
        else:
            dirs = _default_margin_dirs(d)
        n_list = [int(s) for s in str(args.n).split(",") if s.strip()]
        cert = whitney.counterexample_certificate(
            d, xi, args.eps, dirs, args.order, n_list,
            density=args.density, seed=seed)
        payload = {"meta": meta, "margin_delta": cert.margin_delta,
                   "modulus_bounded": cert.modulus_bounded,
                   "rows": [dict(n=row.n, modulus=row.modulus, floor=row.floor,
                                 numeric_er=row.numeric_er) for row in cert.rows]}
        _emit(payload, args.out, args.format,
              csv_rows=[[row.n, row.modulus, row.floor, row.numeric_er]
                        for row in cert.rows],
              csv_header=["n", "modulus", "floor", "numeric_Er"])
        return 0

    if cmd == "xray-check":
        dom = geo.domain_from_spec(_load_json(args.domain))
        dirs = geo.direction_set_from_spec(_load_json(args.dirs))
        sample = geo.boundary_points(dom, n=args.samples, seed=seed)
        ok, wit = geo.xray_verifies(dom, dirs, sample)
        payload = {"meta": meta, "ok": ok,
                   "witnesses": [w.tolist() for w in wit[:16]]}
        _emit(payload, args.out, args.format,
              csv_rows=[[ok, len(wit)]], csv_header=["ok", "n_witnesses"])
        return 0 if ok else 2

    if cmd == "report":
        dom = geo.domain_from_spec(_load_json(args.domain))
        dirs = geo.direction_set_from_spec(_load_json(args.dirs))
        plan = geo.sample_plan(dom, n_points=args.density, seed=seed)
        dom_id = _config_hash({"domain": dom.spec()})
        e_id = _config_hash({"dirs": dirs.spec()})
        chain = None
        if args.chain:
            chain = decompose.chain_from_spec(_load_json(args.chain))
            vres = decompose.verify_chain(chain, seed=seed, check_coverage=False)
            if not vres.ok:
                raise PreconditionError("chain failed verification")
        rows = []
        for r in [int(s) for s in args.r_list.split(",") if s.strip()]:
            for p_text in [s for s in args.p_list.split(",") if s.strip()]:
                p = _parse_p(p_text)
                est = whitney.empirical_whitney_constant(
                    dom, plan, dirs, r, p, {"kind": "random_poly"},
                    budget=args.budget, seed=seed)
                upper = ""
                w0_note = ""
                if chain is not None and args.w0 is not None and chain.order == r:
                    bound = whitney.chain_upper_bound(chain, args.w0, p)
                    est.attach_upper_bound(bound.value)
                    upper = bound.value
                    w0_note = f"w0={_fmt(args.w0)}"
                rows.append([dom_id, e_id, r, p_text, est.lower_bound, upper,
                             w0_note, json.dumps(est.witness["function"],
                                                 sort_keys=True)])
        payload = {"meta": meta,
                   "rows": [dict(zip(["domain_id", "E_id", "r", "p",
                                      "lower_bound", "upper_bound",
                                      "w0_assumption", "witness_spec"], row))
                            for row in rows]}
        _emit(payload, args.out, args.format,
              csv_rows=rows,
              csv_header=["domain_id", "E_id", "r", "p", "lower_bound",
                          "upper_bound", "w0_assumption", "witness_spec"])
        return 0

    raise ConfigError(f"unknown command {cmd!r}")


def _default_margin_dirs(d):
    from .geometry import direction_set
    if d == 2:
        ang = math.radians(80.0)
        return direction_set([[1.0, 0.0], [math.cos(ang), math.sin(ang)]])
    dirs = np.eye(d)
    dirs[-1] = np.ones(d) / math.sqrt(d)
    return direction_set(dirs)


def main():
    raise SystemExit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
