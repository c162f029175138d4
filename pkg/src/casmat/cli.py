"""Command-line front end: scheme files in, JSON verification reports out.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage/IO/parse error.
Reports are single JSON documents; with identical inputs and flags they
are byte-identical except for the wall_time_s field.
"""

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .bma import build_approximate_identity, default_probes, indicator_bump, verify_bma
from .catalog import (DEFAULT_SPHERE_SEED, circle_scheme, cyclic_scheme,
                      delsarte_scheme, group_action_scheme, hamming_scheme,
                      materialize_recipe, sphere_scheme)
from .correspondence import algebra_of_scheme, roundtrip_check
from .errors import ParseError
from .hypergroup import kernel_of_scheme, random_probe_pairs, verify_strong_cas
from .scheme import read_scheme, verify_cas, write_scheme

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

BMA_AUTO_LABEL_CAP = 64
BMA_AUTO_NODE_CAP = 1024


def _default_seed() -> int:
    return int(os.environ.get("CASMAT_SEED", "20259"))


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    return obj


def _digest(path) -> str:
    with open(path, "rb") as fh:
        return "sha256:" + hashlib.sha256(fh.read()).hexdigest()


def _check(name, status, residual=None, tolerance=None, witnesses=()):
    return {"name": name, "status": status,
            "residual": None if residual is None else float(residual),
            "tolerance": None if tolerance is None else float(tolerance),
            "witnesses": _jsonify(list(witnesses))}


def _quantitative(name, residual, tolerance, witnesses=()):
    status = "pass" if residual <= tolerance else "fail"
    wit = list(witnesses)
    if status == "fail" and not wit:
        wit = [{"detail": f"residual {residual!r} exceeds "
                          f"tolerance {tolerance!r}"}]
    return _check(name, status, residual, tolerance, wit)


def _structural(name, ok, witnesses=()):
    wit = list(witnesses)
    if not ok and not wit:
        wit = [{"detail": f"{name} failed"}]
    return _check(name, "pass" if ok else "fail", 0.0 if ok else 1.0, 0.0, wit)


def _emit_report(report, out_path):
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")


def _finish(command, arguments, input_digest, checks, started, report_path):
    report = {
        "schema": "casmat-report v1",
        "tool_version": __version__,
        "command": command,
        "arguments": _jsonify(arguments),
        "input_digest": input_digest,
        "checks": checks,
        "wall_time_s": time.perf_counter() - started,
    }
    _emit_report(report, report_path)
    failed = any(c["status"] == "fail" for c in checks)
    return EXIT_FAIL if failed else EXIT_PASS


def _load_scheme(path):
    if not os.path.exists(path):
        print(f"error: no such file: {path}", file=sys.stderr)
        return None, EXIT_USAGE
    try:
        return read_scheme(path), None
    except ParseError as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
        return None, EXIT_USAGE
    except ValueError as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
        return None, EXIT_USAGE


def _parse_family_arg(text, path_hint):
    if text in ("singletons", "pairs", "bins"):
        return text
    if text.startswith("file:"):
        fam_path = text[len("file:"):]
    elif text == "file":
        fam_path = path_hint
    else:
        raise ValueError(f"unknown borel family {text!r}")
    if fam_path is None or not os.path.exists(fam_path):
        raise ValueError(f"borel family file not found: {fam_path}")
    sets = []
    with open(fam_path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            sets.append(tuple(int(t) for t in line.split()))
    if not sets:
        raise ValueError(f"borel family file {fam_path} has no sets")
    return sets


def cmd_verify(args) -> int:
    started = time.perf_counter()
    scheme, err = _load_scheme(args.scheme)
    if err is not None:
        return err
    try:
        family = _parse_family_arg(args.borel_family, None)
        cas = verify_cas(scheme, borel_family=family, tolerance=args.tol,
                         diagonal_slack=args.diagonal_slack,
                         max_pairs_per_fiber=args.max_pairs, seed=args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    checks = [
        _structural("cas1_diagonal", cas.cas1_ok,
                    cas.witnesses.get("cas1", [])),
        _structural("cas3_transpose", cas.cas3_ok,
                    cas.witnesses.get("cas3", [])),
        _quantitative("cas2_intersection_constancy", cas.cas2_max_deviation,
                      args.tol, cas.witnesses.get("cas2", [])),
        _quantitative("fiber_transpose_identity",
                      cas.involution_identity_max_deviation, args.tol),
        _quantitative("row_valency_constancy", cas.row_valency_max_deviation,
                      args.tol, cas.witnesses.get("row_valency", [])),
        _quantitative("pushforward_identity", cas.pushforward_max_deviation,
                      args.tol),
        _check("cas4_commutativity", "info", cas.cas4_max_deviation, args.tol),
        _check("cas5_symmetry", "info", 0.0 if cas.symmetric else 1.0),
    ]

    run_bma = args.bma == "on" or (
        args.bma == "auto"
        and scheme.label_count <= BMA_AUTO_LABEL_CAP
        and scheme.space.node_count <= BMA_AUTO_NODE_CAP)
    if run_bma:
        try:
            alg = algebra_of_scheme(scheme)
            bump, nbhd = indicator_bump(scheme.label_space)
            identity = build_approximate_identity(scheme, nbhd, bump)
            probes, policy = default_probes(alg, count=3, seed=args.seed)
            bma = verify_bma(alg, [identity], probes, tolerance=args.tol,
                             probe_policy=policy)
        except ValueError as exc:
            checks.append(_structural("bma_checks", False,
                                      [{"detail": str(exc)}]))
        else:
            checks += [
                _quantitative("bma1a_approximate_identity",
                              float(bma.bma1a_residuals[-1].max()), args.tol),
                _quantitative("bma1b_j_absorption", bma.bma1b_deviation,
                              args.tol),
                _quantitative("bma2_composition_closure", bma.bma2_residual,
                              args.tol),
                _structural("bma3_transpose_closure", bma.bma3_ok),
                _check("bma4_commutativity", "info", bma.commutative_residual,
                       args.tol),
                _check("bma5_symmetry", "info", bma.symmetric_residual,
                       args.tol),
            ]
    else:
        checks.append(_check("bma_checks", "skipped"))

    arguments = {"tol": args.tol, "borel_family": args.borel_family,
                 "diagonal_slack": args.diagonal_slack,
                 "max_pairs": args.max_pairs, "seed": args.seed,
                 "bma": args.bma}
    return _finish("verify", arguments, _digest(args.scheme), checks,
                   started, args.report)


def cmd_catalog(args) -> int:
    started = time.perf_counter()
    try:
        if args.kind == "cyclic":
            scheme, recipe = cyclic_scheme(args.n), f"cyclic n={args.n}"
        elif args.kind == "hamming":
            scheme = hamming_scheme(args.d, args.q)
            recipe = f"hamming d={args.d} q={args.q}"
        elif args.kind == "group":
            gens = [[int(v) for v in g.split(",")] for g in args.generator]
            scheme = group_action_scheme(gens)
            recipe = "group generators=" + ";".join(
                ",".join(str(v) for v in g) for g in gens)
        elif args.kind == "circle":
            scheme = circle_scheme(args.nodes, args.bins,
                                   signed=not args.unsigned)
            recipe = (f"circle nodes={args.nodes} bins={args.bins} "
                      f"signed={'false' if args.unsigned else 'true'}")
        elif args.kind == "sphere":
            source = args.quadrature if args.quadrature else args.nodes
            scheme = sphere_scheme(source, args.bins, seed=args.seed)
            if args.quadrature:
                recipe = f"sphere quadrature={args.quadrature} bins={args.bins}"
            else:
                recipe = (f"sphere nodes={args.nodes} bins={args.bins} "
                          f"seed={args.seed}")
        elif args.kind == "delsarte":
            metric = np.loadtxt(args.metric)
            scheme = delsarte_scheme(metric, n_bins=args.bins)
            recipe = f"delsarte metric={args.metric}" + (
                f" bins={args.bins}" if args.bins is not None else "")
        elif args.kind == "recipe":
            scheme, recipe = materialize_recipe(args.spec)
        else:  # pragma: no cover - argparse prevents this
            raise ValueError(f"unknown kind {args.kind}")
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    write_scheme(scheme, args.out, recipe=recipe)
    checks = [_check("materialized", "pass", 0.0, 0.0,
                     [{"recipe": recipe, "nodes": scheme.space.node_count,
                       "labels": scheme.label_count}])]
    arguments = {"kind": args.kind, "out": args.out}
    return _finish("catalog", arguments, _digest(args.out), checks,
                   started, args.report)


def cmd_correspond(args) -> int:
    started = time.perf_counter()
    scheme, err = _load_scheme(args.scheme)
    if err is not None:
        return err
    arguments = {"tol": args.tol}
    try:
        rt = roundtrip_check(scheme, grouping_tolerance=args.tol)
    except ValueError as exc:
        checks = [_structural("roundtrip", False, [{"detail": str(exc)}])]
        return _finish("correspond", arguments, _digest(args.scheme), checks,
                       started, args.report)
    wit = [rt.witness] if rt.witness else []
    checks = [
        _structural("partition_roundtrip", rt.partition_match, wit),
        _structural("involution_correspondence", rt.involution_consistent),
        _structural("identity_correspondence", rt.identity_consistent),
        _check("label_bijection", "info", None, None,
               [rt.as_dict()["label_bijection"]]),
    ]
    return _finish("correspond", arguments, _digest(args.scheme), checks,
                   started, args.report)


def cmd_hypergroup(args) -> int:
    started = time.perf_counter()
    scheme, err = _load_scheme(args.scheme)
    if err is not None:
        return err
    arguments = {"probes": args.probes, "tol": args.tol, "seed": args.seed}
    try:
        hg = kernel_of_scheme(scheme)
    except ValueError as exc:
        checks = [_structural("markov_kernel", False, [{"detail": str(exc)}])]
        return _finish("hypergroup", arguments, _digest(args.scheme), checks,
                       started, args.report)
    probes = random_probe_pairs(scheme.label_count, args.probes,
                                seed=args.seed)
    rep = verify_strong_cas(hg, probes, tolerance=args.tol, seed=args.seed)
    checks = [_structural("markov_kernel", True)]
    for name in ("identity_convolution", "pullback_convolution", "transport",
                 "anti_automorphism"):
        checks.append(_quantitative(name, rep.residuals[name], args.tol))
    checks.append(_check("commutativity_tv", "info",
                         rep.residuals.get("commutativity_tv"), args.tol))
    checks.append(_check("cas4_deviation", "info",
                         rep.residuals.get("cas4_deviation"), args.tol))
    checks.append(_check("representative_spread", "info",
                         rep.representative_spread, args.tol))
    return _finish("hypergroup", arguments, _digest(args.scheme), checks,
                   started, args.report)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="casmat",
        description="construct and numerically verify compact association "
                    "schemes and their Bose-Mesner algebras")
    parser.add_argument("--version", action="version",
                        version=f"casmat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the scheme axiom checks")
    p.add_argument("scheme", help="path to a #casmat-scheme v1 file")
    p.add_argument("--tol", type=float, default=0.0)
    p.add_argument("--borel-family", default="singletons",
                   help="singletons | pairs | bins | file:PATH")
    p.add_argument("--diagonal-slack", type=int, default=0)
    p.add_argument("--max-pairs", type=int, default=None,
                   help="cap fiber pairs with a seeded swap-closed sample")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--bma", choices=("auto", "on", "off"), default="auto")
    p.add_argument("--report", default=None, help="also write the JSON here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("catalog", help="materialize a scheme file")
    kinds = p.add_subparsers(dest="kind", required=True)
    k = kinds.add_parser("cyclic")
    k.add_argument("--n", type=int, required=True)
    k = kinds.add_parser("hamming")
    k.add_argument("--d", type=int, required=True)
    k.add_argument("--q", type=int, required=True)
    k = kinds.add_parser("group")
    k.add_argument("--generator", action="append", required=True,
                   help="permutation as comma-separated images, repeatable")
    k = kinds.add_parser("circle")
    k.add_argument("--nodes", type=int, required=True)
    k.add_argument("--bins", type=int, required=True)
    k.add_argument("--unsigned", action="store_true")
    k = kinds.add_parser("sphere")
    k.add_argument("--nodes", type=int, default=None)
    k.add_argument("--quadrature", default=None,
                   help="#casmat-quadrature v1 file with unit 3-vectors")
    k.add_argument("--bins", type=int, required=True)
    k.add_argument("--seed", type=int, default=DEFAULT_SPHERE_SEED)
    k = kinds.add_parser("delsarte")
    k.add_argument("--metric", required=True,
                   help="whitespace-separated distance matrix file")
    k.add_argument("--bins", type=int, default=None)
    k = kinds.add_parser("recipe")
    k.add_argument("--spec", required=True, help='e.g. "cyclic n=12"')
    for k in kinds.choices.values():
        k.add_argument("--out", required=True)
        k.add_argument("--report", default=None)
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("correspond",
                       help="round-trip the scheme through its algebra")
    p.add_argument("scheme")
    p.add_argument("--tol", type=float, default=0.0)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_correspond)

    p = sub.add_parser("hypergroup",
                       help="check the label-convolution identities")
    p.add_argument("scheme")
    p.add_argument("--probes", type=int, default=10)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_hypergroup)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    if (getattr(args, "command", "") == "catalog"
            and getattr(args, "kind", "") == "sphere"
            and args.nodes is None and args.quadrature is None):
        print("error: sphere needs --nodes or --quadrature", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
