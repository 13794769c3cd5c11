"""Command-line driver: parse documents, run analyses, emit reports.

Verbs: analyze, verify, reflect, reconstruct, aut, scan.  Every verb
prints one canonical report (text, or JSON with --json) and exits 0 when
all requested verifications pass, 1 when some check fails, and 2 on bad
input.  The truncation order is taken from --order, then the document,
then the CRJET_ORDER environment variable, then the default 2*(kmax+2).
"""

from __future__ import annotations

import argparse
import itertools
import os
import sys
from fractions import Fraction

from ..autdim import (AutError, aut_bound, holomorphic_degeneracy_test,
                      infinitesimal_aut_dim)
from ..hypersurface import GeometryError, build_frame
from ..invariants import (CheckReport, extrinsic_k0, h_tensor,
                          intrinsic_filtration, is_finite,
                          nondegeneracy_scan, operator_certificates,
                          verify_bracket_pairing,
                          verify_derivative_recursion,
                          verify_frame_structure,
                          verify_leading_order_reduction)
from ..jets import JetError, integrate, taylor_propagate
from ..mappings import (MappingError, pushforward_data,
                        solve_levi_reflection, verify_reflection_base,
                        verify_transport_recursion)
from ..series import SeriesError
from .documents import (ParseError, build_hypersurface, build_jet,
                        build_map, build_system, jet_coordinate_name,
                        load_document)
from .report import SCHEMA_VERSION, emit, scalar_text

CHECK_TOKENS = ("frame", "recursion", "leading", "commutators", "operators")


def _resolve_order(flag, doc, kmax):
    if flag is not None:
        return flag
    if doc is not None:
        doc_order = doc.scalar("order")
        if doc_order is not None:
            return doc_order
    env = os.environ.get("CRJET_ORDER")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ParseError("CRJET_ORDER", None, 0,
                             f"not an integer: {env!r}")
    return 2 * (kmax + 2)


def _check_tree(rep: CheckReport) -> dict:
    return {"name": rep.name, "ok": rep.ok, "checked": rep.checked,
            "vacuous": rep.vacuous, "note": rep.note,
            "violations": len(rep.violations)}


def _operator_check(F, m, degree) -> CheckReport:
    name = f"operator-certificates-m{m}"
    try:
        certs = operator_certificates(F, m, verify_degree=degree)
    except GeometryError as exc:
        return CheckReport(name=name, ok=True, checked=0, vacuous=True,
                           note=str(exc))
    bad = tuple(c.target for c in certs if not c.verified)
    return CheckReport(name=name, ok=not bad, checked=len(certs),
                       violations=bad,
                       note=f"monomial basis degree {degree}")


def _scan_points(spec, n):
    try:
        values = [Fraction(tok) for tok in spec.split(",") if tok.strip()]
    except (ValueError, ZeroDivisionError):
        raise ParseError("--scan", None, 0,
                         f"expected comma-separated rationals, got {spec!r}")
    if not values:
        raise ParseError("--scan", None, 0, "empty grid")
    return [(z, 0) for z in itertools.product(values, repeat=n)]


def _scan_tree(report) -> dict:
    points = []
    for r in report.results:
        entry = {"z": "(" + ", ".join(v.render() for v in r.z) + ")",
                 "s": r.s, "status": r.status}
        if r.status == "ok":
            entry["k0"] = r.k0
            entry["nondegenerate"] = r.nondegenerate
        points.append(entry)
    return {"k": report.k, "points": points,
            "nondegenerate_count": report.nondegenerate_count}


def _load_model(args, kind_error):
    doc = load_document(args.file)
    if doc.kind != "hypersurface":
        raise ParseError(doc.source, None, 0, kind_error)
    return doc


def _run_analyze(args):
    doc = _load_model(args, "analyze needs a hypersurface document")
    n = doc.scalar("N") - 1
    kmax = args.kmax if args.kmax is not None else n
    order = _resolve_order(args.order, doc, kmax)
    M = build_hypersurface(doc, order)
    F = build_frame(M)
    filt = intrinsic_filtration(F, kmax=kmax)
    ek0 = extrinsic_k0(M, kmax)
    agree_k0 = filt.k0 == ek0
    agree_ell = filt.ell0 == filt.ell1
    passed = agree_k0 and agree_ell
    tree = {
        "schema_version": SCHEMA_VERSION,
        "verb": "analyze",
        "model": {"N": M.N, "n": M.n, "order": order, "kmax": kmax,
                  "lmax": filt.lmax, "typemax": filt.typemax},
        "filtration": {
            "k0": filt.k0,
            "Ek_dims": list(filt.Ek_dims),
            "Fk_dims": list(filt.Fk_dims),
            "rk": list(filt.rk),
            "levi_rank": filt.levi_rank,
            "ell0": filt.ell0,
            "ell1": filt.ell1,
            "type": filt.m0,
        },
        "extrinsic_k0": ek0,
        "agreement": {"k0_paths": agree_k0, "ell0_ell1": agree_ell},
        "pass": passed,
    }
    if args.scan:
        tree["scan"] = _scan_tree(
            nondegeneracy_scan(M, _scan_points(args.scan, M.n), kmax))
    return tree, passed


def _run_verify(args):
    doc = _load_model(args, "verify needs a hypersurface document")
    n = doc.scalar("N") - 1
    kmax = args.kmax if args.kmax is not None else 1
    order = _resolve_order(args.order, doc, kmax)
    M = build_hypersurface(doc, order)
    F = build_frame(M)
    tokens = [t.strip() for t in args.check.split(",") if t.strip()]
    for t in tokens:
        if t not in CHECK_TOKENS:
            raise ParseError("--check", None, 0,
                             f"unknown check {t!r}; choose from "
                             f"{', '.join(CHECK_TOKENS)}")
    reports = []
    for t in tokens:
        if t == "frame":
            reports.append(verify_frame_structure(F))
        elif t == "recursion":
            reports.append(verify_derivative_recursion(F, kmax))
        elif t == "leading":
            reports.append(verify_leading_order_reduction(F))
        elif t == "commutators":
            reports.append(verify_bracket_pairing(F))
        else:
            for m in (2, 3):
                reports.append(_operator_check(F, m, args.degree))
    passed = all(r.ok for r in reports)
    tree = {
        "schema_version": SCHEMA_VERSION,
        "verb": "verify",
        "model": {"N": M.N, "n": n, "order": order, "kmax": kmax},
        "checks": [_check_tree(r) for r in reports],
        "pass": passed,
    }
    return tree, passed


def _series_agree(a, b) -> bool:
    o = min(a.order, b.order)
    return a.truncate(o) == b.truncate(o)


def _run_reflect(args):
    src_doc = load_document(args.source)
    tgt_doc = load_document(args.target)
    map_doc = load_document(args.map)
    if src_doc.kind != "hypersurface" or tgt_doc.kind != "hypersurface":
        raise ParseError(args.source, None, 0,
                         "reflect needs two hypersurface documents")
    if map_doc.kind != "map":
        raise ParseError(args.map, None, 0, "reflect needs a map document")
    kmax = args.kmax if args.kmax is not None else 1
    order = _resolve_order(args.order, src_doc, kmax)
    Ms = build_hypersurface(src_doc, order)
    Mt = build_hypersurface(tgt_doc, order)
    F = build_map(map_doc, Ms, Mt)
    Fs, Ft = build_frame(F.source), build_frame(F.target)
    data = pushforward_data(F, Fs, Ft)
    t_src, t_tgt = h_tensor(Fs, 1), h_tensor(Ft, 1)

    reports = [verify_reflection_base(data, (t_src, t_tgt))]
    for k in range(1, kmax + 1):
        reports.append(verify_transport_recursion(data, None, k))

    n = data.n
    try:
        gamma, eta = solve_levi_reflection(data.conjugated(),
                                           (t_src, t_tgt), Fs)
        exact = all(_series_agree(gamma[C][B], data.gamma[C][B])
                    for C in range(n) for B in range(n)) \
            and all(_series_agree(eta[C], data.eta[C]) for C in range(n))
        reports.append(CheckReport(name="levi-reflection-roundtrip",
                                   ok=exact, checked=n * n + n))
    except MappingError as exc:
        reports.append(CheckReport(name="levi-reflection-roundtrip",
                                   ok=True, checked=0, vacuous=True,
                                   note=str(exc)))

    passed = all(r.ok for r in reports)
    tree = {
        "schema_version": SCHEMA_VERSION,
        "verb": "reflect",
        "order": order,
        "base_point": [scalar_text(v) for v in F.base_point],
        "xi0": data.xi.constant_term(),
        "eta0": [e.constant_term() for e in data.eta],
        "gamma0": ["(" + ", ".join(
            data.gamma[A][B].constant_term().render()
            for B in range(n)) + ")" for A in range(n)],
        "checks": [_check_tree(r) for r in reports],
        "pass": passed,
    }
    return tree, passed


def _parse_grid(specs, q):
    if len(specs) == 1:
        specs = specs * q
    if len(specs) != q:
        raise ParseError("--grid", None, 0,
                         f"need one spec or {q}, got {len(specs)}")
    grid = []
    for spec in specs:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ParseError("--grid", None, 0,
                             f"expected lo:hi:count, got {spec!r}")
        try:
            lo, hi, count = Fraction(parts[0]), Fraction(parts[1]), \
                int(parts[2])
        except (ValueError, ZeroDivisionError):
            raise ParseError("--grid", None, 0,
                             f"expected lo:hi:count, got {spec!r}")
        if count < 1 or hi < lo:
            raise ParseError("--grid", None, 0,
                             f"bad grid range {spec!r}")
        if count == 1:
            grid.append([lo])
        else:
            step = (hi - lo) / (count - 1)
            grid.append([lo + step * i for i in range(count)])
    return grid


def _run_reconstruct(args):
    system_doc = load_document(args.system)
    jet_doc = load_document(args.jet)
    S = build_system(system_doc)
    jet = build_jet(jet_doc)
    if args.target_order is None and not args.grid:
        raise ParseError(args.system, None, 0,
                         "nothing to do: give --target-order and/or --grid")
    tree = {
        "schema_version": SCHEMA_VERSION,
        "verb": "reconstruct",
        "system": {"axes": S.q, "components": S.m, "jet_order": S.k},
        "pass": True,
    }
    if args.target_order is not None:
        grown = taylor_propagate(S, jet, args.target_order)
        tree["jet"] = {jet_coordinate_name(i, beta): value
                       for (i, beta), value in grown.values.items()}
        tree["target_order"] = args.target_order
    if args.grid:
        axis_order = None
        if args.axis_order:
            axis_order = tuple(int(t) - 1 for t in args.axis_order.split(","))
        result = integrate(S, jet, _parse_grid(args.grid, S.q), args.step,
                           axis_order=axis_order)
        tree["grid"] = {
            "step": result.step,
            "axis_order": [a + 1 for a in result.axis_order],
            "points": {
                "(" + ", ".join(repr(c) for c in coords) + ")": list(vals)
                for coords, vals in result.values.items()},
        }
    return tree, True


def _run_aut(args):
    doc = _load_model(args, "aut needs a hypersurface document")
    n = doc.scalar("N") - 1
    order = _resolve_order(args.order, doc, n)
    M = build_hypersurface(doc, order)
    use_order = order - 1
    weights = None
    if args.weights:
        try:
            weights = tuple(int(t) for t in args.weights.split(","))
        except ValueError:
            raise ParseError("--weights", None, 0,
                             f"expected comma-separated integers, "
                             f"got {args.weights!r}")
    hol = holomorphic_degeneracy_test(M, args.degree, use_order, weights)
    real = infinitesimal_aut_dim(M, args.degree, use_order, weights)
    bound = aut_bound(M.N)
    passed = real.solution_dim <= bound
    tree = {
        "schema_version": SCHEMA_VERSION,
        "verb": "aut",
        "model": {"N": M.N, "n": M.n, "order": order},
        "degree": args.degree,
        "tangency_order": use_order,
        "weights": list(weights) if weights else "none",
        "bound": bound,
        "holomorphic": {"dim": hol.solution_dim, "note": hol.note},
        "real": {"dim": real.solution_dim, "note": real.note},
        "inequality": "satisfied" if passed else "violated",
        "pass": passed,
    }
    return tree, passed


def _run_scan(args):
    doc = _load_model(args, "scan needs a hypersurface document")
    n = doc.scalar("N") - 1
    kmax = args.kmax if args.kmax is not None else n
    order = _resolve_order(args.order, doc, kmax)
    M = build_hypersurface(doc, order)
    report = nondegeneracy_scan(M, _scan_points(args.scan, M.n), kmax)
    tree = {
        "schema_version": SCHEMA_VERSION,
        "verb": "scan",
        "model": {"N": M.N, "n": M.n, "order": order},
        "scan": _scan_tree(report),
        "pass": True,
    }
    return tree, True


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crjet",
        description="Exact computations on real-analytic hypersurface "
                    "germs: invariants, mapping transport, jet systems, "
                    "symmetry dimensions.")
    subs = parser.add_subparsers(dest="verb", required=True)

    def common(sp):
        sp.add_argument("--order", type=int, default=None,
                        help="truncation order override")
        sp.add_argument("--json", action="store_true",
                        help="emit the JSON form of the report")

    sp = subs.add_parser("analyze", help="nondegeneracy invariants")
    sp.add_argument("file")
    sp.add_argument("--kmax", type=int, default=None)
    sp.add_argument("--scan", default=None,
                    help="comma-separated rational grid values")
    common(sp)

    sp = subs.add_parser("verify", help="identity residual checks")
    sp.add_argument("file")
    sp.add_argument("--check", default=",".join(CHECK_TOKENS))
    sp.add_argument("--kmax", type=int, default=None)
    sp.add_argument("--degree", type=int, default=2,
                    help="monomial basis degree for operator certificates")
    common(sp)

    sp = subs.add_parser("reflect", help="mapping transport residuals")
    sp.add_argument("source")
    sp.add_argument("target")
    sp.add_argument("map")
    sp.add_argument("--kmax", type=int, default=None)
    common(sp)

    sp = subs.add_parser("reconstruct", help="rebuild a map from its jet")
    sp.add_argument("system")
    sp.add_argument("jet")
    sp.add_argument("--target-order", type=int, default=None)
    sp.add_argument("--grid", action="append", default=[],
                    help="lo:hi:count, once or per axis")
    sp.add_argument("--step", type=float, default=1e-3)
    sp.add_argument("--axis-order", default=None)
    common(sp)

    sp = subs.add_parser("aut", help="tangent-field dimensions and bound")
    sp.add_argument("file")
    sp.add_argument("--degree", type=int, default=2)
    sp.add_argument("--weights", default=None,
                    help="comma-separated positive weights per variable")
    common(sp)

    sp = subs.add_parser("scan", help="pointwise nondegeneracy scan")
    sp.add_argument("file")
    sp.add_argument("--scan", required=True,
                    help="comma-separated rational grid values")
    sp.add_argument("--kmax", type=int, default=None)
    common(sp)
    return parser


_RUNNERS = {
    "analyze": _run_analyze,
    "verify": _run_verify,
    "reflect": _run_reflect,
    "reconstruct": _run_reconstruct,
    "aut": _run_aut,
    "scan": _run_scan,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        tree, passed = _RUNNERS[args.verb](args)
    except (ParseError, SeriesError, GeometryError, MappingError,
            JetError, AutError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(emit(tree, args.json))
    return 0 if passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
