"""Command-line surface: barydd dd | solve | certify | fdr-check |
verify-identities.

All numeric output is exact fractions; --approx appends decimal renderings
without ever replacing exact values.  Row orders on the command line are
1-based to match printed constraint numbering; the Python API is 0-based.

Exit codes: 0 ok, 2 parse error, 3 empty interior, 4 level too low (the
message reports the minimum usable level), 5 certificate verification
failure.
"""

from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import os
import random
import sys
import time
from fractions import Fraction
from typing import List, Optional

from . import __version__
from .dd_engine import (
    EmptyInterior,
    dd_run,
    ledger_verify,
    prune_redundant,
)
from .exactmath import DenominatorVanishes, RatFun, rat_to_str, rf_equal
from .lp import lp_solve
from .polyhedra import HPolyhedron, dehomogenize, enumerate_vertices_oracle
from .relaxation import (
    DBPInstance,
    LevelTooLow,
    build_de_linear,
    build_hull_lp,
    build_level_lp,
    build_rlt_baseline,
    gap_table,
    solve_and_report,
)
from .certify import Certificate, extract_certificate, verify_certificate
from .facial import FDPInstance, FacesShareVertices, brute_force_fdp, build_fdr_level, check_vertex_disjoint, substitute_indicators
from .relaxation import barycentric_for_polytope

EXIT_PARSE = 2
EXIT_EMPTY = 3
EXIT_LEVEL = 4
EXIT_VERIFY = 5


def _seed() -> int:
    return int(os.environ.get("BARYDD_SEED", "20240801"))


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        print(
            f"parse error in {path}: line {exc.lineno} column {exc.colno}: {exc.msg}",
            file=sys.stderr,
        )
        raise SystemExit(EXIT_PARSE)
    except OSError as exc:
        print(f"cannot read {path}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_PARSE)


def _parse_order(text: Optional[str], m: int) -> Optional[List[int]]:
    if text is None:
        return None
    try:
        order = [int(t) - 1 for t in text.replace(";", ",").split(",") if t.strip()]
    except ValueError:
        print(f"bad --order {text!r}", file=sys.stderr)
        raise SystemExit(EXIT_PARSE)
    if any(i < 0 or i >= m for i in order):
        print(f"--order indices must be in 1..{m}", file=sys.stderr)
        raise SystemExit(EXIT_PARSE)
    return order


def _parse_orders(text: str, m: int, k: int, warn_above: int = 64) -> List[tuple]:
    if text == "all-k-subsets":
        # a subset is an unordered choice; use ascending representatives
        orders = sorted(tuple(c) for c in itertools.combinations(range(m), k))
        if len(orders) > warn_above:
            print(
                f"warning: all-k-subsets expands to {len(orders)} orders",
                file=sys.stderr,
            )
        return orders
    out = []
    for block in text.split(";"):
        if block.strip():
            out.append(tuple(int(t) - 1 for t in block.split(",")))
    for o in out:
        if any(i < 0 or i >= m for i in o) or len(o) != k:
            print(f"bad order {o} (need length {k}, rows 1..{m})", file=sys.stderr)
            raise SystemExit(EXIT_PARSE)
    return out


def _write_artifact(path: str, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest(command: str, input_path: str, options: dict, artifacts: List[str], t0: float) -> dict:
    digest = hashlib.sha256(open(input_path, "rb").read()).hexdigest()
    return {
        "command": command,
        "input": input_path,
        "input_sha256": digest,
        "options": options,
        "artifacts": artifacts,
        "wall_time_s": round(time.time() - t0, 6),
        "version": __version__,
    }


def _maybe_approx(value: Fraction, approx: bool) -> str:
    s = rat_to_str(value)
    if approx and value.denominator != 1:
        s += f" (~{float(value):.9g})"
    return s


# --------------------------------------------------------------------------
# dd
# --------------------------------------------------------------------------


def cmd_dd(args) -> int:
    t0 = time.time()
    data = _load_json(args.input)
    try:
        P = HPolyhedron.from_json(data)
    except (KeyError, ValueError) as exc:
        print(f"bad polytope file: {exc}", file=sys.stderr)
        return EXIT_PARSE
    order = _parse_order(args.order, P.m)
    varrho = None
    init = args.init
    if init.startswith("partial:"):
        varrho = int(init.split(":", 1)[1])
        init = "partial_orthant"
    try:
        run = dd_run(P, order=order, prune=args.prune, init=init, varrho=varrho)
    except EmptyInterior as exc:
        print(f"empty interior: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    st = run.final
    dump = {
        "order": [i + 1 for i in run.order],
        "R": [[rat_to_str(x) for x in col] for col in st.R],
        "L": [[rat_to_str(x) for x in col] for col in st.L],
        "mu": [f.to_json() for f in st.mu],
        "theta": [f.to_json() for f in st.theta],
        "ledger": [e.to_json() for e in run.entries],
        "implied_zero": [iz.name for iz in st.implied_zero],
        "E": [i + 1 for i in st.E],
    }
    print("order:", ",".join(str(i + 1) for i in run.order))
    print(f"columns: {st.p} rays, {st.q} lineality")
    if args.out:
        _write_artifact(args.out, dump)
        _write_artifact(
            args.out + ".manifest.json",
            _manifest(
                "dd",
                args.input,
                {"order": args.order, "init": args.init, "prune": args.prune},
                [args.out],
                t0,
            ),
        )
    else:
        json.dump(dump, sys.stdout, indent=2, sort_keys=True)
        print()
    return 0


# --------------------------------------------------------------------------
# solve
# --------------------------------------------------------------------------


def cmd_solve(args) -> int:
    t0 = time.time()
    data = _load_json(args.input)
    method = args.method
    try:
        if method == "fdr":
            inst = FDPInstance.from_json(data)
        else:
            inst = DBPInstance.from_json(data)
    except (KeyError, ValueError) as exc:
        print(f"bad instance file: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        if method == "hull":
            prob = build_hull_lp(inst)
        elif method == "ddr":
            order = _parse_order(args.order, inst.P.m)
            k = args.level if args.level is not None else inst.P.m
            prob = build_level_lp(inst, k, order=order)
        elif method == "de":
            k = args.level if args.level is not None else 1
            orders = _parse_orders(
                args.orders or "all-k-subsets", inst.P.m, k,
                warn_above=args.orders_warn,
            )
            model = build_de_linear(
                inst, k, orders, theta_cap=args.theta_cap, jobs=args.jobs
            )
            prob = model.problem
        elif method == "rlt1":
            prob = build_rlt_baseline(inst, "level1_general")
        elif method == "rltbox":
            prob = build_rlt_baseline(inst, "box_level_k", k=args.level or 1)
        elif method == "fdr":
            prob = build_fdr_level(inst, args.level or 1)
        else:
            print(f"unknown method {method}", file=sys.stderr)
            return EXIT_PARSE
    except LevelTooLow as exc:
        print(f"level too low: {exc}", file=sys.stderr)
        return EXIT_LEVEL
    except FacesShareVertices as exc:
        print(f"assumption violated: {exc}", file=sys.stderr)
        return EXIT_PARSE
    sol = lp_solve(prob)
    if sol.status == "optimal":
        print(_maybe_approx(sol.value, args.approx))
    else:
        print(sol.status)
    if args.report:
        report = solve_and_report(prob)
        if method == "ddr" and isinstance(inst, DBPInstance):
            report["gap_table"] = gap_table(
                inst, order=_parse_order(args.order, inst.P.m)
            )
        _write_artifact(args.report, report)
        _write_artifact(
            args.report + ".manifest.json",
            _manifest(
                "solve",
                args.input,
                {
                    "method": method,
                    "level": args.level,
                    "order": args.order,
                    "orders": args.orders,
                    "theta_cap": args.theta_cap,
                },
                [args.report],
                t0,
            ),
        )
    return 0


# --------------------------------------------------------------------------
# certify
# --------------------------------------------------------------------------


def cmd_certify(args) -> int:
    t0 = time.time()
    data = _load_json(args.input)
    try:
        inst = DBPInstance.from_json(data)
    except (KeyError, ValueError) as exc:
        print(f"bad instance file: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if args.check:
        cert = Certificate.from_json(_load_json(args.check))
        res = verify_certificate(inst, cert, seed=_seed())
        print("PASS" if res.ok else f"FAIL: {res.diagnostic}")
        return 0 if res.ok else EXIT_VERIFY
    coords = barycentric_for_polytope(inst.P)
    prob = build_hull_lp(inst, vertices=coords.vertices)
    sol = lp_solve(prob)
    if sol.status != "optimal":
        print(f"hull LP not optimal: {sol.status}", file=sys.stderr)
        return EXIT_VERIFY
    cert = extract_certificate(inst, sol, coords, hull_problem=prob)
    payload = cert.to_json()
    payload["rendering"] = cert.render(inst).splitlines()
    if args.out:
        _write_artifact(args.out, payload)
        _write_artifact(
            args.out + ".manifest.json",
            _manifest("certify", args.input, {"verify": args.verify}, [args.out], t0),
        )
    print(f"delta = {rat_to_str(cert.delta)}")
    if args.verify:
        res = verify_certificate(inst, cert, seed=_seed())
        nv = cert.n + cert.ny
        from .exactmath import Poly

        residual = cert.zpoly * (
            inst.objective_poly() - Poly.const(nv, cert.delta)
        ) - cert.identity_rhs(inst)
        print(f"identity residual: {'0' if residual.is_zero() else repr(residual)}")
        print("PASS" if res.ok else f"FAIL: {res.diagnostic}")
        if not res.ok:
            return EXIT_VERIFY
    return 0


# --------------------------------------------------------------------------
# fdr-check
# --------------------------------------------------------------------------


def cmd_fdr_check(args) -> int:
    data = _load_json(args.input)
    try:
        inst = FDPInstance.from_json(data)
    except (KeyError, ValueError) as exc:
        print(f"bad FDP file: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        sets = check_vertex_disjoint(inst)
    except FacesShareVertices as exc:
        print(f"FAIL assumption: {exc}")
        return 1
    for i, block_sets in enumerate(sets):
        for j, E in enumerate(block_sets):
            print(f"block {i} face {j}: vertices {list(E)}")
    print("PASS assumption: faces are vertex-disjoint")
    if args.level:
        prob = build_fdr_level(inst, args.level)
        sol = lp_solve(prob)
        val = rat_to_str(sol.value) if sol.status == "optimal" else sol.status
        print(f"FDR^{args.level} value: {val}")
        if args.brute:
            bf = brute_force_fdp(inst)
            print(f"disjunctive optimum: {rat_to_str(bf) if bf is not None else 'infeasible'}")
            if args.level == inst.np and sol.status == "optimal" and bf is not None:
                ok = sol.value == bf
                print("PASS exactness" if ok else "FAIL exactness")
                return 0 if ok else 1
    return 0


# --------------------------------------------------------------------------
# verify-identities
# --------------------------------------------------------------------------


def cmd_verify_identities(args) -> int:
    data = _load_json(args.input)
    try:
        P = HPolyhedron.from_json(data)
    except (KeyError, ValueError) as exc:
        print(f"bad polytope file: {exc}", file=sys.stderr)
        return EXIT_PARSE
    order = _parse_order(args.order, P.m)
    rng = random.Random(_seed())
    checks = []
    try:
        run = dd_run(P, order=order)
    except EmptyInterior as exc:
        print(f"empty interior: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    st = run.final
    nv = P.n + 1

    # linear precision as a symbolic identity
    ok = True
    for r in range(nv):
        acc = RatFun.const(nv, 0)
        for col, f in zip(st.R, st.mu):
            if col[r]:
                acc = acc + f.scale(col[r])
        for col, f in zip(st.L, st.theta):
            if col[r]:
                acc = acc + f.scale(col[r])
        if not rf_equal(acc, RatFun.variable(nv, r)):
            ok = False
    checks.append(("linear precision (symbolic)", ok))

    ok = all(
        ledger_verify(run.raw_states[i], run.raw_states[i + 1], run.entries[i])
        for i in range(len(run.entries))
    )
    checks.append(("ledger identities", ok))
    checks.append(
        ("D >= 0 in every entry", all(all(all(x >= 0 for x in row) for row in e.D) for e in run.entries))
    )

    ray_steps = sum(1 for e in run.entries if e.case == "ray")
    bound_num = (3**ray_steps + 1) // 2
    bound_den = (3**ray_steps - 1) // 2 if ray_steps else 0
    ok = all(
        m.num.degree() <= bound_num and m.den.degree() <= max(bound_den, 0)
        for m in st.mu
    )
    checks.append(("degree bounds", ok))

    bounded = all(col[0] > 0 for col in st.R) and st.q == 0
    if bounded:
        pruned = prune_redundant(st)
        V, lam = dehomogenize(pruned.R, list(pruned.mu))
        pts = [tuple(c[1:]) for c in V]
        total = RatFun.const(nv, 0)
        for f in lam:
            total = total + f
        checks.append(("partition of unity", rf_equal(total, RatFun.const(nv, 1))))
        oracle = enumerate_vertices_oracle(P)
        checks.append(("pruned set = vertex oracle", sorted(pts) == oracle))
        ok = True
        for j, fj in enumerate(lam):
            for i, pt in enumerate(pts):
                if fj.eval((Fraction(1),) + pt) != (1 if i == j else 0):
                    ok = False
        checks.append(("vertex indicator", ok))
        # interior positivity at sampled points
        samples = int(args.samples)
        ok = True
        for _ in range(samples):
            ws = [Fraction(rng.randint(1, 40)) for _ in pts]
            tot = sum(ws)
            x = tuple(sum(w * p[j] for w, p in zip(ws, pts)) / tot for j in range(P.n))
            for f in lam:
                try:
                    if f.eval((Fraction(1),) + x) <= 0:
                        ok = False
                except DenominatorVanishes:
                    ok = False
        checks.append((f"interior positivity ({samples} samples)", ok))

    width = max(len(name) for name, _ in checks) + 2
    failed = False
    for name, ok in checks:
        print(f"{name:<{width}} {'PASS' if ok else 'FAIL'}")
        failed = failed or not ok
    return 1 if failed else 0


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="barydd", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dd", help="double description with symbolic coordinates")
    p.add_argument("input")
    p.add_argument("--order", help="1-based row order, e.g. 4,5,6,1,2,3")
    p.add_argument(
        "--init",
        default="default",
        help="default | orthant | partial:R | phase1",
    )
    p.add_argument("--prune", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_dd)

    p = sub.add_parser("solve", help="build and solve a relaxation")
    p.add_argument("input")
    p.add_argument("--method", required=True,
                   choices=["hull", "ddr", "de", "rlt1", "rltbox", "fdr"])
    p.add_argument("--level", type=int)
    p.add_argument("--order", help="1-based row order for ddr")
    p.add_argument("--orders", help="semicolon-separated 1-based orders, or all-k-subsets")
    p.add_argument("--orders-warn", type=int, default=64, dest="orders_warn",
                   help="warn when all-k-subsets expands beyond this count")
    p.add_argument("--theta-cap", type=int, dest="theta_cap")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--report")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("certify", help="extract / verify an optimality certificate")
    p.add_argument("input")
    p.add_argument("--out")
    p.add_argument("--verify", action="store_true")
    p.add_argument("--check", help="verify an existing certificate file")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("fdr-check", help="check facial-disjunctive assumptions")
    p.add_argument("input")
    p.add_argument("--level", type=int)
    p.add_argument("--brute", action="store_true")
    p.set_defaults(func=cmd_fdr_check)

    p = sub.add_parser("verify-identities", help="run the invariant suite on a polytope")
    p.add_argument("input")
    p.add_argument("--order")
    p.add_argument("--samples", default="20")
    p.set_defaults(func=cmd_verify_identities)

    for sp in sub.choices.values():
        sp.add_argument("--approx", action="store_true",
                        help="append decimal renderings to exact values")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except LevelTooLow as exc:
        print(f"level too low: {exc}", file=sys.stderr)
        return EXIT_LEVEL
    except EmptyInterior as exc:
        print(f"empty interior: {exc}", file=sys.stderr)
        return EXIT_EMPTY


if __name__ == "__main__":
    raise SystemExit(main())
