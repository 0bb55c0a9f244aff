"""Command line front end: ``workbench <subcommand> [options]``.

Every report is JSON (or key: value text) echoing the inputs, the truncation
weight, the hbar cap, the sha256 of the conventions file, exact values as
rational strings and a verdict.  Exit codes: 0 pass, 1 invariant failure,
2 usage error, 3 parse error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import random
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from . import atiyah, bv, graphs, linfinity, rgflow
from .fixtures import fixture_names, load_fixture
from .geometry import GeometryError, cotangent_pairs, p0_bracket
from .graded import GradedPolynomial
from .linf_format import LinfSemanticError, LinfSyntaxError, load_linf

log = logging.getLogger("hwb")

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_PARSE = 0, 1, 2, 3


class UsageError(Exception):
    pass


def conventions_hash() -> str:
    data = (resources.files("hwb") / "data" / "conventions.toml").read_bytes()
    return hashlib.sha256(data).hexdigest()


def jsonable(x: Any) -> Any:
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, GradedPolynomial):
        return x.to_records()
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, float) or x is None or isinstance(x, (bool, int, str)):
        return x
    return str(x)


def load_algebra(spec: str, skip_verify: bool, W: int) -> linfinity.CurvedLInfinity:
    """A path to a .linf file, or the name of a bundled fixture."""
    path = Path(spec)
    if path.is_file():
        g = load_linf(path)
    else:
        name = spec[:-5] if spec.endswith(".linf") else spec
        if name not in fixture_names():
            raise UsageError(f"{spec}: no such file or bundled fixture ({', '.join(fixture_names())})")
        g = load_fixture(name)
    if not skip_verify:
        residual = linfinity.verify_linfinity(g, W)
        if residual:
            raise LinfSemanticError("verification failed: " + ", ".join(f"{k}: {v}" for k, v in residual.items()))
    return g


# ---------------------------------------------------------------------------
# graph cache


def cache_dir(args) -> Path:
    root = args.cache_dir or os.environ.get("WORKBENCH_CACHE") or Path.home() / ".cache" / "hwb"
    return Path(root)


def _cells(graph_list) -> Dict[str, List[str]]:
    cells: Dict[str, List[str]] = {}
    for g in graph_list:
        cells.setdefault(f"{g.n_vertices}:{g.genus()}", []).append(g.encode())
    return cells


def cached_graphs(directory: Path, max_vertices: int, max_genus: int, tails: int, labeled: bool):
    """Graphs grouped in (vertices, genus) cells; existing cells are never rewritten."""
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"graphs-t{tails}-{'labeled' if labeled else 'unlabeled'}.json"
    store: Dict[str, Any] = {"cells": {}, "aut": {}}
    status = "miss"
    if path.exists():
        try:
            store = json.loads(path.read_text())
            for enc, a in list(store["aut"].items())[:5]:
                if graphs.brute_force_automorphisms(graphs.StableGraph.decode(enc)) != a:
                    raise ValueError(f"cached |Aut| of {enc} is wrong")
            status = "hit"
        except (ValueError, KeyError, TypeError) as e:
            log.warning("graph cache %s is corrupt (%s); regenerating", path, e)
            store, status = {"cells": {}, "aut": {}}, "regenerated"
    wanted = [f"{v}:{g}" for v in range(1, max_vertices + 1) for g in range(max_genus + 1)]
    if any(c not in store["cells"] for c in wanted):
        fresh = graphs.enumerate_stable_graphs(max_vertices, max_genus, tails, labeled=labeled)
        cells = _cells(fresh)
        for c in wanted:
            new = cells.get(c, [])
            if c in store["cells"]:
                if store["cells"][c] != new:
                    log.warning("cache cell %s differs from a fresh enumeration; replacing", c)
                    store["cells"][c] = new
            else:
                store["cells"][c] = new
        for g in fresh:
            store["aut"].setdefault(g.encode(), g.automorphisms())
        status = "extended" if status == "hit" else status
        path.write_text(json.dumps(store, sort_keys=True, indent=1))
    out = [graphs.StableGraph.decode(e) for c in wanted for e in store["cells"].get(c, [])]
    return out, {enc: store["aut"][enc] for enc in (g.encode() for g in out)}, status


# ---------------------------------------------------------------------------
# subcommands; each returns (results, checks)


def cmd_check_linf(args, W, H):
    g = load_algebra(args.linf, True, W)
    residual = linfinity.verify_linfinity(g, W)
    problems = g.pairing_problems()
    return ({"name": g.name, "dimension": g.dim(), "arities": g.arities(), "residuals": residual or "none",
             "pairing_problems": problems},
            {"jacobi": not residual, "pairing": not problems})


def cmd_ce_cohomology(args, W, H):
    g = load_algebra(args.linf, args.skip_verify, W)
    r = linfinity.ce_cohomology(g, W)
    return {"betti": r["by_degree"]}, {}


def cmd_atiyah(args, W, H):
    g = load_algebra(args.linf, args.skip_verify, W)
    at = atiyah.atiyah_class(atiyah.tangent_module(g), W)
    top = max([n for n in g.arities() if n >= 2] + [2])
    taylor = {f"l{n + 2}": atiyah.taylor_matches(at, g, n) for n in range(0, min(top, 5) - 1)}
    checks = {"closed": bool(at.closed()), "horizontal": bool(at.horizontal()) if callable(at.horizontal) else True}
    checks.update({f"taylor_{k}": v for k, v in taylor.items()})
    return {"taylor_reproduces": taylor}, checks


def cmd_chern(args, W, H):
    g = load_algebra(args.linf, args.skip_verify, W)
    ch = atiyah.chern_character(atiyah.tangent_module(g), args.kmax, W)
    return {"ch": {str(k): p for k, p in enumerate(ch, 1)}}, {}


def cmd_ahat(args, W, H):
    c = atiyah.ahat_series_coefficients(args.kmax)
    oracle = atiyah.ahat_series_oracle(args.kmax)
    return {"c": c, "oracle": oracle}, {"series_matches_oracle": c == oracle}


def cmd_mixed_u(args, W, H):
    g = load_algebra(args.linf, args.skip_verify, W)
    mc = atiyah.mixed_complex_u(atiyah.tangent_module(g), W)
    defects = mc.square_defects()
    S = mc.log_ahat_u
    return ({"log_ahat_u": S, "log_ahat_u_total_closed": mc.total(S).is_zero()},
            {"u_dR_squares_to_zero": not defects["u_dR"], "total_squares_to_zero": not defects["total"]})


def _model(args, W):
    g = load_algebra(args.linf, args.skip_verify, W)
    try:
        return bv.bv_model(g, W)
    except (GeometryError, ValueError) as e:
        raise UsageError(str(e)) from None


def cmd_p0(args, W, H):
    m = _model(args, W)
    pairs = cotangent_pairs(m.ctx)
    gens = [m.gen(x.name) for x in m.ctx.generators]
    canonical = all(p0_bracket(m.gen(x), m.gen(y)) == GradedPolynomial.const(m.ctx, 1, m.work) for x, y in pairs)
    bad = 0
    for a in gens:
        for b in gens:
            # d {a, b} = {d a, b} + (-1)^|a| {a, d b}
            lhs = m.d(p0_bracket(a, b))
            rhs = p0_bracket(m.d(a), b) + p0_bracket(a, m.d(b)).scale(-1 if a.degree() % 2 else 1)
            if m.cut(lhs) != m.cut(rhs):
                bad += 1
    return {"pairs": [list(p) for p in pairs]}, {"canonical_pairs": canonical, "d_derivation_of_bracket": bad == 0}


def cmd_delta0(args, W, H):
    m = _model(args, W)
    rep = bv.laplacian_report(m, sample=args.samples, seed=args.seed)
    cartan = bv.delta0_via_cartan(m)
    keys = m.basis()
    if args.samples is not None and args.samples < len(keys):
        keys = random.Random(args.seed).sample(keys, args.samples)
    mismatch = bv.operators_agree(bv.canonical_delta0(m), cartan["operator"], m, keys)
    checks = {k: rep[k] for k in ("square_zero", "commutes_with_d", "bracket_is_p0", "order_two")}
    checks["cartan_route_agrees"] = not mismatch
    return {"checked": rep["checked"]}, checks


def cmd_qme(args, W, H):
    m = _model(args, W)
    S = bv.log_ahat_on_model(m)
    residual = bv.qme_residual(m, bv.canonical_delta0(m), S, H)
    return {"S": m.cut(S), "residual": residual or "none"}, {"qme": not residual}


def cmd_gauge(args, W, H):
    m = _model(args, W)
    S = bv.log_ahat_on_model(m)
    gt = bv.gauge_transform(m, S, bv.random_monomials(m, args.samples, args.seed))
    return {"checked": gt.certificate["checked"]}, {"gauge_identity": gt.certificate["holds"]}


def cmd_div_cohomology(args, W, H):
    r = bv.divergence_cohomology(args.d1, args.d2, W, args.hbar_mode, args.seed)
    checks = {"status_ok": r["status"] in ("ok", "formal")}
    if r["status"] == "ok":
        checks["rank_one_in_expected_degree"] = r["ranks"] == {r["expected_degree"]: 1}
    return {k: r[k] for k in ("ranks", "de_rham_ranks", "status", "expected_degree", "blocks_skipped")}, checks


def cmd_integrate(args, W, H):
    g = load_algebra(args.linf, args.skip_verify, W)
    try:
        m = bv.bv_model(g, W)
        alpha = bv.random_base_class(m, args.seed) if args.alpha == "random" else None
        r = bv.integration_identity(g, alpha, W, model=m, seed=args.seed)
    except bv.NotNiceError as e:
        raise UsageError(str(e)) from None
    keys = ("exp_log_equals_berezinian", "chain_isomorphism", "same_class", "left_is_cocycle")
    return ({"alpha": args.alpha, "left": r["left"], "trivialization": r["trivialization"]},
            {k: r[k] for k in keys})


def cmd_graphs(args, W, H):
    labeled = not args.unlabeled
    if args.no_cache:
        found = graphs.enumerate_stable_graphs(args.max_vertices, args.max_genus, args.tails, labeled=labeled)
        aut = {g.encode(): g.automorphisms() for g in found}
        status = "disabled"
    else:
        found, aut, status = cached_graphs(cache_dir(args), args.max_vertices, args.max_genus, args.tails, labeled)
    checks = {}
    if args.oracle:
        oracle = graphs.oracle_stable_graphs(args.max_vertices, args.max_genus, args.tails, labeled=labeled)
        # oracle representatives are arbitrary members of their class; compare canonical forms
        canon = {g.canonical().encode() for g in oracle}
        mine = {g.canonical().encode() for g in found}
        checks["matches_oracle"] = len(canon) == len(oracle) == len(mine) == len(found) and canon == mine
        checks["aut_matches_brute_force"] = all(graphs.brute_force_automorphisms(g) == aut[g.encode()] for g in found)
    return ({"count": len(found), "cache": status,
             "graphs": [{"canonical": g.encode(), "aut": aut[g.encode()]} for g in found]}, checks)


def cmd_rg_flow(args, W, H):
    if not 1 <= args.dim <= 6:
        raise UsageError("--dim must be between 1 and 6")
    rng = random.Random(args.seed)
    degrees = [rng.choice((-1, 0, 0, 1)) for _ in range(args.dim)]
    fields = rgflow.FieldSpace.from_degrees({f"f{i}": d for i, d in enumerate(degrees)})
    semigroup = routes = identity = 0
    for _ in range(args.trials):
        P = rgflow.Propagator.random(fields, rng)
        Q = rgflow.Propagator.random(fields, rng)
        I = rgflow.random_interaction(fields, rng, W, H, terms=6)
        a = rgflow.rg_flow(P, I, H, W)
        routes += a == rgflow.rg_flow_algebraic(P, I, H, W)
        semigroup += rgflow.rg_flow_algebraic(P + Q, I, H, W) == rgflow.rg_flow(Q, a, H, W)
        identity += rgflow.rg_flow(rgflow.Propagator(fields, {}), I, H, W) == I
    n = args.trials
    return ({"field_degrees": degrees, "trials": n},
            {"graphs_equal_algebraic": routes == n, "semigroup": semigroup == n, "zero_propagator": identity == n})


def cmd_wheel_sum(args, W, H):
    if args.k < 1 or args.N < 1:
        raise UsageError("--k and --N must be positive")
    target = rgflow.wheel_target(args.k)
    value = rgflow.s1_wheel_mode_sum(args.k, args.N)
    err = abs(value - float(target))
    tol = args.tol if args.tol is not None else 1e-6 * abs(float(target))
    res = {"value": value, "target": target, "abs_error": err, "tolerance": tol}
    if args.table:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "partial_sum", "target", "abs_error"])
        Ns = sorted({n for n in (1, 10, 100, 1000, 10 ** 4, 10 ** 5, 10 ** 6) if n <= args.N} | {args.N})
        for row in rgflow.convergence_table(args.k, Ns):
            w.writerow([row[0], repr(row[1]), repr(row[2]), repr(row[3])])
        res["table_csv"] = buf.getvalue()
    return res, {"within_tolerance": err < tol}


def cmd_phi4_weight(args, W, H):
    if not 0 < args.eps <= args.L:
        raise UsageError("need 0 < eps <= L")
    value = rgflow.heat_weight_phi4(args.eps, args.L, args.steps)
    exact = rgflow.heat_weight_closed_form(args.eps, args.L)
    err = abs(value - exact)
    order = rgflow.richardson_order(args.eps, args.L) if args.eps < args.L else None
    return ({"value": value, "closed_form": exact, "abs_error": err, "tolerance": args.tol, "observed_order": order},
            {"within_tolerance": err < args.tol})


COMMANDS: Dict[str, Callable] = {
    "check-linf": cmd_check_linf, "ce-cohomology": cmd_ce_cohomology, "atiyah": cmd_atiyah, "chern": cmd_chern,
    "ahat": cmd_ahat, "mixed-u": cmd_mixed_u, "p0": cmd_p0, "delta0": cmd_delta0, "qme": cmd_qme,
    "gauge": cmd_gauge, "div-cohomology": cmd_div_cohomology, "integrate": cmd_integrate, "graphs": cmd_graphs,
    "rg-flow": cmd_rg_flow, "wheel-sum": cmd_wheel_sum, "phi4-weight": cmd_phi4_weight,
}

# (default truncation weight, default hbar cap) per subcommand
DEFAULTS = {"div-cohomology": (4, 0), "rg-flow": (5, 2), "qme": (6, 2), "check-linf": (5, 0)}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--truncation-weight", type=int, default=None, help="weight cutoff W")
    common.add_argument("--hbar-max", type=int, default=None, help="hbar-order cap")
    common.add_argument("--skip-verify", action="store_true", help="do not verify the L-infinity relations on load")
    common.add_argument("--cache-dir", default=None, help="graph cache directory (default $WORKBENCH_CACHE)")
    common.add_argument("--threads", type=int, default=1, help="accepted for compatibility; runs are sequential")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--seed", type=int, default=0)

    p = argparse.ArgumentParser(prog="workbench", description="Exact computations on L-infinity spaces.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_, with_file=False):
        sp = sub.add_parser(name, parents=[common], help=help_)
        if with_file:
            sp.add_argument("linf", help="path to a .linf file or a bundled fixture name")
        return sp

    add("check-linf", "parse and verify a .linf file", True)
    add("ce-cohomology", "Chevalley-Eilenberg Betti numbers", True)
    add("atiyah", "Atiyah class checks and Taylor coefficients", True)
    add("chern", "Chern character components", True).add_argument("--kmax", type=int, default=2)
    add("ahat", "coefficients of log A-hat").add_argument("--kmax", type=int, default=8)
    add("mixed-u", "the mixed complex d + u d_dR and log A-hat_u", True)
    add("p0", "shifted Poisson structure on the shifted cotangent model", True)
    sp = add("delta0", "canonical BV Laplacian checks", True)
    sp.add_argument("--samples", type=int, default=None)
    add("qme", "master equation for log A-hat", True)
    add("gauge", "gauge-transform identity on random monomials", True).add_argument("--samples", type=int, default=100)
    sp = add("div-cohomology", "divergence complex of the local model")
    sp.add_argument("--d1", type=int, required=True)
    sp.add_argument("--d2", type=int, required=True)
    sp.add_argument("--hbar-mode", choices=("inverted", "formal"), default="inverted")
    sp = add("integrate", "integration identity on a nice algebra", True)
    sp.add_argument("--alpha", choices=("one", "random"), default="one")
    sp = add("graphs", "enumerate stable graphs")
    sp.add_argument("--max-vertices", type=int, default=3)
    sp.add_argument("--max-genus", type=int, default=1)
    sp.add_argument("--tails", type=int, default=3)
    sp.add_argument("--unlabeled", action="store_true")
    sp.add_argument("--oracle", action="store_true", help="compare against the adjacency-matrix oracle")
    sp.add_argument("--no-cache", action="store_true")
    sp = add("rg-flow", "random checks of the flow operator")
    sp.add_argument("--dim", type=int, default=4)
    sp.add_argument("--trials", type=int, default=10)
    sp = add("wheel-sum", "S^1 mode sum for the 2k-wheel")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--N", type=int, default=10 ** 6)
    sp.add_argument("--tol", type=float, default=None, help="absolute tolerance (default 1e-6 relative)")
    sp.add_argument("--table", action="store_true", help="include a CSV convergence table")
    sp = add("phi4-weight", "one-loop heat-kernel weight")
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--L", type=float, required=True)
    sp.add_argument("--steps", type=int, default=400)
    sp.add_argument("--tol", type=float, default=1e-8)
    return p


def render(report: Dict[str, Any], fmt: str) -> str:
    data = jsonable(report)
    if fmt == "json":
        return json.dumps(data, sort_keys=True, indent=2)
    lines = []
    for k in sorted(data):
        v = data[k]
        lines.append(f"{k}: {v if isinstance(v, str) else json.dumps(v, sort_keys=True)}")
    return "\n".join(lines)


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_PASS
    W0, H0 = DEFAULTS.get(args.command, (6, 1))
    W = args.truncation_weight if args.truncation_weight is not None else W0
    H = args.hbar_max if args.hbar_max is not None else H0
    try:
        results, checks = COMMANDS[args.command](args, W, H)
    except (LinfSyntaxError, LinfSemanticError) as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (UsageError, graphs.GraphBoundsError, rgflow.ShapeError) as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    inputs = {k: v for k, v in sorted(vars(args).items()) if k not in ("command", "format", "threads", "cache_dir")}
    report = {"command": args.command, "inputs": inputs, "truncation_weight": W, "hbar_max": H,
              "conventions_sha256": conventions_hash(), "results": results,
              "checks": checks, "verdict": "pass" if all(checks.values()) else "fail"}
    print(render(report, args.format))
    return EXIT_PASS if report["verdict"] == "pass" else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
