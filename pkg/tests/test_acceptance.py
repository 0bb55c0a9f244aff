"""Acceptance suite: one PASS/FAIL line per criterion, printed even under capture.

Run alone with ``pytest tests/test_acceptance.py -v`` or as a script.
"""
from __future__ import annotations

import random
import sys
import time
from fractions import Fraction

import pytest

from hwb import atiyah, bv, graphs, linfinity, rgflow
from hwb.fixtures import load_fixture

RESULTS = {}


@pytest.fixture
def verdict(request, capsys):
    def emit(number, ok, detail):
        RESULTS[number] = ok
        with capsys.disabled():
            print(f"\n[acceptance {number:2d}] {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return emit


def _nonzero(table):
    return {k: v for k, v in table.items() if v}


def test_01_ahat_coefficients(verdict):
    start = time.perf_counter()
    c = atiyah.ahat_series_coefficients(8)
    oracle = atiyah.ahat_series_oracle(8)
    B = atiyah.bernoulli(16)
    elapsed = time.perf_counter() - start
    closed = [-B[2 * k] / (2 * k) for k in range(1, 9)]
    ok = c == closed == oracle and elapsed < 1.0
    verdict(1, ok, f"k=1..8 exact against Bernoulli and series oracle, {elapsed:.3f}s < 1s")


def test_02_koszul_round_trip(verdict):
    start = time.perf_counter()
    bad = []
    for name in ("sl2", "nil4", "curved"):
        g = load_fixture(name)
        at = atiyah.atiyah_class(atiyah.tangent_module(g), 6)
        bad += [(name, n) for n in range(0, 4) if not atiyah.taylor_matches(at, g, n)]
    elapsed = time.perf_counter() - start
    verdict(2, not bad and elapsed < 10, f"brackets of arity 2..5 recovered on sl2, nil4, curved; {elapsed:.2f}s < 10s")


def test_03_sl2_cohomology(verdict):
    tables = {}
    for W in (3, 4, 6):
        tables[("sl2", W)] = _nonzero(linfinity.ce_cohomology(load_fixture("sl2"), W)["by_degree"])
        tables[("abelian_line", W)] = _nonzero(linfinity.ce_cohomology(load_fixture("abelian_line"), W)["by_degree"])
    ok = all(t == {0: 1, 3: 1} for t in tables.values())
    verdict(3, ok, "sl2 and the degree -2 line both give {0: 1, 3: 1} at W = 3, 4, 6")


def test_04_divergence_complex(verdict):
    start = time.perf_counter()
    got = {}
    for d1, d2 in ((0, 0), (1, 0), (1, 1), (2, 1)):
        r = bv.divergence_cohomology(d1, d2, 4)
        got[(d1, d2)] = r["ranks"] == {-2 * d1: 1} == r["de_rham_ranks"] and r["status"] == "ok"
    elapsed = time.perf_counter() - start
    verdict(4, all(got.values()) and elapsed < 60, f"rank one in degree -2 d1 for {sorted(got)}, {elapsed:.2f}s < 60s")


def test_05_canonical_laplacian(verdict):
    ok = True
    for name in ("sl2", "nil4", "l3"):
        m = bv.bv_model(load_fixture(name), 6)
        r = bv.laplacian_report(m)
        cartan = bv.delta0_via_cartan(m)["operator"]
        agree = bv.operators_agree(cartan, bv.canonical_delta0(m), m, m.basis()) == []
        ok &= all(r[k] for k in ("square_zero", "commutes_with_d", "bracket_is_p0", "order_two")) and agree
    verdict(5, ok, "square zero, commutes with d, bracket = P0, Cartan route agrees; sl2, nil4, l3 at W = 6")


def test_06_gauge_transform(verdict):
    m = bv.bv_model(load_fixture("sl2"), 6)
    S = bv.log_ahat_on_model(m)
    cert = bv.gauge_transform(m, S, bv.random_monomials(m, 100, 0)).certificate
    ok = cert["holds"] and cert["checked"] == 100 and not m.cut(S).is_zero()
    verdict(6, ok, f"identity exact on {cert['checked']} random monomials, S = log A-hat nonzero, W = 6")


def test_07_semigroup(verdict):
    start = time.perf_counter()
    rng = random.Random(2024)
    passed = trials = 0
    while trials < 50:
        dim = 6 if trials % 5 == 0 else rng.randint(1, 6)
        fields = rgflow.FieldSpace.from_degrees({f"f{i}": rng.choice((-1, 0, 0, 1)) for i in range(dim)})
        P, Q = rgflow.Propagator.random(fields, rng), rgflow.Propagator.random(fields, rng)
        I = rgflow.random_interaction(fields, rng, 5, 2)
        if I.is_zero():
            continue
        trials += 1
        passed += rgflow.rg_flow(P + Q, I, 2, 5) == rgflow.rg_flow(Q, rgflow.rg_flow(P, I, 2, 5), 2, 5)
    elapsed = time.perf_counter() - start
    verdict(7, passed == 50 and elapsed < 300, f"{passed}/50 trials exact, dim <= 6, hbar <= 2, W = 5, {elapsed:.1f}s")


def test_08_master_equation_along_flow(verdict):
    th, _ = rgflow.toy_theory(6)
    rng = random.Random(8)
    kept = preserved = 0
    while kept < 20:
        J0 = rgflow.random_interaction(th.fields, rng, 6, 2, terms=4, degree=-1)
        I = rgflow.qme_solution_from_gauge(th, J0, 6)
        P = rgflow.Propagator.random(th.fields, rng)
        if I.is_zero() or not P.entries or rgflow.scale_qme_residual(th, I, 2):
            continue
        kept += 1
        preserved += rgflow.scale_qme_residual(th.moved(P), rgflow.rg_flow(P, I, 2, 6), 2) == {}
    verdict(8, preserved == kept, f"{preserved}/{kept} solutions stay solutions after the flow, hbar <= 2, W = 6")


def test_09_wheel_mode_sums(verdict):
    e1 = abs(rgflow.s1_wheel_mode_sum(1, 10 ** 6) - float(Fraction(-1, 12)))
    e2 = abs(rgflow.s1_wheel_mode_sum(2, 10 ** 3) - float(Fraction(1, 720)))
    verdict(9, e1 < 2e-7 and e2 < 1e-9, f"|err| = {e1:.2e} < 2e-7 and {e2:.2e} < 1e-9")


def test_10_phi4_weight(verdict):
    errs = [abs(rgflow.heat_weight_phi4(e, L) - rgflow.heat_weight_closed_form(e, L)) for e, L in ((0.01, 1), (0.1, 10))]
    verdict(10, max(errs) < 1e-8, f"max |err| = {max(errs):.2e} < 1e-8")


def test_11_integration_identity(verdict):
    ok = True
    for name in ("line", "dbl"):
        g = load_fixture(name)
        m = bv.bv_model(g, 6)
        for alpha in (None, bv.random_base_class(m, 3)):
            r = bv.integration_identity(g, alpha, 6, model=m, seed=3)
            ok &= all(r[k] for k in ("exp_log_equals_berezinian", "chain_isomorphism", "same_class",
                                     "left_is_cocycle"))
    verdict(11, ok, "alpha = 1 and a random base class on line and dbl, same class at W = 6")


def test_12_graph_enumeration(verdict):
    ok = True
    total = 0
    for tails in (1, 2, 3, 4):
        for labeled in (True, False):
            mine = graphs.enumerate_stable_graphs(5, 1, tails, labeled)
            oracle = graphs.oracle_stable_graphs(5, 1, tails, labeled)
            canon = {g.canonical().encode() for g in mine}
            ok &= len(mine) == len(oracle) == len(canon)
            ok &= canon == {g.canonical().encode() for g in oracle}
            ok &= all(g.automorphisms() == graphs.brute_force_automorphisms(g) for g in mine)
            total += len(mine)
    verdict(12, ok, f"{total} graphs, <= 5 vertices, genus <= 1, 1..4 tails; oracle and |Aut| agree")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
