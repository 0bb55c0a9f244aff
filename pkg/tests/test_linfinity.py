from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hwb import linfinity
from hwb.fixtures import fixture_names, fixture_path, load_fixture
from hwb.graded import Generator, GradedPolynomial, key_poly, monomial_basis
from hwb.linf_format import LinfSemanticError, LinfSyntaxError, dump_linf, parse_coeff, parse_linf

W = 6
VALID = [n for n in fixture_names()]


def _sl2_text(old=None, new=None):
    text = fixture_path("sl2").read_text()
    return text.replace(old, new) if old else text


def _nonzero(table):
    return {k: r for k, r in table.items() if r}


@pytest.mark.parametrize("name", VALID)
def test_fixtures_verify_both_routes(name):
    g = load_fixture(name)
    assert linfinity.verify_linfinity(g, W) == {}
    if not g.base.differential:
        assert linfinity.bracket_relations(g) == {}


@pytest.mark.parametrize("name", VALID)
def test_fixtures_round_trip_through_text(name):
    g = load_fixture(name)
    again = parse_linf(dump_linf(g), name)
    assert dump_linf(again) == dump_linf(g)
    assert list(again.entries()) == list(g.entries())


def test_abelian_differential_is_zero():
    g = load_fixture("abelian_line")
    ce = linfinity.ce_differential(g, W)
    assert all(ce.d(ce.gen(x.name)).is_zero() for x in ce.ctx.generators)


def test_dg_lie_differential_has_linear_and_quadratic_parts_only():
    g = load_fixture("line")
    ce = linfinity.ce_differential(g, W)
    lengths = {sum(k[0]) for x in ce.ctx.generators for k in ce.d(ce.gen(x.name)).terms}
    assert lengths == {1, 2}


def test_perturbed_sl2_residual_sits_on_h():
    g = parse_linf(_sl2_text("2: h e -> e 2", "2: h e -> e 3"))
    residual = linfinity.verify_linfinity(g, W)
    assert set(residual) == {linfinity.dual_name("h")}
    assert linfinity.bracket_relations(g) != {}
    assert linfinity.jacobi_residual(g, "e", "f", "h") != {}


def test_rescaled_bracket_is_still_lie():
    g = parse_linf(_sl2_text("2: e f -> h 1", "2: e f -> h 3"))
    assert linfinity.verify_linfinity(g, W) == {}


def test_jacobi_residual_cases():
    sl2 = load_fixture("sl2")
    for x in "efh":
        for y in "efh":
            for z in "efh":
                assert linfinity.jacobi_residual(sl2, x, y, z) == {}
    l3 = load_fixture("l3")
    names = [b.name for b in l3.basis]
    assert all(linfinity.jacobi_residual(l3, x, y, z) == {} for x in names for y in names for z in names)
    ab = load_fixture("abelian_line")
    assert linfinity.jacobi_residual(ab, "x", "x", "x") == {}
    with pytest.raises(NotImplementedError):
        linfinity.jacobi_residual(load_fixture("curved"), "v", "p", "m")


def test_l3_needs_its_ternary_bracket():
    broken = load_fixture("l3").copy("broken")
    broken.table.pop(3)
    assert linfinity.verify_linfinity(broken, W) != {}


def test_reduction_of_curved_fixture():
    g = load_fixture("curved")
    assert linfinity.l1_squared(g) != {}
    red = linfinity.reduce_mod_ideal(g)
    assert 0 not in red.arities()
    assert linfinity.l1_squared(red) == {}
    assert linfinity.verify_linfinity(red, W) == {}
    sl2 = load_fixture("sl2")
    assert list(linfinity.reduce_mod_ideal(sl2).entries()) == list(sl2.entries())


def test_curvature_must_lie_in_ideal():
    g = linfinity.CurvedLInfinity([Generator("v", 2)])
    with pytest.raises(linfinity.StructureError):
        g.add_bracket([], "v", 1)


def test_mc_residual_cases():
    ab, sl2, curved = load_fixture("abelian_line"), load_fixture("sl2"), load_fixture("curved")
    assert linfinity.maurer_cartan_residual(ab, sl2, {}, W) == {}
    res = linfinity.maurer_cartan_residual(curved, curved, {}, W)
    assert set(res) == {"v"} and str(res["v"]) == "1*eta"


@given(st.integers(0, 10_000))
@settings(max_examples=15, deadline=None)
def test_mc_residual_matches_direct_formula(seed):
    src, tgt, Wm = load_fixture("nil4"), load_fixture("sl2"), 5
    ce = linfinity.ce_differential(src, Wm)
    rng = random.Random(seed)
    keys = monomial_basis(ce.ctx, 3, 1)
    alpha = {}
    for t in "efh":
        p = GradedPolynomial.zero(ce.ctx, Wm)
        for k in rng.sample(keys, 2):
            p = p + key_poly(ce.ctx, k, Wm).scale(Fraction(rng.randint(-3, 3), rng.randint(1, 2)))
        alpha[t] = p
    direct = {t: ce.d(alpha[t]) for t in "efh"}
    for i in "efh":
        for j in "efh":
            for o, c in tgt.bracket([i, j]).items():
                direct[o] = direct[o] + (alpha[i] * alpha[j]).scale(Fraction(1, 2) * sum(r for r, _ in c))
    direct = {k: v for k, v in direct.items() if not v.is_zero()}
    assert linfinity.maurer_cartan_residual(src, tgt, alpha, Wm) == direct


def test_mc_precondition_errors():
    src, tgt = load_fixture("nil4"), load_fixture("sl2")
    ctx = linfinity.ce_context(src)
    with pytest.raises(linfinity.PreconditionError):
        linfinity.maurer_cartan_residual(src, tgt, {"e": GradedPolynomial.const(ctx, 1, W)}, W)
    with pytest.raises(linfinity.PreconditionError):
        linfinity.maurer_cartan_residual(src, tgt, {"zz": GradedPolynomial.gen(ctx, "x1*", W)}, W)


def test_betti_tables():
    assert _nonzero(linfinity.ce_cohomology(load_fixture("sl2"), W)["by_degree"]) == {0: 1, 3: 1}
    assert _nonzero(linfinity.ce_cohomology(load_fixture("abelian_line"), W)["by_degree"]) == {0: 1, 3: 1}
    deg0 = linfinity.CurvedLInfinity([Generator("x", 0)])
    assert _nonzero(linfinity.ce_cohomology(deg0, W)["by_degree"]) == {0: 1, 1: 1}


@pytest.mark.parametrize("seed", range(4))
def test_betti_invariant_under_basis_renaming(seed):
    g = load_fixture("nil4")
    names = [b.name for b in g.basis]
    shuffled = names[:]
    random.Random(seed).shuffle(shuffled)
    rename = dict(zip(names, ["q" + n for n in shuffled]))
    h = linfinity.CurvedLInfinity([Generator(rename[b.name], b.degree) for b in g.basis], name="renamed")
    for n, ins, out, c in g.entries():
        h.add_bracket([rename[x] for x in ins], rename[out], c)
    assert linfinity.ce_cohomology(h, 5)["by_degree"] == linfinity.ce_cohomology(g, 5)["by_degree"]


@pytest.mark.parametrize("name", ["curved", "l3", "sl2", "dbl"])
def test_differential_respects_weight(name):
    g = load_fixture(name)
    ce = linfinity.ce_differential(g, W)
    ctx = ce.ctx
    duals = {linfinity.dual_name(b.name) for b in g.basis}
    for gen in ctx.generators:
        if gen.name not in duals:
            continue
        for k in ce.d(ce.gen(gen.name)).terms:
            wt = ctx.mono_weight(k[0])
            letters = sum(e for i, e in enumerate(k[0]) if ctx.generators[i].name in duals)
            assert wt >= gen.weight
            if letters != 1:
                assert wt > gen.weight


def test_equivalence_evidence_sl2_vs_abelian():
    ev = linfinity.equivalence_evidence(load_fixture("sl2"), load_fixture("abelian_line"), 4)
    assert ev["equivalence_evidence"]


# -- text format ---------------------------------------------------------------


def test_parse_coeff():
    assert parse_coeff("3") == ((Fraction(3), ()),)
    assert parse_coeff("-1/2*eta + 2*eta*zeta") == ((Fraction(-1, 2), ("eta",)), (Fraction(2), ("eta", "zeta")))
    with pytest.raises(LinfSyntaxError):
        parse_coeff("")


@pytest.mark.parametrize("text, line, column", [
    ("[generators]\nx 0\n[nonsense]\n", 3, 1),
    ("x 0\n", 1, 1),
    ("[generators]\nx zero\n", 2, 1),
    ("[generators]\nx 0\n[brackets]\n  2: x -> x 1\n", 4, 3),
    ("[generators]\nx 0\n[brackets]\n2: x x -> x 1/0\n", 4, 13),
])
def test_syntax_errors_carry_position(text, line, column):
    with pytest.raises(LinfSyntaxError) as err:
        parse_linf(text)
    assert (err.value.line, err.value.column) == (line, column)
    assert f"line {line}, column {column}" in str(err.value)


def test_semantic_errors():
    with pytest.raises(LinfSemanticError, match="degree"):
        parse_linf("[generators]\ne 0\nf 0\nh 1\n[brackets]\n2: e f -> h 1\n")
    with pytest.raises(LinfSemanticError):
        parse_linf("[generators]\ne 0\n[brackets]\n2: e e -> q 1\n")
    with pytest.raises(LinfSemanticError):
        parse_linf("[generators]\na 1\nb 1\n[pairing]\na b 1\n")


def test_comments_and_hash_names():
    g = parse_linf("# header\n[generators]\nx# 0  # trailing\n[brackets]\n")
    assert [b.name for b in g.basis] == ["x#"]
