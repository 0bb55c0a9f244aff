from __future__ import annotations

import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hwb import rgflow
from hwb.fixtures import load_fixture
from hwb.geometry import shifted_cotangent
from hwb.graphs import StableGraph, enumerate_stable_graphs

ONE = rgflow.FieldSpace.from_degrees({"x": 0})
MIXED = rgflow.FieldSpace.from_degrees({"a": 0, "b": 0, "p": 1, "q": -1})


def _empty(fields):
    return rgflow.Propagator(fields, {})


def test_tree_and_loop_against_wick_expansion():
    # I = c x^3, P = p on (x, x): first order in P gives p/2 (I')^2 + hbar p/2 I''
    c, p = Fraction(2, 3), Fraction(-5, 2)
    I = ONE.poly(["x"] * 3, c, 6)
    P = rgflow.Propagator(ONE, {("x", "x"): p})
    out = rgflow.rg_flow(P, I, 1, 6)
    assert out.coefficient(["x"] * 4) == p / 2 * 9 * c * c
    assert out.coefficient(["x"], hbar=1) == p / 2 * 6 * c
    # tree level solves dF/dp = F'^2 / 2, whose p^2 term is F'^2 F'' / 2 = 27 c^3 x^5
    assert out.coefficient(["x"] * 5) == 27 * p * p * c ** 3


def test_zero_propagator_is_identity():
    rng = random.Random(1)
    for _ in range(5):
        I = rgflow.random_interaction(MIXED, rng, 5, 2)
        assert rgflow.rg_flow(_empty(MIXED), I, 2, 5) == I
        assert rgflow.rg_flow_algebraic(_empty(MIXED), I, 2, 5) == I


def test_single_vertex_graph_weight_is_the_vertex():
    I = ONE.poly(["x"] * 4, 3, 6)
    g = StableGraph((0,), (), (4,), False)
    P = rgflow.Propagator(ONE, {("x", "x"): 1})
    w = rgflow.graph_weight(g, P, I)
    assert w == I


def test_graph_weight_refuses_labeled_tails():
    g = StableGraph((0,), (), (0, 0, 0), True)
    with pytest.raises(rgflow.ShapeError):
        rgflow.graph_weight(g, rgflow.Propagator(ONE, {}), ONE.poly(["x"] * 3))


@pytest.mark.parametrize("seed", range(6))
def test_edge_order_does_not_matter(seed):
    rng = random.Random(seed)
    P = rgflow.Propagator.random(MIXED, rng)
    I = rgflow.random_interaction(MIXED, rng, 5, 1, terms=10)
    parts = rgflow.decompose(I)
    for g in enumerate_stable_graphs(3, 1, 2, labeled=False):
        if len(g.edges) < 2 or any((g.genera[v], g.valences()[v]) not in parts for v in range(g.n_vertices)):
            continue
        base = rgflow.graph_weight(g, P, I, W=5)
        order = list(range(len(g.edges)))
        rng.shuffle(order)
        assert rgflow.graph_weight(g, P, I, order, W=5) == base


@given(st.integers(0, 10 ** 6))
@settings(max_examples=12, deadline=None)
def test_graph_route_equals_algebraic_route(seed):
    rng = random.Random(seed)
    P = rgflow.Propagator.random(MIXED, rng)
    I = rgflow.random_interaction(MIXED, rng, 5, 2)
    assert rgflow.rg_flow(P, I, 2, 5) == rgflow.rg_flow_algebraic(P, I, 2, 5)


@given(st.integers(0, 10 ** 6))
@settings(max_examples=12, deadline=None)
def test_semigroup(seed):
    rng = random.Random(seed)
    P, Q = rgflow.Propagator.random(MIXED, rng), rgflow.Propagator.random(MIXED, rng)
    I = rgflow.random_interaction(MIXED, rng, 5, 2)
    assert rgflow.rg_flow(P + Q, I, 2, 5) == rgflow.rg_flow(Q, rgflow.rg_flow(P, I, 2, 5), 2, 5)


def test_interaction_shape_is_checked():
    with pytest.raises(rgflow.ShapeError):
        rgflow.rg_flow(_empty(ONE), ONE.poly(["x", "x"]), 1, 4)
    with pytest.raises(rgflow.ShapeError):
        rgflow.rg_flow_algebraic(_empty(ONE), ONE.poly([], 1, 4, hbar=1), 1, 4)


def test_propagator_shape_errors():
    with pytest.raises(rgflow.ShapeError):
        rgflow.Propagator(MIXED, {("a", "p"): 1})
    odd = rgflow.FieldSpace.from_degrees({"p": 1, "q": -1, "r": 0})
    with pytest.raises(rgflow.ShapeError):
        rgflow.Propagator(rgflow.FieldSpace.from_degrees({"p": 0, "s": 1}), {("s", "s"): 1})
    P = rgflow.Propagator(odd, {("q", "p"): 2})
    assert list(P.entries.values()) == [2] and set(next(iter(P.entries))) == {"p", "q"}


# -- quantum master equation along the flow ---------------------------------------------


def _qme_cases(n):
    th, _ = rgflow.toy_theory(6)
    rng = random.Random(0)
    out = []
    while len(out) < n:
        J0 = rgflow.random_interaction(th.fields, rng, 6, 2, terms=4, degree=-1)
        I = rgflow.qme_solution_from_gauge(th, J0, 6)
        P = rgflow.Propagator.random(th.fields, rng)
        if I.is_zero() or not P.entries:
            continue
        out.append((th, I, P))
    return out


@pytest.mark.parametrize("th, I, P", _qme_cases(5))
def test_flow_preserves_master_equation(th, I, P):
    assert rgflow.scale_qme_residual(th, I, 2) == {}
    I2 = rgflow.rg_flow(P, I, 2, 6)
    assert rgflow.scale_qme_residual(th.moved(P), I2, 2) == {}


def test_moved_laplacian_matters():
    th, _ = rgflow.toy_theory(6)
    P = rgflow.Propagator(th.fields, {("phi1", "psi1"): 1})
    rng = random.Random(4)
    for _ in range(20):
        I = rgflow.qme_solution_from_gauge(th, rgflow.random_interaction(th.fields, rng, 6, 2, 4, -1), 6)
        I2 = rgflow.rg_flow(P, I, 2, 6)
        if rgflow.scale_qme_residual(th, I2, 2):
            return
    pytest.fail("flowed solution never failed the unmoved master equation")


def test_random_interaction_is_not_a_solution():
    th, _ = rgflow.toy_theory(6)
    I = th.fields.poly(["phi0", "phi0", "psi1"], 1, 6)
    assert rgflow.scale_qme_residual(th, I) != {}


# -- one-dimensional Chern-Simons -----------------------------------------------------


@pytest.mark.parametrize("name", ["sl2", "l3", "dbl", "nil4"])
def test_cs1d_hamiltonian_is_ce_differential(name):
    cs = rgflow.cs1d_interaction(shifted_cotangent(load_fixture(name), 0), 5)
    assert cs.hamiltonian_mismatches() == []


def test_cs1d_wrong_normalization_is_detected():
    cs = rgflow.cs1d_interaction(shifted_cotangent(load_fixture("sl2"), 0), 5)
    assert not cs.interaction.is_zero()
    cs.interaction = cs.interaction.scale(2)
    assert cs.hamiltonian_mismatches() != []


def test_cs1d_needs_degree_minus_two_pairing():
    with pytest.raises(ValueError):
        rgflow.cs1d_interaction(load_fixture("empty"))
    with pytest.raises(ValueError):
        rgflow.cs1d_interaction(shifted_cotangent(load_fixture("sl2"), -1))


# -- numeric kernels ----------------------------------------------------------------


def test_wheel_targets():
    assert rgflow.wheel_target(1) == Fraction(-1, 12)
    assert rgflow.wheel_target(2) == Fraction(1, 720)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_wheel_sum_errors_shrink(k):
    errs = [abs(rgflow.s1_wheel_mode_sum(k, N) - float(rgflow.wheel_target(k))) for N in (1, 10, 100, 1000)]
    assert all(a >= b for a, b in zip(errs, errs[1:]))
    with pytest.raises(ValueError):
        rgflow.s1_wheel_mode_sum(k, 0)


def test_wheel_sum_at_one_term():
    # a single mode pair gives 2 (-1)^k / (2 pi)^(2k)
    assert rgflow.s1_wheel_mode_sum(1, 1) == pytest.approx(-2 / (2 * math.pi) ** 2, rel=1e-15)


@pytest.mark.parametrize("eps, L", [(0.01, 1.0), (0.1, 10.0), (0.5, 0.7)])
def test_phi4_weight_matches_closed_form(eps, L):
    assert abs(rgflow.heat_weight_phi4(eps, L) - rgflow.heat_weight_closed_form(eps, L)) < 1e-8


def test_phi4_degenerate_and_bad_windows():
    assert rgflow.heat_weight_phi4(1.0, 1.0) == 0.0
    with pytest.raises(ValueError):
        rgflow.heat_weight_phi4(2.0, 1.0)
    with pytest.raises(ValueError):
        rgflow.heat_weight_phi4(0.0, 1.0)
    with pytest.raises(ValueError):
        rgflow.heat_weight_phi4(0.1, 1.0, rule="midpoint")


@pytest.mark.parametrize("rule, order", [("simpson", 4), ("trapezoid", 2)])
def test_richardson_order(rule, order):
    assert abs(rgflow.richardson_order(0.1, 10.0, rule=rule) - order) < 0.2
