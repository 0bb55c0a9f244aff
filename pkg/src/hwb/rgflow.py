"""Renormalization group flow on finite field spaces.

Functionals are polynomials in the coordinate functions of a finite graded field
space, with hbar of weight 2 and every coordinate of weight 1.  An interaction is
at least cubic modulo hbar: every term hbar^i phi^k has 2i + k >= 3.

The flow W(P, I) is computed two ways:
  * as a sum over connected stable graphs, each weighted by hbar^genus / |Aut|;
  * as hbar log(exp(hbar dP) exp(I / hbar)), with dP the second-order operator
    of the propagator.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from itertools import product
from fractions import Fraction
from math import factorial
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from .geometry import eps_pairing, shifted_tangent
from .graded import (Context, DerivationSpec, Generator, GradedPolynomial, SecondOrderOperator, exp_series,
                     log_series, monomial_basis, partial)
from .graphs import StableGraph, enumerate_stable_graphs
from .linfinity import CurvedLInfinity, ce_context, ce_differential, dual_name


class ShapeError(ValueError):
    pass


def _sgn(e: int) -> int:
    return -1 if e % 2 else 1


@dataclass
class FieldSpace:
    """Coordinate functions on a finite graded space of fields."""
    ctx: Context

    @classmethod
    def from_degrees(cls, degrees: Mapping[str, int]) -> "FieldSpace":
        return cls(Context([Generator(n, d) for n, d in degrees.items()]))

    @property
    def names(self) -> List[str]:
        return [g.name for g in self.ctx.generators]

    def degree(self, name: str) -> int:
        return self.ctx.gen(name).degree

    def poly(self, word, coeff=1, W=6, hbar=0) -> GradedPolynomial:
        return GradedPolynomial.monomial(self.ctx, word, coeff, W, hbar)


class Propagator:
    """Symmetric two-tensor of degree 0, stored on ordered pairs a <= b of coordinates.

    The entry c on (a, b) contributes c d_a d_b to dP when a != b and c/2 d_a^2 when
    a == b, so that dP = 1/2 sum_{ij} P_ij d_i d_j for the symmetric matrix P.
    """

    def __init__(self, fields: FieldSpace, entries: Mapping[Tuple[str, str], Fraction], label: str = "abstract"):
        self.fields = fields
        order = {n: i for i, n in enumerate(fields.names)}
        clean = {}
        for (a, b), c in entries.items():
            c = Fraction(c)
            if not c:
                continue
            if order[a] > order[b]:
                a, b = b, a
            if fields.degree(a) + fields.degree(b) != 0:
                raise ShapeError(f"propagator entry ({a},{b}) is not of degree zero")
            if a == b and fields.degree(a) % 2:
                raise ShapeError(f"diagonal entry on odd coordinate {a} vanishes identically")
            clean[(a, b)] = clean.get((a, b), 0) + c
        self.entries = clean
        self.label = label

    def __add__(self, other: "Propagator") -> "Propagator":
        e = dict(self.entries)
        for k, c in other.entries.items():
            e[k] = e.get(k, 0) + c
        return Propagator(self.fields, e)

    def operator(self, W: int) -> SecondOrderOperator:
        pairs = [(c if a != b else c / 2, a, b) for (a, b), c in self.entries.items()]
        return SecondOrderOperator(self.fields.ctx, 0, pairs, None, W)

    def ordered(self) -> List[Tuple[Fraction, str, str]]:
        """(P_ij, i, j) over ordered pairs of the symmetric matrix."""
        out = []
        for (a, b), c in self.entries.items():
            out.append((c, a, b))
            if a != b:
                # d_b d_a = (-1)^{|a||b|} d_a d_b
                out.append((c * _sgn(self.fields.degree(a) * self.fields.degree(b)), b, a))
        return out

    @classmethod
    def random(cls, fields: FieldSpace, rng: random.Random, density: float = 0.7, size: int = 3) -> "Propagator":
        names = fields.names
        entries = {}
        for i, a in enumerate(names):
            for b in names[i:]:
                if fields.degree(a) + fields.degree(b) != 0:
                    continue
                if a == b and fields.degree(a) % 2:
                    continue
                if rng.random() < density:
                    entries[(a, b)] = Fraction(rng.randint(-size, size), rng.randint(1, size))
        return cls(fields, entries)


def check_interaction(I: GradedPolynomial) -> None:
    for (m, h, u, t), c in I.terms.items():
        if 2 * h + sum(m) < 3:
            raise ShapeError("interaction must be at least cubic modulo hbar and have no hbar-constant term")


def decompose(I: GradedPolynomial) -> Dict[Tuple[int, int], GradedPolynomial]:
    """I = sum hbar^i I_{i,k} with I_{i,k} homogeneous of polynomial degree k (hbar stripped)."""
    parts: Dict[Tuple[int, int], Dict] = {}
    for (m, h, u, t), c in I.terms.items():
        parts.setdefault((h, sum(m)), {})[(m, 0, u, t)] = c
    return {k: GradedPolynomial(I.ctx, v, I.W) for k, v in parts.items()}


# ---------------------------------------------------------------------------
# graph expansion


def _copy_context(fields: FieldSpace, V: int) -> Context:
    return Context([Generator(f"{g.name}~{v}", g.degree, g.weight) for v in range(V) for g in fields.ctx.generators])


def graph_weight(graph: StableGraph, P: Propagator, I: GradedPolynomial, edge_order: Optional[Sequence[int]] = None,
                 W: Optional[int] = None) -> GradedPolynomial:
    """Contract the vertex functionals of a graph along its edges, tails left as fields.

    Vertex v carries I_{g(v), val(v)} in its own copy of the coordinates.  Each edge
    applies sum_ij P_ij d_i d_j between the copies at its ends; copies are then
    identified.  The result is the contraction with every tail fed the field,
    divided by the product of tail factorials; no automorphism factor is applied.
    """
    if graph.labeled:
        raise ShapeError("graph weights use unlabeled tails")
    fields = P.fields
    W = W if W is not None else I.W
    parts = decompose(I)
    V = graph.n_vertices
    vals = graph.valences()
    cctx = _copy_context(fields, V)
    big = W * V + 2 * len(graph.edges) + 2
    prod = GradedPolynomial.const(cctx, 1, big)
    for v in range(V):
        piece = parts.get((graph.genera[v], vals[v]))
        if piece is None or piece.is_zero():
            raise ShapeError(f"no vertex of type (genus {graph.genera[v]}, valence {vals[v]}) in the interaction")
        moved = piece.with_weight(big).substitute_names({n: f"{n}~{v}" for n in fields.names}, cctx)
        prod = prod * moved
    edges = list(graph.edges)
    order = edge_order if edge_order is not None else range(len(edges))
    for i in order:
        u, w = edges[i]
        acc = GradedPolynomial.zero(cctx, big)
        for c, a, b in P.ordered():
            da = partial(cctx, f"{a}~{u}", big)
            db = partial(cctx, f"{b}~{w}", big)
            acc = acc + da(db(prod)).scale(c)
        prod = acc
        if prod.is_zero():
            break
    back = {f"{n}~{v}": n for v in range(V) for n in fields.names}
    out = prod.substitute_names(back, fields.ctx).with_weight(big)
    return GradedPolynomial(fields.ctx, out.terms, W)


def flow_graphs(W: int, hbar_max: int) -> List[StableGraph]:
    """Unlabeled-tail stable graphs that can contribute at weight <= W and genus <= hbar_max."""
    out = []
    for G in range(0, hbar_max + 1):
        for T in range(0, W - 2 * G + 1):
            if 2 * G - 2 + T < 1:
                continue
            out += enumerate_stable_graphs(min(6, 2 * G - 2 + T), min(G, 3), T, labeled=False, genus=G)
    return out


def rg_flow(P: Propagator, I: GradedPolynomial, hbar_max: int, W: int) -> GradedPolynomial:
    """W(P, I) = sum over connected stable graphs of hbar^g / |Aut| times the graph weight."""
    check_interaction(I)
    parts = decompose(I)
    total = GradedPolynomial.zero(I.ctx, W)
    for graph in flow_graphs(W, hbar_max):
        vals = graph.valences()
        if any((graph.genera[v], vals[v]) not in parts for v in range(graph.n_vertices)):
            continue
        if graph.edges and not P.entries:
            continue
        w = graph_weight(graph, P, I, W=W)
        factor = Fraction(1, graph.automorphisms())
        for c in graph.tails:
            factor *= factorial(c)
        total = total + w.shift_params(hbar=graph.genus()).scale(factor)
    return _cap_hbar(total, hbar_max)


def _cap_hbar(p: GradedPolynomial, hbar_max: int) -> GradedPolynomial:
    return p.filter(lambda k: k[1] <= hbar_max)


def rg_flow_algebraic(P: Propagator, I: GradedPolynomial, hbar_max: int, W: int) -> GradedPolynomial:
    """hbar log(exp(hbar dP) exp(I / hbar)), every series cut at weight W - 2."""
    check_interaction(I)
    inner = W - 2
    Y = I.shift_params(hbar=-1, laurent=True).with_weight(inner)
    E = exp_series(Y)
    dP = P.operator(inner)
    acc, term, n = E, E, 1
    while True:
        term = dP(term).shift_params(hbar=1, laurent=True).scale(Fraction(1, n))
        if term.is_zero():
            break
        acc = acc + term
        n += 1
    L = log_series(acc - GradedPolynomial.const(I.ctx, 1, inner))
    out = L.with_weight(W).shift_params(hbar=1, laurent=True)
    return _cap_hbar(GradedPolynomial(I.ctx, out.terms, W), hbar_max)


def random_interaction(fields: FieldSpace, rng: random.Random, W: int, hbar_max: int, terms: int = 6,
                       degree: int = 0, size: int = 3) -> GradedPolynomial:
    """Random rational interaction of the given total degree."""
    keys = [k for k in monomial_basis(fields.ctx, W, degree, max_hbar=hbar_max)
            if 2 * k[1] + sum(k[0]) >= 3]
    out = GradedPolynomial.zero(fields.ctx, W)
    for k in rng.sample(keys, min(terms, len(keys))):
        out = out + GradedPolynomial(fields.ctx, {k: Fraction(rng.randint(-size, size), rng.randint(1, size))}, W)
    return out


# ---------------------------------------------------------------------------
# quantum master equation at a scale


@dataclass
class FreeTheory:
    """Differential Q on functionals and a scale Laplacian."""
    fields: FieldSpace
    Q: DerivationSpec
    laplacian: Callable[[GradedPolynomial], GradedPolynomial]

    def bracket(self, a: GradedPolynomial, b: GradedPolynomial) -> GradedPolynomial:
        da = a.degree() if not a.is_zero() else 0
        return self.laplacian(a * b) - self.laplacian(a) * b - (a * self.laplacian(b)).scale(_sgn(da))

    def moved(self, P: Propagator) -> "FreeTheory":
        """Laplacian at the other end of P: delta + [dP, Q]."""
        dP = P.operator(self.Q.W)
        lap, Q = self.laplacian, self.Q
        return FreeTheory(self.fields, Q, lambda f: lap(f) + dP(Q(f)) - Q(dP(f)))


def scale_qme_residual(theory: FreeTheory, I: GradedPolynomial, hbar_max: Optional[int] = None
                       ) -> Dict[int, GradedPolynomial]:
    """Nonzero hbar-orders of QI + hbar delta I + 1/2 {I, I}, exact up to the weight of I."""
    W = I.W
    J = I.with_weight(W + 2)
    total = theory.Q(J) + theory.laplacian(J).shift_params(hbar=1) + theory.bracket(J, J).scale(Fraction(1, 2))
    total = total.with_weight(W)
    out: Dict[int, Dict] = {}
    for k, c in total.terms.items():
        if hbar_max is None or k[1] <= hbar_max:
            out.setdefault(k[1], {})[k] = c
    return {h: GradedPolynomial(I.ctx, t, W) for h, t in sorted(out.items())}


def toy_theory(W: int) -> Tuple[FreeTheory, Dict[str, int]]:
    """Fields phi0, phi1, psi1, psi2 in degrees 0, 1, -1, -2 with Q phi0 = phi1, Q psi2 = psi1."""
    degrees = {"phi0": 0, "phi1": 1, "psi1": -1, "psi2": -2}
    fields = FieldSpace.from_degrees(degrees)
    ctx = fields.ctx
    Q = DerivationSpec(ctx, 1, {"phi0": GradedPolynomial.gen(ctx, "phi1", W + 2),
                                "psi2": GradedPolynomial.gen(ctx, "psi1", W + 2, -1)}, W + 2)
    lap = SecondOrderOperator(ctx, 1, [(1, "phi0", "psi1"), (1, "phi1", "psi2")], None, W + 2)
    return FreeTheory(fields, Q, lap), degrees


def qme_solution_from_gauge(theory: FreeTheory, J0: GradedPolynomial, W: int) -> GradedPolynomial:
    """I with exp(I/hbar) = 1 + (Q + hbar delta)(J0/hbar): a solution obtained from zero."""
    X = theory.Q(J0).shift_params(hbar=-1, laurent=True) + theory.laplacian(J0)
    X = X.with_weight(W - 2)
    return GradedPolynomial(J0.ctx, log_series(X).with_weight(W).shift_params(hbar=1).terms, W)


# ---------------------------------------------------------------------------
# one-dimensional Chern-Simons


@dataclass
class ChernSimons1d:
    """Action on the harmonic model C[eps] (x) L of a pairing algebra L."""
    algebra: CurvedLInfinity
    harmonic: CurvedLInfinity
    ctx: Context
    free: GradedPolynomial
    interaction: GradedPolynomial
    W: int

    def pair(self, a: str, b: str) -> Fraction:
        return eps_pairing(self.algebra, a, b)

    @property
    def action(self) -> GradedPolynomial:
        return self.free + self.interaction

    def hamiltonian_mismatches(self) -> List[str]:
        """Coordinates where the CE differential differs from -<a,c> d/dxi^a of the action."""
        ce = ce_differential(self.harmonic, self.W)
        S = self.action
        names = [b.name for b in self.harmonic.basis]
        bad = []
        for c in names:
            partners = [a for a in names if self.pair(a, c)]
            if len(partners) != 1:
                bad.append(c)
                continue
            a = partners[0]
            lhs = ce.d(GradedPolynomial.gen(self.ctx, dual_name(c), self.W))
            if lhs != partial(self.ctx, dual_name(a), self.W)(S).scale(-self.pair(a, c)):
                bad.append(c)
        return bad


def cs1d_interaction(g: CurvedLInfinity, W: int = 6) -> ChernSimons1d:
    """Split sum_n s_n/(n+1)! <phi, l_n(phi, ..., phi)> into its n = 1 and n != 1 parts.

    g carries a pairing of degree -2; fields live in the harmonic model with the
    eps-linear pairing.  phi = sum_a xi^a e_a has degree 1 and the arity sign
    s_n = -(-1)^{n(n-1)/2} is the decalage sign of a degree-one element, fixed so
    that the Hamiltonian vector field of the action is the CE differential.
    """
    if not g.pairing or g.pairing_degree != -2:
        raise ValueError("cs1d_interaction needs a pairing of degree -2")
    if g.pairing_problems():
        raise ValueError("pairing is degenerate or not invariant: " + "; ".join(g.pairing_problems()))
    harmonic = shifted_tangent(g)
    ctx = ce_context(harmonic)
    deg = {b.name: b.degree for b in harmonic.basis}
    names = [b.name for b in harmonic.basis]
    xi = {n: 1 - deg[n] for n in names}
    partner = {b: [a for a in names if eps_pairing(g, a, b)] for b in names}
    free = GradedPolynomial.zero(ctx, W)
    inter = GradedPolynomial.zero(ctx, W)
    for n in harmonic.arities():
        lam = 2 - n
        arity_sign = -_sgn(n * (n - 1) // 2)
        for ins in product(names, repeat=n):
            outs = harmonic.bracket(list(ins))
            if not outs:
                continue
            # xi^{b1} e_{b1} ... xi^{bn} e_{bn} -> xi^{b1} .. xi^{bn} e_{b1} .. e_{bn}
            s, moved = 1, 0
            for b in ins:
                s *= _sgn(xi[b] * moved)
                moved += deg[b]
            xs = sum(xi[b] for b in ins)
            s *= _sgn(lam * xs)
            for out, c in outs.items():
                coef = sum((r for r, w in c), Fraction(0))
                for a in partner[out]:
                    # <xi^a e_a, X e_out> = xi^a X (-1)^{|e_a||X|} <e_a, e_out>
                    value = s * arity_sign * _sgn(deg[a] * xs) * coef * eps_pairing(g, a, out) / factorial(n + 1)
                    term = GradedPolynomial.monomial(ctx, [dual_name(a)] + [dual_name(b) for b in ins], value, W)
                    if n == 1:
                        free = free + term
                    else:
                        inter = inter + term
    return ChernSimons1d(g, harmonic, ctx, free, inter, W)


# ---------------------------------------------------------------------------
# numeric kernels


def s1_wheel_mode_sum(k: int, N: int) -> float:
    """sum over 0 < |n| <= N of (2 pi i n)^(-2k), summed for n = 1..N in ascending order."""
    if k < 1 or N < 1:
        raise ValueError("k and N must be positive")
    base = 2 * (-1) ** k / (2 * math.pi) ** (2 * k)
    total = 0.0
    for n in range(1, N + 1):
        total += 1.0 / n ** (2 * k)
    return base * total


def wheel_target(k: int) -> Fraction:
    """-B_2k / (2k)!, the limit of the mode sum."""
    from .atiyah import bernoulli
    return -bernoulli(2 * k)[2 * k] / factorial(2 * k)


def convergence_table(k: int, Ns: Sequence[int]) -> List[Tuple[int, float, float, float]]:
    target = float(wheel_target(k))
    return [(N, s, target, abs(s - target)) for N in Ns for s in [s1_wheel_mode_sum(k, N)]]


def heat_weight_phi4(eps: float, L: float, steps: int = 400, rule: str = "simpson") -> float:
    """integral from eps to L of (4 pi t)^(-2) dt, in the variable s = log t."""
    if eps > L or eps <= 0:
        raise ValueError("need 0 < eps <= L")
    if eps == L:
        return 0.0
    a, b = math.log(eps), math.log(L)

    def f(s):
        return math.exp(-s) / (16 * math.pi ** 2)

    if rule == "trapezoid":
        h = (b - a) / steps
        return h * (0.5 * f(a) + sum(f(a + i * h) for i in range(1, steps)) + 0.5 * f(b))
    if rule != "simpson":
        raise ValueError("rule is 'simpson' or 'trapezoid'")
    n = steps + steps % 2
    h = (b - a) / n
    acc = f(a) + f(b)
    for i in range(1, n):
        acc += (4 if i % 2 else 2) * f(a + i * h)
    return acc * h / 3


def heat_weight_closed_form(eps: float, L: float) -> float:
    return (1 / eps - 1 / L) / (16 * math.pi ** 2)


def richardson_order(eps: float, L: float, steps: int = 50, rule: str = "simpson") -> float:
    """Observed convergence order from three step sizes, without using the closed form."""
    a, b, c = (heat_weight_phi4(eps, L, steps * m, rule) for m in (1, 2, 4))
    return math.log2(abs(a - b) / abs(b - c))
