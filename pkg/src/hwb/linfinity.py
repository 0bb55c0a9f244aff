"""Curved L-infinity algebras over a finite graded base ring.

Brackets l_n are stored on canonically ordered input tuples and are
antisymmetric up to Koszul signs.  Internally everything is moved to the
suspension W = V[1], where the brackets become graded-symmetric maps m_n of
degree one; the Chevalley-Eilenberg differential is read off from the m_n.
The decalage sign is recorded in conventions.toml.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, combinations_with_replacement
from math import factorial
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .graded import (DEFAULT_WEIGHT, Context, DerivationSpec, Generator, GradedPolynomial, koszul_sign,
                     monomial_basis, sign_of)
from .linalg import rank

# A base-ring coefficient: tuple of (rational, word of base generator names)
BaseCoeff = Tuple[Tuple[Fraction, Tuple[str, ...]], ...]

DUAL_SUFFIX = "*"


class StructureError(ValueError):
    """A bracket entry violates degree or ideal constraints."""


class PreconditionError(ValueError):
    pass


def dual_name(v: str) -> str:
    return v + DUAL_SUFFIX


def as_coeff(c) -> BaseCoeff:
    if isinstance(c, tuple) and (not c or isinstance(c[0], tuple)):
        return tuple((Fraction(r), tuple(w)) for r, w in c if r)
    return ((Fraction(c), ()),) if Fraction(c) else ()


@dataclass(frozen=True)
class BaseRing:
    generators: Tuple[Generator, ...] = ()
    ideal: Tuple[str, ...] = ()
    order: int = 2
    differential: Mapping[str, BaseCoeff] = field(default_factory=dict)

    def context(self) -> Context:
        nil = [(self.ideal, self.order)] if self.ideal else []
        return Context(self.generators, nil)

    def coeff_degree(self, c: BaseCoeff) -> Optional[int]:
        ctx = self.context()
        degs = {sum(ctx.gen(n).degree for n in w) for r, w in c}
        if len(degs) > 1:
            raise StructureError(f"inhomogeneous base coefficient {c}")
        return degs.pop() if degs else None

    def in_ideal(self, c: BaseCoeff) -> bool:
        return all(any(n in self.ideal for n in w) for r, w in c)

    def check(self, W: int = DEFAULT_WEIGHT) -> List[str]:
        """Nilpotency and d_A^2 = 0, returned as a list of problems."""
        problems = []
        ctx = self.context()
        if self.ideal:
            for grp in combinations_with_replacement(self.ideal, self.order):
                p = GradedPolynomial.const(ctx, 1, W)
                for n in grp:
                    p = p * GradedPolynomial.gen(ctx, n, W)
                if not p.is_zero():
                    problems.append(f"ideal power {grp} does not vanish")
        D = self.derivation(ctx, W)
        for g in self.generators:
            r = D(D(GradedPolynomial.gen(ctx, g.name, W)))
            if not r.is_zero():
                problems.append(f"d_A^2 {g.name} = {r}")
        return problems

    def derivation(self, ctx: Context, W: int) -> DerivationSpec:
        vals = {n: coeff_poly(ctx, c, W) for n, c in self.differential.items()}
        return DerivationSpec(ctx, 1, vals, W)


def coeff_poly(ctx: Context, c: BaseCoeff, W: int) -> GradedPolynomial:
    out = GradedPolynomial.zero(ctx, W)
    for r, w in c:
        out = out + GradedPolynomial.monomial(ctx, list(w), r, W)
    return out


Table = Dict[int, Dict[Tuple[str, ...], Dict[str, BaseCoeff]]]


class CurvedLInfinity:
    """Free graded module with brackets l_n of degree 2 - n over a base ring."""

    def __init__(self, basis: Iterable[Generator], brackets: Optional[Mapping] = None, base: Optional[BaseRing] = None,
                 pairing: Optional[Mapping[Tuple[str, str], Fraction]] = None, pairing_degree: Optional[int] = None,
                 name: str = "g"):
        self.name = name
        self.base = base or BaseRing()
        self.basis: Tuple[Generator, ...] = tuple(sorted(basis, key=lambda g: (g.degree, g.name)))
        self.index = {g.name: i for i, g in enumerate(self.basis)}
        if len(self.index) != len(self.basis):
            raise StructureError("duplicate basis names")
        clash = set(self.index) & {g.name for g in self.base.generators}
        if clash:
            raise StructureError(f"basis and base ring share names {sorted(clash)}")
        self.degree = {g.name: g.degree for g in self.basis}
        self.table: Table = {}
        for n, entries in (brackets or {}).items():
            for inputs, outs in entries.items():
                for out, c in outs.items():
                    self.add_bracket(inputs, out, c)
        self.pairing: Dict[Tuple[str, str], Fraction] = {}
        self.pairing_degree = pairing_degree
        for (a, b), c in (pairing or {}).items():
            if Fraction(c):
                self.pairing[(a, b)] = Fraction(c)

    # -- bracket table ---------------------------------------------------
    def canonical(self, inputs: Sequence[str]) -> Tuple[int, Tuple[str, ...]]:
        """Sort inputs; sign of l_n under the permutation (sgn times Koszul)."""
        for x in inputs:
            if x not in self.index:
                raise StructureError(f"unknown basis element {x}")
        idx = [self.index[x] for x in inputs]
        order = sorted(range(len(idx)), key=lambda k: (idx[k], k))
        target = [0] * len(idx)
        for new, old in enumerate(order):
            target[old] = new
        srt = tuple(inputs[k] for k in order)
        for a, b in zip(srt, srt[1:]):
            if a == b and self.degree[a] % 2 == 0:
                return 0, srt
        s = koszul_sign(target, [self.degree[x] for x in inputs]) * sign_of(target)
        return s, srt

    def add_bracket(self, inputs: Sequence[str], out: str, coeff) -> None:
        inputs = tuple(inputs)
        n = len(inputs)
        c = as_coeff(coeff)
        if not c:
            return
        if out not in self.index:
            raise StructureError(f"l_{n}{inputs}: unknown output {out}")
        s, srt = self.canonical(inputs)
        if s == 0:
            raise StructureError(f"l_{n}{inputs}: repeated even input forces zero")
        cdeg = self.base.coeff_degree(c) or 0
        expect = sum(self.degree[x] for x in inputs) + 2 - n - cdeg
        if expect != self.degree[out]:
            raise StructureError(f"l_{n}{inputs} -> {out}: degree {expect} but output has degree {self.degree[out]}")
        if n == 0 and not self.base.in_ideal(c):
            raise StructureError(f"curvature component on {out} is not in the nilpotent ideal")
        entry = self.table.setdefault(n, {}).setdefault(srt, {})
        merged = _coeff_add(entry.get(out, ()), tuple((s * r, w) for r, w in c))
        if merged:
            entry[out] = merged
        else:
            entry.pop(out, None)

    def bracket(self, inputs: Sequence[str]) -> Dict[str, BaseCoeff]:
        s, srt = self.canonical(inputs)
        if s == 0:
            return {}
        outs = self.table.get(len(inputs), {}).get(srt, {})
        return {o: tuple((s * r, w) for r, w in c) for o, c in outs.items()}

    def arities(self) -> List[int]:
        return sorted(n for n, e in self.table.items() if any(e.values()))

    def is_base_trivial(self) -> bool:
        return not self.base.generators

    def dim(self) -> int:
        return len(self.basis)

    def copy(self, name=None) -> "CurvedLInfinity":
        g = CurvedLInfinity(self.basis, None, self.base, self.pairing, self.pairing_degree, name or self.name)
        g.table = {n: {k: dict(v) for k, v in e.items()} for n, e in self.table.items()}
        return g

    def entries(self):
        for n in sorted(self.table):
            for inputs in sorted(self.table[n], key=lambda t: [self.index[x] for x in t]):
                for out in sorted(self.table[n][inputs], key=self.index.__getitem__):
                    yield n, inputs, out, self.table[n][inputs][out]

    # -- suspension -------------------------------------------------------
    def decalage_sign(self, inputs: Sequence[str]) -> int:
        n = len(inputs)
        e = sum((n - 1 - i) * self.degree[x] for i, x in enumerate(inputs))
        return -1 if e % 2 else 1

    def m(self, inputs: Sequence[str]) -> Dict[str, BaseCoeff]:
        """Symmetric bracket on W = V[1], in arbitrary input order."""
        s = self.decalage_sign(inputs)
        return {o: tuple((s * r, w) for r, w in c) for o, c in self.bracket(inputs).items()}

    def wdeg(self, x: str) -> int:
        return self.degree[x] - 1

    # -- pairing ------------------------------------------------------------
    def pair(self, a: str, b: str) -> Fraction:
        return self.pairing.get((a, b), Fraction(0))

    def pairing_problems(self) -> List[str]:
        """Degree, nondegeneracy and invariance of the declared pairing."""
        out = []
        if not self.pairing:
            return out
        for (a, b), c in self.pairing.items():
            if self.degree[a] + self.degree[b] + self.pairing_degree != 0:
                out.append(f"<{a},{b}> violates pairing degree {self.pairing_degree}")
        names = [g.name for g in self.basis]
        rows = [{b: self.pair(a, b) for b in names if self.pair(a, b)} for a in names]
        if rank(rows) != len(names):
            out.append("pairing is degenerate")
        for a in names:
            for b in names:
                for c in names:
                    lhs = Fraction(0)
                    for o, co in self.bracket([a, b]).items():
                        lhs += _scalar(co) * self.pair(o, c)
                    sgn = -1 if (self.degree[a] * self.degree[b]) % 2 else 1
                    for o, co in self.bracket([a, c]).items():
                        lhs += sgn * _scalar(co) * self.pair(b, o)
                    if lhs:
                        out.append(f"pairing not invariant on ({a},{b},{c})")
        return out

    def __repr__(self):
        return f"CurvedLInfinity({self.name}, dim={self.dim()}, arities={self.arities()})"


def _scalar(c: BaseCoeff) -> Fraction:
    if any(w for r, w in c):
        raise StructureError("pairing checks need constant coefficients")
    return sum((r for r, w in c), Fraction(0))


def _coeff_add(a: BaseCoeff, b: BaseCoeff) -> BaseCoeff:
    acc: Dict[Tuple[str, ...], Fraction] = {}
    for r, w in list(a) + list(b):
        acc[w] = acc.get(w, 0) + r
    return tuple((r, w) for w, r in sorted(acc.items()) if r)


# ---------------------------------------------------------------------------
# Chevalley-Eilenberg complex


@dataclass
class CEComplex:
    ctx: Context
    d: DerivationSpec
    W: int
    algebra: CurvedLInfinity

    def gen(self, name: str) -> GradedPolynomial:
        return GradedPolynomial.gen(self.ctx, name, self.W)

    def dual(self, v: str) -> GradedPolynomial:
        return self.gen(dual_name(v))


def ce_context(g: CurvedLInfinity) -> Context:
    gens = list(g.base.generators)
    for v in g.basis:
        gens.append(Generator(dual_name(v.name), 1 - v.degree, v.weight))
    nil = [(g.base.ideal, g.base.order)] if g.base.ideal else []
    return Context(gens, nil)


def _input_tuples(g: CurvedLInfinity, n: int):
    names = [b.name for b in g.basis]
    for tup in combinations_with_replacement(names, n):
        if any(a == b and g.wdeg(a) % 2 for a, b in zip(tup, tup[1:])):
            continue
        yield tup


def ce_differential(g: CurvedLInfinity, W: int = DEFAULT_WEIGHT) -> CEComplex:
    """The derivation d = d_A + sum_n d_n dual to the brackets."""
    ctx = ce_context(g)
    values: Dict[str, GradedPolynomial] = {}
    for n in g.arities():
        for inputs, outs in g.table[n].items():
            # inputs canonical for l_n are canonical for m_n as well
            s_dec = g.decalage_sign(inputs)
            mult = 1
            for x in set(inputs):
                mult *= factorial(inputs.count(x))
            e = 0
            acc = 0
            for x in inputs:
                e += g.wdeg(x) * (1 + acc)
                acc += g.wdeg(x)
            s_pos = -1 if e % 2 else 1
            xi = GradedPolynomial.monomial(ctx, [dual_name(x) for x in inputs], 1, W)
            if xi.is_zero():
                continue
            for out, c in outs.items():
                term = (xi * coeff_poly(ctx, c, W)).scale(Fraction(s_dec * s_pos, mult))
                key = dual_name(out)
                values[key] = values.get(key, GradedPolynomial.zero(ctx, W)) + term
    for name, c in g.base.differential.items():
        values[name] = coeff_poly(ctx, c, W)
    return CEComplex(ctx, DerivationSpec(ctx, 1, values, W), W, g)


def verify_linfinity(g: CurvedLInfinity, W: int = DEFAULT_WEIGHT) -> Dict[str, GradedPolynomial]:
    """d o d on every CE generator; empty dict means the relations hold below weight W."""
    ce = ce_differential(g, W)
    out = {}
    for gen in ce.ctx.generators:
        r = ce.d(ce.d(ce.gen(gen.name)))
        if not r.is_zero():
            out[gen.name] = r
    return out


def bracket_relations(g: CurvedLInfinity, max_arity: Optional[int] = None) -> Dict[Tuple[str, ...], Dict[str, BaseCoeff]]:
    """Generalized Jacobi identities evaluated directly on the bracket table.

    For each canonical input tuple x_1..x_n of W = V[1]:
        sum_{i+j=n+1} sum_{unshuffles} eps * m_j(m_i(x_S), x_rest) = 0.
    Only valid for a base ring with zero differential.
    """
    if g.base.differential:
        raise NotImplementedError("direct relation check assumes d_A = 0; use verify_linfinity")
    ar = g.arities()
    if not ar:
        return {}
    top = max(ar)
    if max_arity is None:
        max_arity = 2 * top - 1 if top else 1
    bctx = g.base.context()
    W = 10 ** 6
    failures = {}
    for n in range(0, max_arity + 1):
        for tup in _input_tuples(g, n):
            total: Dict[str, GradedPolynomial] = {}
            wd = [g.wdeg(x) for x in tup]
            for i in range(0, n + 1):
                j = n + 1 - i
                if i not in g.table or j not in g.table:
                    continue
                for S in combinations(range(n), i):
                    rest = [k for k in range(n) if k not in S]
                    perm_order = list(S) + rest
                    target = [0] * n
                    for new, old in enumerate(perm_order):
                        target[old] = new
                    eps = koszul_sign(target, wd)
                    inner = g.m([tup[k] for k in S])
                    for mid, c1 in inner.items():
                        c1p = coeff_poly(bctx, c1, W)
                        cdeg = g.base.coeff_degree(c1) or 0
                        s_move = -1 if cdeg % 2 else 1  # coefficient moves past m_j (degree 1)
                        outer = g.m([mid] + [tup[k] for k in rest])
                        for out, c2 in outer.items():
                            val = (c1p * coeff_poly(bctx, c2, W)).scale(eps * s_move)
                            total[out] = total.get(out, GradedPolynomial.zero(bctx, W)) + val
            bad = {o: _poly_to_coeff(bctx, p) for o, p in total.items() if not p.is_zero()}
            if bad:
                failures[tup] = bad
    return failures


def _poly_to_coeff(ctx: Context, p: GradedPolynomial) -> BaseCoeff:
    return tuple((c, tuple(ctx.mono_names(k[0]))) for k, c in p.items())


def jacobi_residual(g: CurvedLInfinity, x: str, y: str, z: str) -> Dict[str, BaseCoeff]:
    """LHS - RHS of the Jacobi identity up to the homotopy l_3 (arities 1..3 only)."""
    extra = [n for n in g.arities() if n not in (1, 2, 3)]
    if extra:
        raise NotImplementedError(f"brackets of arity {extra} present; use verify_linfinity")
    dg = g.degree
    acc: Dict[str, Fraction] = {}

    def add(vec: Dict[str, Fraction], s: int):
        for k, c in vec.items():
            acc[k] = acc.get(k, 0) + s * c

    def l(*args):
        return {o: _scalar(c) for o, c in g.bracket(list(args)).items()}

    def apply_first(vec, rest):
        out: Dict[str, Fraction] = {}
        for k, c in vec.items():
            for o, c2 in l(k, *rest).items():
                out[o] = out.get(o, 0) + c * c2
        return out

    def apply_mid(a, vec, b):
        out: Dict[str, Fraction] = {}
        for k, c in vec.items():
            for o, c2 in l(a, k, b).items():
                out[o] = out.get(o, 0) + c * c2
        return out

    def apply_last(a, b, vec):
        out: Dict[str, Fraction] = {}
        for k, c in vec.items():
            for o, c2 in l(a, b, k).items():
                out[o] = out.get(o, 0) + c * c2
        return out

    def sgn(e):
        return -1 if e % 2 else 1

    add(apply_first(l(x, y), [z]), sgn(dg[x] * dg[z]))
    add(apply_first(l(z, x), [y]), sgn(dg[y] * dg[z]))
    add(apply_first(l(y, z), [x]), sgn(dg[x] * dg[y]))
    rhs: Dict[str, Fraction] = {}
    s0 = sgn(dg[x] * dg[z] + 1)
    parts = [
        (_l1_of(g, l(x, y, z)), 1),
        (apply_first(l(x), [y, z]), 1),
        (apply_mid(x, l(y), z), sgn(dg[x])),
        (apply_last(x, y, l(z)), sgn(dg[x] + dg[y])),
    ]
    for vec, s in parts:
        for k, c in vec.items():
            rhs[k] = rhs.get(k, 0) + s0 * s * c
    for k, c in rhs.items():
        acc[k] = acc.get(k, 0) - c
    return {k: ((c, ()),) for k, c in acc.items() if c}


def _l1_of(g, vec):
    out: Dict[str, Fraction] = {}
    for k, c in vec.items():
        for o, c2 in g.bracket([k]).items():
            out[o] = out.get(o, 0) + c * _scalar(c2)
    return out


def reduce_mod_ideal(g: CurvedLInfinity) -> CurvedLInfinity:
    """Drop every coefficient term lying in the nilpotent ideal."""
    base = g.base
    keep = tuple(x for x in base.generators if x.name not in base.ideal)
    new_base = BaseRing(keep, (), 2, {n: tuple((r, w) for r, w in c if not any(x in base.ideal for x in w))
                                      for n, c in base.differential.items() if n not in base.ideal})
    red = CurvedLInfinity(g.basis, None, new_base, g.pairing, g.pairing_degree, g.name + "_red")
    for n, inputs, out, c in g.entries():
        cc = tuple((r, w) for r, w in c if not any(x in base.ideal for x in w))
        if cc:
            red.table.setdefault(n, {}).setdefault(inputs, {})[out] = cc
    return red


def l1_squared(g: CurvedLInfinity) -> Dict[str, Dict[str, BaseCoeff]]:
    """l_1 o l_1 on each basis element, with base coefficients multiplied out."""
    bctx = g.base.context()
    W = 10 ** 6
    out = {}
    for v in g.basis:
        acc: Dict[str, GradedPolynomial] = {}
        for mid, c1 in g.bracket([v.name]).items():
            c1p = coeff_poly(bctx, c1, W)
            s = -1 if (g.base.coeff_degree(c1) or 0) % 2 else 1
            for o, c2 in g.bracket([mid]).items():
                acc[o] = acc.get(o, GradedPolynomial.zero(bctx, W)) + (c1p * coeff_poly(bctx, c2, W)).scale(s)
        nz = {o: _poly_to_coeff(bctx, p) for o, p in acc.items() if not p.is_zero()}
        if nz:
            out[v.name] = nz
    return out


# ---------------------------------------------------------------------------
# Maurer-Cartan elements


def maurer_cartan_residual(source: CurvedLInfinity, target: CurvedLInfinity, alpha: Mapping[str, GradedPolynomial],
                           W: int = DEFAULT_WEIGHT) -> Dict[str, GradedPolynomial]:
    """d alpha + sum_n (1/n!) l_n(alpha, ..., alpha) in C*(source) tensor target.

    alpha maps each target basis name to its CE coefficient; alpha has total degree 1.
    """
    ce = ce_differential(source, W)
    ctx = ce.ctx
    ideal = set(source.base.ideal)
    alpha = {k: v for k, v in alpha.items() if not v.is_zero()}
    for c, a in alpha.items():
        if c not in target.index:
            raise PreconditionError(f"alpha has component on unknown target element {c}")
        if a.ctx != ctx:
            raise PreconditionError("alpha must live in the source CE context")
        for k in a.terms:
            if ctx.mono_degree(k[0]) + 2 * k[2] + target.degree[c] != 1:
                raise PreconditionError(f"alpha component on {c} has a term of the wrong degree: {a}")
            names = ctx.mono_names(k[0])
            if not any(n.endswith(DUAL_SUFFIX) or n in ideal for n in names):
                raise PreconditionError(f"alpha component on {c} does not vanish modulo the maximal ideal: {a}")
    res: Dict[str, GradedPolynomial] = {}

    def add(out, p):
        res[out] = res.get(out, GradedPolynomial.zero(ctx, W)) + p

    for c, a in alpha.items():
        add(c, ce.d(a))
    names = sorted(alpha, key=target.index.__getitem__)
    for n in target.arities():
        inv_fact = Fraction(1, factorial(n))
        for combo in _product(names, n):
            coeff = GradedPolynomial.const(ctx, 1, W)
            e = 0
            acc_deg = 0
            for cname in combo:
                a = alpha[cname]
                da = a.degree()
                e += da * (n + acc_deg)
                acc_deg += target.degree[cname]
                coeff = coeff * a
            if coeff.is_zero():
                continue
            s = -1 if e % 2 else 1
            for out, bc in target.bracket(list(combo)).items():
                add(out, (coeff * coeff_poly(ctx, bc, W)).scale(s * inv_fact))
    return {k: v for k, v in res.items() if not v.is_zero()}


def _product(names, n):
    if n == 0:
        yield ()
        return
    for first in names:
        for rest in _product(names, n - 1):
            yield (first,) + rest


# ---------------------------------------------------------------------------
# cohomology


def _matrix_of(D, basis_from, ctx, W, target_index):
    cols = []
    for k in basis_from:
        img = D(GradedPolynomial(ctx, {k: Fraction(1)}, W))
        cols.append({kk: c for kk, c in img.terms.items()})
    return cols


def complex_cohomology(ctx: Context, D, W: int, degrees: Iterable[int], max_hbar: int = 0) -> Dict[int, int]:
    """Betti numbers of the weight-truncated quotient complex, by degree."""
    out = {}
    for deg in degrees:
        here = monomial_basis(ctx, W, deg, max_hbar)
        prev = monomial_basis(ctx, W, deg - 1, max_hbar)
        d_out = [{k: c for k, c in D(GradedPolynomial(ctx, {b: Fraction(1)}, W)).terms.items()} for b in here]
        d_in = [{k: c for k, c in D(GradedPolynomial(ctx, {b: Fraction(1)}, W)).terms.items()} for b in prev]
        out[deg] = len(here) - rank(d_out) - rank(d_in)
    return out


def ce_cohomology(g: CurvedLInfinity, W: int = DEFAULT_WEIGHT, degrees: Optional[Iterable[int]] = None) -> Dict[str, object]:
    """Betti table of the CE complex truncated at weight W.

    Returns {"by_degree": {deg: rank}, "by_degree_weight": {(deg, wt): rank} or None}.
    The refined table is produced when d shifts weight minus degree by zero on every
    generator, which makes the truncated complex split into (degree, weight) blocks.
    """
    ce = ce_differential(g, W)
    ctx = ce.ctx
    all_keys = monomial_basis(ctx, W)
    if degrees is None:
        ds = {ctx.mono_degree(k[0]) for k in all_keys}
        degrees = range(min(ds) if ds else 0, (max(ds) if ds else 0) + 1)
    degrees = list(degrees)
    by_degree = complex_cohomology(ctx, ce.d, W, degrees)
    split = True
    for gen in ctx.generators:
        img = ce.d(ce.gen(gen.name))
        for k in img.terms:
            if ctx.mono_weight(k[0]) - ctx.mono_degree(k[0]) != gen.weight - gen.degree:
                split = False
    refined = None
    if split:
        refined = {}
        for deg in degrees:
            for wt in range(0, W + 1):
                here = [k for k in monomial_basis(ctx, W, deg) if ctx.mono_weight(k[0]) == wt]
                if not here:
                    continue
                prev = [k for k in monomial_basis(ctx, W, deg - 1) if ctx.mono_weight(k[0]) == wt - 1]
                d_out = [dict(ce.d(GradedPolynomial(ctx, {b: Fraction(1)}, W)).terms) for b in here]
                d_in = [dict(ce.d(GradedPolynomial(ctx, {b: Fraction(1)}, W)).terms) for b in prev]
                r = len(here) - rank(d_out) - rank(d_in)
                if r:
                    refined[(deg, wt)] = r
    return {"by_degree": {d: r for d, r in by_degree.items()}, "by_degree_weight": refined}


def reduced_cohomology(g: CurvedLInfinity) -> Dict[int, int]:
    """Cohomology of (V, l_1) for the reduced algebra, by degree."""
    red = reduce_mod_ideal(g)
    degs = sorted({v.degree for v in red.basis})
    out = {}
    for d in degs:
        here = [v.name for v in red.basis if v.degree == d]
        prev = [v.name for v in red.basis if v.degree == d - 1]
        img_out = [{o: _scalar(c) for o, c in red.bracket([x]).items()} for x in here]
        img_in = [{o: _scalar(c) for o, c in red.bracket([x]).items()} for x in prev]
        r = len(here) - rank(img_out) - rank(img_in)
        if r:
            out[d] = r
    return out


def equivalence_evidence(g1: CurvedLInfinity, g2: CurvedLInfinity, W: int = DEFAULT_WEIGHT) -> Dict[str, object]:
    """Compare truncated CE Betti tables of the reduced algebras (quasi-isomorphism evidence only)."""
    b1 = ce_cohomology(reduce_mod_ideal(g1), W)["by_degree"]
    b2 = ce_cohomology(reduce_mod_ideal(g2), W)["by_degree"]
    nz1 = {d: r for d, r in b1.items() if r}
    nz2 = {d: r for d, r in b2.items() if r}
    return {"betti_1": nz1, "betti_2": nz2, "equivalence_evidence": nz1 == nz2}
