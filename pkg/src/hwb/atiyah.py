"""Atiyah class of the trivialization connection, Chern character and the A-hat genus.

A module over g is encoded as a square-zero extension h = g + M: brackets of h with
one M input give the action, brackets with two or more M inputs vanish.  In the CE
algebra of h the dual coordinates mu^a of M satisfy d mu^a = sum_b F^a_b mu^b.  The
trivialization connection differentiates the g-coordinates only, so the Atiyah class
is the derivation mu^a -> sum_b (nabla F^a_b) mu^b.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Dict, List, Optional, Sequence, Tuple

from .graded import (DEFAULT_WEIGHT, Context, DerivationSpec, Generator, GradedPolynomial, commutator_derivation,
                     normalize_monomial)
from .linfinity import CurvedLInfinity, ce_context, ce_differential, dual_name
from .geometry import KahlerComplex, form_name, kahler_differentials, shifted_tangent, tangent_name


class TruncationError(ValueError):
    pass


@dataclass
class Module:
    """g-module presented by the extension algebra and the names of its module basis."""
    g: CurvedLInfinity
    extension: CurvedLInfinity
    names: Tuple[str, ...]


def tangent_module(g: CurvedLInfinity) -> Module:
    """The adjoint module shifted by one, realized inside g[eps]."""
    return Module(g, shifted_tangent(g), tuple(tangent_name(v.name) for v in g.basis))


def module_from_action(g: CurvedLInfinity, basis: Sequence[Generator], action) -> Module:
    """action: {(x_1, ..., x_n, m): {m_out: coeff}} giving l_{n+1}(x_1..x_n, m)."""
    ext = CurvedLInfinity(list(g.basis) + list(basis), None, g.base, name=g.name + "+M")
    for n, inputs, out, c in g.entries():
        ext.table.setdefault(n, {}).setdefault(inputs, {})[out] = c
    names = tuple(b.name for b in basis)
    for inputs, outs in action.items():
        if sum(1 for x in inputs if x in names) != 1:
            raise ValueError(f"action entry {inputs} must have exactly one module input")
        for out, c in outs.items():
            if out not in names:
                raise ValueError(f"action output {out} is not a module element")
            ext.add_bracket(inputs, out, c)
    return Module(g, ext, names)


@dataclass
class ConnectionSpec:
    module: Module
    ctx: Context
    d: DerivationSpec
    nabla: DerivationSpec
    W: int
    flat: bool = True
    g_coords: Tuple[str, ...] = ()
    mu: Tuple[str, ...] = ()

    def gen(self, name):
        return GradedPolynomial.gen(self.ctx, name, self.W)


def trivialization_connection(M: Module, W: int = DEFAULT_WEIGHT) -> ConnectionSpec:
    """f m -> (d_dR f) m on the CE algebra of the extension, forms taken along g only."""
    h = M.extension
    base_ctx = ce_context(h)
    g_coords = tuple(dual_name(v.name) for v in M.g.basis)
    ctx = base_ctx.extend([Generator(form_name(x), base_ctx.gen(x).degree - 1, base_ctx.gen(x).weight) for x in g_coords])
    ce = ce_differential(h, W)
    nabla = DerivationSpec(ctx, -1, {x: GradedPolynomial.gen(ctx, form_name(x), W) for x in g_coords}, W)
    vals = {}
    for gen in base_ctx.generators:
        img = ce.d.on(gen.name).embed(ctx)
        if not img.is_zero():
            vals[gen.name] = img
    for x in g_coords:
        if x in vals:
            vals[form_name(x)] = -nabla(vals[x])
    d = DerivationSpec(ctx, 1, vals, W)
    mu = tuple(dual_name(m) for m in M.names)
    conn = ConnectionSpec(M, ctx, d, nabla, W, True, g_coords, mu)
    conn.flat = all(nabla(nabla(conn.gen(x))).is_zero() for x in (g.name for g in ctx.generators))
    return conn


@dataclass
class AtiyahClass:
    connection: ConnectionSpec
    derivation: DerivationSpec
    matrix: Dict[str, Dict[str, GradedPolynomial]]  # At(mu^a) = sum_b matrix[a][b] mu^b

    @property
    def W(self):
        return self.connection.W

    def closed(self) -> bool:
        c = self.connection
        D = commutator_derivation(c.d, self.derivation)
        return all(D.on(g.name).is_zero() for g in c.ctx.generators)

    def horizontal(self) -> bool:
        c = self.connection
        D = commutator_derivation(c.nabla, self.derivation)
        return all(D.on(g.name).is_zero() for g in c.ctx.generators)


def atiyah_class(M: Module, W: int = DEFAULT_WEIGHT) -> AtiyahClass:
    """At = [nabla, d], computed as a commutator of derivations and read off as a matrix."""
    conn = trivialization_connection(M, W)
    at = commutator_derivation(conn.nabla, conn.d)
    matrix: Dict[str, Dict[str, GradedPolynomial]] = {}
    for a in conn.mu:
        img = at.on(a)
        row = {}
        for b in conn.mu:
            coeff = _strip_right(img, b, conn.ctx)
            if not coeff.is_zero():
                row[b] = coeff
        rest = img
        for b, cf in row.items():
            rest = rest - cf * conn.gen(b)
        if not rest.is_zero():
            raise ValueError(f"Atiyah class is not linear in the module coordinates: {rest}")
        matrix[a] = row
    return AtiyahClass(conn, at, matrix)


def _strip_right(p: GradedPolynomial, name: str, ctx: Context) -> GradedPolynomial:
    """Coefficient q with p = q * name + (terms without name), name written on the right."""
    i = ctx.index[name]
    out = {}
    for (m, h, u, t), c in p.terms.items():
        if m[i] != 1:
            continue
        rest = list(m)
        rest[i] = 0
        s, mono = ctx.mono_mul(tuple(rest), tuple(1 if j == i else 0 for j in range(ctx.n)))
        out[(tuple(rest), h, u, t)] = c * s
    return GradedPolynomial(ctx, out, p.W)


def atiyah_taylor(at: AtiyahClass, n: int) -> Dict[Tuple[str, ...], Dict[str, tuple]]:
    """Recover l_{n+2}(x_1, ..., x_n, x, m) from the Atiyah class.

    Returns {(x_1, ..., x_n, x, m): {m_out: base coefficient}} over canonical g-input tuples,
    with module elements named as in g (the shift by eps removed for tangent modules).
    """
    conn = at.connection
    if n + 2 > conn.W:
        raise TruncationError(f"order {n} needs truncation weight at least {n + 2}")
    M = conn.module
    g = M.g
    h = M.extension
    ctx = conn.ctx
    wdeg = {v.name: v.degree - 1 for v in h.basis}
    g_of = {dual_name(v.name): v.name for v in g.basis}
    form_of = {form_name(dual_name(v.name)): v.name for v in g.basis}
    base_names = {b.name for b in g.base.generators}
    out: Dict[Tuple[str, ...], Dict[str, Dict[Tuple[str, ...], Fraction]]] = {}
    for a_mu, row in at.matrix.items():
        a = a_mu[: -1]
        for b_mu, poly in row.items():
            b = b_mu[: -1]
            for (mono, hb, u, t), c in poly.terms.items():
                names = ctx.mono_names(mono)
                xs = [g_of[x] for x in names if x in g_of]
                fs = [form_of[x] for x in names if x in form_of]
                bs = [x for x in names if x in base_names]
                if len(xs) != n or len(fs) != 1:
                    continue
                # target word: xi^{x_1} .. xi^{x_n} (delta xi^x) base
                word = [dual_name(x) for x in xs] + [form_name(dual_name(fs[0]))] + bs
                s_norm, _ = normalize_monomial(ctx, word)
                coeff = c * s_norm
                mult = 1
                for x in set(xs):
                    mult *= factorial(xs.count(x))
                inputs = xs + [fs[0], b]
                # undo the sign of the forms step and of the CE dualization
                e_forms = sum(1 - g.degree[x] for x in xs)
                sgn_ce = _ce_sign([wdeg[x] for x in inputs])
                dec = h.decalage_sign(inputs)
                # the base coefficient sat to the right of mu^b in the CE differential
                e_base = sum(g.base.context().gen(x).degree for x in bs) * ctx.gen(b_mu).degree
                val = coeff * mult * (-1 if (e_forms + e_base) % 2 else 1) * sgn_ce * dec
                key = tuple(inputs)
                out.setdefault(key, {}).setdefault(a, {})
                out[key][a][tuple(bs)] = out[key][a].get(tuple(bs), 0) + val
    result = {}
    for key, outs in out.items():
        clean = {o: tuple((r, w) for w, r in sorted(cs.items()) if r) for o, cs in outs.items()}
        clean = {o: c for o, c in clean.items() if c}
        if clean:
            result[key] = clean
    return _to_g_names(M, result)


def _ce_sign(wd: Sequence[int]) -> int:
    e = 0
    acc = 0
    for d in wd:
        e += d * (1 + acc)
        acc += d
    return -1 if e % 2 else 1


def _to_g_names(M: Module, table):
    if M.names != tuple(tangent_name(v.name) for v in M.g.basis):
        return table
    strip = {tangent_name(v.name): v.name for v in M.g.basis}
    return {tuple(strip.get(x, x) for x in k): {strip[o]: c for o, c in v.items()} for k, v in table.items()}


def expected_taylor(g: CurvedLInfinity, n: int) -> Dict[Tuple[str, ...], Dict[str, tuple]]:
    """The l_{n+2} table of g on every ordered g-tuple, in the same layout as atiyah_taylor."""
    from itertools import product
    names = [v.name for v in g.basis]
    out = {}
    for tup in product(names, repeat=n + 2):
        if list(tup[:n]) != sorted(tup[:n], key=g.index.__getitem__):
            continue
        vals = g.bracket(list(tup))
        vals = {o: tuple(sorted(c)) for o, c in vals.items() if c}
        if vals:
            out[tup] = vals
    return out


def taylor_matches(at: AtiyahClass, g: CurvedLInfinity, n: int) -> bool:
    got = atiyah_taylor(at, n)
    got = {_sorted_prefix(g, k): {o: tuple(sorted(c)) for o, c in v.items()} for k, v in got.items()}
    return got == expected_taylor(g, n)


def _sorted_prefix(g, key):
    n = len(key) - 2
    pre = sorted(key[:n], key=g.index.__getitem__)
    return tuple(pre) + key[n:]


# ---------------------------------------------------------------------------
# Chern character and A-hat


def _mat_mul(A, B, mu, ctx, W):
    out = {}
    for a in mu:
        row = {}
        for b, x in A.get(a, {}).items():
            for c, y in B.get(b, {}).items():
                row[c] = row.get(c, GradedPolynomial.zero(ctx, W)) + x * y
        out[a] = {c: p for c, p in row.items() if not p.is_zero()}
    return out


def supertrace(A, conn: ConnectionSpec) -> GradedPolynomial:
    out = GradedPolynomial.zero(conn.ctx, conn.W)
    for a in conn.mu:
        entry = A.get(a, {}).get(a)
        if entry is not None:
            out = out + entry.scale(-1 if conn.ctx.gen(a).degree % 2 else 1)
    return out


def atiyah_powers(at: AtiyahClass, kmax: int):
    conn = at.connection
    powers = [None, at.matrix]
    for _ in range(2, kmax + 1):
        powers.append(_mat_mul(powers[-1], at.matrix, conn.mu, conn.ctx, conn.W))
    return powers


def chern_character(M: Module, kmax: int, W: int = DEFAULT_WEIGHT) -> List[GradedPolynomial]:
    """[ch_1, ..., ch_kmax]; ch_k = str(At^k) / (k! (-2 pi i)^k), the (2 pi i) power carried symbolically."""
    at = atiyah_class(M, W)
    powers = atiyah_powers(at, kmax)
    out = []
    for k in range(1, kmax + 1):
        tr = supertrace(powers[k], at.connection)
        out.append(tr.scale(Fraction((-1) ** k, factorial(k))).shift_params(two_pi_i=-k))
    return out


def bernoulli(nmax: int) -> List[Fraction]:
    """B_0..B_nmax with B_1 = -1/2, from sum_{j<m+1} C(m+1, j) B_j = 0."""
    from math import comb
    B = [Fraction(1)]
    for m in range(1, nmax + 1):
        B.append(-sum(comb(m + 1, j) * B[j] for j in range(m)) / (m + 1))
    return B


def ahat_series_coefficients(kmax: int) -> List[Fraction]:
    """c_k = -B_{2k} / (2k), k = 1..kmax."""
    if kmax < 1:
        raise ValueError("kmax must be at least 1")
    B = bernoulli(2 * kmax)
    return [-B[2 * k] / (2 * k) for k in range(1, kmax + 1)]


def ahat_series_oracle(kmax: int) -> List[Fraction]:
    """Same numbers from the power series log(x / (1 - e^{-x})) - x/2, times (2k)!."""
    N = 2 * kmax + 2
    # (1 - e^{-x}) / x = sum_{j>=0} (-1)^j x^j / (j+1)!
    q = [Fraction((-1) ** j, factorial(j + 1)) for j in range(N + 1)]
    # reciprocal series
    r = [Fraction(0)] * (N + 1)
    r[0] = 1 / q[0]
    for i in range(1, N + 1):
        r[i] = -sum(q[j] * r[i - j] for j in range(1, i + 1)) / q[0]
    # log(r) with r[0] = 1 via log' = r'/r
    dr = [(i + 1) * r[i + 1] for i in range(N)]
    inv = [Fraction(0)] * (N + 1)
    inv[0] = Fraction(1)
    for i in range(1, N + 1):
        inv[i] = -sum(r[j] * inv[i - j] for j in range(1, i + 1))
    dlog = [sum(dr[j] * inv[i - j] for j in range(i + 1)) for i in range(N)]
    log = [Fraction(0)] + [dlog[i] / (i + 1) for i in range(N)]
    log[1] -= Fraction(1, 2)
    if any(log[i] for i in range(1, N, 2)):
        raise ArithmeticError("odd coefficients should vanish")
    return [log[2 * k] * factorial(2 * k) for k in range(1, kmax + 1)]


def log_ahat(M: Module, kmax: int, W: int = DEFAULT_WEIGHT, u_weighted: bool = False) -> GradedPolynomial:
    """sum_k c_k str(At^{2k}) / (2k)!; with u_weighted the k-th term carries u^{2k}."""
    at = atiyah_class(M, W)
    powers = atiyah_powers(at, 2 * kmax)
    cs = ahat_series_coefficients(kmax)
    out = GradedPolynomial.zero(at.connection.ctx, W)
    for k in range(1, kmax + 1):
        term = supertrace(powers[2 * k], at.connection).scale(cs[k - 1] / factorial(2 * k))
        if u_weighted:
            term = term.shift_params(u=2 * k)
        out = out + term
    return out


@dataclass
class MixedComplex:
    """Forms on the CE algebra of g with total differential d + u d_dR."""
    forms: KahlerComplex
    log_ahat_u: GradedPolynomial

    def d(self, p: GradedPolynomial) -> GradedPolynomial:
        return self.forms.d(p)

    def u_dR(self, p: GradedPolynomial) -> GradedPolynomial:
        return self.forms.d_dR(p).shift_params(u=1)

    def total(self, p: GradedPolynomial) -> GradedPolynomial:
        return self.d(p) + self.u_dR(p)

    def square_defects(self) -> Dict[str, List[str]]:
        """Generators on which (u d_dR)^2 or the total differential fails to square to zero."""
        gens = [self.forms.gen(x.name) for x in self.forms.ctx.generators]
        names = [x.name for x in self.forms.ctx.generators]
        return {"u_dR": [n for n, p in zip(names, gens) if not self.u_dR(self.u_dR(p)).is_zero()],
                "total": [n for n, p in zip(names, gens) if not self.total(self.total(p)).is_zero()]}


def mixed_complex_u(M: Module, W: int = DEFAULT_WEIGHT, kmax: Optional[int] = None) -> MixedComplex:
    ce = ce_differential(M.g, W)
    K = kahler_differentials(ce.ctx, ce.d, W)
    kmax = kmax if kmax is not None else max(1, W // 4)
    S = log_ahat(M, kmax, W, u_weighted=True)
    return MixedComplex(K, S.embed(K.ctx))
