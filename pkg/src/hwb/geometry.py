"""Shifted tangent and cotangent models, loop space, P0 bracket, Kahler forms, critical loci."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .graded import (DEFAULT_WEIGHT, Context, DerivationSpec, Generator, GradedPolynomial, monomial_basis,
                     partial)
from .linfinity import (DUAL_SUFFIX, CurvedLInfinity, _scalar, ce_differential, complex_cohomology,
                        dual_name, reduced_cohomology, verify_linfinity)

TANGENT_SUFFIX = "_e"
LOOP_PREFIX = "dt_"
COTANGENT_SUFFIX = "#"


class GeometryError(ValueError):
    pass


def tangent_name(v: str) -> str:
    return v + TANGENT_SUFFIX


def cotangent_name(v: str) -> str:
    return v + COTANGENT_SUFFIX


def _sgn(e: int) -> int:
    return -1 if e % 2 else 1


def _store(alg: CurvedLInfinity, inputs: Sequence[str], outs: Mapping[str, tuple]) -> None:
    """Write values given on an arbitrary input order into the canonical table slot."""
    s, srt = alg.canonical(inputs)
    if s == 0:
        return
    slot = alg.table.setdefault(len(srt), {}).setdefault(srt, {})
    for o, c in outs.items():
        if c:
            slot[o] = tuple((s * r, w) for r, w in c)


def shifted_tangent(g: CurvedLInfinity) -> CurvedLInfinity:
    """g[eps] with eps odd of degree 1, eps^2 = 0; the copy eps*v is named v_e."""
    basis = list(g.basis) + [Generator(tangent_name(v.name), v.degree + 1, v.weight) for v in g.basis]
    t = CurvedLInfinity(basis, None, g.base, name=g.name + "[eps]")
    for n, inputs, out, c in g.entries():
        t.table.setdefault(n, {}).setdefault(inputs, {})[out] = c
    done = set()
    for n, entries in g.table.items():
        for inputs in entries:
            for i in range(n):
                new = list(inputs)
                new[i] = tangent_name(inputs[i])
                s, srt = t.canonical(new)
                if srt in done:
                    continue
                done.add(srt)
                # eps sits to the right of everything: it moves past later inputs
                sign = _sgn(sum(g.degree[x] for x in inputs[i + 1:]))
                vals = {tangent_name(o): tuple((sign * r, w) for r, w in cc) for o, cc in g.bracket(list(inputs)).items()}
                _store(t, new, vals)
    return t


def loop_space(g: CurvedLInfinity) -> Tuple[CurvedLInfinity, Dict[str, object]]:
    """Harmonic model g tensor C[dt] of the derived loop space, with the identification to g[eps].

    Here dt multiplies from the left; the basis element dt*v is named dt_v.
    """
    red = reduced_cohomology(g)
    bad = sorted(d for d in red if d < 1)
    if bad:
        raise GeometryError(f"reduced cohomology present in degrees {bad}; need degrees >= 1")
    basis = list(g.basis) + [Generator(LOOP_PREFIX + v.name, v.degree + 1, v.weight) for v in g.basis]
    loop = CurvedLInfinity(basis, None, g.base, name="L" + g.name)
    for n, inputs, out, c in g.entries():
        loop.table.setdefault(n, {}).setdefault(inputs, {})[out] = c
    bctx = g.base.context()
    for n, entries in g.table.items():
        for inputs in entries:
            for i in range(n):
                new = list(inputs)
                new[i] = LOOP_PREFIX + inputs[i]
                # dt moves left past l_n (parity n) and the earlier inputs, then past the base coefficient
                sign = _sgn(n + sum(g.degree[x] for x in inputs[:i]))
                vals = {}
                for o, cc in g.bracket(list(inputs)).items():
                    vals[LOOP_PREFIX + o] = tuple((sign * _sgn(sum(bctx.gen(b).degree for b in w)) * r, w) for r, w in cc)
                _store(loop, new, vals)
    ident = {v.name: (1, v.name) for v in g.basis}
    ident.update({LOOP_PREFIX + v.name: (_sgn(v.degree), tangent_name(v.name)) for v in g.basis})
    tangent = shifted_tangent(g)
    cert = {
        "map": ident,
        "tables_match": tables_match(loop, tangent, ident),
        "loop_residual": bool(verify_small(loop)),
        "tangent_residual": bool(verify_small(tangent)),
    }
    return loop, cert


def verify_small(g: CurvedLInfinity, W: int = 4):
    return verify_linfinity(g, W)


def transport(g: CurvedLInfinity, mapping: Mapping[str, Tuple[int, str]]) -> Dict[Tuple[int, Tuple[str, ...]], Dict[str, tuple]]:
    """Bracket table of g pushed through a signed basis bijection x -> s_x * phi(x)."""
    out = {}
    for n, inputs, o, c in g.entries():
        s = 1
        new = []
        for x in inputs:
            sx, nx = mapping[x]
            s *= sx
            new.append(nx)
        so, no = mapping[o]
        out.setdefault((n, tuple(new)), {})[no] = tuple((s * so * r, w) for r, w in c)
    return out


def tables_match(g1: CurvedLInfinity, g2: CurvedLInfinity, mapping: Mapping[str, Tuple[int, str]]) -> bool:
    """True when the signed bijection carries every bracket of g1 onto g2 and nothing is left over."""
    moved = transport(g1, mapping)
    seen = set()
    for (n, inputs), outs in moved.items():
        s, srt = g2.canonical(inputs)
        target = g2.table.get(n, {}).get(srt, {})
        got = {o: tuple((s * r, w) for r, w in c) for o, c in target.items()}
        if _normalize(got) != _normalize(outs):
            return False
        seen.add((n, srt))
    for n, entries in g2.table.items():
        for inputs, outs in entries.items():
            if outs and (n, inputs) not in seen:
                return False
    return True


def _normalize(d):
    return {o: tuple(sorted(c)) for o, c in d.items() if c}


def shifted_cotangent(g: CurvedLInfinity, shift: int = 0) -> CurvedLInfinity:
    """g plus its dual with the coadjoint brackets; pairing of degree shift - 2.

    The dual of v is named v#, sitting in degree 2 - shift - |v|.  The pairing is
    <v#, v> = 1 and <v, v#> = (-1)^{|v||v#|}, i.e. graded symmetric.
    """
    if shift not in (0, -1):
        raise GeometryError("shift must be 0 or -1")
    if not g.is_base_trivial():
        raise GeometryError("cotangent models are built over a point base")
    top = 2 - shift
    duals = [Generator(cotangent_name(v.name), top - v.degree, v.weight) for v in g.basis]
    dual_deg = {cotangent_name(v.name): top - v.degree for v in g.basis}
    sigma = {v.name: _sgn(v.degree * dual_deg[cotangent_name(v.name)]) for v in g.basis}
    pairing = {}
    for v in g.basis:
        pairing[(cotangent_name(v.name), v.name)] = Fraction(1)
        pairing[(v.name, cotangent_name(v.name))] = Fraction(sigma[v.name])
    t = CurvedLInfinity(list(g.basis) + duals, None, g.base, pairing, shift - 2, name=f"T*[{shift}]{g.name}")
    for n, inputs, out, c in g.entries():
        t.table.setdefault(n, {}).setdefault(inputs, {})[out] = c
    names = [v.name for v in g.basis]
    # l_n(a_1..a_{n-1}, v#) = sum_w c_w w#, from <b, A lam> = -(-1)^{|A||b|} <A b, lam>
    for n in g.arities():
        if n == 0:
            continue
        seen = set()
        for inputs in g.table[n]:
            for i in range(n):
                rest = inputs[:i] + inputs[i + 1:]
                if rest in seen:
                    continue
                seen.add(rest)
                degA = sum(g.degree[a] for a in rest) + 2 - n
                for v in names:
                    vals: Dict[str, Fraction] = {}
                    for w in names:
                        coeff_v = Fraction(0)
                        for o, c in g.bracket(list(rest) + [w]).items():
                            if o == v:
                                coeff_v += _scalar(c)
                        if coeff_v:
                            vals[cotangent_name(w)] = -_sgn(degA * g.degree[w]) * coeff_v * sigma[v] / sigma[w]
                    if vals:
                        _store(t, list(rest) + [cotangent_name(v)], {k: ((x, ()),) for k, x in vals.items()})
    return t


# ---------------------------------------------------------------------------
# P0 structure on functions of T*[-1]


def cotangent_pairs(ctx: Context) -> List[Tuple[str, str]]:
    """Canonical coordinate pairs (x, x_dual) of a CE context of a shifted cotangent model."""
    pairs = []
    names = {g.name for g in ctx.generators}
    for g in ctx.generators:
        n = g.name
        if not n.endswith(DUAL_SUFFIX):
            continue
        v = n[: -len(DUAL_SUFFIX)]
        if v.endswith(COTANGENT_SUFFIX):
            if dual_name(v[: -len(COTANGENT_SUFFIX)]) not in names:
                raise GeometryError(f"{n} has no partner coordinate")
            continue
        partner = dual_name(cotangent_name(v))
        if partner not in names:
            raise GeometryError(f"context is not a shifted cotangent: {n} has no partner")
        pairs.append((n, partner))
    if not pairs:
        raise GeometryError("context has no cotangent coordinate pairs")
    for x, y in pairs:
        if ctx.gen(x).degree + ctx.gen(y).degree != -1:
            raise GeometryError(f"pair ({x},{y}) does not have total degree -1")
    return pairs


def p0_bracket(a: GradedPolynomial, b: GradedPolynomial) -> GradedPolynomial:
    """Degree +1 Poisson bracket with {x, x_dual} = 1, written as a biderivation."""
    ctx = a.ctx
    W = min(a.W, b.W)
    out = GradedPolynomial.zero(ctx, W)
    parts_a = a.homogeneous_parts()
    for x, xd in cotangent_pairs(ctx):
        d1, d2 = partial(ctx, x, W), partial(ctx, xd, W)
        e1, e2 = d1.degree, d2.degree
        for da, pa in parts_a.items():
            out = out + (d2(pa) * d1(b)).scale(_sgn(e1 * (da + e2)))
            out = out + (d1(pa) * d2(b)).scale(_sgn(e2 * da))
    return out


# ---------------------------------------------------------------------------
# T*[-1]T[-1] versus T[-1]T*


def cotangent_swap(g: CurvedLInfinity) -> Dict[str, object]:
    """Signed basis bijection T*[-1](g[eps]) -> (T* g)[eps] and its checks."""
    left = shifted_cotangent(shifted_tangent(g), -1)
    flat = shifted_cotangent(g, 0)
    right = shifted_tangent(flat)
    mapping = {}
    for v in g.basis:
        x = v.name
        mapping[x] = (1, x)
        mapping[tangent_name(x)] = (1, tangent_name(x))
        # the dual of eps*v lands on the plain dual; the dual of v picks up eps
        mapping[cotangent_name(tangent_name(x))] = (1, cotangent_name(x))
        mapping[cotangent_name(x)] = (_sgn(v.degree), tangent_name(cotangent_name(x)))
    left_degrees = sorted(b.degree for b in left.basis)
    right_degrees = sorted(b.degree for b in right.basis)
    degree_ok = all(left.degree[a] == right.degree[mapping[a][1]] for a in mapping)
    pairing_ok = pairing_matches(left, flat, mapping)
    return {
        "left": left,
        "right": right,
        "map": mapping,
        "degrees_match": degree_ok and left_degrees == right_degrees,
        "tables_match": tables_match(left, right, mapping),
        "pairing_match": pairing_ok,
        "left_pairing_degree": left.pairing_degree,
    }


def eps_pairing(flat: CurvedLInfinity, a: str, b: str) -> Fraction:
    """Degree -2 pairing of the flat cotangent model extended eps-linearly, then eps sent to 1."""
    base_pair = flat.pairing

    def strip(x):
        return (x[: -len(TANGENT_SUFFIX)], 1) if x.endswith(TANGENT_SUFFIX) else (x, 0)

    xa, ea = strip(a)
    xb, eb = strip(b)
    if ea + eb != 1:
        return Fraction(0)
    c = base_pair.get((xa, xb), Fraction(0))
    if not c:
        return c
    # <x eps, y> = (-1)^{|y|} <x, y> eps : eps travels right past y
    if ea:
        c *= _sgn(flat.degree[xb])
    return c


def pairing_matches(left: CurvedLInfinity, flat: CurvedLInfinity, mapping) -> bool:
    """Compare the left degree -3 pairing with the eps-linear pairing, up to one global sign."""
    ratios = set()
    names = [b.name for b in left.basis]
    for a in names:
        for b in names:
            lv = left.pair(a, b)
            sa, na = mapping[a]
            sb, nb = mapping[b]
            rv = sa * sb * eps_pairing(flat, na, nb)
            if (lv == 0) != (rv == 0):
                return False
            if lv:
                ratios.add(rv / lv)
    return len(ratios) <= 1


def ce_intertwines(g1: CurvedLInfinity, g2: CurvedLInfinity, mapping, W: int = 4) -> bool:
    """swap o d = d o swap on every CE generator, for the signed bijection of module bases."""
    c1 = ce_differential(g1, W)
    c2 = ce_differential(g2, W)
    # the dual coordinate of s*y is s times the dual of y
    rename = {dual_name(a): dual_name(b) for a, (s, b) in mapping.items()}
    signs = {dual_name(a): s for a, (s, b) in mapping.items()}

    def push(p: GradedPolynomial) -> GradedPolynomial:
        acc = GradedPolynomial.zero(c2.ctx, W)
        for (m, h, u, t), c in p.terms.items():
            word = c1.ctx.mono_names(m)
            s = 1
            for x in word:
                s *= signs.get(x, 1)
            acc = acc + GradedPolynomial.monomial(c2.ctx, [rename.get(x, x) for x in word], s * c, W, h, u, t)
        return acc

    for gen in c1.ctx.generators:
        x = c1.gen(gen.name)
        if push(c1.d(x)) != c2.d(push(x)):
            return False
    return True


# ---------------------------------------------------------------------------
# Kahler differentials


@dataclass
class KahlerComplex:
    ctx: Context
    d: DerivationSpec
    d_dR: DerivationSpec
    W: int
    forms: Dict[str, str]

    def gen(self, name: str) -> GradedPolynomial:
        return GradedPolynomial.gen(self.ctx, name, self.W)


def form_name(x: str) -> str:
    return "δ" + x


def kahler_differentials(ctx: Context, d: Optional[DerivationSpec] = None, W: int = DEFAULT_WEIGHT) -> KahlerComplex:
    """Forms on a truncated polynomial cdga; the form of x sits in degree |x| - 1."""
    forms = {g.name: form_name(g.name) for g in ctx.generators}
    new = ctx.extend([Generator(forms[g.name], g.degree - 1, g.weight) for g in ctx.generators])
    dR_vals = {g.name: GradedPolynomial.gen(new, forms[g.name], W) for g in ctx.generators}
    d_dR = DerivationSpec(new, -1, dR_vals, W)
    vals = {}
    if d is not None:
        for g in ctx.generators:
            img = d.on(g.name).embed(new)
            if img.is_zero():
                continue
            vals[g.name] = img
            vals[forms[g.name]] = -d_dR(img)
    return KahlerComplex(new, DerivationSpec(new, 1, vals, W), d_dR, W, forms)


def derivation_dimensions(ctx: Context, degree: int, W: int) -> Tuple[int, int]:
    """(dim Der of the given degree, dim Hom(Omega^1, R) of that degree) on the weight-W window.

    A derivation is kept when its values stay in weight <= W - w(x) + 1, i.e. it lowers weight
    by at most w(x) - 1 on each generator.  Der is measured as actual operators on the
    truncated algebra; Hom is counted from free generators.
    """
    from .linalg import rank
    basis_all = monomial_basis(ctx, W)
    ops = []
    hom = 0
    for g in ctx.generators:
        cap = W - g.weight + 1
        targets = [k for k in monomial_basis(ctx, cap, g.degree + degree)]
        hom += len(targets)
        for k in targets:
            D = DerivationSpec(ctx, degree, {g.name: GradedPolynomial(ctx, {k: Fraction(1)}, W + 2)}, W + 2)
            vec = {}
            for b in basis_all:
                img = D(GradedPolynomial(ctx, {b: Fraction(1)}, W + 2))
                for kk, c in img.terms.items():
                    vec[(b, kk)] = c
            ops.append(vec)
    return rank(ops), hom


# ---------------------------------------------------------------------------
# derived critical locus


def _poly_degree(f: GradedPolynomial) -> Optional[int]:
    degs = {sum(k[0]) for k in f.terms}
    return degs.pop() if len(degs) == 1 else None


def derived_critical_locus(f: GradedPolynomial, W: int = 4) -> Dict[str, object]:
    """Cohomology of (polyvectors, contraction with df) and of the intersection model.

    f lives in a context of even degree-0 coordinates.  Polyvector generators xi_i have
    degree -1 and d xi_i = -df/dx_i.  The second model resolves both the graph of df and
    the zero section in T* by Koszul complexes: d theta_i = p_i, d sigma_i = p_i - df/dx_i.
    """
    xs = [g.name for g in f.ctx.generators]
    for g in f.ctx.generators:
        if g.degree != 0:
            raise GeometryError("critical locus coordinates must have degree 0")
    if f.coefficient(()) != 0:
        raise GeometryError("f must have zero constant term")
    k = _poly_degree(f)
    fiber = k - 1 if k and k >= 2 else 1
    direct_ctx = Context([Generator(x, 0, 1) for x in xs] + [Generator("xi_" + x, -1, fiber) for x in xs])
    big_W = 10 * (W + 2)
    grads = {x: partial(f.ctx, x, big_W)(f.with_weight(big_W) if f.W < big_W else f) for x in xs}
    D1 = DerivationSpec(direct_ctx, 1, {"xi_" + x: -_embed_by_name(grads[x], direct_ctx, W) for x in xs}, W)
    degrees = range(-len(xs), 1)
    direct = complex_cohomology(direct_ctx, D1, W, degrees)
    big = Context([Generator(x, 0, 1) for x in xs] + [Generator("p_" + x, 0, fiber) for x in xs]
                  + [Generator("theta_" + x, -1, fiber) for x in xs] + [Generator("sigma_" + x, -1, fiber) for x in xs])
    vals = {}
    for x in xs:
        p = GradedPolynomial.gen(big, "p_" + x, W)
        vals["theta_" + x] = p
        vals["sigma_" + x] = p - _embed_by_name(grads[x], big, W)
    D2 = DerivationSpec(big, 1, vals, W)
    koszul = complex_cohomology(big, D2, W, range(-2 * len(xs), 1))
    return {"direct": {d: r for d, r in direct.items() if r},
            "intersection": {d: r for d, r in koszul.items() if r},
            "homogeneous": k is not None}


def _embed_by_name(p: GradedPolynomial, ctx: Context, W: int) -> GradedPolynomial:
    acc = GradedPolynomial.zero(ctx, W)
    for (m, h, u, t), c in p.terms.items():
        acc = acc + GradedPolynomial.monomial(ctx, p.ctx.mono_names(m), c, W, h, u, t)
    return acc


# ---------------------------------------------------------------------------
# niceness


def niceness_check(g: CurvedLInfinity) -> Dict[str, object]:
    red = reduced_cohomology(g)
    quasi_smooth = all(d in (1, 2) for d in red)
    return {
        "locally_trivial": True,  # constant-coefficient model over a point
        "quasi_smooth": quasi_smooth,
        "nice": quasi_smooth,
        "d1": red.get(1, 0),
        "d2": red.get(2, 0),
        "reduced_cohomology": red,
    }
