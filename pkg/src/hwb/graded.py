"""Exact graded-commutative polynomial arithmetic.

Polynomials live in a truncated symmetric algebra on named generators.  Every
term carries, besides its monomial, three bookkeeping exponents: the power of
hbar (weight 2, degree 0), the power of u (degree 2, weight 0) and the power
of (2 pi i) riding on the coefficient.  Arithmetic is exact over Fraction.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

DEFAULT_WEIGHT = 6

Key = Tuple[Tuple[int, ...], int, int, int]  # (exponents, hbar, u, two_pi_i)


@dataclass(frozen=True, order=True)
class Generator:
    name: str
    degree: int
    weight: int = 1

    @property
    def parity(self) -> int:
        return self.degree % 2

    def __post_init__(self):
        if not self.name or not isinstance(self.name, str):
            raise ValueError("generator name must be a non-empty string")
        if self.weight < 0:
            raise ValueError(f"generator {self.name}: weight must be non-negative")


@dataclass(frozen=True)
class Coefficient:
    """A rational number times (2 pi i)**two_pi_i."""

    rational: Fraction
    two_pi_i: int = 0

    def __add__(self, other: "Coefficient") -> "Coefficient":
        if self.two_pi_i != other.two_pi_i:
            raise ValueError("cannot add coefficients with different (2 pi i) exponents")
        return Coefficient(self.rational + other.rational, self.two_pi_i)

    def __mul__(self, other: "Coefficient") -> "Coefficient":
        return Coefficient(self.rational * other.rational, self.two_pi_i + other.two_pi_i)

    def __str__(self) -> str:
        return str(self.rational) if not self.two_pi_i else f"{self.rational}*(2*pi*i)^{self.two_pi_i}"


def koszul_sign(permutation: Sequence[int], degrees: Sequence[int]) -> int:
    """Sign picked up when graded elements m_1..m_n are permuted by sigma.

    Product over inversions i < j with sigma(i) > sigma(j) of (-1)^(|m_i||m_j|).
    """
    n = len(permutation)
    if n != len(degrees):
        raise ValueError("permutation and degree list differ in length")
    if sorted(permutation) != list(range(n)):
        raise ValueError(f"not a permutation of 0..{n - 1}: {permutation}")
    odd = 0
    for i in range(n):
        if degrees[i] % 2 == 0:
            continue
        for j in range(i + 1, n):
            if permutation[i] > permutation[j] and degrees[j] % 2:
                odd += 1
    return -1 if odd % 2 else 1


def sign_of(permutation: Sequence[int]) -> int:
    return koszul_sign(permutation, [1] * len(permutation))


class Context:
    """Ordered set of generators; monomials are exponent vectors in this order.

    Canonical order is by (degree, name).  ``nilpotent`` lists groups of
    generator names whose total exponent must stay below the given order.
    """

    def __init__(self, generators: Iterable[Generator], nilpotent: Iterable[Tuple[Iterable[str], int]] = ()):
        gens = sorted(generators, key=lambda g: (g.degree, g.name))
        names = [g.name for g in gens]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate generator names: {dup}")
        self.generators: Tuple[Generator, ...] = tuple(gens)
        self.index: Dict[str, int] = {g.name: i for i, g in enumerate(gens)}
        self.degrees = tuple(g.degree for g in gens)
        self.weights = tuple(g.weight for g in gens)
        self.odd = tuple(g.degree % 2 for g in gens)
        self.odd_positions = tuple(i for i, o in enumerate(self.odd) if o)
        self.nilpotent = tuple((tuple(sorted(self.index[n] for n in grp)), int(order)) for grp, order in nilpotent)
        self.n = len(gens)
        self.zero_mono = (0,) * self.n
        self._mul_cache: Dict[Tuple[Tuple[int, ...], Tuple[int, ...]], Tuple[int, Optional[Tuple[int, ...]]]] = {}

    # identity is structural so that independently built contexts interoperate
    def signature(self):
        return (self.generators, self.nilpotent)

    def __eq__(self, other):
        return isinstance(other, Context) and self.signature() == other.signature()

    def __hash__(self):
        return hash(self.signature())

    def __repr__(self):
        return "Context(" + ", ".join(f"{g.name}:{g.degree}" for g in self.generators) + ")"

    def __contains__(self, name: str) -> bool:
        return name in self.index

    def gen(self, name: str) -> Generator:
        return self.generators[self.index[name]]

    def extend(self, generators: Iterable[Generator], nilpotent=()) -> "Context":
        old = [(tuple(self.generators[i].name for i in grp), order) for grp, order in self.nilpotent]
        return Context(list(self.generators) + list(generators), old + list(nilpotent))

    def mono_degree(self, mono: Tuple[int, ...]) -> int:
        return sum(e * d for e, d in zip(mono, self.degrees) if e)

    def mono_weight(self, mono: Tuple[int, ...]) -> int:
        return sum(e * w for e, w in zip(mono, self.weights) if e)

    def mono_names(self, mono: Tuple[int, ...]) -> List[str]:
        out = []
        for i, e in enumerate(mono):
            out.extend([self.generators[i].name] * e)
        return out

    def mono_mul(self, a: Tuple[int, ...], b: Tuple[int, ...]) -> Tuple[int, Optional[Tuple[int, ...]]]:
        """Sorted product of two canonical monomials: (sign, monomial) or (0, None)."""
        key = (a, b)
        hit = self._mul_cache.get(key)
        if hit is not None:
            return hit
        prod = tuple(x + y for x, y in zip(a, b))
        result: Tuple[int, Optional[Tuple[int, ...]]]
        if any(prod[i] > 1 for i in self.odd_positions) or self._killed(prod):
            result = (0, None)
        else:
            # moving each odd letter of b left past the larger odd letters of a
            inversions = 0
            larger_in_a = 0
            for i in reversed(self.odd_positions):
                if b[i]:
                    inversions += larger_in_a
                if a[i]:
                    larger_in_a += 1
            result = (-1 if inversions % 2 else 1, prod)
        if len(self._mul_cache) < 2_000_000:
            self._mul_cache[key] = result
        return result

    def _killed(self, mono) -> bool:
        for grp, order in self.nilpotent:
            if sum(mono[i] for i in grp) >= order:
                return True
        return False


def normalize_monomial(ctx: Context, word: Sequence[str]) -> Tuple[int, Optional[Tuple[int, ...]]]:
    """Sort a word of generator names into canonical order.

    Returns (sign, exponent vector), or (0, None) when an odd generator repeats.
    """
    idx = [ctx.index[w] for w in word]
    perm = sorted(range(len(idx)), key=lambda k: (idx[k], k))
    # perm lists old positions in new order; koszul_sign wants the target slot of each element
    target = [0] * len(idx)
    for new_pos, old_pos in enumerate(perm):
        target[old_pos] = new_pos
    mono = [0] * ctx.n
    for i in idx:
        mono[i] += 1
    if any(mono[i] > 1 for i in ctx.odd_positions) or ctx._killed(mono):
        return 0, None
    return koszul_sign(target, [ctx.degrees[i] for i in idx]), tuple(mono)


class GradedPolynomial:
    """Immutable element of the weight-truncated graded-commutative algebra."""

    __slots__ = ("ctx", "W", "terms")

    def __init__(self, ctx: Context, terms: Mapping[Key, Fraction] = (), W: int = DEFAULT_WEIGHT):
        self.ctx = ctx
        self.W = W
        clean = {}
        for k, c in dict(terms).items():
            if c and self._key_weight(k) <= W:
                clean[k] = Fraction(c)
        self.terms: Dict[Key, Fraction] = clean

    # -- construction -------------------------------------------------
    @classmethod
    def zero(cls, ctx, W=DEFAULT_WEIGHT):
        return cls(ctx, {}, W)

    @classmethod
    def const(cls, ctx, c, W=DEFAULT_WEIGHT, hbar=0, u=0, two_pi_i=0):
        return cls(ctx, {(ctx.zero_mono, hbar, u, two_pi_i): Fraction(c)}, W)

    @classmethod
    def gen(cls, ctx, name, W=DEFAULT_WEIGHT, coeff=1):
        mono = [0] * ctx.n
        mono[ctx.index[name]] = 1
        return cls(ctx, {(tuple(mono), 0, 0, 0): Fraction(coeff)}, W)

    @classmethod
    def monomial(cls, ctx, word: Sequence[str], coeff=1, W=DEFAULT_WEIGHT, hbar=0, u=0, two_pi_i=0):
        s, mono = normalize_monomial(ctx, word)
        if not s:
            return cls.zero(ctx, W)
        return cls(ctx, {(mono, hbar, u, two_pi_i): s * Fraction(coeff)}, W)

    def _key_weight(self, k: Key) -> int:
        return self.ctx.mono_weight(k[0]) + 2 * k[1]

    def key_degree(self, k: Key) -> int:
        return self.ctx.mono_degree(k[0]) + 2 * k[2]

    # -- queries ------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = GradedPolynomial.const(self.ctx, other, self.W)
        if not isinstance(other, GradedPolynomial):
            return NotImplemented
        return self.ctx == other.ctx and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def degrees(self) -> set:
        return {self.key_degree(k) for k in self.terms}

    def degree(self) -> int:
        ds = self.degrees()
        if len(ds) != 1:
            raise ValueError(f"polynomial is not homogeneous (degrees {sorted(ds)})")
        return ds.pop()

    def weight(self) -> int:
        return max((self._key_weight(k) for k in self.terms), default=0)

    def min_weight(self) -> int:
        return min((self._key_weight(k) for k in self.terms), default=0)

    def coefficient(self, word: Sequence[str] = (), hbar=0, u=0, two_pi_i=0) -> Fraction:
        s, mono = normalize_monomial(self.ctx, word)
        if not s:
            return Fraction(0)
        return s * self.terms.get((mono, hbar, u, two_pi_i), Fraction(0))

    def max_hbar(self) -> int:
        return max((k[1] for k in self.terms), default=0)

    # -- arithmetic ---------------------------------------------------
    def _check(self, other: "GradedPolynomial"):
        if self.ctx != other.ctx:
            raise ValueError("polynomials live in different generator contexts")

    def _lift(self, other):
        if isinstance(other, GradedPolynomial):
            self._check(other)
            return other
        return GradedPolynomial.const(self.ctx, Fraction(other), self.W)

    def __add__(self, other):
        other = self._lift(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return GradedPolynomial(self.ctx, out, min(self.W, other.W))

    __radd__ = __add__

    def __neg__(self):
        return GradedPolynomial(self.ctx, {k: -c for k, c in self.terms.items()}, self.W)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def scale(self, c) -> "GradedPolynomial":
        c = Fraction(c)
        return GradedPolynomial(self.ctx, {k: c * v for k, v in self.terms.items()}, self.W)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return poly_mul(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def shift_params(self, hbar=0, u=0, two_pi_i=0, laurent=False) -> "GradedPolynomial":
        """Multiply by hbar^hbar u^u (2 pi i)^two_pi_i; negative hbar powers only when laurent."""
        out = {}
        for (m, h, uu, t), c in self.terms.items():
            if (h + hbar < 0 and not laurent) or uu + u < 0:
                raise ValueError("negative hbar or u exponent")
            out[(m, h + hbar, uu + u, t + two_pi_i)] = c
        return GradedPolynomial(self.ctx, out, self.W)

    def with_weight(self, W: int) -> "GradedPolynomial":
        return GradedPolynomial(self.ctx, self.terms, W)

    def pow(self, n: int) -> "GradedPolynomial":
        out = GradedPolynomial.const(self.ctx, 1, self.W)
        for _ in range(n):
            out = out * self
        return out

    def filter(self, pred: Callable[[Key], bool]) -> "GradedPolynomial":
        return GradedPolynomial(self.ctx, {k: c for k, c in self.terms.items() if pred(k)}, self.W)

    def homogeneous_parts(self) -> Dict[int, "GradedPolynomial"]:
        parts: Dict[int, Dict[Key, Fraction]] = {}
        for k, c in self.terms.items():
            parts.setdefault(self.key_degree(k), {})[k] = c
        return {d: GradedPolynomial(self.ctx, t, self.W) for d, t in parts.items()}

    def embed(self, ctx: Context) -> "GradedPolynomial":
        """Re-express in a larger context containing all used generators."""
        out = {}
        for (m, h, u, t), c in self.terms.items():
            new = [0] * ctx.n
            for i, e in enumerate(m):
                if e:
                    new[ctx.index[self.ctx.generators[i].name]] = e
            # both contexts sort by (degree, name) so the relative order is kept
            out[(tuple(new), h, u, t)] = c
        return GradedPolynomial(ctx, out, self.W)

    def substitute_names(self, rename: Mapping[str, str], ctx: Context) -> "GradedPolynomial":
        """Rename generators into another context; signs come from re-sorting."""
        acc = GradedPolynomial.zero(ctx, self.W)
        for (m, h, u, t), c in self.terms.items():
            word = [rename.get(n, n) for n in self.ctx.mono_names(m)]
            acc = acc + GradedPolynomial.monomial(ctx, word, c, self.W, h, u, t)
        return acc

    def items(self) -> Iterator[Tuple[Key, Fraction]]:
        for k in sorted(self.terms):
            yield k, self.terms[k]

    def to_records(self) -> List[dict]:
        recs = []
        for (m, h, u, t), c in self.items():
            recs.append({"monomial": self.ctx.mono_names(m), "coeff": str(c), "twoPiI": t, "hbar": h, "u": u})
        return recs

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for (m, h, u, t), c in self.items():
            bits = self.ctx.mono_names(m)
            if h:
                bits.append("hbar" if h == 1 else f"hbar^{h}")
            if u:
                bits.append(f"u^{u}" if u > 1 else "u")
            if t:
                bits.append(f"(2pi i)^{t}")
            parts.append(f"{c}" + ("*" + "*".join(bits) if bits else ""))
        return " + ".join(parts)


def poly_mul(p: GradedPolynomial, q: GradedPolynomial) -> GradedPolynomial:
    """Graded-commutative product, truncated at the smaller weight bound."""
    p._check(q)
    ctx = p.ctx
    W = min(p.W, q.W)
    out: Dict[Key, Fraction] = {}
    wts = ctx.weights
    qitems = [(k, c, sum(e * w for e, w in zip(k[0], wts) if e) + 2 * k[1]) for k, c in q.terms.items()]
    for (ma, ha, ua, ta), ca in p.terms.items():
        wa = sum(e * w for e, w in zip(ma, wts) if e) + 2 * ha
        for (mb, hb, ub, tb), cb, wb in qitems:
            if wa + wb > W:
                continue
            s, m = ctx.mono_mul(ma, mb)
            if not s:
                continue
            k = (m, ha + hb, ua + ub, ta + tb)
            v = out.get(k, 0) + (ca * cb if s > 0 else -ca * cb)
            if v:
                out[k] = v
            else:
                out.pop(k, None)
    return GradedPolynomial(ctx, out, W)


def truncate(p: GradedPolynomial, W: int) -> GradedPolynomial:
    """Drop every term of weight above W (weight counts hbar twice)."""
    if W > p.W:
        raise ValueError(f"cannot truncate at {W} above the current bound {p.W}")
    return GradedPolynomial(p.ctx, p.terms, W)


def exp_series(p: GradedPolynomial) -> GradedPolynomial:
    """exp(p) for p with no weight-zero part, expanded to the truncation weight."""
    if any(p._key_weight(k) == 0 for k in p.terms):
        raise ValueError("exp needs a positive-weight argument to terminate")
    out = GradedPolynomial.const(p.ctx, 1, p.W)
    term = out
    k = 1
    while True:
        term = (term * p).scale(Fraction(1, k))
        if term.is_zero():
            return out
        out = out + term
        k += 1


def log_series(p: GradedPolynomial) -> GradedPolynomial:
    """log(1 + p) for p of positive weight."""
    if any(p._key_weight(k) == 0 for k in p.terms):
        raise ValueError("log needs a positive-weight argument to terminate")
    out = GradedPolynomial.zero(p.ctx, p.W)
    power = GradedPolynomial.const(p.ctx, 1, p.W)
    k = 1
    while True:
        power = power * p
        if power.is_zero():
            return out
        out = out + power.scale(Fraction((-1) ** (k + 1), k))
        k += 1


def monomial_basis(ctx: Context, W: int, degree: Optional[int] = None, max_hbar: int = 0,
                   min_weight: int = 0) -> List[Key]:
    """All canonical keys (u = 0, no 2 pi i) with weight in [min_weight, W]."""
    keys: List[Key] = []
    n = ctx.n

    def rec(i, mono, wt):
        if i == n:
            for h in range(0, max_hbar + 1):
                total = wt + 2 * h
                if total > W:
                    break
                if total < min_weight:
                    continue
                m = tuple(mono)
                if ctx._killed(m):
                    continue
                if degree is None or ctx.mono_degree(m) == degree:
                    keys.append((m, h, 0, 0))
            return
        w = ctx.weights[i]
        cap = 1 if ctx.odd[i] else (W - wt) // w if w else 0
        if w == 0 and not ctx.odd[i]:
            raise ValueError(f"even generator {ctx.generators[i].name} of weight 0 makes the basis infinite")
        for e in range(0, cap + 1):
            if wt + e * w > W:
                break
            mono.append(e)
            rec(i + 1, mono, wt + e * w)
            mono.pop()

    rec(0, [], 0)
    return sorted(keys)


def key_poly(ctx: Context, key: Key, W: int) -> GradedPolynomial:
    return GradedPolynomial(ctx, {key: Fraction(1)}, W)


# ---------------------------------------------------------------------------
# derivations and constant-coefficient second-order operators


class DerivationSpec:
    """Degree-homogeneous derivation given by its values on generators.

    Missing generators are sent to zero.  Extension uses the signed Leibniz
    rule D(ab) = D(a) b + (-1)^{|D||a|} a D(b).
    """

    def __init__(self, ctx: Context, degree: int, values: Mapping[str, GradedPolynomial], W: int = DEFAULT_WEIGHT):
        self.ctx = ctx
        self.degree = degree
        self.W = W
        self.values: Dict[int, GradedPolynomial] = {}
        for name, v in values.items():
            if name not in ctx.index:
                raise ValueError(f"derivation value given for unknown generator {name}")
            if v.ctx != ctx:
                raise ValueError(f"value on {name} lives in another context")
            if not v.is_zero():
                g = ctx.gen(name)
                for d in v.degrees():
                    if d != g.degree + degree:
                        raise ValueError(f"derivation of degree {degree} sends {name} (degree {g.degree}) to degree {d}")
                self.values[ctx.index[name]] = v
        self._cache: Dict[Tuple[int, ...], Dict[Key, Fraction]] = {}

    def on(self, name: str) -> GradedPolynomial:
        return self.values.get(self.ctx.index[name], GradedPolynomial.zero(self.ctx, self.W))

    def _mono(self, mono: Tuple[int, ...]) -> Dict[Key, Fraction]:
        hit = self._cache.get(mono)
        if hit is not None:
            return hit
        ctx = self.ctx
        out: Dict[Key, Fraction] = {}
        prefix = [0] * ctx.n
        prefix_deg = 0
        for i, e in enumerate(mono):
            if not e:
                continue
            val = self.values.get(i)
            if val is not None:
                rest = list(mono)
                rest[i] -= 1
                for j in range(i):
                    rest[j] = 0
                rest_t = tuple(rest)
                pre_t = tuple(prefix)
                sgn = -1 if (self.degree * prefix_deg) % 2 else 1
                for (vm, vh, vu, vt), vc in val.terms.items():
                    s1, m1 = ctx.mono_mul(pre_t, vm)
                    if not s1:
                        continue
                    s2, m2 = ctx.mono_mul(m1, rest_t)
                    if not s2:
                        continue
                    k = (m2, vh, vu, vt)
                    out[k] = out.get(k, 0) + sgn * s1 * s2 * e * vc
            prefix[i] = e
            prefix_deg += e * ctx.degrees[i]
        out = {k: c for k, c in out.items() if c}
        self._cache[mono] = out
        return out

    def __call__(self, p: GradedPolynomial) -> GradedPolynomial:
        if p.ctx != self.ctx:
            raise ValueError("polynomial and derivation live in different contexts")
        W = min(p.W, self.W)
        out: Dict[Key, Fraction] = {}
        for (m, h, u, t), c in p.terms.items():
            for (dm, dh, du, dt), dc in self._mono(m).items():
                k = (dm, dh + h, du + u, dt + t)
                out[k] = out.get(k, 0) + c * dc
        return GradedPolynomial(self.ctx, out, W)

    def __add__(self, other: "DerivationSpec") -> "DerivationSpec":
        if other.degree != self.degree or other.ctx != self.ctx:
            raise ValueError("can only add derivations of equal degree on one context")
        names = {g.name for g in self.ctx.generators}
        return DerivationSpec(self.ctx, self.degree, {n: self.on(n) + other.on(n) for n in names}, min(self.W, other.W))

    def scale(self, c) -> "DerivationSpec":
        return DerivationSpec(self.ctx, self.degree, {g.name: self.on(g.name).scale(c) for g in self.ctx.generators}, self.W)


def apply_derivation(D: DerivationSpec, p: GradedPolynomial) -> GradedPolynomial:
    for k in p.terms:
        if len(k[0]) != D.ctx.n:
            raise ValueError("polynomial uses generators unknown to the derivation")
    return D(p)


def partial(ctx: Context, name: str, W: int = DEFAULT_WEIGHT) -> DerivationSpec:
    """Left partial derivative with respect to a generator (degree -|x|)."""
    g = ctx.gen(name)
    return DerivationSpec(ctx, -g.degree, {name: GradedPolynomial.const(ctx, 1, W)}, W)


def graded_commutator(A: Callable, B: Callable, degA: int, degB: int) -> Callable:
    sign = -1 if (degA * degB) % 2 else 1

    def op(p):
        return A(B(p)) - B(A(p)).scale(sign)

    return op


def commutator_derivation(D1: DerivationSpec, D2: DerivationSpec) -> DerivationSpec:
    """[D1, D2] as a derivation, from its values on generators."""
    op = graded_commutator(D1, D2, D1.degree, D2.degree)
    vals = {g.name: op(GradedPolynomial.gen(D1.ctx, g.name, min(D1.W, D2.W))) for g in D1.ctx.generators}
    return DerivationSpec(D1.ctx, D1.degree + D2.degree, vals, min(D1.W, D2.W))


class SecondOrderOperator:
    """Sum_k c_k d_{a_k} d_{b_k} plus an optional first-order derivation part.

    The quadratic part has constant coefficients; ``pairs`` holds
    (coefficient, a, b) with the derivative in b applied first.
    """

    def __init__(self, ctx: Context, degree: int, pairs: Iterable[Tuple[Fraction, str, str]] = (),
                 first_order: Optional[DerivationSpec] = None, W: int = DEFAULT_WEIGHT, hbar_pairs: int = 0):
        self.ctx = ctx
        self.degree = degree
        self.W = W
        self.pairs = tuple((Fraction(c), a, b) for c, a, b in pairs if c)
        for c, a, b in self.pairs:
            d = -(ctx.gen(a).degree + ctx.gen(b).degree)
            if d != degree:
                raise ValueError(f"pair ({a},{b}) has degree {d}, operator declared {degree}")
        if first_order is not None and first_order.degree != degree:
            raise ValueError("first-order part must share the operator degree")
        self.first_order = first_order
        self._partials = {}
        for _, a, b in self.pairs:
            for x in (a, b):
                if x not in self._partials:
                    self._partials[x] = partial(ctx, x, W)

    def __call__(self, p: GradedPolynomial) -> GradedPolynomial:
        out = GradedPolynomial.zero(self.ctx, min(p.W, self.W))
        for c, a, b in self.pairs:
            out = out + self._partials[a](self._partials[b](p)).scale(c)
        if self.first_order is not None:
            out = out + self.first_order(p)
        return out

    def with_first_order(self, D: Optional[DerivationSpec]) -> "SecondOrderOperator":
        return SecondOrderOperator(self.ctx, self.degree, self.pairs, D, self.W)

    def bracket(self, a: GradedPolynomial, b: GradedPolynomial) -> GradedPolynomial:
        """Failure of the operator to be a derivation."""
        deg_a = a.degree() if not a.is_zero() else 0
        s = -1 if deg_a % 2 else 1
        return self(a * b) - self(a) * b - (a * self(b)).scale(s)


def order_defect(op: Callable, op_degree: int, elems: Sequence[GradedPolynomial]) -> GradedPolynomial:
    """Nested commutator [...[[op, a1], a2], ..., ak](1) with multiplication operators.

    Vanishes for every choice of k = 3 elements exactly when op has order at most two.
    """
    one = GradedPolynomial.const(elems[0].ctx, 1, elems[0].W)
    current = op
    deg = op_degree
    for x in elems:
        dx = x.degree() if not x.is_zero() else 0
        current = _commute_with_mult(current, deg, x, dx)
        deg += dx
    return current(one)


def _commute_with_mult(A, degA, x, dx):
    sign = -1 if (degA * dx) % 2 else 1
    return lambda p: A(x * p) - (x * A(p)).scale(sign)
