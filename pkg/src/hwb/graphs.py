"""Stable graphs with internal genera, canonical forms and automorphism counts.

A graph has vertices 0..V-1 with internal genera, a multiset of edges (u, v) with
u <= v (u == v is a self-loop) and tails.  Tails are either labeled, stored as the
vertex each tail attaches to, or unlabeled, stored as a count per vertex.

A vertex is stable when 2 g(v) - 2 + valence(v) > 0.  The genus of a connected
graph is its first Betti number plus the sum of internal genera.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import combinations_with_replacement, permutations, product
from math import factorial
from typing import Dict, List, Optional, Sequence, Tuple

MAX_VERTICES = 6
MAX_GENUS = 3


class GraphBoundsError(ValueError):
    pass


@dataclass(frozen=True)
class StableGraph:
    genera: Tuple[int, ...]
    edges: Tuple[Tuple[int, int], ...]
    tails: Tuple[int, ...]
    labeled: bool = True

    @property
    def n_vertices(self) -> int:
        return len(self.genera)

    def tail_counts(self) -> Tuple[int, ...]:
        if not self.labeled:
            return self.tails
        c = [0] * self.n_vertices
        for v in self.tails:
            c[v] += 1
        return tuple(c)

    @property
    def n_tails(self) -> int:
        return len(self.tails) if self.labeled else sum(self.tails)

    def valences(self) -> Tuple[int, ...]:
        val = list(self.tail_counts())
        for u, v in self.edges:
            val[u] += 1
            val[v] += 1
        return tuple(val)

    def loops(self) -> int:
        return len(self.edges) - self.n_vertices + 1

    def genus(self) -> int:
        return self.loops() + sum(self.genera)

    def is_connected(self) -> bool:
        return _connected(self.n_vertices, self.edges)

    def is_stable(self) -> bool:
        return all(2 * g - 2 + val > 0 for g, val in zip(self.genera, self.valences()))

    def relabel(self, perm: Sequence[int]) -> "StableGraph":
        """perm[old] = new."""
        V = self.n_vertices
        genera = [0] * V
        for v, g in enumerate(self.genera):
            genera[perm[v]] = g
        edges = tuple(sorted(tuple(sorted((perm[u], perm[v]))) for u, v in self.edges))
        if self.labeled:
            tails = tuple(perm[v] for v in self.tails)
        else:
            t = [0] * V
            for v, c in enumerate(self.tails):
                t[perm[v]] = c
            tails = tuple(t)
        return StableGraph(tuple(genera), edges, tails, self.labeled)

    def key(self) -> tuple:
        return (self.genera, self.edges, self.tails)

    def canonical(self) -> "StableGraph":
        best = None
        for perm in permutations(range(self.n_vertices)):
            h = self.relabel(perm)
            if best is None or h.key() < best.key():
                best = h
        return best

    def vertex_automorphisms(self) -> int:
        k = self.relabel(range(self.n_vertices)).key()
        return sum(1 for perm in permutations(range(self.n_vertices)) if self.relabel(perm).key() == k)

    def automorphisms(self) -> int:
        """Vertex symmetries times the half-edge symmetries every one of them lifts to."""
        lift = 1
        for (u, v), m in Counter(self.edges).items():
            lift *= factorial(m) * (2 ** m if u == v else 1)
        if not self.labeled:
            for c in self.tails:
                lift *= factorial(c)
        return self.vertex_automorphisms() * lift

    def encode(self) -> str:
        g = ",".join(map(str, self.genera))
        e = ",".join(f"{u}-{v}" for u, v in self.edges)
        t = ",".join(map(str, self.tails))
        return f"g[{g}]e[{e}]{'t' if self.labeled else 'c'}[{t}]"

    @classmethod
    def decode(cls, s: str) -> "StableGraph":
        def part(tag):
            i = s.index(tag + "[") + len(tag) + 1
            j = s.index("]", i)
            return s[i:j]
        labeled = "t[" in s
        genera = tuple(int(x) for x in part("g").split(",") if x)
        edges = tuple(tuple(int(y) for y in x.split("-")) for x in part("e").split(",") if x)
        tails = tuple(int(x) for x in part("t" if labeled else "c").split(",") if x)
        return cls(genera, edges, tails, labeled)


def _connected(V: int, edges) -> bool:
    if V == 0:
        return False
    seen = {0}
    stack = [0]
    adj = {v: set() for v in range(V)}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    while stack:
        x = stack.pop()
        for y in adj[x] - seen:
            seen.add(y)
            stack.append(y)
    return len(seen) == V


def _edge_multisets(degrees: List[int]):
    """All edge multisets (with loops) realizing the given vertex degrees."""
    V = len(degrees)
    pairs = [(u, v) for u in range(V) for v in range(u, V)]
    rem = list(degrees)

    def rec(i, acc):
        if i == len(pairs):
            if not any(rem):
                yield tuple(acc)
            return
        u, v = pairs[i]
        # once we move past all pairs starting at u, vertex u must be saturated
        if v == u and u > 0 and rem[u - 1]:
            return
        cost = 2 if u == v else 1
        top = rem[u] // cost if u == v else min(rem[u], rem[v])
        for m in range(top, -1, -1):
            rem[u] -= m * (2 if u == v else 1)
            if u != v:
                rem[v] -= m
            acc.extend([(u, v)] * m)
            yield from rec(i + 1, acc)
            del acc[len(acc) - m:]
            rem[u] += m * (2 if u == v else 1)
            if u != v:
                rem[v] += m

    yield from rec(0, [])


def _check_bounds(max_vertices, max_genus):
    if max_vertices > MAX_VERTICES or max_genus > MAX_GENUS or max_vertices < 1 or max_genus < 0:
        raise GraphBoundsError(f"bounds must satisfy 1 <= vertices <= {MAX_VERTICES}, 0 <= genus <= {MAX_GENUS}")


def enumerate_stable_graphs(max_vertices: int, max_genus: int, tails: int, labeled: bool = True,
                            genus: Optional[int] = None) -> List[StableGraph]:
    """Connected stable graphs up to isomorphism, sorted by canonical encoding.

    Generation goes through vertex types: each vertex gets (genus, tails, edge
    degree) with 2g - 2 + valence >= 1 summing to 2 g(graph) - 2 + tails; edge
    multisets realizing the degree sequence are then listed and canonicalized.
    """
    _check_bounds(max_vertices, max_genus)
    shapes: Dict[tuple, StableGraph] = {}
    genera_range = range(max_genus + 1) if genus is None else [genus]
    for G in genera_range:
        budget = 2 * G - 2 + tails
        for V in range(1, min(max_vertices, budget) + 1):
            for b1 in range(0, G + 1):
                E = V - 1 + b1
                internal = G - b1
                for gv in _compositions(internal, V):
                    for tv in _compositions(tails, V):
                        # edge degree forced by each vertex's share of the budget
                        for shares in _compositions_min1(budget, V):
                            deg = [shares[v] - 2 * gv[v] + 2 - tv[v] for v in range(V)]
                            if min(deg) < 0 or sum(deg) != 2 * E:
                                continue
                            for edges in _edge_multisets(deg):
                                if _connected(V, edges):
                                    c = StableGraph(tuple(gv), edges, tuple(tv), False).canonical()
                                    shapes.setdefault(c.key(), c)
    out: Dict[tuple, StableGraph] = {}
    for shape in shapes.values():
        if not labeled:
            out[shape.key()] = shape
            continue
        # labeled versions of one shape are isomorphic exactly when a symmetry of the shape relates them
        k = shape.key()
        sym = [p for p in permutations(range(shape.n_vertices)) if shape.relabel(p).key() == k]
        for tl in _tail_layouts(shape.tails, True):
            g = StableGraph(shape.genera, shape.edges, tl, True)
            rep = min((g.relabel(p) for p in sym), key=StableGraph.key)
            out.setdefault(rep.key(), rep)
    return sorted(out.values(), key=lambda g: (g.genus(), g.n_vertices, g.key()))


def _compositions(n: int, k: int):
    if k == 0:
        if n == 0:
            yield ()
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, k - 1):
            yield (first,) + rest


def _compositions_min1(n: int, k: int):
    for c in _compositions(n - k, k):
        yield tuple(x + 1 for x in c)


def _tail_layouts(counts: Sequence[int], labeled: bool):
    if not labeled:
        yield tuple(counts)
        return
    slots = [v for v, c in enumerate(counts) for _ in range(c)]
    seen = set()
    for p in permutations(slots):
        if p not in seen:
            seen.add(p)
            yield p


# ---------------------------------------------------------------------------
# independent oracles


def _half_edges(g: StableGraph):
    """Half-edges as (vertex, partner index or None, tail label or None)."""
    hs = []
    for u, v in g.edges:
        i = len(hs)
        hs.append([u, i + 1, None])
        hs.append([v, i, None])
    if g.labeled:
        for lab, v in enumerate(g.tails):
            hs.append([v, None, lab])
    else:
        for v, c in enumerate(g.tails):
            for _ in range(c):
                hs.append([v, None, -1])
    return hs


def brute_force_automorphisms(g: StableGraph) -> int:
    """Count half-edge permutations preserving vertices, genera, pairing and tail labels."""
    hs = _half_edges(g)
    n = len(hs)
    V = g.n_vertices
    if n == 0:
        return sum(1 for p in permutations(range(V)) if all(g.genera[p[v]] == g.genera[v] for v in range(V)))
    image = [None] * n
    used = [False] * n
    vmap: Dict[int, int] = {}
    vused: Counter = Counter()

    def rec(i):
        if i == n:
            # isolated vertices cannot occur in connected graphs with half-edges
            return 1
        total = 0
        v, partner, lab = hs[i]
        for j in range(n):
            if used[j]:
                continue
            w, partner_j, lab_j = hs[j]
            if (lab is None) != (lab_j is None) or (lab is not None and lab != lab_j):
                continue
            if g.genera[v] != g.genera[w]:
                continue
            if v in vmap and vmap[v] != w:
                continue
            if v not in vmap and vused[w]:
                continue
            if partner is not None and image[partner] is not None and image[partner] != partner_j:
                continue
            new = v not in vmap
            if new:
                vmap[v] = w
                vused[w] += 1
            image[i] = j
            used[j] = True
            total += rec(i + 1)
            used[j] = False
            image[i] = None
            if new:
                del vmap[v]
                vused[w] -= 1
        return total

    return rec(0)


def isomorphic(a: StableGraph, b: StableGraph) -> bool:
    """Backtracking vertex bijection test; no canonical forms involved."""
    if (a.n_vertices, len(a.edges), a.labeled) != (b.n_vertices, len(b.edges), b.labeled):
        return False
    if sorted(a.genera) != sorted(b.genera) or sorted(a.valences()) != sorted(b.valences()):
        return False
    V = a.n_vertices
    ca, cb = Counter(a.edges), Counter(b.edges)
    ta, tb = a.tail_counts(), b.tail_counts()

    def mult(c, u, v):
        return c.get((min(u, v), max(u, v)), 0)

    perm = [None] * V
    used = [False] * V

    def ok_partial(k):
        x = k
        for y in range(k + 1):
            if mult(ca, x, y) != mult(cb, perm[x], perm[y]):
                return False
        return True

    def rec(k):
        if k == V:
            if a.labeled:
                return all(perm[v] == w for v, w in zip(a.tails, b.tails))
            return True
        for w in range(V):
            if used[w] or a.genera[k] != b.genera[w] or ta[k] != tb[w]:
                continue
            perm[k] = w
            used[w] = True
            if ok_partial(k) and rec(k + 1):
                return True
            used[w] = False
        perm[k] = None
        return False

    return rec(0)


def oracle_stable_graphs(max_vertices: int, max_genus: int, tails: int, labeled: bool = True) -> List[StableGraph]:
    """Every symmetric adjacency matrix, filtered, with pairwise isomorphism rejection."""
    _check_bounds(max_vertices, max_genus)
    reps: Dict[tuple, List[StableGraph]] = {}
    for V in range(1, max_vertices + 1):
        pairs = [(u, v) for u in range(V) for v in range(u, V)]
        for E in range(V - 1, V + max_genus):
            for chosen in combinations_with_replacement(range(len(pairs)), E):
                edges = tuple(pairs[i] for i in chosen)
                if not _connected(V, edges):
                    continue
                b1 = E - V + 1
                for gv in product(range(max_genus - b1 + 1), repeat=V):
                    if sum(gv) + b1 > max_genus:
                        continue
                    for tv in _compositions(tails, V):
                        if not StableGraph(tuple(gv), edges, tv, False).is_stable():
                            continue
                        for tl in _tail_layouts(tv, labeled):
                            g = StableGraph(tuple(gv), edges, tl, labeled)
                            sig = list(zip(g.genera, g.valences()))
                            nbr = tuple(sorted(tuple(sorted((sig[u], sig[v]))) for u, v in edges))
                            per_tail = (tuple(sig[v] for v in tl), _tail_distances(V, edges, tl)) if labeled else ()
                            inv = (g.genus(), V, E, tuple(sorted(sig)), nbr, per_tail)
                            bucket = reps.setdefault(inv, [])
                            if not any(isomorphic(g, h) for h in bucket):
                                bucket.append(g)
    return [g for b in reps.values() for g in b]


def _tail_distances(V, edges, tails):
    adj = {v: set() for v in range(V)}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    dist = {}
    for src in set(tails):
        d = {src: 0}
        frontier = [src]
        while frontier:
            nxt = []
            for x in frontier:
                for y in adj[x]:
                    if y not in d:
                        d[y] = d[x] + 1
                        nxt.append(y)
            frontier = nxt
        dist[src] = d
    return tuple(dist[a][b] for a in tails for b in tails)


def wheel(k: int) -> StableGraph:
    """Cycle of k genus-zero vertices, each with one tail; tails unlabeled."""
    if k == 1:
        return StableGraph((0,), ((0, 0),), (1,), False)
    edges = tuple(sorted(tuple(sorted((i, (i + 1) % k))) for i in range(k)))
    return StableGraph((0,) * k, edges, (1,) * k, False)
