"""Sparse exact linear algebra over the rationals.

Vectors are dicts {column: Fraction}.  Row reduction keeps pivots in a dict so
that reducing a new vector against an existing echelon basis is cheap.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Dict, Hashable, Iterable, List, Optional

Vec = Dict[Hashable, Fraction]


class Echelon:
    """Incrementally built row-echelon basis of a subspace."""

    def __init__(self, order: Optional[Dict[Hashable, int]] = None):
        self.pivots: Dict[Hashable, Vec] = {}  # pivot column -> row with coefficient 1 there
        self.order = order

    def _pivot_of(self, v: Vec):
        if self.order is None:
            return min(v, key=lambda c: (str(type(c)), c))
        return min(v, key=self.order.__getitem__)

    def reduce(self, v: Vec) -> Vec:
        v = {k: c for k, c in v.items() if c}
        changed = True
        while changed and v:
            changed = False
            for col in list(v):
                row = self.pivots.get(col)
                if row is None or col not in v:
                    continue
                f = v[col]
                for k, c in row.items():
                    nv = v.get(k, 0) - f * c
                    if nv:
                        v[k] = nv
                    else:
                        v.pop(k, None)
                changed = True
        return v

    def add(self, v: Vec) -> bool:
        """Insert v; returns True when it was independent of the current span."""
        r = self.reduce(v)
        if not r:
            return False
        col = self._pivot_of(r)
        f = r[col]
        r = {k: c / f for k, c in r.items()}
        # keep the basis fully reduced so reduce() terminates in one sweep per column
        for pc, row in self.pivots.items():
            if col in row:
                g = row[col]
                for k, c in r.items():
                    nv = row.get(k, 0) - g * c
                    if nv:
                        row[k] = nv
                    else:
                        row.pop(k, None)
        self.pivots[col] = r
        return True

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def contains(self, v: Vec) -> bool:
        return not self.reduce(v)


def rank(vectors: Iterable[Vec]) -> int:
    e = Echelon()
    for v in vectors:
        e.add(v)
    return e.rank


def nullspace(columns: List[Vec]) -> List[List[Fraction]]:
    """Kernel of the linear map sending basis vector j to columns[j].

    Returns a basis of coefficient lists c with sum_j c_j columns[j] = 0.
    """
    # track combinations alongside the reduction: augment with identity coordinates
    tagged = []
    for j, col in enumerate(columns):
        v = {("r", k): c for k, c in col.items() if c}
        v[("z", j)] = Fraction(1)
        tagged.append(v)
    order_keys = sorted({k for v in tagged for k in v}, key=lambda k: (0 if k[0] == "r" else 1, repr(k[1])))
    order = {k: i for i, k in enumerate(order_keys)}
    e = Echelon(order)
    for v in tagged:
        e.add(v)
    basis = []
    for col, row in e.pivots.items():
        if col[0] == "z":
            vec = [Fraction(0)] * len(columns)
            for k, c in row.items():
                if k[0] == "r":
                    break
                vec[k[1]] = c
            else:
                basis.append(vec)
    return basis


def solve(columns: List[Vec], target: Vec) -> Optional[List[Fraction]]:
    """Find c with sum_j c_j columns[j] = target, or None."""
    tagged = []
    for j, col in enumerate(columns):
        v = {("r", k): c for k, c in col.items() if c}
        v[("z", j)] = Fraction(1)
        tagged.append(v)
    keys = {k for v in tagged for k in v} | {("r", k) for k in target}
    order = {k: i for i, k in enumerate(sorted(keys, key=lambda k: (0 if k[0] == "r" else 1, repr(k[1]))))}
    e = Echelon(order)
    for v in tagged:
        e.add(v)
    r = e.reduce({("r", k): c for k, c in target.items() if c})
    if any(k[0] == "r" for k in r):
        return None
    sol = [Fraction(0)] * len(columns)
    for k, c in r.items():
        sol[k[1]] = -c
    return sol


def cohomology_rank(d_in: List[Vec], d_out: List[Vec], dim: int) -> int:
    """dim ker(d_out) - rank(d_in) for a middle space of the given dimension.

    d_in lists images of the previous space, d_out images of this space's basis.
    """
    return dim - rank(d_out) - rank(d_in)
