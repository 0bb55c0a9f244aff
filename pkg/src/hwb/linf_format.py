"""Text format for curved L-infinity algebras.

    # comment
    [base]
    eta 1 2          # name degree [weight]
    ideal eta
    order 2
    d eta -> 0       # differential of a base generator
    [generators]
    v 1              # name degree [weight]
    [brackets]
    0: -> v eta      # arity: inputs -> output coefficient
    2: v p -> q 1
    [pairing]
    a b 1

Coefficients are sums of terms like 3, -1/2, eta, -2*eta*zeta.  The pairing
degree is read off from the first pairing entry.  A comment is a line starting
with '#' or anything after ' #'.
"""
from __future__ import annotations

import re
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from .graded import Generator
from .linfinity import BaseCoeff, BaseRing, CurvedLInfinity, StructureError

SECTIONS = ("base", "generators", "brackets", "pairing")
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_#~']*$")
_TERM = re.compile(r"\s*([+-]?)\s*([^+-]+)")


class LinfSyntaxError(ValueError):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line, self.column = line, column


class LinfSemanticError(ValueError):
    pass


def parse_coeff(text: str, line: int = 0, column: int = 1) -> BaseCoeff:
    text = text.strip()
    if not text:
        raise LinfSyntaxError(line, column, "missing coefficient")
    out: List[Tuple[Fraction, Tuple[str, ...]]] = []
    pos = 0
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or not m.group(2).strip():
            raise LinfSyntaxError(line, column + pos, f"bad coefficient {text!r}")
        sign = -1 if m.group(1) == "-" else 1
        r = Fraction(sign)
        word: List[str] = []
        for factor in m.group(2).strip().split("*"):
            factor = factor.strip()
            try:
                r *= Fraction(factor)
            except (ValueError, ZeroDivisionError):
                if not _NAME.match(factor):
                    raise LinfSyntaxError(line, column + m.start(2), f"bad factor {factor!r}") from None
                word.append(factor)
        if r:
            out.append((r, tuple(word)))
        pos = m.end()
    return tuple(out)


def _generator(tokens: List[str], line: int, col: int) -> Generator:
    if len(tokens) not in (2, 3) or not _NAME.match(tokens[0]):
        raise LinfSyntaxError(line, col, "expected: name degree [weight]")
    try:
        nums = [int(t) for t in tokens[1:]]
    except ValueError:
        raise LinfSyntaxError(line, col, "degree and weight must be integers") from None
    return Generator(tokens[0], *nums)


def parse_linf(text: str, name: str = "g") -> CurvedLInfinity:
    section: Optional[str] = None
    base_gens: List[Generator] = []
    ideal: Tuple[str, ...] = ()
    order = 2
    base_d: Dict[str, BaseCoeff] = {}
    gens: List[Generator] = []
    brackets: List[Tuple[int, int, Tuple[str, ...], str, BaseCoeff]] = []
    pairing: Dict[Tuple[str, str], Fraction] = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        # names may end in '#', so a comment is a whole line or starts at ' #'
        body = "" if raw.lstrip().startswith("#") else raw.split(" #", 1)[0]
        stripped = body.strip()
        if not stripped:
            continue
        col = len(body) - len(body.lstrip()) + 1
        if stripped.startswith("["):
            if not stripped.endswith("]") or stripped[1:-1].strip() not in SECTIONS:
                raise LinfSyntaxError(ln, col, f"unknown section {stripped}")
            section = stripped[1:-1].strip()
            continue
        if section is None:
            raise LinfSyntaxError(ln, col, "content before the first section header")
        tokens = stripped.split()
        if section == "base":
            if tokens[0] == "ideal":
                ideal = tuple(tokens[1:])
            elif tokens[0] == "order":
                if len(tokens) != 2 or not tokens[1].isdigit():
                    raise LinfSyntaxError(ln, col, "expected: order N")
                order = int(tokens[1])
            elif tokens[0] == "d":
                m = re.match(r"d\s+(\S+)\s*->\s*(.+)$", stripped)
                if not m:
                    raise LinfSyntaxError(ln, col, "expected: d name -> coefficient")
                base_d[m.group(1)] = parse_coeff(m.group(2), ln, col + m.start(2))
            else:
                base_gens.append(_generator(tokens, ln, col))
        elif section == "generators":
            gens.append(_generator(tokens, ln, col))
        elif section == "brackets":
            m = re.match(r"(\d+)\s*:\s*(.*?)->\s*(\S+)\s+(.+)$", stripped)
            if not m:
                raise LinfSyntaxError(ln, col, "expected: n: inputs -> output coefficient")
            n = int(m.group(1))
            ins = tuple(m.group(2).split())
            if len(ins) != n:
                raise LinfSyntaxError(ln, col, f"arity {n} but {len(ins)} inputs")
            brackets.append((ln, n, ins, m.group(3), parse_coeff(m.group(4), ln, col + m.start(4))))
        else:
            if len(tokens) != 3:
                raise LinfSyntaxError(ln, col, "expected: a b coefficient")
            try:
                pairing[(tokens[0], tokens[1])] = Fraction(tokens[2])
            except (ValueError, ZeroDivisionError):
                raise LinfSyntaxError(ln, col, f"bad pairing value {tokens[2]!r}") from None
    try:
        base = BaseRing(tuple(base_gens), ideal, order, base_d)
        g = CurvedLInfinity(gens, None, base, name=name)
    except (StructureError, ValueError) as e:
        raise LinfSemanticError(str(e)) from None
    for ln, n, ins, out, c in brackets:
        try:
            g.add_bracket(ins, out, c)
        except StructureError as e:
            raise LinfSemanticError(f"line {ln}: {e}") from None
    if pairing:
        (a, b) = next(iter(pairing))
        for x in (a, b):
            if x not in g.degree:
                raise LinfSemanticError(f"pairing names unknown element {x}")
        g.pairing = {k: v for k, v in pairing.items() if v}
        g.pairing_degree = -(g.degree[a] + g.degree[b])
        problems = g.pairing_problems()
        if problems:
            raise LinfSemanticError("; ".join(problems))
    return g


def load_linf(path: Union[str, Path]) -> CurvedLInfinity:
    p = Path(path)
    return parse_linf(p.read_text(encoding="utf-8"), name=p.stem)


def format_coeff(c: BaseCoeff) -> str:
    parts = []
    for r, w in c:
        body = "*".join([str(r)] + list(w)) if r != 1 or not w else "*".join(w)
        parts.append(body)
    return " + ".join(parts).replace("+ -", "- ") if parts else "0"


def dump_linf(g: CurvedLInfinity) -> str:
    lines = []
    if g.base.generators:
        lines.append("[base]")
        lines += [f"{b.name} {b.degree} {b.weight}" for b in g.base.generators]
        if g.base.ideal:
            lines.append("ideal " + " ".join(g.base.ideal))
            lines.append(f"order {g.base.order}")
        lines += [f"d {k} -> {format_coeff(v)}" for k, v in sorted(g.base.differential.items())]
    lines.append("[generators]")
    lines += [f"{b.name} {b.degree}" + (f" {b.weight}" if b.weight != 1 else "") for b in g.basis]
    lines.append("[brackets]")
    for n, inputs, out, c in g.entries():
        lines.append(f"{n}: {' '.join(inputs)} -> {out} {format_coeff(c)}".replace(":  ->", ": ->"))
    if g.pairing:
        lines.append("[pairing]")
        lines += [f"{a} {b} {c}" for (a, b), c in sorted(g.pairing.items())]
    return "\n".join(lines) + "\n"
