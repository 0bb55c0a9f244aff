"""Bundled example algebras, loaded from the package data directory."""
from __future__ import annotations

from importlib import resources
from typing import List

from .linf_format import parse_linf
from .linfinity import CurvedLInfinity


def fixture_names() -> List[str]:
    root = resources.files("hwb") / "data" / "fixtures"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".linf"))


def fixture_path(name: str):
    return resources.files("hwb") / "data" / "fixtures" / f"{name}.linf"


def load_fixture(name: str) -> CurvedLInfinity:
    path = fixture_path(name)
    if not path.is_file():
        raise KeyError(f"no bundled fixture {name!r}; available: {', '.join(fixture_names())}")
    return parse_linf(path.read_text(encoding="utf-8"), name=name)
