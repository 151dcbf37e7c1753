"""The symbol catalog: every predicate, function, and action of the domain.

The catalog is shipped as a declarative JSON data file so tests can diff
its rows against the domain definition. Each row fixes a symbol's kind,
arity, observability, the category of information it reveals, and the
standard action an outside observer reports instead of a criminal variant.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterator

from .errors import CatalogError

KINDS = ("predicate", "function", "action")
CATEGORIES = ("network", "transactions", "both", "bank", "none")


@dataclass(frozen=True, slots=True)
class CatalogRow:
    name: str
    kind: str
    observable: bool
    category: str
    arity: int
    alias: str | None = None


class Catalog:
    """Lookup table over catalog rows, keyed by symbol name."""

    def __init__(self, rows: list[CatalogRow]):
        self._rows: dict[str, CatalogRow] = {}
        for row in rows:
            if row.name in self._rows:
                raise CatalogError(f"duplicate catalog symbol {row.name!r}")
            if row.kind not in KINDS:
                raise CatalogError(f"{row.name}: unknown kind {row.kind!r}")
            if row.category not in CATEGORIES:
                raise CatalogError(f"{row.name}: unknown category {row.category!r}")
            self._rows[row.name] = row
        for row in rows:
            if row.alias is None:
                continue
            target = self._rows.get(row.alias)
            if target is None:
                raise CatalogError(f"{row.name}: alias target {row.alias!r} not in catalog")
            if not target.observable:
                raise CatalogError(f"{row.name}: alias target {row.alias!r} must be observable")
            if target.arity != row.arity or target.kind != row.kind:
                raise CatalogError(f"{row.name}: alias target {row.alias!r} has a different shape")

    def lookup(self, name: str) -> CatalogRow:
        try:
            return self._rows[name]
        except KeyError:
            raise CatalogError(f"unknown symbol {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._rows

    def __iter__(self) -> Iterator[CatalogRow]:
        return iter(self._rows.values())

    def rows(self, kind: str | None = None) -> list[CatalogRow]:
        return [r for r in self._rows.values() if kind is None or r.kind == kind]

    def alias_of(self, action_name: str) -> str:
        """The name an observer reports for this action (itself if standard)."""
        row = self.lookup(action_name)
        return row.alias or row.name

    def alias_names(self) -> frozenset[str]:
        return frozenset(r.name for r in self._rows.values() if r.alias is not None)

    def unobservable_names(self) -> frozenset[str]:
        return frozenset(r.name for r in self._rows.values() if not r.observable)

    def action_names(self) -> list[str]:
        return [r.name for r in self.rows("action")]


@lru_cache(maxsize=1)
def default_catalog() -> Catalog:
    """The catalog bundled with the package."""
    text = resources.files("fintrace.data").joinpath("catalog.json").read_text()
    raw = json.loads(text)
    rows = [
        CatalogRow(
            name=entry["name"],
            kind=entry["kind"],
            observable=entry["observable"],
            category=entry["category"],
            arity=entry["arity"],
            alias=entry.get("alias"),
        )
        for entry in raw["symbols"]
    ]
    return Catalog(rows)


def catalog_lookup(name: str) -> CatalogRow:
    """Row for ``name`` in the default catalog; raises CatalogError if unknown."""
    return default_catalog().lookup(name)
