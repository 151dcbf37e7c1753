"""Mutable world state used while simulating; snapshots become trace states."""

from __future__ import annotations

from fractions import Fraction

from ..model import Literal, State

Key = tuple[str, tuple[str, ...]]


class SimState:
    """Predicates as a set of (name, args) keys, functions as a value map."""

    __slots__ = ("preds", "funcs", "_pred_cache")

    def __init__(self, preds: set[Key] | None = None, funcs: dict[Key, Fraction] | None = None):
        self.preds: set[Key] = set(preds or ())
        self.funcs: dict[Key, Fraction] = dict(funcs or {})
        self._pred_cache: dict[Key, Literal] = {}

    def copy(self) -> "SimState":
        clone = SimState()
        clone.preds = set(self.preds)
        clone.funcs = dict(self.funcs)
        clone._pred_cache = self._pred_cache  # shared: keys are immutable
        return clone

    # -- queries -------------------------------------------------------------

    def has(self, name: str, args: tuple[str, ...]) -> bool:
        return (name, args) in self.preds

    def value(self, name: str, args: tuple[str, ...]) -> Fraction | None:
        return self.funcs.get((name, args))

    def accounts_of(self, owner: str) -> list[str]:
        out = [args[1] for (name, args) in self.preds if name == "account-owner" and args[0] == owner]
        return sorted(out)

    # -- updates -------------------------------------------------------------

    def add_pred(self, name: str, args: tuple[str, ...]) -> None:
        self.preds.add((name, args))

    def remove_pred(self, name: str, args: tuple[str, ...]) -> None:
        self.preds.discard((name, args))

    def set_func(self, name: str, args: tuple[str, ...], value: Fraction) -> None:
        self.funcs[(name, args)] = value

    def add_func(self, name: str, args: tuple[str, ...], change: Fraction) -> None:
        key = (name, args)
        self.funcs[key] = self.funcs.get(key, Fraction(0)) + change

    def apply_literal(self, lit: Literal) -> None:
        if lit.value is None:
            self.add_pred(lit.name, lit.args)
        else:
            self.set_func(lit.name, lit.args, lit.value)

    # -- snapshots -----------------------------------------------------------

    def snapshot(self) -> State:
        lits = []
        cache = self._pred_cache
        for key in self.preds:
            lit = cache.get(key)
            if lit is None:
                lit = Literal(key[0], key[1])
                cache[key] = lit
            lits.append(lit)
        for (name, args), value in self.funcs.items():
            lits.append(Literal(name, args, value))
        return State(frozenset(lits))

    @classmethod
    def from_state(cls, state: State) -> "SimState":
        sim = cls()
        for lit in state.literals:
            sim.apply_literal(lit)
        return sim
