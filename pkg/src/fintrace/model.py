"""Relational trace model: grounded literals, states, and behavior traces.

States are sets of literals. A literal is either a predicate atom
(``account-owner(c1,acc1)``) or a numeric function atom
(``balance(acc1)=12020``). A trace is the alternating sequence of executed
actions and the states they produced, starting from an initial state, with
an optional hidden class label.

All values are immutable; every operation here is a pure function.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Optional

GOOD = "good"
BAD = "bad"
LABELS = (GOOD, BAD)


def as_number(value: int | float | str | Fraction) -> Fraction:
    """Coerce a numeric input to an exact rational.

    Floats and strings go through their decimal text form, so ``1500.5``
    becomes exactly 3001/2 rather than a binary approximation.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not literal values")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, (float, str)):
        return Fraction(str(value))
    raise TypeError(f"cannot interpret {value!r} as a number")


def format_number(value: Fraction) -> int | float:
    """JSON-friendly form: int when integral, else float."""
    if value.denominator == 1:
        return int(value)
    return float(value)


@dataclass(frozen=True, slots=True)
class Literal:
    """A grounded predicate or function atom.

    ``value`` is present exactly when the literal is a function atom.
    Two function literals with the same name and arguments but different
    values are different literals.
    """

    name: str
    args: tuple[str, ...] = ()
    value: Optional[Fraction] = None

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(str(a) for a in self.args))
        if self.value is not None:
            object.__setattr__(self, "value", as_number(self.value))

    @property
    def is_function(self) -> bool:
        return self.value is not None

    def rename(self, mapping: Mapping[str, str]) -> "Literal":
        return Literal(self.name, tuple(mapping.get(a, a) for a in self.args), self.value)

    def __str__(self) -> str:
        head = f"{self.name}({','.join(self.args)})" if self.args else self.name
        if self.value is None:
            return head
        return f"{head}={format_number(self.value)}"


@dataclass(frozen=True, slots=True)
class ActionInstance:
    """An executed action: a name and its constant arguments."""

    name: str
    args: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(str(a) for a in self.args))

    def rename(self, mapping: Mapping[str, str]) -> "ActionInstance":
        return ActionInstance(self.name, tuple(mapping.get(a, a) for a in self.args))

    def __str__(self) -> str:
        return f"{self.name}({','.join(self.args)})"


@dataclass(frozen=True, slots=True)
class State:
    """A set of literals. No two function atoms may share (name, args)."""

    literals: frozenset[Literal] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "literals", frozenset(self.literals))
        seen: dict[tuple[str, tuple[str, ...]], Fraction] = {}
        for lit in self.literals:
            if not lit.is_function:
                continue
            key = (lit.name, lit.args)
            if key in seen and seen[key] != lit.value:
                raise ValueError(f"conflicting values for function literal {lit.name}{lit.args}")
            seen[key] = lit.value

    def __contains__(self, lit: Literal) -> bool:
        return lit in self.literals

    def __len__(self) -> int:
        return len(self.literals)

    def __iter__(self) -> Iterator[Literal]:
        return iter(self.literals)

    def value_of(self, name: str, args: tuple[str, ...]) -> Optional[Fraction]:
        for lit in self.literals:
            if lit.value is not None and lit.name == name and lit.args == args:
                return lit.value
        return None


EMPTY_STATE = State()


@dataclass(frozen=True, slots=True)
class TraceStep:
    action: ActionInstance
    state: State


@dataclass(frozen=True, slots=True)
class TraceMeta:
    """Provenance carried in the trace header."""

    seed: int = 0
    horizon: int = 0
    observability: str = "full"
    generator: str = ""
    encoding: str = "full"
    truncated: Optional[str] = None  # None | "planner" | "horizon"

    def to_dict(self) -> dict:
        out = {
            "seed": self.seed,
            "horizon": self.horizon,
            "observability": self.observability,
            "generator": self.generator,
            "encoding": self.encoding,
        }
        if self.truncated is not None:
            out["truncated"] = self.truncated
        return out


@dataclass(frozen=True, slots=True)
class Trace:
    """An initial state plus an ordered list of (action, state) steps.

    ``steps`` may be empty: a length-0 prefix is a legal trace for online
    classification. The label, when present, is "good" or "bad".
    """

    initial_state: State = EMPTY_STATE
    steps: tuple[TraceStep, ...] = ()
    label: Optional[str] = None
    meta: TraceMeta = TraceMeta()

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        if self.label is not None and self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")

    def __len__(self) -> int:
        return len(self.steps)

    def actions(self) -> tuple[ActionInstance, ...]:
        return tuple(step.action for step in self.steps)

    def states(self) -> tuple[State, ...]:
        """All states including the initial one."""
        return (self.initial_state,) + tuple(step.state for step in self.steps)

    def deltas(self) -> tuple[frozenset[Literal], ...]:
        """Per-step new-literal sets, one per action."""
        out = []
        prev = self.initial_state
        for step in self.steps:
            out.append(delta(prev, step.state))
            prev = step.state
        return tuple(out)

    def prefix(self, j: int) -> "Trace":
        """The first ``j`` steps as a trace (no lookahead past them)."""
        if j < 0 or j > len(self.steps):
            raise IndexError(f"prefix length {j} out of range 0..{len(self.steps)}")
        return replace(self, steps=self.steps[:j])

    def constants(self) -> list[str]:
        """Distinct constants in first-appearance (scan) order."""
        mapping = _appearance_order(self)
        return list(mapping)


def delta(prev: State, next_state: State) -> frozenset[Literal]:
    """Literals of ``next_state`` absent from ``prev``.

    A function literal whose value changed is a new literal. Removed
    literals are not represented.
    """
    return next_state.literals - prev.literals


# --- normalization -----------------------------------------------------------

_UNASSIGNED = (1, 0)


def _canonical_new_literals(new_lits: Iterable[Literal], mapping: dict[str, str]) -> None:
    """Assign indices to the constants of a batch of literals.

    Scan order must not depend on the constants' spellings, or renaming a
    trace would normalize differently. Literals are consumed in rounds:
    each round picks the least literal by (name, pattern of already
    assigned indices, value), then assigns its arguments left to right.
    Raw argument text is only the last-resort tie-break for fully
    symmetric literals, which the simulator never produces.
    """
    remaining = list(new_lits)

    def key(lit: Literal):
        pattern = tuple(
            (0, int(mapping[a][1:])) if a in mapping else _UNASSIGNED for a in lit.args
        )
        val = (0, lit.value) if lit.value is not None else (1, 0)
        return (lit.name, pattern, val, lit.args)

    while remaining:
        remaining.sort(key=key)
        lit = remaining.pop(0)
        for arg in lit.args:
            if arg not in mapping:
                mapping[arg] = f"i{len(mapping) + 1}"


def _appearance_order(trace: Trace) -> dict[str, str]:
    mapping: dict[str, str] = {}
    _canonical_new_literals(trace.initial_state.literals, mapping)
    prev = trace.initial_state
    for step in trace.steps:
        for arg in step.action.args:
            if arg not in mapping:
                mapping[arg] = f"i{len(mapping) + 1}"
        _canonical_new_literals(delta(prev, step.state), mapping)
        prev = step.state
    return mapping


def normalize_trace(trace: Trace) -> Trace:
    """Replace every constant with ``i<k>`` by first appearance.

    The scan covers the initial state, then each step with action
    arguments before state literals. Numeric function values are left
    unchanged. Idempotent.
    """
    mapping = _appearance_order(trace)
    steps = tuple(
        TraceStep(
            step.action.rename(mapping),
            State(frozenset(lit.rename(mapping) for lit in step.state)),
        )
        for step in trace.steps
    )
    initial = State(frozenset(lit.rename(mapping) for lit in trace.initial_state))
    return replace(trace, initial_state=initial, steps=steps)
