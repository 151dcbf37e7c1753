"""JSONL serialization of traces.

Line 1 is a header object::

    {"label": "good"|"bad"|null, "seed": int, "horizon": int,
     "observability": str, "encoding": "full"|"delta",
     "initial_state": [literal...]}

Every following line is one step. In ``full`` encoding it carries the
complete state after the action, in ``delta`` encoding only the new
literals::

    {"action": {"name": s, "args": [s...]}, "state": [literal...]}
    {"action": {"name": s, "args": [s...]}, "state_delta": [literal...]}

A literal is ``{"name": s, "args": [s...]}`` with an extra ``"value"``
key iff the symbol is a function. ``full`` round-trips exactly; ``delta``
cannot represent literals an action removed, so parsing a delta file
rebuilds states by accumulation only.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Any

from .catalog import Catalog, default_catalog
from .errors import CatalogError, TraceParseError
from .model import ActionInstance, Literal, State, Trace, TraceMeta, TraceStep, format_number


def _literal_key(lit: Literal):
    return (lit.name, lit.args, lit.value if lit.value is not None else Fraction(0))


def _sorted_literals(literals) -> list[Literal]:
    return sorted(literals, key=_literal_key)


def literal_to_json(lit: Literal) -> dict[str, Any]:
    obj: dict[str, Any] = {"name": lit.name, "args": list(lit.args)}
    if lit.value is not None:
        obj["value"] = format_number(lit.value)
    return obj


def literal_from_json(obj: Any, catalog: Catalog | None, line: int | None = None) -> Literal:
    if not isinstance(obj, dict) or "name" not in obj:
        raise TraceParseError(f"literal must be an object with a name, got {obj!r}", line)
    name = obj["name"]
    args = tuple(str(a) for a in obj.get("args", []))
    value = obj.get("value")
    if catalog is not None:
        row = catalog.lookup(name)
        if row.kind == "action":
            raise CatalogError(f"{name!r} is an action, not a state literal")
        if row.arity != len(args):
            raise CatalogError(f"{name!r} expects {row.arity} arguments, got {len(args)}")
        if row.kind == "function" and value is None:
            raise TraceParseError(f"function literal {name!r} is missing its value", line)
        if row.kind == "predicate" and value is not None:
            raise TraceParseError(f"predicate literal {name!r} cannot carry a value", line)
    return Literal(name, args, value)


def action_to_json(action: ActionInstance) -> dict[str, Any]:
    return {"name": action.name, "args": list(action.args)}


def action_from_json(obj: Any, catalog: Catalog | None, line: int | None = None) -> ActionInstance:
    if not isinstance(obj, dict) or "name" not in obj:
        raise TraceParseError(f"action must be an object with a name, got {obj!r}", line)
    name = obj["name"]
    args = tuple(str(a) for a in obj.get("args", []))
    if catalog is not None:
        row = catalog.lookup(name)
        if row.kind != "action":
            raise CatalogError(f"{name!r} is a {row.kind}, not an action")
        if row.arity != len(args):
            raise CatalogError(f"{name!r} expects {row.arity} arguments, got {len(args)}")
    return ActionInstance(name, args)


def serialize_trace(trace: Trace, encoding: str | None = None) -> str:
    """Render a trace as JSONL text. Literal order is canonical."""
    encoding = encoding or trace.meta.encoding or "full"
    if encoding not in ("full", "delta"):
        raise ValueError(f"unknown encoding {encoding!r}")
    header: dict[str, Any] = {"label": trace.label}
    header.update(trace.meta.to_dict())
    header["encoding"] = encoding
    header["initial_state"] = [
        literal_to_json(l) for l in _sorted_literals(trace.initial_state)
    ]
    lines = [json.dumps(header, sort_keys=True)]
    if encoding == "full":
        for step in trace.steps:
            lines.append(
                json.dumps(
                    {
                        "action": action_to_json(step.action),
                        "state": [literal_to_json(l) for l in _sorted_literals(step.state)],
                    },
                    sort_keys=True,
                )
            )
    else:
        for step, step_delta in zip(trace.steps, trace.deltas()):
            lines.append(
                json.dumps(
                    {
                        "action": action_to_json(step.action),
                        "state_delta": [literal_to_json(l) for l in _sorted_literals(step_delta)],
                    },
                    sort_keys=True,
                )
            )
    return "\n".join(lines) + "\n"


def _parse_json_line(raw: str, line: int) -> Any:
    try:
        # exact decimals: floats in the file come back as rationals
        return json.loads(raw, parse_float=lambda s: Fraction(s))
    except json.JSONDecodeError as exc:
        raise TraceParseError(f"invalid JSON ({exc.msg})", line) from None


def parse_trace(text: str, catalog: Catalog | None = None, validate: bool = True) -> Trace:
    """Parse JSONL trace text.

    Raises TraceParseError with the offending line number for malformed
    input, and CatalogError for symbols that do not match the catalog.
    """
    if validate and catalog is None:
        catalog = default_catalog()
    if not validate:
        catalog = None
    raw_lines = [ln for ln in text.splitlines() if ln.strip()]
    if not raw_lines:
        raise TraceParseError("empty trace file", 1)

    header = _parse_json_line(raw_lines[0], 1)
    if not isinstance(header, dict) or "initial_state" not in header:
        raise TraceParseError("first line must be a header object with initial_state", 1)
    encoding = header.get("encoding", "full")
    if encoding not in ("full", "delta"):
        raise TraceParseError(f"unknown encoding {encoding!r}", 1)
    label = header.get("label")
    meta = TraceMeta(
        seed=int(header.get("seed", 0)),
        horizon=int(header.get("horizon", 0)),
        observability=str(header.get("observability", "full")),
        generator=str(header.get("generator", "")),
        encoding=encoding,
        truncated=header.get("truncated"),
    )
    initial = State(
        frozenset(
            literal_from_json(obj, catalog, 1) for obj in header["initial_state"]
        )
    )

    steps: list[TraceStep] = []
    current = initial
    for offset, raw in enumerate(raw_lines[1:], start=2):
        obj = _parse_json_line(raw, offset)
        if not isinstance(obj, dict) or "action" not in obj:
            raise TraceParseError("step line must carry an action", offset)
        action = action_from_json(obj["action"], catalog, offset)
        if encoding == "full":
            if "state" not in obj:
                raise TraceParseError("full encoding requires a state per step", offset)
            state = State(
                frozenset(literal_from_json(l, catalog, offset) for l in obj["state"])
            )
        else:
            if "state_delta" not in obj:
                raise TraceParseError("delta encoding requires state_delta per step", offset)
            new = frozenset(
                literal_from_json(l, catalog, offset) for l in obj["state_delta"]
            )
            # accumulate; a changed function value replaces the old literal
            changed = {(l.name, l.args) for l in new if l.value is not None}
            kept = frozenset(
                l
                for l in current.literals
                if l.value is None or (l.name, l.args) not in changed
            )
            state = State(kept | new)
        steps.append(TraceStep(action, state))
        current = state

    return Trace(initial_state=initial, steps=tuple(steps), label=label, meta=meta)


def write_trace(path, trace: Trace, encoding: str | None = None) -> None:
    with open(path, "w") as fh:
        fh.write(serialize_trace(trace, encoding))


def read_trace(path, catalog: Catalog | None = None, validate: bool = True) -> Trace:
    with open(path) as fh:
        return parse_trace(fh.read(), catalog=catalog, validate=validate)
