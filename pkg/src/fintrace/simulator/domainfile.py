"""Parser for the declarative domain and plan-library text files (format v1).

Domain file grammar, one clause per line under an ``action`` header::

    action <name>(<p1>, <p2>, ...)
      pre  <atom> | <func-atom> <cmp> <term>
      add  <atom>
      del  <atom>
      set  <func-atom> (:= | += | -=) <term>

where ``<atom>`` is ``name(p, q)`` over declared parameters, ``<cmp>`` is
one of ``>= <= = > <`` and ``<term>`` is a number, a parameter, or a
function reference ``f(p)``.

Plan-library grammar::

    plan <kind>(<p1>, ...)
      achieves <atom> | <func-atom> <cmp> <term>
      step[tag] <action>(<params>)
      repeat[tag] <action>(<params>) [* <countparam>]

``step[tag]`` lines are included only when the goal enables the tag.
``repeat`` lines expand either by zipping parameters bound to sequences
or ``count`` times when ``* count`` is given. Everything is validated
against the action schemas at load time.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from importlib import resources

from ..errors import CatalogError, TraceParseError

_ATOM_RE = re.compile(r"^([a-z][a-z0-9-]*)\(([^()]*)\)$")
_COMPARE_OPS = (">=", "<=", "=", ">", "<")
_ASSIGN_OPS = (":=", "+=", "-=")


@dataclass(frozen=True, slots=True)
class Atom:
    """A name applied to parameter slots."""

    name: str
    params: tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.name}({','.join(self.params)})"


@dataclass(frozen=True, slots=True)
class Term:
    """number | parameter | function reference."""

    kind: str  # "number" | "param" | "ref"
    number: Fraction | None = None
    param: str | None = None
    ref: Atom | None = None


@dataclass(frozen=True, slots=True)
class Comparison:
    func: Atom
    op: str
    term: Term


@dataclass(frozen=True, slots=True)
class NumericEffect:
    func: Atom
    op: str  # := += -=
    term: Term


@dataclass(frozen=True, slots=True)
class ActionSchema:
    name: str
    params: tuple[str, ...]
    pre_literals: tuple[Atom, ...] = ()
    pre_comparisons: tuple[Comparison, ...] = ()
    add_list: tuple[Atom, ...] = ()
    delete_list: tuple[Atom, ...] = ()
    numeric_effects: tuple[NumericEffect, ...] = ()


@dataclass(frozen=True, slots=True)
class TemplateStep:
    action: str
    params: tuple[str, ...]
    repeat: bool = False
    tag: str | None = None
    count_param: str | None = None


@dataclass(frozen=True, slots=True)
class PlanTemplate:
    kind: str
    params: tuple[str, ...]
    achieves: tuple[Atom | Comparison, ...]
    steps: tuple[TemplateStep, ...]


def _parse_atom(text: str, line_no: int) -> Atom:
    match = _ATOM_RE.match(text.strip())
    if not match:
        raise TraceParseError(f"expected name(args), got {text!r}", line_no)
    raw_args = match.group(2).strip()
    params = tuple(p.strip() for p in raw_args.split(",")) if raw_args else ()
    if any(not p for p in params):
        raise TraceParseError(f"empty parameter in {text!r}", line_no)
    return Atom(match.group(1), params)


def _parse_term(text: str, line_no: int) -> Term:
    text = text.strip()
    if re.fullmatch(r"-?\d+(\.\d+)?", text):
        return Term("number", number=Fraction(text))
    if "(" in text:
        return Term("ref", ref=_parse_atom(text, line_no))
    if re.fullmatch(r"[a-z][a-z0-9_-]*", text):
        return Term("param", param=text)
    raise TraceParseError(f"cannot parse term {text!r}", line_no)


def _split_on_op(text: str, ops: tuple[str, ...], line_no: int):
    for op in ops:  # longest ops first in the tuples above
        idx = text.find(f" {op} ")
        if idx >= 0:
            return text[:idx].strip(), op, text[idx + len(op) + 2 :].strip()
    return None


def _parse_condition(text: str, line_no: int) -> Atom | Comparison:
    parts = _split_on_op(text, _COMPARE_OPS, line_no)
    if parts is None:
        return _parse_atom(text, line_no)
    lhs, op, rhs = parts
    return Comparison(_parse_atom(lhs, line_no), op, _parse_term(rhs, line_no))


def _check_params(owner: str, atom: Atom, declared: set[str], line_no: int) -> None:
    for p in atom.params:
        if p not in declared:
            raise TraceParseError(f"{owner}: undeclared parameter {p!r}", line_no)


def parse_domain(text: str) -> dict[str, ActionSchema]:
    """Parse action schemas; validates that clauses use declared parameters."""
    schemas: dict[str, ActionSchema] = {}
    current: dict | None = None

    def finish():
        nonlocal current
        if current is None:
            return
        schema = ActionSchema(
            name=current["head"].name,
            params=current["head"].params,
            pre_literals=tuple(current["pre_lit"]),
            pre_comparisons=tuple(current["pre_cmp"]),
            add_list=tuple(current["add"]),
            delete_list=tuple(current["del"]),
            numeric_effects=tuple(current["set"]),
        )
        if schema.name in schemas:
            raise TraceParseError(f"duplicate action schema {schema.name!r}")
        schemas[schema.name] = schema
        current = None

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("action "):
            finish()
            head = _parse_atom(line[len("action ") :], line_no)
            if len(set(head.params)) != len(head.params):
                raise TraceParseError(f"duplicate parameter in {head}", line_no)
            current = {"head": head, "pre_lit": [], "pre_cmp": [], "add": [], "del": [], "set": []}
            continue
        if current is None:
            raise TraceParseError(f"clause outside an action block: {line!r}", line_no)
        declared = set(current["head"].params)
        keyword, _, rest = line.partition(" ")
        if keyword == "pre":
            cond = _parse_condition(rest, line_no)
            if isinstance(cond, Comparison):
                _check_params(current["head"].name, cond.func, declared, line_no)
                if cond.term.kind == "ref":
                    _check_params(current["head"].name, cond.term.ref, declared, line_no)
                current["pre_cmp"].append(cond)
            else:
                _check_params(current["head"].name, cond, declared, line_no)
                current["pre_lit"].append(cond)
        elif keyword in ("add", "del"):
            atom = _parse_atom(rest, line_no)
            _check_params(current["head"].name, atom, declared, line_no)
            current[keyword].append(atom)
        elif keyword == "set":
            parts = _split_on_op(rest, _ASSIGN_OPS, line_no)
            if parts is None:
                raise TraceParseError(f"set clause needs := += or -=: {rest!r}", line_no)
            lhs, op, rhs = parts
            func = _parse_atom(lhs, line_no)
            term = _parse_term(rhs, line_no)
            _check_params(current["head"].name, func, declared, line_no)
            if term.kind == "param" and term.param not in declared:
                raise TraceParseError(f"undeclared parameter {term.param!r}", line_no)
            if term.kind == "ref":
                _check_params(current["head"].name, term.ref, declared, line_no)
            current["set"].append(NumericEffect(func, op, term))
        else:
            raise TraceParseError(f"unknown clause {keyword!r}", line_no)
    finish()
    return schemas


_STEP_RE = re.compile(r"^(step|repeat)(?:\[([a-z0-9-]+)\])?\s+(.*)$")


def parse_plan_library(text: str, schemas: dict[str, ActionSchema]) -> dict[str, PlanTemplate]:
    """Parse plan templates and validate them against the action schemas."""
    templates: dict[str, PlanTemplate] = {}
    current: dict | None = None

    def finish():
        nonlocal current
        if current is None:
            return
        template = PlanTemplate(
            kind=current["head"].name,
            params=current["head"].params,
            achieves=tuple(current["achieves"]),
            steps=tuple(current["steps"]),
        )
        if not template.steps:
            raise TraceParseError(f"plan {template.kind!r} has no steps")
        if template.kind in templates:
            raise TraceParseError(f"duplicate plan template {template.kind!r}")
        templates[template.kind] = template
        current = None

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("plan "):
            finish()
            head = _parse_atom(line[len("plan ") :], line_no)
            current = {"head": head, "achieves": [], "steps": []}
            continue
        if current is None:
            raise TraceParseError(f"clause outside a plan block: {line!r}", line_no)
        declared = set(current["head"].params)
        if line.startswith("achieves "):
            cond = _parse_condition(line[len("achieves ") :], line_no)
            atom = cond.func if isinstance(cond, Comparison) else cond
            _check_params(current["head"].name, atom, declared, line_no)
            current["achieves"].append(cond)
            continue
        match = _STEP_RE.match(line)
        if not match:
            raise TraceParseError(f"unknown plan clause {line!r}", line_no)
        keyword, tag, rest = match.groups()
        count_param = None
        if "*" in rest:
            rest, _, count = rest.partition("*")
            count_param = count.strip()
            if count_param not in declared:
                raise TraceParseError(f"undeclared repeat count {count_param!r}", line_no)
        atom = _parse_atom(rest, line_no)
        _check_params(current["head"].name, atom, declared, line_no)
        schema = schemas.get(atom.name)
        if schema is None:
            raise CatalogError(f"plan step uses unknown action {atom.name!r}")
        if len(schema.params) != len(atom.params):
            raise CatalogError(
                f"plan step {atom.name!r} has {len(atom.params)} args, schema wants {len(schema.params)}"
            )
        current["steps"].append(
            TemplateStep(
                action=atom.name,
                params=atom.params,
                repeat=(keyword == "repeat"),
                tag=tag,
                count_param=count_param,
            )
        )
    finish()
    return templates


@lru_cache(maxsize=1)
def load_domain() -> dict[str, ActionSchema]:
    text = resources.files("fintrace.data").joinpath("domain.txt").read_text()
    return parse_domain(text)


@lru_cache(maxsize=1)
def load_plan_library() -> dict[str, PlanTemplate]:
    text = resources.files("fintrace.data").joinpath("plans.txt").read_text()
    return parse_plan_library(text, load_domain())
