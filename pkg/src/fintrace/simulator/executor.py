"""Grounded action execution against the simulation state."""

from __future__ import annotations

import random
from fractions import Fraction

from ..errors import CatalogError, ExecutionError
from ..model import ActionInstance, as_number
from .domainfile import ActionSchema, Atom, Comparison, NumericEffect, Term, load_domain
from .statespace import SimState

Binding = dict[str, str]


def _bind(schema: ActionSchema, action: ActionInstance) -> Binding:
    if len(schema.params) != len(action.args):
        raise CatalogError(
            f"{action.name!r} expects {len(schema.params)} arguments, got {len(action.args)}"
        )
    return dict(zip(schema.params, action.args))


def _ground(atom: Atom, binding: Binding) -> tuple[str, tuple[str, ...]]:
    return atom.name, tuple(binding[p] for p in atom.params)


def _term_value(term: Term, binding: Binding, state: SimState) -> Fraction | None:
    if term.kind == "number":
        return term.number
    if term.kind == "param":
        raw = binding[term.param]
        try:
            return as_number(raw)
        except (ValueError, TypeError):
            raise ExecutionError(f"parameter {term.param!r} bound to non-numeric {raw!r}") from None
    name, args = _ground(term.ref, binding)
    return state.value(name, args)


def failing_precondition(
    state: SimState, schema: ActionSchema, binding: Binding
) -> Atom | Comparison | None:
    """The first precondition that does not hold, or None when all do.

    A comparison over an undefined function fails (this doubles as an
    existence check, e.g. ``balance(acc) >= 0`` requires the account).
    """
    for atom in schema.pre_literals:
        name, args = _ground(atom, binding)
        if not state.has(name, args):
            return atom
    for cmp in schema.pre_comparisons:
        name, args = _ground(cmp.func, binding)
        current = state.value(name, args)
        target = _term_value(cmp.term, binding, state)
        if current is None or target is None:
            return cmp
        if cmp.op == ">=" and not current >= target:
            return cmp
        if cmp.op == "<=" and not current <= target:
            return cmp
        if cmp.op == "=" and not current == target:
            return cmp
        if cmp.op == ">" and not current > target:
            return cmp
        if cmp.op == "<" and not current < target:
            return cmp
    return None


def preconditions_hold(state: SimState, schema: ActionSchema, binding: Binding) -> bool:
    return failing_precondition(state, schema, binding) is None


def apply_effects(state: SimState, schema: ActionSchema, binding: Binding) -> None:
    """Mutate ``state``: delete list, then add list, then numeric effects."""
    for atom in schema.delete_list:
        state.remove_pred(*_ground(atom, binding))
    for atom in schema.add_list:
        state.add_pred(*_ground(atom, binding))
    for eff in schema.numeric_effects:
        name, args = _ground(eff.func, binding)
        value = _term_value(eff.term, binding, state)
        if value is None:
            raise ExecutionError(f"numeric effect of {schema.name!r} reads an undefined function")
        if eff.op == ":=":
            state.set_func(name, args, value)
        elif eff.op == "+=":
            state.add_func(name, args, value)
        else:
            state.add_func(name, args, -value)


def execute_step(
    state: SimState,
    action: ActionInstance,
    failure_prob: float = 0.0,
    rng: random.Random | None = None,
    schemas: dict[str, ActionSchema] | None = None,
) -> tuple[SimState, bool]:
    """Execute one grounded action.

    Returns ``(next_state, True)`` on success. With nonzero
    ``failure_prob`` the action may fail nondeterministically, returning
    the unchanged state and False (a replanning trigger). A precondition
    violation in a deterministic run is a simulator bug and raises.
    """
    schemas = schemas or load_domain()
    schema = schemas.get(action.name)
    if schema is None:
        raise CatalogError(f"unknown action {action.name!r}")
    binding = _bind(schema, action)

    if failure_prob > 0.0:
        if rng is None:
            raise ValueError("failure_prob > 0 requires an rng")
        if rng.random() < failure_prob:
            return state, False

    failing = failing_precondition(state, schema, binding)
    if failing is not None:
        if failure_prob == 0.0:
            raise ExecutionError(
                f"precondition {failing} of {action} does not hold; plans must be valid"
            )
        return state, False

    new_state = state.copy()
    apply_effects(new_state, schema, binding)
    return new_state, True


def apply_unchecked(state: SimState, action: ActionInstance,
                    schemas: dict[str, ActionSchema]) -> None:
    """Apply effects without precondition checks (queue projection only)."""
    schema = schemas[action.name]
    apply_effects(state, schema, _bind(schema, action))
