"""Observability models: what a financial institution sees of a trace.

Six models filter traces globally. ``full`` is the ground truth. ``bank``
keeps every symbol the institution can observe, with criminal action
variants renamed to their standard counterparts. ``network`` and
``transactions`` keep only the relationship-flavored or transaction-
flavored part of the bank view. ``no-companies`` removes company-related
symbols from the bank view, and ``limited`` additionally hides
withdrawals and digital-currency operations.

When a step's action is unobservable the step is removed; its observable
state changes surface in the delta of the next kept step, which is what
an institution sees of world changes it did not mediate.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .catalog import Catalog, CatalogRow, default_catalog
from .model import ActionInstance, State, Trace, TraceStep

MODEL_NAMES = ("full", "bank", "network", "transactions", "no-companies", "limited")

COMPANY_SYMBOLS = frozenset(
    {"member-of", "has-company", "set-ownership-account", "create-company", "associate", "works-for"}
)
LIMITED_HIDDEN = frozenset(
    {"cash-out", "integration-cash-out", "digital-deposit", "placement-digital", "buy-digital"}
)


@dataclass(frozen=True, slots=True)
class ObservabilityModel:
    """A named, global keep/drop rule over catalog rows."""

    name: str

    def keeps(self, row: CatalogRow) -> bool:
        if self.name == "full":
            return True
        if not row.observable:
            return False
        if self.name == "bank":
            return True
        if self.name == "network":
            return row.category in ("network", "bank", "both")
        if self.name == "transactions":
            return row.category in ("transactions", "bank", "both")
        if self.name == "no-companies":
            return row.name not in COMPANY_SYMBOLS
        if self.name == "limited":
            return row.name not in COMPANY_SYMBOLS and row.name not in LIMITED_HIDDEN
        raise ValueError(f"unknown observability model {self.name!r}")


def get_model(name: str) -> ObservabilityModel:
    if name not in MODEL_NAMES:
        raise ValueError(f"unknown observability model {name!r}; expected one of {MODEL_NAMES}")
    return ObservabilityModel(name)


def _filter_state(state: State, model: ObservabilityModel, catalog: Catalog) -> State:
    return State(frozenset(l for l in state.literals if model.keeps(catalog.lookup(l.name))))


def filter_trace(trace: Trace, model: ObservabilityModel | str, catalog: Catalog | None = None) -> Trace:
    """Project a trace onto what ``model`` observes.

    Actions are aliased before filtering, so a model that hides e.g.
    withdrawals hides them regardless of which variant produced them.
    The ``full`` model is the identity.
    """
    if isinstance(model, str):
        model = get_model(model)
    if model.name == "full":
        return trace
    catalog = catalog or default_catalog()

    steps: list[TraceStep] = []
    for step in trace.steps:
        alias = catalog.alias_of(step.action.name)
        if not model.keeps(catalog.lookup(alias)):
            continue  # dropped step; its state changes merge into the next kept one
        steps.append(
            TraceStep(
                ActionInstance(alias, step.action.args),
                _filter_state(step.state, model, catalog),
            )
        )
    return replace(
        trace,
        initial_state=_filter_state(trace.initial_state, model, catalog),
        steps=tuple(steps),
        meta=replace(trace.meta, observability=model.name),
    )


def trace_symbols(trace: Trace) -> frozenset[str]:
    """All action and literal names appearing anywhere in a trace."""
    names = {step.action.name for step in trace.steps}
    for state in trace.states():
        names.update(l.name for l in state.literals)
    return frozenset(names)
