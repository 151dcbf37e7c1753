"""Plan-library instantiation with precondition repair.

A goal names a template and supplies every constant. Instantiation
expands the template into a grounded action sequence, then walks the
sequence against a projected state and repairs what it can:

* a payment from an account that does not exist yet gets a
  ``create-account`` inserted in front (the goal's bindings say who owns
  the missing account);
* a payment from an underfunded account gets work/payroll cycles
  inserted when the customer is employed.

Anything else is a planning failure.
"""

from __future__ import annotations

import time

from ..errors import PlanningError
from ..model import ActionInstance
from .domainfile import ActionSchema, Atom, Comparison, PlanTemplate, load_domain, load_plan_library
from .executor import apply_effects, failing_precondition
from .goals import HOME_COUNTRY, Goal, goal_satisfied
from .statespace import SimState

_MAX_REPAIRS = 60
_MAX_WAGE_CYCLES = 24


def _expand(goal: Goal, template: PlanTemplate) -> list[ActionInstance]:
    actions: list[ActionInstance] = []
    for step in template.steps:
        if step.tag is not None and step.tag not in goal.tags:
            continue
        if step.count_param is not None:
            count = int(goal.bindings[step.count_param])
            args = tuple(str(goal.bindings[p]) for p in step.params)
            actions.extend(ActionInstance(step.action, args) for _ in range(count))
            continue
        values = [goal.bindings[p] for p in step.params]
        if step.repeat:
            lengths = {len(v) for v in values if isinstance(v, tuple)}
            if len(lengths) != 1:
                raise PlanningError(
                    f"{goal.kind}: repeat step {step.action} needs sequence bindings of one length"
                )
            (length,) = lengths
            for i in range(length):
                args = tuple(
                    str(v[i]) if isinstance(v, tuple) else str(v) for v in values
                )
                actions.append(ActionInstance(step.action, args))
        else:
            if any(isinstance(v, tuple) for v in values):
                raise PlanningError(f"{goal.kind}: step {step.action} bound to a sequence")
            actions.append(ActionInstance(step.action, tuple(str(v) for v in values)))
    return actions


def _repair(failing: Atom | Comparison, action: ActionInstance, binding: dict[str, str],
            sim: SimState, goal: Goal) -> list[ActionInstance]:
    if isinstance(failing, Comparison) and failing.func.name == "balance":
        acc = binding[failing.func.params[0]]
        current = sim.value("balance", (acc,))
        if current is None:
            owner = str(goal.bindings.get(f"owner:{acc}") or goal.bindings.get("c") or acc)
            country = str(goal.bindings.get("country") or HOME_COUNTRY)
            return [ActionInstance("create-account", (owner, acc, country))]
        # underfunded: earn the difference first
        if failing.term.kind == "number":
            target = failing.term.number
        elif failing.term.kind == "param":
            target = int(binding[failing.term.param])
        else:
            target = sim.value(failing.term.ref.name,
                               tuple(binding[p] for p in failing.term.ref.params))
        if target is None:
            raise PlanningError(f"cannot evaluate funding target for {action}")
        customer = str(goal.bindings.get("c", ""))
        if not sim.has("employed", (customer,)):
            raise PlanningError(f"cannot fund {action}: {acc} is short and {customer!r} has no job")
        salary = sim.value("salary", (customer,))
        if salary is None or salary <= 0:
            raise PlanningError(f"cannot fund {action}: no salary")
        inserts: list[ActionInstance] = []
        balance = current
        dwp = int(sim.value("days-without-pay", (customer,)) or 0)
        cycles = 0
        while balance < target:
            cycles += 1
            if cycles > _MAX_WAGE_CYCLES:
                raise PlanningError(f"cannot fund {action}: would take too many pay cycles")
            inserts.extend(ActionInstance("work", (customer,)) for _ in range(max(0, 5 - dwp)))
            inserts.append(ActionInstance("payroll", (customer, acc)))
            balance += salary
            dwp = 0
        return inserts
    raise PlanningError(f"no repair for precondition {failing} of {action}")


def instantiate(goal: Goal, projection: SimState,
                library: dict[str, PlanTemplate] | None = None,
                schemas: dict[str, ActionSchema] | None = None,
                time_bound: float = 10.0) -> list[ActionInstance]:
    """Grounded action sequence for one goal, valid from ``projection``."""
    library = library or load_plan_library()
    schemas = schemas or load_domain()
    template = library.get(goal.kind)
    if template is None:
        raise PlanningError(f"no plan template for goal kind {goal.kind!r}")
    actions = _expand(goal, template)

    sim = projection.copy()
    deadline = time.monotonic() + time_bound
    repairs = 0
    i = 0
    while i < len(actions):
        if time.monotonic() > deadline:
            raise PlanningError(f"planning for {goal.kind!r} exceeded the time bound")
        schema = schemas.get(actions[i].name)
        if schema is None:
            raise PlanningError(f"plan step uses unknown action {actions[i].name!r}")
        binding = dict(zip(schema.params, actions[i].args))
        failing = failing_precondition(sim, schema, binding)
        if failing is None:
            apply_effects(sim, schema, binding)
            i += 1
            continue
        repairs += 1
        if repairs > _MAX_REPAIRS:
            raise PlanningError(f"plan for {goal.kind!r} keeps failing preconditions")
        actions[i:i] = _repair(failing, actions[i], binding, sim, goal)
    return actions


def plan(goals: list[Goal], state: SimState,
         library: dict[str, PlanTemplate] | None = None,
         schemas: dict[str, ActionSchema] | None = None,
         time_bound: float = 10.0) -> list[ActionInstance]:
    """One grounded sequence satisfying all goals from ``state``.

    Empty goal list yields an empty plan. Raises PlanningError when a
    template is missing, repair fails, the time bound is exceeded, or a
    goal condition does not hold after simulated execution.
    """
    library = library or load_plan_library()
    schemas = schemas or load_domain()
    sim = state.copy()
    combined: list[ActionInstance] = []
    for goal in sorted(goals, key=lambda g: not g.priority):
        actions = instantiate(goal, sim, library, schemas, time_bound)
        for action in actions:
            schema = schemas[action.name]
            apply_effects(sim, schema, dict(zip(schema.params, action.args)))
        combined.extend(actions)
    for goal in goals:
        if not goal_satisfied(goal, sim):
            raise PlanningError(f"plan does not satisfy goal {goal.kind!r}")
    return combined
