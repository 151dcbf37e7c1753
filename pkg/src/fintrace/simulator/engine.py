"""The simulation loop: goal generation, planning, monitored execution.

Each simulation step may generate a goal (probability ``goal_prob``),
plans for new goals immediately, and executes one action from the plan
queue. Steps with nothing to execute advance time silently, so traces
contain only executed actions. Laundering-pipeline plans jump ahead of
queued everyday plans but never interrupt one that has started.

A simulation ends at the horizon, or early when planning fails in two
consecutive steps; either way the trace notes whether goals were left
unfinished.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
from dataclasses import dataclass, field

from .. import GENERATOR_TAG
from ..model import Trace, TraceMeta, TraceStep
from ..observability import filter_trace
from ..errors import PlanningError
from .domainfile import load_domain, load_plan_library
from .executor import apply_unchecked, execute_step, failing_precondition
from .goals import CUSTOMER, BehaviorProfile, Goal, GoalGenerator, goal_satisfied, standard_profile
from .plans import instantiate
from .statespace import SimState
from ..traceio import write_trace


@dataclass(frozen=True, slots=True)
class SimConfig:
    seed: int = 1
    horizon: int = 50
    profile: BehaviorProfile = field(default_factory=standard_profile)
    goal_prob: float = 0.5
    observability: str = "bank"
    failure_prob: float = 0.0
    time_bound: float = 10.0

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if not 0.0 <= self.goal_prob <= 1.0:
            raise ValueError("goal probability must be in [0, 1]")


@dataclass(frozen=True, slots=True)
class SimResult:
    full: Trace
    observed: Trace
    goals: tuple[Goal, ...]
    step_times: tuple[int, ...] = ()  # simulation step index of each trace step


@dataclass(slots=True)
class _PlanEntry:
    goal: Goal
    actions: list
    started: bool = False


def _derive_rng(seed: int, label: str) -> random.Random:
    digest = hashlib.sha256(f"{seed}|{label}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _project(state: SimState, queue: list[_PlanEntry], schemas) -> SimState:
    proj = state.copy()
    for entry in queue:
        for action in entry.actions:
            apply_unchecked(proj, action, schemas)
    return proj


def _enqueue(queue: list[_PlanEntry], entry: _PlanEntry) -> None:
    if entry.goal.priority:
        for i, existing in enumerate(queue):
            if not existing.goal.priority and not existing.started:
                queue.insert(i, entry)
                return
    queue.append(entry)


def simulate(cfg: SimConfig) -> SimResult:
    """Run one simulation; deterministic given the config."""
    schemas = load_domain()
    library = load_plan_library()
    rng = _derive_rng(cfg.seed, cfg.profile.label)
    generator = GoalGenerator(cfg.profile, cfg.goal_prob, rng, library)

    state = SimState()
    if cfg.profile.label == "bad":
        state.add_pred("criminal", (CUSTOMER,))
    initial = state.snapshot()

    queue: list[_PlanEntry] = []
    goals_log: list[Goal] = []
    unsatisfied: list[Goal] = []
    steps: list[TraceStep] = []
    fail_streak = 0
    truncated: str | None = None

    for _ in range(cfg.horizon):
        projection = _project(state, queue, schemas)
        queued_kinds = frozenset(e.goal.kind for e in queue)
        event = generator.generate(projection, queued_kinds)
        for lit in event.literals:
            state.apply_literal(lit)
        if event.goal is not None:
            try:
                actions = instantiate(
                    event.goal, _project(state, queue, schemas), library, schemas, cfg.time_bound
                )
                _enqueue(queue, _PlanEntry(event.goal, list(actions)))
                goals_log.append(event.goal)
                unsatisfied.append(event.goal)
                fail_streak = 0
            except PlanningError:
                fail_streak += 1
                if fail_streak >= 2:
                    truncated = "planner"
                    break

        if queue:
            entry = queue[0]
            action = entry.actions[0]
            state_after, ok = execute_step(state, action, cfg.failure_prob, rng, schemas)
            if ok:
                entry.started = True
                entry.actions.pop(0)
                state = state_after
                steps.append(TraceStep(action, state.snapshot()))
                if not entry.actions:
                    queue.pop(0)
                unsatisfied = [g for g in unsatisfied if not goal_satisfied(g, state)]
            else:
                schema = schemas[action.name]
                binding = dict(zip(schema.params, action.args))
                if failing_precondition(state, schema, binding) is not None:
                    # the world diverged from the plan's assumptions: replan
                    queue.pop(0)
                    try:
                        actions = instantiate(
                            entry.goal, _project(state, queue, schemas),
                            library, schemas, cfg.time_bound,
                        )
                        queue.insert(0, _PlanEntry(entry.goal, list(actions)))
                        fail_streak = 0
                    except PlanningError:
                        fail_streak += 1
                        if fail_streak >= 2:
                            truncated = "planner"
                            break
                # transient failure: the same action retries next step

    if truncated is None and (queue or unsatisfied):
        truncated = "horizon"

    meta = TraceMeta(
        seed=cfg.seed,
        horizon=cfg.horizon,
        observability="full",
        generator=GENERATOR_TAG,
        truncated=truncated,
    )
    full = Trace(
        initial_state=initial,
        steps=tuple(steps),
        label=cfg.profile.label,
        meta=meta,
    )
    observed = filter_trace(full, cfg.observability)
    return SimResult(full=full, observed=observed, goals=tuple(goals_log))


def batch_configs(n_good: int, n_bad: int, horizon: int, goal_prob: float = 0.5,
                  observability: str = "bank", seed_base: int = 1,
                  good_profile: BehaviorProfile | None = None,
                  bad_profile: BehaviorProfile | None = None,
                  failure_prob: float = 0.0) -> list[SimConfig]:
    """Seeds ``seed_base..`` mapped over the two profiles, good first."""
    from .goals import criminal_profile

    good = good_profile or standard_profile()
    bad = bad_profile or criminal_profile()
    configs = [
        SimConfig(seed=seed_base + i, horizon=horizon, profile=good, goal_prob=goal_prob,
                  observability=observability, failure_prob=failure_prob)
        for i in range(n_good)
    ]
    configs += [
        SimConfig(seed=seed_base + i, horizon=horizon, profile=bad, goal_prob=goal_prob,
                  observability=observability, failure_prob=failure_prob)
        for i in range(n_bad)
    ]
    return configs


def run_batch(configs: list[SimConfig], out_dir: str) -> dict:
    """Simulate every config, write trace files, return the manifest."""
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    counts: dict[str, int] = {}
    for cfg in configs:
        result = simulate(cfg)
        label = result.full.label
        counts[label] = counts.get(label, 0) + 1
        name = f"{label}-{cfg.seed:04d}"
        full_file = f"{name}.full.jsonl"
        obs_file = f"{name}.obs.jsonl"
        write_trace(os.path.join(out_dir, full_file), result.full)
        write_trace(os.path.join(out_dir, obs_file), result.observed)
        entries.append(
            {
                "name": name,
                "label": label,
                "seed": cfg.seed,
                "horizon": cfg.horizon,
                "goal_prob": cfg.goal_prob,
                "observability": cfg.observability,
                "full_file": full_file,
                "obs_file": obs_file,
                "truncated": result.full.meta.truncated,
            }
        )
    manifest = {
        "generator": GENERATOR_TAG,
        "class_counts": counts,
        "traces": entries,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest
