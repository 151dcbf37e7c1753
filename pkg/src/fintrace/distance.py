"""The four trace distance functions.

* ``d_actions``  -- Jaccard complement over action-name sets.
* ``d_delta``    -- Jaccard complement over the names appearing in state
  deltas.
* ``d_ngram``    -- squared Euclidean distance of action-name count
  vectors (unigrams).
* ``d_rel``      -- relational distance: average of an action-level and a
  delta-level component, each a normalized sum of per-element minimum
  formula distances. Directional: the first trace is the query.

``d_formula`` compares two same-shape atoms: 1 when names differ, else
half the fraction of mismatching argument positions, so same-name atoms
are at most 0.5 apart. The alternative ``paper_literal`` form flips the
argument term (identical atoms score 0.5); it is kept behind a config
switch for comparison and is not the default.

``d_numeric`` compares two function atoms: the head formula distance
weights the normalized value difference. With the default weighting,
identical heads with different values score 0; ``min_weight`` raises
the weight floor for callers that want value differences to register.

All functions expect observability-filtered traces; ``d_rel`` expects
normalized traces (constants replaced by first-appearance indices).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .errors import CatalogError
from .model import ActionInstance, Literal, Trace

DISTANCE_KINDS = ("actions", "delta", "ngram", "relational")


@dataclass(frozen=True, slots=True)
class DistanceConfig:
    """Parameters shared by the distance functions.

    ``M`` is the largest numeric difference considered meaningful; value
    differences are clamped so ``|v1-v2|/M <= 1``.
    """

    kind: str = "relational"
    M: float = 1e6
    df_variant: str = "corrected"  # or "paper_literal"
    symmetrize: bool = False
    min_weight: float = 0.0

    def __post_init__(self):
        if self.kind not in DISTANCE_KINDS:
            raise ValueError(f"unknown distance kind {self.kind!r}")
        if self.df_variant not in ("corrected", "paper_literal"):
            raise ValueError(f"unknown df variant {self.df_variant!r}")
        if self.M <= 0:
            raise ValueError("M must be positive")


DEFAULT_CONFIG = DistanceConfig()


# --- set-level distances ------------------------------------------------------


def _jaccard_complement(xs: set, ys: set) -> float:
    if not xs and not ys:
        return 0.0  # two traces with no observations are indistinguishable
    union = len(xs | ys)
    return 1.0 - len(xs & ys) / union


def action_names(trace: Trace) -> set[str]:
    return {step.action.name for step in trace.steps}


def delta_names(trace: Trace) -> set[str]:
    names: set[str] = set()
    for d in trace.deltas():
        names.update(l.name for l in d)
    return names


def d_actions(t1: Trace, t2: Trace) -> float:
    """1 minus the Jaccard similarity of the action-name sets."""
    return _jaccard_complement(action_names(t1), action_names(t2))


def d_delta(t1: Trace, t2: Trace) -> float:
    """Jaccard complement over predicate/function names seen in deltas."""
    return _jaccard_complement(delta_names(t1), delta_names(t2))


def d_ngram(t1: Trace, t2: Trace) -> float:
    """Squared Euclidean distance between action-name count vectors.

    Counting over the global action vocabulary and over the union of the
    two traces' names is the same sum; names absent from both contribute
    nothing.
    """
    c1 = Counter(step.action.name for step in t1.steps)
    c2 = Counter(step.action.name for step in t2.steps)
    return float(sum((c1[n] - c2[n]) ** 2 for n in set(c1) | set(c2)))


# --- formula-level distances --------------------------------------------------

Atom = ActionInstance | Literal


def _head_distance(name1: str, args1: tuple[str, ...], name2: str, args2: tuple[str, ...],
                   cfg: DistanceConfig) -> float:
    if name1 != name2:
        return 1.0
    if len(args1) != len(args2):
        raise CatalogError(
            f"arity mismatch for {name1!r}: {len(args1)} vs {len(args2)} arguments"
        )
    if not args1:
        return 0.0 if cfg.df_variant == "corrected" else 0.5
    mismatches = sum(a != b for a, b in zip(args1, args2))
    term = 0.5 * mismatches / len(args1)
    if cfg.df_variant == "paper_literal":
        return 0.5 - term
    return term


def d_formula(a1: Atom, a2: Atom, cfg: DistanceConfig = DEFAULT_CONFIG) -> float:
    """Distance between two atoms of the same shape (actions or predicates)."""
    return _head_distance(a1.name, a1.args, a2.name, a2.args, cfg)


def d_numeric(l1: Literal, l2: Literal, cfg: DistanceConfig = DEFAULT_CONFIG) -> float:
    """Distance between two function atoms: head distance times value gap."""
    if l1.value is None or l2.value is None:
        raise ValueError("d_numeric requires two function literals")
    if l1.name != l2.name:
        return 1.0
    head = _head_distance(l1.name, l1.args, l2.name, l2.args, cfg)
    weight = max(head, cfg.min_weight)
    diff = min(1.0, abs(float(l1.value) - float(l2.value)) / cfg.M)
    return weight * diff


def _literal_distance(l1: Literal, l2: Literal, cfg: DistanceConfig) -> float:
    if l1.is_function != l2.is_function:
        return 1.0
    if l1.is_function:
        return d_numeric(l1, l2, cfg)
    return d_formula(l1, l2, cfg)


# --- relational distance ------------------------------------------------------


def _distinct(seq: Iterable) -> list:
    seen = set()
    out = []
    for x in seq:
        if x not in seen:
            seen.add(x)
            out.append(x)
    return out


def _aggregate(xs: Sequence, ys: Sequence, fn: Callable) -> float:
    """Normalized sum over xs of the minimum fn-distance into ys.

    Both sides empty contributes 0; exactly one side empty contributes 1
    (every element of the non-empty side is unmatched).
    """
    if not xs and not ys:
        return 0.0
    if not xs or not ys:
        return 1.0
    total = sum(min(fn(x, y) for y in ys) for x in xs)
    return total / max(len(xs), len(ys))


def delta_set_distance(d1: frozenset[Literal], d2: frozenset[Literal],
                       cfg: DistanceConfig = DEFAULT_CONFIG) -> float:
    """Distance between two state deltas (sets of literals)."""
    l1 = sorted(d1, key=str)
    l2 = sorted(d2, key=str)
    return _aggregate(l1, l2, lambda a, b: _literal_distance(a, b, cfg))


def _d_rel_directed(t1: Trace, t2: Trace, cfg: DistanceConfig) -> float:
    acts1 = _distinct(t1.actions())
    acts2 = _distinct(t2.actions())
    d_ra = _aggregate(acts1, acts2, lambda a, b: d_formula(a, b, cfg))

    deltas1 = _distinct(t1.deltas())
    deltas2 = _distinct(t2.deltas())
    d_rd = _aggregate(deltas1, deltas2, lambda a, b: delta_set_distance(a, b, cfg))
    return 0.5 * (d_ra + d_rd)


def d_rel(t1: Trace, t2: Trace, cfg: DistanceConfig = DEFAULT_CONFIG) -> float:
    """Relational trace distance; ``t1`` is the query trace.

    Element matching is independent (elements of ``t2`` may serve several
    elements of ``t1``); ties inside the minima resolve to the earliest
    element of ``t2``. With ``cfg.symmetrize`` the two directions are
    averaged.
    """
    if cfg.symmetrize:
        return 0.5 * (_d_rel_directed(t1, t2, cfg) + _d_rel_directed(t2, t1, cfg))
    return _d_rel_directed(t1, t2, cfg)


def trace_distance(t1: Trace, t2: Trace, cfg: DistanceConfig = DEFAULT_CONFIG) -> float:
    """Dispatch on ``cfg.kind``."""
    if cfg.kind == "actions":
        return d_actions(t1, t2)
    if cfg.kind == "delta":
        return d_delta(t1, t2)
    if cfg.kind == "ngram":
        return d_ngram(t1, t2)
    return d_rel(t1, t2, cfg)
