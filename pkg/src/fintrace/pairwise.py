"""Vectorized prefix-distance tables for online classification.

Classifying a streaming trace means evaluating each distance at every
prefix against every stored case. All four distances decompose over the
query's steps once per-element minima against a fixed case are known, so
one (query, case) pair costs a single pairwise matrix plus prefix sums,
and all prefixes come out together.

The arithmetic matches :mod:`fintrace.distance` (which is the readable
reference); tests cross-check the two paths.
"""

from __future__ import annotations

from collections import Counter

import numpy as np

from .distance import DistanceConfig
from .errors import CatalogError
from .model import Trace

MAX_ARITY = 6

_name_ids: dict[str, int] = {}
_const_ids: dict[str, int] = {}


def _intern(table: dict[str, int], key: str) -> int:
    return table.setdefault(key, len(table))


def _pad_args(args: tuple[str, ...]) -> list[int]:
    row = [_intern(_const_ids, a) for a in args[:MAX_ARITY]]
    row.extend([-1] * (MAX_ARITY - len(row)))
    return row


class EncodedTrace:
    """Array form of a normalized trace.

    Holds the distinct ground actions and distinct deltas in first-
    appearance order (set semantics), per-step pointers into them, and
    flattened literal arrays for the non-empty deltas.
    """

    def __init__(self, trace: Trace):
        self.trace = trace
        steps = trace.steps
        self.n_steps = len(steps)

        act_keys: dict = {}
        self.act_step_idx = np.zeros(self.n_steps, dtype=np.int64)
        self.act_first = np.zeros(self.n_steps, dtype=bool)
        act_names, act_args, act_arity = [], [], []
        for i, step in enumerate(steps):
            key = (step.action.name, step.action.args)
            if key not in act_keys:
                act_keys[key] = len(act_keys)
                self.act_first[i] = True
                act_names.append(_intern(_name_ids, step.action.name))
                act_args.append(_pad_args(step.action.args))
                act_arity.append(len(step.action.args))
            self.act_step_idx[i] = act_keys[key]
        self.n_actions = len(act_keys)
        self.act_names = np.asarray(act_names, dtype=np.int64)
        self.act_args = np.asarray(act_args, dtype=np.int64).reshape(self.n_actions, MAX_ARITY)
        self.act_arity = np.asarray(act_arity, dtype=np.int64)

        delta_keys: dict = {}
        self.delta_step_idx = np.zeros(self.n_steps, dtype=np.int64)
        self.delta_first = np.zeros(self.n_steps, dtype=bool)
        sizes: list[int] = []
        lit_names, lit_args, lit_arity, lit_func, lit_vals = [], [], [], [], []
        for i, d in enumerate(trace.deltas()):
            if d not in delta_keys:
                delta_keys[d] = len(delta_keys)
                self.delta_first[i] = True
                sizes.append(len(d))
                for lit in sorted(d, key=str):
                    lit_names.append(_intern(_name_ids, lit.name))
                    lit_args.append(_pad_args(lit.args))
                    lit_arity.append(len(lit.args))
                    lit_func.append(lit.value is not None)
                    lit_vals.append(float(lit.value) if lit.value is not None else 0.0)
            self.delta_step_idx[i] = delta_keys[d]
        self.n_deltas = len(delta_keys)
        self.delta_sizes = np.asarray(sizes, dtype=np.int64)
        n_lits = len(lit_names)
        self.lit_names = np.asarray(lit_names, dtype=np.int64)
        self.lit_args = np.asarray(lit_args, dtype=np.int64).reshape(n_lits, MAX_ARITY)
        self.lit_arity = np.asarray(lit_arity, dtype=np.int64)
        self.lit_func = np.asarray(lit_func, dtype=bool)
        self.lit_vals = np.asarray(lit_vals, dtype=np.float64)

        # bookkeeping for the non-empty deltas (reduceat needs them)
        self.ne_positions = np.flatnonzero(self.delta_sizes > 0)
        ne_sizes = self.delta_sizes[self.ne_positions]
        self.ne_sizes = ne_sizes
        self.ne_offsets = np.concatenate(([0], np.cumsum(ne_sizes)[:-1])).astype(np.int64)
        self.has_empty_delta = bool((self.delta_sizes == 0).any())
        self.empty_position = (
            int(np.flatnonzero(self.delta_sizes == 0)[0]) if self.has_empty_delta else -1
        )

        # set-level summaries for the other distances
        self.action_name_seq = [step.action.name for step in steps]
        self.action_name_set = set(self.action_name_seq)
        self.delta_name_seq = [sorted({l.name for l in d}) for d in trace.deltas()]
        self.delta_name_set = set()
        for names in self.delta_name_seq:
            self.delta_name_set.update(names)
        self.action_counts = Counter(self.action_name_seq)


def encode_trace(trace: Trace) -> EncodedTrace:
    return EncodedTrace(trace)


def _formula_matrix(names1, args1, arity1, names2, args2, arity2, cfg: DistanceConfig):
    eq = names1[:, None] == names2[None, :]
    if bool((eq & (arity1[:, None] != arity2[None, :])).any()):
        raise CatalogError("arity mismatch between same-name atoms")
    mism = (args1[:, None, :] != args2[None, :, :]).sum(axis=2)
    base = 0.5 * mism / np.maximum(arity1[:, None], 1)
    if cfg.df_variant == "paper_literal":
        base = np.where(arity1[:, None] == 0, 0.5, 0.5 - base)
    else:
        base = np.where(arity1[:, None] == 0, 0.0, base)
    return np.where(eq, base, 1.0)


def _literal_matrix(q: EncodedTrace, c: EncodedTrace, cfg: DistanceConfig):
    base = _formula_matrix(q.lit_names, q.lit_args, q.lit_arity,
                           c.lit_names, c.lit_args, c.lit_arity, cfg)
    eq = q.lit_names[:, None] == c.lit_names[None, :]
    both_func = q.lit_func[:, None] & c.lit_func[None, :]
    mixed = q.lit_func[:, None] ^ c.lit_func[None, :]
    diff = np.clip(np.abs(q.lit_vals[:, None] - c.lit_vals[None, :]) / cfg.M, 0.0, 1.0)
    func_term = np.maximum(base, cfg.min_weight) * diff
    out = np.where(both_func, func_term, base)
    out = np.where(mixed | ~eq, 1.0, out)
    return out


def _delta_matrix(q: EncodedTrace, c: EncodedTrace, cfg: DistanceConfig):
    """d over every (query delta, case delta) pair; empty-set rules applied."""
    out = np.ones((q.n_deltas, c.n_deltas))
    if len(q.lit_names) and len(c.lit_names):
        lit = _literal_matrix(q, c, cfg)
        colmin = np.minimum.reduceat(lit, c.ne_offsets, axis=1)
        rowsum = np.add.reduceat(colmin, q.ne_offsets, axis=0)
        denom = np.maximum(q.ne_sizes[:, None], c.ne_sizes[None, :])
        out[np.ix_(q.ne_positions, c.ne_positions)] = rowsum / denom
    if q.has_empty_delta and c.has_empty_delta:
        out[q.empty_position, c.empty_position] = 0.0
    return out


def _component_prefix(counts, sums, other_count):
    """Normalized-sum component at every prefix, with empty-side rules."""
    both_empty = (counts == 0) & (other_count == 0)
    one_empty = (counts == 0) | (other_count == 0)
    safe = np.maximum(np.maximum(counts, other_count), 1)
    vals = sums / safe
    return np.where(both_empty, 0.0, np.where(one_empty, 1.0, vals))


def _reverse_component_prefix(counts, rev_sums, other_count):
    both_empty = (counts == 0) & (other_count == 0)
    one_empty = (counts == 0) | (other_count == 0)
    safe = np.maximum(np.maximum(counts, other_count), 1)
    vals = rev_sums[counts] / safe
    return np.where(both_empty, 0.0, np.where(one_empty, 1.0, vals))


def relational_prefix_distances(q: EncodedTrace, c: EncodedTrace,
                                cfg: DistanceConfig) -> np.ndarray:
    """d_rel(q[:j], c) for every prefix length j in 0..len(q)."""
    n = q.n_steps

    if q.n_actions and c.n_actions:
        amat = _formula_matrix(q.act_names, q.act_args, q.act_arity,
                               c.act_names, c.act_args, c.act_arity, cfg)
        min_a = amat.min(axis=1)
    else:
        amat = None
        min_a = np.zeros(q.n_actions)

    dmat = _delta_matrix(q, c, cfg) if (q.n_deltas and c.n_deltas) else None
    min_d = dmat.min(axis=1) if dmat is not None else np.zeros(q.n_deltas)

    cnt_a = np.zeros(n + 1, dtype=np.int64)
    sum_a = np.zeros(n + 1)
    cnt_d = np.zeros(n + 1, dtype=np.int64)
    sum_d = np.zeros(n + 1)
    if n:
        cnt_a[1:] = np.cumsum(q.act_first)
        sum_a[1:] = np.cumsum(np.where(q.act_first, min_a[q.act_step_idx], 0.0))
        cnt_d[1:] = np.cumsum(q.delta_first)
        sum_d[1:] = np.cumsum(np.where(q.delta_first, min_d[q.delta_step_idx], 0.0))

    d_ra = _component_prefix(cnt_a, sum_a, c.n_actions)
    d_rd = _component_prefix(cnt_d, sum_d, c.n_deltas)
    forward = 0.5 * (d_ra + d_rd)
    if not cfg.symmetrize:
        return forward

    rev_sums_a = np.zeros(q.n_actions + 1)
    if amat is not None:
        rev_sums_a[1:] = np.minimum.accumulate(amat, axis=0).sum(axis=1)
    rev_sums_d = np.zeros(q.n_deltas + 1)
    if dmat is not None:
        rev_sums_d[1:] = np.minimum.accumulate(dmat, axis=0).sum(axis=1)
    d_ra_rev = _reverse_component_prefix(cnt_a, rev_sums_a, c.n_actions)
    d_rd_rev = _reverse_component_prefix(cnt_d, rev_sums_d, c.n_deltas)
    reverse = 0.5 * (d_ra_rev + d_rd_rev)
    return 0.5 * (forward + reverse)


def actions_prefix_distances(q: EncodedTrace, c: EncodedTrace) -> np.ndarray:
    """Jaccard-complement of action names at every prefix."""
    n = q.n_steps
    out = np.zeros(n + 1)
    case_names = c.action_name_set
    seen: set[str] = set()
    inter = 0
    out[0] = 0.0 if not case_names else 1.0
    for i, name in enumerate(q.action_name_seq):
        if name not in seen:
            seen.add(name)
            if name in case_names:
                inter += 1
        union = len(seen) + len(case_names) - inter
        out[i + 1] = 0.0 if union == 0 else 1.0 - inter / union
    return out


def delta_names_prefix_distances(q: EncodedTrace, c: EncodedTrace) -> np.ndarray:
    n = q.n_steps
    out = np.zeros(n + 1)
    case_names = c.delta_name_set
    seen: set[str] = set()
    inter = 0
    out[0] = 0.0 if not case_names else 1.0
    for i, names in enumerate(q.delta_name_seq):
        for name in names:
            if name not in seen:
                seen.add(name)
                if name in case_names:
                    inter += 1
        union = len(seen) + len(case_names) - inter
        out[i + 1] = 0.0 if union == 0 else 1.0 - inter / union
    return out


def ngram_prefix_distances(q: EncodedTrace, c: EncodedTrace) -> np.ndarray:
    n = q.n_steps
    out = np.zeros(n + 1)
    counts: Counter[str] = Counter()
    dist = sum(v * v for v in c.action_counts.values())
    out[0] = float(dist)
    for i, name in enumerate(q.action_name_seq):
        # (c+1-t)^2 - (c-t)^2 = 2(c-t) + 1
        dist += 2 * (counts[name] - c.action_counts[name]) + 1
        counts[name] += 1
        out[i + 1] = float(dist)
    return out


def prefix_distances(q: EncodedTrace, c: EncodedTrace, cfg: DistanceConfig) -> np.ndarray:
    if cfg.kind == "actions":
        return actions_prefix_distances(q, c)
    if cfg.kind == "delta":
        return delta_names_prefix_distances(q, c)
    if cfg.kind == "ngram":
        return ngram_prefix_distances(q, c)
    return relational_prefix_distances(q, c, cfg)
