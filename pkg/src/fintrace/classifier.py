"""Instance-based (kNN) trace classification with online prefix decisions.

A case base stores labeled traces, all filtered under one observability
model and normalized. Classification finds the k nearest stored cases
under the configured trace distance and takes the mode of their labels.
Because distances are defined on any prefix, the classifier can run
online over a streaming trace; the convergence step is the earliest
prefix after which the prediction never changes again.
"""

from __future__ import annotations

import json
import os
from collections import Counter
from dataclasses import dataclass, replace

import numpy as np

from .catalog import Catalog, default_catalog
from .distance import DistanceConfig, delta_set_distance, d_formula
from .errors import CaseBaseError
from .model import LABELS, Trace, normalize_trace
from .observability import filter_trace, get_model
from .pairwise import EncodedTrace, encode_trace, prefix_distances
from .traceio import parse_trace, serialize_trace


@dataclass(frozen=True, slots=True)
class Case:
    case_id: int
    label: str
    trace: Trace
    encoded: EncodedTrace


@dataclass(frozen=True, slots=True)
class OnlineResult:
    """Per-prefix predictions for one query trace.

    ``labels[j]`` is the prediction after observing j steps (j=0 is the
    empty prefix). ``convergence_step`` is the smallest j such that every
    prediction from j on equals the final one.
    """

    labels: tuple[str, ...]
    nearest_case_ids: tuple[int, ...]
    nearest_distances: tuple[float, ...]
    final_label: str
    convergence_step: int

    def to_dict(self) -> dict:
        return {
            "final_label": self.final_label,
            "convergence_step": self.convergence_step,
            "per_step": [
                {"step": j, "label": lab, "nearest_case": cid, "distance": dist}
                for j, (lab, cid, dist) in enumerate(
                    zip(self.labels, self.nearest_case_ids, self.nearest_distances)
                )
            ],
        }


def convergence_step(labels: tuple[str, ...] | list[str]) -> int:
    """Smallest j with labels[i] == labels[-1] for all i >= j."""
    final = labels[-1]
    j = len(labels) - 1
    while j > 0 and labels[j - 1] == final:
        j -= 1
    return j


class CaseBase:
    """Labeled, filtered, normalized traces plus distance configuration."""

    def __init__(self, cases: list[Case], distance: DistanceConfig, observability: str, k: int = 1):
        if k < 1:
            raise CaseBaseError("k must be at least 1")
        present = {c.label for c in cases}
        missing = [lab for lab in LABELS if lab not in present]
        if missing:
            raise CaseBaseError(f"case base needs at least one trace per class; missing {missing}")
        self.cases = list(cases)
        self.distance = distance
        self.observability = observability
        self.k = k

    def __len__(self) -> int:
        return len(self.cases)

    def labels(self) -> list[str]:
        return [c.label for c in self.cases]

    # -- persistence --------------------------------------------------------

    def save(self, directory: str) -> None:
        os.makedirs(directory, exist_ok=True)
        manifest = {
            "k": self.k,
            "observability": self.observability,
            "distance": {
                "kind": self.distance.kind,
                "M": self.distance.M,
                "df_variant": self.distance.df_variant,
                "symmetrize": self.distance.symmetrize,
                "min_weight": self.distance.min_weight,
            },
            "cases": [
                {"file": f"case_{c.case_id:04d}.jsonl", "label": c.label}
                for c in self.cases
            ],
        }
        with open(os.path.join(directory, "manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
        for c in self.cases:
            path = os.path.join(directory, f"case_{c.case_id:04d}.jsonl")
            with open(path, "w") as fh:
                fh.write(serialize_trace(c.trace))

    @classmethod
    def load(cls, directory: str, catalog: Catalog | None = None) -> "CaseBase":
        with open(os.path.join(directory, "manifest.json")) as fh:
            manifest = json.load(fh)
        cfg = DistanceConfig(**manifest["distance"])
        cases = []
        for i, entry in enumerate(manifest["cases"]):
            with open(os.path.join(directory, entry["file"])) as fh:
                trace = parse_trace(fh.read(), catalog=catalog)
            trace = replace(trace, label=entry["label"])
            cases.append(Case(i, entry["label"], trace, encode_trace(trace)))
        return cls(cases, cfg, manifest["observability"], manifest["k"])


def train(traces: list[Trace], distance: DistanceConfig = DistanceConfig(),
          observability: str = "full", k: int = 1,
          catalog: Catalog | None = None) -> CaseBase:
    """Build a case base. Instance-based: no generalization happens here."""
    catalog = catalog or default_catalog()
    model = get_model(observability)
    cases = []
    for i, trace in enumerate(traces):
        if trace.label is None:
            raise CaseBaseError(f"training trace {i} has no label")
        prepared = normalize_trace(filter_trace(trace, model, catalog))
        cases.append(Case(i, trace.label, prepared, encode_trace(prepared)))
    return CaseBase(cases, distance, observability, k)


def _prepare_query(cb: CaseBase, trace: Trace, catalog: Catalog | None) -> Trace:
    catalog = catalog or default_catalog()
    # filtering and normalization are idempotent, so accepting either raw
    # or pre-filtered queries is safe
    return normalize_trace(filter_trace(trace, get_model(cb.observability), catalog))


def _vote(cb: CaseBase, order: list[int], dist_row: np.ndarray) -> str:
    chosen = order[: cb.k]
    counts = Counter(cb.cases[i].label for i in chosen)
    top = counts.most_common()
    if len(top) > 1 and top[0][1] == top[1][1]:
        return cb.cases[chosen[0]].label  # mode tie: the single nearest decides
    return top[0][0]


def _distance_table(cb: CaseBase, query: EncodedTrace) -> np.ndarray:
    """dist[i, j] = distance from query prefix j to case i."""
    rows = [prefix_distances(query, case.encoded, cb.distance) for case in cb.cases]
    return np.vstack(rows)


def classify_online(cb: CaseBase, trace: Trace, catalog: Catalog | None = None) -> OnlineResult:
    """Classify every prefix of ``trace``; deterministic given cb and trace."""
    prepared = _prepare_query(cb, trace, catalog)
    query = encode_trace(prepared)
    table = _distance_table(cb, query)

    n_prefixes = table.shape[1]
    labels = []
    nearest_ids = []
    nearest_dists = []
    if cb.k == 1:
        nearest = table.argmin(axis=0)  # first minimum wins: insertion order
        for j in range(n_prefixes):
            i = int(nearest[j])
            labels.append(cb.cases[i].label)
            nearest_ids.append(cb.cases[i].case_id)
            nearest_dists.append(float(table[i, j]))
    else:
        for j in range(n_prefixes):
            col = table[:, j]
            order = sorted(range(len(cb.cases)), key=lambda i: (col[i], i))
            labels.append(_vote(cb, order, col))
            nearest_ids.append(cb.cases[order[0]].case_id)
            nearest_dists.append(float(col[order[0]]))

    labels_t = tuple(labels)
    return OnlineResult(
        labels=labels_t,
        nearest_case_ids=tuple(nearest_ids),
        nearest_distances=tuple(nearest_dists),
        final_label=labels_t[-1],
        convergence_step=convergence_step(labels_t),
    )


def classify(cb: CaseBase, trace: Trace, catalog: Catalog | None = None) -> tuple[str, dict]:
    """Label for a (possibly partial) trace, with a nearest-case explanation."""
    prepared = _prepare_query(cb, trace, catalog)
    query = encode_trace(prepared)
    table = _distance_table(cb, query)
    col = table[:, -1]
    order = sorted(range(len(cb.cases)), key=lambda i: (col[i], i))
    label = _vote(cb, order, col)
    neighbors = [
        {
            "case_id": cb.cases[i].case_id,
            "label": cb.cases[i].label,
            "distance": float(col[i]),
        }
        for i in order[: cb.k]
    ]
    explanation = {"neighbors": neighbors}
    if cb.distance.kind == "relational":
        explanation["matches"] = _element_matches(prepared, cb.cases[order[0]].trace, cb.distance)
    return label, explanation


def _element_matches(query: Trace, case: Trace, cfg: DistanceConfig) -> dict:
    """For each query element, the minimizing case element and its distance."""
    out: dict = {"actions": [], "deltas": []}
    case_actions = list(dict.fromkeys(case.actions()))
    for act in dict.fromkeys(query.actions()):
        if case_actions:
            best = min(case_actions, key=lambda b: d_formula(act, b, cfg))
            out["actions"].append(
                [str(act), str(best), d_formula(act, best, cfg)]
            )
        else:
            out["actions"].append([str(act), None, 1.0])
    case_deltas = list(dict.fromkeys(case.deltas()))
    for d in dict.fromkeys(query.deltas()):
        show = lambda s: "{" + ",".join(sorted(str(l) for l in s)) + "}"
        if case_deltas:
            best = min(case_deltas, key=lambda b: delta_set_distance(d, b, cfg))
            out["deltas"].append([show(d), show(best), delta_set_distance(d, best, cfg)])
        else:
            out["deltas"].append([show(d), None, 1.0])
    return out
