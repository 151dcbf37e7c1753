"""Attribute-value baseline: trace-prefix featurization plus a CART tree.

Traces are flattened into fixed-size vectors so a standard decision tree
can be compared against the instance-based classifier. One training
example is produced per prefix length per trace, each labeled with the
trace's class.

Feature list (version 1), computed from the filtered prefix only:

* per transaction type in {deposit, wire, cash-out, bill, digital}:
  count, mean, min, max of amounts, plus a presence flag (missing
  information stays 0 with the flag off);
* mean/min/max of the current balances of the accounts seen so far;
* number of connected accounts (any account constant seen in an
  account or transaction relation);
* number of linked companies (constants seen in company relations;
  always 0 under the no-companies and limited models).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import Trace

TX_TYPES = ("deposit", "wire", "cash-out", "bill", "digital")

_TX_CLASS = {
    "quick-deposit": "deposit",
    "placement-cash-in": "deposit",
    "move-funds": "wire",
    "move-funds-internationally": "wire",
    "move-funds-self": "wire",
    "quick-payment": "wire",
    "cash-out": "cash-out",
    "integration-cash-out": "cash-out",
    "pay-bill": "bill",
    "integration-pay-bill": "bill",
    "digital-deposit": "digital",
    "placement-digital": "digital",
}

_ACCOUNT_RELATIONS = {"account-owner": 1, "transaction-origin": 1, "transaction-destination": 1}
_COMPANY_RELATIONS = {"member-of": 1, "has-company": 1}

FEATURE_NAMES: tuple[str, ...] = tuple(
    f"{tx}_{stat}" for tx in TX_TYPES for stat in ("count", "mean", "min", "max", "present")
) + (
    "balance_mean",
    "balance_min",
    "balance_max",
    "balances_present",
    "connected_accounts",
    "linked_companies",
)

N_FEATURES = len(FEATURE_NAMES)


def featurize_prefix(trace: Trace, j: int) -> np.ndarray:
    """Feature vector of the first ``j`` steps of a filtered trace."""
    if j < 0 or j > len(trace.steps):
        raise IndexError(f"prefix length {j} out of range 0..{len(trace.steps)}")
    amounts: dict[str, list[float]] = {tx: [] for tx in TX_TYPES}
    balances: dict[str, float] = {}
    accounts: set[str] = set()
    companies: set[str] = set()

    def scan_literals(literals):
        for lit in literals:
            if lit.name == "balance":
                balances[lit.args[0]] = float(lit.value)
            pos = _ACCOUNT_RELATIONS.get(lit.name)
            if pos is not None:
                accounts.add(lit.args[pos])
            pos = _COMPANY_RELATIONS.get(lit.name)
            if pos is not None:
                companies.add(lit.args[pos])

    scan_literals(trace.initial_state.literals)
    prev = trace.initial_state
    for step in trace.steps[:j]:
        tx_type = _TX_CLASS.get(step.action.name)
        if tx_type is not None:
            amount = _step_amount(step, prev)
            amounts[tx_type].append(amount)
        scan_literals(step.state.literals - prev.literals)
        prev = step.state

    features = []
    for tx in TX_TYPES:
        values = amounts[tx]
        if values:
            features.extend([len(values), float(np.mean(values)), min(values), max(values), 1.0])
        else:
            features.extend([0.0, 0.0, 0.0, 0.0, 0.0])
    if balances:
        values = list(balances.values())
        features.extend([float(np.mean(values)), min(values), max(values), 1.0])
    else:
        features.extend([0.0, 0.0, 0.0, 0.0])
    features.append(float(len(accounts)))
    features.append(float(len(companies)))
    return np.asarray(features, dtype=np.float64)


def _step_amount(step, prev_state) -> float:
    for lit in step.state.literals - prev_state.literals:
        if lit.name == "transaction-amount":
            return float(lit.value)
    # fall back to the trailing amount argument
    try:
        return float(Fraction(step.action.args[-1]))
    except (ValueError, ZeroDivisionError):
        return 0.0


def prefix_examples(traces: list[Trace]) -> tuple[np.ndarray, np.ndarray]:
    """One example per prefix length per trace; labels inherited."""
    rows, labels = [], []
    for trace in traces:
        if trace.label is None:
            raise ValueError("baseline training needs labeled traces")
        for j in range(len(trace.steps) + 1):
            rows.append(featurize_prefix(trace, j))
            labels.append(trace.label)
    return np.vstack(rows), np.asarray(labels)


# --- CART ----------------------------------------------------------------------


@dataclass
class _Node:
    feature: int = -1
    threshold: float = 0.0
    left: "_Node | None" = None
    right: "_Node | None" = None
    label: str | None = None


@dataclass(frozen=True, slots=True)
class TreeParams:
    max_depth: int = 8
    min_leaf: int = 2


class Tree:
    """Greedy binary CART with Gini impurity and deterministic ties."""

    def __init__(self, root: _Node, classes: tuple[str, ...]):
        self.root = root
        self.classes = classes

    def predict(self, fv: np.ndarray) -> str:
        node = self.root
        while node.label is None:
            node = node.left if fv[node.feature] <= node.threshold else node.right
        return node.label

    def depth(self) -> int:
        def walk(node):
            if node.label is not None:
                return 0
            return 1 + max(walk(node.left), walk(node.right))

        return walk(self.root)


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - (p * p).sum())


def _majority(y_idx: np.ndarray, classes) -> str:
    counts = np.bincount(y_idx, minlength=len(classes))
    # tie: lexicographically smallest class, which is stable
    best = int(np.argmax(counts))
    return classes[best]


def _best_split(X: np.ndarray, y_idx: np.ndarray, n_classes: int, min_leaf: int):
    n = len(y_idx)
    parent = _gini(np.bincount(y_idx, minlength=n_classes))
    best = None  # (impurity, feature, threshold)
    for feature in range(X.shape[1]):
        column = X[:, feature]
        order = np.argsort(column, kind="stable")
        sorted_vals = column[order]
        sorted_y = y_idx[order]
        one_hot = np.zeros((n, n_classes))
        one_hot[np.arange(n), sorted_y] = 1.0
        left_counts = np.cumsum(one_hot, axis=0)
        total = left_counts[-1]
        boundaries = np.flatnonzero(sorted_vals[:-1] != sorted_vals[1:])
        for b in boundaries:
            n_left = b + 1
            n_right = n - n_left
            if n_left < min_leaf or n_right < min_leaf:
                continue
            lc = left_counts[b]
            rc = total - lc
            impurity = (n_left / n) * _gini(lc) + (n_right / n) * _gini(rc)
            if impurity < parent - 1e-12 and (best is None or impurity < best[0] - 1e-12):
                threshold = float((sorted_vals[b] + sorted_vals[b + 1]) / 2.0)
                best = (impurity, feature, threshold)
    return best


def train_tree(X: np.ndarray, y: np.ndarray, params: TreeParams = TreeParams()) -> Tree:
    """Fit a depth-limited CART; needs at least one example per class."""
    classes = tuple(sorted(set(y)))
    if len(classes) < 2:
        raise ValueError("training needs at least one example per class")
    index = {c: i for i, c in enumerate(classes)}
    y_idx = np.asarray([index[v] for v in y])

    def grow(rows: np.ndarray, depth: int) -> _Node:
        sub_y = y_idx[rows]
        counts = np.bincount(sub_y, minlength=len(classes))
        if depth >= params.max_depth or len(rows) < 2 * params.min_leaf or _gini(counts) == 0.0:
            return _Node(label=_majority(sub_y, classes))
        split = _best_split(X[rows], sub_y, len(classes), params.min_leaf)
        if split is None:
            return _Node(label=_majority(sub_y, classes))
        _, feature, threshold = split
        mask = X[rows, feature] <= threshold
        left = grow(rows[mask], depth + 1)
        right = grow(rows[~mask], depth + 1)
        return _Node(feature=feature, threshold=threshold, left=left, right=right)

    root = grow(np.arange(len(y_idx)), 0)
    return Tree(root, classes)


def predict_tree(tree: Tree, fv: np.ndarray) -> str:
    return tree.predict(fv)


def classify_online_tree(tree: Tree, trace: Trace):
    """Per-prefix tree predictions wrapped as an OnlineResult."""
    from .classifier import OnlineResult, convergence_step

    labels = tuple(
        tree.predict(featurize_prefix(trace, j)) for j in range(len(trace.steps) + 1)
    )
    return OnlineResult(
        labels=labels,
        nearest_case_ids=tuple(-1 for _ in labels),
        nearest_distances=tuple(0.0 for _ in labels),
        final_label=labels[-1],
        convergence_step=convergence_step(labels),
    )
