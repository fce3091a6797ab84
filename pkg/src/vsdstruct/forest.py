"""Random forest of CART trees (Gini, bagging, random feature subsets).

Defaults follow the common library defaults: 100 trees, sqrt(d) features
per split, unlimited depth, min_samples_split=2, bootstrap on.

Determinism: rows are put in a canonical order before sampling, and each
tree draws from its own stream seeded with (seed, tree index), so the fitted
forest depends only on the multiset of training rows and the seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import IO, Sequence

import numpy as np

FOREST_FORMAT_VERSION = 1


class ForestFormatError(ValueError):
    pass


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_features: int | None = None  # None means ceil(sqrt(d))
    min_samples_split: int = 2
    max_depth: int | None = None
    bootstrap: bool = True
    seed: int = 0

    def features_per_split(self, d: int) -> int:
        m = self.max_features if self.max_features is not None else math.ceil(math.sqrt(d))
        return min(max(m, 1), d)


@dataclass
class DecisionTree:
    feature: np.ndarray  # int32, -1 at leaves
    threshold: np.ndarray  # float64
    left: np.ndarray  # int32
    right: np.ndarray  # int32
    value: np.ndarray  # (n_nodes, n_classes) int64 class counts

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.feature[node[active]] >= 0]
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        counts = self.value[self.apply(X)].astype(float)
        return counts / counts.sum(axis=1, keepdims=True)

    def to_json(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": [float(t) for t in self.threshold],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> DecisionTree:
        return cls(
            np.asarray(obj["feature"], dtype=np.int32),
            np.asarray(obj["threshold"], dtype=np.float64),
            np.asarray(obj["left"], dtype=np.int32),
            np.asarray(obj["right"], dtype=np.int32),
            np.asarray(obj["value"], dtype=np.int64).reshape(len(obj["feature"]), -1),
        )


def best_split(
    X: np.ndarray, y: np.ndarray, n_classes: int, features: Sequence[int]
) -> tuple[int, float, float] | None:
    """Lowest-impurity (feature, threshold, impurity) over the given columns.

    Ties go to the lowest column index, then the lowest threshold.
    """
    n = len(y)
    if n < 2 or not len(features):
        return None
    cols = np.sort(np.asarray(features))
    Xs = X[:, cols]
    order = np.argsort(Xs, axis=0, kind="stable")
    sv = np.take_along_axis(Xs, order, axis=0)
    ys = y[order]
    onehot = ys[:, :, None] == np.arange(n_classes)
    cum = np.cumsum(onehot, axis=0, dtype=np.float64)
    left = cum[:-1]
    right = cum[-1:] - left
    nl = np.arange(1, n, dtype=np.float64)[:, None]
    nr = n - nl
    imp = nl - (left**2).sum(2) / nl + nr - (right**2).sum(2) / nr
    valid = sv[1:] > sv[:-1]
    if not valid.any():
        return None
    imp = np.where(valid, imp, np.inf)
    # column-major flatten: first minimum = lowest column, then lowest cut.
    # Equal partitions can differ in the last bits, so ties use a tolerance.
    flat = imp.T.ravel()
    k = int(np.flatnonzero(flat <= flat.min() + 1e-9)[0])
    c, p = divmod(k, n - 1)
    thr = (sv[p, c] + sv[p + 1, c]) / 2
    return int(cols[c]), float(thr), float(flat[k])


def _grow_tree(X: np.ndarray, y: np.ndarray, n_classes: int, cfg: ForestConfig, rng: np.random.Generator) -> DecisionTree:
    d = X.shape[1]
    m = cfg.features_per_split(d)
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[np.ndarray] = []

    def new_node(idx: np.ndarray) -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(np.bincount(y[idx], minlength=n_classes))
        return len(feature) - 1

    root = new_node(np.arange(len(y)))
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        counts = value[node]
        if len(idx) < cfg.min_samples_split or np.count_nonzero(counts) <= 1:
            continue
        if cfg.max_depth is not None and depth >= cfg.max_depth:
            continue
        perm = rng.permutation(d)
        split = None
        # keep drawing feature subsets until one of them is not constant here
        for start in range(0, d, m):
            split = best_split(X[idx], y[idx], n_classes, perm[start : start + m])
            if split is not None:
                break
        if split is None:
            continue
        f, thr, _ = split
        mask = X[idx, f] <= thr
        li, ri = idx[mask], idx[~mask]
        ln, rn = new_node(li), new_node(ri)
        feature[node], threshold[node], left[node], right[node] = f, thr, ln, rn
        stack.append((rn, ri, depth + 1))
        stack.append((ln, li, depth + 1))

    return DecisionTree(
        np.asarray(feature, dtype=np.int32),
        np.asarray(threshold, dtype=np.float64),
        np.asarray(left, dtype=np.int32),
        np.asarray(right, dtype=np.int32),
        np.vstack(value).astype(np.int64),
    )


class RandomForest:
    def __init__(self, config: ForestConfig | None = None):
        self.config = config or ForestConfig()
        self.classes_: np.ndarray | None = None
        self.n_features_: int | None = None
        self.trees: list[DecisionTree] = []

    def fit(self, X: Sequence[Sequence[float]] | np.ndarray, y: Sequence[int] | np.ndarray) -> RandomForest:
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        if X.ndim != 2 or len(X) == 0:
            raise ValueError("empty training data")
        if len(y) != len(X):
            raise ValueError("X and y differ in length")
        if np.isnan(X).any():
            raise ValueError("NaN in training features")
        if self.config.n_trees < 1:
            raise ValueError("n_trees must be at least 1")
        classes, y_enc = np.unique(y, return_inverse=True)
        # canonical row order, so the fit ignores input row order
        order = np.lexsort([y_enc] + [X[:, c] for c in range(X.shape[1] - 1, -1, -1)])
        X, y_enc = X[order], y_enc[order]
        self.classes_ = classes
        self.n_features_ = X.shape[1]
        self.trees = []
        n = len(X)
        for t in range(self.config.n_trees):
            rng = np.random.default_rng([self.config.seed, t])
            idx = rng.integers(0, n, n) if self.config.bootstrap else np.arange(n)
            self.trees.append(_grow_tree(X[idx], y_enc[idx], len(classes), self.config, rng))
        return self

    def _check(self, X) -> np.ndarray:
        if self.classes_ is None:
            raise ValueError("forest is not fitted")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features_:
            raise ValueError(f"row width {X.shape[1]} does not match training width {self.n_features_}")
        return X

    def predict_proba(self, X) -> np.ndarray:
        """Mean of per-tree leaf class frequencies, columns in ``classes_`` order."""
        X = self._check(X)
        total = np.zeros((len(X), len(self.classes_)))
        for tree in self.trees:
            total += tree.predict_proba(X)
        return total / len(self.trees)

    def predict(self, X) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    def proba_for(self, X, label) -> np.ndarray:
        """Probability column of one class label, zeros if it was never seen."""
        proba = self.predict_proba(X)
        hits = np.flatnonzero(self.classes_ == label)
        return proba[:, hits[0]] if hits.size else np.zeros(len(proba))

    # ------------------------------------------------------------------
    # serialization
    # ------------------------------------------------------------------

    def to_json(self) -> dict:
        if self.classes_ is None:
            raise ValueError("forest is not fitted")
        return {
            "format": "vsdstruct-forest",
            "version": FOREST_FORMAT_VERSION,
            "config": asdict(self.config),
            "classes": self.classes_.tolist(),
            "n_features": self.n_features_,
            "trees": [t.to_json() for t in self.trees],
        }

    @classmethod
    def from_json(cls, obj: dict) -> RandomForest:
        if not isinstance(obj, dict) or obj.get("format") != "vsdstruct-forest":
            raise ForestFormatError("not a forest document")
        if obj.get("version") != FOREST_FORMAT_VERSION:
            raise ForestFormatError(
                f"forest format version {obj.get('version')!r} is not supported (expected {FOREST_FORMAT_VERSION})"
            )
        try:
            forest = cls(ForestConfig(**obj["config"]))
            forest.classes_ = np.asarray(obj["classes"])
            forest.n_features_ = int(obj["n_features"])
            forest.trees = [DecisionTree.from_json(t) for t in obj["trees"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ForestFormatError(f"corrupt forest document: {exc}") from exc
        return forest

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))

    def save(self, stream: IO[str]) -> None:
        stream.write(self.dumps())

    @classmethod
    def load(cls, stream: IO[str] | str) -> RandomForest:
        text = stream if isinstance(stream, str) else stream.read()
        if not text.strip():
            raise ForestFormatError("empty forest stream")
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ForestFormatError(f"truncated or malformed forest stream: {exc.msg}") from exc
        return cls.from_json(obj)
