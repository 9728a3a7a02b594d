"""Random forest over fusion feature vectors, built from scratch.

Plain CART trees on bootstrap samples: Gini-impurity splits over a random
feature subset (floor(sqrt(n_features)) = 2 of the 5), grown until nodes
are pure or too small. Trees are stored as parallel node arrays so models
serialize to explicit JSON and evaluate without recursion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["NUM_FEATURES", "DEFAULT_TREE_COUNT", "DecisionTree", "ForestModel", "train_forest", "classify"]

NUM_FEATURES = 5
DEFAULT_TREE_COUNT = 50


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """Binary tree as parallel arrays; node 0 is the root.

    Internal nodes carry (feature, threshold, left, right) and leaf_class
    -1; leaves carry leaf_class 0/1 and -1 elsewhere. Samples with
    feature value <= threshold go left.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_class: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "feature", np.asarray(self.feature, dtype=int))
        object.__setattr__(self, "threshold", np.asarray(self.threshold, dtype=float))
        object.__setattr__(self, "left", np.asarray(self.left, dtype=int))
        object.__setattr__(self, "right", np.asarray(self.right, dtype=int))
        object.__setattr__(self, "leaf_class", np.asarray(self.leaf_class, dtype=int))
        n = self.feature.size
        if not all(a.size == n for a in (self.threshold, self.left, self.right, self.leaf_class)):
            raise ValueError("node arrays must have equal length")
        internal = self.leaf_class < 0
        if np.any((self.feature[internal] < 0) | (self.feature[internal] >= NUM_FEATURES)):
            raise ValueError("internal node with out-of-range feature index")

    def predict(self, x: np.ndarray) -> int:
        node = 0
        while self.leaf_class[node] < 0:
            if x[self.feature[node]] <= self.threshold[node]:
                node = self.left[node]
            else:
                node = self.right[node]
        return int(self.leaf_class[node])

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "leaf_class": self.leaf_class.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        return cls(d["feature"], d["threshold"], d["left"], d["right"], d["leaf_class"])


@dataclass(frozen=True, eq=False)
class ForestModel:
    """Bagged decision trees with majority-vote classification."""

    trees: tuple[DecisionTree, ...]
    tree_count: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(self.trees))
        if len(self.trees) != self.tree_count:
            raise ValueError("tree_count must match the number of trees")

    def to_dict(self) -> dict:
        return {
            "tree_count": self.tree_count,
            "seed": self.seed,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ForestModel":
        return cls(tuple(DecisionTree.from_dict(t) for t in d["trees"]), d["tree_count"], d["seed"])


def _gini_costs(sorted_labels: np.ndarray) -> np.ndarray:
    """Weighted Gini impurity for every split position of a sorted node."""
    n = sorted_labels.size
    ones = np.cumsum(sorted_labels)
    left_n = np.arange(1, n)
    right_n = n - left_n
    left_ones = ones[:-1]
    right_ones = ones[-1] - left_ones
    p_l = left_ones / left_n
    p_r = right_ones / right_n
    gini_l = 1.0 - p_l**2 - (1.0 - p_l) ** 2
    gini_r = 1.0 - p_r**2 - (1.0 - p_r) ** 2
    return (left_n * gini_l + right_n * gini_r) / n


class _TreeBuilder:
    def __init__(self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator, n_split_features: int):
        self.X = X
        self.y = y
        self.rng = rng
        self.n_split_features = n_split_features
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.leaf_class: list[int] = []

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.leaf_class.append(-1)
        return len(self.feature) - 1

    def _make_leaf(self, node: int, labels: np.ndarray) -> None:
        # Majority class; exact ties resolve to non-shot.
        self.leaf_class[node] = int(np.sum(labels) * 2 > labels.size)

    def build(self, indices: np.ndarray) -> int:
        # Iterative preorder so degenerate trees cannot hit the recursion limit.
        root = self._new_node()
        stack = [(indices, root)]
        while stack:
            node_indices, node = stack.pop()
            labels = self.y[node_indices]
            if node_indices.size < 2 or np.all(labels == labels[0]):
                self._make_leaf(node, labels)
                continue

            n_feats = self.X.shape[1]
            chosen = self.rng.choice(n_feats, size=min(self.n_split_features, n_feats), replace=False)
            best = None  # (cost, feature, threshold, order, split_pos)
            for f in chosen:
                values = self.X[node_indices, f]
                order = np.argsort(values, kind="stable")
                xs = values[order]
                valid = xs[1:] > xs[:-1]
                if not np.any(valid):
                    continue
                costs = _gini_costs(self.y[node_indices[order]])
                costs = np.where(valid, costs, np.inf)
                pos = int(np.argmin(costs))
                if best is None or costs[pos] < best[0]:
                    thr = 0.5 * (xs[pos] + xs[pos + 1])
                    best = (float(costs[pos]), int(f), thr, order, pos)

            if best is None:
                self._make_leaf(node, labels)
                continue

            _, f, thr, order, pos = best
            self.feature[node] = f
            self.threshold[node] = thr
            left = self._new_node()
            right = self._new_node()
            self.left[node] = left
            self.right[node] = right
            # Push right first so the left subtree is laid out next (preorder).
            stack.append((node_indices[order[pos + 1 :]], right))
            stack.append((node_indices[order[: pos + 1]], left))
        return root

    def tree(self) -> DecisionTree:
        return DecisionTree(self.feature, self.threshold, self.left, self.right, self.leaf_class)


def train_forest(candidates, tree_count: int = DEFAULT_TREE_COUNT, seed: int = 0) -> ForestModel:
    """Fit a forest on (Candidate, label) pairs.

    Each tree sees a bootstrap sample of the full training size; splits
    consider 2 random features. Per-tree generators derive deterministically
    from the root seed, so results are reproducible (and trees could be
    trained in parallel without changing the model).
    """
    X = np.array([np.asarray(c.features, dtype=float) for c, _ in candidates])
    y = np.array([int(label) for _, label in candidates])
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("no training candidates")
    if np.all(y == y[0]):
        raise ValueError("degenerate training set")

    n = X.shape[0]
    n_split = max(1, int(np.sqrt(X.shape[1])))
    trees = []
    for k in range(tree_count):
        rng = np.random.default_rng([seed, k])
        sample = rng.integers(0, n, size=n)
        builder = _TreeBuilder(X[sample], y[sample], rng, n_split)
        builder.build(np.arange(n))
        trees.append(builder.tree())
    return ForestModel(tuple(trees), tree_count, seed)


def classify(model: ForestModel, candidate) -> tuple[int, float]:
    """Majority vote over the trees.

    Returns (label, score) where score is the fraction of trees voting
    shot; an exact tie counts as non-shot.
    """
    x = np.asarray(candidate.features, dtype=float)
    votes = sum(tree.predict(x) for tree in model.trees)
    score = votes / model.tree_count
    return (1 if score > 0.5 else 0), float(score)
