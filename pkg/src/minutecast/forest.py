"""Regression trees, circular block bootstrap, and forest averaging.

Trees are grown by greedy recursive partitioning: at each node the
candidate (column, threshold) pair minimizing the summed squared error
of the two children wins, with thresholds taken as midpoints between
consecutive distinct sorted values.  Ties break toward the lowest column
index and then the lowest threshold, which makes growth deterministic
given the feature-subset draws.

Node positions follow the heap convention: the children of position j
sit at 2j+1 and 2j+2.  A tree also carries its leaf-basis reading: each
leaf's basis function is the literal product of path indicators, and
exactly one basis function is 1 at any input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import FrozenSet, List, Optional, Tuple, Union

import numpy as np

from .errors import ConfigError, FitError, ShapeError

__all__ = [
    "Forest",
    "ForestConfig",
    "Leaf",
    "Split",
    "Tree",
    "TreeNode",
    "block_bootstrap_indices",
    "grow_tree",
    "leaf_basis",
    "predict_from_basis",
    "rf_fit",
    "rf_predict",
    "tree_predict",
]


@dataclass(frozen=True)
class Leaf:
    """Terminal region: predicts the mean of its routed training targets."""

    value: float
    n_samples: int


@dataclass(frozen=True)
class Split:
    """Internal node: x[split_var] <= threshold routes left."""

    split_var: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Union[Leaf, Split]


@dataclass(frozen=True)
class Tree:
    root: TreeNode
    n_features: int

    def _positions(self) -> Tuple[FrozenSet[int], FrozenSet[int]]:
        parents, leaves = set(), set()
        stack = [(self.root, 0)]
        while stack:
            node, pos = stack.pop()
            if isinstance(node, Leaf):
                leaves.add(pos)
            else:
                parents.add(pos)
                stack.append((node.left, 2 * pos + 1))
                stack.append((node.right, 2 * pos + 2))
        return frozenset(parents), frozenset(leaves)

    @property
    def parent_positions(self) -> FrozenSet[int]:
        """Heap positions of the internal nodes."""
        return self._positions()[0]

    @property
    def leaf_positions(self) -> FrozenSet[int]:
        """Heap positions of the terminal nodes."""
        return self._positions()[1]

    @property
    def n_leaves(self) -> int:
        return len(self._positions()[1])


@dataclass(frozen=True)
class ForestConfig:
    """Forest hyperparameters.

    max_features counts candidate columns per split; None resolves to
    max(1, ceil(k/3)) at fit time.  feature_mode selects whether the
    random subset is redrawn at every split or fixed once per tree.
    """

    n_trees: int = 100
    min_leaf: int = 3
    max_features: Optional[int] = None
    block_length: int = 5
    feature_mode: str = "per-split"
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ConfigError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.min_leaf < 1:
            raise ConfigError(f"min_leaf must be >= 1, got {self.min_leaf}")
        if self.max_features is not None and self.max_features < 1:
            raise ConfigError(f"max_features must be >= 1, got {self.max_features}")
        if self.block_length < 1:
            raise ConfigError(f"block_length must be >= 1, got {self.block_length}")
        if self.feature_mode not in ("per-split", "per-tree"):
            raise ConfigError(f"feature_mode must be per-split or per-tree, got {self.feature_mode!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")

    def resolve_max_features(self, n_columns: int) -> int:
        if self.max_features is None:
            return max(1, math.ceil(n_columns / 3))
        if self.max_features > n_columns:
            raise ConfigError(
                f"max_features={self.max_features} exceeds {n_columns} available columns"
            )
        return self.max_features


@dataclass(frozen=True)
class Forest:
    trees: Tuple[Tree, ...]
    config: ForestConfig


def _best_split(X, y, min_leaf: int, columns):
    """Lowest-SSE (column, threshold) over midpoint candidates, or None.

    Iterates columns ascending with thresholds ascending inside each, and
    improves only on strictly smaller SSE, so the first optimum wins.
    """
    m = y.shape[0]
    best = None
    for col in columns:
        order = np.argsort(X[:, col])
        xv = X[order, col]
        ys = y[order]
        cs = np.cumsum(ys)
        cq = np.cumsum(ys * ys)
        total_s = cs[-1]
        total_q = cq[-1]
        cut = np.nonzero(xv[:-1] < xv[1:])[0]  # split after these positions
        if cut.size == 0:
            continue
        nl = cut + 1
        nr = m - nl
        valid = (nl >= min_leaf) & (nr >= min_leaf)
        if not valid.any():
            continue
        cut = cut[valid]
        nl = nl[valid]
        nr = nr[valid]
        sl = cs[cut]
        ql = cq[cut]
        sse = (ql - sl * sl / nl) + ((total_q - ql) - (total_s - sl) ** 2 / nr)
        pick = int(np.argmin(sse))  # first index on ties: lowest threshold
        if best is None or sse[pick] < best[0]:
            thr = 0.5 * (xv[cut[pick]] + xv[cut[pick] + 1])
            best = (float(sse[pick]), int(col), float(thr))
    return best


def _grow(X, y, min_leaf: int, max_features: int, rng) -> TreeNode:
    m = y.shape[0]
    if m < 2 * min_leaf or np.all(y == y[0]):
        return Leaf(value=float(y.mean()), n_samples=m)
    k = X.shape[1]
    if max_features < k:
        columns = np.sort(rng.choice(k, size=max_features, replace=False))
    else:
        columns = np.arange(k)
    best = _best_split(X, y, min_leaf, columns)
    if best is None:
        return Leaf(value=float(y.mean()), n_samples=m)
    _, col, thr = best
    mask = X[:, col] <= thr
    return Split(
        split_var=col,
        threshold=thr,
        left=_grow(X[mask], y[mask], min_leaf, max_features, rng),
        right=_grow(X[~mask], y[~mask], min_leaf, max_features, rng),
    )


def grow_tree(X, y, config: ForestConfig, rng) -> Tree:
    """Grow one CART regression tree.

    Splitting stops when a node is pure, has fewer than 2*min_leaf rows,
    or no threshold leaves min_leaf rows on both sides; such nodes become
    leaves predicting their target mean (never an error).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise ShapeError(f"X must be 2-D, got ndim={X.ndim}")
    if y.shape != (X.shape[0],):
        raise ShapeError(f"y shape {y.shape} does not match {X.shape[0]} rows")
    if y.shape[0] < 1:
        raise FitError("cannot grow a tree from zero rows")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise FitError("non-finite values in tree training data")
    mf = config.resolve_max_features(X.shape[1])
    return Tree(root=_grow(X, y, config.min_leaf, mf, rng), n_features=X.shape[1])


def tree_predict(tree: Tree, x) -> float:
    """Route x down the tree (<= goes left) and return its leaf mean."""
    x = np.asarray(x, dtype=float)
    if x.shape != (tree.n_features,):
        raise ShapeError(f"expected vector of length {tree.n_features}, got shape {x.shape}")
    node = tree.root
    while isinstance(node, Split):
        node = node.left if x[node.split_var] <= node.threshold else node.right
    return node.value


def _leaf_paths(tree: Tree) -> List[Tuple[int, Leaf, Tuple[Tuple[int, float, bool], ...]]]:
    """Leaves in ascending heap-position order with their path conditions.

    Each condition is (split_var, threshold, went_left).
    """
    found = []

    def walk(node, pos, conds):
        if isinstance(node, Leaf):
            found.append((pos, node, tuple(conds)))
            return
        walk(node.left, 2 * pos + 1, conds + [(node.split_var, node.threshold, True)])
        walk(node.right, 2 * pos + 2, conds + [(node.split_var, node.threshold, False)])

    walk(tree.root, 0, [])
    found.sort(key=lambda item: item[0])
    return found


def leaf_basis(tree: Tree, x) -> np.ndarray:
    """Evaluate every leaf's basis function at x, in heap-position order.

    Computed as the literal product of path indicators rather than by
    routing, so it independently witnesses the partition-of-unity
    property of the tree.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (tree.n_features,):
        raise ShapeError(f"expected vector of length {tree.n_features}, got shape {x.shape}")
    values = np.empty(tree.n_leaves)
    for i, (_, _, conds) in enumerate(_leaf_paths(tree)):
        prod = 1.0
        for var, thr, went_left in conds:
            indicator = 1.0 if x[var] <= thr else 0.0
            prod *= indicator if went_left else 1.0 - indicator
        values[i] = prod
    return values


def predict_from_basis(tree: Tree, x) -> float:
    """Evaluate the tree as a weighted sum of leaf basis functions."""
    basis = leaf_basis(tree, x)
    betas = np.array([leaf.value for _, leaf, _ in _leaf_paths(tree)])
    return float(basis @ betas)


def block_bootstrap_indices(n: int, block_length: int, rng) -> np.ndarray:
    """Circular block bootstrap: concatenated wrapped blocks, truncated to n.

    Each block starts uniformly in [0, n) and runs block_length positions
    modulo n, so every observation has equal inclusion probability.
    """
    if n < 1:
        raise ValueError(f"need at least one observation, got n={n}")
    if block_length < 1:
        raise ValueError(f"block_length must be >= 1, got {block_length}")
    out = np.empty(n, dtype=np.intp)
    filled = 0
    while filled < n:
        start = int(rng.integers(0, n))
        take = min(block_length, n - filled)
        out[filled : filled + take] = (start + np.arange(take)) % n
        filled += take
    return out


def _remap_columns(node: TreeNode, columns: np.ndarray) -> TreeNode:
    if isinstance(node, Leaf):
        return node
    return Split(
        split_var=int(columns[node.split_var]),
        threshold=node.threshold,
        left=_remap_columns(node.left, columns),
        right=_remap_columns(node.right, columns),
    )


def rf_fit(X, y, config: ForestConfig) -> Forest:
    """Fit a forest: per tree, one block-bootstrap draw, then growth.

    Tree b owns an independent generator spawned from the master seed, and
    always consumes its draws in the same order (bootstrap rows first,
    then feature subsets), so the forest is reproducible run to run. In
    per-tree mode the subset is drawn once and the tree grows on that
    column slice, with split variables remapped to original indices.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise ShapeError(f"X must be 2-D, got ndim={X.ndim}")
    if y.shape != (X.shape[0],):
        raise ShapeError(f"y shape {y.shape} does not match {X.shape[0]} rows")
    if y.shape[0] < 1:
        raise FitError("cannot fit a forest on zero rows")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise FitError("non-finite values in forest training data")
    n, k = X.shape
    mf = config.resolve_max_features(k)

    trees = []
    for child in np.random.SeedSequence(config.seed).spawn(config.n_trees):
        rng = np.random.default_rng(child)
        rows = block_bootstrap_indices(n, config.block_length, rng)
        Xb = X[rows]
        yb = y[rows]
        if config.feature_mode == "per-tree":
            columns = np.sort(rng.choice(k, size=mf, replace=False))
            sub_config = replace(config, max_features=mf)
            sub = grow_tree(Xb[:, columns], yb, sub_config, rng)
            trees.append(Tree(root=_remap_columns(sub.root, columns), n_features=k))
        else:
            trees.append(grow_tree(Xb, yb, config, rng))
    return Forest(trees=tuple(trees), config=config)


def rf_predict(forest: Forest, x) -> float:
    """Arithmetic mean of the tree predictions at x."""
    return float(np.mean([tree_predict(tree, x) for tree in forest.trees]))
