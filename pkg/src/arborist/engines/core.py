"""Greedy binary tree growth shared by every engine.

Each learner supplies a :class:`Criterion` that turns per-row statistics
into a node score. The gain of a split is
``factor * (score(left) + score(right) - score(parent))`` so CART impurity
decrease, variance reduction and the second-order boosting gain are all the
same search with different statistics.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

# Gains at or below this are treated as "no improvement".
MIN_GAIN = 1e-12


class Criterion:
    factor = 1.0
    # "one_vs_rest": categorical split isolates one level;
    # "ordered": levels sorted by order_key and split on a prefix.
    categorical_mode = "ordered"
    # accept splits whose gain is exactly zero (impure classification nodes
    # such as XOR, where no single split helps but a pair of them does)
    split_on_ties = False

    def score(self, sums: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def leaf_value(self, sums: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def child_ok(self, sums: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def order_key(self, sums: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def can_split(self, total: np.ndarray) -> bool:
        return True

    def gain(self, left: np.ndarray, right: np.ndarray, parent: np.ndarray) -> np.ndarray:
        return self.factor * (self.score(left) + self.score(right) - self.score(parent))


class GiniCriterion(Criterion):
    """Statistics: ``[w, w * onehot(class)]``."""

    categorical_mode = "one_vs_rest"
    split_on_ties = True

    def __init__(self, min_samples_leaf: float = 1.0) -> None:
        self.min_samples_leaf = min_samples_leaf

    def score(self, sums):
        # candidate children always carry positive weight
        return (sums[..., 1:] ** 2).sum(-1) / np.maximum(sums[..., 0], 1e-300)

    def leaf_value(self, sums):
        return sums[1:] / sums[0]

    def child_ok(self, sums):
        return sums[..., 0] >= max(self.min_samples_leaf, 1e-12)

    def can_split(self, total):
        return total[1:].max() < total[0]


class EntropyCriterion(GiniCriterion):
    def score(self, sums):
        w = sums[..., 0]
        c = sums[..., 1:]
        with np.errstate(divide="ignore", invalid="ignore"):
            clogc = np.where(c > 0, c * np.log(c), 0.0).sum(-1)
            wlogw = np.where(w > 0, w * np.log(w), 0.0)
        return clogc - wlogw


class VarianceCriterion(Criterion):
    """Statistics: ``[w, w * y]``; score is the SSE reduction term."""

    def __init__(self, min_samples_leaf: float = 1.0) -> None:
        self.min_samples_leaf = min_samples_leaf

    def score(self, sums):
        return sums[..., 1] ** 2 / np.maximum(sums[..., 0], 1e-300)

    def leaf_value(self, sums):
        return sums[1:2] / sums[0]

    def child_ok(self, sums):
        return sums[..., 0] >= max(self.min_samples_leaf, 1e-12)

    def order_key(self, sums):
        return sums[..., 1] / sums[..., 0]


class NewtonCriterion(Criterion):
    """Second-order boosting. Statistics: ``[count, g, h]``."""

    factor = 0.5

    def __init__(self, reg_lambda: float, learning_rate: float, min_child_weight: float) -> None:
        self.reg_lambda = reg_lambda
        self.learning_rate = learning_rate
        self.min_child_weight = min_child_weight

    def score(self, sums):
        return sums[..., 1] ** 2 / (sums[..., 2] + self.reg_lambda)

    def leaf_value(self, sums):
        return np.array([-self.learning_rate * sums[1] / (sums[2] + self.reg_lambda)])

    def child_ok(self, sums):
        return (sums[..., 0] >= 1) & (sums[..., 2] >= self.min_child_weight)

    def order_key(self, sums):
        return sums[..., 1] / (sums[..., 2] + self.reg_lambda)


def split_gain(gl: float, hl: float, gr: float, hr: float, reg_lambda: float) -> float:
    """Closed-form second-order split gain."""
    g, h = gl + gr, hl + hr
    return 0.5 * (gl**2 / (hl + reg_lambda) + gr**2 / (hr + reg_lambda) - g**2 / (h + reg_lambda))


@dataclass
class Tree:
    """Flat array representation of a fitted binary tree.

    ``cat_route[i, code]`` is 1 (left), 0 (right) or -1 (use
    ``default_left[i]``) for categorical splits; numeric splits send
    ``x <= threshold[i]`` left.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    is_categorical: np.ndarray
    default_left: np.ndarray
    cat_route: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    gain: np.ndarray
    output: int = 0  # which raw output this tree adds to (softmax boosting)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
        return int(depths.max()) if self.n_nodes else 0

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        n = X.shape[0]
        node = np.zeros(n, dtype=np.int64)
        active = np.arange(n)
        while active.size:
            nd = node[active]
            feat = self.feature[nd]
            inner = feat >= 0
            active, nd, feat = active[inner], nd[inner], feat[inner]
            if not active.size:
                break
            x = X[active, feat]
            go_left = x <= self.threshold[nd]
            cat = self.is_categorical[nd]
            if cat.any():
                codes = x[cat].astype(np.int64)
                cnodes = nd[cat]
                width = self.cat_route.shape[1]
                inside = (codes >= 0) & (codes < width)
                route = np.full(len(codes), -1, dtype=np.int8)
                route[inside] = self.cat_route[cnodes[inside], codes[inside]]
                go_left[cat] = np.where(route < 0, self.default_left[cnodes], route == 1)
            node[active] = np.where(go_left, self.left[nd], self.right[nd])
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def importance(self, n_features: int) -> np.ndarray:
        imp = np.zeros(n_features)
        inner = self.feature >= 0
        np.add.at(imp, self.feature[inner], self.gain[inner])
        return imp

    # Nested-node documents for the model JSON format.
    def to_json(self) -> dict:
        def node(i: int) -> dict:
            if self.feature[i] < 0:
                return {
                    "leaf": [float(v) for v in self.value[i]],
                    "n_samples": float(self.n_samples[i]),
                }
            doc = {
                "feature": int(self.feature[i]),
                "gain": float(self.gain[i]),
                "n_samples": float(self.n_samples[i]),
                "default_left": bool(self.default_left[i]),
            }
            if self.is_categorical[i]:
                route = self.cat_route[i]
                doc["left_levels"] = [int(c) for c in np.flatnonzero(route == 1)]
                doc["right_levels"] = [int(c) for c in np.flatnonzero(route == 0)]
            else:
                doc["threshold"] = float(self.threshold[i])
            doc["left"] = node(int(self.left[i]))
            doc["right"] = node(int(self.right[i]))
            return doc

        return {"output": self.output, "root": node(0)}

    @classmethod
    def from_json(cls, doc: dict) -> Tree:
        b = _TreeBuffer()

        def visit(d: dict) -> int:
            if "leaf" in d:
                return b.add_leaf(np.array(d["leaf"], dtype=float), d["n_samples"])
            i = b.add_leaf(np.zeros(0), d["n_samples"])
            left = visit(d["left"])
            right = visit(d["right"])
            if "threshold" in d:
                b.make_split(i, d["feature"], d["threshold"], None, d["default_left"], d["gain"], left, right)
            else:
                width = max(d["left_levels"] + d["right_levels"] + [-1]) + 1
                route = np.full(width, -1, dtype=np.int8)
                route[d["left_levels"]] = 1
                route[d["right_levels"]] = 0
                b.make_split(i, d["feature"], 0.0, route, d["default_left"], d["gain"], left, right)
            return i

        visit(doc["root"])
        return b.finish(output=doc.get("output", 0))


class _TreeBuffer:
    def __init__(self) -> None:
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.default_left: list[bool] = []
        self.routes: dict[int, np.ndarray] = {}
        self.value: list[np.ndarray] = []
        self.n_samples: list[float] = []
        self.gain: list[float] = []

    def add_leaf(self, value: np.ndarray, n_samples: float) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.default_left.append(True)
        self.value.append(value)
        self.n_samples.append(float(n_samples))
        self.gain.append(0.0)
        return len(self.feature) - 1

    def make_split(self, i, feature, threshold, route, default_left, gain, left, right) -> None:
        self.feature[i] = int(feature)
        self.threshold[i] = float(threshold)
        self.left[i] = left
        self.right[i] = right
        self.default_left[i] = bool(default_left)
        self.gain[i] = float(gain)
        if route is not None:
            self.routes[i] = route

    def finish(self, output: int = 0) -> Tree:
        n = len(self.feature)
        width = max([len(r) for r in self.routes.values()] + [1])
        cat_route = np.full((n, width), -1, dtype=np.int8)
        is_cat = np.zeros(n, dtype=bool)
        for i, r in self.routes.items():
            cat_route[i, : len(r)] = r
            is_cat[i] = True
        out_dim = max((len(v) for v in self.value), default=1)
        value = np.zeros((n, out_dim))
        for i, v in enumerate(self.value):
            if len(v):
                value[i] = v
        return Tree(
            feature=np.array(self.feature, dtype=np.int64),
            threshold=np.array(self.threshold, dtype=float),
            left=np.array(self.left, dtype=np.int64),
            right=np.array(self.right, dtype=np.int64),
            is_categorical=is_cat,
            default_left=np.array(self.default_left, dtype=bool),
            cat_route=cat_route,
            value=value,
            n_samples=np.array(self.n_samples, dtype=float),
            gain=np.array(self.gain, dtype=float),
            output=output,
        )


@dataclass
class _Split:
    gain: float
    feature: int
    threshold: float = 0.0
    route: np.ndarray | None = None
    left_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    right_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    default_left: bool = True


@dataclass
class GrowthSettings:
    max_depth: int | None = None
    max_leaves: int | None = None  # None: depth-first growth; else best-first
    mtry: int | None = None  # features drawn per node; None = all in pool
    feature_pool: np.ndarray | None = None  # per-tree column subsample


def _numeric_best(
    X: np.ndarray,
    S: np.ndarray,
    rows: np.ndarray,
    feats: np.ndarray,
    crit: Criterion,
    total: np.ndarray,
) -> list[tuple[float, int, float]]:
    """Best (gain, position, threshold) per numeric feature; gain -inf if none."""
    Xn = X[np.ix_(rows, feats)]
    order = np.argsort(Xn, axis=0, kind="stable")
    xs = np.take_along_axis(Xn, order, axis=0)
    Sn = S[rows]
    cum = np.cumsum(Sn[order], axis=0)[:-1]
    right = total - cum
    ok = (xs[1:] > xs[:-1]) & crit.child_ok(cum) & crit.child_ok(right)
    gain = crit.gain(cum, right, total)
    gain = np.where(ok, gain, -np.inf)
    pos = np.argmax(gain, axis=0)
    out = []
    for j in range(len(feats)):
        g = gain[pos[j], j]
        if not np.isfinite(g):
            out.append((-np.inf, -1, 0.0))
            continue
        lo, hi = xs[pos[j], j], xs[pos[j] + 1, j]
        thr = (lo + hi) / 2.0
        if not lo <= thr < hi:
            thr = lo
        out.append((float(g), int(pos[j]), float(thr)))
    return out


def _categorical_best(
    codes: np.ndarray,
    Sn: np.ndarray,
    n_levels: int,
    crit: Criterion,
    total: np.ndarray,
) -> tuple[float, np.ndarray | None]:
    """Best categorical split as (gain, route) with route[level] in {1, 0, -1}."""
    sums = np.zeros((n_levels, Sn.shape[1]))
    np.add.at(sums, codes, Sn)
    counts = np.bincount(codes, minlength=n_levels)
    present = np.flatnonzero(counts > 0)
    if len(present) < 2:
        return -np.inf, None
    if crit.categorical_mode == "one_vs_rest":
        left = sums[present]
        right = total - left
        candidates = [np.array([lv]) for lv in present]
    else:
        keys = crit.order_key(sums[present])
        ordered = present[np.argsort(keys, kind="stable")]
        left = np.cumsum(sums[ordered], axis=0)[:-1]
        right = total - left
        candidates = [ordered[: k + 1] for k in range(len(ordered) - 1)]
    ok = crit.child_ok(left) & crit.child_ok(right)
    gain = np.where(ok, crit.gain(left, right, total), -np.inf)
    best = int(np.argmax(gain))
    if not np.isfinite(gain[best]):
        return -np.inf, None
    route = np.zeros(n_levels, dtype=np.int8)
    if crit.categorical_mode == "ordered":
        route[:] = -1
        route[present] = 0
    route[candidates[best]] = 1
    return float(gain[best]), route


def grow_tree(
    X: np.ndarray,
    is_cat: np.ndarray,
    n_levels: np.ndarray,
    S: np.ndarray,
    crit: Criterion,
    settings: GrowthSettings,
    rng: np.random.Generator | None = None,
    rows: np.ndarray | None = None,
    output: int = 0,
) -> Tree:
    """Grow one tree on ``rows`` of ``X`` with per-row statistics ``S``.

    Categorical matrix columns hold integer level codes in ``[0, n_levels)``.
    """
    n, p = X.shape
    rows = np.arange(n) if rows is None else rows
    pool = np.arange(p) if settings.feature_pool is None else np.sort(settings.feature_pool)
    buf = _TreeBuffer()

    def best_split(node_rows: np.ndarray, total: np.ndarray) -> _Split | None:
        if len(node_rows) < 2 or not crit.can_split(total):
            return None
        parent_score = float(crit.score(total))
        feats = pool
        if settings.mtry is not None and settings.mtry < len(pool):
            feats = np.sort(rng.choice(pool, size=settings.mtry, replace=False))
        cat_mask = is_cat[feats]
        num_feats = feats[~cat_mask]
        per_feature: dict[int, tuple] = {}
        if len(num_feats):
            for f, res in zip(num_feats, _numeric_best(X, S, node_rows, num_feats, crit, total)):
                per_feature[int(f)] = ("num",) + res
        Sn = None
        for f in feats[cat_mask]:
            if Sn is None:
                Sn = S[node_rows]
            codes = X[node_rows, f].astype(np.int64)
            g, route = _categorical_best(codes, Sn, int(n_levels[f]), crit, total)
            per_feature[int(f)] = ("cat", g, route)
        best_f, best = None, None
        for f in sorted(per_feature):
            res = per_feature[f]
            if best is None or res[1] > best[1]:
                best_f, best = f, res
        tol = MIN_GAIN * max(1.0, abs(parent_score))
        if best is None or not (best[1] > tol or (crit.split_on_ties and best[1] >= -tol)):
            return None
        col = X[node_rows, best_f]
        if best[0] == "num":
            thr = best[3]
            go_left = col <= thr
            split = _Split(best[1], best_f, threshold=thr)
        else:
            route = best[2]
            c = col.astype(np.int64)
            r = route[c]
            n_left, n_right = int((r == 1).sum()), int((r == 0).sum())
            default_left = n_left >= n_right
            go_left = np.where(r < 0, default_left, r == 1)
            split = _Split(best[1], best_f, route=route, default_left=default_left)
        split.left_rows = node_rows[go_left]
        split.right_rows = node_rows[~go_left]
        if split.route is None:
            split.default_left = len(split.left_rows) >= len(split.right_rows)
        return split

    def new_leaf(node_rows: np.ndarray) -> tuple[int, np.ndarray]:
        total = S[node_rows].sum(axis=0)
        return buf.add_leaf(crit.leaf_value(total), total[0]), total

    def depth_ok(depth: int) -> bool:
        return settings.max_depth is None or depth < settings.max_depth

    def commit(i: int, split: _Split) -> tuple[tuple, tuple]:
        li, lt = new_leaf(split.left_rows)
        ri, rt = new_leaf(split.right_rows)
        buf.make_split(
            i, split.feature, split.threshold, split.route, split.default_left, split.gain, li, ri
        )
        return (li, split.left_rows, lt), (ri, split.right_rows, rt)

    root, root_total = new_leaf(rows)
    if settings.max_leaves is None:
        stack = [(root, rows, root_total, 0)]
        while stack:
            i, node_rows, total, depth = stack.pop()
            if not depth_ok(depth):
                continue
            split = best_split(node_rows, total)
            if split is None:
                continue
            left, right = commit(i, split)
            stack.append(right + (depth + 1,))
            stack.append(left + (depth + 1,))
    else:
        heap: list = []
        counter = 0

        def push(i, node_rows, total, depth):
            nonlocal counter
            if not depth_ok(depth):
                return
            split = best_split(node_rows, total)
            if split is not None:
                heapq.heappush(heap, (-split.gain, counter, i, split, depth))
                counter += 1

        push(root, rows, root_total, 0)
        n_leaves = 1
        while heap and n_leaves < settings.max_leaves:
            _, _, i, split, depth = heapq.heappop(heap)
            left, right = commit(i, split)
            n_leaves += 1
            push(*left, depth + 1)
            push(*right, depth + 1)
    return buf.finish(output=output)
