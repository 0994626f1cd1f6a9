"""Binary classifiers for verdict prediction, built from scratch.

The main model is gradient-boosted regression trees on logistic loss with
exact greedy splits.  Features are permutation rows (1-based module index
per position), so every feature takes one of N integer values and the
split search can aggregate gradient histograms per value exactly.
Internally each tree also sees the row's inverse view (the 1-based
position of every module): verdicts over recomposed chains are mostly
order predicates, which threshold cleanly on positions-of-modules but
poorly on modules-at-positions.  A one-hot logistic regression trained by
batch gradient descent serves as the linear baseline.

Everything here is deterministic: rows are canonically sorted before any
floating-point accumulation, there is no subsampling, and split ties break
toward the lowest feature index, then the lowest threshold.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

LOG_ODDS_CLAMP = 15.0  # degenerate single-class models sit at +/- this margin


@dataclass(frozen=True)
class FeatureRow:
    """One labeled revision: x[i] is the 1-based original index of the
    module at position i."""

    x: tuple[int, ...]
    label: bool

    def __post_init__(self):
        if sorted(self.x) != list(range(1, len(self.x) + 1)):
            raise ValueError(f"not a 1-based permutation row: {self.x}")


@dataclass(frozen=True)
class GbtParams:
    trees: int = 100
    depth: int = 6
    eta: float = 0.1
    reg_lambda: float = 1.0
    min_child_weight: float = 1.0


@dataclass
class TreeNode:
    """Axis-aligned split (x[feature] <= threshold goes left) or a leaf."""

    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    leaf_value: float | None = None

    def predict_one(self, x) -> float:
        node = self
        while node.leaf_value is None:
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node.leaf_value

    def to_dict(self) -> dict:
        if self.leaf_value is not None:
            return {"leaf": self.leaf_value}
        return {"feature": self.feature, "threshold": self.threshold,
                "left": self.left.to_dict(), "right": self.right.to_dict()}

    @staticmethod
    def from_dict(d: dict) -> "TreeNode":
        if "leaf" in d:
            return TreeNode(leaf_value=float(d["leaf"]))
        return TreeNode(feature=int(d["feature"]), threshold=float(d["threshold"]),
                        left=TreeNode.from_dict(d["left"]),
                        right=TreeNode.from_dict(d["right"]))


def _augment_row(x) -> tuple[int, ...]:
    """Row plus its inverse view: feature N+m-1 is the position of module m."""
    inverse = [0] * len(x)
    for pos, module in enumerate(x):
        inverse[module - 1] = pos + 1
    return tuple(x) + tuple(inverse)


def _augment_matrix(X: np.ndarray) -> np.ndarray:
    return np.concatenate([X, np.argsort(X, axis=1) + 1], axis=1)


@dataclass
class GbtModel:
    n_features: int
    base_score: float                 # initial log-odds
    params: GbtParams
    trees: list[TreeNode] = field(default_factory=list)
    degenerate: bool = False
    train_losses: list[float] = field(default_factory=list)  # logloss per round

    def margin(self, x) -> float:
        row = _augment_row(x)
        raw = self.base_score
        for tree in self.trees:
            raw += self.params.eta * tree.predict_one(row)
        return raw

    def predict_proba(self, x) -> float:
        if len(x) != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {len(x)}")
        return _sigmoid(self.margin(x))


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _canonical_rows(rows) -> list[FeatureRow]:
    """Fixed accumulation order makes float sums row-order independent."""
    rows = list(rows)
    if not rows:
        raise ValueError("no training rows")
    n = len(rows[0].x)
    if any(len(r.x) != n for r in rows):
        raise ValueError("inconsistent feature lengths")
    return sorted(rows, key=lambda r: (r.x, r.label))


def _gain(gl, hl, gr, hr, lam):
    return gl * gl / (hl + lam) + gr * gr / (hr + lam) - \
        (gl + gr) ** 2 / (hl + hr + lam)


def _build_tree(X: np.ndarray, g: np.ndarray, h: np.ndarray,
                params: GbtParams) -> TreeNode:
    """Level-wise exact greedy tree via per-value gradient histograms.

    Feature values are integers 1..N, so per-(node, value) sums of g and h
    enumerate every possible threshold exactly.
    """
    n, n_feat = X.shape
    lam = params.reg_lambda
    vmax = int(X.max())
    n_values = vmax + 2  # values are 1..vmax; slot 0 unused
    root = TreeNode()
    node_of_row = np.zeros(n, dtype=np.int64)
    frontier = {0: root}
    for _depth in range(params.depth):
        if not frontier:
            break
        ids = sorted(frontier)
        remap = {nid: k for k, nid in enumerate(ids)}
        compact = np.full(max(ids) + 1, -1, dtype=np.int64)
        for nid, k in remap.items():
            compact[nid] = k
        rows_node = compact[node_of_row]
        active = rows_node >= 0
        k_nodes = len(ids)
        best = {nid: None for nid in ids}  # (gain, feature, threshold)
        for j in range(n_feat):
            key = rows_node[active] * n_values + X[active, j]
            gs = np.bincount(key, weights=g[active], minlength=k_nodes * n_values)
            hs = np.bincount(key, weights=h[active], minlength=k_nodes * n_values)
            gs = gs.reshape(k_nodes, n_values)
            hs = hs.reshape(k_nodes, n_values)
            gcum = np.cumsum(gs, axis=1)
            hcum = np.cumsum(hs, axis=1)
            gtot = gcum[:, -1]
            htot = hcum[:, -1]
            for k, nid in enumerate(ids):
                for v in range(1, vmax):  # threshold: x <= v
                    hl = hcum[k, v]
                    hr = htot[k] - hl
                    if hl < params.min_child_weight or hr < params.min_child_weight:
                        continue
                    gl = gcum[k, v]
                    gain = _gain(gl, hl, gtot[k] - gl, hr, lam)
                    cand = best[nid]
                    if cand is None or gain > cand[0]:
                        best[nid] = (gain, j, float(v))
        new_frontier = {}
        next_id = max(ids) * 2 + 2  # any fresh ids; uniqueness is all that matters
        for nid in ids:
            node = frontier[nid]
            cand = best[nid]
            mask = node_of_row == nid
            if cand is None or cand[0] <= 0.0:
                gsum = float(g[mask].sum())
                hsum = float(h[mask].sum())
                node.leaf_value = -gsum / (hsum + lam)
                continue
            _, j, thr = cand
            node.feature = j
            node.threshold = thr
            node.left = TreeNode()
            node.right = TreeNode()
            left_id, right_id = next_id, next_id + 1
            next_id += 2
            go_left = mask & (X[:, j] <= thr)
            go_right = mask & ~go_left
            node_of_row[go_left] = left_id
            node_of_row[go_right] = right_id
            new_frontier[left_id] = node.left
            new_frontier[right_id] = node.right
        frontier = new_frontier
    for nid, node in frontier.items():  # depth limit reached: close leaves
        mask = node_of_row == nid
        gsum = float(g[mask].sum())
        hsum = float(h[mask].sum())
        node.leaf_value = -gsum / (hsum + params.reg_lambda)
    return root


def _tree_margins(tree: TreeNode, X: np.ndarray) -> np.ndarray:
    out = np.empty(len(X))

    def walk(node: TreeNode, idx: np.ndarray):
        if node.leaf_value is not None:
            out[idx] = node.leaf_value
            return
        go_left = X[idx, node.feature] <= node.threshold
        walk(node.left, idx[go_left])
        walk(node.right, idx[~go_left])

    walk(tree, np.arange(len(X)))
    return out


def predict_margins(model: GbtModel, X: np.ndarray) -> np.ndarray:
    """Raw log-odds for a whole matrix of (unaugmented) rows at once."""
    Xa = _augment_matrix(X)
    raw = np.full(len(X), model.base_score)
    for tree in model.trees:
        raw += model.params.eta * _tree_margins(tree, Xa)
    return raw


def predict_proba_batch(model: GbtModel, X: np.ndarray) -> np.ndarray:
    if X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got {X.shape[1]}")
    return 1.0 / (1.0 + np.exp(-predict_margins(model, X)))


def train_gbt(rows, params: GbtParams = GbtParams()) -> GbtModel:
    """Fit boosting rounds on first/second-order gradients of logistic loss.

    Exactly params.trees rounds, no early stopping.  Single-class input
    yields a degenerate constant model at the (clamped) empirical base
    rate.
    """
    rows = _canonical_rows(rows)
    n_features = len(rows[0].x)
    X = _augment_matrix(np.array([r.x for r in rows], dtype=np.int64))
    y = np.array([1.0 if r.label else 0.0 for r in rows])
    pos = float(y.sum())
    if pos == 0.0 or pos == len(y):
        base = LOG_ODDS_CLAMP if pos else -LOG_ODDS_CLAMP
        return GbtModel(n_features=n_features, base_score=base, params=params,
                        degenerate=True)
    base = math.log(pos / (len(y) - pos))
    model = GbtModel(n_features=n_features, base_score=base, params=params)
    margins = np.full(len(y), base)
    for _round in range(params.trees):
        p = 1.0 / (1.0 + np.exp(-margins))
        tree = _build_tree(X, p - y, p * (1.0 - p), params)
        model.trees.append(tree)
        margins = margins + params.eta * _tree_margins(tree, X)
        p = 1.0 / (1.0 + np.exp(-margins))
        eps = 1e-15
        loss = float(-np.mean(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps)))
        model.train_losses.append(loss)
    return model


def predict(model: GbtModel, x) -> float:
    """Probability that the row's verdict is positive."""
    if isinstance(x, FeatureRow):
        x = x.x
    return model.predict_proba(x)


def model_to_json(model: GbtModel) -> str:
    doc = {
        "format": "gbt-model",
        "version": 1,
        "n_features": model.n_features,
        "base_score": model.base_score,
        "degenerate": model.degenerate,
        "params": {
            "trees": model.params.trees,
            "depth": model.params.depth,
            "eta": model.params.eta,
            "reg_lambda": model.params.reg_lambda,
            "min_child_weight": model.params.min_child_weight,
        },
        "trees": [t.to_dict() for t in model.trees],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def model_from_json(text: str) -> GbtModel:
    doc = json.loads(text)
    if doc.get("format") != "gbt-model" or doc.get("version") != 1:
        raise ValueError("unrecognized model document")
    params = GbtParams(**doc["params"])
    model = GbtModel(n_features=int(doc["n_features"]),
                     base_score=float(doc["base_score"]), params=params,
                     degenerate=bool(doc["degenerate"]))
    model.trees = [TreeNode.from_dict(t) for t in doc["trees"]]
    return model


# ---------------------------------------------------------------------------
# linear baseline

@dataclass(frozen=True)
class LogRegParams:
    iterations: int = 500
    step: float = 0.1


@dataclass
class LogRegModel:
    """Logistic regression over one-hot (position, module) indicators."""

    n_features: int                   # permutation length N
    weights: np.ndarray               # N*N one-hot weights + bias, last entry
    degenerate: bool = False

    def predict_proba(self, x) -> float:
        if len(x) != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {len(x)}")
        z = self.weights[-1]
        n = self.n_features
        for pos, module in enumerate(x):
            z += self.weights[pos * n + (module - 1)]
        return _sigmoid(float(z))


def _one_hot(X: np.ndarray) -> np.ndarray:
    n_rows, n = X.shape
    out = np.zeros((n_rows, n * n + 1))
    rows = np.arange(n_rows)
    for pos in range(n):
        out[rows, pos * n + (X[:, pos] - 1)] = 1.0
    out[:, -1] = 1.0
    return out


def train_logreg(rows, params: LogRegParams = LogRegParams()) -> LogRegModel:
    """Full-batch gradient descent from zero weights; bit-deterministic."""
    rows = _canonical_rows(rows)
    n_features = len(rows[0].x)
    y = np.array([1.0 if r.label else 0.0 for r in rows])
    pos = float(y.sum())
    if pos == 0.0 or pos == len(y):
        w = np.zeros(n_features * n_features + 1)
        w[-1] = LOG_ODDS_CLAMP if pos else -LOG_ODDS_CLAMP
        return LogRegModel(n_features=n_features, weights=w, degenerate=True)
    X = _one_hot(np.array([r.x for r in rows], dtype=np.int64))
    w = np.zeros(X.shape[1])
    for _ in range(params.iterations):
        p = 1.0 / (1.0 + np.exp(-(X @ w)))
        w = w - params.step * (X.T @ (p - y)) / len(y)
    return LogRegModel(n_features=n_features, weights=w)


# ---------------------------------------------------------------------------
# metrics

@dataclass(frozen=True)
class Metrics:
    """Threshold metrics at 0.5 plus rank-based AUC.

    A metric whose defining ratio is 0/0 is None and its name appears in
    `undefined`, except the vacuous perfect cases spelled out in
    `evaluate`.
    """

    accuracy: float
    auc: float | None
    precision: float | None
    recall: float | None
    f1: float | None
    undefined: frozenset[str] = frozenset()


def _rank_auc(scores: list[float], labels: list[bool]) -> float | None:
    pos = sum(labels)
    neg = len(labels) - pos
    if pos == 0 or neg == 0:
        return None
    order = sorted(range(len(scores)), key=lambda i: scores[i])
    ranks = [0.0] * len(scores)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        midrank = (i + j) / 2 + 1  # 1-based average rank of the tie block
        for k in range(i, j + 1):
            ranks[order[k]] = midrank
        i = j + 1
    rank_sum = sum(r for r, lab in zip(ranks, labels) if lab)
    return (rank_sum - pos * (pos + 1) / 2) / (pos * neg)


def evaluate(scored) -> Metrics:
    """Score/label pairs -> accuracy, AUC (midrank Mann-Whitney),
    precision, recall, F1 at threshold 0.5 (score > 0.5 is positive)."""
    scored = list(scored)
    if not scored:
        raise ValueError("nothing to evaluate")
    scores = [float(s) for s, _ in scored]
    labels = [bool(l) for _, l in scored]
    preds = [s > 0.5 for s in scores]
    tp = sum(1 for p, l in zip(preds, labels) if p and l)
    fp = sum(1 for p, l in zip(preds, labels) if p and not l)
    fn = sum(1 for p, l in zip(preds, labels) if not p and l)
    tn = len(labels) - tp - fp - fn
    undefined = set()

    accuracy = (tp + tn) / len(labels)
    if tp + fp > 0:
        precision = tp / (tp + fp)
    elif fn == 0:
        precision = 1.0  # nothing predicted positive and nothing was missed
    else:
        precision = None
        undefined.add("precision")
    if tp + fn > 0:
        recall = tp / (tp + fn)
    elif fp == 0:
        recall = 1.0
    else:
        recall = None
        undefined.add("recall")
    if precision is None or recall is None:
        f1 = None
        undefined.add("f1")
    elif precision + recall == 0:
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    auc = _rank_auc(scores, labels)
    if auc is None:
        undefined.add("auc")
    return Metrics(accuracy=accuracy, auc=auc, precision=precision,
                   recall=recall, f1=f1, undefined=frozenset(undefined))
