"""Brute-force reference implementation used only by the test suite.

Everything here is deliberately naive and independent of the package:
trees are generated by a direct recursion over nested lists, medians come
from ``statistics.median``, patients are routed one at a time, and the
Beta-Bernoulli marginal likelihood is computed with exact rational
arithmetic (rising factorials over ``fractions.Fraction``), so posterior
weights and predictive probabilities are exact up to one final float
conversion.
"""

from __future__ import annotations

import statistics
from fractions import Fraction
from itertools import product


def gen_trees(n_markers: int, rounds_left: int) -> list:
    """All split trees: 'leaf' or ['split', k, lower, upper]."""
    if rounds_left == 0:
        return ["leaf"]
    trees = ["leaf"]
    subs = gen_trees(n_markers, rounds_left - 1)
    for k in range(n_markers):
        for lo in subs:
            for up in subs:
                trees.append(["split", k, lo, up])
    return trees


def tree_serialize(tree) -> str:
    if tree == "leaf":
        return "L"
    _, k, lo, up = tree
    return f"({k + 1} {tree_serialize(lo)} {tree_serialize(up)})"


def tree_markers(tree) -> set:
    if tree == "leaf":
        return set()
    _, k, lo, up = tree
    return {k} | tree_markers(lo) | tree_markers(up)


def tree_prior(tree, v: list[Fraction], phi: Fraction, max_rounds: int) -> Fraction:
    """Unnormalized prior weight: one v factor per decision, phi per marker."""

    def walk(node, depth) -> Fraction:
        if depth == max_rounds:
            return Fraction(1)
        if node == "leaf":
            return v[0]
        _, k, lo, up = node
        return v[k + 1] * walk(lo, depth + 1) * walk(up, depth + 1)

    return walk(tree, 0) * phi ** len(tree_markers(tree))


def bind(tree, rows: list[int], X) -> object:
    """Attach conditional medians; empty subsets get threshold 0."""
    if tree == "leaf":
        return {"kind": "leaf", "rows": list(rows)}
    _, k, lo, up = tree
    values = [X[i][k] for i in rows]
    threshold = statistics.median(values) if values else 0.0
    lo_rows = [i for i in rows if X[i][k] < threshold]
    up_rows = [i for i in rows if X[i][k] >= threshold]
    return {
        "kind": "split",
        "marker": k,
        "threshold": threshold,
        "lower": bind(lo, lo_rows, X),
        "upper": bind(up, up_rows, X),
    }


def collect_leaves(bound) -> list[dict]:
    if bound["kind"] == "leaf":
        return [bound]
    return collect_leaves(bound["lower"]) + collect_leaves(bound["upper"])


def leaf_for_point(bound, x) -> dict:
    while bound["kind"] == "split":
        if x[bound["marker"]] >= bound["threshold"]:
            bound = bound["upper"]
        else:
            bound = bound["lower"]
    return bound


def beta_ratio(a: Fraction, b: Fraction, s: int, f: int) -> Fraction:
    """B(a+s, b+f) / B(a, b) via rising factorials; exact for rational a, b."""
    num = Fraction(1)
    for j in range(s):
        num *= a + j
    for j in range(f):
        num *= b + j
    den = Fraction(1)
    for j in range(s + f):
        den *= a + b + j
    return num / den


def marginal_likelihood(bound, X, arms, y, n_arms, a: Fraction, b: Fraction) -> Fraction:
    like = Fraction(1)
    for leaf in collect_leaves(bound):
        for t in range(n_arms):
            s = sum(1 for i in leaf["rows"] if arms[i] == t and y[i] == 1)
            f = sum(1 for i in leaf["rows"] if arms[i] == t and y[i] == 0)
            like *= beta_ratio(a, b, s, f)
    return like


class OraclePosterior:
    """Exact posterior over all trees for a small fixture."""

    def __init__(self, n_markers, max_rounds, X, arms, y, n_arms,
                 v=None, phi=Fraction(1, 2), a=Fraction(1), b=Fraction(1)):
        self.n_markers = n_markers
        self.n_arms = n_arms
        self.a, self.b = a, b
        self.X, self.arms, self.y = X, arms, y
        if v is None:
            v = [Fraction(1, n_markers + 1)] * (n_markers + 1)
        trees = gen_trees(n_markers, max_rounds)
        rows = list(range(len(X)))
        self.bound = [bind(t, rows, X) for t in trees]
        self.serials = [tree_serialize(t) for t in trees]
        priors = [tree_prior(t, v, phi, max_rounds) for t in trees]
        total = sum(priors)
        self.priors = [p / total for p in priors]
        likes = [
            marginal_likelihood(bd, X, arms, y, n_arms, a, b)
            for bd in self.bound
        ]
        raw = [p * l for p, l in zip(self.priors, likes)]
        z = sum(raw)
        self.weights = [w / z for w in raw]

    def weight_by_serial(self) -> dict[str, float]:
        return {s: float(w) for s, w in zip(self.serials, self.weights)}

    def prior_by_serial(self) -> dict[str, float]:
        return {s: float(p) for s, p in zip(self.serials, self.priors)}

    def predictive(self, x, t) -> float:
        q = Fraction(0)
        for bd, w in zip(self.bound, self.weights):
            leaf = leaf_for_point(bd, x)
            s = sum(1 for i in leaf["rows"] if self.arms[i] == t and self.y[i] == 1)
            f = sum(1 for i in leaf["rows"] if self.arms[i] == t and self.y[i] == 0)
            q += w * (self.a + s) / (self.a + self.b + s + f)
        return float(q)

    def co_clustering(self, i: int, j: int) -> float:
        g = Fraction(0)
        for bd, w in zip(self.bound, self.weights):
            for leaf in collect_leaves(bd):
                if i in leaf["rows"] and j in leaf["rows"]:
                    g += w
                    break
        return float(g)


def grid_points(n_markers: int, per_dim: int = 3, lo=-1.0, hi=1.0):
    """Small deterministic query grid for comparing predictive surfaces."""
    if per_dim == 1:
        axis = [0.0]
    else:
        axis = [lo + (hi - lo) * i / (per_dim - 1) for i in range(per_dim)]
    return [list(p) for p in product(axis, repeat=n_markers)]
