"""Partition enumeration, priors, thresholds, and routing."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from suba.errors import CatalogSizeError, DimensionMismatchError
from suba.partitions import (
    PartitionLayout,
    PriorParams,
    bind_thresholds,
    build_catalog,
    enumerate_layouts,
    export_catalog,
    import_catalog,
    layout_count,
    leaf_of,
    log_prior,
    parse_struct,
    serialize_struct,
)

from oracle import gen_trees, tree_prior, tree_serialize


# ---------------------------------------------------------------------------
# Enumeration


def test_count_k1_depth1():
    cat = enumerate_layouts(1, 1)
    assert cat.n_layouts == 2
    assert {lay.serialize() for lay in cat.layouts} == {"L", "(1 L L)"}


def test_count_k1_depth3_recurrence_and_exhaustive():
    assert layout_count(1, 3) == 26
    cat = enumerate_layouts(1, 3)
    assert cat.n_layouts == 26
    independent = {tree_serialize(t) for t in gen_trees(1, 3)}
    assert {lay.serialize() for lay in cat.layouts} == independent


@pytest.mark.parametrize(
    "k,depth", [(1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3), (3, 2), (3, 3), (4, 1)]
)
def test_counts_match_independent_generator(k, depth):
    cat = enumerate_layouts(k, depth)
    serials = [lay.serialize() for lay in cat.layouts]
    assert len(serials) == len(set(serials)), "duplicate layouts"
    assert set(serials) == {tree_serialize(t) for t in gen_trees(k, depth)}
    assert cat.n_layouts == layout_count(k, depth)


def test_count_k4_depth3():
    cat = enumerate_layouts(4, 3)
    assert cat.n_layouts == 40805
    assert layout_count(4, 3) == 40805
    serials = {lay.serialize() for lay in cat.layouts}
    assert len(serials) == 40805
    assert len({tree_serialize(t) for t in gen_trees(4, 3)}) == 40805


def test_enumeration_cap():
    with pytest.raises(CatalogSizeError):
        enumerate_layouts(4, 4)  # ~6.7e9 layouts
    # explicit cap override
    with pytest.raises(CatalogSizeError):
        enumerate_layouts(4, 3, cap=1000)


def test_layout_shape_invariants():
    cat = enumerate_layouts(2, 3)
    for lay in cat.layouts:
        assert 1 <= lay.n_leaves <= 2**3
        assert lay.depth() <= 3


# ---------------------------------------------------------------------------
# Prior weights


def fig_style_layout() -> PartitionLayout:
    # Root splits marker 1; its children split markers 1 and 2; in the last
    # round one grandchild splits marker 1 again, the rest stay terminal.
    struct = (
        0,
        (0, (0, None, None), None),
        (1, None, None),
    )
    return PartitionLayout(struct, n_markers=2, max_rounds=3)


def test_fig_style_prior_weight():
    params = PriorParams.uniform(2, phi=0.7)
    v = 1.0 / 3.0
    expected = math.log(v**3 * v * v**3) + 2 * math.log(0.7)
    # v1^3 * v2 * v0^3 * phi^2 with uniform v: all factors equal
    assert log_prior(fig_style_layout(), params) == pytest.approx(expected, abs=1e-12)


def test_trivial_layout_prior():
    params = PriorParams(split_probs=(0.4, 0.35, 0.25), phi=0.5, n_markers=2)
    lay = PartitionLayout(None, 2, 3)
    assert log_prior(lay, params) == pytest.approx(math.log(0.4), abs=1e-14)


def test_normalized_priors_k1_depth1():
    for phi in (0.3, 0.5, 1.0):
        params = PriorParams(split_probs=(0.5, 0.5), phi=phi, n_markers=1, max_rounds=1)
        cat = build_catalog(params)
        priors = {
            lay.serialize(): math.exp(lp)
            for lay, lp in zip(cat.layouts, cat.log_priors)
        }
        assert priors["L"] == pytest.approx(1 / (1 + phi), abs=1e-12)
        assert priors["(1 L L)"] == pytest.approx(phi / (1 + phi), abs=1e-12)


def test_normalized_priors_k2_depth1_phi_half():
    params = PriorParams.uniform(2, phi=0.5, max_rounds=1)
    cat = build_catalog(params)
    priors = {
        lay.serialize(): math.exp(lp) for lay, lp in zip(cat.layouts, cat.log_priors)
    }
    assert priors["L"] == pytest.approx(0.5, abs=1e-12)
    assert priors["(1 L L)"] == pytest.approx(0.25, abs=1e-12)
    assert priors["(2 L L)"] == pytest.approx(0.25, abs=1e-12)


@pytest.mark.parametrize("k,depth,phi", [(1, 2, 0.4), (2, 2, 0.8), (2, 3, 0.5), (3, 2, 1.0)])
def test_prior_normalization_sums_to_one(k, depth, phi):
    cat = build_catalog(PriorParams.uniform(k, phi=phi, max_rounds=depth))
    assert np.exp(cat.log_priors).sum() == pytest.approx(1.0, abs=1e-10)


def test_phi_one_matches_unpenalized_model():
    # with phi=1 the normalized weights equal the plain v-product model
    params = PriorParams.uniform(2, phi=1.0, max_rounds=2)
    cat = build_catalog(params)
    v = [Fraction(1, 3)] * 3
    raw = {
        tree_serialize(t): tree_prior(t, v, Fraction(1), 2)
        for t in gen_trees(2, 2)
    }
    total = sum(raw.values())
    for lay, lp in zip(cat.layouts, cat.log_priors):
        assert math.exp(lp) == pytest.approx(float(raw[lay.serialize()] / total), abs=1e-12)


def test_prior_matches_oracle_with_phi():
    params = PriorParams.uniform(2, phi=0.45, max_rounds=2)
    cat = build_catalog(params)
    v = [Fraction(1, 3)] * 3
    phi = Fraction(45, 100)
    raw = {tree_serialize(t): tree_prior(t, v, phi, 2) for t in gen_trees(2, 2)}
    total = sum(raw.values())
    for lay, lp in zip(cat.layouts, cat.log_priors):
        expected = float(raw[lay.serialize()] / total)
        assert math.exp(lp) == pytest.approx(expected, rel=1e-12)


# ---------------------------------------------------------------------------
# Thresholds and routing


def split_on(k, lower=None, upper=None):
    return (k, lower, upper)


def test_bind_odd_count_median():
    lay = PartitionLayout(split_on(0), 1, 1)
    X = np.array([[-0.5], [0.1], [0.9]])
    tp = bind_thresholds(lay, X)
    ((_, marker, threshold),) = [(p, k, t) for p, k, t in tp.thresholds()]
    assert marker == 0
    assert threshold == pytest.approx(0.1)
    assert tp.route(X).tolist() == [0, 1, 1]


def test_bind_even_count_median():
    lay = PartitionLayout(split_on(0), 1, 1)
    tp = bind_thresholds(lay, np.array([[0.0], [1.0]]))
    assert tp.thresholds()[0][2] == pytest.approx(0.5)


def test_bind_nested_conditional_median():
    lay = PartitionLayout(split_on(0, lower=None, upper=split_on(0)), 1, 2)
    X = np.array([[-1.0], [-0.2], [0.3], [0.8]])
    tp = bind_thresholds(lay, X)
    thresholds = {path: t for path, k, t in tp.thresholds()}
    assert thresholds[()] == pytest.approx(0.05)
    # the upper child's median uses only the routed rows {0.3, 0.8}
    assert thresholds[((0, 1),)] == pytest.approx(0.55)


def test_bind_empty_subset_threshold_zero():
    lay = PartitionLayout(split_on(0, lower=split_on(0), upper=None), 1, 2)
    X = np.array([[1.0], [1.0], [1.0]])  # everything routes upper at root med=1
    tp = bind_thresholds(lay, X)
    thresholds = {path: t for path, k, t in tp.thresholds()}
    assert thresholds[((0, 0),)] == 0.0
    assert tp.route(X).tolist() == [2, 2, 2]


def test_leaf_of_trivial_layout():
    tp = bind_thresholds(PartitionLayout(None, 3, 3), np.empty((0, 3)))
    for x in ([0, 0, 0], [5, -5, 2], [1e9, 0, -1e9]):
        assert leaf_of(tp, x) == 0
    assert tp.leaf_count == 1


def test_leaf_of_boundary_goes_upper():
    lay = PartitionLayout(split_on(0), 1, 1)
    tp = bind_thresholds(lay, np.array([[-1.0], [1.0]]))  # threshold 0.0
    assert leaf_of(tp, [0.0]) == 1
    assert leaf_of(tp, [-1e-12]) == 0


def test_leaf_of_two_round_geometry():
    # root on marker 1, its upper child on marker 2: the upper-right region
    # is reached by two 'upper' decisions and is the last preorder leaf.
    lay = PartitionLayout(split_on(0, upper=split_on(1)), 2, 2)
    X = np.array([[-1.0, -1.0], [1.0, 1.0], [-0.5, 0.5], [0.5, -0.5]])
    tp = bind_thresholds(lay, X)
    assert leaf_of(tp, [0.9, 0.9]) == 2
    assert leaf_of(tp, [-0.9, 0.0]) == 0
    assert leaf_of(tp, [0.9, -0.9]) == 1


def test_leaf_of_dimension_mismatch():
    tp = bind_thresholds(PartitionLayout(None, 2, 1), np.empty((0, 2)))
    with pytest.raises(DimensionMismatchError):
        leaf_of(tp, [1.0])


def test_route_counts_partition_data():
    rng = np.random.default_rng(42)
    cat = enumerate_layouts(2, 2)
    X = rng.uniform(-1, 1, size=(37, 2))
    for lay in cat.layouts:
        tp = bind_thresholds(lay, X)
        leaves = tp.route(X)
        assert leaves.shape == (37,)
        assert leaves.min() >= 0 and leaves.max() < tp.leaf_count
        counts = np.bincount(leaves, minlength=tp.leaf_count)
        assert counts.sum() == 37


def test_bind_invariant_to_row_order():
    rng = np.random.default_rng(7)
    X = rng.uniform(-1, 1, size=(20, 2))
    lay = PartitionLayout(split_on(0, lower=split_on(1), upper=split_on(1)), 2, 2)
    tp1 = bind_thresholds(lay, X)
    tp2 = bind_thresholds(lay, X[rng.permutation(20)])
    t1 = [(p, k, t) for p, k, t in tp1.thresholds()]
    t2 = [(p, k, t) for p, k, t in tp2.thresholds()]
    assert t1 == t2


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_marker_relabeling_equivariance(seed):
    rng = np.random.default_rng(seed)
    n_markers = 3
    X = rng.uniform(-1, 1, size=(11, n_markers))
    perm = rng.permutation(n_markers)
    params = PriorParams.uniform(n_markers, phi=0.6, max_rounds=2)

    def relabel(node):
        if node is None:
            return None
        k, lo, up = node
        return (int(perm[k]), relabel(lo), relabel(up))

    cat = build_catalog(params)
    X_perm = np.empty_like(X)
    for k in range(n_markers):
        X_perm[:, perm[k]] = X[:, k]
    for idx in rng.choice(cat.n_layouts, size=10, replace=False):
        lay = cat.layouts[idx]
        lay2 = PartitionLayout(relabel(lay.struct), n_markers, 2)
        assert log_prior(lay, params) == pytest.approx(
            log_prior(lay2, params), abs=1e-12
        )
        tp = bind_thresholds(lay, X)
        tp2 = bind_thresholds(lay2, X_perm)
        assert np.array_equal(tp.route(X), tp2.route(X_perm))


# ---------------------------------------------------------------------------
# Serialization and catalog files


def test_serialize_round_trip():
    cat = enumerate_layouts(2, 2)
    for lay in cat.layouts:
        assert parse_struct(serialize_struct(lay.struct)) == lay.struct


def test_catalog_export_import(tmp_path):
    cat = build_catalog(PriorParams.uniform(2, phi=0.5, max_rounds=2))
    path = tmp_path / "catalog.txt"
    export_catalog(cat, path)
    loaded = import_catalog(path)
    assert loaded.n_layouts == cat.n_layouts
    assert np.array_equal(loaded.log_priors, cat.log_priors)
    assert [l.serialize() for l in loaded.layouts] == [
        l.serialize() for l in cat.layouts
    ]
    assert loaded.prior.phi == cat.prior.phi


def test_catalog_import_rejects_garbage(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("not a catalog\n")
    with pytest.raises(ValueError):
        import_catalog(path)
