"""Recursive binary-split partitions of the biomarker space.

A partition layout is a binary tree in which every internal node names the
biomarker it splits on and every leaf is one subgroup. Layouts are purely
structural: the actual cut values are conditional medians bound to data
later (see :func:`bind_thresholds`).

The whole catalog of layouts for (K markers, R rounds) is finite and is
enumerated exactly. Two observations make downstream inference cheap:

* every node of every layout is identified by its *path* from the root,
  a sequence of (marker, side) steps, and the data subset reaching a node
  depends only on that path, never on the rest of the tree;
* the set of distinct paths (here called *cells*) is tiny compared to the
  number of layouts, so per-layout quantities factor into per-cell
  quantities summed over each layout's leaf cells.

Markers are 0-based everywhere in code; serialized artifacts and reports
use 1-based marker numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import CatalogSizeError, ConfigError, DimensionMismatchError

# A layout structure is a nested tuple: None for a leaf, (marker, lower, upper)
# for a split. Structures are shared aggressively by the enumerator.
Struct = tuple | None

DEFAULT_MAX_ROUNDS = 3
DEFAULT_LAYOUT_CAP = 10_000_000


@dataclass(frozen=True)
class PriorParams:
    """Hyperparameters of the random-partition prior.

    ``split_probs`` holds (v_0, v_1, ..., v_K): the probability that a node
    stays terminal (v_0) or splits on marker k (v_k). ``phi`` multiplies the
    prior weight by phi**(number of distinct markers used), favoring layouts
    that reuse few markers. ``max_rounds`` caps the split depth.
    """

    split_probs: tuple[float, ...]
    phi: float
    n_markers: int
    max_rounds: int = DEFAULT_MAX_ROUNDS

    def __post_init__(self) -> None:
        if self.n_markers < 1:
            raise ConfigError("need at least one biomarker")
        if self.max_rounds < 1:
            raise ConfigError("max_rounds must be >= 1")
        if len(self.split_probs) != self.n_markers + 1:
            raise ConfigError(
                f"split_probs must have length K+1={self.n_markers + 1}, "
                f"got {len(self.split_probs)}"
            )
        if any(v < 0 for v in self.split_probs):
            raise ConfigError("split probabilities must be non-negative")
        if abs(sum(self.split_probs) - 1.0) > 1e-12:
            raise ConfigError("split probabilities must sum to 1")
        if not 0.0 < self.phi <= 1.0:
            raise ConfigError("phi must lie in (0, 1]")

    @classmethod
    def uniform(
        cls,
        n_markers: int,
        phi: float = 0.5,
        max_rounds: int = DEFAULT_MAX_ROUNDS,
    ) -> "PriorParams":
        """Equal probability for 'no split' and each marker: v_k = 1/(K+1)."""
        v = 1.0 / (n_markers + 1)
        return cls(
            split_probs=(v,) * (n_markers + 1),
            phi=phi,
            n_markers=n_markers,
            max_rounds=max_rounds,
        )


def layout_count(n_markers: int, max_rounds: int) -> int:
    """Number of layouts via the recurrence T(r) = 1 + K * T(r+1)**2.

    A node with r rounds remaining is either terminal or splits on one of K
    markers into two independent subtrees with r-1 rounds remaining.
    """
    count = 1
    for _ in range(max_rounds):
        count = 1 + n_markers * count * count
    return count


def _enumerate_structs(n_markers: int, rounds_left: int, memo: dict) -> tuple:
    if rounds_left == 0:
        return (None,)
    key = rounds_left
    if key in memo:
        return memo[key]
    subs = _enumerate_structs(n_markers, rounds_left - 1, memo)
    out = [None]
    for k in range(n_markers):
        for lower in subs:
            for upper in subs:
                out.append((k, lower, upper))
    memo[key] = tuple(out)
    return memo[key]


def struct_leaf_paths(struct: Struct) -> list[tuple]:
    """Leaf paths in preorder (lower child first).

    A path is a tuple of (marker, side) steps; side 0 is the lower half
    (x_k < threshold), side 1 the upper half (x_k >= threshold).
    """
    leaves: list[tuple] = []

    def walk(node: Struct, path: tuple) -> None:
        if node is None:
            leaves.append(path)
            return
        k, lower, upper = node
        walk(lower, path + ((k, 0),))
        walk(upper, path + ((k, 1),))

    walk(struct, ())
    return leaves


def struct_markers(struct: Struct) -> frozenset[int]:
    """Distinct marker indices used by the structure."""
    used: set[int] = set()

    def walk(node: Struct) -> None:
        if node is None:
            return
        k, lower, upper = node
        used.add(k)
        walk(lower)
        walk(upper)

    walk(struct)
    return frozenset(used)


def serialize_struct(struct: Struct) -> str:
    """Canonical text form, preorder, with 1-based marker numbers.

    A leaf is ``L``; a split is ``(k lower upper)``. The trivial layout is
    ``L`` and a root split on the first marker is ``(1 L L)``.
    """
    if struct is None:
        return "L"
    k, lower, upper = struct
    return f"({k + 1} {serialize_struct(lower)} {serialize_struct(upper)})"


def parse_struct(text: str) -> Struct:
    """Inverse of :func:`serialize_struct`."""
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    pos = 0

    def parse() -> Struct:
        nonlocal pos
        if pos >= len(tokens):
            raise ValueError(f"truncated layout text: {text!r}")
        tok = tokens[pos]
        pos += 1
        if tok == "L":
            return None
        if tok != "(":
            raise ValueError(f"unexpected token {tok!r} in {text!r}")
        marker = int(tokens[pos]) - 1
        pos += 1
        lower = parse()
        upper = parse()
        if tokens[pos] != ")":
            raise ValueError(f"missing ')' in {text!r}")
        pos += 1
        return (marker, lower, upper)

    result = parse()
    if pos != len(tokens):
        raise ValueError(f"trailing tokens in {text!r}")
    return result


@dataclass(frozen=True)
class PartitionLayout:
    """One structural partition: the split tree without thresholds."""

    struct: Struct
    n_markers: int
    max_rounds: int

    @property
    def n_leaves(self) -> int:
        return len(struct_leaf_paths(self.struct))

    @property
    def markers_used(self) -> frozenset[int]:
        return struct_markers(self.struct)

    def serialize(self) -> str:
        return serialize_struct(self.struct)

    def depth(self) -> int:
        def d(node: Struct) -> int:
            if node is None:
                return 0
            return 1 + max(d(node[1]), d(node[2]))

        return d(self.struct)


class CellTable:
    """All node paths reachable by any layout of a (K, rounds) catalog.

    Cells are indexed breadth-first so parents always precede children;
    cells at depth < max_rounds ("inner" cells) come first and are the only
    ones with children. ``children[c, k, side]`` gives the child cell id.
    """

    def __init__(self, n_markers: int, max_rounds: int):
        self.n_markers = n_markers
        self.max_rounds = max_rounds
        paths: list[tuple] = [()]
        index: dict[tuple, int] = {(): 0}
        level = [()]
        for _ in range(max_rounds):
            nxt = []
            for path in level:
                for k in range(n_markers):
                    for side in (0, 1):
                        child = path + ((k, side),)
                        index[child] = len(paths)
                        paths.append(child)
                        nxt.append(child)
            level = nxt
        self.paths: tuple[tuple, ...] = tuple(paths)
        self.index = index
        self.n_cells = len(paths)
        self.depth = np.fromiter((len(p) for p in paths), dtype=np.int32)
        self.n_inner = int(np.sum(self.depth < max_rounds))
        self.children = np.full(
            (self.n_inner, n_markers, 2), -1, dtype=np.int32
        )
        self.parent = np.full(self.n_cells, -1, dtype=np.int32)
        for cid, path in enumerate(paths):
            if len(path) < max_rounds:
                for k in range(n_markers):
                    for side in (0, 1):
                        self.children[cid, k, side] = index[path + ((k, side),)]
            if path:
                self.parent[cid] = index[path[:-1]]

    def cell_of_path(self, path: tuple) -> int:
        return self.index[path]


@dataclass
class PartitionCatalog:
    """The full ordered layout catalog plus per-layout prior weights.

    ``leaf_cells_flat``/``leaf_offsets`` store each layout's leaf cell ids
    contiguously so that per-layout sums over per-cell values reduce to
    ``np.add.reduceat``. ``log_priors`` is None until normalized.
    """

    n_markers: int
    max_rounds: int
    layouts: list[PartitionLayout]
    cells: CellTable
    leaf_cells_flat: np.ndarray
    leaf_offsets: np.ndarray
    n_distinct_markers: np.ndarray
    log_priors: np.ndarray | None = None
    prior: PriorParams | None = None
    _serial_index: dict[str, int] | None = field(default=None, repr=False)

    @property
    def n_layouts(self) -> int:
        return len(self.layouts)

    @property
    def leaf_counts(self) -> np.ndarray:
        return np.diff(self.leaf_offsets)

    def leaf_cells(self, layout_index: int) -> np.ndarray:
        lo, hi = self.leaf_offsets[layout_index], self.leaf_offsets[layout_index + 1]
        return self.leaf_cells_flat[lo:hi]

    def layout_sums(self, cell_values: np.ndarray) -> np.ndarray:
        """Per-layout sum of a per-cell vector over each layout's leaves."""
        flat = cell_values[self.leaf_cells_flat]
        return np.add.reduceat(flat, self.leaf_offsets[:-1])

    def cell_mix(self, layout_weights: np.ndarray) -> np.ndarray:
        """Per-cell total weight of layouts having that cell as a leaf."""
        rep = np.repeat(layout_weights, self.leaf_counts)
        return np.bincount(
            self.leaf_cells_flat, weights=rep, minlength=self.cells.n_cells
        )

    def index_of(self, layout: PartitionLayout | str) -> int:
        if self._serial_index is None:
            self._serial_index = {
                lay.serialize(): i for i, lay in enumerate(self.layouts)
            }
        key = layout if isinstance(layout, str) else layout.serialize()
        return self._serial_index[key]


def enumerate_layouts(
    n_markers: int,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    cap: int = DEFAULT_LAYOUT_CAP,
) -> PartitionCatalog:
    """Enumerate every layout for (K, rounds), priors unset.

    Raises :class:`CatalogSizeError` before generating anything if the
    recurrence count exceeds ``cap``.
    """
    if n_markers < 1 or max_rounds < 1:
        raise ConfigError("n_markers and max_rounds must be >= 1")
    expected = layout_count(n_markers, max_rounds)
    if expected > cap:
        raise CatalogSizeError(
            f"{expected} layouts for K={n_markers}, rounds={max_rounds} "
            f"exceeds the cap of {cap}"
        )
    structs = _enumerate_structs(n_markers, max_rounds, {})
    cells = CellTable(n_markers, max_rounds)
    layouts = [
        PartitionLayout(s, n_markers, max_rounds) for s in structs
    ]
    offsets = np.zeros(len(structs) + 1, dtype=np.int64)
    flat_parts: list[np.ndarray] = []
    n_distinct = np.zeros(len(structs), dtype=np.int32)
    for i, s in enumerate(structs):
        leaf_ids = np.fromiter(
            (cells.cell_of_path(p) for p in struct_leaf_paths(s)),
            dtype=np.int32,
        )
        flat_parts.append(leaf_ids)
        offsets[i + 1] = offsets[i] + leaf_ids.size
        n_distinct[i] = len(struct_markers(s))
    catalog = PartitionCatalog(
        n_markers=n_markers,
        max_rounds=max_rounds,
        layouts=layouts,
        cells=cells,
        leaf_cells_flat=np.concatenate(flat_parts),
        leaf_offsets=offsets,
        n_distinct_markers=n_distinct,
    )
    assert catalog.n_layouts == expected
    return catalog


def log_prior(layout: PartitionLayout, params: PriorParams) -> float:
    """Unnormalized log prior weight of one layout.

    Each node shallower than max_rounds contributes log v_0 if terminal or
    log v_k if split on marker k; forced leaves at the depth cap contribute
    nothing. The reuse penalty adds log(phi) per distinct marker used.
    """
    if params.n_markers != layout.n_markers or params.max_rounds != layout.max_rounds:
        raise ConfigError("prior parameters do not match the layout's catalog")
    v = params.split_probs

    def logv(x: float) -> float:
        return math.log(x) if x > 0 else -math.inf

    def walk(node: Struct, depth: int) -> float:
        if depth == params.max_rounds:
            return 0.0
        if node is None:
            return logv(v[0])
        k, lower, upper = node
        return logv(v[k + 1]) + walk(lower, depth + 1) + walk(upper, depth + 1)

    penalty = len(layout.markers_used) * math.log(params.phi)
    return walk(layout.struct, 0) + penalty


def normalize_catalog(catalog: PartitionCatalog, params: PriorParams) -> PartitionCatalog:
    """Fill in normalized log prior weights for every layout (in place)."""
    if params.n_markers != catalog.n_markers or params.max_rounds != catalog.max_rounds:
        raise ConfigError("prior parameters do not match the catalog")
    raw = np.array(
        [log_prior(lay, params) for lay in catalog.layouts], dtype=np.float64
    )
    from scipy.special import logsumexp

    catalog.log_priors = raw - logsumexp(raw)
    catalog.prior = params
    return catalog


def build_catalog(params: PriorParams, cap: int = DEFAULT_LAYOUT_CAP) -> PartitionCatalog:
    """Enumerate and normalize in one step."""
    return normalize_catalog(
        enumerate_layouts(params.n_markers, params.max_rounds, cap=cap), params
    )


# ---------------------------------------------------------------------------
# Binding layouts to data


def _median(column: np.ndarray) -> float:
    # Median of the routed subset; an empty subset falls back to the center
    # of the simulated biomarker range so routing stays total.
    if column.size == 0:
        return 0.0
    return float(np.median(column))


@dataclass
class ThresholdedPartition:
    """A layout bound to concrete cut values.

    ``bound`` mirrors the layout structure with thresholds embedded:
    a leaf is its 0-based leaf index, a split is
    (marker, threshold, lower, upper). Leaf indices follow preorder with
    the lower child first, matching the catalog's leaf-cell order.
    """

    layout: PartitionLayout
    bound: tuple | int
    leaf_count: int

    def leaf_of(self, x: Sequence[float]) -> int:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.layout.n_markers,):
            raise DimensionMismatchError(
                f"expected {self.layout.n_markers} biomarkers, got {x.shape}"
            )
        node = self.bound
        while not isinstance(node, int):
            k, threshold, lower, upper = node
            node = upper if x[k] >= threshold else lower
        return node

    def route(self, X: np.ndarray) -> np.ndarray:
        """Leaf index for each row of an (n, K) matrix."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.layout.n_markers:
            raise DimensionMismatchError(
                f"expected an (n, {self.layout.n_markers}) matrix, got {X.shape}"
            )
        out = np.empty(X.shape[0], dtype=np.int32)

        def walk(node, rows: np.ndarray) -> None:
            if isinstance(node, int):
                out[rows] = node
                return
            k, threshold, lower, upper = node
            up = X[rows, k] >= threshold
            walk(upper, rows[up])
            walk(lower, rows[~up])

        walk(self.bound, np.arange(X.shape[0]))
        return out

    def thresholds(self) -> list[tuple[tuple, int, float]]:
        """(path, marker, threshold) for every internal node, preorder."""
        acc: list[tuple[tuple, int, float]] = []

        def walk(node, path: tuple) -> None:
            if isinstance(node, int):
                return
            k, threshold, lower, upper = node
            acc.append((path, k, threshold))
            walk(lower, path + ((k, 0),))
            walk(upper, path + ((k, 1),))

        walk(self.bound, ())
        return acc


def bind_thresholds(layout: PartitionLayout, X: np.ndarray) -> ThresholdedPartition:
    """Bind a layout to data: each split's cut is the conditional median.

    The threshold at a node is the median of that marker over the rows
    routed into the node; rows with x_k >= median go to the upper child.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.size == 0:
        X = X.reshape(0, layout.n_markers)
    if X.ndim != 2 or X.shape[1] != layout.n_markers:
        raise DimensionMismatchError(
            f"expected an (n, {layout.n_markers}) matrix, got {X.shape}"
        )
    counter = iter(range(1 << 30))

    def walk(node: Struct, rows: np.ndarray):
        if node is None:
            return next(counter)
        k, lower, upper = node
        threshold = _median(X[rows, k])
        up = X[rows, k] >= threshold
        lower_bound = walk(lower, rows[~up])
        upper_bound = walk(upper, rows[up])
        return (k, threshold, lower_bound, upper_bound)

    bound = walk(layout.struct, np.arange(X.shape[0]))
    n_leaves = next(counter)
    return ThresholdedPartition(layout=layout, bound=bound, leaf_count=n_leaves)


def leaf_of(partition: ThresholdedPartition, x: Sequence[float]) -> int:
    """Module-level alias for :meth:`ThresholdedPartition.leaf_of`."""
    return partition.leaf_of(x)


# ---------------------------------------------------------------------------
# Catalog files

CATALOG_MAGIC = "suba-catalog"
CATALOG_VERSION = 1


def export_catalog(catalog: PartitionCatalog, path) -> None:
    """Write the catalog as versioned text: one layout + log prior per line."""
    if catalog.log_priors is None or catalog.prior is None:
        raise ConfigError("catalog must be normalized before export")
    p = catalog.prior
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{CATALOG_MAGIC} v{CATALOG_VERSION}\n")
        fh.write(f"markers={catalog.n_markers} rounds={catalog.max_rounds}\n")
        fh.write(f"phi={p.phi!r}\n")
        fh.write("split_probs=" + ",".join(repr(v) for v in p.split_probs) + "\n")
        for lay, lp in zip(catalog.layouts, catalog.log_priors):
            fh.write(f"{lay.serialize()}\t{float(lp)!r}\n")


def import_catalog(path) -> PartitionCatalog:
    """Read a catalog file back into a fully usable catalog."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if header[:1] != [CATALOG_MAGIC] or header[1] != f"v{CATALOG_VERSION}":
            raise ValueError(f"not a {CATALOG_MAGIC} v{CATALOG_VERSION} file: {path}")
        dims = dict(part.split("=") for part in fh.readline().split())
        n_markers = int(dims["markers"])
        max_rounds = int(dims["rounds"])
        phi = float(fh.readline().split("=", 1)[1])
        probs = tuple(
            float(v) for v in fh.readline().split("=", 1)[1].strip().split(",")
        )
        serials: list[str] = []
        log_priors: list[float] = []
        for line in fh:
            if not line.strip():
                continue
            text, lp = line.rsplit("\t", 1)
            serials.append(text)
            log_priors.append(float(lp))
    catalog = enumerate_layouts(n_markers, max_rounds)
    if [lay.serialize() for lay in catalog.layouts] != serials:
        raise ValueError(f"layout list in {path} does not match fresh enumeration")
    catalog.log_priors = np.array(log_priors, dtype=np.float64)
    catalog.prior = PriorParams(
        split_probs=probs, phi=phi, n_markers=n_markers, max_rounds=max_rounds
    )
    return catalog


def iter_cells_with_layout(struct: Struct, cells: CellTable) -> Iterator[tuple[int, bool]]:
    """(cell id, is_leaf) pairs for every node of a structure, preorder."""

    def walk(node: Struct, path: tuple) -> Iterator[tuple[int, bool]]:
        cid = cells.cell_of_path(path)
        if node is None:
            yield cid, True
            return
        yield cid, False
        k, lower, upper = node
        yield from walk(lower, path + ((k, 0),))
        yield from walk(upper, path + ((k, 1),))

    yield from walk(struct, ())
