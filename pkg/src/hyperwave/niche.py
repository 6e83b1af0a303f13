"""Spatial niche pipeline: proximity graph, k-hop lifting, hyperedge features.

Cells become vertices of a proximity graph (Delaunay adjacency, which is
exactly the Voronoi contact relation, or a symmetrized k-NN graph).  The
graph is lifted to a hypergraph with one hyperedge per cell covering its
k-hop neighborhood, each hyperedge is featurized from expression and cell
type composition, and the feature matrix is run through the wavelet filter
bank of the dual hypergraph to produce one representation row per niche.
"""

import itertools
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import Delaunay, QhullError, cKDTree

from . import backends
from .diffusion import DiffusionOperator
from .errors import (
    ConfigError,
    DataError,
    DegenerateGeometryError,
    DimensionMismatchError,
    NotTwoUniformError,
    TooFewPointsError,
    UnknownLabelError,
    ZeroLibraryCellError,
)
from .hypercore import Hypergraph, _from_edge_major, dual
from .wavelets import ScaleSequence, wavelet_transform

#: Fixed per-cell library size used for count normalization.
LIBRARY_SIZE = 10_000.0

_GOLDEN_ANGLE = 2.399963229728653
_CORR_REL_TOL = 1e-12


@dataclass(frozen=True)
class Categorical:
    """Integer-coded labels over a frozen, sorted vocabulary."""

    codes: np.ndarray
    vocab: tuple

    @classmethod
    def from_labels(cls, labels, vocab: Optional[Sequence[str]] = None) -> "Categorical":
        values = np.asarray([str(v) for v in labels], dtype=object)
        if vocab is None:
            uniq, codes = np.unique(values, return_inverse=True)
            return cls(codes=codes.astype(np.int64), vocab=tuple(uniq.tolist()))
        lookup = {v: i for i, v in enumerate(vocab)}
        codes = np.empty(values.shape[0], dtype=np.int64)
        for i, v in enumerate(values):
            if v not in lookup:
                raise UnknownLabelError(f"label {v!r} not in declared vocabulary")
            codes[i] = lookup[v]
        return cls(codes=codes, vocab=tuple(vocab))

    @property
    def size(self) -> int:
        return len(self.vocab)

    def labels(self) -> np.ndarray:
        return np.asarray(self.vocab, dtype=object)[self.codes]

    def one_hot(self) -> np.ndarray:
        out = np.zeros((self.codes.shape[0], self.size), dtype=np.float64)
        out[np.arange(self.codes.shape[0]), self.codes] = 1.0
        return out


@dataclass(frozen=True)
class SpatialDataset:
    """Cells with coordinates, raw counts, a 3-level type hierarchy and a condition."""

    coords: np.ndarray
    expression: np.ndarray
    cell_types: Categorical
    subclasses: Categorical
    supertypes: Categorical
    condition: Categorical
    cell_ids: np.ndarray
    gene_names: tuple

    def __post_init__(self):
        n = self.coords.shape[0]
        if self.coords.ndim != 2 or self.coords.shape[1] != 2:
            raise DataError(f"coords must be n-by-2, got {self.coords.shape}")
        if not np.isfinite(self.coords).all():
            raise DataError("coords contain NaN or Inf")
        if self.expression.shape[0] != n:
            raise DataError("expression row count does not match coords")
        if not np.isfinite(self.expression).all() or self.expression.min(initial=0.0) < 0:
            raise DataError("expression must be finite and nonnegative")
        if len(self.gene_names) != self.expression.shape[1]:
            raise DataError("gene_names length does not match expression columns")
        for name, cat in self.type_levels + (("condition", self.condition),):
            if cat.codes.shape[0] != n:
                raise DataError(f"{name} labels length does not match cell count")
        if self.cell_ids.shape[0] != n:
            raise DataError("cell_ids length does not match cell count")

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def q(self) -> int:
        return self.expression.shape[1]

    @property
    def type_levels(self) -> tuple:
        return (
            ("cell_type", self.cell_types),
            ("subclass", self.subclasses),
            ("supertype", self.supertypes),
        )


@dataclass(frozen=True)
class NicheConfig:
    """Knobs for graph construction, lifting and featurization."""

    graph_method: str = "delaunay"
    knn_k: int = 6
    hop_k: int = 3
    gene_pairs: Optional[tuple] = None
    top_variance_genes: int = 20
    min_cells_for_correlation: int = 3

    def __post_init__(self):
        if self.graph_method not in ("delaunay", "knn"):
            raise ConfigError(f"graph_method must be 'delaunay' or 'knn', got {self.graph_method!r}")
        if self.knn_k < 1:
            raise ConfigError(f"knn_k must be >= 1, got {self.knn_k}")
        if self.hop_k < 1:
            raise ConfigError(f"hop_k must be >= 1, got {self.hop_k}")
        if self.gene_pairs is None and self.top_variance_genes < 2:
            raise ConfigError("top_variance_genes must be >= 2 when no explicit pairs are given")
        if self.min_cells_for_correlation < 3:
            raise ConfigError("min_cells_for_correlation must be >= 3")


# ---------------------------------------------------------------------------
# proximity graph
# ---------------------------------------------------------------------------

def resolve_coincident(coords: np.ndarray, jitter_log: Optional[list] = None) -> np.ndarray:
    """Deterministically separate exactly coincident points.

    The second and later occurrences of a location are pushed along a
    golden-angle spiral with radius 1e-9 of the bounding-box diagonal per
    rank.  Applied jitters are appended to ``jitter_log`` as
    ``(index, dx, dy)`` so run manifests can record them.
    """
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    _, inverse, counts = np.unique(coords, axis=0, return_inverse=True, return_counts=True)
    if counts.max(initial=1) <= 1:
        return coords
    span = coords.max(axis=0) - coords.min(axis=0)
    diag = float(np.hypot(span[0], span[1])) or 1.0
    order = np.argsort(inverse, kind="stable")
    group_starts = np.zeros(counts.shape[0], dtype=np.int64)
    np.cumsum(counts[:-1], out=group_starts[1:])
    ranks = np.empty(coords.shape[0], dtype=np.int64)
    ranks[order] = np.arange(coords.shape[0]) - np.repeat(group_starts, counts)
    out = coords.copy()
    for i in np.flatnonzero(ranks > 0):
        t = ranks[i]
        radius = 1e-9 * diag * t
        dx = radius * np.cos(_GOLDEN_ANGLE * t)
        dy = radius * np.sin(_GOLDEN_ANGLE * t)
        out[i, 0] += dx
        out[i, 1] += dy
        if jitter_log is not None:
            jitter_log.append((int(i), float(dx), float(dy)))
    return out


def _pairs_to_graph(n: int, pairs: np.ndarray) -> Hypergraph:
    pairs = np.unique(np.sort(pairs, axis=1), axis=0)
    lengths = np.full(pairs.shape[0], 2, dtype=np.int64)
    return _from_edge_major(n, lengths, pairs.reshape(-1))


def build_spatial_graph(coords, cfg: NicheConfig, jitter_log: Optional[list] = None) -> Hypergraph:
    """Cell-cell contact graph as a 2-uniform hypergraph.

    ``delaunay`` links Delaunay-adjacent pairs (the dual statement of
    Voronoi-region contact); ``knn`` links symmetrized nearest neighbors
    (an edge exists if either endpoint selects the other).
    """
    coords = np.ascontiguousarray(np.asarray(coords, dtype=np.float64))
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise DataError(f"coords must be n-by-2, got shape {coords.shape}")
    if not np.isfinite(coords).all():
        raise DataError("coords contain NaN or Inf")
    n = coords.shape[0]
    coords = resolve_coincident(coords, jitter_log)
    if cfg.graph_method == "delaunay":
        if n < 3:
            raise TooFewPointsError(f"delaunay needs at least 3 points, got {n}")
        try:
            tri = Delaunay(coords)
        except QhullError as exc:
            raise DegenerateGeometryError(f"triangulation failed: {exc}") from exc
        simplices = tri.simplices
        pairs = np.concatenate([simplices[:, [0, 1]], simplices[:, [0, 2]], simplices[:, [1, 2]]])
        return _pairs_to_graph(n, pairs)
    if n < 2:
        raise TooFewPointsError(f"knn needs at least 2 points, got {n}")
    k = min(cfg.knn_k, n - 1)
    _, neighbors = cKDTree(coords).query(coords, k=k + 1)
    neighbors = np.atleast_2d(neighbors)
    sources = np.repeat(np.arange(n, dtype=np.int64), k + 1)
    pairs = np.column_stack([sources, neighbors.reshape(-1)])
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    return _pairs_to_graph(n, pairs)


# ---------------------------------------------------------------------------
# k-hop lifting
# ---------------------------------------------------------------------------

def vertex_adjacency(g0: Hypergraph) -> Tuple[np.ndarray, np.ndarray]:
    """CSR neighbor lists of a 2-uniform hypergraph (parallel edges merged)."""
    if not g0.is_two_uniform():
        raise NotTwoUniformError("vertex adjacency requires a 2-uniform hypergraph")
    pairs = np.unique(g0.e2v.indices.reshape(g0.m, 2), axis=0)
    both = np.concatenate([pairs, pairs[:, ::-1]])
    both = both[np.lexsort((both[:, 1], both[:, 0]))]
    indptr = np.zeros(g0.n + 1, dtype=np.int64)
    np.cumsum(np.bincount(both[:, 0], minlength=g0.n), out=indptr[1:])
    return indptr, np.ascontiguousarray(both[:, 1])


def khop_lift(g0: Hypergraph, k: int, backend: Optional[str] = None) -> Hypergraph:
    """One hyperedge per vertex covering its closed k-hop neighborhood.

    Hyperedge j is anchored at vertex j; identical neighborhoods stay
    distinct edges so the per-cell niche correspondence survives.
    """
    if k < 1:
        raise ConfigError(f"hop count must be >= 1, got {k}")
    indptr, indices = vertex_adjacency(g0)
    ball_indptr, ball_indices = backends.khop_balls(indptr, indices, k, backend)
    lengths = np.diff(ball_indptr)
    anchors = np.arange(g0.n, dtype=np.int64)
    return _from_edge_major(g0.n, lengths, ball_indices, anchors=anchors)


# ---------------------------------------------------------------------------
# featurization
# ---------------------------------------------------------------------------

def lognormalize(expression) -> np.ndarray:
    """Scale each cell to a fixed library size, then log(1 + x)."""
    expr = np.asarray(expression, dtype=np.float64)
    if not np.isfinite(expr).all() or expr.min(initial=0.0) < 0:
        raise DataError("expression must be finite and nonnegative")
    totals = expr.sum(axis=1)
    if totals.min(initial=1.0) <= 0:
        idx = int(np.argmin(totals))
        raise ZeroLibraryCellError(f"cell {idx} has zero total count")
    return np.log1p(expr * (LIBRARY_SIZE / totals)[:, None])


def select_gene_pairs(norm_expr: np.ndarray, cfg: NicheConfig) -> List[Tuple[int, int]]:
    """Gene index pairs for co-expression features.

    Explicit pairs in the config win; otherwise all pairs among the
    top-variance genes, capped so wide panels stay tractable.
    """
    q = norm_expr.shape[1]
    if cfg.gene_pairs is not None:
        pairs = []
        for a, b in cfg.gene_pairs:
            a, b = int(a), int(b)
            if not (0 <= a < q and 0 <= b < q):
                raise ConfigError(f"gene pair ({a}, {b}) out of range for {q} genes")
            if a == b:
                raise ConfigError(f"gene pair ({a}, {b}) repeats one gene")
            pairs.append((a, b))
        return pairs
    if q < 2:
        return []
    v = min(cfg.top_variance_genes, q)
    top = np.argsort(-norm_expr.var(axis=0), kind="stable")[:v]
    return list(itertools.combinations(sorted(int(i) for i in top), 2))


@dataclass(frozen=True)
class ColumnDescriptor:
    """One feature column: family plus the gene/pair/label it describes."""

    family: str
    name: str

    def header(self) -> str:
        return f"{self.family}:{self.name}"


@dataclass(frozen=True)
class HyperedgeFeatureMatrix:
    """Dense per-hyperedge feature matrix with a column schema."""

    values: np.ndarray
    column_schema: tuple

    def __post_init__(self):
        if self.values.shape[1] != len(self.column_schema):
            raise DataError("feature column count does not match schema")
        if not np.isfinite(self.values).all():
            raise DataError("feature matrix contains NaN or Inf")

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def headers(self) -> List[str]:
        return [c.header() for c in self.column_schema]


def _edge_correlation(sizes, sum_a, sum_b, sum_ab, sum_aa, sum_bb, min_cells):
    # Pearson correlation per (edge, column) from within-edge sums; degenerate
    # cases (too few cells, or a vector constant within the edge) become 0.
    cov = sizes * sum_ab - sum_a * sum_b
    var_a = sizes * sum_aa - sum_a * sum_a
    var_b = sizes * sum_bb - sum_b * sum_b
    floor_a = _CORR_REL_TOL * sizes * sum_aa
    floor_b = _CORR_REL_TOL * sizes * sum_bb
    bad = (sizes < min_cells) | (var_a <= floor_a) | (var_b <= floor_b)
    denom = np.sqrt(np.where(bad, 1.0, var_a) * np.where(bad, 1.0, var_b))
    return np.where(bad, 0.0, cov / denom)


def hyperedge_features(
    g: Hypergraph,
    norm_expr: np.ndarray,
    type_levels: Sequence[Tuple[str, Categorical]],
    cfg: NicheConfig,
    op: DiffusionOperator,
    gene_names: Optional[Sequence[str]] = None,
    backend: Optional[str] = None,
) -> HyperedgeFeatureMatrix:
    """Featurize every hyperedge from expression and type composition.

    Four column families, in order: per-gene means of the normalized
    expression over the member cells; within-edge Pearson correlation for
    each configured gene pair; per-gene within-edge correlation between a
    column and its one-step global diffusion; and member counts per label
    at each type granularity.
    """
    norm_expr = np.ascontiguousarray(np.asarray(norm_expr, dtype=np.float64))
    if norm_expr.ndim != 2 or norm_expr.shape[0] != g.n:
        raise DimensionMismatchError(
            f"expression matrix must be {g.n}-by-q, got shape {norm_expr.shape}")
    if op.hypergraph is not g:
        raise DimensionMismatchError("diffusion operator was built on a different hypergraph")
    q = norm_expr.shape[1]
    if gene_names is None:
        gene_names = [f"g{i:04d}" for i in range(q)]
    elif len(gene_names) != q:
        raise DimensionMismatchError("gene_names length does not match expression columns")
    for name, cat in type_levels:
        if cat.codes.shape[0] != g.n:
            raise DimensionMismatchError(f"{name} labels length does not match vertex count")

    def edge_sum(x):
        return g.e2v.matmat(x, backend)

    sizes = g.edge_degrees.astype(np.float64)[:, None]
    min_cells = cfg.min_cells_for_correlation

    sum_x = edge_sum(norm_expr)
    sum_xx = edge_sum(norm_expr * norm_expr)
    means = sum_x / sizes

    pairs = select_gene_pairs(norm_expr, cfg)
    if pairs:
        pa = np.array([a for a, _ in pairs])
        pb = np.array([b for _, b in pairs])
        sum_ab = edge_sum(norm_expr[:, pa] * norm_expr[:, pb])
        pair_corr = _edge_correlation(
            sizes, sum_x[:, pa], sum_x[:, pb], sum_ab, sum_xx[:, pa], sum_xx[:, pb], min_cells)
    else:
        pair_corr = np.empty((g.m, 0))

    diffused = op.apply(norm_expr)
    sum_d = edge_sum(diffused)
    sum_dd = edge_sum(diffused * diffused)
    sum_xd = edge_sum(norm_expr * diffused)
    diff_corr = _edge_correlation(sizes, sum_x, sum_d, sum_xd, sum_xx, sum_dd, min_cells)

    count_blocks = [edge_sum(cat.one_hot()) for _, cat in type_levels]

    schema = (
        [ColumnDescriptor("mean", gene_names[i]) for i in range(q)]
        + [ColumnDescriptor("pair_corr", f"{gene_names[a]}|{gene_names[b]}") for a, b in pairs]
        + [ColumnDescriptor("diff_corr", gene_names[i]) for i in range(q)]
        + [
            ColumnDescriptor("count", f"{name}={label}")
            for name, cat in type_levels
            for label in cat.vocab
        ]
    )
    values = np.concatenate([means, pair_corr, diff_corr] + count_blocks, axis=1)
    return HyperedgeFeatureMatrix(values=np.ascontiguousarray(values), column_schema=tuple(schema))


def niche_representations(
    g: Hypergraph,
    z,
    scales: ScaleSequence,
    backend: Optional[str] = None,
) -> np.ndarray:
    """Niche representation rows via the wavelet bank of the dual hypergraph.

    Row j represents hyperedge j (the niche anchored at ``g.anchors[j]``
    when anchors are set); columns are the flattened band-pass blocks
    followed by the low-pass block.
    """
    values = z.values if isinstance(z, HyperedgeFeatureMatrix) else np.asarray(z, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != g.m:
        raise DimensionMismatchError(
            f"feature matrix must have one row per hyperedge ({g.m}), got {values.shape}")
    op = DiffusionOperator(dual(g), backend=backend)
    return wavelet_transform(op, values, scales).flat
