"""Hypergraph data structure and structural operations.

A hypergraph on n vertices and m hyperedges is stored as its 0/1 incidence
relation in both orientations: a vertex-major CSR (each vertex lists its
incident edges) and an edge-major CSR (each edge lists its member vertices).
Values are kept as float64 ones so the same matvec kernel that powers
diffusion also serves structural queries.

Instances are immutable after construction and safe to share across
workers; every function here is a pure function of its inputs.
"""

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import backends
from .errors import (
    DataError,
    EmptyEdgeError,
    IndexOutOfRangeError,
    IsolatedVertexError,
)

#: Sentinel distance for vertices unreachable from the source.
UNREACHABLE = np.iinfo(np.int64).max


@dataclass(frozen=True)
class CSRMatrix:
    """Minimal CSR container used for incidence and adjacency structures."""

    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    shape: tuple

    @property
    def nnz(self) -> int:
        return int(self.indices.shape[0])

    def matmat(self, x: np.ndarray, backend=None) -> np.ndarray:
        """Dense ``self @ x`` via the selected kernel backend."""
        return backends.csr_matmat(self.indptr, self.indices, self.data, x, backend)

    def row(self, i: int) -> np.ndarray:
        """Column indices of row i (a read-only view)."""
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def toarray(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.float64)
        rows = np.repeat(np.arange(self.shape[0]), np.diff(self.indptr))
        out[rows, self.indices] = self.data
        return out


def _csr_from_rows(row_lengths: np.ndarray, indices: np.ndarray, n_cols: int) -> CSRMatrix:
    indptr = np.zeros(row_lengths.shape[0] + 1, dtype=np.int64)
    np.cumsum(row_lengths, out=indptr[1:])
    return CSRMatrix(
        indptr=indptr,
        indices=np.ascontiguousarray(indices, dtype=np.int64),
        data=np.ones(indices.shape[0], dtype=np.float64),
        shape=(row_lengths.shape[0], n_cols),
    )


def _transpose_csr(csr: CSRMatrix) -> CSRMatrix:
    n_rows, n_cols = csr.shape
    rows = np.repeat(np.arange(n_rows, dtype=np.int64), np.diff(csr.indptr))
    order = np.argsort(csr.indices, kind="stable")
    counts = np.bincount(csr.indices, minlength=n_cols)
    return _csr_from_rows(counts, rows[order], n_rows)


@dataclass(frozen=True)
class Hypergraph:
    """Immutable hypergraph with incidence stored in both orientations.

    ``v2e`` is the n-by-m incidence CSR (vertex rows, edge columns) and
    ``e2v`` its m-by-n transpose.  ``anchors``, when present, maps each
    hyperedge to the vertex that generated it.
    """

    n: int
    m: int
    v2e: CSRMatrix
    e2v: CSRMatrix
    vertex_degrees: np.ndarray
    edge_degrees: np.ndarray
    anchors: Optional[np.ndarray] = None

    @property
    def nnz(self) -> int:
        return self.v2e.nnz

    def edge_members(self, j: int) -> np.ndarray:
        """Sorted member vertices of hyperedge j."""
        return self.e2v.row(j)

    def vertex_edges(self, i: int) -> np.ndarray:
        """Sorted hyperedges incident to vertex i."""
        return self.v2e.row(i)

    def incidence_dense(self) -> np.ndarray:
        """Dense n-by-m 0/1 incidence matrix (test oracles only)."""
        return self.v2e.toarray()

    def is_two_uniform(self) -> bool:
        return bool(np.all(self.edge_degrees == 2))


def _from_edge_major(n: int, edge_lengths: np.ndarray, members: np.ndarray,
                     anchors: Optional[np.ndarray] = None) -> Hypergraph:
    """Assemble a Hypergraph from edge-major data already validated for range."""
    e2v = _csr_from_rows(edge_lengths, members, n)
    v2e = _transpose_csr(e2v)
    vertex_degrees = np.diff(v2e.indptr).astype(np.int64)
    if vertex_degrees.shape[0] and vertex_degrees.min() == 0:
        idx = int(np.argmin(vertex_degrees))
        raise IsolatedVertexError(f"vertex {idx} belongs to no hyperedge")
    return Hypergraph(
        n=n,
        m=int(edge_lengths.shape[0]),
        v2e=v2e,
        e2v=e2v,
        vertex_degrees=vertex_degrees,
        edge_degrees=edge_lengths.astype(np.int64),
        anchors=None if anchors is None else np.ascontiguousarray(anchors, dtype=np.int64),
    )


def build_hypergraph(n: int, edges: Sequence[Iterable[int]]) -> Hypergraph:
    """Build a hypergraph from explicit hyperedge member sets.

    Each edge is a nonempty collection of vertex indices in [0, n); repeated
    indices within one edge are collapsed.  Duplicate hyperedges (identical
    member sets) are legal and kept distinct.  Every vertex must appear in
    at least one edge.
    """
    if n < 1:
        raise DataError(f"vertex count must be positive, got {n}")
    normalized = []
    for j, edge in enumerate(edges):
        arr = np.unique(np.asarray(list(edge), dtype=np.int64))
        if arr.shape[0] == 0:
            raise EmptyEdgeError(f"hyperedge {j} has no members")
        if arr[0] < 0 or arr[-1] >= n:
            bad = arr[0] if arr[0] < 0 else arr[-1]
            raise IndexOutOfRangeError(f"hyperedge {j} references vertex {bad} outside [0, {n})")
        normalized.append(arr)
    if not normalized:
        raise DataError("a hypergraph needs at least one hyperedge")
    lengths = np.array([a.shape[0] for a in normalized], dtype=np.int64)
    return _from_edge_major(n, lengths, np.concatenate(normalized))


def dual(g: Hypergraph) -> Hypergraph:
    """Dual hypergraph: vertices and hyperedges swap roles, incidence transposes.

    Any anchor assignment of ``g`` is dropped (anchors name vertices, and the
    dual's vertices are the original edges).
    """
    return Hypergraph(
        n=g.m,
        m=g.n,
        v2e=g.e2v,
        e2v=g.v2e,
        vertex_degrees=g.edge_degrees,
        edge_degrees=g.vertex_degrees,
        anchors=None,
    )


@dataclass(frozen=True)
class BipartiteExpansion:
    """Bipartite graph on vertices + hyperedges with vertex-edge membership links.

    ``adjacency`` is the (n+m)-square symmetric CSR with zero diagonal blocks
    and the incidence matrix (resp. its transpose) off-diagonal; ``degrees``
    concatenates vertex and edge degrees and equals the adjacency row sums.
    """

    adjacency: CSRMatrix
    degrees: np.ndarray
    n: int
    m: int


def bipartite_expansion(g: Hypergraph) -> BipartiteExpansion:
    """Expand ``g`` into its bipartite vertex/edge graph."""
    indptr = np.concatenate([g.v2e.indptr, g.v2e.indptr[-1] + g.e2v.indptr[1:]])
    indices = np.concatenate([g.v2e.indices + g.n, g.e2v.indices])
    size = g.n + g.m
    adjacency = CSRMatrix(
        indptr=np.ascontiguousarray(indptr, dtype=np.int64),
        indices=np.ascontiguousarray(indices, dtype=np.int64),
        data=np.ones(indices.shape[0], dtype=np.float64),
        shape=(size, size),
    )
    degrees = np.concatenate([g.vertex_degrees, g.edge_degrees])
    return BipartiteExpansion(adjacency=adjacency, degrees=degrees, n=g.n, m=g.m)


def hypergraph_distance(g: Hypergraph, source: int) -> np.ndarray:
    """Hyperedge-hop distances from ``source`` to every vertex.

    Distance counts the minimal number of hyperedges on an alternating
    vertex-edge-vertex path.  Unreachable vertices get the UNREACHABLE
    sentinel.
    """
    if not 0 <= source < g.n:
        raise IndexOutOfRangeError(f"source vertex {source} outside [0, {g.n})")
    dist = np.full(g.n, UNREACHABLE, dtype=np.int64)
    dist[source] = 0
    edge_seen = np.zeros(g.m, dtype=bool)
    frontier = np.array([source], dtype=np.int64)
    d = 0
    while frontier.size:
        edges = np.unique(backends._gather_slices(g.v2e.indptr, g.v2e.indices, frontier))
        edges = edges[~edge_seen[edges]]
        if edges.size == 0:
            break
        edge_seen[edges] = True
        verts = np.unique(backends._gather_slices(g.e2v.indptr, g.e2v.indices, edges))
        verts = verts[dist[verts] == UNREACHABLE]
        d += 1
        dist[verts] = d
        frontier = verts
    return dist
