"""Hypergraph random-walk diffusion applied matrix-free.

The operator sends a vertex signal x to H inv(D_E) H^T inv(D_V) x, the
vertex block of the squared bipartite random walk.  It is never
materialized: one application is four chained stages (scale by inverse
vertex degrees, edge-major matvec, scale by inverse edge degrees,
vertex-major matvec), costing O(nnz) per signal column.  Dense
materialization, the dense spectrum and the lazy-walk formula for ordinary
graphs live here too, as independent oracles for tests.
"""

from typing import Optional, Tuple

import numpy as np

from .errors import (
    DataError,
    DimensionMismatchError,
    EigenSolverError,
    NotTwoUniformError,
    SizeCapExceededError,
)
from .hypercore import Hypergraph

DENSE_CAP_DEFAULT = 2000


def as_signal_matrix(x, rows: int) -> Tuple[np.ndarray, bool]:
    """Validate a signal array: float64, finite, ``rows`` rows.

    1-D input is promoted to a single column; the flag in the return value
    records that so callers can hand back the original shape.
    """
    arr = np.asarray(x, dtype=np.float64)
    was_1d = arr.ndim == 1
    if was_1d:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DimensionMismatchError(f"signal must be 1-D or 2-D, got ndim={arr.ndim}")
    if arr.shape[0] != rows:
        raise DimensionMismatchError(f"signal has {arr.shape[0]} rows, operator expects {rows}")
    if not np.isfinite(arr).all():
        raise DataError("signal contains NaN or Inf entries")
    return arr, was_1d


class DiffusionOperator:
    """Column-stochastic random-walk operator of an immutable hypergraph.

    Degree inverses are computed once at construction and reused across all
    scales and signals.  ``backend`` pins the matvec kernel implementation;
    None defers to the HYPERWAVE_BACKEND environment flag per call.
    """

    def __init__(self, hypergraph: Hypergraph, backend: Optional[str] = None):
        self.hypergraph = hypergraph
        self.inv_vertex_degrees = 1.0 / hypergraph.vertex_degrees
        self.inv_edge_degrees = 1.0 / hypergraph.edge_degrees
        self.backend = backend

    @property
    def n(self) -> int:
        return self.hypergraph.n

    def apply(self, x) -> np.ndarray:
        """One diffusion step applied to each signal column."""
        sig, was_1d = as_signal_matrix(x, self.n)
        g = self.hypergraph
        scaled = sig * self.inv_vertex_degrees[:, None]
        on_edges = g.e2v.matmat(scaled, self.backend)
        on_edges *= self.inv_edge_degrees[:, None]
        out = g.v2e.matmat(on_edges, self.backend)
        return out[:, 0] if was_1d else out

    def apply_power(self, x, t: int) -> np.ndarray:
        """t sequential diffusion steps; t=0 returns the signal unchanged."""
        if t < 0:
            raise ValueError(f"power must be nonnegative, got {t}")
        sig, was_1d = as_signal_matrix(x, self.n)
        cur = sig.copy()
        for _ in range(t):
            cur = self.apply(cur)
        return cur[:, 0] if was_1d else cur

    def dense_materialize(self, cap: int = DENSE_CAP_DEFAULT) -> np.ndarray:
        """Exact dense operator, built by dense products (test oracle)."""
        if self.n > cap:
            raise SizeCapExceededError(f"dense materialization of n={self.n} exceeds cap {cap}")
        h = self.hypergraph.incidence_dense()
        return (h * self.inv_edge_degrees[None, :]) @ (h.T * self.inv_vertex_degrees[None, :])

    def eigenvalues_dense(self, cap: int = DENSE_CAP_DEFAULT) -> np.ndarray:
        """All eigenvalues, sorted descending.

        The operator is similar to the symmetric PSD matrix
        inv(D_V)^{1/2} H inv(D_E) H^T inv(D_V)^{1/2}, so a symmetric
        eigensolver is used and the spectrum is real.
        """
        if self.n > cap:
            raise SizeCapExceededError(f"dense spectrum of n={self.n} exceeds cap {cap}")
        h = self.hypergraph.incidence_dense()
        half = h * np.sqrt(self.inv_edge_degrees)[None, :]
        half *= np.sqrt(self.inv_vertex_degrees)[:, None]
        sym = half @ half.T
        try:
            eigenvalues = np.linalg.eigvalsh(sym)
        except np.linalg.LinAlgError as exc:
            raise EigenSolverError(f"symmetric eigensolver failed: {exc}") from exc
        return eigenvalues[::-1].copy()


def lazy_walk_reference(g: Hypergraph) -> np.ndarray:
    """Dense lazy random walk 0.5 (I + A inv(D)) of a 2-uniform hypergraph.

    Built from the ordinary vertex adjacency (parallel edges add up), fully
    independently of the diffusion kernels; agrees entrywise with the dense
    diffusion operator on every 2-uniform hypergraph.
    """
    if not g.is_two_uniform():
        raise NotTwoUniformError("lazy-walk reference requires every hyperedge to have 2 members")
    pairs = g.e2v.indices.reshape(g.m, 2)
    adj = np.zeros((g.n, g.n), dtype=np.float64)
    np.add.at(adj, (pairs[:, 0], pairs[:, 1]), 1.0)
    np.add.at(adj, (pairs[:, 1], pairs[:, 0]), 1.0)
    inv_deg = 1.0 / g.vertex_degrees
    return 0.5 * (np.eye(g.n) + adj * inv_deg[None, :])
