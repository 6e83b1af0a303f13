"""Shared helpers: seeded random hypergraph generators used across test modules."""

import numpy as np

from hyperwave import Hypergraph, build_hypergraph


def random_hypergraph(rng, n_max=60, m_max=40, max_degree=8):
    """Random hypergraph with mixed edge sizes and no isolated vertices."""
    n = int(rng.integers(2, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    edges = []
    for _ in range(m):
        size = int(rng.integers(1, min(n, max_degree) + 1))
        edges.append(sorted(rng.choice(n, size=size, replace=False).tolist()))
    covered = np.zeros(n, dtype=bool)
    for e in edges:
        covered[e] = True
    uncovered = np.flatnonzero(~covered)
    if uncovered.size:
        edges.append(uncovered.tolist())
    return build_hypergraph(n, edges)


def random_two_uniform(rng, n_max=40, extra_max=60):
    """Random connected 2-uniform hypergraph (a chain plus random extra pairs).

    Parallel edges are allowed on purpose: duplicates are legal and the
    lazy-walk reference must count them.
    """
    n = int(rng.integers(2, n_max + 1))
    edges = [[i, i + 1] for i in range(n - 1)]
    for _ in range(int(rng.integers(0, extra_max + 1))):
        u, v = rng.choice(n, size=2, replace=False)
        edges.append([int(u), int(v)])
    return build_hypergraph(n, edges)


def path_graph(n):
    """2-uniform path 0-1-...-(n-1)."""
    return build_hypergraph(n, [[i, i + 1] for i in range(n - 1)])


def grid_graph(rows, cols):
    """2-uniform grid graph with 4-neighbour connectivity."""
    def vid(r, c):
        return r * cols + c

    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append([vid(r, c), vid(r, c + 1)])
            if r + 1 < rows:
                edges.append([vid(r, c), vid(r + 1, c)])
    return build_hypergraph(rows * cols, edges)


def incidence_oracle(g: Hypergraph) -> np.ndarray:
    """Dense 0/1 incidence rebuilt from the edge lists alone."""
    h = np.zeros((g.n, g.m))
    for j in range(g.m):
        h[g.edge_members(j), j] = 1.0
    return h


def dense_operator_oracle(g: Hypergraph) -> np.ndarray:
    """H D_E^-1 H^T D_V^-1 assembled densely, independent of the library path."""
    h = incidence_oracle(g)
    return h @ np.diag(1.0 / g.edge_degrees) @ h.T @ np.diag(1.0 / g.vertex_degrees)


def bfs_distances_oracle(g: Hypergraph, source: int) -> np.ndarray:
    """Plain BFS over "shares an edge" adjacency; -1 marks unreachable."""
    neighbours = [set() for _ in range(g.n)]
    for j in range(g.m):
        members = g.edge_members(j).tolist()
        for u in members:
            neighbours[u].update(members)
    dist = np.full(g.n, -1, dtype=np.int64)
    dist[source] = 0
    frontier = [source]
    while frontier:
        nxt = []
        for u in frontier:
            for v in neighbours[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    return dist
