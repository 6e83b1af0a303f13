"""Hot numeric kernels with two interchangeable implementations.

Two kernels dominate the runtime of everything in this package: the sparse
incidence matvec that drives diffusion, and the per-vertex breadth-first
search that builds k-hop neighborhoods.  Both exist twice:

* a ``numba.njit`` version (default when numba imports), and
* a vectorized pure-numpy fallback.

Selection is per call via the ``HYPERWAVE_BACKEND`` environment variable
(``auto``, ``numba`` or ``numpy``) or an explicit ``backend=`` argument.
Both implementations accumulate in the same index order, so for a given
input they produce bitwise-identical results.
"""

import os

import numpy as np

from .errors import ConfigError

BACKEND_ENV = "HYPERWAVE_BACKEND"

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False


def active_backend(backend=None):
    """Resolve the backend name, honoring the env flag when unspecified."""
    choice = backend if backend is not None else os.environ.get(BACKEND_ENV, "auto")
    choice = choice.strip().lower() or "auto"
    if choice == "auto":
        return "numba" if HAS_NUMBA else "numpy"
    if choice == "numba":
        if not HAS_NUMBA:
            raise ConfigError("backend 'numba' requested but numba is not importable")
        return "numba"
    if choice == "numpy":
        return "numpy"
    raise ConfigError(f"unknown backend {choice!r}; expected auto, numba or numpy")


# ---------------------------------------------------------------------------
# CSR matrix times dense matrix
# ---------------------------------------------------------------------------

def _csr_matmat_numpy(indptr, indices, data, x, out):
    # One vectorized pass per within-row position: step j adds entry j of
    # every long-enough row.  Each output element thus receives its terms
    # strictly in index order — the same association as the jit loop, bit
    # for bit.  (reduceat/sum would be faster but use pairwise summation.)
    if indices.shape[0] == 0:
        return
    lengths = np.diff(indptr)
    order = np.argsort(-lengths, kind="stable")
    n_le = np.cumsum(np.bincount(lengths, minlength=int(lengths.max()) + 1))
    n_rows = lengths.shape[0]
    for j in range(int(lengths.max())):
        rows = order[:n_rows - int(n_le[j])]  # rows with more than j entries
        k = indptr[rows] + j
        out[rows] += data[k, None] * x[indices[k]]


def _csr_matmat_loop(indptr, indices, data, x, out):
    n_rows = indptr.shape[0] - 1
    n_cols = x.shape[1]
    for i in range(n_rows):
        for k in range(indptr[i], indptr[i + 1]):
            j = indices[k]
            v = data[k]
            for c in range(n_cols):
                out[i, c] += v * x[j, c]


if HAS_NUMBA:
    _csr_matmat_jit = njit(cache=True)(_csr_matmat_loop)


def csr_matmat(indptr, indices, data, x, backend=None):
    """Dense result of ``A @ x`` for a CSR matrix A and 2-D array x.

    ``x`` must have as many rows as A has columns; the caller guarantees
    this (no cheap way to check column count from CSR arrays alone).
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.zeros((indptr.shape[0] - 1, x.shape[1]), dtype=np.float64)
    if active_backend(backend) == "numba":
        _csr_matmat_jit(indptr, indices, data, x, out)
    else:
        _csr_matmat_numpy(indptr, indices, data, x, out)
    return out


# ---------------------------------------------------------------------------
# k-hop neighborhoods (closed balls) for every vertex of a graph
# ---------------------------------------------------------------------------

def _ball_bfs(indptr, indices, source, hops, stamp, queue):
    # breadth-first search with per-source stamps; returns member count
    stamp[source] = source
    queue[0] = source
    head = 0
    tail = 1
    for _ in range(hops):
        level_end = tail
        while head < level_end:
            u = queue[head]
            head += 1
            for k in range(indptr[u], indptr[u + 1]):
                w = indices[k]
                if stamp[w] != source:
                    stamp[w] = source
                    queue[tail] = w
                    tail += 1
        if tail == level_end:
            break
    return tail


def _khop_balls_loop(indptr, indices, hops):
    n = indptr.shape[0] - 1
    stamp = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    ball_indptr = np.zeros(n + 1, dtype=np.int64)
    for v in range(n):
        ball_indptr[v + 1] = _ball_bfs(indptr, indices, v, hops, stamp, queue)
    for v in range(n):
        ball_indptr[v + 1] += ball_indptr[v]
    ball_indices = np.empty(ball_indptr[n], dtype=np.int64)
    stamp[:] = -1
    for v in range(n):
        count = _ball_bfs(indptr, indices, v, hops, stamp, queue)
        ball_indices[ball_indptr[v]:ball_indptr[v] + count] = np.sort(queue[:count])
    return ball_indptr, ball_indices


if HAS_NUMBA:
    _ball_bfs = njit(cache=True)(_ball_bfs)
    _khop_balls_jit = njit(cache=True)(_khop_balls_loop)


def _gather_slices(indptr, indices, rows):
    # concatenate indices[indptr[r]:indptr[r+1]] over rows, vectorized
    lens = indptr[rows + 1] - indptr[rows]
    total = int(lens.sum())
    if total == 0:
        return np.empty(0, dtype=indices.dtype)
    out_starts = np.zeros(rows.shape[0], dtype=np.int64)
    np.cumsum(lens[:-1], out=out_starts[1:])
    flat = np.repeat(indptr[rows] - out_starts, lens) + np.arange(total)
    return indices[flat]


def _khop_balls_numpy(indptr, indices, hops):
    n = indptr.shape[0] - 1
    sources = np.arange(n, dtype=np.int64)
    members = sources.copy()
    for _ in range(hops):
        reps = indptr[members + 1] - indptr[members]
        grown_sources = np.concatenate([sources, np.repeat(sources, reps)])
        grown_members = np.concatenate([members, _gather_slices(indptr, indices, members)])
        keys = np.unique(grown_sources * n + grown_members)
        new_sources = keys // n
        if new_sources.shape[0] == sources.shape[0]:
            break
        sources = new_sources
        members = keys % n
    ball_indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(sources, minlength=n), out=ball_indptr[1:])
    return ball_indptr, members


def khop_balls(indptr, indices, hops, backend=None):
    """Closed k-hop ball around every vertex of a CSR adjacency structure.

    Returns ``(ball_indptr, ball_indices)`` where the slice for vertex v
    lists, in ascending order, every vertex within graph distance ``hops``
    of v (v itself included).
    """
    if hops < 1:
        raise ValueError("hops must be >= 1")
    if active_backend(backend) == "numba":
        return _khop_balls_jit(indptr, indices, np.int64(hops))
    return _khop_balls_numpy(indptr, indices, hops)


def warmup(backend=None):
    """Trigger jit compilation on tiny inputs so timings exclude it."""
    if active_backend(backend) != "numba":
        return
    indptr = np.array([0, 1, 2], dtype=np.int64)
    indices = np.array([1, 0], dtype=np.int64)
    data = np.ones(2, dtype=np.float64)
    csr_matmat(indptr, indices, data, np.ones((2, 1)), backend="numba")
    khop_balls(indptr, indices, 1, backend="numba")
