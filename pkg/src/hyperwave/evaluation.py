"""Embedding evaluation: Vendi diversity, linear probes, spectral clustering.

Everything here is deterministic at fixed seeds: the probe is a full-batch
first-order solver with an analytically safe step size, and clustering uses
seeded greedy farthest-point initialization, so repeated runs at thread
count 1 reproduce metrics bit-for-bit.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg
from scipy.stats import rankdata

from .errors import (
    ClassTooSmallError,
    ConfigError,
    DataError,
    EigenSolverError,
    SingleClassError,
    ZeroRowError,
)


@dataclass(frozen=True)
class EvalConfig:
    """Probe and scoring knobs shared by the evaluation entry points."""

    standardize: bool = True
    train_fraction: float = 0.8
    l2_penalty: float = 1e-2
    max_iterations: int = 500
    tolerance: float = 1e-8
    seeds: tuple = (0, 1, 2, 3, 4)

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"train_fraction must be in (0,1), got {self.train_fraction}")
        if self.l2_penalty < 0:
            raise ConfigError(f"l2_penalty must be >= 0, got {self.l2_penalty}")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        if not self.seeds:
            raise ConfigError("at least one probe seed is required")


# ---------------------------------------------------------------------------
# Vendi score
# ---------------------------------------------------------------------------

def standardize_columns(x: np.ndarray, mean=None, std=None):
    """Column z-scoring; constant columns are centered and left unscaled."""
    if mean is None:
        mean = x.mean(axis=0)
    if std is None:
        std = x.std(axis=0)
        std = np.where(std > 0, std, 1.0)
    return (x - mean) / std, mean, std


def vendi_score(
    features,
    kernel: str = "cosine",
    standardize: bool = False,
    bandwidth: Optional[float] = None,
) -> float:
    """Effective diversity of the rows: exp of the kernel eigenvalue entropy.

    Builds an m-by-m unit-diagonal similarity matrix K, takes the
    eigenvalues of K/m and returns exp(-sum lam*log(lam)).  Always lies in
    [1, m]; identical rows collapse to 1, mutually orthogonal rows under the
    cosine kernel reach m.
    """
    x = np.ascontiguousarray(np.asarray(features, dtype=np.float64))
    if x.ndim != 2 or x.shape[0] < 1:
        raise DataError(f"features must be a nonempty 2-D matrix, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise DataError("features contain NaN or Inf")
    m = x.shape[0]
    if standardize:
        x, _, _ = standardize_columns(x)
    if kernel == "cosine":
        norms = np.linalg.norm(x, axis=1)
        if norms.min(initial=1.0) <= 0.0:
            idx = int(np.argmin(norms))
            raise ZeroRowError(f"row {idx} has zero norm; cosine kernel undefined")
        u = x / norms[:, None]
        k_mat = u @ u.T
    elif kernel == "rbf":
        sq = (x * x).sum(axis=1)
        d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (x @ x.T), 0.0)
        if bandwidth is None:
            off = d2[~np.eye(m, dtype=bool)]
            med = float(np.sqrt(np.median(off))) if off.size else 1.0
            bandwidth = med if med > 0 else 1.0
        k_mat = np.exp(-d2 / (2.0 * bandwidth * bandwidth))
    else:
        raise ConfigError(f"unknown kernel {kernel!r}; use 'cosine' or 'rbf'")
    np.fill_diagonal(k_mat, 1.0)
    try:
        lam = scipy.linalg.eigvalsh(k_mat / m)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - rare LAPACK failure
        raise EigenSolverError(f"kernel eigendecomposition failed: {exc}") from exc
    lam = np.clip(lam, 0.0, None)
    nz = lam[lam > 0]
    return float(np.exp(-np.sum(nz * np.log(nz))))


# ---------------------------------------------------------------------------
# linear probe
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassMetrics:
    label: str
    precision: float
    recall: float
    f1: float
    auroc: float
    support: int


@dataclass(frozen=True)
class ProbeMetrics:
    """Test-split metrics of one seeded probe run."""

    accuracy: float
    macro_f1: float
    auroc_ovr: float
    per_class: tuple
    split_seed: int
    converged: bool
    final_grad_norm: float
    iterations: int


@dataclass(frozen=True)
class ProbeReport:
    """Across-seed aggregate; fields mirror the mean +/- std presentation."""

    per_seed: tuple
    mean_accuracy: float
    std_accuracy: float
    mean_macro_f1: float
    std_macro_f1: float
    mean_auroc_ovr: float
    std_auroc_ovr: float
    all_converged: bool


def stratified_split(labels: np.ndarray, train_fraction: float, seed: int):
    """Per-class shuffled split keeping at least one member on each side."""
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        members = members[rng.permutation(members.shape[0])]
        n_train = int(round(train_fraction * members.shape[0]))
        n_train = min(max(n_train, 1), members.shape[0] - 1)
        train_idx.append(members[:n_train])
        test_idx.append(members[n_train:])
    return np.sort(np.concatenate(train_idx)), np.sort(np.concatenate(test_idx))


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    np.exp(shifted, out=shifted)
    shifted /= shifted.sum(axis=1, keepdims=True)
    return shifted


def _largest_singular_value(x: np.ndarray) -> float:
    if min(x.shape) < 10:
        return float(np.linalg.norm(x, 2))
    v0 = np.full(min(x.shape), 1.0 / np.sqrt(min(x.shape)))
    try:
        s = scipy.sparse.linalg.svds(x, k=1, v0=v0, return_singular_vectors=False)
        return float(s[0])
    except Exception:  # ARPACK hiccup: fall back to the dense route
        return float(np.linalg.norm(x, 2))


def fit_multinomial(
    x: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    l2_penalty: float,
    max_iterations: int,
    tolerance: float,
):
    """Multinomial logistic regression by fixed-step full-batch descent.

    The step size 1/L uses the softmax curvature bound
    L = 0.5 * sigma_max(X)^2 / n + l2, which makes the penalized mean
    negative log-likelihood non-increasing at every iteration.  Returns
    (weights, bias, info) where info records the loss trace, final gradient
    norm and convergence flag.
    """
    n, d = x.shape
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0
    sigma = _largest_singular_value(x)
    lipschitz = 0.5 * sigma * sigma / n + l2_penalty
    step = 1.0 / lipschitz
    weights = np.zeros((d, n_classes))
    bias = np.zeros(n_classes)
    loss_trace = []
    grad_norm = np.inf
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        probs = _softmax(x @ weights + bias)
        # guard log(0): probabilities at the true class are bounded away
        # from zero only after the first steps, so clip for the trace
        ll = np.log(np.clip(probs[np.arange(n), y], 1e-300, None))
        loss = -ll.mean() + 0.5 * l2_penalty * float((weights * weights).sum())
        loss_trace.append(loss)
        resid = (probs - onehot) / n
        grad_w = x.T @ resid + l2_penalty * weights
        grad_b = resid.sum(axis=0)
        grad_norm = float(np.sqrt((grad_w * grad_w).sum() + (grad_b * grad_b).sum()))
        if grad_norm <= tolerance:
            converged = True
            break
        weights -= step * grad_w
        bias -= step * grad_b
    info = {
        "loss_trace": np.asarray(loss_trace),
        "grad_norm": grad_norm,
        "converged": converged,
        "iterations": iterations,
    }
    return weights, bias, info


def _binary_auroc(scores: np.ndarray, positive: np.ndarray) -> float:
    n_pos = int(positive.sum())
    n_neg = positive.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        return 0.5
    ranks = rankdata(scores)
    return float((ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def _evaluate_predictions(y_true, y_pred, probs, vocab, seed, info) -> ProbeMetrics:
    n_classes = len(vocab)
    accuracy = float((y_pred == y_true).mean())
    per_class = []
    f1s = []
    aurocs = []
    for c in range(n_classes):
        tp = int(((y_pred == c) & (y_true == c)).sum())
        fp = int(((y_pred == c) & (y_true != c)).sum())
        fn = int(((y_pred != c) & (y_true == c)).sum())
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        auroc = _binary_auroc(probs[:, c], y_true == c)
        support = int((y_true == c).sum())
        per_class.append(ClassMetrics(str(vocab[c]), precision, recall, f1, auroc, support))
        f1s.append(f1)
        aurocs.append(auroc)
    return ProbeMetrics(
        accuracy=accuracy,
        macro_f1=float(np.mean(f1s)),
        auroc_ovr=float(np.mean(aurocs)),
        per_class=tuple(per_class),
        split_seed=seed,
        converged=bool(info["converged"]),
        final_grad_norm=float(info["grad_norm"]),
        iterations=int(info["iterations"]),
    )


def linear_probe(features, labels, cfg: EvalConfig = EvalConfig()) -> ProbeReport:
    """Seeded stratified-split probes of a frozen representation.

    Labels may be any categorical sequence; metrics are computed on the
    held-out split per seed and aggregated as mean/std across seeds.  A run
    hitting the iteration cap is flagged, never raised.
    """
    x = np.ascontiguousarray(np.asarray(features, dtype=np.float64))
    if x.ndim != 2:
        raise DataError(f"features must be 2-D, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise DataError("features contain NaN or Inf")
    raw = np.asarray([str(v) for v in labels], dtype=object)
    if raw.shape[0] != x.shape[0]:
        raise DataError("labels length does not match feature rows")
    vocab, y = np.unique(raw, return_inverse=True)
    if vocab.shape[0] < 2:
        raise SingleClassError("probe needs at least 2 classes")
    counts = np.bincount(y)
    if counts.min() < 2:
        small = vocab[int(np.argmin(counts))]
        raise ClassTooSmallError(f"class {small!r} has fewer than 2 members")
    per_seed = []
    for seed in cfg.seeds:
        tr, te = stratified_split(y, cfg.train_fraction, seed)
        x_tr, x_te = x[tr], x[te]
        if cfg.standardize:
            x_tr, mean, std = standardize_columns(x_tr)
            x_te = (x_te - mean) / std
        weights, bias, info = fit_multinomial(
            x_tr, y[tr], vocab.shape[0], cfg.l2_penalty, cfg.max_iterations, cfg.tolerance)
        probs = _softmax(x_te @ weights + bias)
        y_pred = np.argmax(probs, axis=1)
        per_seed.append(_evaluate_predictions(y[te], y_pred, probs, vocab, seed, info))
    acc = np.array([p.accuracy for p in per_seed])
    f1 = np.array([p.macro_f1 for p in per_seed])
    auc = np.array([p.auroc_ovr for p in per_seed])
    return ProbeReport(
        per_seed=tuple(per_seed),
        mean_accuracy=float(acc.mean()),
        std_accuracy=float(acc.std()),
        mean_macro_f1=float(f1.mean()),
        std_macro_f1=float(f1.std()),
        mean_auroc_ovr=float(auc.mean()),
        std_auroc_ovr=float(auc.std()),
        all_converged=all(p.converged for p in per_seed),
    )


# ---------------------------------------------------------------------------
# spectral clustering
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClusterResult:
    labels: np.ndarray
    n_clusters: int
    inertia: float
    used_fallback: bool


def _pairwise_sq(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    sq = ((x * x).sum(axis=1)[:, None]
          + (centers * centers).sum(axis=1)[None, :]
          - 2.0 * (x @ centers.T))
    return np.maximum(sq, 0.0)


def _kmeans(x: np.ndarray, k: int, seed: int, restarts: int = 20, max_iter: int = 300):
    """Lloyd iterations with greedy farthest-point init, best inertia wins."""
    n = x.shape[0]
    best_labels, best_inertia = None, np.inf
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        centers = np.empty((k, x.shape[1]))
        centers[0] = x[rng.integers(n)]
        d2 = ((x - centers[0]) ** 2).sum(axis=1)
        for c in range(1, k):
            centers[c] = x[int(np.argmax(d2))]
            d2 = np.minimum(d2, ((x - centers[c]) ** 2).sum(axis=1))
        labels = np.zeros(n, dtype=np.int64)
        for _ in range(max_iter):
            dists = _pairwise_sq(x, centers)
            new_labels = np.argmin(dists, axis=1)
            for c in range(k):
                mask = new_labels == c
                if mask.any():
                    centers[c] = x[mask].mean(axis=0)
                else:
                    # re-seed an emptied cluster at the worst-fit point
                    worst = int(np.argmax(dists[np.arange(n), new_labels]))
                    centers[c] = x[worst]
                    new_labels[worst] = c
            if np.array_equal(new_labels, labels):
                break
            labels = new_labels
        inertia = float(_pairwise_sq(x, centers)[np.arange(n), labels].sum())
        if inertia < best_inertia:
            best_inertia, best_labels = inertia, labels.copy()
    return best_labels, best_inertia


def _cosine_knn_affinity(x: np.ndarray, n_neighbors: int) -> scipy.sparse.csr_matrix:
    m = x.shape[0]
    norms = np.linalg.norm(x, axis=1)
    if norms.min(initial=1.0) <= 0.0:
        raise EigenSolverError("a zero-norm row makes the cosine graph undefined")
    u = x / norms[:, None]
    k = min(n_neighbors, m - 1)
    rows, cols, vals = [], [], []
    block = max(1, 2**22 // max(m, 1))
    for start in range(0, m, block):
        stop = min(start + block, m)
        sims = u[start:stop] @ u.T
        sims[np.arange(stop - start), np.arange(start, stop)] = -np.inf
        top = np.argpartition(-sims, k - 1, axis=1)[:, :k]
        rows.append(np.repeat(np.arange(start, stop), k))
        cols.append(top.reshape(-1))
        vals.append(np.take_along_axis(sims, top, axis=1).reshape(-1))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.clip(np.concatenate(vals), 0.0, None)
    w = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(m, m))
    w = w.maximum(w.T)
    return w


def _spectral_embedding(x: np.ndarray, n_clusters: int, n_neighbors: int) -> np.ndarray:
    """Row-normalized top eigenvectors of the normalized affinity.

    Any degeneracy on the way (isolated rows, eigensolver trouble,
    unnormalizable embedding rows) is raised as one internal error kind.
    """
    m = x.shape[0]
    w = _cosine_knn_affinity(x, n_neighbors)
    degrees = np.asarray(w.sum(axis=1)).reshape(-1)
    if degrees.min(initial=1.0) <= 0.0:
        raise EigenSolverError("cosine kNN graph has an isolated row")
    inv_sqrt = scipy.sparse.diags(1.0 / np.sqrt(degrees))
    s = inv_sqrt @ w @ inv_sqrt
    s = (s + s.T) * 0.5
    v0 = np.full(m, 1.0 / np.sqrt(m))
    try:
        _, vectors = scipy.sparse.linalg.eigsh(s, k=n_clusters, which="LA", v0=v0)
    except Exception as exc:
        raise EigenSolverError(f"spectral embedding failed: {exc}") from exc
    row_norms = np.linalg.norm(vectors, axis=1)
    if row_norms.min(initial=1.0) <= 1e-12:
        raise EigenSolverError("spectral embedding has unnormalizable rows")
    return vectors / row_norms[:, None]


def spectral_cluster(
    features,
    n_clusters: int,
    n_neighbors: int = 15,
    seed: int = 0,
    restarts: int = 20,
) -> ClusterResult:
    """Normalized spectral clustering of rows with a cosine kNN graph.

    A degenerate spectral embedding (zero-degree rows, eigensolver failure,
    or rows that cannot be normalized) falls back to k-means on the raw
    rows and is flagged in the result rather than raised.
    """
    x = np.ascontiguousarray(np.asarray(features, dtype=np.float64))
    if x.ndim != 2:
        raise DataError(f"features must be 2-D, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise DataError("features contain NaN or Inf")
    m = x.shape[0]
    if n_clusters < 2:
        raise ConfigError(f"n_clusters must be >= 2, got {n_clusters}")
    if m <= n_clusters:
        raise DataError(f"need more rows ({m}) than clusters ({n_clusters})")
    try:
        embedding = _spectral_embedding(x, n_clusters, n_neighbors)
    except EigenSolverError:
        embedding = None
    if embedding is not None:
        labels, inertia = _kmeans(embedding, n_clusters, seed, restarts)
        return ClusterResult(labels=labels, n_clusters=n_clusters,
                             inertia=inertia, used_fallback=False)
    labels, inertia = _kmeans(x, n_clusters, seed, restarts)
    return ClusterResult(labels=labels, n_clusters=n_clusters,
                         inertia=inertia, used_fallback=True)


def adjusted_rand_index(a, b) -> float:
    """Chance-corrected partition agreement in [-1, 1] (1 = identical)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DataError("partitions must have equal length")
    n = a.shape[0]
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)

    def comb2(v):
        return (v * (v - 1)) // 2

    sum_cells = comb2(table).sum()
    sum_rows = comb2(table.sum(axis=1)).sum()
    sum_cols = comb2(table.sum(axis=0)).sum()
    expected = sum_rows * sum_cols / comb2(np.int64(n))
    max_index = 0.5 * (sum_rows + sum_cols)
    if max_index == expected:
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))
