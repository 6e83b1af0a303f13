"""Multiscale diffusion wavelet filter bank.

Band-pass coefficients are differences of walk powers taken at recorded
scales, plus a low-pass remainder at the largest scale.  Powers are
computed once per input matrix with a cursor over the step count and
shared across all scales, so a full transform costs exactly ``s_J``
operator applications regardless of how many scales are recorded.
"""

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .diffusion import DiffusionOperator, as_signal_matrix
from .errors import InvalidScalesError


@dataclass(frozen=True)
class ScaleSequence:
    """Nondecreasing integer diffusion scales starting 0, 1, ..."""

    scales: tuple

    def __post_init__(self):
        scales = tuple(int(s) for s in self.scales)
        object.__setattr__(self, "scales", scales)
        if len(scales) < 2:
            raise InvalidScalesError("a scale sequence needs at least two entries (J >= 1)")
        if scales[0] != 0 or scales[1] != 1:
            raise InvalidScalesError(f"scales must start 0, 1, got {scales[:2]}")
        if any(b < a for a, b in zip(scales, scales[1:])):
            raise InvalidScalesError(f"scales must be nondecreasing, got {scales}")

    @property
    def j(self) -> int:
        """Number of band-pass filters (the sequence has j+1 entries)."""
        return len(self.scales) - 1

    @property
    def largest(self) -> int:
        return self.scales[-1]


def dyadic_scales(j: int) -> ScaleSequence:
    """Standard dyadic sequence 0, 1, 2, 4, ..., 2^(j-1)."""
    if j < 1:
        raise InvalidScalesError(f"need at least one band-pass scale, got J={j}")
    return ScaleSequence(tuple([0] + [2 ** i for i in range(j)]))


@dataclass(frozen=True)
class WaveletCoefficients:
    """Stacked filter-bank output for one signal matrix.

    ``blocks[i]`` for i < J holds the band-pass output between scales i and
    i+1; ``blocks[J]`` holds the low-pass remainder.  All blocks are views
    into ``flat``, the rows-by-(J+1)*cols feature matrix laid out in scale
    order, so flattening costs nothing.
    """

    flat: np.ndarray
    blocks: List[np.ndarray]
    scales: ScaleSequence
    signal_cols: int

    @property
    def rows(self) -> int:
        return self.flat.shape[0]


def wavelet_transform(op: DiffusionOperator, x, scales: ScaleSequence) -> WaveletCoefficients:
    """Run the filter bank over every column of ``x``.

    Because the first scale is 0, the band-pass blocks and the low-pass
    remainder telescope back to the input signal.
    """
    sig, _ = as_signal_matrix(x, op.n)
    j = scales.j
    cols = sig.shape[1]
    flat = np.empty((op.n, (j + 1) * cols), dtype=np.float64)
    blocks = [flat[:, i * cols:(i + 1) * cols] for i in range(j + 1)]
    prev = sig.copy()
    cur = prev
    step = 0
    for i in range(j):
        target = scales.scales[i + 1]
        while step < target:
            cur = op.apply(cur)
            step += 1
        np.subtract(prev, cur, out=blocks[i])
        prev = cur
    blocks[j][:] = cur
    return WaveletCoefficients(flat=flat, blocks=blocks, scales=scales, signal_cols=cols)


@dataclass(frozen=True)
class OperationCount:
    """Predicted kernel work for one transform (benchmark bookkeeping)."""

    multiply_adds: int
    subtractions: int

    @property
    def total(self) -> int:
        return self.multiply_adds + self.subtractions


def transform_count(scales: ScaleSequence, n_signals: int, nnz: int, rows: int) -> OperationCount:
    """Sparse multiply-add and subtraction counts for a full transform.

    Each diffusion step touches every incidence entry twice (edge-major
    then vertex-major), and each band-pass block is one elementwise
    subtraction; work is linear in the largest scale.
    """
    if n_signals < 1:
        raise ValueError(f"n_signals must be positive, got {n_signals}")
    return OperationCount(
        multiply_adds=2 * nnz * scales.largest * n_signals,
        subtractions=scales.j * rows * n_signals,
    )
