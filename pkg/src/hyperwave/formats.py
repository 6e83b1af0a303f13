"""On-disk output formats: binary matrix, CSV tables, JSON documents.

The representation matrix uses a minimal versioned binary layout — magic
bytes ``HWAV1\\0``, little-endian u64 row and column counts, then row-major
IEEE-754 doubles — so a reader is a few lines in any language and a
write/read round trip is bit-identical.
"""

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError

MAGIC = b"HWAV1\x00"


def write_matrix(path, matrix) -> None:
    arr = np.ascontiguousarray(np.asarray(matrix, dtype="<f8"))
    if arr.ndim != 2:
        raise FormatError(f"matrix must be 2-D, got shape {arr.shape}")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<QQ", arr.shape[0], arr.shape[1]))
        fh.write(arr.tobytes(order="C"))


def read_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + 16:
        raise FormatError(f"{path}: truncated header")
    if blob[:len(MAGIC)] != MAGIC:
        raise FormatError(f"{path}: bad magic bytes {blob[:len(MAGIC)]!r}")
    rows, cols = struct.unpack_from("<QQ", blob, len(MAGIC))
    expected = len(MAGIC) + 16 + rows * cols * 8
    if len(blob) != expected:
        raise FormatError(
            f"{path}: payload is {len(blob)} bytes, header implies {expected}")
    data = np.frombuffer(blob, dtype="<f8", offset=len(MAGIC) + 16)
    return data.reshape(rows, cols).astype(np.float64, copy=True)


def write_matrix_csv(path, matrix, headers, row_ids, id_column: str) -> None:
    matrix = np.asarray(matrix)
    if matrix.shape[1] != len(headers):
        raise FormatError("header count does not match matrix columns")
    if matrix.shape[0] != len(row_ids):
        raise FormatError("row id count does not match matrix rows")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join([id_column] + list(headers)) + "\n")
        for i in range(matrix.shape[0]):
            fh.write(str(row_ids[i]) + "," + ",".join(repr(float(v)) for v in matrix[i]) + "\n")


def write_clusters_csv(path, row_ids, labels, id_column: str = "anchor_cell_id") -> None:
    labels = np.asarray(labels)
    if labels.shape[0] != len(row_ids):
        raise FormatError("cluster label count does not match row ids")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"{id_column},cluster\n")
        for i in range(labels.shape[0]):
            fh.write(f"{row_ids[i]},{int(labels[i])}\n")


def write_json(path, document) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(document, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def output_paths(outdir) -> dict:
    outdir = Path(outdir)
    return {
        "niche_features": outdir / "niche_features.csv",
        "representations": outdir / "representations.bin",
        "representations_csv": outdir / "representations.csv",
        "metrics": outdir / "metrics.json",
        "clusters": outdir / "clusters.csv",
        "manifest": outdir / "manifest.json",
    }
