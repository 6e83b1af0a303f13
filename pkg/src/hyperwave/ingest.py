"""CSV ingestion into :class:`~hyperwave.niche.SpatialDataset`.

Two files feed a run: a cells table with the fixed header
``cell_id,x,y,cell_type,subclass,supertype,condition`` and an expression
table that is either dense (``cell_id`` plus one column per gene) or a
sparse triplet list with the exact header ``cell_id,gene,count``.  Rows are
aligned by ``cell_id``; label vocabularies are inferred from the cells file
and frozen.
"""

import csv
from pathlib import Path

import numpy as np

from .errors import DuplicateCellError, MissingCellError, ParseError
from .niche import Categorical, SpatialDataset

CELLS_HEADER = ["cell_id", "x", "y", "cell_type", "subclass", "supertype", "condition"]
SPARSE_HEADER = ["cell_id", "gene", "count"]


def _read_rows(path):
    path = Path(path)
    if not path.is_file():
        raise ParseError(f"{path}: file not found")
    with open(path, encoding="utf-8-sig", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}, line 1: file is empty")
    return rows


def _parse_number(token: str, path, line: int, column: str, minimum=None) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(
            f"{path}, line {line}, column {column!r}: {token!r} is not a number") from None
    if not np.isfinite(value):
        raise ParseError(f"{path}, line {line}, column {column!r}: value must be finite")
    if minimum is not None and value < minimum:
        raise ParseError(
            f"{path}, line {line}, column {column!r}: value must be >= {minimum}")
    return value


def read_cells(path):
    """Parse the cells table; returns (ids, coords, label column dict)."""
    rows = _read_rows(path)
    if rows[0] != CELLS_HEADER:
        raise ParseError(
            f"{path}, line 1: header must be {','.join(CELLS_HEADER)!r}, "
            f"got {','.join(rows[0])!r}")
    ids, xs, ys = [], [], []
    labels = {name: [] for name in CELLS_HEADER[3:]}
    seen = set()
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != len(CELLS_HEADER):
            raise ParseError(
                f"{path}, line {line_no}: expected {len(CELLS_HEADER)} fields, got {len(row)}")
        cell_id = row[0]
        if not cell_id:
            raise ParseError(f"{path}, line {line_no}, column 'cell_id': empty id")
        if cell_id in seen:
            raise DuplicateCellError(f"{path}, line {line_no}: duplicate cell_id {cell_id!r}")
        seen.add(cell_id)
        ids.append(cell_id)
        xs.append(_parse_number(row[1], path, line_no, "x"))
        ys.append(_parse_number(row[2], path, line_no, "y"))
        for name, value in zip(CELLS_HEADER[3:], row[3:]):
            labels[name].append(value)
    if not ids:
        raise ParseError(f"{path}, line 2: no cell rows")
    coords = np.column_stack([np.asarray(xs), np.asarray(ys)])
    return np.asarray(ids, dtype=object), coords, labels


def read_expression(path, cell_ids):
    """Parse dense or sparse expression aligned to ``cell_ids`` order.

    The exact header ``cell_id,gene,count`` selects the sparse triplet
    format (duplicate triplets accumulate, absent pairs are zero); any
    other ``cell_id``-led header is read as dense with one column per gene.
    Returns (matrix, gene_names).
    """
    rows = _read_rows(path)
    header = rows[0]
    index = {c: i for i, c in enumerate(cell_ids)}
    if header == SPARSE_HEADER:
        genes = sorted({row[1] for row in rows[1:] if len(row) > 1})
        gene_index = {g: j for j, g in enumerate(genes)}
        matrix = np.zeros((len(cell_ids), len(genes)))
        for line_no, row in enumerate(rows[1:], start=2):
            if len(row) != 3:
                raise ParseError(f"{path}, line {line_no}: expected 3 fields, got {len(row)}")
            if row[0] not in index:
                raise MissingCellError(
                    f"{path}, line {line_no}: unknown cell_id {row[0]!r}")
            value = _parse_number(row[2], path, line_no, "count", minimum=0.0)
            matrix[index[row[0]], gene_index[row[1]]] += value
        return matrix, tuple(genes)
    if not header or header[0] != "cell_id":
        raise ParseError(f"{path}, line 1: first column must be 'cell_id'")
    genes = header[1:]
    if not genes:
        raise ParseError(f"{path}, line 1: no gene columns")
    if len(set(genes)) != len(genes):
        raise ParseError(f"{path}, line 1: duplicate gene columns")
    matrix = np.zeros((len(cell_ids), len(genes)))
    filled = np.zeros(len(cell_ids), dtype=bool)
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(
                f"{path}, line {line_no}: expected {len(header)} fields, got {len(row)}")
        if row[0] not in index:
            raise MissingCellError(f"{path}, line {line_no}: unknown cell_id {row[0]!r}")
        i = index[row[0]]
        if filled[i]:
            raise DuplicateCellError(f"{path}, line {line_no}: duplicate cell_id {row[0]!r}")
        filled[i] = True
        for j, gene in enumerate(genes):
            matrix[i, j] = _parse_number(row[j + 1], path, line_no, gene, minimum=0.0)
    if not filled.all():
        absent = cell_ids[int(np.flatnonzero(~filled)[0])]
        raise MissingCellError(f"{path}: no expression row for cell_id {absent!r}")
    return matrix, tuple(genes)


def ingest(cells_path, expression_path) -> SpatialDataset:
    """Load and align the two tables into one dataset."""
    ids, coords, labels = read_cells(cells_path)
    matrix, genes = read_expression(expression_path, ids)
    return SpatialDataset(
        coords=coords,
        expression=matrix,
        cell_types=Categorical.from_labels(labels["cell_type"]),
        subclasses=Categorical.from_labels(labels["subclass"]),
        supertypes=Categorical.from_labels(labels["supertype"]),
        condition=Categorical.from_labels(labels["condition"]),
        cell_ids=ids,
        gene_names=genes,
    )
