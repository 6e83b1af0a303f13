"""CSV ingestion: dense and sparse expression, alignment, and parse errors."""

from pathlib import Path

import numpy as np
import pytest

from hyperwave.errors import DuplicateCellError, MissingCellError, ParseError
from hyperwave.ingest import ingest, read_cells, read_expression

FIXTURES = Path(__file__).parent / "fixtures"
CELLS = FIXTURES / "toy_cells.csv"


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestReadCells:
    def test_toy_table(self):
        ids, coords, labels = read_cells(CELLS)
        np.testing.assert_array_equal(ids, ["a", "b", "c"])
        np.testing.assert_array_equal(coords, [[0, 0], [1, 0], [0, 1]])
        assert labels["cell_type"] == ["T", "T", "B"]
        assert labels["condition"] == ["ctrl", "ctrl", "case"]

    def test_header_must_match_exactly(self, tmp_path):
        p = write(tmp_path, "bad.csv", "cell_id,x,y,type\na,0,0,T\n")
        with pytest.raises(ParseError, match="line 1"):
            read_cells(p)

    def test_bad_coordinate_reports_line_and_column(self, tmp_path):
        p = write(tmp_path, "bad.csv",
                  "cell_id,x,y,cell_type,subclass,supertype,condition\n"
                  "a,0.0,0.0,T,T1,T1a,ctrl\n"
                  "b,oops,0.0,T,T1,T1a,ctrl\n")
        with pytest.raises(ParseError, match="line 3.*'x'"):
            read_cells(p)

    def test_duplicate_cell_id(self, tmp_path):
        p = write(tmp_path, "dup.csv",
                  "cell_id,x,y,cell_type,subclass,supertype,condition\n"
                  "a,0,0,T,T1,T1a,ctrl\n"
                  "a,1,0,T,T1,T1a,ctrl\n")
        with pytest.raises(DuplicateCellError, match="'a'"):
            read_cells(p)

    def test_field_count_enforced(self, tmp_path):
        p = write(tmp_path, "short.csv",
                  "cell_id,x,y,cell_type,subclass,supertype,condition\n"
                  "a,0,0,T,T1\n")
        with pytest.raises(ParseError, match="line 2"):
            read_cells(p)

    def test_empty_and_missing_files(self, tmp_path):
        with pytest.raises(ParseError, match="empty"):
            read_cells(write(tmp_path, "empty.csv", ""))
        with pytest.raises(ParseError, match="not found"):
            read_cells(tmp_path / "nope.csv")

    def test_header_only_rejected(self, tmp_path):
        p = write(tmp_path, "h.csv",
                  "cell_id,x,y,cell_type,subclass,supertype,condition\n")
        with pytest.raises(ParseError, match="no cell rows"):
            read_cells(p)


class TestReadExpression:
    ids = np.array(["a", "b", "c"], dtype=object)

    def test_dense_rows_aligned_by_id(self):
        """File order differs from cells order; values land on the right rows."""
        matrix, genes = read_expression(FIXTURES / "toy_expression_dense.csv", self.ids)
        assert genes == ("g1", "g2")
        np.testing.assert_array_equal(matrix, [[3, 0], [0, 2], [1, 1]])

    def test_sparse_equals_dense(self):
        """Triplets (with a duplicate that accumulates) rebuild the dense matrix."""
        dense, dg = read_expression(FIXTURES / "toy_expression_dense.csv", self.ids)
        sparse, sg = read_expression(FIXTURES / "toy_expression_sparse.csv", self.ids)
        assert sg == dg
        np.testing.assert_array_equal(sparse, dense)

    def test_sparse_absent_pairs_are_zero(self):
        assert read_expression(FIXTURES / "toy_expression_sparse.csv",
                               self.ids)[0][0, 1] == 0.0

    def test_dense_unknown_cell(self, tmp_path):
        p = write(tmp_path, "x.csv", "cell_id,g1\na,1\nb,1\nc,1\nz,1\n")
        with pytest.raises(MissingCellError, match="'z'"):
            read_expression(p, self.ids)

    def test_dense_missing_cell(self, tmp_path):
        p = write(tmp_path, "x.csv", "cell_id,g1\na,1\nc,1\n")
        with pytest.raises(MissingCellError, match="'b'"):
            read_expression(p, self.ids)

    def test_dense_duplicate_row(self, tmp_path):
        p = write(tmp_path, "x.csv", "cell_id,g1\na,1\na,2\nb,1\nc,1\n")
        with pytest.raises(DuplicateCellError, match="line 3"):
            read_expression(p, self.ids)

    def test_dense_duplicate_gene_columns(self, tmp_path):
        p = write(tmp_path, "x.csv", "cell_id,g1,g1\na,1,2\nb,1,2\nc,1,2\n")
        with pytest.raises(ParseError, match="duplicate gene columns"):
            read_expression(p, self.ids)

    def test_dense_needs_gene_columns(self, tmp_path):
        p = write(tmp_path, "x.csv", "cell_id\na\n")
        with pytest.raises(ParseError, match="no gene columns"):
            read_expression(p, self.ids)

    def test_sparse_unknown_cell(self, tmp_path):
        p = write(tmp_path, "x.csv", "cell_id,gene,count\nq,g1,1\n")
        with pytest.raises(MissingCellError, match="'q'"):
            read_expression(p, self.ids)

    def test_negative_count_rejected(self, tmp_path):
        p = write(tmp_path, "x.csv", "cell_id,gene,count\na,g1,-2\n")
        with pytest.raises(ParseError, match=">= 0"):
            read_expression(p, self.ids)
        p = write(tmp_path, "y.csv", "cell_id,g1\na,-1\nb,0\nc,0\n")
        with pytest.raises(ParseError, match=">= 0"):
            read_expression(p, self.ids)

    def test_non_numeric_count(self, tmp_path):
        p = write(tmp_path, "x.csv", "cell_id,gene,count\na,g1,lots\n")
        with pytest.raises(ParseError, match="line 2.*'count'"):
            read_expression(p, self.ids)


class TestIngest:
    def test_dense_toy_dataset(self):
        ds = ingest(CELLS, FIXTURES / "toy_expression_dense.csv")
        assert (ds.n, ds.q) == (3, 2)
        assert ds.gene_names == ("g1", "g2")
        assert ds.cell_types.vocab == ("B", "T")
        assert ds.condition.vocab == ("case", "ctrl")
        np.testing.assert_array_equal(ds.condition.labels(), ["ctrl", "ctrl", "case"])
        np.testing.assert_array_equal(ds.expression, [[3, 0], [0, 2], [1, 1]])

    def test_sparse_toy_dataset_identical(self):
        dense = ingest(CELLS, FIXTURES / "toy_expression_dense.csv")
        sparse = ingest(CELLS, FIXTURES / "toy_expression_sparse.csv")
        np.testing.assert_array_equal(dense.expression, sparse.expression)
        assert dense.gene_names == sparse.gene_names
