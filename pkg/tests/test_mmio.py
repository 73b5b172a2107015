import gzip

import numpy as np
import pytest

from specfp.mmio import (
    MatrixMarketError,
    load_matrix,
    read_matrix_market,
    write_matrix_market,
)
from specfp.sparse import SparseSymMatrix


def _write(tmp_path, text, name="m.mtx"):
    p = tmp_path / name
    p.write_text(text)
    return p


SYMMETRIC_FILE = """%%MatrixMarket matrix coordinate real symmetric
% comment
3 3 4
1 1 2.0
2 1 -1.0
2 2 2.0
3 3 1.5
"""


class TestRead:
    def test_symmetric_mirroring(self, tmp_path):
        res = read_matrix_market(_write(tmp_path, SYMMETRIC_FILE))
        expected = np.array([[2.0, -1.0, 0.0], [-1.0, 2.0, 0.0], [0.0, 0.0, 1.5]])
        np.testing.assert_allclose(res.matrix.to_dense(), expected)
        assert res.symmetry == "symmetric" and not res.symmetrized

    def test_general_symmetrized_flag(self, tmp_path):
        txt = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 4.0\n2 1 2.0\n"
        res = read_matrix_market(_write(tmp_path, txt))
        assert res.symmetrized
        np.testing.assert_allclose(res.matrix.to_dense(),
                                   np.array([[0.0, 3.0], [3.0, 0.0]]))

    def test_pattern_field(self, tmp_path):
        txt = "%%MatrixMarket matrix coordinate pattern symmetric\n2 2 2\n1 1\n2 1\n"
        res = read_matrix_market(_write(tmp_path, txt))
        np.testing.assert_allclose(res.matrix.to_dense(),
                                   np.array([[1.0, 1.0], [1.0, 0.0]]))
        assert res.field == "pattern"

    def test_integer_field(self, tmp_path):
        txt = "%%MatrixMarket matrix coordinate integer symmetric\n2 2 1\n2 1 7\n"
        res = read_matrix_market(_write(tmp_path, txt))
        assert res.matrix.to_dense()[1, 0] == 7.0

    def test_gzip(self, tmp_path):
        p = tmp_path / "m.mtx.gz"
        with gzip.open(p, "wt") as fh:
            fh.write(SYMMETRIC_FILE)
        assert load_matrix(p).n == 3


class TestErrors:
    @pytest.mark.parametrize("text,line", [
        ("%%NotMM matrix coordinate real general\n1 1 0\n", 1),
        ("%%MatrixMarket matrix array real general\n1 1 0\n", 1),
        ("%%MatrixMarket matrix coordinate complex general\n1 1 0\n", 1),
        ("%%MatrixMarket matrix coordinate real hermitian\n1 1 0\n", 1),
        ("%%MatrixMarket matrix coordinate real general\n1 1\n", 2),
        ("%%MatrixMarket matrix coordinate real general\n2 3 0\n", 2),
        ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 1.0\n", 3),
        ("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n", 3),
    ])
    def test_malformed_reports_line(self, tmp_path, text, line):
        with pytest.raises(MatrixMarketError) as err:
            read_matrix_market(_write(tmp_path, text))
        assert err.value.line == line

    def test_entry_count_mismatch(self, tmp_path):
        txt = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n"
        with pytest.raises(MatrixMarketError, match="declared 2"):
            read_matrix_market(_write(tmp_path, txt))


class TestWrite:
    def test_roundtrip_symmetric(self, tmp_path):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((8, 8)) * (rng.random((8, 8)) < 0.4)
        a = 0.5 * (a + a.T)
        m = SparseSymMatrix.from_dense(a)
        p = tmp_path / "round.mtx"
        write_matrix_market(m, p)
        header = p.read_text().splitlines()[0]
        assert "symmetric" in header
        np.testing.assert_allclose(load_matrix(p).to_dense(), a, rtol=0, atol=0)

    def test_roundtrip_gzip(self, tmp_path):
        m = SparseSymMatrix.from_dense(np.array([[1.0, 0.25], [0.25, -3.0]]))
        p = tmp_path / "round.mtx.gz"
        write_matrix_market(m, p)
        np.testing.assert_allclose(load_matrix(p).to_dense(), m.to_dense())

    def test_full_precision(self, tmp_path):
        v = 1.0 / 3.0
        m = SparseSymMatrix.from_dense(np.array([[v]]))
        p = tmp_path / "prec.mtx"
        write_matrix_market(m, p)
        assert load_matrix(p).to_dense()[0, 0] == v
