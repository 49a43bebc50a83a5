import numpy as np
import pytest

from sketchmf import ingest
from sketchmf.ingest import ParseError, ProblemSpec


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestReadMatrixMarket:
    def test_identity_2x2(self, tmp_path):
        p = write(tmp_path, "id.mtx",
                  "%%MatrixMarket matrix coordinate real general\n"
                  "2 2 2\n1 1 1.0\n2 2 1.0\n")
        a = ingest.read_matrix_market(p)
        assert a.nnz == 2
        np.testing.assert_array_equal(a.to_dense(), np.eye(2))

    def test_pattern_symmetric_expansion(self, tmp_path):
        p = write(tmp_path, "sym.mtx",
                  "%%MatrixMarket matrix coordinate pattern symmetric\n"
                  "3 3 1\n2 1\n")
        a = ingest.read_matrix_market(p)
        assert a.nnz == 2
        d = a.to_dense()
        assert d[1, 0] == 1.0 and d[0, 1] == 1.0

    def test_skew_and_hermitian(self, tmp_path):
        p = write(tmp_path, "sk.mtx",
                  "%%MatrixMarket matrix coordinate real skew-symmetric\n"
                  "2 2 1\n2 1 3.0\n")
        d = ingest.read_matrix_market(p).to_dense()
        assert d[1, 0] == 3.0 and d[0, 1] == -3.0
        p = write(tmp_path, "he.mtx",
                  "%%MatrixMarket matrix coordinate complex hermitian\n"
                  "2 2 1\n2 1 1.0 2.0\n")
        d = ingest.read_matrix_market(p).to_dense()
        assert d[1, 0] == 1.0 + 2.0j and d[0, 1] == 1.0 - 2.0j

    def test_round_trip(self, tmp_path, rng):
        from sketchmf.linalg_core import SparseMatrix
        d = rng.standard_normal((5, 5))
        d[np.abs(d) < 0.7] = 0.0
        a = SparseMatrix.from_dense(d)
        p = tmp_path / "rt.mtx"
        ingest.write_matrix_market(a, p)
        b = ingest.read_matrix_market(p)
        np.testing.assert_array_equal(a.to_dense(), b.to_dense())

    def test_bad_header(self, tmp_path):
        p = write(tmp_path, "bad.mtx", "%%MatrixMarket matrix array real general\n")
        with pytest.raises(ParseError, match=":1:"):
            ingest.read_matrix_market(p)

    def test_malformed_entry_has_lineno(self, tmp_path):
        p = write(tmp_path, "bad2.mtx",
                  "%%MatrixMarket matrix coordinate real general\n"
                  "2 2 1\n1 x 1.0\n")
        with pytest.raises(ParseError, match=":3:"):
            ingest.read_matrix_market(p)

    def test_duplicates_summed(self, tmp_path):
        p = write(tmp_path, "dup.mtx",
                  "%%MatrixMarket matrix coordinate real general\n"
                  "2 2 2\n1 1 1.0\n1 1 2.0\n")
        assert ingest.read_matrix_market(p).to_dense()[0, 0] == 3.0


class TestReadEdgeList:
    def test_single_edge(self, tmp_path):
        p = write(tmp_path, "e.txt", "# comment\n0 1\n")
        a = ingest.read_edge_list(p, directed=True)
        assert a.shape == (2, 2)
        assert a.to_dense()[0, 1] == 1.0
        assert a.nnz == 1

    def test_triangle_undirected(self, tmp_path):
        p = write(tmp_path, "t.txt", "0 1\n1 2\n2 0\n")
        a = ingest.read_edge_list(p, directed=False)
        d = a.to_dense()
        assert a.nnz == 6
        np.testing.assert_array_equal(d, d.T)

    def test_duplicate_edges_collapse(self, tmp_path):
        p = write(tmp_path, "d.txt", "0 1\n0 1\n0 1\n")
        a = ingest.read_edge_list(p, directed=True)
        assert a.nnz == 1 and a.to_dense()[0, 1] == 1.0

    def test_first_seen_order_compaction(self, tmp_path):
        p = write(tmp_path, "o.txt", "42 7\n7 42\n")
        d = ingest.read_edge_list(p, directed=True).to_dense()
        assert d[0, 1] == 1.0 and d[1, 0] == 1.0

    def test_non_integer_token(self, tmp_path):
        p = write(tmp_path, "b.txt", "0 x\n")
        with pytest.raises(ParseError, match=":1:"):
            ingest.read_edge_list(p)


class TestGenConvectionDiffusion:
    def test_n2_matches_hand_kronecker(self):
        import scipy.sparse
        n, diff = 2, 1.0
        h = 1.0 / (n + 1)
        lap = np.array([[2.0, -1.0], [-1.0, 2.0]])
        conv = np.array([[1.0, 0.0], [-1.0, 1.0]])
        eye = np.eye(n)
        expected = (diff / h ** 2) * (np.kron(eye, lap) + np.kron(lap, eye)) \
            + (1.0 / h) * (np.kron(conv, eye) + np.kron(eye, conv.T))
        got = ingest.gen_convection_diffusion(n, diff).to_dense()
        np.testing.assert_allclose(got, expected, atol=1e-14)

    @pytest.mark.parametrize("n", [2, 5, 10])
    def test_size_and_sparsity(self, n):
        a = ingest.gen_convection_diffusion(n, 1e-3)
        assert a.shape == (n * n, n * n)
        assert a.nnz <= 5 * n * n

    @pytest.mark.parametrize("n,diff", [(4, 1e-3), (8, 1e-3), (8, 1.0)])
    def test_positive_real(self, n, diff):
        from sketchmf.linalg_core import hermitian_min_eig
        a = ingest.gen_convection_diffusion(n, diff).to_dense()
        assert hermitian_min_eig((a + a.T) / 2) > 0

    def test_bad_params(self):
        with pytest.raises(ValueError):
            ingest.gen_convection_diffusion(1, 1.0)
        with pytest.raises(ValueError):
            ingest.gen_convection_diffusion(4, 0.0)


class TestInDegreeLaplacian:
    def test_single_directed_edge(self, tmp_path):
        p = write(tmp_path, "e.txt", "0 1\n")
        lap = ingest.in_degree_laplacian(ingest.read_edge_list(p)).to_dense()
        np.testing.assert_allclose(lap.sum(axis=0), 0.0, atol=1e-14)
        assert lap[1, 1] == 1.0 and lap[0, 1] == -1.0

    def test_empty_graph(self):
        from sketchmf.linalg_core import SparseMatrix
        a = SparseMatrix.from_dense(np.zeros((3, 3)))
        np.testing.assert_array_equal(ingest.in_degree_laplacian(a).to_dense(),
                                      np.zeros((3, 3)))

    def test_random_digraph_column_sums(self, rng):
        from sketchmf.linalg_core import SparseMatrix
        adj = (rng.uniform(size=(20, 20)) < 0.2).astype(float)
        lap = ingest.in_degree_laplacian(SparseMatrix.from_dense(adj))
        np.testing.assert_allclose(
            np.ones(20) @ lap.to_dense(), 0.0, atol=1e-14)


class TestBuildRhs:
    def test_ones_normalized(self):
        spec = ProblemSpec(("gen",), rhs=("ones",))
        np.testing.assert_allclose(ingest.build_rhs(spec, 4), 0.5 * np.ones(4))

    def test_unit_vector(self):
        spec = ProblemSpec(("gen",), rhs=("unit", 0))
        np.testing.assert_array_equal(ingest.build_rhs(spec, 3), [1.0, 0, 0])

    def test_file(self, tmp_path):
        p = write(tmp_path, "b.txt", "1.5\n-2.0\n0.25\n")
        spec = ProblemSpec(("gen",), rhs=("file", str(p)))
        np.testing.assert_array_equal(ingest.build_rhs(spec, 3),
                                      [1.5, -2.0, 0.25])

    def test_index_out_of_bounds(self):
        with pytest.raises(ValueError):
            ingest.build_rhs(ProblemSpec(("gen",), rhs=("unit", 5)), 3)


class TestSquaredOperator:
    def test_matches_explicit_square(self, rng):
        from sketchmf.linalg_core import SparseMatrix
        q = SparseMatrix.from_dense(rng.standard_normal((10, 10)))
        op = ingest.SquaredOperator(q)
        x = rng.standard_normal(10)
        np.testing.assert_allclose(op.matvec(x),
                                   q.to_dense() @ (q.to_dense() @ x),
                                   rtol=1e-13)
