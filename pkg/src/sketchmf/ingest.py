"""Problem ingestion: file readers/writers and test-problem generators."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse

from .linalg_core import SparseMatrix


class ParseError(ValueError):
    """Malformed input file; message carries the offending line number."""


@dataclass
class ProblemSpec:
    """Where the operator and right-hand side come from.

    source is one of:
      ("mtx", path), ("edges", path, directed_flag),
      ("conv-diff", n, diffusion), ("in-degree-laplacian", edge_path)
    rhs is one of:
      ("ones",), ("unit", index), ("file", path)
    transform: None, "square" (A <- Q^2, applied matrix-free) or
      "in-degree-laplacian".
    """

    source: tuple
    rhs: tuple = ("ones",)
    transform: Optional[str] = None


def read_matrix_market(path) -> SparseMatrix:
    """Read a Matrix Market coordinate file.

    Supports real/complex/integer/pattern fields and general/symmetric/
    skew-symmetric/hermitian symmetry. Symmetric storage is expanded to
    general; 1-based indices converted; duplicate entries summed.
    """
    with open(path) as fh:
        lines = fh.readlines()
    if not lines:
        raise ParseError(f"{path}:1: empty file")
    header = lines[0].split()
    if (len(header) != 5 or header[0] != "%%MatrixMarket"
            or header[1].lower() != "matrix"
            or header[2].lower() != "coordinate"):
        raise ParseError(f"{path}:1: expected coordinate MatrixMarket header")
    fieldkind = header[3].lower()
    symmetry = header[4].lower()
    if fieldkind not in ("real", "complex", "integer", "pattern"):
        raise ParseError(f"{path}:1: unsupported field {fieldkind!r}")
    if symmetry not in ("general", "symmetric", "skew-symmetric", "hermitian"):
        raise ParseError(f"{path}:1: unsupported symmetry {symmetry!r}")

    lineno = 1
    idx = 1
    while idx < len(lines) and lines[idx].lstrip().startswith("%"):
        idx += 1
    if idx >= len(lines):
        raise ParseError(f"{path}:{idx}: missing size line")
    lineno = idx + 1
    try:
        n_rows, n_cols, nnz = (int(tok) for tok in lines[idx].split())
    except ValueError:
        raise ParseError(f"{path}:{lineno}: malformed size line") from None

    rows, cols, vals = [], [], []
    count = 0
    for off, line in enumerate(lines[idx + 1:], start=lineno + 1):
        line = line.strip()
        if not line or line.startswith("%"):
            continue
        toks = line.split()
        try:
            i = int(toks[0]) - 1
            j = int(toks[1]) - 1
            if fieldkind == "pattern":
                v = 1.0
            elif fieldkind == "complex":
                v = float(toks[2]) + 1j * float(toks[3])
            else:
                v = float(toks[2])
        except (ValueError, IndexError):
            raise ParseError(f"{path}:{off}: malformed entry") from None
        if not (0 <= i < n_rows and 0 <= j < n_cols):
            raise ParseError(f"{path}:{off}: index out of range")
        rows.append(i)
        cols.append(j)
        vals.append(v)
        if symmetry != "general" and i != j:
            rows.append(j)
            cols.append(i)
            if symmetry == "skew-symmetric":
                vals.append(-v)
            elif symmetry == "hermitian":
                vals.append(np.conj(v))
            else:
                vals.append(v)
        count += 1
    if count != nnz:
        raise ParseError(f"{path}: expected {nnz} entries, found {count}")
    return SparseMatrix.from_coo(n_rows, n_cols, rows, cols, vals)


def write_matrix_market(a: SparseMatrix, path) -> None:
    """Write coordinate Matrix Market, 17 significant digits (lossless)."""
    coo = a.to_scipy().tocoo()
    complex_vals = np.iscomplexobj(coo.data)
    fieldkind = "complex" if complex_vals else "real"
    with open(path, "w") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate {fieldkind} general\n")
        fh.write(f"{a.n_rows} {a.n_cols} {coo.nnz}\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            if complex_vals:
                fh.write(f"{i + 1} {j + 1} {v.real:.17g} {v.imag:.17g}\n")
            else:
                fh.write(f"{i + 1} {j + 1} {v:.17g}\n")


def read_edge_list(path, directed: bool = True) -> SparseMatrix:
    """Read a SNAP-style edge list into a binary adjacency matrix.

    Lines are "src dst" (whitespace separated); '#' starts a comment. Node
    ids are compacted to 0..N-1 in first-seen order (this is deterministic
    given the file but affects b = e_i experiments). Duplicate edges
    collapse to value 1; self-loops are kept.
    """
    ids = {}
    rows, cols = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            toks = line.split()
            if len(toks) < 2:
                raise ParseError(f"{path}:{lineno}: expected 'src dst'")
            try:
                u, v = int(toks[0]), int(toks[1])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-integer node id") from None
            for node in (u, v):
                if node not in ids:
                    ids[node] = len(ids)
            rows.append(ids[u])
            cols.append(ids[v])
            if not directed:
                rows.append(ids[v])
                cols.append(ids[u])
    n = len(ids)
    a = scipy.sparse.coo_matrix((np.ones(len(rows)), (rows, cols)),
                                shape=(n, n)).tocsr()
    a.sum_duplicates()
    a.data[:] = 1.0  # collapse duplicates to a binary matrix
    return SparseMatrix.from_scipy(a)


def gen_convection_diffusion(n: int, diffusion: float) -> SparseMatrix:
    """Upwind finite-difference convection-diffusion operator on the unit square.

    A = (D/h^2)(I (x) L + L (x) I) + (1/h)(C (x) I + I (x) C^T) with
    h = 1/(n+1), L = tridiag(-1,2,-1), C = tridiag(-1,1,0); size n^2 x n^2.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if diffusion <= 0:
        raise ValueError("diffusion must be positive")
    h = 1.0 / (n + 1)
    ones = np.ones(n)
    lap = scipy.sparse.diags([-ones[1:], 2 * ones, -ones[1:]], [-1, 0, 1])
    conv = scipy.sparse.diags([-ones[1:], ones], [-1, 0])
    eye = scipy.sparse.identity(n)
    a = (diffusion / h**2) * (scipy.sparse.kron(eye, lap)
                              + scipy.sparse.kron(lap, eye)) \
        + (1.0 / h) * (scipy.sparse.kron(conv, eye)
                       + scipy.sparse.kron(eye, conv.T))
    a = a.tocsr()
    a.eliminate_zeros()  # kron sums leave explicit zeros off the stencil
    return SparseMatrix.from_scipy(a)


def in_degree_laplacian(a: SparseMatrix) -> SparseMatrix:
    """In-degree Laplacian L = D_in - A; every column of L sums to zero."""
    if a.n_rows != a.n_cols:
        raise ValueError("adjacency matrix must be square")
    sp = a.to_scipy()
    d_in = np.asarray(sp.sum(axis=0)).ravel()
    lap = scipy.sparse.diags(d_in) - sp
    return SparseMatrix.from_scipy(lap.tocsr())


def build_rhs(spec: ProblemSpec, n: int) -> np.ndarray:
    """Right-hand-side vector described by spec.rhs."""
    kind = spec.rhs[0]
    if kind == "ones":
        return np.ones(n) / np.sqrt(n)
    if kind == "unit":
        idx = spec.rhs[1]
        if not 0 <= idx < n:
            raise ValueError(f"unit vector index {idx} out of bounds for n={n}")
        b = np.zeros(n)
        b[idx] = 1.0
        return b
    if kind == "file":
        b = np.loadtxt(spec.rhs[1], dtype=float, ndmin=1)
        if b.shape[0] != n:
            raise ValueError(f"rhs file has {b.shape[0]} entries, expected {n}")
        return b
    raise ValueError(f"unknown rhs kind {kind!r}")


class SquaredOperator:
    """Matrix-free Q^2 action; Q itself is never squared explicitly."""

    def __init__(self, q: SparseMatrix):
        if q.n_rows != q.n_cols:
            raise ValueError("operator must be square")
        self._q = q.to_scipy()
        self.shape = (q.n_rows, q.n_cols)
        self.n_rows = q.n_rows
        self.n_cols = q.n_cols

    def matvec(self, x):
        return self._q @ (self._q @ x)
