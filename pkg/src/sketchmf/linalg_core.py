"""Dense and sparse linear-algebra primitives.

All Krylov-side routines work in complex arithmetic even for real input,
since quadrature nodes and sketched Ritz values are complex in general.
Real inputs promote losslessly.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg
import scipy.sparse

DENSE_EIG_LIMIT = 4000


class DimensionError(ValueError):
    """Incompatible operand dimensions."""


@dataclass(frozen=True)
class SparseMatrix:
    """Compressed-sparse-row matrix.

    Attributes
    ----------
    n_rows, n_cols : int
    row_ptr : (n_rows+1,) int64 array, monotone, row_ptr[0] = 0
    col_idx : (nnz,) int64 array, entries < n_cols
    values : (nnz,) float or complex array
    """

    n_rows: int
    n_cols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        rp = np.asarray(self.row_ptr)
        if rp.shape != (self.n_rows + 1,) or rp[0] != 0:
            raise ValueError("row_ptr must have length n_rows+1 and start at 0")
        if np.any(np.diff(rp) < 0):
            raise ValueError("row_ptr must be nondecreasing")
        if rp[-1] != len(self.col_idx) or len(self.col_idx) != len(self.values):
            raise ValueError("nnz mismatch between row_ptr, col_idx, values")
        if len(self.col_idx) and (self.col_idx.min() < 0
                                  or self.col_idx.max() >= self.n_cols):
            raise ValueError("col_idx out of range")

    @property
    def nnz(self) -> int:
        return int(self.row_ptr[-1])

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    def to_scipy(self) -> scipy.sparse.csr_matrix:
        return scipy.sparse.csr_matrix(
            (self.values, self.col_idx, self.row_ptr),
            shape=(self.n_rows, self.n_cols))

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    @classmethod
    def from_scipy(cls, a) -> "SparseMatrix":
        a = scipy.sparse.csr_matrix(a)
        a.sum_duplicates()
        return cls(a.shape[0], a.shape[1],
                   a.indptr.astype(np.int64),
                   a.indices.astype(np.int64),
                   a.data.copy())

    @classmethod
    def from_dense(cls, a) -> "SparseMatrix":
        return cls.from_scipy(scipy.sparse.csr_matrix(np.asarray(a)))

    @classmethod
    def from_coo(cls, n_rows, n_cols, rows, cols, vals) -> "SparseMatrix":
        # duplicates are summed, matching Matrix Market semantics
        a = scipy.sparse.coo_matrix((vals, (rows, cols)),
                                    shape=(n_rows, n_cols))
        return cls.from_scipy(a)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return spmv(self, x)


class ThinQR(NamedTuple):
    """Thin QR factorization with real nonnegative diag(R)."""

    q: np.ndarray
    r: np.ndarray
    rank_deficient: bool


def spmv(a: SparseMatrix, x: np.ndarray) -> np.ndarray:
    """Sparse matrix-vector product A x in O(nnz)."""
    x = np.asarray(x)
    if a.n_cols != x.shape[0]:
        raise DimensionError(
            f"matrix has {a.n_cols} columns, vector has length {x.shape[0]}")
    return a.to_scipy() @ x


def thin_qr(a: np.ndarray, rank_tol: float = 1e-14) -> ThinQR:
    """Householder thin QR with diag(R) real nonnegative.

    Rank deficiency (|r_kk| < rank_tol * ||A||) is flagged, not fatal;
    the caller decides whether to substitute a pseudoinverse for R.
    """
    a = np.asarray(a)
    if a.shape[0] < a.shape[1]:
        raise DimensionError("thin QR requires n_rows >= n_cols")
    q, r = np.linalg.qr(a, mode="reduced")
    d = np.diagonal(r).copy()
    # fix sign convention: rotate each row of R so its diagonal is >= 0
    phase = np.where(np.abs(d) > 0, d / np.where(np.abs(d) > 0, np.abs(d), 1.0),
                     1.0)
    q = q * phase
    r = r * phase.conj()[:, None]
    norm_a = np.linalg.norm(a)
    deficient = bool(np.any(np.abs(np.diagonal(r)) < rank_tol * max(norm_a, 1e-300)))
    return ThinQR(q, r, deficient)


def least_squares(a: np.ndarray, b: np.ndarray, rank_tol: float = 1e-12,
                  return_info: bool = False):
    """Solve argmin ||A x - b|| via QR; minimal-norm solution on rank deficiency.

    Well-conditioned systems go through the thin QR factor. If R is
    numerically singular, falls back to an SVD-based minimal-norm solve with
    singular-value cutoff rank_tol * ||A||, reported in the info dict.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[0] < a.shape[1]:
        raise DimensionError("least_squares requires n_rows >= n_cols")
    if a.shape[0] != b.shape[0]:
        raise DimensionError("incompatible shapes in least_squares")
    fac = thin_qr(a, rank_tol=rank_tol)
    info = {"rank_deficient": fac.rank_deficient}
    if not fac.rank_deficient:
        x = scipy.linalg.solve_triangular(fac.r, fac.q.conj().T @ b)
    else:
        x, *_ = np.linalg.lstsq(a, b, rcond=rank_tol)
    return (x, info) if return_info else x


def _pure_hessenberg(a):
    """Householder reduction to upper Hessenberg, A = Q H Q^H."""
    h = np.array(a, dtype=complex)
    n = h.shape[0]
    q = np.eye(n, dtype=complex)
    for k in range(n - 2):
        x = h[k + 1:, k]
        nx = np.linalg.norm(x)
        if nx == 0:
            continue
        v = x.copy()
        alpha = -np.exp(1j * np.angle(x[0])) * nx if x[0] != 0 else -nx
        v[0] -= alpha
        nv = np.linalg.norm(v)
        if nv == 0:
            continue
        v /= nv
        h[k + 1:, k:] -= 2.0 * np.outer(v, v.conj() @ h[k + 1:, k:])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v.conj())
        q[:, k + 1:] -= 2.0 * np.outer(q[:, k + 1:] @ v, v.conj())
    return q, h


def _pure_qr_iteration(a, max_sweeps=100):
    """Shifted QR iteration on a Hessenberg matrix, returns Schur form.

    A = Z T Z^H with T upper triangular. Complex Wilkinson shifts with
    deflation; pure numpy fallback behind the dense_eig contract.
    """
    z, h = _pure_hessenberg(a)
    n = h.shape[0]
    norm_a = max(np.linalg.norm(a), 1e-300)
    hi = n
    sweeps = 0
    while hi > 1:
        # deflate converged subdiagonals
        for k in range(hi - 1, 0, -1):
            if abs(h[k, k - 1]) < 1e-15 * (abs(h[k, k]) + abs(h[k - 1, k - 1])
                                           + 1e-30 * norm_a):
                h[k, k - 1] = 0.0
        while hi > 1 and h[hi - 1, hi - 2] == 0:
            hi -= 1
        if hi <= 1:
            break
        lo = hi - 1
        while lo > 0 and h[lo, lo - 1] != 0:
            lo -= 1
        # Wilkinson shift from trailing 2x2 of the active block
        t = h[hi - 2:hi, hi - 2:hi]
        tr = t[0, 0] + t[1, 1]
        det = t[0, 0] * t[1, 1] - t[0, 1] * t[1, 0]
        disc = np.sqrt(tr * tr / 4 - det + 0j)
        mu1, mu2 = tr / 2 + disc, tr / 2 - disc
        mu = mu1 if abs(mu1 - t[1, 1]) < abs(mu2 - t[1, 1]) else mu2
        block = h[lo:hi, lo:hi] - mu * np.eye(hi - lo)
        qb, rb = np.linalg.qr(block)
        h[lo:hi, lo:] = qb.conj().T @ h[lo:hi, lo:]
        h[:hi, lo:hi] = h[:hi, lo:hi] @ qb
        z[:, lo:hi] = z[:, lo:hi] @ qb
        sweeps += 1
        if sweeps > max_sweeps * n:
            resid = np.linalg.norm(np.tril(h, -1))
            raise np.linalg.LinAlgError(
                f"QR iteration failed to converge; subdiagonal residual {resid:.2e}")
    return z, np.triu(h)


def _triangular_eigvecs(t):
    """Right eigenvectors of an upper triangular matrix."""
    n = t.shape[0]
    x = np.zeros((n, n), dtype=complex)
    for j in range(n):
        x[j, j] = 1.0
        for i in range(j - 1, -1, -1):
            denom = t[i, i] - t[j, j]
            s = t[i, i + 1:j + 1] @ x[i + 1:j + 1, j]
            if abs(denom) < 1e-300:
                denom = 1e-300
            x[i, j] = -s / denom
        x[:, j] /= np.linalg.norm(x[:, j])
    return x


def dense_eig(a: np.ndarray, backend: str = "lapack"):
    """Eigendecomposition A W = W diag(lam) of a square dense matrix.

    backend="lapack" delegates to scipy; backend="pure" runs the
    Hessenberg + shifted-QR fallback (same contract, slower).
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError("dense_eig requires a square matrix")
    if a.shape[0] > DENSE_EIG_LIMIT:
        raise ValueError(f"matrix exceeds dense limit {DENSE_EIG_LIMIT}")
    if backend == "lapack":
        lam, w = scipy.linalg.eig(a)
        return lam, w
    if backend == "pure":
        z, t = _pure_qr_iteration(a)
        x = _triangular_eigvecs(t)
        return np.diagonal(t).copy(), z @ x
    raise ValueError(f"unknown backend {backend!r}")


def hermitian_min_eig(a: np.ndarray) -> float:
    """Smallest eigenvalue of a Hermitian matrix."""
    a = np.asarray(a)
    norm_a = max(np.linalg.norm(a), 1e-300)
    if np.linalg.norm(a - a.conj().T) > 1e-12 * norm_a:
        raise ValueError("matrix is not Hermitian to tolerance")
    return float(scipy.linalg.eigvalsh(a)[0])


def condition_estimate(a: np.ndarray) -> float:
    """2-norm condition number estimate sigma_max / sigma_min.

    QR first, then exact singular values of the small triangular factor.
    """
    a = np.asarray(a)
    if a.shape[0] < a.shape[1]:
        raise DimensionError("condition_estimate requires n_rows >= n_cols")
    if not np.any(a):
        return np.inf
    r = np.linalg.qr(a, mode="r")
    sv = np.linalg.svd(r, compute_uv=False)
    if sv[-1] == 0:
        return np.inf
    return float(sv[0] / sv[-1])
