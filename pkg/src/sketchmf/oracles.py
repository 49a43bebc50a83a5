"""Ground-truth references: dense f(A)b, full FOM/GMRES per shift, and the
best approximation from the Krylov space.

These run their own fully orthogonalized Arnoldi loop, independent of the
truncated/sketched machinery they are used to check.
"""

import numpy as np
import scipy.linalg
import scipy.sparse

from .matfun import FunctionSpec, dense_matfun

DENSE_LIMIT = 4000


def _to_dense(a):
    if isinstance(a, np.ndarray):
        return a
    if scipy.sparse.issparse(a):
        return a.toarray()
    if hasattr(a, "to_dense"):
        return a.to_dense()
    raise TypeError(f"cannot densify {type(a)!r}")


def _full_arnoldi(a_dense, b, m):
    """Plain Arnoldi with full modified Gram-Schmidt; returns V_{m+1}, H."""
    n = a_dense.shape[0]
    m = min(m, n)
    dtype = complex if (np.iscomplexobj(a_dense) or np.iscomplexobj(b)) else float
    v = np.zeros((n, m + 1), dtype=dtype)
    h = np.zeros((m + 1, m), dtype=dtype)
    b_norm = np.linalg.norm(b)
    v[:, 0] = b / b_norm
    for j in range(m):
        w = a_dense @ v[:, j]
        for i in range(j + 1):
            h[i, j] = np.vdot(v[:, i], w)
            w = w - h[i, j] * v[:, i]
        h[j + 1, j] = np.linalg.norm(w)
        if h[j + 1, j] < 1e-14 * np.linalg.norm(a_dense @ v[:, j]):
            return v[:, :j + 1], h[:j + 1, :j + 1], b_norm, True
        v[:, j + 1] = w / h[j + 1, j]
    return v, h, b_norm, False


def exact_fab(a_dense, b, f: FunctionSpec) -> np.ndarray:
    """Dense ground truth f(A) b (including the sign composite)."""
    a_dense = _to_dense(a_dense)
    if a_dense.shape[0] > DENSE_LIMIT:
        raise ValueError(f"matrix exceeds dense limit {DENSE_LIMIT}")
    if f.kind == "sign-via-invsqrt":
        # sign(Q) b = (Q^2)^{-1/2} Q b
        qb = a_dense @ np.asarray(b)
        inv_sqrt = dense_matfun(FunctionSpec("inv-sqrt"), a_dense @ a_dense)
        return inv_sqrt @ qb
    return dense_matfun(f, a_dense) @ np.asarray(b)


def full_fom(a, b, f: FunctionSpec, m: int) -> np.ndarray:
    """Classical FOM approximant ||b|| V_m f(H_m) e_1."""
    a_dense = _to_dense(a)
    v, h, b_norm, broke = _full_arnoldi(a_dense, b, m)
    mm = h.shape[1]
    e1 = np.zeros(mm)
    e1[0] = b_norm
    return v[:, :mm] @ (dense_matfun(f, h[:mm, :mm]) @ e1)


def fom_shift_residual(a, b, t, m: int) -> float:
    """Explicit FOM residual norm for the shifted system (tI + A) x = b:
    | ||b|| h_{m+1,m} e_m^T (t I + H_m)^{-1} e_1 |.
    """
    a_dense = _to_dense(a)
    v, h, b_norm, broke = _full_arnoldi(a_dense, b, m)
    mm = h.shape[1]
    if broke:
        return 0.0
    e1 = np.zeros(mm)
    e1[0] = 1.0
    shifted = t * np.eye(mm) + h[:mm, :mm]
    if abs(np.linalg.det(shifted)) == 0.0:
        raise np.linalg.LinAlgError("t I + H_m is singular")
    y = np.linalg.solve(shifted, e1)
    return float(abs(b_norm * h[mm, mm - 1] * y[mm - 1]))


def full_gmres_shift(a, b, t, m: int):
    """Classical GMRES for (tI + A) x = b over K_m; returns (x, ||r||)."""
    a_dense = _to_dense(a)
    v, h, b_norm, broke = _full_arnoldi(a_dense, b, m)
    mm = h.shape[1]
    basis = v[:, :mm]
    mat = t * basis + a_dense @ basis
    y, *_ = np.linalg.lstsq(mat, np.asarray(b), rcond=None)
    x = basis @ y
    r = np.asarray(b) - mat @ y
    return x, float(np.linalg.norm(r))


def best_approximation_error(a_dense, b, f: FunctionSpec, m: int) -> float:
    """|| (I - W_m W_m^H) f(A) b || with W_m an orthonormal Krylov basis."""
    a_dense = _to_dense(a_dense)
    exact = exact_fab(a_dense, b, f)
    v, h, b_norm, broke = _full_arnoldi(a_dense, b, m)
    w = v[:, :min(m, h.shape[1])]
    # project by least squares: exact minimization over span(W) even when
    # the basis has lost orthogonality to rounding
    coef = np.linalg.lstsq(w, exact, rcond=None)[0]
    return float(np.linalg.norm(exact - w @ coef))


def best_approximation_curve(a_dense, b, f: FunctionSpec, ms) -> dict:
    """best_approximation_error for several m from one Arnoldi sweep."""
    a_dense = _to_dense(a_dense)
    exact = exact_fab(a_dense, b, f)
    m_max = max(ms)
    v, h, b_norm, broke = _full_arnoldi(a_dense, b, m_max)
    avail = h.shape[1]
    out = {}
    for m in ms:
        mm = min(m, avail)
        w = v[:, :mm]
        coef = np.linalg.lstsq(w, exact, rcond=None)[0]
        out[m] = float(np.linalg.norm(exact - w @ coef))
    return out
