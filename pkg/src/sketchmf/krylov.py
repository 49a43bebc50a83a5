"""k-truncated Arnoldi with incremental sketching and basis whitening.

Three basis storage policies: "full" keeps every vector, "window" and
"two-pass" keep only the last k+1. The recurrence itself never depends on
the sketch, so a second pass regenerates the basis bitwise.
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg
import scipy.sparse

from .linalg_core import SparseMatrix, thin_qr, least_squares, dense_eig
from .sketch import SketchOperator, apply as sketch_apply

BREAKDOWN_RTOL = 1e-14


class TwoPassMismatch(RuntimeError):
    """Second pass diverged from the first; determinism was violated."""


def as_matvec(a):
    """Adapt SparseMatrix / scipy sparse / ndarray / matvec-objects."""
    if isinstance(a, SparseMatrix):
        sp = a.to_scipy()
        return (lambda x: sp @ x), a.n_rows
    if scipy.sparse.issparse(a):
        return (lambda x: a @ x), a.shape[0]
    if isinstance(a, np.ndarray):
        return (lambda x: a @ x), a.shape[0]
    if hasattr(a, "matvec"):
        return a.matvec, a.shape[0]
    raise TypeError(f"cannot interpret {type(a)!r} as a linear operator")


@dataclass
class KrylovState:
    """State of the truncated-Arnoldi iteration with on-the-fly sketching.

    After m steps: sv/sav hold s x (m+1) sketches of V_{m+1} and A V_{m+1},
    h is the (m+1) x m banded Hessenberg (exact zeros outside the
    truncation window), and basis holds the stored vectors per policy.
    """

    k: int
    policy: str
    b_norm: float
    m: int = 0
    basis: list = field(default_factory=list)
    basis_start: int = 0          # index of basis[0] in the global sequence
    peak_stored: int = 0
    sv_cols: list = field(default_factory=list)
    sav_cols: list = field(default_factory=list)
    h_cols: list = field(default_factory=list)
    sb: np.ndarray = None
    w: np.ndarray = None          # pending A v_{m+1}, reused next step
    w_norm_pre: float = 0.0
    breakdown: bool = False
    eps_hat: float = 0.0
    embedding_weak: bool = False
    matvec_count: int = 0

    @property
    def sv(self) -> np.ndarray:
        return np.column_stack(self.sv_cols)

    @property
    def sav(self) -> np.ndarray:
        return np.column_stack(self.sav_cols)

    @property
    def hessenberg(self) -> np.ndarray:
        """(m+1) x m Hessenberg with zeros outside the truncation band."""
        h = np.zeros((self.m + 1, self.m), dtype=complex)
        for j, col in enumerate(self.h_cols):
            lo = max(0, j - self.k + 1)
            h[lo:j + 2, j] = col
        return h

    def stored_vector(self, i: int) -> np.ndarray:
        """Basis vector v_{i+1} (0-based index i), if still stored."""
        off = i - self.basis_start
        if off < 0 or off >= len(self.basis):
            raise IndexError(f"basis vector {i} was evicted (policy {self.policy})")
        return self.basis[off]

    def full_basis(self) -> np.ndarray:
        if self.policy != "full":
            raise ValueError("full basis only stored under the 'full' policy")
        return np.column_stack(self.basis[:self.m])

    def _track_eps(self, sketched_unit: np.ndarray) -> None:
        distortion = abs(float(np.linalg.norm(sketched_unit)) ** 2 - 1.0)
        self.eps_hat = max(self.eps_hat, distortion)
        if self.eps_hat >= 1.0:
            self.embedding_weak = True


class WhitenedBasis(NamedTuple):
    """Products of whitening the sketched basis: SV_m = Q R.

    sav_white = SAV_m R^{-1}; sb = S b. The full basis V_m is never
    transformed; coefficients map back through R.
    """

    q: np.ndarray
    r: np.ndarray
    sav_white: np.ndarray
    sb: np.ndarray
    b_norm: float
    eps_hat: float
    rank_deficient: bool

    @property
    def m(self) -> int:
        return self.q.shape[1]

    def rayleigh(self) -> np.ndarray:
        """Whitened sketched Rayleigh quotient M = Q^H (SAV R^{-1})."""
        return self.q.conj().T @ self.sav_white

    def to_raw_coeffs(self, y: np.ndarray) -> np.ndarray:
        """Map whitened coordinates y to raw-basis coordinates R^{-1} y."""
        if self.rank_deficient:
            # numerical pseudoinverse of R, cutoff 1e-12 * sigma_max
            u, sv, vh = np.linalg.svd(self.r)
            cut = 1e-12 * sv[0]
            inv = np.where(sv > cut, 1.0 / np.where(sv > cut, sv, 1.0), 0.0)
            return vh.conj().T @ (inv * (u.conj().T @ y))
        return scipy.linalg.solve_triangular(self.r, y)


def start_arnoldi(a, b, k: int, sketch: Optional[SketchOperator],
                  policy: str = "full") -> KrylovState:
    """Initialize the iteration: v_1 = b/||b||, pending w = A v_1."""
    if k < 1:
        raise ValueError("truncation length k must be >= 1")
    if policy not in ("full", "window", "two-pass"):
        raise ValueError(f"unknown policy {policy!r}")
    matvec, _ = as_matvec(a)
    b = np.asarray(b, dtype=float if not np.iscomplexobj(b) else complex)
    b_norm = float(np.linalg.norm(b))
    v1 = (1.0 / b_norm) * b
    state = KrylovState(k=k, policy=policy, b_norm=b_norm)
    state.basis = [v1]
    state.peak_stored = 1
    w = matvec(v1)
    state.matvec_count = 1
    state.w = w
    state.w_norm_pre = float(np.linalg.norm(w))
    if sketch is not None:
        sv1 = sketch_apply(sketch, v1)
        state.sv_cols.append(sv1)
        state.sav_cols.append(sketch_apply(sketch, w))
        state.sb = b_norm * sv1
        state._track_eps(sv1)
    return state


def arnoldi_step(state: KrylovState, a, sketch: Optional[SketchOperator]) -> KrylovState:
    """Advance the truncated recurrence by one step (in place).

    Orthogonalizes the pending w = A v_m against the last min(k, m) stored
    vectors by modified Gram-Schmidt, normalizes v_{m+1}, sketches it and
    A v_{m+1}, and evicts the oldest vector under limited-memory policies.
    """
    if state.breakdown:
        raise RuntimeError("cannot step after happy breakdown")
    matvec, _ = as_matvec(a)
    j = state.m  # 0-based index of the column being produced
    w = state.w
    lo = max(0, j - state.k + 1)
    hcol = np.zeros(j + 2 - lo, dtype=complex)
    for idx, i in enumerate(range(lo, j + 1)):
        vi = state.stored_vector(i)
        hij = np.vdot(vi, w)
        hcol[idx] = hij
        w = w - hij * vi
    w_norm = float(np.linalg.norm(w))
    hcol[-1] = w_norm
    state.h_cols.append(hcol)
    state.m = j + 1
    if w_norm < BREAKDOWN_RTOL * state.w_norm_pre:
        state.breakdown = True
        return state
    v_next = (1.0 / w_norm) * w
    state.basis.append(v_next)
    if state.policy in ("window", "two-pass"):
        while len(state.basis) > state.k + 1:
            state.basis.pop(0)
            state.basis_start += 1
    state.peak_stored = max(state.peak_stored, len(state.basis))
    w_new = matvec(v_next)
    state.matvec_count += 1
    state.w = w_new
    state.w_norm_pre = float(np.linalg.norm(w_new))
    if sketch is not None:
        sv_next = sketch_apply(sketch, v_next)
        state.sv_cols.append(sv_next)
        state.sav_cols.append(sketch_apply(sketch, w_new))
        state._track_eps(sv_next)
    return state


def arnoldi_build(a, b, m: int, k: int, sketch: Optional[SketchOperator],
                  policy: str = "full") -> KrylovState:
    """Run m truncated-Arnoldi steps (stops early on happy breakdown)."""
    state = start_arnoldi(a, b, k, sketch, policy)
    for _ in range(m):
        arnoldi_step(state, a, sketch)
        if state.breakdown:
            break
    return state


def whiten(state: KrylovState, m: Optional[int] = None) -> WhitenedBasis:
    """Whiten the sketched basis: thin QR of SV_m, SAV_m mapped through R^{-1}.

    The full basis V_m is untouched; R is only ever applied to small
    vectors and matrices.
    """
    if state.sb is None:
        raise ValueError("state was built without a sketch")
    m = state.m if m is None else m
    if not 1 <= m <= state.m:
        raise ValueError(f"m={m} out of range (state has {state.m})")
    sv = np.column_stack(state.sv_cols[:m])
    sav = np.column_stack(state.sav_cols[:m])
    fac = thin_qr(sv)
    if fac.rank_deficient:
        u, svals, vh = np.linalg.svd(fac.r)
        cut = 1e-12 * svals[0]
        inv = np.where(svals > cut, 1.0 / np.where(svals > cut, svals, 1.0), 0.0)
        sav_white = ((sav @ vh.conj().T) * inv) @ u.conj().T
    else:
        sav_white = scipy.linalg.solve_triangular(
            fac.r, sav.T, trans="T").T
    return WhitenedBasis(fac.q, fac.r, sav_white, state.sb, state.b_norm,
                         state.eps_hat, fac.rank_deficient)


def sketched_ritz(wb: WhitenedBasis) -> np.ndarray:
    """Eigenvalues of the whitened sketched Rayleigh quotient.

    These are the interpolation nodes of the closed-form sketched
    approximant; the contour chooser encircles their negation.
    """
    lam, _ = dense_eig(wb.rayleigh())
    return lam


def accumulate_columns(columns, coeffs) -> np.ndarray:
    """Sum coeffs[i] * columns[i] sequentially (fixed order, reproducible)."""
    acc = None
    for c, col in zip(coeffs, columns):
        term = c * col
        acc = term if acc is None else acc + term
    return acc


def assemble(state: KrylovState, coeffs: np.ndarray) -> np.ndarray:
    """Form sum_i coeffs[i] v_i from a full-policy state.

    Uses the same sequential accumulation order as the two-pass assembly,
    so the two paths agree bitwise.
    """
    if len(coeffs) > state.m:
        raise ValueError("more coefficients than basis vectors")
    return accumulate_columns(state.basis, coeffs)


def two_pass_assemble(a, b, coeffs: np.ndarray, k: int, m: int) -> np.ndarray:
    """Regenerate v_1..v_m with the same truncated recurrence and
    accumulate sum_i coeffs[i] v_i, holding only k+1 vectors at a time.

    The regenerated basis is bitwise identical to the first pass because
    the recurrence never involved the sketch.
    """
    coeffs = np.asarray(coeffs)
    if len(coeffs) != m:
        raise ValueError("need exactly m coefficients")
    state = start_arnoldi(a, b, k, sketch=None, policy="two-pass")
    acc = coeffs[0] * state.basis[0]
    for j in range(1, m):
        arnoldi_step(state, a, None)
        if state.breakdown:
            raise TwoPassMismatch(
                f"breakdown at step {state.m} not seen in first pass")
        acc = acc + coeffs[j] * state.basis[-1]
    return acc


def condition_estimate_of_state(state: KrylovState,
                                m: Optional[int] = None) -> Optional[float]:
    """Condition estimate of the sketched basis SV_m.

    Under a subspace embedding this tracks cond(V_m) up to the distortion
    factor, without needing the (possibly evicted) full basis.
    """
    from .linalg_core import condition_estimate
    if not state.sv_cols:
        return None
    m = state.m if m is None else m
    return condition_estimate(np.column_stack(state.sv_cols[:m]))


def two_pass_state_info(a, b, k: int, m: int):
    """Instrumentation twin of two_pass_assemble: peak storage and matvecs."""
    state = start_arnoldi(a, b, k, sketch=None, policy="two-pass")
    for _ in range(1, m):
        arnoldi_step(state, a, None)
    return {"peak_stored": state.peak_stored,
            "matvec_count": state.matvec_count}
