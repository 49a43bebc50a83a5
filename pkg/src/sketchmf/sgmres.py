"""Sketched GMRES: per-node sketched least squares under adaptive
quadrature, the sketched stopping criterion, and convergence-bound
diagnostics for Stieltjes functions of positive real matrices.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .krylov import KrylovState, WhitenedBasis, arnoldi_build, assemble, \
    sketched_ritz, two_pass_assemble, whiten
from .linalg_core import hermitian_min_eig, least_squares
from .matfun import FunctionSpec, QuadratureRule, adapt_quadrature, \
    contour_rule, scalar_eval, stieltjes_rule
from .sketch import SketchOperator, make_sketch
from . import oracles


@dataclass
class SgmresResult:
    coeffs: np.ndarray
    order_final: int
    per_node_residual_norms: np.ndarray
    eps_hat: float
    diagnostics: dict = field(default_factory=dict)


def _default_z_range(wb: WhitenedBasis) -> tuple:
    """Spectral-range guess for the Stieltjes rule, from sketched Ritz values."""
    lam = sketched_ritz(wb)
    # an ill-conditioned whitened basis sheds spurious Ritz values at
    # rounding level; keep only values resolved relative to the radius
    radius = float(np.abs(lam).max()) if lam.size else 1.0
    re = lam.real[lam.real > 1e-8 * radius]
    lo = float(re.min()) if re.size else 1e-2
    hi = radius + 1.0
    return (max(lo, 1e-6), max(hi, 2 * max(lo, 1e-6)))


def _build_rule(f: FunctionSpec, wb: WhitenedBasis, order: int,
                z_range: Optional[tuple]) -> QuadratureRule:
    if f.classification == "stieltjes":
        return stieltjes_rule(f, order, z_range)
    # contour around the negated sketched Ritz values
    return contour_rule(f, sketched_ritz(wb), order)


def _nodes_solve(wb: WhitenedBasis, rule: QuadratureRule,
                 collect_residuals=None):
    """Accumulate y = sum_i w_i argmin ||S b - (t_i Q + SAV R^{-1}) y_i||."""
    y = np.zeros(wb.m, dtype=complex)
    for t, w in zip(rule.nodes, rule.weights):  # fixed reduction order
        mat = t * wb.q + wb.sav_white
        y_t, info = least_squares(mat, wb.sb, return_info=True)
        y = y + w * y_t
        if collect_residuals is not None:
            collect_residuals.append(
                (t, y_t, float(np.linalg.norm(wb.sb - mat @ y_t)),
                 info["rank_deficient"]))
    return y


def sgmres_solve(wb: WhitenedBasis, f: FunctionSpec, tol: float,
                 order_lo: int = 16, order_hi: int = 23,
                 z_range: Optional[tuple] = None,
                 fixed_rule: Optional[QuadratureRule] = None,
                 cap: int = 5000) -> SgmresResult:
    """Sketched GMRES coefficients by adaptive resolvent quadrature.

    Each node costs one s x m least-squares solve; the adaptive loop stops
    when two consecutive rule orders agree to tol. Passing fixed_rule skips
    adaptivity (the fixed-rule setup used in large runs).
    """
    if f.classification == "stieltjes" and z_range is None and fixed_rule is None:
        z_range = _default_z_range(wb)

    per_node = []
    if fixed_rule is not None:
        y = _nodes_solve(wb, fixed_rule, per_node)
        order_final = fixed_rule.order
    else:
        def evaluate(order):
            return _nodes_solve(wb, _build_rule(f, wb, order, z_range))

        y, order_final = adapt_quadrature(evaluate, order_lo, order_hi, tol,
                                          cap=cap)
        # one extra pass at the accepted order to expose per-node diagnostics
        _nodes_solve(wb, _build_rule(f, wb, order_final, z_range), per_node)
    coeffs = wb.to_raw_coeffs(y)
    rank_flags = [p[3] for p in per_node]
    return SgmresResult(
        coeffs, order_final,
        np.array([p[2] for p in per_node]),
        wb.eps_hat,
        {"rank_deficient_nodes": int(np.sum(rank_flags)),
         "z_range": z_range})


def error_estimate(wb_big: WhitenedBasis, coeffs_big: np.ndarray,
                   coeffs_small: np.ndarray, eps_hat: float) -> float:
    """Sketched iterate-difference error estimate, no full basis needed.

    With raw-basis coefficient vectors at dimensions m+d and m,
    returns (1 - eps)^{-1/2} ||R_{m+d} (c_{m+d} - [c_m; 0_d])||, which is
    (1 - eps)^{-1/2} ||S(f_{m+d} - f_m)|| since SV_{m+d} = Q R.
    """
    if not 0.0 <= eps_hat < 1.0:
        raise ValueError("eps_hat must lie in [0, 1)")
    big = np.asarray(coeffs_big, dtype=complex)
    small = np.asarray(coeffs_small, dtype=complex)
    if len(small) > len(big):
        raise ValueError("coeffs_small is longer than coeffs_big")
    padded = np.zeros_like(big)
    padded[:len(small)] = small
    sk = wb_big.r @ (big - padded)
    return float(np.linalg.norm(sk) / np.sqrt(1.0 - eps_hat))


def residual_check(a, b, f_rule: QuadratureRule, m: int, k: int,
                   sketch: SketchOperator,
                   eps: Optional[float] = None) -> dict:
    """max_t ||r_sketched(t)|| / ||r_gmres(t)|| against C_eps.

    Builds a full-policy truncated-Arnoldi state, solves every node of the
    rule by sketched least squares, and compares the true (unsketched)
    residual with the full-GMRES oracle residual for the same shift.
    """
    from .krylov import as_matvec
    matvec, _ = as_matvec(a)
    state = arnoldi_build(a, b, m, k, sketch, policy="full")
    wb = whiten(state)
    v = state.full_basis()
    b = np.asarray(b, dtype=float if not np.iscomplexobj(b) else complex)
    if eps is None:
        eps = state.eps_hat
    c_eps = float(np.sqrt((1 + eps) / (1 - eps)))
    # residuals below the rounding floor carry no information (large shifts
    # converge to ~eps*||b|| within a few steps); report them against the
    # floor so noise-dominated ratios cannot fail the quasi-optimality check
    floor = 1e-13 * np.linalg.norm(b)
    ratios = []
    for t in f_rule.nodes:
        mat = t * wb.q + wb.sav_white
        y_t = least_squares(mat, wb.sb)
        x_t = v @ wb.to_raw_coeffs(y_t)
        r_sketched = np.linalg.norm(b - (t * x_t + matvec(x_t)))
        _, r_oracle = oracles.full_gmres_shift(a, b, t, state.m)
        ratios.append(r_sketched / max(r_oracle, floor))
    return {"max_ratio": float(np.max(ratios)),
            "c_eps": c_eps,
            "eps": float(eps),
            "ratios": np.array(ratios)}


def stieltjes_bound(a_dense: np.ndarray, f: FunctionSpec, eps: float,
                    m: int, b_norm: float = 1.0) -> float:
    """A-priori sketched-GMRES error bound for Stieltjes f and positive
    real A: C_1 C_eps ||b|| sin(beta_0)^m in the A^H A energy norm, with
    delta = lambda_min((A + A^H)/2), rho = lambda_min((A^{-1} + A^{-H})/2),
    C_1 = ||A|| f(rho ||A||^2) and beta_0 = arccos(delta / ||A||).
    """
    if f.classification != "stieltjes":
        raise ValueError("bound applies to Stieltjes functions only")
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1) for the bound to hold")
    a_dense = np.asarray(a_dense)
    delta = hermitian_min_eig((a_dense + a_dense.conj().T) / 2)
    if delta <= 0:
        raise ValueError("matrix is not positive real (delta <= 0)")
    a_inv = np.linalg.inv(a_dense)
    rho = hermitian_min_eig((a_inv + a_inv.conj().T) / 2)
    norm_a = float(np.linalg.norm(a_dense, 2))
    c1 = norm_a * abs(scalar_eval(f, rho * norm_a ** 2))
    c_eps = float(np.sqrt((1 + eps) / (1 - eps)))
    beta0 = np.arccos(min(delta / norm_a, 1.0))
    return float(c1 * c_eps * b_norm * np.sin(beta0) ** m)


def run_sgmres_twopass(a, b, f: FunctionSpec, k: int, m: int,
                       sketch_kind: str, s: int, seed: int, tol: float,
                       order_lo: int = 16, order_hi: int = 23,
                       z_range: Optional[tuple] = None,
                       fixed_rule: Optional[QuadratureRule] = None,
                       policy: str = "two-pass"):
    """Full pipeline: window-policy first pass for the sketches and
    coefficients, second pass to assemble the approximant with only k+1
    stored basis vectors. policy="full" runs the memory-unconstrained twin
    (bitwise-identical result).

    Returns (approximant, info dict with instrumentation counters).
    """
    from .krylov import as_matvec
    _, n = as_matvec(a)
    sketch = make_sketch(sketch_kind, n, s, seed)
    first_policy = "window" if policy == "two-pass" else "full"
    state = arnoldi_build(a, b, m, k, sketch, policy=first_policy)
    wb = whiten(state)
    result = sgmres_solve(wb, f, tol, order_lo, order_hi, z_range=z_range,
                          fixed_rule=fixed_rule)
    coeffs = result.coeffs[:state.m]
    if policy == "two-pass":
        approx = two_pass_assemble(a, b, coeffs, k, state.m)
        from .krylov import two_pass_state_info
        second = two_pass_state_info(a, b, k, state.m)
        info = {"matvec_count": state.matvec_count + second["matvec_count"],
                "peak_stored": max(state.peak_stored, second["peak_stored"]),
                "order_final": result.order_final,
                "eps_hat": state.eps_hat}
    else:
        approx = assemble(state, coeffs)
        info = {"matvec_count": state.matvec_count,
                "peak_stored": state.peak_stored,
                "order_final": result.order_final,
                "eps_hat": state.eps_hat}
    return approx, info
