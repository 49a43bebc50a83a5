"""Sketched FOM approximants: closed form, quadrature form, and the
interpolation (corrected-Hessenberg) form, plus FOM-distance diagnostics.

All operations return coefficients in raw-basis coordinates, so the
approximant is assembled as sum_i coeffs[i] v_i under any storage policy.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .krylov import KrylovState, WhitenedBasis
from .linalg_core import least_squares
from .matfun import FunctionSpec, QuadratureRule, dense_matfun, \
    node_proximity_warnings
from .sketch import SketchOperator, apply as sketch_apply


class NodeCollisionError(RuntimeError):
    """A quadrature node coincides with a sketched Ritz value."""


@dataclass
class SfomResult:
    """Approximant coefficients plus diagnostics."""

    coeffs: np.ndarray
    form: str
    diagnostics: dict = field(default_factory=dict)


def sfom_closed(wb: WhitenedBasis, f: FunctionSpec) -> SfomResult:
    """Closed-form sketched FOM: coeffs = R^{-1} f(M) Q^H (S b)
    with M = Q^H (SAV R^{-1}) the whitened sketched Rayleigh quotient.

    The triangular solve is applied once to the small coefficient vector,
    never to the full basis.
    """
    m_small = wb.rayleigh()
    fm = dense_matfun(f, m_small)
    y = fm @ (wb.q.conj().T @ wb.sb)
    coeffs = wb.to_raw_coeffs(y)
    diag = {"eps_hat": wb.eps_hat,
            "rank_deficient_whitening": wb.rank_deficient}
    return SfomResult(coeffs, "closed", diag)


def sfom_quadrature(wb: WhitenedBasis, rule: QuadratureRule) -> SfomResult:
    """Quadrature-form sketched FOM: one m x m resolvent solve per node.

    coeffs = R^{-1} sum_i w_i (t_i I + M)^{-1} Q^H (S b).
    """
    m_small = wb.rayleigh()
    lam = np.linalg.eigvals(m_small)
    collisions = [t for t in rule.nodes
                  if np.abs(lam + t).min() < 1e-14 * (1.0 + abs(t))]
    if collisions:
        raise NodeCollisionError(
            f"quadrature node {collisions[0]} coincides with a sketched Ritz value")
    rhs = wb.q.conj().T @ wb.sb
    eye = np.eye(m_small.shape[0])
    y = np.zeros(m_small.shape[0], dtype=complex)
    for t, w in zip(rule.nodes, rule.weights):  # fixed summation order
        y = y + w * np.linalg.solve(t * eye + m_small, rhs)
    coeffs = wb.to_raw_coeffs(y)
    diag = {"eps_hat": wb.eps_hat,
            "quad_order": rule.order,
            "warnings": node_proximity_warnings(rule, lam),
            "rank_deficient_whitening": wb.rank_deficient}
    return SfomResult(coeffs, "quadrature", diag)


def sfom_hhat(state: KrylovState, sketch: SketchOperator,
              f: FunctionSpec) -> SfomResult:
    """Interpolation form via the sketch-corrected Hessenberg matrix.

    Solves x = argmin ||S v_{m+1} - (SV_m) x||, forms
    Hhat = H_m + h_{m+1,m} x e_m^T and returns coeffs = f(Hhat) ||b|| e_1.
    Requires the full-policy state (needs v_{m+1}'s sketch, already stored).
    """
    m = state.m
    sv = state.sv  # s x (m+1)
    if sv.shape[1] < m + 1:
        raise ValueError("state does not hold the sketch of v_{m+1}")
    x_hat = least_squares(sv[:, :m], sv[:, m])
    h_full = state.hessenberg
    h_hat = h_full[:m, :].astype(complex)
    h_hat[:, m - 1] += h_full[m, m - 1] * x_hat
    e1 = np.zeros(m)
    e1[0] = state.b_norm
    coeffs = dense_matfun(f, h_hat) @ e1
    return SfomResult(coeffs, "h-hat", {"eps_hat": state.eps_hat})


def fom_distance_bound(wb: WhitenedBasis, f: FunctionSpec,
                       oracle_rayleigh: np.ndarray, eps: float) -> float:
    """Upper bound on the distance between full FOM and sketched FOM:
    sqrt((1+eps)/(1-eps)) ||b|| ||f(V^+ A V) - f(M)||_2.
    """
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    diff = dense_matfun(f, np.asarray(oracle_rayleigh)) \
        - dense_matfun(f, wb.rayleigh())
    return float(np.sqrt((1 + eps) / (1 - eps)) * wb.b_norm
                 * np.linalg.norm(diff, 2))
