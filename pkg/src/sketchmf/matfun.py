"""Function specifications, quadrature rules and dense matrix functions.

Every rule represents f(A)b ~ sum_i w_i (t_i I + A)^{-1} b. Stieltjes
functions get real nonnegative nodes from a scaled Cayley substitution;
entire functions (exp-neg) get complex nodes on a parabolic contour chosen
around the negated sketched Ritz values.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg
import scipy.special

from .linalg_core import dense_eig


class BranchCutError(ValueError):
    """Evaluation point on (or numerically on) the branch cut of f."""


class QuadratureCapExceeded(RuntimeError):
    """Adaptive loop hit the node cap before meeting the tolerance."""

    def __init__(self, cap, discrepancy):
        super().__init__(
            f"quadrature order cap {cap} exceeded; last discrepancy {discrepancy:.3e}")
        self.discrepancy = discrepancy


@dataclass(frozen=True)
class FunctionSpec:
    """A scalar function together with its integral-representation class.

    kind: "inv-sqrt", "inv-pow", "log1p-over-z", "exp-neg",
    "sign-via-invsqrt", "custom-stieltjes", "poly".
    alpha is used by inv-pow (strictly in (0,1)); coeffs by "poly"
    (ascending powers); density by "custom-stieltjes" (callback t -> mu'(t)
    on [0, inf)).
    """

    kind: str
    alpha: Optional[float] = None
    coeffs: Optional[tuple] = None
    density: Optional[Callable] = None

    def __post_init__(self):
        if self.kind == "inv-pow":
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise ValueError("inv-pow requires alpha strictly in (0,1)")
        if self.kind == "poly" and not self.coeffs:
            raise ValueError("poly requires coefficients")
        if self.kind == "custom-stieltjes" and self.density is None:
            raise ValueError("custom-stieltjes requires a density callback")

    @property
    def classification(self) -> str:
        if self.kind in ("inv-sqrt", "inv-pow", "log1p-over-z",
                         "custom-stieltjes"):
            return "stieltjes"
        if self.kind in ("exp-neg", "poly"):
            return "entire"
        return "other"


INV_SQRT = FunctionSpec("inv-sqrt")
EXP_NEG = FunctionSpec("exp-neg")
LOG1P_OVER_Z = FunctionSpec("log1p-over-z")
SIGN = FunctionSpec("sign-via-invsqrt")


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes/weights with semantics f(A)b ~ sum w_i (t_i I + A)^{-1} b."""

    nodes: np.ndarray
    weights: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def order(self) -> int:
        return len(self.nodes)

    def scalar(self, z) -> complex:
        """Apply the rule to the scalar resolvent (oracle for validation)."""
        return complex(np.sum(self.weights / (self.nodes + z)))


def _on_cut(z, tol=1e-13) -> bool:
    z = complex(z)
    return z.real <= 0 and abs(z.imag) <= tol * max(1.0, abs(z.real))


def scalar_eval(f: FunctionSpec, z) -> complex:
    """Principal-branch scalar value f(z)."""
    z = complex(z)
    if f.kind == "inv-sqrt":
        if _on_cut(z):
            raise BranchCutError(f"z={z} on the branch cut of z^(-1/2)")
        return 1.0 / np.sqrt(z)
    if f.kind == "inv-pow":
        if _on_cut(z):
            raise BranchCutError(f"z={z} on the branch cut of z^(-alpha)")
        return z ** (-f.alpha)
    if f.kind == "log1p-over-z":
        if _on_cut(z + 1.0):
            raise BranchCutError(f"z={z} on the branch cut of log(1+z)/z")
        if abs(z) < 1e-8:
            return 1.0 - z / 2 + z * z / 3  # series near the removable point
        return np.log(1.0 + z) / z
    if f.kind == "exp-neg":
        return np.exp(-z)
    if f.kind == "sign-via-invsqrt":
        if abs(z.real) <= 1e-13 * abs(z):
            raise BranchCutError(f"z={z} on the imaginary axis; sign undefined")
        return z / np.sqrt(z * z)
    if f.kind == "poly":
        return complex(np.polyval(list(reversed(f.coeffs)), z))
    if f.kind == "custom-stieltjes":
        raise ValueError("custom-stieltjes has no closed scalar form; "
                         "evaluate through a quadrature rule")
    raise ValueError(f"unknown function kind {f.kind!r}")


def stieltjes_rule(f: FunctionSpec, order: int,
                   z_range: tuple = (0.1, 100.0)) -> QuadratureRule:
    """Quadrature for a Stieltjes function on [0, inf).

    Uses the Cayley substitution t = sigma (1-x)/(1+x) with the scale
    sigma = sqrt(z_lo * z_hi) matched to the expected spectral range, which
    balances the worst-case pole distance across [z_lo, z_hi]. Nodes are
    real nonnegative, weights real.
    """
    if f.classification != "stieltjes":
        raise ValueError(f"{f.kind} is not a Stieltjes function")
    if order < 1:
        raise ValueError("order must be >= 1")
    z_lo, z_hi = z_range
    if not 0 < z_lo <= z_hi:
        raise ValueError("z_range must satisfy 0 < z_lo <= z_hi")
    sigma = math.sqrt(z_lo * z_hi)
    meta = {"family": f.kind, "order": order, "sigma": sigma}
    if f.kind == "inv-sqrt":
        # z^{-1/2} = (1/pi) int_0^inf t^{-1/2} (t+z)^{-1} dt,
        # Gauss-Chebyshev after the substitution: the Chebyshev weight
        # cancels, leaving w_i = (2 sqrt(sigma)/order) / (1+x_i).
        i = np.arange(1, order + 1)
        x = np.cos((2 * i - 1) * np.pi / (2 * order))
        nodes = sigma * (1 - x) / (1 + x)
        weights = (2.0 * math.sqrt(sigma) / order) / (1 + x)
    elif f.kind == "inv-pow":
        # density sin(a pi)/pi * t^{-a}; Gauss-Jacobi with weight
        # (1-x)^{-a} (1+x)^{a-1} absorbs both endpoint singularities of the
        # transformed integrand, leaving a smooth remainder (the a=1/2 case
        # collapses to the Gauss-Chebyshev rule above).
        a = f.alpha
        with np.errstate(invalid="ignore"):
            # scipy hits a benign 0/0 in its recurrence normalization
            # when the two Jacobi exponents sum to -1
            x, wj = scipy.special.roots_jacobi(order, -a, a - 1.0)
        nodes = sigma * (1 - x) / (1 + x)
        weights = (math.sin(a * np.pi) / np.pi) * sigma ** (1 - a) \
            * 2.0 * wj / (1 + x)
    elif f.kind == "log1p-over-z":
        # log(1+z)/z = int_1^inf t^{-1} (t+z)^{-1} dt; shifted Cayley map
        # t = 1 + sigma (1-x)/(1+x), Gauss-Legendre in x.
        x, wl = scipy.special.roots_legendre(order)
        nodes = 1.0 + sigma * (1 - x) / (1 + x)
        weights = wl * 2.0 * sigma / (1 + x) ** 2 / nodes
    elif f.kind == "custom-stieltjes":
        x, wl = scipy.special.roots_legendre(order)
        nodes = sigma * (1 - x) / (1 + x)
        weights = wl * 2.0 * sigma / (1 + x) ** 2 \
            * np.array([f.density(t) for t in nodes])
    else:
        raise ValueError(f"no Stieltjes rule for kind {f.kind!r}")
    return QuadratureRule(nodes.astype(float), weights.astype(float), meta)


_MARGIN_GRID = (0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0)
_CURVATURE_GRID = (0.02, 0.04, 0.08, 0.15, 0.25, 0.4, 0.6, 1.0)


def _parabola_rule(a: float, c: float, order: int, tail: float) -> QuadratureRule:
    half_width = math.sqrt(tail / c)
    u = np.linspace(-half_width, half_width, order)
    du = u[1] - u[0]
    nodes = a + 1j * u - c * u ** 2
    dgamma = 1j - 2 * c * u
    # Cauchy weights for g(t) = exp(t); trapezoid endpoints halved
    weights = np.exp(nodes) * dgamma * du / (2j * np.pi)
    weights[0] *= 0.5
    weights[-1] *= 0.5
    return QuadratureRule(nodes, weights,
                          {"family": "parabola", "order": order,
                           "vertex": a, "curvature": c,
                           "half_width": half_width})


def contour_rule(f: FunctionSpec, ritz: np.ndarray, order: int,
                 tail: float = 39.0) -> QuadratureRule:
    """Parabolic-contour trapezoid rule for the matrix exponential.

    Places gamma(u) = a + iu - cu^2 around the negated Ritz values and
    validates candidate parameters against the scalar oracle at the Ritz
    values themselves, keeping the most accurate (this also fixes the
    contour orientation empirically).
    """
    if f.kind != "exp-neg":
        raise ValueError("contour rule is implemented for exp-neg only")
    ritz = np.asarray(ritz, dtype=complex)
    if ritz.size == 0:
        raise ValueError("need at least one Ritz value")
    neg = -ritz
    fvals = np.exp(-ritz)
    scale = np.abs(fvals).max()
    best = None
    for margin in _MARGIN_GRID:
        a = float(neg.real.max()) + margin
        for c in _CURVATURE_GRID:
            clearance = (a - c * neg.imag ** 2) - neg.real
            if clearance.min() <= 0.05 * margin:
                continue  # parabola fails to enclose with positive margin
            rule = _parabola_rule(a, c, order, tail)
            approx = np.array([rule.scalar(z) for z in ritz])
            err = float(np.abs(approx - fvals).max() / scale)
            if best is None or err < best[0]:
                best = (err, rule)
    if best is None:
        raise ValueError("no parabola encloses the Ritz values with positive "
                         "margin; their imaginary extent is too large")
    err, rule = best
    rule.meta["oracle_error"] = err
    return rule


def adapt_quadrature(evaluate: Callable[[int], np.ndarray], order_lo: int,
                     order_hi: int, tol: float, cap: int = 5000):
    """Adaptive order control by comparing two rule orders.

    evaluate(order) must be deterministic. Accepts the higher-order result
    when the two differ by less than tol, else promotes order_hi to the
    lower slot and retries at floor(sqrt(2) * order_hi), reusing the
    previous result. Returns (accepted vector, final order).
    """
    if not order_lo < order_hi:
        raise ValueError("need order_lo < order_hi")
    q_lo = np.asarray(evaluate(order_lo))
    q_hi = np.asarray(evaluate(order_hi))
    while np.linalg.norm(q_lo - q_hi) >= tol:
        order_hi_next = int(math.sqrt(2) * order_hi)
        if order_hi_next > cap:
            raise QuadratureCapExceeded(cap, float(np.linalg.norm(q_lo - q_hi)))
        q_lo = q_hi
        order_lo, order_hi = order_hi, order_hi_next
        q_hi = np.asarray(evaluate(order_hi))
    return q_hi, order_hi


def node_proximity_warnings(rule: QuadratureRule, eigenvalues: np.ndarray,
                            rtol: float = 1e-8) -> list:
    """Flag eigenvalue/node near-collisions (t_i + lambda ~ 0)."""
    warnings = []
    for lam in np.atleast_1d(eigenvalues):
        dist = np.abs(rule.nodes + lam).min()
        if dist < rtol * (1.0 + abs(lam)):
            warnings.append(
                f"eigenvalue {lam:.6g} within {dist:.2e} of a quadrature node")
    return warnings


def _branch_cut_check(f: FunctionSpec, eigenvalues: np.ndarray) -> None:
    cut_kinds = {"inv-sqrt", "inv-pow", "sign-via-invsqrt", "log1p-over-z"}
    if f.kind not in cut_kinds:
        return
    for lam in eigenvalues:
        try:
            scalar_eval(f, lam)
        except BranchCutError as exc:
            raise BranchCutError(
                f"critical Ritz value: {exc}") from None


def dense_matfun(f: FunctionSpec, mat: np.ndarray,
                 cond_limit: float = 1e8) -> np.ndarray:
    """f(M) for a small square matrix.

    Diagonalization path M = W diag(lam) W^{-1}; if the eigenvector basis
    is worse conditioned than cond_limit, falls back to adaptive resolvent
    quadrature at tolerance 1e-12. Polynomials use exact matrix powers.
    """
    mat = np.asarray(mat)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("dense_matfun requires a square matrix")
    if f.kind == "poly":
        out = np.zeros_like(mat, dtype=complex)
        power = np.eye(mat.shape[0], dtype=complex)
        for c in f.coeffs:
            out = out + c * power
            power = power @ mat
        return out
    lam, w = dense_eig(mat)
    _branch_cut_check(f, lam)
    cond_w = np.linalg.cond(w)
    if cond_w <= cond_limit:
        fl = np.array([scalar_eval(f, z) for z in lam])
        return (w * fl) @ np.linalg.inv(w)
    # ill-conditioned eigenvectors: resolvent quadrature instead
    if f.classification == "stieltjes":
        mags = np.abs(lam)
        z_range = (max(mags.min(), 1e-8), max(mags.max(), 1e-8) + 1.0)

        def evaluate(order):
            rule = stieltjes_rule(f, order, z_range)
            return _resolvent_sum(rule, mat)
    elif f.kind == "exp-neg":
        def evaluate(order):
            rule = contour_rule(f, lam, order)
            return _resolvent_sum(rule, mat)
    else:
        raise ValueError(f"no quadrature fallback for kind {f.kind!r}")
    out, _ = adapt_quadrature(evaluate, 32, 45, tol=1e-12)
    return out.reshape(mat.shape)


def _resolvent_sum(rule: QuadratureRule, mat: np.ndarray) -> np.ndarray:
    eye = np.eye(mat.shape[0])
    acc = np.zeros(mat.shape, dtype=complex)
    for t, w in zip(rule.nodes, rule.weights):
        acc += w * np.linalg.inv(t * eye + mat)
    return acc.ravel()
