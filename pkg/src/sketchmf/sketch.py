"""Randomized subspace embeddings S in C^{s x N}, applied matrix-free."""

from dataclasses import dataclass, replace

import numpy as np
import scipy.fft

from .linalg_core import DimensionError


class EmbeddingTooWeak(RuntimeError):
    """Observed distortion eps_hat >= 1; the embedding is unusable."""


@dataclass(frozen=True)
class SketchOperator:
    """Seeded randomized embedding. Applying twice is bitwise reproducible.

    kind is one of "srdct", "gaussian", "sparse-sign", "identity".
    The srdct realizes S = sqrt(n/s) * P F E with E a random +-1 diagonal,
    F the orthonormal DCT-II and P a uniform row subsample without
    replacement, so that E[||S v||^2] = ||v||^2.
    """

    kind: str
    n: int
    s: int
    seed: int
    signs: np.ndarray = None        # srdct
    row_sample: np.ndarray = None   # srdct
    dense: np.ndarray = None        # gaussian / sparse-sign

    def apply(self, v: np.ndarray) -> np.ndarray:
        return apply(self, v)


@dataclass(frozen=True)
class EmbeddingEstimate:
    """Running max of |  ||S v||^2 - 1 | over tracked unit vectors."""

    eps_hat: float = 0.0
    samples: int = 0


def make_sketch(kind: str, n: int, s: int, seed: int) -> SketchOperator:
    """Construct a deterministic sketch operator for (kind, n, s, seed)."""
    if kind == "identity":
        if s != n:
            raise ValueError("identity sketch requires s == n")
        return SketchOperator(kind, n, s, seed)
    if not 1 <= s < n:
        raise ValueError(f"need 1 <= s < n, got s={s}, n={n}")
    rng = np.random.default_rng(seed)
    if kind == "srdct":
        signs = rng.choice([-1.0, 1.0], size=n)
        rows = rng.choice(n, size=s, replace=False)
        return SketchOperator(kind, n, s, seed, signs=signs,
                              row_sample=np.sort(rows))
    if kind == "gaussian":
        g = rng.standard_normal((s, n)) / np.sqrt(s)
        return SketchOperator(kind, n, s, seed, dense=g)
    if kind.startswith("sparse-sign"):
        density = 8
        if ":" in kind:
            density = int(kind.split(":", 1)[1])
        d = min(density, s)
        mat = np.zeros((s, n))
        for j in range(n):
            rows = rng.choice(s, size=d, replace=False)
            mat[rows, j] = rng.choice([-1.0, 1.0], size=d) / np.sqrt(d)
        return SketchOperator(f"sparse-sign:{density}", n, s, seed, dense=mat)
    raise ValueError(f"unknown sketch kind {kind!r}")


def apply(op: SketchOperator, v: np.ndarray) -> np.ndarray:
    """Compute S v (length s)."""
    v = np.asarray(v)
    if v.shape[0] != op.n:
        raise DimensionError(
            f"sketch expects length {op.n}, got {v.shape[0]}")
    if op.kind == "identity":
        return v.astype(complex, copy=True) if np.iscomplexobj(v) else v.copy()
    if op.kind == "srdct":
        y = scipy.fft.dct(op.signs * v, type=2, norm="ortho")
        return np.sqrt(op.n / op.s) * y[op.row_sample]
    return op.dense @ v


def update_eps(est: EmbeddingEstimate, sketched_unit: np.ndarray) -> EmbeddingEstimate:
    """Fold in the sketch of a unit-norm vector; caller guarantees ||v|| = 1."""
    distortion = abs(float(np.linalg.norm(sketched_unit)) ** 2 - 1.0)
    eps = max(est.eps_hat, distortion)
    if eps >= 1.0:
        raise EmbeddingTooWeak(
            f"observed distortion {eps:.3f} >= 1; increase the sketch size s")
    return EmbeddingEstimate(eps_hat=eps, samples=est.samples + 1)


def measure_embedding_eps(op: SketchOperator, basis: np.ndarray) -> float:
    """Exact distortion of S on span(basis), via dense orthonormalization.

    Test/diagnostic helper for small instances: returns the smallest eps
    such that S is an eps-embedding for the given subspace.
    """
    w, _ = np.linalg.qr(np.asarray(basis, dtype=complex))
    sw = np.column_stack([apply(op, w[:, j]) for j in range(w.shape[1])])
    sv = np.linalg.svd(sw, compute_uv=False)
    return float(max(sv[0] ** 2 - 1.0, 1.0 - sv[-1] ** 2, 0.0))
