"""Dense linear algebra kernel with fixed deterministic conventions.

The decompositions are LAPACK-backed (through numpy) and post-processed
to a fixed sign convention, so repeated calls on the same input are
bit-identical.  Every other module goes through these wrappers instead
of calling numpy directly.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ContractViolationError, NotPsdError, NumericFailureError

# Relative cutoff below which eigen/singular values count as exact zeros
# when inverting.  Rank deficiency does happen in practice, e.g. for
# degenerate contingency tables.
RANK_TOL = 1e-12


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a 2-D float64 array, rejecting NaN/Inf entries."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ContractViolationError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ContractViolationError(f"{name} contains non-finite entries")
    return m


class SvdResult(NamedTuple):
    u: np.ndarray   # left singular vectors in columns, orthonormal
    s: np.ndarray   # singular values, non-negative, descending
    vt: np.ndarray  # right singular vectors, transposed


def _fix_signs(vectors: np.ndarray, companion: np.ndarray | None = None):
    """Flip column signs so the largest-magnitude entry is non-negative.

    Ties on magnitude resolve to the lowest index (``argmax`` takes the
    first maximum).  When ``companion`` is given, its rows are negated
    together with the matching column so products are preserved.
    """
    for j in range(vectors.shape[1]):
        i = int(np.argmax(np.abs(vectors[:, j])))
        if vectors[i, j] < 0:
            vectors[:, j] *= -1.0
            if companion is not None:
                companion[j, :] *= -1.0
    return vectors, companion


def svd(m) -> SvdResult:
    """Thin SVD ``m = u @ diag(s) @ vt`` with deterministic signs.

    Singular values are returned descending.  In each left singular
    vector the entry of largest absolute value is made non-negative and
    the matching right vector is negated accordingly; this makes the
    factorization reproducible bit-for-bit, which plain LAPACK output
    is not guaranteed to be across calls or backends.

    Raises :class:`NumericFailureError` if the underlying iterative
    scheme fails to converge.
    """
    m = as_matrix(m)
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - needs pathological input
        raise NumericFailureError(
            f"svd failed to converge on a {m.shape[0]}x{m.shape[1]} matrix: {exc}"
        ) from exc
    u, vt = _fix_signs(u, vt)
    return SvdResult(u, s, vt)


def eig_sym(m):
    """Eigendecomposition of a symmetric matrix.

    Returns ``(w, v)`` with eigenvalues ``w`` descending and orthonormal
    eigenvectors in the columns of ``v``, sign-fixed like :func:`svd`.
    The input must be symmetric within ``1e-10`` (relative to its
    largest entry), otherwise a :class:`ContractViolationError` is
    raised.
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ContractViolationError(f"eig_sym needs a square matrix, got {m.shape}")
    scale = max(1.0, float(np.abs(m).max()) if m.size else 1.0)
    if m.size and float(np.abs(m - m.T).max()) > 1e-10 * scale:
        raise ContractViolationError("eig_sym input is not symmetric within 1e-10")
    try:
        w, v = np.linalg.eigh((m + m.T) / 2.0)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericFailureError(f"eigendecomposition failed: {exc}") from exc
    w = w[::-1].copy()
    v = v[:, ::-1].copy()
    _fix_signs(v)
    return w, v


def inv_sqrt_psd(m, eps: float = 0.0) -> np.ndarray:
    """Inverse square root ``v @ diag((w + eps)**-0.5) @ v.T`` of a PSD matrix.

    With ``eps == 0`` modes whose eigenvalue falls below
    ``RANK_TOL * max(w)`` are dropped (their inverse root is set to
    zero) instead of blowing up; with ``eps > 0`` every mode stays
    well-conditioned.  Eigenvalues below ``-1e-8`` raise
    :class:`NotPsdError`.
    """
    if eps < 0:
        raise ContractViolationError("eps must be >= 0")
    w, v = eig_sym(m)
    if w.size and float(w.min()) < -1e-8:
        raise NotPsdError(f"matrix has negative eigenvalue {w.min():.3e}")
    w = np.maximum(w, 0.0)
    shifted = w + eps
    inv_root = np.zeros_like(shifted)
    if eps > 0:
        inv_root = shifted ** -0.5
    else:
        wmax = float(w.max()) if w.size else 0.0
        keep = w > RANK_TOL * wmax if wmax > 0 else np.zeros_like(w, dtype=bool)
        inv_root[keep] = w[keep] ** -0.5
    return (v * inv_root) @ v.T
