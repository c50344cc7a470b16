"""Whitening and alignment of raw encoder outputs into principal functions.

Given raw batch outputs F~ and G~ (d x n, columns are samples), the fit
step

1. removes the per-row means,
2. forms the inverse square roots of the two sample covariances,
3. takes the SVD of the whitened cross-covariance
   ``L = (1/n) (C_f^{-1/2} F~)(C_g^{-1/2} G~)^T = U S V^T``, and
4. returns ``A = U^T C_f^{-1/2}`` and ``B = V^T C_g^{-1/2}``.

Applying ``(A, B)`` to the fitting set yields matrices F, G with
``(1/n) F F^T = (1/n) G G^T = I`` and ``(1/n) F G^T`` diagonal with the
estimated component correlations on the diagonal, descending.  On
held-out data the same transform is applied unchanged and those
identities hold only approximately; they are reported, never asserted.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError, DegenerateEmbeddingError
from .linalg import RANK_TOL, as_matrix, eig_sym, inv_sqrt_psd, svd

#: Reported diagonal entries are clipped into this interval; the raw
#: values stay available on the result.
CLAMP_LO = -1.0
CLAMP_HI = 1.0 + 0.01


@dataclass
class WhiteningTransform:
    a: np.ndarray        # d x d, applied to centered F~
    b: np.ndarray        # d x d, applied to centered G~
    mean_f: np.ndarray   # fitting-set row means of F~
    mean_g: np.ndarray   # fitting-set row means of G~
    fitted_on: str = ""


@dataclass
class PrincipalFunctions:
    f: np.ndarray               # d x n
    g: np.ndarray               # d x n
    pic_diagonal: np.ndarray    # clamped for reporting
    raw_diagonal: np.ndarray    # as computed


def _centered_cov(m, which):
    mean = m.mean(axis=1)
    centered = m - mean[:, None]
    cov = centered @ centered.T / m.shape[1]
    w, _ = eig_sym(cov)
    wmax = float(w.max()) if w.size else 0.0
    if wmax <= 0 or float(w.min()) <= RANK_TOL * wmax:
        raise DegenerateEmbeddingError(
            f"{which} outputs collapsed: sample covariance is rank-deficient "
            f"(eigenvalues {np.array2string(w, precision=3)})"
        )
    return mean, centered, cov


def fit_whitening(f_tilde, g_tilde, fitted_on: str = "") -> WhiteningTransform:
    """Fit the whitening-and-alignment transform on one batch.

    Requires ``n > d`` and full-rank centered covariances on both sides;
    a collapsed encoder raises :class:`DegenerateEmbeddingError` naming
    which side went degenerate.
    """
    f_tilde = as_matrix(f_tilde, "f_tilde")
    g_tilde = as_matrix(g_tilde, "g_tilde")
    if f_tilde.shape != g_tilde.shape:
        raise ContractViolationError(
            f"output shapes differ: {f_tilde.shape} vs {g_tilde.shape}"
        )
    d, n = f_tilde.shape
    if n <= d:
        raise ContractViolationError(f"need n > d to fit whitening, got n={n}, d={d}")
    mean_f, fc, c_f = _centered_cov(f_tilde, "F-encoder")
    mean_g, gc, c_g = _centered_cov(g_tilde, "G-encoder")
    cf_root = inv_sqrt_psd(c_f, 0.0)
    cg_root = inv_sqrt_psd(c_g, 0.0)
    cross = (cf_root @ fc) @ (cg_root @ gc).T / n
    u, _, vt = svd(cross)
    return WhiteningTransform(
        a=u.T @ cf_root, b=vt @ cg_root, mean_f=mean_f, mean_g=mean_g, fitted_on=fitted_on
    )


def apply_whitening(w: WhiteningTransform, f_tilde, g_tilde) -> PrincipalFunctions:
    """Apply a fitted transform and estimate the component correlations.

    ``pic_diagonal`` is ``diag((1/n) F G^T)`` clipped into
    ``[-1, 1.01]``; finite-sample estimates can exceed 1, so a clip
    beyond that range only triggers a warning while the raw values are
    kept in ``raw_diagonal``.
    """
    f_tilde = as_matrix(f_tilde, "f_tilde")
    g_tilde = as_matrix(g_tilde, "g_tilde")
    if f_tilde.shape[1] != g_tilde.shape[1]:
        raise ContractViolationError("f_tilde and g_tilde sample counts differ")
    d = w.a.shape[0]
    if f_tilde.shape[0] != d or g_tilde.shape[0] != d:
        raise ContractViolationError("output width does not match the fitted transform")
    f = w.a @ (f_tilde - w.mean_f[:, None])
    g = w.b @ (g_tilde - w.mean_g[:, None])
    raw = np.einsum("ij,ij->i", f, g) / f.shape[1]
    clamped = np.clip(raw, CLAMP_LO, CLAMP_HI)
    if np.any(raw < CLAMP_LO) or np.any(raw > CLAMP_HI):
        warnings.warn(
            f"estimated component correlations outside [{CLAMP_LO}, {CLAMP_HI}] "
            "were clipped for reporting; see raw_diagonal",
            RuntimeWarning,
            stacklevel=2,
        )
    return PrincipalFunctions(f=f, g=g, pic_diagonal=clamped, raw_diagonal=raw)
