"""Sparse SPD solves and the smallest generalized eigenpairs of (K, M).

Inverse power iteration with Jacobi-preconditioned conjugate gradients:
simple, deterministic, and adequate because the principal eigenvalue of
these pencils is well separated from the rest of the spectrum.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import NoConvergence

__all__ = ["EigenPair", "SpectralReport", "cg_solve", "principal_pair", "second_eigenvalue"]


@dataclass
class EigenPair:
    """Principal eigenvalue and M-normalized, sign-normalized eigenvector."""

    lam: float
    y: np.ndarray
    residual: float
    iterations: int


@dataclass
class SpectralReport:
    lambda1: float
    lambda2: float
    gap: float


def cg_solve(
    K: sp.spmatrix,
    b: np.ndarray,
    tol: float = 1e-12,
    max_iter: int | None = None,
    x0: np.ndarray | None = None,
) -> np.ndarray:
    """Jacobi-preconditioned CG; stops when ||Kx - b|| <= tol * ||b||."""
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    norm_b = np.linalg.norm(b)
    if norm_b == 0.0:
        return np.zeros(n)
    if max_iter is None:
        max_iter = 10 * n
    dinv = 1.0 / K.diagonal()
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - K @ x
    if np.linalg.norm(r) <= tol * norm_b:
        return x
    z = dinv * r
    p = z.copy()
    rz = r @ z
    for _ in range(max_iter):
        Kp = K @ p
        alpha = rz / (p @ Kp)
        x += alpha * p
        r -= alpha * Kp
        if np.linalg.norm(r) <= tol * norm_b:
            return x
        z = dinv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise NoConvergence(f"CG did not reach tol={tol:g} in {max_iter} iterations")


def _m_normalize(M: sp.spmatrix, y: np.ndarray) -> np.ndarray:
    return y / np.sqrt(y @ (M @ y))


def _sign_normalize(y: np.ndarray) -> np.ndarray:
    return -y if y.sum() < 0 else y


def _rayleigh(K, M, y):
    return (y @ (K @ y)) / (y @ (M @ y))


def principal_pair(
    K: sp.spmatrix,
    M: sp.spmatrix,
    tol: float = 1e-10,
    residual_tol: float = 1e-8,
    max_iter: int = 400,
    cg_tol: float = 1e-11,
    x0: np.ndarray | None = None,
    check_positivity: bool = True,
) -> EigenPair:
    """Smallest generalized eigenpair of (K, M) by inverse power iteration.

    Converged when the relative eigenvalue change is <= tol and the
    residual ||Ky - lam*My|| / ||My|| is <= residual_tol.
    """
    n = K.shape[0]
    y = np.ones(n) if x0 is None else np.array(x0, dtype=float)
    y = _m_normalize(M, y)
    lam = _rayleigh(K, M, y)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        # K(y/lam) ~ My once converging, so y/lam is a sharp warm start
        z = cg_solve(K, M @ y, tol=cg_tol, x0=y / lam)
        y_new = _m_normalize(M, z)
        lam_new = _rayleigh(K, M, y_new)
        My = M @ y_new
        res = np.linalg.norm(K @ y_new - lam_new * My) / np.linalg.norm(My)
        done = abs(lam_new - lam) <= tol * abs(lam_new) and res <= residual_tol
        y, lam = y_new, lam_new
        if done:
            y = _sign_normalize(y)
            if check_positivity and np.any(y < 0):
                warnings.warn(
                    "eigenvector has negative interior entries "
                    "(discrete maximum principle violated on this mesh)",
                    stacklevel=2,
                )
            return EigenPair(lam=lam, y=y, residual=res, iterations=iterations)
    raise NoConvergence(f"inverse iteration stalled after {max_iter} steps")


def second_eigenvalue(
    K: sp.spmatrix,
    M: sp.spmatrix,
    pair1: EigenPair,
    tol: float = 1e-10,
    residual_tol: float = 1e-8,
    max_iter: int = 300,
    cg_tol: float = 1e-11,
) -> SpectralReport:
    """Second eigenvalue by deflated inverse iteration.

    Uses a 2-vector block with Ritz extraction: on symmetric meshes the
    second eigenvalue splits into a near-degenerate pair, which stalls a
    single deflated vector but is captured cleanly by a block.
    """
    y1 = pair1.y

    def deflate(v):
        return v - (v @ (M @ y1)) * y1

    n = K.shape[0]
    t = np.linspace(0.0, 1.0, n)
    block = np.column_stack([np.cos(3.0 * np.pi * t), np.sin(5.0 * np.pi * t)])
    lam = np.inf
    for _ in range(max_iter):
        for j in range(2):
            v = deflate(block[:, j])
            z = cg_solve(K, M @ v, tol=cg_tol, x0=v / max(pair1.lam, 1.0))
            block[:, j] = deflate(z)
        # M-orthonormalize, then 2x2 Rayleigh-Ritz
        block[:, 0] = _m_normalize(M, block[:, 0])
        block[:, 1] -= (block[:, 1] @ (M @ block[:, 0])) * block[:, 0]
        block[:, 1] = _m_normalize(M, block[:, 1])
        a_small = block.T @ (K @ block)
        theta, q = np.linalg.eigh(0.5 * (a_small + a_small.T))
        block = block @ q
        lam_new = theta[0]
        y = block[:, 0]
        My = M @ y
        res = np.linalg.norm(K @ y - lam_new * My) / np.linalg.norm(My)
        done = abs(lam_new - lam) <= tol * abs(lam_new) and res <= residual_tol
        lam = lam_new
        if done:
            return SpectralReport(lambda1=pair1.lam, lambda2=lam, gap=lam - pair1.lam)
    raise NoConvergence(f"deflated block iteration stalled after {max_iter} steps")
