"""Rank-one laminates and their matrix algebra.

`laminate` evaluates the effective tensor of fine alternating layers of two
phases; `moment_laminate` evaluates the equivalent family parametrized by a
volume fraction and a PSD unit-trace moment matrix of layer normals.  The
two are implemented independently so their agreement is a real cross-check.
`layered_field` builds the oscillating two-phase coefficient whose
homogenized limit the laminate formula predicts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDenominator, OutOfRange, SingularInner
from .fem import Mesh2D
from .symmat import SymMat2, eig2, inv, sqrt_psd

__all__ = [
    "LaminateParams",
    "MomentParams",
    "laminate",
    "moment_laminate",
    "mixing_bounds_margins",
    "layered_field",
]


@dataclass(frozen=True)
class LaminateParams:
    """Volume fraction theta of the base phase and unit layer normal e."""

    theta: float
    e: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "e", np.asarray(self.e, dtype=float))
        if not 0.0 <= self.theta <= 1.0:
            raise OutOfRange(f"theta must be in [0, 1], got {self.theta}")
        if abs(np.linalg.norm(self.e) - 1.0) > 1e-12:
            raise OutOfRange("layer normal must be a unit vector")


@dataclass(frozen=True)
class MomentParams:
    """Volume fraction and second-moment matrix of layer normals (PSD, trace 1)."""

    theta: float
    H: SymMat2

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise OutOfRange(f"theta must be in [0, 1], got {self.theta}")
        lo, _ = eig2(self.H)
        if lo < -1e-12:
            raise OutOfRange("moment matrix must be PSD")
        if abs(self.H.trace() - 1.0) > 1e-12:
            raise OutOfRange("moment matrix must have unit trace")


def laminate(A: SymMat2, B: SymMat2, p: LaminateParams) -> SymMat2:
    """Effective tensor of layers of A (fraction 1-theta) and B (fraction theta).

    Attains the weighted harmonic mean along the layer normal and the
    arithmetic mean transversally.
    """
    th = p.theta
    e = p.e
    diff = A - B
    denom = th * A.quad(e) + (1.0 - th) * B.quad(e)
    if denom <= 1e-14:
        raise DegenerateDenominator("normal-direction average is not positive")
    de = diff.matvec(e)
    correction = SymMat2(de[0] * de[0], de[0] * de[1], de[1] * de[1])
    return (1.0 - th) * A + th * B - (th * (1.0 - th) / denom) * correction


def moment_laminate(A: SymMat2, B: SymMat2, p: MomentParams) -> SymMat2:
    """Laminate family member for a moment matrix H of layer normals.

    H is the second-moment matrix of the normals in the plain metric, so
    H = e e^T gives exactly the rank-one laminate with normal e.  The value
    is B + (1-theta)(A-B)[I + theta*Bi*Ht*Bi*(A-B)]^-1 with Bi = B^(-1/2)
    and Ht the base-metric twist of H, normalized back to unit trace.

    The inner matrix has a determinant lower bound depending only on the
    ellipticity range of A and B; falling below half of it flags inputs
    outside that range.
    """
    th = p.theta
    amat, bmat = A.as_array(), B.as_array()
    broot = sqrt_psd(B).as_array()
    ht = broot @ p.H.as_array() @ broot
    ht /= np.trace(ht)
    bis = inv(sqrt_psd(B)).as_array()
    inner = np.eye(2) + th * bis @ ht @ bis @ (amat - bmat)
    mu0 = min(eig2(A)[0], eig2(B)[0])
    mu1 = max(eig2(A)[1], eig2(B)[1])
    det_bound = ((th * mu0 + (1.0 - th) * mu1) / mu1) ** 2
    if np.linalg.det(inner) < 0.5 * det_bound:
        raise SingularInner(
            f"inner determinant {np.linalg.det(inner):.3e} below half the "
            f"lower bound {det_bound:.3e}"
        )
    out = bmat + (1.0 - th) * (amat - bmat) @ np.linalg.inv(inner)
    return SymMat2.from_array(0.5 * (out + out.T))


def mixing_bounds_margins(
    A: SymMat2, B: SymMat2, theta: float, L: SymMat2
) -> tuple[float, float]:
    """Margins of L against the weighted harmonic and arithmetic means.

    Returns (lambda_min(L - harmonic), lambda_min(arithmetic - L)); both are
    nonnegative for any laminate of A and B with base fraction theta.
    """
    harmonic = inv((1.0 - theta) * inv(A) + theta * inv(B))
    arithmetic = (1.0 - theta) * A + theta * B
    return eig2(L - harmonic)[0], eig2(arithmetic - L)[0]


def layered_field(
    mesh: Mesh2D, A: SymMat2, B: SymMat2, p: LaminateParams, eps: float
) -> np.ndarray:
    """(nt, 3) oscillating coefficient: layers of width eps normal to e.

    Element centroids with fractional part of <x, e>/eps in [theta, 1) get
    phase A, the rest get B.  The mesh must resolve eps (no sub-element
    homogenization is attempted).
    """
    if eps <= 0.0:
        raise OutOfRange("eps must be positive")
    t = (mesh.centroids @ p.e) / eps
    frac = t - np.floor(t)
    is_a = frac >= p.theta
    out = np.empty((mesh.n_elements, 3))
    out[is_a] = A.as_triple()
    out[~is_a] = B.as_triple()
    return out
