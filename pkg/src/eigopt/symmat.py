"""Exact closed-form algebra for symmetric 2x2 matrices.

Scalar values are `SymMat2` instances; per-element matrix fields are plain
ndarrays of shape (n, 3) with columns (a11, a12, a22).  Everything here is
trace/determinant closed form, no iterative eigensolvers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotPSD, SingularMatrix

__all__ = [
    "SymMat2",
    "eig2",
    "inv",
    "sqrt_psd",
    "loewner_leq",
    "in_spectral_bounds",
    "random_sym_in_bounds",
    "field_eigvals",
    "field_matvec",
    "field_quad",
    "field_spectral_norms",
    "constant_field",
]


@dataclass(frozen=True)
class SymMat2:
    """Symmetric 2x2 matrix, upper triangle only."""

    a11: float
    a12: float
    a22: float

    @staticmethod
    def identity() -> "SymMat2":
        return SymMat2(1.0, 0.0, 1.0)

    @staticmethod
    def diag(d1: float, d2: float) -> "SymMat2":
        return SymMat2(float(d1), 0.0, float(d2))

    @staticmethod
    def from_array(a) -> "SymMat2":
        a = np.asarray(a, dtype=float)
        return SymMat2(a[0, 0], 0.5 * (a[0, 1] + a[1, 0]), a[1, 1])

    def as_array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a12, self.a22]])

    def as_triple(self) -> np.ndarray:
        return np.array([self.a11, self.a12, self.a22])

    def matvec(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return np.array(
            [self.a11 * v[0] + self.a12 * v[1], self.a12 * v[0] + self.a22 * v[1]]
        )

    def quad(self, v) -> float:
        """<A v, v>."""
        v = np.asarray(v, dtype=float)
        return float(
            self.a11 * v[0] ** 2 + 2.0 * self.a12 * v[0] * v[1] + self.a22 * v[1] ** 2
        )

    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 ** 2

    def trace(self) -> float:
        return self.a11 + self.a22

    def spectral_norm(self) -> float:
        lo, hi = eig2(self)
        return max(abs(lo), abs(hi))

    def __add__(self, other: "SymMat2") -> "SymMat2":
        return SymMat2(self.a11 + other.a11, self.a12 + other.a12, self.a22 + other.a22)

    def __sub__(self, other: "SymMat2") -> "SymMat2":
        return SymMat2(self.a11 - other.a11, self.a12 - other.a12, self.a22 - other.a22)

    def __mul__(self, c: float) -> "SymMat2":
        return SymMat2(c * self.a11, c * self.a12, c * self.a22)

    __rmul__ = __mul__


def eig2(a: SymMat2) -> tuple[float, float]:
    """Ordered eigenvalue pair (lambda_min, lambda_max)."""
    m = 0.5 * (a.a11 + a.a22)
    d = math.hypot(0.5 * (a.a11 - a.a22), a.a12)
    return m - d, m + d


def inv(a: SymMat2) -> SymMat2:
    """Closed-form inverse; raises SingularMatrix near rank deficiency."""
    det = a.det()
    tol = 1e-14 * a.spectral_norm() ** 2
    if abs(det) <= tol:
        raise SingularMatrix(f"determinant {det:.3e} below tolerance {tol:.3e}")
    return SymMat2(a.a22 / det, -a.a12 / det, a.a11 / det)


def sqrt_psd(a: SymMat2) -> SymMat2:
    """PSD square root via the 2x2 spectral decomposition."""
    lo, hi = eig2(a)
    if lo < -1e-12:
        raise NotPSD(f"smallest eigenvalue {lo:.3e} is negative")
    lo = max(lo, 0.0)
    rlo, rhi = math.sqrt(lo), math.sqrt(hi)
    if a.a12 == 0.0 and a.a11 >= a.a22:
        return SymMat2.diag(rhi, rlo)
    if a.a12 == 0.0:
        return SymMat2.diag(rlo, rhi)
    # eigenvector for hi: (a12, hi - a11), normalized
    vx, vy = a.a12, hi - a.a11
    nrm2 = vx * vx + vy * vy
    c2, s2 = vx * vx / nrm2, vy * vy / nrm2
    cs = vx * vy / nrm2
    return SymMat2(rhi * c2 + rlo * s2, (rhi - rlo) * cs, rhi * s2 + rlo * c2)


def loewner_leq(a: SymMat2, b: SymMat2, tol: float = 1e-12) -> bool:
    """A <= B in the Loewner order, up to `tol` on the smallest eigenvalue."""
    lo, _ = eig2(b - a)
    return lo >= -tol


def in_spectral_bounds(a: SymMat2, mu0: float, mu1: float, tol: float = 1e-12) -> bool:
    """Both eigenvalues inside [mu0, mu1] up to `tol`."""
    lo, hi = eig2(a)
    return lo >= mu0 - tol and hi <= mu1 + tol


def random_sym_in_bounds(rng: np.random.Generator, mu0: float, mu1: float) -> SymMat2:
    """Random rotation + eigenvalues uniform in [mu0, mu1]."""
    phi = rng.uniform(0.0, 2.0 * np.pi)
    u1, u2 = rng.uniform(mu0, mu1, size=2)
    c, s = math.cos(phi), math.sin(phi)
    return SymMat2(c * c * u1 + s * s * u2, c * s * (u1 - u2), s * s * u1 + c * c * u2)


# ---------------------------------------------------------------------------
# vectorized helpers for (n, 3) matrix fields


def constant_field(a: SymMat2, n: int) -> np.ndarray:
    """(n, 3) field with the same matrix on every element."""
    return np.tile(a.as_triple(), (n, 1))


def field_eigvals(field: np.ndarray) -> np.ndarray:
    """(n, 2) ordered eigenvalues for an (n, 3) field."""
    field = np.asarray(field, dtype=float)
    m = 0.5 * (field[:, 0] + field[:, 2])
    d = np.hypot(0.5 * (field[:, 0] - field[:, 2]), field[:, 1])
    return np.column_stack([m - d, m + d])


def field_matvec(field: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """Per-element matrix-vector product, field (n, 3) with vecs (n, 2)."""
    out = np.empty_like(vecs)
    out[:, 0] = field[:, 0] * vecs[:, 0] + field[:, 1] * vecs[:, 1]
    out[:, 1] = field[:, 1] * vecs[:, 0] + field[:, 2] * vecs[:, 1]
    return out


def field_quad(field: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """Per-element quadratic form <A_e v_e, v_e>."""
    return (
        field[:, 0] * vecs[:, 0] ** 2
        + 2.0 * field[:, 1] * vecs[:, 0] * vecs[:, 1]
        + field[:, 2] * vecs[:, 1] ** 2
    )


def field_spectral_norms(field: np.ndarray) -> np.ndarray:
    """Per-element spectral norm of an (n, 3) field."""
    m = 0.5 * (field[:, 0] + field[:, 2])
    d = np.hypot(0.5 * (field[:, 0] - field[:, 2]), field[:, 1])
    return np.abs(m) + d
