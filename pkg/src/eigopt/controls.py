"""Two-phase control classes and projections.

Controls are piecewise-constant on mesh elements: a density sigma in [0, 1]
per element, with the total material volume confined to [alpha, beta] times
the domain area.  Binary (characteristic) designs are densities with values
in {0, 1}; all relaxations embed them in the same representation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, FieldSizeMismatch, OutOfRange
from .fem import Mesh2D
from .symmat import SymMat2, field_spectral_norms, in_spectral_bounds, loewner_leq

__all__ = [
    "ControlBounds",
    "coefficient_from_density",
    "project_density",
    "density_volume",
    "density_feasible",
    "linf_distance",
    "save_density_csv",
    "load_density_csv",
]

VOLUME_TOL = 1e-12


@dataclass(frozen=True)
class ControlBounds:
    """Ellipticity bounds, volume-fraction window, and the two phase matrices.

    Admissible combinations: 0 < alpha <= beta < 1 with arbitrary phases,
    the full window (0, 1) with Loewner-incomparable phases, or a singleton
    alpha == beta (degenerate but well-posed fixed-volume problems).
    """

    mu0: float
    mu1: float
    alpha: float
    beta: float
    A0: SymMat2
    A1: SymMat2

    def __post_init__(self):
        if not (0.0 < self.mu0 <= self.mu1):
            raise ConfigError(f"need 0 < mu0 <= mu1, got ({self.mu0}, {self.mu1})")
        if not (0.0 <= self.alpha <= self.beta <= 1.0):
            raise ConfigError(
                f"need 0 <= alpha <= beta <= 1, got ({self.alpha}, {self.beta})"
            )
        for name, m in (("A0", self.A0), ("A1", self.A1)):
            if not in_spectral_bounds(m, self.mu0, self.mu1):
                raise ConfigError(f"{name} eigenvalues outside [mu0, mu1]")
        if self.alpha == self.beta:
            return  # singleton volume, degenerate but admissible
        if 0.0 < self.alpha <= self.beta < 1.0:
            return
        if self.alpha == 0.0 and self.beta == 1.0:
            if loewner_leq(self.A0, self.A1) or loewner_leq(self.A1, self.A0):
                raise ConfigError(
                    "with the full volume window (0, 1) the phases must be "
                    "Loewner-incomparable, otherwise the problem is trivial"
                )
            return
        raise ConfigError(
            "volume window must satisfy 0 < alpha <= beta < 1, be the full "
            f"window (0, 1), or be a singleton; got ({self.alpha}, {self.beta})"
        )

    def mixture(self, r: float) -> SymMat2:
        """Phase mixture A0 + r*(A1 - A0)."""
        return self.A0 + r * (self.A1 - self.A0)


def coefficient_from_density(sigma: np.ndarray, bounds: ControlBounds) -> np.ndarray:
    """(n, 3) coefficient field a_e = A0 + sigma_e * (A1 - A0)."""
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 0.0) or np.any(sigma > 1.0):
        raise OutOfRange("density values must lie in [0, 1]")
    a0 = bounds.A0.as_triple()
    diff = (bounds.A1 - bounds.A0).as_triple()
    return a0[None, :] + sigma[:, None] * diff[None, :]


def density_volume(sigma: np.ndarray, mesh: Mesh2D) -> float:
    sigma = mesh.check_element_field(sigma)
    return float(sigma @ mesh.element_area)


def density_feasible(
    sigma: np.ndarray, mesh: Mesh2D, bounds: ControlBounds, tol: float = VOLUME_TOL
) -> bool:
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < -tol) or np.any(sigma > 1.0 + tol):
        return False
    vol = density_volume(sigma, mesh)
    area = mesh.domain_area
    return bounds.alpha * area - tol * area <= vol <= bounds.beta * area + tol * area


def project_density(
    raw: np.ndarray, mesh: Mesh2D, bounds: ControlBounds
) -> np.ndarray:
    """Area-weighted Euclidean projection onto the feasible density set.

    Clip to [0, 1]; if the volume window is violated, shift by a common tau
    found by bisection so the clipped field meets the violated bound.
    """
    raw = mesh.check_element_field(raw)
    if not np.all(np.isfinite(raw)):
        raise OutOfRange("density values must be finite")
    if density_feasible(raw, mesh, bounds):
        return raw.copy()

    area = mesh.element_area
    domain = mesh.domain_area
    clipped = np.clip(raw, 0.0, 1.0)
    vol = float(clipped @ area)
    lo, hi = bounds.alpha * domain, bounds.beta * domain
    if lo - VOLUME_TOL * domain <= vol <= hi + VOLUME_TOL * domain:
        return clipped

    target = hi if vol > hi else lo

    def volume_at(tau: float) -> float:
        return float(np.clip(raw + tau, 0.0, 1.0) @ area)

    # nominal bracket [-2, 2]; widen if raw sits far outside the box
    t_lo, t_hi = -2.0, 2.0
    while volume_at(t_lo) > target:
        t_lo *= 2.0
    while volume_at(t_hi) < target:
        t_hi *= 2.0
    tau = 0.0
    for _ in range(200):
        tau = 0.5 * (t_lo + t_hi)
        v = volume_at(tau)
        if abs(v - target) <= VOLUME_TOL * domain:
            break
        if v > target:
            t_hi = tau
        else:
            t_lo = tau
    return np.clip(raw + tau, 0.0, 1.0)


def linf_distance(a: np.ndarray, b: np.ndarray) -> float:
    """max over elements of the spectral norm of a_e - b_e."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise FieldSizeMismatch(f"field shapes differ: {a.shape} vs {b.shape}")
    return float(field_spectral_norms(a - b).max())


def save_density_csv(sigma: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["element_id", "sigma"])
        for i, v in enumerate(np.asarray(sigma, dtype=float)):
            writer.writerow([i, f"{v:.17g}"])


def load_density_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        return np.array([float(row[1]) for row in reader])
