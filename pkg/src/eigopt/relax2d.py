"""Closed-form relaxed minimization for two 2D phases: an anisotropic
diagonal phase diag(mu0, mu1) with 0 < mu0 < 1 < mu1 and the identity.

Gradient space splits into regions where one pure phase is pointwise
optimal and two wedges where a rank-one mix of the phases is required.
`effective_flux` is the pointwise relaxed flux map F, `effective_tensor`
the matrix realizing it, and `minimize_relaxed` the fixed-point solver for
the nonlinear eigenvalue problem -div(F(grad y)) = lambda * y.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .controls import ControlBounds
from .eigsolve import principal_pair
from .errors import InvalidBounds, NoConvergence, SingularQ
from .fem import Mesh2D, assemble_mass, assemble_stiffness, element_gradients, full_vector
from .lamination import MomentParams, moment_laminate
from .symmat import SymMat2, field_matvec, field_quad, inv

__all__ = [
    "Region",
    "WedgeForm",
    "MinReport",
    "classify",
    "effective_flux",
    "effective_tensor",
    "tensor_field",
    "minimize_relaxed",
    "pointwise_conditions_report",
    "switching_report",
]


class Region(enum.IntEnum):
    """Pointwise-optimal composition as a function of the local gradient."""

    ZERO = 0
    PHASE0 = 1  # anisotropic phase alone
    PHASE1 = 2  # identity phase alone
    MIX_POS = 3  # laminate needed, gradient components of equal sign
    MIX_NEG = 4  # laminate needed, gradient components of opposite sign


@dataclass(frozen=True)
class WedgeForm:
    """Closed-form quantities realizing the optimal mix inside a wedge.

    `tensor` applied to the generating gradient equals `flux_matrix` applied
    to it, which is the relaxed flux; `gamma` is the identity-phase fraction
    of the realizing laminate.
    """

    s: float
    gamma: float
    sign: float
    flux_scale: float
    flux_matrix: SymMat2
    tensor: SymMat2


def _check_normal_form(mu0: float, mu1: float) -> None:
    if not (0.0 < mu0 < 1.0 < mu1):
        raise InvalidBounds(f"need 0 < mu0 < 1 < mu1, got ({mu0}, {mu1})")


def _thresholds(mu0: float, mu1: float) -> tuple[float, float]:
    r_lo = mu0 * (1.0 - mu0) / (mu1 * (mu1 - 1.0))
    r_hi = mu1 * (1.0 - mu0) / (mu0 * (mu1 - 1.0))
    return r_lo, r_hi


def _as_batch(xi) -> tuple[np.ndarray, bool]:
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 1:
        return xi.reshape(1, 2), True
    return xi, False


def classify(xi, mu0: float, mu1: float):
    """Region labels for gradients `xi` of shape (2,) or (n, 2).

    The pure-phase regions are closed and take precedence on their
    boundary rays; the zero gradient is its own label.
    """
    _check_normal_form(mu0, mu1)
    X, scalar = _as_batch(xi)
    r_lo, r_hi = _thresholds(mu0, mu1)
    x1, x2 = X[:, 0], X[:, 1]
    labels = np.full(X.shape[0], Region.MIX_POS, dtype=np.int64)
    labels[x1 * x2 < 0.0] = Region.MIX_NEG
    labels[x2 * x2 >= r_hi * x1 * x1] = Region.PHASE1
    labels[x2 * x2 <= r_lo * x1 * x1] = Region.PHASE0
    labels[(x1 == 0.0) & (x2 == 0.0)] = Region.ZERO
    return Region(int(labels[0])) if scalar else labels


def effective_flux(xi, mu0: float, mu1: float):
    """Relaxed flux F(xi): the pointwise-minimal current over all mixes."""
    _check_normal_form(mu0, mu1)
    X, scalar = _as_batch(xi)
    labels = classify(X, mu0, mu1)
    s = (1.0 - mu0) * mu1 / (mu1 - mu0)
    root = math.sqrt(s * (1.0 - s))
    out = X.copy()  # PHASE1 and ZERO rows already correct
    p0 = labels == Region.PHASE0
    out[p0, 0] = mu0 * X[p0, 0]
    out[p0, 1] = mu1 * X[p0, 1]
    for lab, sgn in ((Region.MIX_POS, 1.0), (Region.MIX_NEG, -1.0)):
        w = labels == lab
        out[w, 0] = (1.0 - s) * X[w, 0] + sgn * root * X[w, 1]
        out[w, 1] = sgn * root * X[w, 0] + s * X[w, 1]
    return out[0] if scalar else out


def tensor_field(xi: np.ndarray, mu0: float, mu1: float):
    """Vectorized optimal tensors for gradients (n, 2).

    Returns (field (n, 3), gamma (n,), labels (n,)); gamma is NaN outside
    the wedges.
    """
    _check_normal_form(mu0, mu1)
    X = np.asarray(xi, dtype=float)
    labels = classify(X, mu0, mu1)
    n = X.shape[0]
    out = np.zeros((n, 3))
    out[:, 0] = 1.0
    out[:, 2] = 1.0  # ZERO and PHASE1 rows: identity
    p0 = labels == Region.PHASE0
    out[p0, 0] = mu0
    out[p0, 2] = mu1

    gamma = np.full(n, np.nan)
    wedge = (labels == Region.MIX_POS) | (labels == Region.MIX_NEG)
    if np.any(wedge):
        x1, x2 = X[wedge, 0], X[wedge, 1]
        sgn = np.sign(x1 * x2)
        s = (1.0 - mu0) * mu1 / (mu1 - mu0)
        root = math.sqrt(s * (1.0 - s))
        g = (
            np.abs(x2) * math.sqrt(mu1 / (1.0 - mu0))
            - np.abs(x1) * math.sqrt(mu0 / (mu1 - 1.0))
        ) / (
            np.abs(x1) * math.sqrt(mu0 * (mu1 - 1.0))
            + np.abs(x2) * math.sqrt(mu1 * (1.0 - mu0))
        )
        gamma[wedge] = g
        # Q = (A0 - I)^-1 + gamma * (I - G), then tensor = I + (1-gamma) Q^-1
        q11 = 1.0 / (mu0 - 1.0) + g * s
        q22 = 1.0 / (mu1 - 1.0) + g * (1.0 - s)
        q12 = -g * sgn * root
        det = q11 * q22 - q12 * q12
        if np.any(np.abs(det) < 1e-14 * (np.abs(q11) + np.abs(q22)) ** 2):
            raise SingularQ("wedge closed form degenerate; classification bug")
        out[wedge, 0] = 1.0 + (1.0 - g) * q22 / det
        out[wedge, 1] = -(1.0 - g) * q12 / det
        out[wedge, 2] = 1.0 + (1.0 - g) * q11 / det
    return out, gamma, labels


def effective_tensor(xi, mu0: float, mu1: float) -> tuple[SymMat2, WedgeForm | None]:
    """Optimal tensor for a single gradient, with wedge details when mixed."""
    X = np.asarray(xi, dtype=float).reshape(1, 2)
    out, gamma, labels = tensor_field(X, mu0, mu1)
    tensor = SymMat2(out[0, 0], out[0, 1], out[0, 2])
    label = Region(int(labels[0]))
    if label not in (Region.MIX_POS, Region.MIX_NEG):
        return tensor, None
    s = (1.0 - mu0) * mu1 / (mu1 - mu0)
    root = math.sqrt(s * (1.0 - s))
    sgn = 1.0 if label == Region.MIX_POS else -1.0
    flux_matrix = SymMat2(1.0 - s, sgn * root, s)
    flux_scale = sgn * X[0, 0] * math.sqrt(1.0 - s) + X[0, 1] * math.sqrt(s)
    return tensor, WedgeForm(
        s=s,
        gamma=float(gamma[0]),
        sign=sgn,
        flux_scale=float(flux_scale),
        flux_matrix=flux_matrix,
        tensor=tensor,
    )


def sigma_proxy_from(labels: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """Identity-phase fraction per element implied by the region labels."""
    sigma = np.where(labels == Region.PHASE0, 0.0, 1.0)
    wedge = np.isfinite(gamma)
    sigma[wedge] = gamma[wedge]
    return sigma


def _switch_values(a_field: np.ndarray, grads: np.ndarray, mu0: float, mu1: float):
    """h_e = <(A0^-1 - A1^-1) a grad y, a grad y> with A1 = I."""
    eta = field_matvec(a_field, grads)
    return (1.0 / mu0 - 1.0) * eta[:, 0] ** 2 + (1.0 / mu1 - 1.0) * eta[:, 1] ** 2


@dataclass
class MinReport:
    """Converged state of the relaxed minimization fixed point.

    `a_field` is the optimal tensor evaluated at the final gradients, so the
    pointwise optimality identities hold for (a_field, y) by construction up
    to the solver tolerance.
    """

    lam: float
    y: np.ndarray
    a_field: np.ndarray
    labels: np.ndarray
    gamma: np.ndarray
    sigma_proxy: np.ndarray
    h_field: np.ndarray
    region_counts: dict
    lambda_history: list = dc_field(default_factory=list)
    functional_history: list = dc_field(default_factory=list)
    monotone_gap_history: list = dc_field(default_factory=list)
    converged: bool = False
    outer_iterations: int = 0


def _validate_normal_form_bounds(bounds: ControlBounds) -> None:
    _check_normal_form(bounds.mu0, bounds.mu1)
    a0 = bounds.A0
    if not (
        a0.a12 == 0.0
        and abs(a0.a11 - bounds.mu0) <= 1e-14
        and abs(a0.a22 - bounds.mu1) <= 1e-14
    ):
        raise InvalidBounds("phase 0 must be diag(mu0, mu1)")
    a1 = bounds.A1
    if not (a1.a12 == 0.0 and a1.a11 == 1.0 and a1.a22 == 1.0):
        raise InvalidBounds("phase 1 must be the identity")
    if not (bounds.alpha == 0.0 and bounds.beta == 1.0):
        raise InvalidBounds("relaxed minimization requires the full volume window")


def minimize_relaxed(
    bounds: ControlBounds,
    mesh: Mesh2D,
    tol: float = 1e-8,
    max_outer: int = 80,
    eig_tol: float = 1e-10,
) -> MinReport:
    """Fixed-point solve of the relaxed eigenvalue minimization.

    Alternates an exact linear eigensolve for the current tensor field with
    the pointwise optimal-tensor update; both half-steps are exactly
    solvable.  The relaxed Rayleigh functional is tracked each sweep as an
    independent certificate of progress, and the per-element energy decrease
    of the tensor update is monitored rather than assumed.
    """
    _validate_normal_form_bounds(bounds)
    mu0, mu1 = bounds.mu0, bounds.mu1
    M = assemble_mass(mesh)
    a = mesh.constant_coefficient(SymMat2.identity())
    area = mesh.element_area

    lambda_history: list[float] = []
    functional_history: list[float] = []
    monotone_gap_history: list[float] = []
    y_int = None
    lam_prev = None
    converged = False
    outer = 0
    for outer in range(1, max_outer + 1):
        K = assemble_stiffness(mesh, a)
        pair = principal_pair(K, M, tol=eig_tol, x0=y_int, check_positivity=False)
        y_int = pair.y
        lam = pair.lam
        lambda_history.append(lam)

        yfull = full_vector(mesh, y_int)
        grads = element_gradients(mesh, yfull)
        flux = effective_flux(grads, mu0, mu1)
        functional_history.append(float(area @ np.sum(flux * grads, axis=1)))

        a_new, gamma, labels = tensor_field(grads, mu0, mu1)
        new_q = field_quad(a_new, grads)
        old_q = field_quad(a, grads)
        scale = max(float(old_q.max()), 1e-300)
        monotone_gap_history.append(float(max(0.0, (new_q - old_q).max() / scale)))

        if lam_prev is not None and abs(lam - lam_prev) <= tol * abs(lam):
            converged = True
            a = a_new
            break
        lam_prev = lam
        a = a_new

    sigma = sigma_proxy_from(labels, gamma)
    h = _switch_values(a, grads, mu0, mu1)
    counts = {reg.name: int(np.sum(labels == reg)) for reg in Region}
    report = MinReport(
        lam=lambda_history[-1],
        y=full_vector(mesh, y_int),
        a_field=a,
        labels=labels,
        gamma=gamma,
        sigma_proxy=sigma,
        h_field=h,
        region_counts=counts,
        lambda_history=lambda_history,
        functional_history=functional_history,
        monotone_gap_history=monotone_gap_history,
        converged=converged,
        outer_iterations=outer,
    )
    if not converged:
        err = NoConvergence(f"fixed point not settled after {max_outer} sweeps")
        err.report = report
        raise err
    return report


def pointwise_conditions_report(
    report: MinReport,
    mesh: Mesh2D,
    bounds: ControlBounds,
    tol: float = 1e-8,
    n_laminates: int = 20,
    rng: np.random.Generator | None = None,
) -> dict:
    """Area fractions violating the pointwise optimality conditions.

    Checks, per element with eta = a grad y and relative slack `tol`:
    the two pure-phase current inequalities <a gy, gy> >= <Ai^-1 eta, eta>,
    their equality version on wedge elements, and the same inequality
    against `n_laminates` sampled members of the laminate family of the two
    phases.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    mu0, mu1 = bounds.mu0, bounds.mu1
    grads = element_gradients(mesh, report.y)
    a = report.a_field
    eta = field_matvec(a, grads)
    lhs = field_quad(a, grads)
    scale = np.maximum(lhs, 1e-300)
    area = mesh.element_area
    total = area.sum()

    quad0 = eta[:, 0] ** 2 / mu0 + eta[:, 1] ** 2 / mu1
    quad1 = eta[:, 0] ** 2 + eta[:, 1] ** 2

    def frac(mask) -> float:
        return float(area[mask].sum() / total)

    out = {
        "phase0_inequality": frac(lhs < quad0 - tol * scale),
        "phase1_inequality": frac(lhs < quad1 - tol * scale),
    }

    wedge = (report.labels == Region.MIX_POS) | (report.labels == Region.MIX_NEG)
    if np.any(wedge):
        eq = np.maximum(np.abs(lhs - quad0), np.abs(lhs - quad1)) > tol * scale
        out["wedge_equalities"] = float(area[wedge & eq].sum() / area[wedge].sum())
    else:
        out["wedge_equalities"] = 0.0

    worst = 0.0
    for _ in range(n_laminates):
        theta = rng.uniform()
        t = rng.uniform()
        phi = rng.uniform(0.0, 2.0 * np.pi)
        c, s = math.cos(phi), math.sin(phi)
        H = SymMat2(
            c * c * t + s * s * (1.0 - t),
            c * s * (2.0 * t - 1.0),
            s * s * t + c * c * (1.0 - t),
        )
        B = moment_laminate(bounds.A0, bounds.A1, MomentParams(theta, H))
        binv = inv(B)
        quad_b = (
            binv.a11 * eta[:, 0] ** 2
            + 2.0 * binv.a12 * eta[:, 0] * eta[:, 1]
            + binv.a22 * eta[:, 1] ** 2
        )
        worst = max(worst, frac(lhs < quad_b - tol * scale))
    out["laminate_inequality"] = worst
    return out


def _weighted_median(values: np.ndarray, weights: np.ndarray) -> float:
    order = np.argsort(values, kind="stable")
    cum = np.cumsum(weights[order])
    idx = int(np.searchsorted(cum, 0.5 * cum[-1]))
    return float(values[order][min(idx, values.size - 1)])


def switching_report(
    report: MinReport,
    mesh: Mesh2D,
    bounds: ControlBounds,
    sigma_proxy: np.ndarray | None = None,
    classify_tol: float = 1e-3,
    tol: float = 1e-8,
) -> dict:
    """Switch-function diagnostics and the bang-bang structure violation.

    The switching level psi is zero whenever the material volume is strictly
    interior to its window (the complementarity case); otherwise it is
    estimated as the area-weighted median of h over fractional elements.
    The reported multipliers are rescaled to the unit normalization.
    """
    sigma = report.sigma_proxy if sigma_proxy is None else np.asarray(sigma_proxy)
    h = report.h_field
    area = mesh.element_area
    total = area.sum()
    vol = float(sigma @ area)
    vol_tol = 1e-9 * total
    interior = bool(
        bounds.alpha * total + vol_tol < vol < bounds.beta * total - vol_tol
    )
    fractional = (sigma > classify_tol) & (sigma < 1.0 - classify_tol)
    median_h = (
        _weighted_median(h[fractional], area[fractional])
        if np.any(fractional)
        else 0.0
    )
    psi = 0.0 if interior else median_h

    hscale = max(float(np.abs(h).max()), 1e-300)
    slack = tol * hscale
    should_be_one = h < psi - slack
    should_be_zero = h > psi + slack
    viol = (should_be_one & (sigma < 1.0 - classify_tol)) | (
        should_be_zero & (sigma > classify_tol)
    )
    norm = math.hypot(1.0, psi)
    return {
        "psi": psi,
        "median_h_fractional": median_h,
        "volume": vol,
        "volume_interior": interior,
        "structure_violation": float(area[viol].sum() / total),
        "mu0_normalized": -1.0 / norm,
        "psi_normalized": psi / norm,
        "all_pure_phase": bool(not np.any(fractional)),
        "fractional_area": float(area[fractional].sum() / total),
    }
