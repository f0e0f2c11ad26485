"""Projected gradient ascent for the convexified eigenvalue maximization.

The eigenvalue is a concave function of the coefficient field, and its
directional derivative at a converged eigenpair is the energy of the
perturbation against the eigenfunction gradient.  Ascent therefore moves
the density along the per-element energy density of the phase difference,
projects back onto the volume-constrained box, and backtracks to keep the
eigenvalue history non-decreasing.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .controls import (
    ControlBounds,
    coefficient_from_density,
    density_volume,
    project_density,
)
from .eigsolve import EigenPair, principal_pair
from .errors import FieldSizeMismatch, NoProgress
from .fem import Mesh2D, assemble_mass, assemble_stiffness, element_gradients, full_vector
from .symmat import field_quad

__all__ = ["OptimReport", "directional_derivative", "density_gradient", "ascend", "kkt_check"]


def directional_derivative(
    abar: np.ndarray,
    a: np.ndarray,
    pair: EigenPair,
    mesh: Mesh2D,
) -> float:
    """Derivative of the eigenvalue at field `abar` toward field `a`.

    Equals sum_e area_e * <(a_e - abar_e) grad y, grad y> with y the
    converged eigenfunction for `abar`.
    """
    abar = np.asarray(abar, dtype=float)
    a = np.asarray(a, dtype=float)
    if a.shape != abar.shape:
        raise FieldSizeMismatch(f"field shapes differ: {a.shape} vs {abar.shape}")
    mesh.check_element_field(a)
    grads = element_gradients(mesh, full_vector(mesh, pair.y))
    return float(mesh.element_area @ field_quad(a - abar, grads))


def density_gradient(
    pair: EigenPair, bounds: ControlBounds, mesh: Mesh2D
) -> np.ndarray:
    """Per-element eigenvalue gradient g_e = <(A1 - A0) grad y, grad y>.

    Independent of the density itself: the coefficient is affine in sigma,
    so only the eigenpair enters.
    """
    d = (bounds.A1 - bounds.A0).as_triple()
    grads = element_gradients(mesh, full_vector(mesh, pair.y))
    return (
        d[0] * grads[:, 0] ** 2
        + 2.0 * d[1] * grads[:, 0] * grads[:, 1]
        + d[2] * grads[:, 1] ** 2
    )


@dataclass
class OptimReport:
    lambda_history: list
    sigma_final: np.ndarray
    kkt: dict
    volume: float
    vi_residual: float
    iterations: int
    polish_steps: int = 0
    step_history: list = dc_field(default_factory=list)


def _best_feasible_direction(
    g: np.ndarray, mesh: Mesh2D, bounds: ControlBounds
) -> np.ndarray:
    """Maximizer of sum_e area_e g_e sigma_e over the feasible density set.

    Greedy fill by decreasing gradient: positive-gradient elements first up
    to the volume cap, then forced low-gradient fill up to the volume floor.
    """
    area = mesh.element_area
    domain = mesh.domain_area
    lo, hi = bounds.alpha * domain, bounds.beta * domain
    order = np.argsort(-g, kind="stable")
    sigma = np.zeros_like(g)
    vol = 0.0
    for e in order:
        if g[e] <= 0.0 and vol >= lo:
            break
        take = min(area[e], (hi if g[e] > 0.0 else lo) - vol)
        if take <= 0.0:
            break
        sigma[e] = take / area[e]
        vol += take
    return sigma


def _vi_residual(
    sigma: np.ndarray, g: np.ndarray, mesh: Mesh2D, bounds: ControlBounds
) -> float:
    """max over feasible sigma' of the first-order gain <g, sigma' - sigma>."""
    best = _best_feasible_direction(g, mesh, bounds)
    return float(mesh.element_area @ (g * (best - sigma)))


def ascend(
    bounds: ControlBounds,
    mesh: Mesh2D,
    sigma0: np.ndarray,
    step0: float | None = None,
    max_iter: int = 500,
    tol: float = 1e-8,
    eig_tol: float = 1e-10,
    vi_tol: float = 1e-7,
    classify_tol: float = 1e-3,
    max_backtracks: int = 30,
) -> OptimReport:
    """Projected gradient ascent over densities, monotone in the eigenvalue.

    Stops when the relative eigenvalue gain is <= tol over three consecutive
    accepted steps; a deterministic polish stage then line-searches toward
    the best feasible vertex until the first-order optimality residual drops
    below vi_tol times the eigenvalue (plain stagnation can park the iterate
    with the active set still slightly wrong).
    """
    sigma = project_density(np.asarray(sigma0, dtype=float), mesh, bounds)
    M = assemble_mass(mesh)

    def solve(s, x0=None):
        K = assemble_stiffness(mesh, coefficient_from_density(s, bounds))
        return principal_pair(K, M, tol=eig_tol, x0=x0, check_positivity=False)

    pair = solve(sigma)
    lam = pair.lam
    lambda_history = [lam]
    step_history: list[float] = []
    g = density_gradient(pair, bounds, mesh)
    gmax = float(np.abs(g).max())
    if step0 is None:
        step0 = 0.1 / gmax if gmax > 0.0 else 1.0

    stalled = 0
    iterations = 0
    for iterations in range(1, max_iter + 1):
        t = step0
        accepted = False
        for _ in range(max_backtracks):
            cand = project_density(sigma + t * g, mesh, bounds)
            cand_pair = solve(cand, x0=pair.y)
            if cand_pair.lam >= lam:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            if iterations == 1:
                raise NoProgress("no ascent step accepted at the initial density")
            break
        moved = float(np.abs(cand - sigma).max())
        sigma, pair = cand, cand_pair
        gain = cand_pair.lam - lam
        lam = cand_pair.lam
        lambda_history.append(lam)
        step_history.append(t)
        g = density_gradient(pair, bounds, mesh)
        stalled = stalled + 1 if gain <= tol * abs(lam) else 0
        if stalled >= 3 or moved == 0.0:
            break

    # polish: line search toward the best feasible vertex for the current g
    polish_steps = 0
    for _ in range(60):
        res = _vi_residual(sigma, g, mesh, bounds)
        if res <= vi_tol * abs(lam):
            break
        vertex = _best_feasible_direction(g, mesh, bounds)
        accepted = False
        w = 1.0
        for _ in range(max_backtracks):
            cand = sigma + w * (vertex - sigma)
            cand_pair = solve(cand, x0=pair.y)
            if cand_pair.lam >= lam:
                accepted = True
                break
            w *= 0.5
        if not accepted:
            break
        if float(np.abs(cand - sigma).max()) == 0.0:
            break
        sigma, pair, lam = cand, cand_pair, cand_pair.lam
        lambda_history.append(lam)
        g = density_gradient(pair, bounds, mesh)
        polish_steps += 1

    kkt = kkt_check(sigma, pair, bounds, mesh, classify_tol=classify_tol)
    return OptimReport(
        lambda_history=lambda_history,
        sigma_final=sigma,
        kkt=kkt,
        volume=density_volume(sigma, mesh),
        vi_residual=_vi_residual(sigma, g, mesh, bounds),
        iterations=iterations,
        polish_steps=polish_steps,
        step_history=step_history,
    )


def kkt_check(
    sigma: np.ndarray,
    pair: EigenPair,
    bounds: ControlBounds,
    mesh: Mesh2D,
    classify_tol: float = 1e-3,
) -> dict:
    """First-order optimality diagnostics for a density and its eigenpair.

    Splits elements into the lower rail, the intermediate set, and the upper
    rail at threshold classify_tol, then reports: the intermediate gradient
    level and its constancy (both the classical coefficient of variation and
    the spread normalized by the overall gradient scale, which stays
    meaningful when the level is zero), the worst rail-ordering violation,
    and the sign-condition residuals applicable to the current volume.
    """
    sigma = np.asarray(sigma, dtype=float)
    g = density_gradient(pair, bounds, mesh)
    area = mesh.element_area
    domain = mesh.domain_area
    vol = float(sigma @ area)

    low = sigma <= classify_tol
    high = sigma >= 1.0 - classify_tol
    mid = ~(low | high)
    gscale = max(float(np.abs(g).max()), 1e-300)
    g_range = float(g.max() - g.min())

    out = {
        "classify_tol": classify_tol,
        "volume": vol,
        "counts": {"low": int(low.sum()), "mid": int(mid.sum()), "high": int(high.sum())},
        "empty_intermediate": bool(not mid.any()),
        "g_range": g_range,
        "g_scale": gscale,
    }

    if mid.any():
        w = area[mid] / area[mid].sum()
        mean = float(w @ g[mid])
        std = float(np.sqrt(w @ (g[mid] - mean) ** 2))
        out["intermediate_constant"] = mean
        out["cv_intermediate"] = std / abs(mean) if mean != 0.0 else float("inf")
        out["intermediate_spread_normalized"] = std / gscale
        out["intermediate_level_normalized"] = float(np.abs(g[mid]).max()) / gscale
    else:
        out["intermediate_constant"] = float("nan")
        out["cv_intermediate"] = 0.0
        out["intermediate_spread_normalized"] = 0.0
        out["intermediate_level_normalized"] = 0.0

    # rail ordering: g on the lower rail <= g intermediate <= g on the upper rail
    viol = 0.0
    if low.any() and mid.any():
        viol = max(viol, float(g[low].max() - g[mid].min()))
    if mid.any() and high.any():
        viol = max(viol, float(g[mid].max() - g[high].min()))
    if low.any() and high.any() and not mid.any():
        viol = max(viol, float(g[low].max() - g[high].min()))
    out["ordering_violation"] = max(0.0, viol)

    vol_tol = 1e-8 * domain
    below_beta = vol < bounds.beta * domain - vol_tol
    above_alpha = vol > bounds.alpha * domain + vol_tol
    if below_beta and above_alpha:
        out["multiplier_sign_case"] = "interior"
        out["sign_residual"] = (
            float(np.abs(g[mid]).max()) if mid.any() else 0.0
        )
    elif below_beta:
        out["multiplier_sign_case"] = "at_alpha"
        out["sign_residual"] = max(0.0, float(g[~high].max())) if (~high).any() else 0.0
    elif above_alpha:
        out["multiplier_sign_case"] = "at_beta"
        out["sign_residual"] = max(0.0, float(-g[~low].min())) if (~low).any() else 0.0
    else:
        out["multiplier_sign_case"] = "degenerate"
        out["sign_residual"] = 0.0
    return out
