"""Built-in convex test objectives with known minimizers.

All problems are small (n <= 10) so the full verification suite runs in
seconds.  Each ships the objective, a matched distance generator, and the
uniform-convexity constant it certifies against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bregman import DistanceGenerator, Objective, squared_euclidean
from .errors import ConfigurationError


@dataclass(frozen=True)
class ProblemSpec:
    identifier: str
    objective: Objective
    generator: DistanceGenerator
    sigma: float
    notes: str


def quadratic(Q, b) -> ProblemSpec:
    """f(x) = (1/2) x^T Q x - b^T x with SPD Q; x* = Q^-1 b, sigma = lambda_min(Q)."""
    Q = np.asarray(Q, dtype=float)
    b = np.asarray(b, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or b.shape != (Q.shape[0],):
        raise ConfigurationError("Q must be square and b conformable")
    if not np.allclose(Q, Q.T, atol=1e-12):
        raise ConfigurationError("Q must be symmetric")
    eigs = np.linalg.eigvalsh(Q)
    if eigs[0] <= 0:
        raise ConfigurationError(f"Q must be positive definite (min eigenvalue {eigs[0]:g})")
    xstar = np.linalg.solve(Q, b)
    fstar = 0.5 * float(xstar @ (Q @ xstar)) - float(b @ xstar)
    obj = Objective(
        dim=Q.shape[0],
        value=lambda x: 0.5 * float(x @ (Q @ x)) - float(b @ x),
        gradient=lambda x: Q @ x - b,
        sigma=float(eigs[0]),
        minimizer=xstar,
        optimal_value=fstar,
        name="quadratic",
    )
    return ProblemSpec(
        identifier="quadratic",
        objective=obj,
        generator=squared_euclidean(Q.shape[0]),
        sigma=float(eigs[0]),
        notes="x* = Q^-1 b by direct solve",
    )


def flat_quadratic(A, b) -> ProblemSpec:
    """f(x) = (1/2) ||A x - b||^2 with a wide full-row-rank A; sigma = 0.

    x* is the minimum-norm solution and f* = 0 (b is in the range of A).
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] >= A.shape[1] or b.shape != (A.shape[0],):
        raise ConfigurationError("A must be m x n with m < n, b of length m")
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        raise ConfigurationError("A must have full row rank")
    xstar = np.linalg.lstsq(A, b, rcond=None)[0]
    obj = Objective(
        dim=A.shape[1],
        value=lambda x: 0.5 * float(np.sum((A @ x - b) ** 2)),
        gradient=lambda x: A.T @ (A @ x - b),
        sigma=0.0,
        minimizer=xstar,
        optimal_value=0.0,
        name="flat_quadratic",
    )
    return ProblemSpec(
        identifier="flat_quadratic",
        objective=obj,
        generator=squared_euclidean(A.shape[1]),
        sigma=0.0,
        notes="x* = minimum-norm solution via least squares",
    )


def soft_threshold(y, w: float) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return np.sign(y) * np.maximum(np.abs(y) - w, 0.0)


def l1_denoise(y, w: float) -> ProblemSpec:
    """f(x) = (1/2) ||x - y||^2 + w ||x||_1 (nonsmooth); x* by soft threshold.

    The stored gradient is a subgradient selection (sign(0) = 0), valid away
    from kinks; the problem is driven through the smoothing pipeline only.
    Optimality of x* is certified by subgradient membership, not gradient norm.
    """
    if w <= 0:
        raise ConfigurationError("w must be positive")
    y = np.asarray(y, dtype=float)
    xstar = soft_threshold(y, w)
    fstar = 0.5 * float(np.sum((xstar - y) ** 2)) + w * float(np.sum(np.abs(xstar)))
    obj = Objective(
        dim=y.size,
        value=lambda x: 0.5 * float(np.sum((x - y) ** 2)) + w * float(np.sum(np.abs(x))),
        gradient=lambda x: (x - y) + w * np.sign(x),
        sigma=1.0,
        minimizer=xstar,
        optimal_value=fstar,
        smooth=False,
        name="l1_denoise",
    )
    return ProblemSpec(
        identifier="l1_denoise",
        objective=obj,
        generator=squared_euclidean(y.size),
        sigma=1.0,
        notes="x* = soft_threshold(y, w); certificate: 0 in subdifferential",
    )


def l1_subgradient_gap(y, w: float, xstar) -> float:
    """Max violation of the optimality certificate 0 in the subdifferential:
    |(x* - y)_i| <= w at zero coordinates, (x* - y)_i + w sign(x*_i) = 0 elsewhere."""
    y = np.asarray(y, dtype=float)
    xstar = np.asarray(xstar, dtype=float)
    resid = xstar - y
    worst = 0.0
    for i in range(y.size):
        if xstar[i] == 0.0:
            worst = max(worst, max(0.0, abs(resid[i]) - w))
        else:
            worst = max(worst, abs(resid[i] + w * np.sign(xstar[i])))
    return worst
