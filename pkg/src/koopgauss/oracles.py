"""Independent numerical oracles: Monte Carlo, Gauss-Hermite quadrature, finite differences.

None of these routines use the closed forms they are meant to check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import simpson

from . import matrix_core as mc
from .errors import DomainError, KoopgaussError, UnsupportedCaseError
from .gaussian_rkhs import SpanElement, evaluate
from .ou_process import LinearSDE, sample_transition

MAX_QUAD_DIM = 3
MAX_ORDER = 256


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    std_error: float
    n: int
    seed: int

    def z_score(self, target: float) -> float:
        if self.std_error == 0.0:
            return 0.0 if self.mean == target else math.inf
        return (self.mean - target) / self.std_error


def mc_koopman(sys: LinearSDE, f: SpanElement, t: float, x, n: int, seed: int, workers: int = 1) -> MCEstimate:
    """Estimate ``E[f(X_t) | X_0 = x]`` from exact transition samples."""
    if n < 100:
        raise DomainError(f"need n >= 100 samples, got {n}")
    Y = sample_transition(sys, t, x, n, seed, workers=workers)
    vals = evaluate(f, Y)
    return MCEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n)), int(n), int(seed))


@dataclass(frozen=True)
class GaussianEnvelope:
    """Change of variables ``y = mean + scale @ u`` for Gauss-Hermite nodes ``u``.

    ``scale`` should be at least as wide as the integrand's decay so that
    ``g(y) exp(||u||^2)`` stays smooth and bounded.
    """

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def make(cls, mean, scale) -> "GaussianEnvelope":
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        scale = np.asarray(scale, dtype=float)
        if scale.ndim == 0:
            scale = scale * np.eye(mean.size)
        if scale.shape != (mean.size, mean.size):
            raise DomainError("envelope scale must be a d x d matrix")
        return cls(mean, scale)



def _gh_nodes(order: int, d: int):
    if order > MAX_ORDER:
        raise UnsupportedCaseError(f"Gauss-Hermite order is capped at {MAX_ORDER}")
    u, w = np.polynomial.hermite.hermgauss(order)
    # fold exp(+u^2) into the 1-D weights to undo the Hermite weight
    w = w * np.exp(u * u)
    U = np.array(list(itertools.product(u, repeat=d)))
    W = np.prod(np.array(list(itertools.product(w, repeat=d))), axis=1)
    return U, W


def quad_integral(g: Callable[[np.ndarray], np.ndarray], envelope: GaussianEnvelope, order: int) -> float:
    """Tensor-grid Gauss-Hermite approximation of ``int_{R^d} g(y) dy``.

    ``g`` receives an ``(N, d)`` array of nodes and returns ``N`` values.
    """
    d = envelope.mean.size
    if d > MAX_QUAD_DIM:
        raise UnsupportedCaseError(f"quadrature supports d <= {MAX_QUAD_DIM}, got {d}")
    if mc.psd_slack(envelope.scale @ envelope.scale.T) <= 0:
        raise DomainError("envelope scale must be nonsingular")
    U, W = _gh_nodes(int(order), d)
    Y = envelope.mean + U @ envelope.scale.T
    vals = np.asarray(g(Y), dtype=float).reshape(-1)
    if not np.all(np.isfinite(vals)):
        raise KoopgaussError("integrand returned non-finite values")
    jac = abs(np.linalg.det(envelope.scale))
    return float(jac * np.sum(W * vals))


def quad_integral_adaptive(
    g: Callable[[np.ndarray], np.ndarray],
    envelope: GaussianEnvelope,
    order: int = 16,
    rtol: float = 1e-12,
    max_order: int | None = None,
) -> tuple[float, int]:
    """Double the Gauss-Hermite order until two successive values agree to ``rtol``.

    Returns ``(value, order)``.
    """
    d = envelope.mean.size
    if max_order is None:
        max_order = {1: 256, 2: 256, 3: 128}.get(d, 128)
    prev = quad_integral(g, envelope, order)
    while order < max_order:
        order *= 2
        cur = quad_integral(g, envelope, order)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-300):
            return cur, order
        prev = cur
    return prev, order


def fd_derivative(h: Callable[[float], float], t: float, step: float, one_sided: bool = False) -> float:
    """Central difference, or the second-order forward stencil when ``one_sided``."""
    if step <= 0:
        raise DomainError("step must be > 0")
    if one_sided:
        return (-3.0 * h(t) + 4.0 * h(t + step) - h(t + 2.0 * step)) / (2.0 * step)
    return (h(t + step) - h(t - step)) / (2.0 * step)


def simpson_gramian(A, B, t: float, intervals: int = 4000) -> np.ndarray:
    """Composite Simpson rule for ``int_0^t e^{As} B B^T e^{A^T s} ds``."""
    A = mc.as_square(A, "A")
    B = mc.as_matrix(B, "B")
    if intervals % 2:
        intervals += 1
    s = np.linspace(0.0, float(t), intervals + 1)
    BBt = B @ B.T
    vals = np.empty((s.size,) + A.shape)
    for i, si in enumerate(s):
        E = mc.matrix_exp(A, si)
        vals[i] = E @ BBt @ E.T
    return simpson(vals, x=s, axis=0)


def product_integral_quad(cov1, z, cov2, w, rtol: float = 1e-12) -> tuple[float, int]:
    """Quadrature of ``int k^{C1}_z(y) k^{C2}_w(y) dy`` from the raw kernel product.

    The Gauss-Hermite grid is centred at ``(z + w) / 2`` and stretched to
    1.25 times the width implied by the summed precisions.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    P = cov1.inv @ cov1.inv + cov2.inv @ cov2.inv
    scale = 1.25 * mc.sym_sqrt(np.linalg.inv(mc.symmetrize(P)))
    env = GaussianEnvelope.make(0.5 * (z + w), scale)

    def g(Y):
        r1 = (Y - z) @ cov1.inv
        r2 = (Y - w) @ cov2.inv
        return np.exp(-np.sum(r1 * r1, axis=1) - np.sum(r2 * r2, axis=1))

    return quad_integral_adaptive(g, env, rtol=rtol)
