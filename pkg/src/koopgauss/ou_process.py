"""Linear SDEs ``dX = A X dt + B dW`` (Ornstein-Uhlenbeck processes).

The transition law of the process is Gaussian,
``X_t | X_0 = x ~ N(e^{At} x, Sigma(t))``, so samples are drawn exactly
from it instead of integrating paths.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import matrix_core as mc
from .errors import DimensionError, DomainError, NotControllableError, NotHurwitzError, SamplingError

#: rows drawn per RNG stream; chunk k uses ``default_rng(seed ^ k)``
SAMPLE_CHUNK = 1 << 16


@dataclass(frozen=True)
class LinearSDE:
    """A validated pair ``(A, B)`` together with its stationary covariance."""

    A: np.ndarray
    B: np.ndarray
    sigma_inf: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def BBt(self) -> np.ndarray:
        return mc.symmetrize(self.B @ self.B.T)


@dataclass(frozen=True)
class TransitionLaw:
    mean_map: np.ndarray
    cov: np.ndarray
    horizon: float

    def mean(self, x) -> np.ndarray:
        return self.mean_map @ np.asarray(x, dtype=float)


def controllability_rank(A: np.ndarray, B: np.ndarray) -> int:
    d = A.shape[0]
    blocks = [B]
    for _ in range(d - 1):
        blocks.append(A @ blocks[-1])
    K = np.hstack(blocks)
    sv = np.linalg.svd(K, compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int(np.sum(sv > 1e-10 * sv[0]))


def validate_system(A, B) -> LinearSDE:
    """Check controllability and the Hurwitz property, then cache ``Sigma``.

    Raises
    ------
    NotControllableError
        ``rank [B, AB, ..., A^{d-1} B] < d``; carries the computed rank.
    NotHurwitzError
        Some eigenvalue of ``A`` has nonnegative real part.
    """
    A = mc.as_square(A, "A")
    B = mc.as_matrix(B, "B")
    d, m = B.shape
    if d != A.shape[0]:
        raise DimensionError(f"B has {d} rows, A is {A.shape[0]}x{A.shape[0]}")
    if m > d:
        raise DimensionError(f"B has {m} columns, at most d = {d} allowed")
    rank = controllability_rank(A, B)
    if rank < d:
        raise NotControllableError(rank, d)
    lam = np.linalg.eigvals(A)
    worst = lam[np.argmax(lam.real)]
    if worst.real >= 0:
        raise NotHurwitzError(complex(worst))
    sigma = mc.solve_lyapunov(A, B @ B.T)
    w = np.linalg.eigvalsh(sigma)
    if w[0] <= mc.PSD_RTOL * w[-1]:
        raise NotControllableError(rank, d)
    A.setflags(write=False)
    B.setflags(write=False)
    sigma.setflags(write=False)
    return LinearSDE(A, B, sigma)


def _check_time(t: float, strict: bool = False) -> float:
    t = float(t)
    if not math.isfinite(t) or t < 0 or (strict and t == 0):
        raise DomainError(f"time must be {'> 0' if strict else '>= 0'}, got {t}")
    return t


def transition_law(sys: LinearSDE, t: float) -> TransitionLaw:
    t = _check_time(t)
    return TransitionLaw(mc.matrix_exp(sys.A, t), mc.gramian_finite(sys.A, sys.B, t), t)


def _gaussian_logpdf(y: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> float:
    d = mean.shape[0]
    L = np.linalg.cholesky(mc.symmetrize(cov))
    r = np.linalg.solve(L, y - mean)
    return -0.5 * d * math.log(2 * math.pi) - float(np.sum(np.log(np.diag(L)))) - 0.5 * float(r @ r)


def _vector(x, d: int, name: str) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (d,):
        raise DimensionError(f"{name} must have shape ({d},), got {x.shape}")
    return x


def transition_density(sys: LinearSDE, t: float, x, y) -> float:
    """Density of ``N(e^{At} x, Sigma(t))`` at ``y`` (requires ``t > 0``)."""
    t = _check_time(t, strict=True)
    x = _vector(x, sys.dim, "x")
    y = _vector(y, sys.dim, "y")
    law = transition_law(sys, t)
    return math.exp(_gaussian_logpdf(y, law.mean(x), law.cov))


def stationary_density(sys: LinearSDE, x) -> float:
    x = _vector(x, sys.dim, "x")
    return math.exp(_gaussian_logpdf(x, np.zeros(sys.dim), sys.sigma_inf))


def sample_transition(
    sys: LinearSDE, t: float, x, n: int, seed: int, workers: int = 1
) -> np.ndarray:
    """Draw ``n`` exact samples of ``X_t`` given ``X_0 = x``; returns an ``(n, d)`` array.

    Rows are generated in chunks of :data:`SAMPLE_CHUNK`; chunk ``k`` uses
    the stream ``default_rng(seed ^ k)``, so the output depends only on
    ``(seed, n)`` and not on ``workers``.
    """
    t = _check_time(t, strict=True)
    x = _vector(x, sys.dim, "x")
    n = int(n)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    law = transition_law(sys, t)
    w = np.linalg.eigvalsh(law.cov)
    if w[0] <= mc.PSD_RTOL * w[-1]:
        raise SamplingError(f"Sigma(t) is numerically singular at t = {t}")
    root = mc.sym_sqrt(law.cov)
    mean = law.mean(x)
    d = sys.dim
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    n_chunks = -(-n // SAMPLE_CHUNK)

    def chunk(k: int) -> np.ndarray:
        rows = min(SAMPLE_CHUNK, n - k * SAMPLE_CHUNK)
        xi = np.random.default_rng(seed ^ k).standard_normal((rows, d))
        return mean + xi @ root

    if workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(chunk, range(n_chunks)))
    else:
        parts = [chunk(k) for k in range(n_chunks)]
    return np.vstack(parts)
