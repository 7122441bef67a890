"""Gaussian kernels ``k^C(x, y) = exp(-||C^{-1}(x - y)||^2)`` and their RKHSs.

Observables are finite spans ``f = sum_j a_j k^C_{x_j}``; all norms are
Gram quadratic forms over the centers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from . import matrix_core as mc
from .errors import DimensionError, DomainError, NotPSDError


class Covariance:
    """Symmetric positive definite ``C`` with cached inverse and log-determinant."""

    __slots__ = ("C", "inv", "logdet")

    def __init__(self, C, _eig=None):
        if _eig is None:
            C = mc.symmetrize(C)
            w, V = np.linalg.eigh(C)
            logdet = None
        else:
            w, V = _eig
            logdet = float(np.sum(np.log(w))) if np.all(w > 0) else None
        if np.min(w) <= mc.psd_tolerance(np.diag(w)):
            raise NotPSDError(f"covariance must be positive definite (min eigenvalue {np.min(w):.3g})")
        if _eig is not None:
            C = mc.symmetrize((V * w) @ V.T)
        inv = (V / w) @ V.T
        inv = 0.5 * (inv + inv.T)
        C.setflags(write=False)
        inv.setflags(write=False)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "inv", inv)
        object.__setattr__(self, "logdet", mc.logdet_pd(C) if logdet is None else logdet)

    def __setattr__(self, name, value):
        raise AttributeError("Covariance is immutable")

    def __repr__(self) -> str:
        return f"Covariance({self.C.tolist()!r})"

    @classmethod
    def from_eig(cls, w, V) -> "Covariance":
        """Build from an eigen-decomposition ``C = V diag(w) V^T`` (keeps the eigenvalues' accuracy)."""
        return cls(None, _eig=(np.asarray(w, dtype=float), np.asarray(V, dtype=float)))

    @classmethod
    def scalar(cls, sigma: float, d: int = 1) -> "Covariance":
        return cls(float(sigma) * np.eye(d))

    @property
    def dim(self) -> int:
        return self.C.shape[0]

    @property
    def squared(self) -> np.ndarray:
        return mc.symmetrize(self.C @ self.C)

    def whiten(self, points) -> np.ndarray:
        """Map points (rows) to ``C^{-1} x``; the kernel becomes ``exp(-||z - z'||^2)``."""
        P = _points(points, self.dim)
        return P @ self.inv


def _points(points, d: int) -> np.ndarray:
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P.reshape(1, -1) if d > 1 or P.size == 1 else P.reshape(-1, 1)
    if P.ndim != 2 or P.shape[1] != d or P.shape[0] == 0:
        raise DimensionError(f"expected a nonempty list of {d}-vectors, got shape {np.shape(points)}")
    return P


def _vec(x, d: int) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (d,):
        raise DimensionError(f"expected a {d}-vector, got shape {x.shape}")
    return x


@dataclass(frozen=True, eq=False)
class SpanElement:
    """``f = sum_j coeffs[j] * k^C_{centers[j]}``."""

    cov: Covariance
    centers: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        centers = _points(self.centers, self.cov.dim)
        coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        if coeffs.ndim != 1 or coeffs.shape[0] != centers.shape[0]:
            raise DimensionError(f"{centers.shape[0]} centers but {coeffs.shape} coefficients")
        if not (np.all(np.isfinite(coeffs)) and np.all(np.isfinite(centers))):
            raise DimensionError("centers and coefficients must be finite")
        centers.setflags(write=False)
        coeffs.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "coeffs", coeffs)

    def __call__(self, x) -> np.ndarray:
        return evaluate(self, x)

    def __add__(self, other: "SpanElement") -> "SpanElement":
        if not np.array_equal(self.cov.C, other.cov.C):
            raise DimensionError("can only add span elements over the same covariance")
        return SpanElement(
            self.cov,
            np.vstack([self.centers, other.centers]),
            np.concatenate([self.coeffs, other.coeffs]),
        )

    def __mul__(self, a: float) -> "SpanElement":
        return SpanElement(self.cov, self.centers, a * self.coeffs)

    __rmul__ = __mul__

    def __sub__(self, other: "SpanElement") -> "SpanElement":
        return self + (-1.0) * other

    def to_dict(self) -> dict:
        return {
            "covariance": self.cov.C.tolist(),
            "centers": self.centers.tolist(),
            "coeffs": self.coeffs.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SpanElement":
        cov = Covariance(data["covariance"])
        return cls(cov, np.asarray(data["centers"], dtype=float).reshape(-1, cov.dim), data["coeffs"])


def kernel_eval(cov: Covariance, x, y) -> float:
    d = cov.dim
    r = cov.inv @ (_vec(x, d) - _vec(y, d))
    return math.exp(-float(r @ r))


def gram_matrix(cov: Covariance, points, points2=None) -> np.ndarray:
    """Gram matrix ``G[i, j] = k^C(p_i, q_j)`` (``q = p`` unless given)."""
    Z1 = cov.whiten(points)
    if points2 is None:
        G = kernels.gram(Z1, Z1)
        return 0.5 * (G + G.T)
    return kernels.gram(Z1, cov.whiten(points2))


def evaluate(f: SpanElement, x) -> np.ndarray:
    """Values of ``f`` at the rows of ``x`` (a single vector gives a length-1 array)."""
    return kernels.kernel_sum(f.cov.whiten(x), f.cov.whiten(f.centers), f.coeffs)


def rkhs_norm(f: SpanElement) -> float:
    G = gram_matrix(f.cov, f.centers)
    q = float(f.coeffs @ G @ f.coeffs)
    return math.sqrt(max(q, 0.0))


@dataclass(frozen=True)
class Inclusion:
    included: bool
    embed_const: Optional[float]
    slack: float


def inclusion_test(c1: Covariance, c2: Covariance) -> Inclusion:
    """Decide ``H_{C1} subset H_{C2}`` via ``C1^2 >= C2^2``.

    When included, ``||f||_{C2} <= sqrt(det C1 / det C2) ||f||_{C1}``. The
    boundary case (slack within tolerance of zero) counts as included.
    """
    if c1.dim != c2.dim:
        raise DimensionError(f"dimensions differ: {c1.dim} vs {c2.dim}")
    D = mc.symmetrize(c1.squared - c2.squared)
    slack = mc.psd_slack(D)
    tol = mc.PSD_RTOL * max(1.0, np.linalg.norm(c1.squared, 2), np.linalg.norm(c2.squared, 2))
    if slack >= -tol:
        return Inclusion(True, math.exp(0.5 * (c1.logdet - c2.logdet)), slack)
    return Inclusion(False, None, slack)


def dominance_psd_test(c: float, cov1: Covariance, cov2: Covariance, points) -> float:
    """``lambda_min(c^2 G_2 - G_1)`` on ``points``; nonnegative on every set iff ``k1 <= c^2 k2``."""
    if c <= 0:
        raise DomainError(f"c must be > 0, got {c}")
    if cov1.dim != cov2.dim:
        raise DimensionError(f"dimensions differ: {cov1.dim} vs {cov2.dim}")
    G1 = gram_matrix(cov1, points)
    G2 = gram_matrix(cov2, points)
    return mc.psd_slack(c * c * G2 - G1)


def escalating_lattice_search(
    c: float,
    cov1: Covariance,
    cov2: Covariance,
    direction=None,
    spacing: Optional[float] = None,
    max_points: int = 200,
    tol: float = 1e-12,
) -> tuple[int, float]:
    """Grow an equispaced lattice on a line until ``c^2 G_2 - G_1`` turns indefinite.

    The line runs along ``direction`` (default: the top eigenvector of
    ``C1^{-2} - C2^{-2}``, along which ``k^{C1}`` is narrowest relative to
    ``k^{C2}``). ``spacing`` defaults to half the 1-D width of ``k^{C1}`` on
    that line. Returns ``(n, slack)`` for the first lattice size ``n`` with
    ``slack < -tol``, or ``(max_points, slack)`` of the last attempt.
    """
    if direction is None:
        P = mc.symmetrize(cov1.inv @ cov1.inv - cov2.inv @ cov2.inv)
        direction = np.linalg.eigh(P)[1][:, -1]
    u = _vec(direction, cov1.dim)
    u = u / np.linalg.norm(u)
    if spacing is None:
        width = 1.0 / math.sqrt(float(u @ cov1.inv @ cov1.inv @ u))
        spacing = 0.5 * width
    slack = math.inf
    for n in range(2, max_points + 1):
        pts = np.arange(n)[:, None] * spacing * u[None, :]
        slack = dominance_psd_test(c, cov1, cov2, pts)
        if slack < -tol:
            return n, slack
    return max_points, slack


def product_integral(cov1: Covariance, z, cov2: Covariance, w) -> float:
    """Closed form of ``int k^{C1}_z(y) k^{C2}_w(y) dy`` over ``R^d``.

    Equals ``pi^{d/2} det(C1^{-2} + C2^{-2})^{-1/2} k^C(z, w)`` with
    ``C = (C1^2 + C2^2)^{1/2}``.
    """
    d = cov1.dim
    if cov2.dim != d:
        raise DimensionError(f"dimensions differ: {d} vs {cov2.dim}")
    z, w = _vec(z, d), _vec(w, d)
    P = mc.symmetrize(cov1.inv @ cov1.inv + cov2.inv @ cov2.inv)
    S = mc.symmetrize(cov1.squared + cov2.squared)
    L = np.linalg.cholesky(S)
    r = np.linalg.solve(L, z - w)
    return math.exp(0.5 * d * math.log(math.pi) - 0.5 * mc.logdet_pd(P) - float(r @ r))


def tensor_kernel_eval(sigmas: Sequence[float], x, y) -> float:
    """Product of 1-D Gaussian kernels ``prod_k exp(-(x_k - y_k)^2 / sigma_k^2)``."""
    s = np.atleast_1d(np.asarray(sigmas, dtype=float))
    if np.any(s <= 0) or not np.all(np.isfinite(s)):
        raise DomainError("all sigmas must be finite and > 0")
    x, y = _vec(x, s.size), _vec(y, s.size)
    out = 1.0
    for sk, xk, yk in zip(s, x, y):
        out *= math.exp(-((xk - yk) / sk) ** 2)
    return out
