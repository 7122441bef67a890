"""Small dense matrix kit.

Everything here is a pure function of its inputs and works on plain
``numpy.ndarray`` values. Symmetric inputs are symmetrized as
``(S + S.T) / 2`` before any eigen-routine, because products such as
``A @ C2 + C2 @ A.T`` are only symmetric in exact arithmetic.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg as sla

from .errors import DimensionError, DomainError, IllPosedError, NotPSDError, UnsupportedCaseError

MAX_DIM = 64
PSD_RTOL = 1e-10


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Convert ``M`` to a finite 2-D float array (scalars become 1x1)."""
    arr = np.array(M, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        # a bare vector is read as a column
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.size == 0:
        raise DimensionError(f"{name} must be a nonempty 2-D array, got shape {arr.shape}")
    if arr.shape[0] > MAX_DIM:
        raise DimensionError(f"{name} has {arr.shape[0]} rows; at most {MAX_DIM} are supported")
    if not np.all(np.isfinite(arr)):
        raise DimensionError(f"{name} has non-finite entries")
    return arr


def as_square(M, name: str = "matrix") -> np.ndarray:
    arr = as_matrix(M, name)
    if arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    return arr


def symmetrize(S) -> np.ndarray:
    S = as_square(S)
    return 0.5 * (S + S.T)


def psd_tolerance(S: np.ndarray) -> float:
    """Absolute eigenvalue tolerance ``1e-10 * max(1, ||S||_2)``."""
    return PSD_RTOL * max(1.0, float(np.linalg.norm(S, 2)))


def matrix_exp(M, t: float = 1.0) -> np.ndarray:
    """Return ``exp(M t)``. ``t == 0`` gives the identity exactly."""
    M = as_square(M)
    t = float(t)
    if not math.isfinite(t):
        raise DomainError(f"t must be finite, got {t}")
    if t == 0.0:
        return np.eye(M.shape[0])
    # scaling-and-squaring Pade
    return sla.expm(M * t)


def psd_slack(S) -> float:
    """Smallest eigenvalue of the symmetrized ``S``."""
    return float(np.linalg.eigvalsh(symmetrize(S))[0])


def is_psd(S) -> bool:
    S = symmetrize(S)
    return psd_slack(S) >= -psd_tolerance(S)


def sym_sqrt(S) -> np.ndarray:
    """Principal square root of a symmetric positive semidefinite matrix.

    Eigenvalues inside the PSD tolerance band below zero are clipped to 0;
    anything more negative raises :class:`NotPSDError`.
    """
    S = symmetrize(S)
    w, V = np.linalg.eigh(S)
    tol = psd_tolerance(S)
    if w[0] < -tol:
        raise NotPSDError(f"matrix is not PSD: smallest eigenvalue {w[0]:.6g}")
    r = np.sqrt(np.clip(w, 0.0, None))
    R = (V * r) @ V.T
    return 0.5 * (R + R.T)


def sqrt_gram(G) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs ``(s, U)`` of the principal square root of ``G @ G.T``.

    Taken from the SVD of ``G``: singular values carry relative error
    ``eps * cond(G)``, whereas eigenvalues of the explicitly formed
    ``G @ G.T`` carry ``eps * cond(G)^2``.
    """
    G = as_square(G)
    U, s, _ = np.linalg.svd(G)
    return s, U


def logdet_pd(S) -> float:
    """log det of a symmetric positive definite matrix via Cholesky."""
    S = symmetrize(S)
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise NotPSDError("matrix is not positive definite") from exc
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def solve_lyapunov(A, Q) -> np.ndarray:
    """Solve ``A X + X A^T + Q = 0`` for symmetric ``X``.

    Raises :class:`IllPosedError` when two eigenvalues of ``A`` sum to
    (numerically) zero, since the solution is then not unique.
    """
    A = as_square(A, "A")
    Q = symmetrize(Q)
    if Q.shape != A.shape:
        raise DimensionError(f"Q has shape {Q.shape}, expected {A.shape}")
    lam = np.linalg.eigvals(A)
    gap = np.min(np.abs(lam[:, None] + lam[None, :]))
    if gap <= 1e-10 * max(1.0, float(np.linalg.norm(A, 2))):
        raise IllPosedError(f"Lyapunov operator is singular (min |l_i + l_j| = {gap:.3g})")
    X = sla.solve_continuous_lyapunov(A, -Q)
    return 0.5 * (X + X.T)


def _van_loan(A: np.ndarray, BBt: np.ndarray, t: float) -> np.ndarray:
    d = A.shape[0]
    F = np.zeros((2 * d, 2 * d))
    F[:d, :d] = -A
    F[:d, d:] = BBt
    F[d:, d:] = A.T
    E = sla.expm(F * t)
    # E[d:, d:] = exp(A^T t), E[:d, d:] = exp(-A t) Sigma(t)
    return E[d:, d:].T @ E[:d, d:]


def gramian_finite(A, B, t: float) -> np.ndarray:
    """Finite-horizon controllability Gramian ``int_0^t e^{As} B B^T e^{A^T s} ds``.

    The augmented-exponential construction is evaluated on a short base
    horizon ``t / 2^k`` with ``||A|| t / 2^k <= 1/2`` and then doubled with
    ``S(2h) = S(h) + e^{Ah} S(h) e^{A^T h}``; the block exponential on its
    own loses all accuracy once ``||A|| t`` is large.
    """
    A = as_square(A, "A")
    B = as_matrix(B, "B")
    if B.shape[0] != A.shape[0]:
        raise DimensionError(f"B has {B.shape[0]} rows, A is {A.shape[0]}x{A.shape[0]}")
    t = float(t)
    if not math.isfinite(t) or t < 0:
        raise DomainError(f"horizon must be a finite t >= 0, got {t}")
    d = A.shape[0]
    if t == 0.0:
        return np.zeros((d, d))
    BBt = B @ B.T
    nrm = float(np.linalg.norm(A, 1))
    k = 0
    if nrm * t > 0.5:
        k = int(math.ceil(math.log2(nrm * t / 0.5)))
    h = t / 2**k
    S = _van_loan(A, BBt, h)
    S = 0.5 * (S + S.T)
    E = sla.expm(A * h)
    for _ in range(k):
        S = S + E @ S @ E.T
        S = 0.5 * (S + S.T)
        E = E @ E
    return S


def max_scale_tau(A, B, C) -> float:
    """Largest ``tau`` such that ``tau * C`` still satisfies the invariance condition.

    With ``M = (A C^2 + C^2 A^T) / 2`` the condition for ``tau C`` reads
    ``tau^2 M <= B B^T``. Returns ``math.inf`` when ``M <= 0``. When
    ``B B^T`` is singular a finite value is only reported if ``M`` is
    negative definite on the null space of ``B^T``; otherwise
    :class:`UnsupportedCaseError` is raised.
    """
    A = as_square(A, "A")
    B = as_matrix(B, "B")
    C = symmetrize(C)
    if B.shape[0] != A.shape[0] or C.shape != A.shape:
        raise DimensionError("A, B, C dimensions do not match")
    if psd_slack(C) <= psd_tolerance(C):
        raise NotPSDError("C must be positive definite")
    C2 = C @ C
    M = symmetrize(0.5 * (A @ C2 + C2 @ A.T))
    if -psd_slack(-M) <= psd_tolerance(M):
        return math.inf
    BBt = symmetrize(B @ B.T)
    sv = np.linalg.svd(B, compute_uv=False)
    rank = int(np.sum(sv > 1e-10 * sv[0])) if sv.size and sv[0] > 0 else 0
    if rank == A.shape[0]:
        L = np.linalg.cholesky(BBt)
        Linv_M = sla.solve_triangular(L, M, lower=True)
        W = sla.solve_triangular(L, Linv_M.T, lower=True)
        lam = float(np.linalg.eigvalsh(symmetrize(W))[-1])
        return 1.0 / math.sqrt(lam)
    # singular diffusion: feasible tau^2 form an interval [0, s*]; bisect on it
    _, _, Vt = np.linalg.svd(B.T)
    N = Vt[rank:].T
    if -psd_slack(-(N.T @ M @ N)) >= -psd_tolerance(M):
        raise UnsupportedCaseError(
            "B B^T is singular and M is not negative definite on its null space; "
            "no tau > 0 satisfies the condition"
        )

    def feasible(s: float) -> bool:
        return psd_slack(BBt - s * M) >= 0.0

    lo, hi = 0.0, 1.0
    while feasible(hi):
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            return math.inf
    if lo == 0.0:
        while not feasible(hi / 2):
            hi /= 2
            if hi < 1e-300:
                raise UnsupportedCaseError("no positive scale found")
        lo = hi / 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo)
