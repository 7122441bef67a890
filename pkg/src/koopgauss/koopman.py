"""Closed-form Koopman propagation of Gaussian kernel observables.

For ``dX = A X dt + B dW`` and a kernel section ``k^C_z`` one has

    K^t k^C_z = tau_t * k^{C_t}_{e^{-At} z},
    C_t   = [e^{-At} (C^2 + 2 Sigma(t)) e^{-A^T t}]^{1/2},
    tau_t = det C / det(C^2 + 2 Sigma(t))^{1/2},

and ``H_C`` is mapped into itself whenever
``(A C^2 + C^2 A^T) / 2 <= B B^T``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import matrix_core as mc
from .errors import CertificateFailedError, DimensionError, DomainError
from .gaussian_rkhs import Covariance, SpanElement, evaluate, gram_matrix, rkhs_norm
from .ou_process import LinearSDE
from .report import CERTIFICATE_FAILED, OK, Report

#: geometric time grid ``5 * 2^-k`` used by the ordering / monotonicity sweeps
SWEEP_TIMES = tuple(5.0 * 2.0**-k for k in range(21))


@dataclass(frozen=True, eq=False)
class Certificate:
    """``slack = lambda_min(B B^T - (A C^2 + C^2 A^T) / 2)``."""

    slack: float
    holds: bool
    matrix: np.ndarray = field(repr=False)


def certificate(sys: LinearSDE, cov: Covariance) -> Certificate:
    if cov.dim != sys.dim:
        raise DimensionError(f"covariance is {cov.dim}-dimensional, system is {sys.dim}")
    C2 = cov.squared
    M = mc.symmetrize(sys.BBt - 0.5 * (sys.A @ C2 + C2 @ sys.A.T))
    slack = mc.psd_slack(M)
    return Certificate(slack, slack >= -mc.psd_tolerance(M), M)


@dataclass(frozen=True, eq=False)
class KoopmanImage:
    """``K^t f = tau * sum_j coeffs[j] k^{C_t}_{centers[j]}``.

    ``spread`` is ``C^2 + 2 Sigma(t)`` and ``flow`` is ``e^{-At}``; both are
    ``None`` for images loaded from JSON.
    """

    tau: float
    cov_t: Covariance
    centers: np.ndarray
    coeffs: np.ndarray
    horizon: float
    spread: Optional[np.ndarray] = field(default=None, repr=False)
    flow: Optional[np.ndarray] = field(default=None, repr=False)

    def as_span(self) -> SpanElement:
        """The image as a plain span element over ``C_t`` (tau folded into the coefficients)."""
        return SpanElement(self.cov_t, self.centers, self.tau * self.coeffs)

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "covariance_t": self.cov_t.C.tolist(),
            "centers": self.centers.tolist(),
            "coeffs": self.coeffs.tolist(),
            "t": self.horizon,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "KoopmanImage":
        cov = Covariance(data["covariance_t"])
        centers = np.asarray(data["centers"], dtype=float).reshape(-1, cov.dim)
        return cls(float(data["tau"]), cov, centers, np.asarray(data["coeffs"], dtype=float), float(data["t"]))


def propagate(sys: LinearSDE, f: SpanElement, t: float) -> KoopmanImage:
    t = float(t)
    if not math.isfinite(t) or t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    cov = f.cov
    if cov.dim != sys.dim:
        raise DimensionError(f"observable is {cov.dim}-dimensional, system is {sys.dim}")
    if t == 0.0:
        return KoopmanImage(1.0, cov, f.centers, f.coeffs, 0.0, cov.squared, np.eye(sys.dim))
    spread = mc.symmetrize(cov.squared + 2.0 * mc.gramian_finite(sys.A, sys.B, t))
    flow = mc.matrix_exp(sys.A, -t)
    # C_t = (G G^T)^{1/2} with G = e^{-At} chol(spread)
    cov_t = Covariance.from_eig(*mc.sqrt_gram(flow @ np.linalg.cholesky(spread)))
    tau = math.exp(cov.logdet - 0.5 * mc.logdet_pd(spread))
    centers = f.centers @ flow.T
    return KoopmanImage(tau, cov_t, centers, f.coeffs, t, spread, flow)


def image_values(img: KoopmanImage, x) -> np.ndarray:
    return img.tau * evaluate(SpanElement(img.cov_t, img.centers, img.coeffs), x)


def image_eval(img: KoopmanImage, x) -> float:
    """``(K^t f)(x)`` at a single point."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (img.cov_t.dim,):
        raise DimensionError(f"expected a {img.cov_t.dim}-vector, got shape {x.shape}")
    return float(image_values(img, x)[0])


def image_norm_ct(img: KoopmanImage, original_centers, both: bool = False):
    """``||K^t f||_{C_t}``.

    Computed from the Gram matrix of ``k^{C_t}`` at the mapped centers and,
    independently, from ``k^{(C^2 + 2 Sigma(t))^{1/2}}`` at the original
    centers. Both Gram matrices coincide by a change of variables. With
    ``both=True`` the pair ``(mapped, original)`` is returned.
    """
    X = np.asarray(original_centers, dtype=float).reshape(-1, img.cov_t.dim)
    if X.shape[0] != img.coeffs.shape[0]:
        raise DimensionError(f"{X.shape[0]} original centers for {img.coeffs.shape[0]} coefficients")
    a = img.coeffs
    q_mapped = float(a @ gram_matrix(img.cov_t, img.centers) @ a)
    mapped = img.tau * math.sqrt(max(q_mapped, 0.0))
    if not both:
        return mapped
    if img.spread is None:
        raise DomainError("image carries no spread matrix; recompute it with propagate()")
    pre = Covariance(mc.sym_sqrt(img.spread))
    q_orig = float(a @ gram_matrix(pre, X) @ a)
    return mapped, img.tau * math.sqrt(max(q_orig, 0.0))


def norm_bound_report(sys: LinearSDE, f: SpanElement, t: float, allow_unverified: bool = False) -> Report:
    """Evaluate the norm chain ``||K^t f||_C <= e^{t tr(-A)/2} ||f||_C``.

    Reported: ``||f||_C``, ``||K^t f||_{C_t}``, the proxy
    ``U = sqrt(det C_t / det C) ||K^t f||_{C_t}`` and the bound
    ``e^{t tr(-A)/2} ||f||_C``. The chain is only justified when the
    certificate holds; otherwise :class:`CertificateFailedError` is raised
    unless ``allow_unverified`` is set, in which case the report carries
    ``verified = False`` and status ``certificate-failed``.
    """
    cert = certificate(sys, f.cov)
    if not cert.holds and not allow_unverified:
        raise CertificateFailedError(cert.slack)
    img = propagate(sys, f, t)
    norm_f = rkhs_norm(f)
    norm_img, norm_img_orig = image_norm_ct(img, f.centers, both=True)
    det_ratio = math.exp(img.cov_t.logdet - f.cov.logdet)
    upper = math.sqrt(det_ratio) * norm_img
    bound = math.exp(-0.5 * t * float(np.trace(sys.A))) * norm_f
    identity_lhs = img.tau * det_ratio
    identity_rhs = math.exp(-t * float(np.trace(sys.A)))
    tol = 1e-10
    prop_ok = norm_img <= math.sqrt(img.tau) * norm_f * (1 + tol) + tol
    chain_ok = upper <= bound * (1 + tol) + tol
    out = {
        "norm_f": norm_f,
        "norm_image_ct": norm_img,
        "norm_image_ct_original_centers": norm_img_orig,
        "sqrt_tau_norm_f": math.sqrt(img.tau) * norm_f,
        "upper_proxy": upper,
        "bound": bound,
        "bound_factor": math.exp(-0.5 * t * float(np.trace(sys.A))),
        "tau": img.tau,
        "det_ratio": det_ratio,
        "det_identity_lhs": identity_lhs,
        "det_identity_rhs": identity_rhs,
        "det_identity_rel_error": abs(identity_lhs - identity_rhs) / identity_rhs,
        "certificate_slack": cert.slack,
        "verified": bool(cert.holds),
        "prop_bound_holds": bool(prop_ok),
        "chain_holds": bool(chain_ok),
    }
    status = OK if cert.holds else CERTIFICATE_FAILED
    return Report("norm-bound", {"t": float(t)}, out, status)


@dataclass(frozen=True)
class FxPoint:
    value: float
    derivative: float


def fx_curve(sys: LinearSDE, cov: Covariance, x, t: float) -> FxPoint:
    """``f_x(t) = <C_t^2 x, x>`` and its derivative.

    The derivative uses the closed form
    ``<[2 B B^T - (A C^2 + C^2 A^T)] y, y>`` with ``y = e^{-A^T t} x``.
    """
    t = float(t)
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (sys.dim,):
        raise DimensionError(f"expected a {sys.dim}-vector, got shape {x.shape}")
    C2 = cov.squared
    flow = mc.matrix_exp(sys.A, -t)
    spread = C2 + 2.0 * mc.gramian_finite(sys.A, sys.B, t)
    y = flow.T @ x
    value = float(y @ spread @ y)
    D = 2.0 * sys.BBt - (sys.A @ C2 + C2 @ sys.A.T)
    return FxPoint(value, float(y @ D @ y))


def ordering_sweep(sys: LinearSDE, cov: Covariance, times=SWEEP_TIMES) -> np.ndarray:
    """``psd_slack(C_t^2 - C^2)`` over ``times``; all >= 0 iff the certificate holds (for all t)."""
    C2 = cov.squared
    out = []
    for t in times:
        flow = mc.matrix_exp(sys.A, -t)
        Ct2 = flow @ (C2 + 2.0 * mc.gramian_finite(sys.A, sys.B, t)) @ flow.T
        out.append(mc.psd_slack(Ct2 - C2))
    return np.array(out)


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)) if np.any(b) else float(np.linalg.norm(a))


def semigroup_check(sys: LinearSDE, f: SpanElement, t: float, s: float, rtol: float = 1e-9) -> Report:
    """Compare ``K^{t+s} f`` with ``K^s (K^t f)`` on the closed-form parameters."""
    direct = propagate(sys, f, t + s)
    first = propagate(sys, f, t)
    second = propagate(sys, first.as_span(), s)
    tau_two = first.tau * second.tau
    dev = {
        "tau": abs(tau_two - direct.tau) / direct.tau,
        "covariance": _rel(second.cov_t.C, direct.cov_t.C),
        "centers": _rel(second.centers, direct.centers),
    }
    worst = max(dev.values())
    out = {
        "tau_direct": direct.tau,
        "tau_two_step": tau_two,
        "deviation": dev,
        "max_rel_deviation": worst,
        "within_tolerance": bool(worst <= rtol),
    }
    return Report("semigroup", {"t": float(t), "s": float(s)}, out, OK)
