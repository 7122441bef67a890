"""Closed-form Koopman operators of linear SDEs on Gaussian RKHS observables."""

from .errors import (
    CertificateFailedError,
    DimensionError,
    DomainError,
    IllPosedError,
    KoopgaussError,
    NotControllableError,
    NotHurwitzError,
    NotPSDError,
    SamplingError,
    UnsupportedCaseError,
)
from .gaussian_rkhs import (
    Covariance,
    SpanElement,
    dominance_psd_test,
    escalating_lattice_search,
    gram_matrix,
    inclusion_test,
    kernel_eval,
    product_integral,
    rkhs_norm,
    tensor_kernel_eval,
)
from .kernels import backend
from .koopman import (
    Certificate,
    KoopmanImage,
    certificate,
    fx_curve,
    image_eval,
    image_norm_ct,
    norm_bound_report,
    ordering_sweep,
    propagate,
    semigroup_check,
)
from .matrix_core import gramian_finite, matrix_exp, max_scale_tau, psd_slack, solve_lyapunov, sym_sqrt
from .ou_process import (
    LinearSDE,
    TransitionLaw,
    sample_transition,
    stationary_density,
    transition_density,
    transition_law,
    validate_system,
)
from .report import Report

__version__ = "0.1.0"
