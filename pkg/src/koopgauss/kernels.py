"""Backend selection for the Gaussian kernel hot loops.

Both backends operate on *whitened* points ``z = C^{-1} x``, for which the
kernel reduces to ``exp(-||z - z'||^2)``. The compiled extension is used
when it was built; otherwise the numpy fallback is loaded.
"""

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

_active = _compiled if _compiled is not None else _kernels_py


def backend() -> str:
    return "compiled" if _active is _compiled and _compiled is not None else "python"


def use_backend(name: str) -> None:
    """Switch the active backend (``"compiled"`` or ``"python"``)."""
    global _active
    if name not in BACKENDS:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}")
    _active = BACKENDS[name]


def _c(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def gram(Z1, Z2) -> np.ndarray:
    Z1, Z2 = _c(Z1), _c(Z2)
    return _active.gram(Z1, Z2)


def kernel_sum(Z, centers, coeffs) -> np.ndarray:
    return _active.kernel_sum(_c(Z), _c(centers), _c(coeffs))
