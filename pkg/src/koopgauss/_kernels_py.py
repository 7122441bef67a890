"""Pure numpy versions of the compiled kernel loops in ``_kernels.pyx``."""

import numpy as np

# rows per block so that the (block, m, d) difference tensor stays small
_BLOCK = 4096


def gram(Z1: np.ndarray, Z2: np.ndarray) -> np.ndarray:
    out = np.empty((Z1.shape[0], Z2.shape[0]))
    for s in range(0, Z1.shape[0], _BLOCK):
        diff = Z1[s:s + _BLOCK, None, :] - Z2[None, :, :]
        out[s:s + _BLOCK] = np.exp(-np.einsum("ijk,ijk->ij", diff, diff))
    return out


def kernel_sum(Z: np.ndarray, centers: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    out = np.empty(Z.shape[0])
    for s in range(0, Z.shape[0], _BLOCK):
        out[s:s + _BLOCK] = gram(Z[s:s + _BLOCK], centers) @ coeffs
    return out
