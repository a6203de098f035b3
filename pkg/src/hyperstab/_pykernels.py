"""Pure-numpy batch kernels; semantics mirror the compiled _ckernels module.

All functions take C-contiguous (B, n, n) stacks of float64 or complex128
matrices and return freshly allocated arrays.
"""

from __future__ import annotations

import numpy as np


def commutator_stack(a: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """a @ x - x @ a for each x in the stack."""
    return a @ xs - xs @ a


def mul_stack(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    return xs @ ys


def sandwich_stack(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """x @ y @ x for each pair in the stacks."""
    return xs @ ys @ xs


def triple_defect_stack(hxyx, hx, hy, xs, ys) -> np.ndarray:
    """h(xyx) - h(x) y x - x h(y) x - x y h(x), given precomputed map values."""
    return hxyx - hx @ (ys @ xs) - xs @ hy @ xs - (xs @ ys) @ hx


def deriv_defect_stack(hxy, hx, hy, xs, ys) -> np.ndarray:
    """h(xy) - h(x) y - x h(y), given precomputed map values."""
    return hxy - hx @ ys - xs @ hy


def jordan_defect_stack(hxx, hx, xs) -> np.ndarray:
    """h(x^2) - h(x) x - x h(x), given precomputed map values."""
    return hxx - hx @ xs - xs @ hx


def fro_norm_stack(xs: np.ndarray) -> np.ndarray:
    """Frobenius norm of each matrix in the stack."""
    flat = xs.reshape(xs.shape[0], -1)
    return np.sqrt(np.einsum("bi,bi->b", flat.real, flat.real)
                   + (np.einsum("bi,bi->b", flat.imag, flat.imag)
                      if np.iscomplexobj(xs) else 0.0))
