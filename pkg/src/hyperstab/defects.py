"""Defect kernels: left-hand sides of every functional (in)equation under study.

Each kernel takes the map under test (a MapUnderTest or any Element->Element
callable) and returns the defect as an Element; a zero defect means the map
satisfies the identity exactly at that sample. Batch variants evaluate whole
sample stacks through the compiled/NumPy backend.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .algebra import AlgebraDescriptor, Element, norm
from .errors import AlgebraMismatchError, InvalidElementError, UnsupportedHypothesisError
from .maps import MapUnderTest, as_callable, evaluate_map_stack


@dataclass(frozen=True)
class DefectSample:
    """One defect evaluation: inputs, optional scalar parameters, value."""

    x: Element
    y: Element | None
    scalar_params: dict | None
    defect_value: Element

    @property
    def defect_norm(self) -> float:
        return norm(self.defect_value)


def _check_pair(x: Element, y: Element):
    if x.algebra != y.algebra:
        raise AlgebraMismatchError("x and y live in different algebras")


def jordan_triple_defect(h, x: Element, y: Element) -> Element:
    """h(xyx) - h(x) y x - x h(y) x - x y h(x)."""
    _check_pair(x, y)
    f = as_callable(h)
    xyx = x @ y @ x
    return f(xyx) - f(x) @ y @ x - x @ f(y) @ x - x @ y @ f(x)


def derivation_defect(h, x: Element, y: Element) -> Element:
    """h(xy) - h(x) y - x h(y)."""
    _check_pair(x, y)
    f = as_callable(h)
    return f(x @ y) - f(x) @ y - x @ f(y)


def jordan_defect(h, x: Element) -> Element:
    """h(x^2) - h(x) x - x h(x)."""
    f = as_callable(h)
    return f(x @ x) - f(x) @ x - x @ f(x)


def general_additivity_defect(h, x: Element, y: Element, lam, a, b, A, B) -> Element:
    """h(lam*a*x + b*y) - lam*A*h(x) - B*h(y), for fixed scalars with a*b != 0."""
    _check_pair(x, y)
    if a * b == 0:
        raise InvalidElementError("scalars a, b must be nonzero")
    f = as_callable(h)
    return f((lam * a) * x + b * y) - (lam * A) * f(x) - B * f(y)


def jensen3_defect(h, x: Element, y: Element, mu=1) -> Element:
    """f(2 mu x + mu y) + f(mu x + 2 mu y) - mu (f(3x) + f(3y))."""
    _check_pair(x, y)
    if mu != 1 and x.algebra.field != "complex":
        raise UnsupportedHypothesisError("unimodular mu variants need a complex algebra")
    f = as_callable(h)
    return f((2 * mu) * x + mu * y) + f(mu * x + (2 * mu) * y) - mu * (f(3 * x) + f(3 * y))


def mixed_m_defect(h, x: Element, y: Element, m: int, mu=1) -> Element:
    """h(mu(x+my)) + h(mu(x-my)) - mu (2h(x) - 2m^2 h(y) + m^2 h(2y))."""
    _check_pair(x, y)
    if m == 0 or m % 2 != 0:
        raise InvalidElementError("m must be a nonzero even integer")
    if mu != 1 and x.algebra.field != "complex":
        raise UnsupportedHypothesisError("unimodular mu variants need a complex algebra")
    f = as_callable(h)
    m2 = m * m
    return (
        f(mu * (x + m * y))
        + f(mu * (x - m * y))
        - mu * (2 * f(x) - m2 * (2 * f(y)) + m2 * f(2 * y))
    )


def scalar_homogeneity_defect(h, lam, x: Element) -> Element:
    """h(lam x) - lam h(x)."""
    f = as_callable(h)
    return f(lam * x) - lam * f(x)


@dataclass(frozen=True)
class MaxDefectResult:
    sup_norm: float
    argmax_index: int
    argmax_sample: tuple


def max_defect_over_samples(kernel, h, sample_set: list, params: dict | None = None) -> MaxDefectResult:
    """Maximum defect norm over a sample set; ties break at the lowest index.

    `kernel` is one of the defect functions above; each entry of `sample_set`
    is the tuple of element arguments it expects after `h`.
    """
    if not sample_set:
        raise InvalidElementError("sample set must be nonempty")
    params = params or {}
    sup = -1.0
    arg = 0
    for i, sample in enumerate(sample_set):
        value = norm(kernel(h, *sample, **params))
        if value > sup:
            sup = value
            arg = i
    return MaxDefectResult(sup_norm=sup, argmax_index=arg, argmax_sample=tuple(sample_set[arg]))


# ---------------------------------------------------------------------------
# Batch paths (hot loops; go through the kernel backend)
# ---------------------------------------------------------------------------

def triple_defect_norms(h: MapUnderTest, xs: np.ndarray, ys: np.ndarray,
                        algebra: AlgebraDescriptor) -> np.ndarray:
    """Triple-defect norms for stacked pairs; Frobenius-normed for speed when
    the algebra uses it, else operator norms via the stacked SVD."""
    xs = np.ascontiguousarray(xs, dtype=algebra.dtype)
    ys = np.ascontiguousarray(ys, dtype=algebra.dtype)
    xyx = kernels.sandwich_stack(xs, ys)
    hxyx = evaluate_map_stack(h, xyx, algebra)
    hx = evaluate_map_stack(h, xs, algebra)
    hy = evaluate_map_stack(h, ys, algebra)
    defects = kernels.triple_defect_stack(hxyx, hx, hy, xs, ys)
    return _stack_norms(defects, algebra)


def derivation_defect_norms(h: MapUnderTest, xs: np.ndarray, ys: np.ndarray,
                            algebra: AlgebraDescriptor) -> np.ndarray:
    xs = np.ascontiguousarray(xs, dtype=algebra.dtype)
    ys = np.ascontiguousarray(ys, dtype=algebra.dtype)
    xy = kernels.mul_stack(xs, ys)
    hxy = evaluate_map_stack(h, xy, algebra)
    hx = evaluate_map_stack(h, xs, algebra)
    hy = evaluate_map_stack(h, ys, algebra)
    defects = kernels.deriv_defect_stack(hxy, hx, hy, xs, ys)
    return _stack_norms(defects, algebra)


def jordan_defect_norms(h: MapUnderTest, xs: np.ndarray,
                        algebra: AlgebraDescriptor) -> np.ndarray:
    xs = np.ascontiguousarray(xs, dtype=algebra.dtype)
    xx = kernels.mul_stack(xs, xs)
    hxx = evaluate_map_stack(h, xx, algebra)
    hx = evaluate_map_stack(h, xs, algebra)
    defects = kernels.jordan_defect_stack(hxx, hx, xs)
    return _stack_norms(defects, algebra)


def _stack_norms(stack: np.ndarray, algebra: AlgebraDescriptor) -> np.ndarray:
    if algebra.norm_kind == "frobenius":
        return np.asarray(kernels.fro_norm_stack(stack))
    from .algebra import norm_stack

    return norm_stack(stack, "operator-2")
