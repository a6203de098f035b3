"""Finite-dimensional matrix Banach algebras.

Concrete carriers for all defect arithmetic: full matrix algebras M_n,
direct sums of full matrix blocks, and upper-triangular algebras, over the
real or complex field, with the operator 2-norm (default, so that the unit
has norm 1) or the Frobenius norm (fast path; norm of the unit is sqrt(n)).

Structural flags (prime / semiprime / nontrivial idempotent) are derived
from the family and never user-settable, so a descriptor can only encode a
consistent algebra.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AlgebraMismatchError,
    InvalidElementError,
    UnsupportedHypothesisError,
)

FAMILIES = ("full-matrix", "direct-sum-of-full-matrix", "upper-triangular")
FIELDS = ("real", "complex")
NORM_KINDS = ("operator-2", "frobenius")

#: Oracles downstream are O(n^6); keep everything desk-scale.
MAX_DIMENSION = 8


def _structural_flags(family: str, n: int, blocks: tuple[int, ...]) -> dict:
    if family == "full-matrix":
        return {
            "is_unital": True,
            "is_prime": True,
            "is_semiprime": True,
            "has_nontrivial_idempotent": n >= 2,
        }
    if family == "direct-sum-of-full-matrix":
        return {
            "is_unital": True,
            "is_prime": False,
            "is_semiprime": True,
            "has_nontrivial_idempotent": True,
        }
    # upper-triangular, n >= 2: strictly-upper matrix units annihilate the
    # whole algebra, so the algebra is neither prime nor semiprime.
    return {
        "is_unital": True,
        "is_prime": False,
        "is_semiprime": False,
        "has_nontrivial_idempotent": True,
    }


@dataclass(frozen=True)
class AlgebraDescriptor:
    """A finite-dimensional unital algebra instance.

    Use :func:`make_algebra` to construct one; the flags are derived and
    validated against the family, so inconsistent descriptors are rejected.
    """

    family: str
    n: int
    field: str = "real"
    norm_kind: str = "operator-2"
    blocks: tuple[int, ...] = ()
    is_unital: bool = True
    is_prime: bool = False
    is_semiprime: bool = False
    has_nontrivial_idempotent: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidElementError(f"unknown algebra family {self.family!r}")
        if self.field not in FIELDS:
            raise InvalidElementError(f"unknown scalar field {self.field!r}")
        if self.norm_kind not in NORM_KINDS:
            raise InvalidElementError(f"unknown norm kind {self.norm_kind!r}")
        if not 1 <= self.n <= MAX_DIMENSION:
            raise InvalidElementError(
                f"matrix dimension must be in [1, {MAX_DIMENSION}], got {self.n}"
            )
        if self.family == "direct-sum-of-full-matrix":
            if len(self.blocks) < 2 or any(b < 1 for b in self.blocks):
                raise InvalidElementError("direct sum needs >= 2 blocks of size >= 1")
            if sum(self.blocks) != self.n:
                raise InvalidElementError("block sizes must sum to n")
        elif self.blocks:
            raise InvalidElementError("blocks are only meaningful for direct sums")
        if self.family == "upper-triangular" and self.n < 2:
            raise InvalidElementError("upper-triangular family needs n >= 2")
        expected = _structural_flags(self.family, self.n, self.blocks)
        actual = {k: getattr(self, k) for k in expected}
        if actual != expected:
            raise InvalidElementError(
                f"structural flags {actual} inconsistent with {self.family}(n={self.n})"
            )

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(np.complex128 if self.field == "complex" else np.float64)

    @property
    def dimension(self) -> int:
        """Linear dimension (number of basis matrix units)."""
        if self.family == "full-matrix":
            return self.n * self.n
        if self.family == "direct-sum-of-full-matrix":
            return sum(b * b for b in self.blocks)
        return self.n * (self.n + 1) // 2


def make_algebra(
    family: str,
    n: int,
    field: str = "real",
    norm_kind: str = "operator-2",
    blocks: tuple[int, ...] | None = None,
) -> AlgebraDescriptor:
    """Construct a descriptor with structural flags derived from the family."""
    blocks = tuple(blocks) if blocks else ()
    if family == "direct-sum-of-full-matrix" and not blocks:
        raise InvalidElementError("direct sum requires explicit block sizes")
    flags = _structural_flags(family, n, blocks)
    return AlgebraDescriptor(
        family=family, n=n, field=field, norm_kind=norm_kind, blocks=blocks, **flags
    )


def support_mask(algebra: AlgebraDescriptor) -> np.ndarray:
    """Boolean mask of entries an element of this algebra may occupy."""
    n = algebra.n
    if algebra.family == "full-matrix":
        return np.ones((n, n), dtype=bool)
    if algebra.family == "upper-triangular":
        return np.triu(np.ones((n, n), dtype=bool))
    mask = np.zeros((n, n), dtype=bool)
    off = 0
    for b in algebra.blocks:
        mask[off : off + b, off : off + b] = True
        off += b
    return mask


@dataclass(frozen=True)
class Element:
    """A dense square-matrix value of an algebra; immutable after creation."""

    data: np.ndarray
    algebra: AlgebraDescriptor

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=self.algebra.dtype)
        if arr.shape != (self.algebra.n, self.algebra.n):
            raise InvalidElementError(
                f"expected shape {(self.algebra.n, self.algebra.n)}, got {arr.shape}"
            )
        arr = np.ascontiguousarray(arr)
        mask = support_mask(self.algebra)
        if np.any(arr[~mask] != 0):
            raise InvalidElementError(
                f"entries outside the {self.algebra.family} support must be exactly zero"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    def _check_same(self, other: "Element"):
        if self.algebra != other.algebra:
            raise AlgebraMismatchError(
                f"elements live in different algebras: {self.algebra} vs {other.algebra}"
            )

    def __add__(self, other: "Element") -> "Element":
        self._check_same(other)
        return Element(self.data + other.data, self.algebra)

    def __sub__(self, other: "Element") -> "Element":
        self._check_same(other)
        return Element(self.data - other.data, self.algebra)

    def __neg__(self) -> "Element":
        return Element(-self.data, self.algebra)

    def __matmul__(self, other: "Element") -> "Element":
        self._check_same(other)
        return Element(self.data @ other.data, self.algebra)

    def _scale(self, c) -> "Element":
        c = complex(c)
        if c.imag != 0.0 and self.algebra.field == "real":
            raise AlgebraMismatchError("complex scalar on a real algebra")
        if self.algebra.field == "real":
            c = c.real
        return Element(self.data * c, self.algebra)

    def __mul__(self, c) -> "Element":
        return self._scale(c)

    __rmul__ = __mul__

    def __truediv__(self, c) -> "Element":
        c = complex(c)
        if c.imag != 0.0 and self.algebra.field == "real":
            raise AlgebraMismatchError("complex scalar on a real algebra")
        if self.algebra.field == "real":
            return Element(self.data / c.real, self.algebra)
        return Element(self.data / c, self.algebra)

    @property
    def norm(self) -> float:
        return norm(self)


def element(algebra: AlgebraDescriptor, data) -> Element:
    return Element(np.asarray(data), algebra)


def zero(algebra: AlgebraDescriptor) -> Element:
    return Element(np.zeros((algebra.n, algebra.n)), algebra)


def unit(algebra: AlgebraDescriptor) -> Element:
    return Element(np.eye(algebra.n), algebra)


def norm(x: Element) -> float:
    """Norm per the descriptor: largest singular value or Frobenius."""
    if not np.all(np.isfinite(x.data.view(np.float64))):
        raise InvalidElementError("element has non-finite entries")
    if x.algebra.norm_kind == "operator-2":
        return float(np.linalg.norm(x.data, 2))
    return float(np.linalg.norm(x.data, "fro"))


def norm_stack(stack: np.ndarray, norm_kind: str) -> np.ndarray:
    """Vectorized norms of a (B, n, n) stack of matrices."""
    if not np.all(np.isfinite(stack.view(np.float64))):
        raise InvalidElementError("stack has non-finite entries")
    if norm_kind == "operator-2":
        if stack.shape[0] == 0:
            return np.zeros(0)
        return np.linalg.norm(stack, ord=2, axis=(1, 2))
    return np.linalg.norm(stack, ord="fro", axis=(1, 2))


def basis(algebra: AlgebraDescriptor) -> list[Element]:
    """Matrix units spanning the algebra, in deterministic row-major order."""
    n = algebra.n
    mask = support_mask(algebra)
    out = []
    for i in range(n):
        for j in range(n):
            if mask[i, j]:
                e = np.zeros((n, n))
                e[i, j] = 1.0
                out.append(Element(e, algebra))
    return out


def random_element(algebra: AlgebraDescriptor, seed: int, scale: float) -> Element:
    """Seeded random element with per-entry magnitude <= scale.

    Entries are uniform on [-scale, scale] (complex case: real and imaginary
    parts each uniform on [-scale/sqrt(2), scale/sqrt(2)]), so both supported
    norms are bounded by n*scale.
    """
    if not scale > 0:
        raise InvalidElementError("scale must be positive")
    rng = np.random.default_rng(seed)
    n = algebra.n
    if algebra.field == "complex":
        data = (
            rng.uniform(-1.0, 1.0, (n, n)) + 1j * rng.uniform(-1.0, 1.0, (n, n))
        ) / np.sqrt(2.0)
    else:
        data = rng.uniform(-1.0, 1.0, (n, n))
    data = data * scale
    data = np.where(support_mask(algebra), data, 0.0)
    return Element(data, algebra)


def nontrivial_idempotent(algebra: AlgebraDescriptor) -> Element:
    """Canonical idempotent e with e*e = e, e != 0, e != unit.

    Full and upper-triangular families return E11; a direct sum returns the
    unit of its first block.
    """
    if not algebra.has_nontrivial_idempotent:
        raise UnsupportedHypothesisError(
            f"{algebra.family}(n={algebra.n}) has no nontrivial idempotent"
        )
    n = algebra.n
    e = np.zeros((n, n))
    if algebra.family == "direct-sum-of-full-matrix":
        b = algebra.blocks[0]
        e[:b, :b] = np.eye(b)
    else:
        e[0, 0] = 1.0
    return Element(e, algebra)


def annihilator_check(a: Element, algebra: AlgebraDescriptor | None = None) -> float:
    """max over basis units E of ||a E a||.

    A value of 0 (within tolerance) for a nonzero element witnesses a
    semiprimeness violation.
    """
    alg = algebra if algebra is not None else a.algebra
    if alg != a.algebra:
        raise AlgebraMismatchError("element does not belong to the given algebra")
    worst = 0.0
    for e in basis(alg):
        worst = max(worst, norm(a @ e @ a))
    return worst
