"""Maps under test and control functions.

A map under test is an inner derivation D_a(x) = a x - x a plus a structured
perturbation, optionally post-composed with the odd-part projection
(h(x) - h(-x))/2. Every derivation on a full matrix algebra is inner, so the
inner part is a known ground-truth target for the limit constructions.

Control functions are the nonnegative bounds evaluated on norms of the two
arguments: power sums, product powers, the zero control, and a pair control
parameterized directly by its doubling-contraction constant L.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .algebra import AlgebraDescriptor, Element, norm, norm_stack
from .errors import AlgebraMismatchError, InvalidElementError

PERTURBATION_KINDS = ("none", "constant-offset", "power-radial", "clipped-random")
CONTROL_FAMILIES = ("zero", "power-sum", "product-power", "scaled-pair")


@dataclass(frozen=True)
class PerturbationSpec:
    """Structured perturbation e(x) added to the inner derivation.

    kinds:
      none            e(x) = 0
      constant-offset e(x) = theta_e * direction
      power-radial    e(x) = theta_e * ||x||^rho * direction
      clipped-random  pseudo-random direction drawn deterministically from
                      (seed, x), rescaled so ||e(x)|| <= theta_e * ||x||^rho
    """

    kind: str = "none"
    direction: Element | None = None
    theta_e: float = 0.0
    rho: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in PERTURBATION_KINDS:
            raise InvalidElementError(f"unknown perturbation kind {self.kind!r}")
        if self.theta_e < 0:
            raise InvalidElementError("perturbation amplitude must be nonnegative")
        if self.kind != "none" and self.direction is None and self.kind != "clipped-random":
            raise InvalidElementError(f"{self.kind} perturbation needs a direction")


@dataclass(frozen=True)
class MapUnderTest:
    """h(x) = (a x - x a) + e(x), optionally odd-projected."""

    generator: Element
    perturbation: PerturbationSpec = field(default_factory=PerturbationSpec)
    parity_forced_odd: bool = False

    @property
    def algebra(self) -> AlgebraDescriptor:
        return self.generator.algebra

    def __post_init__(self):
        d = self.perturbation.direction
        if d is not None and d.algebra != self.generator.algebra:
            raise AlgebraMismatchError("perturbation direction lives in another algebra")


def _radial_factors(norms: np.ndarray, rho: float) -> np.ndarray:
    """||x||^rho with the 0^0 = 1 convention; 0^negative raises."""
    out = np.empty_like(norms)
    zero = norms == 0
    if rho == 0:
        out[:] = 1.0
        return out
    if np.any(zero) and rho < 0:
        raise InvalidElementError("power-radial perturbation with rho < 0 at x = 0")
    out[~zero] = norms[~zero] ** rho
    out[zero] = 0.0
    return out


def _clipped_random_direction(spec: PerturbationSpec, x_bytes: bytes, n: int, dtype) -> np.ndarray:
    # Substream derived from (seed, exact bytes of x): deterministic per input.
    tag = spec.seed.to_bytes(8, "little", signed=True) + x_bytes
    digest = hashlib.blake2b(tag, digest_size=8).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "little"))
    if np.dtype(dtype) == np.complex128:
        raw = (rng.uniform(-1, 1, (n, n)) + 1j * rng.uniform(-1, 1, (n, n))) / math.sqrt(2)
    else:
        raw = rng.uniform(-1, 1, (n, n))
    return raw


def evaluate_perturbation_stack(
    spec: PerturbationSpec, xs: np.ndarray, algebra: AlgebraDescriptor
) -> np.ndarray:
    """Perturbation values for a (B, n, n) stack of inputs."""
    B, n = xs.shape[0], algebra.n
    if spec.kind == "none" or spec.theta_e == 0.0:
        return np.zeros_like(xs)
    if spec.kind == "constant-offset":
        return np.broadcast_to(spec.theta_e * spec.direction.data, xs.shape).copy()
    if spec.kind == "power-radial":
        factors = spec.theta_e * _radial_factors(norm_stack(xs, algebra.norm_kind), spec.rho)
        return factors[:, None, None] * spec.direction.data
    # clipped-random
    caps = spec.theta_e * _radial_factors(norm_stack(xs, algebra.norm_kind), spec.rho)
    from .algebra import support_mask

    mask = support_mask(algebra)
    out = np.zeros_like(xs)
    for t in range(B):
        raw = _clipped_random_direction(spec, xs[t].tobytes(), n, xs.dtype)
        raw = np.where(mask, raw, 0.0).astype(xs.dtype)
        raw_norm = norm_stack(raw[None], algebra.norm_kind)[0]
        if raw_norm > caps[t]:
            raw = raw * (caps[t] / raw_norm) if raw_norm > 0 else raw
        out[t] = raw
    return out


def evaluate_map_stack(h: MapUnderTest, xs: np.ndarray, algebra: AlgebraDescriptor) -> np.ndarray:
    """Map values for a (B, n, n) stack of inputs."""
    xs = np.ascontiguousarray(xs, dtype=algebra.dtype)
    inner = kernels.commutator_stack(h.generator.data, xs)
    pert = evaluate_perturbation_stack(h.perturbation, xs, algebra)
    if h.parity_forced_odd:
        # The inner part is odd exactly; project only the perturbation.
        pert_neg = evaluate_perturbation_stack(h.perturbation, np.ascontiguousarray(-xs), algebra)
        pert = (pert - pert_neg) / 2.0
    return inner + pert


def evaluate_map(h: MapUnderTest, x: Element) -> Element:
    """D_a(x) + e(x), odd-projected last when the flag is set."""
    if x.algebra != h.algebra:
        raise AlgebraMismatchError("input element lives in another algebra")
    data = evaluate_map_stack(h, x.data[None], h.algebra)[0]
    return Element(data, h.algebra)


def as_callable(h):
    """Normalize a MapUnderTest or an Element->Element callable to a callable."""
    if isinstance(h, MapUnderTest):
        return lambda x: evaluate_map(h, x)
    if callable(h):
        return h
    raise TypeError(f"cannot interpret {type(h).__name__} as a map")


# ---------------------------------------------------------------------------
# Control functions
# ---------------------------------------------------------------------------

def _pow(t: float, e: float) -> float:
    # 0^0 = 1, 0^negative = +inf; keeps control values defined everywhere.
    if e == 0.0:
        return 1.0
    if t == 0.0:
        return 0.0 if e > 0 else math.inf
    return t ** e


@dataclass(frozen=True)
class ControlFunction:
    """Nonnegative bound on pairs of elements, evaluated through their norms.

    families:
      zero           0
      power-sum      theta * (||x||^p + ||y||^q [+ ||x||^r ||y||^s])
                     (the cross term is present only when r and s are given)
      product-power  theta * ||x||^p ||y||^p
      scaled-pair    theta * (||x||^t + ||y||^t) with t = 1 + log2(L), so the
                     doubling contraction (1/2) phi(2x, 2y) = L phi(x, y) is
                     exact by construction
    """

    family: str = "zero"
    theta: float = 0.0
    p: float = 0.0
    q: float = 0.0
    r: float | None = None
    s: float | None = None
    L: float | None = None

    def __post_init__(self):
        if self.family not in CONTROL_FAMILIES:
            raise InvalidElementError(f"unknown control family {self.family!r}")
        if self.theta < 0:
            raise InvalidElementError("control amplitude theta must be nonnegative")
        if (self.r is None) != (self.s is None):
            raise InvalidElementError("cross-term exponents r and s come as a pair")
        if self.family == "scaled-pair":
            if self.L is None or not 0 < self.L < 1:
                raise InvalidElementError("scaled-pair needs a contraction constant L in (0,1)")

    def value(self, nx: float, ny: float) -> float:
        """Control value from the two argument norms."""
        if self.family == "zero" or self.theta == 0.0:
            return 0.0
        if self.family == "power-sum":
            v = _pow(nx, self.p) + _pow(ny, self.q)
            if self.r is not None:
                v += _pow(nx, self.r) * _pow(ny, self.s)
            return self.theta * v
        if self.family == "product-power":
            return self.theta * _pow(nx, self.p) * _pow(ny, self.p)
        t = 1.0 + math.log2(self.L)
        return self.theta * (_pow(nx, t) + _pow(ny, t))

    def terms(self) -> list[tuple[float, float]]:
        """(x-exponent, y-exponent) of each additive term; used by the
        closed-form window checks for power-type controls."""
        if self.family == "zero" or self.theta == 0.0:
            return []
        if self.family == "power-sum":
            out = [(self.p, 0.0), (0.0, self.q)]
            if self.r is not None:
                out.append((self.r, self.s))
            return out
        if self.family == "product-power":
            return [(self.p, self.p)]
        t = 1.0 + math.log2(self.L)
        return [(t, 0.0), (0.0, t)]


def evaluate_control(phi: ControlFunction, x: Element, y: Element) -> float:
    return phi.value(norm(x), norm(y))


@dataclass(frozen=True)
class ContractiveVerdict:
    passed: bool
    doubling_worst_ratio: float
    pairwise_worst_ratio: float
    witness_index: int


def check_contractive_subadditive(
    phi: ControlFunction,
    L: float,
    samples: list[tuple[Element, Element]],
    slack: float = 1e-12,
) -> ContractiveVerdict:
    """Check the doubling contraction (1/2) phi(2x,2y) <= L phi(x,y) on samples.

    The verdict gates on the doubling form, which is the inequality the
    stability bounds consume; the strict pairwise form
    phi(x+x', y+y') <= L (phi(x,y) + phi(x',y')) fails for every nonzero
    power-type control (take x' = 0), so it is evaluated and reported but
    does not decide the verdict.
    """
    if not 0 < L < 1:
        raise InvalidElementError("contraction constant L must lie in (0, 1)")
    if not samples:
        raise InvalidElementError("need at least one sample pair")
    worst_doubling = 0.0
    witness = 0
    for i, (x, y) in enumerate(samples):
        base = evaluate_control(phi, x, y)
        doubled = 0.5 * evaluate_control(phi, 2.0 * x, 2.0 * y)
        if base == 0.0:
            ratio = 0.0 if doubled == 0.0 else math.inf
        else:
            ratio = doubled / (L * base)
        if ratio > worst_doubling:
            worst_doubling = ratio
            witness = i
    worst_pairwise = 0.0
    for i, (x, y) in enumerate(samples):
        for j, (x2, y2) in enumerate(samples):
            lhs = evaluate_control(phi, x + x2, y + y2)
            rhs = L * (evaluate_control(phi, x, y) + evaluate_control(phi, x2, y2))
            if rhs == 0.0:
                ratio = 0.0 if lhs == 0.0 else math.inf
            else:
                ratio = lhs / rhs
            worst_pairwise = max(worst_pairwise, ratio)
    return ContractiveVerdict(
        passed=worst_doubling <= 1.0 + slack,
        doubling_worst_ratio=worst_doubling,
        pairwise_worst_ratio=worst_pairwise,
        witness_index=witness,
    )
