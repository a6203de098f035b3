"""Independent linear-algebra oracles for the derivation conclusions.

The limit machinery claims a map is (close to) a derivation; these oracles
certify such claims without iterating anything. The least-squares fit
recovers the generator of the nearest inner derivation, and the nullspace
probe measures the dimension of the space of linear maps satisfying a
product identity, which on a full matrix algebra must come out at n^2 - 1
(the inner derivations) for the derivation and triple identities alike.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import AlgebraDescriptor, Element, basis, norm
from .direct import phi_series
from .errors import InvalidElementError, NumericDegeneracyError, UnsupportedHypothesisError
from .maps import ControlFunction, as_callable, evaluate_control


def _vec(m: np.ndarray) -> np.ndarray:
    """Column-stacked vectorization; vec(AXB) = (B^T kron A) vec(X)."""
    return np.asarray(m).flatten(order="F")


def _unvec(v: np.ndarray, n: int) -> np.ndarray:
    return np.asarray(v).reshape((n, n), order="F")


@dataclass(frozen=True)
class FitResult:
    generator: Element
    residual_per_basis: list[float]
    sup_gap: float


def fit_inner_derivation(h, algebra: AlgebraDescriptor) -> FitResult:
    """Least-squares generator a of the inner derivation nearest to h.

    Solves min_a sum_i ||h(E_i) - (a E_i - E_i a)||^2 over the matrix-unit
    basis. The commutator map kills exactly the scalar matrices, so the
    minimum-norm solution is already trace-free; the trace component is
    projected out once more as explicit gauge fixing.
    """
    if algebra.family != "full-matrix":
        raise UnsupportedHypothesisError("inner-derivation fitting needs a full matrix algebra")
    f = as_callable(h)
    n = algebra.n
    eye = np.eye(n, dtype=algebra.dtype)
    units = basis(algebra)
    blocks = []
    rhs = []
    for e in units:
        blocks.append(np.kron(e.data.T, eye) - np.kron(eye, e.data))
        rhs.append(_vec(f(e).data))
    design = np.vstack(blocks)
    sol, _, rank, _ = np.linalg.lstsq(design, np.concatenate(rhs), rcond=None)
    if rank < n * n - 1:
        raise NumericDegeneracyError(
            f"commutator design matrix has rank {rank}, expected {n * n - 1} "
            "(kernel should be the scalar matrices only)"
        )
    a = _unvec(sol, n)
    a = a - (np.trace(a) / n) * eye
    gen = Element(a, algebra)
    residuals = [norm(f(e) - (gen @ e - e @ gen)) for e in units]
    return FitResult(generator=gen, residual_per_basis=residuals, sup_gap=max(residuals))


@dataclass(frozen=True)
class NullspaceResult:
    dimension: int
    singular_value_gap: float
    threshold: float
    smallest_kept: float
    largest_discarded: float
    status: str  # "ok" | "inconclusive"


def _random_unit(rng: np.random.Generator, n: int, complex_field: bool) -> np.ndarray:
    if complex_field:
        m = rng.uniform(-1.0, 1.0, (n, n)) + 1j * rng.uniform(-1.0, 1.0, (n, n))
    else:
        m = rng.uniform(-1.0, 1.0, (n, n))
    return m / np.linalg.norm(m)


def jordan_triple_nullspace_dim(
    algebra: AlgebraDescriptor,
    sample_pairs: int | None = None,
    seed: int = 0,
    tol_rank: float = 1e-8,
    identity: str = "triple",
) -> NullspaceResult:
    """Numeric dimension of {linear L : L satisfies the product identity}.

    identity "triple":     L(xyx) = L(x)yx + xL(y)x + xyL(x)
    identity "derivation": L(xy)  = L(x)y + xL(y)

    Constraint rows are sampled at seeded unit-norm random pairs, enough of
    them to overdetermine the system; the nullspace dimension is read off
    the singular spectrum with a relative threshold, and the gap between the
    smallest kept and largest discarded singular values is reported so
    borderline spectra are visible instead of silently decided.
    """
    if algebra.family != "full-matrix":
        raise UnsupportedHypothesisError("nullspace probe needs a full matrix algebra")
    if algebra.n > 4:
        raise UnsupportedHypothesisError("nullspace probe is sized for n <= 4")
    if identity not in ("triple", "derivation"):
        raise ValueError(f"unknown identity {identity!r}")
    n = algebra.n
    least = 3 * n ** 4
    if sample_pairs is None:
        sample_pairs = least
    if sample_pairs < least:
        raise UnsupportedHypothesisError(f"need at least {least} sample pairs, got {sample_pairs}")
    rng = np.random.default_rng(seed)
    complex_field = algebra.field == "complex"
    eye_n = np.eye(n)
    eye_nn = np.eye(n * n)
    rows = []
    for _ in range(sample_pairs):
        x = _random_unit(rng, n, complex_field)
        y = _random_unit(rng, n, complex_field)
        if identity == "triple":
            block = (
                np.kron(_vec(x @ y @ x)[None, :], eye_nn)
                - np.kron(_vec(x)[None, :], np.kron((y @ x).T, eye_n))
                - np.kron(_vec(y)[None, :], np.kron(x.T, x))
                - np.kron(_vec(x)[None, :], np.kron(eye_n, x @ y))
            )
        else:
            block = (
                np.kron(_vec(x @ y)[None, :], eye_nn)
                - np.kron(_vec(x)[None, :], np.kron(y.T, eye_n))
                - np.kron(_vec(y)[None, :], np.kron(eye_n, x))
            )
        rows.append(block)
    system = np.vstack(rows)
    svals = np.linalg.svd(system, compute_uv=False)
    threshold = float(tol_rank * svals[0])
    kept = svals[svals >= threshold]
    discarded = svals[svals < threshold]
    dimension = n ** 4 - int(kept.size)
    smallest_kept = float(kept[-1]) if kept.size else 0.0
    largest_discarded = float(discarded[0]) if discarded.size else 0.0
    gap = smallest_kept - largest_discarded
    status = "ok" if gap >= 1e3 * threshold else "inconclusive"
    return NullspaceResult(
        dimension=dimension,
        singular_value_gap=gap,
        threshold=threshold,
        smallest_kept=smallest_kept,
        largest_discarded=largest_discarded,
        status=status,
    )


@dataclass(frozen=True)
class GapResult:
    gaps: list[float]
    bounds: list[float]
    all_within: bool


def hyers_ulam_gap(
    h,
    H,
    phi: ControlFunction,
    d,
    samples: list[Element],
    bound_form: str = "series",
    L: float | None = None,
    variant: str = "thm-main",
    slack: float = 1e-9,
    series_tol: float = 1e-10,
) -> GapResult:
    """Pointwise ||h(x) - H(x)|| against the applicable closeness bound.

    bound_form "series": the truncated control series (value plus tail);
    bound_form "four-term": [phi(x/2,0) + phi(-x/2,0) + phi(x/2,-x/2)
    + phi(-x/3,2x/3)] / (2 - 2L). H may be a callable or a list of values
    aligned with `samples`. A divergent series cannot certify anything, so
    it sets all_within to False.
    """
    if bound_form not in ("series", "four-term"):
        raise ValueError(f"unknown bound form {bound_form!r}")
    if bound_form == "four-term" and (L is None or not 0 < L < 1):
        raise InvalidElementError("four-term bound needs a contraction constant L in (0, 1)")
    fh = as_callable(h)
    fH = H if callable(H) else None
    gaps: list[float] = []
    bounds: list[float] = []
    all_within = True
    for i, x in enumerate(samples):
        Hx = fH(x) if fH is not None else H[i]
        gap = norm(fh(x) - Hx)
        if bound_form == "series":
            res = phi_series(phi, d, x, variant=variant, tol=series_tol)
            if res.converged:
                bound = res.value + res.tail_bound
            else:
                bound = math.inf
                all_within = False
        else:
            z = 0.0 * x
            total = (
                evaluate_control(phi, x / 2, z)
                + evaluate_control(phi, -(x / 2), z)
                + evaluate_control(phi, x / 2, -(x / 2))
                + evaluate_control(phi, -(x / 3), (2 * x) / 3)
            )
            bound = total / (2.0 - 2.0 * L)
        gaps.append(gap)
        bounds.append(bound)
        if math.isfinite(bound) and gap > bound * (1.0 + slack):
            all_within = False
    return GapResult(gaps=gaps, bounds=bounds, all_within=all_within)
