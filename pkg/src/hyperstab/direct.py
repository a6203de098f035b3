"""Limit constructions: the scaled-iterate limit H(x) = lim d^-k h(d^k x),
the generic contraction fixed-point iteration it instantiates, truncated
control series with geometric tail bounds, and windowed surrogate checks for
the vanishing-liminf side conditions.

A windowed check can only ever approximate a liminf; for power-type controls
the closed-form exponent test (`analytic_window_check`) decides exactly, and
the pipelines pair the two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import Element, norm
from .errors import InvalidEvaluationError, UnsupportedSchemeError
from .maps import ControlFunction, as_callable

#: consecutive sub-tolerance differences required to declare stagnation;
#: a single small difference in a geometric tail can be coincidental.
STAGNATION_RUN = 3

#: consecutive term ratios >= 1 required to declare series divergence.
DIVERGENCE_RUN = 5


@dataclass(frozen=True)
class IterationScheme:
    """Forward iteration parameters; requires |d| > 1.

    The underlying contraction pair is f(y) = y/d, g(x) = d x with modulus
    1/|d| < 1. Scaling factors with |d| <= 1 would need the reverse
    iteration, which is not supported.
    """

    d: complex = 2.0
    K_max: int = 100
    tol_rel: float = 1e-11
    growth_cap: float = 1e12

    def __post_init__(self):
        if abs(self.d) <= 1.0:
            raise UnsupportedSchemeError(
                f"only |d| > 1 is supported (got d = {self.d!r}); "
                "|d| <= 1 would need the reverse iteration"
            )
        if self.K_max < 1 or self.tol_rel <= 0 or self.growth_cap <= 0:
            raise UnsupportedSchemeError("K_max, tol_rel, growth_cap must be positive")


@dataclass
class ConvergenceReport:
    iterates_kept: list[tuple[int, float]]
    converged: bool
    status: str  # "converged" | "diverged-scale" | "max-iterations"
    k_stop: int
    limit_value: Element
    tail_bound: float


def _scalar_for(algebra, d):
    d = complex(d)
    if d.imag == 0.0:
        return d.real
    if algebra.field != "complex":
        raise UnsupportedSchemeError("complex d needs a complex algebra")
    return d


def _tail_from_diffs(diffs: list[float]) -> float:
    if not diffs or diffs[-1] == 0.0:
        return 0.0
    if len(diffs) < 2 or diffs[-2] == 0.0:
        return math.inf
    r = diffs[-1] / diffs[-2]
    if r >= 1.0:
        return math.inf
    return diffs[-1] * r / (1.0 - r)


def hyers_limit(h, x: Element, scheme: IterationScheme) -> ConvergenceReport:
    """Iterate H_k(x) = d^-k h(d^k x) to stagnation.

    Convergence is declared after STAGNATION_RUN consecutive differences
    below tol_rel * (1 + ||H_k||); a growth-cap breach yields a
    'diverged-scale' report rather than an exception.
    """
    f = as_callable(h)
    d = _scalar_for(x.algebra, scheme.d)
    current = f(x)
    if not np.all(np.isfinite(current.data)):
        raise InvalidEvaluationError("map produced non-finite values at k = 0")
    xk = x
    sk = 1.0 if isinstance(d, float) else complex(1.0)
    kept: list[tuple[int, float]] = []
    diffs: list[float] = []
    run = 0
    run_start = 0
    for k in range(1, scheme.K_max + 1):
        xk = d * xk
        sk = d * sk
        if norm(xk) > scheme.growth_cap:
            return ConvergenceReport(
                iterates_kept=kept, converged=False, status="diverged-scale",
                k_stop=k - 1, limit_value=current, tail_bound=math.inf,
            )
        nxt = f(xk) / sk
        if not np.all(np.isfinite(nxt.data)):
            raise InvalidEvaluationError(f"map produced non-finite values at k = {k}")
        diff = norm(nxt - current)
        kept.append((k, diff))
        diffs.append(diff)
        current = nxt
        if diff <= scheme.tol_rel * (1.0 + norm(nxt)):
            if run == 0:
                run_start = k
            run += 1
            if run >= STAGNATION_RUN:
                return ConvergenceReport(
                    iterates_kept=kept, converged=True, status="converged",
                    k_stop=run_start, limit_value=current,
                    tail_bound=_tail_from_diffs(diffs),
                )
        else:
            run = 0
    return ConvergenceReport(
        iterates_kept=kept, converged=False, status="max-iterations",
        k_stop=scheme.K_max, limit_value=current, tail_bound=_tail_from_diffs(diffs),
    )


# ---------------------------------------------------------------------------
# Generic contraction fixed-point iteration
# ---------------------------------------------------------------------------

@dataclass
class FortiReport:
    limit: object
    phi_value: float
    phi_tail: float
    phi_terms: int
    phi_converged: bool
    fixed_point_residual: float
    converged: bool
    status: str  # "converged" | "max-iterations" | "phi-diverged"
    iterates_kept: list[tuple[int, float]]


def forti_iterate(h, f, g, phi, x, eps: float, *, metric=None, K_max: int = 100,
                  tol: float = 1e-12, phi_tol: float = 1e-12,
                  phi_K_max: int = 400) -> FortiReport:
    """Iterate H_n(x) = (f^n . h . g^n)(x) on an arbitrary metric space.

    h: S -> Y point map, f: Y -> Y contraction with modulus eps, g: S -> S
    scaler, phi: S -> [0, inf) pointwise control. Returns the limit, the
    truncated series Phi(x) = sum eps^n phi(g^n x) with its tail bound, and
    the fixed-point residual dist(f(H(g x)), H(x)).
    """
    if metric is None:
        metric = _default_metric(x)
    # Control series first: a divergent series is a hypothesis violation.
    phi_value = 0.0
    phi_terms = 0
    phi_converged = False
    phi_tail = math.inf
    prev_term = None
    bad_ratio_run = 0
    factor = 1.0
    gx = x
    for n_term in range(phi_K_max):
        term = factor * phi(gx)
        phi_value += term
        phi_terms = n_term + 1
        if prev_term is not None and prev_term > 0:
            ratio = term / prev_term
            if ratio >= 1.0 - 1e-12:
                bad_ratio_run += 1
                if bad_ratio_run >= DIVERGENCE_RUN:
                    return FortiReport(
                        limit=None, phi_value=math.inf, phi_tail=math.inf,
                        phi_terms=phi_terms, phi_converged=False,
                        fixed_point_residual=math.inf, converged=False,
                        status="phi-diverged", iterates_kept=[],
                    )
            else:
                bad_ratio_run = 0
                tail = term * ratio / (1.0 - ratio)
                if tail <= phi_tol:
                    phi_converged = True
                    phi_tail = tail
                    break
        if term == 0.0 and (prev_term is None or prev_term == 0.0):
            phi_converged = True
            phi_tail = 0.0
            break
        prev_term = term
        factor *= eps
        gx = g(gx)

    # Iterates.
    def nth_iterate(n: int):
        p = x
        for _ in range(n):
            p = g(p)
        v = h(p)
        for _ in range(n):
            v = f(v)
        return v

    current = nth_iterate(0)
    kept: list[tuple[int, float]] = []
    run = 0
    converged = False
    status = "max-iterations"
    for n in range(1, K_max + 1):
        nxt = nth_iterate(n)
        diff = metric(nxt, current)
        kept.append((n, diff))
        current = nxt
        if diff <= tol * (1.0 + _size_of(nxt)):
            run += 1
            if run >= STAGNATION_RUN:
                converged = True
                status = "converged"
                break
        else:
            run = 0
    residual = metric(f(_limit_at_shifted_start(h, f, g, x, len(kept))), current)
    return FortiReport(
        limit=current, phi_value=phi_value, phi_tail=phi_tail, phi_terms=phi_terms,
        phi_converged=phi_converged, fixed_point_residual=residual,
        converged=converged, status=status, iterates_kept=kept,
    )


def _default_metric(x):
    if isinstance(x, Element):
        return lambda u, v: norm(u - v)
    return lambda u, v: abs(u - v)


def _size_of(v) -> float:
    if isinstance(v, Element):
        return norm(v)
    try:
        return abs(v)
    except TypeError:
        return 0.0


def _limit_at_shifted_start(h, f, g, x, n):
    """The fixed-point residual compares f(H(g x)) with H(x); H(g x) is the
    same iteration started at g(x), truncated at the recorded depth."""
    p = g(x)
    for _ in range(n):
        p = g(p)
    v = h(p)
    for _ in range(n):
        v = f(v)
    return v


# ---------------------------------------------------------------------------
# Control series
# ---------------------------------------------------------------------------

@dataclass
class PhiSeriesResult:
    value: float
    tail_bound: float
    terms_used: int
    converged: bool
    status: str  # "converged" | "diverged" | "max-terms"


def phi_series(phi: ControlFunction, d, x: Element, variant: str = "thm-main",
               tol: float = 1e-10, K_max: int = 2000) -> PhiSeriesResult:
    """Truncated control series with geometric tail bound.

    variant "thm-main": sum_k |d|^-(k+1) phi(d^k x, d^k x)
    variant "sec3":     sum_k |d|^-k     phi(0,     d^k x)

    Norm scaling is exact (||d^k x|| = |d|^k ||x||), so terms are evaluated
    on scalars without forming the scaled matrices. Divergence is declared
    after DIVERGENCE_RUN consecutive term ratios >= 1.
    """
    if variant not in ("thm-main", "sec3"):
        raise ValueError(f"unknown series variant {variant!r}")
    ad = abs(complex(d))
    if ad <= 1.0:
        raise UnsupportedSchemeError("series variants require |d| > 1")
    nx = norm(x)
    value = 0.0
    prev = None
    bad_run = 0
    for k in range(K_max):
        scale = ad ** k
        if not math.isfinite(scale):
            return PhiSeriesResult(value, math.inf, k, False, "diverged")
        if variant == "thm-main":
            term = phi.value(scale * nx, scale * nx) / (ad ** (k + 1))
        else:
            term = phi.value(0.0, scale * nx) / scale
        if not math.isfinite(term):
            return PhiSeriesResult(value, math.inf, k + 1, False, "diverged")
        value += term
        if term == 0.0:
            return PhiSeriesResult(value, 0.0, k + 1, True, "converged")
        if prev is not None and prev > 0:
            ratio = term / prev
            if ratio >= 1.0 - 1e-12:
                bad_run += 1
                if bad_run >= DIVERGENCE_RUN:
                    return PhiSeriesResult(value, math.inf, k + 1, False, "diverged")
            else:
                bad_run = 0
                tail = term * ratio / (1.0 - ratio)
                if tail <= tol:
                    return PhiSeriesResult(value, tail, k + 1, True, "converged")
        prev = term
    return PhiSeriesResult(value, math.inf, K_max, False, "max-terms")


# ---------------------------------------------------------------------------
# Vanishing-liminf checks
# ---------------------------------------------------------------------------

@dataclass
class WindowVerdict:
    passed: bool
    min_tail: float
    log_slope: float
    values: list[float]


def liminf_window_check(term, d, w: int, K: int = 40, tol: float = 1e-9) -> WindowVerdict:
    """Windowed surrogate for liminf_k |d|^-wk term(k) = 0.

    term(k) supplies the control value at step k. Passes when the minimum
    over the trailing half-window is <= tol and the best-fit slope of
    log(t_k) is nonincreasing. This is a surrogate, not a decision
    procedure; pair it with `analytic_window_check` for power controls.
    """
    if w not in (1, 2, 3):
        raise ValueError("scaling exponent w must be 1, 2 or 3")
    ad = abs(complex(d))
    values = []
    for k in range(K + 1):
        t_k = (ad ** (-w * k)) * float(term(k))
        values.append(t_k)
    tail = values[-(max(1, (K + 1) // 2)):]
    min_tail = min(tail)
    positive = [(k, v) for k, v in enumerate(values) if v > 0]
    if len(positive) >= 2:
        ks = np.array([k for k, _ in positive], dtype=float)
        logs = np.log([v for _, v in positive])
        slope = float(np.polyfit(ks, logs, 1)[0])
    else:
        slope = -math.inf
    passed = min_tail <= tol and slope <= 1e-6
    return WindowVerdict(passed=passed, min_tail=min_tail, log_slope=slope, values=values)


@dataclass
class AnalyticWindowVerdict:
    passed: bool
    worst_exponent: float
    decisive: bool  # False when the control is not a recognized power family


def analytic_window_check(phi: ControlFunction, w: int, nx: float, ny: float,
                          scale_x: bool, scale_y: bool) -> AnalyticWindowVerdict:
    """Exact exponent test for liminf_k |d|^-wk phi(d^k x[, d^k y]) = 0.

    Each additive term theta ||x||^ex ||y||^ey contributes growth exponent
    ex*[x scaled] + ey*[y scaled] - w; the liminf vanishes iff every term
    with a nonzero coefficient at (nx, ny) has negative growth exponent.
    Independent of |d| > 1.
    """
    from .maps import _pow

    worst = -math.inf
    for ex, ey in phi.terms():
        coeff = phi.theta * _pow(nx, ex) * _pow(ny, ey)
        if coeff == 0.0:
            continue
        growth = (ex if scale_x else 0.0) + (ey if scale_y else 0.0) - w
        worst = max(worst, growth)
    if worst == -math.inf:
        return AnalyticWindowVerdict(passed=True, worst_exponent=-math.inf, decisive=True)
    return AnalyticWindowVerdict(passed=worst < 0.0, worst_exponent=worst, decisive=True)
