"""Edge-count large deviations for W-random graphs.

Rate function of a graphon V relative to the sampling graphon W:

    Upsilon(V, W) = 1/2 int v log(v/w) + (1 - v) log((1 - v)/(1 - w)).

Conditioning on the edge density exceeding w + delta, the minimizer is the
exponential tilt  W* = xi W / (1 - W + xi W)  with xi fixed by the edge
density constraint.  All integrals are exact sums over the constant
regions of the graphon (see :meth:`Graphon.regions`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ValidationError
from .graphon import Constant, Graphon, StepGraphon, project_to_step, refine

EXACT_TOL = 1e-10
RATE_REFINE_CAP = 4096


@dataclass(frozen=True)
class RateValue:
    value: float
    infinite: bool = False

    def __post_init__(self):
        if not self.infinite and (self.value < 0 or math.isnan(self.value)):
            raise ValueError(f"rate must be nonnegative, got {self.value}")

    def as_dict(self):
        return {"value": None if self.infinite else self.value, "infinite": self.infinite}


INFINITE = RateValue(math.inf, True)


@dataclass(frozen=True, eq=False)
class TiltSolution:
    xi: float
    w_star: Graphon
    delta: float
    residual: float
    target: float
    rate: RateValue


@dataclass(frozen=True, eq=False)
class PerturbationExpansion:
    """W*_delta = W + delta * direction + O(delta^2)."""

    first_order: np.ndarray
    denominator: float
    alpha_coefficient: float
    delta: float = 0.0

    @property
    def alpha_leading(self):
        """delta / int ell(W), the leading term of xi - 1."""
        return self.delta * self.alpha_coefficient


@dataclass(frozen=True)
class OrderResult:
    slope: float | None
    exact: bool
    deltas: tuple
    errors: tuple


@dataclass(frozen=True)
class BruteForceResult:
    n: int
    delta: float
    min_edges: int
    probability: float
    ldp_estimate: float
    rate: RateValue
    impossible: bool


def _same_geometry(V, W):
    if type(V) is not type(W):
        return False
    if hasattr(W, "alpha"):
        return V.alpha == W.alpha
    if hasattr(W, "r"):
        return V.r == W.r
    return True


def paired_regions(V, W):
    """Weights and aligned values of V and W on a common partition."""
    if isinstance(V, StepGraphon) or isinstance(W, StepGraphon):
        if isinstance(V, Constant):
            V = project_to_step(V, W.n)
        if isinstance(W, Constant):
            W = project_to_step(W, V.n)
        if not (isinstance(V, StepGraphon) and isinstance(W, StepGraphon)):
            raise ValidationError("cannot pair a step graphon with a non-constant closed form; project it first")
        V, W = refine(V, W, RATE_REFINE_CAP)
        weights, v = V.regions()
        return weights, v, W.values.ravel()
    if isinstance(V, Constant):
        weights, w = W.regions()
        return weights, np.full_like(w, V.p), w
    if isinstance(W, Constant):
        weights, v = V.regions()
        return weights, v, np.full_like(v, W.p)
    if not _same_geometry(V, W):
        raise ValidationError(f"{V.spec()} and {W.spec()} have no common region structure")
    weights, v = V.regions()
    return weights, v, W.regions()[1]


def _xlogy_ratio(x, y):
    """x log(x / y) with 0 log 0 = 0; callers mask y = 0 < x."""
    with np.errstate(divide="ignore", invalid="ignore"):
        out = x * np.log(x / y)
    return np.where(x == 0, 0.0, out)


def rate_upsilon(V, W):
    """Relative-entropy rate of observing V when sampling from W."""
    weights, v, w = paired_regions(V, W)
    live = weights > 0
    weights, v, w = weights[live], v[live], w[live]
    if np.any(((w == 0) & (v > 0)) | ((w == 1) & (v < 1))):
        return INFINITE
    terms = _xlogy_ratio(v, w) + _xlogy_ratio(1.0 - v, 1.0 - w)
    value = 0.5 * math.fsum(weights * terms)
    return RateValue(max(value, 0.0))


def _tilt(values, xi):
    return xi * values / (1.0 - values + xi * values)


def constraint_F(W, xi):
    """int xi W / (1 - W + xi W); equals the edge density at xi = 1."""
    if not xi > 0:
        raise ValidationError(f"xi must be positive, got {xi}")
    weights, values = W.regions()
    return math.fsum(weights * _tilt(values, xi))


def _F_and_slope(weights, values, xi):
    denom = 1.0 - values + xi * values
    F = math.fsum(weights * xi * values / denom)
    inner = (values > 0) & (values < 1)
    lv = values * (1.0 - values)
    dF = math.fsum(weights[inner] * lv[inner] / denom[inner] ** 2)
    return F, dF


def attainable_range(W):
    """(inf, sup) of the constraint over xi in (0, infinity)."""
    weights, values = W.regions()
    return float(weights[values == 1].sum()), float(weights[values > 0].sum())


def ell_integral(W):
    weights, values = W.regions()
    return math.fsum(weights * values * (1.0 - values))


def solve_tilt(W, delta, tol=1e-12, max_bisect=200, max_newton=5):
    """Tilted minimizer for the edge density w + delta.

    xi is bracketed starting from [1/2, 2] with geometric expansion,
    bisected in log xi, then polished by Newton steps that stay inside the
    bracket.  ``delta`` may be negative.
    """
    if ell_integral(W) == 0.0:
        raise ValidationError("constraint is flat: W takes only the values 0 and 1")
    w = W.edge_density()
    target = w + float(delta)
    lo_lim, hi_lim = attainable_range(W)
    if not lo_lim < target < hi_lim:
        raise ValidationError(
            f"w + delta = {target:.12g} is not attainable; delta must lie in "
            f"({lo_lim - w:.12g}, {hi_lim - w:.12g})")
    weights, values = W.regions()
    if delta == 0:
        xi = 1.0
    else:
        lo, hi = 0.5, 2.0
        for _ in range(2100):
            if _F_and_slope(weights, values, lo)[0] <= target:
                break
            lo *= 0.5
        for _ in range(2100):
            if _F_and_slope(weights, values, hi)[0] >= target:
                break
            hi *= 2.0
        xi = math.sqrt(lo * hi)
        for _ in range(max_bisect):
            xi = math.sqrt(lo * hi)
            F, _ = _F_and_slope(weights, values, xi)
            if abs(F - target) <= tol:
                break
            if F < target:
                lo = xi
            else:
                hi = xi
        F, dF = _F_and_slope(weights, values, xi)
        for _ in range(max_newton):
            if F == target or dF <= 0:
                break
            step = xi - (F - target) / dF
            if not lo <= step <= hi:
                break
            F_new, dF_new = _F_and_slope(weights, values, step)
            if abs(F_new - target) >= abs(F - target):
                break
            xi, F, dF = step, F_new, dF_new
        if abs(F - target) > tol:
            raise NumericError(f"tilt constraint not solved: residual {abs(F - target):.3g}")
    residual = abs(constraint_F(W, xi) - target)
    w_star = W.map_values(lambda v: _tilt(v, xi))
    return TiltSolution(xi, w_star, float(delta), residual, target, rate_upsilon(w_star, W))


def first_order_expansion(W, delta=0.0):
    """Direction ell(W) / int ell(W) of the first-order response to delta.

    The direction has the layout of ``W.regions()`` (n x n for step
    graphons).  ``alpha_coefficient`` is d xi / d delta at delta = 0.
    """
    denom = ell_integral(W)
    if denom == 0.0:
        raise ValidationError("int ell(W) = 0: W takes only the values 0 and 1")
    _, values = W.regions()
    direction = values * (1.0 - values) / denom
    if isinstance(W, StepGraphon):
        direction = direction.reshape(W.n, W.n)
    return PerturbationExpansion(direction, denom, 1.0 / denom, float(delta))


def expansion_error(W, delta, expansion=None):
    """max over regions of |W*_delta - W - delta * direction|."""
    expansion = expansion or first_order_expansion(W)
    weights, values = W.regions()
    star = solve_tilt(W, delta).w_star.regions()[1]
    err = np.abs(star - values - delta * expansion.first_order.ravel())
    return float(err[weights > 0].max())


def verify_order(W, deltas):
    """Least-squares slope of log e(delta) against log delta (about 2)."""
    deltas = [float(d) for d in deltas]
    if len(deltas) < 3:
        raise ValidationError("need at least three deltas")
    if any(d <= 0 for d in deltas) or any(a <= b for a, b in zip(deltas, deltas[1:])):
        raise ValidationError("deltas must be positive and strictly descending")
    expansion = first_order_expansion(W)
    errors = [expansion_error(W, d, expansion) for d in deltas]
    if max(errors) <= EXACT_TOL:
        return OrderResult(None, True, tuple(deltas), tuple(errors))
    if min(errors) <= 0:
        raise NumericError("expansion error vanished at some deltas but not others")
    slope = float(np.polyfit(np.log(deltas), np.log(errors), 1)[0])
    return OrderResult(slope, False, tuple(deltas), tuple(errors))


def conditioned_rate(W, delta):
    """Upsilon(W*_delta, W) for the event {edge density >= w + delta}."""
    if delta <= 0:
        return RateValue(0.0)
    w = W.edge_density()
    _, hi_lim = attainable_range(W)
    if w + delta >= hi_lim:
        return INFINITE
    return solve_tilt(W, delta).rate


def _edge_probabilities(W, n):
    P = project_to_step(W, n).values
    i, j = np.triu_indices(n, 1)
    return P[i, j]


def _min_edges(W, n, delta):
    target = W.edge_density() + delta
    return max(0, math.ceil(target * n * n / 2.0 - 1e-9))


def brute_force_ldp(W, n, delta):
    """Exact P(edge density >= w + delta) by enumerating all labeled graphs."""
    n = int(n)
    m = n * (n - 1) // 2
    if n < 2 or m > 15:
        raise ValidationError(f"enumeration needs 2 <= n and n(n-1)/2 <= 15, got n={n}")
    p = _edge_probabilities(W, n)
    k = _min_edges(W, n, delta)
    graphs = np.arange(1 << m, dtype=np.int64)[:, None]
    bits = ((graphs >> np.arange(m, dtype=np.int64)[None, :]) & 1).astype(bool)
    weights = np.where(bits, p[None, :], 1.0 - p[None, :]).prod(axis=1)
    prob = math.fsum(weights[bits.sum(axis=1) >= k])
    impossible = prob == 0.0
    estimate = math.inf if impossible else -2.0 / (n * n) * math.log(prob)
    return BruteForceResult(n, float(delta), k, prob, estimate, conditioned_rate(W, delta), impossible)


def monte_carlo_ldp(W, n, delta, samples, seed):
    """Monte Carlo estimate of the same probability and its standard error."""
    n = int(n)
    p = _edge_probabilities(W, n)
    k = _min_edges(W, n, delta)
    rng = np.random.Generator(np.random.Philox(seed))
    hits = 0
    for start in range(0, samples, 1 << 16):
        size = min(1 << 16, samples - start)
        edges = (rng.random((size, p.size)) < p[None, :]).sum(axis=1)
        hits += int((edges >= k).sum())
    est = hits / samples
    return est, math.sqrt(max(est * (1.0 - est), 0.0) / samples)
