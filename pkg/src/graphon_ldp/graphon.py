"""Graphons: closed-form families, step graphons and block permutations.

Every graphon exposes its *regions*: a partition of the unit square into
pieces on which it is constant, reported as ``(weights, values)``.  The
integral functionals used elsewhere (edge density, the tilt constraint,
relative entropy) are exact sums over regions.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

SYMMETRY_TOL = 1e-12
QUADRATURE_SUBSAMPLES = 4


def _check_unit(name, value):
    value = float(value)
    if not 0.0 <= value <= 1.0 or math.isnan(value):
        raise ValidationError(f"{name} must lie in [0, 1], got {value}")
    return value


class Graphon:
    """Base class.  Subclasses are immutable dataclasses."""

    def evaluate(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if np.any((x < 0) | (x > 1) | (y < 0) | (y > 1)) or np.any(np.isnan(x) | np.isnan(y)):
            raise ValidationError("coordinates must lie in [0, 1]")
        out = self._evaluate(x, y)
        return float(out) if out.ndim == 0 else out

    def _evaluate(self, x, y):
        raise NotImplementedError

    def regions(self):
        """Return ``(weights, values)`` of the constant pieces."""
        raise NotImplementedError

    def edge_density(self):
        weights, values = self.regions()
        return float(np.dot(weights, values))

    def map_values(self, fn):
        """Apply ``fn`` pointwise, staying in the same family."""
        raise NotImplementedError

    def spec(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(Graphon):
    p: float

    def __post_init__(self):
        object.__setattr__(self, "p", _check_unit("p", self.p))

    def _evaluate(self, x, y):
        return np.full(np.broadcast(x, y).shape, self.p)

    def regions(self):
        return np.array([1.0]), np.array([self.p])

    def map_values(self, fn):
        return Constant(float(fn(np.float64(self.p))))

    def spec(self):
        return f"constant:p={self.p!r}"


@dataclass(frozen=True)
class Bipartite(Graphon):
    """``p`` on Q and its transpose, Q = [0, alpha] x [alpha, 1]; zero elsewhere."""

    alpha: float
    p: float

    def __post_init__(self):
        alpha = float(self.alpha)
        if not 0.0 < alpha < 0.5:
            raise ValidationError(f"alpha must lie in (0, 1/2), got {alpha}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "p", _check_unit("p", self.p))

    def _evaluate(self, x, y):
        a = self.alpha
        inside = ((x <= a) & (y >= a)) | ((y <= a) & (x >= a))
        return np.where(inside, self.p, 0.0)

    def regions(self):
        support = 2.0 * self.alpha * (1.0 - self.alpha)
        return np.array([support, 1.0 - support]), np.array([self.p, 0.0])

    def map_values(self, fn):
        if float(fn(np.float64(0.0))) != 0.0:
            raise ValidationError("map must fix 0 to keep the bipartite form")
        return Bipartite(self.alpha, float(fn(np.float64(self.p))))

    def spec(self):
        return f"bipartite:alpha={self.alpha!r},p={self.p!r}"


@dataclass(frozen=True)
class SmallWorld(Graphon):
    """Circulant kernel: ``q`` within circle distance ``r`` of the diagonal, ``p`` outside."""

    q: float
    p: float
    r: float

    def __post_init__(self):
        object.__setattr__(self, "q", _check_unit("q", self.q))
        object.__setattr__(self, "p", _check_unit("p", self.p))
        r = float(self.r)
        if not 0.0 < r <= 0.5:
            raise ValidationError(f"r must lie in (0, 0.5], got {r}")
        object.__setattr__(self, "r", r)

    def _evaluate(self, x, y):
        d = np.abs(x - y)
        d = np.minimum(d, 1.0 - d)
        return np.where(d <= self.r, self.q, self.p)

    def regions(self):
        return np.array([2.0 * self.r, 1.0 - 2.0 * self.r]), np.array([self.q, self.p])

    def map_values(self, fn):
        return SmallWorld(float(fn(np.float64(self.q))), float(fn(np.float64(self.p))), self.r)

    def spec(self):
        return f"smallworld:q={self.q!r},p={self.p!r},r={self.r!r}"


@dataclass(frozen=True, eq=False)
class StepGraphon(Graphon):
    """Graphon constant on the cells of a uniform n x n grid."""

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] < 1:
            raise ValidationError(f"step values must be a non-empty square matrix, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("step values must be finite")
        if np.max(np.abs(v - v.T)) > SYMMETRY_TOL:
            raise ValidationError("step values must be symmetric")
        if v.min() < 0.0 or v.max() > 1.0:
            raise ValidationError("step values must lie in [0, 1]")
        v = 0.5 * (v + v.T)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self):
        return self.values.shape[0]

    def __eq__(self, other):
        return isinstance(other, StepGraphon) and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())

    def __repr__(self):
        return f"StepGraphon(n={self.n})"

    def _evaluate(self, x, y):
        n = self.n
        i = np.minimum((x * n).astype(int), n - 1)
        j = np.minimum((y * n).astype(int), n - 1)
        return self.values[i, j]

    def regions(self):
        n = self.n
        return np.full(n * n, 1.0 / (n * n)), self.values.ravel()

    def edge_density(self):
        return float(self.values.mean())

    def map_values(self, fn):
        return StepGraphon(fn(self.values))

    def spec(self):
        return f"step:n={self.n}"

    def to_json(self):
        return json.dumps({"n": self.n, "values": [float(v) for v in self.values.ravel()]})

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        try:
            n = int(data["n"])
            values = np.asarray(data["values"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed step graphon JSON: {exc}") from exc
        if values.size != n * n:
            raise ValidationError(f"expected {n * n} values for n={n}, got {values.size}")
        return cls(values.reshape(n, n))


class BlockPermutation:
    """A bijection of the block indices, stored 0-based.

    ``sigma[i]`` is the image of block ``i``.
    """

    def __init__(self, sigma):
        sigma = np.array(sigma, dtype=int).ravel()
        if sigma.size == 0 or not np.array_equal(np.sort(sigma), np.arange(sigma.size)):
            raise ValidationError(f"not a permutation: {sigma.tolist()}")
        sigma.setflags(write=False)
        self.sigma = sigma

    @classmethod
    def identity(cls, n):
        return cls(np.arange(n))

    @property
    def n(self):
        return self.sigma.size

    def inverse(self):
        inv = np.empty_like(self.sigma)
        inv[self.sigma] = np.arange(self.n)
        return BlockPermutation(inv)

    def compose(self, other):
        """``(self o other)(i) = self(other(i))``."""
        return BlockPermutation(self.sigma[other.sigma])

    def matrix(self):
        """Permutation matrix P with ``(P x)[i] = x[sigma(i)]``."""
        m = np.zeros((self.n, self.n))
        m[np.arange(self.n), self.sigma] = 1.0
        return m

    def cycles(self):
        """Cycle notation, 1-based, fixed points omitted, e.g. ``(1 3 2)(4 5)``."""
        seen = np.zeros(self.n, dtype=bool)
        parts = []
        for start in range(self.n):
            if seen[start] or self.sigma[start] == start:
                seen[start] = True
                continue
            cycle = []
            i = start
            while not seen[i]:
                seen[i] = True
                cycle.append(str(i + 1))
                i = self.sigma[i]
            parts.append("(" + " ".join(cycle) + ")")
        return "".join(parts) or "()"

    def __eq__(self, other):
        return isinstance(other, BlockPermutation) and np.array_equal(self.sigma, other.sigma)

    def __hash__(self):
        return hash(self.sigma.tobytes())

    def __repr__(self):
        return f"BlockPermutation({self.cycles()}, n={self.n})"


def evaluate(W, x, y):
    return W.evaluate(x, y)


def edge_density(W):
    """Integral of W over the unit square."""
    return W.edge_density()


def ell(W):
    """Pointwise W(1 - W); stays in the family of ``W``."""
    return W.map_values(lambda v: v * (1.0 - v))


def _overlap_weights(m, n):
    """Row-stochastic matrix averaging an n-block vector onto m cells.

    Integer arithmetic in units of 1/(m n) keeps aligned cases exact.
    """
    k = np.arange(m)[:, None]
    i = np.arange(n)[None, :]
    lo = np.maximum(k * n, i * m)
    hi = np.minimum((k + 1) * n, (i + 1) * m)
    return np.clip(hi - lo, 0, None) / float(n)


def _midpoint_average(W, n, s, chunk=64):
    N = n * s
    coords = (np.arange(N) + 0.5) / N
    out = np.empty((n, n))
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        rows = np.arange(start * s, stop * s)
        if isinstance(W, SmallWorld):
            # integer offsets so sub-points on the band edge are classified
            # the same way on every platform
            d = np.abs(rows[:, None] - np.arange(N)[None, :])
            d = np.minimum(d, N - d)
            vals = np.where(d <= W.r * N, W.q, W.p)
        else:
            vals = W._evaluate(coords[rows][:, None], coords[None, :])
        out[start:stop] = vals.reshape(stop - start, s, n, s).mean(axis=(1, 3))
    return out


def project_to_step(W, n):
    """Cell averages of ``W`` on the uniform n x n grid."""
    n = int(n)
    if n < 1:
        raise ValidationError(f"block count must be positive, got {n}")
    if isinstance(W, Constant):
        return StepGraphon(np.full((n, n), W.p))
    if isinstance(W, StepGraphon):
        if W.n == n:
            return W
        if n % W.n == 0:
            idx = np.arange(n) * W.n // n
            return StepGraphon(W.values[np.ix_(idx, idx)])
        R = _overlap_weights(n, W.n)
        return StepGraphon(np.clip(R @ W.values @ R.T, 0.0, 1.0))
    return StepGraphon(np.clip(_midpoint_average(W, n, QUADRATURE_SUBSAMPLES), 0.0, 1.0))


def refine(A, B, cap=240):
    """Lift two step graphons to a common block count lcm(n_A, n_B)."""
    m = math.lcm(A.n, B.n)
    if m > cap:
        raise ValidationError(f"common refinement {m} exceeds cap {cap}")
    return project_to_step(A, m), project_to_step(B, m)


def pullback(W, sigma):
    """``result[i, j] = W[sigma(i), sigma(j)]``."""
    if not isinstance(sigma, BlockPermutation):
        sigma = BlockPermutation(sigma)
    if sigma.n != W.n:
        raise ValidationError(f"permutation of size {sigma.n} does not act on {W.n} blocks")
    s = sigma.sigma
    return StepGraphon(W.values[np.ix_(s, s)])


_FAMILIES = {
    "constant": (Constant, ("p",)),
    "bipartite": (Bipartite, ("alpha", "p")),
    "smallworld": (SmallWorld, ("q", "p", "r")),
}


def parse_graphon(text):
    """Parse ``family:key=value,...`` or load a step graphon JSON file."""
    text = text.strip()
    if os.path.isfile(text):
        with open(text) as fh:
            return StepGraphon.from_json(fh.read())
    family, _, params = text.partition(":")
    if family.lower() not in _FAMILIES:
        raise ValidationError(f"unknown graphon '{text}'; expected one of {sorted(_FAMILIES)} or a JSON file")
    cls, names = _FAMILIES[family.lower()]
    kwargs = {}
    for item in filter(None, params.split(",")):
        key, eq, value = item.partition("=")
        if not eq or key.strip() not in names:
            raise ValidationError(f"bad parameter '{item}' for {family}; expected {names}")
        try:
            kwargs[key.strip()] = float(value)
        except ValueError as exc:
            raise ValidationError(f"bad number in '{item}'") from exc
    missing = set(names) - set(kwargs)
    if missing:
        raise ValidationError(f"{family} is missing parameters {sorted(missing)}")
    return cls(**kwargs)


def as_step(W, n=None):
    """Step representation; closed forms need an explicit ``n``."""
    if isinstance(W, StepGraphon) and (n is None or n == W.n):
        return W
    if n is None:
        raise ValidationError(f"{W.spec()} needs a block count to be discretized")
    return project_to_step(W, n)
