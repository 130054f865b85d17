"""W-random graphs: Bernoulli edges with the cell averages of W."""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .graphon import StepGraphon, project_to_step
from .rng import uniform_pairs


@dataclass(frozen=True)
class SampleConfig:
    seed: int
    n: int

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValidationError(f"vertex count must be positive, got {self.n}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError(f"seed must fit in 64 unsigned bits, got {self.seed}")


@dataclass(frozen=True, eq=False)
class AdjacencyMatrix:
    bits: np.ndarray

    def __post_init__(self):
        b = np.array(self.bits, dtype=np.uint8)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ValidationError("adjacency must be square")
        if np.any(b > 1):
            raise ValidationError("adjacency entries must be 0 or 1")
        if not np.array_equal(b, b.T):
            raise ValidationError("adjacency must be symmetric")
        if np.any(np.diag(b)):
            raise ValidationError("adjacency must have a zero diagonal")
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @property
    def n(self):
        return self.bits.shape[0]

    @property
    def edge_count(self):
        return int(np.triu(self.bits, 1).sum())

    def __eq__(self, other):
        return isinstance(other, AdjacencyMatrix) and np.array_equal(self.bits, other.bits)

    def to_csv(self):
        return "".join(",".join(str(int(v)) for v in row) + "\n" for row in self.bits)

    def to_edge_list(self):
        i, j = np.nonzero(np.triu(self.bits, 1))
        return "".join(f"{a + 1},{b + 1}\n" for a, b in zip(i, j))

    @classmethod
    def from_csv(cls, text):
        rows = [line.split(",") for line in text.splitlines() if line.strip()]
        try:
            return cls(np.array([[int(v) for v in row] for row in rows]))
        except ValueError as exc:
            raise ValidationError(f"malformed adjacency CSV: {exc}") from exc

    @classmethod
    def from_edge_list(cls, text, n):
        bits = np.zeros((n, n), dtype=np.uint8)
        for line in text.splitlines():
            if not line.strip():
                continue
            a, b = (int(v) - 1 for v in line.split(","))
            if not 0 <= a < b < n:
                raise ValidationError(f"edge '{line}' is not 1-based with i < j <= {n}")
            bits[a, b] = bits[b, a] = 1
        return cls(bits)


def edge_probabilities(W, n):
    """Matrix of w^n_ij, the cell averages of W on the n-grid."""
    return project_to_step(W, n).values


def sample(W, cfg):
    """Draw a W-random graph.

    Edge (i, j), i < j, is present iff ``u(seed, i, j) < w^n_ij`` where ``u``
    is the counter-based uniform of :mod:`graphon_ldp.rng` with 1-based
    counters.  The output depends only on ``(W, seed, n)``.
    """
    n = int(cfg.n)
    probs = edge_probabilities(W, n)
    i, j = np.triu_indices(n, 1)
    u = uniform_pairs(cfg.seed, i + 1, j + 1)
    bits = np.zeros((n, n), dtype=np.uint8)
    hit = u < probs[i, j]
    bits[i[hit], j[hit]] = 1
    bits[j[hit], i[hit]] = 1
    return AdjacencyMatrix(bits)


def lift(A):
    """Step graphon with the adjacency bits as block values."""
    return StepGraphon(A.bits.astype(float))
