"""Cut norm of step kernels and cut distance over block permutations.

For an n x n step kernel D the cut norm is

    max over f, g in {-1, +1}^n of |f^T D g| / n^2,

since the bilinear objective attains its supremum over [-1, 1]-valued test
functions at extreme points.  Given f the best g is sign(D^T f), so the
exact routine only enumerates f (with f_1 = +1, by the symmetry f, g -> -f, -g).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .graphon import BlockPermutation, StepGraphon, refine

EXACT_MAX_N = 25
EXACT_DISTANCE_MAX_N = 8
_CHUNK = 1 << 15


@dataclass(frozen=True, eq=False)
class CutNormCertificate:
    value: float
    f_signs: np.ndarray
    g_signs: np.ndarray


@dataclass(frozen=True, eq=False)
class CutDistanceResult:
    value: float
    sigma: BlockPermutation
    exact: bool
    certificate: CutNormCertificate | None = None


def _sign(x):
    """sign with sign(0) = +1."""
    return np.where(x >= 0, 1.0, -1.0)


def _as_matrix(D):
    if isinstance(D, StepGraphon):
        D = D.values
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1] or D.shape[0] < 1:
        raise ValidationError(f"expected a square matrix, got shape {D.shape}")
    if not np.all(np.isfinite(D)):
        raise ValidationError("kernel entries must be finite")
    return D


def certificate_value(D, f, g):
    n = D.shape[0]
    return abs(float(f @ D @ g)) / (n * n)


def _canonical(D, f, g):
    # representative with f_1 = +1
    if f[0] < 0:
        f, g = -f, -g
    return CutNormCertificate(certificate_value(D, f, g), f, g)


def _sign_patterns(n, start, stop):
    """Rows of {-1, +1}^n with f_1 = +1; bit k of the index flips f_{k+2}."""
    idx = np.arange(start, stop, dtype=np.int64)[:, None]
    bits = (idx >> np.arange(n - 1, dtype=np.int64)[None, :]) & 1
    F = np.ones((stop - start, n))
    F[:, 1:] = 1.0 - 2.0 * bits
    return F


def cut_norm_exact(D):
    """Exact cut norm by enumeration of 2^(n-1) sign vectors (n <= 25)."""
    D = _as_matrix(D)
    n = D.shape[0]
    if n > EXACT_MAX_N:
        raise ValidationError(f"exact cut norm is limited to n <= {EXACT_MAX_N} (got {n}); use cut_norm_heuristic")
    total = 1 << (n - 1)
    best_val, best_idx = -1.0, 0
    for start in range(0, total, _CHUNK):
        stop = min(total, start + _CHUNK)
        F = _sign_patterns(n, start, stop)
        vals = np.abs(F @ D).sum(axis=1)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best_idx = float(vals[k]), start + k
    f = _sign_patterns(n, best_idx, best_idx + 1)[0]
    g = _sign(D.T @ f)
    return _canonical(D, f, g)


def _alternate(D, F, max_iter=200):
    """Alternating sign updates for every column of F until all are fixed points."""
    G = _sign(D.T @ F)
    vals = np.einsum("ij,ij->j", F, D @ G)
    for _ in range(max_iter):
        F_new = _sign(D @ G)
        G_new = _sign(D.T @ F_new)
        new_vals = np.einsum("ij,ij->j", F_new, D @ G_new)
        improved = new_vals > vals + 1e-15 * max(1.0, float(np.abs(vals).max()))
        if not improved.any():
            break
        F[:, improved] = F_new[:, improved]
        G[:, improved] = G_new[:, improved]
        vals = np.where(improved, new_vals, vals)
    return F, G, vals


def cut_norm_heuristic(D, restarts=32, seed=0):
    """Lower bound on the cut norm by alternating maximization.

    Starts from the all-ones vector plus ``restarts`` random sign vectors
    drawn from a Philox stream keyed by ``seed``.
    """
    D = _as_matrix(D)
    if int(restarts) < 1:
        raise ValidationError("restarts must be at least 1")
    n = D.shape[0]
    rng = np.random.Generator(np.random.Philox(seed))
    F = np.ones((n, int(restarts) + 1))
    F[:, 1:] = rng.choice([-1.0, 1.0], size=(n, int(restarts)))
    F, G, vals = _alternate(D, F)
    best = int(np.argmax(vals))
    return _canonical(D, F[:, best].copy(), G[:, best].copy())


def cut_norm(D, mode="exact", restarts=32, seed=0):
    if mode == "exact":
        return cut_norm_exact(D)
    if mode == "heuristic":
        return cut_norm_heuristic(D, restarts=restarts, seed=seed)
    raise ValidationError(f"unknown mode '{mode}'")


def difference(A, B, cap=240):
    """A - B on a common refinement."""
    A, B = refine(A, B, cap)
    return A.values - B.values


def _exact_distance(A, B):
    n = A.shape[0]
    total = 1 << (n - 1)
    F = _sign_patterns(n, 0, total).T
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    best = np.empty(len(perms))
    chunk = max(1, 4096 // max(1, total // 16))
    for start in range(0, len(perms), chunk):
        P = perms[start:start + chunk]
        Bp = B[P[:, :, None], P[:, None, :]]
        Dp = A[None] - Bp
        best[start:start + chunk] = np.abs(Dp @ F).sum(axis=1).max(axis=1)
    # first permutation in lexicographic order among numerical ties
    lo = best.min()
    k = int(np.flatnonzero(best <= lo + 1e-12 * max(1.0, lo))[0])
    sigma = BlockPermutation(perms[k])
    cert = cut_norm_exact(A - B[np.ix_(perms[k], perms[k])])
    return CutDistanceResult(cert.value, sigma, True, cert)


def _heuristic_distance(A, B, restarts, seed):
    n = A.shape[0]

    def score(s):
        return cut_norm_heuristic(A - B[np.ix_(s, s)], restarts=restarts, seed=seed).value

    order_a = np.argsort(A.sum(axis=1), kind="stable")
    order_b = np.argsort(B.sum(axis=1), kind="stable")
    s = np.empty(n, dtype=int)
    s[order_a] = order_b
    current = score(s)
    improved = True
    while improved:
        improved = False
        for i, j in itertools.combinations(range(n), 2):
            t = s.copy()
            t[i], t[j] = t[j], t[i]
            val = score(t)
            if val < current - 1e-15:
                s, current, improved = t, val, True
    cert = cut_norm_heuristic(A - B[np.ix_(s, s)], restarts=restarts, seed=seed)
    return CutDistanceResult(cert.value, BlockPermutation(s), False, cert)


def cut_distance(A, B, mode="exact", restarts=32, seed=0, cap=240):
    """min over block permutations sigma of ||A - B^sigma||_cut.

    Both graphons are refined to lcm of their block counts first.  The
    result is exact within the block-permutation class in ``exact`` mode and
    an upper bound on it otherwise.
    """
    A, B = refine(A, B, cap)
    if mode == "exact":
        if A.n > EXACT_DISTANCE_MAX_N:
            raise ValidationError(f"exact cut distance is limited to {EXACT_DISTANCE_MAX_N} blocks (got {A.n})")
        return _exact_distance(A.values, B.values)
    if mode == "heuristic":
        return _heuristic_distance(A.values, B.values, restarts, seed)
    raise ValidationError(f"unknown mode '{mode}'")
