"""Kernel and Laplacian spectra of step graphons, spectral measures and
interval projections.

A step graphon with n blocks acts on block-constant functions as the
matrix ``values / n``; every other function is in its kernel.  The finite
model below keeps only the block-constant part, so the (infinite) zero
eigenspace of the operator shows up as the zero atom of the n x n matrix.

Eigenvalues are indexed two-sidedly: ``lambda_1 >= lambda_2 >= ... >= 0``
and ``lambda_{-1} <= lambda_{-2} <= ... <= 0``, zero-padded on both sides,
repeated eigenvalues listed separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ValidationError
from .graphon import Bipartite, Constant, SmallWorld, StepGraphon

ORTHO_TOL = 1e-8


def grouping_tolerance(values):
    values = np.asarray(values, dtype=float)
    scale = float(np.abs(values).max()) if values.size else 0.0
    return max(1e-8, 1e-6 * scale)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Two-sided ordered spectrum.

    ``vectors`` columns follow ``values()``: positives (descending), the
    zero group, then negatives (most negative first).  Closed-form spectra
    carry no vectors and ``zero_multiplicity=None`` (infinite).
    """

    positive: np.ndarray
    negative: np.ndarray
    zero_values: np.ndarray
    vectors: np.ndarray | None = None
    tol: float = 1e-8

    @property
    def zero_multiplicity(self):
        return None if self.vectors is None and self.zero_values.size == 0 else int(self.zero_values.size)

    @property
    def dim(self):
        return None if self.vectors is None else self.vectors.shape[0]

    def values(self):
        return np.concatenate([self.positive, self.zero_values, self.negative])

    def eigenvalue(self, j):
        """lambda_j for j != 0, zero beyond the listed eigenvalues."""
        if j == 0:
            raise ValidationError("index 0 is not used; zero is lambda_0 only as an atom")
        side = self.positive if j > 0 else self.negative
        k = abs(j) - 1
        return float(side[k]) if k < side.size else 0.0


@dataclass(frozen=True, eq=False)
class Atom:
    eigenvalue: float
    multiplicity: int
    basis: np.ndarray


@dataclass(frozen=True, eq=False)
class SpectralMeasure:
    atoms: tuple
    dim: int
    tol: float

    def eigenvalues(self):
        return np.array([a.eigenvalue for a in self.atoms])


@dataclass(frozen=True, eq=False)
class IntervalProjection:
    a: float
    b: float
    matrix: np.ndarray
    rank: int


def _canonical_order(M):
    """Block order depending only on the permutation class of ``M``.

    Sort key: diagonal entry, then the sorted row.  Relabelled copies of the
    same matrix with distinct keys map to bit-identical canonical matrices.
    """
    rows = np.sort(M, axis=1)
    keys = [rows[:, k] for k in range(rows.shape[1] - 1, -1, -1)]
    keys.append(np.diag(M))
    return np.lexsort(keys)


def _fix_signs(V):
    for k in range(V.shape[1]):
        nz = np.flatnonzero(np.abs(V[:, k]) > 1e-10)
        if nz.size and V[nz[0], k] < 0:
            V[:, k] = -V[:, k]
    return V


def decompose_matrix(M):
    """Full eigendecomposition of a symmetric matrix in the two-sided order."""
    M = np.asarray(M, dtype=float)
    order = _canonical_order(M)
    try:
        w, Vc = np.linalg.eigh(M[np.ix_(order, order)])
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"symmetric eigensolver failed: {exc}") from exc
    V = np.empty_like(Vc)
    V[order] = Vc
    tol = grouping_tolerance(w)
    pos = np.flatnonzero(w > tol)[::-1]
    zero = np.flatnonzero(np.abs(w) <= tol)[::-1]
    neg = np.flatnonzero(w < -tol)
    cols = np.concatenate([pos, zero, neg])
    return SpectralDecomposition(
        positive=w[pos], negative=w[neg], zero_values=w[zero],
        vectors=_fix_signs(V[:, cols]), tol=tol,
    )


def decompose_kernel(W):
    """Spectrum of the integral operator of a step graphon (matrix values / n)."""
    if not isinstance(W, StepGraphon):
        raise ValidationError("decompose_kernel needs a StepGraphon; project closed forms first")
    return decompose_matrix(W.values / W.n)


def laplacian_matrix(W):
    return W.values / W.n - np.diag(W.values.mean(axis=1))


def decompose_laplacian(W):
    """Spectrum of (L f)(x) = int W(x,y) (f(y) - f(x)) dy on block functions."""
    if not isinstance(W, StepGraphon):
        raise ValidationError("decompose_laplacian needs a StepGraphon; project closed forms first")
    return decompose_matrix(laplacian_matrix(W))


def smallworld_modes(W, k_max):
    """(k, mu_k) for k = 0..k_max of the circulant kernel."""
    out = [(0, 2 * W.r * W.q + (1 - 2 * W.r) * W.p)]
    for k in range(1, k_max + 1):
        out.append((k, (W.q - W.p) / (math.pi * k) * math.sin(2 * math.pi * k * W.r)))
    return out


def _from_list(values, infinite_zero=True):
    values = np.asarray(values, dtype=float)
    tol = grouping_tolerance(values)
    pos = np.sort(values[values > tol])[::-1]
    neg = np.sort(values[values < -tol])
    zero = values[np.abs(values) <= tol]
    return SpectralDecomposition(positive=pos, negative=neg,
                                 zero_values=np.zeros(0) if infinite_zero else zero, tol=tol)


def _aligned_count(alpha, n):
    m = alpha * n
    if abs(m - round(m)) > 1e-9:
        raise ValidationError(f"alpha={alpha} is not aligned with n={n}")
    return int(round(m))


def closed_form_spectrum(model, operator="kernel", k_max=10, n=None):
    """Analytic spectrum of the closed-form families.

    Kernel operators list their nonzero eigenvalues with the zero
    eigenvalue of infinite multiplicity left implicit.  For Laplacians the
    continuum eigenspaces are infinite-dimensional: without ``n`` each
    distinct eigenvalue is listed once; with ``n`` the multiplicities of the
    aligned n-block discretization are used.
    """
    if operator not in ("kernel", "laplacian"):
        raise ValidationError(f"unknown operator '{operator}'")
    if isinstance(model, Constant):
        p = model.p
        if operator == "kernel":
            return _from_list([p])
        rest = [-p] * (n - 1 if n else 1)
        return _from_list([0.0] + rest, infinite_zero=False)
    if isinstance(model, Bipartite):
        a, p = model.alpha, model.p
        if operator == "kernel":
            lam = p * math.sqrt(a * (1 - a))
            return _from_list([lam, -lam])
        if n:
            m = _aligned_count(a, n)
            vals = [0.0, -p] + [-p * a] * (n - m - 1) + [-p * (1 - a)] * (m - 1)
        else:
            vals = [0.0, -p, -p * a, -p * (1 - a)]
        return _from_list(vals, infinite_zero=False)
    if isinstance(model, SmallWorld):
        if int(k_max) < 1:
            raise ValidationError("k_max must be at least 1")
        modes = smallworld_modes(model, int(k_max))
        vals = [modes[0][1]] + [mu for _, mu in modes[1:] for _ in (0, 1)]
        if operator == "laplacian":
            mu0 = modes[0][1]
            return _from_list([v - mu0 for v in vals], infinite_zero=False)
        return _from_list(vals)
    raise ValidationError(f"no closed-form spectrum for {type(model).__name__}")


def to_spectral_measure(d):
    """Group eigenvalues within the grouping tolerance into atoms."""
    if d.vectors is None:
        raise ValidationError("a spectral measure needs eigenvectors")
    vals = d.values()
    order = np.argsort(-vals, kind="stable")
    groups = []
    for k in order:
        if groups and vals[groups[-1][-1]] - vals[k] <= d.tol:
            groups[-1].append(k)
        else:
            groups.append([k])
    atoms = []
    for g in groups:
        q, _ = np.linalg.qr(d.vectors[:, g])
        atoms.append(Atom(float(np.mean(vals[g])), len(g), q))
    return SpectralMeasure(tuple(atoms), d.vectors.shape[0], d.tol)


def project_interval(P, a, b):
    """Orthogonal projection onto eigenspaces with eigenvalue in (a, b]."""
    if not a < b:
        raise ValidationError(f"need a < b, got ({a}, {b}]")
    M = np.zeros((P.dim, P.dim))
    rank = 0
    for atom in P.atoms:
        if a < atom.eigenvalue <= b:
            M += atom.basis @ atom.basis.T
            rank += atom.multiplicity
    return IntervalProjection(float(a), float(b), M, rank)


def projection_distance(P, Q):
    """Operator (spectral) norm of the difference."""
    A = P.matrix if isinstance(P, IntervalProjection) else np.asarray(P)
    B = Q.matrix if isinstance(Q, IntervalProjection) else np.asarray(Q)
    if A.shape != B.shape:
        raise ValidationError(f"dimension mismatch: {A.shape} vs {B.shape}")
    return float(np.linalg.norm(A - B, 2))


@dataclass(frozen=True)
class IntervalReport:
    a: float
    b: float
    rank_n: int
    rank: int
    distance: float | None


def _check_endpoint(P, x):
    if math.isinf(x):
        return
    for atom in P.atoms:
        if abs(x - atom.eigenvalue) < P.tol:
            raise ValidationError(f"endpoint {x} is within {P.tol:g} of the atom at {atom.eigenvalue:.12g}")


def vague_diagnostic(Pn, P, intervals):
    """Compare interval projections of ``Pn`` against the reference ``P``.

    Endpoints must stay clear of the atoms of ``P`` and ``a`` must be
    nonzero.  Distances are reported only when the ambient dimensions match.
    """
    reports = []
    for a, b in intervals:
        if a == 0:
            raise ValidationError("left endpoint must be nonzero")
        _check_endpoint(P, a)
        _check_endpoint(P, b)
        pn = project_interval(Pn, a, b)
        p = project_interval(P, a, b)
        dist = projection_distance(pn, p) if Pn.dim == P.dim else None
        reports.append(IntervalReport(float(a), float(b), pn.rank, p.rank, dist))
    return reports


def align_spectra(dn, d, window):
    """Rows (j, lambda^n_j, lambda_j, gap) for j = 1..window, -1..-window."""
    if int(window) < 1:
        raise ValidationError("window must be at least 1")
    rows = []
    for j in list(range(1, window + 1)) + list(range(-1, -window - 1, -1)):
        x, y = dn.eigenvalue(j), d.eigenvalue(j)
        rows.append((j, x, y, abs(x - y)))
    return rows
