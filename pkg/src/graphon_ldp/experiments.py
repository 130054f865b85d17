"""Experiment drivers producing long-format result tables.

Each driver takes an :class:`ExperimentSpec` and returns a list of
:class:`ResultRow`; :func:`run_experiment` writes them as CSV together with
a ``manifest.json`` into its output directory.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .errors import ValidationError
from .graphon import Bipartite, SmallWorld, parse_graphon, project_to_step
from .ldp import brute_force_ldp, monte_carlo_ldp, solve_tilt
from .sampler import SampleConfig, lift, sample
from .spectral import (align_spectra, closed_form_spectrum, decompose_kernel, decompose_laplacian,
                       smallworld_modes, to_spectral_measure, vague_diagnostic)

EXPERIMENTS = ("convergence", "bipartite-switching", "smallworld-perturbation", "vague-diagnostic",
               "ldp-bruteforce")
COLUMNS = ("experiment", "model", "n", "seed", "delta", "index", "metric", "value")


@dataclass
class ExperimentSpec:
    name: str
    model: str
    n: list = field(default_factory=list)
    seeds: list = field(default_factory=list)
    deltas: list = field(default_factory=list)
    out: str = "results"
    sample: bool = True
    window: int = 3
    k_max: int = 5
    intervals: list = field(default_factory=list)
    mc_samples: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.name not in EXPERIMENTS:
            raise ValidationError(f"unknown experiment '{self.name}'; expected one of {EXPERIMENTS}")
        self.n = [int(v) for v in self.n]
        self.seeds = [int(v) for v in self.seeds]
        self.deltas = [float(v) for v in self.deltas]
        self.intervals = [(float(a), float(b)) for a, b in self.intervals]
        if any(v < 1 for v in self.n):
            raise ValidationError("every n must be positive")

    @classmethod
    def from_json(cls, text, **overrides):
        data = json.loads(text)
        data.update({k: v for k, v in overrides.items() if v is not None})
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config fields {sorted(unknown)}")
        return cls(**data)

    def graphon(self):
        return parse_graphon(self.model)


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    model: str
    n: int | None
    seed: int | None
    delta: float | None
    index: int | None
    metric: str
    value: float

    def key(self):
        def k(v):
            return (v is None, v if v is not None else 0)
        return (k(self.n), k(self.seed), k(self.delta), k(self.index), self.metric)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def rows_to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in rows:
        writer.writerow([r.experiment, r.model] + [_fmt(getattr(r, c)) for c in COLUMNS[2:]])
    return buf.getvalue()


def _pool_map(fn, cells, workers):
    if workers <= 1:
        return [fn(c) for c in cells]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, cells))


def _flatten(results):
    return [row for chunk in results for row in chunk]


def _isolating_interval(d):
    """(a, b] containing only the largest positive atom of ``d``."""
    lam1 = d.eigenvalue(1)
    if lam1 <= d.tol:
        return None
    below = d.positive[d.positive < lam1 - d.tol]
    nxt = float(below[0]) if below.size else 0.0
    return (0.5 * (lam1 + nxt), 1.5)


def _reference_spectrum(W, window, k_min, k_cap=4096):
    """Closed-form kernel spectrum with enough small-world modes to fill the window.

    |mu_k| <= |q - p| / (pi k), so truncation at K is safe once that bound
    drops to the smallest magnitude inside the window.
    """
    k = max(k_min, window)
    while True:
        d = closed_form_spectrum(W, "kernel", k_max=k)
        if not isinstance(W, SmallWorld) or k >= k_cap:
            return d
        js = list(range(1, window + 1)) + list(range(-1, -window - 1, -1))
        floor = min(abs(d.eigenvalue(j)) for j in js)
        if abs(W.q - W.p) / (math.pi * (k + 1)) <= floor:
            return d
        k *= 2


def run_convergence(spec):
    W = spec.graphon()
    reference = _reference_spectrum(W, spec.window, spec.k_max)
    name = spec.name
    seeds = spec.seeds if spec.sample else [None]
    cells = [(n, s) for n in spec.n for s in seeds]

    def cell(c):
        n, seed = c
        Wn = project_to_step(W, n)
        G = lift(sample(W, SampleConfig(seed, n))) if seed is not None else Wn
        dn = decompose_kernel(G)
        out = []
        for j, x, y, gap in align_spectra(dn, reference, spec.window):
            out += [ResultRow(name, spec.model, n, seed, None, j, "lambda_n", x),
                    ResultRow(name, spec.model, n, seed, None, j, "lambda", y),
                    ResultRow(name, spec.model, n, seed, None, j, "gap", gap)]
        if seed is not None:
            dref = decompose_kernel(Wn)
            interval = _isolating_interval(dref)
            if interval is not None:
                rep = vague_diagnostic(to_spectral_measure(dn), to_spectral_measure(dref), [interval])[0]
                out += [ResultRow(name, spec.model, n, seed, None, 1, "rank_n", rep.rank_n),
                        ResultRow(name, spec.model, n, seed, None, 1, "rank", rep.rank),
                        ResultRow(name, spec.model, n, seed, None, 1, "proj_distance", rep.distance)]
        return out

    rows = _flatten(_pool_map(cell, cells, spec.workers))
    for n in spec.n:
        gaps = [r.value for r in rows if r.n == n and r.index == 1 and r.metric == "gap"]
        rows.append(ResultRow(name, spec.model, n, None, None, 1, "median_gap", statistics.median(gaps)))
    return sorted(rows, key=ResultRow.key)


def _subspace_bases(n, m):
    """Orthonormal bases of the bipartite Laplacian eigenspaces on n blocks, m = alpha n."""
    v1 = np.where(np.arange(n) < m, -(n - m) / n, m / n)
    v1 /= np.linalg.norm(v1)

    def centered(lo, hi):
        k = hi - lo
        if k < 2:
            return np.zeros((n, 0))
        M = np.zeros((n, k - 1))
        for c in range(k - 1):
            M[lo + c, c] = 1.0
            M[hi - 1, c] = -1.0
        q, _ = np.linalg.qr(M)
        return q

    return {"lambda1": v1[:, None], "lambda2": centered(m, n), "lambda3": centered(0, m)}


def bipartite_first_order(alpha, p, delta):
    return {
        "lambda1": -p - delta / (2 * alpha * (1 - alpha)),
        "lambda2": -p * alpha - delta / (2 * (1 - alpha)),
        "lambda3": -p * (1 - alpha) - delta / (2 * alpha),
    }


def laplacian_clusters(w_star, bases):
    """Eigenvalue of the atom carrying each labelled eigenspace."""
    measure = to_spectral_measure(decompose_laplacian(w_star))
    out = {}
    for label, S in bases.items():
        if S.shape[1] == 0:
            continue
        overlaps = [np.linalg.norm(a.basis.T @ S) ** 2 / S.shape[1] for a in measure.atoms]
        out[label] = measure.atoms[int(np.argmax(overlaps))].eigenvalue
    return out


def run_bipartite_switching(spec):
    W = spec.graphon()
    if not isinstance(W, Bipartite):
        raise ValidationError("bipartite-switching needs a bipartite model")
    if not spec.n:
        raise ValidationError("bipartite-switching needs an aligned block count in n")
    n = spec.n[0]
    m = W.alpha * n
    if abs(m - round(m)) > 1e-9:
        raise ValidationError(f"n={n} does not align with alpha={W.alpha}")
    m = int(round(m))
    bases = _subspace_bases(n, m)
    Wn = project_to_step(W, n)
    name = spec.name
    deltas = sorted(set(spec.deltas) | {0.0})

    def cell(delta):
        w_star = solve_tilt(Wn, delta).w_star if delta != 0 else Wn
        return delta, laplacian_clusters(w_star, bases)

    clusters = dict(_pool_map(cell, deltas, spec.workers))
    base_order = sorted(clusters[0.0], key=lambda k: -clusters[0.0][k])
    rows = []
    for delta in deltas:
        measured = clusters[delta]
        predicted = bipartite_first_order(W.alpha, W.p, delta)
        for idx, label in enumerate(("lambda1", "lambda2", "lambda3"), start=1):
            if label not in measured:
                continue
            rows += [ResultRow(name, spec.model, n, None, delta, idx, "measured", measured[label]),
                     ResultRow(name, spec.model, n, None, delta, idx, "first_order", predicted[label]),
                     ResultRow(name, spec.model, n, None, delta, idx, "deviation",
                               abs(measured[label] - predicted[label]))]
        if "lambda1" in measured and "lambda3" in measured:
            rows.append(ResultRow(name, spec.model, n, None, delta, None, "gap13",
                                  measured["lambda3"] - measured["lambda1"]))
        order = sorted(measured, key=lambda k: -measured[k])
        rows.append(ResultRow(name, spec.model, n, None, delta, None, "ordering_changed",
                              float(order != base_order)))
    for sign in (1, -1):
        side = [d for d in deltas if d * sign > 0]
        side.sort(key=abs)
        switched = [d for d in side if
                    sorted(clusters[d], key=lambda k: -clusters[d][k]) != base_order]
        rows.append(ResultRow(name, spec.model, n, None, None, sign, "switch_delta",
                              switched[0] if switched else math.nan))
    return sorted(rows, key=ResultRow.key)


def run_smallworld_perturbation(spec):
    W = spec.graphon()
    if not isinstance(W, SmallWorld):
        raise ValidationError("smallworld-perturbation needs a smallworld model")
    name = spec.name
    base = dict(smallworld_modes(W, spec.k_max))
    deltas = sorted(spec.deltas)

    def cell(delta):
        star = solve_tilt(W, delta).w_star
        modes = dict(smallworld_modes(star, spec.k_max))
        numeric = {n: decompose_kernel(project_to_step(star, n)).eigenvalue(1) for n in spec.n}
        return delta, modes, numeric

    results = {d: (modes, numeric) for d, modes, numeric in _pool_map(cell, deltas, spec.workers)}
    residual = {}
    rows = []
    for delta in deltas:
        modes, numeric = results[delta]
        for k, mu in modes.items():
            res = abs(mu - base[k] - delta) if k == 0 else abs(mu - base[k])
            residual[(delta, k)] = res
            rows += [ResultRow(name, spec.model, None, None, delta, k, "mu_delta", mu),
                     ResultRow(name, spec.model, None, None, delta, k, "residual", res)]
        for n, mu0 in numeric.items():
            rows.append(ResultRow(name, spec.model, n, None, delta, 0, "mu_delta_numeric", mu0))
    for delta in deltas:
        halves = [d for d in deltas if math.isclose(d, delta / 2, rel_tol=1e-9)]
        if halves:
            half = halves[0]
            for k in base:
                num, den = residual[(delta, k)], residual[(half, k)]
                ratio = num / den if den > 0 else math.nan
                rows.append(ResultRow(name, spec.model, None, None, delta, k, "halving_ratio", ratio))
    return sorted(rows, key=ResultRow.key)


def run_ldp_bruteforce(spec):
    W = spec.graphon()
    name = spec.name
    cells = [(n, d) for n in spec.n for d in spec.deltas]
    mc_seed = spec.seeds[0] if spec.seeds else 0

    def cell(c):
        n, delta = c
        res = brute_force_ldp(W, n, delta)
        rate = math.inf if res.rate.infinite else res.rate.value
        out = [ResultRow(name, spec.model, n, None, delta, None, "probability", res.probability),
               ResultRow(name, spec.model, n, None, delta, None, "min_edges", res.min_edges),
               ResultRow(name, spec.model, n, None, delta, None, "ldp_estimate", res.ldp_estimate),
               ResultRow(name, spec.model, n, None, delta, None, "rate", rate),
               ResultRow(name, spec.model, n, None, delta, None, "impossible", float(res.impossible))]
        if spec.mc_samples:
            est, se = monte_carlo_ldp(W, n, delta, spec.mc_samples, mc_seed)
            out += [ResultRow(name, spec.model, n, mc_seed, delta, None, "mc_probability", est),
                    ResultRow(name, spec.model, n, mc_seed, delta, None, "mc_stderr", se)]
        return out

    return sorted(_flatten(_pool_map(cell, cells, spec.workers)), key=ResultRow.key)


def run_vague_diagnostic(spec):
    W = spec.graphon()
    name = spec.name
    if not spec.intervals:
        raise ValidationError("vague-diagnostic needs at least one interval")
    cells = [(n, s) for n in spec.n for s in spec.seeds]

    def cell(c):
        n, seed = c
        ref = to_spectral_measure(decompose_kernel(project_to_step(W, n)))
        meas = to_spectral_measure(decompose_kernel(lift(sample(W, SampleConfig(seed, n)))))
        out = []
        for idx, rep in enumerate(vague_diagnostic(meas, ref, spec.intervals)):
            out += [ResultRow(name, spec.model, n, seed, None, idx, "rank_n", rep.rank_n),
                    ResultRow(name, spec.model, n, seed, None, idx, "rank", rep.rank)]
            if rep.distance is not None:
                out.append(ResultRow(name, spec.model, n, seed, None, idx, "proj_distance", rep.distance))
        return out

    return sorted(_flatten(_pool_map(cell, cells, spec.workers)), key=ResultRow.key)


RUNNERS = {
    "convergence": run_convergence,
    "bipartite-switching": run_bipartite_switching,
    "smallworld-perturbation": run_smallworld_perturbation,
    "vague-diagnostic": run_vague_diagnostic,
    "ldp-bruteforce": run_ldp_bruteforce,
}


def run_experiment(spec):
    """Run ``spec`` and write ``<name>.csv`` and ``manifest.json`` into ``spec.out``."""
    start = time.perf_counter()
    rows = RUNNERS[spec.name](spec)
    elapsed = time.perf_counter() - start
    os.makedirs(spec.out, exist_ok=True)
    csv_path = os.path.join(spec.out, f"{spec.name}.csv")
    with open(csv_path, "w", newline="") as fh:
        fh.write(rows_to_csv(rows))
    manifest = {"config": asdict(spec), "version": __version__, "wall_clock_seconds": elapsed,
                "rows": len(rows), "table": os.path.basename(csv_path)}
    with open(os.path.join(spec.out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return rows
