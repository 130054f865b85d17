import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from graphon_ldp import (Bipartite, BlockPermutation, Constant, SampleConfig, SmallWorld, StepGraphon,
                         ValidationError, align_spectra, closed_form_spectrum, decompose_kernel,
                         decompose_laplacian, lift, project_interval, project_to_step, projection_distance,
                         pullback, sample, to_spectral_measure, vague_diagnostic)
from graphon_ldp.spectral import decompose_matrix, laplacian_matrix

from conftest import random_step

seeds = st.integers(0, 2**32 - 1)


def corpus():
    rng = np.random.default_rng(99)
    items = [StepGraphon([[0.3]]), StepGraphon(np.zeros((4, 4))),
             project_to_step(Bipartite(0.25, 0.8), 8), project_to_step(SmallWorld(0.8, 0.2, 0.25), 32),
             lift(sample(Constant(0.5), SampleConfig(1, 20)))]
    items += [random_step(rng, n) for n in (2, 5, 9, 16)]
    return items


CORPUS = corpus()


def check_identities(W, d):
    vals = d.values()
    assert np.all(np.abs(vals) <= 1 + 1e-12)
    assert vals.sum() == pytest.approx(np.trace(W.values) / W.n, abs=1e-8)
    assert (vals**2).sum() == pytest.approx((W.values**2).sum() / W.n**2, abs=1e-8)
    assert np.allclose(d.vectors.T @ d.vectors, np.eye(W.n), atol=1e-8)
    K = W.values / W.n
    assert np.allclose(d.vectors @ np.diag(vals) @ d.vectors.T, K, atol=1e-10)


class TestDecomposeKernel:
    def test_constant_one_block(self):
        d = decompose_kernel(StepGraphon([[0.3]]))
        assert d.values().tolist() == [0.3]
        assert d.eigenvalue(1) == 0.3 and d.eigenvalue(-1) == 0.0 and d.eigenvalue(5) == 0.0

    def test_bipartite_512(self):
        d = decompose_kernel(project_to_step(Bipartite(0.25, 0.8), 512))
        lam = 0.8 * math.sqrt(0.25 * 0.75)
        assert d.eigenvalue(1) == pytest.approx(lam, abs=1e-2)
        assert d.eigenvalue(-1) == pytest.approx(-lam, abs=1e-2)

    def test_smallworld_512(self):
        d = decompose_kernel(project_to_step(SmallWorld(0.8, 0.2, 0.25), 512))
        assert d.eigenvalue(1) == pytest.approx(0.5, abs=1e-2)
        assert d.eigenvalue(2) == pytest.approx(0.6 / math.pi, abs=1e-2)
        assert d.eigenvalue(3) == pytest.approx(0.6 / math.pi, abs=1e-2)

    def test_ordering(self, rng):
        d = decompose_kernel(random_step(rng, 12, -0.0, 1.0))
        assert np.all(np.diff(d.positive) <= 0)
        assert np.all(np.diff(d.negative) >= 0)
        assert np.all(d.positive > 0) and np.all(d.negative < 0)
        assert d.zero_multiplicity + d.positive.size + d.negative.size == 12

    @pytest.mark.parametrize("W", CORPUS, ids=lambda W: f"n{W.n}")
    def test_identities(self, W):
        check_identities(W, decompose_kernel(W))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 12), seeds)
    def test_identities_random(self, n, seed):
        W = random_step(np.random.default_rng(seed), n)
        check_identities(W, decompose_kernel(W))

    def test_rejects_closed_form(self):
        with pytest.raises(ValidationError):
            decompose_kernel(Constant(0.5))


class TestLaplacian:
    def test_constant(self):
        d = decompose_laplacian(project_to_step(Constant(0.4), 8))
        assert d.zero_multiplicity == 1
        assert np.allclose(d.negative, -0.4, atol=1e-12) and d.negative.size == 7
        v = d.vectors[:, d.positive.size]
        assert np.allclose(np.abs(v), 1 / math.sqrt(8), atol=1e-12)

    def test_bipartite_aligned(self):
        a, p, n = 0.25, 0.8, 8
        d = decompose_laplacian(project_to_step(Bipartite(a, p), n))
        expected = sorted([0.0, -p] + [-p * a] * 5 + [-p * (1 - a)] * 1)
        assert np.allclose(np.sort(d.values()), expected, atol=1e-12)
        cf = closed_form_spectrum(Bipartite(a, p), "laplacian", n=n)
        assert np.allclose(np.sort(cf.values()), expected, atol=1e-15)

    def test_zero_graphon(self):
        d = decompose_laplacian(StepGraphon(np.zeros((5, 5))))
        assert np.all(d.values() == 0) and d.zero_multiplicity == 5

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 10), seeds)
    def test_constant_vector_in_kernel(self, n, seed):
        W = random_step(np.random.default_rng(seed), n)
        L = laplacian_matrix(W)
        assert np.allclose(L.sum(axis=1), 0, atol=1e-14)
        d = decompose_laplacian(W)
        assert d.zero_multiplicity >= 1
        # nonpositive operator
        assert d.positive.size == 0


class TestClosedForm:
    def test_smallworld(self):
        d = closed_form_spectrum(SmallWorld(0.8, 0.2, 0.25), k_max=4)
        assert d.eigenvalue(1) == pytest.approx(0.5)
        assert d.eigenvalue(2) == d.eigenvalue(3) == pytest.approx(0.6 / math.pi, rel=1e-15)
        assert 0.6 / math.pi == pytest.approx(0.190986, abs=1e-6)
        # mu_2 = 0.6/(2 pi) sin(pi) vanishes and mu_3, mu_4 sit at +/- 0.6/(3 pi), 0
        assert d.eigenvalue(-1) == d.eigenvalue(-2) == pytest.approx(-0.6 / (3 * math.pi))
        assert d.zero_multiplicity is None

    def test_bipartite(self):
        d = closed_form_spectrum(Bipartite(0.25, 0.8))
        assert d.values() == pytest.approx([0.346410, -0.346410], abs=1e-6)

    def test_constant_limit(self):
        d = closed_form_spectrum(SmallWorld(0.3, 0.3, 0.2), k_max=5)
        assert d.values().tolist() == [pytest.approx(0.3)]

    def test_laplacian_smallworld_matches_discretization(self):
        W = SmallWorld(0.8, 0.2, 0.25)
        cf = closed_form_spectrum(W, "laplacian", k_max=3)
        d = decompose_laplacian(project_to_step(W, 512))
        assert cf.eigenvalue(-1) == pytest.approx(d.eigenvalue(-1), abs=1e-2)

    def test_errors(self):
        with pytest.raises(ValidationError):
            closed_form_spectrum(SmallWorld(0.8, 0.2, 0.25), k_max=0)
        with pytest.raises(ValidationError):
            closed_form_spectrum(StepGraphon([[0.1]]))
        with pytest.raises(ValidationError):
            closed_form_spectrum(Bipartite(0.3, 0.5), "laplacian", n=8)


class TestSpectralMeasure:
    def test_single_atom(self):
        P = to_spectral_measure(decompose_kernel(StepGraphon([[0.3]])))
        assert [(a.eigenvalue, a.multiplicity) for a in P.atoms] == [(0.3, 1)]

    def test_bipartite_aligned(self):
        P = to_spectral_measure(decompose_kernel(project_to_step(Bipartite(0.25, 0.8), 8)))
        lam = 0.8 * math.sqrt(0.25 * 0.75)
        got = [(round(a.eigenvalue, 12), a.multiplicity) for a in P.atoms]
        assert got == [(round(lam, 12), 1), (0.0, 6), (round(-lam, 12), 1)]

    def test_smallworld_doublet(self):
        P = to_spectral_measure(decompose_kernel(project_to_step(SmallWorld(0.8, 0.2, 0.25), 64)))
        mults = [a.multiplicity for a in P.atoms if abs(a.eigenvalue - 0.19) < 0.01]
        assert mults == [2]

    @pytest.mark.parametrize("W", CORPUS, ids=lambda W: f"n{W.n}")
    def test_atom_invariants(self, W):
        P = to_spectral_measure(decompose_kernel(W))
        ev = P.eigenvalues()
        assert np.all(-np.diff(ev) > P.tol)
        assert sum(a.multiplicity for a in P.atoms) == W.n == P.dim
        B = np.hstack([a.basis for a in P.atoms])
        assert np.allclose(B.T @ B, np.eye(W.n), atol=1e-8)

    def test_needs_vectors(self):
        with pytest.raises(ValidationError):
            to_spectral_measure(closed_form_spectrum(Constant(0.3)))


class TestIntervals:
    def test_full_and_empty(self, rng):
        W = random_step(rng, 6)
        P = to_spectral_measure(decompose_kernel(W))
        full = project_interval(P, -2, 2)
        assert full.rank == 6 and np.allclose(full.matrix, np.eye(6), atol=1e-10)
        empty = project_interval(P, 1.5, 2)
        assert empty.rank == 0 and not empty.matrix.any()

    def test_bipartite_top_vector(self):
        a, n = 0.25, 8
        P = to_spectral_measure(decompose_kernel(project_to_step(Bipartite(a, 0.8), n)))
        proj = project_interval(P, 0.2, 1.0)
        assert proj.rank == 1
        # top eigenfunction: sqrt(1 - a) on [0, a) and sqrt(a) on [a, 1], normalized on the grid
        v = np.array([math.sqrt(1 - a)] * 2 + [math.sqrt(a)] * 6)
        v /= np.linalg.norm(v)
        assert np.allclose(proj.matrix, np.outer(v, v), atol=1e-12)

    @pytest.mark.parametrize("W", CORPUS, ids=lambda W: f"n{W.n}")
    def test_additivity_idempotence(self, W):
        P = to_spectral_measure(decompose_kernel(W))
        ev = P.eigenvalues()
        cuts = sorted({-1.1, 1.1} | {float(x) for x in (ev[:-1] + ev[1:]) / 2})
        for a, b, c in zip(cuts, cuts[1:], cuts[2:]):
            left, right, both = (project_interval(P, a, b), project_interval(P, b, c),
                                 project_interval(P, a, c))
            assert np.allclose(left.matrix + right.matrix, both.matrix, atol=1e-8)
            for proj in (left, right, both):
                M = proj.matrix
                assert np.allclose(M @ M, M, atol=1e-8)
                assert np.array_equal(M, M.T) or np.allclose(M, M.T, atol=1e-12)
                assert proj.rank == round(np.trace(M))

    def test_bad_interval(self):
        P = to_spectral_measure(decompose_kernel(StepGraphon([[0.3]])))
        with pytest.raises(ValidationError):
            project_interval(P, 0.5, 0.5)


class TestProjectionDistance:
    def test_same(self, rng):
        P = project_interval(to_spectral_measure(decompose_kernel(random_step(rng, 5))), 0.1, 1)
        assert projection_distance(P, P) == 0.0

    def test_orthogonal(self):
        e1, e2 = np.eye(2)
        assert projection_distance(np.outer(e1, e1), np.outer(e2, e2)) == pytest.approx(1.0)

    @settings(max_examples=50)
    @given(st.floats(0, math.pi / 2))
    def test_sin_theta(self, theta):
        u = np.array([1.0, 0.0])
        v = np.array([math.cos(theta), math.sin(theta)])
        assert projection_distance(np.outer(u, u), np.outer(v, v)) == pytest.approx(math.sin(theta), abs=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(seeds)
    def test_at_most_one(self, seed):
        rng = np.random.default_rng(seed)
        P = to_spectral_measure(decompose_kernel(random_step(rng, 7)))
        Q = to_spectral_measure(decompose_kernel(random_step(rng, 7)))
        assert projection_distance(project_interval(P, 0.05, 1), project_interval(Q, 0.05, 1)) <= 1 + 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            projection_distance(np.eye(2), np.eye(3))


class TestPullbackCovariance:
    @settings(max_examples=30, deadline=None)
    @given(st.permutations(range(8)), seeds)
    def test_eigenvalues_and_projections(self, perm, seed):
        W = random_step(np.random.default_rng(seed), 8)
        s = BlockPermutation(perm)
        d, dp = decompose_kernel(W), decompose_kernel(pullback(W, s))
        assert np.array_equal(d.values(), dp.values())
        P, Pp = to_spectral_measure(d), to_spectral_measure(dp)
        S = s.matrix()
        for a, b in [(0.05, 1.0), (-1.0, -0.01), (0.2, 0.6)]:
            lhs = project_interval(Pp, a, b).matrix
            rhs = S @ project_interval(P, a, b).matrix @ S.T
            assert np.allclose(lhs, rhs, atol=1e-8)


class TestVague:
    def test_identical(self, rng):
        P = to_spectral_measure(decompose_kernel(random_step(rng, 6)))
        reps = vague_diagnostic(P, P, [(0.013, 1.0), (-1.0, -0.011)])
        assert all(r.distance == 0 and r.rank == r.rank_n for r in reps)

    def test_refinement_ranks(self):
        W = Bipartite(0.25, 0.8)
        P8 = to_spectral_measure(decompose_kernel(project_to_step(W, 8)))
        P16 = to_spectral_measure(decompose_kernel(project_to_step(W, 16)))
        (rep,) = vague_diagnostic(P16, P8, [(0.2, 1.0)])
        assert rep.rank_n == rep.rank == 1 and rep.distance is None

    def test_endpoint_rules(self):
        P = to_spectral_measure(decompose_kernel(project_to_step(Bipartite(0.25, 0.8), 8)))
        with pytest.raises(ValidationError):
            vague_diagnostic(P, P, [(0.0, 1.0)])
        with pytest.raises(ValidationError):
            vague_diagnostic(P, P, [(0.1, 0.8 * math.sqrt(0.1875))])

    def test_sampled_distance_decreases(self):
        # same ambient grid: the sample lifted at n against W projected at n
        W = Bipartite(0.25, 0.8)
        for seed in range(1, 6):
            dists = []
            for n in (100, 400, 800):
                Pn = to_spectral_measure(decompose_kernel(lift(sample(W, SampleConfig(seed, n)))))
                P = to_spectral_measure(decompose_kernel(project_to_step(W, n)))
                dists.append(vague_diagnostic(Pn, P, [(0.2, 1.0)])[0].distance)
            assert dists[0] > dists[1] > dists[2], (seed, dists)


class TestAlign:
    def test_identical(self, rng):
        d = decompose_kernel(random_step(rng, 5))
        assert all(gap == 0 for *_, gap in align_spectra(d, d, 3))

    def test_constant_pair(self):
        rows = align_spectra(decompose_kernel(StepGraphon([[0.3]])), decompose_kernel(StepGraphon([[0.5]])), 2)
        assert rows[0] == (1, 0.3, 0.5, pytest.approx(0.2))
        assert [r[0] for r in rows] == [1, 2, -1, -2]
        assert all(r[3] == 0 for r in rows[1:])

    def test_window(self):
        d = decompose_kernel(StepGraphon([[0.3]]))
        with pytest.raises(ValidationError):
            align_spectra(d, d, 0)


def test_decompose_matrix_zero_group():
    d = decompose_matrix(np.diag([0.5, 0.0, -0.25]))
    assert d.positive.tolist() == [0.5] and d.negative.tolist() == [-0.25] and d.zero_multiplicity == 1
