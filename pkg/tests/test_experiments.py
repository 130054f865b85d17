import csv
import io
import json
import math

import pytest

from graphon_ldp import ValidationError
from graphon_ldp.experiments import (COLUMNS, ExperimentSpec, rows_to_csv, run_bipartite_switching,
                                     run_convergence, run_experiment, run_ldp_bruteforce,
                                     run_smallworld_perturbation, run_vague_diagnostic)


def table(rows, metric, **where):
    out = {}
    for r in rows:
        if r.metric == metric and all(getattr(r, k) == v for k, v in where.items()):
            out[(r.n, r.seed, r.delta, r.index)] = r.value
    return out


class TestConvergence:
    def test_constant_zero_gaps(self):
        rows = run_convergence(ExperimentSpec("convergence", "constant:p=0.0", n=[5, 9], seeds=[1, 2]))
        assert all(v == 0 for v in table(rows, "gap").values())

    def test_smallworld_projection(self):
        spec = ExperimentSpec("convergence", "smallworld:q=0.8,p=0.2,r=0.25", n=[512], sample=False, window=3)
        gaps = table(run_convergence(spec), "gap")
        assert len(gaps) == 6 and max(gaps.values()) <= 1e-2

    def test_bipartite_median_trend(self):
        spec = ExperimentSpec("convergence", "bipartite:alpha=0.25,p=0.8", n=[100, 200, 400], seeds=[1, 2, 3, 4, 5])
        rows = run_convergence(spec)
        med = {k[0]: v for k, v in table(rows, "median_gap").items()}
        assert med[400] < med[100]
        assert set(table(rows, "rank_n").values()) == {1}


class TestSwitching:
    SPEC = ExperimentSpec("bipartite-switching", "bipartite:alpha=0.2,p=0.5", n=[40],
                          deltas=[-0.01, 0.01, 0.02])

    def test_unperturbed_clusters(self):
        measured = table(run_bipartite_switching(self.SPEC), "measured", delta=0.0)
        got = sorted(measured.values())
        assert got == pytest.approx([-0.5, -0.4, -0.1], abs=1e-12)

    def test_first_order_agreement(self):
        rows = run_bipartite_switching(self.SPEC)
        assert max(table(rows, "deviation").values()) <= 1e-12

    def test_gap_rate(self):
        gap = {k[2]: v for k, v in table(run_bipartite_switching(self.SPEC), "gap13").items()}
        rate = (gap[0.02] - gap[0.0]) / 0.02
        assert abs(rate) == pytest.approx(0.02 / (2 * 0.8) / 0.02, rel=0.2)

    def test_negative_delta_moves_up_lambda1_fastest(self):
        rows = run_bipartite_switching(self.SPEC)
        base = {k[3]: v for k, v in table(rows, "measured", delta=0.0).items()}
        neg = {k[3]: v for k, v in table(rows, "measured", delta=-0.01).items()}
        shift = {i: neg[i] - base[i] for i in base}
        assert all(s > 0 for s in shift.values())
        assert shift[1] == max(shift.values())

    def test_switch_reporting(self):
        sw = table(run_bipartite_switching(self.SPEC), "switch_delta")
        assert all(math.isnan(v) for v in sw.values())

    def test_needs_alignment(self):
        with pytest.raises(ValidationError):
            run_bipartite_switching(ExperimentSpec("bipartite-switching", "bipartite:alpha=0.3,p=0.5", n=[8]))


class TestSmallWorld:
    def test_tables(self):
        spec = ExperimentSpec("smallworld-perturbation", "smallworld:q=0.8,p=0.2,r=0.25",
                              deltas=[0.01, 0.02], k_max=2)
        rows = run_smallworld_perturbation(spec)
        res = table(rows, "residual")
        assert res[(None, None, 0.02, 0)] <= 4e-4
        assert res[(None, None, 0.02, 1)] <= 10 * 0.02**2
        # mu_2 vanishes for r = 1/4 before and after the tilt
        assert abs(table(rows, "mu_delta")[(None, None, 0.02, 2)]) <= 1e-10
        ratio = table(rows, "halving_ratio")[(None, None, 0.02, 1)]
        assert 3.5 <= ratio <= 4.5

    def test_degenerate(self):
        spec = ExperimentSpec("smallworld-perturbation", "smallworld:q=0.3,p=0.3,r=0.25", deltas=[0.05], k_max=3)
        mu = table(run_smallworld_perturbation(spec), "mu_delta")
        assert mu[(None, None, 0.05, 0)] == pytest.approx(0.35)
        assert all(abs(v) < 1e-15 for k, v in mu.items() if k[3] != 0)

    def test_wrong_model(self):
        with pytest.raises(ValidationError):
            run_smallworld_perturbation(ExperimentSpec("smallworld-perturbation", "constant:p=0.5", deltas=[0.1]))


class TestLdp:
    def test_table(self):
        spec = ExperimentSpec("ldp-bruteforce", "constant:p=0.5", n=[4, 5, 6], deltas=[0.0, 0.2, 0.6])
        rows = run_ldp_bruteforce(spec)
        est = {k[0]: v for k, v in table(rows, "ldp_estimate", delta=0.2).items()}
        rate = table(rows, "rate", delta=0.2)[(4, None, 0.2, None)]
        assert est[4] > est[5] > est[6] > rate
        assert all(v == 1.0 for v in table(rows, "impossible", delta=0.6).values())
        assert all(v == 0.0 for v in table(rows, "rate", delta=0.0).values())


class TestVague:
    def test_ranks(self):
        spec = ExperimentSpec("vague-diagnostic", "bipartite:alpha=0.25,p=0.8", n=[60], seeds=[1],
                              intervals=[[0.2, 1.0], [-1.0, -0.2]])
        rows = run_vague_diagnostic(spec)
        assert set(table(rows, "rank").values()) == {1}
        assert all(0 <= v <= 1 for v in table(rows, "proj_distance").values())

    def test_needs_intervals(self):
        with pytest.raises(ValidationError):
            run_vague_diagnostic(ExperimentSpec("vague-diagnostic", "constant:p=0.5", n=[4], seeds=[1]))


class TestIO:
    def test_byte_identical(self, tmp_path):
        text = json.dumps({"name": "convergence", "model": "bipartite:alpha=0.25,p=0.8", "n": [30, 60],
                           "seeds": [1, 2]})
        outs = []
        for k, workers in enumerate((1, 3)):
            spec = ExperimentSpec.from_json(text, out=str(tmp_path / str(k)), workers=workers)
            run_experiment(spec)
            outs.append((tmp_path / str(k) / "convergence.csv").read_bytes())
        assert outs[0] == outs[1]
        manifest = json.loads((tmp_path / "0" / "manifest.json").read_text())
        assert manifest["config"]["n"] == [30, 60] and manifest["rows"] > 0

    def test_csv_columns(self):
        rows = run_ldp_bruteforce(ExperimentSpec("ldp-bruteforce", "constant:p=0.5", n=[4], deltas=[0.25]))
        parsed = list(csv.reader(io.StringIO(rows_to_csv(rows))))
        assert tuple(parsed[0]) == COLUMNS
        prob = [r for r in parsed[1:] if r[6] == "probability"][0]
        assert float(prob[7]) == 2.0**-6

    @pytest.mark.parametrize("text", ['{"name": "nope", "model": "constant:p=0.5"}',
                                      '{"name": "convergence", "model": "constant:p=0.5", "extra": 1}',
                                      '{"name": "convergence", "model": "constant:p=0.5", "n": [0]}'])
    def test_spec_validation(self, text):
        with pytest.raises(ValidationError):
            ExperimentSpec.from_json(text)
