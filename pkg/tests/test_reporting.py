import itertools
import json
import math

import numpy as np
import pytest
from scipy import stats

from mvlorenz import GridSpec, build_dataset, dominance_graph, export_dot, export_surface, meilc_surface, pseudo_observations, report
from mvlorenz.errors import DimensionMismatchError, MvLorenzError, ParseError
from mvlorenz.reporting import InequalityReport, read_surface, reports_from_summary, weighted_spearman

from conftest import COUNTRY_SUMMARY, random_dataset


def summary(name):
    inc, wea, g, rho = COUNTRY_SUMMARY[name]
    return InequalityReport.from_summary(name, (inc, wea), g, rho)


class TestReport:
    def test_society_one(self, society1):
        r = report(society1, "S1")
        assert r.megc == pytest.approx(0.121893, abs=1e-6)
        assert r.spearman_rho[0][1] == pytest.approx(1.0)
        assert r.n_effective == 3

    def test_society_three(self, society3):
        r = report(society3, "S3")
        assert r.spearman_rho[0][1] == pytest.approx(0.5, abs=1e-15)
        assert r.megc == pytest.approx(0.084, abs=5e-4)

    def test_single_column(self):
        r = report(build_dataset([[1.0], [3.0], [4.0]]), "one")
        assert r.d == 1
        assert r.megc == pytest.approx(1 - 2 * np.mean([1 / 8, 4 / 8, 1]), abs=1e-15)

    def test_json_round_trip(self, society2):
        r = report(society2, "S2")
        assert InequalityReport.from_dict(json.loads(json.dumps(r.as_dict()))) == r

    def test_scale_invariant(self):
        rng = np.random.default_rng(0)
        data = random_dataset(rng, 40, 3)
        scaled = data.replace_values(data.values * np.array([3.0, 0.01, 250.0]))
        a, b = report(data, "a"), report(scaled, "a")
        np.testing.assert_allclose(a.marginal_ginis, b.marginal_ginis, atol=1e-12)
        assert a.megc == pytest.approx(b.megc, abs=1e-12)
        assert a.spearman_rho == b.spearman_rho


class TestSpearman:
    def test_matches_scipy_unweighted_with_ties(self):
        rng = np.random.default_rng(1)
        x = rng.integers(0, 6, size=(60, 3)).astype(float)
        expected = stats.spearmanr(x).statistic
        np.testing.assert_allclose(weighted_spearman(x), expected, atol=1e-12)

    def test_integer_weights_equal_replication(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(25, 2))
        w = rng.integers(1, 4, size=25)
        np.testing.assert_allclose(
            weighted_spearman(x, w.astype(float)), weighted_spearman(np.repeat(x, w, axis=0)), atol=1e-12
        )

    def test_properties(self):
        rng = np.random.default_rng(3)
        rho = weighted_spearman(rng.normal(size=(30, 4)), rng.uniform(0.1, 2, size=30))
        np.testing.assert_array_equal(rho, rho.T)
        np.testing.assert_array_equal(np.diag(rho), 1)
        assert np.all(np.abs(rho) <= 1)

    def test_constant_column(self):
        rho = weighted_spearman(np.array([[1.0, 2.0], [1.0, 3.0], [1.0, 1.0]]))
        assert rho[0, 1] == 0


class TestDominance:
    def test_us_finland(self):
        g = dominance_graph([summary("United States"), summary("Finland")])
        assert g.edges == (("United States", "Finland"),)

    def test_italy_slovenia(self):
        assert dominance_graph([summary("Italy"), summary("Slovenia")]).edges == ()

    def test_single(self):
        assert dominance_graph([summary("Spain")]).edges == ()

    def test_ties_give_no_edge(self):
        a = InequalityReport.from_summary("a", (0.3, 0.5), 0.4)
        b = InequalityReport.from_summary("b", (0.3, 0.5), 0.4)
        assert dominance_graph([a, b]).edges == ()

    def test_chain_reduction(self):
        reps = [InequalityReport.from_summary(k, (v, v), v) for k, v in zip("ABC", (0.9, 0.5, 0.1))]
        assert dominance_graph(reps).edges == (("A", "B"), ("B", "C"))
        assert len(dominance_graph(reps, reduce=False).edges) == 3

    def test_full_table_properties(self):
        reps = [summary(name) for name in COUNTRY_SUMMARY]
        full = dominance_graph(reps, reduce=False)
        hasse = dominance_graph(reps)
        assert hasse.reachable() == full.reachable() == set(full.edges)
        assert set(hasse.edges) <= set(full.edges)
        for a, b in full.edges:
            pa = dict((r.entity, r.profile()) for r in reps)
            assert all(x >= y for x, y in zip(pa[a], pa[b]))
        assert all((b, a) not in full.reachable() for a, b in full.edges)
        assert ("South Africa", "United States") in hasse.edges

    def test_permutation_invariant(self):
        reps = [summary(name) for name in list(COUNTRY_SUMMARY)[:6]]
        ref = dominance_graph(reps)
        for perm in itertools.islice(itertools.permutations(reps), 30):
            assert dominance_graph(perm) == ref

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            dominance_graph([summary("Spain"), InequalityReport.from_summary("x", (0.1,), 0.1)])

    def test_duplicate_labels(self):
        with pytest.raises(MvLorenzError):
            dominance_graph([summary("Spain"), summary("Spain")])


class TestExports:
    def test_dot_empty(self):
        g = dominance_graph([])
        assert export_dot(g) == "digraph dominance {\n  rankdir=TB;\n}\n"

    def test_dot_edge(self):
        text = export_dot(dominance_graph([summary("United States"), summary("Finland")]))
        assert '  "United States" -> "Finland";' in text.splitlines()
        assert text.index('"Finland";') < text.index('"United States";')

    def test_surface_csv(self, society1):
        surf = meilc_surface(pseudo_observations(society1), GridSpec.uniform(2, 3))
        text = export_surface(surf)
        lines = text.splitlines()
        assert lines[0] == "u1,u2,value"
        assert "0.5,0.5,0.33333333333333331" in lines
        assert len(lines) == 10

    def test_corner_grid(self, society1):
        surf = meilc_surface(pseudo_observations(society1), GridSpec.uniform(2, 2))
        lines = export_surface(surf).splitlines()
        assert len(lines) == 5 and lines[-1] == "1,1,1"

    @pytest.mark.parametrize("fmt", ["csv", "json"])
    def test_round_trip(self, fmt):
        rng = np.random.default_rng(4)
        surf = meilc_surface(pseudo_observations(random_dataset(rng, 30, 2)), GridSpec.uniform(2, 17))
        back = read_surface(export_surface(surf, fmt), fmt)
        np.testing.assert_array_equal(back.values, surf.values)
        for a, b in zip(back.grid.knots, surf.grid.knots):
            np.testing.assert_array_equal(a, b)

    def test_unknown_format(self, society1):
        surf = meilc_surface(pseudo_observations(society1), GridSpec.uniform(2, 2))
        with pytest.raises(MvLorenzError):
            export_surface(surf, "xml")

    def test_summary_csv(self):
        text = "entity,income,wealth,megc,spearman_rho\nA,0.4,0.6,0.5,0.3\nB,0.2,0.5,0.4,\n"
        a, b = reports_from_summary(text)
        assert a.marginal_ginis == (0.4, 0.6) and a.spearman_rho[0][1] == 0.3
        assert math.isnan(b.spearman_rho[0][1])
        with pytest.raises(ParseError):
            reports_from_summary("entity,income\nA,0.3\n")
        with pytest.raises(ParseError):
            reports_from_summary("entity,income,megc\nA,x,0.3\n")
