import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mvlorenz import empirical_lorenz, gini, inverse_lorenz_eval, lorenz_eval
from mvlorenz.errors import MvLorenzError, OutOfRangeError
from mvlorenz.lorenz import PLUGIN, TRAPEZOID, LorenzCurve, star_column

from conftest import pairwise_gini

positive_lists = st.lists(st.floats(0.0, 1e4, allow_subnormal=False), min_size=2, max_size=30).filter(lambda xs: max(xs) > 1e-3)


class TestEmpiricalLorenz:
    def test_one_to_five(self):
        curve = empirical_lorenz([1, 2, 3, 4, 5])
        assert lorenz_eval(curve, 0.4) == pytest.approx(0.2, abs=1e-15)

    def test_society_column(self):
        curve = empirical_lorenz([3, 4, 6])
        assert lorenz_eval(curve, 2 / 3) == pytest.approx(7 / 13, abs=1e-15)

    def test_equal_values_are_diagonal(self):
        curve = empirical_lorenz([7.5, 7.5, 7.5])
        np.testing.assert_allclose(curve.knots_u, [0, 1])
        assert lorenz_eval(curve, 0.37) == pytest.approx(0.37)

    def test_ties_grouped(self):
        curve = empirical_lorenz([1, 2, 2, 5])
        np.testing.assert_allclose(curve.knots_u, [0, 0.25, 0.75, 1])
        np.testing.assert_allclose(curve.knots_s, [0, 0.1, 0.5, 1])

    def test_weights_equal_replication(self):
        a = empirical_lorenz([1, 4, 2], [2, 1, 3])
        b = empirical_lorenz([1, 1, 4, 2, 2, 2])
        np.testing.assert_allclose(a.knots_u, b.knots_u, atol=1e-15)
        np.testing.assert_allclose(a.knots_s, b.knots_s, atol=1e-15)

    def test_invalid_curve(self):
        with pytest.raises(MvLorenzError):
            LorenzCurve(np.array([0, 0.5]), np.array([0, 1]))

    def test_rejects_negative(self):
        with pytest.raises(MvLorenzError):
            empirical_lorenz([1, -1, 2])


class TestLorenzEval:
    def test_midpoint_interpolation(self):
        assert lorenz_eval(empirical_lorenz([1, 2, 3, 4, 5]), 0.5) == pytest.approx(0.3, abs=1e-15)

    def test_endpoints(self):
        curve = empirical_lorenz([1, 9, 3])
        assert lorenz_eval(curve, 0) == 0
        assert lorenz_eval(curve, 1) == 1

    @pytest.mark.parametrize("u", [-0.1, 1.1, math.nan])
    def test_out_of_range(self, u):
        with pytest.raises(OutOfRangeError):
            lorenz_eval(empirical_lorenz([1, 2]), u)

    def test_vectorized(self):
        out = lorenz_eval(empirical_lorenz([1, 2, 3, 4, 5]), np.array([0.0, 0.4, 1.0]))
        np.testing.assert_allclose(out, [0, 0.2, 1])


class TestInverseLorenz:
    def test_diagonal(self):
        assert inverse_lorenz_eval(empirical_lorenz([2, 2]), 0.42) == pytest.approx(0.42)

    def test_point_mass_at_zero(self):
        assert inverse_lorenz_eval(empirical_lorenz([0, 0, 1, 1]), 0) == 0.5

    def test_no_zero_mass(self):
        assert inverse_lorenz_eval(empirical_lorenz([1, 2, 3]), 0) == 0

    def test_inverts_example(self):
        assert inverse_lorenz_eval(empirical_lorenz([1, 2, 3, 4, 5]), 0.2) == pytest.approx(0.4)

    def test_out_of_range(self):
        with pytest.raises(OutOfRangeError):
            inverse_lorenz_eval(empirical_lorenz([1, 2]), 1.5)

    @settings(max_examples=80, deadline=None)
    @given(positive_lists, st.floats(0.001, 1.0))
    def test_round_trip(self, xs, s):
        curve = empirical_lorenz(xs)
        u = inverse_lorenz_eval(curve, s)
        assert lorenz_eval(curve, u) == pytest.approx(s, abs=1e-12)
        if u > 1e-9:
            assert lorenz_eval(curve, max(u - 1e-7, 0.0)) < s + 1e-12


class TestGini:
    def test_trapezoid_one_to_five(self):
        assert gini([1, 2, 3, 4, 5]) == pytest.approx(4 / 15, abs=1e-15)

    def test_plugin_one_to_five(self):
        assert gini([1, 2, 3, 4, 5], convention=PLUGIN) == pytest.approx(1 / 15, abs=1e-15)

    def test_equal_values_trapezoid(self):
        assert gini([3, 3, 3]) == pytest.approx(0.0, abs=1e-15)

    def test_equal_values_plugin_follows_tie_rule(self):
        # every pseudo-observation of a constant column is 1
        assert gini([3, 3, 3], convention=PLUGIN) == pytest.approx(-1.0, abs=1e-15)

    def test_unknown_convention(self):
        with pytest.raises(MvLorenzError):
            gini([1, 2], convention="bogus")

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(0.01, 1e3), min_size=2, max_size=25, unique=True))
    def test_plugin_gap_is_one_over_n(self, xs):
        assert gini(xs, convention=TRAPEZOID) - gini(xs, convention=PLUGIN) == pytest.approx(
            1 / len(xs), abs=1e-12
        )

    @settings(max_examples=100, deadline=None)
    @given(positive_lists, st.floats(1e-3, 1e3))
    def test_scale_invariance(self, xs, c):
        for conv in (TRAPEZOID, PLUGIN):
            assert gini([c * x for x in xs], convention=conv) == pytest.approx(
                gini(xs, convention=conv), abs=1e-12
            )

    @settings(max_examples=100, deadline=None)
    @given(positive_lists)
    def test_convexity(self, xs):
        slopes = empirical_lorenz(xs).slopes
        assert np.all(np.diff(slopes) >= -1e-9 * max(1.0, slopes.max()))
        curve = empirical_lorenz(xs)
        assert np.all(curve.knots_s <= curve.knots_u + 1e-12)

    def test_matches_pairwise_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            x = rng.exponential(size=rng.integers(2, 40))
            w = rng.uniform(0.1, 4, size=x.size)
            assert gini(x, w) == pytest.approx(pairwise_gini(x, w), abs=1e-10)

    def test_conventions_agree_for_large_samples(self):
        rng = np.random.default_rng(11)
        n = 5000
        x = rng.uniform(size=n)
        assert abs(gini(x) - gini(x, convention=PLUGIN)) <= 5 / n

    def test_star_column_ties(self):
        np.testing.assert_allclose(star_column([5, 5, 5]), [1, 1, 1])
        np.testing.assert_allclose(star_column([2, 1, 1]), [1, 0.5, 0.5])
