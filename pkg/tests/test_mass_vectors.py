import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcoal import (
    Exponential,
    MassVector,
    Pareto,
    PointMass,
    QuantileSpec,
    TabulatedInverse,
    generalized_er,
    limit_params_er,
    limit_params_general,
    quantile_masses,
    read_mass_csv,
    unit_masses,
    write_mass_csv,
)


class TestMassVector:
    def test_sorted_non_increasing_and_zeros_stripped(self):
        mv = MassVector([0.5, 2.0, 0.0, 1.0, 0.0])
        assert mv.masses.tolist() == [2.0, 1.0, 0.5]
        assert mv.kappa == 3

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            MassVector([1.0, -0.1])

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            MassVector([0.0, 0.0])

    def test_immutable(self):
        mv = unit_masses(3)
        with pytest.raises(AttributeError):
            mv.masses = np.ones(2)
        with pytest.raises(ValueError):
            mv.masses[0] = 7.0

    def test_scaled(self):
        mv = MassVector([2.0, 1.0]).scaled(2.0)
        assert mv.masses.tolist() == [4.0, 2.0]
        with pytest.raises(ValueError):
            mv.scaled(0.0)

    @given(
        st.lists(st.floats(min_value=1e-6, max_value=1e3), min_size=1, max_size=60)
    )
    @settings(max_examples=200, deadline=None)
    def test_cauchy_schwarz(self, masses):
        s = MassVector(masses).summary()
        assert s.sigma1**2 <= s.kappa * s.sigma2 * (1 + 1e-12)


class TestGenerators:
    def test_unit_masses(self):
        assert unit_masses(3).masses.tolist() == [1.0, 1.0, 1.0]
        s = unit_masses(10).summary()
        assert (s.sigma1, s.sigma2, s.kappa) == (10.0, 10.0, 10)
        with pytest.raises(ValueError):
            unit_masses(0)

    def test_generalized_er(self):
        mv = generalized_er(3, [2.0])
        assert mv.masses.tolist() == [2.0, 1.0, 1.0, 1.0]
        s = mv.summary()
        assert (s.sigma1, s.sigma2, s.kappa) == (5.0, 7.0, 4)

    def test_generalized_er_empty_perturbation(self):
        assert generalized_er(4, []) == unit_masses(4)

    def test_generalized_er_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            generalized_er(3, [2.0, 0.0])

    def test_point_mass_quantiles(self):
        # w = (1, 1, 1, 0): the n-th weight is the conventional zero
        mv = quantile_masses(4, PointMass(1.0))
        assert mv.kappa == 3
        np.testing.assert_allclose(mv.masses, 1 / math.sqrt(3.0))

    def test_pareto_quantiles(self):
        mv = quantile_masses(4, Pareto(3.0))
        w = np.array([4.0 ** (1 / 3), 2.0 ** (1 / 3), (4.0 / 3.0) ** (1 / 3)])
        np.testing.assert_allclose(mv.masses, w / math.sqrt(w.sum()), rtol=1e-14)

    @pytest.mark.parametrize("spec", [Pareto(2.5), Exponential(1.3)])
    def test_sigma2_is_weight_ratio(self, spec):
        # sigma2 of the normalized vector equals sum(w^2)/sum(w)
        n = 50
        w = spec.tail_value(np.arange(1, n + 1) / n)
        s = quantile_masses(n, spec).summary()
        assert s.sigma2 == pytest.approx(np.sum(w**2) / np.sum(w), rel=1e-12)

    @pytest.mark.parametrize("spec", [Pareto(3.0), Exponential(0.7)])
    def test_unbounded_support_drops_one_weight(self, spec):
        for n in (2, 17, 64):
            assert quantile_masses(n, spec).kappa == n - 1

    def test_quantile_needs_two_points(self):
        with pytest.raises(ValueError):
            quantile_masses(1, PointMass(1.0))

    def test_degenerate_distribution(self):
        class Zero(QuantileSpec):
            mean = 1.0
            second_moment = 1.0

            def tail_value(self, x):
                return np.zeros_like(np.asarray(x, dtype=float))

        with pytest.raises(ValueError, match="degenerate"):
            quantile_masses(5, Zero())

    @pytest.mark.parametrize(
        "spec",
        [Pareto(3.0), Exponential(2.0), PointMass(1.5)],
        ids=["pareto", "exponential", "pointmass"],
    )
    def test_moment_convergence(self, spec):
        # sigma1/sqrt(n) -> sqrt(E W) and sigma2 -> E W^2 / E W with
        # shrinking error along n = 1e2, 1e3, 1e4
        err1, err2 = [], []
        for n in (100, 1000, 10_000):
            s = quantile_masses(n, spec).summary()
            err1.append(abs(s.sigma1 / math.sqrt(n) - math.sqrt(spec.mean)))
            err2.append(abs(s.sigma2 - spec.second_moment / spec.mean))
        assert err1[0] >= err1[1] >= err1[2]
        assert err2[0] >= err2[1] >= err2[2]


class TestQuantileSpecs:
    def test_pareto_needs_finite_second_moment(self):
        with pytest.raises(ValueError):
            Pareto(2.0)

    def test_pareto_moments(self):
        spec = Pareto(3.0)
        assert spec.mean == 1.5
        assert spec.second_moment == 3.0

    def test_exponential_moments(self):
        spec = Exponential(2.0)
        assert spec.mean == 0.5
        assert spec.second_moment == 0.5

    def test_inv_cdf_matches_tail(self):
        spec = Pareto(3.0)
        u = np.array([0.2, 0.5, 0.9])
        np.testing.assert_allclose(spec.inv_cdf(u), spec.tail_value(1 - u))

    def test_tail_is_non_increasing(self):
        x = np.linspace(0.01, 1.0, 200)
        for spec in (Pareto(2.2), Exponential(0.5), PointMass(2.0)):
            vals = spec.tail_value(x)
            assert np.all(np.diff(vals) <= 1e-12)

    def test_tabulated_step_lookup(self):
        spec = TabulatedInverse(
            knots=[0.25, 0.5, 1.0],
            values=[3.0, 2.0, 0.0],
            mean=1.0,
            second_moment=2.0,
        )
        np.testing.assert_allclose(
            spec.tail_value([0.1, 0.25, 0.3, 0.5, 0.99, 1.0]), [3, 3, 3, 2, 2, 0]
        )

    def test_tabulated_rejects_increasing_values(self):
        with pytest.raises(ValueError):
            TabulatedInverse([0.2, 0.8], [1.0, 2.0], mean=1.0, second_moment=1.0)

    def test_tabulated_quantile_masses(self):
        # two-level weight distribution: tail drops to 1 at the 0.75 knot
        spec = TabulatedInverse(
            knots=[0.25, 0.75], values=[2.0, 1.0], mean=1.5, second_moment=2.5
        )
        mv = quantile_masses(4, spec)
        # w = (2, 2, 1, 0) at x = 1/4, 1/2, 3/4, 1 -> l = 5
        np.testing.assert_allclose(
            mv.masses, np.array([2.0, 2.0, 1.0]) / math.sqrt(5.0), rtol=1e-14
        )


class TestLimitParams:
    def test_er_params(self):
        p = limit_params_er(100)
        assert (p.varkappa, p.varsigma, p.alpha, p.beta1, p.beta2) == (100, 100, 1.0, 0.0, 0.0)

    def test_alpha_outside_unit_interval_rejected(self):
        s = unit_masses(10).summary()
        with pytest.raises(ValueError, match="alpha"):
            limit_params_general(s, 10, 10, 1.2)

    def test_unit_masses_zero_discrepancies(self):
        s = unit_masses(10).summary()
        _, d = limit_params_general(s, 10, 10, 1.0)
        assert d.kappa_discrepancy == 0.0
        assert d.alpha_discrepancy == 0.0

    def test_ger_discrepancies(self):
        # n=1e4, m=100 thetas of 2: kappa term exactly 1, alpha term
        # 2*sum(theta)/sqrt(n) + (sum(theta)/sqrt(n))^2/sqrt(n) = 4.04
        n, m, theta = 10_000, 100, 2.0
        s = generalized_er(n, np.full(m, theta)).summary()
        _, d = limit_params_general(s, n, n, 1.0, beta1=1.0, beta2=4.0)
        assert d.kappa_discrepancy == pytest.approx(1.0, abs=1e-12)
        assert d.alpha_discrepancy == pytest.approx(4.04, rel=1e-9)

    def test_nr_pareto_limit_constants(self):
        # E W = 3/2, E W^2 = 3 give varsigma 2 and alpha 3/4; the
        # signed alpha discrepancy shrinks with n and stays negative
        spec = Pareto(3.0)
        assert spec.second_moment / spec.mean == 2.0
        assert spec.mean**2 / spec.second_moment == 0.75
        discrepancies = []
        for n in (100, 1000, 10_000):
            s = quantile_masses(n, spec).summary()
            _, d = limit_params_general(s, n, 2.0, 0.75)
            discrepancies.append(d.alpha_discrepancy)
        assert all(d < 0 for d in discrepancies)
        assert abs(discrepancies[0]) > abs(discrepancies[1]) > abs(discrepancies[2])


def test_mass_csv_roundtrip(tmp_path):
    mv = quantile_masses(6, Pareto(2.5))
    path = tmp_path / "masses.csv"
    write_mass_csv(mv, path)
    back = read_mass_csv(path, n_label=6)
    assert back == mv


def test_mass_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "masses.csv"
    path.write_text("weight\n1.0\n")
    with pytest.raises(ValueError):
        read_mass_csv(path)
