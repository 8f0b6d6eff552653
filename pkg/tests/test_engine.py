import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from mcoal import (
    CoalescentState,
    MassVector,
    WeightedSampler,
    generalized_er,
    martingale_path,
    propose_pair,
    simulate,
    total_rate,
    unit_masses,
)
from mcoal._kernels import propose_pairs_batch, sample_k_batch
from mcoal.engine import make_generator, read_trajectory_csv, write_trajectory_csv

# hand-solved three-state chain: E[K(t)] = 1 + 3e^{-2t} - e^{-3t}
MEAN_K_UNIT3_AT_02 = 2.4621485020128918


class TestTotalRate:
    def test_unit_ten(self):
        state = CoalescentState.from_mass_vector(unit_masses(10))
        assert total_rate(state) == 45.0  # C(10, 2) pairs at rate 1

    def test_mixed_masses(self):
        state = CoalescentState.from_mass_vector(MassVector([2.0, 1.0, 1.0]))
        assert total_rate(state) == 5.0  # 2*1 + 2*1 + 1*1

    def test_single_component(self):
        state = CoalescentState.from_mass_vector(MassVector([3.0]))
        assert total_rate(state) == 0.0


class TestWeightedSampler:
    @given(
        st.lists(st.floats(min_value=0.0, max_value=100.0), min_size=1, max_size=40),
        st.lists(
            st.tuples(st.integers(min_value=0, max_value=39), st.floats(min_value=0.0, max_value=50.0)),
            max_size=20,
        ),
    )
    @settings(max_examples=150, deadline=None)
    def test_matches_naive_prefix_sums(self, weights, updates):
        sampler = WeightedSampler(weights)
        mirror = np.asarray(weights, dtype=float)
        for slot, value in updates:
            if slot < len(mirror):
                sampler.set(slot, value)
                mirror[slot] = value
        for i in range(len(mirror)):
            assert sampler.prefix(i) == pytest.approx(mirror[: i + 1].sum(), abs=1e-9)
        assert sampler.total_weight == pytest.approx(mirror.sum(), abs=1e-9)

    def test_total_weight_tolerance_after_merge_churn(self):
        # invariant check: tree total vs compensated sum of the slots
        rng = make_generator(5)
        mv = unit_masses(500)
        sampler = WeightedSampler(mv.masses)
        for _ in range(400):
            i, j = propose_pair(sampler, rng)
            sampler.set(i, sampler.get(i) + sampler.get(j))
            sampler.set(j, 0.0)
        s1 = mv.summary().sigma1
        assert abs(sampler.total_weight - math.fsum(sampler.weights.tolist())) <= 1e-9 * s1
        assert abs(sampler.total_weight - s1) <= 1e-9 * s1

    def test_sample_never_returns_empty_slot(self):
        sampler = WeightedSampler([0.0, 1.0, 0.0, 2.0])
        rng = make_generator(0)
        draws = {sampler.sample(rng) for _ in range(200)}
        assert draws <= {1, 3}

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            WeightedSampler([0.0, 0.0]).sample(make_generator(0))


class TestProposePair:
    def test_pair_law_chi_square(self):
        # frozen (2,1,1): pair probabilities 0.4 / 0.4 / 0.2
        masses = np.array([2.0, 1.0, 1.0])
        gen = make_generator(42)
        out_i, out_j = propose_pairs_batch(gen, masses, 1_000_000)
        pairs = [tuple(sorted(p)) for p in zip(out_i.tolist(), out_j.tolist())]
        counts = {(1, 2): 0, (1, 3): 0, (2, 3): 0}
        for p in pairs:
            counts[p] += 1
        observed = [counts[(1, 2)], counts[(1, 3)], counts[(2, 3)]]
        expected = [0.4 * 1e6, 0.4 * 1e6, 0.2 * 1e6]
        res = scipy.stats.chisquare(observed, f_exp=expected)
        assert res.pvalue > 0.01

    def test_acceptance_probability_formula(self):
        # per-attempt acceptance of the double draw: 1 - S2/S1^2
        s = MassVector([2.0, 1.0, 1.0]).summary()
        assert 1.0 - s.sigma2 / s.sigma1**2 == 0.625

    def test_two_components_always_that_pair(self):
        sampler = WeightedSampler([3.0, 0.5])
        rng = make_generator(1)
        for _ in range(25):
            assert tuple(sorted(propose_pair(sampler, rng))) == (0, 1)

    def test_needs_two_positive_slots(self):
        with pytest.raises(ValueError):
            propose_pair(WeightedSampler([2.0, 0.0]), make_generator(0))


class TestSimulate:
    def test_zero_horizon(self):
        traj = simulate(unit_masses(5), 0.0, seed=3)
        assert traj.n_events == 0
        assert traj.k_at(0.0) == 5

    def test_single_component_never_merges(self):
        traj = simulate(unit_masses(1), 50.0, seed=3)
        assert traj.n_events == 0

    def test_negative_horizon(self):
        with pytest.raises(ValueError):
            simulate(unit_masses(3), -1.0, seed=0)

    def test_determinism(self):
        mv = unit_masses(200)
        a = simulate(mv, 0.002, seed=77)
        b = simulate(mv, 0.002, seed=77)
        assert np.array_equal(a.times, b.times)
        assert np.array_equal(a.k_after, b.k_after)
        assert np.array_equal(a.s2_after, b.s2_after)

    def test_python_backend_matches_compiled(self):
        mv = generalized_er(150, [3.0, 2.0])
        fast = simulate(mv, 0.004, seed=11, backend="compiled")
        slow = simulate(mv, 0.004, seed=11, backend="python")
        assert np.array_equal(fast.times, slow.times)
        assert np.array_equal(fast.k_after, slow.k_after)
        assert np.array_equal(fast.s2_after, slow.s2_after)

    def test_grid_mode_matches_full_lookup(self):
        mv = unit_masses(120)
        grid = np.linspace(0.0, 0.005, 7)
        full = simulate(mv, 0.005, seed=9, record="full")
        gridded = simulate(mv, 0.005, seed=9, record=grid)
        assert np.array_equal(gridded.grid_k, full.k_at(grid))

    def test_monotonicity_and_event_bound(self):
        traj = simulate(unit_masses(60), 10.0, seed=21)  # run to absorption
        assert traj.n_events == 59
        assert np.all(np.diff(traj.times) > 0)
        assert traj.times[0] > 0
        assert np.all(np.diff(traj.k_after) == -1)
        assert np.all(np.diff(traj.s2_after) > 0)
        assert traj.k_after[-1] == 1
        assert traj.s2_after[-1] == pytest.approx(60.0**2, rel=1e-12)

    def test_mass_conservation_stepwise(self):
        # walk the public stepping ops and re-check S1 after every merge
        mv = generalized_er(40, [5.0, 2.5])
        s = mv.summary()
        sampler = WeightedSampler(mv.masses)
        rng = make_generator(13)
        for _ in range(len(mv) - 1):
            i, j = propose_pair(sampler, rng)
            sampler.set(i, sampler.get(i) + sampler.get(j))
            sampler.set(j, 0.0)
            total = math.fsum(sampler.weights.tolist())
            assert abs(total - s.sigma1) <= 1e-9 * s.sigma1

    def test_beyond_moment_bound_tag(self):
        mv = unit_masses(10)  # sigma2 = 10, window ends at 0.1
        assert not simulate(mv, 0.05, seed=1).beyond_moment_bound_window
        assert simulate(mv, 0.1, seed=1).beyond_moment_bound_window

    def test_grid_beyond_horizon_rejected(self):
        with pytest.raises(ValueError, match="beyond the horizon"):
            simulate(unit_masses(5), 0.1, seed=1, record=[0.05, 0.2])

    def test_mean_k_matches_exact_solution(self):
        reps = 40_000
        gen = make_generator(101)
        ks = sample_k_batch(gen, np.ones(3), 3.0, 3.0, 0.2, reps)
        se = ks.std(ddof=1) / math.sqrt(reps)
        assert abs(ks.mean() - MEAN_K_UNIT3_AT_02) <= 3 * se

    def test_time_change_identity(self):
        # doubling every mass is a time change t -> 4t in law
        reps = 20_000
        gen_a = make_generator(7)
        gen_b = make_generator(8)
        k_scaled = sample_k_batch(gen_a, np.full(3, 2.0), 6.0, 12.0, 0.05, reps)
        k_base = sample_k_batch(gen_b, np.ones(3), 3.0, 3.0, 0.2, reps)
        table = np.vstack(
            [np.bincount(k_scaled, minlength=4)[1:], np.bincount(k_base, minlength=4)[1:]]
        )
        res = scipy.stats.chi2_contingency(table)
        assert res.pvalue > 0.01


class TestMartingalePath:
    def test_grid_mode_rejected(self):
        traj = simulate(unit_masses(5), 0.1, seed=1, record=[0.05, 0.1])
        with pytest.raises(ValueError, match="insufficient"):
            martingale_path(traj, unit_masses(5))

    def test_starts_at_zero(self):
        mv = unit_masses(20)
        path = martingale_path(simulate(mv, 0.01, seed=2), mv)
        assert path.times[0] == 0.0
        assert path.M[0] == 0.0
        assert path.angle_M[0] == 0.0
        assert path.bracket_M[0] == 0.0

    def test_linear_compensator_before_first_merge(self):
        mv = generalized_er(15, [4.0])
        s = mv.summary()
        traj = simulate(mv, 0.01, seed=6)
        path = martingale_path(traj, mv)
        t = traj.times[0] * 0.5
        m, angle, bracket, k = path.at(t)
        assert angle == pytest.approx(t * (s.sigma1**2 - s.sigma2) / 2, rel=1e-12)
        assert bracket == 0.0
        assert k == s.kappa

    def test_bracket_equals_merge_count(self):
        mv = unit_masses(40)
        traj = simulate(mv, 0.01, seed=17)
        path = martingale_path(traj, mv)
        # exact integer identity at event times and off-grid times
        np.testing.assert_array_equal(path.bracket_M, 40 - np.concatenate([[40], traj.k_after]))
        grid = np.linspace(0.0, 0.01, 11)
        _, _, bracket, k = path.at(grid)
        np.testing.assert_array_equal(bracket, 40 - k)

    def test_m_is_k_plus_compensator(self):
        mv = unit_masses(30)
        traj = simulate(mv, 0.02, seed=23)
        path = martingale_path(traj, mv)
        k_path = np.concatenate([[30], traj.k_after])
        np.testing.assert_allclose(path.M, k_path - 30 + path.angle_M, rtol=0, atol=1e-12)

    def test_angle_non_decreasing(self):
        mv = unit_masses(30)
        path = martingale_path(simulate(mv, 0.05, seed=29), mv)
        assert np.all(np.diff(path.angle_M) >= 0)

    def test_eval_beyond_horizon_rejected(self):
        mv = unit_masses(10)
        path = martingale_path(simulate(mv, 0.01, seed=1), mv)
        with pytest.raises(ValueError):
            path.at(0.02)


class TestTrajectoryCsv:
    def test_full_roundtrip(self, tmp_path):
        mv = unit_masses(12)
        traj = simulate(mv, 0.05, seed=4)
        path = tmp_path / "t.csv"
        write_trajectory_csv(traj, path)
        header = path.read_text().splitlines()[0]
        assert header == "event_index,time,K,S2"
        back = read_trajectory_csv(path, mv.summary(), traj.t_max)
        assert np.array_equal(back.times, traj.times)
        assert np.array_equal(back.k_after, traj.k_after)
        assert np.array_equal(back.s2_after, traj.s2_after)

    def test_grid_roundtrip(self, tmp_path):
        mv = unit_masses(12)
        grid = np.linspace(0.0, 0.05, 4)
        traj = simulate(mv, 0.05, seed=4, record=grid)
        path = tmp_path / "t.csv"
        write_trajectory_csv(traj, path)
        assert path.read_text().splitlines()[0] == "t,K"
        back = read_trajectory_csv(path, mv.summary(), traj.t_max)
        assert np.array_equal(back.grid_t, traj.grid_t)
        assert np.array_equal(back.grid_k, traj.grid_k)
