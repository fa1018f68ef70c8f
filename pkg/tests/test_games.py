"""Payoff assembly, best responses, exact game values, fictitious play."""

import numpy as np
import pytest

from minimax_bayes import (
    InfeasibleRestrictionError,
    PayoffMatrix,
    RestrictedPriorSet,
    enumerate_policies,
    exact_game_value,
    fictitious_play,
    grid_game_value,
    nature_best_response,
    nature_best_response_constrained,
    payoff_matrix,
    simplex_grid,
    state_values,
    utility,
)
from conftest import make_set, uniform_init


def seeded_payoff(seed, n=5, m=4, scale=0.8):
    rng = np.random.default_rng(seed)
    return PayoffMatrix(rng.uniform(-scale, scale, (n, m)))


class TestPayoffMatrix:
    def test_identical_worlds_identical_columns(self):
        mdps = make_set(1, num=1)
        ps = enumerate_policies(2, 2)
        init = uniform_init(2)
        pm = payoff_matrix([mdps[0], mdps[0]], ps, init)
        assert np.array_equal(pm.values[:, 0], pm.values[:, 1])

    def test_one_by_one_equals_utility(self):
        mdps = make_set(2, num=1)
        ps = enumerate_policies(2, 2)
        sub = enumerate_policies(2, 2).actions[:1]
        from minimax_bayes import PolicySet

        pm = payoff_matrix(mdps, PolicySet(sub), uniform_init(2))
        assert pm.values.shape == (1, 1)
        assert pm.values[0, 0] == pytest.approx(
            utility(mdps[0], sub[0], uniform_init(2)), abs=1e-12
        )

    def test_matches_entrywise_recomputation(self):
        mdps = make_set(3, num=3)
        ps = enumerate_policies(2, 2)
        init = uniform_init(2)
        pm = payoff_matrix(mdps, ps, init)
        assert pm.values.shape == (4, 3)
        for i in range(4):
            for m in range(3):
                expected = float(init @ state_values(mdps[m], ps.actions[i]))
                assert pm.values[i, m] == pytest.approx(expected, abs=1e-12)

    def test_threaded_assembly_is_identical(self):
        mdps = make_set(4, num=4)
        ps = enumerate_policies(2, 2)
        init = uniform_init(2)
        serial = payoff_matrix(mdps, ps, init, max_threads=1)
        threaded = payoff_matrix(mdps, ps, init, max_threads=4)
        assert np.array_equal(serial.values, threaded.values)


class TestNatureBestResponse:
    def test_single_world(self):
        pm = seeded_payoff(0, n=3, m=1)
        assert nature_best_response(np.full(3, 1 / 3), pm).tolist() == [1.0]

    def test_dominant_column(self):
        values = np.array([[0.5, -0.9, 0.1], [0.2, -0.8, 0.0]])
        belief = nature_best_response(np.array([0.6, 0.4]), PayoffMatrix(values))
        assert belief.tolist() == [0.0, 1.0, 0.0]

    def test_matches_linear_scan(self, rng):
        pm = seeded_payoff(7, n=5, m=4)
        for _ in range(20):
            q = rng.dirichlet(np.ones(5))
            belief = nature_best_response(q, pm)
            averages = [q @ pm.values[:, m] for m in range(4)]
            assert int(np.argmax(belief)) == int(np.argmin(averages))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            nature_best_response([0.5, 0.5], seeded_payoff(1, n=3, m=2))


class TestConstrainedBestResponse:
    def test_vacuous_band_recovers_the_vertex(self):
        pm = seeded_payoff(11, n=4, m=3)
        q = np.full(4, 0.25)
        phi = np.random.default_rng(5).normal(size=(3, 2))
        restriction = RestrictedPriorSet(phi, phi.mean(axis=0), tolerance=1e6)
        free = nature_best_response(q, pm)
        constrained = nature_best_response_constrained(q, pm, restriction)
        assert constrained == pytest.approx(free, abs=1e-9)

    def test_singleton_feasible_set(self):
        pm = seeded_payoff(12, n=3, m=3)
        target_belief = np.array([0.2, 0.5, 0.3])
        restriction = RestrictedPriorSet(np.eye(3), target_belief, tolerance=0.0)
        got = nature_best_response_constrained(np.full(3, 1 / 3), pm, restriction)
        assert got == pytest.approx(target_belief, abs=1e-9)

    def test_matches_grid_search(self):
        # One active scalar constraint on a 3-world game, checked against a
        # 1e-3-step sweep of the simplex.
        pm = seeded_payoff(13, n=4, m=3)
        q = np.array([0.4, 0.3, 0.2, 0.1])
        phi = np.array([[0.0], [1.0], [2.0]])
        restriction = RestrictedPriorSet(phi, np.array([1.2]), tolerance=0.05)
        belief = nature_best_response_constrained(q, pm, restriction)
        objective = float(q @ pm.values @ belief)

        cost = q @ pm.values
        best = np.inf
        for chunk in simplex_grid(3, 1000):
            stats = chunk @ phi
            feasible = np.abs(stats[:, 0] - 1.2) <= 0.05
            if feasible.any():
                best = min(best, float((chunk[feasible] @ cost).min()))
        assert objective == pytest.approx(best, abs=1e-3)
        assert abs(float(phi[:, 0] @ belief) - 1.2) <= 0.05 + 1e-9

    def test_objective_no_worse_than_feasible_vertices(self):
        pm = seeded_payoff(14, n=4, m=3)
        q = np.full(4, 0.25)
        phi = np.array([[0.0], [1.0], [2.0]])
        restriction = RestrictedPriorSet(phi, np.array([1.0]), tolerance=1.1)
        belief = nature_best_response_constrained(q, pm, restriction)
        objective = float(q @ pm.values @ belief)
        cost = q @ pm.values
        for vertex in np.eye(3):
            if abs(float(phi[:, 0] @ vertex) - 1.0) <= 1.1:
                assert objective <= float(cost @ vertex) + 1e-9

    def test_infeasible_raises(self):
        pm = seeded_payoff(15, n=3, m=2)
        restriction = RestrictedPriorSet(np.array([[0.0], [1.0]]), np.array([5.0]), tolerance=0.1)
        with pytest.raises(InfeasibleRestrictionError):
            nature_best_response_constrained(np.full(3, 1 / 3), pm, restriction)


class TestExactGameValue:
    def test_pure_saddle(self):
        # Row 0 dominates for the maximizer; column 1 dominates for the minimizer.
        values = np.array([[0.4, 0.2, 0.9], [0.1, 0.0, 0.3]])
        solution = exact_game_value(PayoffMatrix(values))
        assert solution.value == pytest.approx(0.2, abs=1e-9)

    def test_matching_pennies(self):
        solution = exact_game_value(PayoffMatrix(np.array([[1.0, -1.0], [-1.0, 1.0]])))
        assert solution.value == pytest.approx(0.0, abs=1e-9)
        assert solution.policy_dist == pytest.approx([0.5, 0.5], abs=1e-9)
        assert solution.belief == pytest.approx([0.5, 0.5], abs=1e-9)

    def test_degenerate_constant_matrix(self):
        solution = exact_game_value(PayoffMatrix(np.full((3, 2), 0.25)))
        assert solution.value == 0.25
        assert solution.policy_dist == pytest.approx(np.full(3, 1 / 3))
        assert solution.belief == pytest.approx([0.5, 0.5])

    def test_six_by_four_against_grid_search(self):
        pm = seeded_payoff(21, n=6, m=4)
        solution = exact_game_value(pm)
        # Nature-side lattice at the target resolution approaches the value
        # from above; the policy-side lattice is far too large at 1e-2 for six
        # rows, so a coarser sweep brackets from below.
        upper = grid_game_value(pm, 0.01, side="nature")
        lower = grid_game_value(pm, 0.05, side="policy")
        assert abs(solution.value - upper) <= 1e-2
        assert lower - 1e-9 <= solution.value <= upper + 1e-9

    @pytest.mark.parametrize("seed", range(8))
    def test_duality_and_exchange(self, seed):
        pm = seeded_payoff(100 + seed, n=5, m=3)
        solution = exact_game_value(pm)
        guaranteed = float((solution.policy_dist @ pm.values).min())
        conceded = float((pm.values @ solution.belief).max())
        assert abs(conceded - guaranteed) <= 1e-7
        assert guaranteed >= conceded - 1e-7  # the exchange inequality is tight here
        assert solution.duality_gap <= 1e-7

    def test_vertex_best_response_equals_simplex_minimum(self):
        # The inner minimum over the belief simplex is attained at a vertex;
        # the lattice contains every vertex, so the two minima coincide.
        pm = seeded_payoff(31, n=4, m=3)
        rng = np.random.default_rng(2)
        for _ in range(5):
            q = rng.dirichlet(np.ones(4))
            cost = q @ pm.values
            vertex_min = cost.min()
            grid_min = min(float((chunk @ cost).min()) for chunk in simplex_grid(3, 50))
            assert grid_min == pytest.approx(vertex_min, abs=1e-12)


class TestFictitiousPlay:
    def test_strict_saddle_locks_in_one_round(self):
        values = np.array([[0.4, 0.2, 0.9], [0.1, 0.0, 0.3]])
        solution = fictitious_play(PayoffMatrix(values), rounds=1)
        assert solution.policy_dist.tolist() == [1.0, 0.0]
        assert solution.belief.tolist() == [0.0, 1.0, 0.0]
        assert solution.duality_gap == pytest.approx(0.0, abs=1e-12)

    def test_matching_pennies_mixtures(self):
        solution = fictitious_play(np.array([[1.0, -1.0], [-1.0, 1.0]]), rounds=10_000)
        assert solution.policy_dist == pytest.approx([0.5, 0.5], abs=0.05)
        assert solution.belief == pytest.approx([0.5, 0.5], abs=0.05)

    @pytest.mark.parametrize("seed", range(5))
    def test_interval_brackets_exact_value(self, seed):
        pm = seeded_payoff(200 + seed, n=4, m=3)
        exact = exact_game_value(pm).value
        solution = fictitious_play(pm, rounds=3000)
        lower = float((solution.policy_dist @ pm.values).min())
        upper = float((pm.values @ solution.belief).max())
        assert lower - 1e-9 <= exact <= upper + 1e-9
        assert solution.duality_gap >= -1e-12

    def test_converging_estimate_stream_shrinks_the_gap(self):
        pm = seeded_payoff(42, n=4, m=3)
        noise = np.random.default_rng(3).normal(size=pm.values.shape)

        def stream(k):
            return pm.values + noise / np.sqrt(k)

        short = fictitious_play(stream, rounds=40)
        long = fictitious_play(stream, rounds=4000)
        assert long.duality_gap < short.duality_gap
        assert abs(long.value - exact_game_value(pm).value) <= 0.05

    def test_rounds_validation(self):
        with pytest.raises(ValueError):
            fictitious_play(seeded_payoff(1), rounds=0)


class TestSimplexGrid:
    def test_one_dimensional(self):
        chunks = list(simplex_grid(1, 100))
        assert len(chunks) == 1
        assert chunks[0].tolist() == [[1.0]]

    def test_counts_and_coverage(self):
        points = np.concatenate(list(simplex_grid(3, 4)))
        assert points.shape == (15, 3)  # C(6, 2)
        assert np.allclose(points.sum(axis=1), 1.0)
        assert (points >= 0).all()
        for vertex in np.eye(3):
            assert (np.abs(points - vertex).sum(axis=1) < 1e-12).any()

    def test_oversized_grid_rejected(self):
        with pytest.raises(ValueError, match="too large"):
            list(simplex_grid(16, 100))
