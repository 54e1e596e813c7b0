"""Breakpoint planner: node fills, trade-off and capped solves, dual link."""

import numpy as np
import pytest

from inertia_market import (
    Agent,
    CostCurve,
    DisturbanceBudget,
    GridError,
    InfeasibleError,
    ScenarioError,
    case_study,
    dual_gamma_iterate,
    node_fill_cost,
    regulatory_allocation,
    solve_centralized_hard,
    solve_centralized_soft,
    worst_case_metric,
)

from helpers import grid_search_objective, random_market

LEVEL = 10.0 / 0.29  # required level of the bundled study


def case_inputs(use="cost"):
    scn = case_study()
    return scn, scn.m0, scn.market_agents(use), scn.budget


class TestCostCurve:
    def test_evaluation(self):
        curve = CostCurve(((2.0, 1.0), (3.0, 4.0)))
        assert curve.value(0.0) == 0.0
        assert curve.value(1.0) == pytest.approx(1.0)
        assert curve.value(2.0) == pytest.approx(2.0)
        assert curve.value(4.0) == pytest.approx(2.0 + 2 * 4.0)
        assert curve.value(99.0) == pytest.approx(2.0 + 3 * 4.0)  # clamped at cap
        assert curve.cap == pytest.approx(5.0)

    def test_convexity_enforced(self):
        with pytest.raises(ScenarioError, match="nondecreasing"):
            CostCurve(((1.0, 5.0), (1.0, 2.0)))
        with pytest.raises(ScenarioError, match="width"):
            CostCurve(((0.0, 1.0),))
        with pytest.raises(ScenarioError, match="price"):
            CostCurve(((1.0, -1.0),))


class TestNodeFillCost:
    def test_bus_two_case_data(self):
        agents = [
            Agent("2a", 0, CostCurve.linear(1.0, 20.0)),
            Agent("2b", 0, CostCurve.linear(5.0, 40.0)),
            Agent("2c", 0, CostCurve.linear(1.0, 60.0)),
        ]
        cost, fills = node_fill_cost(agents, LEVEL, 12.41408556)
        np.testing.assert_allclose(fills, [11.0343, 0.0, 11.0343], atol=1e-4)
        assert cost == pytest.approx(22.069, abs=1e-3)

    def test_bus_four_case_data(self):
        prices = [5.0, 5.0, 1.0, 5.0, 10.0, 5.0, 5.0]
        caps = [20.0, 40.0, 20.0, 40.0, 20.0, 40.0, 20.0]
        agents = [
            Agent(f"4{chr(97 + k)}", 0, CostCurve.linear(p, c))
            for k, (p, c) in enumerate(zip(prices, caps))
        ]
        cost, fills = node_fill_cost(agents, LEVEL, 7.219268219)
        np.testing.assert_allclose(
            fills, [1.4527, 1.4527, 20.0, 1.4527, 0.0, 1.4527, 1.4527], atol=1e-4
        )
        assert cost == pytest.approx(56.32, abs=1e-2)

    def test_no_deficit_no_fill(self):
        agents = [Agent("a", 0, CostCurve.linear(1.0, 5.0))]
        cost, fills = node_fill_cost(agents, 1.0, 2.0)
        assert cost == 0.0
        assert fills == [0.0]

    def test_equal_split_clips_and_resplits(self):
        agents = [
            Agent("small", 0, CostCurve.linear(2.0, 1.0)),
            Agent("large", 0, CostCurve.linear(2.0, 10.0)),
        ]
        cost, fills = node_fill_cost(agents, 8.0, 0.0)
        np.testing.assert_allclose(fills, [1.0, 7.0])
        assert cost == pytest.approx(16.0)

    def test_capacity_exceeded(self):
        agents = [Agent("a", 0, CostCurve.linear(1.0, 2.0))]
        with pytest.raises(InfeasibleError, match="exceeds"):
            node_fill_cost(agents, 5.0, 1.0)


def single_bus_instance():
    agents = [
        Agent("A", 0, CostCurve.linear(1.0, 2.0)),
        Agent("B", 0, CostCurve.linear(3.0, 10.0)),
    ]
    return np.array([1.0]), agents, DisturbanceBudget(1.0, 1)


class TestSoftSolve:
    def test_single_bus_analytic_oracle(self):
        # Fill with A while 16 / level^2 >= 1 up to its cap; B stays out
        # because 16 / 9 < 3 at the switch point, so the optimum sits at
        # level 3 with objective 16/3 + 2.
        m0, agents, budget = single_bus_instance()
        alloc = solve_centralized_soft(16.0, m0, agents, budget)
        assert alloc.level == pytest.approx(3.0, rel=1e-12)
        np.testing.assert_allclose(alloc.mu, [2.0, 0.0], atol=1e-12)
        assert alloc.objective == pytest.approx(16.0 / 3.0 + 2.0, rel=1e-12)

    def test_tiny_gamma_procures_nothing(self):
        m0, agents, budget = single_bus_instance()
        alloc = solve_centralized_soft(1e-9, m0, agents, budget)
        np.testing.assert_array_equal(alloc.mu, 0.0)
        assert alloc.level == pytest.approx(1.0)

    def test_no_agents_returns_zero(self):
        budget = DisturbanceBudget(2.0, 2)
        alloc = solve_centralized_soft(5.0, np.array([1.0, 2.0]), [], budget)
        assert alloc.mu.shape == (0,)
        np.testing.assert_allclose(alloc.m, [1.0, 2.0])

    def test_stationarity_reproduces_capped_allocation(self):
        # Sum of active marginal prices at the case-study level is 12, so
        # gamma = 12 L^2 / pi_tot makes the trade-off solve land there.
        scn, m0, agents, budget = case_inputs()
        gamma = 12.0 * LEVEL**2 / budget.pi_tot
        soft = solve_centralized_soft(gamma, m0, agents, budget)
        hard = solve_centralized_hard(0.29, m0, agents, budget)
        assert soft.level == pytest.approx(LEVEL, rel=1e-12)
        np.testing.assert_allclose(soft.mu, hard.mu, atol=1e-9)

    def test_matches_grid_search_oracle(self):
        rng = np.random.default_rng(101)
        for _ in range(60):
            m0, agents, budget = random_market(rng)
            gamma = float(np.exp(rng.uniform(np.log(0.1), np.log(100.0))))
            alloc = solve_centralized_soft(gamma, m0, agents, budget)
            best, _ = grid_search_objective(gamma, m0, agents, budget)
            assert alloc.objective <= best + 1e-3
            assert alloc.objective >= best - 1e-3 - 1e-9

    def test_allocation_feasible_and_composed(self):
        rng = np.random.default_rng(103)
        for _ in range(40):
            m0, agents, budget = random_market(rng)
            gamma = float(np.exp(rng.uniform(np.log(0.1), np.log(100.0))))
            alloc = solve_centralized_soft(gamma, m0, agents, budget)
            for ag, q in zip(agents, alloc.mu):
                assert -1e-12 <= q <= ag.cap + 1e-9
            m = np.array(m0)
            for ag, q in zip(agents, alloc.mu):
                m[ag.bus] += q
            np.testing.assert_array_equal(m, alloc.m)

    def test_valley_filling(self):
        # Every bus that receives inertia ends exactly at the common level.
        rng = np.random.default_rng(107)
        seen_fill = 0
        for _ in range(40):
            m0, agents, budget = random_market(rng)
            gamma = float(np.exp(rng.uniform(np.log(1.0), np.log(200.0))))
            alloc = solve_centralized_soft(gamma, m0, agents, budget)
            filled = np.zeros(len(m0), dtype=bool)
            for ag, q in zip(agents, alloc.mu):
                if q > 1e-12:
                    filled[ag.bus] = True
            if filled.any():
                seen_fill += 1
                np.testing.assert_allclose(
                    alloc.m[filled], alloc.level, rtol=1e-9, atol=1e-9
                )
        assert seen_fill > 5  # the property must actually have been exercised


class TestHardSolve:
    def test_case_study_cost(self):
        scn, m0, agents, budget = case_inputs()
        alloc = solve_centralized_hard(0.29, m0, agents, budget)
        assert alloc.total_cost == pytest.approx(201.6306, abs=0.01)
        assert worst_case_metric(alloc.m, budget).gamma == pytest.approx(0.29, abs=1e-9)

    def test_slack_cap_procures_nothing(self):
        m0, agents, budget = single_bus_instance()
        alloc = solve_centralized_hard(2.0, m0, agents, budget)  # Gamma(m0) = 1 <= 2
        np.testing.assert_array_equal(alloc.mu, 0.0)
        assert alloc.total_cost == 0.0

    def test_unreachable_cap_reports_blocking_bus(self):
        m0, agents, budget = single_bus_instance()
        with pytest.raises(InfeasibleError) as exc_info:
            solve_centralized_hard(1e-3, m0, agents, budget)  # would need level 1000
        assert exc_info.value.bus == 0

    def test_agrees_with_dual_iteration(self):
        rng = np.random.default_rng(109)
        checked = 0
        for _ in range(30):
            m0, agents, budget = random_market(rng)
            base = worst_case_metric(m0, budget).gamma
            gamma_bar = float(base * rng.uniform(0.5, 1.2))
            try:
                hard = solve_centralized_hard(gamma_bar, m0, agents, budget)
            except InfeasibleError:
                continue
            gamma_star, dual = dual_gamma_iterate(gamma_bar, m0, agents, budget)
            assert dual.total_cost == pytest.approx(
                hard.total_cost, rel=1e-6, abs=1e-9
            )
            checked += 1
        assert checked > 10


class TestDualGammaIterate:
    def test_case_study_multiplier(self):
        scn, m0, agents, budget = case_inputs()
        gamma_star, alloc = dual_gamma_iterate(0.29, m0, agents, budget)
        assert 1426.8 <= gamma_star <= 1427.0
        assert alloc.total_cost == pytest.approx(201.63, abs=0.01)

    def test_single_bus_bracket(self):
        # At the cap 1/3 the required level 3 is a supply breakpoint, so any
        # multiplier between the bracketing slopes solves it; assert the
        # worst case, not a unique multiplier.
        m0, agents, budget = single_bus_instance()
        gamma_star, alloc = dual_gamma_iterate(1.0 / 3.0, m0, agents, budget)
        assert 9.0 - 1e-6 <= gamma_star <= 27.0 + 1e-6
        assert worst_case_metric(alloc.m, budget).gamma == pytest.approx(1.0 / 3.0, rel=1e-7)

    def test_slack_cap_returns_zero_multiplier(self):
        m0, agents, budget = single_bus_instance()
        gamma_star, alloc = dual_gamma_iterate(5.0, m0, agents, budget)
        assert gamma_star == 0.0
        np.testing.assert_array_equal(alloc.mu, 0.0)


class TestRegulatory:
    def test_bus_two_proportions(self):
        scn, m0, agents, budget = case_inputs()
        alloc = regulatory_allocation(0.29, m0, agents, budget)
        by_id = {ag.id: alloc.mu[k] for k, ag in enumerate(scn.agents)}
        assert by_id["2a"] == pytest.approx(3.678, abs=1e-3)
        assert by_id["2b"] == pytest.approx(7.356, abs=1e-3)
        assert by_id["2c"] == pytest.approx(11.034, abs=1e-3)

    def test_capacity_proportional_at_every_bus(self):
        scn, m0, agents, budget = case_inputs()
        alloc = regulatory_allocation(0.29, m0, agents, budget)
        for i, label in enumerate(scn.bus_labels):
            members = [k for k, ag in enumerate(agents) if ag.bus == i]
            deficit = max(0.0, LEVEL - m0[i])
            total_cap = sum(agents[k].cap for k in members)
            for k in members:
                expected = deficit * agents[k].cap / total_cap if members else 0.0
                assert alloc.mu[k] == pytest.approx(expected, rel=1e-12, abs=1e-12)

    def test_meets_cap_and_dominates_optimum(self):
        rng = np.random.default_rng(113)
        checked = 0
        for _ in range(40):
            m0, agents, budget = random_market(rng)
            base = worst_case_metric(m0, budget).gamma
            gamma_bar = float(base * rng.uniform(0.5, 1.2))
            try:
                reg = regulatory_allocation(gamma_bar, m0, agents, budget)
                hard = solve_centralized_hard(gamma_bar, m0, agents, budget)
            except InfeasibleError:
                continue
            assert worst_case_metric(reg.m, budget).gamma <= gamma_bar + 1e-9
            assert reg.total_cost >= hard.total_cost - 1e-9
            checked += 1
        assert checked > 10


def test_gamma_must_be_positive():
    m0, agents, budget = single_bus_instance()
    with pytest.raises(GridError, match="gamma"):
        solve_centralized_soft(0.0, m0, agents, budget)
