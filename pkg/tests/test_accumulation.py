import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from elderculture.errors import ConvergenceError, ModelDomainError, ParameterError
from elderculture.model import GrowthParams, LifetimeProblem, Regime
from elderculture.models import accumulation


class TestIndividualChoices:

    def test_gift_share_of_lifetime_income(self):
        assert accumulation.gift_with_accumulation(0.5, 1.0, 1.0) == pytest.approx(0.25)
        assert accumulation.gift_with_accumulation(0.5, 1.0, 1.0, 0.5, 2.0) == pytest.approx(0.3125)
        assert accumulation.gift_with_accumulation(0.0, 1.0, 1.0) == 0.0

    def test_gift_needs_a_return_when_elderly_earn(self):
        with pytest.raises(ModelDomainError):
            accumulation.gift_with_accumulation(0.5, 1.0, 1.0, 0.5, None)

    def test_savings_split(self):
        allocation = accumulation.savings_allocation(1.0, 0.2, 1.0, eta_next=0.5)
        assert allocation.total == pytest.approx(0.5)
        assert allocation.inculcation_outlay == pytest.approx(0.1)
        assert allocation.savings == pytest.approx(0.4)
        assert not allocation.no_saving_motive

    def test_no_saving_motive_is_flagged(self):
        allocation = accumulation.savings_allocation(1.0, 0.2, 1.0, y_e_next=3.0, R_next=1.0)
        assert allocation.total < 0
        assert allocation.no_saving_motive

    @given(st.floats(min_value=0.1, max_value=0.8), st.floats(min_value=0.5, max_value=2.0),
           st.floats(min_value=0.2, max_value=0.5), st.floats(min_value=0.5, max_value=2.0),
           st.floats(min_value=0.0, max_value=0.4), st.floats(min_value=1.0, max_value=4.0),
           st.floats(min_value=-0.2, max_value=1.0), st.floats(min_value=0.2, max_value=0.8))
    @settings(max_examples=200)
    def test_first_order_conditions_vanish_at_analytic_choice(self, eta, beta, delta, y_m, tau, R, n, share):
        """Property: every first-order condition is zero at the closed-form choice"""
        problem = LifetimeProblem(eta=eta, beta=beta, delta=delta, y_m=y_m, y_e_next=tau * y_m, R_next=R, n=n)
        total = accumulation.savings_allocation(beta, delta, y_m, tau * y_m, R).total
        eta_next = share * total / problem.inculcation_cost
        g, s = accumulation.analytic_choice(problem, eta_next)
        focs = accumulation.first_order_conditions(problem, g, s, eta_next)
        assert np.max(np.abs(focs)) < 1e-8


class TestSteadyState:

    def test_baseline(self, growth_params):
        state = accumulation.steady_state(growth_params)
        assert state.R == pytest.approx(2.5, abs=1e-12)
        assert state.eta == pytest.approx(0.5, abs=1e-12)
        assert state.k == pytest.approx(0.04, abs=1e-12)
        assert state.consumption_ratio == pytest.approx(5.0, abs=1e-12)
        assert state.regime is Regime.INCULCATION
        assert max(abs(r) for r in accumulation.steady_state_residuals(state, growth_params).values()) < 1e-10

    def test_elderly_labour_switches_off_inculcation(self, growth_params):
        params = growth_params.with_changes(tau_e=0.5)
        state = accumulation.steady_state(params)
        assert state.regime is Regime.NO_INCULCATION
        assert state.eta == 0.0
        assert state.R == pytest.approx(3.5, abs=1e-12)
        assert state.consumption_ratio == pytest.approx(3.5, abs=1e-12)
        assert max(abs(r) for r in accumulation.steady_state_residuals(state, params).values()) < 1e-10

    def test_eta_star_simple(self):
        assert accumulation.eta_star_simple(1.0, 0.2, 0.5) == pytest.approx(0.5)
        assert accumulation.eta_star_simple(1.0, 0.2, 0.3) == 0.0

    def test_eta_at_or_above_one_is_rejected(self, growth_params):
        with pytest.raises(ParameterError):
            accumulation.steady_state(growth_params.with_changes(alpha=0.7))

    def test_regime_branches_meet(self, growth_params):
        no_inculcation, inculcation = accumulation.balanced_growth_ratio_branches(
            growth_params.with_changes(delta=0.25))
        assert no_inculcation == pytest.approx(2.0, abs=1e-12)
        assert inculcation == pytest.approx(2.0, abs=1e-12)

    def test_branches_match_steady_state(self, growth_params):
        _, inculcation = accumulation.balanced_growth_ratio_branches(growth_params)
        assert inculcation == pytest.approx(accumulation.steady_state(growth_params).consumption_ratio)

    def test_branches_need_no_elderly_labour(self, growth_params):
        with pytest.raises(ModelDomainError):
            accumulation.balanced_growth_ratio_branches(growth_params.with_changes(tau_e=0.1))

    def test_capital_threshold(self, growth_params):
        # beta / (delta (1 + beta)^2)
        assert accumulation.inculcation_capital_threshold(growth_params) == pytest.approx(1.25)

    def test_consumption_ratio_of_steady_state(self, growth_params):
        state = accumulation.steady_state(growth_params)
        assert accumulation.consumption_ratio(state, growth_params) == pytest.approx(5.0)


class TestDynamics:

    def test_explicit_path_converges_monotonically(self, growth_params):
        path = accumulation.simulate_path(growth_params, k0=0.01, horizon=60)
        assert abs(path.k[-1] - 0.04) < 1e-10
        assert np.all(np.diff(path.k) >= 0)
        assert path.diagnostics.converged

    def test_balanced_growth_with_technical_progress(self, growth_params):
        params = growth_params.with_changes(a=0.02)
        path = accumulation.simulate_path(params, k0=0.01, horizon=80)
        diagnostics = accumulation.balanced_growth_diagnostics(path, params)
        assert diagnostics['income_growth'] < 1e-8
        assert diagnostics['return'] < 1e-8
        assert diagnostics['consumption_ratio'] < 1e-8

    def test_path_consumptions_are_positive(self, growth_params):
        path = accumulation.simulate_path(growth_params, horizon=40)
        assert np.all(path.c_m > 0) and np.all(path.c_e > 0)
        assert len(path.k) == 41 and len(path.c_m) == 40

    def test_return_equilibration_holds_along_path(self, growth_params):
        path = accumulation.simulate_path(growth_params, k0=0.02, horizon=40)
        for t in range(1, 39):
            assert abs(accumulation.return_equilibration_residual(path, t)) < 1e-10

    def test_equilibration_residual_tracks_return(self, growth_params):
        path = accumulation.simulate_path(growth_params, k0=0.02, horizon=40)
        args = (path.y_m[5], path.y_e[6], path.R[6], growth_params.delta * path.y_m[4],
                growth_params.n, growth_params.beta)
        base = accumulation.equilibration_residual(path.R[5], *args)
        shifted = accumulation.equilibration_residual(path.R[5] + 0.1, *args)
        assert shifted - base == pytest.approx(0.1)

    def test_perfect_foresight_path_with_elderly_labour(self, growth_params):
        params = growth_params.with_changes(tau_e=0.5)
        path = accumulation.simulate_path(params, horizon=100)
        assert path.diagnostics.converged
        assert path.diagnostics.max_residual < 1e-8
        assert path.k[-1] == path.steady_state.k
        assert np.all(path.eta[-10:] < 1e-8)

    def test_perfect_foresight_path_with_inculcation(self, growth_params):
        params = growth_params.with_changes(tau_e=0.05)
        state = accumulation.steady_state(params)
        assert state.regime is Regime.INCULCATION
        path = accumulation.simulate_path(params, horizon=60)
        assert path.diagnostics.max_residual < 1e-8
        assert abs(accumulation.return_equilibration_residual(path, 30)) < 1e-6

    def test_non_convergence_is_reported(self, growth_params):
        with pytest.raises(ConvergenceError) as info:
            accumulation.simulate_path(growth_params.with_changes(tau_e=0.05), horizon=50,
                                       max_iterations=1, tolerance=0.0)
        assert info.value.iterations == 1
        assert info.value.worst_period is not None

    def test_default_guess_solves_the_path(self, growth_params):
        path = accumulation.simulate_path(growth_params.with_changes(tau_e=0.05), horizon=50)
        assert path.diagnostics.iterations == 0

    def test_damped_iteration_from_a_linear_guess(self, growth_params):
        params = growth_params.with_changes(tau_e=0.05)
        exact = accumulation.simulate_path(params, horizon=60)
        guess = np.linspace(exact.k[0], exact.k[-1], 61)
        path = accumulation.simulate_path(params, horizon=60, initial_guess=guess)
        assert path.diagnostics.converged
        assert path.diagnostics.iterations > 1
        assert path.diagnostics.max_residual < 1e-8
        assert path.k == pytest.approx(exact.k, rel=1e-6)

    def test_initial_guess_must_match_horizon(self, growth_params):
        with pytest.raises(ModelDomainError):
            accumulation.simulate_path(growth_params.with_changes(tau_e=0.05), horizon=10,
                                       initial_guess=np.ones(5))

    def test_invalid_inputs(self, growth_params):
        with pytest.raises(ModelDomainError):
            accumulation.simulate_path(growth_params, k0=0.0)
        with pytest.raises(ModelDomainError):
            accumulation.simulate_path(growth_params, horizon=1)
        with pytest.raises(ParameterError):
            accumulation.simulate_path(growth_params, damping=0.0)

    def test_path_frame_columns(self, growth_params):
        frame = accumulation.simulate_path(growth_params, horizon=10).to_frame()
        assert list(frame.columns) == ['t', 'k', 'R', 'y_m', 'y_e', 'eta', 's_m', 'g_m', 'psi', 'c_m', 'c_e']
        assert len(frame) == 10


class TestComparativeStatics:

    @given(st.floats(min_value=0.1, max_value=3.0), st.floats(min_value=0.2, max_value=0.9),
           st.floats(min_value=0.2, max_value=0.9), st.floats(min_value=0.3, max_value=0.95))
    @settings(max_examples=200)
    def test_eta_star_falls_with_inculcation_cost(self, beta, delta1, delta2, alpha):
        """Property: a costlier inculcation never raises steady-state inculcation"""
        low, high = sorted((delta1, delta2))
        try:
            eta_low = accumulation.eta_star_simple(beta, low, alpha)
        except ParameterError:
            assume(False)
        assert accumulation.eta_star_simple(beta, high, alpha) <= eta_low

    @given(st.floats(min_value=0.1, max_value=3.0), st.floats(min_value=0.2, max_value=0.9),
           st.floats(min_value=0.3, max_value=0.95), st.floats(min_value=0.3, max_value=0.95))
    @settings(max_examples=200)
    def test_eta_star_falls_with_capital_intensity(self, beta, delta, alpha1, alpha2):
        """Property: a larger (1-alpha)/alpha never raises steady-state inculcation"""
        low_alpha, high_alpha = sorted((alpha1, alpha2))
        try:
            eta_high_alpha = accumulation.eta_star_simple(beta, delta, high_alpha)
        except ParameterError:
            assume(False)
        assert accumulation.eta_star_simple(beta, delta, low_alpha) <= eta_high_alpha

    @given(st.floats(min_value=0.1, max_value=3.0), st.floats(min_value=0.1, max_value=0.9),
           st.floats(min_value=0.2, max_value=0.9), st.floats(min_value=-0.5, max_value=1.0),
           st.floats(min_value=-0.5, max_value=1.0))
    @settings(max_examples=200)
    def test_consumption_ratio_branches_rise_with_cohort_growth(self, beta, delta, alpha, n1, n2):
        """Property: both closed-form c_e/c_m branches are strictly increasing in n"""
        assume(n2 - n1 > 1e-6)
        params = GrowthParams(beta=beta, delta=delta, alpha=alpha, n=n1)
        try:
            low = accumulation.balanced_growth_ratio_branches(params)
        except ParameterError:
            assume(False)
        high = accumulation.balanced_growth_ratio_branches(params.with_changes(n=n2))
        assert high[0] > low[0]
        assert high[1] > low[1]

    @given(st.floats(min_value=0.5, max_value=2.0), st.floats(min_value=0.15, max_value=0.3),
           st.floats(min_value=0.4, max_value=0.7))
    @settings(max_examples=100)
    def test_elderly_labour_weakly_lowers_inculcation(self, beta, delta, alpha):
        """Property: eta* and the inculcation threshold never rise with tau_e"""
        params = GrowthParams(beta=beta, delta=delta, alpha=alpha)
        try:
            accumulation.steady_state(params)
        except ParameterError:
            assume(False)
        taus = [0.0, 0.05, 0.1, 0.2, 0.4, 0.8]
        etas = [accumulation.steady_state(params.with_changes(tau_e=tau)).eta for tau in taus]
        thresholds = [accumulation.inculcation_capital_threshold(params.with_changes(tau_e=tau)) for tau in taus]
        assert np.all(np.diff(etas) <= 1e-12)
        assert np.all(np.diff(thresholds) < 0)

    def test_steady_state_eta_matches_simple_form(self, growth_params):
        for alpha in (0.45, 0.5, 0.55):
            params = growth_params.with_changes(alpha=alpha)
            assert accumulation.steady_state(params).eta == pytest.approx(
                accumulation.eta_star_simple(params.beta, params.delta, alpha), abs=1e-12)

    @given(st.floats(min_value=0.01, max_value=100.0), st.floats(min_value=0.1, max_value=0.8))
    @settings(max_examples=200)
    def test_household_choice_is_homogeneous_in_incomes(self, scale, share):
        """Property: scaling all incomes scales gift and savings and leaves eta_next and c_e/c_m unchanged"""

        def choice(y_m):
            problem = LifetimeProblem(eta=0.4, beta=1.0, delta=0.2, y_m=y_m, y_e_next=0.1 * y_m, R_next=2.0)
            total = accumulation.savings_allocation(problem.beta, problem.delta, y_m, problem.y_e_next,
                                                    problem.R_next).total
            eta_next = share * total / problem.inculcation_cost
            g, s = accumulation.analytic_choice(problem, eta_next)
            c_m = y_m - problem.inculcation_cost * eta_next - s - g
            c_e = s * problem.R_next + eta_next * accumulation.equilibrium_psi(problem) + problem.y_e_next
            return eta_next, g, s, c_e / c_m

        eta_next, g, s, ratio = choice(1.0)
        scaled = choice(scale)
        assert scaled[0] == pytest.approx(eta_next, rel=1e-12)
        assert scaled[1] == pytest.approx(scale * g, rel=1e-12)
        assert scaled[2] == pytest.approx(scale * s, rel=1e-12)
        assert scaled[3] == pytest.approx(ratio, rel=1e-12)


class TestCapitalIntensitySweep:

    def test_kink_at_threshold(self, growth_params):
        rows = accumulation.capital_intensity_sweep(growth_params, [1.0, 1.25, 1.5])
        ratios = [row['consumption_ratio'] for row in rows]
        assert ratios == pytest.approx([5.0, 2.5, 3.0])
        assert rows[0]['regime'] == Regime.INCULCATION.value
        assert rows[2]['regime'] == Regime.NO_INCULCATION.value

    def test_default_grid_is_decreasing_then_increasing(self, growth_params):
        rows = accumulation.capital_intensity_sweep(growth_params, accumulation.capital_intensity_grid())
        admissible = [row for row in rows if row['admissible']]
        ratios = np.array([row['consumption_ratio'] for row in admissible])
        turn = int(np.argmin(ratios))
        assert np.all(np.diff(ratios[:turn + 1]) < 0)
        assert np.all(np.diff(ratios[turn:]) > 0)
        assert admissible[turn]['capital_intensity'] == pytest.approx(1.25, abs=0.05)

    def test_inadmissible_points_are_reported(self, growth_params):
        rows = accumulation.capital_intensity_sweep(growth_params, [0.5, 1.0])
        assert rows[0]['admissible'] is False
        assert math.isnan(rows[0]['R'])
        assert rows[1]['admissible'] is True

    def test_tau_family(self, growth_params):
        rows = accumulation.capital_intensity_sweep(growth_params, [1.0, 2.0], tau_values=[0.0, 0.25, 0.5])
        assert [row['tau_e'] for row in rows] == [0.0, 0.0, 0.25, 0.25, 0.5, 0.5]

    def test_parallel_rows_match_serial(self, growth_params):
        grid = accumulation.capital_intensity_grid(0.8, 2.0, 7)
        assert (accumulation.capital_intensity_sweep(growth_params, grid, n_jobs=2)
                == accumulation.capital_intensity_sweep(growth_params, grid, n_jobs=1))

    def test_non_positive_intensity_is_rejected(self, growth_params):
        with pytest.raises(ParameterError):
            accumulation.capital_intensity_sweep(growth_params, [0.0])


def test_growth_params_from_capital_intensity():
    params = GrowthParams.from_capital_intensity(1.0, beta=1.0)
    assert params.alpha == pytest.approx(0.5)
    assert params.capital_intensity == pytest.approx(1.0)
