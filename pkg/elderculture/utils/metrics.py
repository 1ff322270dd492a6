"""
Residual tracking and the verification suite behind `verify`
"""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from ..errors import ModelDomainError
from ..model import (GridSpec, GrowthParams, LandEconomy, LifetimeProblem, PreferenceParams, RightsParams,
                     StaticIncomes)
from ..models import accumulation, ethno_indices, oracle, property_rights, static_economy

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ResidualCheck:
    name: str
    group: str
    value: float
    tolerance: float
    passed: bool
    detail: str = ''


class ResidualTracker:
    """In-memory record of named residual checks"""

    def __init__(self):
        self.checks: List[ResidualCheck] = []
        self.counters = defaultdict(int)

    def record_check(self, group: str, name: str, value: float, tolerance: float, detail: str = '') -> ResidualCheck:
        value = float(value)
        passed = math.isfinite(value) and abs(value) <= tolerance
        check = ResidualCheck(name=name, group=group, value=value, tolerance=tolerance, passed=passed, detail=detail)
        self.checks.append(check)
        self.counters['total_checks'] += 1
        self.counters['passed_checks' if passed else 'failed_checks'] += 1
        log = logger.debug if passed else logger.warning
        log(f"[{group}] {name}: {value:.3e} (tolerance {tolerance:.1e}) {'ok' if passed else 'FAILED'}")
        return check

    def record_failure(self, group: str, name: str, error: Exception) -> ResidualCheck:
        return self.record_check(group, name, math.nan, 0.0, detail=f"{type(error).__name__}: {error}")

    @property
    def all_passed(self) -> bool:
        return bool(self.checks) and all(check.passed for check in self.checks)

    def get_all_metrics(self) -> Dict:
        failed = [check.name for check in self.checks if not check.passed]
        return {
            'total_checks': self.counters['total_checks'],
            'passed_checks': self.counters['passed_checks'],
            'failed_checks': self.counters['failed_checks'],
            'failed': failed,
            'success_rate': self._calculate_success_rate(),
        }

    def _calculate_success_rate(self) -> float:
        total = self.counters['total_checks']
        return self.counters['passed_checks'] / total if total else 0.0

    def rows(self) -> List[dict]:
        return [{
            'group': check.group,
            'check': check.name,
            'value': check.value,
            'tolerance': check.tolerance,
            'status': 'ok' if check.passed else 'FAILED',
            'detail': check.detail,
        } for check in self.checks]


def _relative_error(value: float, target: float) -> float:
    return abs(value - target) / max(abs(target), 1e-300)


class VerificationSystem:
    """Brute-force and identity checks of every closed form"""

    def __init__(self, draws: int = 1000, oracle_draws: int = 100, seed: int = 0,
                 tracker: Optional[ResidualTracker] = None, oracle_resolution: int = 64,
                 oracle_rounds: int = 10, oracle_bracket_steps: int = 6):
        self.draws = draws
        self.oracle_draws = oracle_draws
        self.oracle_resolution = oracle_resolution
        self.oracle_rounds = oracle_rounds
        self.oracle_bracket_steps = oracle_bracket_steps
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.tracker = tracker or ResidualTracker()

    @classmethod
    def from_config(cls, config, seed: Optional[int] = None) -> 'VerificationSystem':
        return cls(draws=getattr(config, 'VERIFY_DRAWS', 1000),
                   oracle_draws=getattr(config, 'VERIFY_ORACLE_DRAWS', 100),
                   oracle_resolution=getattr(config, 'ORACLE_RESOLUTION', 64),
                   oracle_rounds=getattr(config, 'ORACLE_ROUNDS', 10),
                   oracle_bracket_steps=getattr(config, 'ORACLE_BRACKET_STEPS', 6),
                   seed=getattr(config, 'VERIFY_SEED', 0) if seed is None else seed)

    def run(self) -> ResidualTracker:
        suites = [
            ('static-economy', self._verify_static_economy),
            ('property-rights', self._verify_property_rights),
            ('oracle', self._verify_oracle_optimality),
            ('accumulation', self._verify_accumulation),
            ('ethno-indices', self._verify_ethno_indices),
        ]
        for group, suite in suites:
            logger.info(f"Verifying {group}")
            try:
                suite(group)
            except (ModelDomainError, ArithmeticError, ValueError) as exc:
                logger.error(f"Verification of {group} aborted: {exc}")
                self.tracker.record_failure(group, 'suite', exc)
        return self.tracker

    def generate_report(self) -> Dict:
        return {'seed': self.seed, 'summary': self.tracker.get_all_metrics(), 'checks': self.tracker.rows()}

    def oracle_grid(self, bounds) -> GridSpec:
        return GridSpec(bounds=bounds, resolution=self.oracle_resolution,
                        refinement_rounds=self.oracle_rounds, bracket_steps=self.oracle_bracket_steps)

    # ------------------------------------------------------------------
    # Suites
    # ------------------------------------------------------------------

    def _random_prefs(self) -> PreferenceParams:
        return PreferenceParams(eta_level=self.rng.uniform(0.01, 0.99), beta=self.rng.uniform(0.1, 5.0),
                                delta=self.rng.uniform(0.05, 0.9))

    def _verify_static_economy(self, group: str):
        worst = 0.0
        for _ in range(self.draws):
            prefs = self._random_prefs()
            incomes = StaticIncomes(y_m=self.rng.uniform(0.01, 100.0), y_e_next=1.0, n=self.rng.uniform(-0.9, 3.0))
            price, demand = static_economy.cultural_market(prefs, incomes)
            gift = static_economy.optimal_gift_simple(prefs, prefs.eta_level, incomes.y_m)
            worst = max(worst, _relative_error(price * demand, gift))
        self.tracker.record_check(group, 'cultural_equivalence', worst, 1e-12)

        baseline = PreferenceParams(0.5, 1.0, 0.2)
        root = oracle.bracket_threshold(
            lambda ratio: static_economy.delta_utility(baseline, StaticIncomes(1.0, ratio, 0.0)),
            (0.5, 3.0), tolerance=1e-12)
        self.tracker.record_check(group, 'threshold_bracket', root - static_economy.inculcation_threshold(baseline, 0.0),
                                  1e-6, detail=f"bracketed Y*={root:.12g}")

        worst = 0.0
        for _ in range(min(self.draws, 200)):
            prefs = self._random_prefs()
            n = self.rng.uniform(-0.5, 2.0)
            threshold = static_economy.inculcation_threshold(prefs, n)
            root = oracle.bracket_threshold(
                lambda ratio: static_economy.delta_utility(prefs, StaticIncomes(1.0, ratio, n)),
                (threshold / 10, threshold * 10), tolerance=1e-13 * threshold)
            worst = max(worst, _relative_error(root, threshold))
        self.tracker.record_check(group, 'threshold_draws', worst, 1e-9)

        # eta_next = 1 charges the whole cost delta * y_m, as the binary decision does
        grid = self.oracle_grid({'g': (0.0, 0.8), 's': (0.0, 0.0), 'eta_next': (1.0, 1.0)})
        problem = LifetimeProblem(eta=0.5, beta=1.0, delta=0.2, y_m=1.0, y_e_next=1.0)
        found = oracle.maximize_lifetime_utility(problem, lambda eta_next: 0.0 * eta_next, grid)
        self.tracker.record_check(group, 'oracle_static_gift',
                                  found.g - static_economy.optimal_gift_simple(baseline, 0.5, 1.0), 1e-6)

    def _verify_property_rights(self, group: str):
        econ = LandEconomy.from_demographics(alpha=0.5, A_m=1.0, A_e=0.025, n=0.0)
        rights = RightsParams(phi=0.0, rho=1.0)
        self.tracker.record_check(group, 'free_access_ratio', property_rights.income_ratio(econ, rights) - 1.0, 0.0)
        self.tracker.record_check(group, 'full_rights_ratio',
                                  property_rights.income_ratio(econ, RightsParams(1.0, 1.0)) - 1.05, 1e-12)
        phi_star = property_rights.critical_phi(econ, rights)
        root = oracle.bracket_threshold(
            lambda phi: property_rights.income_ratio_slope_numerator(econ, RightsParams(phi, 1.0)),
            (1e-9, 1.0), tolerance=1e-12)
        self.tracker.record_check(group, 'critical_phi_bracket', root - phi_star, 1e-6,
                                  detail=f"phi*={phi_star:.12g}")

        worst_budget, worst_shares = 0.0, 0.0
        for _ in range(self.draws):
            econ = LandEconomy.from_demographics(
                alpha=self.rng.uniform(0.1, 0.95), A_m=self.rng.uniform(0.5, 2.0), A_e=self.rng.uniform(0.0, 1.5),
                n=self.rng.uniform(-0.5, 1.0), T=self.rng.uniform(0.5, 2.0), N_e=self.rng.uniform(0.5, 2.0))
            rights = RightsParams(phi=self.rng.uniform(0.0, 1.0), rho=self.rng.uniform(0.2, 3.0))
            incomes = property_rights.decompose_incomes(econ, rights)
            worst_budget = max(worst_budget, _relative_error(econ.N_m * incomes.y_m + econ.N_e * incomes.y_e,
                                                             incomes.F))
            worst_shares = max(worst_shares, abs(incomes.sigma_e * econ.N_e + incomes.sigma_m * econ.N_m - 1))
        self.tracker.record_check(group, 'budget_balance', worst_budget, 1e-12)
        self.tracker.record_check(group, 'share_aggregation', worst_shares, 1e-12)

    def _random_problem(self) -> LifetimeProblem:
        y_m = self.rng.uniform(0.5, 2.0)
        return LifetimeProblem(eta=self.rng.uniform(0.1, 0.8), beta=self.rng.uniform(0.5, 2.0),
                               delta=self.rng.uniform(0.2, 0.5), y_m=y_m,
                               y_e_next=self.rng.uniform(0.0, 0.4) * y_m, R_next=self.rng.uniform(1.0, 4.0),
                               n=self.rng.uniform(-0.2, 1.0))

    def _verify_oracle_optimality(self, group: str):
        worst = defaultdict(float)
        for _ in range(self.oracle_draws):
            problem = self._random_problem()
            total = accumulation.savings_allocation(problem.beta, problem.delta, problem.y_m, problem.y_e_next,
                                                    problem.R_next).total
            d = problem.inculcation_cost
            eta_next = min(0.9, self.rng.uniform(0.2, 0.8) * total / d)
            g, s = accumulation.analytic_choice(problem, eta_next)
            continuation = accumulation.equilibrium_continuation(problem)

            by_savings = oracle.maximize_lifetime_utility(problem, continuation, self.oracle_grid(
                {'g': (0.0, problem.y_m), 's': (0.0, problem.y_m), 'eta_next': (eta_next, eta_next)}))
            by_inculcation = oracle.maximize_lifetime_utility(problem, continuation, self.oracle_grid(
                {'g': (0.0, problem.y_m), 's': (s, s), 'eta_next': (0.0, 1.0)}))

            worst['gift'] = max(worst['gift'], _relative_error(by_savings.g, g), _relative_error(by_inculcation.g, g))
            worst['savings'] = max(worst['savings'], _relative_error(by_savings.s, s))
            worst['inculcation'] = max(worst['inculcation'], _relative_error(by_inculcation.eta_next, eta_next))

            analytic_utility = float(oracle.lifetime_utility(problem, continuation, g, s, eta_next))
            worst['utility_gap'] = max(worst['utility_gap'], analytic_utility - by_savings.utility,
                                       analytic_utility - by_inculcation.utility)

            focs = accumulation.first_order_conditions(problem, g, s, eta_next)
            worst['foc'] = max(worst['foc'], float(np.max(np.abs(focs))))
            gradient = oracle.finite_difference_gradient(
                lambda x: float(oracle.lifetime_utility(problem, continuation, x[0], x[1], x[2])),
                [g, s, eta_next], step=1e-6)
            worst['gradient'] = max(worst['gradient'], float(np.max(np.abs(gradient - focs))))

        self.tracker.record_check(group, 'oracle_gift', worst['gift'], 1e-5)
        self.tracker.record_check(group, 'oracle_savings', worst['savings'], 1e-5)
        self.tracker.record_check(group, 'oracle_inculcation', worst['inculcation'], 1e-5)
        self.tracker.record_check(group, 'oracle_utility_gap', worst['utility_gap'], 1e-9)
        self.tracker.record_check(group, 'foc_residual', worst['foc'], 1e-8)
        self.tracker.record_check(group, 'finite_difference_gradient', worst['gradient'], 1e-6)

    def _verify_accumulation(self, group: str):
        baseline = GrowthParams(n=0.0, a=0.0, alpha=0.5, beta=1.0, delta=0.2, tau_e=0.0)
        state = accumulation.steady_state(baseline)
        residual = max(abs(v) for v in accumulation.steady_state_residuals(state, baseline).values())
        self.tracker.record_check(group, 'steady_state_residuals', residual, 1e-10)
        self.tracker.record_check(group, 'steady_state_return', state.R - 2.5, 1e-12)
        self.tracker.record_check(group, 'steady_state_consumption_ratio', state.consumption_ratio - 5.0, 1e-12)

        with_elderly_labor = baseline.with_changes(tau_e=0.5)
        corner = accumulation.steady_state(with_elderly_labor)
        residual = max(abs(v) for v in accumulation.steady_state_residuals(corner, with_elderly_labor).values())
        self.tracker.record_check(group, 'corner_steady_state_residuals', residual, 1e-10,
                                  detail=f"regime={corner.regime.value}")
        self.tracker.record_check(group, 'corner_steady_state_return', corner.R - 3.5, 1e-12)

        branches = accumulation.balanced_growth_ratio_branches(baseline.with_changes(delta=0.25))
        self.tracker.record_check(group, 'regime_continuity', branches[0] - branches[1], 1e-12)

        kink = oracle.bracket_threshold(
            lambda x: accumulation._eta_from_return(
                GrowthParams.from_capital_intensity(x, beta=1.0, delta=0.2),
                accumulation.inculcation_return(GrowthParams.from_capital_intensity(x, beta=1.0, delta=0.2))),
            (0.8, 3.0), tolerance=1e-12)
        self.tracker.record_check(group, 'capital_intensity_kink',
                                  kink - accumulation.inculcation_capital_threshold(baseline), 1e-6)

        path = accumulation.simulate_path(baseline, k0=0.01, horizon=60)
        self.tracker.record_check(group, 'explicit_path_convergence', path.k[-1] - state.k, 1e-10)
        diagnostics = accumulation.balanced_growth_diagnostics(path, baseline)
        self.tracker.record_check(group, 'balanced_growth', max(diagnostics.values()), 1e-8)

        corner_path = accumulation.simulate_path(with_elderly_labor, k0=0.9 * corner.k)
        self.tracker.record_check(group, 'perfect_foresight_residuals', corner_path.diagnostics.max_residual, 1e-8,
                                  detail=f"{corner_path.diagnostics.iterations} iterations")

    def _verify_ethno_indices(self, group: str):
        result = ethno_indices.correlate([1, 2, 3, 4, 5], [1, 3, 2, 5, 4])
        self.tracker.record_check(group, 'pearson_fixture', result.r - 0.8, 1e-9)
        swapped = ethno_indices.correlate([1, 3, 2, 5, 4], [1, 2, 3, 4, 5])
        self.tracker.record_check(group, 'pearson_symmetry', result.r - swapped.r, 0.0)
