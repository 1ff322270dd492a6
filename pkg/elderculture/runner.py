"""
Scenario runner: dispatches validated scenario sections to the model
modules and returns the tables the CLI writes.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from .errors import ConfigError
from .model import ScenarioConfig, load_scenario_config
from .models import accumulation, ethno_indices, property_rights, static_economy
from .utils.metrics import VerificationSystem
from .utils.output import read_table

logger = logging.getLogger(__name__)

DEFAULT_TAU_VALUES = (0.0, 0.25, 0.5)


class ScenarioRunner:
    """Model runner bound to one process configuration"""

    def __init__(self, config):
        self.config = config
        self.jobs = getattr(config, 'JOBS', 1)

    def load_scenario(self, path: Optional[str] = None) -> ScenarioConfig:
        scenario = load_scenario_config(path)
        logger.info(f"Loaded scenario {scenario.source or '<baseline>'} (model={scenario.model})")
        return scenario

    def _jobs(self, jobs: Optional[int]) -> int:
        return self.jobs if jobs is None else jobs

    # ------------------------------------------------------------------
    # Model operations
    # ------------------------------------------------------------------

    def steady_state(self, scenario: ScenarioConfig) -> List[dict]:
        """One row describing the equilibrium of the scenario's model"""
        if scenario.model == 'static':
            prefs, incomes = scenario.static['prefs'], scenario.static['incomes']
            outcome = static_economy.static_outcome(prefs, incomes)
            return [{
                'model': scenario.model,
                'threshold': static_economy.inculcation_threshold(prefs, incomes.n),
                'income_ratio': incomes.y_e_next / incomes.y_m_next if incomes.y_m_next else math.inf,
                'inculcate': outcome.inculcate,
                'gift': outcome.gift,
                'delta_u': outcome.delta_u,
                'consumption_ratio': outcome.consumption_ratio,
                'cultural_price': outcome.cultural_price,
                'cultural_demand': outcome.cultural_demand,
            }]

        if scenario.model == 'property-rights':
            econ, rights = scenario.property_rights['economy'], scenario.property_rights['rights']
            incomes = property_rights.decompose_incomes(econ, rights)
            phi_star = property_rights.critical_phi(econ, rights) if econ.u_shape_regime else None
            return [{
                'model': scenario.model,
                'phi': rights.phi,
                'rho': rights.rho,
                'F': incomes.F,
                'y_m': incomes.y_m,
                'y_e': incomes.y_e,
                'income_ratio': property_rights.income_ratio(econ, rights),
                'critical_phi': math.nan if phi_star is None else phi_star,
            }]

        params = scenario.accumulation
        state = accumulation.steady_state(params)
        return [{
            'model': scenario.model,
            'R': state.R,
            'k': state.k,
            'eta': state.eta,
            'consumption_ratio': state.consumption_ratio,
            'regime': state.regime.value,
        }]

    def simulate(self, scenario: ScenarioConfig) -> pd.DataFrame:
        options = scenario.simulate
        path = accumulation.simulate_path(
            scenario.accumulation,
            k0=options.get('k0'),
            horizon=options.get('horizon') or self.config.PATH_HORIZON,
            eta0=options.get('eta0'),
            damping=self.config.PATH_DAMPING,
            max_iterations=self.config.PATH_MAX_ITERATIONS,
            tolerance=self.config.PATH_TOLERANCE,
            k0_fraction=self.config.K0_FRACTION,
        )
        diagnostics = path.diagnostics
        logger.info(f"Path solved in {diagnostics.iterations} iterations, max residual "
                    f"{diagnostics.max_residual:.3e} (worst t={diagnostics.worst_period})")
        return path.to_frame()

    def _grid(self, scenario: ScenarioConfig, start: float, stop: float, points: int) -> np.ndarray:
        sweep = scenario.sweep
        if sweep.get('values'):
            return np.asarray(sweep['values'], dtype=float)
        start = start if sweep.get('start') is None else sweep['start']
        stop = stop if sweep.get('stop') is None else sweep['stop']
        points = points if sweep.get('points') is None else sweep['points']
        if stop < start:
            raise ConfigError(f"[sweep] stop: {stop} is below start {start}")
        return np.linspace(start, stop, points)

    def sweep_phi(self, scenario: ScenarioConfig, jobs: Optional[int] = None) -> List[dict]:
        section = scenario.property_rights
        econ, rights, prefs = section['economy'], section['rights'], section['prefs']
        grid = self._grid(scenario, 0.0, 1.0, self.config.PHI_GRID_POINTS)
        chunks = Parallel(n_jobs=self._jobs(jobs))(
            delayed(property_rights.phi_sweep)(econ, rights.rho, [phi], prefs) for phi in grid)
        rows = [row for chunk in chunks for row in chunk]
        logger.info(f"Swept {len(rows)} property-rights levels")
        return rows

    def sweep_capital_intensity(self, scenario: ScenarioConfig, jobs: Optional[int] = None,
                                tau_values: Optional[Sequence[float]] = None) -> List[dict]:
        grid = self._grid(scenario, self.config.CAPITAL_INTENSITY_MIN, self.config.CAPITAL_INTENSITY_MAX,
                          self.config.CAPITAL_INTENSITY_POINTS)
        rows = accumulation.capital_intensity_sweep(scenario.accumulation, grid, tau_values=tau_values,
                                                    n_jobs=self._jobs(jobs))
        skipped = sum(1 for row in rows if not row['admissible'])
        if skipped:
            logger.warning(f"{skipped} of {len(rows)} sweep points are inadmissible (eta* >= 1)")
        return rows

    def sweep_tau(self, scenario: ScenarioConfig, jobs: Optional[int] = None) -> List[dict]:
        tau_values = scenario.sweep.get('tau_values') or DEFAULT_TAU_VALUES
        return self.sweep_capital_intensity(scenario, jobs, tau_values=tau_values)

    # ------------------------------------------------------------------
    # Ethnographic indices
    # ------------------------------------------------------------------

    def _catalog(self, scenario: ScenarioConfig, specs: Optional[str]) -> ethno_indices.IndexCatalog:
        return ethno_indices.IndexCatalog(specs or scenario.ethno.get('specs') or self.config.INDEX_SPECS_FILE)

    def _scores(self, scenario: ScenarioConfig, catalog: ethno_indices.IndexCatalog,
                traits: Optional[str]) -> pd.DataFrame:
        traits = traits or scenario.ethno.get('traits')
        if not traits:
            raise ConfigError("[ethno] traits: a trait table path is required")
        return catalog.build(ethno_indices.load_trait_table(traits))

    def indices(self, scenario: ScenarioConfig, traits: Optional[str] = None, specs: Optional[str] = None,
                summary: bool = False) -> pd.DataFrame:
        catalog = self._catalog(scenario, specs)
        scores = self._scores(scenario, catalog, traits)
        if summary:
            return ethno_indices.summarize_indices(scores).reset_index()
        return scores.reset_index()

    def correlate(self, scenario: ScenarioConfig, traits: Optional[str] = None, specs: Optional[str] = None,
                  jobs: Optional[int] = None) -> List[dict]:
        catalog = self._catalog(scenario, specs)
        scores_file = scenario.ethno.get('scores')
        if scores_file and not traits:
            scores = read_table(scores_file)
            if 'society' in scores.columns:
                scores = scores.set_index('society')
        else:
            scores = self._scores(scenario, catalog, traits)
        results = catalog.correlations(scores, scenario.ethno.get('rows'), scenario.ethno.get('columns'),
                                       n_jobs=self._jobs(jobs))
        significant = sum(result.significant_95 for result in results)
        logger.info(f"Computed {len(results)} correlations, {significant} significant at 95%")
        return ethno_indices.correlation_rows(results)

    # ------------------------------------------------------------------
    # Verification
    # ------------------------------------------------------------------

    def verify(self, seed: Optional[int] = None) -> Dict:
        system = VerificationSystem.from_config(self.config, seed=seed)
        tracker = system.run()
        report = system.generate_report()
        summary = report['summary']
        logger.info(f"Verification: {summary['passed_checks']}/{summary['total_checks']} checks passed")
        report['passed'] = tracker.all_passed
        return report
