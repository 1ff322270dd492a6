# ====================== DOMAIN TYPES ======================
import configparser
import math
import os
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Mapping, Optional, Tuple

import numpy as np
import pandas as pd
from marshmallow import RAISE, Schema, ValidationError, fields, post_load, validate

from .errors import ConfigError, FileAccessError, ParameterError


def _require(name: str, value: float, ok: bool, domain: str):
    if value is None or not math.isfinite(value) or not ok:
        raise ParameterError(name, value, domain)


@dataclass(frozen=True)
class PreferenceParams:
    """Tastes and inculcation technology of the no-savings economy"""
    eta_level: float = 0.5
    beta: float = 1.0
    delta: float = 0.2

    def __post_init__(self):
        _require('eta_level', self.eta_level, 0 < self.eta_level < 1, '(0, 1)')
        _require('beta', self.beta, self.beta > 0, '(0, inf)')
        _require('delta', self.delta, 0 < self.delta < 1, '(0, 1)')


@dataclass(frozen=True)
class StaticIncomes:
    """Incomes faced by a middle-aged agent; y_m_next defaults to y_m (stationary incomes)"""
    y_m: float
    y_e_next: float
    n: float = 0.0
    y_m_next: Optional[float] = None

    def __post_init__(self):
        _require('y_m', self.y_m, self.y_m >= 0, '[0, inf)')
        _require('y_e_next', self.y_e_next, self.y_e_next >= 0, '[0, inf)')
        _require('n', self.n, self.n > -1, '(-1, inf)')
        if self.y_m_next is None:
            object.__setattr__(self, 'y_m_next', self.y_m)
        _require('y_m_next', self.y_m_next, self.y_m_next >= 0, '[0, inf)')


@dataclass(frozen=True)
class StaticOutcome:
    gift: float
    inculcate: bool
    delta_u: float
    consumption_ratio: float
    cultural_price: float
    cultural_demand: float


@dataclass(frozen=True)
class LandEconomy:
    """Production side of the property-rights economy"""
    alpha: float = 0.5
    A_m: float = 1.0
    A_e: float = 0.025
    T: float = 1.0
    N_m: float = 1.0
    N_e: float = 1.0

    def __post_init__(self):
        _require('alpha', self.alpha, 0 < self.alpha <= 1, '(0, 1]')
        _require('A_m', self.A_m, self.A_m > 0, '(0, inf)')
        _require('A_e', self.A_e, self.A_e >= 0, '[0, inf)')
        _require('T', self.T, self.T > 0, '(0, inf)')
        _require('N_m', self.N_m, self.N_m > 0, '(0, inf)')
        _require('N_e', self.N_e, self.N_e > 0, '(0, inf)')

    @classmethod
    def from_demographics(cls, alpha: float, A_m: float, A_e: float, n: float,
                          T: float = 1.0, N_e: float = 1.0) -> 'LandEconomy':
        _require('n', n, n > -1, '(-1, inf)')
        return cls(alpha=alpha, A_m=A_m, A_e=A_e, T=T, N_m=(1 + n) * N_e, N_e=N_e)

    @property
    def labor(self) -> float:
        return self.N_m * self.A_m + self.N_e * self.A_e

    @property
    def population(self) -> float:
        return self.N_m + self.N_e

    @property
    def n(self) -> float:
        """Population growth implied by the cohort sizes"""
        return self.N_m / self.N_e - 1

    @property
    def u_shape_regime(self) -> bool:
        return self.A_e < self.A_m


@dataclass(frozen=True)
class RightsParams:
    phi: float = 0.0
    rho: float = 1.0

    def __post_init__(self):
        _require('phi', self.phi, 0 <= self.phi <= 1, '[0, 1]')
        _require('rho', self.rho, self.rho > 0, '(0, inf)')

    @property
    def phi_land(self) -> float:
        return self.phi ** self.rho


@dataclass(frozen=True)
class IncomeDecomposition:
    """
    Euler split of output. The q parts hold labour income only until the
    land shares are known; the full decomposition adds sigma and pooled incomes.
    """
    F: float
    F_L: float
    F_T: float
    q_m: float
    q_e: float
    sigma_m: Optional[float] = None
    sigma_e: Optional[float] = None
    y_m: Optional[float] = None
    y_e: Optional[float] = None


class Regime(str, Enum):
    INCULCATION = 'inculcation'
    NO_INCULCATION = 'no-inculcation'


@dataclass(frozen=True)
class GrowthParams:
    """Parameters of the economy with capital accumulation"""
    n: float = 0.0
    a: float = 0.0
    alpha: float = 0.5
    beta: float = 1.0
    delta: float = 0.2
    tau_e: float = 0.0

    def __post_init__(self):
        _require('n', self.n, self.n > -1, '(-1, inf)')
        _require('a', self.a, self.a >= 0, '[0, inf)')
        _require('alpha', self.alpha, 0 < self.alpha < 1, '(0, 1)')
        _require('beta', self.beta, self.beta > 0, '(0, inf)')
        _require('delta', self.delta, 0 < self.delta < 1, '(0, 1)')
        _require('tau_e', self.tau_e, self.tau_e >= 0, '[0, inf)')

    @property
    def gamma_e(self) -> float:
        """Elderly share of aggregate effective labour"""
        return self.tau_e / (self.tau_e + (1 + self.a))

    @property
    def capital_intensity(self) -> float:
        return (1 - self.alpha) / self.alpha

    def with_changes(self, **changes) -> 'GrowthParams':
        return replace(self, **changes)

    @classmethod
    def from_capital_intensity(cls, capital_intensity: float, **kwargs) -> 'GrowthParams':
        _require('capital_intensity', capital_intensity, capital_intensity > 0, '(0, inf)')
        return cls(alpha=1 / (1 + capital_intensity), **kwargs)


@dataclass(frozen=True)
class SteadyState:
    R: float
    k: float
    eta: float
    regime: Regime
    consumption_ratio: float


@dataclass(frozen=True)
class PathDiagnostics:
    iterations: int
    max_residual: float
    converged: bool
    worst_period: Optional[int] = None


@dataclass
class EconomyPath:
    """
    Equilibrium time series. State arrays (k, R, y_m, y_e, eta) cover
    t = 0..T; decision arrays (s_m, g_m, psi, c_m, c_e) cover t = 0..T-1.
    """
    params: GrowthParams
    k: np.ndarray
    R: np.ndarray
    y_m: np.ndarray
    y_e: np.ndarray
    eta: np.ndarray
    s_m: np.ndarray
    g_m: np.ndarray
    psi: np.ndarray
    c_m: np.ndarray
    c_e: np.ndarray
    s_initial: float
    diagnostics: PathDiagnostics
    steady_state: Optional[SteadyState] = None

    @property
    def horizon(self) -> int:
        return len(self.s_m)

    def to_frame(self) -> pd.DataFrame:
        T = self.horizon
        return pd.DataFrame({
            't': np.arange(T),
            'k': self.k[:T],
            'R': self.R[:T],
            'y_m': self.y_m[:T],
            'y_e': self.y_e[:T],
            'eta': self.eta[:T],
            's_m': self.s_m,
            'g_m': self.g_m,
            'psi': self.psi,
            'c_m': self.c_m,
            'c_e': self.c_e,
        })


@dataclass(frozen=True)
class GridSpec:
    """
    Search box for the brute-force oracle. Bounds map each decision
    variable (g, s, eta_next) to a closed interval; lo == hi fixes it.
    """
    bounds: Mapping[str, Tuple[float, float]]
    resolution: int = 64
    refinement_rounds: int = 4
    bracket_steps: int = 2

    def __post_init__(self):
        if self.resolution < 16:
            raise ParameterError('resolution', self.resolution, '[16, inf)')
        if self.refinement_rounds < 1:
            raise ParameterError('refinement_rounds', self.refinement_rounds, '[1, inf)')
        if self.bracket_steps < 1 or 2 * self.bracket_steps / (self.resolution - 1) > 0.25:
            raise ParameterError('bracket_steps', self.bracket_steps,
                                 f'[1, {(self.resolution - 1) // 8}] for resolution {self.resolution}')
        for name, (lo, hi) in self.bounds.items():
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise ParameterError(f'bounds[{name}]', (lo, hi), 'finite interval with lo <= hi')

    @property
    def shrink_factor(self) -> float:
        return 2 * self.bracket_steps / (self.resolution - 1)


@dataclass(frozen=True)
class LifetimeProblem:
    """One middle-aged agent's problem; R_next is None when saving is shut off"""
    eta: float
    beta: float
    delta: float
    y_m: float
    y_e_next: float = 0.0
    R_next: Optional[float] = None
    n: float = 0.0

    def __post_init__(self):
        _require('eta', self.eta, 0 <= self.eta < 1, '[0, 1)')
        _require('beta', self.beta, self.beta > 0, '(0, inf)')
        _require('delta', self.delta, 0 <= self.delta < 1, '[0, 1)')
        _require('y_m', self.y_m, self.y_m > 0, '(0, inf)')
        _require('y_e_next', self.y_e_next, self.y_e_next >= 0, '[0, inf)')
        _require('n', self.n, self.n > -1, '(-1, inf)')
        if self.R_next is not None:
            _require('R_next', self.R_next, self.R_next > 0, '(0, inf)')

    @property
    def inculcation_cost(self) -> float:
        return self.delta * self.y_m


class MissingPolicy(str, Enum):
    AS_ZERO = 'as-zero'


@dataclass(frozen=True)
class TraitTable:
    """Coded traits, one row per society; missing cells are <NA>"""
    frame: pd.DataFrame

    @property
    def societies(self) -> Tuple[str, ...]:
        return tuple(self.frame.index)

    @property
    def traits(self) -> Tuple[str, ...]:
        return tuple(self.frame.columns)


@dataclass(frozen=True)
class IndexSpec:
    name: str
    positive_traits: Tuple[str, ...] = ()
    negative_traits: Tuple[str, ...] = ()
    missing_policy: MissingPolicy = MissingPolicy.AS_ZERO
    component_indices: Tuple[str, ...] = ()
    description: str = ''

    def __post_init__(self):
        overlap = set(self.positive_traits) & set(self.negative_traits)
        if overlap:
            raise ParameterError(f'{self.name}.negative_traits', sorted(overlap),
                                 'disjoint from positive_traits')
        if not (self.positive_traits or self.negative_traits or self.component_indices):
            raise ParameterError(f'{self.name}', 'empty', 'at least one trait or component index')


@dataclass(frozen=True)
class CorrelationResult:
    pair: Tuple[str, str]
    r: float
    n: int
    significant_95: bool
    t_statistic: Optional[float] = None
    p_value: Optional[float] = None
    df: Optional[int] = None
    test: str = 'two-tailed Student t'

    @property
    def marker(self) -> str:
        return '*' if self.significant_95 else ''


# ====================== MARSHMALLOW SCHEMAS ======================

class CommaSeparatedFloats(fields.Field):
    """Comma separated numbers, as written in INI files"""

    def _deserialize(self, value, attr, data, **kwargs):
        if isinstance(value, (list, tuple)):
            items = value
        else:
            items = [item for item in str(value).split(',') if item.strip()]
        try:
            return tuple(float(item) for item in items)
        except (TypeError, ValueError) as exc:
            raise ValidationError('Must be a comma separated list of numbers.') from exc


class CommaSeparatedNames(fields.Field):

    def _deserialize(self, value, attr, data, **kwargs):
        if isinstance(value, (list, tuple)):
            return tuple(str(item) for item in value)
        return tuple(item.strip() for item in str(value).split(',') if item.strip())


def _positive(**kwargs):
    return fields.Float(validate=validate.Range(min=0, min_inclusive=False), **kwargs)


def _unit_open(**kwargs):
    return fields.Float(validate=validate.Range(min=0, max=1, min_inclusive=False, max_inclusive=False),
                        **kwargs)


def _growth_rate(**kwargs):
    return fields.Float(validate=validate.Range(min=-1, min_inclusive=False), **kwargs)


class SectionSchema(Schema):
    class Meta:
        unknown = RAISE


class ScenarioSectionSchema(SectionSchema):
    model = fields.String(load_default='accumulation',
                          validate=validate.OneOf(['static', 'property-rights', 'accumulation']))


class StaticSectionSchema(SectionSchema):
    eta_level = _unit_open(load_default=0.5)
    beta = _positive(load_default=1.0)
    delta = _unit_open(load_default=0.2)
    n = _growth_rate(load_default=0.0)
    y_m = fields.Float(load_default=1.0, validate=validate.Range(min=0))
    y_e_next = fields.Float(load_default=1.0, validate=validate.Range(min=0))

    @post_load
    def make_static(self, data, **kwargs):
        prefs = PreferenceParams(data['eta_level'], data['beta'], data['delta'])
        incomes = StaticIncomes(y_m=data['y_m'], y_e_next=data['y_e_next'], n=data['n'])
        return {'prefs': prefs, 'incomes': incomes}


class PropertyRightsSectionSchema(SectionSchema):
    alpha = fields.Float(load_default=0.5,
                         validate=validate.Range(min=0, max=1, min_inclusive=False, max_inclusive=True))
    A_m = _positive(load_default=1.0)
    A_e = fields.Float(load_default=0.025, validate=validate.Range(min=0))
    T = _positive(load_default=1.0)
    n = _growth_rate(load_default=0.0)
    N_e = _positive(load_default=1.0)
    rho = _positive(load_default=1.0)
    phi = fields.Float(load_default=0.0, validate=validate.Range(min=0, max=1))
    # preferences behind the inculcation overlay of the phi sweep
    eta_level = _unit_open(load_default=0.5)
    beta = _positive(load_default=1.0)
    delta = _unit_open(load_default=0.3)

    @post_load
    def make_economy(self, data, **kwargs):
        econ = LandEconomy.from_demographics(data['alpha'], data['A_m'], data['A_e'], data['n'],
                                             T=data['T'], N_e=data['N_e'])
        return {
            'economy': econ,
            'rights': RightsParams(data['phi'], data['rho']),
            'prefs': PreferenceParams(data['eta_level'], data['beta'], data['delta']),
        }


class AccumulationSectionSchema(SectionSchema):
    n = _growth_rate(load_default=0.0)
    a = fields.Float(load_default=0.0, validate=validate.Range(min=0))
    alpha = _unit_open(load_default=0.5)
    beta = _positive(load_default=1.0)
    delta = _unit_open(load_default=0.2)
    tau_e = fields.Float(load_default=0.0, validate=validate.Range(min=0))

    @post_load
    def make_params(self, data, **kwargs):
        return GrowthParams(**data)


class SimulateSectionSchema(SectionSchema):
    k0 = _positive(load_default=None, allow_none=True)
    horizon = fields.Integer(load_default=None, allow_none=True, validate=validate.Range(min=2))
    eta0 = fields.Float(load_default=None, allow_none=True,
                        validate=validate.Range(min=0, max=1, max_inclusive=False))


class SweepSectionSchema(SectionSchema):
    start = fields.Float(load_default=None, allow_none=True)
    stop = fields.Float(load_default=None, allow_none=True)
    points = fields.Integer(load_default=None, allow_none=True, validate=validate.Range(min=1))
    values = CommaSeparatedFloats(load_default=None, allow_none=True)
    tau_values = CommaSeparatedFloats(load_default=None, allow_none=True)


class OutputSectionSchema(SectionSchema):
    path = fields.String(load_default=None, allow_none=True)
    format = fields.String(load_default=None, allow_none=True, validate=validate.OneOf(['csv', 'json']))


class EthnoSectionSchema(SectionSchema):
    traits = fields.String(load_default=None, allow_none=True)
    specs = fields.String(load_default=None, allow_none=True)
    scores = fields.String(load_default=None, allow_none=True)
    rows = CommaSeparatedNames(load_default=None, allow_none=True)
    columns = CommaSeparatedNames(load_default=None, allow_none=True)


# Initialize schemas
SECTION_SCHEMAS: Dict[str, Schema] = {
    'scenario': ScenarioSectionSchema(),
    'static': StaticSectionSchema(),
    'property-rights': PropertyRightsSectionSchema(),
    'accumulation': AccumulationSectionSchema(),
    'simulate': SimulateSectionSchema(),
    'sweep': SweepSectionSchema(),
    'output': OutputSectionSchema(),
    'ethno': EthnoSectionSchema(),
}


@dataclass
class ScenarioConfig:
    model: str = 'accumulation'
    static: dict = field(default_factory=dict)
    property_rights: dict = field(default_factory=dict)
    accumulation: GrowthParams = field(default_factory=GrowthParams)
    simulate: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    ethno: dict = field(default_factory=dict)
    source: Optional[str] = None


# ====================== CONFIG PARSER ======================

def _format_messages(section: str, messages) -> str:
    if isinstance(messages, dict):
        parts = [f"[{section}] {key}: {' '.join(map(str, msgs)) if isinstance(msgs, list) else msgs}"
                 for key, msgs in messages.items()]
        return '; '.join(parts)
    return f"[{section}] {messages}"


def _load_section(section: str, raw: Mapping[str, str]):
    try:
        return SECTION_SCHEMAS[section].load(dict(raw))
    except ValidationError as exc:
        raise ConfigError(_format_messages(section, exc.messages)) from exc
    except ParameterError as exc:
        raise ConfigError(f"[{section}] {exc}") from exc


def parse_scenario_config(text: str, source: Optional[str] = None) -> ScenarioConfig:
    """Parse INI text into a validated ScenarioConfig"""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source or '<config>')
    except configparser.Error as exc:
        raise ConfigError(f"Unreadable config: {exc}") from exc

    unknown = [name for name in parser.sections() if name not in SECTION_SCHEMAS]
    if unknown:
        raise ConfigError(f"Unknown config section(s): {', '.join(unknown)}; "
                          f"expected one of {', '.join(SECTION_SCHEMAS)}")

    loaded = {name: _load_section(name, parser[name] if parser.has_section(name) else {})
              for name in SECTION_SCHEMAS}
    return ScenarioConfig(
        model=loaded['scenario']['model'],
        static=loaded['static'],
        property_rights=loaded['property-rights'],
        accumulation=loaded['accumulation'],
        simulate=loaded['simulate'],
        sweep=loaded['sweep'],
        output=loaded['output'],
        ethno=loaded['ethno'],
        source=source,
    )


def load_scenario_config(path: Optional[str] = None) -> ScenarioConfig:
    """Load a scenario file; no path gives the baseline scenario"""
    if path is None:
        return parse_scenario_config('', source=None)
    if not os.path.isfile(path):
        raise FileAccessError(f"Config file not found: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read()
    except OSError as exc:
        raise FileAccessError(f"Cannot read config file {path}: {exc}") from exc
    return parse_scenario_config(text, source=path)
