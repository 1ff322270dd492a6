"""
Property rights over output and land, and what they do to the income of
the elderly relative to the middle-aged.
"""

import logging
from typing import Callable, Iterable, List, Optional, Protocol, Tuple

import numpy as np

from ..errors import ModelDomainError, RegimeError
from ..model import IncomeDecomposition, LandEconomy, PreferenceParams, RightsParams
from .static_economy import inculcation_threshold, relative_consumption_static

logger = logging.getLogger(__name__)


class Technology(Protocol):
    def output(self, L: float, T: float) -> float: ...

    def marginal_products(self, L: float, T: float) -> Tuple[float, float]: ...


class CobbDouglas:
    """F(L, T) = L^alpha T^(1-alpha)"""

    def __init__(self, alpha: float):
        self.alpha = alpha

    def output(self, L: float, T: float) -> float:
        return L ** self.alpha * T ** (1 - self.alpha)

    def marginal_products(self, L: float, T: float) -> Tuple[float, float]:
        F = self.output(L, T)
        return self.alpha * F / L, (1 - self.alpha) * F / T


class CallableTechnology:
    """
    Any constant-returns F(L, T). Marginal products come from central
    differences, so the Euler identity holds only to O(step^2).
    """

    def __init__(self, func: Callable[[float, float], float], step: float = 1e-6):
        self.func = func
        self.step = step

    def output(self, L: float, T: float) -> float:
        return float(self.func(L, T))

    def marginal_products(self, L: float, T: float) -> Tuple[float, float]:
        from .oracle import finite_difference_gradient

        gradient = finite_difference_gradient(lambda x: self.func(x[0], x[1]), np.array([L, T]),
                                              step=self.step * max(L, T))
        return float(gradient[0]), float(gradient[1])


def euler_decompose(econ: LandEconomy, technology: Optional[Technology] = None) -> IncomeDecomposition:
    """
    Split output into labour and land contributions.

    Returns:
        Partial IncomeDecomposition; q_m and q_e are per-agent labour incomes
    """
    L = econ.labor
    if L <= 0:
        raise ModelDomainError("Total effective labour must be positive")
    technology = technology or CobbDouglas(econ.alpha)
    F = technology.output(L, econ.T)
    F_L, F_T = technology.marginal_products(L, econ.T)
    return IncomeDecomposition(F=F, F_L=F_L, F_T=F_T, q_m=econ.A_m * F_L, q_e=econ.A_e * F_L)


def sigma_shares(econ: LandEconomy, rights: RightsParams) -> Tuple[float, float]:
    """Per-agent land ownership shares (sigma_e, sigma_m)"""
    phi_land = rights.phi_land
    L = econ.labor
    sigma_e = phi_land / econ.N_e + (1 - phi_land) * econ.A_e / L
    sigma_m = (1 - phi_land) * econ.A_m / L
    return sigma_e, sigma_m


def decompose_incomes(econ: LandEconomy, rights: RightsParams,
                      technology: Optional[Technology] = None) -> IncomeDecomposition:
    """Full decomposition with land shares and incomes after output pooling"""
    partial = euler_decompose(econ, technology)
    sigma_e, sigma_m = sigma_shares(econ, rights)
    land_income = partial.F_T * econ.T
    q_m = partial.q_m + sigma_m * land_income
    q_e = partial.q_e + sigma_e * land_income
    pooled = (1 - rights.phi) * partial.F / econ.population
    return IncomeDecomposition(
        F=partial.F, F_L=partial.F_L, F_T=partial.F_T,
        q_m=q_m, q_e=q_e,
        sigma_m=sigma_m, sigma_e=sigma_e,
        y_m=rights.phi * q_m + pooled,
        y_e=rights.phi * q_e + pooled,
    )


def income_ratio(econ: LandEconomy, rights: RightsParams) -> float:
    """Relative elderly income y_e/y_m under Cobb-Douglas technology"""
    phi, phi_land, alpha = rights.phi, rights.phi_land, econ.alpha
    L, N = econ.labor, econ.population
    numerator = (phi * (econ.A_e * alpha + (econ.A_e * (1 - phi_land) + phi_land * L / econ.N_e) * (1 - alpha))
                 + (1 - phi) * L / N)
    denominator = (phi * (econ.A_m * alpha + econ.A_m * (1 - phi_land) * (1 - alpha))
                   + (1 - phi) * L / N)
    if denominator == 0:
        raise ModelDomainError("Middle-aged income is zero; income ratio undefined")
    return numerator / denominator


def income_ratio_at_full_rights(econ: LandEconomy) -> float:
    """Income ratio when output and land are fully private (phi = 1)"""
    return econ.A_e / (econ.alpha * econ.A_m) + (1 - econ.alpha) / econ.alpha * econ.N_m / econ.N_e


def income_ratio_initial_slope(econ: LandEconomy) -> float:
    """Derivative of the income ratio at phi = 0"""
    return (econ.A_e - econ.A_m) * econ.population / econ.labor


def income_ratio_slope_numerator(econ: LandEconomy, rights: RightsParams) -> float:
    """Sign-carrying part of d(y_e/y_m)/d(phi); zero at the critical phi"""
    return (econ.A_e * econ.N_e
            + econ.A_m * (econ.population * rights.phi_land * (1 - econ.alpha) * (1 + rights.rho) - econ.N_e))


def critical_phi(econ: LandEconomy, rights: RightsParams) -> Optional[float]:
    """
    Degree of property rights at which relative elderly income bottoms out.

    Returns:
        phi* in (0, 1), or None when the ratio is monotone on [0, 1]
    """
    if not econ.u_shape_regime:
        logger.warning(f"A_e={econ.A_e} >= A_m={econ.A_m}: income ratio is not U-shaped")
        raise RegimeError(f"U-shaped income ratio requires A_e < A_m (A_e={econ.A_e}, A_m={econ.A_m})")
    denominator = econ.A_m * econ.population * (1 - econ.alpha) * (1 + rights.rho)
    if denominator == 0:
        return None
    base = (econ.A_m - econ.A_e) * econ.N_e / denominator
    phi_star = base ** (1 / rights.rho)
    if not 0 < phi_star < 1:
        return None
    return phi_star


def phi_grid(points: int = 101) -> np.ndarray:
    return np.linspace(0.0, 1.0, points)


def phi_sweep(econ: LandEconomy, rho: float, grid: Iterable[float],
              prefs: Optional[PreferenceParams] = None) -> List[dict]:
    """
    Income ratio, consumption ratio and inculcation overlay along a grid of
    property-rights levels.
    """
    prefs = prefs or PreferenceParams()
    n = econ.n
    threshold = inculcation_threshold(prefs, n)
    rows = []
    for phi in grid:
        if not 0 <= phi <= 1:
            raise ModelDomainError(f"phi={phi!r} must lie in [0, 1]")
        ratio = income_ratio(econ, RightsParams(phi=float(phi), rho=rho))
        rows.append({
            'phi': float(phi),
            'income_ratio': ratio,
            'consumption_ratio': relative_consumption_static(prefs, ratio, n),
            'inculcation': bool(ratio <= threshold),
        })
    return rows
