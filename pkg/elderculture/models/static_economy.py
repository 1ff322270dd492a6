"""
No-savings economy: warm-glow gifts, the cultural-goods market and the
binary inculcation decision of the middle-aged.
"""

import logging
import math
from typing import Tuple

from ..errors import ModelDomainError
from ..model import PreferenceParams, StaticIncomes, StaticOutcome

logger = logging.getLogger(__name__)


def _check_active_eta(prefs: PreferenceParams, active_eta: float):
    if active_eta != 0 and not math.isclose(active_eta, prefs.eta_level, rel_tol=1e-12, abs_tol=0.0):
        raise ModelDomainError(
            f"active_eta={active_eta!r} must be 0 or the inculcation level {prefs.eta_level!r}")


def optimal_gift_simple(prefs: PreferenceParams, active_eta: float, y_m: float,
                        terminal: bool = False) -> float:
    """
    Optimal gift of a middle-aged agent who was inculcated with active_eta.

    Args:
        prefs: Preference parameters
        active_eta: 0 or prefs.eta_level
        y_m: Middle-aged income
        terminal: True when the agent does not inculcate the young, so no
            inculcation cost is paid out of income

    Returns:
        Gift per middle-aged agent
    """
    if y_m < 0:
        raise ModelDomainError(f"y_m={y_m!r} must be non-negative")
    _check_active_eta(prefs, active_eta)
    if active_eta == 0:
        return 0.0
    if terminal:
        return active_eta * y_m
    return active_eta * (y_m - prefs.delta * y_m)


def inculcation_threshold(prefs: PreferenceParams, n: float) -> float:
    """Relative elderly income y_e/y_m at or below which inculcation pays"""
    if n <= -1:
        raise ModelDomainError(f"n={n!r} must exceed -1")
    one_minus_delta = 1 - prefs.delta
    denominator = one_minus_delta ** (-1 / prefs.beta) - 1
    if denominator <= 0:
        # cost share too small to register in floating point
        return math.inf
    return (1 + n) * prefs.eta_level * one_minus_delta / denominator


def delta_utility(prefs: PreferenceParams, incomes: StaticIncomes) -> float:
    """
    Utility gain from inculcating the young relative to not doing so.

    Returns +inf when next-period elderly income is zero: gifts are then the
    only old-age consumption, so inculcation dominates.
    """
    if incomes.y_e_next == 0:
        logger.warning("Elderly income is zero; inculcation is strictly preferred")
        return math.inf
    gift_share = (1 + incomes.n) * prefs.eta_level * (1 - prefs.delta) * incomes.y_m_next / incomes.y_e_next
    return math.log(1 - prefs.delta) + prefs.beta * math.log1p(gift_share)


def chooses_inculcation(prefs: PreferenceParams, incomes: StaticIncomes) -> bool:
    """Threshold test; a tie at Y* goes to inculcation"""
    if incomes.y_e_next == 0:
        return True
    if incomes.y_m_next == 0:
        return False
    return incomes.y_e_next / incomes.y_m_next <= inculcation_threshold(prefs, incomes.n)


def cultural_market(prefs: PreferenceParams, incomes: StaticIncomes) -> Tuple[float, float]:
    """
    Price and per-agent demand in the market for elderly-supplied cultural
    goods that replicates inculcated gift-giving.

    Returns:
        (price, demand) with price * demand equal to the optimal gift
    """
    if incomes.n <= -1:
        raise ModelDomainError(f"n={incomes.n!r} must exceed -1")
    disposable = incomes.y_m - prefs.delta * incomes.y_m
    spending = prefs.eta_level * disposable
    price = (1 + incomes.n) * spending
    if price <= 0:
        raise ModelDomainError("Cultural market is undefined at zero disposable income")
    demand = spending / price
    return price, demand


def relative_consumption_static(prefs: PreferenceParams, income_ratio: float, n: float) -> float:
    """Elderly to middle-aged consumption ratio given y_e/y_m"""
    if income_ratio < 0:
        raise ModelDomainError(f"income_ratio={income_ratio!r} must be non-negative")
    if income_ratio > inculcation_threshold(prefs, n):
        return income_ratio
    eta = prefs.eta_level
    return income_ratio / ((1 - eta) * (1 - prefs.delta)) + (1 + n) * eta / (1 - eta)


def static_consumptions(prefs: PreferenceParams, incomes: StaticIncomes, inculcate: bool) -> Tuple[float, float]:
    """Consumption of an inculcated middle-aged agent and of the elderly they support"""
    gift = optimal_gift_simple(prefs, prefs.eta_level, incomes.y_m, terminal=not inculcate)
    cost = prefs.delta * incomes.y_m if inculcate else 0.0
    c_m = incomes.y_m - gift - cost
    c_e = incomes.y_e_next + (1 + incomes.n) * gift
    return c_m, c_e


def static_outcome(prefs: PreferenceParams, incomes: StaticIncomes) -> StaticOutcome:
    """Full decision of an inculcated middle-aged agent"""
    inculcate = chooses_inculcation(prefs, incomes)
    gift = optimal_gift_simple(prefs, prefs.eta_level, incomes.y_m, terminal=not inculcate)
    if incomes.y_e_next == 0:
        delta_u = math.inf
        income_ratio = 0.0
    elif incomes.y_m_next == 0:
        delta_u = math.log(1 - prefs.delta)
        income_ratio = math.inf
    else:
        delta_u = delta_utility(prefs, incomes)
        income_ratio = incomes.y_e_next / incomes.y_m_next

    consumption_ratio = (relative_consumption_static(prefs, income_ratio, incomes.n)
                         if math.isfinite(income_ratio) else math.inf)

    price = (1 + incomes.n) * gift
    demand = gift / price if price > 0 else 0.0
    logger.debug(f"Static outcome: inculcate={inculcate}, gift={gift:.6g}, dU={delta_u:.6g}")
    return StaticOutcome(
        gift=gift,
        inculcate=inculcate,
        delta_u=delta_u,
        consumption_ratio=consumption_ratio,
        cultural_price=price,
        cultural_demand=demand,
    )
