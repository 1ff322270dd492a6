"""
Brute-force checks of the closed forms: refined grid search over the
lifetime problem, sign bracketing and finite-difference gradients.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Sequence, Tuple

import numpy as np
from scipy import optimize

from ..errors import ElderCultureError, OracleError
from ..model import GridSpec, LifetimeProblem

logger = logging.getLogger(__name__)

DECISION_VARIABLES = ('g', 's', 'eta_next')

Continuation = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class OracleOptimum:
    g: float
    s: float
    eta_next: float
    utility: float
    final_steps: Dict[str, float]


def lifetime_utility(problem: LifetimeProblem, continuation: Continuation,
                     g, s, eta_next) -> np.ndarray:
    """
    Lifetime utility at (g, s, eta_next); arrays broadcast. Infeasible
    points map to -inf.
    """
    g, s, eta_next = np.asarray(g, float), np.asarray(s, float), np.asarray(eta_next, float)
    R_next = 0.0 if problem.R_next is None else problem.R_next
    c_m = problem.y_m - problem.inculcation_cost * eta_next - s - g
    c_e = s * R_next + (1 + problem.n) * np.asarray(continuation(eta_next), float) + problem.y_e_next

    feasible = (c_m > 0) & (c_e > 0) & (g >= 0) & (eta_next >= 0)
    if problem.R_next is None:
        feasible &= s == 0
    if problem.eta > 0:
        feasible &= g > 0

    with np.errstate(divide='ignore', invalid='ignore'):
        utility = (1 - problem.eta) * np.log(c_m) + problem.beta * np.log(c_e)
        if problem.eta > 0:
            utility = utility + problem.eta * np.log(g)
    return np.where(feasible, utility, -np.inf)


def _axis(lo: float, hi: float, resolution: int) -> np.ndarray:
    if hi == lo:
        return np.array([lo])
    return np.linspace(lo, hi, resolution)


def maximize_lifetime_utility(problem: LifetimeProblem, continuation: Continuation,
                              grid: GridSpec) -> OracleOptimum:
    """
    Refined grid search over (g, s, eta_next).

    Each round evaluates a full tensor grid on the current box, then
    re-centres the box on the best cell with half-width bracket_steps grid
    steps, clipped to the original bounds.
    """
    original = {name: tuple(map(float, grid.bounds.get(name, (0.0, 0.0)))) for name in DECISION_VARIABLES}
    current = dict(original)
    best_point, best_utility = None, -np.inf
    steps = {}

    for round_number in range(grid.refinement_rounds):
        axes = [_axis(*current[name], grid.resolution) for name in DECISION_VARIABLES]
        mesh = np.meshgrid(*axes, indexing='ij', sparse=True)
        utility = lifetime_utility(problem, continuation, *mesh)
        if not np.isfinite(utility).any():
            raise OracleError(f"No feasible point in search box {current} (round {round_number})")

        index = np.unravel_index(int(np.argmax(utility)), utility.shape)
        best_point = [float(axis[i]) for axis, i in zip(axes, index)]
        best_utility = float(utility[index])

        for name, value in zip(DECISION_VARIABLES, best_point):
            lo, hi = current[name]
            if hi == lo:
                steps[name] = 0.0
                continue
            step = (hi - lo) / (grid.resolution - 1)
            steps[name] = step
            orig_lo, orig_hi = original[name]
            current[name] = (max(orig_lo, value - grid.bracket_steps * step),
                             min(orig_hi, value + grid.bracket_steps * step))
        logger.debug(f"Oracle round {round_number}: best {best_point} utility {best_utility:.12g}")

    g, s, eta_next = best_point
    return OracleOptimum(g=g, s=s, eta_next=eta_next, utility=best_utility, final_steps=steps)


def bracket_threshold(f: Callable[[float], float], interval: Tuple[float, float],
                      tolerance: float = 1e-10) -> float:
    """Root of f on interval by bisection; f must change sign"""
    lo, hi = interval
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise OracleError(f"No sign change on [{lo}, {hi}]: f={f_lo:.6g} and {f_hi:.6g}")
    return optimize.bisect(f, lo, hi, xtol=tolerance, maxiter=500)


def _safe_value(objective: Callable[[np.ndarray], float], x: np.ndarray) -> float:
    try:
        value = float(objective(x))
    except (ElderCultureError, ValueError, ZeroDivisionError):
        return np.nan
    return value


def finite_difference_gradient(objective: Callable[[np.ndarray], float], point: Sequence[float],
                               step: float = 1e-5, max_shrinks: int = 5) -> np.ndarray:
    """
    Central-difference gradient. A step that leaves the feasible set is
    shrunk tenfold, up to max_shrinks times.
    """
    point = np.asarray(point, dtype=float)
    if not np.isfinite(_safe_value(objective, point)):
        raise OracleError(f"Objective is not finite at {point}")

    gradient = np.empty_like(point)
    for i in range(point.size):
        h = step
        for _ in range(max_shrinks + 1):
            offset = np.zeros_like(point)
            offset[i] = h
            f_plus = _safe_value(objective, point + offset)
            f_minus = _safe_value(objective, point - offset)
            if np.isfinite(f_plus) and np.isfinite(f_minus):
                gradient[i] = (f_plus - f_minus) / (2 * h)
                break
            h /= 10
        else:
            raise OracleError(f"Step {step} leaves the feasible set along axis {i} even after shrinking")
    return gradient
