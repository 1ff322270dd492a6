"""
Overlapping-generations economy with capital: gifts, savings, endogenous
inculcation, steady states in both regimes and perfect-foresight paths.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from scipy import optimize

from ..errors import ConvergenceError, ModelDomainError, ParameterError
from ..model import (EconomyPath, GrowthParams, LifetimeProblem, PathDiagnostics, Regime,
                     SteadyState)

logger = logging.getLogger(__name__)

DEFAULT_DAMPING = 0.5
DEFAULT_MAX_ITERATIONS = 10_000
DEFAULT_TOLERANCE = 1e-8
DEFAULT_HORIZON = 200
DEFAULT_K0_FRACTION = 0.5


@dataclass(frozen=True)
class SavingsAllocation:
    total: float
    savings: Optional[float] = None
    inculcation_outlay: Optional[float] = None
    no_saving_motive: bool = False


# ---------------------------------------------------------------------------
# Individual choices
# ---------------------------------------------------------------------------

def _lifetime_income(y_m: float, y_e_next: float, R_next: Optional[float]) -> float:
    if y_e_next == 0:
        return y_m
    if R_next is None or R_next <= 0:
        raise ModelDomainError(f"R_next={R_next!r} must be positive when y_e_next > 0")
    return y_m + y_e_next / R_next


def gift_with_accumulation(eta_t: float, beta: float, y_m: float, y_e_next: float = 0.0,
                           R_next: Optional[float] = None) -> float:
    """Gift of a middle-aged agent: a share eta/(1+beta) of lifetime income"""
    if eta_t < 0:
        raise ModelDomainError(f"eta_t={eta_t!r} must be non-negative")
    if eta_t == 0:
        return 0.0
    return eta_t / (1 + beta) * _lifetime_income(y_m, y_e_next, R_next)


def savings_allocation(beta: float, delta: float, y_m: float, y_e_next: float = 0.0,
                       R_next: Optional[float] = None, eta_next: Optional[float] = None) -> SavingsAllocation:
    """
    Total provision for old age, conventional savings plus inculcative
    investment. The split needs eta_next, which equilibrium pins down.
    """
    discounted_future = 0.0 if y_e_next == 0 else y_e_next / _positive_return(R_next)
    total = (beta * y_m - discounted_future) / (1 + beta)
    no_motive = total < 0
    if no_motive:
        logger.warning(f"No net saving motive: discounted elderly income {discounted_future:.6g} "
                       f"exceeds beta * y_m = {beta * y_m:.6g}")
    if eta_next is None:
        return SavingsAllocation(total=total, no_saving_motive=no_motive)
    outlay = eta_next * delta * y_m
    return SavingsAllocation(total=total, savings=total - outlay, inculcation_outlay=outlay,
                             no_saving_motive=no_motive)


def _positive_return(R_next: Optional[float]) -> float:
    if R_next is None or R_next <= 0:
        raise ModelDomainError(f"R_next={R_next!r} must be positive when y_e_next > 0")
    return R_next


def analytic_choice(problem: LifetimeProblem, eta_next: float) -> Tuple[float, float]:
    """Gift and conventional savings solving the lifetime problem for a given eta_next"""
    gift = gift_with_accumulation(problem.eta, problem.beta, problem.y_m, problem.y_e_next, problem.R_next)
    allocation = savings_allocation(problem.beta, problem.delta, problem.y_m, problem.y_e_next,
                                    problem.R_next, eta_next=eta_next)
    return gift, allocation.savings


def equilibrium_psi(problem: LifetimeProblem) -> float:
    """Next-period gift multiplier consistent with equal returns on both instruments"""
    return problem.inculcation_cost * _positive_return(problem.R_next) / (1 + problem.n)


def equilibrium_continuation(problem: LifetimeProblem) -> Callable[[np.ndarray], np.ndarray]:
    """Gift policy of the next middle-aged generation as a function of eta_next"""
    psi_next = equilibrium_psi(problem)
    return lambda eta_next: np.asarray(eta_next) * psi_next


def first_order_conditions(problem: LifetimeProblem, g: float, s: float, eta_next: float,
                           psi_next: Optional[float] = None) -> np.ndarray:
    """
    Derivatives of lifetime utility in (g, s, eta_next) when the next
    generation gives eta_next * psi_next.
    """
    if psi_next is None:
        psi_next = equilibrium_psi(problem)
    R_next = _positive_return(problem.R_next)
    d = problem.inculcation_cost
    c_m = problem.y_m - d * eta_next - s - g
    c_e = s * R_next + (1 + problem.n) * eta_next * psi_next + problem.y_e_next
    if c_m <= 0 or c_e <= 0 or g <= 0:
        raise ModelDomainError("First-order conditions need positive consumptions and gift")
    weight = 1 - problem.eta
    return np.array([
        -weight / c_m + problem.eta / g,
        -weight / c_m + problem.beta * R_next / c_e,
        -weight * d / c_m + problem.beta * (1 + problem.n) * psi_next / c_e,
    ])


# ---------------------------------------------------------------------------
# Steady states
# ---------------------------------------------------------------------------

def _return_scale(params: GrowthParams) -> float:
    return (1 + params.n) * (1 + params.a) / ((1 + params.beta) * params.delta)


def _eta_from_return(params: GrowthParams, R: float) -> float:
    """Inculcation level implied by a steady-state return, before clamping"""
    x = params.capital_intensity
    return (params.beta / (params.delta * (1 + params.beta))
            - (1 + params.a) / (params.delta * R)
            * (params.tau_e / (1 + params.beta) + (1 + params.n) / (1 - params.gamma_e) * x))


def _no_inculcation_return(params: GrowthParams) -> float:
    x = params.capital_intensity
    return ((1 + params.a) / params.beta
            * ((1 + params.n) * (1 + params.beta) / (1 - params.gamma_e) * x + params.tau_e))


def _capital_from_return(params: GrowthParams, R: float) -> float:
    return ((1 - params.alpha) / R) ** (1 / params.alpha)


def eta_star_simple(beta: float, delta: float, alpha: float) -> float:
    """Steady-state inculcation when the elderly have no labour income"""
    raw = beta / ((1 + beta) * delta) - (1 - alpha) / alpha * (1 + beta)
    if raw >= 1:
        raise ParameterError('eta_star', raw, '[0, 1) (utility weights out of range)')
    return max(0.0, raw)


def inculcation_return(params: GrowthParams) -> float:
    """Positive root of R^2 - A R - A tau_e (1+a) = 0"""
    A = _return_scale(params)
    discriminant = A * A + 4 * A * params.tau_e * (1 + params.a)
    if discriminant < 0:
        raise ModelDomainError("Steady-state return equation has no real root")
    root = (A + math.sqrt(discriminant)) / 2
    if root <= 0:
        raise ModelDomainError("Steady-state return equation has no positive root")
    return root


def steady_state(params: GrowthParams) -> SteadyState:
    """Balanced-growth equilibrium, switching to the no-inculcation regime when eta would be negative"""
    R = inculcation_return(params)
    eta = _eta_from_return(params, R)
    if eta >= 1:
        raise ParameterError('eta_star', eta, '[0, 1) (utility weights out of range)')
    if eta <= 0:
        logger.info(f"Unclamped eta*={eta:.6g} <= 0; steady state without inculcation")
        R = _no_inculcation_return(params)
        eta = 0.0
        regime = Regime.NO_INCULCATION
    else:
        regime = Regime.INCULCATION

    k = _capital_from_return(params, R)
    ratio = params.beta * R / ((1 - eta) * (1 + params.a))
    return SteadyState(R=R, k=k, eta=eta, regime=regime, consumption_ratio=ratio)


def steady_state_residuals(state: SteadyState, params: GrowthParams) -> Dict[str, float]:
    """Residuals of the equations defining a steady state"""
    residuals = {
        'eta_equation': state.eta - max(0.0, _eta_from_return(params, state.R)),
        'capital_return': state.R - (1 - params.alpha) * state.k ** (-params.alpha),
        'consumption_ratio': state.consumption_ratio
        - params.beta * state.R / ((1 - state.eta) * (1 + params.a)),
    }
    if state.regime is Regime.INCULCATION:
        A = _return_scale(params)
        residuals['return_quadratic'] = state.R ** 2 - A * state.R - A * params.tau_e * (1 + params.a)
    else:
        residuals['no_inculcation_return'] = state.R - _no_inculcation_return(params)
    return residuals


def balanced_growth_ratio_branches(params: GrowthParams) -> Tuple[float, float]:
    """
    Closed-form c_e/c_m on the balanced-growth path without elderly labour,
    as (no-inculcation branch, inculcation branch).
    """
    if params.tau_e != 0:
        raise ModelDomainError("Closed-form consumption branches assume tau_e = 0")
    x = params.capital_intensity
    beta, delta, n = params.beta, params.delta, params.n
    no_inculcation = x * (1 + beta) * (1 + n)
    denominator = delta * (1 + beta) * (1 + x * (1 + beta)) - beta
    if denominator <= 0:
        raise ParameterError('capital_intensity', x, 'values with eta* < 1')
    return no_inculcation, beta * (1 + n) / denominator


def inculcation_capital_threshold(params: GrowthParams) -> float:
    """Capital intensity (1-alpha)/alpha below which the steady state has inculcation"""
    R = inculcation_return(params)
    return ((R * params.beta / (1 + params.a) - params.tau_e) * (1 - params.gamma_e)
            / ((1 + params.beta) * (1 + params.n)))


# ---------------------------------------------------------------------------
# Ratios and residuals along paths
# ---------------------------------------------------------------------------

def equilibration_residual(R_t: float, y_m: float, y_e_next: float, R_next: float, d_prev: float,
                           n: float, beta: float) -> float:
    """Gap between the return on savings and the return on past inculcation"""
    if d_prev == 0:
        raise ModelDomainError("Inculcation cost of the previous period is zero")
    return R_t - (1 + n) / (1 + beta) * _lifetime_income(y_m, y_e_next, R_next) / d_prev


def return_equilibration_residual(path: EconomyPath, t: int) -> float:
    if not 1 <= t < len(path.k) - 1:
        raise ModelDomainError(f"t={t} needs a previous and a next period on the path")
    if path.eta[t] <= 0:
        raise ModelDomainError(f"eta_{t}=0: inculcation is not in use")
    params = path.params
    return equilibration_residual(path.R[t], path.y_m[t], path.y_e[t + 1], path.R[t + 1],
                                  params.delta * path.y_m[t - 1], params.n, params.beta)


def consumption_ratio(state: Union[SteadyState, EconomyPath], params: GrowthParams,
                      t: Optional[int] = None) -> float:
    """Elderly to middle-aged consumption on a steady state or at period t of a path"""
    if isinstance(state, SteadyState):
        if state.eta >= 1:
            raise ModelDomainError("eta must be below 1")
        return params.beta * state.R / ((1 - state.eta) * (1 + params.a))

    path = state
    if t is None:
        raise ModelDomainError("A path slice needs a period t")
    if not 0 <= t < path.horizon:
        raise ModelDomainError(f"t={t} outside the path")
    if t >= 1 and path.eta[t] > 0:
        return (params.beta * path.R[t] / (1 - path.eta[t])
                * (path.y_m[t - 1] + path.y_e[t] / path.R[t])
                / (path.y_m[t] + path.y_e[t + 1] / path.R[t + 1]))
    return path.c_e[t] / path.c_m[t]


# ---------------------------------------------------------------------------
# Dynamics
# ---------------------------------------------------------------------------

def _no_inculcation_coefficient(params: GrowthParams) -> Tuple[float, float]:
    """(C, beta / ((1+beta) delta C)); C links eta_{t+1} to k_{t+1}/k_t^(1-alpha)"""
    alpha, beta, delta = params.alpha, params.beta, params.delta
    C = (params.tau_e * (1 + params.a) / ((1 - alpha) * (1 + beta) * delta)
         + (1 + params.n) * (1 + params.a) / (alpha * delta * (1 - params.gamma_e)))
    return C, beta / ((1 + beta) * delta * C)


def _unclamped_eta(params: GrowthParams, k_prev: np.ndarray, k_next: np.ndarray) -> np.ndarray:
    C, _ = _no_inculcation_coefficient(params)
    return params.beta / ((1 + params.beta) * params.delta) - C * k_next / k_prev ** (1 - params.alpha)


def _interior_capital(params: GrowthParams, k_prev: np.ndarray, k_next: np.ndarray) -> np.ndarray:
    """
    k_t equating the return on savings with the return on inculcation,
    given its neighbours. Solved in logs; the map is concave and decreasing.
    """
    alpha = params.alpha
    A = _return_scale(params)
    p = k_prev ** (1 - alpha)
    q = params.tau_e * (1 + params.a) / (1 - alpha) * k_next / p
    explicit = (1 - alpha) * p / A
    if not np.any(q):
        return explicit

    def gap(z):
        return np.log(1 - alpha) - alpha * z - np.log(A) - np.log(np.exp((1 - alpha) * z) / p + q)

    def slope(z):
        own = np.exp((1 - alpha) * z) / p
        return -alpha - (1 - alpha) * own / (own + q)

    z = optimize.newton(gap, np.log(explicit), fprime=slope, tol=1e-14, maxiter=100)
    return np.exp(np.atleast_1d(z))


def _equation_residuals(params: GrowthParams, k: np.ndarray, interior: np.ndarray) -> np.ndarray:
    """Return-equilibration residual where eta_t > 0, eta equation residual at the corner"""
    alpha = params.alpha
    k_prev, k_now, k_next = k[:-2], k[1:-1], k[2:]
    A = _return_scale(params)
    R = (1 - alpha) * k_now ** (-alpha)
    rhs = A * (k_now ** (1 - alpha) + params.tau_e * (1 + params.a) / (1 - alpha) * k_next) / k_prev ** (1 - alpha)
    return np.where(interior, R - rhs, _unclamped_eta(params, k_prev, k_now))


def _explicit_capital_path(params: GrowthParams, k0: float, horizon: int) -> np.ndarray:
    alpha = params.alpha
    _, noinc = _no_inculcation_coefficient(params)
    inc = (1 - alpha) / _return_scale(params)
    k = np.empty(horizon + 1)
    k[0] = k0
    for t in range(horizon):
        k[t + 1] = min(inc, noinc) * k[t] ** (1 - alpha)
    return k


def _perfect_foresight_capital_path(params: GrowthParams, k0: float, k_bar: float, horizon: int,
                                    damping: float, max_iterations: int, tolerance: float,
                                    initial_guess: Optional[np.ndarray] = None) -> Tuple[np.ndarray, PathDiagnostics]:
    alpha = params.alpha
    _, noinc = _no_inculcation_coefficient(params)
    if initial_guess is None:
        periods = np.arange(horizon + 1)
        k = k_bar * (k0 / k_bar) ** ((1 - alpha) ** periods)
    else:
        k = np.array(initial_guess, dtype=float)
    k[0], k[-1] = k0, k_bar

    max_residual, worst = math.inf, None
    for iteration in range(max_iterations + 1):
        k_inc = _interior_capital(params, k[:-2], k[2:])
        k_noinc = noinc * k[:-2] ** (1 - alpha)
        interior = k_inc <= k_noinc
        residuals = np.abs(_equation_residuals(params, k, interior))
        worst_index = int(np.argmax(residuals))
        max_residual, worst = float(residuals[worst_index]), worst_index + 1
        if max_residual < tolerance:
            logger.debug(f"Path converged after {iteration} iterations (max residual {max_residual:.3e})")
            return k, PathDiagnostics(iteration, max_residual, True, worst)
        if iteration % 500 == 0:
            logger.debug(f"Iteration {iteration}: max residual {max_residual:.3e} at t={worst}")
        k[1:-1] = (1 - damping) * k[1:-1] + damping * np.minimum(k_inc, k_noinc)

    raise ConvergenceError("Perfect-foresight path did not converge", iterations=max_iterations,
                           max_residual=max_residual, worst_period=worst)


def _assemble_path(params: GrowthParams, k: np.ndarray, eta0: float, diagnostics: PathDiagnostics,
                   state: SteadyState) -> EconomyPath:
    alpha, beta, n, a = params.alpha, params.beta, params.n, params.a
    horizon = len(k) - 1
    periods = np.arange(horizon + 1)
    productivity = (1 + a) ** periods

    R = (1 - alpha) * k ** (-alpha)
    y_m = alpha * productivity * k ** (1 - alpha)
    y_e = params.tau_e * y_m

    eta = np.empty(horizon + 1)
    eta[0] = eta0
    eta[1:] = np.maximum(0.0, _unclamped_eta(params, k[:-1], k[1:]))
    if np.any(eta >= 1):
        t = int(np.argmax(eta >= 1))
        raise ModelDomainError(f"eta_{t}={eta[t]:.6g} reaches 1 along the path")

    s_m = k[1:] * (1 + n) * (1 + a) * productivity[:-1] / (1 - params.gamma_e)
    s_initial = k[0] * (1 + n) / (1 - params.gamma_e)
    s_prev = np.concatenate(([s_initial], s_m[:-1]))

    psi = (y_m[:-1] + y_e[1:] / R[1:]) / (1 + beta)
    g_m = eta[:-1] * psi
    c_m = y_m[:-1] - g_m - s_m - params.delta * y_m[:-1] * eta[1:]
    c_e = y_e[:-1] + (1 + n) * g_m + R[:-1] * s_prev
    if np.any(c_m <= 0) or np.any(c_e <= 0):
        raise ModelDomainError("Path implies non-positive consumption")

    return EconomyPath(params=params, k=k, R=R, y_m=y_m, y_e=y_e, eta=eta, s_m=s_m, g_m=g_m, psi=psi,
                       c_m=c_m, c_e=c_e, s_initial=s_initial, diagnostics=diagnostics, steady_state=state)


def simulate_path(params: GrowthParams, k0: Optional[float] = None, horizon: Optional[int] = None, *,
                  eta0: Optional[float] = None, damping: float = DEFAULT_DAMPING,
                  max_iterations: int = DEFAULT_MAX_ITERATIONS, tolerance: float = DEFAULT_TOLERANCE,
                  k0_fraction: float = DEFAULT_K0_FRACTION,
                  initial_guess: Optional[Sequence[float]] = None) -> EconomyPath:
    """
    Equilibrium path from k0.

    Without elderly labour the recursion is explicit and first order. With
    tau_e > 0 it is second order, so the whole sequence is solved by damped
    fixed-point iteration with k_T pinned to the steady state. The default
    starting sequence k_bar (k0 / k_bar)^((1-alpha)^t) already solves the
    system when one regime holds along the whole path, so the iteration
    usually stops at once; pass initial_guess to start elsewhere.

    Args:
        params: Growth parameters
        k0: Initial capital per effective worker (default k0_fraction * k_bar)
        horizon: Number of periods T
        eta0: Inculcation received by the first middle-aged generation
            (default: steady-state eta)
        initial_guess: Starting capital sequence of length horizon + 1 for the
            iterative solver; its endpoints are replaced by k0 and k_bar

    Returns:
        EconomyPath with convergence diagnostics
    """
    state = steady_state(params)
    k0 = k0_fraction * state.k if k0 is None else k0
    horizon = DEFAULT_HORIZON if horizon is None else horizon
    if k0 <= 0:
        raise ModelDomainError(f"k0={k0!r} must be positive")
    if horizon < 2:
        raise ModelDomainError(f"horizon={horizon!r} must be at least 2")
    if not 0 < damping <= 1:
        raise ParameterError('damping', damping, '(0, 1]')
    if initial_guess is not None:
        initial_guess = np.asarray(initial_guess, dtype=float)
        if initial_guess.shape != (horizon + 1,) or np.any(initial_guess <= 0):
            raise ModelDomainError(f"initial_guess must hold {horizon + 1} positive values")

    if params.tau_e == 0:
        k = _explicit_capital_path(params, k0, horizon)
        k_inc = _interior_capital(params, k[:-2], k[2:])
        _, noinc = _no_inculcation_coefficient(params)
        residuals = np.abs(_equation_residuals(params, k, k_inc <= noinc * k[:-2] ** (1 - params.alpha)))
        diagnostics = PathDiagnostics(0, float(residuals.max()), True, int(np.argmax(residuals)) + 1)
    else:
        k, diagnostics = _perfect_foresight_capital_path(params, k0, state.k, horizon, damping,
                                                         max_iterations, tolerance, initial_guess)

    eta0 = state.eta if eta0 is None else eta0
    logger.info(f"Simulated {horizon} periods from k0={k0:.6g} (k_bar={state.k:.6g}, "
                f"max residual {diagnostics.max_residual:.3e})")
    return _assemble_path(params, k, eta0, diagnostics, state)


def balanced_growth_diagnostics(path: EconomyPath, params: GrowthParams, tail: int = 10) -> Dict[str, float]:
    """Largest deviations from balanced growth over the last `tail` periods"""
    state = path.steady_state or steady_state(params)
    horizon = path.horizon
    tail = min(tail, horizon - 1)
    periods = range(horizon - tail, horizon)
    target_ratio = consumption_ratio(state, params)
    return {
        'income_growth': max(abs(path.y_m[t + 1] / path.y_m[t] - (1 + params.a)) for t in periods),
        'return': max(abs(path.R[t] - state.R) for t in periods),
        'consumption_ratio': max(abs(consumption_ratio(path, params, t) - target_ratio) for t in periods),
    }


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def capital_intensity_point(params: GrowthParams, capital_intensity: float) -> dict:
    point = params.with_changes(alpha=1 / (1 + capital_intensity))
    row = {
        'tau_e': point.tau_e,
        'capital_intensity': capital_intensity,
        'alpha': point.alpha,
    }
    try:
        state = steady_state(point)
    except ParameterError as exc:
        logger.info(f"Capital intensity {capital_intensity:.6g} inadmissible: {exc}")
        row.update(R=math.nan, eta=math.nan, regime='', consumption_ratio=math.nan, admissible=False)
        return row
    row.update(R=state.R, eta=state.eta, regime=state.regime.value,
               consumption_ratio=state.consumption_ratio, admissible=True)
    return row


def capital_intensity_grid(start: float = 0.05, stop: float = 3.0, points: int = 60) -> np.ndarray:
    return np.linspace(start, stop, points)


def capital_intensity_sweep(params: GrowthParams, grid: Iterable[float],
                            tau_values: Optional[Iterable[float]] = None, n_jobs: int = 1) -> List[dict]:
    """
    Steady states along a grid of capital intensities (1-alpha)/alpha, one
    block per tau_e value.
    """
    grid = [float(x) for x in grid]
    for x in grid:
        if x <= 0:
            raise ParameterError('capital_intensity', x, '(0, inf)')
    taus = [params.tau_e] if tau_values is None else [float(tau) for tau in tau_values]
    tasks = [(params.with_changes(tau_e=tau), x) for tau in taus for x in grid]
    return Parallel(n_jobs=n_jobs)(delayed(capital_intensity_point)(p, x) for p, x in tasks)
