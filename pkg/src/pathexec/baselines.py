"""Classical comparison schedules.

* ``static_optimal``            -- deterministic fuel-constrained optimum,
                                   driven entirely by the forecast;
* ``aposteriori_optimal``       -- the pathwise fuel-constrained optimum
                                   computed with the full realized path
                                   (anticipative; benchmark only);
* ``terminal_penalty_optimal``  -- the classical expected-cost optimum with a
                                   quadratic penalty on outstanding terminal
                                   inventory, restricted to deterministic
                                   price drift;
* ``twap``                      -- the straight line.

The static and a-posteriori schedules are the two degenerations of the
adaptive quadratic schedule: feed it the forecast as if realized, or rebuild
its terminal constant from the realized path.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .errors import GridMismatchError
from .pathcalc import SampledPath, TimeGrid, cumulative_trapezoid
from .strategies import ExecutionPlan, MarketParams, _plan, quadratic_trajectory

__all__ = [
    "static_optimal",
    "aposteriori_optimal",
    "terminal_penalty_optimal",
    "twap",
    "challenger_plans",
]


def static_optimal(params: MarketParams, expected: SampledPath) -> ExecutionPlan:
    """Deterministic fuel-constrained optimum; q(T) = xT up to quadrature noise."""
    q, r = quadratic_trajectory(params, expected, expected)
    plan = _plan(params, expected.grid, q, r, "static", "quadratic",
                 float(expected.values[-1]))
    return plan


def aposteriori_optimal(params: MarketParams, realized: SampledPath) -> ExecutionPlan:
    """Pathwise fuel-constrained optimum with the realized path everywhere.

    Anticipative: the terminal constant is rebuilt from the whole realized
    trajectory, so this is a benchmark, never an implementable schedule.
    """
    q, r = quadratic_trajectory(params, realized, realized)
    return _plan(params, realized.grid, q, r, "aposteriori", "quadratic",
                 float(realized.values[-1]))


def _phi_ratio(params: MarketParams, u: np.ndarray, v: np.ndarray):
    """phi(u)/phi(v) with phi(t) = c3 cosh(c3 t) + c6^2 sinh(c3 t).

    Dividing through by c3 keeps the ratio finite in the risk-neutral limit,
    where phi(t)/c3 -> 1 + c6^2 t.
    """
    c3, c6 = params.risk_ratio, params.penalty_ratio
    if params.risk_neutral:
        return (1.0 + c6**2 * u) / (1.0 + c6**2 * v)
    num = np.cosh(c3 * u) + (c6**2 / c3) * np.sinh(c3 * u)
    den = np.cosh(c3 * v) + (c6**2 / c3) * np.sinh(c3 * v)
    return num / den


def _phi_scaled(params: MarketParams, u: np.ndarray) -> np.ndarray:
    """phi(u)/c3, finite for all c3 >= 0."""
    c3, c6 = params.risk_ratio, params.penalty_ratio
    if params.risk_neutral:
        return 1.0 + c6**2 * u
    return np.cosh(c3 * u) + (c6**2 / c3) * np.sinh(c3 * u)


def _dphi_scaled(params: MarketParams, u: np.ndarray) -> np.ndarray:
    """phi'(u)/c3."""
    c3, c6 = params.risk_ratio, params.penalty_ratio
    if params.risk_neutral:
        return np.full_like(np.asarray(u, dtype=float), c6**2)
    return c3 * np.sinh(c3 * u) + c6**2 * np.cosh(c3 * u)


def terminal_penalty_optimal(params: MarketParams, expected: SampledPath,
                             drift: SampledPath) -> ExecutionPlan:
    """Expected-cost optimum with quadratic terminal penalty, deterministic drift.

    q_t = Phi(0,t) x0 + int_0^t Phi(s,t) v(s) ds,  Phi(s,t) = phi(T-t)/phi(T-s),
    v(t) = (1/2c1^2) int_t^T Phi(t,r) dA_r  (A the deterministic drift path).
    Phi separates as phi(T-t) * 1/phi(T-s), so everything reduces to running
    integrals.  Under zero drift the schedule is static with
    q_T = c3 x0 / (c3 cosh(c3 T) + c6^2 sinh(c3 T)): the penalty always
    leaves inventory on the table unless c5 -> infinity.
    """
    if not expected.grid.same_as(drift.grid):
        raise GridMismatchError("expected and drift paths must share the grid")
    t = expected.grid.times
    T = params.horizon
    c1 = params.impact
    x0 = params.initial_inventory
    half_impact = 2.0 * c1**2

    phi_rev = _phi_scaled(params, T - t)          # phi(T-t)/c3
    dphi_rev = _dphi_scaled(params, T - t)        # phi'(T-t)/c3
    # v(t) = [G(T) - G(t)] / (2 c1^2 phi(T-t)) with G a left-point Stieltjes
    # cumulative of phi(T-r) against the drift increments
    da = np.diff(drift.values)
    g = np.concatenate(([0.0], np.cumsum(phi_rev[:-1] * da)))
    v = (g[-1] - g) / (half_impact * phi_rev)

    # q = phi(T-t) * [ x0/phi(T) + int_0^t v/phi(T-s) ds ]
    core = x0 / phi_rev[0] + cumulative_trapezoid(v / phi_rev, t)
    q = phi_rev * core
    r = -dphi_rev * core + v

    plan = _plan(params, expected.grid, q, r, "terminal-penalty", "quadratic",
                 float(expected.values[-1]))
    return replace(plan, certificate=None)


def twap(params: MarketParams, grid: TimeGrid) -> ExecutionPlan:
    """Straight line from x0 to xT at constant rate."""
    t = grid.times
    T = params.horizon
    x0, x_t = params.initial_inventory, params.target_inventory
    q = x0 + (t / T) * (x_t - x0)
    r = np.full_like(t, (x_t - x0) / T)
    plan = _plan(params, grid, q, r, "twap", "quadratic", 0.0)
    return replace(plan, certificate=None)


# ---------------------------------------------------------------------------
# challenger family for the reduction-to-static property (test fixtures)
# ---------------------------------------------------------------------------

def challenger_plans(params: MarketParams, realized: SampledPath,
                     expected: SampledPath, feedback: float) -> list[ExecutionPlan]:
    """Five adapted, fuel-constrained competitors of the static optimum.

    TWAP, a front-loaded and a back-loaded deterministic schedule, and two
    price-reactive schedules with linear feedback on S_t - E[S_t] re-pinned
    by a bridge factor (1 - t/T), with opposite feedback signs.  All are
    adapted and end exactly at the target, so the static optimum must beat
    them in expectation whenever the price drift is deterministic.
    """
    if not realized.grid.same_as(expected.grid):
        raise GridMismatchError("realized and expected paths must share the grid")
    grid = realized.grid
    t = grid.times
    T = params.horizon
    x0, x_t = params.initial_inventory, params.target_inventory
    span = x0 - x_t
    plans = [twap(params, grid)]

    frac = t / T
    q_front = x_t + span * (1.0 - frac) ** 2
    r_front = -2.0 * span / T * (1.0 - frac)
    plans.append(_tagged(params, grid, q_front, r_front, "front-loaded"))

    q_back = x_t + span * (1.0 - frac**2)
    r_back = -2.0 * span * frac / T
    plans.append(_tagged(params, grid, q_back, r_back, "back-loaded"))

    gap = realized.values - expected.values
    z = cumulative_trapezoid(gap, t)
    for sign, tag in ((+1.0, "reactive-pos"), (-1.0, "reactive-neg")):
        g = sign * feedback
        q_react = x_t + span * (1.0 - frac) - g * (1.0 - frac) * z
        r_react = -span / T + g * z / T - g * (1.0 - frac) * gap
        plans.append(_tagged(params, grid, q_react, r_react, tag))
    return plans


def _tagged(params, grid, q, r, tag):
    plan = _plan(params, grid, q, r, tag, "quadratic", 0.0)
    return replace(plan, certificate=None)
