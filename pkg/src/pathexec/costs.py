"""Pathwise cost functional, perturbation seminorms and optimality audits.

The running cost of a schedule against a realized price path is integrated
by the trapezoid rule.  Each criterion induces a Sobolev-style seminorm (the
F-weight) on trajectory perturbations; a competitor sits in the pathwise
tubular neighbourhood of a schedule when its terminal deviation is dominated
by xi times the squared F-weight of the deviation.  Inside that
neighbourhood the schedule's cost is provably no worse, which is what
``audit_good_inequality`` verifies numerically on randomly sampled
perturbations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, GridMismatchError
from .pathcalc import SampledPath, trapezoid
from .strategies import ExecutionPlan, MarketParams

__all__ = [
    "CRITERIA",
    "CostReport",
    "cost_J",
    "cost_report",
    "pathwise_f_weight",
    "tubular_member",
    "AuditReport",
    "audit_good_inequality",
    "LiquidationStats",
    "liquidation_stats",
]

CRITERIA = ("quadratic", "time", "var")

# absolute tolerance absorbing quadrature noise in inequality audits
AUDIT_TOL_SCALE = 1e-9


def _lagrangian(criterion: str, params: MarketParams, t: np.ndarray,
                s: np.ndarray, q: np.ndarray, r: np.ndarray) -> np.ndarray:
    c1, c2 = params.impact, params.risk_aversion
    base = r * s + c1**2 * r**2
    if criterion == "quadratic":
        return base + c2**2 * q**2
    if criterion == "time":
        return base + c2**2 * t * q**2
    if criterion == "var":
        return base + c2**2 * q * s
    raise DomainError(f"unknown criterion {criterion!r}")


@dataclass(frozen=True)
class CostReport:
    """Pathwise audit summary for one schedule on one realization."""

    j_value: float
    f_weight: float
    liq_error: float
    criterion_tag: str


def cost_J(criterion: str, params: MarketParams, realized: SampledPath,
           plan: ExecutionPlan) -> float:
    """Trapezoid integral of the running cost F(t, S_t, q_t, r_t)."""
    if not realized.grid.same_as(plan.grid):
        raise GridMismatchError("realized path and plan must share the grid")
    t = realized.grid.times
    f = _lagrangian(criterion, params, t, realized.values, plan.q.values, plan.r.values)
    return trapezoid(f, t)


def cost_report(criterion: str, params: MarketParams, realized: SampledPath,
                plan: ExecutionPlan) -> CostReport:
    """Bundle the pathwise cost, inventory F-weight and liquidation error."""
    return CostReport(
        j_value=cost_J(criterion, params, realized, plan),
        f_weight=pathwise_f_weight(criterion, params, plan.q, rate=plan.r.values),
        liq_error=plan.terminal - params.target_inventory,
        criterion_tag=criterion,
    )


def _rate_of(path: SampledPath) -> np.ndarray:
    # central differences in the interior, one-sided at the ends
    return np.gradient(path.values, path.grid.times)


def pathwise_f_weight(criterion: str, params: MarketParams, eta: SampledPath,
                      rate: Optional[np.ndarray] = None) -> float:
    """The criterion-induced seminorm of a trajectory perturbation.

    quadratic: sqrt( int c2^2 eta^2 + c1^2 eta'^2 )
    time:      sqrt( int c2^2 t eta^2 + c1^2 eta'^2 )
    var:       sqrt( int c1^2 eta'^2 )      (the level term drops out)

    The rate is taken by finite differences unless an analytic one is given.
    """
    t = eta.grid.times
    c1, c2 = params.impact, params.risk_aversion
    d_eta = rate if rate is not None else _rate_of(eta)
    if criterion == "quadratic":
        sq = c2**2 * eta.values**2 + c1**2 * d_eta**2
    elif criterion == "time":
        sq = c2**2 * t * eta.values**2 + c1**2 * d_eta**2
    elif criterion == "var":
        sq = c1**2 * d_eta**2
    else:
        raise DomainError(f"unknown criterion {criterion!r}")
    return math.sqrt(max(trapezoid(sq, t), 0.0))


def _deviation(q: ExecutionPlan, eta: ExecutionPlan) -> tuple[SampledPath, np.ndarray]:
    if not q.grid.same_as(eta.grid):
        raise GridMismatchError("plans must share the grid")
    diff = SampledPath(q.grid, eta.q.values - q.q.values)
    rate = eta.r.values - q.r.values
    return diff, rate


def tubular_member(criterion: str, params: MarketParams, q: ExecutionPlan,
                   eta: ExecutionPlan, xi: float) -> bool:
    """Is eta inside the pathwise tubular neighbourhood of q at radius xi?

    The test is |eta_T - q_T| <= xi * |eta - q|_F^2.
    """
    diff, rate = _deviation(q, eta)
    lhs = abs(diff.values[-1])
    if math.isinf(xi):
        return True
    return lhs <= xi * pathwise_f_weight(criterion, params, diff, rate=rate) ** 2


@dataclass(frozen=True)
class AuditReport:
    """Outcome of a pathwise-optimality audit."""

    criterion: str
    checked: int
    kept: int
    violations: list[tuple[int, float]]
    tolerance: float
    xi: float
    j_value: float

    @property
    def ok(self) -> bool:
        return not self.violations


N_SINE_MODES = 16


def _perturbation_matrix(grid_times: np.ndarray, horizon: float, count: int,
                         seed: int, scale: float):
    """Random compact-support perturbations: sine modes with Gaussian weights.

    Per-perturbation sub-seeds keep the draw independent of evaluation order.
    Returns the paths, their derivatives, and one extra uniform draw per
    perturbation used by the caller to size an optional endpoint bump.
    """
    k = np.arange(1, N_SINE_MODES + 1)
    basis = np.sin(np.outer(k, np.pi * grid_times / horizon))
    basis[:, -1] = 0.0  # sin(k pi) exactly, not float dust
    dbasis = (k[:, None] * np.pi / horizon) * np.cos(np.outer(k, np.pi * grid_times / horizon))
    children = np.random.SeedSequence(seed).spawn(count)
    coeffs = np.empty((count, N_SINE_MODES))
    bump_draws = np.empty(count)
    for i, child in enumerate(children):
        rng = np.random.Generator(np.random.PCG64(child))
        coeffs[i] = rng.standard_normal(N_SINE_MODES) * scale / k
        bump_draws[i] = rng.uniform(-1.2, 1.2)
    return coeffs @ basis, coeffs @ dbasis, bump_draws


def _weight_sq(criterion: str, params: MarketParams, t: np.ndarray,
               e: np.ndarray, de: np.ndarray) -> np.ndarray:
    c1, c2 = params.impact, params.risk_aversion
    if criterion == "quadratic":
        sq = c2**2 * e**2 + c1**2 * de**2
    elif criterion == "time":
        sq = c2**2 * t * e**2 + c1**2 * de**2
    elif criterion == "var":
        sq = c1**2 * de**2
    else:
        raise DomainError(f"unknown criterion {criterion!r}")
    return np.trapezoid(sq, t, axis=1)


def audit_good_inequality(criterion: str, params: MarketParams,
                          realized: SampledPath, plan: ExecutionPlan,
                          perturbations: int, seed: int,
                          scale: Optional[float] = None,
                          endpoint_bump: bool = True) -> AuditReport:
    """Probe the pathwise inequality J(q+e) >= J(q) inside the tubular set.

    Samples random perturbations e with e(0) = 0 built from sine modes; with
    ``endpoint_bump`` each perturbation also carries a t/T ramp whose size is
    drawn relative to its own tubular radius xi |e|_F^2, so the sample covers
    the interior and straddles the boundary of the neighbourhood.  Kept
    perturbations are those with |e_T| <= xi |e|_F^2 for the schedule's
    certificate xi; every kept one whose cost improves on the schedule by
    more than the quadrature tolerance 1e-9 (1 + |J(q)|) is a violation.
    """
    if not realized.grid.same_as(plan.grid):
        raise GridMismatchError("realized path and plan must share the grid")
    t = realized.grid.times
    j0 = cost_J(criterion, params, realized, plan)
    tol = AUDIT_TOL_SCALE * (1.0 + abs(j0))
    if plan.certificate is None:
        raise DomainError("plan carries no certificate; audit needs xi")
    xi = plan.certificate.xi
    if scale is None:
        scale = 1e-3 * max(abs(params.initial_inventory), 1.0)

    e, de, bump_draws = _perturbation_matrix(t, params.horizon, perturbations,
                                             seed, scale)
    if endpoint_bump:
        radius = (xi if math.isfinite(xi) else 1.0) * _weight_sq(
            criterion, params, t, e, de)
        bumps = bump_draws * radius
        e = e + np.outer(bumps, t / params.horizon)
        de = de + bumps[:, None] / params.horizon

    w_sq = _weight_sq(criterion, params, t, e, de)
    member = np.abs(e[:, -1]) <= (np.inf if math.isinf(xi) else xi * w_sq)
    q_pert = plan.q.values[None, :] + e
    r_pert = plan.r.values[None, :] + de
    f = _lagrangian(criterion, params, t[None, :], realized.values[None, :], q_pert, r_pert)
    j_pert = np.trapezoid(f, t, axis=1)

    violations = [
        (int(i), float(j0 - j_pert[i]))
        for i in np.nonzero(member & (j_pert < j0 - tol))[0]
    ]
    return AuditReport(
        criterion=criterion,
        checked=perturbations,
        kept=int(member.sum()),
        violations=violations,
        tolerance=tol,
        xi=xi,
        j_value=j0,
    )


@dataclass(frozen=True)
class LiquidationStats:
    """Sample statistics of terminal liquidation errors q_T - xT."""

    mean_error: float
    stderr: float
    variance: float
    variance_se: float
    variance_bound: Optional[float] = None

    @property
    def within_bound(self) -> Optional[bool]:
        if self.variance_bound is None:
            return None
        return self.variance <= self.variance_bound + 2.0 * self.variance_se


def liquidation_stats(plans: Sequence[ExecutionPlan], x_target: float,
                      params: Optional[MarketParams] = None,
                      variance: Optional[SampledPath] = None) -> LiquidationStats:
    """Mean/variance of liquidation errors across Monte Carlo schedules.

    Given market parameters and the model's variance path, also evaluates the
    dispersion bound  Var(q_T) <= (T / 4 c1^4) int cosh^2(c3 (T-t)) Var(S_t) dt
    for the quadratic criterion.
    """
    if len(plans) < 2:
        raise DomainError("need at least two plans for sample statistics")
    errors = np.array([p.terminal - x_target for p in plans])
    n = errors.size
    mean = float(errors.mean())
    stderr = float(errors.std(ddof=1) / math.sqrt(n))
    var = float(errors.var(ddof=1))
    centered = errors - errors.mean()
    m4 = float(np.mean(centered**4))
    var_se = math.sqrt(max(m4 - var**2, 0.0) / n)

    bound = None
    if params is not None and variance is not None:
        t = variance.grid.times
        c1, c3 = params.impact, params.risk_ratio
        w = np.cosh(c3 * (params.horizon - t)) ** 2
        bound = params.horizon / (4.0 * c1**4) * trapezoid(w * variance.values, t)
    return LiquidationStats(mean, stderr, var, var_se, bound)
