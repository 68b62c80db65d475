"""Adaptive liquidation schedules that are pathwise-optimal inside tubular
neighbourhoods of competitors, for three risk criteria:

* ``quadratic``  --  running cost  r S + c1^2 r^2 + c2^2 q^2
* ``time``       --  running cost  r S + c1^2 r^2 + c2^2 t q^2
* ``var``        --  running cost  r S + c1^2 r^2 + c2^2 q S   (value-at-risk style)

Each criterion comes in two equivalent constructions: a closed-form
trajectory driven by cumulative integrals of the realized price, and an
explicit-Euler initial-value stepper for the second-order system

    dq = r dt,      dr = (criterion drift) dt - dS / (2 c1^2),

where the price increment enters exactly per step (jumps are never
smoothed).  Both constructions read the realized path only up to the current
time; the future enters solely through the deterministic forecast t -> E[S_t],
so every schedule is implementable in real time.  The terminal inventory is
random but unbiased: E[q_T] equals the liquidation target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .airy import AiryPair
from .errors import DomainError, GridMismatchError
from .pathcalc import SampledPath, TimeGrid, cumulative_trapezoid, trapezoid

__all__ = [
    "MarketParams",
    "Certificate",
    "ExecutionPlan",
    "good_exec_quadratic_closed",
    "good_exec_quadratic_ivp",
    "certificate_quadratic",
    "good_exec_time_closed",
    "good_exec_time_ivp",
    "good_exec_var_closed",
    "good_exec_var_ivp",
    "alt_terminal_K",
    "quadratic_with_terminal_constant",
]

# below this value of c3*T the hyperbolic ratios are replaced by their
# risk-neutral (c3 -> 0) limits to avoid 0/0
DEGENERATE_C3T = 1e-8


@dataclass(frozen=True)
class MarketParams:
    """Impact/risk/penalty coefficients and boundary data of a liquidation.

    ``impact`` multiplies the squared rate in the running cost (temporary
    market impact), ``risk_aversion`` the inventory penalty, and
    ``terminal_penalty`` the squared outstanding inventory at the horizon in
    the classical penalized problem.  Derived ratios: ``risk_ratio`` =
    risk_aversion/impact and ``penalty_ratio`` = terminal_penalty/impact.
    """

    impact: float
    risk_aversion: float
    initial_inventory: float
    horizon: float
    target_inventory: float = 0.0
    terminal_penalty: float = 0.0

    def __post_init__(self):
        if self.impact <= 0.0:
            raise DomainError("impact coefficient must be > 0")
        if self.risk_aversion < 0.0 or self.terminal_penalty < 0.0:
            raise DomainError("risk aversion and terminal penalty must be >= 0")
        if self.horizon <= 0.0:
            raise DomainError("horizon must be > 0")

    @property
    def risk_ratio(self) -> float:
        return self.risk_aversion / self.impact

    @property
    def penalty_ratio(self) -> float:
        return self.terminal_penalty / self.impact

    @property
    def risk_neutral(self) -> bool:
        return self.risk_ratio * self.horizon < DEGENERATE_C3T


@dataclass(frozen=True)
class Certificate:
    """Optimality certificates of a schedule.

    ``xi`` bounds the pathwise tubular neighbourhood on this realization
    (xi = 1/|2 c1^2 r_T + S_T|); ``c`` bounds the in-expectation neighbourhood
    and needs the model's variance function, so it is per model, not per
    path.  Infinite values mean the corresponding neighbourhood is
    unrestricted (deterministic price, or vanishing risk aversion).
    """

    xi: float
    c: Optional[float] = None


@dataclass(frozen=True)
class ExecutionPlan:
    """Paired inventory trajectory and execution rate on a common grid."""

    q: SampledPath
    r: SampledPath
    strategy_tag: str
    criterion_tag: str
    certificate: Optional[Certificate] = None

    def __post_init__(self):
        if not self.q.grid.same_as(self.r.grid):
            raise GridMismatchError("inventory and rate must share the grid")

    @property
    def grid(self) -> TimeGrid:
        return self.q.grid

    @property
    def terminal(self) -> float:
        return float(self.q.values[-1])

    def max_rate_consistency_gap(self) -> float:
        """Sup gap between q and the running trapezoid integral of r."""
        rebuilt = self.q.values[0] + cumulative_trapezoid(self.r.values, self.grid.times)
        return float(np.max(np.abs(rebuilt - self.q.values)))


def _require_shared(realized: SampledPath, expected: SampledPath) -> None:
    if not realized.grid.same_as(expected.grid):
        raise GridMismatchError("realized and expected paths must share the grid")


def _exp_moments(c3: float, t: np.ndarray, values: np.ndarray):
    """Running integrals P(t) = int e^{-c3 u} x_u du and M(t) = int e^{c3 u} x_u du.

    cosh/sinh convolutions assemble from these without catastrophic
    cancellation:  int_0^t cosh(c3 (t-u)) x_u du = (e^{c3 t} P + e^{-c3 t} M)/2.
    """
    p = cumulative_trapezoid(np.exp(-c3 * t) * values, t)
    m = cumulative_trapezoid(np.exp(c3 * t) * values, t)
    return p, m


def _hyperbolic_convolutions(c3: float, t: np.ndarray, values: np.ndarray):
    p, m = _exp_moments(c3, t, values)
    ep, em = np.exp(c3 * t), np.exp(-c3 * t)
    conv_cosh = 0.5 * (ep * p + em * m)
    conv_sinh = 0.5 * (ep * p - em * m)
    return conv_cosh, conv_sinh


def _xi_from_terminal(c1: float, r_terminal: float, s_terminal: float) -> float:
    f_t = 2.0 * c1**2 * r_terminal + s_terminal
    return math.inf if f_t == 0.0 else 1.0 / abs(f_t)


def _plan(params: MarketParams, grid: TimeGrid, q: np.ndarray, r: np.ndarray,
          strategy_tag: str, criterion_tag: str, s_terminal: float) -> ExecutionPlan:
    q = np.array(q, dtype=float)
    q[0] = params.initial_inventory
    cert = Certificate(xi=_xi_from_terminal(params.impact, float(r[-1]), s_terminal))
    return ExecutionPlan(
        q=SampledPath(grid, q),
        r=SampledPath(grid, np.asarray(r, dtype=float)),
        strategy_tag=strategy_tag,
        criterion_tag=criterion_tag,
        certificate=cert,
    )


# ---------------------------------------------------------------------------
# quadratic inventory cost
# ---------------------------------------------------------------------------

def quadratic_trajectory(params: MarketParams, realized: SampledPath,
                         expected: SampledPath) -> tuple[np.ndarray, np.ndarray]:
    """Inventory and rate arrays of the quadratic-criterion schedule.

    q_t = (1-a(t)) x0 + a(t) xT - conv_cosh(S)(t)/(2 c1^2) + K sinh(c3 t)
    with a(t) = 1 - sinh(c3 (T-t))/sinh(c3 T) and the constant K built from
    the forecast so that E[q_T] = xT.  The rate is the exact time derivative.
    """
    _require_shared(realized, expected)
    t = realized.grid.times
    T = params.horizon
    if abs(realized.grid.horizon - T) > 1e-12 * max(1.0, T):
        raise DomainError("grid horizon must match the market horizon")
    c1, c3 = params.impact, params.risk_ratio
    x0, x_t = params.initial_inventory, params.target_inventory
    s = realized.values
    half_impact = 2.0 * c1**2

    if params.risk_neutral:
        cum_s = cumulative_trapezoid(s, t)
        total_e = trapezoid(expected.values, t)
        q = x0 + (t / T) * (x_t - x0) - cum_s / half_impact + t * total_e / (half_impact * T)
        r = (x_t - x0) / T - s / half_impact + total_e / (half_impact * T)
        return q, r

    conv_cosh, conv_sinh = _hyperbolic_convolutions(c3, t, s)
    conv_cosh_e, _ = _hyperbolic_convolutions(c3, t, expected.values)
    sinh_t_full = math.sinh(c3 * T)
    alpha = 1.0 - np.sinh(c3 * (T - t)) / sinh_t_full
    k = conv_cosh_e[-1] / (half_impact * sinh_t_full)
    q = x0 + alpha * (x_t - x0) - conv_cosh / half_impact + k * np.sinh(c3 * t)
    r = (
        c3 * np.cosh(c3 * (T - t)) / sinh_t_full * (x_t - x0)
        - (s + c3 * conv_sinh) / half_impact
        + k * c3 * np.cosh(c3 * t)
    )
    return q, r


def good_exec_quadratic_closed(params: MarketParams, realized: SampledPath,
                               expected: SampledPath) -> ExecutionPlan:
    """Closed-form quadratic-criterion schedule reacting to the realized path."""
    q, r = quadratic_trajectory(params, realized, expected)
    return _plan(params, realized.grid, q, r, "good-quadratic-closed", "quadratic",
                 float(realized.values[-1]))


def _quadratic_r0(params: MarketParams, s0: float, expected: SampledPath) -> float:
    """Initial rate making the Euler-Lagrange flow hit E[q_T] = xT."""
    t = expected.grid.times
    T = params.horizon
    c1, c3 = params.impact, params.risk_ratio
    x0, x_t = params.initial_inventory, params.target_inventory
    half_impact = 2.0 * c1**2
    if params.risk_neutral:
        return -s0 / half_impact + (x_t - x0) / T + trapezoid(expected.values, t) / (half_impact * T)
    cosh_int = trapezoid(np.cosh(c3 * t) * expected.values, t)
    sinh_int = trapezoid(np.sinh(c3 * t) * expected.values, t)
    k_tilde = (math.cosh(c3 * T) * cosh_int - math.sinh(c3 * T) * sinh_int) / half_impact
    return -s0 / half_impact + c3 / math.sinh(c3 * T) * ((x_t - x0) * math.cosh(c3 * T) + k_tilde)


def _euler_ivp(t: np.ndarray, s: np.ndarray, r0: float, x0: float, c1: float,
               drift) -> tuple[np.ndarray, np.ndarray]:
    """Explicit Euler for dq = r dt, dr = drift(t, q, s) dt - dS/(2 c1^2)."""
    n = t.size
    q = np.empty(n)
    r = np.empty(n)
    q[0], r[0] = x0, r0
    half_impact = 2.0 * c1**2
    ds = np.diff(s)
    dt = np.diff(t)
    for i in range(n - 1):
        q[i + 1] = q[i] + r[i] * dt[i]
        r[i + 1] = r[i] + drift(t[i], q[i], s[i]) * dt[i] - ds[i] / half_impact
    return q, r


def good_exec_quadratic_ivp(params: MarketParams, realized: SampledPath,
                            expected: SampledPath) -> ExecutionPlan:
    """Euler-stepped quadratic schedule: dr = c3^2 (q - xT) dt - dS/(2 c1^2)."""
    _require_shared(realized, expected)
    t = realized.grid.times
    c3sq = params.risk_ratio**2
    x_t = params.target_inventory
    r0 = _quadratic_r0(params, float(realized.values[0]), expected)
    q, r = _euler_ivp(
        t, realized.values, r0, params.initial_inventory, params.impact,
        lambda tt, qq, ss: c3sq * (qq - x_t),
    )
    return _plan(params, realized.grid, q, r, "good-quadratic-ivp", "quadratic",
                 float(realized.values[-1]))


def certificate_quadratic(params: MarketParams, realized: SampledPath,
                          expected: SampledPath, variance: SampledPath) -> Certificate:
    """(C, xi) certificates of the quadratic schedule on this realization.

    C^-1 = c3 int_0^T sinh(c3 (T-u)) Var^(1/2)(S_u) du, so the expectation
    neighbourhood is unrestricted for a deterministic price or vanishing risk
    aversion.  xi^-1 = |2 c1 c2 (xT-x0)/sinh(c3 T)
    - c3 int sinh(c3 (T-t)) S_t dt + c3 coth(c3 T) int cosh(c3 (T-t)) E[S_t] dt|.
    """
    _require_shared(realized, expected)
    _require_shared(realized, variance)
    t = realized.grid.times
    T = params.horizon
    c1, c2, c3 = params.impact, params.risk_aversion, params.risk_ratio
    x0, x_t = params.initial_inventory, params.target_inventory

    if params.risk_neutral:
        c_cert = math.inf
        f_t = 2.0 * c1**2 * (x_t - x0) / T + trapezoid(expected.values, t) / T
    else:
        c_inv = c3 * trapezoid(np.sinh(c3 * (T - t)) * np.sqrt(np.maximum(variance.values, 0.0)), t)
        c_cert = math.inf if c_inv == 0.0 else 1.0 / c_inv
        sinh_t = math.sinh(c3 * T)
        f_t = (
            2.0 * c1 * c2 * (x_t - x0) / sinh_t
            - c3 * trapezoid(np.sinh(c3 * (T - t)) * realized.values, t)
            + c3 * math.cosh(c3 * T) / sinh_t * trapezoid(np.cosh(c3 * (T - t)) * expected.values, t)
        )
    xi = math.inf if f_t == 0.0 else 1.0 / abs(f_t)
    return Certificate(xi=xi, c=c_cert)


# ---------------------------------------------------------------------------
# linearly time-weighted inventory cost (Airy machinery)
# ---------------------------------------------------------------------------

def _airy_basis(params: MarketParams, t: np.ndarray, airy: AiryPair):
    """alpha, beta = Ai, Bi at c3^(2/3) t, with their t-derivatives."""
    scale = params.risk_ratio ** (2.0 / 3.0)
    z = scale * t
    a, da = airy.ai(z), scale * airy.dai(z)
    b, db = airy.bi(z), scale * airy.dbi(z)
    return a, da, b, db


def _young_cumulative(weights: np.ndarray, driver: np.ndarray) -> np.ndarray:
    """Running left-point sum  I_k = sum_{i<k} w_i (x_{i+1} - x_i)."""
    out = np.empty_like(weights)
    out[0] = 0.0
    np.cumsum(weights[:-1] * np.diff(driver), out=out[1:])
    return out


def _time_response(params: MarketParams, t: np.ndarray, a: np.ndarray,
                   driver: np.ndarray):
    """phi(t) = (1/2c1^2) int_0^t a^-2(s) [int_0^s a(u) dX_u] ds and its pieces."""
    half_impact = 2.0 * params.impact**2
    inner = _young_cumulative(a, driver)
    dphi = inner / (a**2 * half_impact)
    phi = cumulative_trapezoid(dphi, t)
    return phi, dphi


def good_exec_time_closed(params: MarketParams, realized: SampledPath,
                          expected: SampledPath, airy: AiryPair) -> ExecutionPlan:
    """Closed-form schedule for the time-weighted criterion.

    q_t = cA a(t) + cB b(t) - a(t) phi(t) with a, b the rescaled Airy pair;
    phi integrates the realized path, while the boundary constants use the
    forecast value of phi(T), so that q0 = x0 and E[q_T] = xT.
    """
    _require_shared(realized, expected)
    if params.risk_aversion == 0.0 or params.risk_neutral:
        plan = good_exec_quadratic_closed(params, realized, expected)
        return replace(plan, strategy_tag="good-time-closed", criterion_tag="time")
    t = realized.grid.times
    a, da, b, db = _airy_basis(params, t, airy)
    phi, dphi = _time_response(params, t, a, realized.values)
    ephi, _ = _time_response(params, t, a, expected.values)
    # boundary rows: q(0) = x0 and E[q(T)] = xT
    det = a[0] * b[-1] - a[-1] * b[0]
    rhs0 = params.initial_inventory
    rhs1 = params.target_inventory + a[-1] * ephi[-1]
    c_a = (rhs0 * b[-1] - rhs1 * b[0]) / det
    c_b = (rhs1 * a[0] - rhs0 * a[-1]) / det
    q = c_a * a + c_b * b - a * phi
    r = c_a * da + c_b * db - da * phi - a * dphi
    return _plan(params, realized.grid, q, r, "good-time-closed", "time",
                 float(realized.values[-1]))


def good_exec_time_ivp(params: MarketParams, realized: SampledPath,
                       expected: SampledPath, airy: AiryPair) -> ExecutionPlan:
    """Euler-stepped time-weighted schedule: dr = c3^2 t q dt - dS/(2 c1^2).

    The initial rate comes from variation of parameters around the Airy
    basis: r0 = eA a'(0) + eB b'(0), with the forecast entering through
    K = (1/2c1^2) [ S_0 (a_T b_0 - a_0 b_T)/W
                    + int_0^T E[S_u] (a_T b'_u - b_T a'_u)/W du ],
    W the (constant) Wronskian a b' - a' b.
    """
    _require_shared(realized, expected)
    if params.risk_aversion == 0.0 or params.risk_neutral:
        plan = good_exec_quadratic_ivp(params, realized, expected)
        return replace(plan, strategy_tag="good-time-ivp", criterion_tag="time")
    t = realized.grid.times
    a, da, b, db = _airy_basis(params, t, airy)
    w = a[0] * db[0] - da[0] * b[0]
    s0 = float(realized.values[0])
    half_impact = 2.0 * params.impact**2
    g_prime = (a[-1] * db - b[-1] * da) / w
    k_tilde = (s0 * (a[-1] * b[0] - a[0] * b[-1]) / w
               + trapezoid(expected.values * g_prime, t)) / half_impact
    det = a[0] * b[-1] - a[-1] * b[0]
    rhs1 = params.target_inventory + k_tilde
    e_a = (params.initial_inventory * b[-1] - rhs1 * b[0]) / det
    e_b = (rhs1 * a[0] - params.initial_inventory * a[-1]) / det
    r0 = e_a * da[0] + e_b * db[0]
    c3sq = params.risk_ratio**2
    q, r = _euler_ivp(
        t, realized.values, r0, params.initial_inventory, params.impact,
        lambda tt, qq, ss: c3sq * tt * qq,
    )
    return _plan(params, realized.grid, q, r, "good-time-ivp", "time",
                 float(realized.values[-1]))


# ---------------------------------------------------------------------------
# value-at-risk inspired criterion
# ---------------------------------------------------------------------------

def var_trajectory(params: MarketParams, realized: SampledPath,
                   expected: SampledPath) -> tuple[np.ndarray, np.ndarray]:
    """q_t = (1-t/T) x0 + (t/T) xT - (1/2c1^2) int_0^t (S_s - c2^2 int_0^s S_u du) ds + K t."""
    _require_shared(realized, expected)
    t = realized.grid.times
    T = params.horizon
    c1, c2 = params.impact, params.risk_aversion
    x0, x_t = params.initial_inventory, params.target_inventory
    half_impact = 2.0 * c1**2

    def nested(values: np.ndarray) -> np.ndarray:
        inner = cumulative_trapezoid(values, t)
        return cumulative_trapezoid(values - c2**2 * inner, t), inner

    outer_s, inner_s = nested(realized.values)
    outer_e, _ = nested(expected.values)
    k = outer_e[-1] / (half_impact * T)
    q = x0 + (t / T) * (x_t - x0) - outer_s / half_impact + k * t
    r = (x_t - x0) / T - (realized.values - c2**2 * inner_s) / half_impact + k
    return q, r


def good_exec_var_closed(params: MarketParams, realized: SampledPath,
                         expected: SampledPath) -> ExecutionPlan:
    """Closed-form schedule under the value-at-risk style criterion."""
    q, r = var_trajectory(params, realized, expected)
    return _plan(params, realized.grid, q, r, "good-var-closed", "var",
                 float(realized.values[-1]))


def good_exec_var_ivp(params: MarketParams, realized: SampledPath,
                      expected: SampledPath) -> ExecutionPlan:
    """Euler-stepped schedule: dr = (c3^2/2) S_t dt - dS/(2 c1^2).

    The drift carries no explicit t factor: differentiating the closed form
    twice gives q'' dt = (c3^2/2) S_t dt - dS/(2 c1^2) directly.
    """
    _require_shared(realized, expected)
    t = realized.grid.times
    T = params.horizon
    c1 = params.impact
    half_impact = 2.0 * c1**2
    s0 = float(realized.values[0])
    inner_e = cumulative_trapezoid(expected.values, t)
    r0 = (params.target_inventory - params.initial_inventory) / T + trapezoid(
        expected.values - s0 - params.risk_aversion**2 * inner_e, t
    ) / (half_impact * T)
    half_c3sq = 0.5 * params.risk_ratio**2
    q, r = _euler_ivp(
        t, realized.values, r0, params.initial_inventory, c1,
        lambda tt, qq, ss: half_c3sq * ss,
    )
    return _plan(params, realized.grid, q, r, "good-var-ivp", "var",
                 float(realized.values[-1]))


# ---------------------------------------------------------------------------
# alternative terminal constraints (quadratic criterion)
# ---------------------------------------------------------------------------

def quadratic_with_terminal_constant(params: MarketParams, realized: SampledPath,
                                     k_value: float) -> ExecutionPlan:
    """Quadratic-criterion schedule with a caller-supplied terminal constant.

    Used with ``alt_terminal_K``: substituting a window-based constant for
    the standard one trades the unbiasedness E[q_T] = xT for a softer
    terminal criterion, so the plan is tagged as biased.
    """
    t = realized.grid.times
    T = params.horizon
    c1, c3 = params.impact, params.risk_ratio
    x0, x_t = params.initial_inventory, params.target_inventory
    if params.risk_neutral:
        raise DomainError("window constants need c2 > 0")
    half_impact = 2.0 * c1**2
    conv_cosh, conv_sinh = _hyperbolic_convolutions(c3, t, realized.values)
    alpha = 1.0 - np.sinh(c3 * (T - t)) / math.sinh(c3 * T)
    q = x0 + alpha * (x_t - x0) - conv_cosh / half_impact + k_value * np.sinh(c3 * t)
    r = (
        c3 * np.cosh(c3 * (T - t)) / math.sinh(c3 * T) * (x_t - x0)
        - (realized.values + c3 * conv_sinh) / half_impact
        + k_value * c3 * np.cosh(c3 * t)
    )
    return _plan(params, realized.grid, q, r, "good-quadratic-biased-terminal",
                 "quadratic", float(realized.values[-1]))


def alt_terminal_K(params: MarketParams, expected: SampledPath, mode: str,
                   t0: float, refine: int = 512) -> float:
    """Terminal-adjustment constant for window-based relaxations of E[q_T] = xT.

    ``mode="mean-square-window"`` minimizes E[ mean_{[t0,T]} (q_t - xT)^2 dt ];
    ``mode="window-average"`` minimizes E[ (mean_{[t0,T]} q_t dt - xT)^2 ].
    Both use psi(t) = int_0^t cosh(c3 (t-u)) E[S_u] du - (1-a(t)) (x0 - xT).
    The resulting schedules are generally biased (they leave the unbiased
    class); the mean-square window recovers the standard constant as t0 -> T.
    """
    T = params.horizon
    if not 0.0 <= t0 < T:
        raise DomainError("need 0 <= t0 < horizon")
    if mode not in ("mean-square-window", "window-average"):
        raise DomainError(f"unknown terminal mode {mode!r}")
    c1, c3 = params.impact, params.risk_ratio
    if params.risk_neutral:
        raise DomainError("window constants need c2 > 0 (hyperbolic weights degenerate)")
    x0, x_t = params.initial_inventory, params.target_inventory
    half_impact = 2.0 * c1**2

    # union of the sampling grid and a refinement of the window [t0, T]:
    # psi must be resolved inside possibly tiny windows
    t_union = np.union1d(expected.grid.times, np.linspace(t0, T, refine + 1))
    e_union = np.interp(t_union, expected.grid.times, expected.values)
    conv_cosh, _ = _hyperbolic_convolutions(c3, t_union, e_union)
    alpha = 1.0 - np.sinh(c3 * (T - t_union)) / math.sinh(c3 * T)
    psi = conv_cosh - (1.0 - alpha) * (x0 - x_t)

    win = t_union >= t0 - 1e-15 * max(1.0, T)
    tw, psw = t_union[win], psi[win]
    if mode == "mean-square-window":
        num = trapezoid(np.sinh(c3 * tw) * psw, tw)
        den = half_impact * trapezoid(np.sinh(c3 * tw) ** 2, tw)
        return float(num / den)
    num = c3 * trapezoid(psw, tw)
    den = half_impact * (math.cosh(c3 * T) - math.cosh(c3 * t0))
    return float(num / den)
