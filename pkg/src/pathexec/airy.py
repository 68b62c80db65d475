"""Evaluators for the two Airy functions and their derivatives.

The linearly time-weighted risk criterion produces inventory trajectories
built from the independent solutions of u'' = x u.  Only a short interval of
non-negative arguments is ever needed (x up to (c2/c1)^(2/3) * horizon), so
the pair is constructed once by fixed-step RK4 integration of the ODE from
the exact power-series values at the origin:

    Ai(0) = 3^(-2/3)/Gamma(2/3)    Ai'(0) = -3^(-1/3)/Gamma(1/3)
    Bi(0) = 3^(-1/6)/Gamma(2/3)    Bi'(0) =  3^(1/6)/Gamma(1/3)

Off-node arguments are reached by a single partial RK4 step from the nearest
node below, so evaluation keeps the integrator's full accuracy everywhere.
No asymptotic expansions: on this domain Ai stays strictly positive and well
scaled, which is what the trajectory formulas need (they divide by Ai^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = ["AiryPair", "airy_pair", "AI_ZERO", "BI_ZERO", "DAI_ZERO", "DBI_ZERO"]

AI_ZERO = 3.0 ** (-2.0 / 3.0) / math.gamma(2.0 / 3.0)
DAI_ZERO = -(3.0 ** (-1.0 / 3.0)) / math.gamma(1.0 / 3.0)
BI_ZERO = 3.0 ** (-1.0 / 6.0) / math.gamma(2.0 / 3.0)
DBI_ZERO = 3.0 ** (1.0 / 6.0) / math.gamma(1.0 / 3.0)


def _rk4_step(x, y, h):
    """One RK4 step of y' = (u', x u, v', x v) from x with width h (vectorized)."""

    def f(xx, yy):
        return np.stack([yy[1], xx * yy[0], yy[3], xx * yy[2]])

    k1 = f(x, y)
    k2 = f(x + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(x + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(x + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass(frozen=True)
class AiryPair:
    """Ai, Bi, Ai', Bi' on [0, x_max], stored as RK4 node values."""

    x_max: float
    step: float
    nodes: np.ndarray  # shape (4, n_nodes): rows ai, dai, bi, dbi

    def _evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        slack = 1e-9 * max(1.0, self.x_max)
        if np.any(x < -slack) or np.any(x > self.x_max + slack):
            raise DomainError(f"argument outside constructed range [0, {self.x_max}]")
        xc = np.clip(x, 0.0, self.x_max)
        idx = np.minimum((xc / self.step).astype(int), self.nodes.shape[1] - 1)
        base_x = idx * self.step
        y = self.nodes[:, idx]
        return _rk4_step(base_x, y, xc - base_x)

    def ai(self, x):
        return self._evaluate(x)[0]

    def dai(self, x):
        return self._evaluate(x)[1]

    def bi(self, x):
        return self._evaluate(x)[2]

    def dbi(self, x):
        return self._evaluate(x)[3]

    def wronskian(self, x):
        """Ai Bi' - Ai' Bi; constant 1/pi by Abel's identity."""
        v = self._evaluate(x)
        return v[0] * v[3] - v[1] * v[2]

    def ode_residual(self, x, h: float = 1e-5) -> np.ndarray:
        """|u'' - x u| probed by second-order differences of the derivative rows.

        Central stencils in the interior; one-sided second-order stencils
        within h of the domain edges.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        h = min(h, self.x_max / 4.0)
        v = self._evaluate(x)
        d2 = np.empty((2, x.size))
        central = (x >= h) & (x <= self.x_max - h)
        for rows, out_row in (((1,), 0), ((3,), 1)):
            r = rows[0]
            if np.any(central):
                xc = x[central]
                d2[out_row, central] = (
                    self._evaluate(xc + h)[r] - self._evaluate(xc - h)[r]
                ) / (2.0 * h)
            lo = ~central & (x < h)
            if np.any(lo):
                xl = x[lo]
                d2[out_row, lo] = (
                    -3.0 * self._evaluate(xl)[r]
                    + 4.0 * self._evaluate(xl + h)[r]
                    - self._evaluate(xl + 2.0 * h)[r]
                ) / (2.0 * h)
            hi = ~central & (x > self.x_max - h)
            if np.any(hi):
                xh = x[hi]
                d2[out_row, hi] = (
                    3.0 * self._evaluate(xh)[r]
                    - 4.0 * self._evaluate(xh - h)[r]
                    + self._evaluate(xh - 2.0 * h)[r]
                ) / (2.0 * h)
        res_ai = d2[0] - x * v[0]
        res_bi = d2[1] - x * v[2]
        return np.maximum(np.abs(res_ai), np.abs(res_bi))


def airy_pair(x_max: float, tol: float = 1e-9) -> AiryPair:
    """Build the evaluator pair on [0, x_max] to roughly the requested accuracy."""
    if not (0.0 < tol <= 1e-4):
        raise DomainError("tolerance must lie in (0, 1e-4]")
    if x_max <= 0.0:
        raise DomainError("need x_max > 0")
    # global RK4 error ~ n_steps * h^5 ~ x_max * h^4 on an O(1) domain
    h = min(x_max / 64.0, (tol / (50.0 * max(x_max, 1.0))) ** 0.25)
    n_steps = int(math.ceil(x_max / h))
    h = x_max / n_steps
    nodes = np.empty((4, n_steps + 1))
    nodes[:, 0] = [AI_ZERO, DAI_ZERO, BI_ZERO, DBI_ZERO]
    for i in range(n_steps):
        nodes[:, i + 1] = _rk4_step(i * h, nodes[:, i], h)
    return AiryPair(x_max=x_max, step=h, nodes=nodes)
