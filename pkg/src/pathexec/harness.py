"""Scenario configuration, Monte Carlo engine, CSV ingestion and plot data.

A scenario bundles a price model, market parameters, a criterion, a grid, a
strategy list and a seed.  ``run_scenario`` samples the paths once (one
sub-seed per path) and evaluates every requested strategy on the same
realizations -- common random numbers -- so that adding or removing a
strategy never perturbs the others' results.  Aggregation is an ordered
reduction: outputs are byte-stable across reruns.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import baselines, calibration, costs, pricemodels, strategies
from .airy import AiryPair, airy_pair
from .errors import ConfigError, CsvParseError, DomainError
from .pathcalc import SampledPath, TimeGrid
from .strategies import ExecutionPlan, MarketParams

__all__ = [
    "ScenarioConfig",
    "RunArtifact",
    "StrategyStats",
    "run_scenario",
    "ingest_csv",
    "emit_plotdata",
    "load_config",
    "GOOD_STRATEGIES",
    "ALL_STRATEGIES",
]

GOOD_STRATEGIES = (
    "good-quadratic-closed",
    "good-quadratic-ivp",
    "good-time-closed",
    "good-time-ivp",
    "good-var-closed",
    "good-var-ivp",
)
BASELINE_STRATEGIES = ("static", "aposteriori", "terminal-penalty", "twap")
ALL_STRATEGIES = GOOD_STRATEGIES + BASELINE_STRATEGIES

MODEL_KINDS = (
    "arithmetic-bm",
    "exponential-martingale",
    "ou-jump-diffusion",
    "brownian-bridge",
    "deterministic",
)


@dataclass
class ScenarioConfig:
    """Everything needed to reproduce one experiment."""

    model: pricemodels.PriceModel
    params: MarketParams
    criterion: str = "quadratic"
    grid_steps: int = 512
    paths: int = 1
    seed: int = 0
    strategy_tags: tuple[str, ...] = ("good-quadratic-closed", "static")
    out_dir: str = "."
    dump_trajectories: bool = False

    def validate(self) -> None:
        if self.paths < 1:
            raise ConfigError("path count must be >= 1")
        if self.grid_steps < 2:
            raise ConfigError("grid resolution must be >= 2")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit an unsigned 64-bit integer")
        if self.criterion not in costs.CRITERIA:
            raise ConfigError(f"unknown criterion {self.criterion!r}")
        for tag in self.strategy_tags:
            if tag not in ALL_STRATEGIES:
                raise ConfigError(f"unknown strategy tag {tag!r}")

    def grid(self) -> TimeGrid:
        return TimeGrid.uniform(self.params.horizon, self.grid_steps)


@dataclass(frozen=True)
class StrategyStats:
    """Cost and liquidation aggregates of one strategy across paths."""

    tag: str
    mean_cost: float
    cost_stderr: float
    mean_terminal_error: float
    terminal_stderr: float
    xi_quantiles: Optional[dict[str, float]] = None


@dataclass
class TrajectoryBundle:
    """Per-path panel series kept only when trajectory dumping is on."""

    times: np.ndarray
    price: np.ndarray
    expected: np.ndarray
    q_static: np.ndarray
    q_good: np.ndarray
    q_aposteriori: np.ndarray
    rate_good: np.ndarray


@dataclass
class RunArtifact:
    """Results of a scenario run: aggregates plus optional trajectories."""

    config: ScenarioConfig
    stats: list[StrategyStats]
    path_count: int
    trajectories: list[TrajectoryBundle] = field(default_factory=list)

    def stats_for(self, tag: str) -> StrategyStats:
        for s in self.stats:
            if s.tag == tag:
                return s
        raise KeyError(tag)


def _path_seeds(root_seed: int, n: int) -> np.ndarray:
    return np.random.SeedSequence(root_seed).generate_state(n, np.uint64)


def _good_runner(tag: str, airy: Optional[AiryPair]) -> Callable:
    if tag == "good-quadratic-closed":
        return strategies.good_exec_quadratic_closed
    if tag == "good-quadratic-ivp":
        return strategies.good_exec_quadratic_ivp
    if tag == "good-var-closed":
        return strategies.good_exec_var_closed
    if tag == "good-var-ivp":
        return strategies.good_exec_var_ivp
    if tag == "good-time-closed":
        return lambda p, s, e: strategies.good_exec_time_closed(p, s, e, airy)
    if tag == "good-time-ivp":
        return lambda p, s, e: strategies.good_exec_time_ivp(p, s, e, airy)
    raise ConfigError(f"unknown strategy tag {tag!r}")


def _closed_good_tag(criterion: str) -> str:
    return {"quadratic": "good-quadratic-closed", "time": "good-time-closed",
            "var": "good-var-closed"}[criterion]


def run_scenario(config: ScenarioConfig) -> RunArtifact:
    """Sample paths and evaluate every listed strategy with common random numbers."""
    config.validate()
    grid = config.grid()
    params = config.params
    expected = pricemodels.expected_path(config.model, grid)
    zero_drift = SampledPath(grid, np.zeros(len(grid)))

    needs_airy = any(t.startswith("good-time") for t in config.strategy_tags) or (
        config.dump_trajectories and config.criterion == "time"
    )
    airy = None
    if needs_airy:
        x_max = max(params.risk_ratio ** (2.0 / 3.0) * params.horizon, 1e-6)
        airy = airy_pair(x_max, tol=1e-9)

    static_plan = baselines.static_optimal(params, expected)
    penalty_plan = baselines.terminal_penalty_optimal(params, expected, zero_drift)
    twap_plan = baselines.twap(params, grid)

    seeds = _path_seeds(config.seed, config.paths)
    cost_rows: dict[str, list[float]] = {t: [] for t in config.strategy_tags}
    term_rows: dict[str, list[float]] = {t: [] for t in config.strategy_tags}
    xi_rows: dict[str, list[float]] = {t: [] for t in config.strategy_tags if t in GOOD_STRATEGIES}
    bundles: list[TrajectoryBundle] = []
    dump_tag = _closed_good_tag(config.criterion)

    for s in seeds:
        realized = pricemodels.sample_path(config.model, grid, int(s))
        plans: dict[str, ExecutionPlan] = {}
        for tag in config.strategy_tags:
            if tag == "static":
                plans[tag] = static_plan
            elif tag == "twap":
                plans[tag] = twap_plan
            elif tag == "terminal-penalty":
                plans[tag] = penalty_plan
            elif tag == "aposteriori":
                plans[tag] = baselines.aposteriori_optimal(params, realized)
            else:
                plans[tag] = _good_runner(tag, airy)(params, realized, expected)
        for tag, plan in plans.items():
            cost_rows[tag].append(costs.cost_J(config.criterion, params, realized, plan))
            term_rows[tag].append(plan.terminal - params.target_inventory)
            if tag in xi_rows and plan.certificate is not None:
                xi_rows[tag].append(plan.certificate.xi)
        if config.dump_trajectories:
            good = plans.get(dump_tag) or _good_runner(dump_tag, airy)(params, realized, expected)
            apost = plans.get("aposteriori") or baselines.aposteriori_optimal(params, realized)
            bundles.append(TrajectoryBundle(
                times=grid.times,
                price=realized.values,
                expected=expected.values,
                q_static=static_plan.q.values,
                q_good=good.q.values,
                q_aposteriori=apost.q.values,
                rate_good=good.r.values,
            ))

    stats = []
    for tag in config.strategy_tags:
        c = np.array(cost_rows[tag])
        e = np.array(term_rows[tag])
        n = c.size
        spread = math.sqrt(n) if n > 1 else 1.0
        xi_q = None
        if tag in xi_rows and xi_rows[tag]:
            finite = np.array([x for x in xi_rows[tag] if math.isfinite(x)])
            if finite.size:
                xi_q = {
                    "q10": float(np.quantile(finite, 0.10)),
                    "q50": float(np.quantile(finite, 0.50)),
                    "q90": float(np.quantile(finite, 0.90)),
                }
        stats.append(StrategyStats(
            tag=tag,
            mean_cost=float(c.mean()),
            cost_stderr=float(c.std(ddof=1) / spread) if n > 1 else 0.0,
            mean_terminal_error=float(e.mean()),
            terminal_stderr=float(e.std(ddof=1) / spread) if n > 1 else 0.0,
            xi_quantiles=xi_q,
        ))
    return RunArtifact(config=config, stats=stats, path_count=config.paths,
                       trajectories=bundles)


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

def _parse_time_price(path: str) -> calibration.MidPriceSeries:
    times: list[float] = []
    prices: list[float] = []
    last_t: Optional[float] = None
    with open(path, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) < 2:
                raise CsvParseError("expected 'time,price'", line=lineno)
            try:
                t, p = float(parts[0]), float(parts[1])
            except ValueError:
                if lineno == 1:
                    continue  # header row
                raise CsvParseError(f"non-numeric row {line!r}", line=lineno)
            if not (math.isfinite(t) and math.isfinite(p)):
                raise CsvParseError("non-finite value", line=lineno)
            if p <= 0:
                raise CsvParseError(f"non-positive price {p}", line=lineno)
            if last_t is not None and t < last_t:
                raise CsvParseError(f"timestamp {t} decreases", line=lineno)
            if last_t is not None and t == last_t:
                prices[-1] = p  # duplicate timestamp: last value wins
            else:
                times.append(t)
                prices.append(p)
            last_t = t
    if not times:
        raise CsvParseError("empty file")
    if len(times) < 2:
        raise CsvParseError("need at least two distinct timestamps")
    return calibration.MidPriceSeries(np.array(times), np.array(prices), source=path)


LOBSTER_PRICE_SCALE = 1e-4  # LOBSTER order book prices come in 1e-4 currency units


def _parse_lobster(message_path: str) -> calibration.MidPriceSeries:
    book_path = message_path.replace("message", "orderbook")
    if book_path == message_path or not os.path.exists(book_path):
        raise CsvParseError(
            "lobster-mid needs a *message*.csv with a matching *orderbook*.csv")
    times: list[float] = []
    prices: list[float] = []
    last_t: Optional[float] = None
    with open(message_path) as fm, open(book_path) as fb:
        for lineno, (mrow, brow) in enumerate(zip(fm, fb), start=1):
            mparts = mrow.strip().split(",")
            bparts = brow.strip().split(",")
            if len(bparts) < 3:
                raise CsvParseError("orderbook row needs ask,asksize,bid,...", line=lineno)
            try:
                t = float(mparts[0])
                ask, bid = float(bparts[0]), float(bparts[2])
            except ValueError:
                raise CsvParseError("non-numeric lobster row", line=lineno)
            mid = 0.5 * (ask + bid) * LOBSTER_PRICE_SCALE
            if mid <= 0:
                raise CsvParseError(f"non-positive mid {mid}", line=lineno)
            if last_t is not None and t < last_t:
                raise CsvParseError(f"timestamp {t} decreases", line=lineno)
            if last_t is not None and t == last_t:
                prices[-1] = mid
            else:
                times.append(t)
                prices.append(mid)
            last_t = t
    if len(times) < 2:
        raise CsvParseError("need at least two distinct timestamps")
    return calibration.MidPriceSeries(np.array(times), np.array(prices), source=message_path)


def ingest_csv(path: str, fmt: str = "time-price") -> calibration.MidPriceSeries:
    """Read a mid-price series from disk.

    ``time-price``: two columns ``time,price`` (header optional).
    ``lobster-mid``: an order-book message/orderbook file pair reduced to the
    mid price.  Duplicate timestamps collapse to the last value.
    """
    if fmt == "time-price":
        return _parse_time_price(path)
    if fmt == "lobster-mid":
        return _parse_lobster(path)
    raise DomainError(f"unknown csv format {fmt!r}")


# ---------------------------------------------------------------------------
# plot-data emission
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


TRAJECTORY_COLUMNS = ("t", "price", "expected_price", "q_static", "q_good",
                      "q_aposteriori", "rate_good")


def emit_plotdata(artifact: RunArtifact, out: str) -> list[str]:
    """Write one CSV per dumped trajectory plus a JSON aggregate summary.

    Column order is fixed and floats are rendered with 17 significant
    digits, so reruns with the same seed are byte-identical.
    """
    os.makedirs(out, exist_ok=True)
    written: list[str] = []
    for i, tb in enumerate(artifact.trajectories):
        fname = os.path.join(out, f"trajectory_{i:04d}.csv")
        cols = (tb.times, tb.price, tb.expected, tb.q_static, tb.q_good,
                tb.q_aposteriori, tb.rate_good)
        with open(fname, "w") as fh:
            fh.write(",".join(TRAJECTORY_COLUMNS) + "\n")
            for row in zip(*cols):
                fh.write(",".join(_fmt(v) for v in row) + "\n")
        written.append(fname)

    summary = {
        "criterion": artifact.config.criterion,
        "paths": artifact.path_count,
        "seed": artifact.config.seed,
        "grid_steps": artifact.config.grid_steps,
        "trajectory_files": len(artifact.trajectories),
        "strategies": {
            s.tag: {
                "mean_cost": s.mean_cost,
                "cost_stderr": s.cost_stderr,
                "mean_terminal_error": s.mean_terminal_error,
                "terminal_stderr": s.terminal_stderr,
                **({"xi_quantiles": s.xi_quantiles} if s.xi_quantiles else {}),
            }
            for s in artifact.stats
        },
    }
    spath = os.path.join(out, "summary.json")
    with open(spath, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(spath)
    return written


# ---------------------------------------------------------------------------
# flat key-value configuration files
# ---------------------------------------------------------------------------

def _parse_kv(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out


def _build_model(kv: dict[str, str]) -> pricemodels.PriceModel:
    kind = kv.get("model", "arithmetic-bm")
    if kind not in MODEL_KINDS:
        raise ConfigError(f"unknown model kind {kind!r}")
    get = lambda key, dflt=None: kv.get(f"model.{key}", dflt)
    try:
        if kind == "arithmetic-bm":
            return pricemodels.ArithmeticBrownian(
                s0=float(get("s0", "100.0")), sigma=float(get("sigma", "1.0")))
        if kind == "exponential-martingale":
            return pricemodels.ExponentialMartingale(
                s0=float(get("s0", "100.0")), sigma=float(get("sigma", "0.2")))
        if kind == "brownian-bridge":
            return pricemodels.BrownianBridge(
                s0=float(get("s0", "100.0")),
                face_value=float(get("face_value", "100.0")),
                sigma=float(get("sigma", "1.0")),
                maturity=float(get("maturity", kv.get("params.horizon", "1.0"))),
            )
        if kind == "ou-jump-diffusion":
            level = math.log(float(get("target_price", get("s0", "100.0"))))
            return pricemodels.OuJumpDiffusion(
                m=lambda t, lv=level: np.full_like(np.asarray(t, dtype=float), lv),
                alpha=float(get("alpha", "5.0")),
                sigma=float(get("sigma", "0.02")),
                lam=float(get("lambda", "0.0")),
                mark_sampler=pricemodels.two_point_marks(float(get("jump_size", "0.01"))),
            )
        level = float(get("s0", "100.0"))
        return pricemodels.DeterministicPrice(
            fn=lambda t, lv=level: np.full_like(np.asarray(t, dtype=float), lv))
    except (ValueError, DomainError) as exc:
        raise ConfigError(f"bad model parameters: {exc}") from exc


def load_config(path: str) -> ScenarioConfig:
    """Parse a flat ``key = value`` scenario file (schema in the README)."""
    kv = _parse_kv(path)
    try:
        params = MarketParams(
            impact=float(kv.get("params.impact", "1.0")),
            risk_aversion=float(kv.get("params.risk_aversion", "0.0")),
            initial_inventory=float(kv.get("params.initial_inventory", "1.0")),
            horizon=float(kv.get("params.horizon", "1.0")),
            target_inventory=float(kv.get("params.target_inventory", "0.0")),
            terminal_penalty=float(kv.get("params.terminal_penalty", "0.0")),
        )
        strategy_tags = tuple(
            s.strip() for s in kv.get("strategies", "good-quadratic-closed,static").split(",")
            if s.strip()
        )
        config = ScenarioConfig(
            model=_build_model(kv),
            params=params,
            criterion=kv.get("criterion", "quadratic"),
            grid_steps=int(kv.get("grid", "512")),
            paths=int(kv.get("paths", "1")),
            seed=int(kv.get("seed", "0")),
            strategy_tags=strategy_tags,
            out_dir=kv.get("out", "."),
            dump_trajectories=kv.get("dump_trajectories", "false").lower()
            in ("1", "true", "yes"),
        )
    except ValueError as exc:
        raise ConfigError(f"bad scenario value: {exc}") from exc
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    config.validate()
    return config
