import json
import os

import numpy as np
import pytest

from pathexec import ConfigError, CsvParseError, MarketParams
from pathexec.harness import (
    ScenarioConfig,
    emit_plotdata,
    ingest_csv,
    load_config,
    run_scenario,
)
from pathexec.pricemodels import ArithmeticBrownian, BrownianBridge, DeterministicPrice


def basic_config(**overrides):
    defaults = dict(
        model=ArithmeticBrownian(s0=100.0, sigma=2.0),
        params=MarketParams(impact=1.35, risk_aversion=1.15,
                            initial_inventory=1_000.0, horizon=1.0),
        criterion="quadratic",
        grid_steps=128,
        paths=16,
        seed=7,
        strategy_tags=("good-quadratic-closed", "static", "twap"),
    )
    defaults.update(overrides)
    return ScenarioConfig(**defaults)


def test_run_scenario_deterministic():
    a = run_scenario(basic_config())
    b = run_scenario(basic_config())
    for sa, sb in zip(a.stats, b.stats):
        assert sa == sb


def test_single_path_deterministic_model():
    config = basic_config(
        model=DeterministicPrice(fn=lambda t: 100.0 + 0 * np.asarray(t)),
        paths=1, strategy_tags=("good-quadratic-closed", "static"))
    a = run_scenario(config)
    b = run_scenario(config)
    assert a.stats_for("static").mean_cost == b.stats_for("static").mean_cost
    # constant price == forecast: the adaptive schedule IS the static one
    assert a.stats_for("good-quadratic-closed").mean_cost == pytest.approx(
        a.stats_for("static").mean_cost, rel=1e-12)


def test_common_random_numbers_toggling_strategy():
    full = run_scenario(basic_config(
        strategy_tags=("good-quadratic-closed", "static", "twap", "aposteriori")))
    trimmed = run_scenario(basic_config(strategy_tags=("good-quadratic-closed",)))
    assert full.stats_for("good-quadratic-closed") == trimmed.stats_for("good-quadratic-closed")


def test_run_scenario_all_strategy_tags():
    config = basic_config(
        paths=4,
        strategy_tags=(
            "good-quadratic-closed", "good-quadratic-ivp", "good-time-closed",
            "good-time-ivp", "good-var-closed", "good-var-ivp", "static",
            "aposteriori", "terminal-penalty", "twap"),
    )
    artifact = run_scenario(config)
    assert {s.tag for s in artifact.stats} == set(config.strategy_tags)
    good = artifact.stats_for("good-quadratic-closed")
    assert good.xi_quantiles is not None and good.xi_quantiles["q10"] > 0


def test_closed_vs_ivp_inside_harness():
    config = basic_config(
        paths=1, grid_steps=2**12,
        strategy_tags=("good-quadratic-closed", "good-quadratic-ivp"))
    artifact = run_scenario(config)
    a = artifact.stats_for("good-quadratic-closed").mean_terminal_error
    b = artifact.stats_for("good-quadratic-ivp").mean_terminal_error
    assert abs(a - b) <= 1e-2 * 1_000.0


def test_time_criterion_dump_builds_airy_panel(tmp_path):
    config = basic_config(criterion="time", paths=2, dump_trajectories=True,
                          strategy_tags=("good-time-closed", "static"))
    artifact = run_scenario(config)
    assert len(artifact.trajectories) == 2
    # the good panel column comes from the time-criterion closed schedule
    tb = artifact.trajectories[0]
    assert tb.q_good[0] == config.params.initial_inventory


def test_exponential_martingale_unbiased_inside_harness():
    from pathexec.pricemodels import ExponentialMartingale

    config = basic_config(model=ExponentialMartingale(s0=100.0, sigma=0.3),
                          paths=400, strategy_tags=("good-quadratic-closed",))
    stats = run_scenario(config).stats_for("good-quadratic-closed")
    assert abs(stats.mean_terminal_error) <= 4.0 * stats.terminal_stderr


def test_validation_errors():
    with pytest.raises(ConfigError):
        run_scenario(basic_config(paths=0))
    with pytest.raises(ConfigError):
        run_scenario(basic_config(criterion="bogus"))
    with pytest.raises(ConfigError):
        run_scenario(basic_config(strategy_tags=("momentum",)))


def test_emit_plotdata_and_byte_stability(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    config = basic_config(paths=3, dump_trajectories=True,
                          strategy_tags=("good-quadratic-closed", "static"))
    files1 = emit_plotdata(run_scenario(config), str(out1))
    files2 = emit_plotdata(run_scenario(config), str(out2))
    assert len(files1) == 3 + 1
    for f1, f2 in zip(files1, files2):
        assert open(f1, "rb").read() == open(f2, "rb").read()
    header = open(files1[0]).readline().strip()
    assert header == "t,price,expected_price,q_static,q_good,q_aposteriori,rate_good"
    rows = open(files1[0]).read().strip().splitlines()
    assert len(rows) == 1 + 128 + 1  # header + grid points
    summary = json.load(open(files1[-1]))
    assert summary["paths"] == 3
    assert "good-quadratic-closed" in summary["strategies"]


def test_emit_plotdata_empty_artifact(tmp_path):
    config = basic_config(paths=2, dump_trajectories=False)
    files = emit_plotdata(run_scenario(config), str(tmp_path / "out"))
    assert len(files) == 1  # only the summary
    summary = json.load(open(files[0]))
    assert summary["trajectory_files"] == 0


def test_ingest_time_price(tmp_path):
    f = tmp_path / "px.csv"
    f.write_text("time,price\n0,100\n1,101\n")
    series = ingest_csv(str(f))
    assert series.prices.tolist() == [100.0, 101.0]
    f.write_text("0,100\n1,101\n")  # header optional
    assert ingest_csv(str(f)).timestamps.tolist() == [0.0, 1.0]


def test_ingest_duplicate_timestamps_last_wins(tmp_path):
    f = tmp_path / "dup.csv"
    f.write_text("0,100\n1,101\n1,102\n2,103\n")
    series = ingest_csv(str(f))
    assert series.prices.tolist() == [100.0, 102.0, 103.0]


def test_ingest_rejects_bad_rows(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("0,100\n1,-5\n")
    with pytest.raises(CsvParseError) as exc:
        ingest_csv(str(f))
    assert exc.value.line == 2
    f.write_text("0,100\n0.5\n")
    with pytest.raises(CsvParseError):
        ingest_csv(str(f))
    f.write_text("1,100\n0,101\n")
    with pytest.raises(CsvParseError):
        ingest_csv(str(f))
    f.write_text("")
    with pytest.raises(CsvParseError):
        ingest_csv(str(f))


def test_ingest_lobster_pair(tmp_path):
    msg = tmp_path / "INTC_message_10.csv"
    book = tmp_path / "INTC_orderbook_10.csv"
    msg.write_text("34200.1,1,1,100,5000,1\n34200.2,1,2,100,5000,-1\n")
    book.write_text("1000100,10,1000000,12\n1000200,10,1000100,12\n")
    series = ingest_csv(str(msg), fmt="lobster-mid")
    assert series.prices[0] == pytest.approx(0.5 * (1000100 + 1000000) * 1e-4)
    assert series.timestamps[0] == pytest.approx(34200.1)


def test_load_config_roundtrip(tmp_path):
    cfg = tmp_path / "scenario.cfg"
    cfg.write_text(
        """
# bond liquidation scenario
model = brownian-bridge
model.s0 = 103.893
model.sigma = 1.1642
model.face_value = 100.0
model.maturity = 1.0
params.impact = 0.05855
params.risk_aversion = 0.07341
params.initial_inventory = 1000
params.horizon = 1.0
criterion = quadratic
grid = 256
paths = 10
seed = 31
strategies = good-quadratic-closed, static, aposteriori
dump_trajectories = true
"""
    )
    config = load_config(str(cfg))
    assert isinstance(config.model, BrownianBridge)
    assert config.model.sigma == 1.1642
    assert config.params.impact == 0.05855
    assert config.strategy_tags == ("good-quadratic-closed", "static", "aposteriori")
    assert config.dump_trajectories
    artifact = run_scenario(config)
    assert artifact.path_count == 10
    assert len(artifact.trajectories) == 10


def test_load_config_ou_jump_model(tmp_path):
    from pathexec.pricemodels import OuJumpDiffusion

    cfg = tmp_path / "jump.cfg"
    cfg.write_text(
        "model = ou-jump-diffusion\n"
        "model.target_price = 120.0\n"
        "model.alpha = 4.0\n"
        "model.sigma = 0.03\n"
        "model.lambda = 8.0\n"
        "model.jump_size = 0.02\n"
        "params.impact = 1.0\n"
        "params.initial_inventory = 100\n"
        "paths = 2\n"
        "strategies = good-quadratic-closed\n"
    )
    config = load_config(str(cfg))
    assert isinstance(config.model, OuJumpDiffusion)
    assert config.model.s0 == pytest.approx(120.0)
    artifact = run_scenario(config)
    assert artifact.path_count == 2


def test_load_config_errors(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("model = warp-drive\n")
    with pytest.raises(ConfigError):
        load_config(str(cfg))
    cfg.write_text("grid = not-a-number\n")
    with pytest.raises(ConfigError):
        load_config(str(cfg))
    cfg.write_text("no equals sign here\n")
    with pytest.raises(ConfigError):
        load_config(str(cfg))
