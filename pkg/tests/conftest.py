import pytest

from pathexec import ArithmeticBrownian, MarketParams, TimeGrid
from pathexec.pricemodels import sample_path


@pytest.fixture
def grid():
    return TimeGrid.uniform(1.0, 1024)


@pytest.fixture
def fig2_params():
    # desk-scale parameter set used throughout: impact 1.35, risk aversion 1.15
    return MarketParams(
        impact=1.35,
        risk_aversion=1.15,
        initial_inventory=10_000.0,
        horizon=1.0,
    )


@pytest.fixture
def brownian_path(grid):
    return sample_path(ArithmeticBrownian(s0=100.0, sigma=5.0), grid, seed=2024)


def dyadic_levels(fine_grid, ks):
    """Sub-grids of a fine dyadic grid, one per requested power of two."""
    return [fine_grid.restrict(2**k) for k in ks]
