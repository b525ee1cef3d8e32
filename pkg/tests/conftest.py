"""
Shared fixtures: small grids, calendars and synthetic datasets.
"""
import os
from datetime import date

# No log files from test runs
os.environ.setdefault("HARNESS_LOG_TO_FILE", "false")

import numpy as np
import pytest

from harness.fields.calendar import Calendar
from harness.fields.store import Field
from harness.geometry.grid import regular_grid
from harness.model import CovarianceSpec, SynthConfig


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_grid():
    """10 x 10 lattice at 0.05 degrees in the central Red Sea."""
    return regular_grid(10, 10, 38.0, 20.0, 0.05)


@pytest.fixture
def tiny_grid():
    return regular_grid(5, 4, 38.0, 20.0, 0.1)


@pytest.fixture
def two_year_calendar():
    return Calendar(start_date=date(2007, 1, 1), n_days=731)


@pytest.fixture
def random_field(rng, small_grid, two_year_calendar):
    values = rng.normal(size=(two_year_calendar.n_days, small_grid.n_cells))
    return Field.from_array(values, two_year_calendar)


@pytest.fixture
def small_synth_config():
    return SynthConfig(
        rows=6, cols=5, years=4, start_year=2005,
        anomaly_cov=CovarianceSpec(range_km=30.0), seed=7,
    )
