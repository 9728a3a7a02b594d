import numpy as np
import pytest

from shotfuse import FilterModel, SampleSeries


@pytest.fixture
def identity_model():
    return FilterModel(np.r_[1.0, np.zeros(22)], 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def series(values, rate=100.0, start=0.0):
    return SampleSeries(rate, start, np.asarray(values, dtype=float))


@pytest.fixture
def make_series():
    return series
