import numpy as np
import pytest

from hyperfit.models import SingularityParams, eval_singularity
from hyperfit.series import Epoch, PriceIndexSeries


def yearly_epochs(year0: int, year1: int) -> tuple[Epoch, ...]:
    return tuple(Epoch(year=y) for y in range(year0, year1 + 1))


def synthetic_yearly_index(params: SingularityParams, year0: int, year1: int) -> PriceIndexSeries:
    """Noiseless yearly index generated from singular-model parameters."""
    epochs = yearly_epochs(year0, year1)
    t = np.array([float(e.year) for e in epochs])
    return PriceIndexSeries.from_log_index(epochs, eval_singularity(params, t))


@pytest.fixture
def peru_params() -> SingularityParams:
    return SingularityParams(tc=1991.29, alpha=0.29, c0=0.18, p0=-0.38, t0=1969.0)


@pytest.fixture
def peru_index(peru_params) -> PriceIndexSeries:
    return synthetic_yearly_index(peru_params, 1969, 1990)
