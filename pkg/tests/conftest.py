"""Shared fixtures for the swiptsim test suite."""

import pytest

from swiptsim import specfun
from swiptsim.model import SystemParams

needs_native = pytest.mark.skipif(
    specfun.BACKEND != "native",
    reason="minutes-long on the pure-python backend",
)


@pytest.fixture
def params3():
    """Three-antenna system at 20 dB transmit SNR, default powers."""
    return SystemParams.from_snr_db(3, 20.0)


@pytest.fixture
def params6():
    return SystemParams.from_snr_db(6, 20.0)


@pytest.fixture(params=[0.0, 10.0, 20.0, 30.0])
def snr_db(request):
    return request.param
