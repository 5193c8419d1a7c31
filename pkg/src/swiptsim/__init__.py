"""Simulation and analysis toolkit for a wireless-powered MISO downlink.

An L-antenna access point powers a single-antenna, battery-less terminal over
the downlink; the terminal banks the harvested energy within each coherence
block and spends it on channel-state feedback and on decoding.  The package
covers three channel-knowledge regimes (no CSI, TDD reciprocity training, FDD
quantized-free feedback), with

* exact per-realization rate and time-allocation models (``model``,
  ``schemes``),
* closed-form / quadrature outage probabilities (``outage``) built on
  hand-implemented special functions (``specfun``),
* ergodic-rate analysis, optimal training fractions and grid search
  (``analytic``),
* reproducible Monte Carlo with streamed Philox counters (``montecarlo``),
* a command-line front end (``swiptsim`` console script, ``cli`` module).
"""

from .model import ChannelRealization, EstimateSet, RngStream, SystemParams
from .outage import NonconvergenceError, OutageResult, QuadratureSpec
from .schemes import RateSample, TimeAllocation

__version__ = "0.1.0"

__all__ = [
    "SystemParams",
    "ChannelRealization",
    "EstimateSet",
    "RngStream",
    "TimeAllocation",
    "RateSample",
    "OutageResult",
    "QuadratureSpec",
    "NonconvergenceError",
    "__version__",
]
