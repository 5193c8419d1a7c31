"""Per-realization time allocations, energy budgets, and achievable rates.

Each coherence block is split into a harvest phase (fraction ``alpha``),
scheme-dependent training/feedback phases (``eta``, ``tau``), and a data
phase taking the rest.  The terminal's energy budget couples the phases: the
harvest phase must bank at least what training, feedback, and decoding drain.
``alpha_*`` functions return the smallest harvest fraction that balances the
budget exactly for one channel draw; the ``energy_slack_*`` functions expose
the budget surplus itself (negative = shortage), which is also the Monte
Carlo event indicator.

Rates are in bits per channel use, already scaled by the data-phase fraction.
A nonpositive data fraction (training so long that the budget cannot close)
yields rate 0 with ``feasible=False`` rather than an error: it is a
legitimate operating point of a badly chosen allocation.

Scalar entry points accept ChannelRealization/EstimateSet objects and return
RateSample; the ``*_bulk`` variants work on arrays of channel gains for
vectorized Monte Carlo.
"""

from dataclasses import dataclass

import numpy as np

from .model import ChannelRealization, EstimateSet, beamforming_gain

__all__ = [
    "TimeAllocation",
    "RateSample",
    "alpha_non_csi",
    "alpha_tdd",
    "alpha_fdd",
    "rate_non_csi",
    "rate_tdd",
    "rate_fdd",
    "energy_slack_non_csi",
    "energy_slack_tdd",
    "energy_slack_fdd",
    "rates_non_csi_bulk",
    "rates_tdd_bulk",
    "rates_fdd_bulk",
]


@dataclass(frozen=True)
class TimeAllocation:
    """Fractions of the coherence block: harvest, training, feedback."""

    harvest: float
    training: float = 0.0
    feedback: float = 0.0

    @property
    def data(self):
        return 1.0 - self.harvest - self.training - self.feedback


@dataclass(frozen=True)
class RateSample:
    """Rate achieved on one channel draw under a given allocation."""

    rate: float
    allocation: TimeAllocation
    feasible: bool


def _gain(channel):
    if isinstance(channel, ChannelRealization):
        return channel.gain
    return channel


def _check_fraction(name, value):
    if value is None:
        return None
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {value!r}")
    return float(value)


# ---------------------------------------------------------------------------
# minimal harvest fractions (budget equalities)
# ---------------------------------------------------------------------------

def alpha_non_csi(params, channel):
    """Minimal harvest fraction without CSI: decoding is the only drain."""
    g = _gain(channel)
    drain = params.n_antennas * params.decode_power
    return drain / (params.harvest_efficiency * params.tx_power * g + drain)


def alpha_tdd(params, channel, eta):
    """Minimal harvest fraction with reciprocity training at fraction eta."""
    _check_fraction("eta", eta)
    g = _gain(channel)
    lp_d = params.n_antennas * params.decode_power
    lp_e = params.n_antennas * params.pilot_power
    return (eta * lp_e - eta * lp_d + lp_d) / (
        params.harvest_efficiency * params.tx_power * g + lp_d
    )


def alpha_fdd(params, channel, ut_estimate_gain, eta, tau):
    """Minimal harvest fraction with feedback training.

    The feedback stage transmits the terminal's estimate, so its energy cost
    scales with ``ut_estimate_gain`` (squared norm of that estimate).
    """
    _check_fraction("eta", eta)
    _check_fraction("tau", tau)
    g = _gain(channel)
    lp_d = params.n_antennas * params.decode_power
    fb = tau * params.feedback_power * ut_estimate_gain
    return (fb - tau * lp_d + lp_d) / (
        params.harvest_efficiency * params.tx_power * g + lp_d
    )


# ---------------------------------------------------------------------------
# energy budget slack (surplus per block, in units of power * n_antennas)
# ---------------------------------------------------------------------------

def energy_slack_non_csi(params, gain, alpha):
    """alpha*beta*P*|h|^2 - (1-alpha)*L*decode_power; zero at alpha_non_csi."""
    return (
        alpha * params.harvest_efficiency * params.tx_power * gain
        - (1.0 - alpha) * params.n_antennas * params.decode_power
    )


def energy_slack_tdd(params, gain, eta, alpha):
    harvested = alpha * params.harvest_efficiency * params.tx_power * gain
    spent = eta * params.n_antennas * params.pilot_power + (
        1.0 - alpha - eta
    ) * params.n_antennas * params.decode_power
    return harvested - spent


def energy_slack_fdd(params, gain, ut_estimate_gain, eta, tau, alpha):
    harvested = alpha * params.harvest_efficiency * params.tx_power * gain
    spent = tau * params.feedback_power * ut_estimate_gain + (
        1.0 - alpha - tau
    ) * params.n_antennas * params.decode_power
    return harvested - spent


# ---------------------------------------------------------------------------
# vectorized rates
# ---------------------------------------------------------------------------

def rates_non_csi_bulk(params, gains, alpha=None):
    """Rates (bits/use) for arrays of channel gains; isotropic transmission.

    ``alpha=None`` uses the per-realization minimal harvest fraction.
    Returns (rates, data_fractions).
    """
    gains = np.asarray(gains, dtype=np.float64)
    lp_d = params.n_antennas * params.decode_power
    denom = params.harvest_efficiency * params.tx_power * gains + lp_d
    if alpha is None:
        a = lp_d / denom
    else:
        a = np.full_like(gains, _check_fraction("alpha", alpha))
    prelog = 1.0 - a
    snr = params.tx_power * gains / (params.noise_power * params.n_antennas)
    rates = np.maximum(prelog, 0.0) * np.log2(1.0 + snr)
    return rates, prelog


def rates_tdd_bulk(params, gains, bf_gains, eta, alpha=None):
    """Rates under reciprocity training: beamforming on the estimate."""
    _check_fraction("eta", eta)
    gains = np.asarray(gains, dtype=np.float64)
    lp_d = params.n_antennas * params.decode_power
    lp_e = params.n_antennas * params.pilot_power
    if alpha is None:
        denom = params.harvest_efficiency * params.tx_power * gains + lp_d
        a = (eta * lp_e - eta * lp_d + lp_d) / denom
    else:
        a = np.full_like(gains, _check_fraction("alpha", alpha))
    prelog = 1.0 - a - eta
    snr = params.tx_power * np.asarray(bf_gains, dtype=np.float64) / params.noise_power
    rates = np.maximum(prelog, 0.0) * np.log2(1.0 + snr)
    return rates, prelog


def rates_fdd_bulk(params, gains, bf_gains, ut_gains, eta, tau, alpha=None):
    """Rates under feedback training: pilots (eta) plus feedback (tau)."""
    _check_fraction("eta", eta)
    _check_fraction("tau", tau)
    gains = np.asarray(gains, dtype=np.float64)
    ut_gains = np.asarray(ut_gains, dtype=np.float64)
    lp_d = params.n_antennas * params.decode_power
    if alpha is None:
        denom = params.harvest_efficiency * params.tx_power * gains + lp_d
        a = (tau * params.feedback_power * ut_gains - tau * lp_d + lp_d) / denom
    else:
        a = np.full_like(gains, _check_fraction("alpha", alpha))
    prelog = 1.0 - a - eta - tau
    snr = params.tx_power * np.asarray(bf_gains, dtype=np.float64) / params.noise_power
    rates = np.maximum(prelog, 0.0) * np.log2(1.0 + snr)
    return rates, prelog


# ---------------------------------------------------------------------------
# scalar entry points
# ---------------------------------------------------------------------------

def rate_non_csi(params, channel, alpha=None):
    g = _gain(channel)
    rates, prelog = rates_non_csi_bulk(params, np.array([g]), alpha=alpha)
    a = 1.0 - float(prelog[0])
    return RateSample(
        rate=float(rates[0]),
        allocation=TimeAllocation(harvest=a),
        feasible=bool(prelog[0] > 0.0),
    )


def rate_tdd(params, channel, estimate, eta, alpha=None):
    g = _gain(channel)
    bf = beamforming_gain(channel, estimate)
    rates, prelog = rates_tdd_bulk(params, np.array([g]), np.array([bf]), eta, alpha=alpha)
    a = 1.0 - eta - float(prelog[0])
    return RateSample(
        rate=float(rates[0]),
        allocation=TimeAllocation(harvest=a, training=eta),
        feasible=bool(prelog[0] > 0.0),
    )


def rate_fdd(params, channel, estimates, eta, tau, alpha=None):
    if not isinstance(estimates, EstimateSet) or estimates.ut_estimate is None:
        raise ValueError("rate_fdd needs an EstimateSet with both estimates")
    g = _gain(channel)
    bf = beamforming_gain(channel, estimates)
    ut_gain = float(np.sum(np.abs(estimates.ut_estimate) ** 2))
    rates, prelog = rates_fdd_bulk(
        params, np.array([g]), np.array([bf]), np.array([ut_gain]), eta, tau, alpha=alpha
    )
    a = 1.0 - eta - tau - float(prelog[0])
    return RateSample(
        rate=float(rates[0]),
        allocation=TimeAllocation(harvest=a, training=eta, feedback=tau),
        feasible=bool(prelog[0] > 0.0),
    )
