"""Ergodic-rate analysis: closed-form moments, training optima, grid search.

The training-fraction optima come from maximizing the ergodic rate after
regime-specific approximations of the log term, so each optimum is tagged
HIGH_SNR or LOW_SNR and callers pick the regime (``default_regime`` uses a
15 dB threshold).  Raw formula values are clamped to the smallest physical
allocations: one symbol per block for reciprocity pilots, ``n_antennas``
symbols for downlink pilots and for feeding back that many coefficients.

Monte Carlo rate estimates use fixed-size chunks with one Philox stream per
chunk.  For a given seed, every scheme consumes the same channel draws (the
unused estimation-noise draws are still advanced), so rate comparisons
between schemes are paired and their difference/ratio errors shrink
accordingly.  ``grid_search`` reuses the same streams for every grid point
(common random numbers), which makes the surface smooth in the grid index
and the argmax stable.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .montecarlo import chunk_plan, chunk_rates, draw_chunk
from .specfun import digamma

__all__ = [
    "SnrRegime",
    "default_regime",
    "ErgodicEstimate",
    "RatioEstimate",
    "TrainingOptimum",
    "GridSpec",
    "SCHEMES",
    "mean_log2_snr",
    "pilot_weighted_log2_snr",
    "tdd_training_optimum",
    "fdd_training_optimum",
    "ergodic_rate",
    "ergodic_rate_ratio",
    "grid_search",
]

SCHEMES = ("non-csi", "tdd", "fdd")

_LN2 = math.log(2.0)


class SnrRegime(Enum):
    HIGH_SNR = "high-snr"
    LOW_SNR = "low-snr"


def default_regime(params, threshold_db=15.0):
    """Regime selector used by the CLI: high above the threshold, else low."""
    return SnrRegime.HIGH_SNR if params.snr_db > threshold_db else SnrRegime.LOW_SNR


@dataclass(frozen=True)
class ErgodicEstimate:
    mean: float
    stderr: float
    n_samples: int


@dataclass(frozen=True)
class RatioEstimate:
    """Ratio of two mean rates with a delta-method standard error."""

    ratio: float
    stderr: float
    n_samples: int


@dataclass(frozen=True)
class TrainingOptimum:
    eta: float
    tau: float = 0.0
    regime: SnrRegime | None = None
    rate: ErgodicEstimate | None = None


@dataclass(frozen=True)
class GridSpec:
    """Exhaustive grid over training fractions with the given step."""

    step: float = 0.01

    def __post_init__(self):
        if not 0.0 < self.step < 0.5:
            raise ValueError(f"grid step must lie in (0, 0.5), got {self.step!r}")


# ---------------------------------------------------------------------------
# closed-form ergodic moments
# ---------------------------------------------------------------------------

def mean_log2_snr(params):
    """E[log2(P |h|^2 / N0)] for |h|^2 ~ Gamma(n_antennas, 1).

    Uses E[ln |h|^2] = digamma(n_antennas).
    """
    return (
        math.log(params.tx_power / params.noise_power) + digamma(float(params.n_antennas))
    ) / _LN2


def pilot_weighted_log2_snr(params):
    """E[(1 + L*pilot_power/(beta*P*|h|^2)) log2(P |h|^2 / N0)].

    The harmonic weight uses E[ln(x)/x] = digamma(L-1)/(L-1) for
    x ~ Gamma(L, 1); this is the constant that scales the reciprocity
    training cost in the high-SNR ergodic-rate approximation.
    """
    lth = float(params.n_antennas)
    log_snr = math.log(params.tx_power / params.noise_power)
    lead = (log_snr + digamma(lth)) / _LN2
    weight = (
        lth
        * params.pilot_power
        / (params.harvest_efficiency * params.tx_power)
    )
    harmonic = (log_snr + digamma(lth - 1.0)) / ((lth - 1.0) * _LN2)
    return lead + weight * harmonic


# ---------------------------------------------------------------------------
# training optima
# ---------------------------------------------------------------------------

def tdd_training_optimum(params, regime):
    """Rate-maximizing uplink-pilot fraction for reciprocity training.

    Clamped to [1/T, 1 - 1/T] where T = coherence_symbols; the raw low-SNR
    expression can go negative when noise dominates, in which case the
    single-pilot-symbol floor is the optimum.
    """
    lth = float(params.n_antennas)
    n0 = params.noise_power
    tc = float(params.coherence_symbols)
    lo = 1.0 / tc
    hi = 1.0 - lo
    if regime is SnrRegime.HIGH_SNR:
        scale = pilot_weighted_log2_snr(params)
        if scale <= 0.0:
            raise ValueError(
                "high-SNR training optimum undefined here (mean log-SNR <= 0); "
                "use SnrRegime.LOW_SNR"
            )
        eta = math.sqrt(
            n0 * lth * math.log2(math.e) / (scale * tc * params.pilot_power * (lth - 1.0))
        )
    elif regime is SnrRegime.LOW_SNR:
        bp = params.harvest_efficiency * params.tx_power
        inner = (
            1.0
            + (lth - 1.0) * bp * tc * params.pilot_power
            / (lth * n0 * (bp + params.pilot_power))
            - 1.0 / lth
        )
        eta = (n0 / (tc * params.pilot_power)) * (math.sqrt(inner) - 1.0)
    else:
        raise ValueError(f"unknown regime {regime!r}")
    return TrainingOptimum(eta=min(max(eta, lo), hi), tau=0.0, regime=regime)


def fdd_training_optimum(params, regime):
    """Rate-maximizing (pilot, feedback) fractions for feedback training.

    Evaluation order matters at low SNR: the pilot fraction has a
    self-contained closed form and is computed (and clamped) first, then
    substituted into the feedback fraction.  Both fractions are clamped to
    at least n_antennas / coherence_symbols.
    """
    lth = float(params.n_antennas)
    n0 = params.noise_power
    tc = float(params.coherence_symbols)
    p = params.tx_power
    pf = params.feedback_power
    bp = params.harvest_efficiency * p
    lo = lth / tc
    if regime is SnrRegime.HIGH_SNR:
        scale = mean_log2_snr(params)
        if scale <= 0.0:
            raise ValueError(
                "high-SNR training optimum undefined here (mean log-SNR <= 0); "
                "use SnrRegime.LOW_SNR"
            )
        tau = math.sqrt(
            n0 * lth * lth * math.log2(math.e)
            / (scale * tc * (lth - 1.0) * pf * (1.0 + pf / bp))
        )
        eta = math.sqrt((1.0 + pf / bp) * pf / p) * tau
        eta = max(eta, lo)
        tau = max(tau, lo)
    elif regime is SnrRegime.LOW_SNR:
        a = pf * n0 * lth / (p * tc * (bp + pf))
        eta = a * (math.sqrt(1.0 + 1.0 / a) - 1.0)
        eta = max(eta, lo)
        r = n0 * lth / (eta * tc)
        tau = (
            n0
            * lth
            * (math.sqrt(1.0 + 4.0 * bp * p * (bp / pf + 1.0 + r / p) / (r * r)) - 1.0)
            / (2.0 * tc * (bp + pf + pf * r / p))
        )
        tau = max(tau, lo)
    else:
        raise ValueError(f"unknown regime {regime!r}")
    if eta + tau >= 1.0:
        raise ValueError(
            f"training optimum infeasible: eta + tau = {eta + tau:.3f} >= 1 "
            "(coherence block too short for this configuration)"
        )
    return TrainingOptimum(eta=eta, tau=tau, regime=regime)


# ---------------------------------------------------------------------------
# Monte Carlo ergodic rates
# ---------------------------------------------------------------------------

def _check_scheme(scheme):
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    return scheme


def ergodic_rate(
    scheme, params, eta=None, tau=None, n_samples=100_000, seed=0, alpha=None, base_stream=0
):
    """Monte Carlo mean rate (bits/use) with per-realization minimal harvest.

    Pass a fixed ``alpha`` to pin the harvest fraction instead.  Identical
    (seed, base_stream, n_samples) produce paired channel draws across
    schemes and across (eta, tau) values.
    """
    _check_scheme(scheme)
    total = 0.0
    total_sq = 0.0
    n = 0
    for i, m in enumerate(chunk_plan(n_samples)):
        h, w1, w2 = draw_chunk(params, seed, base_stream + i, m)
        rates = chunk_rates(params, scheme, eta, tau, alpha, h, w1, w2)
        total += float(np.sum(rates))
        total_sq += float(np.sum(rates * rates))
        n += m
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0)
    return ErgodicEstimate(mean=mean, stderr=math.sqrt(var / n), n_samples=n)


def ergodic_rate_ratio(
    scheme,
    params,
    eta=None,
    tau=None,
    n_samples=100_000,
    seed=0,
    alpha=None,
    base_stream=0,
    baseline=None,
):
    """Ratio of the scheme's mean rate to a baseline mean rate, paired.

    ``baseline`` is a (scheme, eta, tau) triple and defaults to the no-CSI
    scheme.  Both rates are computed from the same channel draws, so the
    delta-method standard error accounts for their (strong, positive)
    correlation.
    """
    _check_scheme(scheme)
    b_scheme, b_eta, b_tau = baseline if baseline is not None else ("non-csi", None, None)
    _check_scheme(b_scheme)
    s_a = s_b = s_aa = s_bb = s_ab = 0.0
    n = 0
    for i, m in enumerate(chunk_plan(n_samples)):
        h, w1, w2 = draw_chunk(params, seed, base_stream + i, m)
        a = chunk_rates(params, scheme, eta, tau, alpha, h, w1, w2)
        b = chunk_rates(params, b_scheme, b_eta, b_tau, alpha, h, w1, w2)
        s_a += float(np.sum(a))
        s_b += float(np.sum(b))
        s_aa += float(np.sum(a * a))
        s_bb += float(np.sum(b * b))
        s_ab += float(np.sum(a * b))
        n += m
    mean_a = s_a / n
    mean_b = s_b / n
    ratio = mean_a / mean_b
    cov_aa = max(s_aa / n - mean_a**2, 0.0)
    cov_bb = max(s_bb / n - mean_b**2, 0.0)
    cov_ab = s_ab / n - mean_a * mean_b
    var = (cov_aa - 2.0 * ratio * cov_ab + ratio * ratio * cov_bb) / (mean_b**2 * n)
    return RatioEstimate(ratio=ratio, stderr=math.sqrt(max(var, 0.0)), n_samples=n)


def _grid_points(scheme, params, step):
    tc = float(params.coherence_symbols)
    lth = params.n_antennas
    fractions = np.arange(step, 1.0, step)
    if scheme == "tdd":
        lo = 1.0 / tc
        pts = [(e, 0.0) for e in fractions if lo <= e <= 1.0 - 2.0 * step]
    else:
        lo = lth / tc
        pts = [
            (e, t)
            for e in fractions
            if e >= lo
            for t in fractions
            if t >= lo and e + t <= 1.0 - 2.0 * step
        ]
    if not pts:
        raise ValueError(f"empty training grid for scheme {scheme!r} with step {step!r}")
    return pts


def grid_search(scheme, params, grid=GridSpec(), n_samples=100_000, seed=0, alpha=None, include=()):
    """Exhaustive common-random-number search over training fractions.

    Returns the argmax of the Monte Carlo mean rate over the step grid plus
    any extra ``include`` points ((eta, tau) pairs, evaluated after the
    grid), with the rate estimate at the winning point.  Ties break toward
    the earliest point in iteration order (grid first, eta-major), which is
    deterministic.  Passing a candidate allocation through ``include``
    guarantees the search result dominates it even when it falls between
    grid lines.
    """
    _check_scheme(scheme)
    if scheme == "non-csi":
        raise ValueError("non-csi has no training fractions to search over")
    pts = _grid_points(scheme, params, grid.step) + [
        (float(e), float(t)) for e, t in include
    ]
    sums = np.zeros(len(pts))
    sums_sq = np.zeros(len(pts))
    n = 0
    for i, m in enumerate(chunk_plan(n_samples)):
        h, w1, w2 = draw_chunk(params, seed, i, m)
        for j, (eta, tau) in enumerate(pts):
            rates = chunk_rates(
                params, scheme, eta, tau if scheme == "fdd" else None, alpha, h, w1, w2
            )
            sums[j] += np.sum(rates)
            sums_sq[j] += np.sum(rates * rates)
        n += m
    means = sums / n
    best = int(np.argmax(means))
    var = max(sums_sq[best] / n - means[best] ** 2, 0.0)
    eta, tau = pts[best]
    return TrainingOptimum(
        eta=eta,
        tau=tau,
        regime=None,
        rate=ErgodicEstimate(mean=float(means[best]), stderr=math.sqrt(var / n), n_samples=n),
    )
