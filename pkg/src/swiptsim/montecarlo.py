"""Monte Carlo estimators and distributional self-checks.

This module owns the chunked draw layout shared by every simulation in the
package.  A fixed-size chunk ``i`` of a run with a given ``seed`` always
uses the Philox stream ``base_stream + i`` and always draws, in order, the
channel block and two unit-variance estimation-noise blocks, whether or not
the scheme consumes them.  Consequences worth relying on:

* results are independent of how chunks are scheduled or threaded;
* different schemes evaluated with the same seed see identical channels,
  so scheme comparisons are paired (common random numbers);
* estimators here and the rate averages in :mod:`swiptsim.analytic` can be
  cross-checked draw for draw.

``mc_distribution_checks`` validates the conditional decompositions that
the closed-form outage quadratures in :mod:`swiptsim.outage` are built on,
by transforming simulated statistics through the package's own special
functions (probability integral transform for conditional laws, direct CDFs
for the unconditional ones) and applying Kolmogorov-Smirnov, correlation,
and algebraic-identity checks.
"""

import math
from dataclasses import dataclass

import numpy as np

from .model import RngStream, fdd_estimate_noise_vars, tdd_estimate_noise_var
from .schemes import (
    energy_slack_fdd,
    energy_slack_non_csi,
    energy_slack_tdd,
    rates_fdd_bulk,
    rates_non_csi_bulk,
    rates_tdd_bulk,
)
from .specfun import marcum_q_complement, reg_gamma_lower_many

__all__ = [
    "CHUNK",
    "chunk_plan",
    "draw_chunk",
    "chunk_observables",
    "chunk_rates",
    "AlphaPolicy",
    "BernoulliEstimate",
    "CheckResult",
    "mc_energy_shortage",
    "mc_data_outage",
    "mc_distribution_checks",
]

CHUNK = 1 << 17

_SCHEMES = ("non-csi", "tdd", "fdd")


def chunk_plan(n_samples):
    """Split a sample count into fixed-size chunks (last one ragged)."""
    if int(n_samples) != n_samples or n_samples < 1:
        raise ValueError(f"n_samples must be a positive integer, got {n_samples!r}")
    n = int(n_samples)
    sizes = []
    while n > 0:
        m = min(CHUNK, n)
        sizes.append(m)
        n -= m
    return sizes


def draw_chunk(params, seed, stream_id, m):
    """One chunk of base draws: channel plus two unit-variance noise blocks.

    All schemes consume the same layout so that a common seed pairs their
    channel realizations.
    """
    rng = RngStream(seed, stream_id)
    lth = params.n_antennas
    h = rng.complex_normal((lth, m))
    w1 = rng.complex_normal((lth, m))
    w2 = rng.complex_normal((lth, m))
    return h, w1, w2


def _check_scheme(scheme):
    if scheme not in _SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {_SCHEMES}")
    return scheme


def chunk_observables(params, scheme, eta, tau, h, w1, w2):
    """Per-draw gains for one chunk: (channel, beamforming, terminal estimate).

    The last two are None where the scheme has no estimate (and the terminal
    gain is None for the reciprocity scheme, which has no feedback stage).
    """
    gains = np.sum(np.abs(h) ** 2, axis=0)
    if scheme == "non-csi":
        return gains, None, None
    if scheme == "tdd":
        if eta is None:
            raise ValueError("the reciprocity scheme needs a training fraction eta")
        est = h + math.sqrt(tdd_estimate_noise_var(params, eta)) * w1
        bf = np.abs(np.sum(np.conj(h) * est, axis=0)) ** 2 / np.sum(np.abs(est) ** 2, axis=0)
        return gains, bf, None
    if eta is None or tau is None:
        raise ValueError("the feedback scheme needs both eta and tau")
    ut_var, fb_var = fdd_estimate_noise_vars(params, eta, tau)
    ut_est = h + math.sqrt(ut_var) * w1
    ap_est = ut_est + math.sqrt(fb_var) * w2
    bf = np.abs(np.sum(np.conj(h) * ap_est, axis=0)) ** 2 / np.sum(np.abs(ap_est) ** 2, axis=0)
    ut_gains = np.sum(np.abs(ut_est) ** 2, axis=0)
    return gains, bf, ut_gains


def chunk_rates(params, scheme, eta, tau, alpha, h, w1, w2):
    """Rates (bits/use) for one chunk; alpha=None takes the per-draw minimum."""
    gains, bf, ut_gains = chunk_observables(params, scheme, eta, tau, h, w1, w2)
    if scheme == "non-csi":
        rates, _ = rates_non_csi_bulk(params, gains, alpha=alpha)
    elif scheme == "tdd":
        rates, _ = rates_tdd_bulk(params, gains, bf, eta, alpha=alpha)
    else:
        rates, _ = rates_fdd_bulk(params, gains, bf, ut_gains, eta, tau, alpha=alpha)
    return rates


# ---------------------------------------------------------------------------
# Bernoulli estimators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AlphaPolicy:
    """Harvest-fraction policy: a fixed alpha, or the per-draw minimum.

    ``alpha=None`` means the minimal-per-realization policy, where each draw
    harvests exactly long enough to cover its own power budget.
    """

    alpha: float | None = None

    def __post_init__(self):
        if self.alpha is not None and not 0.0 < self.alpha < 1.0:
            raise ValueError(f"fixed alpha must lie in (0, 1), got {self.alpha!r}")

    @classmethod
    def fixed(cls, alpha):
        return cls(alpha=float(alpha))

    @classmethod
    def minimal(cls):
        return cls(alpha=None)


def _coerce_policy(alpha):
    if isinstance(alpha, AlphaPolicy):
        return alpha
    return AlphaPolicy(alpha=None if alpha is None else float(alpha))


@dataclass(frozen=True)
class BernoulliEstimate:
    """Event-frequency estimate with exact success accounting."""

    successes: int
    n_samples: int

    @property
    def prob(self):
        return self.successes / self.n_samples

    @property
    def stderr(self):
        p = self.prob
        return math.sqrt(p * (1.0 - p) / self.n_samples)

    @property
    def ci95_low(self):
        return self.wilson_interval()[0]

    @property
    def ci95_high(self):
        return self.wilson_interval()[1]

    def wilson_interval(self, z=1.959963984540054):
        """Wilson score interval (default 95%); well behaved at p near 0.

        At zero (or all) successes the exact bound is 0 (or 1); it is pinned
        there rather than left to roundoff, so a closed-form value of
        exactly zero still falls inside the interval.
        """
        n = self.n_samples
        p = self.prob
        denom = 1.0 + z * z / n
        center = (p + z * z / (2.0 * n)) / denom
        half = (z / denom) * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n))
        lo = 0.0 if self.successes == 0 else max(center - half, 0.0)
        hi = 1.0 if self.successes == n else min(center + half, 1.0)
        return (lo, hi)


def _chunk_slack(params, scheme, alpha, eta, tau, gains, ut_gains):
    if scheme == "non-csi":
        return energy_slack_non_csi(params, gains, alpha)
    if scheme == "tdd":
        return energy_slack_tdd(params, gains, eta, alpha)
    return energy_slack_fdd(params, gains, ut_gains, eta, tau, alpha)


def mc_energy_shortage(
    scheme, params, alpha, eta=None, tau=None, n_samples=1_000_000, seed=0, base_stream=0
):
    """Simulated P[harvested energy cannot cover the block's power drains].

    Only defined at a fixed harvest fraction; under the minimal-alpha policy
    the budget holds with equality by construction.
    """
    _check_scheme(scheme)
    alpha = _coerce_policy(alpha).alpha
    if alpha is None:
        raise ValueError(
            "energy shortage needs a fixed alpha; the minimal-alpha policy never falls short"
        )
    hits = 0
    total = 0
    for i, m in enumerate(chunk_plan(n_samples)):
        h, w1, w2 = draw_chunk(params, seed, base_stream + i, m)
        gains, _, ut_gains = chunk_observables(params, scheme, eta, tau, h, w1, w2)
        slack = _chunk_slack(params, scheme, alpha, eta, tau, gains, ut_gains)
        hits += int(np.count_nonzero(slack < 0.0))
        total += m
    return BernoulliEstimate(successes=hits, n_samples=total)


def mc_data_outage(
    scheme,
    params,
    alpha,
    rate_target,
    eta=None,
    tau=None,
    n_samples=1_000_000,
    seed=0,
    base_stream=0,
):
    """Simulated P[block is powered but the rate misses the target].

    With a fixed alpha this is complementary to :func:`mc_energy_shortage`:
    their sum estimates the probability the target rate is not delivered.
    Under the minimal-alpha policy (``alpha=None`` or
    ``AlphaPolicy.minimal()``) energy is sufficient by construction and the
    event is simply a rate miss at the realized pre-log, with draws whose
    budget cannot close at any pre-log counting as misses.
    """
    _check_scheme(scheme)
    if not rate_target >= 0.0:
        raise ValueError(f"rate target must be nonnegative, got {rate_target!r}")
    alpha = _coerce_policy(alpha).alpha
    hits = 0
    total = 0
    for i, m in enumerate(chunk_plan(n_samples)):
        h, w1, w2 = draw_chunk(params, seed, base_stream + i, m)
        gains, bf, ut_gains = chunk_observables(params, scheme, eta, tau, h, w1, w2)
        if scheme == "non-csi":
            rates, _ = rates_non_csi_bulk(params, gains, alpha=alpha)
        elif scheme == "tdd":
            rates, _ = rates_tdd_bulk(params, gains, bf, eta, alpha=alpha)
        else:
            rates, _ = rates_fdd_bulk(params, gains, bf, ut_gains, eta, tau, alpha=alpha)
        miss = rates < rate_target
        if alpha is not None:
            slack = _chunk_slack(params, scheme, alpha, eta, tau, gains, ut_gains)
            miss &= slack >= 0.0
        hits += int(np.count_nonzero(miss))
        total += m
    return BernoulliEstimate(successes=hits, n_samples=total)


# ---------------------------------------------------------------------------
# distributional self-checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    statistic: float
    threshold: float


def _pit_noncentral(values, noncentralities, dof):
    """Per-sample noncentral chi-square CDF (probability integral transform)."""
    order = dof // 2
    out = np.empty(values.shape[0])
    for i in range(values.shape[0]):
        out[i] = marcum_q_complement(
            order, math.sqrt(noncentralities[i]), math.sqrt(values[i])
        )
    return out


def _ks_uniform(name, u, results):
    from scipy.stats import kstest

    stat = kstest(u, "uniform")
    results.append(CheckResult(name, stat.pvalue > 0.01, float(stat.pvalue), 0.01))


def _ks_chi2(name, values, dof, results):
    from scipy.stats import kstest

    stat = kstest(values, lambda t: reg_gamma_lower_many(dof / 2.0, 0.5 * np.asarray(t)))
    results.append(CheckResult(name, stat.pvalue > 0.01, float(stat.pvalue), 0.01))


def _corr_check(name, x, y, results):
    n = x.shape[0]
    r = float(np.corrcoef(x, y)[0, 1])
    z = abs(r) * math.sqrt(n)
    results.append(CheckResult(name, z < 4.0, z, 4.0))


def _identity_check(name, lhs, rhs, results):
    scale = np.maximum(np.abs(rhs), 1e-300)
    worst = float(np.max(np.abs(lhs - rhs) / scale))
    results.append(CheckResult(name, worst < 1e-10, worst, 1e-10))


def mc_distribution_checks(params, eta, tau, n_samples=100_000, seed=0):
    """Verify the conditional decompositions behind the outage quadratures.

    Returns a list of CheckResult covering, for both training schemes: the
    conditional noncentral laws of the estimate given the channel and of the
    channel given the estimate (via probability integral transforms through
    the package's Marcum kernels), the central laws of the orthogonal
    remainders, independence of the pieces, and the exact algebraic sum
    identities tying them back to the raw norms.
    """
    lth = params.n_antennas
    rng = RngStream(seed, 0)
    n = int(n_samples)
    h = rng.complex_normal((lth, n))
    w1 = rng.complex_normal((lth, n))
    w2 = rng.complex_normal((lth, n))
    gains = np.sum(np.abs(h) ** 2, axis=0)
    results = []

    # reciprocity training: estimate given channel, then channel given estimate
    b6 = tdd_estimate_noise_var(params, eta)
    boost = 1.0 + 1.0 / b6
    est = h + math.sqrt(b6) * w1
    est_gains = np.sum(np.abs(est) ** 2, axis=0)
    proj_est = np.abs(np.sum(np.conj(h) * est, axis=0)) ** 2 / gains
    lam = 2.0 * gains / b6
    _ks_uniform("tdd/estimate-along-channel", _pit_noncentral(2.0 * proj_est / b6, lam, 2), results)
    _ks_uniform("tdd/estimate-norm", _pit_noncentral(2.0 * est_gains / b6, lam, 2 * lth), results)

    bf = np.abs(np.sum(np.conj(h) * est, axis=0)) ** 2 / est_gains
    along = 2.0 * boost * bf
    ortho = 2.0 * boost * (gains - bf)
    est_scaled = 2.0 * est_gains / (1.0 + b6)
    _ks_uniform(
        "tdd/channel-along-estimate",
        _pit_noncentral(along, 2.0 * est_gains / (b6 * (1.0 + b6)), 2),
        results,
    )
    _ks_chi2("tdd/channel-orthogonal", ortho, 2 * lth - 2, results)
    _ks_chi2("tdd/estimate-norm-unconditional", est_scaled, 2 * lth, results)
    _corr_check("tdd/along-vs-orthogonal", along, ortho, results)
    _corr_check("tdd/orthogonal-vs-estimate-norm", ortho, est_scaled, results)
    _identity_check("tdd/norm-split", along + ortho, 2.0 * boost * gains, results)

    # feedback training: two-stage estimate chain
    sig3, sig4 = fdd_estimate_noise_vars(params, eta, tau)
    sig2 = (1.0 + sig3) / sig3
    sig5 = (1.0 + sig3) * sig4 / (1.0 + sig3 + sig4)
    k5 = sig5 / (sig3 * (1.0 + sig3))
    cond = (1.0 + sig3) / sig4
    both = sig3 + sig4
    ut_est = h + math.sqrt(sig3) * w1
    ap_est = ut_est + math.sqrt(sig4) * w2
    ut_gains = np.sum(np.abs(ut_est) ** 2, axis=0)
    ap_gains = np.sum(np.abs(ap_est) ** 2, axis=0)
    lam_b = 2.0 * gains / both
    proj_ap = np.abs(np.sum(np.conj(h) * ap_est, axis=0)) ** 2 / gains
    _ks_uniform("fdd/ap-estimate-along-channel", _pit_noncentral(2.0 * proj_ap / both, lam_b, 2), results)
    _ks_uniform("fdd/ap-estimate-norm", _pit_noncentral(2.0 * ap_gains / both, lam_b, 2 * lth), results)
    _ks_uniform(
        "fdd/terminal-estimate-norm",
        _pit_noncentral(2.0 * ut_gains / sig3, 2.0 * gains / sig3, 2 * lth),
        results,
    )

    ap_scaled = 2.0 * ap_gains / (1.0 + sig3 + sig4)
    proj_ut = np.abs(np.sum(np.conj(ut_est) * ap_est, axis=0)) ** 2 / ap_gains
    ut_along = 2.0 * proj_ut / sig5
    ut_ortho = 2.0 * (ut_gains - proj_ut) / sig5
    bf = np.abs(np.sum(np.conj(h) * ap_est, axis=0)) ** 2 / ap_gains
    ch_along = 2.0 * sig2 * bf
    ch_ortho = 2.0 * sig2 * (gains - bf)
    _ks_chi2("fdd/ap-estimate-norm-unconditional", ap_scaled, 2 * lth, results)
    _ks_uniform(
        "fdd/terminal-along-ap", _pit_noncentral(ut_along, cond * ap_scaled, 2), results
    )
    _ks_chi2("fdd/terminal-orthogonal", ut_ortho, 2 * lth - 2, results)
    _ks_uniform(
        "fdd/channel-along-ap", _pit_noncentral(ch_along, k5 * ut_along, 2), results
    )
    _ks_uniform(
        "fdd/channel-orthogonal",
        _pit_noncentral(ch_ortho, k5 * ut_ortho, 2 * lth - 2),
        results,
    )
    _corr_check("fdd/terminal-along-vs-orthogonal", ut_along, ut_ortho, results)
    _corr_check("fdd/terminal-orthogonal-vs-ap-norm", ut_ortho, ap_scaled, results)
    _identity_check(
        "fdd/terminal-norm-split", ut_along + ut_ortho, 2.0 * ut_gains / sig5, results
    )
    _identity_check(
        "fdd/channel-norm-split", ch_along + ch_ortho, 2.0 * sig2 * gains, results
    )
    return results
