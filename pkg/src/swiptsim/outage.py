"""Outage probabilities: energy shortfall and conditional data outage.

Two families of quantities, for each CSI scheme:

* energy shortage: the probability that the energy harvested during the
  harvest phase cannot cover the block's training, feedback, and decoding
  costs;
* data outage: the probability that the block is powered (no shortfall) but
  the beamformed data rate still falls below the target.  Reporting the two
  separately keeps them additive: their sum is the probability the target
  rate is not delivered.

The isotropic no-CSI quantities are regularized-incomplete-gamma closed
forms.  The estimated-CSI quantities are small quadratures over exact
conditional decompositions of the channel against the beamforming
direction.  A key simplification used throughout: the squared projection of
the channel onto the estimate direction is, unconditionally, a binomial
mixture of Erlang laws (the Poisson-mixture representation of its
conditional noncentral chi-square law collapses through the chi-square
mixing variable), so integrals that would nominally run over the estimate
norm as well lose that dimension exactly.

All quadrature-based results carry an ``est_error`` that folds together the
adaptive rule's error estimate and the truncated tail mass.  The deepest
integral (feedback scheme, data outage) falls back to a Rao-Blackwellized
Monte Carlo average when the adaptive rule cannot reach tolerance; set
``QuadratureSpec.fallback_samples = 0`` to make that case raise
``NonconvergenceError`` instead.
"""

import math
from dataclasses import dataclass

import numpy as np

from .model import RngStream, fdd_estimate_noise_vars, tdd_estimate_noise_var
from .quadrature import NonconvergenceError, adaptive_gauss_kronrod, chi2_upper_quantile
from .specfun import (
    bessel_i_scaled_many,
    marcum_q,
    marcum_q_complement,
    marcum_q_many,
    reg_gamma_lower,
    reg_gamma_upper_many,
)

__all__ = [
    "NonconvergenceError",
    "QuadratureSpec",
    "OutageResult",
    "energy_shortage_non_csi",
    "energy_shortage_tdd",
    "energy_shortage_fdd",
    "data_outage_non_csi",
    "data_outage_tdd",
    "data_outage_fdd",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and budgets for the outage quadratures.

    tail_mass is the chi-square probability mass discarded when truncating
    each semi-infinite axis; it is added to est_error.  fallback_samples
    sizes the Monte Carlo fallback for the feedback-scheme data outage
    (0 disables it).
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_depth: int = 14
    max_panels: int = 4096
    tail_mass: float = 1e-10
    fallback_samples: int = 50_000
    fallback_seed: int = 0

    def __post_init__(self):
        if self.abs_tol <= 0.0 or self.rel_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if not 0.0 < self.tail_mass < 1e-2:
            raise ValueError(f"tail_mass must lie in (0, 0.01), got {self.tail_mass!r}")
        if self.fallback_samples < 0:
            raise ValueError("fallback_samples must be nonnegative")


@dataclass(frozen=True)
class OutageResult:
    """A probability with an error bound and the route that produced it."""

    value: float
    est_error: float
    method: str

    def __post_init__(self):
        # normalize numpy scalars out of the quadrature paths
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "est_error", float(self.est_error))


def _check_budget(alpha, eta=None, tau=None):
    total = alpha
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"harvest fraction must lie in (0, 1), got {alpha!r}")
    if eta is not None:
        if not 0.0 < eta < 1.0:
            raise ValueError(f"training fraction must lie in (0, 1), got {eta!r}")
        total += eta
    if tau is not None:
        if not 0.0 <= tau < 1.0:
            raise ValueError(f"feedback fraction must lie in [0, 1), got {tau!r}")
        total += tau
    if total >= 1.0:
        raise ValueError(
            f"time budget exceeded: fractions sum to {total:.6g}, leaving no data phase"
        )


def _check_rate(rate_target):
    if not rate_target > 0.0:
        raise ValueError(f"rate target must be positive, got {rate_target!r}")


# ---------------------------------------------------------------------------
# energy shortage
# ---------------------------------------------------------------------------

def energy_shortage_non_csi(params, alpha):
    """P[harvested energy < decoding energy] for the isotropic scheme.

    The channel gain is Gamma(L, 1), so this is a closed form.
    """
    _check_budget(alpha)
    lth = params.n_antennas
    threshold = (
        (1.0 - alpha) * lth * params.decode_power
        / (alpha * params.harvest_efficiency * params.tx_power)
    )
    return OutageResult(value=reg_gamma_lower(lth, threshold), est_error=0.0, method="closed-form")


def energy_shortage_tdd(params, alpha, eta):
    """Energy shortfall with reciprocity training: pilots cost extra energy."""
    _check_budget(alpha, eta)
    lth = params.n_antennas
    threshold = (
        (eta * lth * params.pilot_power + (1.0 - alpha - eta) * lth * params.decode_power)
        / (alpha * params.harvest_efficiency * params.tx_power)
    )
    return OutageResult(value=reg_gamma_lower(lth, threshold), est_error=0.0, method="closed-form")


def energy_shortage_fdd(params, alpha, eta, tau, spec=QuadratureSpec()):
    """Energy shortfall with downlink training plus analog feedback.

    The feedback cost scales with the squared norm of the terminal's channel
    estimate, which is correlated with the harvested energy, so the
    probability is a one-dimensional integral: conditioned on the scaled
    estimation-error norm (chi-square with 2L degrees of freedom), the
    shortfall region is a noncentral chi-square CDF.  Requires the harvested
    power to dominate the feedback draw (alpha*beta*P > tau*P_F); otherwise
    the shortfall is sure for large channels and the decomposition used here
    does not apply.
    """
    _check_budget(alpha, eta, tau)
    lth = params.n_antennas
    bp = params.harvest_efficiency * params.tx_power
    drive = alpha * bp - tau * params.feedback_power
    if drive <= 0.0:
        raise ValueError(
            "feedback energy draw exceeds harvested power per unit gain "
            f"(alpha*beta*P = {alpha * bp:.3g} <= tau*P_F = {tau * params.feedback_power:.3g})"
        )
    ratio = tau * params.feedback_power / drive
    sigma1_sq = params.noise_power * lth / (2.0 * eta * params.coherence_symbols * params.tx_power)
    rho1_sq = 2.0 * ratio * ratio
    rho2_sq = 2.0 * ratio + 2.0 * ratio * ratio
    rho3_sq = 2.0 * (1.0 - alpha - tau) * lth * params.decode_power / drive

    dof = 2 * lth
    hi = chi2_upper_quantile(dof, spec.tail_mass)
    log_norm = math.lgamma(lth)

    def integrand(theta):
        out = np.empty_like(theta)
        for i, th in enumerate(theta):
            nc = rho1_sq * sigma1_sq * th
            at = rho2_sq * sigma1_sq * th + rho3_sq
            cdf = marcum_q_complement(lth, math.sqrt(nc), math.sqrt(at))
            log_pdf = (lth - 1.0) * math.log(th) - 0.5 * th - lth * math.log(2.0) - log_norm
            out[i] = cdf * math.exp(log_pdf)
        return out

    value, err, _ = adaptive_gauss_kronrod(
        integrand,
        0.0,
        hi,
        abs_tol=spec.abs_tol,
        rel_tol=spec.rel_tol,
        max_depth=spec.max_depth,
        max_panels=spec.max_panels,
    )
    return OutageResult(
        value=min(max(value, 0.0), 1.0),
        est_error=err + spec.tail_mass,
        method="quadrature",
    )


# ---------------------------------------------------------------------------
# data outage
# ---------------------------------------------------------------------------

def data_outage_non_csi(params, alpha, rate_target):
    """P[powered but below the rate target], isotropic transmission.

    Both conditions are thresholds on the same Gamma(L, 1) gain, so the
    result is a difference of regularized incomplete gamma functions.
    """
    _check_budget(alpha)
    _check_rate(rate_target)
    lth = params.n_antennas
    gain_rate = (
        params.noise_power
        * lth
        / params.tx_power
        * (2.0 ** (rate_target / (1.0 - alpha)) - 1.0)
    )
    gain_energy = (
        (1.0 - alpha) * lth * params.decode_power
        / (alpha * params.harvest_efficiency * params.tx_power)
    )
    if gain_rate <= gain_energy:
        return OutageResult(value=0.0, est_error=0.0, method="closed-form")
    value = reg_gamma_lower(lth, gain_rate) - reg_gamma_lower(lth, gain_energy)
    return OutageResult(value=max(value, 0.0), est_error=0.0, method="closed-form")


def _projection_mixture_weights(lth, p, q):
    """Binomial(L-1, p) weights of the Erlang mixture for the squared
    projection of the channel onto the estimate direction.

    p and q = 1 - p are passed separately because q is the numerically
    delicate one (it is tiny once the estimate is good).
    """
    if p <= 0.0:
        weights = np.zeros(lth)
        weights[0] = 1.0
        return weights
    m = np.arange(lth)
    log_comb = math.lgamma(lth) - np.array(
        [math.lgamma(k + 1.0) + math.lgamma(lth - k) for k in m]
    )
    return np.exp(log_comb + m * math.log(p) + (lth - 1 - m) * math.log(q))


def _projection_pdf(t, lth, p, q):
    """Density of the mixture: sum_m Binom(L-1,p)(m) * Erlang(m+1, q/2)."""
    t = np.asarray(t, dtype=np.float64)
    acc = np.zeros_like(t)
    term = np.ones_like(t)
    for m in range(lth):
        comb = math.comb(lth - 1, m)
        acc = acc + comb * term
        term = term * (p * t / 2.0) / (m + 1.0)
    return 0.5 * q**lth * np.exp(-0.5 * q * t) * acc


def _projection_cdf(t, lth, p, q):
    """CDF of the same mixture via regularized lower incomplete gammas."""
    weights = _projection_mixture_weights(lth, p, q)
    total = 0.0
    for m in range(lth):
        total += weights[m] * reg_gamma_lower(m + 1.0, 0.5 * q * t)
    return total


def data_outage_tdd(params, alpha, eta, rate_target, spec=QuadratureSpec()):
    """P[powered but below target] with reciprocity-trained beamforming.

    Decomposing the channel along the estimate direction leaves a
    one-dimensional integral: the along-estimate power (the Erlang-mixture
    law above) against the central chi-square tail of the orthogonal
    remainder that must top up the energy condition.  Where the rate
    threshold exceeds the energy threshold, the top-up is free and that
    slab is a plain mixture-CDF difference.
    """
    _check_budget(alpha, eta)
    _check_rate(rate_target)
    lth = params.n_antennas
    n0 = params.noise_power
    est_var = tdd_estimate_noise_var(params, eta)
    boost = 1.0 + 1.0 / est_var
    p = 1.0 / (1.0 + est_var)
    q = est_var / (1.0 + est_var)
    gain_rate = (n0 / params.tx_power) * (2.0 ** (rate_target / (1.0 - alpha - eta)) - 1.0)
    gain_energy = (
        (eta * lth * params.pilot_power + (1.0 - alpha - eta) * lth * params.decode_power)
        / (alpha * params.harvest_efficiency * params.tx_power)
    )
    t_rate = 2.0 * boost * gain_rate
    t_energy = 2.0 * boost * gain_energy

    slab = 0.0
    if gain_rate > gain_energy:
        slab = _projection_cdf(t_rate, lth, p, q) - _projection_cdf(t_energy, lth, p, q)
        slab = max(slab, 0.0)
    upper = min(t_rate, t_energy)

    def integrand(t):
        return _projection_pdf(t, lth, p, q) * reg_gamma_upper_many(
            lth - 1.0, 0.5 * (t_energy - t)
        )

    value, err, _ = adaptive_gauss_kronrod(
        integrand,
        0.0,
        upper,
        abs_tol=spec.abs_tol,
        rel_tol=spec.rel_tol,
        max_depth=spec.max_depth,
        max_panels=spec.max_panels,
    )
    return OutageResult(
        value=min(max(value + slab, 0.0), 1.0),
        est_error=err,
        method="quadrature",
    )


# -- feedback scheme ---------------------------------------------------------


class _FddDataGeometry:
    """Constants of the feedback-scheme data-outage event.

    Derived from the two-stage estimation chain: the terminal estimates the
    channel from downlink pilots (error variance ut_var per entry) and the
    access point observes that estimate through the analog feedback channel
    (additional error variance fb_var).  The event is expressed in scaled
    coordinates where the along-beam channel power and the orthogonal
    remainder are (non)central chi-squares conditioned on the terminal
    estimate's own decomposition against the beam.
    """

    def __init__(self, params, alpha, eta, tau, rate_target):
        lth = params.n_antennas
        ut_var, fb_var = fdd_estimate_noise_vars(params, eta, tau)
        self.lth = lth
        self.sig2 = (1.0 + ut_var) / ut_var
        self.sig5 = (1.0 + ut_var) * fb_var / (1.0 + ut_var + fb_var)
        self.k5 = self.sig5 / (ut_var * (1.0 + ut_var))
        ratio = (1.0 + ut_var) / fb_var
        self.p = ratio / (1.0 + ratio)
        self.q = 1.0 / (1.0 + ratio)
        bp = params.harvest_efficiency * params.tx_power
        gain_rate = (params.noise_power / params.tx_power) * (
            2.0 ** (rate_target / (1.0 - alpha - eta - tau)) - 1.0
        )
        self.b_energy = (1.0 - alpha - tau) * lth * params.decode_power / (alpha * bp)
        self.b_feedback = tau * params.feedback_power / (alpha * bp)
        self.c1 = 2.0 * self.sig2 * gain_rate

    def energy_threshold(self, s):
        """Required along+orthogonal channel power given the estimate's
        scaled decomposition sum s = theta7 + theta8."""
        return 2.0 * self.sig2 * (self.b_energy + 0.5 * self.b_feedback * self.sig5 * s)


def _ncx2_2_pdf(x, noncentrality):
    """Noncentral chi-square density, 2 degrees of freedom, vectorized in x.

    Written as 0.5 * exp(-(sqrt(x)-sqrt(nc))^2/2) * I0_scaled(sqrt(nc x)),
    which never overflows.
    """
    x = np.asarray(x, dtype=np.float64)
    root = np.sqrt(noncentrality * x)
    gap = np.sqrt(x) - math.sqrt(noncentrality)
    return 0.5 * np.exp(-0.5 * gap * gap) * bessel_i_scaled_many(0.0, root)


_INNER_DEPTH = 10
_INNER_PANELS = 512
_MIDDLE_DEPTH = 12
_MIDDLE_PANELS = 1024


_SUPPORT_CLIP = 14.0


def _fdd_event_prob(geom, theta7, theta8, abs_tol, rel_tol, cap_tail=None, cut=0.0):
    """P[rate below target and energy covered | theta7, theta8].

    When the energy threshold t* does not exceed the rate cap c1, the event
    region {sum >= t*} minus {along-beam part >= c1} telescopes into two
    Marcum tails (the along-beam and orthogonal parts are conditionally
    independent noncentral chi-squares, so their sum is one too) and no
    integral is needed.  Otherwise a single bounded integral remains, taken
    only over the effective support of the along-beam density times the
    orthogonal tail (both decay like Gaussians in sqrt-space, so a +/- 14
    window in that space keeps the discarded mass below 1e-40); values whose
    cheap single-Marcum upper bound falls below ``cut`` are reported as 0.

    cap_tail is P[along-beam part >= c1], passed in by callers that evaluate
    many theta8 for one theta7 (it does not depend on theta8).
    """
    nu5 = geom.k5 * theta7
    s = theta7 + theta8
    t_star = geom.energy_threshold(s)
    if cap_tail is None:
        cap_tail = marcum_q(1, math.sqrt(nu5), math.sqrt(geom.c1))
    if t_star <= geom.c1:
        q = marcum_q(geom.lth, math.sqrt(geom.k5 * s), math.sqrt(t_star)) - cap_tail
        return min(max(q, 0.0), 1.0), 0.0

    nu6 = geom.k5 * theta8
    order = geom.lth - 1
    a6 = math.sqrt(nu6)
    if cut > 0.0 and marcum_q(order, a6, math.sqrt(t_star - geom.c1)) < cut:
        return 0.0, 0.0
    root5 = math.sqrt(nu5)
    lo = (root5 - _SUPPORT_CLIP) ** 2 if root5 > _SUPPORT_CLIP else 0.0
    tail_reach = (a6 + _SUPPORT_CLIP + math.sqrt(2.0 * order)) ** 2
    lo = max(lo, t_star - tail_reach)
    hi = min(geom.c1, (root5 + _SUPPORT_CLIP) ** 2)
    if lo >= hi:
        return 0.0, 0.0

    def integrand(x):
        tail = marcum_q_many(order, a6, np.sqrt(np.maximum(t_star - x, 0.0)))
        return _ncx2_2_pdf(x, nu5) * tail

    piece, err, _ = adaptive_gauss_kronrod(
        integrand,
        lo,
        hi,
        abs_tol=abs_tol,
        rel_tol=rel_tol,
        max_depth=_INNER_DEPTH,
        max_panels=_INNER_PANELS,
    )
    return min(max(piece, 0.0), 1.0), err


def data_outage_fdd(params, alpha, eta, tau, rate_target, spec=QuadratureSpec()):
    """P[powered but below target] with fed-back beamforming.

    Nested quadrature over the terminal estimate's decomposition against the
    beam (outer axis: along-beam part, with the elementary Erlang-mixture
    marginal; middle axis: orthogonal part, central chi-square) of the exact
    conditional event probability.  Falls back to Rao-Blackwellized Monte
    Carlo over the outer two axes if the adaptive rule exhausts its budget.
    """
    _check_budget(alpha, eta, tau)
    _check_rate(rate_target)
    if tau <= 0.0:
        raise ValueError("feedback fraction must be positive for the feedback scheme")
    geom = _FddDataGeometry(params, alpha, eta, tau, rate_target)
    lth = geom.lth

    hi7 = chi2_upper_quantile(2 * lth, spec.tail_mass) / geom.q
    hi8 = chi2_upper_quantile(2 * lth - 2, spec.tail_mass)
    inner_abs = max(spec.abs_tol * 1e-3, 1e-14)
    middle_abs = max(spec.abs_tol * 1e-2, 1e-13)
    cut = inner_abs * 1e-2
    log_norm8 = math.lgamma(lth - 1.0) + (lth - 1.0) * math.log(2.0)

    def middle(theta7, cap_tail):
        def integrand(theta8):
            out = np.empty_like(theta8)
            for i, t8 in enumerate(theta8):
                prob, _ = _fdd_event_prob(
                    geom, theta7, t8, inner_abs, spec.rel_tol, cap_tail=cap_tail, cut=cut
                )
                log_pdf = (lth - 2.0) * math.log(t8) - 0.5 * t8 - log_norm8
                out[i] = prob * math.exp(log_pdf)
            return out

        value, _, _ = adaptive_gauss_kronrod(
            integrand,
            0.0,
            hi8,
            abs_tol=middle_abs,
            rel_tol=spec.rel_tol,
            max_depth=_MIDDLE_DEPTH,
            max_panels=_MIDDLE_PANELS,
        )
        return value

    def outer(theta7):
        dens = _projection_pdf(theta7, lth, geom.p, geom.q)
        out = np.empty_like(theta7)
        for i, t7 in enumerate(theta7):
            if dens[i] <= 0.0:
                out[i] = 0.0
                continue
            cap_tail = marcum_q(1, math.sqrt(geom.k5 * t7), math.sqrt(geom.c1))
            # float-zero complement means the rate cap is essentially never
            # binding at this theta7, so the event cannot happen
            out[i] = middle(float(t7), cap_tail) if cap_tail < 1.0 else 0.0
        return dens * out

    try:
        value, err, _ = adaptive_gauss_kronrod(
            outer,
            0.0,
            hi7,
            abs_tol=spec.abs_tol,
            rel_tol=spec.rel_tol,
            max_depth=spec.max_depth,
            max_panels=spec.max_panels,
        )
    except NonconvergenceError:
        if spec.fallback_samples <= 0:
            raise
        return _data_outage_fdd_mc(geom, spec, inner_abs)
    return OutageResult(
        value=min(max(value, 0.0), 1.0),
        est_error=err + 2.0 * spec.tail_mass + 20.0 * middle_abs,
        method="quadrature",
    )


def _data_outage_fdd_mc(geom, spec, inner_abs):
    """Monte Carlo over (theta7, theta8) with the exact conditional event
    probability per draw, which removes the innermost variance entirely."""
    lth = geom.lth
    n = spec.fallback_samples
    rng = RngStream(spec.fallback_seed, 0)

    weights = _projection_mixture_weights(lth, geom.p, geom.q)
    edges = np.cumsum(weights)
    mix = np.searchsorted(edges, rng.uniform(n) * edges[-1])
    squares = rng.standard_normal((2 * lth, n)) ** 2
    cumulative = np.cumsum(squares, axis=0)
    theta7 = cumulative[2 * mix + 1, np.arange(n)] / geom.q
    theta8 = np.sum(rng.standard_normal((2 * lth - 2, n)) ** 2, axis=0)

    probs = np.empty(n)
    for i in range(n):
        probs[i], _ = _fdd_event_prob(geom, theta7[i], theta8[i], inner_abs, spec.rel_tol)
    mean = float(np.mean(probs))
    stderr = float(np.std(probs) / math.sqrt(n))
    return OutageResult(value=mean, est_error=stderr, method="monte-carlo")
