"""Acceptance gate: one test (one pass/fail line under ``pytest -v``) per
criterion.  Each test prints a summary line with its measured statistic.

Stated runtime budgets are asserted on the compiled backend, which is the
configuration the package ships with; on the pure-python fallback the same
numerical checks run but the wall-clock assertion is waived.
"""

import math
import time

import numpy as np
import scipy.integrate
import scipy.special
import scipy.stats

from swiptsim import outage, specfun
from swiptsim.analytic import (
    GridSpec,
    default_regime,
    ergodic_rate_ratio,
    fdd_training_optimum,
    grid_search,
    tdd_training_optimum,
)
from swiptsim.model import SystemParams
from swiptsim.montecarlo import (
    chunk_observables,
    draw_chunk,
    mc_data_outage,
    mc_distribution_checks,
    mc_energy_shortage,
)
from swiptsim.schemes import (
    alpha_fdd,
    alpha_non_csi,
    alpha_tdd,
    energy_slack_fdd,
    energy_slack_non_csi,
    energy_slack_tdd,
)

TINY_PROB = 1e-5  # below this the MC estimate is uninformative


def _finish(name, budget_s, t0, ok, detail):
    elapsed = time.time() - t0
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail} ({elapsed:.1f}s)")
    assert ok, detail
    if specfun.BACKEND == "native":
        assert elapsed < budget_s, f"{name} exceeded its {budget_s}s budget: {elapsed:.1f}s"


def _analytic_fractions(params):
    regime = default_regime(params)
    tdd = tdd_training_optimum(params, regime)
    fdd = fdd_training_optimum(params, regime)
    return tdd.eta, fdd.eta, fdd.tau


# ---------------------------------------------------------------------------
# criterion 1: special-function kernel
# ---------------------------------------------------------------------------

def test_criterion_1_special_function_kernel():
    t0 = time.time()

    # complementarity of the regularized incomplete gamma pair
    worst_gamma = 0.0
    for a in (0.5, 1.0, 2.5, 7.0, 31.0):
        for x in np.logspace(-8, 3, 160):
            s = specfun.reg_gamma_lower(a, x) + specfun.reg_gamma_upper(a, x)
            worst_gamma = max(worst_gamma, abs(s - 1.0))

    # Marcum Q against direct quadrature of its defining integral
    def oracle(m, a, b):
        def integrand(x):
            return (
                x * (x / a) ** (m - 1)
                * scipy.special.ive(m - 1, a * x)
                * math.exp(-0.5 * (x - a) ** 2)
            )

        val, _ = scipy.integrate.quad(integrand, b, max(b + 30.0, a + 40.0), limit=400)
        return val

    rng = np.random.default_rng(1)
    worst_marcum = 0.0
    for _ in range(50):
        m = int(rng.integers(1, 9))
        a = float(rng.uniform(0.05, 10.0))
        b = float(rng.uniform(0.05, 10.0))
        worst_marcum = max(worst_marcum, abs(specfun.marcum_q(m, a, b) - oracle(m, a, b)))

    # noncentral chi-square survival identity, 4 sigma against empirical tails
    n = 10_000_000
    worst_tail_sigma = 0.0
    for m, a, b in ((1, 1.5, 2.0), (2, 3.0, 2.5), (4, 2.0, 4.0)):
        draws = np.random.default_rng(m).noncentral_chisquare(2 * m, a * a, size=n)
        emp = np.count_nonzero(draws > b * b) / n
        q = specfun.marcum_q(m, a, b)
        sigma = math.sqrt(q * (1.0 - q) / n)
        worst_tail_sigma = max(worst_tail_sigma, abs(emp - q) / sigma)

    ok = worst_gamma <= 1e-12 and worst_marcum <= 1e-9 and worst_tail_sigma < 4.0
    _finish(
        "criterion 1 (special-function kernel)", 60.0, t0, ok,
        f"gamma complement {worst_gamma:.2e} (<=1e-12), marcum vs quadrature "
        f"{worst_marcum:.2e} (<=1e-9), worst tail deviation {worst_tail_sigma:.2f} sigma (<4)",
    )


# ---------------------------------------------------------------------------
# criterion 2: closed forms inside Wilson 95% intervals at n = 1e6
# ---------------------------------------------------------------------------

def test_criterion_2_closed_form_vs_monte_carlo():
    t0 = time.time()
    n, seed, alpha, target = 1_000_000, 1, 0.02, 6.0
    checked, range_only, misses = 0, 0, []

    for snr in (0.0, 10.0, 20.0, 30.0):
        params = SystemParams.from_snr_db(3, snr)
        eta_t, eta_f, tau_f = _analytic_fractions(params)
        cases = [
            ("energy/non-csi", outage.energy_shortage_non_csi(params, alpha),
             mc_energy_shortage("non-csi", params, alpha, n_samples=n, seed=seed)),
            ("energy/tdd", outage.energy_shortage_tdd(params, alpha, eta_t),
             mc_energy_shortage("tdd", params, alpha, eta=eta_t, n_samples=n, seed=seed)),
            ("energy/fdd", outage.energy_shortage_fdd(params, alpha, eta_f, tau_f),
             mc_energy_shortage("fdd", params, alpha, eta=eta_f, tau=tau_f,
                                n_samples=n, seed=seed)),
            ("data/non-csi", outage.data_outage_non_csi(params, alpha, target),
             mc_data_outage("non-csi", params, alpha, target, n_samples=n, seed=seed)),
            ("data/tdd", outage.data_outage_tdd(params, alpha, eta_t, target),
             mc_data_outage("tdd", params, alpha, target, eta=eta_t,
                            n_samples=n, seed=seed)),
            ("data/fdd", outage.data_outage_fdd(params, alpha, eta_f, tau_f, target),
             mc_data_outage("fdd", params, alpha, target, eta=eta_f, tau=tau_f,
                            n_samples=n, seed=seed)),
        ]
        for name, closed, mc in cases:
            if closed.value < TINY_PROB:
                # MC cannot resolve the value; require both routes to agree
                # that the probability is negligible
                range_only += 1
                if not (0.0 <= closed.value < TINY_PROB and mc.prob < 10.0 * TINY_PROB):
                    misses.append(f"{name}@{snr:g}dB tiny-prob range check")
                continue
            checked += 1
            lo, hi = mc.wilson_interval()
            if not (lo - closed.est_error <= closed.value <= hi + closed.est_error):
                misses.append(
                    f"{name}@{snr:g}dB closed {closed.value:.4e} outside "
                    f"[{lo:.4e}, {hi:.4e}]"
                )

    ok = not misses
    _finish(
        "criterion 2 (closed form vs Monte Carlo)", 1800.0, t0, ok,
        f"{checked} interval checks + {range_only} tiny-probability range checks, "
        + ("all covered" if ok else "; ".join(misses)),
    )


# ---------------------------------------------------------------------------
# criterion 3: analytic training fractions vs exhaustive grid search
# ---------------------------------------------------------------------------

def test_criterion_3_training_optimum_quality():
    t0 = time.time()
    n, seed, step = 100_000, 0, 0.01
    floors = {0.0: 0.80, 30.0: 0.90}
    zetas, ok = [], True

    for lth in (3, 6):
        for snr, floor in floors.items():
            params = SystemParams.from_snr_db(lth, snr)
            eta_t, eta_f, tau_f = _analytic_fractions(params)
            for scheme, eta, tau in (("tdd", eta_t, None), ("fdd", eta_f, tau_f)):
                grid = grid_search(scheme, params, GridSpec(step), n_samples=n, seed=seed)
                zeta = ergodic_rate_ratio(
                    scheme, params, eta=eta, tau=tau, n_samples=n, seed=seed,
                    baseline=(scheme, grid.eta, grid.tau if scheme == "fdd" else None),
                ).ratio
                zetas.append((scheme, lth, snr, zeta))
                ok &= zeta >= floor

    detail = ", ".join(f"zeta_{s}(L={l},{q:g}dB)={z:.4f}" for s, l, q, z in zetas)
    _finish(
        "criterion 3 (training optimum quality)", 1200.0, t0, ok,
        detail + " (floors 0.90@30dB, 0.80@0dB)",
    )


# ---------------------------------------------------------------------------
# criterion 4: qualitative orderings at 3 sigma
# ---------------------------------------------------------------------------

def test_criterion_4_scheme_orderings():
    t0 = time.time()
    n, seed = 200_000, 0
    snr_grid = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    problems = []

    def ratios(lth):
        """CRN-paired rate ratios vs the no-CSI baseline per SNR point."""
        out = {"tdd": [], "fdd": []}
        for snr in snr_grid:
            params = SystemParams.from_snr_db(lth, snr)
            eta_t, eta_f, tau_f = _analytic_fractions(params)
            out["tdd"].append(
                ergodic_rate_ratio("tdd", params, eta=eta_t, n_samples=n, seed=seed)
            )
            out["fdd"].append(
                ergodic_rate_ratio("fdd", params, eta=eta_f, tau=tau_f,
                                   n_samples=n, seed=seed)
            )
        return out

    r3 = ratios(3)
    r6 = ratios(6)

    # trained schemes beat the no-CSI baseline everywhere
    for scheme in ("tdd", "fdd"):
        for snr, est in zip(snr_grid, r3[scheme]):
            if not est.ratio > 1.0 + 3.0 * est.stderr:
                problems.append(f"{scheme} ratio at {snr:g}dB not >1 at 3sigma")

    # reciprocity training dominates feedback training pointwise
    for snr in snr_grid:
        params = SystemParams.from_snr_db(3, snr)
        eta_t, eta_f, tau_f = _analytic_fractions(params)
        rel = ergodic_rate_ratio(
            "tdd", params, eta=eta_t, n_samples=n, seed=seed,
            baseline=("fdd", eta_f, tau_f),
        )
        if not rel.ratio >= 1.0 - 3.0 * rel.stderr:
            problems.append(f"tdd below fdd at {snr:g}dB")

    # the reciprocity advantage over no-CSI shrinks with SNR
    tdd3 = r3["tdd"]
    for i in range(len(snr_grid) - 1):
        a, b = tdd3[i], tdd3[i + 1]
        guard = 3.0 * math.hypot(a.stderr, b.stderr)
        if not b.ratio <= a.ratio + guard:
            problems.append(f"tdd ratio rises {snr_grid[i]:g}->{snr_grid[i+1]:g}dB")

    # the feedback advantage peaks strictly inside the SNR range
    fdd3 = [est.ratio for est in r3["fdd"]]
    peak = int(np.argmax(fdd3))
    if peak in (0, len(fdd3) - 1):
        problems.append(f"fdd ratio peak at grid edge ({snr_grid[peak]:g}dB)")
    else:
        sig = [est.stderr for est in r3["fdd"]]
        for edge in (0, len(fdd3) - 1):
            if not fdd3[peak] > fdd3[edge] + 3.0 * math.hypot(sig[peak], sig[edge]):
                problems.append(f"fdd peak not 3sigma above edge {snr_grid[edge]:g}dB")

    # more antennas widen the reciprocity advantage
    for snr, a3, a6 in zip(snr_grid, r3["tdd"], r6["tdd"]):
        guard = 3.0 * math.hypot(a3.stderr, a6.stderr)
        if not a6.ratio >= a3.ratio - guard:
            problems.append(f"L=6 tdd ratio below L=3 at {snr:g}dB")

    ok = not problems
    _finish(
        "criterion 4 (scheme orderings at 3 sigma)", 600.0, t0, ok,
        "all orderings hold" if ok else "; ".join(problems),
    )


# ---------------------------------------------------------------------------
# criterion 5: distributional decompositions
# ---------------------------------------------------------------------------

def test_criterion_5_distribution_decompositions():
    t0 = time.time()
    params = SystemParams.from_snr_db(3, 20.0)
    eta_t, _, tau_f = _analytic_fractions(params)
    results = mc_distribution_checks(params, eta_t, tau_f, n_samples=100_000, seed=5)
    failing = [r.name for r in results if not r.passed]
    ks = [r for r in results if r.threshold == 0.01]
    min_p = min(r.statistic for r in ks)
    ok = not failing
    _finish(
        "criterion 5 (distributional decompositions)", 300.0, t0, ok,
        f"{len(results)} checks ({len(ks)} KS laws, min p={min_p:.3f}), "
        + ("all pass" if ok else "failing: " + ", ".join(failing)),
    )


# ---------------------------------------------------------------------------
# criterion 6: per-realization energy-budget identities
# ---------------------------------------------------------------------------

def test_criterion_6_energy_budget_identities():
    t0 = time.time()
    params = SystemParams.from_snr_db(3, 20.0)
    eta, tau = 0.02, 0.03
    h, w1, w2 = draw_chunk(params, seed=0, stream_id=0, m=10_000)
    worst = 0.0

    gains, _, _ = chunk_observables(params, "non-csi", None, None, h, w1, w2)
    a = alpha_non_csi(params, gains)
    harvested = a * params.harvest_efficiency * params.tx_power * gains
    worst = max(worst, np.max(np.abs(energy_slack_non_csi(params, gains, a)) / harvested))

    gains, _, _ = chunk_observables(params, "tdd", eta, None, h, w1, w2)
    a = alpha_tdd(params, gains, eta)
    harvested = a * params.harvest_efficiency * params.tx_power * gains
    worst = max(worst, np.max(np.abs(energy_slack_tdd(params, gains, eta, a)) / harvested))

    gains, _, ut_gains = chunk_observables(params, "fdd", eta, tau, h, w1, w2)
    a = alpha_fdd(params, gains, ut_gains, eta, tau)
    harvested = a * params.harvest_efficiency * params.tx_power * gains
    worst = max(
        worst,
        np.max(np.abs(energy_slack_fdd(params, gains, ut_gains, eta, tau, a)) / harvested),
    )

    ok = worst <= 1e-12
    _finish(
        "criterion 6 (energy-budget identities)", 60.0, t0, ok,
        f"worst relative budget residual {worst:.2e} over 10000 draws x 3 schemes "
        "(<=1e-12)",
    )
