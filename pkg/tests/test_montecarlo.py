"""Monte Carlo estimators: chunking, policies, intervals, self-checks."""

import numpy as np
import pytest

from swiptsim.model import SystemParams
from swiptsim.montecarlo import (
    CHUNK,
    AlphaPolicy,
    BernoulliEstimate,
    CheckResult,
    chunk_observables,
    chunk_plan,
    chunk_rates,
    draw_chunk,
    mc_data_outage,
    mc_distribution_checks,
    mc_energy_shortage,
)
from swiptsim.outage import (
    data_outage_tdd,
    energy_shortage_non_csi,
    energy_shortage_tdd,
)


class TestChunking:
    def test_plan_single_chunk(self):
        assert chunk_plan(1000) == [1000]
        assert chunk_plan(CHUNK) == [CHUNK]

    def test_plan_splits_remainder(self):
        assert chunk_plan(CHUNK + 5) == [CHUNK, 5]
        assert chunk_plan(3 * CHUNK) == [CHUNK, CHUNK, CHUNK]

    def test_plan_rejects_bad_sizes(self):
        with pytest.raises(ValueError):
            chunk_plan(0)
        with pytest.raises(ValueError):
            chunk_plan(-5)
        with pytest.raises(ValueError):
            chunk_plan(2.5)

    def test_draw_chunk_shapes_and_determinism(self, params3):
        h, w1, w2 = draw_chunk(params3, seed=4, stream_id=0, m=256)
        assert h.shape == w1.shape == w2.shape == (3, 256)
        h2, _, _ = draw_chunk(params3, seed=4, stream_id=0, m=256)
        np.testing.assert_array_equal(h, h2)
        h3, _, _ = draw_chunk(params3, seed=4, stream_id=1, m=256)
        assert not np.array_equal(h, h3)

    def test_channel_draws_shared_across_schemes(self, params3):
        # the chunk always draws all three arrays, so every scheme sees the
        # same channels for the same (seed, stream): common random numbers
        h, w1, w2 = draw_chunk(params3, seed=0, stream_id=0, m=128)
        g_iso, bf_iso, _ = chunk_observables(params3, "non-csi", None, None, h, w1, w2)
        g_tdd, bf_tdd, _ = chunk_observables(params3, "tdd", 0.02, None, h, w1, w2)
        np.testing.assert_array_equal(g_iso, g_tdd)
        assert bf_iso is None and bf_tdd is not None

    def test_observables_by_scheme(self, params3):
        h, w1, w2 = draw_chunk(params3, seed=0, stream_id=0, m=64)
        gains, bf, ut = chunk_observables(params3, "fdd", 0.02, 0.03, h, w1, w2)
        assert bf.shape == ut.shape == (64,)
        assert np.all(bf <= gains + 1e-12)
        with pytest.raises(ValueError, match="training fraction"):
            chunk_observables(params3, "tdd", None, None, h, w1, w2)
        with pytest.raises(ValueError, match="both eta and tau"):
            chunk_observables(params3, "fdd", 0.02, None, h, w1, w2)

    def test_chunk_rates_nonnegative(self, params3):
        h, w1, w2 = draw_chunk(params3, seed=0, stream_id=0, m=512)
        for scheme, eta, tau in (("non-csi", None, None), ("tdd", 0.02, None), ("fdd", 0.02, 0.03)):
            rates = chunk_rates(params3, scheme, eta, tau, None, h, w1, w2)
            assert np.all(rates >= 0.0)


class TestAlphaPolicy:
    def test_classmethods(self):
        assert AlphaPolicy.fixed(0.1).alpha == 0.1
        assert AlphaPolicy.minimal().alpha is None
        assert AlphaPolicy() == AlphaPolicy.minimal()

    def test_validation(self):
        with pytest.raises(ValueError):
            AlphaPolicy(alpha=0.0)
        with pytest.raises(ValueError):
            AlphaPolicy(alpha=1.0)

    def test_mc_accepts_float_none_or_policy(self, params3):
        by_float = mc_data_outage("non-csi", params3, 0.02, 6.0, n_samples=5000)
        by_policy = mc_data_outage("non-csi", params3, AlphaPolicy.fixed(0.02), 6.0, n_samples=5000)
        assert by_float == by_policy
        by_none = mc_data_outage("non-csi", params3, None, 6.0, n_samples=5000)
        by_minimal = mc_data_outage(
            "non-csi", params3, AlphaPolicy.minimal(), 6.0, n_samples=5000
        )
        assert by_none == by_minimal
        assert by_none != by_float  # the policies measure different events


class TestBernoulliEstimate:
    def test_prob_and_stderr(self):
        est = BernoulliEstimate(successes=25, n_samples=100)
        assert est.prob == 0.25
        assert est.stderr == pytest.approx(np.sqrt(0.25 * 0.75 / 100))

    def test_wilson_interval_known_value(self):
        # 10/100 at 95%: textbook Wilson bounds
        lo, hi = BernoulliEstimate(10, 100).wilson_interval()
        assert lo == pytest.approx(0.05522854, abs=1e-6)
        assert hi == pytest.approx(0.17436566, abs=1e-6)

    def test_wilson_pinned_exactly_at_extremes(self):
        lo, hi = BernoulliEstimate(0, 10_000).wilson_interval()
        assert lo == 0.0  # exact, so a closed form of 0.0 is covered
        assert hi > 0.0
        lo, hi = BernoulliEstimate(10_000, 10_000).wilson_interval()
        assert hi == 1.0
        assert lo < 1.0

    def test_ci95_properties_match_interval(self):
        est = BernoulliEstimate(successes=40, n_samples=1000)
        assert (est.ci95_low, est.ci95_high) == est.wilson_interval()

    def test_interval_ordering_and_coverage_of_point(self):
        est = BernoulliEstimate(successes=7, n_samples=50)
        lo, hi = est.wilson_interval()
        assert 0.0 <= lo < est.prob < hi <= 1.0
        narrow = est.wilson_interval(z=1.0)
        assert narrow[0] > lo and narrow[1] < hi


class TestMcEnergyShortage:
    def test_minimal_policy_rejected(self, params3):
        with pytest.raises(ValueError, match="never falls short"):
            mc_energy_shortage("non-csi", params3, None)

    def test_matches_closed_form_non_csi(self, params3):
        est = mc_energy_shortage("non-csi", params3, 0.02, n_samples=400_000, seed=1)
        ref = energy_shortage_non_csi(params3, 0.02).value
        lo, hi = est.wilson_interval()
        assert lo <= ref <= hi

    def test_matches_closed_form_tdd(self, params3):
        est = mc_energy_shortage("tdd", params3, 0.02, eta=0.05, n_samples=400_000, seed=1)
        ref = energy_shortage_tdd(params3, 0.02, 0.05).value
        lo, hi = est.wilson_interval()
        assert lo <= ref <= hi

    def test_event_independent_of_noise_power(self):
        # no receiver noise enters the harvest/drain comparison for the
        # isotropic and reciprocity schemes, so the hit count is identical
        # at any SNR, not merely close
        lo_snr = SystemParams.from_snr_db(3, 0.0)
        hi_snr = SystemParams.from_snr_db(3, 30.0)
        a = mc_energy_shortage("tdd", lo_snr, 0.02, eta=0.05, n_samples=50_000, seed=3)
        b = mc_energy_shortage("tdd", hi_snr, 0.02, eta=0.05, n_samples=50_000, seed=3)
        assert a.successes == b.successes

    def test_alpha_doubling_reduces_shortage(self, params3):
        small = mc_energy_shortage("non-csi", params3, 0.02, n_samples=100_000)
        large = mc_energy_shortage("non-csi", params3, 0.04, n_samples=100_000)
        assert large.successes < small.successes


class TestMcDataOutage:
    def test_zero_target_never_misses(self, params3):
        for alpha in (0.02, None):
            est = mc_data_outage("non-csi", params3, alpha, 0.0, n_samples=2000)
            assert est.successes == 0

    def test_negative_target_rejected(self, params3):
        with pytest.raises(ValueError, match="nonnegative"):
            mc_data_outage("non-csi", params3, 0.02, -1.0)

    def test_matches_closed_form_tdd(self, params3):
        eta = 0.0163
        est = mc_data_outage("tdd", params3, 0.02, 6.0, eta=eta, n_samples=400_000, seed=1)
        ref = data_outage_tdd(params3, 0.02, eta, 6.0).value
        lo, hi = est.wilson_interval()
        assert lo <= ref + 1e-7 and ref - 1e-7 <= hi

    def test_fixed_alpha_excludes_unpowered_blocks(self, params3):
        # a rate target far above anything achievable: with fixed alpha the
        # miss set is exactly the powered blocks
        target = 1e6
        est = mc_data_outage("non-csi", params3, 0.02, target, n_samples=50_000, seed=2)
        short = mc_energy_shortage("non-csi", params3, 0.02, n_samples=50_000, seed=2)
        assert est.successes + short.successes == est.n_samples

    def test_minimal_policy_counts_rate_misses_only(self, params3):
        h_target = 1e6
        est = mc_data_outage("non-csi", params3, None, h_target, n_samples=10_000)
        assert est.successes == est.n_samples  # every block misses, none excluded

    def test_unknown_scheme(self, params3):
        with pytest.raises(ValueError, match="unknown scheme"):
            mc_data_outage("zf", params3, 0.02, 6.0)


class TestDistributionChecks:
    def test_all_pass_at_frozen_seed(self, params3):
        results = mc_distribution_checks(params3, 0.0163, 0.0283, n_samples=15_000, seed=1)
        failing = [r.name for r in results if not r.passed]
        assert failing == []

    def test_check_inventory(self, params3):
        results = mc_distribution_checks(params3, 0.02, 0.03, n_samples=2000, seed=0)
        names = [r.name for r in results]
        assert len(names) == len(set(names)) == 20
        assert sum(n.startswith("tdd/") for n in names) == 8
        assert sum(n.startswith("fdd/") for n in names) == 12
        for r in results:
            assert isinstance(r, CheckResult)
            assert r.threshold in (0.01, 4.0, 1e-10)

    def test_identity_checks_are_algebraic(self, params3):
        # the norm-split identities hold per sample to rounding, so they
        # must pass even at tiny n where the statistical checks are noisy
        results = mc_distribution_checks(params3, 0.02, 0.03, n_samples=200, seed=9)
        for r in results:
            if r.name.endswith("norm-split"):
                assert r.passed
                assert r.statistic < 1e-10
