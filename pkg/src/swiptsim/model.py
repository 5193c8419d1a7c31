"""System parameters, channel model, and reproducible random streams.

The downlink has an access point with ``n_antennas`` transmit antennas and a
single-antenna terminal with no battery.  Within each coherence block of
``coherence_symbols`` symbols the terminal first harvests RF energy, then
(depending on the scheme) spends part of it on training or feedback, and
finally decodes data, drawing ``decode_power`` per symbol while doing so.
Channels are i.i.d. circularly symmetric complex Gaussian with unit per-entry
variance, drawn fresh per block.

Reproducibility contract: every random quantity comes from ``RngStream``,
which turns raw 64-bit Philox counters into open-interval uniforms
``u = ((raw >> 11) + 0.5) * 2**-53`` and applies the inverse normal CDF.
The mapping from (seed, stream_id, draw index) to variates is therefore fixed
across platforms, backends, and worker counts.
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtri

__all__ = [
    "SystemParams",
    "ChannelRealization",
    "EstimateSet",
    "RngStream",
    "sample_channel",
    "harvested_power",
    "sample_tdd_estimate",
    "sample_fdd_estimates",
    "beamforming_gain",
]

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SystemParams:
    """Static configuration of one downlink scenario.

    Powers are linear (not dB); ``tx_power`` is the access-point transmit
    power, ``noise_power`` the receiver noise level that defines
    SNR = tx_power / noise_power, ``decode_power`` the terminal's decoding
    drain per symbol, ``pilot_power`` the terminal's uplink pilot power
    (reciprocity training), and ``feedback_power`` its uplink feedback power
    (feedback training).  ``harvest_efficiency`` is the RF-to-DC conversion
    efficiency in (0, 1].
    """

    n_antennas: int
    noise_power: float = 1.0
    tx_power: float = 1.0
    harvest_efficiency: float = 0.5
    coherence_symbols: int = 1000
    decode_power: float = 1e-3
    pilot_power: float = 1e-2
    feedback_power: float = 1e-2

    def __post_init__(self):
        if int(self.n_antennas) != self.n_antennas or self.n_antennas < 2:
            raise ValueError(f"n_antennas must be an integer >= 2, got {self.n_antennas!r}")
        if int(self.coherence_symbols) != self.coherence_symbols or self.coherence_symbols < 4:
            raise ValueError(
                f"coherence_symbols must be an integer >= 4, got {self.coherence_symbols!r}"
            )
        for name in ("noise_power", "tx_power", "decode_power", "pilot_power", "feedback_power"):
            value = getattr(self, name)
            if not (value > 0.0 and math.isfinite(value)):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
        if not 0.0 < self.harvest_efficiency <= 1.0:
            raise ValueError(
                f"harvest_efficiency must lie in (0, 1], got {self.harvest_efficiency!r}"
            )

    @property
    def snr_db(self):
        return 10.0 * math.log10(self.tx_power / self.noise_power)

    @classmethod
    def from_snr_db(cls, n_antennas, snr_db, **kwargs):
        """Build params at a given downlink SNR by setting the noise level."""
        tx_power = kwargs.pop("tx_power", 1.0)
        return cls(
            n_antennas=n_antennas,
            noise_power=tx_power * 10.0 ** (-snr_db / 10.0),
            tx_power=tx_power,
            **kwargs,
        )

    def at_snr_db(self, snr_db):
        return replace(self, noise_power=self.tx_power * 10.0 ** (-snr_db / 10.0))


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One channel draw: complex vector of shape (n_antennas,)."""

    vector: np.ndarray

    @property
    def gain(self):
        """Squared norm of the channel vector."""
        return float(np.sum(np.abs(self.vector) ** 2))


@dataclass(frozen=True, eq=False)
class EstimateSet:
    """Channel estimates available after training.

    ``ap_estimate`` is what the access point beamforms on.  Under
    reciprocity training it is the only estimate; under feedback training the
    terminal's own (better) estimate is kept in ``ut_estimate`` because the
    terminal's energy balance depends on it.
    """

    ap_estimate: np.ndarray
    ut_estimate: np.ndarray | None = None


class RngStream:
    """Counter-based random stream: Philox keyed by (seed, stream_id).

    Independent streams for the same seed are obtained by varying
    ``stream_id``; chunked Monte Carlo gives chunk ``i`` the stream
    ``base + i`` so results do not depend on how chunks are scheduled.
    """

    def __init__(self, seed, stream_id=0):
        if int(seed) != seed or seed < 0:
            raise ValueError(f"seed must be a nonnegative integer, got {seed!r}")
        if int(stream_id) != stream_id or stream_id < 0:
            raise ValueError(f"stream_id must be a nonnegative integer, got {stream_id!r}")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        key = np.array([self.seed & _MASK64, self.stream_id & _MASK64], dtype=np.uint64)
        self._bitgen = np.random.Philox(key=key)

    def substream(self, offset):
        """A related independent stream (stream_id shifted by offset)."""
        return RngStream(self.seed, self.stream_id + offset)

    def uniform(self, shape):
        """Open-interval (0, 1) uniforms with the documented 53-bit mapping."""
        n = int(np.prod(shape)) if np.ndim(shape) else int(shape)
        raw = self._bitgen.random_raw(n)
        u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * (2.0**-53)
        return u.reshape(shape)

    def standard_normal(self, shape):
        """Inverse-CDF standard normals (portable across platforms)."""
        return ndtri(self.uniform(shape))

    def complex_normal(self, shape, var=1.0):
        """Circularly symmetric complex normals with per-entry variance var.

        Draw layout is fixed: the real parts of the whole array first, then
        the imaginary parts.
        """
        pair = self.standard_normal((2,) + tuple(np.atleast_1d(shape)))
        scale = math.sqrt(0.5 * var)
        return scale * (pair[0] + 1j * pair[1])


def sample_channel(params, rng, count=None):
    """Draw channel realizations.

    With ``count=None`` returns a single ChannelRealization; otherwise an
    (n_antennas, count) complex ndarray for vectorized work.
    """
    if count is None:
        return ChannelRealization(rng.complex_normal((params.n_antennas,)))
    return rng.complex_normal((params.n_antennas, count))

def harvested_power(params, channel):
    """Average harvested power per symbol during the harvest phase.

    Energy beamforming without CSI spreads ``tx_power`` isotropically, so the
    terminal collects harvest_efficiency * tx_power * |h|^2 / n_antennas.
    ``channel`` may be a ChannelRealization or a squared-norm value/array.
    """
    gain = channel.gain if isinstance(channel, ChannelRealization) else channel
    return params.harvest_efficiency * params.tx_power * gain / params.n_antennas


def tdd_estimate_noise_var(params, eta):
    """Per-entry variance of the reciprocity-training estimation error."""
    if not 0.0 < eta < 1.0:
        raise ValueError(f"training fraction must lie in (0, 1), got {eta!r}")
    return params.noise_power / (eta * params.coherence_symbols * params.pilot_power)


def fdd_estimate_noise_vars(params, eta, tau):
    """Per-entry error variances (terminal-side, feedback stage) for FDD."""
    if not 0.0 < eta < 1.0:
        raise ValueError(f"pilot fraction must lie in (0, 1), got {eta!r}")
    if not 0.0 < tau < 1.0:
        raise ValueError(f"feedback fraction must lie in (0, 1), got {tau!r}")
    ut_var = (
        params.noise_power
        * params.n_antennas
        / (eta * params.coherence_symbols * params.tx_power)
    )
    fb_var = (
        params.noise_power
        * params.n_antennas
        / (tau * params.coherence_symbols * params.feedback_power)
    )
    return ut_var, fb_var


def sample_tdd_estimate(params, channel, eta, rng):
    """Access-point channel estimate after uplink pilots (reciprocity).

    The terminal spends fraction ``eta`` of the block on uplink pilots at
    ``pilot_power``; the resulting estimate is the true channel plus white
    estimation noise of per-entry variance
    noise_power / (eta * coherence_symbols * pilot_power).
    """
    var = tdd_estimate_noise_var(params, eta)
    h = channel.vector if isinstance(channel, ChannelRealization) else channel
    noise = rng.complex_normal(np.shape(h), var)
    return EstimateSet(ap_estimate=h + noise)


def sample_fdd_estimates(params, channel, eta, tau, rng):
    """Estimates after downlink pilots plus analog feedback (FDD).

    The terminal estimates the channel from downlink pilots (fraction
    ``eta`` of the block at the access point's power, shared across
    n_antennas pilot directions), then feeds its estimate back at
    ``feedback_power`` over fraction ``tau``; the access point sees the
    terminal's estimate corrupted once more.
    """
    ut_var, fb_var = fdd_estimate_noise_vars(params, eta, tau)
    h = channel.vector if isinstance(channel, ChannelRealization) else channel
    ut_estimate = h + rng.complex_normal(np.shape(h), ut_var)
    ap_estimate = ut_estimate + rng.complex_normal(np.shape(h), fb_var)
    return EstimateSet(ap_estimate=ap_estimate, ut_estimate=ut_estimate)


def beamforming_gain(channel, estimate):
    """Effective channel gain |h^H w|^2 under matched beamforming w = e/|e|.

    ``channel`` is the true channel (ChannelRealization or vector);
    ``estimate`` is an EstimateSet or the access point's estimate vector.
    Columns are treated as independent realizations when 2-D.
    """
    h = channel.vector if isinstance(channel, ChannelRealization) else channel
    e = estimate.ap_estimate if isinstance(estimate, EstimateSet) else estimate
    num = np.abs(np.sum(np.conj(h) * e, axis=0)) ** 2
    den = np.sum(np.abs(e) ** 2, axis=0)
    out = np.divide(num, den, out=np.zeros_like(den), where=den > 0.0)
    return float(out) if np.ndim(out) == 0 else out
