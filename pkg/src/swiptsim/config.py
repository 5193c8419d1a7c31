"""Experiment configuration: file schema, validation, defaults.

Experiments are described by flat ``key = value`` files with section headers
(INI syntax as read by :mod:`configparser`).  Every key is optional; the
defaults reproduce the reference operating point used throughout the package
(harvest efficiency 0.5, unit transmit power, 1000-symbol coherence blocks,
decode/pilot/feedback drains of 1e-3 / 1e-2 / 1e-2, target rate 6 bits/use).
A commented canonical example ships in ``configs/example.ini``.

All module preconditions that can be checked without running anything are
checked at load time, and violations raise :class:`ConfigError` with the
file and line of the offending key whenever that is known.
"""

import configparser
from dataclasses import dataclass

from .analytic import SCHEMES, GridSpec, _grid_points
from .model import SystemParams

__all__ = ["ConfigError", "ExperimentConfig", "TRAINING_SOURCES", "load_config"]

TRAINING_SOURCES = ("analytic", "analytic-high", "analytic-low", "grid-search", "explicit")

_MAX_SEED = (1 << 64) - 1


class ConfigError(Exception):
    """Invalid experiment configuration (bad file, key, value, or combination)."""


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment definition: sweep axes, physics, policies, output.

    ``alpha=None`` selects the minimal-per-realization harvest policy where
    that is meaningful (rate sweeps always use it; outage sweeps need the
    fixed value).  ``eta``/``tau`` are only set with ``training_source
    = "explicit"``; the analytic sources derive them per sweep point, and
    ``"analytic"`` picks the regime from the SNR (above 15 dB counts as
    high).
    """

    schemes: tuple = SCHEMES
    snr_db: tuple = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    n_antennas: tuple = (3, 6)
    harvest_efficiency: float = 0.5
    tx_power: float = 1.0
    coherence_symbols: int = 1000
    decode_power: float = 1e-3
    pilot_power: float = 1e-2
    feedback_power: float = 1e-2
    training_source: str = "analytic"
    eta: float | None = None
    tau: float | None = None
    grid_step: float = 0.01
    n_samples: int = 100_000
    seed: int = 0
    alpha: float | None = 0.02
    target_rate: float = 6.0
    output: str | None = None

    def __post_init__(self):
        for name in ("schemes", "snr_db", "n_antennas"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        self._check_sweep()
        self._check_system()
        self._check_training()
        self._check_simulation()

    def _check_sweep(self):
        if not self.schemes:
            raise ConfigError("scheme list is empty; give at least one scheme")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigError(f"unknown scheme {s!r}; expected one of {SCHEMES}")
        if len(set(self.schemes)) != len(self.schemes):
            raise ConfigError(f"duplicate scheme in {self.schemes!r}")
        if not self.snr_db:
            raise ConfigError("snr_db list is empty; give at least one SNR point")
        if not self.n_antennas:
            raise ConfigError("n_antennas list is empty; give at least one antenna count")

    def _check_system(self):
        # Constructing SystemParams runs its own range checks once per
        # antenna count; the noise level (any positive value) is irrelevant.
        try:
            for lth in self.n_antennas:
                self.params_for(lth, 0.0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def _check_training(self):
        if self.training_source not in TRAINING_SOURCES:
            raise ConfigError(
                f"unknown training source {self.training_source!r}; "
                f"expected one of {TRAINING_SOURCES}"
            )
        if self.training_source == "explicit":
            self._check_explicit_fractions()
        elif self.eta is not None or self.tau is not None:
            raise ConfigError(
                "eta/tau are only accepted with training source 'explicit' "
                f"(got source {self.training_source!r})"
            )
        try:
            spec = GridSpec(step=self.grid_step)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.training_source == "grid-search":
            try:
                for scheme in self.schemes:
                    if scheme == "non-csi":
                        continue
                    for lth in self.n_antennas:
                        _grid_points(scheme, self.params_for(lth, 0.0), spec.step)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None

    def _check_explicit_fractions(self):
        trained = [s for s in self.schemes if s != "non-csi"]
        if not trained:
            raise ConfigError(
                "training source 'explicit' needs a trained scheme (tdd or fdd)"
            )
        if self.eta is None:
            raise ConfigError("training source 'explicit' needs an eta value")
        if not 0.0 < self.eta < 1.0:
            raise ConfigError(f"eta must lie in (0, 1), got {self.eta!r}")
        tc = self.coherence_symbols
        if "tdd" in trained and self.eta < 1.0 / tc:
            raise ConfigError(
                f"eta = {self.eta!r} is below the one-pilot-symbol floor 1/{tc}"
            )
        if "fdd" in trained:
            if self.tau is None:
                raise ConfigError("the feedback scheme needs a tau value when explicit")
            if not 0.0 < self.tau < 1.0:
                raise ConfigError(f"tau must lie in (0, 1), got {self.tau!r}")
            floor = max(self.n_antennas) / tc
            if self.eta < floor or self.tau < floor:
                raise ConfigError(
                    f"explicit eta/tau must each cover n_antennas symbols "
                    f"(floor {floor} for n_antennas {max(self.n_antennas)})"
                )
            if self.eta + self.tau >= 1.0:
                raise ConfigError(
                    f"eta + tau = {self.eta + self.tau!r} leaves no data phase"
                )
        elif self.tau is not None:
            raise ConfigError("tau is only meaningful when the fdd scheme is swept")

    def _check_simulation(self):
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise ConfigError(
                f"n_samples must be a positive integer, got {self.n_samples!r}"
            )
        if int(self.seed) != self.seed or not 0 <= self.seed <= _MAX_SEED:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.alpha is not None and not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1) or be 'minimal', got {self.alpha!r}")
        if not self.target_rate > 0.0:
            raise ConfigError(f"target_rate must be positive, got {self.target_rate!r}")
        if self.alpha is not None and self.training_source == "explicit":
            budget = self.alpha + self.eta + (self.tau or 0.0)
            if budget >= 1.0:
                raise ConfigError(
                    f"alpha + eta + tau = {budget!r} must stay below 1"
                )

    def params_for(self, n_antennas, snr_db):
        """SystemParams for one sweep point."""
        return SystemParams.from_snr_db(
            n_antennas,
            snr_db,
            tx_power=self.tx_power,
            harvest_efficiency=self.harvest_efficiency,
            coherence_symbols=self.coherence_symbols,
            decode_power=self.decode_power,
            pilot_power=self.pilot_power,
            feedback_power=self.feedback_power,
        )


# ---------------------------------------------------------------------------
# file loading
# ---------------------------------------------------------------------------

def _parse_str_list(raw):
    items = tuple(s.strip() for s in raw.split(",") if s.strip())
    if not items:
        raise ValueError("expected a comma-separated list")
    return items


def _parse_float_list(raw):
    return tuple(float(s) for s in _parse_str_list(raw))


def _parse_int_list(raw):
    return tuple(int(s) for s in _parse_str_list(raw))


def _parse_alpha(raw):
    return None if raw.strip().lower() == "minimal" else float(raw)


def _parse_source(raw):
    source = raw.strip()
    if source not in TRAINING_SOURCES:
        raise ValueError(f"expected one of {TRAINING_SOURCES}")
    return source


# (section, key) -> (ExperimentConfig attribute, value parser)
_SCHEMA = {
    ("sweep", "schemes"): ("schemes", _parse_str_list),
    ("sweep", "snr_db"): ("snr_db", _parse_float_list),
    ("sweep", "n_antennas"): ("n_antennas", _parse_int_list),
    ("system", "harvest_efficiency"): ("harvest_efficiency", float),
    ("system", "tx_power"): ("tx_power", float),
    ("system", "coherence_symbols"): ("coherence_symbols", int),
    ("system", "decode_power"): ("decode_power", float),
    ("system", "pilot_power"): ("pilot_power", float),
    ("system", "feedback_power"): ("feedback_power", float),
    ("training", "source"): ("training_source", _parse_source),
    ("training", "eta"): ("eta", float),
    ("training", "tau"): ("tau", float),
    ("training", "grid_step"): ("grid_step", float),
    ("simulation", "n_samples"): ("n_samples", int),
    ("simulation", "seed"): ("seed", int),
    ("simulation", "alpha"): ("alpha", _parse_alpha),
    ("simulation", "target_rate"): ("target_rate", float),
    ("output", "path"): ("output", str.strip),
}

_SECTIONS = sorted({section for section, _ in _SCHEMA})


def _line_of(lines, section, key=None):
    """1-based line of a section header or of a key within it (0 if absent)."""
    current = None
    for i, line in enumerate(lines, start=1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1].strip().lower()
            if key is None and current == section:
                return i
        elif key is not None and current == section and stripped:
            bare = stripped.split("=", 1)[0].split(":", 1)[0].strip().lower()
            if bare == key:
                return i
    return 0


def _located(path, line, message):
    return f"{path}:{line}: {message}" if line else f"{path}: {message}"


def _read_file(path):
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";")
    )
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    lines = text.splitlines()
    values = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(
                _located(
                    path,
                    _line_of(lines, section),
                    f"unknown section [{section}]; expected one of {_SECTIONS}",
                )
            )
        for key, raw in parser.items(section):
            entry = _SCHEMA.get((section, key))
            if entry is None:
                raise ConfigError(
                    _located(
                        path,
                        _line_of(lines, section, key),
                        f"unknown key {key!r} in [{section}]",
                    )
                )
            attr, parse = entry
            try:
                values[attr] = parse(raw)
            except ValueError as exc:
                raise ConfigError(
                    _located(
                        path,
                        _line_of(lines, section, key),
                        f"bad value for [{section}] {key}: {raw!r} ({exc})",
                    )
                ) from None
    return values


def load_config(path=None, **overrides):
    """Build an ExperimentConfig from an optional file plus overrides.

    Overrides with value None are ignored, so command-line flags can be
    passed straight through.  Cross-key validation errors are prefixed with
    the file name when a file was involved.
    """
    values = _read_file(path) if path is not None else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(f"bad configuration override: {exc}") from None
    except ConfigError as exc:
        if path is not None:
            raise ConfigError(f"{path}: {exc}") from None
        raise
