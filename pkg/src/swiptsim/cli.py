"""Command-line experiment runner: sweeps, optimization, self-validation.

Subcommands
    rate-sweep    one CSV row per (scheme, n_antennas, snr_db) with the
                  configured training fractions, the grid-search optimum on
                  common random numbers, their rate ratio ``zeta``, and the
                  rate ratio against the no-CSI baseline;
    outage-sweep  two CSV rows per sweep point (energy-shortage and
                  data-outage) pairing the closed-form value and its error
                  bound with a Monte Carlo estimate and Wilson 95% interval,
                  plus a ``match`` column for interval overlap;
    optimize      training fractions from the configured source with a
                  measured rate at those fractions;
    validate      runs the package's invariant groups (special-function
                  identities, energy-budget algebra, distributional
                  decompositions, closed-form vs Monte Carlo) and prints one
                  pass/fail line per group with its statistic and wall time.

Numeric CSV fields are written with 17 significant digits and no locale
formatting, so a given (config, seed) pair produces a byte-identical file
regardless of ``--threads``.

Exit codes: 0 success; 1 validate ran but some group failed; 2 configuration
error (bad file, bad flag value, or an infeasible parameter combination
detected while running); 3 a quadrature failed to converge.
"""

import argparse
import csv
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import outage
from .analytic import (
    GridSpec,
    SnrRegime,
    default_regime,
    ergodic_rate,
    ergodic_rate_ratio,
    fdd_training_optimum,
    grid_search,
    tdd_training_optimum,
)
from .config import ConfigError, load_config
from .montecarlo import (
    chunk_observables,
    draw_chunk,
    mc_data_outage,
    mc_distribution_checks,
    mc_energy_shortage,
)
from .quadrature import NonconvergenceError
from .schemes import (
    energy_slack_fdd,
    energy_slack_non_csi,
    energy_slack_tdd,
    rates_fdd_bulk,
    rates_non_csi_bulk,
    rates_tdd_bulk,
)
from .specfun import (
    marcum_q,
    marcum_q_complement,
    reg_gamma_lower_many,
    reg_gamma_upper,
    reg_gamma_upper_many,
)

__all__ = [
    "EXIT_OK",
    "EXIT_CHECKS_FAILED",
    "EXIT_CONFIG",
    "EXIT_NONCONVERGENCE",
    "RATE_SWEEP_COLUMNS",
    "OUTAGE_SWEEP_COLUMNS",
    "OPTIMIZE_COLUMNS",
    "GroupResult",
    "run_rate_sweep",
    "run_outage_sweep",
    "run_optimize",
    "run_validate",
    "write_csv",
    "main",
]

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3

RATE_SWEEP_COLUMNS = [
    "scheme",
    "n_antennas",
    "snr_db",
    "training",
    "eta",
    "tau",
    "rate",
    "rate_stderr",
    "grid_eta",
    "grid_tau",
    "grid_rate",
    "grid_rate_stderr",
    "zeta",
    "zeta_stderr",
    "ratio_vs_non_csi",
    "ratio_stderr",
    "n_samples",
]

OUTAGE_SWEEP_COLUMNS = [
    "scheme",
    "n_antennas",
    "snr_db",
    "metric",
    "training",
    "eta",
    "tau",
    "alpha",
    "target_rate",
    "analytic",
    "analytic_error",
    "method",
    "mc_estimate",
    "mc_ci_low",
    "mc_ci_high",
    "mc_n",
    "match",
]

OPTIMIZE_COLUMNS = [
    "scheme",
    "n_antennas",
    "snr_db",
    "training",
    "eta",
    "tau",
    "rate",
    "rate_stderr",
    "n_samples",
]


def _fmt(value):
    """One CSV cell: 17-significant-digit floats, plain ints, '' for None."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(cell) for cell in row])


def _run_jobs(jobs, threads):
    """Evaluate zero-argument jobs, preserving submission order."""
    if threads <= 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: job(), jobs))


def _resolve_training(cfg, scheme, params):
    """(eta, tau, label) for one sweep point, for non-grid sources."""
    if scheme == "non-csi":
        return None, None, ""
    if cfg.training_source == "explicit":
        return cfg.eta, (cfg.tau if scheme == "fdd" else None), "explicit"
    regime = {
        "analytic": default_regime(params),
        "analytic-high": SnrRegime.HIGH_SNR,
        "analytic-low": SnrRegime.LOW_SNR,
    }[cfg.training_source]
    if scheme == "tdd":
        opt = tdd_training_optimum(params, regime)
        return opt.eta, None, regime.value
    opt = fdd_training_optimum(params, regime)
    return opt.eta, opt.tau, regime.value


def _sweep_points(cfg):
    for scheme in cfg.schemes:
        for lth in cfg.n_antennas:
            for snr in cfg.snr_db:
                yield scheme, lth, snr


# ---------------------------------------------------------------------------
# rate sweep
# ---------------------------------------------------------------------------

def _rate_row(cfg, scheme, lth, snr):
    params = cfg.params_for(lth, snr)
    n, seed = cfg.n_samples, cfg.seed
    if scheme == "non-csi":
        est = ergodic_rate("non-csi", params, n_samples=n, seed=seed)
        return [
            scheme, lth, snr, "", None, None, est.mean, est.stderr,
            None, None, None, None, None, None, 1.0, 0.0, est.n_samples,
        ]
    if cfg.training_source == "grid-search":
        grid = grid_search(scheme, params, GridSpec(cfg.grid_step), n_samples=n, seed=seed)
        eta, tau = grid.eta, (grid.tau if scheme == "fdd" else None)
        label = "grid-search"
    else:
        eta, tau, label = _resolve_training(cfg, scheme, params)
        # feeding the candidate into the search keeps zeta <= 1 even when
        # the candidate falls between grid lines
        grid = grid_search(
            scheme, params, GridSpec(cfg.grid_step), n_samples=n, seed=seed,
            include=[(eta, tau if scheme == "fdd" else 0.0)],
        )
    grid_tau = grid.tau if scheme == "fdd" else None
    est = ergodic_rate(scheme, params, eta=eta, tau=tau, n_samples=n, seed=seed)
    zeta = ergodic_rate_ratio(
        scheme, params, eta=eta, tau=tau, n_samples=n, seed=seed,
        baseline=(scheme, grid.eta, grid_tau),
    )
    ratio = ergodic_rate_ratio(scheme, params, eta=eta, tau=tau, n_samples=n, seed=seed)
    return [
        scheme, lth, snr, label, eta, tau, est.mean, est.stderr,
        grid.eta, grid_tau, grid.rate.mean, grid.rate.stderr,
        zeta.ratio, zeta.stderr, ratio.ratio, ratio.stderr, est.n_samples,
    ]


def run_rate_sweep(cfg, threads=1):
    jobs = [
        (lambda s=s, lth=lth, snr=snr: _rate_row(cfg, s, lth, snr))
        for s, lth, snr in _sweep_points(cfg)
    ]
    return _run_jobs(jobs, threads)


# ---------------------------------------------------------------------------
# outage sweep
# ---------------------------------------------------------------------------

def _outage_rows(cfg, scheme, lth, snr):
    params = cfg.params_for(lth, snr)
    alpha, target = cfg.alpha, cfg.target_rate
    if cfg.training_source == "grid-search" and scheme != "non-csi":
        opt = grid_search(
            scheme, params, GridSpec(cfg.grid_step), n_samples=cfg.n_samples, seed=cfg.seed
        )
        eta, tau, label = opt.eta, (opt.tau if scheme == "fdd" else None), "grid-search"
    else:
        eta, tau, label = _resolve_training(cfg, scheme, params)
    if scheme == "non-csi":
        energy = outage.energy_shortage_non_csi(params, alpha)
        data = outage.data_outage_non_csi(params, alpha, target)
    elif scheme == "tdd":
        energy = outage.energy_shortage_tdd(params, alpha, eta)
        data = outage.data_outage_tdd(params, alpha, eta, target)
    else:
        energy = outage.energy_shortage_fdd(params, alpha, eta, tau)
        data = outage.data_outage_fdd(params, alpha, eta, tau, target)
    mc_energy = mc_energy_shortage(
        scheme, params, alpha, eta=eta, tau=tau, n_samples=cfg.n_samples, seed=cfg.seed
    )
    mc_data = mc_data_outage(
        scheme, params, alpha, target, eta=eta, tau=tau,
        n_samples=cfg.n_samples, seed=cfg.seed,
    )
    rows = []
    for metric, closed, est in (
        ("energy-shortage", energy, mc_energy),
        ("data-outage", data, mc_data),
    ):
        lo, hi = est.wilson_interval()
        match = bool(
            closed.value + closed.est_error >= lo and closed.value - closed.est_error <= hi
        )
        rows.append([
            scheme, lth, snr, metric, label, eta, tau, alpha, target,
            closed.value, closed.est_error, closed.method,
            est.prob, lo, hi, est.n_samples, match,
        ])
    return rows


def run_outage_sweep(cfg, threads=1):
    if cfg.alpha is None:
        raise ConfigError(
            "outage sweep needs a fixed harvest fraction; set [simulation] alpha"
        )
    jobs = [
        (lambda s=s, lth=lth, snr=snr: _outage_rows(cfg, s, lth, snr))
        for s, lth, snr in _sweep_points(cfg)
    ]
    return [row for rows in _run_jobs(jobs, threads) for row in rows]


# ---------------------------------------------------------------------------
# optimize
# ---------------------------------------------------------------------------

def _optimize_row(cfg, scheme, lth, snr):
    params = cfg.params_for(lth, snr)
    n, seed = cfg.n_samples, cfg.seed
    if scheme == "non-csi":
        est = ergodic_rate("non-csi", params, n_samples=n, seed=seed)
        return [scheme, lth, snr, "", None, None, est.mean, est.stderr, est.n_samples]
    if cfg.training_source == "grid-search":
        opt = grid_search(scheme, params, GridSpec(cfg.grid_step), n_samples=n, seed=seed)
        eta, tau, label, est = opt.eta, (opt.tau if scheme == "fdd" else None), "grid-search", opt.rate
    else:
        eta, tau, label = _resolve_training(cfg, scheme, params)
        est = ergodic_rate(scheme, params, eta=eta, tau=tau, n_samples=n, seed=seed)
    return [scheme, lth, snr, label, eta, tau, est.mean, est.stderr, est.n_samples]


def run_optimize(cfg, threads=1):
    jobs = [
        (lambda s=s, lth=lth, snr=snr: _optimize_row(cfg, s, lth, snr))
        for s, lth, snr in _sweep_points(cfg)
    ]
    return _run_jobs(jobs, threads)


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroupResult:
    name: str
    passed: bool
    statistic: float
    threshold: float
    seconds: float
    note: str = ""


def _timed(name, threshold, worker, larger_is_better=False):
    start = time.perf_counter()
    statistic, note = worker()
    seconds = time.perf_counter() - start
    passed = statistic > threshold if larger_is_better else statistic < threshold
    return GroupResult(
        name=name, passed=passed, statistic=statistic, threshold=threshold,
        seconds=seconds, note=note,
    )


def _gamma_group():
    xs = np.logspace(-8.0, 3.0, 160)
    worst = 0.0
    for order in (0.5, 1.0, 2.5, 7.0, 31.0):
        gap = np.abs(reg_gamma_lower_many(order, xs) + reg_gamma_upper_many(order, xs) - 1.0)
        worst = max(worst, float(np.max(gap)))
    return worst, ""


def _marcum_group(perturbation):
    worst = 0.0
    for m in (1, 2, 5, 8):
        for a in (0.3, 2.0, 7.5):
            for b in (0.2, 1.0, 4.0, 9.5):
                q = marcum_q(m, a, b) + perturbation
                worst = max(worst, abs(q + marcum_q_complement(m, a, b) - 1.0))
        for b in (0.2, 1.0, 4.0, 9.5):
            q = marcum_q(m, 0.0, b) + perturbation
            worst = max(worst, abs(q - reg_gamma_upper(float(m), 0.5 * b * b)))
    return worst, ""


def _budget_group(cfg, eta, tau, n_draws=10_000):
    params = cfg.params_for(cfg.n_antennas[0], cfg.snr_db[0])
    h, w1, w2 = draw_chunk(params, cfg.seed, 900_000, n_draws)
    gains, _, ut_gains = chunk_observables(params, "fdd", eta, tau, h, w1, w2)
    scale = params.harvest_efficiency * params.tx_power * gains
    worst = 0.0
    _, prelog = rates_non_csi_bulk(params, gains, alpha=None)
    slack = energy_slack_non_csi(params, gains, 1.0 - prelog)
    worst = max(worst, float(np.max(np.abs(slack) / ((1.0 - prelog) * scale))))
    _, prelog = rates_tdd_bulk(params, gains, gains, eta, alpha=None)
    slack = energy_slack_tdd(params, gains, eta, 1.0 - prelog - eta)
    worst = max(worst, float(np.max(np.abs(slack) / ((1.0 - prelog - eta) * scale))))
    _, prelog = rates_fdd_bulk(params, gains, gains, ut_gains, eta, tau, alpha=None)
    alpha = 1.0 - prelog - eta - tau
    slack = energy_slack_fdd(params, gains, ut_gains, eta, tau, alpha)
    worst = max(worst, float(np.max(np.abs(slack) / (alpha * scale))))
    return worst, ""


def _distribution_group(cfg, eta, tau, n_samples):
    results = mc_distribution_checks(
        cfg.params_for(cfg.n_antennas[0], cfg.snr_db[0]), eta, tau,
        n_samples=n_samples, seed=cfg.seed,
    )
    failing = [r.name for r in results if not r.passed]
    ks_p = min(r.statistic for r in results if r.threshold == 0.01)
    note = f"failing: {', '.join(failing)}" if failing else ""
    # the group statistic is the worst KS p-value; correlation and identity
    # checks gate through the failing list instead
    if failing:
        return -1.0, note
    return ks_p, note


def _closed_vs_mc_group(cfg, n_samples):
    snr = min(cfg.snr_db, key=lambda s: abs(s - 20.0))
    params = cfg.params_for(cfg.n_antennas[0], snr)
    alpha = cfg.alpha if cfg.alpha is not None else 0.02
    target = cfg.target_rate
    regime = default_regime(params)
    eta_t = tdd_training_optimum(params, regime).eta
    fdd_opt = fdd_training_optimum(params, regime)
    eta_f, tau_f = fdd_opt.eta, fdd_opt.tau
    pairs = [
        ("non-csi", outage.energy_shortage_non_csi(params, alpha),
         mc_energy_shortage("non-csi", params, alpha, n_samples=n_samples, seed=cfg.seed)),
        ("tdd", outage.energy_shortage_tdd(params, alpha, eta_t),
         mc_energy_shortage("tdd", params, alpha, eta=eta_t, n_samples=n_samples, seed=cfg.seed)),
        ("fdd", outage.energy_shortage_fdd(params, alpha, eta_f, tau_f),
         mc_energy_shortage("fdd", params, alpha, eta=eta_f, tau=tau_f, n_samples=n_samples, seed=cfg.seed)),
        ("non-csi", outage.data_outage_non_csi(params, alpha, target),
         mc_data_outage("non-csi", params, alpha, target, n_samples=n_samples, seed=cfg.seed)),
        ("tdd", outage.data_outage_tdd(params, alpha, eta_t, target),
         mc_data_outage("tdd", params, alpha, target, eta=eta_t, n_samples=n_samples, seed=cfg.seed)),
        ("fdd", outage.data_outage_fdd(params, alpha, eta_f, tau_f, target),
         mc_data_outage("fdd", params, alpha, target, eta=eta_f, tau=tau_f, n_samples=n_samples, seed=cfg.seed)),
    ]
    worst = 0.0
    for _, closed, est in pairs:
        lo, hi = est.wilson_interval()
        half = 0.5 * (hi - lo) + closed.est_error
        center = 0.5 * (hi + lo)
        worst = max(worst, abs(closed.value - center) / half)
    return worst, f"snr_db={snr:g}"


def run_validate(cfg, threads=1, marcum_perturbation=0.0):
    """Run every invariant group; returns a list of GroupResult.

    ``marcum_perturbation`` shifts the Marcum values inside the identity
    group and exists so tests can confirm the group actually detects a
    broken kernel (negative control); leave it at 0.0 otherwise.
    """
    n_dist = min(cfg.n_samples, 100_000)
    n_mc = min(cfg.n_samples, 200_000)
    eta, tau = 0.02, 0.03
    jobs = [
        lambda: _timed("specfun/gamma-complementarity", 1e-12, _gamma_group),
        lambda: _timed(
            "specfun/marcum-identity", 1e-12, lambda: _marcum_group(marcum_perturbation)
        ),
        lambda: _timed("schemes/energy-budget", 1e-12, lambda: _budget_group(cfg, eta, tau)),
        lambda: _timed(
            "montecarlo/distribution-decompositions", 0.01,
            lambda: _distribution_group(cfg, eta, tau, n_dist), larger_is_better=True,
        ),
        lambda: _timed(
            "outage/closed-form-vs-mc", 1.0, lambda: _closed_vs_mc_group(cfg, n_mc)
        ),
    ]
    return _run_jobs(jobs, threads)


def _render_report(groups):
    lines = []
    for g in groups:
        status = "pass" if g.passed else "FAIL"
        line = (
            f"{status}  {g.name:40s} statistic={g.statistic:<12.6g} "
            f"threshold={g.threshold:g}  ({g.seconds:.2f}s)"
        )
        if g.note:
            line += f"  [{g.note}]"
        lines.append(line)
    n_pass = sum(g.passed for g in groups)
    total = sum(g.seconds for g in groups)
    lines.append(f"{n_pass}/{len(groups)} groups passed in {total:.2f}s")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="swiptsim",
        description="Wireless-powered MISO downlink experiments: sweeps, optima, validation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "rate-sweep": "ergodic-rate sweep with grid-search reference optimum",
        "outage-sweep": "closed-form vs Monte Carlo outage probabilities",
        "optimize": "training fractions from the configured source",
        "validate": "run the package invariant groups and report pass/fail",
    }
    for name, text in helps.items():
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", metavar="PATH", help="experiment file (INI)")
        cmd.add_argument("--seed", metavar="U64", type=int, help="override [simulation] seed")
        cmd.add_argument(
            "--samples", metavar="N", type=int, help="override [simulation] n_samples"
        )
        cmd.add_argument("--out", metavar="PATH", help="output path (CSV, or report text)")
        cmd.add_argument(
            "--threads",
            metavar="N",
            type=int,
            default=1,
            help="worker threads; affects speed only, never results",
        )
    return parser


_RUNNERS = {
    "rate-sweep": (run_rate_sweep, RATE_SWEEP_COLUMNS),
    "outage-sweep": (run_outage_sweep, OUTAGE_SWEEP_COLUMNS),
    "optimize": (run_optimize, OPTIMIZE_COLUMNS),
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(
            args.config, seed=args.seed, n_samples=args.samples, output=args.out
        )
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        groups = run_validate(cfg, threads=args.threads)
        report = _render_report(groups)
        sys.stdout.write(report)
        if cfg.output:
            with open(cfg.output, "w", encoding="utf-8") as handle:
                handle.write(report)
        return EXIT_OK if all(g.passed for g in groups) else EXIT_CHECKS_FAILED

    runner, header = _RUNNERS[args.command]
    out_path = cfg.output or args.command.replace("-", "_") + ".csv"
    try:
        rows = runner(cfg, threads=args.threads)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonconvergenceError as exc:
        print(f"error: quadrature did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except ValueError as exc:
        # module precondition violations surface as ValueError; at the CLI
        # boundary these are configuration problems
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    write_csv(out_path, header, rows)
    print(f"wrote {out_path} ({len(rows)} rows)")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
