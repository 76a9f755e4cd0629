"""Experiment drivers: scenario sweeps, accuracy studies, convergence dumps.

An ExperimentSpec pins a scenario string like "(3x3,1)^4" (M transmit
antennas, N receive antennas, D streams, K users), the SNR and sigma2
grids, trial and seed bookkeeping, and algorithm choices. The three
drivers walk the grid deterministically: trial t derives its own seed
as seed + t, and every random concern (channels, filters, Monte Carlo
draws) pulls from an independent named stream of that trial seed, so
any subset of trials is reproducible in isolation and re-running a
spec yields byte-identical CSV output.

Noise power is fixed at 1, so an SNR grid point in dB maps directly to
the per-stream transmit power P = 10^(snr_db/10).
"""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from typing import Iterator, Optional, TextIO

from .analysis import (
    AccuracyRow,
    accuracy_alpha,
    energy_efficiency,
    mean_sinr_first_order,
    mean_sinr_numeric,
    sum_rate,
)
from .beamform import ALGORITHMS, AlgoOptions, run
from .errors import InvalidSpec
from .network import NetworkConfig, named_stream, sample_channel_set

EVAL_CHANNELS = ("true", "estimated")

SWEEP_HEADER = "scenario,algorithm,snr_db,sigma2,trial,seed,sum_rate_bits,energy_efficiency,metric_final,iterations,alpha_pct"
ACCURACY_HEADER = "snr_db,sigma2,numeric_mean,approx_mean,alpha_pct"
CONVERGE_HEADER = "trial,half_step,metric"

_SCENARIO_RE = re.compile(r"^\((\d+)x(\d+),(\d+)\)\^(\d+)$")


def parse_scenario(text: str):
    """Parse "(MxN,D)^K" into (K, M, N, D).

    Raises InvalidSpec if the string is malformed.
    """
    m = _SCENARIO_RE.match(text.strip())
    if not m:
        raise InvalidSpec(f"scenario {text!r} is not of the form (MxN,D)^K, e.g. (3x3,1)^4")
    m_tx, n_rx, d, k = (int(g) for g in m.groups())
    return k, m_tx, n_rx, d


def format_scenario(k: int, m: int, n: int, d: int) -> str:
    """Inverse of :func:`parse_scenario`."""
    return f"({m}x{n},{d})^{k}"


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment definition; construction validates everything."""

    scenario: str = "(3x3,1)^4"
    snr_db_list: tuple = (-5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0)
    sigma2_list: tuple = (0.1,)
    trials: int = 200
    seed: int = 1
    algorithms: tuple = ("proposed", "max_sinr")
    eval_channel: str = "true"
    alternations: int = 100
    rel_tol: float = 1e-6
    mc_draws: int = 10_000

    def __post_init__(self):
        object.__setattr__(self, "snr_db_list", tuple(float(s) for s in self.snr_db_list))
        object.__setattr__(self, "sigma2_list", tuple(float(s) for s in self.sigma2_list))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        k, m, n, d = parse_scenario(self.scenario)
        object.__setattr__(self, "scenario", format_scenario(k, m, n, d))
        if not self.snr_db_list:
            raise InvalidSpec("snr list is empty; give at least one SNR point in dB")
        if not self.sigma2_list:
            raise InvalidSpec("sigma2 list is empty; give at least one error variance")
        if any(s < 0 for s in self.sigma2_list):
            raise InvalidSpec("sigma2 values must be non-negative")
        if self.trials < 1:
            raise InvalidSpec(f"trials must be >= 1, got {self.trials}")
        if not self.algorithms:
            raise InvalidSpec("algorithms list is empty")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise InvalidSpec(f"unknown algorithm {a!r}, expected one of {ALGORITHMS}")
        if self.eval_channel not in EVAL_CHANNELS:
            raise InvalidSpec(f"eval_channel must be one of {EVAL_CHANNELS}, got {self.eval_channel!r}")
        if self.alternations < 1:
            raise InvalidSpec(f"alternations must be >= 1, got {self.alternations}")
        if self.rel_tol < 0:
            raise InvalidSpec(f"rel_tol must be >= 0, got {self.rel_tol}")
        if self.mc_draws < 1:
            raise InvalidSpec(f"mc_draws must be >= 1, got {self.mc_draws}")
        try:
            self.config(self.snr_db_list[0], self.sigma2_list[0])
        except ValueError as exc:
            raise InvalidSpec(f"scenario {self.scenario} is not a valid network: {exc}") from exc

    def config(self, snr_db: float, sigma2: float) -> NetworkConfig:
        """Network config at one grid point (noise power fixed at 1)."""
        k, m, n, d = parse_scenario(self.scenario)
        return NetworkConfig.from_snr_db(K=k, M=m, N=n, D=(d,) * k, snr_db=snr_db, sigma2=sigma2, N0=1.0)

    def options(self, algorithm: str) -> AlgoOptions:
        return AlgoOptions(max_alternations=self.alternations, rel_tol=self.rel_tol, algorithm=algorithm)


@dataclass(frozen=True)
class ResultRow:
    """One sweep record: scenario point, per-trial seed, and metrics."""

    scenario: str
    algorithm: str
    snr_db: float
    sigma2: float
    trial: int
    seed: int
    sum_rate_bits: float
    energy_efficiency: float
    metric_final: float
    iterations: int
    alpha_pct: Optional[float] = None


def cmd_sweep(spec: ExperimentSpec) -> Iterator[ResultRow]:
    """Run the sweep grid and yield one ResultRow per
    (trial, snr, sigma2, algorithm), in that loop order.

    Each trial draws its fading block from the trial seed's "channels"
    stream (common random numbers across grid points and algorithms,
    which sharpens curve comparisons), designs filters on the estimate
    H, and evaluates the sum rate on the configured channel: the true
    channel G by default, or H for estimated-channel replication mode.
    """
    for trial in range(spec.trials):
        trial_seed = spec.seed + trial
        for snr_db in spec.snr_db_list:
            for sigma2 in spec.sigma2_list:
                cfg = spec.config(snr_db, sigma2)
                channels = sample_channel_set(cfg, named_stream(trial_seed, "channels"))
                eval_map = channels.G if spec.eval_channel == "true" else channels.H
                for algorithm in spec.algorithms:
                    bank, trace = run(channels.H, cfg, spec.options(algorithm), named_stream(trial_seed, "filters"))
                    rate = sum_rate(eval_map, bank.V, bank.U, cfg)
                    yield ResultRow(
                        scenario=spec.scenario,
                        algorithm=algorithm,
                        snr_db=snr_db,
                        sigma2=sigma2,
                        trial=trial,
                        seed=trial_seed,
                        sum_rate_bits=rate,
                        energy_efficiency=energy_efficiency(rate, cfg),
                        metric_final=trace.metric_values[-1],
                        iterations=trace.iterations_run,
                    )


def cmd_accuracy(spec: ExperimentSpec) -> Iterator[AccuracyRow]:
    """Accuracy study: one AccuracyRow per (snr, sigma2) grid point.

    For every trial the robust filters are converged on the estimate,
    then each stream's Monte Carlo mean SINR (mc_draws error draws) and
    first-order approximation are computed; both are averaged over
    streams and trials before the percentage gap is taken.
    """
    if spec.mc_draws < 10_000:
        raise InvalidSpec(f"accuracy runs need mc_draws >= 10000, got {spec.mc_draws}")
    if any(a != "proposed" for a in spec.algorithms):
        raise InvalidSpec("accuracy studies the proposed algorithm; drop the algo override")
    for snr_db in spec.snr_db_list:
        for sigma2 in spec.sigma2_list:
            cfg = spec.config(snr_db, sigma2)
            numeric_acc = 0.0
            approx_acc = 0.0
            count = 0
            for trial in range(spec.trials):
                trial_seed = spec.seed + trial
                channels = sample_channel_set(cfg, named_stream(trial_seed, "channels"))
                bank, _ = run(channels.H, cfg, spec.options("proposed"), named_stream(trial_seed, "filters"))
                mc_rng = named_stream(trial_seed, "mc")
                for k in range(cfg.K):
                    for d in range(cfg.D[k]):
                        numeric_acc += mean_sinr_numeric(
                            channels.H, bank.V, bank.U, cfg, k, d, spec.mc_draws, mc_rng
                        )
                        approx_acc += mean_sinr_first_order(channels.H, bank.V, bank.U, cfg, k, d)
                        count += 1
            numeric = numeric_acc / count
            approx = approx_acc / count
            yield AccuracyRow(
                snr_db=snr_db,
                sigma2=sigma2,
                numeric_mean=numeric,
                approx_mean=approx,
                alpha_pct=accuracy_alpha(numeric, approx),
            )


def cmd_converge(spec: ExperimentSpec) -> Iterator[tuple]:
    """Metric-trajectory dump of the robust algorithm.

    Yields (trial, half_step, metric) rows; needs exactly one SNR and
    one sigma2 since the row schema carries neither.
    """
    if len(spec.snr_db_list) != 1 or len(spec.sigma2_list) != 1:
        raise InvalidSpec(
            "converge needs exactly one snr and one sigma2 "
            f"(got {len(spec.snr_db_list)} and {len(spec.sigma2_list)})"
        )
    if any(a != "proposed" for a in spec.algorithms):
        raise InvalidSpec("converge traces the proposed algorithm; drop the algo override")
    cfg = spec.config(spec.snr_db_list[0], spec.sigma2_list[0])
    for trial in range(spec.trials):
        trial_seed = spec.seed + trial
        channels = sample_channel_set(cfg, named_stream(trial_seed, "channels"))
        _, trace = run(channels.H, cfg, spec.options("proposed"), named_stream(trial_seed, "filters"))
        for half_step, value in enumerate(trace.metric_values):
            yield trial, half_step, value


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".9g")


def write_sweep_csv(rows, out: TextIO) -> None:
    """Emit ResultRows as CSV with the pinned sweep header.

    The scenario field contains a comma, so rows go through the csv
    writer and that one field arrives quoted.
    """
    out.write(SWEEP_HEADER + "\n")
    writer = csv.writer(out, lineterminator="\n")
    for r in rows:
        writer.writerow(
            _fmt(v)
            for v in (
                r.scenario,
                r.algorithm,
                r.snr_db,
                r.sigma2,
                r.trial,
                r.seed,
                r.sum_rate_bits,
                r.energy_efficiency,
                r.metric_final,
                r.iterations,
                r.alpha_pct,
            )
        )


def write_accuracy_csv(rows, out: TextIO) -> None:
    """Emit AccuracyRows as CSV."""
    out.write(ACCURACY_HEADER + "\n")
    for r in rows:
        out.write(",".join(_fmt(v) for v in r) + "\n")


def write_converge_csv(rows, out: TextIO) -> None:
    """Emit (trial, half_step, metric) rows as CSV."""
    out.write(CONVERGE_HEADER + "\n")
    for trial, half_step, value in rows:
        out.write(f"{trial},{half_step},{_fmt(value)}\n")
