"""Evaluation mathematics for a designed filter bank.

Per-stream SINR and rates on a given channel map (true or estimated),
energy efficiency, the first-order approximation of the mean SINR under
the CSI error statistics, its Monte Carlo reference value, and the
percentage accuracy statistic comparing the two.
"""
from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from .beamform import build_QF
from .network import NetworkConfig

# Draws per vectorized Monte Carlo block; a constant so a fixed seed
# always produces the same estimate regardless of the total draw count.
_MC_CHUNK = 32768


class StreamStat(NamedTuple):
    """SINR and rate of stream d at receiver k."""

    k: int
    d: int
    sinr: float
    rate_bits: float


class AccuracyRow(NamedTuple):
    """Mean-SINR accuracy at one operating point: the Monte Carlo mean,
    the first-order approximation, and their percentage gap."""

    snr_db: float
    sigma2: float
    numeric_mean: float
    approx_mean: float
    alpha_pct: float


def _coupling_rows(channel: np.ndarray, v_list, u_col: np.ndarray, k: int) -> np.ndarray:
    """u† C^{kj} v_m for every transmitter j and stream m, concatenated."""
    return np.concatenate([u_col.conj() @ (channel[k, j] @ v_list[j]) for j in range(len(v_list))])


def _stream_offsets(v_list):
    offs = [0]
    for v in v_list:
        offs.append(offs[-1] + v.shape[1])
    return offs


def sinr_stream(channel: np.ndarray, v_list: Sequence[np.ndarray], u_list: Sequence[np.ndarray], cfg: NetworkConfig, k: int, d: int) -> float:
    """SINR of stream d at receiver k on the supplied channel map.

    P |u† C^{kk} v_d|² over the total received power of all other
    streams plus noise; the denominator is at least N0 ||u||² so the
    value is finite and non-negative. Raises IndexError for indices
    outside the network.
    """
    if not 0 <= k < len(v_list):
        raise IndexError(f"receiver index {k} outside 0..{len(v_list) - 1}")
    if not 0 <= d < u_list[k].shape[1]:
        raise IndexError(f"stream index {d} outside 0..{u_list[k].shape[1] - 1} for receiver {k}")
    u = u_list[k][:, d]
    rows = _coupling_rows(channel, v_list, u, k)
    own = abs(rows[_stream_offsets(v_list)[k] + d]) ** 2
    total = float(np.sum(np.abs(rows) ** 2))
    u_norm2 = float(np.vdot(u, u).real)
    num = cfg.P * own
    den = cfg.P * total - num + cfg.N0 * u_norm2
    return num / den


def stream_stats(channel: np.ndarray, v_list: Sequence[np.ndarray], u_list: Sequence[np.ndarray], cfg: NetworkConfig) -> list:
    """Per-stream SINR and rate for every stream in the network."""
    out = []
    for k in range(len(v_list)):
        for d in range(u_list[k].shape[1]):
            s = sinr_stream(channel, v_list, u_list, cfg, k, d)
            out.append(StreamStat(k=k, d=d, sinr=s, rate_bits=float(np.log2(1.0 + s))))
    return out


def sum_rate(channel: np.ndarray, v_list: Sequence[np.ndarray], u_list: Sequence[np.ndarray], cfg: NetworkConfig) -> float:
    """Overall throughput sum over streams of log2(1 + SINR), in b/s/Hz."""
    return float(sum(s.rate_bits for s in stream_stats(channel, v_list, u_list, cfg)))


def energy_efficiency(rate: float, cfg: NetworkConfig) -> float:
    """Sum rate per unit of total radiated power P times stream count."""
    return rate / (cfg.P * cfg.total_streams)


def mean_sinr_first_order(h: np.ndarray, v_list: Sequence[np.ndarray], u_list: Sequence[np.ndarray], cfg: NetworkConfig, k: int, d: int) -> float:
    """First-order estimate of the mean SINR under the error statistics.

    The ratio of the mean numerator to the mean denominator,
    (u† Q u)/(u† F u) with the pencil built at sigma2_eff = cfg.sigma2.
    Exactly the plain SINR on h when sigma2 = 0, and invariant to any
    rescaling of u.
    """
    if not 0 <= k < len(v_list):
        raise IndexError(f"receiver index {k} outside 0..{len(v_list) - 1}")
    if not 0 <= d < u_list[k].shape[1]:
        raise IndexError(f"stream index {d} outside 0..{u_list[k].shape[1] - 1} for receiver {k}")
    pair = build_QF(k, d, h, v_list, cfg, sigma2_eff=cfg.sigma2)
    u = u_list[k][:, d]
    return float((u.conj() @ pair.Q @ u).real / (u.conj() @ pair.F @ u).real)


def mean_sinr_numeric(h: np.ndarray, v_list: Sequence[np.ndarray], u_list: Sequence[np.ndarray], cfg: NetworkConfig, k: int, d: int, draws: int, rng: np.random.Generator) -> float:
    """Monte Carlo mean SINR of stream (k, d) under the error model.

    Averages the exact SINR over `draws` fresh samplings of the error
    matrices (total variance cfg.sigma2 per complex entry) added to the
    fixed estimate h. With sigma2 = 0 the error distribution is
    degenerate and the plain SINR on h is returned unchanged.
    """
    if draws < 1:
        raise ValueError(f"draws must be >= 1, got {draws}")
    if cfg.sigma2 == 0.0:
        return sinr_stream(h, v_list, u_list, cfg, k, d)
    u = u_list[k][:, d]
    u_norm2 = float(np.vdot(u, u).real)
    base = _coupling_rows(h, v_list, u, k)
    own_idx = _stream_offsets(v_list)[k] + d
    k_users = len(v_list)
    n_rx, m_tx = h.shape[2], h.shape[3]
    scale = np.sqrt(cfg.sigma2 / 2.0)
    total = 0.0
    left = draws
    while left > 0:
        c = min(left, _MC_CHUNK)
        err = scale * (
            rng.standard_normal((c, k_users, n_rx, m_tx))
            + 1j * rng.standard_normal((c, k_users, n_rx, m_tx))
        )
        # u† E^{kj} projected onto each transmitter's precoder columns.
        u_err = np.einsum("n,cjnm->cjm", u.conj(), err)
        rows = np.concatenate(
            [u_err[:, j] @ v_list[j] for j in range(k_users)], axis=1
        )
        rows += base[None, :]
        power = np.abs(rows) ** 2
        num = cfg.P * power[:, own_idx]
        den = cfg.P * power.sum(axis=1) - num + cfg.N0 * u_norm2
        total += float(np.sum(num / den))
        left -= c
    return total / draws


def accuracy_alpha(numeric: float, approx: float) -> float:
    """Percentage gap 100 (numeric - approx) / numeric between the Monte
    Carlo mean and its first-order approximation."""
    if numeric == 0.0:
        raise ZeroDivisionError("accuracy is undefined when the numeric mean is zero")
    return 100.0 * (numeric - approx) / numeric
