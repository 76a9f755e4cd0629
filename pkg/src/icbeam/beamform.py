"""Alternating per-stream transceiver design on an interference network.

For each stream d of receiver k the design objective is a generalized
Rayleigh quotient (u† Q u)/(u† F u): Q collects the mean useful signal
power under the CSI error statistics, F the mean interference plus
noise. Receive filters are updated to the leading generalized
eigenvector of each stream's pencil; transmit filters are updated the
same way in the reverse-direction network, alternating until the
summed quotient metric settles.

The robust objective keeps the estimation-error variance sigma2 inside
Q and F ("proposed"); zeroing it recovers the classical per-stream
max-SINR alternation, and a leakage-minimizing baseline picks receive
filters in the weakest directions of the interference covariance
instead.

Reverse-direction bookkeeping: the reverse channel map is the plain
transpose of the forward one, and filters cross over conjugated (the
reverse precoder for node k is conj(U^k) and the new forward precoder
is the conjugate of the reverse update). Since v^T H^T u* = (u† H v)*,
this carry preserves every forward coupling magnitude exactly;
carrying the filters unconjugated over plain-transposed channels
scrambles the couplings and destroys the alternation.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DimensionMismatch, NonFinite
from .network import NetworkConfig, reciprocal
from .numerics import (
    hermitize,
    leading_generalized_eigvec_batch,
    orthonormal_columns,
    smallest_eigvecs,
)

logger = logging.getLogger(__name__)

ALGORITHMS = ("proposed", "max_sinr", "min_leakage")

# Tolerance used only for the dip diagnostics logged by run().
_MONOTONE_RTOL = 1e-9


@dataclass(frozen=True)
class FilterBank:
    """Per-transmitter precoders V and per-receiver suppressors U.

    V[j] is M x D^j, U[k] is N x D^k; every column has unit norm.
    """

    V: tuple
    U: tuple


class QFPair(NamedTuple):
    """Hermitian numerator/denominator matrices of one stream's objective."""

    Q: np.ndarray
    F: np.ndarray


@dataclass(frozen=True)
class RunTrace:
    """Metric trajectory of one run: one value per half-iteration
    (initial value included), the alternation count, and whether the
    stopping rule fired before the alternation cap."""

    metric_values: tuple
    iterations_run: int
    converged: bool


@dataclass(frozen=True)
class AlgoOptions:
    """Algorithm selection and stopping rule.

    The run stops once the metric change over one full alternation
    satisfies |m - m_prev| <= rel_tol * (1 + |m_prev|), or after
    max_alternations. For min_leakage the metric is recorded with
    sigma2_eff = 0 and serves as a diagnostic only.
    """

    max_alternations: int = 100
    rel_tol: float = 1e-6
    algorithm: str = "proposed"

    def __post_init__(self):
        if self.max_alternations < 1:
            raise ValueError(f"max_alternations must be >= 1, got {self.max_alternations}")
        if self.rel_tol < 0:
            raise ValueError(f"rel_tol must be >= 0, got {self.rel_tol}")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}, expected one of {ALGORITHMS}")


def _stream_counts(v_list) -> list:
    return [v.shape[1] for v in v_list]


def _offsets(counts) -> list:
    offs = [0]
    for c in counts:
        offs.append(offs[-1] + c)
    return offs


def _stacked_pencils(h: np.ndarray, v_list: Sequence[np.ndarray], p: float, n0: float, sigma2_eff: float):
    """Q and F stacks for every stream, ordered receiver-major.

    Works in either direction: h is the (K, K, rows, cols) channel map
    of the current direction and v_list the current-direction
    precoders with cols-sized columns.
    """
    k_users = len(v_list)
    if h.ndim != 4 or h.shape[0] != k_users or h.shape[1] != k_users:
        raise DimensionMismatch(f"channel map shape {h.shape} does not match {k_users} users")
    rows, cols = h.shape[2], h.shape[3]
    for j, vj in enumerate(v_list):
        if vj.ndim != 2 or vj.shape[0] != cols:
            raise DimensionMismatch(f"precoder {j} shape {vj.shape} does not match channel columns {cols}")
    counts = _stream_counts(v_list)
    offs = _offsets(counts)
    total = offs[-1]
    eye = np.eye(rows)
    c_q = p * sigma2_eff
    c_f = p * sigma2_eff * (total - 1) + n0
    qs = np.empty((total, rows, rows), dtype=complex)
    fs = np.empty((total, rows, rows), dtype=complex)
    for k in range(k_users):
        # All streams arriving at receiver k, own signal included.
        w = np.concatenate([h[k, j] @ v_list[j] for j in range(k_users)], axis=1)
        s = w @ w.conj().T
        for d in range(counts[k]):
            b = offs[k] + d
            q_col = w[:, offs[k] + d]
            own = np.outer(q_col, q_col.conj())
            qs[b] = p * own + c_q * eye
            fs[b] = p * s - p * own + c_f * eye
    return hermitize(qs), hermitize(fs)


def _stack_columns(u_list) -> np.ndarray:
    return np.concatenate([u.T for u in u_list], axis=0)


def _unstack_columns(rows: np.ndarray, counts) -> list:
    offs = _offsets(counts)
    return [rows[offs[k] : offs[k + 1]].T.copy() for k in range(len(counts))]


def _quotients(qs: np.ndarray, fs: np.ndarray, u_rows: np.ndarray) -> np.ndarray:
    num = np.einsum("bi,bij,bj->b", u_rows.conj(), qs, u_rows).real
    den = np.einsum("bi,bij,bj->b", u_rows.conj(), fs, u_rows).real
    return num / den


def build_QF(k: int, d: int, h: np.ndarray, v_list: Sequence[np.ndarray], cfg: NetworkConfig, sigma2_eff: float) -> QFPair:
    """Numerator/denominator pencil of stream d at receiver k.

    Q = P H^{kk} v v† H^{kk}† + P sigma2_eff I; F sums the received
    covariance of all streams, subtracts the own-signal term, and adds
    (P sigma2_eff (sum_j D^j - 1) + N0) I. Both are hermitized.
    """
    counts = _stream_counts(v_list)
    if not 0 <= k < len(v_list):
        raise IndexError(f"receiver index {k} outside 0..{len(v_list) - 1}")
    if not 0 <= d < counts[k]:
        raise IndexError(f"stream index {d} outside 0..{counts[k] - 1} for receiver {k}")
    qs, fs = _stacked_pencils(h, v_list, cfg.P, cfg.N0, sigma2_eff)
    b = _offsets(counts)[k] + d
    return QFPair(Q=qs[b], F=fs[b])


def receiver_update(h: np.ndarray, v_list: Sequence[np.ndarray], cfg: NetworkConfig, sigma2_eff: float) -> list:
    """Per-stream optimal receive filters for the current direction.

    Each column of the returned U^k is the phase-normalized unit
    leading generalized eigenvector of that stream's (Q, F) pencil;
    streams are treated independently, with no orthogonality imposed
    across a receiver's columns.
    """
    qs, fs = _stacked_pencils(h, v_list, cfg.P, cfg.N0, sigma2_eff)
    vecs, _ = leading_generalized_eigvec_batch(qs, fs)
    return _unstack_columns(vecs, _stream_counts(v_list))


def metric(h: np.ndarray, v_list: Sequence[np.ndarray], u_list: Sequence[np.ndarray], cfg: NetworkConfig, sigma2_eff: float) -> float:
    """Summed per-stream objective: sum over (k, d) of the generalized
    Rayleigh quotient (u† Q u)/(u† F u).

    With the per-stream multiplier taken as this quotient, the
    Lagrangian u† Q u + lambda (1 - u† F u) collapses to lambda, so
    the sum is independent of any rescaling of the filter columns.
    """
    qs, fs = _stacked_pencils(h, v_list, cfg.P, cfg.N0, sigma2_eff)
    return float(np.sum(_quotients(qs, fs, _stack_columns(u_list))))


def _min_leakage_filters(h: np.ndarray, v_list: Sequence[np.ndarray], p: float, counts) -> list:
    """Receive filters spanning the weakest directions of the
    interference covariance sum_{j != k} P H^{kj} V^j V^j† H^{kj}†."""
    k_users = len(v_list)
    rows = h.shape[2]
    out = []
    for k in range(k_users):
        s = np.zeros((rows, rows), dtype=complex)
        for j in range(k_users):
            if j == k:
                continue
            w = h[k, j] @ v_list[j]
            s += w @ w.conj().T
        out.append(smallest_eigvecs(p * s, counts[k]))
    return out


def run(h: np.ndarray, cfg: NetworkConfig, opts: AlgoOptions, rng: np.random.Generator):
    """Alternating transceiver design on the estimated channel map h.

    Initializes both filter banks with random semi-unitary matrices
    (all V first, then all U, consuming rng in that order), then
    alternates: Step I updates every receive filter on the forward
    network; Step II carries the filters into the reverse network
    (conjugated, see the module docstring), updates there, and takes
    the conjugate back as the new precoders. The metric is recorded
    after every half-step; metric decreases beyond the 1e-9 tolerance
    are counted and logged at DEBUG level rather than hidden.

    Returns (FilterBank, RunTrace).
    """
    k_users = cfg.K
    if h.shape != (k_users, k_users, cfg.N, cfg.M):
        raise DimensionMismatch(f"channel map shape {h.shape} does not match config ({k_users}, {k_users}, {cfg.N}, {cfg.M})")
    sigma2_eff = cfg.sigma2 if opts.algorithm == "proposed" else 0.0
    counts = list(cfg.D)
    v_list = [orthonormal_columns(rng, cfg.M, d) for d in counts]
    u_list = [orthonormal_columns(rng, cfg.N, d) for d in counts]
    h_rev = reciprocal(h).H_rev

    qs, fs = _stacked_pencils(h, v_list, cfg.P, cfg.N0, sigma2_eff)
    trace = [float(np.sum(_quotients(qs, fs, _stack_columns(u_list))))]
    dips = 0
    worst_dip = 0.0
    converged = False
    alternations = 0

    def _record(value):
        nonlocal dips, worst_dip
        if not np.isfinite(value):
            raise NonFinite(f"metric became non-finite at half-step {len(trace)}")
        drop = trace[-1] - value
        allowed = _MONOTONE_RTOL * (1.0 + abs(trace[-1]))
        if drop > allowed:
            dips += 1
            worst_dip = max(worst_dip, drop)
        trace.append(float(value))

    for alternations in range(1, opts.max_alternations + 1):
        # Step I: receive filters on the forward network.
        if opts.algorithm == "min_leakage":
            u_list = _min_leakage_filters(h, v_list, cfg.P, counts)
        else:
            vecs, _ = leading_generalized_eigvec_batch(qs, fs)
            u_list = _unstack_columns(vecs, counts)
        _record(np.sum(_quotients(qs, fs, _stack_columns(u_list))))

        # Step II: the same update in the reverse direction, filters
        # crossing over conjugated.
        v_rev = [u.conj() for u in u_list]
        if opts.algorithm == "min_leakage":
            new_rev = _min_leakage_filters(h_rev, v_rev, cfg.P, counts)
        else:
            qs_r, fs_r = _stacked_pencils(h_rev, v_rev, cfg.P, cfg.N0, sigma2_eff)
            vecs_r, _ = leading_generalized_eigvec_batch(qs_r, fs_r)
            new_rev = _unstack_columns(vecs_r, counts)
        v_list = [v.conj() for v in new_rev]

        # Forward pencils for the new precoders; reused by the next
        # Step I so each half-step assembles them once.
        qs, fs = _stacked_pencils(h, v_list, cfg.P, cfg.N0, sigma2_eff)
        _record(np.sum(_quotients(qs, fs, _stack_columns(u_list))))

        prev = trace[-3]
        if abs(trace[-1] - prev) <= opts.rel_tol * (1.0 + abs(prev)):
            converged = True
            break

    if dips:
        logger.debug(
            "%s run: metric decreased at %d of %d half-steps (worst drop %.3e)",
            opts.algorithm,
            dips,
            len(trace) - 1,
            worst_dip,
        )
    bank = FilterBank(V=tuple(v_list), U=tuple(u_list))
    return bank, RunTrace(metric_values=tuple(trace), iterations_run=alternations, converged=converged)
