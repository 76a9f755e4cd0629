"""Random MIMO interference-network generation and the reciprocal view.

A network has K transmitter-receiver pairs. The link from transmitter j
to receiver k is an N x M matrix; the designer works from an estimate
H that differs from the true channel G by an error E with G = H + E.
All randomness flows through numpy Generators so every draw is
reproducible from a seed, and distinct concerns (channels, errors,
filters, Monte Carlo) get independent named streams.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np


@dataclass(frozen=True)
class NetworkConfig:
    """Dimensions and powers of one K-user interference network.

    Attributes
    ----------
    K : number of transmitter-receiver pairs.
    M, N : transmit and receive antennas per node.
    D : per-user stream counts, a length-K tuple.
    P : per-stream transmit power (linear scale).
    N0 : noise power (linear scale).
    sigma2 : CSI error variance per complex channel entry.
    """

    K: int
    M: int
    N: int
    D: tuple
    P: float
    N0: float
    sigma2: float

    def __post_init__(self):
        object.__setattr__(self, "D", tuple(int(d) for d in self.D))
        if self.K < 1:
            raise ValueError(f"need at least one user, got K={self.K}")
        if self.M < 1 or self.N < 1:
            raise ValueError(f"antenna counts must be positive, got M={self.M}, N={self.N}")
        if len(self.D) != self.K:
            raise ValueError(f"need one stream count per user, got {len(self.D)} for K={self.K}")
        cap = min(self.M, self.N)
        for k, d in enumerate(self.D):
            if not 1 <= d <= cap:
                raise ValueError(f"stream count D[{k}]={d} outside 1..min(M,N)={cap}")
        if not self.P > 0:
            raise ValueError(f"transmit power must be positive, got P={self.P}")
        if not self.N0 > 0:
            raise ValueError(f"noise power must be positive, got N0={self.N0}")
        if self.sigma2 < 0:
            raise ValueError(f"error variance must be non-negative, got sigma2={self.sigma2}")

    @classmethod
    def from_snr_db(cls, K, M, N, D, snr_db, sigma2, N0=1.0):
        """Build a config with P set from the per-stream SNR in dB."""
        p = N0 * 10.0 ** (snr_db / 10.0)
        return cls(K=K, M=M, N=N, D=tuple(D), P=p, N0=N0, sigma2=sigma2)

    @property
    def snr_db(self) -> float:
        return 10.0 * np.log10(self.P / self.N0)

    @property
    def total_streams(self) -> int:
        return sum(self.D)


@dataclass(frozen=True)
class ChannelSet:
    """True channels G, errors E, and estimates H with G = H + E.

    Each field is a complex array of shape (K, K, N, M); index [k][j]
    is the link from transmitter j into receiver k. Arrays are frozen
    (read-only) after construction and safe to share across threads.
    """

    G: np.ndarray
    E: np.ndarray
    H: np.ndarray

    def __post_init__(self):
        for name in ("G", "E", "H"):
            arr = getattr(self, name)
            if arr.ndim != 4 or arr.shape[0] != arr.shape[1]:
                raise ValueError(f"{name} must have shape (K, K, N, M), got {arr.shape}")
            if arr.shape != self.G.shape:
                raise ValueError("G, E, H shapes disagree")
            arr.setflags(write=False)


class ReciprocalView(NamedTuple):
    """Reverse-direction channel map; H_rev[j][k] is the plain transpose
    (no conjugation) of H[k][j]."""

    H_rev: np.ndarray


def named_stream(seed: int, label: str, index: Optional[int] = None) -> np.random.Generator:
    """Independent counter-based generator for one named concern.

    The stream is keyed on (seed, label, index), so e.g. the "channels"
    and "errors" streams of the same seed never overlap, and per-trial
    substreams are reproducible in isolation.
    """
    entropy = (int(seed), int.from_bytes(label.encode("utf-8"), "little"))
    if index is not None:
        entropy = entropy + (int(index),)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def _complex_gaussian(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    # Total complex variance `variance`: half per real/imag component.
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_channel_set(cfg: NetworkConfig, rng: np.random.Generator) -> ChannelSet:
    """Draw one fading block: truth G, error E, estimate H = G - E.

    Entries of G are circularly-symmetric complex Gaussian with unit
    total variance; error entries have total variance cfg.sigma2 and
    come from a generator stream spawned independently of G's. The
    truth is drawn first and H defined by subtraction, then E is stored
    as G - H so the identity (G - H) - E == 0 holds bitwise.
    """
    g_rng, e_rng = rng.spawn(2)
    shape = (cfg.K, cfg.K, cfg.N, cfg.M)
    g = _complex_gaussian(g_rng, shape, 1.0)
    e_draw = _complex_gaussian(e_rng, shape, cfg.sigma2)
    h = g - e_draw
    e = g - h  # re-derived so the floating-point identity is exact
    return ChannelSet(G=g, E=e, H=h)


def reciprocal(h: np.ndarray) -> ReciprocalView:
    """Reverse-direction view of a channel map: swap link roles and
    transpose each matrix, without conjugation.

    Returns a zero-copy read-only view; reciprocal(reciprocal(h)) gives
    back the original map.
    """
    view = np.transpose(h, (1, 0, 3, 2))
    view = view.view()
    view.setflags(write=False)
    return ReciprocalView(H_rev=view)


def _encode(arr: np.ndarray):
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def _decode(data) -> np.ndarray:
    a = np.asarray(data, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def channel_set_to_json(channels: ChannelSet, cfg: NetworkConfig, seed: Optional[int] = None) -> str:
    """Serialize a channel set as JSON with [re, im] entry pairs.

    The encoding round-trips bit-exactly (floats are written with full
    shortest-repr precision).
    """
    doc = {
        "G": _encode(channels.G),
        "E": _encode(channels.E),
        "H": _encode(channels.H),
        "config": {
            "K": cfg.K,
            "M": cfg.M,
            "N": cfg.N,
            "D": list(cfg.D),
            "P": cfg.P,
            "N0": cfg.N0,
            "sigma2": cfg.sigma2,
        },
        "seed": seed,
    }
    return json.dumps(doc)


def channel_set_from_json(text: str):
    """Inverse of :func:`channel_set_to_json`.

    Returns (ChannelSet, NetworkConfig, seed).
    """
    doc = json.loads(text)
    c = doc["config"]
    cfg = NetworkConfig(
        K=c["K"], M=c["M"], N=c["N"], D=tuple(c["D"]), P=c["P"], N0=c["N0"], sigma2=c["sigma2"]
    )
    channels = ChannelSet(G=_decode(doc["G"]), E=_decode(doc["E"]), H=_decode(doc["H"]))
    return channels, cfg, doc["seed"]
