"""Dense complex-matrix kernels for the transceiver algorithms.

Everything here works on square Hermitian problems: Cholesky
factorization, leading generalized eigenvectors of a pencil (Q, F) with
F positive definite, minimum-eigenvalue directions, and seeded random
semi-unitary matrices for filter initialization.

Conventions shared by all eigenvector-returning functions:

* returned vectors have unit Euclidean norm;
* the entry of largest modulus is rotated to be real and non-negative;
* among (numerically) equal eigenvalues the eigenvector whose first
  nonzero entry has the lowest index is preferred.

These make outputs deterministic and therefore testable.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, NotPositiveDefinite

# Relative tolerance below which two eigenvalues count as tied.
_TIE_RTOL = 1e-12
# Entries smaller than this (relative to the largest) count as zero
# when locating a vector's first nonzero entry.
_ZERO_RTOL = 1e-12


class EigPair(NamedTuple):
    """A unit-norm eigenvector and its real eigenvalue."""

    vector: np.ndarray
    value: float


def hermitize(a: np.ndarray) -> np.ndarray:
    """Return (a + a†)/2, killing round-off asymmetry.

    Works on a single matrix or a stack of matrices (the last two axes
    are treated as the matrix).
    """
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


def _require_square_pair(q: np.ndarray, f: np.ndarray) -> int:
    if q.ndim != 2 or f.ndim != 2:
        raise DimensionMismatch(f"expected matrices, got shapes {q.shape} and {f.shape}")
    n = q.shape[0]
    if q.shape != (n, n) or f.shape != (n, n):
        raise DimensionMismatch(f"expected equal square shapes, got {q.shape} and {f.shape}")
    return n


def cholesky(f: np.ndarray) -> np.ndarray:
    """Lower-triangular L with f = L L† for Hermitian positive definite f.

    Raises
    ------
    NotPositiveDefinite
        If the factorization fails, which signals a non-PD input (for
        example a non-positive noise power upstream).
    """
    if f.ndim != 2 or f.shape[0] != f.shape[1]:
        raise DimensionMismatch(f"cholesky needs a square matrix, got shape {f.shape}")
    try:
        return np.linalg.cholesky(hermitize(f))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"matrix is not positive definite: {exc}") from exc


def phase_normalize(u: np.ndarray) -> np.ndarray:
    """Rotate u so its largest-modulus entry is real and non-negative."""
    i = int(np.argmax(np.abs(u)))
    v = u[i]
    m = abs(v)
    if m == 0.0:
        return u
    return u * np.conj(v / m)


def _first_nonzero_index(u: np.ndarray) -> int:
    mags = np.abs(u)
    thresh = _ZERO_RTOL * mags.max()
    idx = np.nonzero(mags > thresh)[0]
    return int(idx[0]) if idx.size else len(u)


def _pick_from_tie(candidates: np.ndarray) -> int:
    """Column index whose first nonzero entry has the lowest index."""
    best = 0
    best_lead = _first_nonzero_index(candidates[:, 0])
    for c in range(1, candidates.shape[1]):
        lead = _first_nonzero_index(candidates[:, c])
        if lead < best_lead:
            best, best_lead = c, lead
    return best


def leading_generalized_eigvec(q: np.ndarray, f: np.ndarray) -> EigPair:
    """Unit eigenvector of the pencil (q, f) with the largest eigenvalue.

    Solves max_u (u† q u)/(u† f u) for Hermitian PSD q and Hermitian PD
    f by Cholesky whitening: with f = L L†, the standard Hermitian
    eigenproblem on L⁻¹ q L⁻† is solved and the eigenvector mapped back
    through L⁻† and renormalized. f⁻¹ is never formed.

    Returns
    -------
    EigPair
        Vector with unit norm and the fixed phase convention; value is
        the maximal generalized eigenvalue.
    """
    n = _require_square_pair(q, f)
    ell = cholesky(f)
    # Whiten: c = L^{-1} q L^{-dagger}, Hermitian by construction.
    t = np.linalg.solve(ell, hermitize(q))
    c = hermitize(np.conj(np.linalg.solve(ell, np.conj(t).T)).T)
    w, y = np.linalg.eigh(c)
    lam = float(w[-1])
    tie = w >= lam - _TIE_RTOL * (1.0 + abs(lam))
    if int(tie.sum()) > 1 and n > 1:
        # Map every tied candidate back before applying the tie-break,
        # since the convention is stated on the returned vector.
        back = np.linalg.solve(np.conj(ell).T, y[:, tie])
        back = back / np.linalg.norm(back, axis=0, keepdims=True)
        u = back[:, _pick_from_tie(back)]
    else:
        u = np.linalg.solve(np.conj(ell).T, y[:, -1])
        u = u / np.linalg.norm(u)
    return EigPair(phase_normalize(u), lam)


def leading_generalized_eigvec_batch(qs: np.ndarray, fs: np.ndarray):
    """Batched :func:`leading_generalized_eigvec` over stacked pencils.

    Parameters
    ----------
    qs, fs:
        Arrays of shape (B, n, n); each (qs[b], fs[b]) is one pencil.

    Returns
    -------
    (vectors, values):
        vectors has shape (B, n) with each row unit-norm and
        phase-normalized; values has shape (B,).
    """
    if qs.ndim != 3 or qs.shape != fs.shape or qs.shape[1] != qs.shape[2]:
        raise DimensionMismatch(f"expected matching (B, n, n) stacks, got {qs.shape} and {fs.shape}")
    try:
        ell = np.linalg.cholesky(fs)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"a pencil denominator is not positive definite: {exc}") from exc
    t = np.linalg.solve(ell, qs)
    c = hermitize(np.conj(np.linalg.solve(ell, np.conj(np.swapaxes(t, -1, -2)))).swapaxes(-1, -2))
    w, y = np.linalg.eigh(c)
    values = w[:, -1].astype(float)
    lead = y[:, :, -1].copy()
    n = qs.shape[1]
    if n > 1:
        # Rare: a numerically degenerate top eigenvalue needs the
        # deterministic tie-break, handled per instance.
        tied = np.nonzero(w[:, -2] >= values - _TIE_RTOL * (1.0 + np.abs(values)))[0]
        for b in tied:
            tie = w[b] >= values[b] - _TIE_RTOL * (1.0 + abs(values[b]))
            back = np.linalg.solve(np.conj(ell[b]).T, y[b][:, tie])
            back = back / np.linalg.norm(back, axis=0, keepdims=True)
            lead[b] = back[:, _pick_from_tie(back)]
    vectors = np.linalg.solve(np.conj(np.swapaxes(ell, -1, -2)), lead[:, :, None])[:, :, 0]
    vectors = vectors / np.linalg.norm(vectors, axis=1, keepdims=True)
    # Vectorized phase normalization.
    idx = np.argmax(np.abs(vectors), axis=1)
    piv = vectors[np.arange(vectors.shape[0]), idx]
    vectors = vectors * np.conj(piv / np.abs(piv))[:, None]
    return vectors, values


def min_eigvec(s: np.ndarray) -> EigPair:
    """Unit eigenvector of Hermitian PSD s with the smallest eigenvalue."""
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise DimensionMismatch(f"min_eigvec needs a square matrix, got shape {s.shape}")
    w, y = np.linalg.eigh(hermitize(s))
    lam = float(w[0])
    tie = w <= lam + _TIE_RTOL * (1.0 + abs(lam))
    if int(tie.sum()) > 1:
        u = y[:, tie][:, _pick_from_tie(y[:, tie])]
    else:
        u = y[:, 0]
    return EigPair(phase_normalize(u), lam)


def smallest_eigvecs(s: np.ndarray, count: int) -> np.ndarray:
    """The `count` orthonormal eigenvectors of s with smallest eigenvalues.

    Columns are ordered by ascending eigenvalue and individually
    phase-normalized.
    """
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise DimensionMismatch(f"smallest_eigvecs needs a square matrix, got shape {s.shape}")
    if not 1 <= count <= s.shape[0]:
        raise DimensionMismatch(f"cannot take {count} eigenvectors from a {s.shape[0]}x{s.shape[0]} matrix")
    _, y = np.linalg.eigh(hermitize(s))
    cols = y[:, :count]
    return np.column_stack([phase_normalize(cols[:, i]) for i in range(count)])


def orthonormal_columns(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Random complex matrix with orthonormal columns, deterministic per rng.

    Drawn Haar-uniformly: QR of a complex Gaussian matrix with the R
    diagonal phases absorbed so the result does not depend on the QR
    sign convention.
    """
    if rows <= 0 or cols <= 0:
        raise DimensionMismatch(f"dimensions must be positive, got {rows}x{cols}")
    if cols > rows:
        raise DimensionMismatch(f"cannot build {cols} orthonormal columns of length {rows}")
    a = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    q, r = np.linalg.qr(a)
    d = np.diagonal(r).copy()
    d[d == 0] = 1.0  # measure-zero guard
    return q * np.conj(d / np.abs(d))[None, :]
