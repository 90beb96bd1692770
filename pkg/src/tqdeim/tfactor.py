"""Fourier-domain factorizations: t-SVD, t-QR, pivoted t-QR, t-inverse.

Every factorization works slice by slice on the transform of the input.
Only slices ``0 .. q//2`` are factored; the others are filled in as
complex conjugates so that inverse transforms stay exactly real.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConditioningWarning, RankError, SingularSliceError
from .tensor_core import as_tensor3, slice_map, t_spectral_norm

__all__ = [
    "TSvdFactors",
    "TQrFactors",
    "t_svd",
    "t_svd_tail_spectral",
    "t_qr",
    "t_pqr",
    "t_pqr_pivots",
    "pivoted_qr_pivots",
    "t_inverse",
    "COND_WARN",
]

COND_WARN = 1e12
TIE_RTOL = 1e-14


def _is_self_conjugate(k, q):
    return k == 0 or 2 * k == q


def _fourier_half(A):
    """Non-redundant Fourier slices as a list of 2-D arrays."""
    Ahat = np.fft.rfft(A, axis=2)
    q = A.shape[2]
    out = []
    for k in range(Ahat.shape[2]):
        sl = Ahat[:, :, k]
        # DC and Nyquist slices of a real tensor are real
        out.append(sl.real.copy() if _is_self_conjugate(k, q) else sl)
    return out


def _from_half(slices, q):
    """Real tensor from its non-redundant Fourier slices."""
    half = np.stack([np.asarray(s, dtype=np.complex128) for s in slices], axis=2)
    return np.fft.irfft(half, n=q, axis=2)


def _fix_phase(U, W):
    """Make the largest-magnitude entry of each column of ``U`` real-positive."""
    idx = np.argmax(np.abs(U), axis=0)
    lead = U[idx, np.arange(U.shape[1])]
    mag = np.abs(lead)
    phase = np.where(mag > 0, lead / np.where(mag > 0, mag, 1), 1)
    return U * np.conj(phase), W * np.conj(phase)


@dataclass(frozen=True)
class TSvdFactors:
    """Truncated or economy t-SVD ``A = U * S * W^T``.

    ``sigma[i, k]`` holds the i-th singular value of Fourier slice ``k``
    (non-redundant slices only).
    """

    U: np.ndarray
    S: np.ndarray
    W: np.ndarray
    sigma: np.ndarray

    @property
    def rank(self):
        return self.U.shape[1]

    def truncate(self, n):
        if not 1 <= n <= self.rank:
            raise RankError(f"rank {n} outside 1..{self.rank}")
        return TSvdFactors(
            U=np.ascontiguousarray(self.U[:, :n, :]),
            S=np.ascontiguousarray(self.S[:n, :n, :]),
            W=np.ascontiguousarray(self.W[:, :n, :]),
            sigma=self.sigma[:n].copy(),
        )


def t_svd(A, rank=None):
    """t-SVD with per-slice nonincreasing singular values.

    Parameters
    ----------
    A : ndarray, shape (m, l, q)
    rank : int, optional
        Keep the leading ``rank`` lateral slices of U and W.  Defaults to
        ``min(m, l)``.
    """
    A = as_tensor3(A)
    m, l, q = A.shape
    kmax = min(m, l)
    if rank is None:
        rank = kmax
    if not 1 <= rank <= kmax:
        raise RankError(f"rank {rank} outside 1..{kmax}")

    def factor(sl):
        u, s, vh = np.linalg.svd(sl, full_matrices=False)
        u, w = _fix_phase(u[:, :rank], vh[:rank].conj().T)
        return u, s[:rank], w

    parts = slice_map(factor, _fourier_half(A))
    U = _from_half([p[0] for p in parts], q)
    W = _from_half([p[2] for p in parts], q)
    sigma = np.stack([p[1] for p in parts], axis=1)
    S = _from_half([np.diag(s) for s in sigma.T], q)
    return TSvdFactors(U=U, S=S, W=W, sigma=sigma)


def t_svd_tail_spectral(factors, n):
    """t-spectral norm of the discarded block ``S[n:, n:, :]``.

    Returns 0 when nothing is discarded (``n == rank``).
    """
    if not 0 <= n <= factors.rank:
        raise RankError(f"n={n} outside 0..{factors.rank}")
    if n == factors.rank:
        return 0.0
    return t_spectral_norm(factors.S[n:, n:, :])


@dataclass(frozen=True)
class TQrFactors:
    Q: np.ndarray
    R: np.ndarray
    pivots: np.ndarray | None = None


def t_qr(A):
    """Economy t-QR: ``A = Q * R`` with Q having orthonormal lateral slices."""
    A = as_tensor3(A)
    q = A.shape[2]
    parts = slice_map(np.linalg.qr, _fourier_half(A))
    return TQrFactors(
        Q=_from_half([p[0] for p in parts], q),
        R=_from_half([p[1] for p in parts], q),
    )


def pivoted_qr_pivots(M, k=None, tie_rtol=TIE_RTOL):
    """Column order chosen by Householder QR with greedy column pivoting.

    At each step the column with the largest residual norm wins; columns
    whose norms agree within ``tie_rtol`` (relative) go to the smaller
    original index.  Residual norms are recomputed rather than downdated.

    Parameters
    ----------
    M : ndarray, shape (r, c), real or complex
    k : int, optional
        Number of pivots to select, at most ``min(r, c)``.

    Returns
    -------
    ndarray of int
        The first ``k`` selected column indices (0-based).
    """
    R = np.array(M, dtype=np.result_type(M, np.float64), copy=True)
    r, c = R.shape
    kmax = min(r, c)
    k = kmax if k is None else k
    if not 0 <= k <= kmax:
        raise RankError(f"cannot select {k} pivots from a {r}x{c} matrix")
    perm = np.arange(c)
    for j in range(k):
        norms = np.linalg.norm(R[j:, j:], axis=0)
        best = norms.max()
        cand = np.flatnonzero(norms >= best * (1.0 - tie_rtol))
        pick = j + cand[np.argmin(perm[j + cand])]
        if pick != j:
            R[:, [j, pick]] = R[:, [pick, j]]
            perm[[j, pick]] = perm[[pick, j]]
        x = R[j:, j]
        alpha = np.linalg.norm(x)
        if alpha == 0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        R[j:, j:] -= 2.0 * np.outer(v, v.conj() @ R[j:, j:])
    return perm[:k].copy()


def t_pqr_pivots(U, fourier_slice=1):
    """Sampling rows for a basis tensor ``U`` of shape (N, n, M).

    Pivoted QR of the conjugate transpose of one Fourier frontal slice of
    ``U`` (the first, by default; 1-based ``fourier_slice``).  Returns the
    first n pivots as 0-based row indices.
    """
    U = as_tensor3(U, name="U")
    N, n, M = U.shape
    if n > N:
        raise RankError(f"basis has more columns ({n}) than rows ({N})")
    if not 1 <= fourier_slice <= M:
        raise ValueError(f"fourier_slice must lie in 1..{M}")
    Uhat = np.fft.fft(U, axis=2)[:, :, fourier_slice - 1]
    if _is_self_conjugate(fourier_slice - 1, M):
        Uhat = Uhat.real
    return pivoted_qr_pivots(Uhat.conj().T, k=n)


def t_pqr(A):
    """Pivoted t-QR ``A * P = Q * R``.

    The column permutation comes from a pivoted QR of the first Fourier
    slice; every slice is then QR-factored with that column order.
    ``pivots`` lists the permuted column order (0-based).
    """
    A = as_tensor3(A)
    m, l, q = A.shape
    half = _fourier_half(A)
    piv = pivoted_qr_pivots(half[0])
    order = np.concatenate([piv, np.setdiff1d(np.arange(l), piv)])
    parts = slice_map(lambda sl: np.linalg.qr(sl[:, order]), half)
    return TQrFactors(
        Q=_from_half([p[0] for p in parts], q),
        R=_from_half([p[1] for p in parts], q),
        pivots=order,
    )


def t_inverse(A, return_cond=False):
    """Tensor inverse computed slice by slice in the Fourier domain.

    Raises :class:`SingularSliceError` (1-based slice index) when a slice
    is numerically singular and warns with :class:`ConditioningWarning`
    when a slice condition number exceeds ``COND_WARN``.
    """
    A = as_tensor3(A)
    n, n2, q = A.shape
    if n != n2:
        raise RankError(f"t_inverse needs square frontal slices, got {A.shape}")
    half = _fourier_half(A)
    conds = np.array([np.linalg.cond(sl) for sl in half])
    eye = np.eye(n)
    inv = []
    for k, (sl, cond) in enumerate(zip(half, conds)):
        if not np.isfinite(cond) or cond * np.finfo(float).eps >= 1.0:
            raise SingularSliceError(k + 1, cond)
        if cond > COND_WARN:
            warnings.warn(
                f"Fourier slice {k + 1} has condition estimate {cond:.3e}",
                ConditioningWarning,
                stacklevel=2,
            )
        inv.append(np.linalg.solve(sl, eye))
    out = _from_half(inv, q)
    if return_cond:
        return out, conds
    return out
