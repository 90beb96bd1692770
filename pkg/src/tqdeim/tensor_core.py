"""Third-order tensors and the t-product algebra.

Tensors are plain ``numpy.ndarray`` objects of shape ``(m, l, q)``; index
``[:, :, k]`` is the k-th frontal slice, ``[:, j, :]`` the j-th lateral
slice and ``[i, :, :]`` the i-th horizontal slice.  The DFT runs along the
third axis with numpy's convention (unnormalised forward, ``1/q`` inverse).

Products, norms and inverses of real tensors only touch Fourier slices
``0 .. q//2``; the remaining slices are complex conjugates of these.
"""

from __future__ import annotations

import contextlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import ConjugateSymmetryError, DimensionError

__all__ = [
    "as_tensor3",
    "unfold",
    "fold",
    "bcirc",
    "fft3",
    "ifft3",
    "facewise_multiply",
    "t_product",
    "t_transpose",
    "t_identity",
    "frobenius_norm",
    "t_spectral_norm",
    "lateral_spectral_norms",
    "sample_rows",
    "sampling_tensor",
    "check_indices",
    "set_num_threads",
    "count_multiply_adds",
]

IMAG_TOL = 1e-8

_num_threads = 1
_flop_counters: list[list[int]] = []


def set_num_threads(n):
    """Set the worker count for per-Fourier-slice factorizations."""
    global _num_threads
    if n < 1:
        raise ValueError("thread count must be positive")
    _num_threads = int(n)


def slice_map(func, items):
    """Apply ``func`` to every item, keeping input order.

    Slices are independent, so the result does not depend on scheduling.
    """
    items = list(items)
    if _num_threads == 1 or len(items) < 2:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=_num_threads) as pool:
        return list(pool.map(func, items))


@contextlib.contextmanager
def count_multiply_adds():
    """Count scalar multiply-adds issued by :func:`facewise_multiply`.

    Yields a one-element list whose entry is updated in place::

        with count_multiply_adds() as ops:
            t_product(A, B)
        ops[0]
    """
    counter = [0]
    _flop_counters.append(counter)
    try:
        yield counter
    finally:
        _flop_counters.remove(counter)


def as_tensor3(A, dtype=np.float64, name="tensor"):
    """Return ``A`` as a 3-D array, validating shape and finiteness."""
    A = np.asarray(A, dtype=dtype)
    if A.ndim == 2:
        A = A[:, :, None]
    if A.ndim != 3:
        raise DimensionError(f"{name} must be third order, got ndim={A.ndim}")
    if 0 in A.shape:
        raise DimensionError(f"{name} has an empty dimension: {A.shape}")
    return A


def unfold(A):
    """Stack the frontal slices vertically into an ``(m*q, l)`` matrix."""
    A = as_tensor3(A, dtype=None)
    m, l, q = A.shape
    return np.ascontiguousarray(np.moveaxis(A, 2, 0)).reshape(m * q, l)


def fold(M, m, q):
    """Inverse of :func:`unfold`."""
    M = np.asarray(M)
    if M.ndim == 1:
        M = M[:, None]
    if M.ndim != 2 or M.shape[0] != m * q:
        raise DimensionError(
            f"cannot fold a {M.shape} matrix into {q} slices of {m} rows"
        )
    return np.moveaxis(M.reshape(q, m, M.shape[1]), 0, 2).copy()


def bcirc(A):
    """Block circulant matrix whose first block column is unfold(A)."""
    A = as_tensor3(A, dtype=None)
    m, l, q = A.shape
    out = np.empty((m * q, l * q), dtype=A.dtype)
    for i in range(q):
        for j in range(q):
            out[i * m:(i + 1) * m, j * l:(j + 1) * l] = A[:, :, (i - j) % q]
    return out


def fft3(A):
    """DFT along the third axis."""
    return np.fft.fft(as_tensor3(A, dtype=None), axis=2)


def ifft3(Ahat, tol=IMAG_TOL):
    """Inverse DFT along the third axis, returning a real tensor.

    Raises :class:`ConjugateSymmetryError` when the imaginary residue
    exceeds ``tol * ||Ahat||_F``.
    """
    Ahat = as_tensor3(Ahat, dtype=np.complex128)
    A = np.fft.ifft(Ahat, axis=2)
    scale = np.linalg.norm(Ahat)
    resid = np.abs(A.imag).max()
    if resid > tol * scale:
        raise ConjugateSymmetryError(
            f"imaginary residue {resid:.3e} exceeds {tol:g} * {scale:.3e}"
        )
    return np.ascontiguousarray(A.real)


def _rfft(A):
    return np.fft.rfft(A, axis=2)


def _irfft(Ahat, q):
    return np.fft.irfft(Ahat, n=q, axis=2)


def facewise_multiply(Ahat, Bhat):
    """Slice-by-slice matrix product of two Fourier-domain tensors."""
    Ahat = np.asarray(Ahat)
    Bhat = np.asarray(Bhat)
    if Ahat.ndim != 3 or Bhat.ndim != 3:
        raise DimensionError("facewise_multiply expects third-order operands")
    m, l, q = Ahat.shape
    l2, r, q2 = Bhat.shape
    if l != l2 or q != q2:
        raise DimensionError(
            f"non-conformable Fourier tensors {Ahat.shape} and {Bhat.shape}"
        )
    for counter in _flop_counters:
        counter[0] += m * l * r * q
    C = np.matmul(np.moveaxis(Ahat, 2, 0), np.moveaxis(Bhat, 2, 0))
    return np.moveaxis(C, 0, 2)


def t_product(A, B):
    """t-product ``A * B`` of an (m, l, q) and an (l, r, q) tensor.

    Evaluated with real FFTs: only the ``q//2 + 1`` non-redundant Fourier
    slices are multiplied.
    """
    A = as_tensor3(A, name="A")
    B = as_tensor3(B, name="B")
    if A.shape[1] != B.shape[0] or A.shape[2] != B.shape[2]:
        raise DimensionError(f"cannot t-multiply {A.shape} by {B.shape}")
    q = A.shape[2]
    return _irfft(facewise_multiply(_rfft(A), _rfft(B)), q)


def t_transpose(A):
    """Transpose every frontal slice and reverse slices 2..q."""
    A = as_tensor3(A, dtype=None)
    At = np.transpose(A, (1, 0, 2))
    order = (-np.arange(A.shape[2])) % A.shape[2]
    return np.ascontiguousarray(At[:, :, order])


def t_identity(m, q):
    """Identity tensor: I_m in the first frontal slice, zeros elsewhere."""
    if m < 1 or q < 1:
        raise DimensionError("t_identity needs m, q >= 1")
    out = np.zeros((m, m, q))
    out[:, :, 0] = np.eye(m)
    return out


def frobenius_norm(A):
    return float(np.linalg.norm(np.asarray(A).ravel()))


def t_spectral_norm(A):
    """Largest matrix 2-norm over the Fourier frontal slices.

    Equal to ``||bcirc(A)||_2``.
    """
    A = np.asarray(A)
    if A.ndim == 2:
        A = A[:, :, None]
    if np.iscomplexobj(A):
        Ahat = np.fft.fft(A, axis=2)
    else:
        Ahat = _rfft(A)
    slices = np.moveaxis(Ahat, 2, 0)
    return float(np.linalg.norm(slices, ord=2, axis=(1, 2)).max())


def lateral_spectral_norms(A):
    """t-spectral norm of every lateral slice ``A[:, j:j+1, :]``.

    For an (m, 1, q) slice the Fourier slices are vectors, so the norm is
    the largest Euclidean column norm of its transform.
    """
    A = as_tensor3(A)
    return np.linalg.norm(_rfft(A), axis=0).max(axis=1)


def check_indices(p, N):
    """Validate 0-based row indices against a first dimension of ``N``."""
    p = np.asarray(p)
    if p.ndim != 1 or not np.issubdtype(p.dtype, np.integer):
        raise DimensionError("indices must be a 1-D integer sequence")
    if p.size and (p.min() < 0 or p.max() >= N):
        raise DimensionError(f"index out of range for first dimension {N}")
    if np.unique(p).size != p.size:
        raise DimensionError("indices must be distinct")
    return p.astype(np.intp)


def sample_rows(A, p):
    """Horizontal slices ``A[p, :, :]`` in the order of ``p`` (0-based)."""
    A = as_tensor3(A)
    p = check_indices(p, A.shape[0])
    return A[p, :, :]


def sampling_tensor(p, N, q):
    """Explicit (N, n, q) sampling tensor for 0-based indices ``p``.

    Every Fourier slice equals the selection matrix, hence only the first
    spatial slice is nonzero.
    """
    p = check_indices(p, N)
    P = np.zeros((N, p.size, q))
    P[p, np.arange(p.size), 0] = 1.0
    return P
