import numpy as np
import pytest


def bcirc_oracle(A):
    """Block circulant built by explicit cyclic down-shifts of unfold(A)."""
    m, l, q = A.shape
    col = np.concatenate([A[:, :, k] for k in range(q)], axis=0)
    return np.concatenate([np.roll(col, j * m, axis=0) for j in range(q)], axis=1)


def t_product_oracle(A, B):
    m, _, q = A.shape
    unf = np.concatenate([B[:, :, k] for k in range(q)], axis=0)
    C = bcirc_oracle(A) @ unf
    return np.stack([C[k * m:(k + 1) * m] for k in range(q)], axis=2)


def transpose_oracle(A):
    q = A.shape[2]
    return np.stack([A[:, :, (-k) % q].T for k in range(q)], axis=2)


def rel_err(X, Y):
    denom = max(np.linalg.norm(np.ravel(Y)), 1e-300)
    return np.linalg.norm(np.ravel(X) - np.ravel(Y)) / denom


def random_orthogonal_tensor(rng, m, k, q):
    """(m, k, q) tensor with t-orthonormal lateral slices, k <= m."""
    half = q // 2 + 1
    slices = []
    for j in range(half):
        Z = rng.standard_normal((m, k))
        if not (j == 0 or 2 * j == q):
            Z = Z + 1j * rng.standard_normal((m, k))
        Q, _ = np.linalg.qr(Z)
        slices.append(Q)
    return np.fft.irfft(np.stack(slices, axis=2), n=q, axis=2)


def greedy_pivots(M, k):
    """Reference column pivoting by explicit Gram-Schmidt deflation."""
    R = np.array(M, dtype=complex)
    chosen = []
    for _ in range(k):
        norms = np.linalg.norm(R, axis=0)
        norms[chosen] = -1.0
        j = int(np.argmax(norms))
        chosen.append(j)
        v = R[:, j] / np.linalg.norm(R[:, j])
        R = R - np.outer(v, v.conj() @ R)
    return np.array(chosen)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
