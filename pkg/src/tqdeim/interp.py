"""t-Q-DEIM and matrix Q-DEIM: fitting, reconstruction and error bounds.

Training tensors have shape (N, N_train, M): rows are spatial degrees of
freedom, lateral slices are parameter samples and frontal slices are time
instances.  Reconstruction works on any (n, l, M) tensor of sampled rows,
so many lateral slices are reconstructed in one call.

All errors are measured in the t-spectral norm of (N, 1, M) lateral
slices, for both methods, so numbers are directly comparable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConditioningWarning, DimensionError, RankError
from .tensor_core import (
    as_tensor3,
    lateral_spectral_norms,
    sample_rows,
    sampling_tensor,
    t_product,
    t_spectral_norm,
    t_transpose,
)
from .tfactor import (
    COND_WARN,
    _fix_phase,
    pivoted_qr_pivots,
    t_inverse,
    t_pqr_pivots,
    t_svd,
    t_svd_tail_spectral,
)

__all__ = [
    "TQDeimModel",
    "QDeimModel",
    "ErrorReport",
    "fit_tqdeim",
    "fit_tqdeim_from_factors",
    "reconstruct_tqdeim",
    "fit_qdeim",
    "fit_qdeim_from_svd",
    "reconstruct_qdeim",
    "vectorize_snapshots",
    "amplification_factor",
    "projection_error",
    "error_bound",
    "evaluate",
    "apriori_estimate",
    "log_apriori_estimate",
    "sensitivity_sweep",
    "projector_tensor",
]


@dataclass(frozen=True, eq=False)
class TQDeimModel:
    """Basis ``U`` (N, n, M), 0-based ``pivots`` and ``D = U * U[p]^-1``."""

    U: np.ndarray
    pivots: np.ndarray
    D: np.ndarray
    amplification: float
    slice_conditions: np.ndarray
    fourier_slice: int = 1
    tail_estimate: float | None = None
    meta: dict = field(default_factory=dict)

    method = "tqdeim"

    @property
    def rank(self):
        return self.U.shape[1]

    @property
    def shape(self):
        """(N, M): rows and tube length of the functions it reconstructs."""
        return self.U.shape[0], self.U.shape[2]

    def reconstruct(self, sampled):
        return reconstruct_tqdeim(self, sampled)

    def interpolate(self, f):
        """Sample ``f`` at the pivots and reconstruct it."""
        return reconstruct_tqdeim(self, sample_rows(f, self.pivots))


@dataclass(frozen=True, eq=False)
class QDeimModel:
    """Matrix basis ``U`` (N, n), 0-based ``pivots``, ``D = U U[p]^-1``."""

    U: np.ndarray
    pivots: np.ndarray
    D: np.ndarray
    amplification: float
    meta: dict = field(default_factory=dict)

    method = "qdeim"

    @property
    def rank(self):
        return self.U.shape[1]

    def reconstruct(self, sampled):
        return reconstruct_qdeim(self, sampled)

    def interpolate(self, f):
        """Reconstruct an (N, l, M) tensor from its pivot rows."""
        f = as_tensor3(f)
        rows = f[self.pivots]
        n, l, M = rows.shape
        out = reconstruct_qdeim(self, rows.reshape(n, l * M))
        return out.reshape(f.shape)


@dataclass
class ErrorReport:
    """Per-sample errors of a fitted model on a set of lateral slices.

    ``true_error``, ``proj_error`` and ``f_norm`` are t-spectral norms of
    (N, 1, M) slices; ``bound = amplification * proj_error``.
    """

    method: str
    rank: int
    amplification: float
    true_error: np.ndarray
    proj_error: np.ndarray
    bound: np.ndarray
    rel_frob_error: np.ndarray
    f_norm: np.ndarray
    warnings: list = field(default_factory=list)

    def __len__(self):
        return len(self.true_error)

    @property
    def eps_abs(self):
        return float(np.mean(self.true_error)) if len(self) else math.nan

    @property
    def eps_rel(self):
        if not len(self):
            return math.nan
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.where(self.f_norm > 0, self.true_error / self.f_norm, 0.0)
        return float(np.mean(rel))

    def bound_violations(self, rtol=1e-9):
        """Indices where ``bound < true_error - rtol * bound``."""
        bad = self.bound < self.true_error - rtol * self.bound
        # f in span gives bound 0 and a rounding-level true error
        bad &= self.true_error > 1e-12 * np.maximum(self.f_norm, 1.0)
        return np.flatnonzero(bad)

    def rows(self):
        for i in range(len(self)):
            yield {
                "sample_index": i,
                "true_error": float(self.true_error[i]),
                "proj_error": float(self.proj_error[i]),
                "bound": float(self.bound[i]),
                "rel_frob_error": float(self.rel_frob_error[i]),
            }


def _check_rank(n, limit, what):
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= limit:
        raise RankError(f"rank n={n} must lie in 1..{limit} ({what})")
    return int(n)


def fit_tqdeim(train, n, fourier_slice=1, seed=None):
    """Fit a t-Q-DEIM model of rank ``n`` on an (N, N_train, M) tensor."""
    train = as_tensor3(train, name="train")
    N, ntrain, M = train.shape
    n = _check_rank(n, min(N, ntrain), "min(N, N_train)")
    factors = t_svd(train)
    meta = {"train_shape": list(train.shape), "seed": seed}
    return fit_tqdeim_from_factors(factors, n, fourier_slice=fourier_slice, meta=meta)


def fit_tqdeim_from_factors(factors, n, fourier_slice=1, meta=None):
    """Build the model from a precomputed full t-SVD of the training data."""
    n = _check_rank(n, factors.rank, "retained t-SVD rank")
    U = np.ascontiguousarray(factors.U[:, :n, :])
    pivots = t_pqr_pivots(U, fourier_slice=fourier_slice)
    Up = U[pivots]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConditioningWarning)
        Upinv, conds = t_inverse(Up, return_cond=True)
    D = t_product(U, Upinv)
    return TQDeimModel(
        U=U,
        pivots=pivots,
        D=D,
        amplification=_tensor_amplification(Up),
        slice_conditions=conds,
        fourier_slice=fourier_slice,
        tail_estimate=t_svd_tail_spectral(factors, n),
        meta=dict(meta or {}),
    )


def _tensor_amplification(Up):
    """max_k 1 / sigma_min of the Fourier slices of ``U[p]``."""
    Uphat = np.moveaxis(np.fft.rfft(Up, axis=2), 2, 0)
    smin = np.linalg.svd(Uphat, compute_uv=False)[:, -1].min()
    return math.inf if smin == 0 else float(1.0 / smin)


def _matrix_amplification(Up):
    smin = np.linalg.svd(Up, compute_uv=False)[-1]
    return math.inf if smin == 0 else float(1.0 / smin)


def reconstruct_tqdeim(model, sampled):
    """Full (N, l, M) reconstruction ``D * sampled``."""
    sampled = as_tensor3(sampled, name="sampled")
    N, M = model.shape
    if sampled.shape[0] != model.rank or sampled.shape[2] != M:
        raise DimensionError(
            f"sampled rows must have shape ({model.rank}, l, {M}), "
            f"got {sampled.shape}"
        )
    return t_product(model.D, sampled)


def vectorize_snapshots(train):
    """(N, l, M) tensor -> (N, l*M) matrix, column ``j*M + k`` = ``train[:, j, k]``."""
    train = as_tensor3(train)
    N, l, M = train.shape
    return train.reshape(N, l * M)


def fit_qdeim(train, n, seed=None):
    """Fit matrix Q-DEIM on the vectorized snapshots of ``train``."""
    train = as_tensor3(train, name="train")
    F = vectorize_snapshots(train)
    n = _check_rank(n, min(F.shape), "min(N, M * N_train)")
    Ufull, s, _ = np.linalg.svd(F, full_matrices=False)
    meta = {"train_shape": list(train.shape), "seed": seed}
    return fit_qdeim_from_svd(Ufull, n, meta=meta)


def fit_qdeim_from_svd(Ufull, n, meta=None):
    n = _check_rank(n, Ufull.shape[1], "number of left singular vectors")
    U, _ = _fix_phase(Ufull[:, :n], np.zeros((0, n)))
    pivots = pivoted_qr_pivots(U.T, k=n)
    Up = U[pivots]
    D = np.linalg.solve(Up.T, U.T).T
    return QDeimModel(
        U=np.ascontiguousarray(U),
        pivots=pivots,
        D=np.ascontiguousarray(D),
        amplification=_matrix_amplification(Up),
        meta=dict(meta or {}),
    )


def reconstruct_qdeim(model, sampled):
    """``D @ sampled`` for an (n, k) matrix of sampled rows."""
    sampled = np.asarray(sampled, dtype=np.float64)
    if sampled.ndim == 1:
        sampled = sampled[:, None]
    if sampled.ndim != 2 or sampled.shape[0] != model.rank:
        raise DimensionError(
            f"sampled rows must have {model.rank} rows, got {sampled.shape}"
        )
    return model.D @ sampled


def amplification_factor(model):
    """``||(P^T * U)^-1||`` in the t-spectral norm (2-norm for Q-DEIM)."""
    if isinstance(model, QDeimModel):
        return _matrix_amplification(model.U[model.pivots])
    return _tensor_amplification(model.U[model.pivots])


def _projection_residual(model, f):
    if isinstance(model, QDeimModel):
        N, l, M = f.shape
        F = f.reshape(N, l * M)
        return (F - model.U @ (model.U.T @ F)).reshape(f.shape)
    return f - t_product(model.U, t_product(t_transpose(model.U), f))


def _check_function(model, f):
    f = as_tensor3(f, name="f")
    N = model.U.shape[0]
    if f.shape[0] != N:
        raise DimensionError(f"function has {f.shape[0]} rows, model expects {N}")
    if isinstance(model, TQDeimModel) and f.shape[2] != model.shape[1]:
        raise DimensionError(
            f"function tube length {f.shape[2]} != model {model.shape[1]}"
        )
    return f


def projection_error(model, f):
    """t-spectral norm of ``(I - U U^T) f`` for an (N, 1, M) slice ``f``."""
    f = _check_function(model, f)
    return t_spectral_norm(_projection_residual(model, f))


def error_bound(model, f):
    """Return ``(bound, true_error, proj_error)`` for one lateral slice.

    For Q-DEIM the basis acts on every frontal column separately, which
    commutes with the DFT along the tube, so the same bound holds with
    the Q-DEIM amplification factor.
    """
    f = _check_function(model, f)
    proj = t_spectral_norm(_projection_residual(model, f))
    true = t_spectral_norm(f - model.interpolate(f))
    return model.amplification * proj, true, proj


def evaluate(model, data):
    """:class:`ErrorReport` over every lateral slice of ``data``."""
    data = _check_function(model, data)
    approx = model.interpolate(data)
    err = data - approx
    true = lateral_spectral_norms(err)
    proj = lateral_spectral_norms(_projection_residual(model, data))
    fnorm = lateral_spectral_norms(data)
    frob = np.linalg.norm(err, axis=(0, 2))
    dfrob = np.linalg.norm(data, axis=(0, 2))
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(dfrob > 0, frob / dfrob, 0.0)
    notes = []
    conds = getattr(model, "slice_conditions", None)
    if conds is not None:
        for k in np.flatnonzero(conds > COND_WARN):
            notes.append({
                "kind": "ill_conditioned_slice",
                "slice": int(k + 1),
                "cond": float(conds[k]),
            })
    return ErrorReport(
        method=model.method,
        rank=model.rank,
        amplification=model.amplification,
        true_error=true,
        proj_error=proj,
        bound=model.amplification * proj,
        rel_frob_error=rel,
        f_norm=fnorm,
        warnings=notes,
    )


def log_apriori_estimate(N, n, M):
    """Natural log of :func:`apriori_estimate`."""
    if not (1 <= n <= N and M >= 1):
        raise RankError(f"need 1 <= n <= N and M >= 1, got N={N}, n={n}, M={M}")
    if n <= 500:
        inner = math.log(4.0**n + 6 * n - 1)
    else:
        # 4**n dominates; log1p keeps the correction exact to rounding
        inner = n * math.log(4.0) + math.log1p((6 * n - 1) * math.exp(-n * math.log(4.0)))
    return math.log(M) + 0.5 * math.log(N - n + 1) + 0.5 * inner - math.log(3.0)


def apriori_estimate(N, n, M):
    """Rule-of-thumb size of the t-Q-DEIM amplification factor.

    ``M * sqrt(N - n + 1) * sqrt(4**n + 6n - 1) / 3``.  This is an estimate,
    not a guaranteed bound.  Returns ``inf`` once the value leaves the
    double range.
    """
    if n <= 500:
        if not (1 <= n <= N and M >= 1):
            raise RankError(f"need 1 <= n <= N and M >= 1, got N={N}, n={n}, M={M}")
        return M * math.sqrt(N - n + 1) * math.sqrt(4.0**n + 6 * n - 1) / 3.0
    logv = log_apriori_estimate(N, n, M)
    if logv > math.log(np.finfo(float).max):
        return math.inf
    return math.exp(logv)


def projector_tensor(model):
    """Materialize the (N, N, M) projector ``U * (P^T U)^-1 * P^T``.

    Only meant for small N.
    """
    N, M = model.shape
    P = sampling_tensor(model.pivots, N, M)
    return t_product(model.D, t_transpose(P))


def sensitivity_sweep(train, test, ranks, methods=("tqdeim", "qdeim"), fourier_slice=1):
    """Errors as a function of the rank for each method.

    Each SVD is computed once and truncated for every rank.  Returns a
    list of dict rows sorted by (method, n); duplicate ranks are dropped.
    """
    train = as_tensor3(train, name="train")
    test = as_tensor3(test, name="test")
    ranks = sorted({int(r) for r in ranks})
    if not ranks:
        raise RankError("empty rank list")
    rows = []
    for method in methods:
        if method == "tqdeim":
            factors = t_svd(train)

            def build(n):
                return fit_tqdeim_from_factors(factors, n, fourier_slice=fourier_slice)
        elif method == "qdeim":
            Ufull = np.linalg.svd(vectorize_snapshots(train), full_matrices=False)[0]

            def build(n):
                return fit_qdeim_from_svd(Ufull, n)
        else:
            raise ValueError(f"unknown method {method!r}")
        for n in ranks:
            model = build(n)
            rtrain = evaluate(model, train)
            rtest = evaluate(model, test)
            rows.append({
                "method": method,
                "n": n,
                "eps_abs_train": rtrain.eps_abs,
                "eps_abs_test": rtest.eps_abs,
                "eps_rel_train": rtrain.eps_rel,
                "eps_rel_test": rtest.eps_rel,
                "proj_train": float(np.mean(rtrain.proj_error)),
                "proj_test": float(np.mean(rtest.proj_error)),
                "amplification": model.amplification,
            })
    return rows
