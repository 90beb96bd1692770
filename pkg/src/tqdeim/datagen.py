"""Snapshot generators for viscous Burgers' and FitzHugh-Nagumo equations.

Both solvers use second-order finite differences in space and first-order
IMEX time stepping: backward Euler for diffusion (a tridiagonal solve) and
forward Euler for everything else.  Output tensors are ordered
space x parameter x time, with snapshot 0 holding the initial condition.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import DivergenceError, StabilityError

__all__ = [
    "BurgersConfig",
    "FhnConfig",
    "SnapshotDataset",
    "gen_burgers",
    "gen_fhn",
    "split_dataset",
    "burgers_trajectory",
    "fhn_trajectory",
    "fhn_stimulus",
]

BLOWUP = 1e3


@dataclass
class BurgersConfig:
    """Viscous Burgers' setup on x in [0, 1] with w = 0 at both ends.

    ``substeps`` internal steps are taken between stored snapshots; when
    left as None the smallest count satisfying the explicit-step limits
    is used.
    """

    nx: int = 256
    nt: int = 256
    t_final: float = 2.0
    mu_range: tuple = (0.004, 0.04)
    n_params: int = 50
    seed: int = 0
    substeps: int | None = None
    cfl: float = 0.9

    def __post_init__(self):
        if self.nx < 8 or self.nt < 8:
            raise ValueError("nx and nt must be at least 8")
        lo, hi = self.mu_range
        if not 0 < lo <= hi:
            raise ValueError(f"invalid viscosity range {self.mu_range}")
        if self.n_params < 1:
            raise ValueError("n_params must be positive")
        self.mu_range = (float(lo), float(hi))

    def mus(self):
        """Log-uniformly spaced viscosities."""
        lo, hi = self.mu_range
        if self.n_params == 1:
            return np.array([lo])
        return np.geomspace(lo, hi, self.n_params)


@dataclass
class FhnConfig:
    """FitzHugh-Nagumo setup on x in [0, 1].

    ``nonlinear`` and ``stimulus`` switch off the cubic kinetics and the
    boundary current; they exist for testing.
    """

    nx: int = 64
    nt: int = 128
    t_final: float = 5.0
    eps_range: tuple = (0.01, 0.04)
    c_range: tuple = (0.025, 0.075)
    b: float = 0.5
    gamma: float = 2.0
    grid: int = 6
    seed: int = 0
    max_dt: float = 0.01
    nonlinear: bool = True
    stimulus: bool = True

    def __post_init__(self):
        if self.nx < 3 or self.nt < 2 or self.grid < 1:
            raise ValueError("nx >= 3, nt >= 2 and grid >= 1 required")
        if not 0 < self.eps_range[0] <= self.eps_range[1]:
            raise ValueError(f"invalid epsilon range {self.eps_range}")
        if self.c_range[0] > self.c_range[1]:
            raise ValueError(f"invalid c range {self.c_range}")
        self.eps_range = tuple(map(float, self.eps_range))
        self.c_range = tuple(map(float, self.c_range))

    def params(self):
        """(grid**2, 2) array of (epsilon, c), epsilon varying slowest."""
        eps = np.linspace(*self.eps_range, self.grid)
        cs = np.linspace(*self.c_range, self.grid)
        E, C = np.meshgrid(eps, cs, indexing="ij")
        return np.column_stack([E.ravel(), C.ravel()])


@dataclass
class SnapshotDataset:
    """Space x parameter x time snapshots and the parameters behind them."""

    tensor: np.ndarray
    params: np.ndarray
    param_names: list
    x: np.ndarray
    t: np.ndarray
    kind: str = ""
    split: str = "all"
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=float).reshape(len(self.params), -1)
        if self.tensor.shape[1] != len(self.params):
            raise ValueError("one parameter vector per lateral slice required")

    def subset(self, idx, split):
        idx = np.asarray(idx, dtype=np.intp)
        return SnapshotDataset(
            tensor=np.ascontiguousarray(self.tensor[:, idx, :]),
            params=self.params[idx],
            param_names=list(self.param_names),
            x=self.x,
            t=self.t,
            kind=self.kind,
            split=split,
            config=dict(self.config),
        )

    def describe(self):
        return {
            "kind": self.kind,
            "split": self.split,
            "shape": list(self.tensor.shape),
            "param_names": list(self.param_names),
            "params": self.params.tolist(),
            "config": self.config,
        }


def _tridiag_laplacian_bands(n, coef):
    """Banded form of ``I - coef * L`` for the interior 3-point Laplacian."""
    ab = np.zeros((3, n))
    ab[0, 1:] = -coef
    ab[1, :] = 1.0 + 2.0 * coef
    ab[2, :-1] = -coef
    return ab


def _burgers_substeps(cfg, dx, dt_out, mu):
    # initial max|w| = 1 bounds the solution for all time (maximum principle)
    umax = 1.0
    limit = cfg.cfl * dx / umax
    # forward-Euler central convection needs dt <= 2 mu / u^2 for stability
    limit = min(limit, cfg.cfl * 2.0 * mu / umax**2)
    return max(1, math.ceil(dt_out / limit))


def burgers_trajectory(cfg, mu):
    """Snapshots (nx, nt) of ``w_t + (w^2/2)_x = mu w_xx`` for one viscosity."""
    nx, nt = cfg.nx, cfg.nt
    x = np.linspace(0.0, 1.0, nx)
    dx = x[1] - x[0]
    dt_out = cfg.t_final / (nt - 1)
    sub = cfg.substeps or _burgers_substeps(cfg, dx, dt_out, mu)
    dt = dt_out / sub

    w = np.sin(np.pi * x)
    w[0] = w[-1] = 0.0
    out = np.empty((nx, nt))
    out[:, 0] = w
    ab = _tridiag_laplacian_bands(nx - 2, mu * dt / dx**2)
    for k in range(1, nt):
        for _ in range(sub):
            umax = np.abs(w).max()
            if umax > BLOWUP or not np.isfinite(umax):
                raise DivergenceError(f"Burgers' solution blew up at mu={mu}")
            if dt * umax > dx:
                raise StabilityError(
                    f"dt={dt:.3e} violates dt <= dx/max|w| = {dx / umax:.3e}"
                )
            flux = 0.5 * w * w
            rhs = w[1:-1] - dt * (flux[2:] - flux[:-2]) / (2.0 * dx)
            w[1:-1] = solve_banded((1, 1), ab, rhs)
        out[:, k] = w
    if not np.isfinite(out).all():
        raise DivergenceError(f"non-finite Burgers' solution at mu={mu}")
    return out


def gen_burgers(cfg):
    mus = cfg.mus()
    data = np.stack([burgers_trajectory(cfg, mu) for mu in mus], axis=1)
    return SnapshotDataset(
        tensor=data,
        params=mus[:, None],
        param_names=["mu"],
        x=np.linspace(0.0, 1.0, cfg.nx),
        t=np.linspace(0.0, cfg.t_final, cfg.nt),
        kind="burgers",
        config=_config_dict(cfg),
    )


def fhn_stimulus(t):
    return 50000.0 * t**3 * np.exp(-15.0 * t)


def fhn_trajectory(cfg, eps, c):
    """Snapshots (2*nx, nt) of the FitzHugh-Nagumo system, w1 stacked over w2.

    ``eps w1_t = eps^2 w1_xx + g(w1) - w2 + c`` and
    ``w2_t = b w1 - gamma w2 + c`` with ``w1_x(0) = -I_ext(t)``,
    ``w1_x(1) = 0``.  Neumann conditions use ghost nodes.
    """
    nx, nt = cfg.nx, cfg.nt
    dx = 1.0 / (nx - 1)
    dt_out = cfg.t_final / (nt - 1)
    sub = max(1, math.ceil(dt_out / cfg.max_dt - 1e-9))
    dt = dt_out / sub

    # (I - dt*eps*L) with ghost-node Neumann rows
    r = dt * eps / dx**2
    ab = _tridiag_laplacian_bands(nx, r)
    ab[0, 1] = -2.0 * r
    ab[2, -2] = -2.0 * r

    w1 = np.full(nx, 0.001)
    w2 = np.full(nx, 0.001)
    out = np.empty((2 * nx, nt))
    out[:nx, 0], out[nx:, 0] = w1, w2
    t = 0.0
    for k in range(1, nt):
        for _ in range(sub):
            g = w1 * (w1 - 0.1) * (1.0 - w1) if cfg.nonlinear else 0.0
            rhs = w1 + (dt / eps) * (g - w2 + c)
            if cfg.stimulus:
                # ghost node w1[-1] = w1[1] + 2 dx I_ext
                rhs[0] += 2.0 * r * dx * fhn_stimulus(t + dt)
            w2 = w2 + dt * (cfg.b * w1 - cfg.gamma * w2 + c)
            w1 = solve_banded((1, 1), ab, rhs)
            t += dt
        if np.abs(w1).max() > BLOWUP or not np.isfinite(w1).all():
            raise DivergenceError(f"FHN solution blew up at eps={eps}, c={c}")
        out[:nx, k], out[nx:, k] = w1, w2
    return out


def gen_fhn(cfg):
    params = cfg.params()
    data = np.stack([fhn_trajectory(cfg, e, c) for e, c in params], axis=1)
    return SnapshotDataset(
        tensor=data,
        params=params,
        param_names=["epsilon", "c"],
        x=np.linspace(0.0, 1.0, cfg.nx),
        t=np.linspace(0.0, cfg.t_final, cfg.nt),
        kind="fhn",
        config=_config_dict(cfg),
    )


def _config_dict(cfg):
    d = asdict(cfg)
    return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


def split_dataset(ds, train_fraction=None, seed=0, train_count=None, test_count=None):
    """Random disjoint split of the lateral slices.

    Either ``train_fraction`` (floor of fraction * count goes to training,
    the rest to testing) or explicit counts.  Indices inside each part keep
    their original order.
    """
    total = ds.tensor.shape[1]
    if train_count is None:
        if train_fraction is None or not 0 < train_fraction < 1:
            raise ValueError("train_fraction must lie strictly between 0 and 1")
        train_count = math.floor(train_fraction * total)
        test_count = total - train_count
    elif test_count is None:
        test_count = total - train_count
    if train_count < 1 or test_count < 1:
        raise ValueError(f"split {train_count}/{test_count} leaves a part empty")
    if train_count + test_count > total:
        raise ValueError(f"split {train_count}/{test_count} exceeds {total} slices")
    perm = np.random.default_rng(seed).permutation(total)
    train_idx = np.sort(perm[:train_count])
    test_idx = np.sort(perm[train_count:train_count + test_count])
    return ds.subset(train_idx, "train"), ds.subset(test_idx, "test")
