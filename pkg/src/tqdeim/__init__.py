"""Tensor t-product algebra and t-Q-DEIM sparse interpolation."""

from .errors import (
    ConditioningWarning,
    ConjugateSymmetryError,
    ConsistencyError,
    DimensionError,
    DivergenceError,
    FormatError,
    RankError,
    SingularSliceError,
    StabilityError,
)
from .interp import ErrorReport, QDeimModel, TQDeimModel, evaluate, fit_qdeim, fit_tqdeim
from .io import load_model, read_t3b, save_model, write_t3b
from .tensor_core import (
    bcirc,
    fold,
    t_identity,
    t_product,
    t_spectral_norm,
    t_transpose,
    unfold,
)
from .tfactor import t_inverse, t_pqr, t_qr, t_svd

__version__ = "0.1.0"

__all__ = [
    "ConditioningWarning",
    "ConjugateSymmetryError",
    "ConsistencyError",
    "DimensionError",
    "DivergenceError",
    "FormatError",
    "RankError",
    "SingularSliceError",
    "StabilityError",
    "ErrorReport",
    "QDeimModel",
    "TQDeimModel",
    "evaluate",
    "fit_qdeim",
    "fit_tqdeim",
    "load_model",
    "read_t3b",
    "save_model",
    "write_t3b",
    "bcirc",
    "fold",
    "t_identity",
    "t_product",
    "t_spectral_norm",
    "t_transpose",
    "unfold",
    "t_inverse",
    "t_pqr",
    "t_qr",
    "t_svd",
]
