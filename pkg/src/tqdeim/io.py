"""On-disk formats: .t3b tensors, model bundles and error reports.

.t3b layout (all little-endian)::

    offset  size  field
    0       4     magic b"T3B1"
    4       1     dtype code: 1 = float64, 2 = complex128
    5       3     reserved, zero
    8       24    m, l, q as uint64
    32      ...   payload, frontal slice 1 first, each slice row-major m x l
"""

from __future__ import annotations

import csv
import json
import math
import os
import struct
import time
from pathlib import Path

import numpy as np

from .errors import ConsistencyError, FormatError
from .interp import (
    QDeimModel,
    TQDeimModel,
    _matrix_amplification,
    _tensor_amplification,
)
from .tensor_core import check_indices

__all__ = [
    "write_t3b",
    "read_t3b",
    "save_model",
    "load_model",
    "write_report",
    "report_to_dict",
    "HEADER_SIZE",
    "FORMAT_VERSION",
]

MAGIC = b"T3B1"
HEADER = struct.Struct("<4sB3x3Q")
HEADER_SIZE = HEADER.size
FORMAT_VERSION = 1
_DTYPES = {1: np.dtype("<f8"), 2: np.dtype("<c16")}


def write_t3b(path, A):
    """Write a real or complex third-order tensor."""
    A = np.asarray(A)
    if A.ndim != 3 or 0 in A.shape:
        raise FormatError(f"expected a non-empty third-order tensor, got {A.shape}")
    code = 2 if np.iscomplexobj(A) else 1
    payload = np.ascontiguousarray(np.moveaxis(A, 2, 0), dtype=_DTYPES[code])
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, code, *A.shape))
        fh.write(payload.tobytes())


def read_t3b(path, expect=None):
    """Read a .t3b file; ``expect`` may be ``"real"`` or ``"complex"``."""
    with open(path, "rb") as fh:
        head = fh.read(HEADER_SIZE)
        if len(head) < HEADER_SIZE:
            raise FormatError(f"{path}: truncated header")
        magic, code, m, l, q = HEADER.unpack(head)
        if magic != MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        if head[5:8] != b"\0\0\0":
            raise FormatError(f"{path}: reserved header bytes are not zero")
        if code not in _DTYPES:
            raise FormatError(f"{path}: unknown dtype code {code}")
        if min(m, l, q) < 1:
            raise FormatError(f"{path}: zero dimension in {(m, l, q)}")
        dtype = _DTYPES[code]
        nbytes = m * l * q * dtype.itemsize
        payload = fh.read(nbytes + 1)
    if len(payload) != nbytes:
        raise FormatError(
            f"{path}: payload has {len(payload)} bytes, expected {nbytes}"
        )
    if expect == "real" and code != 1 or expect == "complex" and code != 2:
        raise FormatError(f"{path}: expected {expect} data, found dtype code {code}")
    data = np.frombuffer(payload, dtype=dtype).reshape(q, m, l)
    if not np.isfinite(data).all():
        raise FormatError(f"{path}: non-finite values")
    return np.ascontiguousarray(np.moveaxis(data, 0, 2)).astype(dtype.newbyteorder("="))


def _timestamp():
    # SOURCE_DATE_EPOCH pins the stamp for reproducible bundles
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def _dump_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def save_model(directory, model):
    """Write U.t3b, D.t3b, pivots.json and meta.json into ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    if isinstance(model, TQDeimModel):
        U, D = model.U, model.D
        fourier_slice = model.fourier_slice
    elif isinstance(model, QDeimModel):
        U, D = model.U[:, :, None], model.D[:, :, None]
        fourier_slice = 1
    else:
        raise TypeError(f"cannot save {type(model).__name__}")
    write_t3b(d / "U.t3b", U)
    write_t3b(d / "D.t3b", D)
    _dump_json(d / "pivots.json", {
        "pivots": [int(p) + 1 for p in model.pivots],
        "rank": int(model.rank),
        "fourier_slice": int(fourier_slice),
    })
    meta = {
        "format_version": FORMAT_VERSION,
        "method": model.method,
        "dims": list(U.shape),
        "created": _timestamp(),
        "seed": model.meta.get("seed"),
        "train_shape": model.meta.get("train_shape"),
    }
    if getattr(model, "tail_estimate", None) is not None:
        meta["tail_estimate"] = model.tail_estimate
    _dump_json(d / "meta.json", meta)


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def load_model(directory):
    """Inverse of :func:`save_model`, with cross-file consistency checks."""
    d = Path(directory)
    meta = _load_json(d / "meta.json")
    piv = _load_json(d / "pivots.json")
    U = read_t3b(d / "U.t3b", expect="real")
    D = read_t3b(d / "D.t3b", expect="real")
    if meta.get("format_version") != FORMAT_VERSION:
        raise ConsistencyError(f"unsupported format version {meta.get('format_version')}")
    if list(U.shape) != list(meta.get("dims", [])) or D.shape != U.shape:
        raise ConsistencyError(
            f"dims mismatch: meta {meta.get('dims')}, U {U.shape}, D {D.shape}"
        )
    pivots = np.asarray(piv.get("pivots", []), dtype=np.int64) - 1
    if piv.get("rank") != U.shape[1] or pivots.size != U.shape[1]:
        raise ConsistencyError("pivot count does not match the basis rank")
    try:
        pivots = check_indices(pivots, U.shape[0])
    except ValueError as exc:
        raise ConsistencyError(str(exc)) from exc
    extra = {"seed": meta.get("seed"), "train_shape": meta.get("train_shape")}
    method = meta.get("method")
    if method == "tqdeim":
        Up = U[pivots]
        conds = np.array([
            np.linalg.cond(s) for s in np.moveaxis(np.fft.rfft(Up, axis=2), 2, 0)
        ])
        return TQDeimModel(
            U=U,
            pivots=pivots,
            D=D,
            amplification=_tensor_amplification(Up),
            slice_conditions=conds,
            fourier_slice=int(piv.get("fourier_slice", 1)),
            tail_estimate=meta.get("tail_estimate"),
            meta=extra,
        )
    if method == "qdeim":
        if U.shape[2] != 1:
            raise ConsistencyError("Q-DEIM bundle must hold q = 1 tensors")
        U = np.ascontiguousarray(U[:, :, 0])
        return QDeimModel(
            U=U,
            pivots=pivots,
            D=np.ascontiguousarray(D[:, :, 0]),
            amplification=_matrix_amplification(U[pivots]),
            meta=extra,
        )
    raise ConsistencyError(f"unknown method {method!r}")


def _fmt(x):
    return format(float(x), ".17g")


def _finite_or_none(x):
    return x if math.isfinite(x) else None


def report_to_dict(report):
    return {
        "method": report.method,
        "rank": report.rank,
        "amplification": float(report.amplification),
        "eps_abs": _finite_or_none(report.eps_abs),
        "eps_rel": _finite_or_none(report.eps_rel),
        "n_samples": len(report),
        "warnings": report.warnings,
        "samples": list(report.rows()),
    }


COLUMNS = ["sample_index", "true_error", "proj_error", "bound", "rel_frob_error"]


def write_report(path, report, fmt=None):
    """Write an :class:`~tqdeim.interp.ErrorReport` as CSV or JSON.

    The format defaults to the file suffix.  Floats carry 17 significant
    digits so they round-trip exactly.
    """
    fmt = fmt or ("json" if str(path).endswith(".json") else "csv")
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COLUMNS)
            for row in report.rows():
                w.writerow([row["sample_index"]] + [_fmt(row[c]) for c in COLUMNS[1:]])
    elif fmt == "json":
        # json.dumps uses repr, which is already round-trip exact
        _dump_json(path, report_to_dict(report))
    else:
        raise ValueError(f"unknown report format {fmt!r}")
