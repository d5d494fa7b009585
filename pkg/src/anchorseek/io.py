"""Matrix files: binary container, MatrixMarket and headerless CSV."""

import struct
from pathlib import Path

import numpy as np
import scipy.io

from .sample_model import SampledMatrix

MAGIC = b"ANCHSEEK"
VERSION = 1
_HEADER = struct.Struct("<8sIQQ")


class FormatError(ValueError):
    pass


def save_binary(a, path):
    """Write ``a`` (SampledMatrix or array) as magic, version, m, n, then
    row-major little-endian float64 entries."""
    dense = a.to_dense() if isinstance(a, SampledMatrix) else np.asarray(a, dtype=np.float64)
    m, n = dense.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, m, n))
        fh.write(np.ascontiguousarray(dense, dtype="<f8").tobytes())


def load_binary(path):
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError("file too short for a matrix header")
    magic, version, m, n = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError("bad magic bytes")
    if version != VERSION:
        raise FormatError(f"unsupported container version {version}")
    body = raw[_HEADER.size:]
    if len(body) != 8 * m * n:
        raise FormatError(f"expected {8 * m * n} payload bytes, found {len(body)}")
    return np.frombuffer(body, dtype="<f8").reshape(m, n).astype(np.float64)


def read_matrix_market(path):
    a = scipy.io.mmread(str(path))
    return a.toarray() if scipy.sparse.issparse(a) else np.asarray(a, dtype=np.float64)


def write_matrix_market(a, path, comment=""):
    scipy.io.mmwrite(str(path), np.asarray(a, dtype=np.float64), comment=comment, precision=17)


def read_csv(path):
    if not Path(path).read_text().strip():
        raise FormatError("empty CSV matrix")
    return np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)


def read_matrix(path):
    """Dense array from ``.mtx``/``.mm``, ``.csv`` or the binary container."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix in (".mtx", ".mm"):
        return read_matrix_market(path)
    if suffix == ".csv":
        return read_csv(path)
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
    if head == MAGIC:
        return load_binary(path)
    raise FormatError(f"unrecognised matrix format: {path.name}")


def load_sampled(path):
    return SampledMatrix(read_matrix(path))
