"""Binary model files.

Layout, all little-endian::

    offset  type        field
    0       4 bytes     magic b"RCCA"
    4       uint32      version (1)
    8       uint64      d_a
    16      uint64      d_b
    24      uint64      k
    32      uint32      hash_bits (0 when the data was not hashed text)
    36      int64       hash_seed (0 when not hashed)
    44      float64[]   X_a, d_a * k values, row-major
    ..      float64[]   X_b, d_b * k values, row-major
    ..      float64[]   correlations, k values
    ..      float64     lambda_a
    ..      float64     lambda_b
"""

import struct

import numpy as np

from .rcca import CcaModel

MAGIC = b"RCCA"
VERSION = 1
_HEADER = struct.Struct("<4sIQQQIq")


class ModelFileError(ValueError):
    pass


def save_model(path, model, hash_config=None):
    d_a, k = model.X_a.shape
    d_b = model.X_b.shape[0]
    bits = int(hash_config["bits"]) if hash_config else 0
    seed = int(hash_config["seed"]) if hash_config else 0
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, d_a, d_b, k, bits, seed))
        for arr in (model.X_a, model.X_b, model.correlations,
                    np.array([model.lambda_a, model.lambda_b])):
            f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_model(path):
    """Returns ``(CcaModel, hash_config or None)``."""
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < _HEADER.size:
        raise ModelFileError(f"{path}: truncated header")
    magic, version, d_a, d_b, k, bits, seed = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise ModelFileError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise ModelFileError(f"{path}: unsupported version {version}")
    sizes = [d_a * k, d_b * k, k, 2]
    expected = _HEADER.size + 8 * sum(sizes)
    if len(blob) != expected:
        raise ModelFileError(f"{path}: expected {expected} bytes, found {len(blob)}")
    values = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size).astype(np.float64)
    parts = np.split(values, np.cumsum(sizes)[:-1])
    model = CcaModel(parts[0].reshape(d_a, k), parts[1].reshape(d_b, k), parts[2],
                     float(parts[3][0]), float(parts[3][1]), 0, 0,
                     {"solver": "file", "path": str(path)})
    hash_config = {"bits": bits, "seed": seed} if bits else None
    return model, hash_config
