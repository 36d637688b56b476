"""Small shared helpers: seeded linear algebra, stable JSON, checksums."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np


def orthonormal_rows(rows: int, cols: int, seed: int) -> np.ndarray:
    """Seeded matrix with orthonormal rows, built from the QR of a Gaussian draw.

    Signs are fixed from the R diagonal so the construction is unique.
    Requires rows <= cols.
    """
    if rows > cols:
        raise ValueError(f"cannot build {rows} orthonormal rows in {cols} dimensions")
    rng = np.random.default_rng(seed)
    gauss = rng.standard_normal((cols, rows))
    q, r = np.linalg.qr(gauss)
    q = q * np.sign(np.diag(r))
    return np.ascontiguousarray(q.T, dtype=np.float32)


def sigmoid(x: float) -> float:
    # overflow-safe for large |x|
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    z = np.exp(x)
    return float(z / (1.0 + z))


def stable_json_dumps(obj) -> str:
    """Canonical JSON used for on-disk artifacts that must be byte-reproducible."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def write_json(path: Path | str, obj) -> None:
    Path(path).write_bytes(stable_json_dumps(obj).encode("utf-8") + b"\n")


def sha256_file(path: Path | str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()
