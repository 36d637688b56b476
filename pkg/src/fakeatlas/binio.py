"""Binary artifact container: one-line JSON header + raw little-endian float32 payload.

Used by the projection artifact, detector checkpoints, and relevance caches.
The header is UTF-8 JSON terminated by a single newline; the payload follows
immediately and is the concatenation of the declared tensors in row-major
order.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DataError
from .util import stable_json_dumps

F32 = np.dtype("<f4")


def write_artifact(path: Path | str, header: dict, arrays: list[np.ndarray]) -> None:
    payload = b"".join(np.ascontiguousarray(a, dtype=F32).tobytes() for a in arrays)
    blob = stable_json_dumps(header).encode("utf-8") + b"\n" + payload
    Path(path).write_bytes(blob)


def read_artifact(path: Path | str) -> tuple[dict, bytes]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"artifact not found: {path}")
    blob = path.read_bytes()
    sep = blob.find(b"\n")
    if sep < 0:
        raise DataError(f"artifact missing header delimiter: {path}")
    try:
        header = json.loads(blob[:sep].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"artifact header is not valid JSON: {path}") from exc
    return header, blob[sep + 1 :]


class PayloadReader:
    """Sequential reader over the float32 payload of an artifact."""

    def __init__(self, payload: bytes, source: str = "<payload>"):
        self.payload = payload
        self.offset = 0
        self.source = source

    def take(self, shape: tuple[int, ...]) -> np.ndarray:
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        nbytes = count * 4
        if self.offset + nbytes > len(self.payload):
            raise DataError(f"artifact payload truncated: {self.source}")
        arr = np.frombuffer(self.payload, dtype=F32, count=count, offset=self.offset)
        self.offset += nbytes
        return arr.reshape(shape).copy()

    def expect_exhausted(self) -> None:
        if self.offset != len(self.payload):
            raise DataError(f"artifact payload has trailing bytes: {self.source}")
