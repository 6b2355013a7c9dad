"""Parameter buffers: a text manifest followed by little-endian float64 data."""
from __future__ import annotations

import numpy as np

MAGIC = b"SMPARAMS1\n"


class CorruptBuffer(ValueError):
    pass


def dump_arrays(arrays: dict[str, np.ndarray]) -> bytes:
    lines = []
    chunks = []
    for name, arr in arrays.items():
        arr = np.asarray(arr, dtype="<f8")
        if " " in name or "\n" in name:
            raise ValueError(f"bad array name {name!r}")
        lines.append(f"{name} {' '.join(str(d) for d in arr.shape)}")
        chunks.append(np.ascontiguousarray(arr).tobytes())
    manifest = ("\n".join(lines)).encode("utf-8")
    header = MAGIC + f"{len(manifest)}\n".encode() + manifest + b"\n"
    return header + b"".join(chunks)


def load_arrays(blob: bytes) -> dict[str, np.ndarray]:
    if not blob.startswith(MAGIC):
        raise CorruptBuffer("missing parameter-buffer header")
    rest = blob[len(MAGIC):]
    nl = rest.find(b"\n")
    try:
        n = int(rest[:nl])
    except ValueError:
        raise CorruptBuffer("bad manifest length") from None
    manifest = rest[nl + 1:nl + 1 + n].decode("utf-8", errors="replace")
    data = rest[nl + 1 + n + 1:]
    out = {}
    offset = 0
    for line in manifest.splitlines() if manifest else []:
        parts = line.split()
        name, shape = parts[0], tuple(int(x) for x in parts[1:])
        count = int(np.prod(shape)) if shape else 1
        nbytes = 8 * count
        if offset + nbytes > len(data):
            raise CorruptBuffer(f"buffer for {name} is truncated")
        out[name] = np.frombuffer(data[offset:offset + nbytes], dtype="<f8").reshape(shape).astype(np.float64)
        offset += nbytes
    if offset != len(data):
        raise CorruptBuffer(f"{len(data) - offset} trailing bytes after the last buffer")
    return out
