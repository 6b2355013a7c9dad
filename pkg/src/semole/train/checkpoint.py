"""Checkpoint files: a text header, a JSON manifest, then float64 buffers."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..juncture import Vocab
from ..props import NormStats
from ..tensor import CorruptBuffer, dump_arrays, load_arrays
from .config import RunConfig
from .errors import CorruptCheckpoint, VersionMismatch

MAGIC = b"SEMOLE-CHECKPOINT\n"
VERSION = 1


@dataclass
class Checkpoint:
    config: RunConfig
    vocab: Vocab
    stats: NormStats
    params: dict  # name -> array
    epoch: int  # completed epochs
    rng_state: dict
    adam_step: int = 0
    adam_m: dict = field(default_factory=dict)
    adam_v: dict = field(default_factory=dict)
    best_val: float = float("inf")
    extra: dict = field(default_factory=dict)  # e.g. the dataset path


def save_checkpoint(path, ck: Checkpoint):
    blobs = [dump_arrays(ck.params), dump_arrays(ck.adam_m), dump_arrays(ck.adam_v)]
    manifest = {
        "version": VERSION,
        "config": ck.config.to_dict(),
        "vocab": list(ck.vocab.labels),
        "stats": [ck.stats.mean, ck.stats.std],
        "epoch": ck.epoch,
        "rng_state": ck.rng_state,
        "adam_step": ck.adam_step,
        "best_val": None if not np.isfinite(ck.best_val) else ck.best_val,
        "extra": ck.extra,
        "sections": [len(b) for b in blobs],
    }
    text = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(f"version {VERSION}\nmanifest {len(text)}\n".encode())
        fh.write(text)
        fh.write(b"\n")
        for b in blobs:
            fh.write(b)


def _read_line(blob, pos, prefix):
    nl = blob.find(b"\n", pos)
    if nl < 0 or not blob[pos:nl].startswith(prefix):
        raise CorruptCheckpoint(f"expected a '{prefix.decode()}' header line")
    return blob[pos + len(prefix):nl], nl + 1


def load_checkpoint(path, expect: RunConfig | None = None) -> Checkpoint:
    """Read a checkpoint; ``expect`` checks architecture compatibility."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise CorruptCheckpoint(f"cannot read {path}: {exc.strerror}") from None
    if not blob.startswith(MAGIC):
        raise CorruptCheckpoint("not a SeMole checkpoint")
    pos = len(MAGIC)
    ver, pos = _read_line(blob, pos, b"version ")
    try:
        version = int(ver)
    except ValueError:
        raise CorruptCheckpoint("bad version line") from None
    if version != VERSION:
        raise VersionMismatch(f"checkpoint format {version}, this build reads {VERSION}")
    size, pos = _read_line(blob, pos, b"manifest ")
    try:
        n = int(size)
        manifest = json.loads(blob[pos:pos + n].decode("utf-8"))
    except (ValueError, UnicodeDecodeError):
        raise CorruptCheckpoint("unreadable manifest") from None
    pos += n + 1
    try:
        sections = [int(s) for s in manifest["sections"]]
        cfg = RunConfig.from_dict(manifest["config"])
        vocab = Vocab(manifest["vocab"])
        stats = NormStats(*manifest["stats"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptCheckpoint(f"incomplete manifest: {exc}") from None
    if pos + sum(sections) != len(blob):
        raise CorruptCheckpoint(f"expected {pos + sum(sections)} bytes, file has {len(blob)}")
    arrays = []
    for length in sections:
        try:
            arrays.append(load_arrays(blob[pos:pos + length]))
        except CorruptBuffer as exc:
            raise CorruptCheckpoint(str(exc)) from None
        pos += length
    if expect is not None:
        for key in ("z_dim", "hidden", "depth"):
            if getattr(expect, key) != getattr(cfg, key):
                raise VersionMismatch(f"checkpoint {key}={getattr(cfg, key)}, config wants {getattr(expect, key)}")
    best = manifest.get("best_val")
    return Checkpoint(cfg, vocab, stats, arrays[0], int(manifest["epoch"]), manifest["rng_state"],
                      int(manifest.get("adam_step", 0)), arrays[1], arrays[2],
                      float("inf") if best is None else float(best), manifest.get("extra", {}))
