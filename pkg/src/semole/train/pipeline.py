"""Dataset-to-trainer wiring shared by the CLI, the estimator and the tests."""
from __future__ import annotations

import numpy as np

from ..props import read_label_csv
from .config import RunConfig
from .data import TrainData, prepare, seed_streams, split_dataset, train_mask, vocab_for
from .loop import TrainState, init_state


def load_dataset(path, kind):
    """(canonical keys, raw values) with repeated molecules dropped after their first row."""
    keys, raw, seen = [], [], set()
    for k, v in read_label_csv(path, kind):
        if k in seen:
            continue
        seen.add(k)
        keys.append(k)
        raw.append(v)
    return keys, np.array(raw, dtype=float)


def setup(cfg: RunConfig, keys, raw, state: TrainState | None = None, vocab=None, stats=None):
    """Split, build the vocabulary and records, and initialize (or adopt) a training state."""
    streams = seed_streams(cfg.seed)
    split = split_dataset(keys, cfg, streams[0])
    mask = train_mask(len(split.train), cfg, streams[1])
    if state is not None:
        vocab, stats = state.vocab, state.stats
    elif vocab is None:
        vocab = vocab_for([keys[i] for i in split.train])
    data: TrainData = prepare(keys, raw, vocab, split, cfg, mask, stats=stats)
    if state is None:
        state = init_state(cfg, vocab, data.stats)
    return state, data, split
