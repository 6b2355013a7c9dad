"""Dataset splitting, label masks, record building and batch order."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..chem import parse_smiles
from ..juncture import OOVCluster, Vocab, build_vocab, decompose
from ..model import MolRecord, build_record
from ..props import NormStats, label_mask
from .config import RunConfig
from .errors import DatasetTooSmall

# vocabulary-independent decomposition and candidate work, shared by runs in one process
_RECORD_CACHE: dict = {}
_TREES: dict = {}


def tree_of(smiles: str):
    t = _TREES.get(smiles)
    if t is None:
        t = _TREES[smiles] = decompose(parse_smiles(smiles))
    return t


def vocab_for(smiles) -> Vocab:
    """Vocabulary of the given (training) molecules."""
    return build_vocab(tree_of(s) for s in smiles)


def seed_streams(seed: int):
    """Independent generators: split, label mask, parameter init, training."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(4)]


def split_seed(seed: int):
    return seed_streams(seed)[0]


@dataclass
class Split:
    train: np.ndarray  # row indices into the dataset
    val: np.ndarray
    test: np.ndarray


def split_dataset(keys, cfg: RunConfig, rng=None) -> Split:
    """Seeded shuffle into test (fixed size), val (fraction of the rest) and train."""
    keys = list(keys)
    n = len(keys)
    if len(set(keys)) != n:
        raise ValueError("dataset keys must be unique canonical SMILES")
    rest = n - cfg.test_size
    n_val = int(round(cfg.val_fraction * rest)) if rest > 0 else 0
    if rest <= 0 or n_val < 1 or rest - n_val < 1:
        raise DatasetTooSmall(f"{n} molecules cannot hold a {cfg.test_size}-molecule test set, "
                              f"a validation set and a training set")
    rng = rng if rng is not None else split_seed(cfg.seed)
    order = rng.permutation(n)
    test = np.sort(order[:cfg.test_size])
    val = np.sort(order[cfg.test_size:cfg.test_size + n_val])
    train = np.sort(order[cfg.test_size + n_val:])
    assert not set(test.tolist()) & set(train.tolist())
    return Split(train, val, test)


@dataclass
class TrainData:
    """Everything the optimizer reads: records and normalized labels of the training split."""
    records: list[MolRecord]
    y: np.ndarray  # normalized; NaN where unobserved
    eval_sets: dict  # name -> (records, raw labels)
    stats: NormStats
    skipped_oov: dict  # split name -> count

    @property
    def labeled(self) -> np.ndarray:
        return np.flatnonzero(~np.isnan(self.y))

    @property
    def unlabeled(self) -> np.ndarray:
        return np.flatnonzero(np.isnan(self.y))


def make_records(smiles, vocab: Vocab, cap: int, candidates: bool = True):
    """(records, kept row indices, number skipped for unknown clusters)."""
    records, kept, skipped = [], [], 0
    for i, s in enumerate(smiles):
        try:
            tree = tree_of(s)
            records.append(build_record(tree.mol, vocab, cap, tree=tree, candidates=candidates, cache=_RECORD_CACHE))
        except OOVCluster:
            skipped += 1
            continue
        kept.append(i)
    return records, np.array(kept, dtype=np.int64), skipped


def train_mask(n_train: int, cfg: RunConfig, rng=None) -> np.ndarray:
    if rng is None:
        rng = seed_streams(cfg.seed)[1]
    return label_mask(n_train, cfg.label_fraction, rng)


def prepare(keys, raw, vocab: Vocab, split: Split, cfg: RunConfig, mask=None, stats: NormStats | None = None,
            eval_splits=("val", "test")) -> TrainData:
    """Build training records (with label mask) and evaluation records."""
    keys = list(keys)
    raw = np.asarray(raw, dtype=float)
    tr = split.train
    if mask is None:
        mask = train_mask(len(tr), cfg)
    if not mask.any():
        raise DatasetTooSmall("no observed labels in the training split")
    if stats is None:
        stats = NormStats.fit(raw[tr][mask])
    recs, kept, skipped = make_records([keys[i] for i in tr], vocab, cfg.candidate_cap)
    y = np.where(mask, stats.normalize(raw[tr]), np.nan)[kept]
    skipped_oov = {"train": skipped}
    evals = {}
    for name in eval_splits:
        idx = getattr(split, name)
        er, ek, es = make_records([keys[i] for i in idx], vocab, cfg.candidate_cap, candidates=False)
        evals[name] = (er, raw[idx][ek])
        skipped_oov[name] = es
    return TrainData(recs, y, evals, stats, skipped_oov)


def chunks(idx, size):
    return [idx[i:i + size] for i in range(0, len(idx), size)]


def interleave(n_labeled: int, n_unlabeled: int) -> list[bool]:
    """Proportional round-robin order of batch kinds (True = labeled)."""
    out = []
    a = b = 0
    while a < n_labeled or b < n_unlabeled:
        take_l = b >= n_unlabeled or (a < n_labeled and (a + 0.5) * n_unlabeled <= (b + 0.5) * n_labeled)
        out.append(take_l)
        if take_l:
            a += 1
        else:
            b += 1
    return out
