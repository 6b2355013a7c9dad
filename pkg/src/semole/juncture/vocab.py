"""Cluster vocabulary."""
from __future__ import annotations

from pathlib import Path

from ..chem import parse_smiles
from .errors import EmptyDataset, OOVCluster
from .tree import decompose


class Vocab:
    """Sorted list of canonical cluster labels with an index lookup."""

    def __init__(self, labels):
        self.labels = sorted(set(labels))
        self._index = {lab: i for i, lab in enumerate(self.labels)}

    def __len__(self):
        return len(self.labels)

    def __contains__(self, label):
        return label in self._index

    def __iter__(self):
        return iter(self.labels)

    def __eq__(self, other):
        return isinstance(other, Vocab) and self.labels == other.labels

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise OOVCluster(f"cluster {label!r} is not in the vocabulary") from None

    def __getitem__(self, i: int) -> str:
        return self.labels[i]

    def save(self, path):
        Path(path).write_text("".join(lab + "\n" for lab in self.labels))

    @classmethod
    def load(cls, path) -> "Vocab":
        lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
        return cls(ln for ln in lines if ln)


def build_vocab(molecules) -> Vocab:
    """Vocabulary of all cluster labels appearing in ``molecules``.

    Accepts SMILES strings, parsed graphs or junction trees.
    """
    labels = set()
    n = 0
    for m in molecules:
        n += 1
        if isinstance(m, str):
            m = parse_smiles(m)
        tree = m if hasattr(m, "clusters") else decompose(m)
        labels.update(tree.labels)
    if n == 0:
        raise EmptyDataset("cannot build a vocabulary from an empty dataset")
    return Vocab(labels)
