"""Property label ingestion and normalization."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from ..chem import ChemError, parse_smiles, write_smiles
from .errors import MalformedRow, NonFiniteValue
from .kinds import PropertyKind, compute


@dataclass(frozen=True)
class NormStats:
    mean: float
    std: float

    def __post_init__(self):
        if not (self.std > 0 and math.isfinite(self.std) and math.isfinite(self.mean)):
            raise ValueError(f"invalid normalization statistics ({self.mean}, {self.std})")

    def normalize(self, v):
        return (np.asarray(v, dtype=float) - self.mean) / self.std

    def denormalize(self, z):
        return np.asarray(z, dtype=float) * self.std + self.mean

    @classmethod
    def fit(cls, values) -> "NormStats":
        v = np.asarray(values, dtype=float)
        if v.size == 0:
            raise ValueError("no observed labels to normalize")
        std = float(v.std()) if v.size > 1 else 1.0
        return cls(float(v.mean()), std if std > 0 else 1.0)


@dataclass(frozen=True)
class LabelTable:
    """Rows in file order. ``values`` are normalized; ``raw`` keeps property units."""

    kind: PropertyKind
    keys: tuple[str, ...]  # canonical SMILES
    raw: np.ndarray
    values: np.ndarray
    mask: np.ndarray

    def __len__(self):
        return len(self.keys)

    def value(self, key: str) -> float:
        return float(self.values[self.keys.index(key)])

    def observed(self, key: str) -> bool:
        return bool(self.mask[self.keys.index(key)])

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.keys, self.values.tolist()))

    @property
    def observed_fraction(self) -> float:
        return float(self.mask.mean()) if len(self) else 0.0


def label_mask(n: int, fraction: float, seed) -> np.ndarray:
    """Seeded mask with exactly round(fraction * n) observed rows."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"label fraction must lie in [0, 1], got {fraction}")
    k = int(round(fraction * n))
    order = np.random.default_rng(seed).permutation(n)
    mask = np.zeros(n, dtype=bool)
    mask[order[:k]] = True
    return mask


def read_label_csv(path, kind):
    """(canonical smiles, value) rows of a ``smiles[,property]`` CSV."""
    kind = PropertyKind.parse(kind)
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise MalformedRow(1, "missing header")
        header = [h.strip().lower() for h in header]
        if header[0] != "smiles":
            raise MalformedRow(1, "first column must be 'smiles'")
        col = None
        if len(header) == 2:
            col = 1
        elif len(header) > 2:
            names = [PropertyKind.parse(h) if h in ("molwt", "logp", "qed") else None for h in header]
            if kind not in names:
                raise MalformedRow(1, f"no column for {kind.value}")
            col = names.index(kind)
        for row in reader:
            line = reader.line_num
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise MalformedRow(line, f"expected {len(header)} fields, got {len(row)}")
            try:
                mol = parse_smiles(row[0].strip())
            except ChemError as exc:
                raise MalformedRow(line, f"bad SMILES: {exc}") from None
            if col is None:
                value = compute(kind, mol)
            else:
                try:
                    value = float(row[col])
                except ValueError:
                    raise MalformedRow(line, f"not a number: {row[col]!r}") from None
                if not math.isfinite(value):
                    raise NonFiniteValue(line, f"non-finite value {row[col]!r}")
            rows.append((write_smiles(mol), value))
    return rows


def load_labels(csv_path, kind, label_fraction: float = 1.0, seed=0):
    """Read a label CSV, draw the observed mask and normalize by observed labels."""
    kind = PropertyKind.parse(kind)
    rows = read_label_csv(csv_path, kind)
    raw = np.array([v for _, v in rows], dtype=float)
    mask = label_mask(len(rows), label_fraction, seed)
    stats = NormStats.fit(raw[mask] if mask.any() else raw)
    table = LabelTable(kind, tuple(k for k, _ in rows), raw, stats.normalize(raw), mask)
    return table, stats
