"""Generation loop and its report."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ..chem import ChemError, is_valid, parse_smiles, write_smiles
from ..model import DecodeOverflow, decode
from ..props import PropertyError, PropertyKind, crippen_logp, mol_wt, qed

TOLERANCE = 0.05


def within_target(values, target: float, tol: float = TOLERANCE) -> np.ndarray:
    """Elementwise |value - target| <= tol * |target|."""
    v = np.asarray(values, dtype=float)
    return np.abs(v - target) <= tol * abs(target)


@dataclass
class GenReport:
    n_attempted: int = 0
    n_valid: int = 0
    n_unique: int = 0
    n_novel: int = 0
    target: float | None = None
    kind: PropertyKind = PropertyKind.LogP
    rows: list = field(default_factory=list)  # (smiles, molwt, logp, qed)

    @property
    def smiles(self) -> list[str]:
        return [r[0] for r in self.rows]

    def values(self, kind=None) -> np.ndarray:
        col = {PropertyKind.MolWt: 1, PropertyKind.LogP: 2, PropertyKind.QED: 3}[PropertyKind.parse(kind or self.kind)]
        return np.array([r[col] for r in self.rows], dtype=float)

    @property
    def pct_within_5(self) -> float | None:
        if self.target is None or not self.rows:
            return None
        vals = self.values()
        vals = vals[~np.isnan(vals)]
        return float(within_target(vals, self.target).mean()) if len(vals) else None

    def summary(self) -> str:
        vals = self.values()
        lines = [
            f"n_attempted = {self.n_attempted}",
            f"n_valid = {self.n_valid}",
            f"n_unique = {self.n_unique}",
            f"n_novel = {self.n_novel}",
            f"n_accepted = {len(self.rows)}",
            f"validity = {self.n_valid / self.n_attempted if self.n_attempted else 0.0:.4f}",
            f"property = {self.kind.value}",
            f"mean_{self.kind.value} = {np.nanmean(vals) if np.isfinite(vals).any() else float('nan'):.4f}",
        ]
        if self.target is not None:
            lines.append(f"target = {self.target}")
            pct = self.pct_within_5
            lines.append(f"pct_within_5 = {pct if pct is not None else float('nan'):.4f}")
        return "\n".join(lines) + "\n"

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["smiles", "molwt", "logp", "qed"])
            for s, a, b, c in self.rows:
                w.writerow([s, f"{a:.4f}", f"{b:.4f}", f"{c:.4f}"])


def score_row(mol, strict: bool = True) -> tuple:
    """(smiles, molwt, logp, qed); with ``strict`` off, properties that cannot be typed become NaN."""
    if strict:
        return write_smiles(mol), mol_wt(mol), crippen_logp(mol), qed(mol)
    vals = []
    for fn in (crippen_logp, qed):
        try:
            vals.append(fn(mol))
        except PropertyError:
            vals.append(float("nan"))
    return (write_smiles(mol), mol_wt(mol), *vals)


def generate(state, n: int = 3000, max_attempts: int = 10000, target: float | None = None, seed: int = 0,
             training=frozenset(), novelty: bool = True) -> GenReport:
    """Sample until ``n`` accepted molecules or ``max_attempts`` decodes.

    ``target`` is in raw property units. Accepted molecules are valid, not
    repeats within the run and (with ``novelty``) absent from ``training``.
    """
    rng = np.random.default_rng(seed)
    z = state.cfg.z_dim
    report = GenReport(target=target, kind=state.cfg.property)
    y_fixed = None if target is None else float(state.stats.normalize(target))
    seen = set()
    while len(report.rows) < n and report.n_attempted < max_attempts:
        report.n_attempted += 1
        zt = rng.standard_normal(z)
        zg = rng.standard_normal(z)
        y = y_fixed if y_fixed is not None else float(rng.standard_normal())
        try:
            mol, _ = decode(state.net, state.compat, zt, zg, y, rng)
            smi = write_smiles(mol)
            if not is_valid(parse_smiles(smi)):
                continue
        except (DecodeOverflow, ChemError):
            continue
        report.n_valid += 1
        if smi in seen:
            continue
        seen.add(smi)
        report.n_unique += 1
        if smi in training:
            if novelty:
                continue
        else:
            report.n_novel += 1
        report.rows.append(score_row(mol, strict=False))
    return report
