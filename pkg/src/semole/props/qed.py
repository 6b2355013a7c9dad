"""Quantitative estimate of drug-likeness (approximate descriptor set)."""
from __future__ import annotations

import math
from dataclasses import astuple, dataclass
from functools import lru_cache
from importlib import resources

from ..chem import BondOrder, MolGraph, sssr, without_hydrogens
from ..chem.pattern import compile_pattern, find_matches, has_match
from .crippen import crippen_logp
from .molwt import mol_wt

DESCRIPTORS = ("MW", "ALOGP", "HBA", "HBD", "PSA", "ROTB", "AROM", "ALERTS")


@dataclass(frozen=True)
class QEDDescriptors:
    MW: float
    ALOGP: float
    HBA: int
    HBD: int
    PSA: float
    ROTB: int
    AROM: int
    ALERTS: int


def _read(name):
    text = resources.files("semole.props").joinpath("data", name).read_text()
    return [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]


@lru_cache(maxsize=None)
def qed_parameters() -> dict[str, tuple[float, tuple[float, ...]]]:
    """descriptor -> (weight, (A, B, C, D, E, F, DMAX))."""
    out = {}
    for row in _read("qed.txt"):
        out[row[0]] = (float(row[1]), tuple(float(x) for x in row[2:9]))
    return out


@lru_cache(maxsize=None)
def qed_patterns() -> dict[str, list]:
    out: dict[str, list] = {}
    for row in _read("qed_patterns.txt"):
        out.setdefault(row[0], []).append(compile_pattern(row[1]))
    return out


@lru_cache(maxsize=None)
def _tpsa_table():
    table = {}
    for row in _read("tpsa.txt"):
        key = (row[0],) + tuple(int(x) for x in row[1:9])
        table[key] = float(row[9])
    return table


def tpsa(mol: MolGraph) -> float:
    """Topological polar surface area from N and O contributions."""
    table = _tpsa_table()
    in3 = set()
    for ring in sssr(mol):
        if len(ring) == 3:
            in3.update(ring)
    total = 0.0
    for i, atom in enumerate(mol.atoms):
        if atom.symbol not in ("N", "O"):
            continue
        counts = {BondOrder.SINGLE: 0, BondOrder.DOUBLE: 0, BondOrder.TRIPLE: 0, BondOrder.AROMATIC: 0}
        for k in mol.adjacency[i]:
            counts[mol.bonds[k].order] += 1
        key = (atom.symbol, int(atom.aromatic), atom.implicit_h, atom.charge,
               counts[BondOrder.SINGLE], counts[BondOrder.DOUBLE], counts[BondOrder.TRIPLE],
               counts[BondOrder.AROMATIC], int(i in in3))
        value = table.get(key)
        if value is None:
            value = table.get(key[:-1] + (0,), 0.0)
        total += value
    return total


def aromatic_rings(mol: MolGraph) -> int:
    return sum(1 for r in sssr(mol) if all(mol.atoms[a].aromatic for a in r))


def descriptors(mol: MolGraph) -> QEDDescriptors:
    mw = mol_wt(mol)
    mol, _ = without_hydrogens(mol)
    pats = qed_patterns()
    hba = sum(len(find_matches(p, mol)) for p in pats["acceptor"])
    hbd = sum(len(find_matches(p, mol)) for p in pats["donor"])
    rotb = len(find_matches(pats["rotatable"][0], mol))
    alerts = sum(1 for p in pats["alert"] if has_match(p, mol))
    return QEDDescriptors(mw, crippen_logp(mol), hba, hbd, tpsa(mol), rotb,
                          aromatic_rings(mol), alerts)


def ads(x: float, params) -> float:
    """Asymmetric double sigmoid desirability, scaled by its maximum."""
    a, b, c, d, e, f, dmax = params
    rise = 1.0 + math.exp(-(x - c + d / 2.0) / e)
    fall = 1.0 + math.exp(-(x - c - d / 2.0) / f)
    return (a + b / rise * (1.0 - 1.0 / fall)) / dmax


def qed_from_descriptors(desc: QEDDescriptors) -> float:
    params = qed_parameters()
    num = den = 0.0
    for name, x in zip(DESCRIPTORS, astuple(desc)):
        w, p = params[name]
        num += w * math.log(max(ads(x, p), 1e-300))
        den += w
    return math.exp(num / den)


def qed(mol: MolGraph) -> float:
    """Weighted geometric mean of eight descriptor desirabilities, in (0, 1]."""
    return qed_from_descriptors(descriptors(mol))
