"""Wildman-Crippen atom-contribution logP."""
from __future__ import annotations

from functools import lru_cache
from importlib import resources

from ..chem import MolGraph, without_hydrogens
from ..chem.pattern import compile_pattern, match_atom
from .errors import UntypedAtom


@lru_cache(maxsize=None)
def crippen_table():
    """Ordered (type, contribution, compiled pattern) rows; hydrogen rows separate."""
    heavy, hydrogen = [], []
    text = resources.files("semole.props").joinpath("data/crippen.txt").read_text()
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        name, value, pattern = line.split()
        row = (name, float(value), compile_pattern(pattern))
        is_h = name[0] == "H" and name != "Hal"
        (hydrogen if is_h else heavy).append(row)
    return heavy, hydrogen


def atom_types(mol: MolGraph) -> list[tuple[str, str | None]]:
    """(heavy atom type, type of its hydrogens) per atom after folding explicit H; first match wins."""
    heavy, hydrogen = crippen_table()
    mol, kept = without_hydrogens(mol)
    out = []
    for i, atom in enumerate(mol.atoms):
        if atom.symbol == "H":
            # H that could not be folded (H2, charged or bridging): hydrogen row at its neighbor
            anchor = mol.neighbors(i)[0] if mol.degree(i) else i
            out.append((next(name for name, _, pat in hydrogen if match_atom(pat, mol, anchor)), None))
            continue
        t = next((name for name, _, pat in heavy if match_atom(pat, mol, i)), None)
        if t is None:
            raise UntypedAtom(kept[i], atom.symbol)
        th = None
        if atom.implicit_h:
            th = next(name for name, _, pat in hydrogen if match_atom(pat, mol, i))
        out.append((t, th))
    return out


@lru_cache(maxsize=None)
def _contributions():
    heavy, hydrogen = crippen_table()
    return {name: v for name, v, _ in heavy + hydrogen}


def crippen_logp(mol: MolGraph) -> float:
    contrib = _contributions()
    mol, _ = without_hydrogens(mol)
    total = 0.0
    for i, (t, th) in enumerate(atom_types(mol)):
        total += contrib[t]
        if th is not None:
            total += mol.atoms[i].implicit_h * contrib[th]
    return total
