"""Cluster fragments: standalone molecules cut out of a parent graph."""
from __future__ import annotations

from functools import lru_cache

from ..chem import Atom, Bond, BondOrder, MolGraph, kekulize, parse_smiles, sanitize, sssr
from ..chem.elements import charged_valences
from ..chem.errors import ChemError
from ..chem.canon import write_smiles_with_order
from ..chem.sanitize import pi_candidates

RING, BOND, SINGLETON = "ring", "bond", "singleton"


def fragment_kind(frag: MolGraph) -> str:
    if sssr(frag):
        return RING
    return BOND if frag.num_atoms == 2 else SINGLETON


@lru_cache(maxsize=None)
def fragment_from_label(label: str) -> MolGraph:
    """The fragment graph for a vocabulary label (atoms in label order)."""
    return parse_smiles(label)


@lru_cache(maxsize=None)
def label_kind(label: str) -> str:
    return fragment_kind(fragment_from_label(label))


def _pinned_fragment(mol: MolGraph, atoms, pin):
    index = {a: k for k, a in enumerate(atoms)}
    out = []
    for a in atoms:
        atom = mol.atoms[a]
        if pin[a]:
            sigma = sum(mol.bonds[b].order.valence for b in mol.adjacency[a]
                        if mol.bonds[b].other(a) in index)
            vmin = charged_valences(atom.element, atom.charge)[0]
            out.append(Atom(atom.element, atom.charge, True, 0, max(0, vmin - sigma)))
        else:
            out.append(Atom(atom.element, atom.charge, atom.aromatic))
    bonds = [Bond(index[b.a], index[b.b], b.order) for b in mol.bonds if b.a in index and b.b in index]
    return MolGraph(out, bonds)


def cut_fragment(mol: MolGraph, atoms, kind: str) -> tuple[str, list[int]]:
    """Canonical label of a cluster's fragment plus its atoms in label order.

    Atom ``k`` of ``fragment_from_label(label)`` is parent atom ``order[k]``.

    Bond and singleton fragments drop aromaticity. Ring fragments keep it;
    aromatic atoms that donate a lone pair in the parent (pyrrole-type N,
    exocyclic C=X carbons) get pinned hydrogens so the fragment reproduces
    the parent's pi pattern.
    """
    atoms = list(atoms)
    if kind != RING:
        index = {a: k for k, a in enumerate(atoms)}
        frag_atoms = [Atom(mol.atoms[a].element, mol.atoms[a].charge) for a in atoms]
        bonds = []
        for b in mol.bonds:
            if b.a in index and b.b in index:
                order = BondOrder.SINGLE if b.order is BondOrder.AROMATIC else b.order
                bonds.append(Bond(index[b.a], index[b.b], order))
        frag = sanitize(MolGraph(frag_atoms, bonds))
    else:
        cands = pi_candidates(mol)
        pin = {a: mol.atoms[a].aromatic and not cands[a] for a in atoms}
        try:
            frag = sanitize(_pinned_fragment(mol, atoms, pin))
        except ChemError:
            # the ring alone is not kekulizable: also pin atoms whose pi partner lies outside
            kek = kekulize(mol) or {}
            inside = set(atoms)
            for k, order in kek.items():
                b = mol.bonds[k]
                if order is BondOrder.DOUBLE and (b.a in inside) != (b.b in inside):
                    for a in (b.a, b.b):
                        if a in inside:
                            pin[a] = True
            frag = sanitize(_pinned_fragment(mol, atoms, pin))
    label, order = write_smiles_with_order(frag)
    return label, [atoms[k] for k in order]
