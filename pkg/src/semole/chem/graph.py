"""Molecular graph data model."""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum

from .elements import Element
from .errors import ChemError


class BondOrder(IntEnum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4

    @property
    def valence(self) -> int:
        """Valence contributed to each endpoint (aromatic bonds count 1; the
        shared pi electron is assigned during kekulization)."""
        return 1 if self is BondOrder.AROMATIC else int(self)

    @property
    def symbol(self) -> str:
        return {1: "-", 2: "=", 3: "#", 4: ":"}[int(self)]


@dataclass(frozen=True)
class Atom:
    element: Element
    charge: int = 0
    aromatic: bool = False
    implicit_h: int = 0
    # hydrogen count pinned by the input (bracket atom); None means computed
    explicit_h: int | None = None

    @property
    def symbol(self) -> str:
        return self.element.symbol

    def evolve(self, **changes) -> "Atom":
        return replace(self, **changes)


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: BondOrder

    def other(self, i: int) -> int:
        return self.b if i == self.a else self.a


class MolGraph:
    """Atoms plus typed bonds with per-atom incidence lists.

    Instances are treated as immutable; every transformation returns a new
    graph.
    """

    __slots__ = ("atoms", "bonds", "adjacency", "_pair", "_cache")

    def __init__(self, atoms, bonds):
        self.atoms: tuple[Atom, ...] = tuple(atoms)
        self.bonds: tuple[Bond, ...] = tuple(bonds)
        n = len(self.atoms)
        adjacency: list[list[int]] = [[] for _ in range(n)]
        pair: dict[tuple[int, int], int] = {}
        for k, bond in enumerate(self.bonds):
            if not (0 <= bond.a < n and 0 <= bond.b < n):
                raise ChemError(f"bond {k} references a missing atom")
            if bond.a == bond.b:
                raise ChemError(f"bond {k} is a self loop on atom {bond.a}")
            key = (min(bond.a, bond.b), max(bond.a, bond.b))
            if key in pair:
                raise ChemError(f"duplicate bond between atoms {key[0]} and {key[1]}")
            pair[key] = k
            adjacency[bond.a].append(k)
            adjacency[bond.b].append(k)
        self.adjacency: tuple[tuple[int, ...], ...] = tuple(tuple(a) for a in adjacency)
        self._pair = pair
        self._cache: dict = {}

    def __len__(self):
        return len(self.atoms)

    def __repr__(self):
        return f"MolGraph(atoms={len(self.atoms)}, bonds={len(self.bonds)})"

    @property
    def num_atoms(self) -> int:
        return len(self.atoms)

    def neighbors(self, i: int) -> list[int]:
        return [self.bonds[k].other(i) for k in self.adjacency[i]]

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    def bond_between(self, i: int, j: int) -> Bond | None:
        k = self._pair.get((min(i, j), max(i, j)))
        return None if k is None else self.bonds[k]

    def bond_index(self, i: int, j: int) -> int | None:
        return self._pair.get((min(i, j), max(i, j)))

    def bond_valence(self, i: int) -> int:
        return sum(self.bonds[k].order.valence for k in self.adjacency[i])

    def is_connected(self) -> bool:
        n = len(self.atoms)
        if n == 0:
            return False
        seen = {0}
        stack = [0]
        while stack:
            i = stack.pop()
            for j in self.neighbors(i):
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        return len(seen) == n

    def relabel(self, order) -> "MolGraph":
        """Return the graph with atom ``order[k]`` moved to position ``k``."""
        inverse = {old: new for new, old in enumerate(order)}
        atoms = [self.atoms[old] for old in order]
        bonds = [Bond(inverse[b.a], inverse[b.b], b.order) for b in self.bonds]
        bonds.sort(key=lambda b: (min(b.a, b.b), max(b.a, b.b)))
        return MolGraph(atoms, bonds)

    def subgraph(self, atom_indices) -> "MolGraph":
        """Induced subgraph on ``atom_indices`` (kept in the given order)."""
        index = {old: new for new, old in enumerate(atom_indices)}
        atoms = [self.atoms[i] for i in atom_indices]
        bonds = [Bond(index[b.a], index[b.b], b.order) for b in self.bonds
                 if b.a in index and b.b in index]
        return MolGraph(atoms, bonds)


def without_hydrogens(mol: MolGraph) -> tuple[MolGraph, list[int]]:
    """Fold neutral single-bonded explicit H atoms into their neighbor's hydrogen count.

    Returns the folded graph and, for each kept atom, its index in ``mol``.
    """
    fold = {}
    for i, atom in enumerate(mol.atoms):
        if atom.symbol == "H" and atom.charge == 0 and mol.degree(i) == 1:
            j = mol.neighbors(i)[0]
            if mol.atoms[j].symbol != "H" and mol.bond_between(i, j).order is BondOrder.SINGLE:
                fold[i] = j
    if not fold:
        return mol, list(range(mol.num_atoms))
    gained = {}
    for j in fold.values():
        gained[j] = gained.get(j, 0) + 1
    kept = [i for i in range(mol.num_atoms) if i not in fold]
    atoms = []
    for i in kept:
        a, extra = mol.atoms[i], gained.get(i, 0)
        if extra:
            pinned = None if a.explicit_h is None else a.explicit_h + extra
            a = a.evolve(implicit_h=a.implicit_h + extra, explicit_h=pinned)
        atoms.append(a)
    return MolGraph(atoms, mol.subgraph(kept).bonds), kept
