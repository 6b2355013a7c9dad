"""Reassembling molecular graphs from cluster fragments."""
from __future__ import annotations

from dataclasses import dataclass

from ..chem import Atom, Bond, BondOrder, MolGraph, sanitize, write_smiles
from ..chem.canon import symmetry_classes
from ..chem.elements import charged_valences
from ..chem.errors import ChemError
from .errors import InconsistentAttachment, NoLegalAttachment
from .fragments import RING, fragment_from_label, label_kind

DEFAULT_CANDIDATE_CAP = 40


class Assembly:
    """A partially assembled molecule built cluster by cluster.

    ``maps[node]`` lists, for every atom of that node's fragment (label
    order), the index of the assembled atom it became.
    """

    __slots__ = ("elements", "charges", "aromatic", "budget", "free", "bonds", "maps", "labels", "_mol")

    def __init__(self):
        self.elements = []
        self.charges = []
        self.aromatic = []
        self.budget = []  # pinned valence for lone-pair aromatic atoms, else None
        self.free = []  # some aromatic fragment left the atom unpinned
        self.bonds: dict[tuple[int, int], BondOrder] = {}
        self.maps: dict[int, tuple[int, ...]] = {}
        self.labels: dict[int, str] = {}
        self._mol = None

    @classmethod
    def start(cls, node: int, label: str) -> "Assembly":
        asm = cls()
        frag = fragment_from_label(label)
        mapping = []
        for i, atom in enumerate(frag.atoms):
            mapping.append(asm._new_atom(frag, i))
        for b in frag.bonds:
            asm.bonds[(min(mapping[b.a], mapping[b.b]), max(mapping[b.a], mapping[b.b]))] = b.order
        asm.maps[node] = tuple(mapping)
        asm.labels[node] = label
        return asm

    def copy(self) -> "Assembly":
        new = Assembly.__new__(Assembly)
        new.elements = list(self.elements)
        new.charges = list(self.charges)
        new.aromatic = list(self.aromatic)
        new.budget = list(self.budget)
        new.free = list(self.free)
        new.bonds = dict(self.bonds)
        new.maps = dict(self.maps)
        new.labels = dict(self.labels)
        new._mol = None
        return new

    @staticmethod
    def _pinned_budget(frag: MolGraph, i: int):
        atom = frag.atoms[i]
        if atom.explicit_h is None:
            return None
        return atom.implicit_h + frag.bond_valence(i)

    def _new_atom(self, frag, i) -> int:
        atom = frag.atoms[i]
        self.elements.append(atom.element)
        self.charges.append(atom.charge)
        self.aromatic.append(atom.aromatic)
        b = self._pinned_budget(frag, i)
        self.budget.append(b)
        self.free.append(atom.aromatic and b is None)
        return len(self.elements) - 1

    def attach(self, parent: int, child: int, label: str, pairs) -> "Assembly":
        """New assembly with ``child`` glued onto ``parent``.

        ``pairs`` holds (child fragment atom, parent fragment atom) identifications.
        """
        if parent not in self.maps:
            raise InconsistentAttachment(f"parent node {parent} has not been placed")
        if child in self.maps:
            raise InconsistentAttachment(f"node {child} is already placed")
        frag = fragment_from_label(label)
        pmap = self.maps[parent]
        new = self.copy()
        mapping: dict[int, int] = {}
        for ci, pj in pairs:
            if not (0 <= ci < frag.num_atoms) or not (0 <= pj < len(pmap)):
                raise InconsistentAttachment(f"attachment pair ({ci}, {pj}) is out of range")
            if ci in mapping or pmap[pj] in mapping.values():
                raise InconsistentAttachment("attachment identifies an atom twice")
            target = pmap[pj]
            atom = frag.atoms[ci]
            if atom.element != new.elements[target] or atom.charge != new.charges[target]:
                raise InconsistentAttachment(
                    f"cannot identify {atom.symbol}{atom.charge:+d} with "
                    f"{new.elements[target].symbol}{new.charges[target]:+d}")
            mapping[ci] = target
            new.aromatic[target] = new.aromatic[target] or atom.aromatic
            b = self._pinned_budget(frag, ci)
            if atom.aromatic and b is None:
                new.free[target] = True
            elif b is not None:
                cur = new.budget[target]
                new.budget[target] = b if cur is None else min(cur, b)
        for i in range(frag.num_atoms):
            if i not in mapping:
                mapping[i] = new._new_atom(frag, i)
        for bond in frag.bonds:
            u, v = mapping[bond.a], mapping[bond.b]
            key = (min(u, v), max(u, v))
            old = new.bonds.get(key)
            if old is None:
                new.bonds[key] = bond.order
            elif old is not bond.order:
                raise InconsistentAttachment(f"bond {key} assigned both {old.name} and {bond.order.name}")
        new.maps[child] = tuple(mapping[i] for i in range(frag.num_atoms))
        new.labels[child] = label
        return new

    def graph(self) -> MolGraph:
        """Unsanitized graph of the current assembly."""
        sigma = [0] * len(self.elements)
        bonds = []
        for (u, v), order in sorted(self.bonds.items()):
            bonds.append(Bond(u, v, order))
            sigma[u] += order.valence
            sigma[v] += order.valence
        atoms = []
        for i, elem in enumerate(self.elements):
            b = None if self.free[i] else self.budget[i]
            h = None if b is None else max(0, b - sigma[i])
            atoms.append(Atom(elem, self.charges[i], self.aromatic[i], h or 0, h))
        return MolGraph(atoms, bonds)

    def molecule(self) -> MolGraph:
        """Sanitized molecule; raises a chemistry error if the assembly is invalid."""
        if self._mol is None:
            self._mol = sanitize(self.graph())
        return self._mol


@dataclass(frozen=True)
class Attachment:
    pairs: tuple[tuple[int, int], ...]
    assembly: Assembly
    smiles: str


def _options(asm: Assembly, parent: int, child_label: str):
    """Raw (child atom, parent atom) identification lists in deterministic order."""
    plabel = asm.labels[parent]
    pfrag = fragment_from_label(plabel)
    cfrag = fragment_from_label(child_label)
    pmap = asm.maps[parent]
    mol = asm.molecule()
    pclass = symmetry_classes(mol)
    cclass = symmetry_classes(cfrag)
    out = []
    seen = set()
    for ci, catom in enumerate(cfrag.atoms):
        add = cfrag.bond_valence(ci)
        for pj in range(pfrag.num_atoms):
            t = pmap[pj]
            if asm.elements[t] != catom.element or asm.charges[t] != catom.charge:
                continue
            key = (cclass[ci], pclass[t])
            if key in seen:
                continue
            if not catom.aromatic and add > mol.atoms[t].implicit_h and \
                    len(charged_valences(catom.element, catom.charge)) == 1:
                continue
            seen.add(key)
            out.append(((ci, pj),))
    if label_kind(child_label) == RING and label_kind(plabel) == RING:
        seen2 = set()
        for cb in cfrag.bonds:
            for cu, cv in ((cb.a, cb.b), (cb.b, cb.a)):
                ckey = (cclass[cu], cclass[cv])
                for pb in pfrag.bonds:
                    if pb.order is not cb.order:
                        continue
                    for pu, pv in ((pb.a, pb.b), (pb.b, pb.a)):
                        key = (ckey, pmap[pu], pmap[pv])
                        if key in seen2:
                            continue
                        seen2.add(key)
                        out.append(((cu, pu), (cv, pv)))
    return out


def enumerate_attachments(asm: Assembly, parent: int, child: int, child_label: str,
                          cap: int = DEFAULT_CANDIDATE_CAP, ground_truth=None) -> list[Attachment]:
    """Chemically valid, isomorphism-distinct ways to glue ``child_label`` onto ``parent``.

    Candidates are ordered deterministically and truncated to ``cap``; when
    ``ground_truth`` pairs are given they are always represented in the result.
    """
    results: list[Attachment] = []
    by_smiles: dict[str, int] = {}
    gt = None
    if ground_truth is not None:
        gt_pairs = tuple(sorted(tuple(p) for p in ground_truth))
        gt_asm = asm.attach(parent, child, child_label, gt_pairs)
        try:
            gt = Attachment(gt_pairs, gt_asm, write_smiles(gt_asm.molecule()))
        except ChemError:
            gt = Attachment(gt_pairs, gt_asm, "")
    for pairs in _options(asm, parent, child_label):
        try:
            new = asm.attach(parent, child, child_label, pairs)
            smi = write_smiles(new.molecule())
        except (ChemError, InconsistentAttachment):
            continue
        if smi in by_smiles:
            continue
        by_smiles[smi] = len(results)
        if gt is not None and smi == gt.smiles:
            results.append(gt)
        else:
            results.append(Attachment(tuple(sorted(pairs)), new, smi))
    if gt is not None:
        pos = by_smiles.get(gt.smiles)
        if pos is None:
            results.append(gt)
            pos = len(results) - 1
        if pos >= cap:
            results = results[:cap - 1] + [gt]
            return results
    return results[:cap]


def edge_attachments(tree, parent: int, child: int, asm: Assembly, cap=DEFAULT_CANDIDATE_CAP, ground_truth=None):
    """enumerate_attachments for an edge of a decomposed tree.

    Raises NoLegalAttachment if the two clusters share no atom in the source
    molecule or no valid candidate exists.
    """
    if tree.mol is not None and not tree.shared_pairs(parent, child):
        raise NoLegalAttachment(f"clusters {parent} and {child} share no atoms")
    cands = enumerate_attachments(asm, parent, child, tree.clusters[child].canonical_label, cap, ground_truth)
    if not cands:
        raise NoLegalAttachment(f"no legal attachment of cluster {child} onto {parent}")
    return cands


def assemble(tree, attachments) -> MolGraph:
    """Merge the tree's cluster fragments using per-edge atom identifications.

    ``attachments[(parent, child)]`` gives (child label atom, parent label
    atom) pairs for each tree edge.
    """
    asm = Assembly.start(tree.root, tree.clusters[tree.root].canonical_label)
    for parent, child in tree.dfs():
        pairs = attachments.get((parent, child))
        if pairs is None:
            raise InconsistentAttachment(f"no attachment given for edge ({parent}, {child})")
        asm = asm.attach(parent, child, tree.clusters[child].canonical_label, pairs)
    return asm.molecule()


_COMPAT: dict[tuple[str, str], bool] = {}


def can_attach(parent_label: str, child_label: str) -> bool:
    """Whether ``child_label`` has any valid attachment onto a lone ``parent_label`` fragment."""
    key = (parent_label, child_label)
    hit = _COMPAT.get(key)
    if hit is None:
        asm = Assembly.start(0, parent_label)
        hit = False
        for pairs in _options(asm, 0, child_label):
            try:
                asm.attach(0, 1, child_label, pairs).molecule()
            except (ChemError, InconsistentAttachment):
                continue
            hit = True
            break
        _COMPAT[key] = hit
    return hit
