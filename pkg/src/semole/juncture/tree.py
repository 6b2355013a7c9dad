"""Junction-tree decomposition of molecular graphs."""
from __future__ import annotations

from dataclasses import dataclass, field

from ..chem import MolGraph, canonical_ranks, ring_bonds, sssr
from .fragments import BOND, RING, SINGLETON, cut_fragment


@dataclass(frozen=True)
class Cluster:
    kind: str
    atom_indices: tuple[int, ...]  # parent atoms, in canonical-label order
    canonical_label: str
    bond_indices: tuple[int, ...] = ()  # parent bonds owned by this cluster

    def __post_init__(self):
        n = len(self.atom_indices)
        if self.kind == RING and n < 3:
            raise ValueError("ring cluster needs at least 3 atoms")
        if self.kind == BOND and n != 2:
            raise ValueError("bond cluster needs exactly 2 atoms")
        if self.kind == SINGLETON and n != 1:
            raise ValueError("singleton cluster needs exactly 1 atom")


@dataclass
class JunctionTree:
    """Clusters connected as a tree rooted at ``root``.

    ``mol`` is the graph the atom indices refer to (absent for decoded trees).
    """

    clusters: list[Cluster]
    edges: list[tuple[int, int]]
    root: int = 0
    mol: MolGraph | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.clusters)

    @property
    def labels(self) -> list[str]:
        return [c.canonical_label for c in self.clusters]

    def neighbors(self, i: int) -> list[int]:
        out = [b for a, b in self.edges if a == i] + [a for a, b in self.edges if b == i]
        return sorted(out)

    def dfs(self) -> list[tuple[int, int]]:
        """Tree edges as (parent, child) in depth-first order from the root,
        children visited in ascending cluster index."""
        order = []
        adj = {i: self.neighbors(i) for i in range(len(self.clusters))}
        stack = [(self.root, -1)]
        seen = set()
        while stack:
            node, parent = stack.pop()
            if node in seen:
                continue
            seen.add(node)
            if parent >= 0:
                order.append((parent, node))
            for child in reversed(adj[node]):
                if child not in seen:
                    stack.append((child, node))
        return order

    def shared_pairs(self, parent: int, child: int) -> tuple[tuple[int, int], ...]:
        """Ground-truth attachment for an edge: (child label atom, parent label atom) pairs."""
        pa = self.clusters[parent].atom_indices
        ca = self.clusters[child].atom_indices
        pos = {a: k for k, a in enumerate(pa)}
        return tuple((ci, pos[a]) for ci, a in enumerate(ca) if a in pos)

    def ground_truth_attachments(self) -> dict[tuple[int, int], tuple[tuple[int, int], ...]]:
        return {(p, c): self.shared_pairs(p, c) for p, c in self.dfs()}

    def is_tree(self) -> bool:
        n = len(self.clusters)
        if len(self.edges) != n - 1:
            return False
        return len(self.dfs()) == n - 1

    def running_intersection_violations(self) -> list[int]:
        """Atoms whose containing clusters do not form a connected subtree."""
        bad = []
        holders: dict[int, list[int]] = {}
        for ci, c in enumerate(self.clusters):
            for a in c.atom_indices:
                holders.setdefault(a, []).append(ci)
        adj = {i: self.neighbors(i) for i in range(len(self.clusters))}
        for atom, cs in sorted(holders.items()):
            members = set(cs)
            seen = {cs[0]}
            stack = [cs[0]]
            while stack:
                v = stack.pop()
                for w in adj[v]:
                    if w in members and w not in seen:
                        seen.add(w)
                        stack.append(w)
            if seen != members:
                bad.append(atom)
        return bad


def _merge_rings(rings: list[set[int]]) -> list[set[int]]:
    rings = [set(r) for r in rings]
    changed = True
    while changed:
        changed = False
        for i in range(len(rings)):
            for j in range(i + 1, len(rings)):
                if len(rings[i] & rings[j]) > 2:
                    rings[i] |= rings.pop(j)
                    changed = True
                    break
            if changed:
                break
    return rings


def _spanning_tree(clusters_atoms: list[set[int]]) -> list[tuple[int, int]]:
    n = len(clusters_atoms)
    weighted = []
    for i in range(n):
        for j in range(i + 1, n):
            w = len(clusters_atoms[i] & clusters_atoms[j])
            if w:
                weighted.append((-w, i, j))
    weighted.sort()
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = []
    for _, i, j in weighted:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            edges.append((i, j))
    return edges


def _ring_systems(rings: list[set[int]]) -> list[set[int]]:
    groups: list[set[int]] = []
    for r in rings:
        hit = [g for g in groups if g & r]
        merged = set(r)
        for g in hit:
            merged |= g
            groups.remove(g)
        groups.append(merged)
    return groups


def _cluster_sets(mol: MolGraph, rings: list[set[int]]):
    rb = ring_bonds(mol)
    bond_sets = [({b.a, b.b}, k) for k, b in enumerate(mol.bonds) if k not in rb]
    atoms_sets = [s for s, _ in bond_sets] + [set(r) for r in sorted(rings, key=lambda r: sorted(r))]
    kinds = [BOND] * len(bond_sets) + [RING] * len(rings)
    count: dict[int, int] = {}
    for s in atoms_sets:
        for a in s:
            count[a] = count.get(a, 0) + 1
    for a in sorted(a for a, c in count.items() if c >= 3):
        atoms_sets.append({a})
        kinds.append(SINGLETON)
    if mol.num_atoms == 1:
        atoms_sets, kinds = [{0}], [SINGLETON]
    return atoms_sets, kinds


def _decompose_canonical(mol: MolGraph) -> JunctionTree:
    rings = _merge_rings([set(r) for r in sssr(mol)])
    while True:
        atoms_sets, kinds = _cluster_sets(mol, rings)
        edges = _spanning_tree(atoms_sets)
        tree = JunctionTree([Cluster(k, tuple(sorted(s)), "") for k, s in zip(kinds, atoms_sets)], edges)
        bad = tree.running_intersection_violations()
        if not bad:
            break
        # no junction tree exists over these rings: fuse the offending ring system
        atom = bad[0]
        system = next((g for g in _ring_systems(rings) if atom in g), None)
        if system is None:
            raise RuntimeError(f"running intersection fails at acyclic atom {atom}")
        rings = [r for r in rings if not (r & system)] + [system]

    clusters = []
    owned: set[int] = set()
    for kind, s in zip(kinds, atoms_sets):
        label, order = cut_fragment(mol, sorted(s), kind)
        own = []
        if kind != SINGLETON:
            for k, b in enumerate(mol.bonds):
                if k not in owned and b.a in s and b.b in s:
                    own.append(k)
            owned.update(own)
        clusters.append(Cluster(kind, tuple(order), label, tuple(own)))
    root = min(i for i, c in enumerate(clusters) if 0 in c.atom_indices)
    return JunctionTree(clusters, edges, root, mol)


def decompose(mol: MolGraph) -> JunctionTree:
    """Junction tree of a sanitized, connected molecule.

    Clusters are non-ring bonds, SSSR rings (rings sharing more than two atoms
    are merged), and one singleton per atom lying in three or more of those.
    Edges form a maximum spanning tree of the cluster-intersection graph
    weighted by shared-atom count. All ordering decisions use canonical atom
    ranks, so renumbering the input atoms yields the same tree.
    """
    ranks = canonical_ranks(mol)
    order = sorted(range(mol.num_atoms), key=lambda i: ranks[i])
    cmol = mol.relabel(order)
    ctree = _decompose_canonical(cmol)
    # bond indices of cmol -> mol
    bond_map = {}
    for k, b in enumerate(cmol.bonds):
        bond_map[k] = mol.bond_index(order[b.a], order[b.b])
    clusters = [Cluster(c.kind, tuple(order[a] for a in c.atom_indices), c.canonical_label,
                        tuple(bond_map[k] for k in c.bond_indices)) for c in ctree.clusters]
    return JunctionTree(clusters, ctree.edges, ctree.root, mol)
