"""Canonical atom ranking and canonical SMILES output."""
from __future__ import annotations

from .graph import BondOrder, MolGraph
from .sanitize import ORGANIC_SUBSET


def _refine(mol: MolGraph, ranks: list[int]) -> list[int]:
    n = len(ranks)
    while True:
        keys = []
        for i in range(n):
            env = sorted((int(mol.bonds[k].order), ranks[mol.bonds[k].other(i)]) for k in mol.adjacency[i])
            keys.append((ranks[i], tuple(env)))
        order = sorted(set(keys))
        lookup = {key: r for r, key in enumerate(order)}
        new = [lookup[key] for key in keys]
        if len(order) == len(set(ranks)):
            return new
        ranks = new


def canonical_ranks(mol: MolGraph) -> list[int]:
    """Distinct rank per atom from iterative neighborhood refinement.

    Initial invariants are (atomic number, degree, charge, hydrogen count,
    aromatic flag). Remaining ties are broken by promoting the lowest original
    index in the lowest tied class and refining again.
    """
    cached = mol._cache.get("ranks")
    if cached is not None:
        return cached
    n = mol.num_atoms
    inv = [(a.element.atomic_number, mol.degree(i), a.charge, a.implicit_h, a.aromatic)
           for i, a in enumerate(mol.atoms)]
    order = sorted(set(inv))
    lookup = {key: r for r, key in enumerate(order)}
    ranks = _refine(mol, [lookup[key] for key in inv])
    while len(set(ranks)) < n:
        counts: dict[int, int] = {}
        for r in ranks:
            counts[r] = counts.get(r, 0) + 1
        tied = min(r for r, c in counts.items() if c > 1)
        pick = min(i for i in range(n) if ranks[i] == tied)
        ranks = [2 * r + (0 if (r != tied or i == pick) else 1) for i, r in enumerate(ranks)]
        ranks = _refine(mol, ranks)
    mol._cache["ranks"] = ranks
    return ranks


def _atom_token(atom) -> str:
    sym = atom.symbol.lower() if atom.aromatic else atom.symbol
    if atom.symbol in ORGANIC_SUBSET and atom.charge == 0 and atom.explicit_h is None:
        return sym
    out = "[" + sym
    if atom.implicit_h:
        out += "H" if atom.implicit_h == 1 else f"H{atom.implicit_h}"
    if atom.charge:
        sign = "+" if atom.charge > 0 else "-"
        out += sign if abs(atom.charge) == 1 else f"{sign}{abs(atom.charge)}"
    return out + "]"


def _bond_token(mol: MolGraph, bond) -> str:
    if bond.order is BondOrder.AROMATIC:
        return ""
    if bond.order is BondOrder.SINGLE:
        a, b = mol.atoms[bond.a], mol.atoms[bond.b]
        return "-" if (a.aromatic and b.aromatic) else ""
    return bond.order.symbol


def write_smiles_with_order(mol: MolGraph) -> tuple[str, list[int]]:
    """Canonical SMILES plus the atom indices in the order they are written.

    Parsing the string numbers atoms in that same order, so position ``k`` of
    the parsed graph corresponds to ``order[k]`` of ``mol``.
    """
    cached = mol._cache.get("smiles")
    if cached is not None:
        return cached
    n = mol.num_atoms
    if n == 0:
        return "", []
    ranks = canonical_ranks(mol)
    nbrs = [sorted(mol.neighbors(i), key=lambda j: ranks[j]) for i in range(n)]

    # pass 1: spanning DFS tree and ring-closure bonds
    closures: list[list[tuple[int, int]]] = [[] for _ in range(n)]  # (partner, bond)
    start = min(range(n), key=lambda i: ranks[i])
    visited = [False] * n
    children = [[] for _ in range(n)]
    tree_bonds = set()
    order = []

    def dfs(root):
        visited[root] = True
        order.append(root)
        work = [(root, iter(nbrs[root]))]
        while work:
            v, it = work[-1]
            for w in it:
                if not visited[w]:
                    visited[w] = True
                    order.append(w)
                    children[v].append(w)
                    tree_bonds.add(mol.bond_index(v, w))
                    work.append((w, iter(nbrs[w])))
                    break
            else:
                work.pop()

    dfs(start)
    position = {v: p for p, v in enumerate(order)}
    for k, bond in enumerate(mol.bonds):
        if k in tree_bonds:
            continue
        a, b = bond.a, bond.b
        if position[a] > position[b]:
            a, b = b, a
        closures[a].append((b, k))  # opened at a (earlier), closed at b
        closures[b].append((a, k))

    # pass 2: emit
    out: list[str] = []
    digit_of: dict[int, int] = {}
    free_digits: list[int] = []
    next_digit = [1]

    def take_digit():
        if free_digits:
            free_digits.sort()
            return free_digits.pop(0)
        d = next_digit[0]
        next_digit[0] += 1
        return d

    def digit_str(d):
        return str(d) if d < 10 else f"%{d}"

    emit_order = []
    work = [("atom", start, None)]
    while work:
        kind, v, via = work.pop()
        if kind == "close":
            out.append(")")
            continue
        if kind == "open":
            out.append("(")
            continue
        if via is not None:
            out.append(_bond_token(mol, mol.bonds[via]))
        out.append(_atom_token(mol.atoms[v]))
        emit_order.append(v)
        ring_here = sorted(closures[v], key=lambda pk: (position[pk[0]], ranks[pk[0]]))
        for partner, k in ring_here:
            if k in digit_of:
                d = digit_of.pop(k)
                out.append(_bond_token(mol, mol.bonds[k]) + digit_str(d))
                free_digits.append(d)
        for partner, k in ring_here:
            if k not in digit_of and position[partner] > position[v]:
                d = take_digit()
                digit_of[k] = d
                out.append(_bond_token(mol, mol.bonds[k]) + digit_str(d))
        kids = children[v]
        # branches for all but the last child; push in reverse for stack order
        for idx in range(len(kids) - 1, -1, -1):
            w = kids[idx]
            bond = mol.bond_index(v, w)
            if idx == len(kids) - 1:
                work.append(("atom", w, bond))
            else:
                work.append(("close", w, None))
                work.append(("atom", w, bond))
                work.append(("open", w, None))
    result = ("".join(out), emit_order)
    mol._cache["smiles"] = result
    return result


def write_smiles(mol: MolGraph) -> str:
    """Deterministic canonical SMILES for a sanitized graph."""
    return write_smiles_with_order(mol)[0]


def symmetry_classes(mol: MolGraph) -> list[int]:
    """Refined atom invariants without tie-breaking; atoms in one class are
    (almost always) related by an automorphism."""
    cached = mol._cache.get("symclass")
    if cached is not None:
        return cached
    inv = [(a.element.atomic_number, mol.degree(i), a.charge, a.implicit_h, a.aromatic)
           for i, a in enumerate(mol.atoms)]
    order = sorted(set(inv))
    lookup = {key: r for r, key in enumerate(order)}
    classes = _refine(mol, [lookup[key] for key in inv])
    mol._cache["symclass"] = classes
    return classes
