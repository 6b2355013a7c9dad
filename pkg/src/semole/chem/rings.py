"""Ring perception: ring-bond detection and the smallest set of smallest rings."""
from __future__ import annotations

from collections import deque

from .graph import MolGraph


def ring_bonds(mol: MolGraph) -> frozenset[int]:
    """Indices of bonds lying on at least one cycle (non-bridges)."""
    cached = mol._cache.get("ring_bonds")
    if cached is not None:
        return cached
    n = mol.num_atoms
    disc = [-1] * n
    low = [0] * n
    bridges = set()
    clock = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = clock
        clock += 1
        # iterative DFS: (atom, bond used to enter, iterator position)
        stack = [(root, -1, 0)]
        while stack:
            v, via, pos = stack[-1]
            inc = mol.adjacency[v]
            if pos < len(inc):
                stack[-1] = (v, via, pos + 1)
                k = inc[pos]
                if k == via:
                    continue
                w = mol.bonds[k].other(v)
                if disc[w] == -1:
                    disc[w] = low[w] = clock
                    clock += 1
                    stack.append((w, k, 0))
                else:
                    low[v] = min(low[v], disc[w])
            else:
                stack.pop()
                if stack:
                    u = stack[-1][0]
                    low[u] = min(low[u], low[v])
                    if low[v] > disc[u]:
                        bridges.add(via)
    result = frozenset(k for k in range(len(mol.bonds)) if k not in bridges)
    mol._cache["ring_bonds"] = result
    return result


def ring_atoms(mol: MolGraph) -> frozenset[int]:
    atoms = set()
    for k in ring_bonds(mol):
        atoms.add(mol.bonds[k].a)
        atoms.add(mol.bonds[k].b)
    return frozenset(atoms)


def _canonical_walk(cycle) -> tuple[int, ...]:
    """Rotate a cyclic atom sequence to start at its minimum, heading toward
    the smaller of the two ring neighbors."""
    cycle = list(cycle)
    i = cycle.index(min(cycle))
    cycle = cycle[i:] + cycle[:i]
    if len(cycle) > 2 and cycle[-1] < cycle[1]:
        cycle = [cycle[0]] + cycle[1:][::-1]
    return tuple(cycle)


def sssr(mol: MolGraph) -> list[tuple[int, ...]]:
    """Smallest set of smallest rings.

    Candidate cycles are the Horton set (shortest paths from every atom to
    both ends of every edge); an independent subset is selected greedily over
    GF(2) in order of (size, sorted atom indices). Each ring is returned as
    atoms in walking order starting from its lowest index.
    """
    cached = mol._cache.get("sssr")
    if cached is not None:
        return cached
    rbonds = sorted(ring_bonds(mol))
    if not rbonds:
        mol._cache["sssr"] = []
        return []
    ratoms = sorted(ring_atoms(mol))
    # cyclomatic number of the ring subgraph
    comp = _components(mol, ratoms, set(rbonds))
    needed = len(rbonds) - len(ratoms) + comp
    rset = set(rbonds)
    bit = {k: 1 << i for i, k in enumerate(rbonds)}
    adj = {v: sorted((mol.bonds[k].other(v), k) for k in mol.adjacency[v] if k in rset) for v in ratoms}

    candidates = {}
    for v in ratoms:
        dist = {v: 0}
        parent = {v: (None, None)}
        queue = deque([v])
        while queue:
            u = queue.popleft()
            for w, k in adj[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    parent[w] = (u, k)
                    queue.append(w)

        def path(x):
            atoms, edges = [x], []
            while parent[x][0] is not None:
                p, k = parent[x]
                edges.append(k)
                atoms.append(p)
                x = p
            return atoms, edges

        for k in rbonds:
            x, y = mol.bonds[k].a, mol.bonds[k].b
            if x not in dist or y not in dist:
                continue
            px, ex = path(x)
            py, ey = path(y)
            if set(px) & set(py) != {v}:
                continue
            atoms = frozenset(px) | frozenset(py)
            mask = bit[k]
            for e in ex + ey:
                mask ^= bit[e]
            key = (len(atoms), tuple(sorted(atoms)))
            if key not in candidates:
                candidates[key] = (mask, px[::-1] + py[:-1])

    basis: dict[int, int] = {}  # pivot bit -> reduced vector
    rings = []
    for key in sorted(candidates):
        vec, walk = candidates[key]
        while vec:
            pivot = vec.bit_length() - 1
            if pivot in basis:
                vec ^= basis[pivot]
            else:
                basis[pivot] = vec
                rings.append(_canonical_walk(walk))
                break
        if len(rings) == needed:
            break
    result = rings
    mol._cache["sssr"] = result
    return result


def _components(mol, atoms, bonds) -> int:
    seen = set()
    count = 0
    for s in atoms:
        if s in seen:
            continue
        count += 1
        seen.add(s)
        stack = [s]
        while stack:
            v = stack.pop()
            for k in mol.adjacency[v]:
                if k in bonds:
                    w = mol.bonds[k].other(v)
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
    return count


def ring_perception(mol: MolGraph) -> list[tuple[int, ...]]:
    return sssr(mol)
