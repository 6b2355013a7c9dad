"""Valence and aromaticity validation with implicit-hydrogen assignment."""
from __future__ import annotations

from .elements import charged_valences
from .errors import AromaticityError, ChemError, ValenceViolation
from .graph import BondOrder, MolGraph
from .rings import ring_atoms, ring_bonds

ORGANIC_SUBSET = frozenset("B C N O P S F Cl Br I".split())
AROMATIC_ORGANIC = frozenset("B C N O P S".split())


def _default_h(valences, used):
    """Hydrogens filling ``used`` up to the smallest allowed valence, or None."""
    for v in valences:
        if v >= used:
            return v - used
    return None


def pi_candidates(mol: MolGraph) -> list[bool]:
    """Aromatic atoms that still need a pi bond inside the aromatic system.

    An aromatic atom is a candidate when its smallest charge-adjusted valence
    leaves room for one extra bond after its sigma bonds and pinned hydrogens.
    """
    out = []
    for i, atom in enumerate(mol.atoms):
        if not atom.aromatic:
            out.append(False)
            continue
        vmin = charged_valences(atom.element, atom.charge)[0]
        used = mol.bond_valence(i) + (atom.explicit_h or 0)
        out.append(vmin >= used + 1)
    return out


def kekulize(mol: MolGraph, candidates=None) -> dict[int, BondOrder] | None:
    """Assign alternating single/double orders to aromatic bonds.

    Returns ``{bond_index: order}`` for every aromatic bond, or None when no
    perfect matching of the pi candidates exists.
    """
    if candidates is None:
        candidates = pi_candidates(mol)
    arom = [k for k, b in enumerate(mol.bonds) if b.order is BondOrder.AROMATIC]
    if not arom:
        return {} if not any(candidates) else None
    options: dict[int, list[tuple[int, int]]] = {}
    for k in arom:
        b = mol.bonds[k]
        if candidates[b.a] and candidates[b.b]:
            options.setdefault(b.a, []).append((b.b, k))
            options.setdefault(b.b, []).append((b.a, k))
    todo = [i for i, c in enumerate(candidates) if c]
    for i in todo:
        if i not in options:
            return None
    matched: dict[int, int] = {}

    def solve() -> bool:
        free = [i for i in todo if i not in matched]
        if not free:
            return True
        # most constrained atom first; ties by index keep the search deterministic
        best, best_opts = None, None
        for i in free:
            opts = [(j, k) for j, k in options[i] if j not in matched]
            if best_opts is None or len(opts) < len(best_opts):
                best, best_opts = i, opts
                if not opts:
                    return False
        for j, k in best_opts:
            matched[best] = k
            matched[j] = k
            if solve():
                return True
            del matched[best]
            del matched[j]
        return False

    if not solve():
        return None
    doubles = set(matched.values())
    return {k: (BondOrder.DOUBLE if k in doubles else BondOrder.SINGLE) for k in arom}


def sanitize(mol: MolGraph) -> MolGraph:
    """Validate valences and aromatic flags and fill hydrogen counts.

    Each atom's hydrogen count is the amount needed to reach its smallest
    allowed (charge-adjusted) valence; bracket atoms keep their stated count
    and must land exactly on an allowed valence. Aromatic systems must be
    kekulizable.
    """
    rbonds = ring_bonds(mol)
    ratoms = ring_atoms(mol)
    for k, bond in enumerate(mol.bonds):
        if bond.order is BondOrder.AROMATIC:
            if k not in rbonds:
                raise AromaticityError(f"aromatic bond {bond.a}-{bond.b} is not in a ring", atom=bond.a)
            if not (mol.atoms[bond.a].aromatic and mol.atoms[bond.b].aromatic):
                raise AromaticityError(f"aromatic bond {bond.a}-{bond.b} joins a non-aromatic atom", atom=bond.a)
    for i, atom in enumerate(mol.atoms):
        if atom.aromatic:
            if i not in ratoms:
                raise AromaticityError(f"aromatic atom {i} ({atom.symbol}) is not in a ring", atom=i)
            n_arom = sum(mol.bonds[k].order is BondOrder.AROMATIC for k in mol.adjacency[i])
            if not n_arom:
                raise AromaticityError(f"aromatic atom {i} ({atom.symbol}) has no aromatic bond", atom=i)
            # four aromatic bonds cannot fit any valence once each counts as 1.5
            if n_arom > 3:
                raise AromaticityError(f"aromatic atom {i} ({atom.symbol}) has {n_arom} aromatic bonds", atom=i)

    cands = pi_candidates(mol)
    kek = kekulize(mol, cands)
    if kek is None:
        bad = next((i for i, c in enumerate(cands) if c), None)
        raise AromaticityError("aromatic system cannot be kekulized", atom=bad)
    has_pi = [False] * mol.num_atoms
    for k, order in kek.items():
        if order is BondOrder.DOUBLE:
            has_pi[mol.bonds[k].a] = has_pi[mol.bonds[k].b] = True

    atoms = []
    for i, atom in enumerate(mol.atoms):
        vals = charged_valences(atom.element, atom.charge)
        used = mol.bond_valence(i) + (1 if has_pi[i] else 0)
        if atom.aromatic:
            vals = vals[:1]
        if atom.explicit_h is not None:
            total = used + atom.explicit_h
            if total not in vals:
                raise ValenceViolation(
                    f"atom {i} ({atom.symbol}{atom.charge:+d}) has valence {total}, allowed {list(vals)}", atom=i)
            h = atom.explicit_h
        else:
            h = _default_h(vals, used)
            if h is None:
                raise ValenceViolation(
                    f"atom {i} ({atom.symbol}) has valence {used}, exceeding allowed {list(vals)}", atom=i)
        atoms.append(atom.evolve(implicit_h=h, explicit_h=None))

    # Keep a pinned hydrogen count only where recomputing without it would
    # not reproduce the same hydrogens or the same pi assignment.
    provisional = MolGraph(atoms, mol.bonds)
    default_cands = pi_candidates(provisional)
    final = []
    for i, atom in enumerate(atoms):
        vals = charged_valences(atom.element, atom.charge)
        sigma = mol.bond_valence(i)
        if atom.aromatic:
            dflt_pi = default_cands[i]
            dflt_h = _default_h(vals[:1], sigma + (1 if dflt_pi else 0))
            keep = dflt_pi != has_pi[i] or dflt_h != atom.implicit_h
        else:
            keep = _default_h(vals, sigma) != atom.implicit_h
        final.append(atom.evolve(explicit_h=atom.implicit_h) if keep else atom)
    out = MolGraph(final, mol.bonds)
    out._cache["ring_bonds"] = rbonds
    if "sssr" in mol._cache:
        out._cache["sssr"] = mol._cache["sssr"]
    out._cache["kekule"] = kek
    out._cache["sanitized"] = True
    return out


def is_valid(mol: MolGraph) -> bool:
    """True iff ``mol`` is connected and passes :func:`sanitize`."""
    try:
        if not mol.is_connected():
            return False
        sanitize(mol)
    except ChemError:
        return False
    return True
