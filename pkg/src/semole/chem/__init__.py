"""Molecular graphs: SMILES I/O, sanitization, ring perception, patterns."""
from .canon import canonical_ranks, write_smiles, write_smiles_with_order
from .elements import ELEMENTS, Element, element
from .errors import (AromaticityError, ChemError, DisconnectedGraph, MultiFragmentInput, SmilesError,
                     UnbalancedBranch, UnknownAtomSymbol, UnmatchedRingClosure, ValenceViolation)
from .graph import Atom, Bond, BondOrder, MolGraph, without_hydrogens
from .rings import ring_atoms, ring_bonds, ring_perception, sssr
from .sanitize import is_valid, kekulize, sanitize
from .smiles import parse_smiles

__all__ = [
    "Atom", "AromaticityError", "Bond", "BondOrder", "ChemError", "DisconnectedGraph", "ELEMENTS",
    "Element", "MolGraph", "MultiFragmentInput", "SmilesError", "UnbalancedBranch", "UnknownAtomSymbol",
    "UnmatchedRingClosure", "ValenceViolation", "canonical_ranks", "element", "is_valid", "kekulize",
    "parse_smiles", "ring_atoms", "ring_bonds", "ring_perception", "sanitize", "sssr", "write_smiles",
    "without_hydrogens", "write_smiles_with_order",
]
