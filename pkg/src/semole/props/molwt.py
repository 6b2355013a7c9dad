from ..chem import MolGraph
from ..chem.elements import HYDROGEN


def mol_wt(mol: MolGraph) -> float:
    """Average molecular weight in amu, counting implicit hydrogens."""
    heavy = sum(a.element.atomic_weight for a in mol.atoms)
    nh = sum(a.implicit_h for a in mol.atoms)
    return heavy + nh * HYDROGEN.atomic_weight
