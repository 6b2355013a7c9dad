from enum import Enum

from ..chem import MolGraph


class PropertyKind(str, Enum):
    MolWt = "molwt"
    LogP = "logp"
    QED = "qed"

    @classmethod
    def parse(cls, text) -> "PropertyKind":
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower()
        for kind in cls:
            if kind.value == key or kind.name.lower() == key:
                return kind
        raise ValueError(f"unknown property {text!r}; expected one of molwt, logp, qed")


def compute(kind, mol: MolGraph) -> float:
    from .crippen import crippen_logp
    from .molwt import mol_wt
    from .qed import qed
    kind = PropertyKind.parse(kind)
    return {PropertyKind.MolWt: mol_wt, PropertyKind.LogP: crippen_logp, PropertyKind.QED: qed}[kind](mol)
