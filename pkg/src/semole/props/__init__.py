"""Molecular property calculators and label handling."""
from .crippen import atom_types, crippen_logp
from .errors import MalformedRow, NonFiniteValue, PropertyError, UntypedAtom
from .kinds import PropertyKind, compute
from .labels import LabelTable, NormStats, label_mask, load_labels, read_label_csv
from .molwt import mol_wt
from .qed import QEDDescriptors, ads, descriptors, qed, qed_from_descriptors, tpsa

__all__ = [
    "LabelTable", "MalformedRow", "NonFiniteValue", "NormStats", "PropertyError", "PropertyKind",
    "QEDDescriptors", "UntypedAtom", "ads", "atom_types", "compute", "crippen_logp", "descriptors",
    "label_mask", "load_labels", "mol_wt", "qed", "qed_from_descriptors", "read_label_csv", "tpsa",
]
