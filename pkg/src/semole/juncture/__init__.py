"""Junction-tree decomposition, vocabularies and graph reassembly."""
from .assemble import (DEFAULT_CANDIDATE_CAP, Assembly, Attachment, assemble, can_attach, edge_attachments,
                       enumerate_attachments)
from .errors import EmptyDataset, InconsistentAttachment, JunctionError, NoLegalAttachment, OOVCluster
from .fragments import BOND, RING, SINGLETON, fragment_from_label, label_kind
from .tree import Cluster, JunctionTree, decompose
from .vocab import Vocab, build_vocab

__all__ = [
    "Assembly", "Attachment", "BOND", "Cluster", "DEFAULT_CANDIDATE_CAP", "EmptyDataset",
    "InconsistentAttachment", "JunctionError", "JunctionTree", "NoLegalAttachment", "OOVCluster", "RING",
    "SINGLETON", "Vocab", "assemble", "build_vocab", "can_attach", "decompose", "edge_attachments",
    "enumerate_attachments", "fragment_from_label", "label_kind",
]
