"""Static per-molecule inputs for the network: graph features, tree
schedules and attachment-candidate fingerprints."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..chem import MolGraph, write_smiles
from ..chem.rings import ring_atoms
from ..juncture import Assembly, JunctionTree, Vocab, decompose, enumerate_attachments
from ..juncture.assemble import DEFAULT_CANDIDATE_CAP

ELEMENT_SLOTS = ("C", "N", "O", "F", "S", "Cl", "Br", "I", "P", "B", "Si", "Se")
ATOM_FEATURES = len(ELEMENT_SLOTS) + 1 + 3 + 1  # element (+other), charge -1/0/+1, aromatic
BOND_FEATURES = 4
FP_BINS = 1024
FP_RADIUS = 3


def atom_features(mol: MolGraph) -> np.ndarray:
    out = np.zeros((mol.num_atoms, ATOM_FEATURES))
    for i, a in enumerate(mol.atoms):
        sym = a.symbol
        out[i, ELEMENT_SLOTS.index(sym) if sym in ELEMENT_SLOTS else len(ELEMENT_SLOTS)] = 1.0
        out[i, len(ELEMENT_SLOTS) + 1 + min(max(a.charge, -1), 1) + 1] = 1.0
        out[i, -1] = float(a.aromatic)
    return out


def bond_features(mol: MolGraph) -> np.ndarray:
    out = np.zeros((len(mol.bonds), BOND_FEATURES))
    for k, b in enumerate(mol.bonds):
        out[k, int(b.order) - 1] = 1.0
    return out


_MASK = (1 << 61) - 1


def _mix(*values) -> int:
    h = 0x9E3779B97F4A7C15
    for v in values:
        h ^= (v + 0x9E3779B97F4A7C15 + (h << 6) + (h >> 2)) & _MASK
        h = (h * 0xBF58476D1CE4E5B9) & _MASK
    return h


def environment_ids(mol: MolGraph, radius: int = FP_RADIUS) -> list[list[int]]:
    """Circular atom-environment identifiers; ``ids[r][i]`` covers radius r."""
    rings = ring_atoms(mol)
    cur = [_mix(a.element.atomic_number, mol.degree(i), a.implicit_h, a.charge + 4, int(a.aromatic),
                int(i in rings)) for i, a in enumerate(mol.atoms)]
    ids = [cur]
    for _ in range(radius):
        nxt = []
        for i in range(mol.num_atoms):
            nb = sorted((int(mol.bonds[k].order), cur[mol.bonds[k].other(i)]) for k in mol.adjacency[i])
            flat = [v for pair in nb for v in pair]
            nxt.append(_mix(cur[i], *flat))
        cur = nxt
        ids.append(cur)
    return ids


def candidate_fingerprint(asm: Assembly, child: int, bins: int = FP_BINS) -> tuple[np.ndarray, np.ndarray]:
    """Hashed environment counts around the child cluster's atoms in a partial molecule."""
    mol = asm.molecule()
    ids = environment_ids(mol)
    counts: dict[int, float] = {}
    for r, layer in enumerate(ids):
        for a in asm.maps[child]:
            b = _mix(layer[a], r) % bins
            counts[b] = counts.get(b, 0.0) + 1.0
    keys = np.array(sorted(counts), dtype=np.int64)
    return keys, np.array([counts[k] for k in keys])


@dataclass
class CandidateGroup:
    """Attachment choice at one tree edge: sparse fingerprints and the true index."""
    edge: int  # index into MolRecord.dec_labels (the child-label decision for this edge)
    fps: list[tuple[np.ndarray, np.ndarray]]
    target: int


@dataclass
class MolRecord:
    smiles: str
    labels: np.ndarray  # vocab index per cluster
    tree_edges: list[tuple[int, int]]
    root: int
    # tree encoder: directed messages (src, dst), their dependency pairs and levels
    enc_src: np.ndarray
    enc_dst: np.ndarray
    enc_level: np.ndarray
    enc_deps: np.ndarray  # rows (message, dependency message)
    # tree decoder schedule
    dec_src: np.ndarray
    dec_dst: np.ndarray
    dec_level: np.ndarray
    dec_deps: np.ndarray
    topo_node: np.ndarray  # node where each expand/stop decision is taken
    topo_target: np.ndarray
    topo_deps: np.ndarray  # rows (decision, message visible at that time)
    label_msg: np.ndarray  # message feeding each label decision (-1 for the root)
    label_target: np.ndarray
    label_parent: np.ndarray  # parent cluster label (-1 for the root)
    # molecular graph
    atom_x: np.ndarray
    bond_x: np.ndarray
    bond_ends: np.ndarray  # (num_bonds, 2)
    groups: list[CandidateGroup] = field(default_factory=list)
    num_edges_total: int = 0

    @property
    def num_nodes(self) -> int:
        return len(self.labels)


def _levels(n_msgs, deps):
    level = np.zeros(n_msgs, dtype=np.int64)
    by_msg: dict[int, list[int]] = {}
    for m, d in deps:
        by_msg.setdefault(m, []).append(d)
    for m in range(n_msgs):  # messages are created in dependency order
        ds = by_msg.get(m)
        if ds:
            level[m] = 1 + max(level[d] for d in ds)
    return level


def encoder_schedule(n: int, edges):
    """Directed tree messages with dependencies, ordered so dependencies come first."""
    nbrs = {i: [] for i in range(n)}
    for a, b in edges:
        nbrs[a].append(b)
        nbrs[b].append(a)
    directed = [(a, b) for a, b in edges] + [(b, a) for a, b in edges]
    # topological order: repeatedly emit messages whose inputs are ready
    ready: dict[tuple[int, int], int] = {}
    order = []
    pending = sorted(directed)
    while pending:
        rest = []
        for i, j in pending:
            if all((k, i) in ready for k in nbrs[i] if k != j):
                ready[(i, j)] = len(order)
                order.append((i, j))
            else:
                rest.append((i, j))
        if len(rest) == len(pending):
            raise ValueError("tree edges contain a cycle")
        pending = rest
    deps = [(ready[(i, j)], ready[(k, i)]) for i, j in order for k in nbrs[i] if k != j]
    src = np.array([i for i, _ in order], dtype=np.int64)
    dst = np.array([j for _, j in order], dtype=np.int64)
    deps = np.array(deps, dtype=np.int64).reshape(-1, 2)
    return src, dst, _levels(len(order), deps), deps


def decoder_schedule(tree: JunctionTree, label_ids):
    """Teacher-forced depth-first schedule of messages and decisions."""
    src, dst, deps = [], [], []
    topo_node, topo_target, topo_deps = [], [], []
    label_msg, label_target, label_parent = [-1], [label_ids[tree.root]], [-1]
    incoming: dict[int, list[int]] = {i: [] for i in range(len(tree.clusters))}
    children: dict[int, list[int]] = {}
    for p, c in tree.dfs():
        children.setdefault(p, []).append(c)
    edge_of_child = {}

    def message(i, j):
        m = len(src)
        src.append(i)
        dst.append(j)
        deps.extend((m, d) for d in incoming[i] if src[d] != j)
        incoming[j].append(m)
        return m

    def decide(i, target):
        t = len(topo_node)
        topo_node.append(i)
        topo_target.append(target)
        topo_deps.extend((t, d) for d in incoming[i])

    stack = [(tree.root, None, iter(children.get(tree.root, [])))]
    while stack:
        node, parent, it = stack[-1]
        child = next(it, None)
        if child is None:
            decide(node, 0)
            stack.pop()
            if parent is not None:
                message(node, parent)
            continue
        decide(node, 1)
        m = message(node, child)
        edge_of_child[child] = len(label_msg)
        label_msg.append(m)
        label_target.append(label_ids[child])
        label_parent.append(label_ids[node])
        stack.append((child, node, iter(children.get(child, []))))
    deps = np.array(deps, dtype=np.int64).reshape(-1, 2)
    arr = lambda v: np.array(v, dtype=np.int64)
    return dict(dec_src=arr(src), dec_dst=arr(dst), dec_level=_levels(len(src), deps), dec_deps=deps,
                topo_node=arr(topo_node), topo_target=arr(topo_target),
                topo_deps=np.array(topo_deps, dtype=np.int64).reshape(-1, 2),
                label_msg=arr(label_msg), label_target=arr(label_target),
                label_parent=arr(label_parent)), edge_of_child


def _candidate_groups(tree: JunctionTree, edge_of_child, cap):
    groups = []
    gt = tree.ground_truth_attachments()
    asm = Assembly.start(tree.root, tree.clusters[tree.root].canonical_label)
    for p, c in tree.dfs():
        label = tree.clusters[c].canonical_label
        cands = enumerate_attachments(asm, p, c, label, cap=cap, ground_truth=gt[(p, c)])
        want = tuple(sorted(gt[(p, c)]))
        target = next(k for k, a in enumerate(cands) if a.pairs == want)
        if len(cands) > 1:
            fps = [candidate_fingerprint(a.assembly, c) for a in cands]
            groups.append(CandidateGroup(edge_of_child[c], fps, target))
        asm = cands[target].assembly
    return groups


def build_record(mol: MolGraph, vocab: Vocab, cap: int = DEFAULT_CANDIDATE_CAP,
                 tree: JunctionTree | None = None, candidates: bool = True, cache: dict | None = None) -> MolRecord:
    """Preprocess one sanitized molecule; raises OOVCluster for unknown clusters.

    ``candidates=False`` skips attachment enumeration (enough for encoding).
    ``cache`` memoizes the vocabulary-independent work per SMILES.
    """
    smiles = write_smiles(mol)
    hit = cache.get((smiles, cap)) if cache is not None else None
    if hit is not None and (hit[1] is not None or not candidates):
        tree, groups = hit
    else:
        tree = tree or (hit[0] if hit else decompose(mol))
        groups = None
    label_ids = np.array([vocab.index(lab) for lab in tree.labels], dtype=np.int64)
    n = len(tree.clusters)
    es, ed, el, edeps = encoder_schedule(n, tree.edges)
    dec, edge_of_child = decoder_schedule(tree, label_ids)
    if candidates and groups is None:
        groups = _candidate_groups(tree, edge_of_child, cap)
    if cache is not None:
        cache[(smiles, cap)] = (tree, groups)
    bonds = np.array([(b.a, b.b) for b in mol.bonds], dtype=np.int64).reshape(-1, 2)
    return MolRecord(smiles, label_ids, list(tree.edges), tree.root, es, ed, el, edeps,
                     atom_x=atom_features(mol), bond_x=bond_features(mol), bond_ends=bonds,
                     groups=list(groups or []), num_edges_total=len(tree.edges), **dec)
