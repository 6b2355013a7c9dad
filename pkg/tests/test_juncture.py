import random

import networkx as nx
import pytest

from semole.chem import is_valid, parse_smiles, write_smiles
from semole.juncture import (BOND, RING, SINGLETON, Assembly, EmptyDataset, InconsistentAttachment,
                             NoLegalAttachment, OOVCluster, JunctionTree, Vocab, assemble, build_vocab,
                             can_attach, decompose, edge_attachments, enumerate_attachments,
                             fragment_from_label)
from semole.juncture.tree import Cluster

from conftest import as_nx, isomorphic


def _summary(tree):
    return [(c.kind, c.canonical_label) for c in tree.clusters], sorted(tree.edges)


def test_propane_two_bonds_one_edge():
    kinds, edges = _summary(decompose(parse_smiles("CCC")))
    assert kinds == [(BOND, "CC"), (BOND, "CC")]
    assert edges == [(0, 1)]


def test_benzene_single_ring():
    tree = decompose(parse_smiles("c1ccccc1"))
    assert [(c.kind, c.canonical_label) for c in tree.clusters] == [(RING, "c1ccccc1")]
    assert tree.edges == []


def test_toluene_ring_plus_bond():
    tree = decompose(parse_smiles("Cc1ccccc1"))
    assert sorted(tree.labels) == ["CC", "c1ccccc1"]
    assert len(tree.edges) == 1


def test_quaternary_carbon_gets_singleton():
    tree = decompose(parse_smiles("CC(C)(C)C"))
    kinds = sorted(c.kind for c in tree.clusters)
    assert kinds == [BOND] * 4 + [SINGLETON]
    assert tree.is_tree() and not tree.running_intersection_violations()


def test_fused_rings_share_an_edge():
    tree = decompose(parse_smiles("c1ccc2ccccc2c1"))
    assert tree.labels == ["c1ccccc1", "c1ccccc1"]
    assert tree.edges == [(0, 1)]
    assert len(tree.shared_pairs(0, 1)) == 2


def test_vocab_examples():
    assert build_vocab(["CCC"]).labels == ["CC"]
    # the toluene ring and the benzene ring canonicalize to the same label
    assert build_vocab(["c1ccccc1", "Cc1ccccc1"]).labels == ["CC", "c1ccccc1"]


def test_empty_vocab_rejected():
    with pytest.raises(EmptyDataset):
        build_vocab([])


def test_vocab_save_load(tmp_path):
    v = build_vocab(["CCO", "c1ccncc1", "CC(=O)N"])
    v.save(tmp_path / "vocab.txt")
    w = Vocab.load(tmp_path / "vocab.txt")
    assert w == v and list(w) == sorted(w)
    assert w[w.index("c1ccncc1")] == "c1ccncc1"
    with pytest.raises(OOVCluster):
        w.index("C1CCCCC1")


def test_cluster_shape_checked():
    with pytest.raises(ValueError):
        Cluster(RING, (0, 1), "CC")
    with pytest.raises(ValueError):
        Cluster(BOND, (0,), "C")


def _check_tree(smiles):
    mol = parse_smiles(smiles)
    tree = decompose(mol)
    assert tree.is_tree(), smiles
    assert tree.running_intersection_violations() == [], smiles
    # bond coverage: each bond is owned by exactly one cluster
    owned = sorted(k for c in tree.clusters for k in c.bond_indices)
    assert owned == list(range(len(mol.bonds))), smiles
    for c in tree.clusters:
        frag = fragment_from_label(c.canonical_label)
        assert frag.num_atoms == len(c.atom_indices)
        for k in c.bond_indices:
            b = mol.bonds[k]
            assert b.a in c.atom_indices and b.b in c.atom_indices
    rebuilt = assemble(tree, tree.ground_truth_attachments())
    assert isomorphic(rebuilt, mol), smiles
    assert write_smiles(rebuilt) == write_smiles(mol)
    return tree


def test_corpus_decomposition_sound(corpus):
    for smi in corpus:
        _check_tree(smi)


def _labeled(tree):
    g = nx.Graph()
    for i, lab in enumerate(tree.labels):
        g.add_node(i, label=lab)
    g.add_edges_from(tree.edges)
    return g


def test_decomposition_independent_of_atom_order(corpus):
    rng = random.Random(3)
    for smi in corpus[:60]:
        mol = parse_smiles(smi)
        order = list(range(mol.num_atoms))
        rng.shuffle(order)
        a = decompose(mol)
        b = decompose(mol.relabel(order))
        assert nx.is_isomorphic(_labeled(a), _labeled(b), node_match=lambda x, y: x["label"] == y["label"])


def _substitution_classes(mol, atoms):
    """Brute-force oracle: distinct molecules from adding one carbon to a hydrogen-bearing atom."""
    graphs = []
    for i, a in enumerate(mol.atoms):
        if i not in atoms or a.implicit_h == 0:
            continue
        g = as_nx(mol)
        k = g.nodes[i]["key"]
        g.nodes[i]["key"] = (k[0], k[1], k[2], k[3] - 1)
        g.add_node("new", key=("C", 0, False, 3))
        g.add_edge(i, "new", order=1)
        if not any(nx.is_isomorphic(g, h, node_match=lambda x, y: x["key"] == y["key"],
                                    edge_match=lambda x, y: x["order"] == y["order"]) for h in graphs):
            graphs.append(g)
    return graphs


def _full_assembly(tree):
    asm = Assembly.start(tree.root, tree.clusters[tree.root].canonical_label)
    for p, c in tree.dfs():
        asm = asm.attach(p, c, tree.clusters[c].canonical_label, tree.shared_pairs(p, c))
    return asm


@pytest.mark.parametrize("smiles,expected", [("c1ccccc1", 1), ("Cc1ccccc1", 3), ("c1ccncc1", 3)])
def test_methyl_attachment_counts(smiles, expected):
    mol = parse_smiles(smiles)
    tree = decompose(mol)
    ring = next(i for i, c in enumerate(tree.clusters) if c.kind == RING)
    asm = _full_assembly(tree)
    cands = enumerate_attachments(asm, ring, len(tree.clusters), "CC")
    oracle = _substitution_classes(mol, tree.clusters[ring].atom_indices)
    assert len(cands) == len(oracle) == expected
    for a in cands:
        m = a.assembly.molecule()
        assert is_valid(m)
        assert sum(nx.is_isomorphic(as_nx(m), g, node_match=lambda x, y: x["key"] == y["key"],
                                    edge_match=lambda x, y: x["order"] == y["order"]) for g in oracle) == 1


def test_ground_truth_always_kept_under_cap():
    tree = decompose(parse_smiles("Cc1ccc(C)cc1"))
    gt = tree.ground_truth_attachments()
    asm = Assembly.start(tree.root, tree.clusters[tree.root].canonical_label)
    for p, c in tree.dfs():
        want = tuple(sorted(gt[(p, c)]))
        cands = enumerate_attachments(asm, p, c, tree.clusters[c].canonical_label, cap=1, ground_truth=want)
        assert len(cands) == 1 and cands[0].pairs == want
        asm = cands[0].assembly


def test_disjoint_clusters_have_no_attachment():
    mol = parse_smiles("CCCC")
    tree = decompose(mol)
    a, b = next((a, b) for a in tree.clusters for b in tree.clusters
                if not set(a.atom_indices) & set(b.atom_indices))
    far = JunctionTree([a, b], [(0, 1)], 0, mol)
    asm = Assembly.start(0, far.clusters[0].canonical_label)
    with pytest.raises(NoLegalAttachment):
        edge_attachments(far, 0, 1, asm)


def test_fluorine_cannot_take_a_substituent():
    asm = Assembly.start(0, "CF")
    assert enumerate_attachments(asm, 0, 1, "FF") == []
    assert not can_attach("CF", "FF")
    assert can_attach("CC", "c1ccccc1")


def test_mismatched_elements_inconsistent():
    asm = Assembly.start(0, "CO")
    frag = fragment_from_label("CO")
    o = next(i for i, a in enumerate(frag.atoms) if a.symbol == "O")
    c = 1 - o
    with pytest.raises(InconsistentAttachment):
        asm.attach(0, 1, "CO", ((o, c),))
    with pytest.raises(InconsistentAttachment):
        asm.attach(5, 1, "CC", ((0, 0),))
    with pytest.raises(InconsistentAttachment):
        asm.attach(0, 0, "CC", ((0, 0),))


def test_missing_attachment_inconsistent():
    tree = decompose(parse_smiles("CCC"))
    with pytest.raises(InconsistentAttachment):
        assemble(tree, {})
