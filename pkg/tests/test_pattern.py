import networkx as nx
import pytest
from networkx.algorithms import isomorphism

from semole.chem import BondOrder, parse_smiles
from semole.chem.pattern import PatternError, compile_pattern, find_matches, has_match, match_atom

from conftest import as_nx

MOLS = ["CC(=O)Oc1ccccc1C(=O)O", "CCN(CC)CC", "O=C(N)c1ccncc1", "ClCC(Cl)Br", "C1CCOC1", "OCC(O)CO"]


def _brute(query_smiles_like, mol, node_ok, edge_ok):
    """Unique atom sets of subgraph monomorphisms found by networkx."""
    g = as_nx(mol)
    matcher = isomorphism.GraphMatcher(g, query_smiles_like, node_match=node_ok, edge_match=edge_ok)
    return {frozenset(m) for m in matcher.subgraph_monomorphisms_iter()}


def _query(elements, bonds):
    q = nx.Graph()
    for i, e in enumerate(elements):
        q.add_node(i, el=e)
    for a, b, o in bonds:
        q.add_edge(a, b, order=o)
    return q


@pytest.mark.parametrize("smiles", MOLS)
def test_carbonyl_matches_agree_with_networkx(smiles):
    mol = parse_smiles(smiles)
    q = _query(["C", "O"], [(0, 1, 2)])
    want = _brute(q, mol, lambda n, m: n["key"][0] == m["el"] and not n["key"][2],
                  lambda e, f: e["order"] == f["order"])
    got = {frozenset(m) for m in find_matches("C=O", mol)}
    assert got == want


@pytest.mark.parametrize("smiles", MOLS)
def test_three_atom_path_matches_agree_with_networkx(smiles):
    mol = parse_smiles(smiles)
    q = _query(["*", "*", "*"], [(0, 1, None), (1, 2, None)])
    want = _brute(q, mol, lambda n, m: True, lambda e, f: True)
    got = {frozenset(m) for m in find_matches("*~*~*", mol)}
    assert got == want


def test_atom_primitives():
    m = parse_smiles("CC(=O)N")
    assert match_atom("[CH3]", m, 0)
    assert not match_atom("[CH3]", m, 1)
    assert match_atom("[NH2;X3;D1]", m, 3)
    assert match_atom("[#8]", m, 2)
    assert match_atom("[$(C=O)]", m, 1)
    assert not match_atom("[$(C=O)]", m, 0)
    assert match_atom("[!O;!N]", m, 0)


def test_ring_and_aromatic_primitives():
    m = parse_smiles("Cc1ccccc1C1CC1")
    assert match_atom("[c;R1]", m, 1)
    assert match_atom("[C;r3]", m, 8)
    assert not match_atom("[R]", m, 0)
    assert has_match("c-!@C", m)
    assert not has_match("C#C", m)


def test_bad_pattern():
    with pytest.raises(PatternError):
        compile_pattern("[C")


def test_bond_order_enum_used_by_default_bond():
    m = parse_smiles("c1ccccc1O")
    assert has_match("cO", m)
    assert all(m.bond_between(a, b).order in (BondOrder.SINGLE, BondOrder.AROMATIC) for a, b in find_matches("c~c", m))
