import json
from pathlib import Path

import networkx as nx
import numpy as np
import pytest

DATA = Path(__file__).parent / "data"


def corpus_smiles():
    return [ln.strip() for ln in (DATA / "corpus200.smi").read_text().splitlines() if ln.strip()]


def corpus_reference():
    return json.loads((DATA / "corpus200_rdkit.json").read_text())


def as_nx(mol):
    g = nx.Graph()
    for i, a in enumerate(mol.atoms):
        g.add_node(i, key=(a.symbol, a.charge, a.aromatic, a.implicit_h))
    for b in mol.bonds:
        g.add_edge(b.a, b.b, order=int(b.order))
    return g


def isomorphic(m1, m2) -> bool:
    """Graph isomorphism on element, charge, aromaticity, H count and bond order."""
    return nx.is_isomorphic(as_nx(m1), as_nx(m2), node_match=lambda a, b: a["key"] == b["key"],
                            edge_match=lambda a, b: a["order"] == b["order"])


@pytest.fixture(scope="session")
def corpus():
    return corpus_smiles()


@pytest.fixture(scope="session")
def desk_csv():
    return DATA / "desk.csv"


def rel_error(a, b, floor=1e-8) -> float:
    """Norm-relative difference between two gradient arrays.

    ``floor`` keeps gradients that vanish analytically (e.g. a softmax shift)
    from turning rounding noise into a relative error of 1.
    """
    a, b = np.ravel(a), np.ravel(b)
    denom = max(np.linalg.norm(a) + np.linalg.norm(b), floor)
    return float(np.linalg.norm(a - b) / denom)


def numeric_grad(f, arr: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of scalar ``f()`` with respect to ``arr`` (perturbed in place)."""
    g = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = arr[i]
        arr[i] = old + h
        up = f()
        arr[i] = old - h
        down = f()
        arr[i] = old
        g[i] = (up - down) / (2 * h)
    return g


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
