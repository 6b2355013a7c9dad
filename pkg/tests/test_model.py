import csv
import math

import numpy as np
import pytest

from semole.chem import is_valid, parse_smiles, write_smiles
from semole.juncture import JunctionTree, OOVCluster, Vocab, build_vocab, decompose
from semole.model import (Batch, CompatMasks, DecodeOverflow, ModelConfig, SeMoleNet, batch_terms, build_record, decode,
                          elbo_labeled, elbo_unlabeled, objective, reconstruction_accuracy)
from semole.tensor import LOG_2PI, Parameter, Tape, Tensor, backward, tsum

from conftest import DATA, numeric_grad, rel_error

SMALL = ["CC(=O)Nc1ccc(O)cc1", "O=C(O)c1ccccc1OC(C)=O", "CCN(CC)CCOC(=O)c1ccc(N)cc1"]


def _setup(smiles, hidden=12, z_dim=4, seed=1, vocab=None, **kw):
    mols = [parse_smiles(s) for s in smiles]
    vocab = vocab or build_vocab(mols)
    cfg = ModelConfig(len(vocab), hidden=hidden, z_dim=z_dim, depth=3, fp_bins=128, **kw)
    net = SeMoleNet(cfg, seed=seed)
    compat = CompatMasks(vocab)
    recs = [build_record(m, vocab) for m in mols]
    return net, compat, Batch(recs, compat, fp_bins=128), mols, vocab


def _wake_heads(net, seed=5):
    # the property head starts at zero; give it generic weights so every path carries gradient
    rng = np.random.default_rng(seed)
    for k in ("y.mu.W", "y.lv.W"):
        net.params[k].data[:] = rng.normal(0, 0.3, net.params[k].shape)


def _check_gradients(net, loss_fn, tol, per_param=4, seed=0):
    """Finite differences on a few entries of every parameter; returns the worst relative error."""
    with Tape():
        grads = backward(loss_fn())
    pick = np.random.default_rng(seed)
    worst = 0.0
    for name in net.params:
        p = net.params[name]
        idx = pick.choice(p.data.size, min(per_param, p.data.size), replace=False)
        flat = p.data.reshape(-1)
        entries = flat[idx].copy()

        def f():
            flat[idx] = entries
            return loss_fn().item()

        num = numeric_grad(f, entries, h=1e-5)
        flat[idx] = entries
        ana = grads.get(p, np.zeros_like(p.data)).reshape(-1)[idx]
        err = rel_error(ana, num)
        worst = max(worst, err)
        assert err < tol, (name, ana, num)
    return worst


def test_full_elbo_gradient_three_molecules():
    net, _, batch, _, _ = _setup(SMALL)
    _wake_heads(net)

    def loss():
        rng = np.random.default_rng(3)
        lab = batch_terms(net, batch, rng, y_obs=[0.3, -0.5, 1.1])
        unl = batch_terms(net, batch, rng)
        return objective(lab, unl, 0.7)

    _check_gradients(net, loss, tol=1e-3)


def test_heads_at_zero_give_zero_kl_and_log2pi_prior():
    net, _, batch, _, _ = _setup(SMALL[:2])
    for k in ("zt.mu", "zt.lv", "zg.mu", "zg.lv"):
        net.params[k + ".W"].data[:] = 0.0
        net.params[k + ".b"].data[:] = 0.0
    terms = batch_terms(net, batch, np.random.default_rng(0), y_obs=[0.0, 0.0])
    assert (terms.kl_t.data == 0).all() and (terms.kl_g.data == 0).all()
    assert np.allclose(terms.prior.data, math.log(2 * math.pi), atol=1e-9)


def test_zero_init_property_head():
    net, _, batch, _, _ = _setup(SMALL)
    mu, lv = net.predict_y(net.encode_tree(batch)[1], net.encode_graph(batch))
    assert (mu.data == 0).all() and (lv.data == 0).all()
    net.params["y.lv.b"].data[:] = 100.0
    _, lv = net.predict_y(net.encode_tree(batch)[1], net.encode_graph(batch))
    assert (lv.data == 20.0).all()
    net.params["y.lv.b"].data[:] = -100.0
    _, lv = net.predict_y(net.encode_tree(batch)[1], net.encode_graph(batch))
    assert (lv.data == -20.0).all()


def test_unlabeled_limit_matches_labeled():
    net, _, batch, _, _ = _setup(SMALL)
    _wake_heads(net)
    net.params["y.lv.W"].data[:] = 0.0
    net.params["y.lv.b"].data[:] = -20.0
    y = np.array([0.4, -1.0, 0.2])
    lab = elbo_labeled(net, batch, y, np.random.default_rng(8)).item()
    unl = elbo_unlabeled(net, batch, np.random.default_rng(8), y_sample=y).item()
    # the analytic entropy at logvar -20 is the only difference
    assert unl + batch.size * 0.5 * (1 + LOG_2PI - 20.0) == pytest.approx(lab, abs=1e-9)


def test_unlabeled_prior_minus_entropy_expectation():
    net, _, _, _, vocab = _setup(["CCO"])
    rec = build_record(parse_smiles("CCO"), vocab)
    batch = Batch([rec] * 400, CompatMasks(vocab), fp_bins=128)
    vals = []
    for seed in range(10):
        t = batch_terms(net, batch, np.random.default_rng(seed))
        vals.append(t.prior.data - t.entropy.data)
    v = np.concatenate(vals)
    # q(y|T,G) is N(0, 1) at zero init
    assert abs(v.mean() - 0.5 * (1 + LOG_2PI)) < 4 * v.std() / math.sqrt(v.size)


def test_same_seed_same_loss():
    net, _, batch, _, _ = _setup(SMALL)
    a = elbo_unlabeled(net, batch, np.random.default_rng(4)).item()
    b = elbo_unlabeled(net, batch, np.random.default_rng(4)).item()
    assert a == b


def test_objective_contract():
    net, _, batch, _, _ = _setup(SMALL)
    rng = np.random.default_rng(0)
    y = np.array([0.1, 0.2, -0.3])
    lab = batch_terms(net, batch, rng, y_obs=y)
    pure = objective(lab, None, 0.0).item()
    assert pure == pytest.approx(tsum(lab.elbo).item() / 3, abs=1e-12)
    # zero-init head predicts 0, so the supervised term is sum(y^2) / batch
    assert objective(lab, None, 2.0).item() == pytest.approx(pure + 2.0 * float((y ** 2).sum()) / 3, abs=1e-12)
    exact = batch_terms(net, batch, np.random.default_rng(0), y_obs=np.zeros(3))
    assert objective(exact, None, 5.0).item() == pytest.approx(objective(exact, None, 0.0).item(), abs=1e-12)
    with pytest.raises(ValueError):
        objective(lab, None, -1.0)
    with pytest.raises(ValueError):
        objective(None, None, 1.0)


def test_y_reaches_both_decoders():
    net, _, batch, _, _ = _setup(SMALL)
    _, hT = net.encode_tree(batch)
    hG = net.encode_graph(batch)
    mu_t, _, mu_g, _ = net.latent_heads(hT, hG)
    for which in ("tree", "graph"):
        y = Parameter(np.array([[0.5], [-0.2], [1.0]]))
        with Tape():
            loss = net.tree_loss(batch, Tensor(mu_t.data), y) if which == "tree" else \
                net.graph_loss(batch, Tensor(mu_g.data), y)
            g = backward(tsum(loss))
        assert np.abs(g[y]).max() > 1e-8, which


def test_graph_encoding_permutation_invariant():
    net, compat, _, mols, vocab = _setup(SMALL)
    rng = np.random.default_rng(2)
    base = Batch([build_record(m, vocab) for m in mols], compat, fp_bins=128)
    perm_mols = [m.relabel(list(rng.permutation(m.num_atoms))) for m in mols]
    perm = Batch([build_record(m, vocab) for m in perm_mols], compat, fp_bins=128)
    assert np.allclose(net.encode_graph(base).data, net.encode_graph(perm).data, atol=1e-9, rtol=0)
    assert np.allclose(net.encode_tree(base)[1].data, net.encode_tree(perm)[1].data, atol=1e-9, rtol=0)
    y = [0.3, -0.1, 0.8]
    a = batch_terms(net, base, np.random.default_rng(1), y_obs=y).elbo.data
    b = batch_terms(net, perm, np.random.default_rng(1), y_obs=y).elbo.data
    assert np.allclose(a, b, atol=1e-9, rtol=0)


def test_isomorphic_inputs_identical_encoding():
    # two spellings of the same molecule
    net, compat, _, _, vocab = _setup(["OCc1ccccc1", "c1ccccc1CO"])
    b = Batch([build_record(parse_smiles(s), vocab) for s in ("OCc1ccccc1", "c1ccc(CO)cc1")], compat, fp_bins=128)
    hG = net.encode_graph(b).data
    assert np.allclose(hG[0], hG[1], atol=1e-9, rtol=0)


def test_path_tree_encoding_independent_of_root():
    mol = parse_smiles("CCCC")
    net, compat, _, _, vocab = _setup(["CCCC"])
    tree = decompose(mol)
    assert len(tree.clusters) == 3 and tree.is_tree()
    hs = []
    for root in range(3):
        t = JunctionTree(tree.clusters, tree.edges, root, mol)
        hs.append(net.encode_tree(Batch([build_record(mol, vocab, tree=t, candidates=False)], compat))[1].data)
    # reversing the cluster order flips which end the schedule starts from
    n = len(tree.clusters)
    flipped = [tree.clusters[n - 1 - i] for i in range(n)]
    edges = [(n - 1 - a, n - 1 - b) for a, b in tree.edges]
    t = JunctionTree(flipped, edges, 0, mol)
    hs.append(net.encode_tree(Batch([build_record(mol, vocab, tree=t, candidates=False)], compat))[1].data)
    for h in hs[1:]:
        assert np.allclose(h, hs[0], atol=1e-9, rtol=0)


def test_single_cluster_tree():
    net, compat, batch, mols, vocab = _setup(["c1ccccc1"])
    rec = batch.records[0]
    assert len(rec.label_target) == 1 and list(rec.topo_target) == [0]
    assert rec.groups == []
    H, hT = net.encode_tree(batch)
    assert np.allclose(hT.data, H.data[:1])
    _, _, mu_g, _ = net.latent_heads(hT, net.encode_graph(batch))
    assert net.graph_loss(batch, mu_g, Tensor([[0.0]])).item() == 0.0


def test_single_atom_graph():
    net, compat, batch, _, _ = _setup(["C"])
    assert batch.records[0].bond_ends.shape == (0, 2)
    hG = net.encode_graph(batch).data
    F = batch.atom_x
    ps = net.params
    S = np.zeros((1, net.config.hidden))
    expect = np.maximum(np.concatenate([F, S], 1) @ ps["genc.out.W"].data + ps["genc.out.b"].data, 0)
    assert np.allclose(hG, expect, atol=1e-12)


def test_oov_cluster_rejected():
    vocab = build_vocab(["CCO"])
    with pytest.raises(OOVCluster):
        build_record(parse_smiles("c1ccccc1"), vocab)


def _desk(n):
    with open(DATA / "desk.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))[:n]
    return [write_smiles(parse_smiles(r["smiles"])) for r in rows]


def test_uniform_init_label_loss():
    smiles = _desk(60)
    net, _, batch, _, vocab = _setup(smiles, hidden=32, mask_labels=False)
    batch.label_mask = None
    _, hT = net.encode_tree(batch)
    mu_t, _, _, _ = net.latent_heads(hT, net.encode_graph(batch))
    _, lp = net.tree_logits(batch, mu_t, Tensor(np.zeros((batch.size, 1))))
    ce = -lp.data[np.arange(len(batch.label_target)), batch.label_target]
    assert abs(ce.mean() / math.log(len(vocab)) - 1.0) < 0.1


def test_uniform_init_candidate_loss():
    smiles = _desk(60)
    net, _, batch, _, _ = _setup(smiles, hidden=32)
    assert batch.num_candidates > 0
    _, hT = net.encode_tree(batch)
    _, _, mu_g, _ = net.latent_heads(hT, net.encode_graph(batch))
    lp = net.candidate_log_probs(batch, mu_g, Tensor(np.zeros((batch.size, 1)))).data
    ce = -lp[np.arange(lp.shape[0]), batch.cand_target]
    expect = np.log(batch.cand_mask.sum(axis=1))
    assert abs(ce.mean() / expect.mean() - 1.0) < 0.1


def test_decode_valid_and_deterministic():
    net, compat, _, _, _ = _setup(_desk(40), hidden=16, z_dim=4)
    rng = np.random.default_rng(0)
    outs = []
    for k in range(30):
        zt, zg = rng.standard_normal(4), rng.standard_normal(4)
        y = float(rng.standard_normal())
        try:
            mol, tree = decode(net, compat, zt, zg, y, np.random.default_rng(k))
        except DecodeOverflow:
            # untrained topology predictors can wander past the node cap
            continue
        again, _ = decode(net, compat, zt, zg, y, np.random.default_rng(k))
        assert is_valid(mol)
        assert write_smiles(mol) == write_smiles(again)
        assert tree.is_tree()
        outs.append(write_smiles(mol))
    assert len(outs) >= 15 and len(set(outs)) > 1


def test_decode_node_cap():
    net, compat, _, _, _ = _setup(["CCCCCC"], hidden=8, z_dim=2, node_cap=2)
    net.params["tdec.topo_out.b"].data[:] = 50.0  # always expand
    with pytest.raises(DecodeOverflow):
        decode(net, compat, np.zeros(2), np.zeros(2), 0.0, np.random.default_rng(0))


@pytest.mark.slow
def test_teacher_forced_overfit():
    from semole.props import NormStats, crippen_logp
    from semole.train import RunConfig, init_state, make_records, train_epoch
    from semole.train.data import TrainData
    smiles = _desk(50)
    y = np.array([crippen_logp(parse_smiles(s)) for s in smiles])
    vocab = Vocab(lab for s in smiles for lab in decompose(parse_smiles(s)).labels)
    stats = NormStats.fit(y)
    recs, _, _ = make_records(smiles, vocab, 40)
    data = TrainData(recs, stats.normalize(y), {}, stats, {})
    cfg = RunConfig(hidden=128, epochs=1, mode="semole", label_fraction=1.0, lr=3e-3)
    state = init_state(cfg, vocab, stats)
    batch = Batch(recs, state.compat)
    best = {"label": 0.0, "candidate": 0.0}
    for e in range(250):
        train_epoch(state, data, e)
        if e % 10 == 9:
            acc = reconstruction_accuracy(state.net, batch, data.y)
            if acc["label"] >= 0.9 and acc["candidate"] >= 0.9:
                best = acc
                break
            best = acc
    assert best["label"] >= 0.9 and best["candidate"] >= 0.9, best
