"""Sampling molecules from latent codes.

Tree and graph decoding run jointly: every proposed child cluster is glued
onto the partial molecule right away, so only chemically valid partial
molecules are ever extended.
"""
from __future__ import annotations

import numpy as np

from ..chem import MolGraph
from ..juncture import Assembly, Cluster, JunctionTree, enumerate_attachments, label_kind
from ..tensor import Tensor, gather_rows
from .featurize import candidate_fingerprint
from .network import CompatMasks, SeMoleNet


class DecodeOverflow(RuntimeError):
    """Sampling exceeded the node cap."""


def _softmax_choice(logits, mask, rng, stochastic):
    x = np.where(mask, logits, -np.inf)
    if not stochastic:
        return int(np.argmax(x))
    x = x - x.max()
    p = np.where(mask, np.exp(x), 0.0)
    p /= p.sum()
    return int(rng.choice(len(p), p=p))


def decode(net: SeMoleNet, compat: CompatMasks, z_t, z_g, y: float, rng: np.random.Generator,
           stochastic: bool = True) -> tuple[MolGraph, JunctionTree]:
    """Decode one molecule from ``z_t``, ``z_g`` and a normalized property ``y``.

    Raises DecodeOverflow when the tree outgrows the node cap.
    """
    cfg = net.config
    vocab = compat.vocab
    h = cfg.hidden
    emb = net.params["embed"]
    zy_t = Tensor(np.concatenate([np.ravel(z_t), [y]]).reshape(1, -1))
    zy_g_t = Tensor(np.ravel(z_g).reshape(1, -1))
    y_t = Tensor([[y]])
    zero = Tensor(np.zeros((1, h)))

    root_logits = net.label_logits(zero, zy_t)
    root = _softmax_choice(root_logits, np.ones(len(vocab), bool), rng, stochastic)
    labels = [root]
    edges = []
    asm = Assembly.start(0, vocab[root])
    incoming: dict[int, list[tuple[int, np.ndarray]]] = {0: []}
    x_of = lambda i: gather_rows(emb, [labels[i]])
    stack = [(0, None)]

    def msg_sum(i, exclude=None):
        vs = [v for src, v in incoming[i] if src != exclude]
        return Tensor(np.sum(vs, axis=0)) if vs else zero

    while stack:
        node, parent = stack[-1]
        s = msg_sum(node)
        p_expand = 1.0 / (1.0 + np.exp(-net.topo_logit(x_of(node), s, zy_t)))
        expand = (rng.random() < p_expand) if stochastic else p_expand > 0.5
        chosen = None
        if expand:
            if len(labels) >= cfg.node_cap:
                raise DecodeOverflow(f"decoded tree exceeds {cfg.node_cap} nodes")
            m = net.step_message(x_of(node), s)
            logits = net.label_logits(m, zy_t)
            mask = compat.row(labels[node]).copy() if cfg.mask_labels else np.ones(len(vocab), bool)
            child = len(labels)
            while mask.any():
                lab = _softmax_choice(logits, mask, rng, stochastic)
                cands = enumerate_attachments(asm, node, child, vocab[lab], cap=cfg.candidate_cap)
                if not cands:
                    mask[lab] = False
                    continue
                if len(cands) == 1:
                    pick = cands[0]
                else:
                    fps = [candidate_fingerprint(c.assembly, child, cfg.fp_bins) for c in cands]
                    dense = np.zeros((len(fps), cfg.fp_bins))
                    for r, (keys, vals) in enumerate(fps):
                        dense[r, keys] += vals
                    scores = net.candidate_scores(dense, np.zeros(len(fps), np.int64), zy_g_t, y_t).data[:, 0]
                    pick = cands[int(np.argmax(scores))]
                chosen = (lab, pick, m.data.copy())
                break
        if chosen is None:
            stack.pop()
            if parent is not None:
                back = net.step_message(x_of(node), msg_sum(node, exclude=parent))
                incoming[parent].append((node, back.data.copy()))
            continue
        lab, pick, mvec = chosen
        child = len(labels)
        labels.append(lab)
        edges.append((node, child))
        asm = pick.assembly
        incoming[child] = [(node, mvec)]
        stack.append((child, node))

    mol = asm.molecule()
    clusters = [Cluster(label_kind(vocab[lab]), asm.maps[i], vocab[lab]) for i, lab in enumerate(labels)]
    return mol, JunctionTree(clusters, edges, 0, mol)
