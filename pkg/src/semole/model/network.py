"""The SeMole network: encoders, latent and property heads, the two decoders."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..juncture import Vocab, can_attach
from ..tensor import (LOGVAR_MAX, LOGVAR_MIN, Tensor, add, clamp, concat, gather_rows, log_softmax, mul, relu,
                      reshape, scale, segment_sum, tanh, tsum)
from .featurize import ATOM_FEATURES, BOND_FEATURES, FP_BINS, MolRecord
from .layers import ParamStore, gru, gru_input, gru_step, linear, zeros


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    hidden: int = 256
    z_dim: int = 56
    depth: int = 4
    node_cap: int = 60
    candidate_cap: int = 40
    fp_bins: int = FP_BINS
    mask_labels: bool = True


class CompatMasks:
    """Which vocabulary labels can attach to each parent label (lazily computed rows)."""

    def __init__(self, vocab: Vocab):
        self.vocab = vocab
        self._rows: dict[int, np.ndarray] = {}

    def row(self, parent: int) -> np.ndarray:
        r = self._rows.get(parent)
        if r is None:
            plab = self.vocab[parent]
            r = np.array([can_attach(plab, lab) for lab in self.vocab.labels], dtype=bool)
            self._rows[parent] = r
        return r


def _level_plan(src, level, deps):
    """Per level: (start, stop, src nodes, dependency positions, dependency ids)."""
    plan = []
    if len(level) == 0:
        return plan
    bounds = np.flatnonzero(np.diff(level)) + 1
    starts = np.concatenate([[0], bounds])
    stops = np.concatenate([bounds, [len(level)]])
    for a, b in zip(starts, stops):
        sel = (deps[:, 0] >= a) & (deps[:, 0] < b) if len(deps) else np.zeros(0, bool)
        d = deps[sel] if len(deps) else deps
        plan.append((int(a), int(b), src[a:b], d[:, 0] - a, d[:, 1]))
    return plan


def _merge_messages(parts):
    """Merge per-molecule message schedules into one level-sorted schedule.

    ``parts`` holds (node offset, src, dst, level, deps). Returns global
    arrays plus the old->new id maps per molecule.
    """
    keys, src, dst, level = [], [], [], []
    for mi, (off, s, d, lv, _) in enumerate(parts):
        for k in range(len(s)):
            keys.append((int(lv[k]), mi, k))
    keys.sort()
    remap = [np.zeros(len(p[1]), dtype=np.int64) for p in parts]
    for g, (lv, mi, k) in enumerate(keys):
        off, s, d, _, _ = parts[mi]
        remap[mi][k] = g
        src.append(off + s[k])
        dst.append(off + d[k])
        level.append(lv)
    deps = [np.stack([remap[mi][dp[:, 0]], remap[mi][dp[:, 1]]], axis=1)
            for mi, (_, _, _, _, dp) in enumerate(parts) if len(dp)]
    deps = np.concatenate(deps) if deps else np.zeros((0, 2), dtype=np.int64)
    deps = deps[np.lexsort((deps[:, 1], deps[:, 0]))] if len(deps) else deps
    return (np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64),
            np.array(level, dtype=np.int64), deps, remap)


class Batch:
    """Index arrays describing a set of molecules for one batched forward pass."""

    def __init__(self, records: list[MolRecord], compat: CompatMasks | None = None, fp_bins=FP_BINS):
        self.records = records
        self.size = B = len(records)
        sizes = [r.num_nodes for r in records]
        offs = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        self.num_nodes = int(offs[-1])
        self.node_label = np.concatenate([r.labels for r in records])
        self.node_mol = np.repeat(np.arange(B), sizes)
        self.node_inv = np.repeat(1.0 / np.array(sizes, float), sizes).reshape(-1, 1)

        es, ed, el, edeps, _ = _merge_messages(
            [(offs[i], r.enc_src, r.enc_dst, r.enc_level, r.enc_deps) for i, r in enumerate(records)])
        self.enc_dst = ed
        self.enc_plan = _level_plan(es, el, edeps)

        ds, dd, dl, ddeps, remap = _merge_messages(
            [(offs[i], r.dec_src, r.dec_dst, r.dec_level, r.dec_deps) for i, r in enumerate(records)])
        self.dec_plan = _level_plan(ds, dl, ddeps)
        self.num_dec_msgs = len(ds)

        topo_node, topo_target, topo_mol, tdep_pos, tdep_id = [], [], [], [], []
        lab_msg, lab_target, lab_mol, lab_mask = [], [], [], []
        t_off = 0
        V = None if compat is None else len(compat.vocab)
        for i, r in enumerate(records):
            topo_node.append(r.topo_node + offs[i])
            topo_target.append(r.topo_target)
            topo_mol.append(np.full(len(r.topo_node), i))
            if len(r.topo_deps):
                tdep_pos.append(r.topo_deps[:, 0] + t_off)
                tdep_id.append(remap[i][r.topo_deps[:, 1]])
            t_off += len(r.topo_node)
            lm = np.where(r.label_msg >= 0, 0, -1)
            lm[r.label_msg >= 0] = remap[i][r.label_msg[r.label_msg >= 0]]
            lab_msg.append(lm)
            lab_target.append(r.label_target)
            lab_mol.append(np.full(len(r.label_msg), i))
            if V is not None:
                for parent, target in zip(r.label_parent, r.label_target):
                    row = np.ones(V, bool) if parent < 0 else compat.row(int(parent)).copy()
                    row[target] = True
                    lab_mask.append(row)
        self.topo_node = np.concatenate(topo_node)
        self.topo_target = np.concatenate(topo_target).astype(float)
        self.topo_mol = np.concatenate(topo_mol)
        self.topo_dep_pos = np.concatenate(tdep_pos) if tdep_pos else np.zeros(0, np.int64)
        self.topo_dep_id = np.concatenate(tdep_id) if tdep_id else np.zeros(0, np.int64)
        self.label_msg = np.concatenate(lab_msg)
        self.label_target = np.concatenate(lab_target)
        self.label_mol = np.concatenate(lab_mol)
        self.label_mask = np.array(lab_mask) if lab_mask else None

        # molecular graphs
        a_sizes = [len(r.atom_x) for r in records]
        a_offs = np.concatenate([[0], np.cumsum(a_sizes)]).astype(np.int64)
        self.num_atoms = int(a_offs[-1])
        self.atom_x = np.concatenate([r.atom_x for r in records])
        self.atom_mol = np.repeat(np.arange(B), a_sizes)
        self.atom_inv = np.repeat(1.0 / np.array(a_sizes, float), a_sizes).reshape(-1, 1)
        src, dst, bx = [], [], []
        for i, r in enumerate(records):
            if len(r.bond_ends):
                a, b = r.bond_ends[:, 0] + a_offs[i], r.bond_ends[:, 1] + a_offs[i]
                src.append(np.concatenate([a, b]))
                dst.append(np.concatenate([b, a]))
                bx.append(np.concatenate([r.bond_x, r.bond_x]))
        if src:
            nb = [len(s) // 2 for s in src]
            self.bond_src = np.concatenate(src)
            self.bond_dst = np.concatenate(dst)
            self.bond_x = np.concatenate(bx)
            rev = []
            base = 0
            for n in nb:
                k = np.arange(2 * n)
                rev.append(base + np.where(k < n, k + n, k - n))
                base += 2 * n
            self.bond_rev = np.concatenate(rev)
        else:
            self.bond_src = self.bond_dst = self.bond_rev = np.zeros(0, np.int64)
            self.bond_x = np.zeros((0, BOND_FEATURES))

        # attachment candidates
        fps, cand_mol, idx_rows, targets, group_mol = [], [], [], [], []
        n_c = 0
        groups = [(i, g) for i, r in enumerate(records) for g in r.groups]
        max_c = max((len(g.fps) for _, g in groups), default=0)
        for i, g in groups:
            k = len(g.fps)
            fps.extend(g.fps)
            cand_mol.extend([i] * k)
            idx_rows.append(list(range(n_c, n_c + k)) + [-1] * (max_c - k))
            targets.append(g.target)
            group_mol.append(i)
            n_c += k
        self.num_candidates = n_c
        if n_c:
            dense = np.zeros((n_c, fp_bins))
            for row, (keys, vals) in enumerate(fps):
                dense[row, keys % fp_bins] += vals
            self.cand_fp = dense
            self.cand_mol = np.array(cand_mol, dtype=np.int64)
            idx = np.array(idx_rows, dtype=np.int64)
            self.cand_mask = idx >= 0
            self.cand_index = np.where(idx >= 0, idx, n_c)  # row n_c is a zero pad
            self.cand_target = np.array(targets, dtype=np.int64)
            self.group_mol = np.array(group_mol, dtype=np.int64)


def _onehot(index, width):
    out = np.zeros((len(index), width))
    out[np.arange(len(index)), index] = 1.0
    return out


def _per_mol(values: Tensor, mol_index, B) -> Tensor:
    """Column of per-molecule sums of per-row values."""
    return segment_sum(values, mol_index, B)


class SeMoleNet:
    def __init__(self, config: ModelConfig, seed: int = 0):
        self.config = c = config
        h, z, V = c.hidden, c.z_dim, c.vocab_size
        ps = self.params = ParamStore(seed)
        ps.add("embed", (V, h), "glorot")
        # tree encoder: message GRU shared by both directions, node-state GRU
        ps.gru("tenc.msg", h, h)
        ps.gru("tenc.node", h, h)
        # graph encoder
        ps.linear("genc.in", ATOM_FEATURES + BOND_FEATURES, h)
        ps.gru("genc.msg", h, h)
        ps.linear("genc.out", ATOM_FEATURES + h, h)
        # latent heads
        for name in ("zt", "zg"):
            ps.linear(f"{name}.mu", h, z)
            ps.linear(f"{name}.lv", h, z)
        # property head with zero-initialized output layer
        ps.linear("y.hid", 2 * h, h)
        ps.linear("y.mu", h, 1, init="zeros")
        ps.linear("y.lv", h, 1, init="zeros")
        # tree decoder
        ps.gru("tdec.msg", h, h)
        ps.linear("tdec.topo_hid", 2 * h + z + 1, h)
        ps.linear("tdec.topo_out", h, 1, scale=0.1)
        ps.linear("tdec.label_hid", h + z + 1, h)
        ps.linear("tdec.label_out", h, V, scale=0.1)
        # graph decoder: candidate scorer
        ps.linear("gdec.fp", c.fp_bins, h)
        ps.linear("gdec.cand", h, h, bias=False)
        ps.linear("gdec.ctx", z + 1, h)
        ps.linear("gdec.out", h, 1, scale=0.1)

    # encoders
    def encode_tree(self, batch: Batch):
        """(node states, h_T) from upward and downward tree messages."""
        ps = self.params
        h = self.config.hidden
        X = gather_rows(ps["embed"], batch.node_label)
        M = self._run_messages(X, batch.enc_plan, "tenc.msg", h)
        incoming = segment_sum(M, batch.enc_dst, batch.num_nodes) if M is not None else zeros(batch.num_nodes, h)
        H = gru(ps, "tenc.node", X, incoming)
        hT = segment_sum(mul(H, Tensor(batch.node_inv)), batch.node_mol, batch.size)
        return H, hT

    def _run_messages(self, X, plan, name, h):
        M = None
        XP = gru_input(self.params, name, X) if plan else None
        for start, stop, src, dep_pos, dep_id in plan:
            x_in = gather_rows(XP, src)
            n = stop - start
            if len(dep_id):
                s = segment_sum(gather_rows(M, dep_id), dep_pos, n)
            else:
                s = zeros(n, h)
            m = gru_step(self.params, name, x_in, s)
            M = m if M is None else concat([M, m], axis=0)
        return M

    def encode_graph(self, batch: Batch) -> Tensor:
        ps = self.params
        h = self.config.hidden
        F = Tensor(batch.atom_x)
        E = len(batch.bond_src)
        if E:
            xin = relu(linear(ps, "genc.in", Tensor(np.concatenate([batch.atom_x[batch.bond_src], batch.bond_x], 1))))
            xp = gru_input(ps, "genc.msg", xin)
            m = zeros(E, h)
            for _ in range(self.config.depth):
                S = segment_sum(m, batch.bond_dst, batch.num_atoms)
                msum = gather_rows(S, batch.bond_src) - gather_rows(m, batch.bond_rev)
                m = gru_step(ps, "genc.msg", xp, msum)
            S = segment_sum(m, batch.bond_dst, batch.num_atoms)
        else:
            S = zeros(batch.num_atoms, h)
        Hatom = relu(linear(ps, "genc.out", concat([F, S])))
        return segment_sum(mul(Hatom, Tensor(batch.atom_inv)), batch.atom_mol, batch.size)

    # heads
    def latent_heads(self, hT, hG):
        ps = self.params
        return (linear(ps, "zt.mu", hT), linear(ps, "zt.lv", hT),
                linear(ps, "zg.mu", hG), linear(ps, "zg.lv", hG))

    def predict_y(self, hT, hG):
        """(mu_y, logvar_y) columns of the Gaussian property head."""
        ps = self.params
        hid = relu(linear(ps, "y.hid", concat([hT, hG])))
        return linear(ps, "y.mu", hid), clamp(linear(ps, "y.lv", hid), LOGVAR_MIN, LOGVAR_MAX)

    # decoders (teacher forced)
    def tree_logits(self, batch: Batch, zT, y):
        """Teacher-forced (topology logits column, label log-probabilities)."""
        ps = self.params
        h = self.config.hidden
        zy = concat([zT, y])
        X = gather_rows(ps["embed"], batch.node_label)
        M = self._run_messages(X, batch.dec_plan, "tdec.msg", h)
        T = len(batch.topo_node)
        if len(batch.topo_dep_id):
            s = segment_sum(gather_rows(M, batch.topo_dep_id), batch.topo_dep_pos, T)
        else:
            s = zeros(T, h)
        hid = relu(linear(ps, "tdec.topo_hid",
                          concat([gather_rows(X, batch.topo_node), s, gather_rows(zy, batch.topo_mol)])))
        logit = linear(ps, "tdec.topo_out", hid)
        msgs = zeros(1, h) if M is None else concat([zeros(1, h), M], axis=0)
        lin = gather_rows(msgs, batch.label_msg + 1)
        hid = relu(linear(ps, "tdec.label_hid", concat([lin, gather_rows(zy, batch.label_mol)])))
        logits = linear(ps, "tdec.label_out", hid)
        mask = batch.label_mask if (self.config.mask_labels and batch.label_mask is not None) else None
        return logit, log_softmax(logits, mask)

    def tree_loss(self, batch: Batch, zT, y) -> Tensor:
        """Per-molecule topology BCE plus label cross-entropy (column)."""
        logit, lp = self.tree_logits(batch, zT, y)
        topo = self._bce_rows(logit, batch.topo_target)
        ce = scale(tsum(mul(lp, Tensor(_onehot(batch.label_target, self.config.vocab_size))), axis=1), -1.0)
        return add(_per_mol(topo, batch.topo_mol, batch.size), _per_mol(ce, batch.label_mol, batch.size))

    @staticmethod
    def _bce_rows(logit, target):
        pair = concat([zeros(logit.shape[0], 1), logit])
        lp = log_softmax(pair)
        w = np.stack([1.0 - target, target], axis=1)
        return scale(tsum(mul(lp, Tensor(w)), axis=1), -1.0)

    def candidate_scores(self, fp, cand_mol, zG, y) -> Tensor:
        ps = self.params
        enc = relu(linear(ps, "gdec.fp", Tensor(fp)))
        ctx = linear(ps, "gdec.ctx", concat([zG, y]))
        hid = tanh(add(linear(ps, "gdec.cand", enc), gather_rows(ctx, cand_mol)))
        return linear(ps, "gdec.out", hid)

    def candidate_log_probs(self, batch: Batch, zG, y) -> Tensor:
        """(groups x max candidates) log-probabilities; padded entries are 0."""
        score = self.candidate_scores(batch.cand_fp, batch.cand_mol, zG, y)
        padded = concat([score, zeros(1, 1)], axis=0)
        G, C = batch.cand_index.shape
        S = reshape(gather_rows(padded, batch.cand_index.reshape(-1)), (G, C))
        return log_softmax(S, batch.cand_mask)

    def graph_loss(self, batch: Batch, zG, y) -> Tensor:
        """Per-molecule attachment cross-entropy (column); zero without choices."""
        if not batch.num_candidates:
            return zeros(batch.size, 1)
        lp = self.candidate_log_probs(batch, zG, y)
        ce = scale(tsum(mul(lp, Tensor(_onehot(batch.cand_target, lp.shape[1]))), axis=1), -1.0)
        return _per_mol(ce, batch.group_mol, batch.size)

    # numpy views used by the sampler
    def step_message(self, x, s):
        return gru(self.params, "tdec.msg", x, s)

    def topo_logit(self, x, s, zy):
        ps = self.params
        return linear(ps, "tdec.topo_out", relu(linear(ps, "tdec.topo_hid", concat([x, s, zy])))).item()

    def label_logits(self, m, zy) -> np.ndarray:
        ps = self.params
        hid = relu(linear(ps, "tdec.label_hid", concat([m, zy])))
        return linear(ps, "tdec.label_out", hid).data[0]
