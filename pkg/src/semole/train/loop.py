"""Optimization state, the epoch loop and evaluation."""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from ..juncture import Vocab
from ..model import Batch, CompatMasks, ModelConfig, SeMoleNet, batch_terms, objective
from ..props import NormStats
from ..tensor import AdamState, Tape, adam_step, backward
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import RunConfig
from .data import TrainData, chunks, interleave, seed_streams
from .schedule import alpha_schedule

METRIC_FIELDS = ("epoch", "alpha", "objective", "mse", "kl_t", "kl_g", "val_mae")
EVAL_BATCH = 64


@dataclass
class TrainState:
    cfg: RunConfig
    vocab: Vocab
    stats: NormStats
    net: SeMoleNet
    adam: AdamState
    rng: np.random.Generator
    epoch: int = 0  # completed epochs
    best_val: float = float("inf")

    @property
    def compat(self) -> CompatMasks:
        c = getattr(self, "_compat", None)
        if c is None:
            c = self._compat = CompatMasks(self.vocab)
        return c

    def model_config(self) -> ModelConfig:
        return self.net.config


def model_config(cfg: RunConfig, vocab: Vocab) -> ModelConfig:
    return ModelConfig(len(vocab), hidden=cfg.hidden, z_dim=cfg.z_dim, depth=cfg.depth, node_cap=cfg.node_cap,
                       candidate_cap=cfg.candidate_cap, mask_labels=cfg.mask_labels)


def init_state(cfg: RunConfig, vocab: Vocab, stats: NormStats) -> TrainState:
    streams = seed_streams(cfg.seed)
    net = SeMoleNet(model_config(cfg, vocab), seed=int(streams[2].integers(2 ** 31)))
    return TrainState(cfg, vocab, stats, net, AdamState(lr=cfg.lr), streams[3])


def train_epoch(state: TrainState, data: TrainData, epoch: int | None = None) -> dict:
    """One pass over the training split; returns epoch-mean metrics."""
    cfg = state.cfg
    epoch = state.epoch if epoch is None else epoch
    alpha = alpha_schedule(epoch, cfg)
    rng = state.rng
    lab = data.labeled[rng.permutation(len(data.labeled))]
    unl = data.unlabeled[rng.permutation(len(data.unlabeled))]
    lab_batches = chunks(lab, cfg.batch_size)
    unl_batches = [] if cfg.mode == "semole_supervised" else chunks(unl, cfg.batch_size)
    params = state.net.params.params
    names = {id(p): k for k, p in params.items()}
    tot = {"objective": 0.0, "kl_t": 0.0, "kl_g": 0.0, "sq": 0.0}
    n_mol = n_lab = 0
    li = ui = 0
    for is_lab in interleave(len(lab_batches), len(unl_batches)):
        if is_lab:
            idx = lab_batches[li]
            li += 1
        else:
            idx = unl_batches[ui]
            ui += 1
        batch = Batch([data.records[i] for i in idx], state.compat, state.net.config.fp_bins)
        with Tape() as tape:
            if is_lab:
                terms = batch_terms(state.net, batch, rng, y_obs=data.y[idx])
                loss = objective(terms, None, alpha)
            else:
                terms = batch_terms(state.net, batch, rng)
                loss = objective(None, terms, alpha)
            grads = backward(loss, tape)
        adam_step(params, {names[id(t)]: g for t, g in grads.items() if id(t) in names}, state.adam)
        k = len(idx)
        n_mol += k
        tot["objective"] += loss.item() * k
        tot["kl_t"] += float(terms.kl_t.data.sum())
        tot["kl_g"] += float(terms.kl_g.data.sum())
        if is_lab:
            n_lab += k
            tot["sq"] += float(terms.supervised().data.sum())
    state.epoch = epoch + 1
    return {
        "epoch": epoch + 1,
        "alpha": alpha,
        "objective": tot["objective"] / max(n_mol, 1),
        "mse": tot["sq"] / n_lab if n_lab else float("nan"),
        "kl_t": tot["kl_t"] / max(n_mol, 1),
        "kl_g": tot["kl_g"] / max(n_mol, 1),
        "labeled_batches": len(lab_batches),
        "unlabeled_batches": len(unl_batches),
    }


def predict_normalized(state: TrainState, records) -> np.ndarray:
    """Posterior mean of the normalized property for each record."""
    out = []
    for part in chunks(list(records), EVAL_BATCH):
        b = Batch(part, None, state.net.config.fp_bins)
        _, hT = state.net.encode_tree(b)
        hG = state.net.encode_graph(b)
        mu, _ = state.net.predict_y(hT, hG)
        out.append(mu.data[:, 0])
    return np.concatenate(out) if out else np.zeros(0)


def latent_means(state: TrainState, records) -> np.ndarray:
    """Rows [mu_T, mu_G] for each record."""
    out = []
    for part in chunks(list(records), EVAL_BATCH):
        b = Batch(part, None, state.net.config.fp_bins)
        _, hT = state.net.encode_tree(b)
        hG = state.net.encode_graph(b)
        mu_t, _, mu_g, _ = state.net.latent_heads(hT, hG)
        out.append(np.concatenate([mu_t.data, mu_g.data], axis=1))
    return np.concatenate(out) if out else np.zeros((0, 2 * state.cfg.z_dim))


def evaluate_mae(state: TrainState, records, raw, stats: NormStats | None = None) -> float:
    """Mean absolute error in property units over ``records``."""
    stats = stats or state.stats
    if not len(records):
        return float("nan")
    pred = stats.denormalize(predict_normalized(state, records))
    return float(np.mean(np.abs(pred - np.asarray(raw, dtype=float))))


def to_checkpoint(state: TrainState, extra=None) -> Checkpoint:
    a = state.adam
    return Checkpoint(state.cfg, state.vocab, state.stats, state.net.params.arrays(), state.epoch,
                      state.rng.bit_generator.state, a.step, dict(a.m), dict(a.v), state.best_val, extra or {})


def from_checkpoint(ck: Checkpoint) -> TrainState:
    net = SeMoleNet(model_config(ck.config, ck.vocab), seed=0)
    net.params.load_arrays(ck.params)
    adam = AdamState(lr=ck.config.lr)
    adam.step = ck.adam_step
    adam.m = {k: v.copy() for k, v in ck.adam_m.items()}
    adam.v = {k: v.copy() for k, v in ck.adam_v.items()}
    rng = np.random.default_rng()
    rng.bit_generator.state = ck.rng_state
    return TrainState(ck.config, ck.vocab, ck.stats, net, adam, rng, ck.epoch, ck.best_val)


def resume(path, expect: RunConfig | None = None) -> TrainState:
    return from_checkpoint(load_checkpoint(path, expect))


def _fmt(v):
    return "nan" if isinstance(v, float) and np.isnan(v) else repr(v)


def fit(state: TrainState, data: TrainData, out_dir=None, log=None, extra=None) -> list[dict]:
    """Train up to ``cfg.epochs``; appends to ``metrics.csv`` and keeps best/last checkpoints in ``out_dir``."""
    rows = []
    metrics_path = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        metrics_path = os.path.join(out_dir, "metrics.csv")
        if state.epoch == 0 or not os.path.exists(metrics_path):
            with open(metrics_path, "w", newline="") as fh:
                csv.writer(fh).writerow(METRIC_FIELDS)
    val_recs, val_raw = data.eval_sets.get("val", ([], []))
    while state.epoch < state.cfg.epochs:
        m = train_epoch(state, data)
        m["val_mae"] = evaluate_mae(state, val_recs, val_raw)
        rows.append(m)
        if log is not None:
            log(m)
        if out_dir is not None:
            with open(metrics_path, "a", newline="") as fh:
                csv.writer(fh).writerow([_fmt(m[k]) for k in METRIC_FIELDS])
            if m["val_mae"] < state.best_val:
                state.best_val = m["val_mae"]
                save_checkpoint(os.path.join(out_dir, "best.ckpt"), to_checkpoint(state, extra))
            save_checkpoint(os.path.join(out_dir, "last.ckpt"), to_checkpoint(state, extra))
        elif m["val_mae"] < state.best_val:
            state.best_val = m["val_mae"]
    return rows
