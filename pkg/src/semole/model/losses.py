"""Labeled and unlabeled evidence bounds and the combined training objective."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..tensor import (LOG_2PI, Tensor, add, gaussian_entropy, gaussian_kl_rows, reparameterize, scale, square,
                      sub, tsum)
from .network import Batch, SeMoleNet


@dataclass
class Terms:
    """Per-molecule loss columns for one batch."""
    tree: Tensor
    graph: Tensor
    kl_t: Tensor
    kl_g: Tensor
    prior: Tensor  # -2 log N(y; 0, 1)
    entropy: Tensor | None  # unlabeled only
    mu_y: Tensor
    logvar_y: Tensor
    y_obs: np.ndarray | None

    @property
    def elbo(self) -> Tensor:
        """Negative bound per molecule (column)."""
        out = add(add(add(self.tree, self.graph), add(self.kl_t, self.kl_g)), self.prior)
        if self.entropy is not None:
            out = sub(out, self.entropy)
        return out

    def supervised(self) -> Tensor:
        """Squared error of the property head per labeled molecule."""
        return square(sub(self.mu_y, Tensor(self.y_obs.reshape(-1, 1))))


def batch_terms(net: SeMoleNet, batch: Batch, rng: np.random.Generator, y_obs=None,
                y_sample=None) -> Terms:
    """Encode, sample latents, and evaluate both decoders.

    With ``y_obs`` the decoders are conditioned on the observed (normalized)
    labels. Otherwise y is drawn from q(y|T,G) by reparameterization, unless
    ``y_sample`` pins the draw.
    """
    _, hT = net.encode_tree(batch)
    hG = net.encode_graph(batch)
    mu_t, lv_t, mu_g, lv_g = net.latent_heads(hT, hG)
    mu_y, lv_y = net.predict_y(hT, hG)
    z_t = reparameterize(mu_t, lv_t, rng)
    z_g = reparameterize(mu_g, lv_g, rng)
    entropy = None
    if y_obs is not None:
        y_obs = np.asarray(y_obs, dtype=float).reshape(-1)
        y = Tensor(y_obs.reshape(-1, 1))
    elif y_sample is not None:
        y = Tensor(np.asarray(y_sample, dtype=float).reshape(-1, 1))
        entropy = gaussian_entropy(lv_y)
    else:
        y = reparameterize(mu_y, lv_y, rng)
        entropy = gaussian_entropy(lv_y)
    prior = add(square(y), LOG_2PI)
    tree = net.tree_loss(batch, z_t, y)
    graph = net.graph_loss(batch, z_g, y)
    return Terms(tree, graph, gaussian_kl_rows(mu_t, lv_t), gaussian_kl_rows(mu_g, lv_g), prior, entropy,
                 mu_y, lv_y, y_obs)


def elbo_labeled(net, batch, y_obs, rng) -> Tensor:
    """Summed negative labeled bound over the batch (scalar)."""
    return tsum(batch_terms(net, batch, rng, y_obs=y_obs).elbo)


def elbo_unlabeled(net, batch, rng, y_sample=None) -> Tensor:
    """Summed negative unlabeled bound over the batch (scalar)."""
    return tsum(batch_terms(net, batch, rng, y_sample=y_sample).elbo)


def objective(labeled: Terms | None, unlabeled: Terms | None, alpha: float) -> Tensor:
    """(sum labeled bounds + sum unlabeled bounds + alpha * sum squared errors) / batch size."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    total = None
    n = 0
    for terms in (labeled, unlabeled):
        if terms is None:
            continue
        part = tsum(terms.elbo)
        total = part if total is None else add(total, part)
        n += terms.tree.shape[0]
    if labeled is not None and alpha:
        total = add(total, scale(tsum(labeled.supervised()), alpha))
    if total is None:
        raise ValueError("objective needs at least one non-empty batch")
    return scale(total, 1.0 / n)


def reconstruction_accuracy(net: SeMoleNet, batch: Batch, y_obs) -> dict:
    """Teacher-forced argmax accuracy of each decoder head at the posterior means."""
    _, hT = net.encode_tree(batch)
    hG = net.encode_graph(batch)
    mu_t, _, mu_g, _ = net.latent_heads(hT, hG)
    y = Tensor(np.asarray(y_obs, dtype=float).reshape(-1, 1))
    logit, lp = net.tree_logits(batch, mu_t, y)
    lp = np.where(batch.label_mask, lp.data, -np.inf) if (net.config.mask_labels and batch.label_mask is not None) \
        else lp.data
    out = {
        "label": float(np.mean(np.argmax(lp, axis=1) == batch.label_target)),
        "topology": float(np.mean((logit.data[:, 0] > 0) == (batch.topo_target > 0.5))),
        "candidate": float("nan"),
    }
    if batch.num_candidates:
        cp = np.where(batch.cand_mask, net.candidate_log_probs(batch, mu_g, y).data, -np.inf)
        out["candidate"] = float(np.mean(np.argmax(cp, axis=1) == batch.cand_target))
    return out
