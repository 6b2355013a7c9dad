"""scikit-learn style wrapper around the semi-supervised trainer."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from ..chem import ChemError, parse_smiles, write_smiles
from ..model import decode
from ..model.decode import DecodeOverflow
from ..props import NormStats
from .config import RunConfig
from .data import TrainData, make_records, vocab_for
from .loop import fit, init_state, latent_means, predict_normalized


def _smiles_array(X):
    X = np.asarray(X, dtype=object).reshape(-1) if not isinstance(X, str) else None
    if X is None:
        raise ValueError("expected a sequence of SMILES strings, got a single string")
    out = []
    for i, s in enumerate(X):
        if not isinstance(s, str):
            raise ValueError(f"row {i}: expected a SMILES string, got {type(s).__name__}")
        try:
            out.append(write_smiles(parse_smiles(s)))
        except ChemError as exc:
            raise ValueError(f"row {i}: {exc}") from None
    return out


class SeMole(RegressorMixin, BaseEstimator):
    """Semi-supervised property regressor and conditional generator over SMILES.

    ``fit`` takes property values with NaN marking unlabeled molecules, which
    then only contribute through the unlabeled bound.
    """

    def __init__(self, hidden=256, z_dim=56, depth=4, batch_size=16, lr=0.001, epochs=30, alpha_max=1.0,
                 pretrain_epochs=10, ramp_epochs=10, mode="semole_pretrained", candidate_cap=40, node_cap=60,
                 random_state=0):
        self.hidden = hidden
        self.z_dim = z_dim
        self.depth = depth
        self.batch_size = batch_size
        self.lr = lr
        self.epochs = epochs
        self.alpha_max = alpha_max
        self.pretrain_epochs = pretrain_epochs
        self.ramp_epochs = ramp_epochs
        self.mode = mode
        self.candidate_cap = candidate_cap
        self.node_cap = node_cap
        self.random_state = random_state

    def _config(self, fraction):
        return RunConfig(batch_size=self.batch_size, lr=self.lr, z_dim=self.z_dim, hidden=self.hidden,
                         depth=self.depth, epochs=self.epochs, alpha_max=self.alpha_max,
                         pretrain_epochs=self.pretrain_epochs, ramp_epochs=self.ramp_epochs,
                         label_fraction=fraction, seed=int(self.random_state or 0), mode=self.mode,
                         candidate_cap=self.candidate_cap, node_cap=self.node_cap)

    def fit(self, X, y):
        keys = _smiles_array(X)
        y = np.asarray(y, dtype=float).reshape(-1)
        if len(keys) != len(y):
            raise ValueError(f"X has {len(keys)} molecules but y has {len(y)} values")
        if not keys:
            raise ValueError("cannot fit on an empty dataset")
        if np.isinf(y).any():
            raise ValueError("y contains infinite values")
        observed = ~np.isnan(y)
        if not observed.any():
            raise ValueError("y needs at least one observed value")
        cfg = self._config(max(float(observed.mean()), 1e-12))
        vocab = vocab_for(keys)
        stats = NormStats.fit(y[observed])
        recs, _, _ = make_records(keys, vocab, cfg.candidate_cap)
        data = TrainData(recs, np.where(observed, stats.normalize(np.nan_to_num(y)), np.nan), {}, stats,
                         {"train": 0})
        self.state_ = init_state(cfg, vocab, stats)
        self.history_ = fit(self.state_, data)
        self.vocab_ = vocab
        self.n_features_in_ = 1
        return self

    def _check(self):
        if not hasattr(self, "state_"):
            raise NotFittedError("SeMole instance is not fitted yet; call fit first")

    def _records(self, X):
        keys = _smiles_array(X)
        recs, kept, _ = make_records(keys, self.vocab_, self.candidate_cap, candidates=False)
        return len(keys), recs, kept

    def predict(self, X):
        """Posterior-mean property per molecule; NaN where a cluster is outside the vocabulary."""
        self._check()
        n, recs, kept = self._records(X)
        out = np.full(n, np.nan)
        out[kept] = self.state_.stats.denormalize(predict_normalized(self.state_, recs))
        return out

    def transform(self, X):
        """Latent means [mu_T, mu_G] per molecule (NaN rows outside the vocabulary)."""
        self._check()
        n, recs, kept = self._records(X)
        out = np.full((n, 2 * self.z_dim), np.nan)
        out[kept] = latent_means(self.state_, recs)
        return out

    def sample(self, n, target=None, random_state=None, max_attempts=None):
        """Decode ``n`` molecules from the prior, optionally conditioned on a raw property ``target``."""
        self._check()
        rng = np.random.default_rng(random_state)
        st = self.state_
        out = []
        attempts = 0
        limit = max_attempts or 10 * n
        while len(out) < n and attempts < limit:
            attempts += 1
            zt = rng.standard_normal(self.z_dim)
            zg = rng.standard_normal(self.z_dim)
            y = float(st.stats.normalize(target)) if target is not None else float(rng.standard_normal())
            try:
                mol, _ = decode(st.net, st.compat, zt, zg, y, rng)
            except (DecodeOverflow, ChemError):
                continue
            out.append(write_smiles(mol))
        return out
