"""Parameter storage and the dense building blocks used by the network."""
from __future__ import annotations

import numpy as np

from ..tensor import Parameter, Tensor, add, concat, matmul, mul, sigmoid, slice_cols, slice_rows, sub, tanh


class ParamStore:
    """Named parameters in creation order, initialized from a seeded generator."""

    def __init__(self, seed: int = 0):
        self.params: dict[str, Tensor] = {}
        self.rng = np.random.default_rng(seed)

    def __getitem__(self, name) -> Tensor:
        return self.params[name]

    def __contains__(self, name):
        return name in self.params

    def __iter__(self):
        return iter(self.params)

    def add(self, name, shape, init="glorot", scale=1.0) -> Tensor:
        if name in self.params:
            raise KeyError(f"duplicate parameter {name}")
        if init == "zeros":
            data = np.zeros(shape)
        elif init == "glorot":
            limit = scale * np.sqrt(6.0 / (shape[0] + shape[1]))
            data = self.rng.uniform(-limit, limit, size=shape)
        else:
            raise ValueError(f"unknown init {init}")
        p = Parameter(data, name=name)
        self.params[name] = p
        return p

    def linear(self, name, n_in, n_out, bias=True, init="glorot", scale=1.0):
        self.add(f"{name}.W", (n_in, n_out), init, scale)
        if bias:
            self.add(f"{name}.b", (1, n_out), "zeros")

    def gru(self, name, n_in, n_hidden):
        self.linear(f"{name}.zr", n_in + n_hidden, 2 * n_hidden)
        self.linear(f"{name}.h", n_in + n_hidden, n_hidden)

    def arrays(self) -> dict[str, np.ndarray]:
        return {k: p.data for k, p in self.params.items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]):
        for k, p in self.params.items():
            p.data = np.array(arrays[k], dtype=np.float64)

    def num_values(self) -> int:
        return sum(p.size for p in self.params.values())


def linear(ps: ParamStore, name, x) -> Tensor:
    out = matmul(x, ps[f"{name}.W"])
    b = f"{name}.b"
    return add(out, ps[b]) if b in ps else out


def gru(ps: ParamStore, name, x, h) -> Tensor:
    """Gated recurrent update of state ``h`` by input ``x``."""
    return gru_step(ps, name, gru_input(ps, name, x), h)


def gru_input(ps: ParamStore, name, x) -> Tensor:
    """Input projections of a GRU, computable once and reused across steps."""
    n_in = x.shape[1]
    w_zr = slice_rows(ps[f"{name}.zr.W"], 0, n_in)
    w_h = slice_rows(ps[f"{name}.h.W"], 0, n_in)
    return concat([add(matmul(x, w_zr), ps[f"{name}.zr.b"]), add(matmul(x, w_h), ps[f"{name}.h.b"])])


def gru_step(ps: ParamStore, name, xp, h) -> Tensor:
    """GRU update of ``h`` from precomputed input projections ``xp``."""
    n = h.shape[1]
    w_zr, w_h = ps[f"{name}.zr.W"], ps[f"{name}.h.W"]
    n_in = w_h.shape[0] - n
    zr = sigmoid(add(slice_cols(xp, 0, 2 * n), matmul(h, slice_rows(w_zr, n_in, n_in + n))))
    z = slice_cols(zr, 0, n)
    r = slice_cols(zr, n, 2 * n)
    cand = tanh(add(slice_cols(xp, 2 * n, 3 * n), matmul(mul(r, h), slice_rows(w_h, n_in, n_in + n))))
    return add(h, mul(z, sub(cand, h)))


def zeros(rows, cols) -> Tensor:
    return Tensor(np.zeros((rows, cols)))
