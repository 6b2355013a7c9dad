"""Dense float64 tensors with reverse-mode autodiff and Adam."""
from .core import (NonFiniteError, NonScalarLoss, Parameter, ShapeMismatch, Tape, Tensor, TensorError, add,
                   as_tensor, backward, clamp, concat, exp, gather_rows, log, log_softmax, matmul, mean, mul,
                   relu, reshape, scale, segment_sum, sigmoid, slice_cols, slice_rows, square, stop_gradient,
                   sub, tanh, tsum)
from .functional import (LOG_2PI, LOGVAR_MAX, LOGVAR_MIN, binary_cross_entropy_logits, gaussian_entropy,
                         gaussian_kl, gaussian_kl_rows, reparameterize, std_normal_nll2)
from .optim import AdamState, adam_step
from .serialize import CorruptBuffer, dump_arrays, load_arrays

__all__ = [
    "AdamState", "CorruptBuffer", "LOG_2PI", "LOGVAR_MAX", "LOGVAR_MIN", "NonFiniteError", "NonScalarLoss",
    "Parameter", "ShapeMismatch", "Tape", "Tensor", "TensorError", "adam_step", "add", "as_tensor",
    "backward", "binary_cross_entropy_logits", "clamp", "concat", "dump_arrays", "exp", "gather_rows",
    "gaussian_entropy", "gaussian_kl", "gaussian_kl_rows", "load_arrays", "log", "log_softmax", "matmul",
    "mean", "mul", "relu", "reparameterize", "reshape", "scale", "segment_sum", "sigmoid", "slice_cols",
    "slice_rows", "square", "std_normal_nll2", "stop_gradient", "sub", "tanh", "tsum",
]
