"""SeMole network, objectives and sampler."""
from .decode import DecodeOverflow, decode
from .featurize import MolRecord, build_record
from .losses import Terms, batch_terms, elbo_labeled, elbo_unlabeled, objective, reconstruction_accuracy
from .network import Batch, CompatMasks, ModelConfig, SeMoleNet

__all__ = [
    "Batch", "CompatMasks", "DecodeOverflow", "ModelConfig", "MolRecord", "SeMoleNet", "Terms",
    "batch_terms", "build_record", "decode", "elbo_labeled", "elbo_unlabeled", "objective",
    "reconstruction_accuracy",
]
