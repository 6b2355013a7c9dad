from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import MODES, RunConfig, format_config, parse_config, read_config
from .data import (Split, TrainData, interleave, make_records, prepare, seed_streams, split_dataset, train_mask,
                   tree_of, vocab_for)
from .errors import CheckpointError, ConfigError, CorruptCheckpoint, DatasetTooSmall, TrainError, VersionMismatch
from .estimator import SeMole
from .loop import (METRIC_FIELDS, TrainState, evaluate_mae, fit, from_checkpoint, init_state, latent_means,
                   model_config, predict_normalized, resume, to_checkpoint, train_epoch)
from .pipeline import load_dataset, setup
from .schedule import alpha_schedule

__all__ = [
    "Checkpoint", "CheckpointError", "ConfigError", "CorruptCheckpoint", "DatasetTooSmall", "METRIC_FIELDS",
    "MODES", "RunConfig", "SeMole", "Split", "TrainData", "TrainError", "TrainState", "VersionMismatch",
    "alpha_schedule", "evaluate_mae", "fit", "format_config", "from_checkpoint", "init_state", "interleave",
    "latent_means", "load_checkpoint", "load_dataset", "make_records", "model_config", "parse_config",
    "predict_normalized", "prepare", "read_config", "resume", "save_checkpoint", "seed_streams", "setup",
    "split_dataset", "to_checkpoint", "train_epoch", "train_mask", "tree_of", "vocab_for",
]
