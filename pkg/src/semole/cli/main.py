"""``semole`` command line: preprocess, train, eval, generate, score."""
from __future__ import annotations

import argparse
import csv
import os
import pickle
import sys

import numpy as np

from ..chem import ChemError, parse_smiles
from ..juncture import EmptyDataset, JunctionError, Vocab
from ..props import MalformedRow, NormStats, PropertyError, PropertyKind
from ..train import (CheckpointError, ConfigError, DatasetTooSmall, RunConfig, TrainError, evaluate_mae, fit,
                     format_config, from_checkpoint, load_checkpoint, load_dataset, read_config, resume, setup)
from ..train import data as tdata
from .report import generate, score_row

EXIT_OK, EXIT_INPUT, EXIT_CHECKPOINT = 0, 1, 2
# keys that fix the split, the label mask and the normalization
SPLIT_KEYS = ("seed", "test_size", "val_fraction", "label_fraction", "property")


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InputError(message)


def _write_split(path, split):
    with open(path, "w") as fh:
        for name in ("train", "val", "test"):
            fh.write(name + " " + " ".join(str(i) for i in getattr(split, name)) + "\n")


def _read_norm(path) -> NormStats:
    vals = {}
    with open(path) as fh:
        for line in fh:
            k, v = line.split()
            vals[k] = float(v)
    return NormStats(vals["mean"], vals["std"])


def _config_from_args(args, base=None, extra=None) -> RunConfig:
    cfg = base or RunConfig()
    if getattr(args, "config", None):
        cfg = read_config(args.config, cfg, extra)
    over = {}
    for key in ("seed", "epochs", "test_size", "label_fraction", "hidden", "mode", "val_fraction"):
        v = getattr(args, key, None)
        if v is not None:
            over[key] = v
    if getattr(args, "property", None):
        over["property"] = PropertyKind.parse(args.property)
    try:
        return cfg.replace(**over)
    except ValueError as exc:
        raise ConfigError(0, str(exc)) from None


def cmd_preprocess(args, out=print):
    cfg = _config_from_args(args)
    keys, raw = load_dataset(args.data, cfg.property)
    if not keys:
        raise EmptyDataset(f"{args.data} has no molecules")
    state, data, split = setup(cfg, keys, raw)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "dataset.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["smiles", cfg.property.value])
        for k, v in zip(keys, raw):
            w.writerow([k, repr(float(v))])
    state.vocab.save(os.path.join(args.out, "vocab.txt"))
    with open(os.path.join(args.out, "norm.txt"), "w") as fh:
        fh.write(f"mean {data.stats.mean!r}\nstd {data.stats.std!r}\n")
    _write_split(os.path.join(args.out, "split.txt"), split)
    with open(os.path.join(args.out, "preprocess.cfg"), "w") as fh:
        fh.write(format_config(cfg))
    wanted = set(keys)
    cache = {k: v for k, v in sorted(tdata._RECORD_CACHE.items()) if k[0] in wanted}
    with open(os.path.join(args.out, "records.pkl"), "wb") as fh:
        pickle.dump(cache, fh, protocol=4)
    sizes = [r.num_nodes for r in data.records]
    groups = [len(g.fps) for r in data.records for g in r.groups]
    out(f"molecules {len(keys)}")
    out(f"split train {len(split.train)} val {len(split.val)} test {len(split.test)}")
    out(f"labeled {len(data.labeled)} unlabeled {len(data.unlabeled)}")
    out(f"vocab {len(state.vocab)}")
    out(f"mean tree size {np.mean(sizes):.2f}")
    out(f"candidate groups {len(groups)} mean size {np.mean(groups) if groups else 0.0:.2f}")
    out(f"skipped_oov val {data.skipped_oov['val']} test {data.skipped_oov['test']}")
    return EXIT_OK


def _load_preprocessed(data_dir):
    if not os.path.isdir(data_dir):
        raise InputError(f"no preprocess output at {data_dir}")
    for name in ("dataset.csv", "vocab.txt", "norm.txt", "preprocess.cfg"):
        if not os.path.exists(os.path.join(data_dir, name)):
            raise InputError(f"{data_dir} lacks {name}; run preprocess first")
    pre_cfg = read_config(os.path.join(data_dir, "preprocess.cfg"))
    keys, raw = load_dataset(os.path.join(data_dir, "dataset.csv"), pre_cfg.property)
    cache_path = os.path.join(data_dir, "records.pkl")
    if os.path.exists(cache_path):
        with open(cache_path, "rb") as fh:
            tdata._RECORD_CACHE.update(pickle.load(fh))
    return pre_cfg, keys, raw, Vocab.load(os.path.join(data_dir, "vocab.txt")), \
        _read_norm(os.path.join(data_dir, "norm.txt"))


def cmd_train(args, out=print):
    extra = {}
    cfg = _config_from_args(args, extra=extra)
    data_dir = args.data or extra.pop("data", None)
    if extra:
        raise ConfigError(0, f"unknown config keys: {', '.join(sorted(extra))}")
    if not data_dir:
        raise InputError("no preprocess directory: pass --data or set 'data = ...' in the config")
    pre_cfg, keys, raw, vocab, stats = _load_preprocessed(data_dir)
    explicit = _explicit_keys(args.config) if args.config else set()
    for key in SPLIT_KEYS:
        if (key in explicit or getattr(args, key, None) is not None) and getattr(cfg, key) != getattr(pre_cfg, key):
            raise ConfigError(0, f"{key} = {getattr(cfg, key)} disagrees with preprocessing ({getattr(pre_cfg, key)})")
    cfg = cfg.replace(**{k: getattr(pre_cfg, k) for k in SPLIT_KEYS})
    os.makedirs(args.out, exist_ok=True)
    last = os.path.join(args.out, "last.ckpt")
    state = resume(last, cfg) if args.resume and os.path.exists(last) else None
    if state is not None:
        state.cfg = state.cfg.replace(epochs=cfg.epochs)
    state, data, split = setup(cfg, keys, raw, state=state, vocab=vocab, stats=stats)
    with open(os.path.join(args.out, "config.txt"), "w") as fh:
        fh.write(format_config(state.cfg))
    out(f"train {len(data.records)} (labeled {len(data.labeled)}, unlabeled {len(data.unlabeled)}) "
        f"skipped_oov {data.skipped_oov}")

    def log(m):
        out(f"epoch {m['epoch']} alpha {m['alpha']:.3f} objective {m['objective']:.4f} mse {m['mse']:.4f} "
            f"val_mae {m['val_mae']:.4f} labeled_batches {m['labeled_batches']} "
            f"unlabeled_batches {m['unlabeled_batches']}")

    fit(state, data, out_dir=args.out, log=log, extra={"data": os.path.abspath(data_dir)})
    out(f"best val_mae {state.best_val:.4f}")
    return EXIT_OK


def _explicit_keys(path):
    keys = set()
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0]
            if "=" in line:
                keys.add(line.split("=", 1)[0].strip())
    return keys


def _open_checkpoint(path, data_dir=None):
    """(state, dataset keys, raw labels, split) for a checkpoint and its preprocess directory."""
    ck = load_checkpoint(path)
    state = from_checkpoint(ck)
    data_dir = data_dir or ck.extra.get("data")
    if not data_dir:
        raise InputError("checkpoint does not name its dataset; pass --data")
    _, keys, raw, _, _ = _load_preprocessed(data_dir)
    split = tdata.split_dataset(keys, state.cfg, tdata.seed_streams(state.cfg.seed)[0])
    return state, keys, raw, split


def cmd_eval(args, out=print):
    state, keys, raw, split = _open_checkpoint(args.checkpoint, args.data)
    idx = getattr(split, args.split)
    recs, kept, skipped = tdata.make_records([keys[i] for i in idx], state.vocab, state.cfg.candidate_cap,
                                             candidates=False)
    mae = evaluate_mae(state, recs, raw[idx][kept])
    out(f"{args.split} mae {mae:.6f} ({state.cfg.property.value}, {len(recs)} molecules, skipped_oov {skipped})")
    return EXIT_OK


def cmd_generate(args, out=print):
    state, keys, _, split = _open_checkpoint(args.checkpoint, args.data)
    training = frozenset(keys[i] for i in split.train)
    report = generate(state, args.n, args.max_attempts, args.target_y, args.seed, training, args.novelty)
    if args.out:
        report.write_csv(args.out)
        with open(os.path.splitext(args.out)[0] + ".summary.txt", "w") as fh:
            fh.write(report.summary())
    out(report.summary().rstrip("\n"))
    return EXIT_OK


def _read_smiles_file(path):
    with open(path, newline="", encoding="utf-8") as fh:
        text = fh.read().splitlines()
    if text and text[0].strip().lower().startswith("smiles"):
        return [row[0] for row in csv.reader(text[1:]) if row and row[0].strip()]
    return [line.split()[0] for line in text if line.strip()]


def cmd_score(args, out=print):
    smiles = _read_smiles_file(args.input)
    rows = []
    for n, s in enumerate(smiles, 1):
        try:
            rows.append(score_row(parse_smiles(s)))
        except (ChemError, PropertyError) as exc:
            raise InputError(f"molecule {n} ({s}): {exc}") from None
    fh = open(args.out, "w", newline="") if args.out else None
    try:
        w = csv.writer(fh) if fh else None
        header = ["smiles", "molwt", "logp", "qed"]
        if w:
            w.writerow(header)
        else:
            out(",".join(header))
        for s, a, b, c in rows:
            line = [s, f"{a:.4f}", f"{b:.4f}", f"{c:.4f}"]
            if w:
                w.writerow(line)
            else:
                out(",".join(line))
    finally:
        if fh:
            fh.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="semole", description="Semi-supervised junction-tree VAE for molecules.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="flat 'key = value' run configuration")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--property", choices=[k.value for k in PropertyKind])
        sp.add_argument("--test-size", type=int, dest="test_size")
        sp.add_argument("--val-fraction", type=float, dest="val_fraction")
        sp.add_argument("--label-fraction", type=float, dest="label_fraction")

    sp = sub.add_parser("preprocess", help="decompose a SMILES CSV and write vocab, splits and caches")
    sp.add_argument("--data", required=True)
    sp.add_argument("--out", required=True)
    common(sp)
    sp.set_defaults(func=cmd_preprocess)

    sp = sub.add_parser("train", help="train from preprocess output")
    sp.add_argument("--out", required=True)
    sp.add_argument("--data", help="preprocess output directory")
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--hidden", type=int)
    sp.add_argument("--mode", choices=["semole", "semole_pretrained", "semole_supervised"])
    sp.add_argument("--resume", action="store_true", help="continue from OUT/last.ckpt")
    common(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="property MAE of a checkpoint on a split")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--split", default="test", choices=["train", "val", "test"])
    sp.add_argument("--data")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("generate", help="sample molecules and write a report")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--n", type=int, default=3000)
    sp.add_argument("--max-attempts", type=int, default=10000, dest="max_attempts")
    sp.add_argument("--target-y", type=float, dest="target_y", help="conditioning target in property units")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", help="report CSV path")
    sp.add_argument("--data")
    sp.add_argument("--no-novelty", action="store_false", dest="novelty",
                    help="keep molecules already in the training split")
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("score", help="MolWt, LogP and QED for a SMILES file")
    sp.add_argument("--input", required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_score)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CheckpointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except (InputError, ConfigError, MalformedRow, EmptyDataset, DatasetTooSmall, JunctionError, ChemError,
            PropertyError, TrainError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
