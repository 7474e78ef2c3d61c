"""``graphrx`` command-line entry point.

Grammar: ``graphrx <command> [--config PATH] [--seed N] [--out DIR] [key=value ...]``.
Settings resolve as command-line flags over config-file keys over defaults;
every report starts with a record echoing the effective configuration.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
import warnings
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from . import checkpoint as ckpt_io
from . import kg
from .datasets import data_path, generate_kg
from .errors import CheckpointError, ConfigError, GraphrxError
from .io import read_molecule_csv, to_dot
from .molecule import FEATURE_SCHEME, from_smiles
from .prop import (PropertyConfig, PropertyDataset, PropTrainConfig, SplitSpec, build_model,
                   evaluate_property, split, train_property)
from .reports import write_jsonl

VERSION = f"graphrx {__version__} (checkpoint format {ckpt_io.FORMAT_VERSION})"


@dataclass(frozen=True)
class Key:
    type: type
    default: object = None
    required: bool = False
    choices: tuple = ()
    help: str = ""


COMMON = {
    "seed": Key(int, 0, help="random seed"),
    "out": Key(str, "out", help="output directory"),
}

_KG_DEFAULTS = kg.KGTrainConfig()
_PROP_MODEL = PropertyConfig()
_PROP_TRAIN = PropTrainConfig()


def _bundled_csv() -> str:
    return str(data_path("contains_nitrogen.csv"))


KEYS: dict[str, dict[str, Key]] = {
    "mol-parse": {"input": Key(str, required=True, help="SMILES file, one per line")},
    "mol-viz": {"input": Key(str, required=True, help="SMILES file, one per line")},
    "gen-kg": {"n_entities": Key(int, 40, help="entities in the cyclic KG (>= 8)")},
    "kg-train": {
        "data": Key(str, required=True, help="directory with train/valid/test.tsv"),
        "model": Key(str, "rotate", choices=kg.MODEL_KINDS),
        "dim": Key(int, 32),
        "epochs": Key(int, _KG_DEFAULTS.epochs),
        "batch_size": Key(int, _KG_DEFAULTS.batch_size),
        "lr": Key(float, _KG_DEFAULTS.lr),
        "negatives": Key(int, _KG_DEFAULTS.negatives),
        "loss": Key(str, _KG_DEFAULTS.loss, choices=kg.LOSS_KINDS),
        "margin": Key(float, _KG_DEFAULTS.margin),
        "adv_temperature": Key(float, _KG_DEFAULTS.adv_temperature),
        "negative_mode": Key(str, _KG_DEFAULTS.negative_mode, choices=("uniform", "filtered")),
        "optimizer": Key(str, _KG_DEFAULTS.optimizer, choices=("adam", "sgd")),
        "init_scale": Key(float, _KG_DEFAULTS.init_scale),
        "resume": Key(str, None, help="checkpoint to continue training from"),
        "workers": Key(int, 1, help="evaluation threads"),
    },
    "kg-eval": {
        "checkpoint": Key(str, required=True),
        "data": Key(str, required=True),
        "split": Key(str, "test", choices=kg.SPLITS),
        "filtered": Key(bool, True),
        "workers": Key(int, 1),
    },
    "kg-query": {
        "checkpoint": Key(str, required=True),
        "head": Key(str, required=True),
        "relation": Key(str, required=True),
        "k": Key(int, 10),
        "include_known": Key(bool, False),
        "data": Key(str, None, help="triple directory whose facts are excluded"),
    },
    "prop-train": {
        "data": Key(str, None, help="molecule CSV (default: bundled contains-nitrogen sample)"),
        "label": Key(str, "contains_nitrogen"),
        "task": Key(str, _PROP_MODEL.task, choices=("binary", "regression")),
        "layer": Key(str, _PROP_MODEL.layer, choices=("gcn", "gin")),
        "num_layers": Key(int, _PROP_MODEL.num_layers),
        "width": Key(int, _PROP_MODEL.width),
        "activation": Key(str, _PROP_MODEL.activation, choices=("relu", "identity", "sigmoid")),
        "readout": Key(str, _PROP_MODEL.readout, choices=("sum", "mean")),
        "learn_eps": Key(bool, _PROP_MODEL.learn_eps),
        "split": Key(str, "random", choices=("random", "scaffold")),
        "frac_train": Key(float, 0.8),
        "frac_valid": Key(float, 0.1),
        "frac_test": Key(float, 0.1),
        "epochs": Key(int, _PROP_TRAIN.epochs),
        "batch_size": Key(int, _PROP_TRAIN.batch_size),
        "lr": Key(float, _PROP_TRAIN.lr),
    },
    "prop-eval": {
        "checkpoint": Key(str, required=True),
        "data": Key(str, None, help="molecule CSV (default: bundled contains-nitrogen sample)"),
        "label": Key(str, None, help="label column (default: the one used in training)"),
    },
}


# ---------------------------------------------------------------- config resolution

_TRUE = {"true", "1", "yes", "on"}
_FALSE = {"false", "0", "no", "off"}


def _coerce_text(name: str, key: Key, text: str):
    if key.default is None and not key.required and text.lower() in ("none", "null", ""):
        return None
    try:
        if key.type is bool:
            low = text.lower()
            if low not in _TRUE | _FALSE:
                raise ValueError
            return low in _TRUE
        return key.type(text)
    except ValueError:
        raise ConfigError(f"{name}={text!r}: expected {key.type.__name__}") from None


def _check_value(name: str, key: Key, value):
    if value is None and key.default is None and not key.required:
        return None
    ok = {
        bool: isinstance(value, bool),
        int: isinstance(value, int) and not isinstance(value, bool),
        float: isinstance(value, (int, float)) and not isinstance(value, bool),
        str: isinstance(value, str),
    }[key.type]
    if not ok:
        raise ConfigError(f"config key {name!r}: expected {key.type.__name__}, got {json.dumps(value)}")
    return float(value) if key.type is float else value


def _unknown(command: str, name: str, keys: dict[str, Key]) -> ConfigError:
    import difflib

    close = difflib.get_close_matches(name, list(keys), n=1)
    hint = f"; did you mean {close[0]!r}?" if close else ""
    return ConfigError(f"unknown key {name!r} for {command}{hint} (valid: {', '.join(sorted(keys))})")


def resolve_config(command: str, config_path: str | None, flags: dict, overrides: list[str]) -> dict:
    keys = {**COMMON, **KEYS[command]}
    cfg = {name: key.default for name, key in keys.items()}
    if config_path:
        try:
            raw = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {config_path} is not valid JSON: {exc.msg} (line {exc.lineno})") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"config {config_path} must hold a JSON object of key/value pairs")
        for name, value in raw.items():
            if name not in keys:
                raise _unknown(command, name, keys)
            cfg[name] = _check_value(name, keys[name], value)
    for name, value in flags.items():
        if value is not None:
            cfg[name] = value
    for item in overrides:
        name, sep, text = item.partition("=")
        if not sep:
            raise ConfigError(f"expected key=value, got {item!r}")
        name = name.strip()
        if name not in keys:
            raise _unknown(command, name, keys)
        cfg[name] = _coerce_text(name, keys[name], text)
    for name, key in keys.items():
        if key.required and cfg[name] is None:
            raise ConfigError(f"{command} needs {name}=... ({key.help or key.type.__name__})")
        if key.choices and cfg[name] is not None and cfg[name] not in key.choices:
            raise ConfigError(f"{name}={cfg[name]!r}: choose from {', '.join(key.choices)}")
    return cfg


def _echo(cfg: dict) -> dict:
    # the output directory is where reports land, not part of the run
    return {k: v for k, v in sorted(cfg.items()) if k != "out"}


def _config_record(command: str, cfg: dict) -> dict:
    return {"type": "config", "command": command, "version": VERSION, "config": _echo(cfg)}


@contextlib.contextmanager
def _captured():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        yield caught
    for w in caught:
        print(f"graphrx: warning: {w.message}", file=sys.stderr)


def _warning_records(caught) -> list[dict]:
    return [{"type": "warning", "message": str(w.message)} for w in caught]


def _read_lines(path: str) -> list[str]:
    try:
        return Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None


# ---------------------------------------------------------------- molecule commands

def cmd_mol_parse(cfg: dict) -> int:
    out = Path(cfg["out"])
    records = [_config_record("mol-parse", cfg)]
    parsed = failed = 0
    first_errors = []
    with _captured() as caught:
        for lineno, line in enumerate(_read_lines(cfg["input"]), start=1):
            smi = line.strip()
            if not smi:
                continue
            try:
                m = from_smiles(smi)
            except GraphrxError as exc:
                failed += 1
                if len(first_errors) < 5:
                    first_errors.append(f"line {lineno}: {exc}")
                records.append({"type": "molecule", "line": lineno, "smiles": smi, "ok": False, "error": str(exc)})
                continue
            parsed += 1
            records.append({"type": "molecule", "line": lineno, "smiles": smi, "ok": True, "atoms": m.num_atoms,
                            "bonds": m.num_bonds, "components": m.num_components, "formula": m.formula()})
    records += _warning_records(caught)
    records.append({"type": "summary", "command": "mol-parse", "parsed": parsed, "failed": failed,
                    "first_errors": first_errors})
    path = write_jsonl(out / "mol_parse.jsonl", records)
    print(f"mol-parse: {parsed} parsed, {failed} failed -> {path}")
    for err in first_errors:
        print(f"  {err}", file=sys.stderr)
    return 1 if failed else 0


def cmd_mol_viz(cfg: dict) -> int:
    out = Path(cfg["out"])
    docs = []
    with _captured():
        for lineno, line in enumerate(_read_lines(cfg["input"]), start=1):
            smi = line.strip()
            if not smi:
                continue
            try:
                m = from_smiles(smi)
            except GraphrxError as exc:
                raise ConfigError(f"{cfg['input']}:{lineno}: {exc}") from None
            docs.append(to_dot(m, f"mol{lineno}"))
    out.mkdir(parents=True, exist_ok=True)
    path = out / "molecules.dot"
    path.write_text("".join(docs), encoding="utf-8", newline="\n")
    write_jsonl(out / "mol_viz.jsonl", [_config_record("mol-viz", cfg),
                                        {"type": "summary", "command": "mol-viz", "graphs": len(docs)}])
    print(f"mol-viz: {len(docs)} graphs -> {path}")
    return 0


# ---------------------------------------------------------------- KG commands

def cmd_gen_kg(cfg: dict) -> int:
    n = cfg["n_entities"]
    if n < 8:
        raise ConfigError(f"n_entities must be at least 8, got {n}")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    splits = generate_kg(n, cfg["seed"])
    for name, triples in splits.items():
        kg.write_triples(out / f"{name}.tsv", triples)
    sizes = {name: len(t) for name, t in splits.items()}
    write_jsonl(out / "gen_kg.jsonl", [_config_record("gen-kg", cfg),
                                       {"type": "summary", "command": "gen-kg", "facts": sum(sizes.values()),
                                        "sizes": sizes}])
    print(f"gen-kg: {sum(sizes.values())} facts ({sizes['train']}/{sizes['valid']}/{sizes['test']}) -> {out}")
    return 0


def _kg_checkpoint(model: kg.EmbeddingModel, store: kg.TripletStore, cfg: dict, epoch: int,
                   metric: float | None) -> ckpt_io.Checkpoint:
    config = {"model": model.kind, "dim": model.dim, "num_entities": store.num_entities,
              "num_relations": store.num_relations,
              "train": {k: cfg[k] for k in ("epochs", "batch_size", "lr", "negatives", "loss", "margin",
                                            "adv_temperature", "negative_mode", "optimizer", "init_scale")}}
    return ckpt_io.Checkpoint("kg", config, {"entity": model.entity.numpy(), "relation": model.relation.numpy()},
                              vocab={"entities": store.entities, "relations": store.relations},
                              meta={"seed": cfg["seed"], "epoch": epoch, "metric": metric})


def _kg_model(ck: ckpt_io.Checkpoint) -> kg.EmbeddingModel:
    from .tensor import Parameter

    c = ck.config
    ent_shape, rel_shape = kg.table_shapes(c["model"], c["dim"], c["num_entities"], c["num_relations"])
    ent, rel = ck.tensors.get("entity"), ck.tensors.get("relation")
    if ent is None or rel is None or ent.shape != ent_shape or rel.shape != rel_shape:
        raise CheckpointError("checkpoint tables do not match its declared model config")
    return kg.EmbeddingModel(c["model"], c["dim"], Parameter(ent, "entity"), Parameter(rel, "relation"))


def _store_for(ck: ckpt_io.Checkpoint, data: str | None) -> kg.TripletStore:
    named = kg.TripletStore.read_tsv_dir(data) if data else {}
    return kg.TripletStore.with_vocab(ck.vocab["entities"], ck.vocab["relations"], named)


def _kg_eval_record(report: kg.EvalReport) -> dict:
    rec = report.to_record()
    return {"type": "eval", "task": "kg", "split": rec.pop("split"), "count": rec.pop("count"), "metrics": rec}


def cmd_kg_train(cfg: dict) -> int:
    out = Path(cfg["out"])
    store = kg.TripletStore.from_tsv_dir(cfg["data"])
    train_cfg = kg.KGTrainConfig(**{f.name: cfg[f.name] for f in fields(kg.KGTrainConfig)})
    model, start_epoch = None, 0
    if cfg["resume"]:
        ck = ckpt_io.load(cfg["resume"], kind="kg", config={"model": cfg["model"], "dim": cfg["dim"]})
        if ck.vocab != {"entities": store.entities, "relations": store.relations}:
            raise CheckpointError(f"{cfg['resume']}: vocabulary differs from the data in {cfg['data']}")
        model, start_epoch = _kg_model(ck), int(ck.meta.get("epoch") or 0)
    with _captured() as caught:
        result = kg.train(store, cfg["model"], cfg["dim"], train_cfg, model=model)
    records = [_config_record("kg-train", cfg)]
    records += [{"type": "epoch", "epoch": start_epoch + i + 1, "loss": loss} for i, loss in enumerate(result.losses)]
    records += _warning_records(caught)
    metric = None
    if store.splits["valid"].shape[0]:
        report = kg.evaluate_filtered(store, result.model, "valid", workers=cfg["workers"])
        records.append(_kg_eval_record(report))
        metric = report.mrr
    epoch = start_epoch + cfg["epochs"]
    ckpt_path = ckpt_io.save(out / "model.ckpt", _kg_checkpoint(result.model, store, cfg, epoch, metric))
    records.append({"type": "summary", "command": "kg-train", "epochs": epoch,
                    "final_loss": result.losses[-1] if result.losses else None, "valid_mrr": metric,
                    "unresolved_negatives": result.unresolved_negatives, "checkpoint": ckpt_path.name})
    write_jsonl(out / "train.jsonl", records)
    mrr = "n/a" if metric is None else f"{metric:.4f}"
    print(f"kg-train: {cfg['model']} d={cfg['dim']} epochs={epoch} valid MRR {mrr} -> {ckpt_path}")
    return 0


def _format_eval_table(report: kg.EvalReport) -> str:
    cols = ("mr", "mrr", "hits@1", "hits@3", "hits@10")
    lines = [f"{'direction':<10}" + "".join(f"{c:>10}" for c in cols)]
    for name in ("head", "tail", "both"):
        row = getattr(report, name)
        lines.append(f"{name:<10}" + "".join(f"{row[c]:>10.4f}" for c in cols))
    return "\n".join(lines)


def cmd_kg_eval(cfg: dict) -> int:
    ck = ckpt_io.load(cfg["checkpoint"], kind="kg")
    model = _kg_model(ck)
    store = _store_for(ck, cfg["data"])
    if not store.splits[cfg["split"]].shape[0]:
        raise ConfigError(f"split {cfg['split']!r} in {cfg['data']} is empty")
    report = kg.evaluate_filtered(store, model, cfg["split"], filtered=cfg["filtered"], workers=cfg["workers"])
    write_jsonl(Path(cfg["out"]) / "eval.jsonl", [_config_record("kg-eval", cfg), _kg_eval_record(report)])
    print(f"kg-eval: {cfg['split']} ({report.count} triples, {'filtered' if cfg['filtered'] else 'raw'})")
    print(_format_eval_table(report))
    return 0


def cmd_kg_query(cfg: dict) -> int:
    ck = ckpt_io.load(cfg["checkpoint"], kind="kg")
    model = _kg_model(ck)
    store = _store_for(ck, cfg["data"])
    hits = kg.query_topk(store, model, cfg["head"], cfg["relation"], cfg["k"], include_known=cfg["include_known"])
    records = [_config_record("kg-query", cfg)]
    records += [{"type": "query", "rank": i, "head": cfg["head"], "relation": cfg["relation"], "entity": name,
                 "score": score} for i, (name, score) in enumerate(hits, start=1)]
    write_jsonl(Path(cfg["out"]) / "query.jsonl", records)
    print(f"kg-query: ({cfg['head']}, {cfg['relation']}, ?) top {len(hits)}")
    for i, (name, score) in enumerate(hits, start=1):
        print(f"{i:>4}  {name:<24} {score:>12.6f}")
    return 0


# ---------------------------------------------------------------- property commands

def _load_dataset(path: str | None, label: str, task: str) -> tuple[PropertyDataset, list]:
    with _captured() as caught:
        table = read_molecule_csv(path or _bundled_csv(), label, task)
    if not table.molecules:
        raise ConfigError(f"{path or _bundled_csv()}: no usable rows")
    return PropertyDataset(table.molecules, np.asarray(table.labels), task), _warning_records(caught)


def _model_config(cfg: dict) -> PropertyConfig:
    return PropertyConfig(layer=cfg["layer"], num_layers=cfg["num_layers"], width=cfg["width"],
                          activation=cfg["activation"], readout=cfg["readout"], task=cfg["task"],
                          learn_eps=cfg["learn_eps"])


def _prop_eval_record(split_name: str, metrics: dict) -> dict:
    m = dict(metrics)
    return {"type": "eval", "task": "property", "split": split_name, "count": m.pop("count"), "metrics": m}


def cmd_prop_train(cfg: dict) -> int:
    out = Path(cfg["out"])
    dataset, warn_records = _load_dataset(cfg["data"], cfg["label"], cfg["task"])
    spec = SplitSpec(cfg["split"], (cfg["frac_train"], cfg["frac_valid"], cfg["frac_test"]), cfg["seed"])
    model_cfg = _model_config(cfg)
    hyper = PropTrainConfig(cfg["epochs"], cfg["batch_size"], cfg["lr"], cfg["seed"])
    with _captured() as caught:
        result = train_property(dataset, model_cfg, spec, hyper)
    records = [_config_record("prop-train", cfg)] + warn_records + _warning_records(caught)
    records.append({"type": "split", "spec": spec.to_record(), "sizes": [len(p) for p in result.splits]})
    for i, loss in enumerate(result.train_losses, start=1):
        records.append({"type": "epoch", "epoch": i, "loss": loss, "valid": result.valid_metrics[i]})
    model = result.restore_best()
    test = evaluate_property(model, dataset, result.splits[2])
    records.append(_prop_eval_record("test", test))
    key = "auroc" if model_cfg.task == "binary" else "rmse"
    metric = result.best_metrics.get(key)
    ck = ckpt_io.Checkpoint("property", {**asdict(model_cfg), "label": cfg["label"]},
                            model.state(), feature_scheme=FEATURE_SCHEME,
                            meta={"seed": cfg["seed"], "epoch": result.best_epoch, "metric": metric})
    ckpt_path = ckpt_io.save(out / "model.ckpt", ck)
    records.append({"type": "summary", "command": "prop-train", "best_epoch": result.best_epoch,
                    f"valid_{key}": metric, f"test_{key}": test.get(key), "skipped_rows": len(warn_records),
                    "checkpoint": ckpt_path.name})
    write_jsonl(out / "train.jsonl", records)
    shown = "n/a" if test.get(key) is None else f"{test[key]:.4f}"
    print(f"prop-train: {model_cfg.layer} best epoch {result.best_epoch}, test {key} {shown} -> {ckpt_path}")
    return 0


def cmd_prop_eval(cfg: dict) -> int:
    ck = ckpt_io.load(cfg["checkpoint"], kind="property")
    if ck.feature_scheme != FEATURE_SCHEME:
        raise CheckpointError(f"{cfg['checkpoint']}: feature scheme {ck.feature_scheme!r} does not match "
                              f"this build's {FEATURE_SCHEME!r}")
    model_keys = {f.name for f in fields(PropertyConfig)}
    model_cfg = PropertyConfig(**{k: v for k, v in ck.config.items() if k in model_keys})
    model = build_model(model_cfg)
    model.load_state(ck.tensors)
    label = cfg["label"] or ck.config.get("label")
    dataset, warn_records = _load_dataset(cfg["data"], label, model_cfg.task)
    metrics = evaluate_property(model, dataset)
    records = [_config_record("prop-eval", cfg)] + warn_records + [_prop_eval_record("all", metrics)]
    write_jsonl(Path(cfg["out"]) / "eval.jsonl", records)
    shown = ", ".join(f"{k} {'n/a' if v is None else format(v, '.4f')}" for k, v in metrics.items() if k != "count")
    print(f"prop-eval: {metrics['count']} molecules: {shown}")
    return 0


HANDLERS: dict[str, Callable[[dict], int]] = {
    "mol-parse": cmd_mol_parse,
    "mol-viz": cmd_mol_viz,
    "gen-kg": cmd_gen_kg,
    "kg-train": cmd_kg_train,
    "kg-eval": cmd_kg_eval,
    "kg-query": cmd_kg_query,
    "prop-train": cmd_prop_train,
    "prop-eval": cmd_prop_eval,
}

_DESCRIPTIONS = {
    "mol-parse": "parse a SMILES file and report atoms, bonds, components and formula per line",
    "mol-viz": "export each molecule of a SMILES file as a DOT graph",
    "gen-kg": "write the deterministic compositional KG as train/valid/test TSVs",
    "kg-train": "train a KG embedding model and save a checkpoint",
    "kg-eval": "filtered link-prediction metrics for a checkpoint on one split",
    "kg-query": "top-k tails for (head, relation, ?)",
    "prop-train": "train a GCN/GIN property model on a molecule CSV",
    "prop-eval": "evaluate a property checkpoint on a molecule CSV",
}


def _key_help(command: str) -> str:
    lines = ["keys (key=value):"]
    for name, key in KEYS[command].items():
        default = "required" if key.required else f"default {key.default!r}"
        extra = f"; one of {', '.join(key.choices)}" if key.choices else ""
        note = f" {key.help}." if key.help else ""
        lines.append(f"  {name} ({key.type.__name__}, {default}{extra}).{note}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphrx", description="Graph learning toolkit command line.")
    parser.add_argument("--version", action="version", version=VERSION)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name in HANDLERS:
        p = sub.add_parser(name, help=_DESCRIPTIONS[name], description=_DESCRIPTIONS[name],
                           usage=f"graphrx {name} [--config PATH] [--seed N] [--out DIR] [key=value ...]",
                           epilog=_key_help(name), formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", help="JSON file of key/value settings")
        p.add_argument("--seed", type=int, help="random seed (default 0)")
        p.add_argument("--out", help="output directory (default ./out)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    bad = [item for item in extra if item.startswith("-") or "=" not in item]
    if bad:
        parser.error(f"unrecognized arguments: {' '.join(bad)} (settings take the form key=value)")
    try:
        cfg = resolve_config(args.command, args.config, {"seed": args.seed, "out": args.out}, extra)
        return HANDLERS[args.command](cfg)
    except (GraphrxError, OSError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"graphrx {args.command}: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
