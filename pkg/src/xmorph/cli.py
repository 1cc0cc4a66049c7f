"""Command-line front end.

Subcommands: synth, featurize, augment, train-edn, train-kema, evaluate,
report.  Option precedence is CLI > XMORPH_SEED env var (seed only) >
--config key=value file > defaults.  Every artifact-producing run writes a
run.json with the fully resolved configuration.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .augment import augment_trials
from .correspond import identity_pairs, kema_inputs, property_pairs
from .data import (
    DatasetManifest,
    MODALITIES,
    ObjectDescriptor,
    RobotDescriptor,
    SensorimotorContext,
    TrialRecord,
    load_manifest,
    save_manifest,
    select_trials,
    with_records,
)
from .edn import EdnConfig, save_edn, train_edn
from .errors import MissingFile, SchemaViolation, XmorphError
from .evaluate import (
    EvaluationReport,
    ProtocolConfig,
    load_report_csv,
    run_protocol,
)
from .featurize import (
    audio_feature,
    read_timeseries_csv,
    read_wav,
    temporal_bin,
)
from .kema import KemaConfig, fit_kema, save_kema
from .svg import LineChart, Series
from .svm import SvmConfig
from .synth import SynthConfig, SynthRobot, generate_synthetic_dataset


def _read_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise MissingFile(f"config file not found: {p}")
    out = {}
    for lineno, line in enumerate(p.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SchemaViolation(f"{p}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


class _Resolver:
    """CLI > env (seed) > config file > default."""

    def __init__(self, args: argparse.Namespace, file_conf: dict):
        self.args = args
        self.file = file_conf
        self.resolved: dict = {}

    def get(self, key: str, default, cast=str):
        cli = getattr(self.args, key.replace("-", "_"), None)
        if cli is not None:
            value = cli
        elif key == "seed" and os.environ.get("XMORPH_SEED"):
            value = os.environ["XMORPH_SEED"]
        elif key in self.file:
            value = self.file[key]
        else:
            value = default
        if value is not None and not isinstance(value, cast if cast is not bool else int):
            if cast is bool:
                value = str(value).lower() in ("1", "true", "yes")
            else:
                value = cast(value)
        self.resolved[key] = value
        return value


def _write_run_json(out_dir: Path, command: str, resolved: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = {
        "command": command,
        "config": resolved,
        "version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    (out_dir / "run.json").write_text(json.dumps(doc, indent=1, default=str))


def _parse_contexts(text: str | None):
    if not text:
        return None
    out = []
    for part in text.split(","):
        behavior, _, modality = part.strip().partition(":")
        if not modality:
            raise SchemaViolation(
                f"context {part!r} must be behavior:modality")
        out.append((behavior, modality))
    return tuple(out)


def _parse_ints(text: str | None):
    if not text:
        return None
    return tuple(int(v) for v in text.split(","))


# -- subcommands ------------------------------------------------------------------

def cmd_synth(args) -> int:
    r = _Resolver(args, _read_config_file(args.config))
    out = Path(r.get("out", None))
    robots_spec = r.get("robots", "baxter:7:0.25,ur5:6:0.25")
    robots = []
    for part in robots_spec.split(","):
        name, joints, noise = part.split(":")
        robots.append(SynthRobot(name=name, effort_joints=int(joints),
                                 noise_sigma=float(noise)))
    kwargs = dict(
        latent_dim=r.get("latent-dim", 8, int),
        objects=r.get("objects", 95, int),
        trials_per_object=r.get("trials", 5, int),
        robots=tuple(robots),
        class_separation=r.get("class-separation", 4.0, float),
        latent_spread=r.get("latent-spread", 1.0, float),
        seed=r.get("seed", 0, int),
    )
    contexts = _parse_contexts(r.get("contexts", None))
    if contexts:
        kwargs["contexts"] = contexts
    config = SynthConfig(**kwargs)
    manifest = generate_synthetic_dataset(config, out_dir=out)
    _write_run_json(out, "synth", r.resolved)
    print(f"wrote {len(manifest.records)} records "
          f"({manifest.interaction_count} interactions) to {out}")
    return 0


def cmd_featurize(args) -> int:
    r = _Resolver(args, _read_config_file(args.config))
    raw = Path(r.get("raw", None))
    out = Path(r.get("out", None))
    if not raw.is_dir():
        raise MissingFile(f"raw directory not found: {raw}")
    objects_file = raw / "objects.json"
    if not objects_file.is_file():
        raise MissingFile(f"expected object catalog at {objects_file}")
    objects = tuple(
        ObjectDescriptor(id=o["id"], color=o["color"], content=o["content"],
                         weight=o["weight"])
        for o in json.loads(objects_file.read_text()))
    known = {o.id for o in objects}

    per_robot: dict[str, dict] = {}
    records = []
    for robot_dir in sorted(p for p in raw.iterdir() if p.is_dir()):
        robot = robot_dir.name
        info = per_robot.setdefault(
            robot, {"behaviors": set(), "modalities": set(), "joints": 0,
                    "trials": 0})
        for behavior_dir in sorted(p for p in robot_dir.iterdir() if p.is_dir()):
            for modality_dir in sorted(p for p in behavior_dir.iterdir()
                                       if p.is_dir()):
                behavior, modality = behavior_dir.name, modality_dir.name
                info["behaviors"].add(behavior)
                info["modalities"].add(modality)
                for f in sorted(modality_dir.iterdir()):
                    stem, _, trial_part = f.stem.partition("__t")
                    if stem not in known:
                        raise SchemaViolation(
                            f"{f}: object {stem!r} not in objects.json")
                    trial = int(trial_part)
                    if modality == "audio":
                        feat = audio_feature(read_wav(f))
                    else:
                        kind = "joint-effort" if modality == "effort" \
                            else "endpoint-force"
                        sig = read_timeseries_csv(f, kind)
                        if modality == "effort":
                            info["joints"] = max(info["joints"], sig.channels)
                        feat = temporal_bin(sig)
                    info["trials"] = max(info["trials"], trial + 1)
                    records.append((robot, behavior, modality, stem, trial,
                                    feat.vector))

    robots = tuple(
        RobotDescriptor(name=name, behaviors=tuple(sorted(i["behaviors"])),
                        modalities=tuple(sorted(i["modalities"])),
                        trials_per_object=i["trials"],
                        effort_joints=i["joints"])
        for name, i in sorted(per_robot.items()))
    by_name = {rb.name: rb for rb in robots}
    trial_records = tuple(
        TrialRecord(
            object_id=oid,
            context=SensorimotorContext(robot=robot, behavior=behavior,
                                        modality=modality,
                                        feature_dim=by_name[robot].feature_dim(modality)),
            trial_index=trial, feature=vec)
        for robot, behavior, modality, oid, trial, vec in records)
    manifest = DatasetManifest(robots=robots, objects=objects,
                               records=trial_records)
    save_manifest(manifest, out)
    _write_run_json(out, "featurize", r.resolved)
    print(f"featurized {len(trial_records)} records to {out}")
    return 0


def cmd_augment(args) -> int:
    r = _Resolver(args, _read_config_file(args.config))
    manifest = load_manifest(r.get("manifest", None))
    out = Path(r.get("out", None))
    k = r.get("k", 5, int)
    seed = r.get("seed", 0, int)
    real = select_trials(manifest, provenance="real")
    augmented = augment_trials(real, k=k, seed=seed)
    merged = with_records(manifest, list(manifest.records) + augmented)
    save_manifest(merged, out)
    _write_run_json(out, "augment", r.resolved)
    print(f"added {len(augmented)} augmented records -> {out}")
    return 0


def _transfer_records(args, r):
    manifest = load_manifest(r.get("manifest", None))
    source, target = r.get("source", None), r.get("target", None)
    behavior, modality = r.get("behavior", None), r.get("modality", None)
    src = select_trials(manifest, robot=source, behavior=behavior,
                        modality=modality, provenance="real")
    tgt = select_trials(manifest, robot=target, behavior=behavior,
                        modality=modality)
    return manifest, src, tgt


def cmd_train_edn(args) -> int:
    r = _Resolver(args, _read_config_file(args.config))
    manifest, src, tgt = _transfer_records(args, r)
    mode = r.get("mode", "identity")
    if mode == "identity":
        pairs = identity_pairs(src, tgt)
    else:
        pairs = property_pairs(src, tgt, r.get("property", "weight"), manifest)
    config = EdnConfig(
        encoder_units=_parse_ints(r.get("encoder-units", "1000,500,250")),
        latent_dim=r.get("latent-dim", 125, int),
        learning_rate=r.get("lr", 1e-4, float),
        epochs=r.get("epochs", 1000, int),
        batch_size=r.get("batch-size", 32, int),
        seed=r.get("seed", 0, int))
    model = train_edn(pairs, config)
    out = Path(r.get("out", None))
    out.mkdir(parents=True, exist_ok=True)
    save_edn(model, out / "edn_model.npz")
    _write_run_json(out, "train-edn", r.resolved)
    print(f"trained on {len(pairs)} pairs; final RMSE {model.training_loss:.6g}; "
          f"model at {out / 'edn_model.npz'}")
    return 0


def cmd_train_kema(args) -> int:
    r = _Resolver(args, _read_config_file(args.config))
    manifest, src, tgt = _transfer_records(args, r)
    label = r.get("label", "objectId")
    inputs = kema_inputs(src, tgt, label, manifest)
    latent = r.get("latent-dim", None, int)
    config = KemaConfig(
        mu=r.get("mu", 0.5, float),
        knn_geometry=r.get("knn", 5, int),
        latent_dim=latent,
        eig_regularization=r.get("eig-reg", 1e-6, float),
        seed=r.get("seed", 0, int))
    model = fit_kema(inputs["X1"], inputs["y1"], inputs["X2"], inputs["y2"],
                     config)
    out = Path(r.get("out", None))
    out.mkdir(parents=True, exist_ok=True)
    save_kema(model, out / "kema_model.npz")
    _write_run_json(out, "train-kema", r.resolved)
    print(f"aligned {inputs['X1'].shape[0]}+{inputs['X2'].shape[0]} samples "
          f"into {model.latent_dim} latent dims; model at "
          f"{out / 'kema_model.npz'}")
    return 0


def cmd_evaluate(args) -> int:
    r = _Resolver(args, _read_config_file(args.config))
    manifest = load_manifest(r.get("manifest", None))
    config = ProtocolConfig(
        task=r.get("task", None),
        method=r.get("method", None),
        source=r.get("source", None),
        target=r.get("target", None),
        contexts=_parse_contexts(r.get("contexts", None)),
        repeats=r.get("repeats", 10, int),
        folds=r.get("folds", 5, int),
        budget_schedule=_parse_ints(r.get("budgets", None)),
        m=r.get("m", None, int),
        augment_k=r.get("augment-k", 5, int),
        weight_scheme=r.get("weight-scheme", "cv3"),
        svm=SvmConfig(c=r.get("svm-c", 1.0, float),
                      gamma=r.get("svm-gamma", "scale"),
                      kkt_tolerance=r.get("svm-tol", 1e-3, float)),
        edn=EdnConfig(
            encoder_units=_parse_ints(r.get("edn-units", "1000,500,250")),
            latent_dim=r.get("edn-latent", 125, int),
            learning_rate=r.get("edn-lr", 1e-4, float),
            epochs=r.get("edn-epochs", 1000, int),
            batch_size=r.get("edn-batch", 32, int)),
        kema=KemaConfig(mu=r.get("kema-mu", 0.5, float),
                        knn_geometry=r.get("kema-knn", 5, int),
                        latent_dim=r.get("kema-latent", None, int),
                        eig_regularization=r.get("kema-eig-reg", 1e-6, float)),
        seed=r.get("seed", 0, int))
    report = run_protocol(manifest, config)
    out = Path(r.get("out", None))
    out.mkdir(parents=True, exist_ok=True)
    report.write_csv(out / "report.csv")
    report.write_summary(out / "summary.json")
    _write_run_json(out, "evaluate", r.resolved)
    deltas = ", ".join(f"{k}={v:.2f}"
                       for k, v in report.summary()["mDeltaA"].items())
    print(f"evaluated {config.method} on {config.task}: "
          f"A_all={report.a_all_mean():.2f}, mDeltaA {deltas}")
    print(f"artifacts in {out}")
    return 0


def cmd_report(args) -> int:
    r = _Resolver(args, _read_config_file(args.config))
    run_dir = Path(r.get("run", None))
    csv_path = run_dir / "report.csv"
    if not csv_path.is_file():
        raise MissingFile(f"no report.csv under {run_dir}")
    rows = load_report_csv(csv_path)
    if not rows:
        raise SchemaViolation(f"{csv_path} holds no rows")
    task, method = rows[0]["task"], rows[0]["method"]
    budgets = sorted({int(x["budget"]) for x in rows if int(x["budget"]) >= 0})

    def curve(condition):
        means, stds = [], []
        for b in budgets:
            vals = [float(x["accuracy"]) for x in rows
                    if x["condition"] == condition and int(x["budget"]) == b]
            means.append(float(np.mean(vals)))
            stds.append(float(np.std(vals)))
        return means, stds

    chart = LineChart(
        title=f"{task} recognition: {method}",
        x_label="target robot training budget",
        y_label="accuracy (%)",
        y_range=(0.0, 102.0))
    conditions = sorted({x["condition"] for x in rows} - {"all_data"})
    for cond in conditions:
        mean, std = curve(cond)
        chart.series.append(Series(label=cond, x=[float(b) for b in budgets],
                                   mean=mean, std=std))
    all_vals = [float(x["accuracy"]) for x in rows if x["condition"] == "all_data"]
    if all_vals:
        chart.reference = ("all-data reference", float(np.mean(all_vals)))

    plots = run_dir / "plots"
    plots.mkdir(parents=True, exist_ok=True)
    path = plots / f"{task}_{method}.svg"
    chart.write(path)
    print(f"wrote {path}")
    return 0


# -- entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xmorph",
        description="Cross-robot implicit-knowledge transfer for interactive "
                    "object perception")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, options):
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value config file")
        for opt, kwargs in options.items():
            p.add_argument(f"--{opt}", **kwargs)
        p.set_defaults(fn=fn)

    add("synth", cmd_synth, {
        "out": {"required": True}, "objects": {"type": int},
        "trials": {"type": int}, "latent-dim": {"type": int},
        "contexts": {}, "robots": {}, "class-separation": {"type": float},
        "latent-spread": {"type": float}, "seed": {"type": int}})
    add("featurize", cmd_featurize, {
        "raw": {"required": True}, "out": {"required": True}})
    add("augment", cmd_augment, {
        "manifest": {"required": True}, "out": {"required": True},
        "k": {"type": int}, "seed": {"type": int}})
    add("train-edn", cmd_train_edn, {
        "manifest": {"required": True}, "out": {"required": True},
        "source": {"required": True}, "target": {"required": True},
        "behavior": {"required": True}, "modality": {"required": True},
        "mode": {"choices": ["identity", "property"]},
        "property": {"choices": ["weight", "content"]},
        "encoder-units": {}, "latent-dim": {"type": int},
        "lr": {"type": float}, "epochs": {"type": int},
        "batch-size": {"type": int}, "seed": {"type": int}})
    add("train-kema", cmd_train_kema, {
        "manifest": {"required": True}, "out": {"required": True},
        "source": {"required": True}, "target": {"required": True},
        "behavior": {"required": True}, "modality": {"required": True},
        "label": {"choices": ["objectId", "weight", "content"]},
        "mu": {"type": float}, "knn": {"type": int},
        "latent-dim": {"type": int}, "eig-reg": {"type": float},
        "seed": {"type": int}})
    add("evaluate", cmd_evaluate, {
        "manifest": {"required": True}, "out": {"required": True},
        "task": {"required": True, "choices": ["weight", "content", "objectId"]},
        "method": {"required": True,
                   "choices": ["baseline", "edn-identity", "edn-property",
                               "kema-identity", "kema-property"]},
        "source": {"required": True}, "target": {"required": True},
        "contexts": {}, "repeats": {"type": int}, "folds": {"type": int},
        "budgets": {}, "m": {"type": int}, "augment-k": {"type": int},
        "weight-scheme": {"choices": ["cv3", "resubstitution"]},
        "svm-c": {"type": float}, "svm-gamma": {}, "svm-tol": {"type": float},
        "edn-units": {}, "edn-latent": {"type": int},
        "edn-lr": {"type": float}, "edn-epochs": {"type": int},
        "edn-batch": {"type": int},
        "kema-mu": {"type": float}, "kema-knn": {"type": int},
        "kema-latent": {"type": int}, "kema-eig-reg": {"type": float},
        "seed": {"type": int}})
    add("report", cmd_report, {"run": {"required": True}})
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except XmorphError as e:
        print(f"error[{type(e).__name__}]: {e}", file=sys.stderr)
        return type(e).exit_code


if __name__ == "__main__":
    sys.exit(main())
