"""The two evaluation protocols, their metrics, and per-context weighting.

Property recognition holds out 20% of objects and sweeps the number of
objects the target robot trains on; identity recognition runs 5-fold
cross-validation over trials of 12 objects with unique (weight, content)
and sweeps trials per object.  In both, the source robot contributes its
full experience through the trained projection, and every accuracy is a
weighted combination over the sensorimotor contexts in play.

``mean accuracy delta`` summarizes a learning curve as the mean drop,
over the m smallest budgets, from the all-data reference accuracy; negative
values mean the transfer condition beats full self-training.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .augment import fit_bin_stats, sample_augmented
from .correspond import identity_pairs, kema_inputs, property_pairs, record_labels
from .data import DatasetManifest, TrialRecord, select_trials
from .edn import EdnConfig, edn_forward, train_edn
from .errors import (
    AllZeroWeights,
    BudgetExceedsPool,
    DimensionMismatch,
    EmptyInput,
    InconsistentClassSets,
    InsufficientUniqueObjects,
    InvalidConfig,
    SchemaViolation,
    TooFewBudgets,
)
from .kema import KemaConfig, fit_kema, project_to_latent
from .svm import SvmConfig, decision_scores, predict, train_svm

TASKS = ("weight", "content", "objectId")
METHODS = ("baseline", "edn-identity", "edn-property", "kema-identity",
           "kema-property")
IDENTITY_OBJECT_COUNT = 12
PROPERTY_HOLDOUT_FRACTION = 0.2  # 19 of 95 objects
CSV_COLUMNS = ("task", "method", "source", "target", "repeat", "fold",
               "budget", "condition", "accuracy")


# -- metrics -----------------------------------------------------------------

def accuracy(predictions: Sequence, truths: Sequence) -> float:
    """Percentage of matching predictions."""
    if len(predictions) != len(truths):
        raise DimensionMismatch("predictions and truths differ in length")
    if len(predictions) == 0:
        raise EmptyInput("cannot score zero predictions")
    matches = sum(1 for p, t in zip(predictions, truths) if str(p) == str(t))
    return 100.0 * matches / len(predictions)


def mean_accuracy_delta(a_all: float, projected: Sequence[float], m: int) -> float:
    """Mean of (A_all - A_projected) over the first m budgets (the least
    interaction budgets); projected must be ordered by ascending budget."""
    if m < 1 or len(projected) < m:
        raise TooFewBudgets(
            f"need at least m={m} budget accuracies, got {len(projected)}")
    return float(np.mean([a_all - p for p in projected[:m]]))


def weighted_context_combination(per_context_scores: dict,
                                 per_context_train_accuracy: dict) -> np.ndarray:
    """Combine per-context score matrices into one prediction per sample.

    ``per_context_scores`` maps a context key to (classes, score_matrix);
    weights are the training accuracies normalized to sum 1; each score row
    is max-normalized before weighting.  Ties go to the earlier class.
    """
    if not per_context_scores:
        raise EmptyInput("no context scores supplied")
    keys = sorted(per_context_scores)
    class_sets = [tuple(sorted(per_context_scores[k][0])) for k in keys]
    if len(set(class_sets)) != 1:
        raise InconsistentClassSets(f"contexts disagree on classes: {class_sets}")
    classes = list(class_sets[0])
    n_samples = {per_context_scores[k][1].shape[0] for k in keys}
    if len(n_samples) != 1:
        raise InconsistentClassSets("contexts score different sample counts")

    raw = np.array([max(0.0, float(per_context_train_accuracy[k])) for k in keys])
    if np.all(raw == 0):
        raise AllZeroWeights("every context has zero training accuracy")
    weights = raw / raw.sum()

    combined = np.zeros((n_samples.pop(), len(classes)))
    for k, w in zip(keys, weights):
        ctx_classes, scores = per_context_scores[k]
        order = [list(ctx_classes).index(c) for c in classes]
        scores = np.asarray(scores, dtype=np.float64)[:, order]
        rowmax = scores.max(axis=1, keepdims=True)
        rowmax[rowmax <= 0] = 1.0
        combined += w * (scores / rowmax)
    return np.array([classes[i] for i in combined.argmax(axis=1)], dtype=object)


# -- configuration and report --------------------------------------------------

@dataclass(frozen=True)
class ProtocolConfig:
    task: str
    method: str
    source: str
    target: str
    contexts: tuple[tuple[str, str], ...] | None = None
    repeats: int = 10
    folds: int = 5
    budget_schedule: tuple[int, ...] | None = None
    m: int | None = None  # default: 10 for property tasks, 4 for identity
    augment_k: int = 5
    weight_scheme: str = "cv3"  # cv3 | resubstitution
    svm: SvmConfig = field(default_factory=SvmConfig)
    edn: EdnConfig = field(default_factory=EdnConfig)
    kema: KemaConfig = field(default_factory=KemaConfig)
    seed: int = 0

    def __post_init__(self):
        if self.task not in TASKS:
            raise InvalidConfig(f"task must be one of {TASKS}, got {self.task!r}")
        if self.method not in METHODS:
            raise InvalidConfig(f"method must be one of {METHODS}")
        if self.task == "objectId" and "property" in self.method:
            raise InvalidConfig(
                "identity recognition only supports identity-based correspondence")
        if self.repeats < 1 or self.folds < 1:
            raise InvalidConfig("repeats and folds must be >= 1")
        if self.weight_scheme not in ("cv3", "resubstitution"):
            raise InvalidConfig(f"unknown weight scheme {self.weight_scheme!r}")
        if self.budget_schedule is not None:
            b = tuple(self.budget_schedule)
            if list(b) != sorted(set(b)) or (b and b[0] < 1):
                raise InvalidConfig("budget schedule must be ascending positive ints")

    @property
    def correspondence(self) -> str | None:
        if self.method == "baseline":
            return None
        return self.method.split("-", 1)[1]

    @property
    def projection(self) -> str | None:
        if self.method == "baseline":
            return None
        return self.method.split("-", 1)[0]


@dataclass
class AccuracyCell:
    repeat: int
    fold: int
    budget: int
    condition: str  # baseline | transfer | all_data
    accuracy: float
    context_weights: dict = field(default_factory=dict)


@dataclass
class EvaluationReport:
    task: str
    method: str
    source: str
    target: str
    m: int
    budgets: tuple[int, ...]
    cells: list[AccuracyCell]
    fold_test_ids: dict = field(default_factory=dict)  # (repeat, fold) -> ids
    leakage_ok: bool = True
    config: dict = field(default_factory=dict)

    def accuracies(self, condition: str, budget: int | None = None) -> list[float]:
        return [c.accuracy for c in self.cells
                if c.condition == condition
                and (budget is None or c.budget == budget)]

    def budget_mean(self, condition: str, budget: int) -> float:
        return float(np.mean(self.accuracies(condition, budget)))

    def budget_std(self, condition: str, budget: int) -> float:
        return float(np.std(self.accuracies(condition, budget)))

    def a_all_mean(self) -> float:
        return float(np.mean(self.accuracies("all_data")))

    def mean_accuracy_delta_for(self, condition: str) -> float:
        curve = [self.budget_mean(condition, b) for b in self.budgets]
        return mean_accuracy_delta(self.a_all_mean(), curve, self.m)

    def mean_context_weights(self, condition: str) -> dict:
        keys: dict[str, list[float]] = {}
        for c in self.cells:
            if c.condition != condition:
                continue
            for k, w in c.context_weights.items():
                keys.setdefault(k, []).append(w)
        return {k: float(np.mean(v)) for k, v in sorted(keys.items())}

    def write_csv(self, path: str | Path) -> None:
        """One row per repeat x fold x budget x condition; the all-data
        reference uses budget -1.  Floats are written with full round-trip
        precision so downstream recomputation is exact."""
        with open(Path(path), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for c in sorted(self.cells, key=lambda c: (c.repeat, c.fold,
                                                       c.budget, c.condition)):
                writer.writerow([self.task, self.method, self.source,
                                 self.target, c.repeat, c.fold, c.budget,
                                 c.condition, repr(c.accuracy)])

    def summary(self) -> dict:
        conditions = sorted({c.condition for c in self.cells})
        out = {
            "task": self.task, "method": self.method,
            "source": self.source, "target": self.target,
            "m": self.m, "budgets": list(self.budgets),
            "A_all": {"mean": self.a_all_mean(),
                      "std": float(np.std(self.accuracies("all_data")))},
            "curves": {
                cond: {
                    "mean": [self.budget_mean(cond, b) for b in self.budgets],
                    "std": [self.budget_std(cond, b) for b in self.budgets],
                }
                for cond in conditions if cond != "all_data"
            },
            "mDeltaA": {
                cond: self.mean_accuracy_delta_for(cond)
                for cond in conditions if cond != "all_data"
            },
            "contextWeights": {
                cond: self.mean_context_weights(cond)
                for cond in conditions if cond != "all_data"
            },
            "leakageOk": self.leakage_ok,
            "config": self.config,
        }
        return out

    def write_summary(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.summary(), indent=1))


def load_report_csv(path: str | Path) -> list[dict]:
    with open(Path(path), newline="") as fh:
        return list(csv.DictReader(fh))


# -- shared protocol machinery ---------------------------------------------------

def default_budget_schedule(n_classes: int, pool_size: int,
                            points: int = 10) -> tuple[int, ...]:
    """From one object per class up to the full pool, in ~equal steps."""
    lo = min(n_classes, pool_size)
    grid = np.unique(np.round(np.linspace(lo, pool_size, points)).astype(int))
    return tuple(int(b) for b in grid)


def stratified_object_order(objects: Sequence[str], label_of, rng) -> list[str]:
    """Round-robin over shuffled classes so every prefix covers as many
    classes as its length allows."""
    by_class: dict[str, list[str]] = {}
    for oid in objects:
        by_class.setdefault(str(label_of(oid)), []).append(oid)
    class_order = sorted(by_class)
    rng.shuffle(class_order)
    for cls in class_order:
        by_class[cls].sort()
        rng.shuffle(by_class[cls])
    order = []
    while any(by_class[c] for c in class_order):
        for cls in class_order:
            if by_class[cls]:
                order.append(by_class[cls].pop())
    return order


class _ContextData:
    """Per-context record bundles reused across repeats and budgets."""

    def __init__(self, manifest: DatasetManifest, source: str, target: str,
                 behavior: str, modality: str, objects: set[str]):
        self.key = f"{behavior}-{modality}"
        self.src = [r for r in select_trials(
            manifest, robot=source, behavior=behavior, modality=modality,
            provenance="real") if r.object_id in objects]
        self.tgt = [r for r in select_trials(
            manifest, robot=target, behavior=behavior, modality=modality,
            provenance="real") if r.object_id in objects]
        if not self.src or not self.tgt:
            raise SchemaViolation(
                f"context {self.key}: missing records for source or target")
        self.src_by_object: dict[str, list[TrialRecord]] = {}
        for r in self.src:
            self.src_by_object.setdefault(r.object_id, []).append(r)
        self.tgt_by_object: dict[str, list[TrialRecord]] = {}
        for r in self.tgt:
            self.tgt_by_object.setdefault(r.object_id, []).append(r)


def _augment_map(records_by_object: dict, k: int, seed: int) -> dict:
    """Augmented trials per object, from each object's supplied real trials."""
    out = {}
    for oid, recs in records_by_object.items():
        if k <= 0:
            out[oid] = []
            continue
        stats = fit_bin_stats(recs)
        start = max(r.trial_index for r in recs) + 1
        out[oid] = sample_augmented(stats, k=k, seed=seed, start_index=start)
    return out


def _features_and_labels(records: Sequence[TrialRecord], task: str,
                         manifest: DatasetManifest):
    x = np.stack([r.feature for r in records])
    y = record_labels(records, task, manifest)
    return x, y


def _train_context_model(x: np.ndarray, y: np.ndarray, cfg: ProtocolConfig,
                         cell_seed: int):
    """Fit one context's SVM plus its training-accuracy weight."""
    svm_cfg = replace(cfg.svm, seed=cell_seed)
    model = train_svm(x, y, svm_cfg)
    if cfg.weight_scheme == "resubstitution":
        train_acc = accuracy(predict(model, x), y)
        return model, train_acc
    # 3-fold internal cross-validation on the training split.
    rng = np.random.default_rng([cell_seed & 0xFFFFFFFF, 0x3F])
    order = rng.permutation(len(y))
    folds = np.array_split(order, 3)
    scores = []
    for f in range(3):
        held = folds[f]
        kept = np.concatenate([folds[g] for g in range(3) if g != f])
        if len(held) == 0 or len(set(map(str, y[kept]))) < 2:
            continue
        sub = train_svm(x[kept], y[kept], svm_cfg)
        scores.append(accuracy(predict(sub, x[held]), y[held]))
    train_acc = float(np.mean(scores)) if scores else \
        accuracy(predict(model, x), y)
    return model, train_acc


def _evaluate_condition(per_ctx_train: dict, per_ctx_test: dict, test_y,
                        cfg: ProtocolConfig, cell_seed: int):
    """Train per-context models, combine weighted scores, return accuracy
    plus per-context weights."""
    scores, weights = {}, {}
    for key, (x, y) in per_ctx_train.items():
        model, w = _train_context_model(x, y, cfg, cell_seed)
        weights[key] = w
        scores[key] = (model.classes, decision_scores(model, per_ctx_test[key]))
    if all(w == 0 for w in weights.values()):
        weights = {k: 1.0 for k in weights}  # indistinguishable contexts
    labels = weighted_context_combination(scores, weights)
    total = sum(weights.values())
    norm = {k: w / total for k, w in weights.items()}
    return accuracy(labels, test_y), norm


def _check_leakage(train_records: Sequence[TrialRecord],
                   test_ids: set) -> bool:
    return not ({r.sample_id for r in train_records} & test_ids)


def _resolve_contexts(manifest: DatasetManifest, cfg: ProtocolConfig):
    contexts = cfg.contexts
    if contexts is None:
        contexts = tuple(manifest.shared_contexts(cfg.source, cfg.target))
    if not contexts:
        raise InvalidConfig("no shared contexts between source and target")
    return contexts


# -- transfer feature builders -----------------------------------------------------

def _edn_training_set(ctx: _ContextData, budget_tgt: list[TrialRecord],
                      src_pool: list[TrialRecord], cfg: ProtocolConfig,
                      manifest: DatasetManifest, cell_seed: int):
    """Generated-from-source features plus the target features used to train
    the projection."""
    budget_objects = {r.object_id for r in budget_tgt}
    if cfg.correspondence == "identity":
        src_pairable = [r for r in src_pool if r.object_id in budget_objects]
        pairs = identity_pairs(src_pairable, budget_tgt)
    else:
        pairs = property_pairs(src_pool, budget_tgt, cfg.task, manifest)
    edn_cfg = replace(cfg.edn, seed=cell_seed)
    model = train_edn(pairs, edn_cfg)
    gen_x = edn_forward(model, np.stack([r.feature for r in src_pool]))
    gen_y = record_labels(src_pool, cfg.task, manifest)
    own_x, own_y = np.stack([r.feature for r in budget_tgt]), \
        record_labels(budget_tgt, cfg.task, manifest)
    return np.vstack([gen_x, own_x]), np.concatenate([gen_y, own_y])


def _kema_training_and_projector(ctx: _ContextData, budget_tgt: list[TrialRecord],
                                 src_pool: list[TrialRecord], cfg: ProtocolConfig,
                                 manifest: DatasetManifest, cell_seed: int):
    """Latent training set from both domains' projection-training points,
    plus the fitted model for projecting test samples."""
    label = "objectId" if cfg.correspondence == "identity" else cfg.task
    inputs = kema_inputs(src_pool, budget_tgt, label, manifest)
    kema_cfg = replace(cfg.kema, seed=cell_seed)
    model = fit_kema(inputs["X1"], inputs["y1"], inputs["X2"], inputs["y2"],
                     kema_cfg)
    z1 = project_to_latent(model, inputs["X1"], domain=1)
    z2 = project_to_latent(model, inputs["X2"], domain=2)
    y1 = record_labels(sorted(src_pool, key=TrialRecord.sort_key), cfg.task, manifest)
    y2 = record_labels(sorted(budget_tgt, key=TrialRecord.sort_key), cfg.task, manifest)
    return np.vstack([z1, z2]), np.concatenate([y1, y2]), model


# -- property recognition protocol ---------------------------------------------------

def run_property_protocol(manifest: DatasetManifest,
                          cfg: ProtocolConfig) -> EvaluationReport:
    """Object-property recognition: hold out 20% of objects, sweep the number
    of objects the target robot trains on, compare baseline vs transfer."""
    if cfg.task not in ("weight", "content"):
        raise InvalidConfig("property protocol needs task weight or content")
    contexts = _resolve_contexts(manifest, cfg)
    all_objects = sorted(o.id for o in manifest.objects)
    label_of = lambda oid: manifest.object(oid).property_value(cfg.task)
    n_classes = len({label_of(o) for o in all_objects})
    holdout = max(1, round(PROPERTY_HOLDOUT_FRACTION * len(all_objects)))
    pool_size = len(all_objects) - holdout

    budgets = cfg.budget_schedule or default_budget_schedule(n_classes, pool_size)
    if budgets[-1] > pool_size:
        raise BudgetExceedsPool(
            f"largest budget {budgets[-1]} exceeds training pool {pool_size}")
    m = cfg.m if cfg.m is not None else min(10, len(budgets))
    if m > len(budgets):
        raise TooFewBudgets(f"m={m} exceeds {len(budgets)} budgets")

    ctx_data = [
        _ContextData(manifest, cfg.source, cfg.target, b, mo, set(all_objects))
        for b, mo in contexts
    ]
    # Property budgets include whole objects, so augmentation statistics only
    # ever see an object's own training trials; precompute per context.
    aug_by_ctx = {
        c.key: _augment_map(c.tgt_by_object, cfg.augment_k, cfg.seed)
        for c in ctx_data
    }

    cells: list[AccuracyCell] = []
    fold_test_ids: dict = {}
    leakage_ok = True
    root = np.random.SeedSequence(cfg.seed)
    repeat_seeds = root.spawn(cfg.repeats)

    for rep in range(cfg.repeats):
        rng = np.random.default_rng(repeat_seeds[rep])
        shuffled = list(all_objects)
        rng.shuffle(shuffled)
        test_objects = set(shuffled[:holdout])
        pool = [o for o in shuffled[holdout:]]
        order = stratified_object_order(pool, label_of, rng)
        cell_seed = int(rng.integers(2 ** 31))

        # Per-context test matrices, aligned on (object, trial).
        test_sets, test_ids = {}, set()
        ref_keys = None
        for c in ctx_data:
            recs = [r for r in c.tgt if r.object_id in test_objects]
            keys = [(r.object_id, r.trial_index) for r in recs]
            if ref_keys is None:
                ref_keys = keys
            elif keys != ref_keys:
                raise SchemaViolation(
                    "contexts disagree on available (object, trial) samples")
            test_sets[c.key] = np.stack([r.feature for r in recs])
            test_ids |= {r.sample_id for r in recs}
            test_y = record_labels(recs, cfg.task, manifest)
        fold_test_ids[(rep, 0)] = sorted(test_ids)

        def target_training(c: _ContextData, objects: Sequence[str]):
            recs = []
            for oid in sorted(objects):
                recs.extend(c.tgt_by_object.get(oid, []))
                recs.extend(aug_by_ctx[c.key].get(oid, []))
            return recs

        # All-data reference: own features of every object, with augmentation.
        per_ctx_train = {}
        for c in ctx_data:
            recs = target_training(c, all_objects)
            per_ctx_train[c.key] = _features_and_labels(recs, cfg.task, manifest)
        a_all, w_all = _evaluate_condition(per_ctx_train, test_sets, test_y,
                                           cfg, cell_seed)
        cells.append(AccuracyCell(rep, 0, -1, "all_data", a_all, w_all))

        for budget in budgets:
            budget_objs = order[:budget]
            # Baseline: the target robot's own (real + augmented) features.
            per_ctx_train = {}
            for c in ctx_data:
                recs = target_training(c, budget_objs)
                leakage_ok &= _check_leakage(recs, test_ids)
                per_ctx_train[c.key] = _features_and_labels(recs, cfg.task,
                                                            manifest)
            acc, w = _evaluate_condition(per_ctx_train, test_sets, test_y,
                                         cfg, cell_seed)
            cells.append(AccuracyCell(rep, 0, budget, "baseline", acc, w))

            if cfg.method == "baseline":
                continue
            per_ctx_train, per_ctx_test = {}, {}
            for c in ctx_data:
                budget_tgt = []
                for oid in sorted(budget_objs):
                    budget_tgt.extend(c.tgt_by_object.get(oid, []))
                    budget_tgt.extend(aug_by_ctx[c.key].get(oid, []))
                leakage_ok &= _check_leakage(budget_tgt, test_ids)
                if cfg.projection == "edn":
                    x, y = _edn_training_set(c, budget_tgt, c.src, cfg,
                                             manifest, cell_seed)
                    per_ctx_test[c.key] = test_sets[c.key]
                else:
                    x, y, projector = _kema_training_and_projector(
                        c, budget_tgt, c.src, cfg, manifest, cell_seed)
                    per_ctx_test[c.key] = project_to_latent(
                        projector, test_sets[c.key], domain=2)
                per_ctx_train[c.key] = (x, y)
            acc, w = _evaluate_condition(per_ctx_train, per_ctx_test, test_y,
                                         cfg, cell_seed)
            cells.append(AccuracyCell(rep, 0, budget, "transfer", acc, w))

    return EvaluationReport(
        task=cfg.task, method=cfg.method, source=cfg.source, target=cfg.target,
        m=m, budgets=tuple(budgets), cells=cells, fold_test_ids=fold_test_ids,
        leakage_ok=leakage_ok, config=_config_snapshot(cfg))


# -- identity recognition protocol ----------------------------------------------------

def run_identity_protocol(manifest: DatasetManifest,
                          cfg: ProtocolConfig) -> EvaluationReport:
    """Object-identity recognition over 12 objects with unique
    (weight, content), 5-fold CV over trials, sweeping trials per object."""
    if cfg.task != "objectId":
        raise InvalidConfig("identity protocol needs task objectId")
    contexts = _resolve_contexts(manifest, cfg)

    by_combo: dict[tuple[str, str], list[str]] = {}
    for o in manifest.objects:
        by_combo.setdefault((o.weight, o.content), []).append(o.id)
    if len(by_combo) < IDENTITY_OBJECT_COUNT:
        raise InsufficientUniqueObjects(
            f"need {IDENTITY_OBJECT_COUNT} unique (weight, content) combos, "
            f"manifest has {len(by_combo)}")

    trials_per_object = manifest.robot(cfg.target).trials_per_object
    if cfg.folds > trials_per_object:
        raise InvalidConfig("more folds than trials per object")
    max_budget = trials_per_object - 1
    budgets = cfg.budget_schedule or tuple(range(1, max_budget + 1))
    if budgets[-1] > max_budget:
        raise BudgetExceedsPool(
            f"budget {budgets[-1]} exceeds {max_budget} available trials")
    m = cfg.m if cfg.m is not None else min(4, len(budgets))
    if m > len(budgets):
        raise TooFewBudgets(f"m={m} exceeds {len(budgets)} budgets")

    all_object_ids = {o.id for o in manifest.objects}
    ctx_data = [
        _ContextData(manifest, cfg.source, cfg.target, b, mo, all_object_ids)
        for b, mo in contexts
    ]

    cells: list[AccuracyCell] = []
    fold_test_ids: dict = {}
    leakage_ok = True
    root = np.random.SeedSequence(cfg.seed)
    repeat_seeds = root.spawn(cfg.repeats)

    for rep in range(cfg.repeats):
        rng = np.random.default_rng(repeat_seeds[rep])
        combos = sorted(by_combo)
        rng.shuffle(combos)
        chosen = []
        for combo in combos[:IDENTITY_OBJECT_COUNT]:
            pool = sorted(by_combo[combo])
            chosen.append(pool[int(rng.integers(len(pool)))])
        chosen = sorted(chosen)
        cell_seed = int(rng.integers(2 ** 31))

        # One shuffled trial order per object; fold f tests trial order[f].
        trial_order = {}
        for oid in chosen:
            perm = list(range(trials_per_object))
            rng.shuffle(perm)
            trial_order[oid] = perm

        src_pool = {c.key: [r for r in c.src if r.object_id in chosen]
                    for c in ctx_data}

        for fold in range(cfg.folds):
            test_trial = {oid: trial_order[oid][fold] for oid in chosen}
            train_trials = {
                oid: [t for t in trial_order[oid] if t != test_trial[oid]]
                for oid in chosen
            }

            test_sets, test_ids = {}, set()
            ref_keys = None
            for c in ctx_data:
                recs = [r for r in c.tgt if r.object_id in chosen
                        and r.trial_index == test_trial[r.object_id]]
                recs.sort(key=TrialRecord.sort_key)
                keys = [(r.object_id, r.trial_index) for r in recs]
                if ref_keys is None:
                    ref_keys = keys
                elif keys != ref_keys:
                    raise SchemaViolation(
                        "contexts disagree on available (object, trial) samples")
                test_sets[c.key] = np.stack([r.feature for r in recs])
                test_ids |= {r.sample_id for r in recs}
                test_y = record_labels(recs, "objectId", manifest)
            fold_test_ids[(rep, fold)] = sorted(test_ids)

            def target_records(c: _ContextData, budget: int | None):
                """Target training records: first `budget` train trials per
                object plus augmentation from exactly those trials; None
                means all trials (the all-data reference)."""
                recs = []
                for oid in chosen:
                    obj_recs = c.tgt_by_object.get(oid, [])
                    if budget is None:
                        take = sorted(obj_recs, key=lambda r: r.trial_index)
                    else:
                        wanted = set(train_trials[oid][:budget])
                        take = [r for r in obj_recs if r.trial_index in wanted]
                        take.sort(key=lambda r: r.trial_index)
                    recs.extend(take)
                    if cfg.augment_k > 0 and take:
                        stats = fit_bin_stats(take)
                        start = trials_per_object + 1 + (0 if budget is None
                                                         else budget)
                        aug_seed = cell_seed + 7919 * fold + 104729 * (
                            budget if budget is not None else 0)
                        recs.extend(sample_augmented(
                            stats, k=cfg.augment_k, seed=aug_seed,
                            start_index=start))
                return recs

            per_ctx_train = {
                c.key: _features_and_labels(target_records(c, None),
                                            "objectId", manifest)
                for c in ctx_data
            }
            a_all, w_all = _evaluate_condition(per_ctx_train, test_sets,
                                               test_y, cfg, cell_seed)
            cells.append(AccuracyCell(rep, fold, -1, "all_data", a_all, w_all))

            for budget in budgets:
                per_ctx_train = {}
                budget_recs = {}
                for c in ctx_data:
                    recs = target_records(c, budget)
                    leakage_ok &= _check_leakage(recs, test_ids)
                    budget_recs[c.key] = recs
                    per_ctx_train[c.key] = _features_and_labels(
                        recs, "objectId", manifest)
                acc, w = _evaluate_condition(per_ctx_train, test_sets, test_y,
                                             cfg, cell_seed)
                cells.append(AccuracyCell(rep, fold, budget, "baseline", acc, w))

                if cfg.method == "baseline":
                    continue
                per_ctx_train, per_ctx_test = {}, {}
                for c in ctx_data:
                    recs = budget_recs[c.key]
                    if cfg.projection == "edn":
                        x, y = _edn_training_set(c, recs, src_pool[c.key],
                                                 cfg, manifest, cell_seed)
                        per_ctx_test[c.key] = test_sets[c.key]
                    else:
                        x, y, projector = _kema_training_and_projector(
                            c, recs, src_pool[c.key], cfg, manifest, cell_seed)
                        per_ctx_test[c.key] = project_to_latent(
                            projector, test_sets[c.key], domain=2)
                    per_ctx_train[c.key] = (x, y)
                acc, w = _evaluate_condition(per_ctx_train, per_ctx_test,
                                             test_y, cfg, cell_seed)
                cells.append(AccuracyCell(rep, fold, budget, "transfer", acc, w))

    return EvaluationReport(
        task=cfg.task, method=cfg.method, source=cfg.source, target=cfg.target,
        m=m, budgets=tuple(budgets), cells=cells, fold_test_ids=fold_test_ids,
        leakage_ok=leakage_ok, config=_config_snapshot(cfg))


def run_protocol(manifest: DatasetManifest, cfg: ProtocolConfig) -> EvaluationReport:
    if cfg.task == "objectId":
        return run_identity_protocol(manifest, cfg)
    return run_property_protocol(manifest, cfg)


def _config_snapshot(cfg: ProtocolConfig) -> dict:
    return {
        "task": cfg.task, "method": cfg.method, "source": cfg.source,
        "target": cfg.target,
        "contexts": [list(c) for c in cfg.contexts] if cfg.contexts else None,
        "repeats": cfg.repeats, "folds": cfg.folds,
        "budgetSchedule": list(cfg.budget_schedule) if cfg.budget_schedule else None,
        "m": cfg.m, "augmentK": cfg.augment_k,
        "weightScheme": cfg.weight_scheme, "seed": cfg.seed,
        "svm": {"C": cfg.svm.c, "gamma": cfg.svm.gamma,
                "kktTolerance": cfg.svm.kkt_tolerance,
                "maxPasses": cfg.svm.max_passes},
        "edn": {"encoderUnits": list(cfg.edn.encoder_units),
                "latentDim": cfg.edn.latent_dim,
                "learningRate": cfg.edn.learning_rate,
                "epochs": cfg.edn.epochs, "batchSize": cfg.edn.batch_size},
        "kema": {"mu": cfg.kema.mu, "knnGeometry": cfg.kema.knn_geometry,
                 "latentDim": cfg.kema.latent_dim,
                 "eigRegularization": cfg.kema.eig_regularization},
    }
