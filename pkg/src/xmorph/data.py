"""Core domain types, dataset manifest parsing/validation, and trial selection.

A dataset is described by a single JSON manifest plus feature CSV files.
Manifest layout (all paths relative to the manifest's directory)::

    {
      "format": "xmorph-manifest-v1",
      "robots": [
        {"name": "ur5", "behaviors": [...], "modalities": [...],
         "trialsPerObject": 5, "effortJoints": 6}
      ],
      "objects": [
        {"id": "blue-rice-g50", "color": "blue", "content": "rice",
         "weight": "g50"}
      ],
      "records": [
        {"object": "blue-rice-g50", "robot": "ur5", "behavior": "shake",
         "modality": "audio", "trial": 0, "file": "features/x.csv",
         "row": 0, "provenance": "real"}
      ]
    }

Feature CSVs hold comma-separated decimal floats, one vector per line, no
header.  A record's vector is the line named by its optional ``row`` field;
when ``row`` is absent, a single-line file supplies line 0 and a multi-line
file supplies the line at the record's ``trial`` index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, MissingFile, SchemaViolation, UnknownName

MANIFEST_FORMAT = "xmorph-manifest-v1"

COLORS = ("blue", "green", "red", "white", "yellow")
CONTENTS = ("buttons", "dices", "marbles", "nuts-bolts", "pasta", "rice", "empty")
WEIGHTS = ("empty", "g50", "g100", "g150")
# 'look' records carry no non-visual features but the behavior still counts
# toward the interaction bookkeeping, so it stays in the closed set.
BEHAVIORS = ("look", "grasp", "pick", "hold", "shake", "lower", "drop", "push")
MODALITIES = ("audio", "effort", "force")
PROVENANCES = ("real", "augmented")

AUDIO_DIM = 100  # 10 frequency bins x 10 temporal bins
FORCE_DIM = 30  # 3 axes x 10 temporal bins
BINS_PER_CHANNEL = 10


@dataclass(frozen=True)
class ObjectDescriptor:
    """One explorable object: a cylindrical container with closed-set traits."""

    id: str
    color: str
    content: str
    weight: str

    def __post_init__(self):
        if self.color not in COLORS:
            raise SchemaViolation(f"unknown color {self.color!r} for object {self.id!r}")
        if self.content not in CONTENTS:
            raise SchemaViolation(f"unknown content {self.content!r} for object {self.id!r}")
        if self.weight not in WEIGHTS:
            raise SchemaViolation(f"unknown weight {self.weight!r} for object {self.id!r}")
        if (self.content == "empty") != (self.weight == "empty"):
            raise SchemaViolation(
                f"object {self.id!r}: content=='empty' and weight=='empty' must coincide"
            )

    def property_value(self, prop: str) -> str:
        if prop == "weight":
            return self.weight
        if prop == "content":
            return self.content
        if prop == "objectId":
            return self.id
        raise UnknownName(f"unknown object property {prop!r}")


@dataclass(frozen=True)
class RobotDescriptor:
    """Per-robot capabilities declared by the manifest."""

    name: str
    behaviors: tuple[str, ...]
    modalities: tuple[str, ...]
    trials_per_object: int
    effort_joints: int = 0

    def __post_init__(self):
        for b in self.behaviors:
            if b not in BEHAVIORS:
                raise SchemaViolation(f"robot {self.name!r}: unknown behavior {b!r}")
        for m in self.modalities:
            if m not in MODALITIES:
                raise SchemaViolation(f"robot {self.name!r}: unknown modality {m!r}")
        if self.trials_per_object < 1:
            raise SchemaViolation(f"robot {self.name!r}: trialsPerObject must be >= 1")
        if "effort" in self.modalities and self.effort_joints < 1:
            raise SchemaViolation(
                f"robot {self.name!r}: effort modality declared without effortJoints"
            )

    def feature_dim(self, modality: str) -> int:
        """Dimensionality of this robot's binned features for a modality."""
        if modality == "audio":
            return AUDIO_DIM
        if modality == "force":
            return FORCE_DIM
        if modality == "effort":
            return BINS_PER_CHANNEL * self.effort_joints
        raise UnknownName(f"unknown modality {modality!r}")


@dataclass(frozen=True)
class SensorimotorContext:
    """A (robot, behavior, modality) triple with its feature dimensionality."""

    robot: str
    behavior: str
    modality: str
    feature_dim: int

    def __post_init__(self):
        if self.behavior not in BEHAVIORS:
            raise SchemaViolation(f"unknown behavior {self.behavior!r}")
        if self.modality not in MODALITIES:
            raise SchemaViolation(f"unknown modality {self.modality!r}")
        if self.feature_dim < 1:
            raise SchemaViolation("featureDim must be positive")

    @property
    def key(self) -> tuple[str, str]:
        """The (behavior, modality) pair shared across robots."""
        return (self.behavior, self.modality)


@dataclass(frozen=True)
class TrialRecord:
    """One observation: an object explored under one context, one trial."""

    object_id: str
    context: SensorimotorContext
    trial_index: int
    feature: np.ndarray
    provenance: str = "real"

    def __post_init__(self):
        feat = np.asarray(self.feature, dtype=np.float64)
        object.__setattr__(self, "feature", feat)
        if feat.ndim != 1:
            raise SchemaViolation("trial feature must be a 1-D vector")
        if feat.shape[0] != self.context.feature_dim:
            raise DimensionMismatch(
                f"feature length {feat.shape[0]} != context dim {self.context.feature_dim}"
            )
        if not np.all(np.isfinite(feat)):
            raise SchemaViolation("trial feature contains NaN/Inf")
        if self.trial_index < 0:
            raise SchemaViolation("trialIndex must be >= 0")
        if self.provenance not in PROVENANCES:
            raise SchemaViolation(f"unknown provenance {self.provenance!r}")

    @property
    def sample_id(self) -> tuple:
        """Globally unique identity used by the leakage checks."""
        c = self.context
        return (c.robot, c.behavior, c.modality, self.object_id,
                self.trial_index, self.provenance)

    def sort_key(self) -> tuple:
        c = self.context
        return (self.object_id, self.trial_index, c.robot, c.behavior,
                c.modality, self.provenance)


@dataclass
class DatasetManifest:
    """A fully loaded, validated dataset."""

    robots: tuple[RobotDescriptor, ...]
    objects: tuple[ObjectDescriptor, ...]
    records: tuple[TrialRecord, ...]
    root: Path | None = None
    _objects_by_id: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        seen = set()
        for o in self.objects:
            if o.id in seen:
                raise SchemaViolation(f"duplicate object id {o.id!r}")
            seen.add(o.id)
        self._objects_by_id = {o.id: o for o in self.objects}

    @property
    def interaction_count(self) -> int:
        """Physical interactions: behaviors x objects x trials, summed over robots."""
        n_obj = len(self.objects)
        return sum(len(r.behaviors) * n_obj * r.trials_per_object for r in self.robots)

    def robot(self, name: str) -> RobotDescriptor:
        for r in self.robots:
            if r.name == name:
                return r
        raise UnknownName(f"unknown robot {name!r}")

    def object(self, object_id: str) -> ObjectDescriptor:
        try:
            return self._objects_by_id[object_id]
        except KeyError:
            raise UnknownName(f"unknown object {object_id!r}") from None

    def robot_names(self) -> list[str]:
        return [r.name for r in self.robots]

    def shared_contexts(self, source: str, target: str) -> list[tuple[str, str]]:
        """(behavior, modality) pairs for which both robots have records."""
        def keys(robot):
            return {(rec.context.behavior, rec.context.modality)
                    for rec in self.records if rec.context.robot == robot}
        return sorted(keys(source) & keys(target))

    def equals(self, other: "DatasetManifest") -> bool:
        """Field-by-field equality, comparing feature vectors numerically."""
        if self.robots != other.robots or self.objects != other.objects:
            return False
        if len(self.records) != len(other.records):
            return False
        for a, b in zip(self.records, other.records):
            if (a.object_id, a.context, a.trial_index, a.provenance) != (
                    b.object_id, b.context, b.trial_index, b.provenance):
                return False
            if not np.array_equal(a.feature, b.feature):
                return False
        return True


def _require(entry: Mapping, key: str, kind, where: str):
    if key not in entry:
        raise SchemaViolation(f"{where}: missing field {key!r}")
    value = entry[key]
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise SchemaViolation(f"{where}: field {key!r} must be an integer")
    elif not isinstance(value, kind):
        raise SchemaViolation(f"{where}: field {key!r} has wrong type")
    return value


def _read_feature_csv(path: Path) -> np.ndarray:
    """Parse a headerless float CSV into a 2-D array (np.loadtxt's per-call
    setup is too slow for thousands of small files)."""
    try:
        rows = [np.array(line.split(","), dtype=np.float64)
                for line in path.read_text().splitlines() if line.strip()]
    except ValueError as e:
        raise SchemaViolation(f"feature file {path} is not numeric CSV: {e}") from e
    if not rows:
        raise SchemaViolation(f"feature file {path} is empty")
    if len({r.shape[0] for r in rows}) != 1:
        raise SchemaViolation(f"feature file {path} has ragged rows")
    return np.vstack(rows)


def load_manifest(path: str | Path) -> DatasetManifest:
    """Load and validate a manifest, reading every referenced feature file.

    Raises MissingFile, SchemaViolation, or DimensionMismatch on any defect;
    a returned manifest is fully checked and immutable.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"manifest not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise SchemaViolation(f"manifest is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise SchemaViolation("manifest top level must be a JSON object")
    for key in ("robots", "objects", "records"):
        if key not in doc or not isinstance(doc[key], list):
            raise SchemaViolation(f"manifest must contain a {key!r} list")

    robots = []
    for entry in doc["robots"]:
        name = _require(entry, "name", str, "robot")
        robots.append(RobotDescriptor(
            name=name,
            behaviors=tuple(_require(entry, "behaviors", list, f"robot {name!r}")),
            modalities=tuple(_require(entry, "modalities", list, f"robot {name!r}")),
            trials_per_object=_require(entry, "trialsPerObject", int, f"robot {name!r}"),
            effort_joints=int(entry.get("effortJoints", 0)),
        ))
    robots_by_name = {r.name: r for r in robots}
    if len(robots_by_name) != len(robots):
        raise SchemaViolation("duplicate robot names")

    objects = []
    for entry in doc["objects"]:
        oid = _require(entry, "id", str, "object")
        objects.append(ObjectDescriptor(
            id=oid,
            color=_require(entry, "color", str, f"object {oid!r}"),
            content=_require(entry, "content", str, f"object {oid!r}"),
            weight=_require(entry, "weight", str, f"object {oid!r}"),
        ))
    object_ids = {o.id for o in objects}

    root = path.parent
    file_cache: dict[str, np.ndarray] = {}
    records = []
    for entry in doc["records"]:
        where = f"record {entry!r}"
        oid = _require(entry, "object", str, where)
        robot_name = _require(entry, "robot", str, where)
        behavior = _require(entry, "behavior", str, where)
        modality = _require(entry, "modality", str, where)
        trial = _require(entry, "trial", int, where)
        rel = _require(entry, "file", str, where)
        provenance = entry.get("provenance", "real")
        if oid not in object_ids:
            raise SchemaViolation(f"record references unknown object {oid!r}")
        robot = robots_by_name.get(robot_name)
        if robot is None:
            raise SchemaViolation(f"record references unknown robot {robot_name!r}")
        if behavior not in robot.behaviors:
            raise SchemaViolation(
                f"record uses behavior {behavior!r} not declared for robot {robot_name!r}")
        if modality not in robot.modalities:
            raise SchemaViolation(
                f"record uses modality {modality!r} not declared for robot {robot_name!r}")
        context = SensorimotorContext(
            robot=robot_name, behavior=behavior, modality=modality,
            feature_dim=robot.feature_dim(modality))

        if rel not in file_cache:
            fpath = root / rel
            if not fpath.is_file():
                raise MissingFile(f"feature file not found: {fpath}")
            file_cache[rel] = _read_feature_csv(fpath)
        rows = file_cache[rel]
        if "row" in entry:
            row = _require(entry, "row", int, where)
        else:
            row = 0 if rows.shape[0] == 1 else trial
        if not 0 <= row < rows.shape[0]:
            raise SchemaViolation(f"{where}: row {row} out of range for {rel}")
        vector = rows[row]
        if vector.shape[0] != context.feature_dim:
            raise DimensionMismatch(
                f"feature file {rel} row {row}: length {vector.shape[0]} != "
                f"declared dim {context.feature_dim} for {modality!r}")
        records.append(TrialRecord(
            object_id=oid, context=context, trial_index=trial,
            feature=vector, provenance=provenance))

    records.sort(key=TrialRecord.sort_key)
    return DatasetManifest(robots=tuple(robots), objects=tuple(objects),
                           records=tuple(records), root=root)


def save_manifest(manifest: DatasetManifest, out_dir: str | Path,
                  feature_subdir: str = "features") -> Path:
    """Materialize a manifest plus all feature CSVs under ``out_dir``.

    Feature vectors are grouped one file per (robot, behavior, modality,
    object, provenance), one row per trial, with explicit ``row`` fields.
    Returns the path of the written manifest.json.
    """
    out_dir = Path(out_dir)
    (out_dir / feature_subdir).mkdir(parents=True, exist_ok=True)

    groups: dict[tuple, list[TrialRecord]] = {}
    for rec in sorted(manifest.records, key=TrialRecord.sort_key):
        c = rec.context
        groups.setdefault((c.robot, c.behavior, c.modality, rec.object_id,
                           rec.provenance), []).append(rec)

    record_entries = []
    for (robot, behavior, modality, oid, provenance), recs in sorted(groups.items()):
        recs = sorted(recs, key=lambda r: r.trial_index)
        stem = f"{robot}__{behavior}__{modality}__{oid}__{provenance}.csv"
        rel = f"{feature_subdir}/{stem}"
        mat = np.stack([r.feature for r in recs])
        np.savetxt(out_dir / rel, mat, delimiter=",", fmt="%.17g")
        for row, rec in enumerate(recs):
            record_entries.append({
                "object": oid, "robot": robot, "behavior": behavior,
                "modality": modality, "trial": rec.trial_index,
                "file": rel, "row": row, "provenance": provenance,
            })

    doc = {
        "format": MANIFEST_FORMAT,
        "robots": [
            {"name": r.name, "behaviors": list(r.behaviors),
             "modalities": list(r.modalities),
             "trialsPerObject": r.trials_per_object,
             "effortJoints": r.effort_joints}
            for r in manifest.robots
        ],
        "objects": [
            {"id": o.id, "color": o.color, "content": o.content, "weight": o.weight}
            for o in manifest.objects
        ],
        "records": record_entries,
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(doc, indent=1))
    return manifest_path


def select_trials(manifest: DatasetManifest,
                  robot: str | None = None,
                  behavior: str | None = None,
                  modality: str | None = None,
                  objects: Iterable[str] | None = None,
                  trial_indices: Iterable[int] | None = None,
                  provenance: str | None = None) -> list[TrialRecord]:
    """Return the records matching every supplied filter, in deterministic
    (object id, trialIndex) order.

    Any filter value absent from the manifest raises UnknownName.
    """
    if robot is not None and robot not in manifest.robot_names():
        raise UnknownName(f"unknown robot {robot!r}")
    known_behaviors = {b for r in manifest.robots for b in r.behaviors}
    known_modalities = {m for r in manifest.robots for m in r.modalities}
    if behavior is not None and behavior not in known_behaviors:
        raise UnknownName(f"unknown behavior {behavior!r}")
    if modality is not None and modality not in known_modalities:
        raise UnknownName(f"unknown modality {modality!r}")
    if objects is not None:
        objects = set(objects)
        unknown = objects - {o.id for o in manifest.objects}
        if unknown:
            raise UnknownName(f"unknown objects: {sorted(unknown)}")
    if trial_indices is not None:
        trial_indices = set(trial_indices)
        known_trials = {r.trial_index for r in manifest.records}
        unknown = trial_indices - known_trials
        if unknown:
            raise UnknownName(f"unknown trial indices: {sorted(unknown)}")
    if provenance is not None and provenance not in PROVENANCES:
        raise UnknownName(f"unknown provenance {provenance!r}")

    out = []
    for rec in manifest.records:
        if robot is not None and rec.context.robot != robot:
            continue
        if behavior is not None and rec.context.behavior != behavior:
            continue
        if modality is not None and rec.context.modality != modality:
            continue
        if objects is not None and rec.object_id not in objects:
            continue
        if trial_indices is not None and rec.trial_index not in trial_indices:
            continue
        if provenance is not None and rec.provenance != provenance:
            continue
        out.append(rec)
    out.sort(key=TrialRecord.sort_key)
    return out


def with_records(manifest: DatasetManifest,
                 records: Sequence[TrialRecord]) -> DatasetManifest:
    """A copy of the manifest holding a different record set."""
    return replace(manifest, records=tuple(sorted(records, key=TrialRecord.sort_key)))
