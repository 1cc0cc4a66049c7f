from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from conftest import tiny_manifest
from xmorph.data import (
    DatasetManifest,
    ObjectDescriptor,
    load_manifest,
    save_manifest,
    select_trials,
)
from xmorph.errors import (
    DimensionMismatch,
    MissingFile,
    SchemaViolation,
    UnknownName,
)
from xmorph.synth import SynthConfig, SynthRobot, generate_synthetic_dataset


@pytest.fixture(scope="module")
def paper_manifest_path(tmp_path_factory) -> Path:
    """2 robots x 8 behaviors x 95 objects x 5 trials -> 7600 interactions."""
    config = SynthConfig(objects=95, trials_per_object=5, seed=7)
    manifest = generate_synthetic_dataset(config)
    return save_manifest(manifest, tmp_path_factory.mktemp("paper"))


def mutated_copy(paper_manifest_path: Path, tmp_path: Path, mutate) -> Path:
    """Copy the shared manifest dir, apply ``mutate`` to the parsed JSON."""
    import shutil

    dest = tmp_path / "mutated"
    shutil.copytree(paper_manifest_path.parent, dest)
    path = dest / "manifest.json"
    doc = json.loads(path.read_text())
    mutate(doc, dest)
    path.write_text(json.dumps(doc))
    return path


class TestObjectDescriptor:
    def test_contentless_objects_have_empty_weight(self):
        with pytest.raises(SchemaViolation):
            ObjectDescriptor(id="x", color="blue", content="empty", weight="g50")
        with pytest.raises(SchemaViolation):
            ObjectDescriptor(id="x", color="blue", content="rice", weight="empty")

    def test_closed_enums(self):
        with pytest.raises(SchemaViolation):
            ObjectDescriptor(id="x", color="purple", content="rice", weight="g50")

    def test_duplicate_ids_rejected(self):
        m = tiny_manifest(n_objects=2)
        dup = (m.objects[0], m.objects[0])
        with pytest.raises(SchemaViolation):
            DatasetManifest(robots=m.robots, objects=dup, records=())


class TestLoadManifest:
    def test_paper_shape_counts_7600_interactions(self, paper_manifest_path):
        manifest = load_manifest(paper_manifest_path)
        assert len(manifest.objects) == 95
        assert all(len(r.behaviors) == 8 for r in manifest.robots)
        assert all(r.trials_per_object == 5 for r in manifest.robots)
        assert manifest.interaction_count == 7600

    def test_minimal_manifest_counts_one(self, tmp_path):
        config = SynthConfig(objects=1, trials_per_object=1,
                             contexts=(("shake", "force"),),
                             robots=(SynthRobot("solo", effort_joints=1),),
                             latent_dim=3, seed=1)
        manifest = generate_synthetic_dataset(config, out_dir=tmp_path / "one")
        assert manifest.interaction_count == 1

    def test_wrong_feature_length_is_dimension_mismatch(
            self, paper_manifest_path, tmp_path):
        def mutate(doc, dest):
            entry = next(r for r in doc["records"] if r["modality"] == "audio")
            (dest / "bad.csv").write_text(",".join(["0.5"] * 99) + "\n")
            entry["file"] = "bad.csv"
            entry["row"] = 0

        with pytest.raises(DimensionMismatch):
            load_manifest(mutated_copy(paper_manifest_path, tmp_path, mutate))

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(MissingFile):
            load_manifest(tmp_path / "nope.json")

    def test_missing_feature_file(self, paper_manifest_path, tmp_path):
        def mutate(doc, dest):
            doc["records"][0]["file"] = "absent.csv"

        with pytest.raises(MissingFile):
            load_manifest(mutated_copy(paper_manifest_path, tmp_path, mutate))

    def test_schema_violation_on_missing_field(self, paper_manifest_path,
                                               tmp_path):
        def mutate(doc, dest):
            del doc["records"][0]["behavior"]

        with pytest.raises(SchemaViolation):
            load_manifest(mutated_copy(paper_manifest_path, tmp_path, mutate))

    def test_round_trip_equal(self, tmp_path):
        config = SynthConfig(objects=6, trials_per_object=2,
                             contexts=(("shake", "audio"), ("push", "force")),
                             seed=3)
        original = generate_synthetic_dataset(config)
        loaded = load_manifest(save_manifest(original, tmp_path / "rt"))
        assert loaded.equals(original)
        again = load_manifest(save_manifest(loaded, tmp_path / "rt2"))
        assert again.equals(loaded)


class TestSelectTrials:
    def test_paper_shape_context_filter_count(self, paper_manifest_path):
        manifest = load_manifest(paper_manifest_path)
        # 'pick' is the third behavior in the fixed grid, paired with force.
        recs = select_trials(manifest, robot="ur5", behavior="pick",
                             modality="force")
        assert len(recs) == 95 * 5

    def test_empty_filter_returns_all(self):
        manifest = tiny_manifest(n_objects=2, trials=2)
        assert len(select_trials(manifest)) == len(manifest.records)

    def test_unknown_robot(self):
        manifest = tiny_manifest()
        with pytest.raises(UnknownName):
            select_trials(manifest, robot="r3")

    def test_unknown_object(self):
        manifest = tiny_manifest()
        with pytest.raises(UnknownName):
            select_trials(manifest, objects=["obj99"])

    def test_deterministic_order(self):
        manifest = tiny_manifest(n_objects=4, trials=3)
        recs = select_trials(manifest, robot="ur5")
        keys = [(r.object_id, r.trial_index) for r in recs]
        assert keys == sorted(keys)

    def test_partition_property(self):
        manifest = tiny_manifest(n_objects=5, trials=2)
        o1 = ["obj00", "obj01"]
        o2 = ["obj02", "obj04"]
        r1 = select_trials(manifest, objects=o1)
        r2 = select_trials(manifest, objects=o2)
        both = select_trials(manifest, objects=o1 + o2)
        ids1 = {r.sample_id for r in r1}
        ids2 = {r.sample_id for r in r2}
        assert not ids1 & ids2
        assert ids1 | ids2 == {r.sample_id for r in both}
