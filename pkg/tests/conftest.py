from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from xmorph.data import (
    DatasetManifest,
    ObjectDescriptor,
    RobotDescriptor,
    SensorimotorContext,
    TrialRecord,
)


def make_context(robot="ur5", behavior="shake", modality="force",
                 dim=None) -> SensorimotorContext:
    if dim is None:
        dim = {"audio": 100, "force": 30, "effort": 60}[modality]
    return SensorimotorContext(robot=robot, behavior=behavior,
                               modality=modality, feature_dim=dim)


def make_record(object_id, context, trial, feature=None, provenance="real",
                rng=None) -> TrialRecord:
    if feature is None:
        rng = rng or np.random.default_rng(0)
        feature = rng.standard_normal(context.feature_dim)
    return TrialRecord(object_id=object_id, context=context,
                       trial_index=trial, feature=feature,
                       provenance=provenance)


def tiny_manifest(n_objects=3, trials=2, robots=("baxter", "ur5"),
                  contexts=(("shake", "force"),), seed=0) -> DatasetManifest:
    """A small in-memory manifest with valid object traits."""
    rng = np.random.default_rng(seed)
    colors = ["blue", "green", "red", "white", "yellow"]
    combos = [("g50", "rice"), ("g100", "pasta"), ("g150", "marbles"),
              ("empty", "empty"), ("g50", "buttons"), ("g100", "dices")]
    objects = []
    for i in range(n_objects):
        w, c = combos[i % len(combos)]
        objects.append(ObjectDescriptor(
            id=f"obj{i:02d}", color=colors[i % len(colors)], content=c,
            weight=w))
    robot_descs = tuple(
        RobotDescriptor(name=r,
                        behaviors=tuple(sorted({b for b, _ in contexts})),
                        modalities=tuple(sorted({m for _, m in contexts})),
                        trials_per_object=trials,
                        effort_joints=6)
        for r in robots)
    records = []
    for rd in robot_descs:
        for behavior, modality in contexts:
            ctx = SensorimotorContext(robot=rd.name, behavior=behavior,
                                      modality=modality,
                                      feature_dim=rd.feature_dim(modality))
            for obj in objects:
                for t in range(trials):
                    records.append(TrialRecord(
                        object_id=obj.id, context=ctx, trial_index=t,
                        feature=rng.standard_normal(ctx.feature_dim)))
    return DatasetManifest(robots=robot_descs, objects=tuple(objects),
                           records=tuple(sorted(records,
                                                key=TrialRecord.sort_key)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
