"""Aligned source/target sample pairs and labeled domain matrices.

Identity pairing crosses every source trial of an object with every target
trial of that same object; property pairing crosses trials whose objects
share the designated property value.  Kernel alignment does not pair at all:
it consumes the two domains as labeled matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .data import DatasetManifest, SensorimotorContext, TrialRecord
from .errors import ContextMismatch, UnknownLabel

PAIR_PROPERTIES = ("weight", "content")
KEMA_LABELS = ("weight", "content", "objectId")


@dataclass(frozen=True)
class CorrespondenceSet:
    """Aligned (source, target) trial pairs for projection learning."""

    pairs: tuple[tuple[TrialRecord, TrialRecord], ...]
    mode: str  # identity | property
    property: str  # weight | content | objectId
    source_context: SensorimotorContext
    target_context: SensorimotorContext

    def __len__(self) -> int:
        return len(self.pairs)

    def source_matrix(self) -> np.ndarray:
        return np.stack([s.feature for s, _ in self.pairs]) if self.pairs else \
            np.empty((0, self.source_context.feature_dim))

    def target_matrix(self) -> np.ndarray:
        return np.stack([t.feature for _, t in self.pairs]) if self.pairs else \
            np.empty((0, self.target_context.feature_dim))


def _single_context(records: Sequence[TrialRecord], side: str) -> SensorimotorContext:
    if not records:
        raise ContextMismatch(f"{side} record list is empty")
    ctx = records[0].context
    for r in records:
        if r.context != ctx:
            raise ContextMismatch(f"{side} records mix contexts: {r.context} vs {ctx}")
    return ctx


def _check_contexts(src: Sequence[TrialRecord],
                    tgt: Sequence[TrialRecord]) -> tuple[SensorimotorContext, SensorimotorContext]:
    cs = _single_context(src, "source")
    ct = _single_context(tgt, "target")
    if cs.key != ct.key:
        raise ContextMismatch(
            f"source {cs.key} and target {ct.key} must share behavior+modality")
    return cs, ct


def _cross(src: Sequence[TrialRecord], tgt: Sequence[TrialRecord],
           group_of: Callable[[TrialRecord], str]):
    """Cartesian product within matching groups, in deterministic
    (source object, source trial, target object, target trial) order."""
    tgt_groups: dict[str, list[TrialRecord]] = {}
    for t in tgt:
        tgt_groups.setdefault(group_of(t), []).append(t)
    for g in tgt_groups.values():
        g.sort(key=TrialRecord.sort_key)
    pairs = []
    for s in sorted(src, key=TrialRecord.sort_key):
        for t in tgt_groups.get(group_of(s), ()):
            pairs.append((s, t))
    return tuple(pairs)


def identity_pairs(src: Sequence[TrialRecord],
                   tgt: Sequence[TrialRecord]) -> CorrespondenceSet:
    """Pair each source trial with every target trial of the same object."""
    cs, ct = _check_contexts(src, tgt)
    return CorrespondenceSet(pairs=_cross(src, tgt, lambda r: r.object_id),
                             mode="identity", property="objectId",
                             source_context=cs, target_context=ct)


def property_pairs(src: Sequence[TrialRecord], tgt: Sequence[TrialRecord],
                   prop: str, manifest: DatasetManifest) -> CorrespondenceSet:
    """Pair trials whose objects share the same value of ``prop``.

    Pairing crosses object identities but never property values.
    """
    if prop not in PAIR_PROPERTIES:
        raise UnknownLabel(f"property must be one of {PAIR_PROPERTIES}, got {prop!r}")
    cs, ct = _check_contexts(src, tgt)
    value_of = lambda r: manifest.object(r.object_id).property_value(prop)
    return CorrespondenceSet(pairs=_cross(src, tgt, value_of),
                             mode="property", property=prop,
                             source_context=cs, target_context=ct)


def record_labels(records: Sequence[TrialRecord], label: str,
                  manifest: DatasetManifest) -> np.ndarray:
    if label not in KEMA_LABELS:
        raise UnknownLabel(f"label must be one of {KEMA_LABELS}, got {label!r}")
    return np.array([manifest.object(r.object_id).property_value(label)
                     for r in records], dtype=object)


def kema_inputs(src: Sequence[TrialRecord], tgt: Sequence[TrialRecord],
                label: str, manifest: DatasetManifest) -> dict:
    """Stack per-domain feature matrices with one label per sample.

    No pairing happens: identity-mode alignment is label='objectId' and
    property-mode alignment is label='weight'/'content'.
    """
    cs = _single_context(src, "source")
    if tgt:
        ct = _single_context(tgt, "target")
        if cs.key != ct.key:
            raise ContextMismatch(
                f"source {cs.key} and target {ct.key} must share behavior+modality")
    src = sorted(src, key=TrialRecord.sort_key)
    tgt = sorted(tgt, key=TrialRecord.sort_key)
    x2 = (np.stack([t.feature for t in tgt]) if tgt
          else np.empty((0, cs.feature_dim)))
    return {
        "X1": np.stack([s.feature for s in src]),
        "y1": record_labels(src, label, manifest),
        "X2": x2,
        "y2": record_labels(tgt, label, manifest),
    }
