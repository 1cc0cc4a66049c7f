"""Trial-level Gaussian data augmentation per object and context.

Statistics (per-bin mean and population standard deviation) are fitted over
an object's real trials in one context; extra trials are sampled elementwise
from Normal(mean_j, std_j).
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import SensorimotorContext, TrialRecord
from .errors import EmptyInput, MixedContext

DEFAULT_K = 5


@dataclass(frozen=True)
class BinStats:
    """Per-bin augmentation statistics for one (object, context)."""

    mean: np.ndarray
    std: np.ndarray
    object_id: str
    context: SensorimotorContext
    source_trials: int

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=np.float64))
        object.__setattr__(self, "std", np.asarray(self.std, dtype=np.float64))
        if self.std.shape != self.mean.shape:
            raise MixedContext("mean and std shapes differ")
        if np.any(self.std < 0):
            raise MixedContext("std must be elementwise >= 0")
        if self.source_trials < 1:
            raise EmptyInput("stats need at least one source trial")


def fit_bin_stats(trials: Sequence[TrialRecord]) -> BinStats:
    """Elementwise sample mean and population (1/n) standard deviation across
    real trials of a single object and context."""
    if len(trials) == 0:
        raise EmptyInput("no trials supplied")
    first = trials[0]
    for t in trials:
        if t.context != first.context or t.object_id != first.object_id:
            raise MixedContext(
                f"trials mix objects/contexts: {t.object_id}/{t.context} vs "
                f"{first.object_id}/{first.context}")
        if t.provenance != "real":
            raise MixedContext("augmentation statistics must use real trials only")
    mat = np.stack([t.feature for t in trials])
    return BinStats(
        mean=mat.mean(axis=0),
        std=mat.std(axis=0, ddof=0),
        object_id=first.object_id,
        context=first.context,
        source_trials=len(trials),
    )


def derive_seed(seed: int, object_id: str, context: SensorimotorContext) -> list[int]:
    """Mix the run seed with stable hashes of the object and context so
    per-object sampling is order-independent and reproducible."""
    ctx = f"{context.robot}/{context.behavior}/{context.modality}"
    return [seed & 0xFFFFFFFF,
            zlib.crc32(object_id.encode()),
            zlib.crc32(ctx.encode())]


def sample_augmented(stats: BinStats, k: int = DEFAULT_K, seed: int = 0,
                     start_index: int | None = None) -> list[TrialRecord]:
    """Draw k augmented trials, deterministic given the seed.

    Trial indices continue after the real trials (``start_index`` overrides
    the default of ``stats.source_trials``).
    """
    if k < 0:
        raise EmptyInput("k must be >= 0")
    start = stats.source_trials if start_index is None else start_index
    rng = np.random.default_rng(derive_seed(seed, stats.object_id, stats.context))
    draws = stats.mean[None, :] + stats.std[None, :] * rng.standard_normal(
        (k, stats.mean.shape[0]))
    return [
        TrialRecord(object_id=stats.object_id, context=stats.context,
                    trial_index=start + j, feature=draws[j],
                    provenance="augmented")
        for j in range(k)
    ]


def augment_trials(trials: Sequence[TrialRecord], k: int = DEFAULT_K,
                   seed: int = 0) -> list[TrialRecord]:
    """Group real trials by (object, context), fit stats, and sample k
    augmented trials per group.  Returns only the augmented records."""
    groups: dict[tuple, list[TrialRecord]] = {}
    for t in trials:
        if t.provenance != "real":
            continue
        groups.setdefault((t.object_id, t.context), []).append(t)
    out: list[TrialRecord] = []
    for key in sorted(groups, key=lambda k: (k[0], k[1].robot, k[1].behavior,
                                             k[1].modality)):
        group = groups[key]
        stats = fit_bin_stats(group)
        start = max(t.trial_index for t in group) + 1
        out.extend(sample_augmented(stats, k=k, seed=seed, start_index=start))
    return out
