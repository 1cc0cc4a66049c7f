"""Synthetic two-robot dataset generator.

Each (object, trial) draws a latent vector from a class-conditional Gaussian
whose mean encodes the object's weight and content; each robot observes the
latent through its own fixed affine map (random orthonormal mixing, per-axis
scaling with bounded condition number, bias) plus isotropic noise.  Because
the ground-truth latent structure is known, the generator serves as the
oracle for the desk-scale transfer benchmarks.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import (
    AUDIO_DIM,
    BEHAVIORS,
    BINS_PER_CHANNEL,
    COLORS,
    CONTENTS,
    DatasetManifest,
    FORCE_DIM,
    ObjectDescriptor,
    RobotDescriptor,
    SensorimotorContext,
    TrialRecord,
    WEIGHTS,
    load_manifest,
    save_manifest,
)
from .errors import InvalidConfig
from .featurize import RawSignal

CLASSES_PER_PROPERTY = {"weights": len(WEIGHTS), "contents": len(CONTENTS)}
_FULL_WEIGHTS = tuple(w for w in WEIGHTS if w != "empty")
_FULL_CONTENTS = tuple(c for c in CONTENTS if c != "empty")
# Eight behaviors, one modality each: the paper-shaped context grid.
DEFAULT_CONTEXTS = tuple(
    (behavior, ("audio", "effort", "force")[i % 3])
    for i, behavior in enumerate(BEHAVIORS)
)
MAX_SCALE_CONDITION = 10.0


@dataclass(frozen=True)
class SynthRobot:
    name: str
    effort_joints: int = 7
    noise_sigma: float = 0.25


@dataclass(frozen=True)
class SynthConfig:
    latent_dim: int = 8
    objects: int = 95
    trials_per_object: int = 5
    contexts: tuple[tuple[str, str], ...] = DEFAULT_CONTEXTS
    robots: tuple[SynthRobot, ...] = (SynthRobot("baxter", effort_joints=7),
                                      SynthRobot("ur5", effort_joints=6))
    class_separation: float = 4.0
    latent_spread: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.latent_dim < 1:
            raise InvalidConfig("latentDim must be >= 1")
        if self.objects < 1 or self.trials_per_object < 1:
            raise InvalidConfig("objects and trialsPerObject must be >= 1")
        if not self.contexts:
            raise InvalidConfig("at least one context is required")
        if len({r.name for r in self.robots}) != len(self.robots):
            raise InvalidConfig("robot names must be unique")
        for r in self.robots:
            if r.noise_sigma < 0:
                raise InvalidConfig("noiseSigma must be >= 0")
            for behavior, modality in self.contexts:
                dim = _context_dim(modality, r.effort_joints)
                if dim < self.latent_dim:
                    raise InvalidConfig(
                        f"context {behavior}-{modality} dim {dim} < latent "
                        f"dim {self.latent_dim}")

    @property
    def classes_per_property(self) -> dict:
        return dict(CLASSES_PER_PROPERTY)


def _context_dim(modality: str, effort_joints: int) -> int:
    if modality == "audio":
        return AUDIO_DIM
    if modality == "force":
        return FORCE_DIM
    return BINS_PER_CHANNEL * effort_joints


def make_object_catalog(n: int) -> list[ObjectDescriptor]:
    """Cycle the (weight, content) grid plus the empty combo, colors rotating,
    so any prefix is as class-balanced as possible.  n=95 reproduces the
    5 colors x 3 weights x 6 contents + 5 empties layout."""
    combos = [(w, c) for w in _FULL_WEIGHTS for c in _FULL_CONTENTS]
    combos.append(("empty", "empty"))
    out = []
    seen = set()
    for i in range(n):
        weight, content = combos[i % len(combos)]
        color = COLORS[(i // len(combos)) % len(COLORS)]
        base = f"{color}-{content}-{weight}"
        oid = base
        serial = 1
        while oid in seen:
            oid = f"{base}-{serial}"
            serial += 1
        seen.add(oid)
        out.append(ObjectDescriptor(id=oid, color=color, content=content,
                                    weight=weight))
    return out


def _mixing_map(rng: np.random.Generator, out_dim: int, latent_dim: int):
    """Random orthonormal columns with per-latent-axis scaling whose condition
    number stays under MAX_SCALE_CONDITION, plus a bias."""
    gauss = rng.standard_normal((out_dim, latent_dim))
    q, _ = np.linalg.qr(gauss)
    lo = 1.0 / np.sqrt(MAX_SCALE_CONDITION)
    hi = np.sqrt(MAX_SCALE_CONDITION)
    scales = rng.uniform(lo, hi, size=latent_dim)
    bias = rng.standard_normal(out_dim)
    return q * scales[None, :], bias


def generate_synthetic_dataset(config: SynthConfig,
                               out_dir: str | Path | None = None) -> DatasetManifest:
    """Build the manifest (and optionally materialize it to disk).

    Writing and re-generating with the same seed produces bit-identical files.
    """
    rng = np.random.default_rng(config.seed)
    objects = make_object_catalog(config.objects)

    weight_means = {w: config.class_separation * _unit(rng, config.latent_dim)
                    for w in WEIGHTS}
    content_means = {c: config.class_separation * _unit(rng, config.latent_dim)
                     for c in CONTENTS}

    latents = {}
    for obj in objects:
        mu = weight_means[obj.weight] + content_means[obj.content]
        for t in range(config.trials_per_object):
            latents[(obj.id, t)] = mu + config.latent_spread * \
                rng.standard_normal(config.latent_dim)

    robots = []
    records = []
    for robot in config.robots:
        desc = RobotDescriptor(
            name=robot.name,
            behaviors=tuple(dict.fromkeys(b for b, _ in config.contexts)),
            modalities=tuple(dict.fromkeys(m for _, m in config.contexts)),
            trials_per_object=config.trials_per_object,
            effort_joints=robot.effort_joints)
        robots.append(desc)
        for behavior, modality in config.contexts:
            dim = desc.feature_dim(modality)
            mix, bias = _mixing_map(rng, dim, config.latent_dim)
            context = SensorimotorContext(robot=robot.name, behavior=behavior,
                                          modality=modality, feature_dim=dim)
            for obj in objects:
                for t in range(config.trials_per_object):
                    z = latents[(obj.id, t)]
                    feat = mix @ z + bias + robot.noise_sigma * \
                        rng.standard_normal(dim)
                    records.append(TrialRecord(
                        object_id=obj.id, context=context, trial_index=t,
                        feature=feat, provenance="real"))

    manifest = DatasetManifest(robots=tuple(robots), objects=tuple(objects),
                               records=tuple(sorted(records,
                                                    key=TrialRecord.sort_key)))
    if out_dir is not None:
        path = save_manifest(manifest, out_dir)
        return load_manifest(path)
    return manifest


def _unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


# -- two-domain blob benchmark ---------------------------------------------------

def make_blob_benchmark(n_per_domain: int = 100, dim1: int = 5, dim2: int = 9,
                        latent_dim: int = 2, n_classes: int = 2,
                        separation: float = 6.0, spread: float = 0.6,
                        noise_sigma: float = 0.05, seed: int = 0) -> dict:
    """Class blobs in a shared latent space, embedded into two domains of
    different dimensionality through independent random affine maps.

    The construction margin makes cross-domain nearest-neighbor after a good
    alignment near-perfect while raw (zero-padded) features stay near chance.
    Returns X1, y1, X2, y2 plus the ground-truth latents.
    """
    rng = np.random.default_rng(seed)
    means = separation * np.stack([_unit(rng, latent_dim)
                                   for _ in range(n_classes)])
    out = {}
    labels_per_domain = {}
    latents_per_domain = {}
    for d, dim in ((1, dim1), (2, dim2)):
        counts = np.full(n_classes, n_per_domain // n_classes)
        counts[:n_per_domain % n_classes] += 1
        labels = np.concatenate([np.full(c, k) for k, c in enumerate(counts)])
        z = means[labels] + spread * rng.standard_normal(
            (n_per_domain, latent_dim))
        mix, bias = _mixing_map(rng, dim, latent_dim)
        x = z @ mix.T + bias[None, :] + noise_sigma * rng.standard_normal(
            (n_per_domain, dim))
        out[f"X{d}"] = x
        labels_per_domain[d] = np.array([f"class{k}" for k in labels],
                                        dtype=object)
        latents_per_domain[d] = z
    out["y1"] = labels_per_domain[1]
    out["y2"] = labels_per_domain[2]
    out["Z1"] = latents_per_domain[1]
    out["Z2"] = latents_per_domain[2]
    return out


# -- raw-signal mode (featurization demos/tests only) -------------------------------

def synth_audio_signal(frequency_hz: float, duration_s: float = 0.5,
                       sample_rate: int = 16000, noise: float = 0.0,
                       seed: int = 0) -> RawSignal:
    """A sine, optionally noisy; handy as a featurization probe."""
    rng = np.random.default_rng(seed)
    t = np.arange(int(duration_s * sample_rate)) / sample_rate
    wave = np.sin(2 * np.pi * frequency_hz * t)
    if noise > 0:
        wave = wave + noise * rng.standard_normal(t.shape[0])
    return RawSignal(kind="audio-wave", data=wave[None, :],
                     sample_rate=float(sample_rate))


def synth_timeseries_signal(kind: str, channels: int, samples: int = 200,
                            seed: int = 0) -> RawSignal:
    """A smooth random walk per channel, standing in for effort/force logs."""
    rng = np.random.default_rng(seed)
    steps = rng.standard_normal((channels, samples))
    data = np.cumsum(steps, axis=1) / np.sqrt(samples)
    return RawSignal(kind=kind, data=data)
