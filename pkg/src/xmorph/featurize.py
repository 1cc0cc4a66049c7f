"""Raw signal to fixed-length binned feature vectors.

Audio goes wave -> power mel spectrogram -> 10x10 spectro-temporal histogram
(100 dims).  Effort and force time series go straight to 10 equally-spaced
temporal bins per channel (joints x 10 and 3 x 10 dims).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    MissingFile,
    SchemaViolation,
    SignalTooShort,
    TooFewBands,
    TooFewFrames,
    TooFewSamples,
)

SIGNAL_KINDS = ("audio-wave", "joint-effort", "endpoint-force")

DEFAULT_FFT_WINDOW = 1024
DEFAULT_HOP = 512
DEFAULT_MEL_BANDS = 60
DEFAULT_BINS = 10


@dataclass(frozen=True)
class RawSignal:
    """A recorded signal: audio wave, per-joint effort, or end-effector force.

    ``data`` is [channels x samples]; audio is single-channel and carries a
    sample rate, force has 3 axis channels, effort one channel per joint.
    """

    kind: str
    data: np.ndarray
    sample_rate: float | None = None

    def __post_init__(self):
        if self.kind not in SIGNAL_KINDS:
            raise SchemaViolation(f"unknown signal kind {self.kind!r}")
        data = np.atleast_2d(np.asarray(self.data, dtype=np.float64))
        object.__setattr__(self, "data", data)
        if data.shape[1] < 1:
            raise SchemaViolation("signal must contain at least one sample")
        if self.kind == "audio-wave":
            if data.shape[0] != 1:
                raise SchemaViolation("audio signals are single-channel")
            if self.sample_rate is None or self.sample_rate <= 0:
                raise SchemaViolation("audio signals need a positive sample rate")
        if self.kind == "endpoint-force" and data.shape[0] != 3:
            raise SchemaViolation("force signals have exactly 3 axis channels")

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def samples(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class BinnedFeature:
    """A flattened rows x cols grid of bin means."""

    vector: np.ndarray
    rows: int
    cols: int

    def __post_init__(self):
        vec = np.asarray(self.vector, dtype=np.float64)
        object.__setattr__(self, "vector", vec)
        if vec.ndim != 1 or vec.shape[0] != self.rows * self.cols:
            raise DimensionMismatch(
                f"vector length {vec.shape[0]} != rows*cols = {self.rows * self.cols}")

    def grid(self) -> np.ndarray:
        return self.vector.reshape(self.rows, self.cols)


def hz_to_mel(f):
    """HTK mel scale."""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filter_bank(sample_rate: float, fft_window: int, mel_bands: int) -> np.ndarray:
    """Triangular mel filters spanning 0 Hz to Nyquist, [mel_bands x fft bins].

    Filters are plain triangles (no area normalization): each row sums to a
    positive value and has compact support.
    """
    if mel_bands < 1:
        raise TooFewBands("melBands must be >= 1")
    n_bins = fft_window // 2 + 1
    bin_freqs = np.arange(n_bins) * sample_rate / fft_window
    mel_pts = np.linspace(hz_to_mel(0.0), hz_to_mel(sample_rate / 2.0), mel_bands + 2)
    hz_pts = mel_to_hz(mel_pts)

    bank = np.zeros((mel_bands, n_bins))
    for m in range(mel_bands):
        lo, center, hi = hz_pts[m], hz_pts[m + 1], hz_pts[m + 2]
        up = (bin_freqs - lo) / (center - lo)
        down = (hi - bin_freqs) / (hi - center)
        bank[m] = np.maximum(0.0, np.minimum(up, down))
    return bank


def band_center_frequency(sample_rate: float, mel_bands: int, band: int) -> float:
    """Center frequency (Hz) of one triangular filter; handy for probes."""
    mel_pts = np.linspace(hz_to_mel(0.0), hz_to_mel(sample_rate / 2.0), mel_bands + 2)
    return float(mel_to_hz(mel_pts[band + 1]))


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann window, the STFT convention."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def frame_count(samples: int, fft_window: int, hop: int) -> int:
    return 1 + (samples - fft_window) // hop


def mel_spectrogram(signal: RawSignal, fft_window: int = DEFAULT_FFT_WINDOW,
                    hop: int = DEFAULT_HOP,
                    mel_bands: int = DEFAULT_MEL_BANDS) -> np.ndarray:
    """Power mel spectrogram of an audio signal, [mel_bands x frames].

    Magnitude-squared STFT under a periodic Hann window with no padding
    (frames = 1 + floor((samples - window)/hop)), mapped through the
    triangular filter bank.  No decibel compression.
    """
    if signal.kind != "audio-wave":
        raise SchemaViolation("mel_spectrogram expects an audio-wave signal")
    x = signal.data[0]
    if x.shape[0] < fft_window:
        raise SignalTooShort(
            f"signal has {x.shape[0]} samples < fft window {fft_window}")
    n_frames = frame_count(x.shape[0], fft_window, hop)
    idx = np.arange(fft_window)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = x[idx] * hann_window(fft_window)[None, :]
    power = np.abs(np.fft.rfft(frames, axis=1)) ** 2  # [frames x bins]
    bank = mel_filter_bank(signal.sample_rate, fft_window, mel_bands)
    return bank @ power.T


def bin_edges(length: int, bins: int) -> np.ndarray:
    """Start offsets (plus final end) of ``bins`` contiguous near-equal
    intervals; earlier bins absorb the remainder."""
    base, rem = divmod(length, bins)
    sizes = np.full(bins, base, dtype=int)
    sizes[:rem] += 1
    return np.concatenate(([0], np.cumsum(sizes)))


def spectro_temporal_histogram(spec: np.ndarray, rows: int = DEFAULT_BINS,
                               cols: int = DEFAULT_BINS) -> BinnedFeature:
    """Mean-pool a [bands x frames] spectrogram onto a rows x cols grid,
    flattened row-major."""
    spec = np.asarray(spec, dtype=np.float64)
    if spec.ndim != 2:
        raise DimensionMismatch("spectrogram must be a 2-D matrix")
    bands, frames = spec.shape
    if bands < rows:
        raise TooFewBands(f"{bands} bands < {rows} frequency bins")
    if frames < cols:
        raise TooFewFrames(f"{frames} frames < {cols} temporal bins")
    redges = bin_edges(bands, rows)
    cedges = bin_edges(frames, cols)
    out = np.empty((rows, cols))
    for i in range(rows):
        block = spec[redges[i]:redges[i + 1]]
        for j in range(cols):
            out[i, j] = block[:, cedges[j]:cedges[j + 1]].mean()
    return BinnedFeature(vector=out.ravel(), rows=rows, cols=cols)


def temporal_bin(signal: RawSignal, bins: int = DEFAULT_BINS) -> BinnedFeature:
    """Per-channel means over ``bins`` contiguous near-equal time intervals,
    channels concatenated in declared order (length = channels * bins)."""
    if signal.kind == "audio-wave":
        raise SchemaViolation("temporal_bin expects effort or force signals")
    data = signal.data
    if data.shape[1] < bins:
        raise TooFewSamples(f"{data.shape[1]} samples < {bins} bins")
    edges = bin_edges(data.shape[1], bins)
    out = np.empty((data.shape[0], bins))
    for j in range(bins):
        out[:, j] = data[:, edges[j]:edges[j + 1]].mean(axis=1)
    return BinnedFeature(vector=out.ravel(), rows=data.shape[0], cols=bins)


def audio_feature(signal: RawSignal, fft_window: int = DEFAULT_FFT_WINDOW,
                  hop: int = DEFAULT_HOP, mel_bands: int = DEFAULT_MEL_BANDS,
                  rows: int = DEFAULT_BINS, cols: int = DEFAULT_BINS) -> BinnedFeature:
    """Full audio pipeline: mel spectrogram then spectro-temporal histogram."""
    return spectro_temporal_histogram(
        mel_spectrogram(signal, fft_window, hop, mel_bands), rows, cols)


# -- signal file IO ---------------------------------------------------------

def read_wav(path: str | Path) -> RawSignal:
    """Read a single-channel WAV file (16-bit PCM or 32/64-bit float).

    Integer PCM is normalized to [-1, 1].
    """
    from scipy.io import wavfile

    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"audio file not found: {path}")
    rate, data = wavfile.read(path)
    data = np.asarray(data)
    if data.ndim > 1:
        raise SchemaViolation(f"{path}: expected single-channel audio")
    if np.issubdtype(data.dtype, np.integer):
        data = data.astype(np.float64) / float(np.iinfo(data.dtype).max + 1)
    else:
        data = data.astype(np.float64)
    return RawSignal(kind="audio-wave", data=data[None, :], sample_rate=float(rate))


def write_wav(path: str | Path, signal: RawSignal) -> None:
    from scipy.io import wavfile

    wavfile.write(Path(path), int(signal.sample_rate),
                  signal.data[0].astype(np.float32))


def read_timeseries_csv(path: str | Path, kind: str) -> RawSignal:
    """Read an effort/force CSV (one row per timestep, one column per channel)."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"signal file not found: {path}")
    try:
        table = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as e:
        raise SchemaViolation(f"{path} is not numeric CSV: {e}") from e
    return RawSignal(kind=kind, data=table.T)


def write_timeseries_csv(path: str | Path, signal: RawSignal) -> None:
    np.savetxt(Path(path), signal.data.T, delimiter=",", fmt="%.17g")
