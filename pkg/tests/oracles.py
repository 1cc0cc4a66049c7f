"""Independent reference implementations the tests check against.

Everything here deliberately takes a different computational route from the
library: explicit index enumeration instead of vectorized splits, direct DFT
sums instead of FFT, determinant sign changes instead of matrix reduction,
projected gradient instead of SMO.
"""

from __future__ import annotations

import numpy as np


# -- binning ------------------------------------------------------------------

def enumerate_bin_indices(length: int, bins: int) -> list[list[int]]:
    """Contiguous near-equal index sets, earlier bins one element longer."""
    out = []
    start = 0
    for i in range(bins):
        size = length // bins + (1 if i < length % bins else 0)
        out.append(list(range(start, start + size)))
        start += size
    return out


def histogram_oracle(matrix: np.ndarray, rows: int, cols: int) -> np.ndarray:
    row_sets = enumerate_bin_indices(matrix.shape[0], rows)
    col_sets = enumerate_bin_indices(matrix.shape[1], cols)
    out = np.zeros(rows * cols)
    pos = 0
    for rset in row_sets:
        for cset in col_sets:
            vals = [matrix[i, j] for i in rset for j in cset]
            out[pos] = sum(vals) / len(vals)
            pos += 1
    return out


def temporal_bin_oracle(data: np.ndarray, bins: int) -> np.ndarray:
    out = []
    for channel in data:
        for idx in enumerate_bin_indices(channel.shape[0], bins):
            vals = [channel[i] for i in idx]
            out.append(sum(vals) / len(vals))
    return np.array(out)


# -- spectral -----------------------------------------------------------------

def naive_dft_power(segment: np.ndarray) -> np.ndarray:
    """|DFT|^2 of one windowed frame, by direct evaluation of the sum."""
    n = segment.shape[0]
    k = np.arange(n // 2 + 1)
    angles = 2.0 * np.pi * np.outer(k, np.arange(n)) / n
    real = np.cos(angles) @ segment
    imag = -np.sin(angles) @ segment
    return real ** 2 + imag ** 2


def naive_mel_filter(sample_rate: float, fft_window: int,
                     mel_bands: int) -> np.ndarray:
    """Loop-built triangular HTK-mel filters, 0 Hz to Nyquist."""
    def mel(f):
        return 2595.0 * np.log10(1.0 + f / 700.0)

    def hz(m):
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

    edges = [hz(mel(0.0) + (mel(sample_rate / 2.0) - mel(0.0)) * i / (mel_bands + 1))
             for i in range(mel_bands + 2)]
    n_bins = fft_window // 2 + 1
    bank = np.zeros((mel_bands, n_bins))
    for m in range(mel_bands):
        lo, center, hi = edges[m], edges[m + 1], edges[m + 2]
        for k in range(n_bins):
            f = k * sample_rate / fft_window
            if lo < f < hi:
                if f <= center:
                    bank[m, k] = (f - lo) / (center - lo)
                else:
                    bank[m, k] = (hi - f) / (hi - center)
            elif f == center:
                bank[m, k] = 1.0
    return bank


def naive_mel_spectrogram(wave: np.ndarray, sample_rate: float,
                          fft_window: int, hop: int,
                          mel_bands: int) -> np.ndarray:
    n_frames = 1 + (wave.shape[0] - fft_window) // hop
    window = np.array([0.5 - 0.5 * np.cos(2.0 * np.pi * i / fft_window)
                       for i in range(fft_window)])
    bank = naive_mel_filter(sample_rate, fft_window, mel_bands)
    out = np.zeros((mel_bands, n_frames))
    for t in range(n_frames):
        seg = wave[t * hop:t * hop + fft_window] * window
        out[:, t] = bank @ naive_dft_power(seg)
    return out


# -- linear algebra --------------------------------------------------------------

def generalized_eigvals_by_det_bisection(a: np.ndarray, b: np.ndarray,
                                         grid_points: int = 4001,
                                         tol: float = 1e-12) -> np.ndarray:
    """Roots of det(A - lambda B) located by sign changes and bisection.

    Assumes B is positive definite so exactly n real roots exist; refines
    the scan grid until all are bracketed.
    """
    n = a.shape[0]
    bound = float(np.linalg.norm(a, "fro") *
                  np.linalg.norm(np.linalg.inv(b), "fro")) + 1.0

    def f(lam):
        return float(np.linalg.det(a - lam * b))

    points = grid_points
    for _ in range(6):
        grid = np.linspace(-bound, bound, points)
        vals = np.array([f(g) for g in grid])
        roots = []
        for i in range(points - 1):
            lo, hi = grid[i], grid[i + 1]
            flo, fhi = vals[i], vals[i + 1]
            if flo == 0.0:
                roots.append(lo)
                continue
            if flo * fhi < 0:
                for _ in range(200):
                    mid = 0.5 * (lo + hi)
                    fmid = f(mid)
                    if fmid == 0.0 or hi - lo < tol * max(1.0, abs(mid)):
                        break
                    if flo * fmid < 0:
                        hi = mid
                    else:
                        lo, flo = mid, fmid
                roots.append(0.5 * (lo + hi))
        if vals[-1] == 0.0:
            roots.append(grid[-1])
        if len(roots) == n:
            return np.array(sorted(roots))
        points = points * 8 + 1
    raise AssertionError(
        f"bisection oracle found {len(roots)} of {n} eigenvalues")


def laplacian_quadratic_oracle(weights: np.ndarray, x: np.ndarray) -> float:
    """Direct pairwise sum: sum_{i<j} w_ij (x_i - x_j)^2."""
    n = weights.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            total += weights[i, j] * (x[i] - x[j]) ** 2
    return total


# -- regression / classification -----------------------------------------------------

def ols_fit_predict(x_train, y_train, x_test):
    """Ordinary least squares with intercept; the linear Bayes predictor."""
    xt = np.hstack([x_train, np.ones((x_train.shape[0], 1))])
    coef, *_ = np.linalg.lstsq(xt, y_train, rcond=None)
    return np.hstack([x_test, np.ones((x_test.shape[0], 1))]) @ coef


def _project_box_hyperplane(v: np.ndarray, y: np.ndarray, c: float) -> np.ndarray:
    """Exact Euclidean projection onto {0 <= a <= C, a.y = 0}.

    g(nu) = clip(v - nu*y, 0, C).y is piecewise linear and nonincreasing in
    nu; walk its breakpoints to find the zero crossing.
    """
    breaks = np.unique(np.concatenate([(v - 0.0) * y, (v - c) * y]))

    def g(nu):
        return float(np.clip(v - nu * y, 0.0, c) @ y)

    values = np.array([g(nu) for nu in breaks])
    if values[0] <= 0.0:
        nu = breaks[0]
    elif values[-1] >= 0.0:
        nu = breaks[-1]
    else:
        hi_idx = int(np.searchsorted(-values, 0.0))
        lo_idx = hi_idx - 1
        nu0, nu1 = breaks[lo_idx], breaks[hi_idx]
        g0, g1 = values[lo_idx], values[hi_idx]
        nu = nu0 if g0 == g1 else nu0 + (nu1 - nu0) * g0 / (g0 - g1)
    return np.clip(v - nu * y, 0.0, c)


def svm_dual_oracle(kernel: np.ndarray, y: np.ndarray, c: float,
                    iters: int = 50000, grad_tol: float = 1e-12
                    ) -> tuple[np.ndarray, float]:
    """High-precision binary SVM dual via projected gradient ascent.

    Maximizes sum(a) - 1/2 (a y)^T K (a y) over the box [0, C]^n intersected
    with the hyperplane a.y = 0, using an exact piecewise-linear projection.
    Returns (alpha, bias).
    """
    q = (y[:, None] * y[None, :]) * kernel
    step = 1.0 / (np.linalg.norm(q, 2) + 1e-12)
    alpha = np.zeros(y.shape[0])
    for _ in range(iters):
        new = _project_box_hyperplane(alpha + step * (1.0 - q @ alpha), y, c)
        moved = float(np.abs(new - alpha).max())
        alpha = new
        if moved < grad_tol:
            break

    margins = kernel @ (alpha * y)
    free = (alpha > 1e-6 * c) & (alpha < (1 - 1e-6) * c)
    if np.any(free):
        bias = float(np.mean(y[free] - margins[free]))
    else:
        sv = alpha > 1e-9
        bias = float(np.mean(y[sv] - margins[sv])) if np.any(sv) else 0.0
    return alpha, bias
