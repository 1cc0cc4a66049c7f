"""Kernel manifold alignment: project two labeled domains into a shared
latent space.

Three graph Laplacians over the stacked samples encode domain geometry
(block-diagonal k-NN graphs), same-label affinity, and different-label
affinity.  With block-diagonal RBF kernels K = diag(K1, K2), the projection
coefficients are the bottom eigenvectors of

    K (mu * L_geo + (1 - mu) * L_sim) K  alpha = lambda  K L_dis K  alpha,

so that same-label samples from both domains land close together while
different-label samples are pushed apart.  Out-of-sample points project as
z = A_d^T k_d(x) against the fitted domain's anchors.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .eig import solve_generalized_eig
from .errors import (
    DegenerateLabels,
    DimensionMismatch,
    EmptyDomain,
    InsufficientDirectionsWarning,
    NonPositiveBandwidth,
    UnknownDomain,
)

KEMA_FORMAT = "xmorph-kema-v1"
EIGENVALUE_DROP = 1e-9


@dataclass(frozen=True)
class KemaConfig:
    """Alignment hyperparameters.

    ``mu`` trades domain geometry against class similarity; ``latent_dim``
    directions are retained (None picks min(20, samples - classes));
    bandwidths default to each domain's median pairwise distance.
    """

    mu: float = 0.5
    knn_geometry: int = 5
    latent_dim: int | None = None
    eig_regularization: float = 1e-6
    bandwidth1: float | None = None
    bandwidth2: float | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError("mu must lie in [0, 1]")
        if self.knn_geometry < 1:
            raise ValueError("knnGeometry must be >= 1")
        if self.latent_dim is not None and self.latent_dim < 1:
            raise ValueError("latent dim must be >= 1")


@dataclass
class KemaModel:
    """Fitted alignment: per-domain anchors, coefficient blocks, bandwidths."""

    anchors1: np.ndarray
    anchors2: np.ndarray
    coef1: np.ndarray  # [n1 x latent]
    coef2: np.ndarray  # [n2 x latent]
    bandwidth1: float
    bandwidth2: float
    eigenvalues: np.ndarray
    config: KemaConfig
    truncated: bool = False  # fewer valid directions than requested

    @property
    def latent_dim(self) -> int:
        return self.coef1.shape[1]

    def training_latents(self) -> tuple[np.ndarray, np.ndarray]:
        z1 = project_to_latent(self, self.anchors1, domain=1)
        z2 = project_to_latent(self, self.anchors2, domain=2)
        return z1, z2


def rbf_kernel_matrix(x: np.ndarray, y: np.ndarray, bandwidth: float) -> np.ndarray:
    """K_ij = exp(-||x_i - y_j||^2 / (2 sigma^2))."""
    if bandwidth <= 0:
        raise NonPositiveBandwidth(f"bandwidth must be > 0, got {bandwidth}")
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatch(
            f"feature dims differ: {x.shape[1]} vs {y.shape[1]}")
    sq = cdist(x, y, metric="sqeuclidean")
    return np.exp(-sq / (2.0 * bandwidth * bandwidth))


def median_bandwidth(x: np.ndarray) -> float:
    """Median pairwise Euclidean distance; the standard parameter-free rule."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[0] < 2:
        raise NonPositiveBandwidth("need >= 2 samples for the median heuristic")
    med = float(np.median(pdist(x)))
    if med <= 0:
        raise NonPositiveBandwidth(
            "median pairwise distance is zero; supply a bandwidth explicitly")
    return med


def knn_adjacency(x: np.ndarray, k: int) -> np.ndarray:
    """Binary k-NN graph (Euclidean), symmetrized by max so no row is isolated.

    Ties are broken by sample index; k is clipped to n-1.
    """
    n = x.shape[0]
    k = min(k, n - 1)
    w = np.zeros((n, n))
    if k < 1:
        return w
    d = cdist(x, x)
    np.fill_diagonal(d, np.inf)
    nearest = np.argsort(d, axis=1, kind="stable")[:, :k]
    rows = np.repeat(np.arange(n), k)
    w[rows, nearest.ravel()] = 1.0
    return np.maximum(w, w.T)


def _laplacian(w: np.ndarray) -> np.ndarray:
    return np.diag(w.sum(axis=1)) - w


def build_alignment_laplacians(x1: np.ndarray, y1: np.ndarray,
                               x2: np.ndarray, y2: np.ndarray,
                               knn: int = 5,
                               require_dissimilarity: bool = False
                               ) -> dict[str, np.ndarray]:
    """Unnormalized Laplacians L_geo, L_sim, L_dis over the n1+n2 samples.

    Geometry edges live within each domain (binary k-NN); similarity edges
    join equal labels and dissimilarity edges join different labels, both
    across and within domains.  With a single class L_dis is the zero matrix;
    ``require_dissimilarity`` turns that into a DegenerateLabels error (the
    alignment fit needs DIS nonempty).
    """
    x1 = np.atleast_2d(np.asarray(x1, dtype=np.float64))
    x2 = np.atleast_2d(np.asarray(x2, dtype=np.float64))
    y1 = np.asarray(y1, dtype=object)
    y2 = np.asarray(y2, dtype=object)
    if x1.shape[0] == 0 or x2.shape[0] == 0:
        raise EmptyDomain("both domains must contain samples")
    labels = np.concatenate([y1, y2])
    classes, codes = np.unique(labels.astype(str), return_inverse=True)
    if require_dissimilarity and classes.shape[0] < 2:
        raise DegenerateLabels(
            "only one class present; the dissimilarity term is empty")
    for cls in classes:
        if cls not in set(map(str, y1)) or cls not in set(map(str, y2)):
            warnings.warn(
                f"class {cls!r} is missing from one domain; similarity edges "
                "cannot connect the domains for it", stacklevel=2)

    n1, n2 = x1.shape[0], x2.shape[0]
    n = n1 + n2
    w_geo = np.zeros((n, n))
    w_geo[:n1, :n1] = knn_adjacency(x1, knn)
    w_geo[n1:, n1:] = knn_adjacency(x2, knn)

    same = (codes[:, None] == codes[None, :]).astype(np.float64)
    w_sim = same.copy()
    np.fill_diagonal(w_sim, 0.0)
    w_dis = 1.0 - same

    return {
        "L_geo": _laplacian(w_geo),
        "L_sim": _laplacian(w_sim),
        "L_dis": _laplacian(w_dis),
    }


def laplacian_quadratic_form(l: np.ndarray, x: np.ndarray) -> float:
    """x^T L x; equals the weighted sum of squared edge differences."""
    return float(x @ l @ x)


def default_latent_dim(n_samples: int, n_classes: int) -> int:
    return max(1, min(20, n_samples - n_classes))


def fit_kema(x1: np.ndarray, y1: np.ndarray, x2: np.ndarray, y2: np.ndarray,
             config: KemaConfig = KemaConfig()) -> KemaModel:
    """Fit the alignment on two labeled domains.

    Retains the ``latent_dim`` eigenvectors of smallest eigenvalue after
    dropping near-null directions; when fewer remain, keeps all of them and
    flags the model (with an InsufficientDirectionsWarning).
    """
    x1 = np.atleast_2d(np.asarray(x1, dtype=np.float64))
    x2 = np.atleast_2d(np.asarray(x2, dtype=np.float64))
    if x1.shape[0] == 0 or x2.shape[0] == 0:
        raise EmptyDomain("both domains must contain samples")
    n1, n2 = x1.shape[0], x2.shape[0]
    n = n1 + n2

    laps = build_alignment_laplacians(x1, y1, x2, y2, knn=config.knn_geometry,
                                      require_dissimilarity=True)
    sigma1 = config.bandwidth1 if config.bandwidth1 is not None else median_bandwidth(x1)
    sigma2 = config.bandwidth2 if config.bandwidth2 is not None else median_bandwidth(x2)
    kmat = np.zeros((n, n))
    kmat[:n1, :n1] = rbf_kernel_matrix(x1, x1, sigma1)
    kmat[n1:, n1:] = rbf_kernel_matrix(x2, x2, sigma2)

    attract = config.mu * laps["L_geo"] + (1.0 - config.mu) * laps["L_sim"]
    a = kmat @ attract @ kmat
    b = kmat @ laps["L_dis"] @ kmat
    a = 0.5 * (a + a.T)
    b = 0.5 * (b + b.T)
    # Both sandwiched matrices are rank-deficient by construction; a
    # trace-scaled ridge keeps the Cholesky reduction valid.
    eps_a = config.eig_regularization * max(np.trace(a) / n, 1e-300)
    eps_b = config.eig_regularization * max(np.trace(b) / n, 1e-300)
    a += eps_a * np.eye(n)
    b += eps_b * np.eye(n)

    vals, vecs = solve_generalized_eig(a, b, eps=0.0)
    keep = np.isfinite(vals) & (np.abs(vals) >= EIGENVALUE_DROP)
    vals, vecs = vals[keep], vecs[:, keep]

    n_classes = np.unique(np.concatenate([np.asarray(y1, dtype=object),
                                          np.asarray(y2, dtype=object)]).astype(str)).shape[0]
    want = config.latent_dim if config.latent_dim is not None \
        else default_latent_dim(n, n_classes)
    truncated = vals.shape[0] < want
    if truncated:
        warnings.warn(
            f"only {vals.shape[0]} valid eigendirections exist "
            f"(requested {want}); keeping all of them",
            InsufficientDirectionsWarning, stacklevel=2)
    take = min(want, vals.shape[0])
    vals, vecs = vals[:take], vecs[:, :take]

    return KemaModel(
        anchors1=x1, anchors2=x2,
        coef1=vecs[:n1, :], coef2=vecs[n1:, :],
        bandwidth1=sigma1, bandwidth2=sigma2,
        eigenvalues=vals, config=config, truncated=truncated,
    )


def project_to_latent(model: KemaModel, x: np.ndarray, domain: int) -> np.ndarray:
    """Project feature vectors from one domain into the shared latent space."""
    if domain == 1:
        anchors, coef, sigma = model.anchors1, model.coef1, model.bandwidth1
    elif domain == 2:
        anchors, coef, sigma = model.anchors2, model.coef2, model.bandwidth2
    else:
        raise UnknownDomain(f"domain must be 1 or 2, got {domain!r}")
    single = np.asarray(x).ndim == 1
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != anchors.shape[1]:
        raise DimensionMismatch(
            f"feature dim {x.shape[1]} != domain {domain} dim {anchors.shape[1]}")
    z = rbf_kernel_matrix(x, anchors, sigma) @ coef
    return z[0] if single else z


def save_kema(model: KemaModel, path: str | Path) -> None:
    cfg = {
        "mu": model.config.mu, "knnGeometry": model.config.knn_geometry,
        "latentDim": model.config.latent_dim,
        "eigRegularization": model.config.eig_regularization,
        "seed": model.config.seed,
    }
    np.savez(
        Path(path),
        format=np.array(KEMA_FORMAT),
        config=np.array(json.dumps(cfg)),
        anchors1=model.anchors1, anchors2=model.anchors2,
        coef1=model.coef1, coef2=model.coef2,
        bandwidths=np.array([model.bandwidth1, model.bandwidth2]),
        eigenvalues=model.eigenvalues,
        truncated=np.array(model.truncated),
    )


def load_kema(path: str | Path) -> KemaModel:
    with np.load(Path(path), allow_pickle=False) as blob:
        if str(blob["format"]) != KEMA_FORMAT:
            raise DimensionMismatch(
                f"unsupported model format {blob['format']!r}")
        cfg = json.loads(str(blob["config"]))
        config = KemaConfig(
            mu=cfg["mu"], knn_geometry=cfg["knnGeometry"],
            latent_dim=cfg["latentDim"],
            eig_regularization=cfg["eigRegularization"], seed=cfg["seed"],
            bandwidth1=float(blob["bandwidths"][0]),
            bandwidth2=float(blob["bandwidths"][1]),
        )
        return KemaModel(
            anchors1=blob["anchors1"], anchors2=blob["anchors2"],
            coef1=blob["coef1"], coef2=blob["coef2"],
            bandwidth1=float(blob["bandwidths"][0]),
            bandwidth2=float(blob["bandwidths"][1]),
            eigenvalues=blob["eigenvalues"], config=config,
            truncated=bool(blob["truncated"]),
        )
