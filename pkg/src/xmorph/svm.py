"""Multi-class support vector machine with the RBF kernel.

One-vs-one decomposition; each binary subproblem is solved by simplified
sequential minimal optimization (random second index, seeded) on the dual

    max  sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij
    s.t. 0 <= alpha <= C,  sum_i alpha_i y_i = 0.

Prediction is by pairwise voting; a bounded sum of squashed binary margins
breaks vote ties without ever outweighing a full vote.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DimensionMismatch, NonFiniteFeature, SingleClass

SVM_FORMAT = "xmorph-svm-v1"


@dataclass(frozen=True)
class SvmConfig:
    c: float = 1.0
    gamma: float | str = "scale"  # 1 / (n_features * var(X))
    kkt_tolerance: float = 1e-3
    max_passes: int = 400
    seed: int = 0

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("C must be > 0")
        if self.kkt_tolerance <= 0:
            raise ValueError("tolerance must be > 0")
        if isinstance(self.gamma, str) and self.gamma != "scale":
            raise ValueError("gamma must be a positive float or 'scale'")


@dataclass
class BinaryClassifier:
    """One trained class pair: positive class first, negative second."""

    class_pos: str
    class_neg: str
    sv_x: np.ndarray
    sv_alpha: np.ndarray
    sv_y: np.ndarray  # +1 / -1
    bias: float
    indices: np.ndarray  # positions of this pair's samples in the training set
    alpha_full: np.ndarray  # duals for every pair sample (zeros included)

    def margins(self, k_cols: np.ndarray) -> np.ndarray:
        """Decision values given kernel columns against the support vectors."""
        return k_cols @ (self.sv_alpha * self.sv_y) + self.bias


@dataclass
class SvmModel:
    classes: list[str]
    classifiers: list[BinaryClassifier]
    gamma: float
    config: SvmConfig
    converged: bool = True


def rbf_gram(x: np.ndarray, y: np.ndarray, gamma: float) -> np.ndarray:
    return np.exp(-gamma * cdist(np.atleast_2d(x), np.atleast_2d(y),
                                 metric="sqeuclidean"))


def resolve_gamma(x: np.ndarray, gamma: float | str) -> float:
    if gamma == "scale":
        var = float(x.var())
        return 1.0 / (x.shape[1] * var) if var > 0 else 1.0
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    return float(gamma)


def _smo_binary(k: np.ndarray, y: np.ndarray, c: float, tol: float,
                max_passes: int, rng: np.random.Generator):
    """Simplified SMO on one binary problem; returns (alpha, bias, converged)."""
    n = y.shape[0]
    alpha = np.zeros(n)
    b = 0.0
    f = np.zeros(n)  # f_i = sum_j alpha_j y_j K_ij (bias excluded)

    def try_pair(i: int, j: int, e_i: float) -> bool:
        nonlocal b, f
        if i == j:
            return False
        e_j = f[j] + b - y[j]
        ai_old, aj_old = alpha[i], alpha[j]
        if y[i] != y[j]:
            lo, hi = max(0.0, aj_old - ai_old), min(c, c + aj_old - ai_old)
        else:
            lo, hi = max(0.0, ai_old + aj_old - c), min(c, ai_old + aj_old)
        if lo >= hi:
            return False
        eta = 2.0 * k[i, j] - k[i, i] - k[j, j]
        if eta >= 0:
            return False
        aj = aj_old - y[j] * (e_i - e_j) / eta
        aj = min(hi, max(lo, aj))
        if abs(aj - aj_old) < 1e-12:
            return False
        ai = ai_old + y[i] * y[j] * (aj_old - aj)
        # Snap to the box so bound checks see exact 0 / C.
        if aj < 1e-10:
            aj = 0.0
        elif aj > c - 1e-10:
            aj = c
        if ai < 1e-10:
            ai = 0.0
        elif ai > c - 1e-10:
            ai = c
        alpha[i], alpha[j] = ai, aj
        b1 = b - e_i - y[i] * (ai - ai_old) * k[i, i] - y[j] * (aj - aj_old) * k[i, j]
        b2 = b - e_j - y[i] * (ai - ai_old) * k[i, j] - y[j] * (aj - aj_old) * k[j, j]
        if 0.0 < ai < c:
            b = b1
        elif 0.0 < aj < c:
            b = b2
        else:
            b = 0.5 * (b1 + b2)
        f += y[i] * (ai - ai_old) * k[i] + y[j] * (aj - aj_old) * k[j]
        return True

    converged = False
    for _ in range(max_passes):
        changed = 0
        violations = 0
        for i in range(n):
            e_i = f[i] + b - y[i]
            r = y[i] * e_i
            if not ((r < -tol and alpha[i] < c) or (r > tol and alpha[i] > 0)):
                continue
            violations += 1
            j = int(rng.integers(n - 1))
            if j >= i:
                j += 1
            if try_pair(i, j, e_i):
                changed += 1
                continue
            # Random pick failed; scan deterministically from a random start.
            start = int(rng.integers(n))
            for off in range(n):
                j = (start + off) % n
                if try_pair(i, j, f[i] + b - y[i]):
                    changed += 1
                    break
        if changed == 0:
            converged = violations == 0
            break
    return alpha, b, converged


def train_svm(x: np.ndarray, y, config: SvmConfig = SvmConfig()) -> SvmModel:
    """Fit one-vs-one RBF classifiers; deterministic given the seed.

    Raises SingleClass for < 2 classes and NonFiniteFeature on NaN/Inf input.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray([str(v) for v in y], dtype=object)
    if x.shape[0] != y.shape[0]:
        raise DimensionMismatch("X rows and label count differ")
    if x.shape[0] < 2:
        raise SingleClass("need at least two training samples")
    if not np.all(np.isfinite(x)):
        raise NonFiniteFeature("training features contain NaN/Inf")
    classes = sorted(set(y))
    if len(classes) < 2:
        raise SingleClass(f"need >= 2 classes, got {classes}")

    gamma = resolve_gamma(x, config.gamma)
    gram = rbf_gram(x, x, gamma)

    classifiers = []
    all_converged = True
    for pair_index, (ia, ib) in enumerate(
            (i, j) for i in range(len(classes)) for j in range(i + 1, len(classes))):
        pos, neg = classes[ia], classes[ib]
        mask = (y == pos) | (y == neg)
        idx = np.flatnonzero(mask)
        yy = np.where(y[idx] == pos, 1.0, -1.0)
        sub_k = gram[np.ix_(idx, idx)]
        rng = np.random.default_rng([config.seed & 0xFFFFFFFF, pair_index])
        alpha, bias, converged = _smo_binary(
            sub_k, yy, config.c, config.kkt_tolerance, config.max_passes, rng)
        all_converged &= converged
        sv = alpha > 1e-12
        classifiers.append(BinaryClassifier(
            class_pos=pos, class_neg=neg,
            sv_x=x[idx[sv]], sv_alpha=alpha[sv], sv_y=yy[sv],
            bias=bias, indices=idx, alpha_full=alpha))
    if not all_converged:
        warnings.warn("SMO hit the pass cap before clearing all KKT "
                      "violations; consider raising maxPasses", stacklevel=2)
    return SvmModel(classes=classes, classifiers=classifiers, gamma=gamma,
                    config=config, converged=all_converged)


def decision_scores(model: SvmModel, x: np.ndarray) -> np.ndarray:
    """Per-class scores [n x classes]: pairwise vote counts plus a squashed
    margin tiebreaker small enough never to outvote a full vote.  Rows sum
    to the number of class pairs."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    dim = model.classifiers[0].sv_x.shape[1] if model.classifiers[0].sv_x.size \
        else x.shape[1]
    if x.shape[1] != dim:
        raise DimensionMismatch(
            f"feature dim {x.shape[1]} != training dim {dim}")
    n_pairs = len(model.classifiers)
    class_index = {c: i for i, c in enumerate(model.classes)}
    scores = np.zeros((x.shape[0], len(model.classes)))
    for clf in model.classifiers:
        if clf.sv_x.shape[0]:
            m = clf.margins(rbf_gram(x, clf.sv_x, model.gamma))
        else:
            m = np.full(x.shape[0], clf.bias)
        ia, ib = class_index[clf.class_pos], class_index[clf.class_neg]
        scores[:, ia] += (m >= 0)
        scores[:, ib] += (m < 0)
        squashed = m / (1.0 + np.abs(m))
        scores[:, ia] += squashed / (2.0 * n_pairs)
        scores[:, ib] -= squashed / (2.0 * n_pairs)
    return scores


def predict(model: SvmModel, x: np.ndarray) -> np.ndarray:
    """Predicted labels; score ties resolve to the earlier class in sorted
    class order."""
    scores = decision_scores(model, x)
    return np.array([model.classes[i] for i in scores.argmax(axis=1)],
                    dtype=object)


def save_svm(model: SvmModel, path: str | Path) -> None:
    cfg = {"C": model.config.c,
           "gamma": model.config.gamma if isinstance(model.config.gamma, str)
           else float(model.config.gamma),
           "kktTolerance": model.config.kkt_tolerance,
           "maxPasses": model.config.max_passes, "seed": model.config.seed}
    arrays = {}
    for i, clf in enumerate(model.classifiers):
        arrays[f"svx{i}"] = clf.sv_x
        arrays[f"sva{i}"] = clf.sv_alpha
        arrays[f"svy{i}"] = clf.sv_y
        arrays[f"idx{i}"] = clf.indices
        arrays[f"af{i}"] = clf.alpha_full
        arrays[f"bias{i}"] = np.array(clf.bias)
    np.savez(Path(path), format=np.array(SVM_FORMAT),
             config=np.array(json.dumps(cfg)),
             classes=np.array(model.classes, dtype="U64"),
             pairs=np.array([[c.class_pos, c.class_neg]
                             for c in model.classifiers], dtype="U64"),
             gamma=np.array(model.gamma),
             converged=np.array(model.converged), **arrays)


def load_svm(path: str | Path) -> SvmModel:
    with np.load(Path(path), allow_pickle=False) as blob:
        if str(blob["format"]) != SVM_FORMAT:
            raise DimensionMismatch(f"unsupported model format {blob['format']!r}")
        cfg = json.loads(str(blob["config"]))
        config = SvmConfig(c=cfg["C"], gamma=cfg["gamma"],
                           kkt_tolerance=cfg["kktTolerance"],
                           max_passes=cfg["maxPasses"], seed=cfg["seed"])
        pairs = blob["pairs"]
        classifiers = [
            BinaryClassifier(
                class_pos=str(pairs[i][0]), class_neg=str(pairs[i][1]),
                sv_x=blob[f"svx{i}"], sv_alpha=blob[f"sva{i}"],
                sv_y=blob[f"svy{i}"], bias=float(blob[f"bias{i}"]),
                indices=blob[f"idx{i}"], alpha_full=blob[f"af{i}"])
            for i in range(pairs.shape[0])
        ]
        return SvmModel(classes=[str(c) for c in blob["classes"]],
                        classifiers=classifiers, gamma=float(blob["gamma"]),
                        config=config, converged=bool(blob["converged"]))
