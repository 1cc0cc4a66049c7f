from __future__ import annotations

import warnings

import numpy as np
import pytest
from scipy.spatial.distance import cdist

from oracles import laplacian_quadratic_oracle
from xmorph.errors import (
    DegenerateLabels,
    DimensionMismatch,
    EmptyDomain,
    InsufficientDirectionsWarning,
    NonPositiveBandwidth,
    UnknownDomain,
)
from xmorph.kema import (
    KemaConfig,
    build_alignment_laplacians,
    fit_kema,
    knn_adjacency,
    load_kema,
    median_bandwidth,
    project_to_latent,
    rbf_kernel_matrix,
    save_kema,
)
from xmorph.synth import make_blob_benchmark


def nn1_cross(train_x, train_y, test_x, test_y) -> float:
    d = cdist(test_x, train_x)
    pred = train_y[d.argmin(axis=1)]
    return float((pred == test_y).mean())


class TestRbfKernel:
    def test_self_diagonal_ones(self, rng):
        x = rng.standard_normal((6, 3))
        for sigma in (0.1, 1.0, 7.5):
            assert np.allclose(np.diag(rbf_kernel_matrix(x, x, sigma)), 1.0)

    def test_distance_sigma_sqrt2_gives_e_minus_1(self):
        sigma = 1.7
        x = np.array([[0.0, 0.0]])
        y = np.array([[sigma * np.sqrt(2.0), 0.0]])
        k = rbf_kernel_matrix(x, y, sigma)
        assert np.allclose(k[0, 0], np.exp(-1.0), rtol=1e-12)

    def test_huge_bandwidth_saturates_at_one(self, rng):
        x = rng.standard_normal((5, 4))
        k = rbf_kernel_matrix(x, x, 1e6)
        assert np.all(np.abs(k - 1.0) < 1e-6)

    def test_bad_inputs(self, rng):
        x = rng.standard_normal((3, 2))
        with pytest.raises(NonPositiveBandwidth):
            rbf_kernel_matrix(x, x, 0.0)
        with pytest.raises(DimensionMismatch):
            rbf_kernel_matrix(x, rng.standard_normal((3, 5)), 1.0)


class TestLaplacians:
    def test_two_sample_cross_pair(self):
        out = build_alignment_laplacians(
            np.array([[0.0]]), np.array(["a"]),
            np.array([[1.0]]), np.array(["a", "b"])[:1], knn=1)
        assert np.array_equal(out["L_sim"], [[1.0, -1.0], [-1.0, 1.0]])

    def test_all_labels_distinct_zero_sim(self):
        x1 = np.array([[0.0], [1.0]])
        x2 = np.array([[2.0], [3.0]])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # classes missing per-domain
            out = build_alignment_laplacians(x1, ["a", "b"], x2, ["c", "d"],
                                             knn=1)
        assert np.array_equal(out["L_sim"], np.zeros((4, 4)))

    def test_quadratic_form_matches_pairwise_oracle(self, rng):
        x1 = rng.standard_normal((4, 3))
        x2 = rng.standard_normal((2, 3))
        y1 = ["a", "b", "a", "b"]
        y2 = ["a", "b"]
        out = build_alignment_laplacians(x1, y1, x2, y2, knn=2)
        labels = np.array(y1 + y2)
        w_dis = (labels[:, None] != labels[None, :]).astype(float)
        v = rng.integers(-5, 5, size=6).astype(float)
        assert laplacian_quadratic_oracle(w_dis, v) == pytest.approx(
            float(v @ out["L_dis"] @ v), abs=1e-12)
        # DIS row sums vanish for balanced construction of L = D - W.
        assert np.allclose(out["L_dis"].sum(axis=1), 0.0)

    def test_properties_all_three(self, rng):
        x1 = rng.standard_normal((6, 2))
        x2 = rng.standard_normal((5, 2))
        y1 = ["a", "a", "b", "b", "c", "c"]
        y2 = ["a", "b", "c", "a", "b"]
        out = build_alignment_laplacians(x1, y1, x2, y2, knn=2)
        for name, lap in out.items():
            assert np.allclose(lap, lap.T), name
            assert np.allclose(lap.sum(axis=1), 0.0), name
            for _ in range(5):
                v = rng.standard_normal(11)
                assert v @ lap @ v >= -1e-10, name

    def test_empty_domain(self):
        with pytest.raises(EmptyDomain):
            build_alignment_laplacians(np.empty((0, 2)), [],
                                       np.ones((2, 2)), ["a", "b"])

    def test_single_class_degenerate(self):
        x = np.array([[0.0], [1.0]])
        out = build_alignment_laplacians(x, ["a", "a"], x, ["a", "a"])
        assert np.array_equal(out["L_dis"], np.zeros((4, 4)))
        with pytest.raises(DegenerateLabels):
            build_alignment_laplacians(x, ["a", "a"], x, ["a", "a"],
                                       require_dissimilarity=True)

    def test_knn_symmetrized_no_isolated_nodes(self, rng):
        x = rng.standard_normal((12, 3))
        w = knn_adjacency(x, 3)
        assert np.array_equal(w, w.T)
        assert np.all(w.sum(axis=1) >= 3)
        assert np.all(np.diag(w) == 0)


class TestFitKema:
    def test_identical_separated_1d_domains(self):
        x = np.array([[-3.0], [-2.9], [3.0], [3.1]])
        y = np.array(["lo", "lo", "hi", "hi"], dtype=object)
        model = fit_kema(x, y, x, y, KemaConfig(latent_dim=2))
        z1 = project_to_latent(model, x, 1)
        z2 = project_to_latent(model, x, 2)
        assert nn1_cross(z1, y, z2, y) == 1.0

    def test_blob_benchmark_alignment(self):
        data = make_blob_benchmark(seed=0)
        pad = np.hstack([data["X1"],
                         np.zeros((data["X1"].shape[0],
                                   data["X2"].shape[1] - data["X1"].shape[1]))])
        before = nn1_cross(pad, data["y1"], data["X2"], data["y2"])
        assert before <= 0.6
        accs = []
        for dz in (2, 5, 10):
            model = fit_kema(data["X1"], data["y1"], data["X2"], data["y2"],
                             KemaConfig(latent_dim=dz))
            z1 = project_to_latent(model, data["X1"], 1)
            z2 = project_to_latent(model, data["X2"], 2)
            accs.append(nn1_cross(z1, data["y1"], z2, data["y2"]))
        assert all(a >= 0.9 for a in accs)
        assert accs[0] <= accs[1] + 1e-12 and accs[1] <= accs[2] + 1e-12

    def test_same_class_closer_than_different_class(self):
        data = make_blob_benchmark(seed=3)
        model = fit_kema(data["X1"], data["y1"], data["X2"], data["y2"],
                         KemaConfig(latent_dim=3))
        z1, z2 = model.training_latents()
        d = cdist(z1, z2)
        same = d[data["y1"][:, None] == data["y2"][None, :]]
        diff = d[data["y1"][:, None] != data["y2"][None, :]]
        assert same.mean() < diff.mean()

    def test_single_class_reports_degenerate(self):
        x = np.arange(8, dtype=float).reshape(4, 2)
        y = np.array(["only"] * 4, dtype=object)
        with pytest.raises(DegenerateLabels):
            fit_kema(x, y, x, y, KemaConfig(mu=1.0, latent_dim=1))

    def test_deterministic(self):
        data = make_blob_benchmark(n_per_domain=20, seed=5)
        cfg = KemaConfig(latent_dim=3)
        m1 = fit_kema(data["X1"], data["y1"], data["X2"], data["y2"], cfg)
        m2 = fit_kema(data["X1"], data["y1"], data["X2"], data["y2"], cfg)
        assert np.array_equal(m1.coef1, m2.coef1)
        assert np.array_equal(m1.coef2, m2.coef2)
        assert np.array_equal(m1.eigenvalues, m2.eigenvalues)

    def test_eigenvalues_sorted_and_cleaned(self):
        data = make_blob_benchmark(n_per_domain=30, seed=6)
        model = fit_kema(data["X1"], data["y1"], data["X2"], data["y2"],
                         KemaConfig(latent_dim=8))
        vals = model.eigenvalues
        assert np.all(np.isfinite(vals))
        assert np.all(np.diff(vals) >= 0)
        assert np.all(np.abs(vals) >= 1e-9)

    def test_insufficient_directions_warns_and_truncates(self):
        x = np.array([[-1.0], [-0.9], [1.0], [1.1]])
        y = np.array(["a", "a", "b", "b"], dtype=object)
        with pytest.warns(InsufficientDirectionsWarning):
            model = fit_kema(x, y, x, y, KemaConfig(latent_dim=50))
        assert model.truncated
        assert model.latent_dim < 50

    def test_downstream_decisions_invariant_to_uniform_scaling(self):
        data = make_blob_benchmark(n_per_domain=24, seed=7)
        model = fit_kema(data["X1"], data["y1"], data["X2"], data["y2"],
                         KemaConfig(latent_dim=3))
        z1, z2 = model.training_latents()
        base = nn1_cross(z1, data["y1"], z2, data["y2"])
        scaled = nn1_cross(5.0 * z1, data["y1"], 5.0 * z2, data["y2"])
        assert base == scaled


class TestProjection:
    def test_anchor_projection_kernel_self_similarity(self):
        data = make_blob_benchmark(n_per_domain=12, seed=8)
        model = fit_kema(data["X1"], data["y1"], data["X2"], data["y2"],
                         KemaConfig(latent_dim=2))
        j = 4
        k = rbf_kernel_matrix(data["X1"][j:j + 1], model.anchors1,
                              model.bandwidth1)[0]
        assert k[j] == pytest.approx(1.0)
        z = project_to_latent(model, data["X1"][j], 1)
        assert np.allclose(z, model.coef1.T @ k)

    def test_output_length_is_latent_dim(self):
        data = make_blob_benchmark(n_per_domain=12, seed=9)
        model = fit_kema(data["X1"], data["y1"], data["X2"], data["y2"],
                         KemaConfig(latent_dim=2))
        assert project_to_latent(model, data["X1"][0], 1).shape == (2,)
        assert project_to_latent(model, data["X2"][:5], 2).shape == (5, 2)

    def test_bad_domain_and_dim(self):
        data = make_blob_benchmark(n_per_domain=10, seed=10)
        model = fit_kema(data["X1"], data["y1"], data["X2"], data["y2"],
                         KemaConfig(latent_dim=2))
        with pytest.raises(UnknownDomain):
            project_to_latent(model, data["X1"][0], 3)
        with pytest.raises(DimensionMismatch):
            project_to_latent(model, data["X2"][0], 1)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        data = make_blob_benchmark(n_per_domain=16, seed=11)
        model = fit_kema(data["X1"], data["y1"], data["X2"], data["y2"],
                         KemaConfig(latent_dim=3))
        path = tmp_path / "kema_model.npz"
        save_kema(model, path)
        back = load_kema(path)
        assert np.array_equal(back.coef1, model.coef1)
        assert np.array_equal(back.coef2, model.coef2)
        assert np.array_equal(back.anchors1, model.anchors1)
        # Values round-trip exactly; projection may differ in final bits from
        # array-alignment-dependent BLAS summation.
        x = data["X2"][:4]
        assert np.allclose(project_to_latent(back, x, 2),
                           project_to_latent(model, x, 2),
                           rtol=1e-12, atol=1e-12)


class TestMedianBandwidth:
    def test_positive_and_scale(self):
        x = np.array([[0.0], [1.0], [2.0]])
        assert median_bandwidth(x) == pytest.approx(1.0)

    def test_degenerate_rejected(self):
        with pytest.raises(NonPositiveBandwidth):
            median_bandwidth(np.zeros((4, 2)))
