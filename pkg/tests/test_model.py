import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from splatprep.errors import ValidationError
from splatprep.model import (GaussianBlob, GaussianScene, build_covariance,
                             composite, eval_gaussian, normalize_quaternions,
                             project_blob, quaternion_multiply,
                             quaternion_to_matrix)

from conftest import make_scene, make_view

SQ2 = np.sqrt(0.5)


def make_blob(position=(0, 0, 0), scale=(1, 1, 1), rotation=(1, 0, 0, 0),
              color=(1, 1, 1), opacity=0.5):
    return GaussianBlob(position=np.array(position, float),
                        scale=np.array(scale, float),
                        rotation=np.array(rotation, float),
                        color=np.array(color, float), opacity=opacity)


class TestBuildCovariance:
    def test_identity(self):
        assert np.array_equal(build_covariance((1, 1, 1), (1, 0, 0, 0)), np.eye(3))

    def test_diagonal(self):
        out = build_covariance((2, 1, 1), (1, 0, 0, 0))
        assert np.allclose(out, np.diag([4.0, 1.0, 1.0]), atol=1e-12)

    def test_axis_permutation_under_rotation(self):
        # 90 degrees about z swaps the x and y principal axes.
        out = build_covariance((2, 1, 1), (SQ2, 0, 0, SQ2))
        assert np.allclose(out, np.diag([1.0, 4.0, 1.0]), atol=1e-9)

    def test_eigenvalues_are_squared_scales(self, rng):
        for _ in range(20):
            s = rng.uniform(0.1, 3.0, 3)
            q = rng.normal(size=4)
            ev = np.linalg.eigvalsh(build_covariance(s, q))
            assert np.allclose(np.sort(ev), np.sort(s**2), rtol=1e-9)

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValidationError):
            build_covariance((0.0, 1, 1), (1, 0, 0, 0))
        with pytest.raises(ValidationError):
            build_covariance((1, 1, 1), (0, 0, 0, 0))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_rotation_equivariance(self, seed):
        gen = np.random.default_rng(seed)
        s = gen.uniform(0.2, 2.0, 3)
        q1 = normalize_quaternions(gen.normal(size=4))
        q2 = normalize_quaternions(gen.normal(size=4))
        lhs = build_covariance(s, quaternion_multiply(q1, q2))
        R1 = quaternion_to_matrix(q1)
        rhs = R1 @ build_covariance(s, q2) @ R1.T
        assert np.allclose(lhs, rhs, atol=1e-9)

    def test_symmetry_and_psd(self, rng):
        for _ in range(10):
            cov = build_covariance(rng.uniform(0.1, 2, 3), rng.normal(size=4))
            assert np.max(np.abs(cov - cov.T)) <= 1e-12
            assert np.linalg.eigvalsh(cov).min() >= -1e-9


class TestEvalGaussian:
    def test_peak_is_one(self):
        blob = make_blob(position=(1.0, -2.0, 3.0))
        assert eval_gaussian(blob, (1.0, -2.0, 3.0)) == 1.0

    def test_unit_sphere(self):
        blob = make_blob()
        assert eval_gaussian(blob, (1.0, 0.0, 0.0)) == pytest.approx(
            np.exp(-0.5), abs=1e-12)

    def test_mahalanobis_distance_one(self):
        blob = make_blob(scale=(2, 1, 1))
        assert eval_gaussian(blob, (2.0, 0.0, 0.0)) == pytest.approx(
            np.exp(-0.5), abs=1e-12)

    def test_monotone_along_rays(self, rng):
        for _ in range(10):
            blob = make_blob(scale=rng.uniform(0.2, 2, 3),
                             rotation=rng.normal(size=4))
            d = rng.normal(size=3)
            d /= np.linalg.norm(d)
            vals = [eval_gaussian(blob, blob.position + t * d)
                    for t in np.linspace(0, 4, 30)]
            assert np.all(np.diff(vals) <= 1e-15)


class TestProjectBlob:
    def test_principal_point(self):
        blob = make_blob(position=(0, 0, 2), scale=(0.1, 0.1, 0.1))
        proj = project_blob(blob, make_view())
        assert proj is not None
        assert np.allclose(proj.mean2d, [320.0, 240.0], atol=1e-12)
        assert proj.depth == 2.0

    def test_behind_camera(self):
        blob = make_blob(position=(0, 0, -1.0))
        assert project_blob(blob, make_view()) is None

    def test_isotropic_footprint_matches_numerical_jacobian(self):
        # cov2d ~ (f s / z)^2 I for a small isotropic blob on the axis.
        f, s, z = 500.0, 0.01, 2.0
        view = make_view(focal=f)
        blob = make_blob(position=(0, 0, z), scale=(s, s, s))
        proj = project_blob(blob, view, cov_floor=0.0)
        expected = (f * s / z) ** 2
        assert np.allclose(proj.cov2d, expected * np.eye(2), rtol=1e-4)

        def pixel_of(x):
            cam = view.rotation @ x + view.translation
            K = view.intrinsics
            return np.array([
                (K[0, 0] * cam[0] + K[0, 1] * cam[1]) / cam[2] + K[0, 2],
                (K[1, 0] * cam[0] + K[1, 1] * cam[1]) / cam[2] + K[1, 2]])

        h = 1e-5
        J = np.empty((2, 3))
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            J[:, j] = (pixel_of(blob.position + e) - pixel_of(blob.position - e)) / (2 * h)
        cov_fd = J @ build_covariance(blob.scale, blob.rotation) @ J.T
        assert np.allclose(proj.cov2d, cov_fd, rtol=1e-4)

    def test_mean_matches_plain_point_projection(self, rng):
        view = make_view()
        for _ in range(25):
            pos = rng.uniform((-2, -2, 0.5), (2, 2, 6))
            blob = make_blob(position=pos, scale=rng.uniform(0.01, 0.2, 3),
                             rotation=rng.normal(size=4))
            proj = project_blob(blob, view)
            u, v, z = view.project_points(pos.reshape(1, 3))
            assert abs(proj.mean2d[0] - u[0]) <= 1e-9
            assert abs(proj.mean2d[1] - v[0]) <= 1e-9
            assert proj.depth == z[0]

    def test_cov_matches_finite_difference_propagation(self, rng):
        # Small extent/depth ratio keeps the EWA linearization accurate.
        view = make_view()
        for _ in range(15):
            z = rng.uniform(1.5, 5.0)
            pos = np.array([rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), z])
            blob = make_blob(position=pos,
                             scale=rng.uniform(0.005, 0.08 * z, 3),
                             rotation=rng.normal(size=4))
            proj = project_blob(blob, view, cov_floor=0.0)

            def pixel_of(x):
                cam = view.rotation @ x + view.translation
                K = view.intrinsics
                return np.array([
                    (K[0, 0] * cam[0] + K[0, 1] * cam[1]) / cam[2] + K[0, 2],
                    (K[1, 0] * cam[0] + K[1, 1] * cam[1]) / cam[2] + K[1, 2]])

            h = 1e-6
            J = np.empty((2, 3))
            for j in range(3):
                e = np.zeros(3)
                e[j] = h
                J[:, j] = (pixel_of(pos + e) - pixel_of(pos - e)) / (2 * h)
            cov_fd = J @ build_covariance(blob.scale, blob.rotation) @ J.T
            assert np.allclose(proj.cov2d, cov_fd, rtol=1e-3)


class TestComposite:
    def test_single_opaque(self):
        red = np.array([1.0, 0.0, 0.0])
        assert np.array_equal(composite([(1.0, red)]), red)

    def test_two_layers(self):
        out = composite([(0.5, np.ones(3)), (0.5, np.zeros(3))])
        assert np.allclose(out, 0.5)

    def test_three_halves(self):
        out = composite([(0.5, np.ones(3))] * 3)
        assert np.allclose(out, 0.875)

    def test_rejects_bad_opacity(self):
        with pytest.raises(ValidationError):
            composite([(1.5, np.ones(3))])
        with pytest.raises(ValidationError):
            composite([(-0.1, np.ones(3))])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0.0, 1.0), min_size=0, max_size=12))
    def test_weights_subprobability(self, alphas):
        weights = []
        trans = 1.0
        for a in alphas:
            weights.append(a * trans)
            trans *= 1.0 - a
        assert all(w >= 0.0 for w in weights)
        assert sum(weights) <= 1.0 + 1e-12
        if 1.0 in alphas:
            k = alphas.index(1.0)
            assert all(w == 0.0 for w in weights[k + 1:])
        # the compositor agrees with the explicit weights
        colors = [np.full(3, float(i)) for i in range(len(alphas))]
        expected = sum((w * c for w, c in zip(weights, colors)), np.zeros(3))
        assert np.allclose(composite(list(zip(alphas, colors))), expected, atol=1e-12)


class TestSceneAndBlobInvariants:
    def test_blob_rejects_out_of_range(self):
        with pytest.raises(ValidationError):
            make_blob(opacity=0.0)
        with pytest.raises(ValidationError):
            make_blob(opacity=1.0)
        with pytest.raises(ValidationError):
            make_blob(scale=(1, -1, 1))
        with pytest.raises(ValidationError):
            make_blob(color=(1.5, 0, 0))

    def test_blob_normalizes_quaternion(self):
        blob = make_blob(rotation=(2.0, 0.0, 0.0, 0.0))
        assert np.allclose(blob.rotation, [1, 0, 0, 0])

    def test_scene_roundtrip_from_blobs(self):
        blobs = [make_blob(position=(i, 0, 0)) for i in range(3)]
        scene = GaussianScene.from_blobs(blobs)
        assert len(scene) == 3
        assert scene.blob(2).position[0] == 2.0

    def test_scene_rejects_empty(self):
        with pytest.raises(ValidationError):
            GaussianScene.from_blobs([])

    def test_scene_subset_keeps_order(self):
        scene = make_scene(20, seed=3)
        sub = scene.subset([4, 7, 11])
        assert np.array_equal(sub.positions, scene.positions[[4, 7, 11]])

    def test_quaternion_normalization_idempotent(self, rng):
        q = rng.normal(size=(5000, 4)).astype(np.float32)
        q1 = normalize_quaternions(q)
        q2 = normalize_quaternions(q1)
        assert np.array_equal(q1, q2)
        norms = np.sqrt(np.sum(q1.astype(np.float64) ** 2, axis=1))
        assert np.max(np.abs(norms - 1.0)) <= 1e-6
