import numpy as np
import pytest

from splatprep.errors import ValidationError
from splatprep.frustum import (ObjectProbabilityField, blob_in_frustum,
                               build_probability_field, frustum_from_box,
                               points_in_frustum)
from splatprep.io.manifests import Box2D, DetectionBoxSet
from splatprep.oracles import hull_contains, hull_face_margin

from conftest import (make_scene, make_view, random_frustum, random_view,
                      sample_near_frustum as sample_near)


class TestFrustumGeometry:
    def test_corners_reproject_to_box(self, rng):
        for _ in range(10):
            view = random_view(rng)
            box, frustum = random_frustum(rng, view)
            u, v, z = view.project_points(frustum.corners)
            expected_u = [box.x_min, box.x_max, box.x_max, box.x_min] * 2
            expected_v = [box.y_min, box.y_min, box.y_max, box.y_max] * 2
            expected_z = [view.z_min] * 4 + [view.z_max] * 4
            assert np.allclose(u, expected_u, atol=1e-9)
            assert np.allclose(v, expected_v, atol=1e-9)
            assert np.allclose(z, expected_z, atol=1e-9)

    def test_p_max_is_top_probability(self):
        box = Box2D(0, 0, 10, 10, np.array([0.3, 0.7, 0.1]))
        f = frustum_from_box(box, make_view())
        assert f.p_max == 0.7

    def test_center_point_inside(self):
        view = make_view()
        box = Box2D(300, 220, 340, 260, np.array([1.0]))
        frustum = frustum_from_box(box, view)
        mid_depth = (view.z_min + view.z_max) / 2
        assert blob_in_frustum((0.0, 0.0, mid_depth), frustum, view)

    def test_depth_out_of_range(self):
        view = make_view()
        box = Box2D(0, 0, 640, 480, np.array([1.0]))
        frustum = frustum_from_box(box, view)
        assert not blob_in_frustum((0.0, 0.0, view.z_max + 0.1), frustum, view)
        assert not blob_in_frustum((0.0, 0.0, -1.0), frustum, view)

    def test_matches_hull_oracle(self, rng):
        total = checked = 0
        for _ in range(6):
            view = random_view(rng)
            _, frustum = random_frustum(rng, view)
            pts = sample_near(rng, frustum, 4000)
            ours = points_in_frustum(pts, frustum, view)
            margin = hull_face_margin(frustum.corners, pts)
            clear = margin > 1e-9
            oracle = hull_contains(frustum.corners, pts)
            assert np.array_equal(ours[clear], oracle[clear])
            total += pts.shape[0]
            checked += int(clear.sum())
        assert checked > 0.9 * total


class TestProbabilityField:
    def one_box_setup(self, p=0.5):
        view = make_view()
        box = Box2D(310, 230, 330, 250, np.array([p]))
        return view, DetectionBoxSet(views=((box,),))

    def test_untouched_blob_gets_p_bg(self):
        scene = make_scene(5, seed=1)
        scene.positions[:] = [[50.0, 50.0, 50.0]] * 5  # far outside
        view, boxes = self.one_box_setup()
        field = build_probability_field(scene, [view], boxes)
        assert np.all(field.values == 0.01)

    def test_max_of_two_frustums(self):
        scene = make_scene(1, seed=2)
        scene.positions[:] = [[0.0, 0.0, 2.0]]
        view = make_view()
        box_a = Box2D(300, 220, 340, 260, np.array([0.7]))
        box_b = Box2D(290, 210, 350, 270, np.array([0.9]))
        boxes = DetectionBoxSet(views=((box_a, box_b),))
        field = build_probability_field(scene, [view], boxes)
        assert field.values[0] == 0.9

    def test_single_frustum_value(self):
        scene = make_scene(1, seed=3)
        scene.positions[:] = [[0.0, 0.0, 2.0]]
        view, boxes = self.one_box_setup(p=0.5)
        field = build_probability_field(scene, [view], boxes)
        assert field.values[0] == 0.5

    def test_view_count_mismatch(self):
        scene = make_scene(3, seed=4)
        view, boxes = self.one_box_setup()
        with pytest.raises(ValidationError, match="views"):
            build_probability_field(scene, [view, view], boxes)

    def test_invalid_p_bg(self):
        scene = make_scene(3, seed=4)
        view, boxes = self.one_box_setup()
        with pytest.raises(ValidationError, match="p_bg"):
            build_probability_field(scene, [view], boxes, p_bg=0.0)

    def test_monotone_in_views_and_floored(self, rng):
        for _ in range(30):
            scene = make_scene(int(rng.integers(5, 40)), seed=int(rng.integers(1e6)),
                               spread=3.0)
            views, box_views = [], []
            for _ in range(int(rng.integers(1, 4))):
                view = random_view(rng)
                views.append(view)
                boxes = tuple(random_frustum(rng, view)[0]
                              for _ in range(int(rng.integers(0, 3))))
                box_views.append(boxes)
            prefix = build_probability_field(
                scene, views[:-1], DetectionBoxSet(views=tuple(box_views[:-1]))) \
                if len(views) > 1 else None
            full = build_probability_field(
                scene, views, DetectionBoxSet(views=tuple(box_views)))
            assert full.values.min() >= 0.01
            if prefix is not None:
                assert np.all(full.values >= prefix.values)

    def test_threads_do_not_change_result(self, rng):
        scene = make_scene(500, seed=9, spread=3.0)
        views, box_views = [], []
        for _ in range(7):
            view = random_view(rng)
            views.append(view)
            box_views.append(tuple(random_frustum(rng, view)[0] for _ in range(3)))
        boxes = DetectionBoxSet(views=tuple(box_views))
        f1 = build_probability_field(scene, views, boxes, threads=1)
        f8 = build_probability_field(scene, views, boxes, threads=8)
        assert np.array_equal(f1.values, f8.values)

    def test_field_invariant_validation(self):
        with pytest.raises(ValidationError):
            ObjectProbabilityField(values=np.array([0.001]), p_bg=0.01)
        with pytest.raises(ValidationError):
            ObjectProbabilityField(values=np.array([1.2]), p_bg=0.01)
