import json

import numpy as np
import pytest

from splatprep.errors import FormatError, ValidationError
from splatprep.io.manifests import (Box2D, CategoryPalette, DetectionBoxSet,
                                    read_boxes, read_cameras, read_palette,
                                    write_boxes, write_cameras, write_palette)
from splatprep.synth import SyntheticSceneSpec, canonical_palette, ring_cameras

from conftest import make_view


def write_camera_json(path, views):
    doc = {"views": [{"K": [float(x) for x in v["K"]],
                      "world_to_camera": [float(x) for x in v["W"]],
                      "width": v.get("width", 640), "height": v.get("height", 480),
                      "z_min": v.get("z_min", 0.2), "z_max": v.get("z_max", 6.0)}
                     for v in views]}
    path.write_text(json.dumps(doc))


IDENTITY_W = list(np.eye(4).ravel())
SIMPLE_K = [500.0, 0, 320, 0, 500, 240, 0, 0, 1]


class TestCameras:
    def test_identity_pose_parses(self, tmp_path):
        write_camera_json(tmp_path / "c.json", [{"K": SIMPLE_K, "W": IDENTITY_W}])
        views = read_cameras(tmp_path / "c.json")
        assert len(views) == 1
        assert views[0].intrinsics[0, 0] == 500.0

    def test_z_range_validation(self, tmp_path):
        write_camera_json(tmp_path / "c.json",
                          [{"K": SIMPLE_K, "W": IDENTITY_W, "z_min": 3.0, "z_max": 1.0}])
        with pytest.raises(ValidationError, match="view 0"):
            read_cameras(tmp_path / "c.json")

    def test_non_orthonormal_rejected(self, tmp_path):
        W = np.eye(4)
        W[0, 1] = 5e-4  # beyond the 1e-4 reader tolerance
        write_camera_json(tmp_path / "c.json", [{"K": SIMPLE_K, "W": list(W.ravel())}])
        with pytest.raises(ValidationError, match="orthonormal"):
            read_cameras(tmp_path / "c.json")

    def test_generator_roundtrip_lossless(self, tmp_path):
        views = ring_cameras(SyntheticSceneSpec(camera_count=100))
        write_cameras(views, tmp_path / "c.json")
        back = read_cameras(tmp_path / "c.json")
        assert len(back) == 100
        for a, b in zip(views, back):
            assert np.array_equal(a.intrinsics, b.intrinsics)
            assert np.array_equal(a.world_to_camera, b.world_to_camera)
            assert (a.width, a.height, a.z_min, a.z_max) == \
                   (b.width, b.height, b.z_min, b.z_max)

    def test_missing_key(self, tmp_path):
        (tmp_path / "c.json").write_text(json.dumps({"views": [{"K": SIMPLE_K}]}))
        with pytest.raises(FormatError, match="view 0"):
            read_cameras(tmp_path / "c.json")

    def test_bad_json_position(self, tmp_path):
        (tmp_path / "c.json").write_text('{"views": [}')
        with pytest.raises(FormatError, match="line 1"):
            read_cameras(tmp_path / "c.json")


class TestPalette:
    def test_roundtrip(self, tmp_path):
        pal = canonical_palette()
        write_palette(pal, tmp_path / "p.json")
        back = read_palette(tmp_path / "p.json")
        assert back.names == pal.names
        assert np.array_equal(back.colors, pal.colors)

    def test_duplicate_color_rejected(self):
        with pytest.raises(ValidationError, match="distinct"):
            CategoryPalette(names=("a", "b"),
                            colors=np.array([[1, 2, 3], [1, 2, 3]], dtype=np.uint8))

    def test_unknown_category_lists_palette(self):
        pal = canonical_palette()
        with pytest.raises(ValidationError, match="chair"):
            pal.id_of("submarine")


class TestBoxes:
    def write_boxes_json(self, path, views_payload):
        path.write_text(json.dumps({"views": views_payload}))

    def test_valid_box(self, tmp_path):
        pal = canonical_palette()
        self.write_boxes_json(tmp_path / "b.json",
                              [{"boxes": [{"box": [10, 10, 20, 20],
                                           "probs": {"chair": 0.9}}]}])
        out = read_boxes(tmp_path / "b.json", pal)
        box = out.views[0][0]
        assert box.p_max == 0.9
        assert box.probs.tolist() == [0.9, 0.0, 0.0, 0.0]

    def test_degenerate_box_rejected(self, tmp_path):
        pal = canonical_palette()
        self.write_boxes_json(tmp_path / "b.json",
                              [{"boxes": [{"box": [10, 10, 10, 20],
                                           "probs": {"chair": 0.9}}]}])
        with pytest.raises(ValidationError, match="degenerate"):
            read_boxes(tmp_path / "b.json", pal)

    def test_unknown_category_rejected(self, tmp_path):
        pal = canonical_palette()
        self.write_boxes_json(tmp_path / "b.json",
                              [{"boxes": [{"box": [1, 1, 2, 2],
                                           "probs": {"spaceship": 1.0}}]}])
        with pytest.raises(ValidationError, match="palette"):
            read_boxes(tmp_path / "b.json", pal)

    def test_clamped_to_image_bounds(self, tmp_path):
        pal = canonical_palette()
        self.write_boxes_json(tmp_path / "b.json",
                              [{"boxes": [{"box": [-5, -5, 700, 500],
                                           "probs": {"chair": 0.5}}]}])
        out = read_boxes(tmp_path / "b.json", pal, views=[make_view()])
        box = out.views[0][0]
        assert (box.x_min, box.y_min, box.x_max, box.y_max) == (0, 0, 640, 480)
        assert out.clamped_count == 1

    def test_view_count_mismatch(self, tmp_path):
        pal = canonical_palette()
        self.write_boxes_json(tmp_path / "b.json", [{"boxes": []}])
        with pytest.raises(ValidationError, match="views"):
            read_boxes(tmp_path / "b.json", pal, views=[make_view(), make_view()])

    def test_roundtrip(self, tmp_path):
        pal = canonical_palette()
        boxes = DetectionBoxSet(views=(
            (Box2D(1.0, 2.0, 30.5, 40.25, np.array([0.1, 0.0, 0.9, 0.0])),),
            (),
        ))
        write_boxes(boxes, pal, tmp_path / "b.json")
        back = read_boxes(tmp_path / "b.json", pal)
        assert len(back.views) == 2 and len(back.views[1]) == 0
        b = back.views[0][0]
        assert (b.x_min, b.y_min, b.x_max, b.y_max) == (1.0, 2.0, 30.5, 40.25)
        assert np.array_equal(b.probs, [0.1, 0.0, 0.9, 0.0])
